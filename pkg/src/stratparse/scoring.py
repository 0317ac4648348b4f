"""Labeled bracket scoring, headedness tables, early stopping, throughput.

Scoring follows the usual constituency-evaluation conventions: labeled
spans are matched as multisets, single-word POS nodes are not brackets,
and terminals whose gold POS is in the punctuation set are deleted before
spans are computed (shifting the indices of everything after them).
"""

from __future__ import annotations

import time
from collections import Counter, defaultdict
from dataclasses import dataclass

from .recover import ParseOutcome
from .trees import SyntaxTree

DEFAULT_PUNCT_TAGS = frozenset({"``", "''", ".", ",", ":", "PU", "-NONE-"})


class ScoringError(ValueError):
    pass


def _as_trees(pred):
    if isinstance(pred, ParseOutcome):
        return pred.trees
    if isinstance(pred, SyntaxTree):
        return [pred]
    return list(pred)


def keep_mask(tags, punct_tags):
    return [tag not in punct_tags for tag in tags]


def bracket_multiset(trees, mask):
    """Labeled (label, start, end) spans over kept leaf positions.

    ``trees`` may be a forest covering the sentence left to right; spans
    use global filtered indices.  Nodes spanning only deleted terminals
    contribute no bracket; leaves (POS nodes) are never brackets.
    """
    brackets = Counter()
    cursor = [0]   # raw leaf position across the forest
    filtered = [0]

    def walk(node):
        if node.is_leaf():
            kept = mask[cursor[0]]
            cursor[0] += 1
            if kept:
                filtered[0] += 1
                return filtered[0] - 1, filtered[0]
            return None
        lo, hi = None, None
        for child in node.children:
            span = walk(child)
            if span is not None:
                lo = span[0] if lo is None else lo
                hi = span[1]
        if lo is None:
            return None
        brackets[(node.label, lo, hi)] += 1
        return lo, hi

    for tree in _as_trees(trees):
        walk(tree)
    return brackets


@dataclass
class SentenceScore:
    match: int
    gold: int
    pred: int
    tag_correct: int
    tag_total: int

    @property
    def lp(self):
        return 100.0 * self.match / self.pred if self.pred else 100.0

    @property
    def lr(self):
        return 100.0 * self.match / self.gold if self.gold else 100.0

    @property
    def f1(self):
        return f1_from_counts(self.match, self.pred, self.gold)

    @property
    def tag_accuracy(self):
        return 100.0 * self.tag_correct / self.tag_total if self.tag_total else 100.0

    def add(self, other):
        return SentenceScore(self.match + other.match, self.gold + other.gold,
                             self.pred + other.pred,
                             self.tag_correct + other.tag_correct,
                             self.tag_total + other.tag_total)


def f1_from_counts(match, pred, gold):
    if pred == 0 and gold == 0:
        return 100.0
    if match == 0:
        return 0.0
    precision = match / pred
    recall = match / gold
    return 100.0 * 2.0 * precision * recall / (precision + recall)


def score_counts(gold, pred, punct_tags=DEFAULT_PUNCT_TAGS):
    """Bracket and tag agreement counts for one sentence pair."""
    gold_trees = _as_trees(gold)
    pred_trees = _as_trees(pred)
    gold_words = [w for t in gold_trees for w in t.words()]
    pred_words = [w for t in pred_trees for w in t.words()]
    if gold_words != pred_words:
        raise ScoringError(f"yield mismatch: {gold_words} vs {pred_words}")
    gold_tags = [tag for t in gold_trees for tag in t.tags()]
    pred_tags = [tag for t in pred_trees for tag in t.tags()]
    mask = keep_mask(gold_tags, punct_tags)
    gold_brackets = bracket_multiset(gold_trees, mask)
    pred_brackets = bracket_multiset(pred_trees, mask)
    match = sum(min(count, gold_brackets[key])
                for key, count in pred_brackets.items())
    tag_correct = sum(g == p for g, p in zip(gold_tags, pred_tags))
    return SentenceScore(match, sum(gold_brackets.values()),
                         sum(pred_brackets.values()), tag_correct, len(gold_tags))


def score(gold, pred, punct_tags=DEFAULT_PUNCT_TAGS):
    """(LP, LR, F1, tag accuracy) percentages for one sentence pair."""
    counts = score_counts(gold, pred, punct_tags)
    return counts.lp, counts.lr, counts.f1, counts.tag_accuracy


def corpus_score(golds, preds, punct_tags=DEFAULT_PUNCT_TAGS):
    """Micro-averaged corpus counts (sums before dividing)."""
    golds, preds = list(golds), list(preds)
    if len(golds) != len(preds):
        raise ScoringError(f"corpus size mismatch: {len(golds)} vs {len(preds)}")
    total = SentenceScore(0, 0, 0, 0, 0)
    for gold, pred in zip(golds, preds):
        total = total.add(score_counts(gold, pred, punct_tags))
    return total


# ---------------------------------------------------------------------------
# Headedness
# ---------------------------------------------------------------------------

def head_choices(outcome):
    """(parent, head-child-category) per composed constituent, reading the
    head as the child with maximum attention mass (ties go leftmost)."""
    pairs = []
    for record in outcome.attention:
        weights = record["weights"]
        best = max(range(len(weights)), key=lambda i: (weights[i], -i))
        pairs.append((record["parent"], record["children"][best]))
    return pairs


def headedness_report(outcomes):
    """Rows (parent, head-child, count) sorted by parent frequency."""
    table = defaultdict(Counter)
    for outcome in outcomes:
        for parent, head in head_choices(outcome):
            table[parent][head] += 1
    rows = []
    for parent in sorted(table, key=lambda p: -sum(table[p].values())):
        for head, count in table[parent].most_common():
            rows.append((parent, head, count))
    return rows


# ---------------------------------------------------------------------------
# Early stopping and throughput
# ---------------------------------------------------------------------------

def early_stopping(history, patience):
    """True when the last ``patience`` evaluations failed to beat the best.

    Improvement is strict; the first evaluation establishes the baseline.
    """
    if patience < 1:
        raise ValueError("patience must be >= 1")
    best = None
    stalled = 0
    for value in history:
        if best is None or value > best:
            best = value
            stalled = 0
        else:
            stalled += 1
    return stalled >= patience


@dataclass
class ThroughputReport:
    sentences: int
    sents_per_sec: float
    repetitions: list
    node_total: int
    triangular_total: int

    def row(self):
        return (f"sentences={self.sentences}\tsents_per_sec={self.sents_per_sec:.1f}"
                f"\tnodes={self.node_total}\ttriangular={self.triangular_total}")


def throughput(model, sentences, repetitions=3):
    """Median sentences/second over >= 3 timed repetitions, with the
    stratified and triangular node totals for the same corpus."""
    if repetitions < 3:
        raise ValueError("need at least 3 repetitions")
    outcomes = [model.parse(words) for words in sentences]  # warm-up pass
    elapsed = []
    for _ in range(repetitions):
        start = time.perf_counter()
        for words in sentences:
            model.parse(words)
        elapsed.append(time.perf_counter() - start)
    elapsed.sort()
    median = elapsed[len(elapsed) // 2]
    nodes = sum(sum(len(layer) for layer in out.labels) for out in outcomes)
    triangular = sum(len(w) * (len(w) + 1) // 2 for w in sentences)
    return ThroughputReport(len(sentences), len(sentences) / median,
                            elapsed, nodes, triangular)
