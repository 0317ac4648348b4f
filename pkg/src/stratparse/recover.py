"""Rebuild symbolic trees from per-layer labels and combine signals.

This is the non-neural half of parsing: starting from POS-tagged word
leaves, adjacent subtrees are combined layer by layer wherever the signals
say so, then placeholder nodes are dissolved and '+'-collapsed labels are
expanded.  Replaying gold signals reproduces the normalized gold tree
exactly; model-predicted signals are repaired (edge clamping, forced chunk
endpoints) rather than rejected, with every repair counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .binarize import POS_PREFIX, SUB_PREFIX, is_sub_label
from .trees import SyntaxTree, TreeError

VALID = "valid"
FOREST = "forest"
CLAMPED = "clamped-edges"
STALLED = "stalled"


@dataclass
class ParseOutcome:
    """Recovered tree(s) plus the per-layer signals that produced them."""

    trees: list
    validity: str
    words: list
    tags: list
    labels: list
    signals: list
    mode: str
    clamp_count: int = 0
    repair_count: int = 0
    attention: list = field(default_factory=list)

    @property
    def tree(self):
        if len(self.trees) != 1:
            raise TreeError(f"outcome holds {len(self.trees)} trees")
        return self.trees[0]

    @property
    def is_single_tree(self):
        return len(self.trees) == 1


def binary_groups(orientations):
    """Partition layer positions by the adjacent-pair emission rule.

    Expects a clamped vector (first value 1, last value 0).  Each pair of
    adjacent positions (L, R) emits a group: a combine [L, R] when L points
    right and R points left, a relay of L when both point right, a relay of
    R when both point left, and nothing when they point apart.
    """
    if len(orientations) == 1:
        return [[0]]
    groups = []
    for i in range(1, len(orientations)):
        left, right = orientations[i - 1], orientations[i]
        if left == 1 and right == 0:
            groups.append([i - 1, i])
        elif left == 1 and right == 1:
            groups.append([i - 1])
        elif left == 0 and right == 0:
            groups.append([i])
    return groups


def chunk_groups(boundaries):
    """Maximal runs between 1-marked boundaries; expects forced endpoints."""
    marks = [i for i, b in enumerate(boundaries) if b == 1]
    return [list(range(lo, hi)) for lo, hi in zip(marks, marks[1:])]


def recover_tree(words, tags, labels, orientations=None, chunks=None):
    """Assemble a ParseOutcome from per-layer labels and signals.

    Binary mode consumes ``orientations`` (one vector per combining layer),
    multi mode consumes ``chunks``.  Edge orientations pointing off the
    sentence are clamped and counted; chunk endpoint marks are forced on.
    A multi layer that fails to shrink stops the loop and the surviving
    subtrees are returned as a stalled forest.
    """
    if (orientations is None) == (chunks is None):
        raise TreeError("exactly one of orientations/chunks must be given")
    mode = "binary" if orientations is not None else "multi"
    signals = orientations if orientations is not None else chunks
    n = len(words)
    if len(tags) != n or not labels or len(labels[0]) != n:
        raise TreeError("words, tags, and layer-0 labels disagree in length")

    current = [SyntaxTree(tag, [], word) for word, tag in zip(words, tags)]
    for i, label in enumerate(labels[0]):
        if not is_sub_label(label):
            current[i] = SyntaxTree(label, [current[i]])

    clamp_count = 0
    stalled = False
    applied_signals = []
    for j, signal in enumerate(signals):
        if len(current) == 1:
            break
        signal = list(signal)
        if mode == "binary":
            if len(signal) != len(current):
                raise TreeError(f"layer {j}: {len(signal)} orientations for "
                                f"{len(current)} nodes")
            if signal[0] != 1:
                signal[0] = 1
                clamp_count += 1
            if signal[-1] != 0:
                signal[-1] = 0
                clamp_count += 1
            groups = binary_groups(signal)
        else:
            if len(signal) != len(current) + 1:
                raise TreeError(f"layer {j}: chunk vector length {len(signal)} "
                                f"for {len(current)} nodes")
            if signal[0] != 1:
                signal[0] = 1
                clamp_count += 1
            if signal[-1] != 1:
                signal[-1] = 1
                clamp_count += 1
            groups = chunk_groups(signal)
        applied_signals.append(signal)
        if len(groups) >= len(current):
            stalled = True
            break
        if j + 1 >= len(labels) or len(labels[j + 1]) != len(groups):
            raise TreeError(f"layer {j + 1}: {len(groups)} groups but "
                            f"{len(labels[j + 1]) if j + 1 < len(labels) else 0} labels")
        nxt = []
        for pos, members in enumerate(groups):
            if len(members) == 1:
                nxt.append(current[members[0]])
            else:
                nxt.append(SyntaxTree(labels[j + 1][pos],
                                      [current[m] for m in members]))
        current = nxt

    repairs = [0]
    trees = [_finalize(root, repairs) for root in current]
    if stalled:
        validity = STALLED
    elif len(trees) > 1:
        validity = FOREST
    elif clamp_count > 0:
        validity = CLAMPED
    else:
        validity = VALID
    return ParseOutcome(trees=trees, validity=validity, words=list(words),
                        tags=list(tags), labels=labels, signals=applied_signals,
                        mode=mode, clamp_count=clamp_count,
                        repair_count=repairs[0])


def _finalize(root, repairs):
    parts = _finalize_children(root, repairs, is_root=True)
    assert len(parts) == 1
    return parts[0]


def _finalize_children(node, repairs, is_root=False):
    if node.is_leaf():
        return [SyntaxTree(node.label, [], node.word)]
    children = []
    for child in node.children:
        children.extend(_finalize_children(child, repairs))
    label = node.label
    if is_sub_label(label):
        if not is_root:
            return children  # dissolve the placeholder into its parent
        label = label.lstrip(SUB_PREFIX + POS_PREFIX) or label
        repairs[0] += 1
    return [_expand_joined(label, children)]


def _expand_joined(label, children):
    parts = [p for p in label.split("+") if p] or [label]
    node = SyntaxTree(parts[-1], children)
    for part in reversed(parts[:-1]):
        node = SyntaxTree(part, [node])
    return node


@dataclass
class ValidityReport:
    validity: str
    tree_count: int
    clamp_count: int
    repair_count: int

    def row(self):
        return (f"{self.validity}\ttrees={self.tree_count}"
                f"\tclamps={self.clamp_count}\trepairs={self.repair_count}")


def validate(outcome):
    """Summarize an outcome's validity and guard activations."""
    return ValidityReport(outcome.validity, len(outcome.trees),
                          outcome.clamp_count, outcome.repair_count)
