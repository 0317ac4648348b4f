"""Bracketed constituency trees: reading, writing, normalization, corpus splits.

Trees follow the usual S-expression treebank convention: internal nodes are
``(LABEL child child ...)`` and leaves are ``(POS word)``.  All transformations
in this package preserve the left-to-right sequence of leaf words.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TRACE_TAGS = frozenset({"-NONE-"})


class TreeError(ValueError):
    pass


class BracketParseError(TreeError):
    """Malformed bracketed input; ``offset`` is the character position."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ConfigError(ValueError):
    pass


@dataclass(eq=True)
class SyntaxTree:
    """An n-ary labeled tree.  Leaves carry a word and no children."""

    label: str
    children: list["SyntaxTree"] = field(default_factory=list)
    word: str | None = None

    def is_leaf(self):
        return self.word is not None

    def leaves(self):
        if self.is_leaf():
            return [self]
        out = []
        stack = [self]
        while stack:
            node = stack.pop()
            if node.is_leaf():
                out.append(node)
            else:
                stack.extend(reversed(node.children))
        return out

    def words(self):
        return [leaf.word for leaf in self.leaves()]

    def tags(self):
        return [leaf.label for leaf in self.leaves()]

    def __repr__(self):
        return f"SyntaxTree({render_brackets(self)!r})"


def parse_brackets(text):
    """Parse bracketed treebank text into a list of trees.

    A top-level wrapper node with an empty label (the ``( (S ...))`` style)
    is stripped when it has a single child.  Raises BracketParseError with a
    character offset on unbalanced or malformed input.
    """
    trees = []
    stack = []  # (label, children) frames
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch == "(":
            i += 1
            while i < n and text[i].isspace():
                i += 1
            j = i
            while j < n and text[j] not in "() \t\r\n":
                j += 1
            stack.append([text[i:j], []])
            i = j
        elif ch == ")":
            if not stack:
                raise BracketParseError("unbalanced ')'", i)
            label, parts = stack.pop()
            words = [p for p in parts if isinstance(p, str)]
            subtrees = [p for p in parts if isinstance(p, SyntaxTree)]
            if words and subtrees:
                raise BracketParseError("mixed word and subtree children", i)
            if len(words) > 1:
                raise BracketParseError("leaf with multiple words", i)
            if words:
                node = SyntaxTree(label, [], words[0])
            elif subtrees:
                node = SyntaxTree(label, subtrees)
            else:
                raise BracketParseError("empty node", i)
            if stack:
                stack[-1][1].append(node)
            else:
                if node.label == "" and len(node.children) == 1:
                    node = node.children[0]
                trees.append(node)
            i += 1
        else:
            j = i
            while j < n and text[j] not in "() \t\r\n":
                j += 1
            if not stack:
                raise BracketParseError("token outside brackets", i)
            stack[-1][1].append(text[i:j])
            i = j
    if stack:
        raise BracketParseError("unbalanced '('", n)
    return trees


def render_brackets(tree):
    """Render a tree as a single-line bracketed string (inverse of parsing)."""
    out = []
    _render(tree, out)
    return "".join(out)


def _render(node, out):
    if node.is_leaf():
        out.append(f"({node.label} {node.word})")
        return
    out.append("(")
    out.append(node.label)
    for child in node.children:
        out.append(" ")
        _render(child, out)
    out.append(")")


def read_treebank(path):
    with open(path, encoding="utf-8") as handle:
        return parse_brackets(handle.read())


def write_treebank(trees, path):
    with open(path, "w", encoding="utf-8") as handle:
        for tree in trees:
            handle.write(render_brackets(tree))
            handle.write("\n")


def strip_functional_tag(label):
    """Drop functional annotations: everything from the first '-' or '='.

    Labels that *start* with '-' (e.g. -LRB- used as a constituent label)
    are left alone.
    """
    for mark in ("-", "="):
        pos = label.find(mark)
        if pos > 0:
            label = label[:pos]
    return label


def preprocess(tree, strip_functional=True, trace_tags=DEFAULT_TRACE_TAGS,
               collapse_unary=True):
    """Normalize a raw treebank tree for stratification.

    In order: trace subtrees (leaves whose POS is in ``trace_tags``) are
    removed together with any internal node emptied by the removal;
    functional annotations are stripped from constituent labels (POS tags
    untouched); unary chains of internal nodes are collapsed into a single
    node whose label joins the chain with '+'.

    Returns the normalized tree, or None when trace removal consumed the
    whole sentence (the caller drops and counts such sentences).
    """
    tree = _remove_traces(tree, trace_tags)
    if tree is None:
        return None
    if strip_functional:
        tree = _strip_tags(tree)
    if collapse_unary:
        tree = _collapse_unary(tree)
    return tree


def preprocess_corpus(trees, **kwargs):
    """Preprocess a corpus; returns (kept_trees, dropped_count)."""
    kept, dropped = [], 0
    for tree in trees:
        out = preprocess(tree, **kwargs)
        if out is None:
            dropped += 1
        else:
            kept.append(out)
    return kept, dropped


def _remove_traces(node, trace_tags):
    if node.is_leaf():
        return None if node.label in trace_tags else SyntaxTree(node.label, [], node.word)
    children = [c for c in (_remove_traces(ch, trace_tags) for ch in node.children)
                if c is not None]
    if not children:
        return None
    return SyntaxTree(node.label, children)


def _strip_tags(node):
    if node.is_leaf():
        return node
    return SyntaxTree(strip_functional_tag(node.label),
                      [_strip_tags(c) for c in node.children])


def _collapse_unary(node):
    if node.is_leaf():
        return node
    labels = [node.label]
    while len(node.children) == 1 and not node.children[0].is_leaf():
        node = node.children[0]
        labels.append(node.label)
    return SyntaxTree("+".join(labels), [_collapse_unary(c) for c in node.children])


# ---------------------------------------------------------------------------
# Corpus splits
# ---------------------------------------------------------------------------

@dataclass
class RandomSplit:
    """Seeded random partition holding out ``dev`` and ``test`` items."""

    dev: int
    test: int
    seed: int = 0


@dataclass
class SectionSplit:
    """Partition by section id, e.g. train='2-21', dev='22', test='23'."""

    train: str
    dev: str
    test: str


def parse_ranges(spec):
    """'2-5,8' -> {2, 3, 4, 5, 8}."""
    out = set()
    for part in str(spec).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.update(range(int(lo), int(hi) + 1))
        else:
            out.add(int(part))
    return out


def split_corpus(trees, split, sections=None):
    """Partition ``trees`` into (train, dev, test).

    With a SectionSplit, ``sections`` gives the section id of each tree
    (e.g. derived from source filenames).  Overlapping selectors raise
    ConfigError.  RandomSplit partitions reproducibly from its seed.
    """
    if isinstance(split, RandomSplit):
        if split.dev + split.test > len(trees):
            raise ConfigError("dev+test exceeds corpus size")
        order = np.random.default_rng(split.seed).permutation(len(trees))
        dev_idx = set(order[:split.dev].tolist())
        test_idx = set(order[split.dev:split.dev + split.test].tolist())
        train = [t for i, t in enumerate(trees) if i not in dev_idx and i not in test_idx]
        dev = [trees[i] for i in sorted(dev_idx)]
        test = [trees[i] for i in sorted(test_idx)]
        return train, dev, test
    if isinstance(split, SectionSplit):
        if sections is None or len(sections) != len(trees):
            raise ConfigError("section split needs one section id per tree")
        sels = [parse_ranges(split.train), parse_ranges(split.dev), parse_ranges(split.test)]
        for a in range(3):
            for b in range(a + 1, 3):
                if sels[a] & sels[b]:
                    raise ConfigError(f"overlapping section selectors: {sorted(sels[a] & sels[b])}")
        buckets = ([], [], [])
        for tree, sec in zip(trees, sections):
            for which, sel in enumerate(sels):
                if sec in sel:
                    buckets[which].append(tree)
                    break
        return buckets
    raise ConfigError(f"unknown split type: {type(split).__name__}")
