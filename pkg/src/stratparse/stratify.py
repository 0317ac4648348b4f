"""Tree stratification: rewrite trees into bottom-up layers of labels plus
combine signals (binary orientations or multi-branching chunk boundaries).

Layer 0 holds one node per word.  A node appears in consecutive layers,
relaying until its sibling (binary) or all its co-children (multi) are
complete, at which point the group merges into the parent node one layer up.
Valid gold layers shrink strictly until a single root node remains.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .binarize import POS_PREFIX, sub_label
from .trees import TreeError

#: orientation values, named by pointing direction: a left child points right
#: (combines rightward) and is encoded 1; a right child points left, encoded 0.
ORIENT_RIGHT = 1
ORIENT_LEFT = 0


@dataclass
class StratifiedSample:
    """Words, POS tags, and per-layer labels plus combine signals.

    ``labels[j]`` has one entry per node of layer j, for j = 0..k where
    layer k is the single root.  In binary mode ``orientations[j]`` has one
    value per layer-j node; in multi mode ``chunks[j]`` has length
    ``len(labels[j]) + 1`` with both ends 1.
    """

    words: list
    tags: list
    labels: list
    orientations: list | None = None
    chunks: list | None = None

    @property
    def mode(self):
        return "binary" if self.orientations is not None else "multi"

    @property
    def signals(self):
        return self.orientations if self.orientations is not None else self.chunks

    @property
    def layer_lengths(self):
        return [len(layer) for layer in self.labels]

    @property
    def node_count(self):
        return sum(len(layer) for layer in self.labels)

    def to_json(self):
        record = {"words": self.words, "tags": self.tags, "labels": self.labels}
        if self.orientations is not None:
            record["orientations"] = self.orientations
        else:
            record["chunks"] = self.chunks
        return json.dumps(record)

    @classmethod
    def from_json(cls, line):
        record = json.loads(line)
        return cls(record["words"], record["tags"], record["labels"],
                   record.get("orientations"), record.get("chunks"))


class _WorkNode:
    """Internal tree node annotated for the frontier walk."""

    __slots__ = ("label", "children", "parent", "child_index", "word", "tag")

    def __init__(self, label, children=(), word=None, tag=None):
        self.label = label
        self.children = list(children)
        self.parent = None
        self.child_index = 0
        self.word = word
        self.tag = tag
        for i, child in enumerate(self.children):
            child.parent = self
            child.child_index = i


def _build_work_tree(tree, binary):
    """Fold (POS word) leaves and single-word constituents into layer-0 units."""
    if tree.is_leaf():
        return _WorkNode(POS_PREFIX + tree.label, word=tree.word, tag=tree.label)
    if len(tree.children) == 1:
        child = tree.children[0]
        if child.is_leaf():
            return _WorkNode(tree.label, word=child.word, tag=child.label)
        raise TreeError(f"unary internal node {tree.label!r}; collapse unaries first")
    children = [_build_work_tree(c, binary) for c in tree.children]
    if binary and len(children) != 2:
        raise TreeError(f"node {tree.label!r} has {len(children)} children; binarize first")
    return _WorkNode(tree.label, children)


def _relay_label(node, scheme):
    if scheme == "parent":
        return sub_label(node.parent.label)
    if scheme == "self":
        return node.label
    raise TreeError(f"unknown relay label scheme: {scheme!r}")


def stratify_binary(btree, relay_labels="parent"):
    """Stratify a strictly binary tree into orientation-mode layers.

    Gold orientation of every non-root node is 1 when it is a left child
    (pointing right) and 0 when a right child, at every layer it occupies.
    Relayed nodes are labeled '_' + parent base label under the default
    scheme, or repeat their own label with ``relay_labels='self'``.
    """
    root = _build_work_tree(btree, binary=True)
    frontier = _collect_units(root)
    labels = [[node.label for node in frontier]]
    orientations = []
    while len(frontier) > 1:
        orientations.append([_orientation(node) for node in frontier])
        merged, layer_labels = _advance_binary(frontier, relay_labels)
        if len(merged) >= len(frontier):
            raise TreeError("layer failed to shrink; input is not a valid binary tree")
        labels.append(layer_labels)
        frontier = merged
    words = [u.word for u in _collect_units(root)]
    tags = [u.tag for u in _collect_units(root)]
    return StratifiedSample(words, tags, labels, orientations=orientations)


def stratify_multi(tree, relay_labels="parent"):
    """Stratify an n-ary tree into chunk-mode layers.

    ``chunks[j][i]`` marks a constituent boundary between layer-j nodes
    i-1 and i (both ends always 1); a maximal 0-run groups the children of
    one parent, which merges at the next layer.  Singleton chunks relay.
    """
    root = _build_work_tree(tree, binary=False)
    frontier = _collect_units(root)
    labels = [[node.label for node in frontier]]
    chunks = []
    while len(frontier) > 1:
        groups = _multi_groups(frontier)
        chunks.append(_boundary_vector(groups, len(frontier)))
        merged, layer_labels = _advance_groups(frontier, groups, relay_labels)
        if len(merged) >= len(frontier):
            raise TreeError("layer failed to shrink; input is not a valid tree")
        labels.append(layer_labels)
        frontier = merged
    words = [u.word for u in _collect_units(root)]
    tags = [u.tag for u in _collect_units(root)]
    return StratifiedSample(words, tags, labels, chunks=chunks)


def _collect_units(root):
    if not root.children:
        return [root]
    units = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node.children:
            stack.extend(reversed(node.children))
        else:
            units.append(node)
    return units


def _orientation(node):
    return ORIENT_RIGHT if node.child_index == 0 else ORIENT_LEFT


def _advance_binary(frontier, relay_labels):
    merged, layer_labels = [], []
    i = 0
    while i < len(frontier):
        node = frontier[i]
        if (i + 1 < len(frontier) and frontier[i + 1].parent is node.parent
                and node.child_index == 0):
            merged.append(node.parent)
            layer_labels.append(node.parent.label)
            i += 2
        else:
            merged.append(node)
            layer_labels.append(_relay_label(node, relay_labels))
            i += 1
    return merged, layer_labels


def _multi_groups(frontier):
    """Group adjacent complete siblings; a group merges only when it covers
    every child of the shared parent."""
    groups = []
    i = 0
    while i < len(frontier):
        parent = frontier[i].parent
        j = i
        while j < len(frontier) and frontier[j].parent is parent:
            j += 1
        if j - i == len(parent.children):
            groups.append(list(range(i, j)))
            i = j
        else:
            # incomplete family: every member relays on its own
            for pos in range(i, j):
                groups.append([pos])
            i = j
    return groups


def _boundary_vector(groups, n):
    group_id = [0] * n
    for gid, members in enumerate(groups):
        for pos in members:
            group_id[pos] = gid
    vec = [1] * (n + 1)
    for i in range(1, n):
        vec[i] = 0 if group_id[i - 1] == group_id[i] else 1
    return vec


def _advance_groups(frontier, groups, relay_labels):
    merged, layer_labels = [], []
    for members in groups:
        if len(members) == 1:
            node = frontier[members[0]]
            merged.append(node)
            layer_labels.append(_relay_label(node, relay_labels))
        else:
            parent = frontier[members[0]].parent
            merged.append(parent)
            layer_labels.append(parent.label)
    return merged, layer_labels
