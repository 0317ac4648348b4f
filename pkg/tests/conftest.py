import numpy as np
import pytest

from stratparse.trees import SyntaxTree

LABELS = ["S", "NP", "VP", "PP", "ADJP", "SBAR"]
TAGS = ["DT", "NN", "JJ", "VBD", "IN", "RB"]
WORDS = ["the", "cat", "dog", "ran", "big", "on", "mat", "quickly"]


def random_tree(rng, n_leaves=None, max_leaves=12, allow_unary=True,
                leaves=None):
    """Random n-ary tree over random (or supplied) POS-tagged words."""
    if leaves is not None:
        leaves = [SyntaxTree(tag, [], word) for tag, word in leaves]
    else:
        if n_leaves is None:
            n_leaves = int(rng.integers(1, max_leaves + 1))
        leaves = [SyntaxTree(TAGS[rng.integers(len(TAGS))], [],
                             WORDS[rng.integers(len(WORDS))])
                  for _ in range(n_leaves)]

    def build(parts):
        if len(parts) == 1:
            node = parts[0]
            if node.is_leaf():
                if allow_unary and rng.random() < 0.3:
                    return SyntaxTree(LABELS[rng.integers(len(LABELS))], [node])
                return node
            return node
        k = int(rng.integers(2, min(4, len(parts)) + 1))
        cuts = sorted(rng.choice(np.arange(1, len(parts)), size=k - 1,
                                 replace=False).tolist()) if k > 1 else []
        bounds = [0] + cuts + [len(parts)]
        children = [build(parts[lo:hi]) for lo, hi in zip(bounds, bounds[1:])]
        return SyntaxTree(LABELS[rng.integers(len(LABELS))], children)

    tree = build(leaves)
    if tree.is_leaf():
        tree = SyntaxTree(LABELS[rng.integers(len(LABELS))], [tree])
    return tree


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
