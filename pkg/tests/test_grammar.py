import pytest

from stratparse.grammar import (branching_grammar, comb_tree,
                                complete_binary_tree, generate_corpus,
                                toy_grammar)
from stratparse.trees import preprocess, render_brackets


def test_toy_corpus_is_deterministic_and_tagged():
    a = generate_corpus(toy_grammar(), 25, seed=1)
    b = generate_corpus(toy_grammar(), 25, seed=1)
    assert a == b
    for tree in a:
        assert tree.label == "S"
        assert all(leaf.word for leaf in tree.leaves())


def test_toy_grammar_unambiguous_given_pos():
    """The same POS sequence never carries two different structures, so a
    trained parser can in principle reach a perfect score."""
    trees = generate_corpus(toy_grammar(), 400, seed=2)
    by_tags = {}
    for tree in trees:
        key = tuple(preprocess(tree).tags())
        skeleton = render_brackets(preprocess(tree))
        for leaf in preprocess(tree).leaves():
            skeleton = skeleton.replace(f" {leaf.word})", ")")
        by_tags.setdefault(key, set()).add(skeleton)
    for key, skeletons in by_tags.items():
        assert len(skeletons) == 1, key


def test_max_len_filter():
    trees = generate_corpus(toy_grammar(), 50, seed=3, max_len=6)
    assert all(len(t.words()) <= 6 for t in trees)


def test_branching_grammars_mirror():
    right = generate_corpus(branching_grammar("right"), 30, seed=4)
    left = generate_corpus(branching_grammar("left"), 30, seed=4)
    assert any(len(t.children) == 3 for t in right)  # flat nodes appear
    assert any(len(t.children) == 3 for t in left)
    with pytest.raises(ValueError):
        branching_grammar("center")


def test_complete_binary_tree_shape():
    tree = complete_binary_tree(3)
    assert len(tree.words()) == 8

    def depth(node):
        return 1 + max((depth(c) for c in node.children), default=0)
    assert depth(tree) == 4  # 3 internal levels + leaf

    unary = complete_binary_tree(0)
    assert len(unary.words()) == 1


def test_comb_tree_shapes():
    right = comb_tree(4, "right")
    assert render_brackets(right) == \
        "(X (T w) (X (T w) (X (T w) (T w))))"
    left = comb_tree(4, "left")
    assert render_brackets(left) == \
        "(X (X (X (T w) (T w)) (T w)) (T w))"
    assert comb_tree(1).words() == ["w"]
    with pytest.raises(ValueError):
        comb_tree(0)
