import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stratparse.binarize import BinaryFactor, binarize
from stratparse.recover import (CLAMPED, FOREST, STALLED, VALID, binary_groups,
                                chunk_groups, recover_tree, validate)
from stratparse.stratify import stratify_binary, stratify_multi
from stratparse.trees import TreeError, parse_brackets, preprocess, render_brackets

from conftest import random_tree


def _binary_replay(tree, factor, relay="parent"):
    sample = stratify_binary(binarize(tree, factor), relay_labels=relay)
    return recover_tree(sample.words, sample.tags, sample.labels,
                        orientations=sample.orientations)


def _multi_replay(tree, relay="parent"):
    sample = stratify_multi(tree, relay_labels=relay)
    return recover_tree(sample.words, sample.tags, sample.labels,
                        chunks=sample.chunks)


def test_binary_groups_rule():
    assert binary_groups([1, 0]) == [[0, 1]]
    assert binary_groups([1, 1, 0]) == [[0], [1, 2]]
    assert binary_groups([1, 0, 1, 0]) == [[0, 1], [2, 3]]
    assert binary_groups([1, 1, 0, 0]) == [[0], [1, 2], [3]]
    assert binary_groups([1]) == [[0]]


def test_chunk_groups_rule():
    assert chunk_groups([1, 0, 0, 1]) == [[0, 1, 2]]
    assert chunk_groups([1, 0, 1, 1]) == [[0, 1], [2]]
    assert chunk_groups([1, 1, 1]) == [[0], [1]]


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(list(BinaryFactor)),
       st.sampled_from(["parent", "self"]))
def test_round_trip_binary(seed, factor, relay):
    tree = random_tree(np.random.default_rng(seed))
    outcome = _binary_replay(tree, factor, relay)
    assert outcome.validity == VALID
    assert outcome.tree == tree


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(["parent", "self"]))
def test_round_trip_multi(seed, relay):
    tree = random_tree(np.random.default_rng(seed))
    outcome = _multi_replay(tree, relay)
    assert outcome.validity == VALID
    assert outcome.tree == tree


def test_collapsed_label_expands_to_unary_chain():
    tree = preprocess(parse_brackets(
        "(SBAR (S (NP (NN x)) (VP (VBD y))))")[0])
    assert tree.label == "SBAR+S"
    outcome = _binary_replay(tree, BinaryFactor.RIGHT)
    root = outcome.tree
    assert root.label == "SBAR"
    assert len(root.children) == 1 and root.children[0].label == "S"
    assert render_brackets(root) == "(SBAR (S (NP (NN x)) (VP (VBD y))))"


def test_single_word_unary_expansion():
    outcome = recover_tree(["cat"], ["NN"], [["NP"]], orientations=[])
    assert render_brackets(outcome.tree) == "(NP (NN cat))"
    outcome = recover_tree(["go"], ["VB"], [["S+VP"]], orientations=[])
    assert render_brackets(outcome.tree) == "(S (VP (VB go)))"
    # placeholder layer-0 label leaves the bare POS leaf
    outcome = recover_tree(["cat"], ["NN"], [["#NN"]], orientations=[])
    assert render_brackets(outcome.tree) == "(NN cat)"


def test_corrupted_edge_orientation_is_clamped():
    tree = preprocess(parse_brackets("(S (NP (A a) (B b)) (VP (C c) (D d)))")[0])
    sample = stratify_binary(binarize(tree, BinaryFactor.RIGHT))
    broken = [list(layer) for layer in sample.orientations]
    broken[0][0] = 0  # frame-breaking: first node points off the sentence
    outcome = recover_tree(sample.words, sample.tags, sample.labels,
                           orientations=broken)
    assert outcome.validity == CLAMPED
    assert outcome.clamp_count == 1
    assert outcome.tree == tree
    assert [w for t in outcome.trees for w in t.words()] == sample.words


def test_multi_stall_yields_flagged_forest():
    # all-singleton chunks: no group merges, the parse stalls immediately
    outcome = recover_tree(["a", "b", "c"], ["A", "B", "C"],
                           [["#A", "#B", "#C"]],
                           chunks=[[1, 1, 1, 1]])
    assert outcome.validity == STALLED
    assert len(outcome.trees) == 3
    assert [t.words()[0] for t in outcome.trees] == ["a", "b", "c"]
    report = validate(outcome)
    assert report.validity == STALLED
    assert report.tree_count == 3


def test_signals_exhausted_leaves_forest():
    outcome = recover_tree(["a", "b", "c"], ["A", "B", "C"],
                           [["#A", "#B", "#C"], ["X", "_X"]],
                           orientations=[[1, 0, 0]])
    assert outcome.validity == FOREST
    assert len(outcome.trees) == 2


def test_shape_mismatch_raises():
    with pytest.raises(TreeError):
        recover_tree(["a", "b"], ["A", "B"], [["#A", "#B"]],
                     orientations=[[1, 0, 0]])
    with pytest.raises(TreeError):
        recover_tree(["a", "b"], ["A", "B"], [["#A", "#B"], ["X", "Y"]],
                     orientations=[[1, 0]])
    with pytest.raises(TreeError):
        recover_tree(["a", "b"], ["A"], [["#A", "#B"]], orientations=[[1, 0]])


def test_sub_label_at_root_is_repaired():
    outcome = recover_tree(["a", "b"], ["A", "B"], [["#A", "#B"], ["_X"]],
                           orientations=[[1, 0]])
    assert outcome.tree.label == "X"
    assert outcome.repair_count == 1
    assert validate(outcome).repair_count == 1


def test_gold_replay_reports_zero_guards():
    tree = preprocess(parse_brackets("(S (NP (A a) (B b)) (VP (C c)))")[0])
    outcome = _binary_replay(tree, BinaryFactor.LEFT)
    report = validate(outcome)
    assert (report.validity, report.clamp_count, report.repair_count) == \
        (VALID, 0, 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_yield_preserved_under_random_signals(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    words = [f"w{i}" for i in range(n)]
    tags = ["T"] * n
    labels = [["#T"] * n]
    orientations = []
    length = n
    while length > 1:
        layer = rng.integers(0, 2, size=length).tolist()
        layer[0], layer[-1] = 1, 0
        orientations.append(layer)
        length = len(binary_groups(layer))
        labels.append(["X"] * length)
    outcome = recover_tree(words, tags, labels, orientations=orientations)
    assert [w for t in outcome.trees for w in t.words()] == words
