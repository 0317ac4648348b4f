import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stratparse.binarize import (BinaryFactor, FactorPolicy, binarize,
                                 parse_factor_policy, sample_factor, sub_label,
                                 unbinarize)
from stratparse.trees import ConfigError, parse_brackets, render_brackets

from conftest import random_tree

FLAT3 = "(X (A a) (B b) (C c))"
FLAT4 = "(X (A a) (B b) (C c) (D d))"


def _bin(text, factor):
    return render_brackets(binarize(parse_brackets(text)[0], factor))


def test_right_factor():
    assert _bin(FLAT3, BinaryFactor.RIGHT) == "(X (A a) (_X (B b) (C c)))"
    assert _bin(FLAT4, BinaryFactor.RIGHT) == \
        "(X (A a) (_X (B b) (_X (C c) (D d))))"


def test_left_factor():
    assert _bin(FLAT3, BinaryFactor.LEFT) == "(X (_X (A a) (B b)) (C c))"
    assert _bin(FLAT4, BinaryFactor.LEFT) == \
        "(X (_X (_X (A a) (B b)) (C c)) (D d))"


def test_midout_balances_four_children():
    assert _bin(FLAT4, BinaryFactor.MID_OUT) == \
        "(X (_X (A a) (B b)) (_X (C c) (D d)))"
    # odd count: larger left half
    assert _bin(FLAT3, BinaryFactor.MID_OUT) == "(X (_X (A a) (B b)) (C c))"


def test_midin_alternates_from_left():
    assert _bin(FLAT4, BinaryFactor.MID_IN) == \
        "(X (A a) (_X (_X (B b) (C c)) (D d)))"
    assert _bin(FLAT3, BinaryFactor.MID_IN) == "(X (A a) (_X (B b) (C c)))"


def test_already_binary_unchanged():
    text = "(S (NP (DT the) (NN cat)) (VP (VBD sat)))"
    tree = parse_brackets(text)[0]
    for factor in BinaryFactor:
        assert binarize(tree, factor) == tree


def test_single_word_constituent_untouched():
    tree = parse_brackets("(NP (NN cat))")[0]
    for factor in BinaryFactor:
        assert binarize(tree, factor) == tree


def test_sub_label_never_stacks_underscores():
    assert sub_label("NP") == "_NP"
    assert sub_label("_NP") == "_NP"
    tree = parse_brackets("(X (A a) (B b) (C c) (D d) (E e))")[0]
    out = render_brackets(binarize(tree, BinaryFactor.RIGHT))
    assert "__" not in out


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(list(BinaryFactor)))
def test_binarize_strictly_binary_and_reversible(seed, factor):
    tree = random_tree(np.random.default_rng(seed))
    btree = binarize(tree, factor)

    def check(node):
        if node.is_leaf():
            return
        if len(node.children) == 1:
            child = node.children[0]
            assert child.is_leaf(), "only single-word constituents stay unary"
        else:
            assert len(node.children) == 2
        for child in node.children:
            check(child)
    check(btree)
    assert btree.words() == tree.words()
    assert unbinarize(btree) == tree


def test_factor_policy_parsing():
    policy = parse_factor_policy("L85R15")
    assert policy.p_left == pytest.approx(0.85)
    assert parse_factor_policy("left").fixed is BinaryFactor.LEFT
    assert parse_factor_policy("midout").fixed is BinaryFactor.MID_OUT
    with pytest.raises(ConfigError):
        parse_factor_policy("L80R15")
    with pytest.raises(ConfigError):
        parse_factor_policy("sideways")


def test_sample_factor_distribution():
    rng = np.random.default_rng(0)
    policy = parse_factor_policy("L95R05")
    draws = [sample_factor(policy, rng) for _ in range(4000)]
    freq = draws.count(BinaryFactor.LEFT) / len(draws)
    assert abs(freq - 0.95) < 0.02


def test_sample_factor_degenerate_and_fixed():
    rng = np.random.default_rng(0)
    always_left = parse_factor_policy("L100R00")
    assert all(sample_factor(always_left, rng) is BinaryFactor.LEFT
               for _ in range(50))
    fixed = FactorPolicy(fixed=BinaryFactor.MID_IN)
    assert sample_factor(fixed, rng) is BinaryFactor.MID_IN
    assert fixed.factors == (BinaryFactor.MID_IN,)


def test_sample_factor_deterministic_given_state():
    policy = parse_factor_policy("L50R50")
    a = [sample_factor(policy, np.random.default_rng(3)) for _ in range(20)]
    b = [sample_factor(policy, np.random.default_rng(3)) for _ in range(20)]
    assert a == b
