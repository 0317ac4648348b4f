"""Synthetic PCFG corpora: a small unambiguous grammar for training demos
plus branching-biased grammars and regular tree shapes for statistics tests.
"""

from __future__ import annotations

import numpy as np

from .trees import SyntaxTree


class Pcfg:
    """Probabilistic CFG with preterminal lexicon entries.

    ``rules`` maps a nonterminal to [(probability, rhs-symbols)], the
    ``lexicon`` maps a preterminal tag to its word list (uniform choice).
    """

    def __init__(self, start, rules, lexicon):
        self.start = start
        self.rules = {}
        for lhs, options in rules.items():
            total = sum(p for p, _ in options)
            self.rules[lhs] = [(p / total, tuple(rhs)) for p, rhs in options]
        self.lexicon = {tag: list(words) for tag, words in lexicon.items()}

    def generate(self, rng, max_depth=24):
        return self._expand(self.start, rng, max_depth)

    def _expand(self, symbol, rng, depth):
        if symbol in self.lexicon:
            word = self.lexicon[symbol][rng.integers(len(self.lexicon[symbol]))]
            return SyntaxTree(symbol, [], word)
        options = self.rules[symbol]
        if depth <= 0:
            # terminate deep recursions: fewest nonterminals, then shortest
            rhs = min(options, key=lambda opt: (
                sum(s in self.rules for s in opt[1]), len(opt[1])))[1]
        else:
            probs = np.array([p for p, _ in options])
            rhs = options[rng.choice(len(options), p=probs)][1]
        return SyntaxTree(symbol, [self._expand(s, rng, depth - 1) for s in rhs])


def generate_corpus(grammar, count, seed=0, max_len=0, max_depth=24):
    """``count`` trees from ``grammar``; ``max_len`` > 0 rejects longer yields."""
    rng = np.random.default_rng(seed)
    trees = []
    while len(trees) < count:
        tree = grammar.generate(rng, max_depth=max_depth)
        if max_len and len(tree.words()) > max_len:
            continue
        trees.append(tree)
    return trees


def toy_grammar():
    """Small unambiguous English-like grammar; POS sequences fully
    determine the tree, so a parser can reach perfect dev scores."""
    rules = {
        "S": [(6, ("NP", "VP")), (4, ("NP", "VP", "PU"))],
        "NP": [(5, ("DT", "NN")), (3, ("DT", "JJ", "NN")), (2, ("PRP",))],
        "VP": [(4, ("VBD", "NP")), (4, ("VBD", "NP", "PP")), (2, ("VBD",))],
        "PP": [(1, ("IN", "NP"))],
    }
    lexicon = {
        "DT": ["the", "a", "this", "every"],
        "NN": ["cat", "dog", "bird", "fox", "house", "garden"],
        "JJ": ["big", "small", "quick", "lazy"],
        "VBD": ["saw", "liked", "chased", "found"],
        "PRP": ["she", "he", "it", "they"],
        "IN": ["in", "near", "with", "under"],
        "PU": ["."],
    }
    return Pcfg("S", rules, lexicon)


def branching_grammar(bias="right"):
    """Recursive grammar whose deep recursion sits on the ``bias`` side,
    mixing binary and flat (3-child) expansions so factoring matters."""
    if bias == "right":
        rules = {"XP": [(5, ("T", "XP")), (3, ("T", "T", "XP")), (2, ("T", "T"))]}
    elif bias == "left":
        rules = {"XP": [(5, ("XP", "T")), (3, ("XP", "T", "T")), (2, ("T", "T"))]}
    else:
        raise ValueError(f"bias must be left or right, got {bias!r}")
    lexicon = {"T": ["fa", "fe", "fi", "fo", "fu"]}
    return Pcfg("XP", rules, lexicon)


def complete_binary_tree(height, label="X", tag="T", word="w"):
    """Perfectly balanced binary tree with 2**height leaves."""
    if height == 0:
        return SyntaxTree(label, [SyntaxTree(tag, [], word)])

    def build(level):
        if level == 0:
            return SyntaxTree(tag, [], word)
        return SyntaxTree(label, [build(level - 1), build(level - 1)])
    return build(height)


def comb_tree(n, direction="right", label="X", tag="T", word="w"):
    """Single-dependency-core binary tree (a comb) over n words."""
    if n < 1:
        raise ValueError("need at least one word")
    leaves = [SyntaxTree(tag, [], word) for _ in range(n)]
    if n == 1:
        return SyntaxTree(label, leaves)
    if direction == "right":
        node = leaves[-1]
        for leaf in reversed(leaves[:-1]):
            node = SyntaxTree(label, [leaf, node])
    else:
        node = leaves[0]
        for leaf in leaves[1:]:
            node = SyntaxTree(label, [node, leaf])
    return node


GRAMMARS = {
    "toy": toy_grammar,
    "right": lambda: branching_grammar("right"),
    "left": lambda: branching_grammar("left"),
}
