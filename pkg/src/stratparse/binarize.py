"""Tree binarization under four factors, and per-sentence factor sampling.

Nodes introduced by binarization carry the parent label prefixed with an
underscore; erasing those nodes recovers the original tree exactly.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass

from .trees import ConfigError, SyntaxTree


class BinaryFactor(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    MID_IN = "midin"
    MID_OUT = "midout"


SUB_PREFIX = "_"
POS_PREFIX = "#"


def sub_label(parent_label):
    """Relay label for a node under ``parent_label``: '_' + its base label."""
    return SUB_PREFIX + parent_label.lstrip(SUB_PREFIX)


def is_sub_label(label):
    return label.startswith((SUB_PREFIX, POS_PREFIX))


def binarize(tree, factor):
    """Return a strictly binary copy of ``tree``.

    Leaves keep their POS parents and single-child nodes (single-word
    constituents) are untouched; only nodes with three or more children
    gain intermediate '_'-labeled nodes, arranged by ``factor``:

    * LEFT nests leftward, ``(X (_X (_X a b) c) d)``
    * RIGHT nests rightward, ``(X a (_X b (_X c d)))``
    * MID_OUT splits the child list at the midpoint recursively
      (ceil(m/2) children go left), giving a balanced shape
    * MID_IN peels one child from the left end, then the right end,
      alternating inward
    """
    if tree.is_leaf():
        return SyntaxTree(tree.label, [], tree.word)
    children = [binarize(c, factor) for c in tree.children]
    if len(children) <= 2:
        return SyntaxTree(tree.label, children)
    sub = sub_label(tree.label)
    if factor is BinaryFactor.LEFT:
        node = SyntaxTree(sub, children[:2])
        for child in children[2:-1]:
            node = SyntaxTree(sub, [node, child])
        return SyntaxTree(tree.label, [node, children[-1]])
    if factor is BinaryFactor.RIGHT:
        node = SyntaxTree(sub, children[-2:])
        for child in reversed(children[1:-2]):
            node = SyntaxTree(sub, [child, node])
        return SyntaxTree(tree.label, [children[0], node])
    if factor is BinaryFactor.MID_OUT:
        return _nest_midout(tree.label, children, top=True)
    if factor is BinaryFactor.MID_IN:
        return _nest_midin(tree.label, children, top=True, from_left=True)
    raise ConfigError(f"unknown factor: {factor}")


def _nest_midout(label, children, top=False):
    name = label if top else sub_label(label)
    if len(children) == 1:
        return children[0]
    mid = (len(children) + 1) // 2
    return SyntaxTree(name, [_nest_midout(label, children[:mid]),
                             _nest_midout(label, children[mid:])])


def _nest_midin(label, children, top=False, from_left=True):
    name = label if top else sub_label(label)
    if len(children) == 1:
        return children[0]
    if len(children) == 2:
        return SyntaxTree(name, children)
    if from_left:
        rest = _nest_midin(label, children[1:], from_left=False)
        return SyntaxTree(name, [children[0], rest])
    rest = _nest_midin(label, children[:-1], from_left=True)
    return SyntaxTree(name, [rest, children[-1]])


def unbinarize(tree):
    """Erase '_'-labeled nodes, splicing their children into the parent."""
    if tree.is_leaf():
        return SyntaxTree(tree.label, [], tree.word)
    children = []
    for child in tree.children:
        flat = unbinarize(child)
        if flat.label.startswith(SUB_PREFIX):
            children.extend(flat.children)
        else:
            children.append(flat)
    return SyntaxTree(tree.label, children)


# ---------------------------------------------------------------------------
# Factor policies
# ---------------------------------------------------------------------------

_POLICY_RE = re.compile(r"^L(\d+)R(\d+)$", re.IGNORECASE)


@dataclass
class FactorPolicy:
    """Fixed factor, or a left/right interpolation sampled per sentence.

    ``p_left`` is the probability of drawing LEFT (RIGHT otherwise);
    ``fixed`` short-circuits sampling.
    """

    p_left: float = 1.0
    fixed: BinaryFactor | None = None

    def __post_init__(self):
        if self.fixed is None and not 0.0 <= self.p_left <= 1.0:
            raise ConfigError(f"p_left out of range: {self.p_left}")

    @property
    def factors(self):
        """Factors this policy can produce."""
        if self.fixed is not None:
            return (self.fixed,)
        if self.p_left >= 1.0:
            return (BinaryFactor.LEFT,)
        if self.p_left <= 0.0:
            return (BinaryFactor.RIGHT,)
        return (BinaryFactor.LEFT, BinaryFactor.RIGHT)


def parse_factor_policy(text):
    """Parse 'L85R15' style interpolations or a fixed factor name."""
    text = text.strip()
    match = _POLICY_RE.match(text)
    if match:
        left, right = int(match.group(1)), int(match.group(2))
        if left + right != 100:
            raise ConfigError(f"factor percentages must sum to 100: {text}")
        return FactorPolicy(p_left=left / 100.0)
    try:
        return FactorPolicy(fixed=BinaryFactor(text.lower()))
    except ValueError:
        raise ConfigError(f"unknown factor policy: {text!r}") from None


def sample_factor(policy, rng):
    """Draw a factor from ``policy`` using numpy Generator ``rng``."""
    if policy.fixed is not None:
        return policy.fixed
    return BinaryFactor.LEFT if rng.random() < policy.p_left else BinaryFactor.RIGHT
