"""One-parameter (simple tree) measures and weights on dyadic intervals.

The simple tree of depth D is the set of dyadic subintervals of [0,1)
with levels 0..D, ordered by inclusion.  Leaves are the 2**D intervals
at level D; a grained measure assigns an exact rational mass to each
leaf and sums over leaves for coarser intervals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

from .errors import GrainMismatchError
from .grid import DyadicInterval, Rational, as_fraction


def _check_depth(depth: int) -> int:
    if not isinstance(depth, int) or isinstance(depth, bool) or depth < 0:
        raise ValueError(f"tree depth must be a nonnegative integer, got {depth!r}")
    return depth


def _check_interval(interval: DyadicInterval, depth: int) -> None:
    if interval.level > depth:
        raise GrainMismatchError(
            f"interval level {interval.level} exceeds tree depth {depth}"
        )


@dataclass(frozen=True)
class TreeMeasure:
    """Nonnegative leaf masses on the depth-D dyadic tree."""

    depth: int
    masses: Mapping[int, Fraction]  # leaf index -> mass

    @classmethod
    def from_leaves(cls, depth: int, leaves: Mapping[int, Rational]) -> "TreeMeasure":
        depth = _check_depth(depth)
        out = {}
        for index, raw in leaves.items():
            if not 0 <= index < (1 << depth):
                raise ValueError(f"leaf index {index} out of range at depth {depth}")
            mass = as_fraction(raw, "mass")
            if mass < 0:
                raise ValueError(f"leaf mass must be nonnegative, got {mass}")
            if mass:
                out[index] = mass
        return cls(depth, out)

    def total(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))


def interval_mass(mu: TreeMeasure, interval: DyadicInterval) -> Fraction:
    _check_interval(interval, mu.depth)
    shift = mu.depth - interval.level
    total = Fraction(0)
    for leaf, mass in mu.masses.items():
        if (leaf >> shift) == interval.index:
            total += mass
    return total


@dataclass(frozen=True)
class TreeWeights:
    """Per-interval nonnegative weight with a default, like the 2-D family."""

    depth: int
    default: Fraction
    overrides: Mapping[DyadicInterval, Fraction] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        depth: int,
        default: Rational = 0,
        overrides: Optional[Mapping[DyadicInterval, Rational]] = None,
    ) -> "TreeWeights":
        depth = _check_depth(depth)
        dflt = as_fraction(default, "weight")
        if dflt < 0:
            raise ValueError("default weight must be nonnegative")
        out = {}
        for interval, raw in (overrides or {}).items():
            _check_interval(interval, depth)
            w = as_fraction(raw, "weight")
            if w < 0:
                raise ValueError("weights must be nonnegative")
            out[interval] = w
        return cls(depth, dflt, out)

    def value(self, interval: DyadicInterval) -> Fraction:
        return self.overrides.get(interval, self.default)


def ones_tree_weights(depth: int) -> TreeWeights:
    return TreeWeights.build(depth, 1)
