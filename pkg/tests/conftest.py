"""Seeded random instance generators shared across the suite."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from bicarleson.grid import (
    CellId,
    DyadicInterval,
    DyadicRect,
    Grain,
    Measure,
    RectFamily,
    WeightFamily,
    cell_rect,
)
from bicarleson.tree import TreeMeasure, TreeWeights


def rng_for(*parts) -> np.random.Generator:
    return np.random.default_rng(list(parts))


def random_measure(rng, grain: Grain, density: float = 0.5, denom: int = 16) -> Measure:
    masses = {}
    side = grain.side
    for ix in range(side):
        for iy in range(side):
            if rng.random() < density:
                masses[CellId(ix, iy)] = Fraction(int(rng.integers(1, denom + 1)), denom)
    if not masses:
        masses[CellId(0, 0)] = Fraction(1, denom)
    return Measure.from_cells(grain, masses)


def random_rect(rng, grain: Grain) -> DyadicRect:
    jh = int(rng.integers(0, grain.n + 1))
    jv = int(rng.integers(0, grain.n + 1))
    return DyadicRect(
        DyadicInterval(jh, int(rng.integers(0, 1 << jh))),
        DyadicInterval(jv, int(rng.integers(0, 1 << jv))),
    )


def random_weights(
    rng,
    grain: Grain,
    denom: int = 8,
    positive_default: bool = False,
    strictly_positive: bool = False,
) -> WeightFamily:
    low = 1 if (positive_default or strictly_positive) else 0
    default = Fraction(int(rng.integers(low, denom + 1)), denom)
    overrides = {}
    olow = 1 if strictly_positive else 0
    for _ in range(int(rng.integers(0, 6))):
        overrides[random_rect(rng, grain)] = Fraction(int(rng.integers(olow, denom + 1)), denom)
    return WeightFamily.build(grain, default, overrides)


def random_family(rng, grain: Grain, max_size: int = 5, anchor_support=None) -> RectFamily:
    """Random nonempty family; optionally forced to cover a given support cell."""
    rects = [random_rect(rng, grain) for _ in range(int(rng.integers(1, max_size + 1)))]
    if anchor_support is not None:
        rects.append(cell_rect(grain, anchor_support))
    return RectFamily.of(grain, rects)


def random_tree_measure(rng, depth: int, density: float = 0.6, denom: int = 16) -> TreeMeasure:
    masses = {}
    for leaf in range(1 << depth):
        if rng.random() < density:
            masses[leaf] = Fraction(int(rng.integers(1, denom + 1)), denom)
    if not masses:
        masses[0] = Fraction(1, denom)
    return TreeMeasure.from_leaves(depth, masses)


def random_tree_weights(
    rng, depth: int, denom: int = 8, positive_default: bool = False
) -> TreeWeights:
    if positive_default:
        default = Fraction(int(rng.integers(1, denom + 1)), denom)
    else:
        default = Fraction(int(rng.integers(0, denom + 1)), denom)
    overrides = {}
    for _ in range(int(rng.integers(0, 5))):
        level = int(rng.integers(0, depth + 1))
        index = int(rng.integers(0, 1 << level))
        overrides[DyadicInterval(level, index)] = Fraction(
            int(rng.integers(0, denom + 1)), denom
        )
    return TreeWeights.build(depth, default, overrides)


@pytest.fixture
def rng():
    return rng_for(20260810)
