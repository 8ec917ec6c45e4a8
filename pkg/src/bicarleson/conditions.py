"""Box condition, Carleson condition, and extremal embedding constants.

For a grained measure mu and weight family alpha, three quantities are
measured, always over the bi-tree of dyadic rectangles:

* box constant: the supremum over rectangles R0 with mu(R0) > 0 of
  (sum over R inside R0 of mu(R)^2 alpha_R) / mu(R0);
* Carleson ratio of a family: the same quotient with R0 replaced by the
  union Omega of the family's members, the numerator ranging over every
  dyadic rectangle contained in Omega;
* embedding constant: the smallest C with
  sum_R alpha_R (integral of phi over R)^2 <= C * integral of phi^2
  over all cell-constant phi, i.e. the top eigenvalue of the associated
  quadratic form on the cells of positive mass.

Box and Carleson values are exact rationals (the instances of interest
sit exactly at their thresholds); the embedding constant is a spectral
quantity computed in floating point by power iteration, whose Rayleigh
quotients increase monotonically, so the returned value is a certified
lower bound that dominates every tested quotient.

The one-parameter analogues on the simple tree live here as well, and
so does the pruned/cut classification of rectangle families viewed as
sub-bi-trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np

from .errors import ConvergenceError, GrainMismatchError, ResourceGuardError
from .grid import (
    DyadicInterval,
    DyadicRect,
    Measure,
    RectFamily,
    WeightFamily,
    all_cells,
    cell_rect,
    check_rect_grain,
    children,
    parents,
    region_cells,
    total_rect_count,
)
from .sweeps import (
    cell_counts_axis,
    down_accumulate,
    down_accumulate_2d,
    flat_index,
    flat_to_level_index,
    interval_count,
    level_offset,
    up_accumulate,
    up_accumulate_2d,
)
from .tree import TreeMeasure, TreeWeights

BOX_GUARD_N = 8
SPECTRAL_GUARD_N = 6
TREE_GUARD_DEPTH = 16
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class ConditionReport:
    """Exact supremum, its witness, and a degenerate-denominator flag.

    The witness is the maximizing outer rectangle (an interval for the
    tree analogues) or the evaluated family for the Carleson quotient.
    """

    constant: Fraction
    witness: Optional[Union[DyadicRect, RectFamily, DyadicInterval]]
    infinite: bool = False
    terms: Optional[List[Tuple[object, Fraction]]] = None


@dataclass(frozen=True)
class FamilyClass:
    pruned: bool
    cut: bool
    vacuous_cut: bool


def _check_same_grain(mu: Measure, alpha: WeightFamily) -> None:
    if mu.grain != alpha.grain:
        raise GrainMismatchError(
            f"measure grain {mu.grain.n} != weight grain {alpha.grain.n}"
        )


def _guard(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise ResourceGuardError(f"{what} refuses N > {limit} (got {n})")


# ---------------------------------------------------------------------------
# exact integer tables

def _scaled_cell_table(mu: Measure) -> Tuple[np.ndarray, int]:
    """Cell masses as scaled integers: mass = entry / scale."""
    scale = 1
    for mass in mu.masses.values():
        scale = scale * mass.denominator // math.gcd(scale, mass.denominator)
    side = mu.grain.side
    table = np.zeros((side, side), dtype=object)
    for cell, mass in mu.masses.items():
        table[cell.ix, cell.iy] = int(mass * scale)
    return table, scale


def _scaled_weight_table(alpha: WeightFamily) -> Tuple[np.ndarray, int]:
    """Per-rectangle weights as scaled integers over one common denominator."""
    scale = alpha.default.denominator
    for w in alpha.overrides.values():
        scale = scale * w.denominator // math.gcd(scale, w.denominator)
    n = alpha.grain.n
    size = interval_count(n)
    table = np.full((size, size), int(alpha.default * scale), dtype=object)
    for rect, w in alpha.overrides.items():
        table[flat_index(rect.h.level, rect.h.index), flat_index(rect.v.level, rect.v.index)] = int(
            w * scale
        )
    return table, scale


def _rect_from_flat(fi: int, fj: int) -> DyadicRect:
    jh, ih = flat_to_level_index(fi)
    jv, iv = flat_to_level_index(fj)
    return DyadicRect(DyadicInterval(jh, ih), DyadicInterval(jv, iv))


def _mass_rect_table(mu: Measure) -> Tuple[np.ndarray, int]:
    cells, scale = _scaled_cell_table(mu)
    size = interval_count(mu.grain.n)
    table = np.zeros((size, size), dtype=object)
    lo = level_offset(mu.grain.n)
    side = mu.grain.side
    table[lo : lo + side, lo : lo + side] = cells
    return down_accumulate_2d(table, mu.grain.n), scale


def _box_tables(mu: Measure, alpha: WeightFamily):
    """Mass table, per-outer-rectangle numerator table, and the two scales."""
    mass, mscale = _mass_rect_table(mu)
    weights, ascale = _scaled_weight_table(alpha)
    terms = mass * mass * weights
    numerators = down_accumulate_2d(terms, mu.grain.n)
    return mass, terms, numerators, mscale, ascale


def _ratio(numer_int, mass_int, mscale: int, ascale: int) -> Fraction:
    # value = (numer/(mscale^2 ascale)) / (mass/mscale) = numer/(mscale ascale mass)
    return Fraction(int(numer_int), mscale * ascale * int(mass_int))


def _itemized_terms(
    terms: np.ndarray, mask: np.ndarray, mscale: int, ascale: int
) -> List[Tuple[DyadicRect, Fraction]]:
    denom = mscale * mscale * ascale
    out = []
    for fi, fj in zip(*np.nonzero(mask)):
        val = terms[fi, fj]
        if val:
            out.append((_rect_from_flat(int(fi), int(fj)), Fraction(int(val), denom)))
    out.sort(key=lambda item: item[0])
    return out


def _descendant_flags(depth: int, outer_flat: int) -> np.ndarray:
    level, index = flat_to_level_index(outer_flat)
    flags = np.zeros(interval_count(depth), dtype=bool)
    for lv in range(level, depth + 1):
        shift = lv - level
        lo = level_offset(lv) + (index << shift)
        flags[lo : lo + (1 << shift)] = True
    return flags


def box_constant(
    mu: Measure,
    alpha: WeightFamily,
    *,
    itemize: bool = False,
    max_grain: int = BOX_GUARD_N,
) -> ConditionReport:
    """Supremum of the box quotient over all rectangles of positive mass.

    Rectangles with zero mass have zero numerator too (mass is monotone
    under inclusion) and are skipped; the infinite flag is kept for a
    positive numerator over a zero denominator, which this scan can
    therefore never produce but reports faithfully if it ever did.
    """
    _check_same_grain(mu, alpha)
    _guard(mu.grain.n, max_grain, "box condition enumeration")
    mass, terms, numerators, mscale, ascale = _box_tables(mu, alpha)
    best_num = 0
    best_den = 1
    witness = None
    infinite = False
    positive = np.nonzero(mass)
    for fi, fj in zip(*positive):
        num = numerators[fi, fj]
        den = mass[fi, fj]
        if num * best_den > best_num * den:
            best_num, best_den = num, den
            witness = (int(fi), int(fj))
    if np.any((mass == 0) & (numerators != 0)):
        infinite = True
    if witness is None:
        return ConditionReport(Fraction(0), None, infinite, None)
    rect = _rect_from_flat(*witness)
    constant = _ratio(best_num, best_den, mscale, ascale)
    terms_list = None
    if itemize:
        mask = _descendant_flags(mu.grain.n, witness[0])[:, None] & _descendant_flags(
            mu.grain.n, witness[1]
        )[None, :]
        terms_list = _itemized_terms(terms, mask, mscale, ascale)
    return ConditionReport(constant, rect, infinite, terms_list)


def box_constant_over(
    mu: Measure,
    alpha: WeightFamily,
    outers: Iterable[DyadicRect],
    *,
    max_grain: int = BOX_GUARD_N,
) -> ConditionReport:
    """Box quotient restricted to a caller-supplied set of outer rectangles."""
    _check_same_grain(mu, alpha)
    _guard(mu.grain.n, max_grain, "box condition enumeration")
    mass, _, numerators, mscale, ascale = _box_tables(mu, alpha)
    best: Optional[Tuple[object, object, DyadicRect]] = None
    infinite = False
    for rect in outers:
        check_rect_grain(rect, mu.grain)
        fi = flat_index(rect.h.level, rect.h.index)
        fj = flat_index(rect.v.level, rect.v.index)
        num = numerators[fi, fj]
        den = mass[fi, fj]
        if den == 0:
            if num != 0:
                infinite = True
            continue
        if best is None or num * best[1] > best[0] * den:
            best = (num, den, rect)
    if best is None:
        return ConditionReport(Fraction(0), None, infinite, None)
    return ConditionReport(_ratio(best[0], best[1], mscale, ascale), best[2], infinite)


def _region_mask(fam: RectFamily) -> np.ndarray:
    """Boolean rectangle table: True where the rectangle lies inside the union."""
    n = fam.grain.n
    cells = region_cells(fam)
    side = fam.grain.side
    indicator = np.zeros((side, side), dtype=object)
    for cell in cells:
        indicator[cell.ix, cell.iy] = 1
    size = interval_count(n)
    counts = np.zeros((size, size), dtype=object)
    lo = level_offset(n)
    counts[lo : lo + side, lo : lo + side] = indicator
    counts = down_accumulate_2d(counts, n)
    axis = cell_counts_axis(n)
    full = axis[:, None] * axis[None, :]
    return counts == full


def carleson_ratio(
    mu: Measure,
    alpha: WeightFamily,
    fam: RectFamily,
    *,
    itemize: bool = False,
    max_grain: int = BOX_GUARD_N,
) -> ConditionReport:
    """Weighted square-sum over every rectangle inside the family's union.

    When the union carries no mass the quotient is undefined; the report
    then raises the infinite flag as soon as some rectangle inside the
    union has positive weight, since the condition is degenerate there
    rather than vacuously satisfied.
    """
    _check_same_grain(mu, alpha)
    if fam.grain != mu.grain:
        raise GrainMismatchError(
            f"family grain {fam.grain.n} != measure grain {mu.grain.n}"
        )
    if not fam.members:
        raise ValueError("carleson_ratio requires a nonempty family")
    _guard(mu.grain.n, max_grain, "carleson enumeration")
    inside = _region_mask(fam)
    mass, terms, _, mscale, ascale = _box_tables(mu, alpha)
    numer = terms[inside].sum() if inside.any() else 0
    region = region_cells(fam)
    denom = Fraction(0)
    for cell, m in mu.masses.items():
        if cell in region:
            denom += m
    terms_list = _itemized_terms(terms, inside, mscale, ascale) if itemize else None
    if denom == 0:
        weights, _ = _scaled_weight_table(alpha)
        degenerate = bool(np.any(inside & (weights != 0)))
        return ConditionReport(Fraction(0), fam, degenerate, terms_list)
    constant = Fraction(int(numer), mscale * mscale * ascale) / denom
    return ConditionReport(constant, fam, False, terms_list)


def worst_carleson_region(
    mu: Measure, alpha: WeightFamily, *, max_grain: int = 2
) -> ConditionReport:
    """Exhaustive sweep over every nonempty cell region (tiny grains only).

    Any set of cells is a union of dyadic rectangles (cells are
    rectangles), so the sweep ranges over all 2**(4**N) - 1 nonempty cell
    subsets and maximizes the Carleson quotient.
    """
    _check_same_grain(mu, alpha)
    _guard(mu.grain.n, max_grain, "worst-region sweep")
    n = mu.grain.n
    side = mu.grain.side
    cells = list(all_cells(mu.grain))
    cell_masses = [mu.mass(c) for c in cells]
    _, terms, _, mscale, ascale = _box_tables(mu, alpha)
    # cell-bitmask per rectangle with a nonzero contribution
    candidates = []
    for fi, fj in zip(*np.nonzero(terms)):
        rect = _rect_from_flat(int(fi), int(fj))
        bits = 0
        wx = 1 << (n - rect.h.level)
        wy = 1 << (n - rect.v.level)
        for ix in range(rect.h.index * wx, (rect.h.index + 1) * wx):
            for iy in range(rect.v.index * wy, (rect.v.index + 1) * wy):
                bits |= 1 << (ix * side + iy)
        candidates.append((bits, terms[fi, fj]))
    best: Optional[Tuple[object, Fraction, int]] = None
    for subset in range(1, 1 << len(cells)):
        denom = Fraction(0)
        picked = subset
        while picked:
            b = (picked & -picked).bit_length() - 1
            denom += cell_masses[b]
            picked &= picked - 1
        if denom == 0:
            continue
        numer = 0
        for bits, term in candidates:
            if bits & ~subset == 0:
                numer += term
        if numer == 0:
            continue
        value = Fraction(int(numer), mscale * mscale * ascale) / denom
        if best is None or value > best[1]:
            best = (numer, value, subset)
    if best is None:
        return ConditionReport(Fraction(0), None, False, None)
    _, value, subset = best
    chosen = [cells[b] for b in range(len(cells)) if subset >> b & 1]
    witness = RectFamily.of(mu.grain, [cell_rect(mu.grain, c) for c in chosen])
    return ConditionReport(value, witness, False, None)


# ---------------------------------------------------------------------------
# spectral embedding constants

def _float_cell_table(mu: Measure) -> np.ndarray:
    side = mu.grain.side
    table = np.zeros((side, side))
    for cell, mass in mu.masses.items():
        table[cell.ix, cell.iy] = float(mass)
    return table


def _float_weight_table(alpha: WeightFamily) -> np.ndarray:
    size = interval_count(alpha.grain.n)
    table = np.full((size, size), float(alpha.default))
    for rect, w in alpha.overrides.items():
        table[
            flat_index(rect.h.level, rect.h.index), flat_index(rect.v.level, rect.v.index)
        ] = float(w)
    return table


def _embedding_from_tables(
    cell_mass: np.ndarray,
    weight_table: np.ndarray,
    depth: int,
    tol: float,
    max_iter: int,
) -> float:
    sqrt_mass = np.sqrt(cell_mass)
    if not sqrt_mass.any():
        return 0.0
    size = interval_count(depth)
    lo = level_offset(depth)
    side = 1 << depth

    def apply_form(x: np.ndarray) -> np.ndarray:
        table = np.zeros((size, size))
        table[lo : lo + side, lo : lo + side] = sqrt_mass * x
        table = down_accumulate_2d(table, depth)
        table *= weight_table
        table = up_accumulate_2d(table, depth)
        return sqrt_mass * table[lo : lo + side, lo : lo + side]

    x = cell_mass / np.linalg.norm(cell_mass)
    rho_prev = -math.inf
    rho = 0.0
    for _ in range(max_iter):
        y = apply_form(x)
        rho = float(np.vdot(x, y))
        if rho <= 0.0:
            return 0.0
        if abs(rho - rho_prev) <= tol * rho:
            return rho
        rho_prev = rho
        x = y / np.linalg.norm(y)
    raise ConvergenceError(
        f"power iteration did not converge within {max_iter} iterations",
        best=rho,
        iterations=max_iter,
    )


def embedding_constant(
    mu: Measure,
    alpha: WeightFamily,
    tol: float = 1e-9,
    *,
    max_grain: int = SPECTRAL_GUARD_N,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Smallest constant of the two-parameter embedding, by power iteration.

    Restricted to cells of positive mass; iteration starts from the cell
    mass profile (strictly positive on the support, so it overlaps the
    principal eigenvector of the nonnegative form) and stops when the
    relative Rayleigh-quotient change drops below tol.
    """
    _check_same_grain(mu, alpha)
    _guard(mu.grain.n, max_grain, "spectral embedding")
    if tol <= 0:
        raise ValueError("tol must be positive")
    return _embedding_from_tables(
        _float_cell_table(mu), _float_weight_table(alpha), mu.grain.n, tol, max_iter
    )


# ---------------------------------------------------------------------------
# one-parameter analogues

def _tree_scaled_leaf_table(mu: TreeMeasure) -> Tuple[np.ndarray, int]:
    scale = 1
    for mass in mu.masses.values():
        scale = scale * mass.denominator // math.gcd(scale, mass.denominator)
    leaves = np.zeros(1 << mu.depth, dtype=object)
    for leaf, mass in mu.masses.items():
        leaves[leaf] = int(mass * scale)
    return leaves, scale


def _tree_scaled_weight_table(alpha: TreeWeights) -> Tuple[np.ndarray, int]:
    scale = alpha.default.denominator
    for w in alpha.overrides.values():
        scale = scale * w.denominator // math.gcd(scale, w.denominator)
    table = np.full(interval_count(alpha.depth), int(alpha.default * scale), dtype=object)
    for interval, w in alpha.overrides.items():
        table[flat_index(interval.level, interval.index)] = int(w * scale)
    return table, scale


def tree_box_constant(
    mu: TreeMeasure,
    alpha: TreeWeights,
    *,
    itemize: bool = False,
    max_depth: int = TREE_GUARD_DEPTH,
) -> ConditionReport:
    """Box quotient on the simple tree: sup over intervals of positive mass."""
    if mu.depth != alpha.depth:
        raise GrainMismatchError(f"tree depths differ: {mu.depth} != {alpha.depth}")
    _guard(mu.depth, max_depth, "tree box enumeration")
    leaves, mscale = _tree_scaled_leaf_table(mu)
    weights, ascale = _tree_scaled_weight_table(alpha)
    size = interval_count(mu.depth)
    mass = np.zeros(size, dtype=object)
    mass[level_offset(mu.depth) : level_offset(mu.depth) + (1 << mu.depth)] = leaves
    mass = down_accumulate(mass, mu.depth)
    terms = mass * mass * weights
    numerators = down_accumulate(terms, mu.depth)
    best_num, best_den, witness = 0, 1, None
    for flat in np.nonzero(mass)[0]:
        num, den = numerators[flat], mass[flat]
        if num * best_den > best_num * den:
            best_num, best_den, witness = num, den, int(flat)
    infinite = bool(np.any((mass == 0) & (numerators != 0)))
    if witness is None:
        return ConditionReport(Fraction(0), None, infinite, None)
    level, index = flat_to_level_index(witness)
    interval = DyadicInterval(level, index)
    constant = Fraction(int(best_num), mscale * ascale * int(best_den))
    terms_list = None
    if itemize:
        flags = _tree_descendant_flags(mu.depth, witness)
        denom = mscale * mscale * ascale
        terms_list = [
            (DyadicInterval(*flat_to_level_index(int(f))), Fraction(int(terms[f]), denom))
            for f in np.nonzero(flags & (terms != 0))[0]
        ]
    return ConditionReport(constant, interval, infinite, terms_list)


def _tree_descendant_flags(depth: int, outer_flat: int) -> np.ndarray:
    level, index = flat_to_level_index(outer_flat)
    flags = np.zeros(interval_count(depth), dtype=bool)
    for lv in range(level, depth + 1):
        shift = lv - level
        lo = level_offset(lv) + (index << shift)
        flags[lo : lo + (1 << shift)] = True
    return flags


def tree_embedding_constant(
    mu: TreeMeasure,
    alpha: TreeWeights,
    tol: float = 1e-9,
    *,
    max_depth: int = TREE_GUARD_DEPTH,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Smallest one-parameter embedding constant, by the same power iteration."""
    if mu.depth != alpha.depth:
        raise GrainMismatchError(f"tree depths differ: {mu.depth} != {alpha.depth}")
    _guard(mu.depth, max_depth, "tree spectral embedding")
    if tol <= 0:
        raise ValueError("tol must be positive")
    depth = mu.depth
    masses = np.zeros(1 << depth)
    for leaf, mass in mu.masses.items():
        masses[leaf] = float(mass)
    if not masses.any():
        return 0.0
    weights = np.full(interval_count(depth), float(alpha.default))
    for interval, w in alpha.overrides.items():
        weights[flat_index(interval.level, interval.index)] = float(w)
    sqrt_mass = np.sqrt(masses)
    lo = level_offset(depth)
    side = 1 << depth

    def apply_form(x: np.ndarray) -> np.ndarray:
        table = np.zeros(interval_count(depth))
        table[lo : lo + side] = sqrt_mass * x
        table = down_accumulate(table, depth)
        table *= weights
        table = up_accumulate(table, depth)
        return sqrt_mass * table[lo : lo + side]

    x = masses / np.linalg.norm(masses)
    rho_prev = -math.inf
    rho = 0.0
    for _ in range(max_iter):
        y = apply_form(x)
        rho = float(np.vdot(x, y))
        if rho <= 0.0:
            return 0.0
        if abs(rho - rho_prev) <= tol * rho:
            return rho
        rho_prev = rho
        x = y / np.linalg.norm(y)
    raise ConvergenceError(
        f"tree power iteration did not converge within {max_iter} iterations",
        best=rho,
        iterations=max_iter,
    )


# ---------------------------------------------------------------------------
# pruned / cut classification

def classify_family(fam: RectFamily, *, max_grain: int = BOX_GUARD_N) -> FamilyClass:
    """Classify the sub-bi-tree spanned by the family's members.

    Pruned: the members, with undirected parent/child edges, are weakly
    connected and include every cell.  Cut: no vertex outside the family
    has a parent inside it, equivalently every child of a member is a
    member.  vacuous_cut marks the empty-complement case, where the cut
    reading holds with nothing actually removed.
    """
    _guard(fam.grain.n, max_grain, "family classification")
    members = fam.members
    grain = fam.grain
    if not members:
        return FamilyClass(pruned=False, cut=True, vacuous_cut=False)

    cells_present = all(
        cell_rect(grain, cell) in members for cell in all_cells(grain)
    )

    index = {rect: i for i, rect in enumerate(sorted(members))}
    parent_of = list(range(len(members)))

    def find(i: int) -> int:
        while parent_of[i] != i:
            parent_of[i] = parent_of[parent_of[i]]
            i = parent_of[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent_of[ri] = rj

    for rect, i in index.items():
        for par in parents(rect):
            j = index.get(par)
            if j is not None:
                union(i, j)
    roots = {find(i) for i in index.values()}
    connected = len(roots) == 1

    cut = all(child in members for rect in members for child in children(rect, grain))
    vacuous = len(members) == total_rect_count(grain)
    return FamilyClass(pruned=connected and cells_present, cut=cut, vacuous_cut=cut and vacuous)
