"""Generators and statistics for extremal rectangle families.

All families here are built from hooked rectangles, the corner-anchored
rectangles [0, 2**(-N+m)) x [0, 2**(-N+k)).  Two integer statistics are
attached to a family with union U and anchor cell A = the corner cell:

* f_a: the number of dyadic rectangles that contain A and sit inside U;
* b_a: the maximum, over single dyadic rectangles R inside U, of the
  number of rectangles containing A inside R.

Only corner-anchored rectangles can contain A, so both counts live on
the integer lattice of hooked parameters (m, k): a hooked rectangle sits
inside U exactly when its parameter point is dominated by the parameter
point of some member.  That turns f_a into a lattice point count and
b_a into a maximal box area, which is what makes the scans cheap at
grains far beyond anything enumerable.

Two families matter most: the balanced staircase with parameters on the
line m + k = N, and the unbalanced family with parameters under the
hyperbola m*k = N, whose f_a / b_a quotient grows like log N while its
box quotient stays pinned at one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Optional, Tuple, Union

from .conditions import (
    box_constant,
    box_constant_over,
    carleson_ratio,
)
from .errors import ResourceGuardError
from .grid import (
    CellId,
    DyadicRect,
    Grain,
    Measure,
    RectFamily,
    WeightFamily,
    corner_measure,
    hooked_rect,
    lebesgue_measure,
    rect_cells,
    region_cells,
)

FAMILY_GUARD_N = 256
EXHAUSTIVE_GUARD_N = 8
LATTICE_GUARD_N = 10**6


@dataclass(frozen=True)
class FamilyStats:
    f_a: int
    b_a: int
    witness_box: DyadicRect


@dataclass(frozen=True)
class ScenarioReport:
    """Everything measured on the under-the-hyperbola construction at one grain."""

    grain: Grain
    a: Fraction
    stats: FamilyStats
    box_on_family: Fraction
    box_on_all: Fraction
    carleson: Fraction
    ratio_fb: float


class HyperbolaParts(NamedTuple):
    family: RectFamily
    forbidden: RectFamily
    alpha: WeightFamily
    mu: Measure


def _coerce_n(n: Union[Grain, int]) -> int:
    return n.n if isinstance(n, Grain) else int(n)


def balanced_family(n: Union[Grain, int]) -> RectFamily:
    """The N+1 hooked staircase rectangles with parameters (k, N-k)."""
    n = _coerce_n(n)
    if n < 1:
        raise ValueError("balanced family needs grain N >= 1")
    grain = Grain(n)
    return RectFamily.of(grain, [hooked_rect(grain, k, n - k) for k in range(n + 1)])


def u_count(n: int) -> int:
    """Area of the union of [0,m] x [0,k] over integers m, k >= 1 with m*k <= n.

    Column x in (i-1, i] of the union has height floor(n/i), so the area
    equals the count of lattice points (i, j) with i*j <= n.  The
    symmetric split around sqrt(n) evaluates the sum exactly in
    O(sqrt n) integer operations.
    """
    n = _coerce_n(n)
    if n < 1:
        raise ValueError("u_count needs n >= 1")
    root = math.isqrt(n)
    return 2 * sum(n // i for i in range(1, root + 1)) - root * root


def _widest_box_under_hyperbola(n: int) -> Tuple[int, Tuple[int, int]]:
    """Max of (m+1)(k+1) over dominated parameter points, with an argmax.

    Interior points satisfy m*k <= n with m, k >= 1; the degenerate axis
    strips contribute at most n + 1 and never win for n >= 1.  Blocks of
    constant floor(n/m) are scanned at their right edge; the first block
    already yields the thin tall box (1, n), which no interior point can
    beat since m + n/m is maximal at the endpoints.
    """
    best = n + 1
    arg = (n, 0)
    m = 1
    while m <= n:
        q = n // m
        m_hi = n // q
        cand = (m_hi + 1) * (q + 1)
        if cand > best:
            best, arg = cand, (m_hi, q)
        m = m_hi + 1
    return best, arg


def _hooked_union_count(n: int) -> int:
    """Lattice points dominated by the under-the-hyperbola parameter set.

    The two parameter axes contribute 2n + 1 points; the interior
    contributes exactly the u_count area.
    """
    return 2 * n + 1 + u_count(n)


def hyperbola_family(
    n: Union[Grain, int], *, inverse_n_mass: bool = False
) -> HyperbolaParts:
    """Members under the hyperbola, the forbidden set above it, weights, and mass.

    Weights are one everywhere except zero on the forbidden rectangles;
    the measure is all mass a on the corner cell, with a = 1/b_a by
    default (the box quotient on the family is then exactly one) or the
    coarser a = 1/N on request.
    """
    n = _coerce_n(n)
    if n < 2:
        raise ValueError("hyperbola family needs grain N >= 2")
    if n > FAMILY_GUARD_N:
        raise ResourceGuardError(
            f"hyperbola family materialization refuses N > {FAMILY_GUARD_N}; "
            "use scenario_hyperbola for lattice-only scans"
        )
    grain = Grain(n)
    members = [
        hooked_rect(grain, m, k)
        for m in range(1, n + 1)
        for k in range(1, n // m + 1)
    ]
    forbidden = [
        hooked_rect(grain, m, k)
        for m in range(1, n + 1)
        for k in range(1, n + 1)
        if m * k > n
    ]
    family = RectFamily.of(grain, members)
    forb = RectFamily.of(grain, forbidden)
    alpha = WeightFamily.build(grain, 1, {rect: 0 for rect in forbidden})
    b_max, _ = _widest_box_under_hyperbola(n)
    a = Fraction(1, n) if inverse_n_mass else Fraction(1, b_max)
    return HyperbolaParts(family, forb, alpha, corner_measure(grain, a))


def _all_members_hooked(fam: RectFamily) -> bool:
    return all(r.h.index == 0 and r.v.index == 0 for r in fam.members)


def _stats_lattice(fam: RectFamily) -> FamilyStats:
    n = fam.grain.n
    best_k = [-1] * (n + 1)
    for rect in fam.members:
        m, k = n - rect.h.level, n - rect.v.level
        if k > best_k[m]:
            best_k[m] = k
    # suffix maxima: a point (m, k) is dominated iff k <= max over m' >= m
    kmax = [-1] * (n + 1)
    running = -1
    for m in range(n, -1, -1):
        running = max(running, best_k[m])
        kmax[m] = running
    f_a = sum(kmax[m] + 1 for m in range(n + 1) if kmax[m] >= 0)
    b_a, arg = 0, (0, 0)
    for m in range(n + 1):
        if kmax[m] < 0:
            continue
        cand = (m + 1) * (kmax[m] + 1)
        if cand > b_a:
            b_a, arg = cand, (m, kmax[m])
    return FamilyStats(f_a, b_a, hooked_rect(fam.grain, *arg))


def _stats_exhaustive(fam: RectFamily) -> FamilyStats:
    n = fam.grain.n
    region = region_cells(fam)
    if CellId(0, 0) not in region:
        raise ValueError("family region must contain the corner anchor cell")
    f_a, b_a = 0, 0
    witness: Optional[DyadicRect] = None
    for m in range(n + 1):
        for k in range(n + 1):
            rect = hooked_rect(fam.grain, m, k)
            if all(cell in region for cell in rect_cells(rect, fam.grain)):
                f_a += 1
                count = (m + 1) * (k + 1)
                if count > b_a:
                    b_a, witness = count, rect
    assert witness is not None  # the corner cell itself always qualifies
    return FamilyStats(f_a, b_a, witness)


def family_stats(fam: RectFamily, *, method: str = "auto") -> FamilyStats:
    """Containment count f_a and maximal single-box count b_a for the corner anchor.

    Hooked families admit a pure lattice evaluation through parameter
    domination; anything else falls back to explicit cell containment
    (guarded).  Both routes agree wherever both run.
    """
    if not fam.members:
        raise ValueError("family_stats requires a nonempty family")
    if method == "auto":
        method = "lattice" if _all_members_hooked(fam) else "exhaustive"
    if method == "lattice":
        if not _all_members_hooked(fam):
            raise ValueError("lattice statistics require a hooked family")
        return _stats_lattice(fam)
    if method == "exhaustive":
        if fam.grain.n > EXHAUSTIVE_GUARD_N:
            raise ResourceGuardError(
                f"exhaustive family statistics refuse N > {EXHAUSTIVE_GUARD_N}"
            )
        return _stats_exhaustive(fam)
    raise ValueError(f"unknown method {method!r}")


def wild_alpha(fam: RectFamily) -> Tuple[WeightFamily, Measure]:
    """Weights 1/area on the members, zero elsewhere, under Lebesgue measure.

    The weighted square-sums then collapse to plain area sums: the box
    numerator at R0 is the packed area of members inside R0 and the
    Carleson numerator is the total member area.
    """
    overrides = {rect: 1 / rect.area for rect in fam.members}
    alpha = WeightFamily.build(fam.grain, 0, overrides)
    return alpha, lebesgue_measure(fam.grain)


def scenario_hyperbola(
    n: Union[Grain, int],
    *,
    inverse_n_mass: bool = False,
    method: str = "auto",
) -> ScenarioReport:
    """Assemble and measure the under-the-hyperbola construction at grain N.

    box_on_family maximizes the box quotient over the members only (it
    equals a * b_a, exactly one under the default mass choice), while
    box_on_all scans every rectangle and is reported without any claim
    of boundedness: under the corner mass it equals a * f_a, the same
    value as the Carleson quotient, and grows like log N.
    """
    n = _coerce_n(n)
    if n < 2:
        raise ValueError("scenario needs grain N >= 2")
    if method == "auto":
        method = "exhaustive" if n <= EXHAUSTIVE_GUARD_N else "lattice"
    if method == "lattice":
        if n > LATTICE_GUARD_N:
            raise ResourceGuardError(f"lattice scenario refuses N > {LATTICE_GUARD_N}")
        f_a = _hooked_union_count(n)
        b_a, arg = _widest_box_under_hyperbola(n)
        grain = Grain(n)
        a = Fraction(1, n) if inverse_n_mass else Fraction(1, b_a)
        stats = FamilyStats(f_a, b_a, hooked_rect(grain, *arg))
        return ScenarioReport(
            grain=grain,
            a=a,
            stats=stats,
            box_on_family=a * b_a,
            box_on_all=a * f_a,
            carleson=a * f_a,
            ratio_fb=f_a / b_a,
        )
    if method != "exhaustive":
        raise ValueError(f"unknown method {method!r}")
    if n > EXHAUSTIVE_GUARD_N:
        raise ResourceGuardError(f"exhaustive scenario refuses N > {EXHAUSTIVE_GUARD_N}")
    family, _, alpha, mu = hyperbola_family(n, inverse_n_mass=inverse_n_mass)
    stats = family_stats(family, method="exhaustive")
    a = mu.total()
    on_family = box_constant_over(mu, alpha, family.sorted_members())
    on_all = box_constant(mu, alpha)
    carleson = carleson_ratio(mu, alpha, family)
    return ScenarioReport(
        grain=mu.grain,
        a=a,
        stats=stats,
        box_on_family=on_family.constant,
        box_on_all=on_all.constant,
        carleson=carleson.constant,
        ratio_fb=stats.f_a / stats.b_a,
    )
