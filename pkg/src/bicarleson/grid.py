"""Dyadic geometry of the unit square at a fixed grain.

The grid at grain N splits [0,1)^2 into 4**N half-open cells of side
2**-N.  Dyadic rectangles are products of dyadic intervals with levels
between 0 and N; ordered by inclusion they form the vertex set of the
bi-tree, whose edges halve one side at a time (so a vertex can have two
parents).  Masses and weights are exact rationals throughout: the
interesting instances sit at precise thresholds and a verdict must never
flip because of floating-point rounding.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import GrainMismatchError, ResourceGuardError

Rational = Union[Fraction, int, str]

# Cell-explicit work (region unions, cell scans) refuses grains above this.
CELL_GUARD_N = 12


def as_fraction(value: Rational, what: str = "value") -> Fraction:
    """Coerce to an exact Fraction, accepting int, str 'p/q', Fraction, float."""
    try:
        return Fraction(value)
    except (TypeError, ValueError) as exc:
        raise TypeError(f"cannot interpret {what} {value!r} as a rational") from exc


def _nonnegative(value: Fraction, what: str) -> Fraction:
    if value < 0:
        raise ValueError(f"{what} must be nonnegative, got {value}")
    return value


@dataclass(frozen=True, order=True)
class Grain:
    """Grid depth N; cells have side 2**-n."""

    n: int

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 0:
            raise ValueError(f"grain must be a nonnegative integer, got {self.n!r}")

    @property
    def side(self) -> int:
        """Cells per axis, 2**n."""
        return 1 << self.n

    def guard_cells(self, limit: int = CELL_GUARD_N) -> None:
        if self.n > limit:
            raise ResourceGuardError(
                f"grain {self.n} exceeds the cell-explicit guard (N <= {limit})"
            )


def _coerce_grain(grain: Union[Grain, int]) -> Grain:
    return grain if isinstance(grain, Grain) else Grain(grain)


@dataclass(frozen=True, order=True)
class DyadicInterval:
    """Half-open dyadic interval [index * 2**-level, (index+1) * 2**-level)."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 0:
            raise ValueError(f"interval level must be >= 0, got {self.level}")
        if not 0 <= self.index < (1 << self.level):
            raise ValueError(
                f"interval index {self.index} out of range at level {self.level}"
            )

    def contains(self, other: "DyadicInterval") -> bool:
        return (
            other.level >= self.level
            and (other.index >> (other.level - self.level)) == self.index
        )

    def parent(self) -> Optional["DyadicInterval"]:
        if self.level == 0:
            return None
        return DyadicInterval(self.level - 1, self.index >> 1)

    def ancestor_chain(self) -> Iterator["DyadicInterval"]:
        """Self, parent, grandparent, ..., the root [0,1)."""
        node: Optional[DyadicInterval] = self
        while node is not None:
            yield node
            node = node.parent()

    @property
    def length(self) -> Fraction:
        return Fraction(1, 1 << self.level)


@dataclass(frozen=True, order=True)
class DyadicRect:
    """Product of a horizontal and a vertical dyadic interval."""

    h: DyadicInterval
    v: DyadicInterval

    @property
    def area(self) -> Fraction:
        return self.h.length * self.v.length


@dataclass(frozen=True, order=True)
class CellId:
    """A grid cell at levels (N, N), addressed by its column/row indices."""

    ix: int
    iy: int

    def __post_init__(self):
        if self.ix < 0 or self.iy < 0:
            raise ValueError(f"cell indices must be nonnegative: {self}")


def unit_square() -> DyadicRect:
    return DyadicRect(DyadicInterval(0, 0), DyadicInterval(0, 0))


def check_rect_grain(rect: DyadicRect, grain: Grain) -> None:
    if rect.h.level > grain.n or rect.v.level > grain.n:
        raise GrainMismatchError(
            f"rectangle levels ({rect.h.level},{rect.v.level}) exceed grain {grain.n}"
        )


def check_cell_grain(cell: CellId, grain: Grain) -> None:
    if cell.ix >= grain.side or cell.iy >= grain.side:
        raise GrainMismatchError(f"cell {cell} out of range at grain {grain.n}")


def cell_rect(grain: Union[Grain, int], cell: CellId) -> DyadicRect:
    """The level-(N, N) rectangle of a cell."""
    grain = _coerce_grain(grain)
    check_cell_grain(cell, grain)
    return DyadicRect(
        DyadicInterval(grain.n, cell.ix), DyadicInterval(grain.n, cell.iy)
    )


def hooked_rect(grain: Union[Grain, int], m: int, k: int) -> DyadicRect:
    """Corner-anchored rectangle [0, 2**(-N+m)) x [0, 2**(-N+k))."""
    grain = _coerce_grain(grain)
    if not (0 <= m <= grain.n and 0 <= k <= grain.n):
        raise ValueError(f"hooked parameters ({m},{k}) out of range at grain {grain.n}")
    return DyadicRect(DyadicInterval(grain.n - m, 0), DyadicInterval(grain.n - k, 0))


def contains(outer: DyadicRect, inner: DyadicRect) -> bool:
    """Set containment inner <= outer, decided from levels and indices."""
    return outer.h.contains(inner.h) and outer.v.contains(inner.v)


def parents(rect: DyadicRect) -> set:
    """The rectangles obtained by coarsening one side; the unit square has none."""
    out = set()
    ph = rect.h.parent()
    if ph is not None:
        out.add(DyadicRect(ph, rect.v))
    pv = rect.v.parent()
    if pv is not None:
        out.add(DyadicRect(rect.h, pv))
    return out


def children(rect: DyadicRect, grain: Union[Grain, int]) -> set:
    """Half-splits of either side, staying within the grain."""
    grain = _coerce_grain(grain)
    check_rect_grain(rect, grain)
    out = set()
    if rect.h.level < grain.n:
        for i in (2 * rect.h.index, 2 * rect.h.index + 1):
            out.add(DyadicRect(DyadicInterval(rect.h.level + 1, i), rect.v))
    if rect.v.level < grain.n:
        for i in (2 * rect.v.index, 2 * rect.v.index + 1):
            out.add(DyadicRect(rect.h, DyadicInterval(rect.v.level + 1, i)))
    return out


def ancestors(rect: DyadicRect) -> set:
    """All rectangles containing rect, itself included; (jh+1)(jv+1) of them."""
    return {
        DyadicRect(hh, vv)
        for hh in rect.h.ancestor_chain()
        for vv in rect.v.ancestor_chain()
    }


def hooked_params(rect: DyadicRect, grain: Union[Grain, int]) -> Optional[tuple]:
    """(m, k) with side lengths 2**(-N+m), 2**(-N+k), or None if not corner-anchored."""
    grain = _coerce_grain(grain)
    check_rect_grain(rect, grain)
    if rect.h.index == 0 and rect.v.index == 0:
        return (grain.n - rect.h.level, grain.n - rect.v.level)
    return None


def hooked_within(m: int, k: int, grain: Union[Grain, int]) -> int:
    """Count of hooked rectangles inside the hooked rectangle with parameters (m, k)."""
    grain = _coerce_grain(grain)
    if not (0 <= m <= grain.n and 0 <= k <= grain.n):
        raise ValueError(f"hooked parameters ({m},{k}) out of range at grain {grain.n}")
    return (m + 1) * (k + 1)


def all_rects(grain: Union[Grain, int]) -> Iterator[DyadicRect]:
    """Every dyadic rectangle at the grain, in a fixed (level, index) order."""
    grain = _coerce_grain(grain)
    for jh in range(grain.n + 1):
        for ih in range(1 << jh):
            hh = DyadicInterval(jh, ih)
            for jv in range(grain.n + 1):
                for iv in range(1 << jv):
                    yield DyadicRect(hh, DyadicInterval(jv, iv))


def total_rect_count(grain: Union[Grain, int]) -> int:
    grain = _coerce_grain(grain)
    per_axis = (1 << (grain.n + 1)) - 1
    return per_axis * per_axis


def all_cells(grain: Union[Grain, int]) -> Iterator[CellId]:
    grain = _coerce_grain(grain)
    for ix in range(grain.side):
        for iy in range(grain.side):
            yield CellId(ix, iy)


def rect_cells(rect: DyadicRect, grain: Union[Grain, int]) -> Iterator[CellId]:
    """The cells of a rectangle; callers guard the enumeration size."""
    grain = _coerce_grain(grain)
    check_rect_grain(rect, grain)
    wx = 1 << (grain.n - rect.h.level)
    wy = 1 << (grain.n - rect.v.level)
    x0 = rect.h.index * wx
    y0 = rect.v.index * wy
    for ix in range(x0, x0 + wx):
        for iy in range(y0, y0 + wy):
            yield CellId(ix, iy)


def cell_in_rect(cell: CellId, rect: DyadicRect, grain: Union[Grain, int]) -> bool:
    grain = _coerce_grain(grain)
    return (cell.ix >> (grain.n - rect.h.level)) == rect.h.index and (
        cell.iy >> (grain.n - rect.v.level)
    ) == rect.v.index


@dataclass(frozen=True)
class Measure:
    """Grained nonnegative mass assignment; absent cells carry mass zero.

    Treated as immutable after construction (the masses dict is never
    mutated by library code).
    """

    grain: Grain
    masses: Mapping[CellId, Fraction]

    @classmethod
    def from_cells(
        cls, grain: Union[Grain, int], cells: Mapping, drop_zeros: bool = True
    ) -> "Measure":
        grain = _coerce_grain(grain)
        out = {}
        for key, raw in cells.items():
            cell = key if isinstance(key, CellId) else CellId(*key)
            check_cell_grain(cell, grain)
            mass = _nonnegative(as_fraction(raw, "mass"), "mass")
            if mass or not drop_zeros:
                out[cell] = mass
        return cls(grain, out)

    def mass(self, cell: CellId) -> Fraction:
        return self.masses.get(cell, Fraction(0))

    def total(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def scaled(self, factor: Rational) -> "Measure":
        f = _nonnegative(as_fraction(factor, "factor"), "scale factor")
        return Measure(self.grain, {c: m * f for c, m in self.masses.items()})

    def transposed(self) -> "Measure":
        """Axes exchanged; useful for symmetry checks."""
        return Measure(self.grain, {CellId(c.iy, c.ix): m for c, m in self.masses.items()})


def rect_mass(mu: Measure, rect: DyadicRect) -> Fraction:
    """Sum of cell masses inside rect."""
    check_rect_grain(rect, mu.grain)
    total = Fraction(0)
    for cell, mass in mu.masses.items():
        if cell_in_rect(cell, rect, mu.grain):
            total += mass
    return total


def corner_measure(grain: Union[Grain, int], a: Rational) -> Measure:
    """All mass on the corner cell (0, 0)."""
    grain = _coerce_grain(grain)
    mass = _nonnegative(as_fraction(a, "mass"), "corner mass")
    return Measure.from_cells(grain, {CellId(0, 0): mass}, drop_zeros=True)


def lebesgue_measure(grain: Union[Grain, int]) -> Measure:
    """Uniform mass 4**-N per cell (total mass one)."""
    grain = _coerce_grain(grain)
    grain.guard_cells()
    unit = Fraction(1, grain.side * grain.side)
    return Measure(grain, {cell: unit for cell in all_cells(grain)})


@dataclass(frozen=True)
class StepFunction:
    """Cell-constant function; values default to zero off the stored support."""

    grain: Grain
    values: Mapping[CellId, Fraction]

    @classmethod
    def from_cells(cls, grain: Union[Grain, int], cells: Mapping) -> "StepFunction":
        grain = _coerce_grain(grain)
        out = {}
        for key, raw in cells.items():
            cell = key if isinstance(key, CellId) else CellId(*key)
            check_cell_grain(cell, grain)
            out[cell] = _nonnegative(as_fraction(raw, "step value"), "step value")
        return cls(grain, out)

    @classmethod
    def constant(cls, grain: Union[Grain, int], value: Rational) -> "StepFunction":
        grain = _coerce_grain(grain)
        grain.guard_cells()
        val = _nonnegative(as_fraction(value, "step value"), "step value")
        return cls(grain, {cell: val for cell in all_cells(grain)})

    def value(self, cell: CellId) -> Fraction:
        return self.values.get(cell, Fraction(0))


def integrate(phi: StepFunction, mu: Measure, rect: DyadicRect) -> Fraction:
    """Sum of phi * mass over the cells of rect."""
    if phi.grain != mu.grain:
        raise GrainMismatchError(
            f"step function grain {phi.grain.n} != measure grain {mu.grain.n}"
        )
    check_rect_grain(rect, mu.grain)
    total = Fraction(0)
    for cell, mass in mu.masses.items():
        if cell_in_rect(cell, rect, mu.grain):
            total += phi.value(cell) * mass
    return total


@dataclass(frozen=True)
class WeightFamily:
    """Per-rectangle nonnegative weight: sparse overrides over a default."""

    grain: Grain
    default: Fraction
    overrides: Mapping[DyadicRect, Fraction] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        grain: Union[Grain, int],
        default: Rational = 0,
        overrides: Optional[Mapping[DyadicRect, Rational]] = None,
    ) -> "WeightFamily":
        grain = _coerce_grain(grain)
        dflt = _nonnegative(as_fraction(default, "weight"), "default weight")
        out = {}
        for rect, raw in (overrides or {}).items():
            check_rect_grain(rect, grain)
            out[rect] = _nonnegative(as_fraction(raw, "weight"), "weight")
        return cls(grain, dflt, out)

    def value(self, rect: DyadicRect) -> Fraction:
        return self.overrides.get(rect, self.default)


def ones_weights(grain: Union[Grain, int]) -> WeightFamily:
    return WeightFamily.build(grain, 1)


@dataclass(frozen=True)
class RectFamily:
    """A finite set of rectangles; its union is the region the family induces."""

    grain: Grain
    members: frozenset

    @classmethod
    def of(cls, grain: Union[Grain, int], rects: Iterable[DyadicRect]) -> "RectFamily":
        grain = _coerce_grain(grain)
        members = frozenset(rects)
        for rect in members:
            check_rect_grain(rect, grain)
        return cls(grain, members)

    def __len__(self) -> int:
        return len(self.members)

    def sorted_members(self) -> list:
        return sorted(self.members)

    def union(self, other: "RectFamily") -> "RectFamily":
        if self.grain != other.grain:
            raise GrainMismatchError("cannot combine families at different grains")
        return RectFamily(self.grain, self.members | other.members)

    def difference(self, other: "RectFamily") -> "RectFamily":
        if self.grain != other.grain:
            raise GrainMismatchError("cannot combine families at different grains")
        return RectFamily(self.grain, self.members - other.members)


def full_family(grain: Union[Grain, int]) -> RectFamily:
    """Every rectangle at the grain (guarded)."""
    grain = _coerce_grain(grain)
    if grain.n > 8:
        raise ResourceGuardError(f"full family materialization refuses N > 8 (got {grain.n})")
    return RectFamily.of(grain, all_rects(grain))


def region_cells(fam: RectFamily) -> frozenset:
    """The exact cell set of the union of the family's members."""
    fam.grain.guard_cells()
    cells = set()
    for rect in fam.members:
        cells.update(rect_cells(rect, fam.grain))
    return frozenset(cells)
