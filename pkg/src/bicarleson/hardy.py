"""Hardy operator on the bi-tree and the dual form of the embedding.

For a vertex function psi supported on a sub-family F, the Hardy
transform at a vertex g of the full bi-tree sums psi over the ancestors
of g (inclusive) that belong to F.  Ancestry always means the full
inclusion order; F only filters which terms count, it never changes
which vertices are comparable.

The dual constant is the smallest C with

    sum over cells of (transform at the cell)^2 * mass
        <= C * sum over F of psi^2 / weight,

the operator norm of the adjoint of the embedding (substituting
psi = weight * multiplier turns the weighted primal pairing into the
plain transform, which is why the reciprocal weight appears on the
right).  For 0/1 weights the reciprocal is the weight itself on its
support, so the familiar unweighted form is a special case.  Adjoint
and primal norms are equal operators, so the two power iterations must
meet; the report returns both sides and their gap as a numerical
consistency check rather than an assumption.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Dict

import numpy as np

from .capacity import BiTreeFunction
from .conditions import DEFAULT_MAX_ITER, _embedding_from_tables, _float_cell_table
from .errors import ConvergenceError, GrainMismatchError, ResourceGuardError
from .grid import DyadicInterval, DyadicRect, Measure, RectFamily, WeightFamily
from .sweeps import (
    down_accumulate_2d,
    flat_index,
    flat_to_level_index,
    interval_count,
    level_offset,
    up_accumulate_2d,
)

HARDY_GUARD_N = 8
DUAL_GUARD_N = 5


@dataclass(frozen=True)
class DualReport:
    primal: float
    dual: float
    gap: float


def _family_mask(fam: RectFamily) -> np.ndarray:
    size = interval_count(fam.grain.n)
    mask = np.zeros((size, size), dtype=bool)
    for rect in fam.members:
        mask[
            flat_index(rect.h.level, rect.h.index), flat_index(rect.v.level, rect.v.index)
        ] = True
    return mask


def hardy_transform(
    psi: BiTreeFunction, fam: RectFamily, *, max_grain: int = HARDY_GUARD_N
) -> Dict[DyadicRect, object]:
    """Ancestor sums of psi through the family, at every vertex of the bi-tree.

    Values of psi outside the family are ignored with a warning.  Exact
    input values (ints, Fractions) stay exact.
    """
    if psi.grain != fam.grain:
        raise GrainMismatchError(
            f"function grain {psi.grain.n} != family grain {fam.grain.n}"
        )
    n = fam.grain.n
    if n > max_grain:
        raise ResourceGuardError(f"hardy transform refuses N > {max_grain} (got {n})")
    size = interval_count(n)
    table = np.zeros((size, size), dtype=object)
    ignored = 0
    for rect, value in psi.values.items():
        if rect in fam.members:
            table[
                flat_index(rect.h.level, rect.h.index),
                flat_index(rect.v.level, rect.v.index),
            ] = value
        elif value:
            ignored += 1
    if ignored:
        warnings.warn(
            f"{ignored} function value(s) outside the family were ignored",
            stacklevel=2,
        )
    summed = up_accumulate_2d(table, n)
    out: Dict[DyadicRect, object] = {}
    for fi in range(size):
        jh, ih = flat_to_level_index(fi)
        hh = DyadicInterval(jh, ih)
        for fj in range(size):
            jv, iv = flat_to_level_index(fj)
            out[DyadicRect(hh, DyadicInterval(jv, iv))] = summed[fi, fj]
    return out


def dual_constant(
    mu: Measure,
    alpha: WeightFamily,
    fam: RectFamily,
    tol: float = 1e-6,
    *,
    max_grain: int = DUAL_GUARD_N,
    max_iter: int = DEFAULT_MAX_ITER,
) -> DualReport:
    """Both sides of the dual formulation, each by its own power iteration.

    The dual side iterates transform -> multiply by mass at the cells ->
    adjoint transform -> scale by weight, the power operator of the
    reciprocally weighted quotient, restricted to the family vertices of
    positive weight (zero-weight vertices are excluded from the dual
    domain); the primal side is the embedding constant with the weight
    cut off outside the family.
    """
    if mu.grain != alpha.grain or mu.grain != fam.grain:
        raise GrainMismatchError("measure, weights and family must share one grain")
    n = mu.grain.n
    if n > max_grain:
        raise ResourceGuardError(f"dual constant refuses N > {max_grain} (got {n})")
    if tol <= 0:
        raise ValueError("tol must be positive")
    size = interval_count(n)
    lo = level_offset(n)
    side = mu.grain.side

    fam_mask = _family_mask(fam)
    weight_table = np.full((size, size), float(alpha.default))
    for rect, w in alpha.overrides.items():
        weight_table[
            flat_index(rect.h.level, rect.h.index), flat_index(rect.v.level, rect.v.index)
        ] = float(w)
    domain = fam_mask & (weight_table > 0.0)
    if not domain.any():
        raise ValueError("empty dual domain: no family vertex has positive weight")
    cell_mass = _float_cell_table(mu)

    # run both sides well past the requested gap, but not below float resolution
    inner_tol = max(min(tol * 1e-4, 1e-12), 4e-16)
    primal = _embedding_from_tables(
        cell_mass, np.where(fam_mask, weight_table, 0.0), n, inner_tol, max_iter
    )

    inverse_weight = np.zeros((size, size))
    inverse_weight[domain] = 1.0 / weight_table[domain]

    def apply_dual(psi: np.ndarray):
        transformed = up_accumulate_2d(psi, n)
        at_cells = transformed[lo : lo + side, lo : lo + side]
        weighted = cell_mass * at_cells
        back = np.zeros((size, size))
        back[lo : lo + side, lo : lo + side] = weighted
        back = down_accumulate_2d(back, n)
        out = np.where(domain, back * weight_table, 0.0)
        numerator = float(np.vdot(weighted, at_cells))
        return out, numerator

    psi = domain.astype(float)
    denom = float(np.vdot(inverse_weight[domain], psi[domain] ** 2))
    if denom == 0.0:
        return DualReport(primal, 0.0, abs(primal))
    rho_prev = -math.inf
    dual = 0.0
    for _ in range(max_iter):
        nxt, numerator = apply_dual(psi)
        rho = numerator / denom
        if rho <= 0.0:
            dual = 0.0
            break
        dual = rho
        if abs(rho - rho_prev) <= inner_tol * rho:
            break
        rho_prev = rho
        norm = math.sqrt(float(np.vdot(inverse_weight[domain], nxt[domain] ** 2)))
        if norm == 0.0:
            dual = 0.0
            break
        psi = nxt / norm
        denom = 1.0
    else:
        raise ConvergenceError(
            f"dual power iteration did not converge within {max_iter} iterations",
            best=dual,
            iterations=max_iter,
        )
    return DualReport(primal, dual, abs(primal - dual))
