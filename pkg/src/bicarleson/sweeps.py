"""Cumulative sweeps over dyadic interval tables.

A depth-D axis stores every dyadic subinterval of [0,1) with level 0..D
in one flat axis of length 2**(D+1)-1, level by level: the interval
(level j, index i) sits at flat position 2**j - 1 + i.  Rectangle tables
are indexed by a pair of such axes.  The two sweeps below convert a
pointwise table into downward (descendant-inclusive) or upward
(ancestor-inclusive) cumulative tables in one pass per level, and work
for float entries as well as exact object entries (Python ints or
Fractions).
"""

from __future__ import annotations

import numpy as np


def interval_count(depth: int) -> int:
    return (1 << (depth + 1)) - 1


def level_offset(level: int) -> int:
    return (1 << level) - 1


def flat_index(level: int, index: int) -> int:
    return level_offset(level) + index


def flat_to_level_index(flat: int) -> tuple:
    level = (flat + 1).bit_length() - 1
    return level, flat - level_offset(level)


def leaf_block(table: np.ndarray, depth: int) -> np.ndarray:
    """View of the leaf-by-leaf block (1-D slice for vectors)."""
    lo = level_offset(depth)
    hi = lo + (1 << depth)
    if table.ndim == 1:
        return table[lo:hi]
    return table[lo:hi, lo:hi]


def down_accumulate(table: np.ndarray, depth: int, axis: int = 0) -> np.ndarray:
    """Sum each vertex over its descendants (inclusive) along one axis."""
    out = table.copy()
    work = out if axis == 0 else out.T
    for level in range(depth - 1, -1, -1):
        plo = level_offset(level)
        clo = level_offset(level + 1)
        chi = clo + (1 << (level + 1))
        work[plo : plo + (1 << level)] += work[clo:chi:2] + work[clo + 1 : chi : 2]
    return out


def up_accumulate(table: np.ndarray, depth: int, axis: int = 0) -> np.ndarray:
    """Sum each vertex over its ancestors (inclusive) along one axis."""
    out = table.copy()
    work = out if axis == 0 else out.T
    for level in range(1, depth + 1):
        lo = level_offset(level)
        plo = level_offset(level - 1)
        work[lo : lo + (1 << level)] += np.repeat(
            work[plo : plo + (1 << (level - 1))], 2, axis=0
        )
    return out


def down_accumulate_2d(table: np.ndarray, depth: int) -> np.ndarray:
    return down_accumulate(down_accumulate(table, depth, axis=0), depth, axis=1)


def up_accumulate_2d(table: np.ndarray, depth: int) -> np.ndarray:
    return up_accumulate(up_accumulate(table, depth, axis=0), depth, axis=1)


def rect_table_from_cells(cell_table: np.ndarray, depth: int) -> np.ndarray:
    """Table over all rectangles whose entry is the sum of cell values inside."""
    size = interval_count(depth)
    out = np.zeros((size, size), dtype=cell_table.dtype)
    lo = level_offset(depth)
    side = 1 << depth
    out[lo : lo + side, lo : lo + side] = cell_table
    return down_accumulate_2d(out, depth)


def interval_table_from_leaves(leaf_values: np.ndarray, depth: int) -> np.ndarray:
    """1-D analogue: interval sums of leaf values."""
    out = np.zeros(interval_count(depth), dtype=leaf_values.dtype)
    lo = level_offset(depth)
    out[lo : lo + (1 << depth)] = leaf_values
    return down_accumulate(out, depth)


def cell_counts_axis(depth: int) -> np.ndarray:
    """Per-interval leaf counts 2**(depth-level), as exact Python ints."""
    out = np.empty(interval_count(depth), dtype=object)
    for level in range(depth + 1):
        lo = level_offset(level)
        out[lo : lo + (1 << level)] = 1 << (depth - level)
    return out
