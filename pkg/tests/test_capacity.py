"""Capacity programs, box-feasible sampling, and the recursion check."""

import math
from fractions import Fraction

import pytest

from bicarleson.capacity import (
    bitree_capacity,
    box_feasible_sample,
    box_to_capacity_experiment,
    capacitary_box_report,
    capacity_estimate,
    recursion_check,
    rescale_to_unit_box,
    tree_capacity,
)
from bicarleson.conditions import box_constant
from bicarleson.errors import ResourceGuardError
from bicarleson.grid import (
    CellId,
    DyadicInterval,
    DyadicRect,
    Grain,
    Measure,
    all_cells,
    corner_measure,
    hooked_rect,
    lebesgue_measure,
    ones_weights,
    rect_cells,
    unit_square,
)
from conftest import rng_for
from oracles import qp_capacity_dense, qp_tree_capacity_dense


def _feasible(result, cells, grain):
    from bicarleson.grid import ancestors, cell_rect

    worst = math.inf
    for cell in cells:
        total = sum(
            result.optimizer.value(rect) for rect in ancestors(cell_rect(grain, cell))
        )
        worst = min(worst, total)
    return worst


# --- anchors ------------------------------------------------------------------

def test_corner_cell_capacity_closed_form():
    for n in range(0, 7):
        result = bitree_capacity([CellId(0, 0)], Grain(n), 1e-10)
        assert result.converged
        assert result.value == pytest.approx(1 / (n + 1) ** 2, abs=1e-10)
        # uniform optimizer over the (n+1)^2 ancestors
        assert len(result.optimizer.values) == (n + 1) ** 2


def test_corner_cell_n1_value_quarter():
    result = bitree_capacity([CellId(0, 0)], Grain(1), 1e-10)
    assert result.value == pytest.approx(0.25, abs=1e-12)
    for value in result.optimizer.values.values():
        assert value == pytest.approx(0.25, abs=1e-12)


def test_tree_capacity_leaf_chain():
    for depth in range(0, 9):
        interval = DyadicInterval(depth, (1 << depth) - 1)
        result = tree_capacity(interval, depth, 1e-10)
        assert result.converged
        assert result.value == pytest.approx(1 / (depth + 1), abs=1e-10)


def test_full_square_target_beats_root_only_function():
    # spreading below the root is strictly better than the admissible
    # point psi(root) = 1, whose value 1 is only an upper bound
    result1 = bitree_capacity(unit_square(), Grain(1), 1e-10)
    assert result1.value == pytest.approx(4 / 9, abs=1e-9)
    assert result1.value == pytest.approx(qp_capacity_dense(list(all_cells(Grain(1))), 1), abs=1e-7)
    result2 = bitree_capacity(unit_square(), Grain(2), 1e-10)
    assert result2.value == pytest.approx(16 / 49, abs=1e-9)
    root_tree = tree_capacity(DyadicInterval(0, 0), 1, 1e-10)
    assert root_tree.value == pytest.approx(2 / 3, abs=1e-9)
    assert root_tree.value == pytest.approx(qp_tree_capacity_dense([0, 1], 1), abs=1e-7)


def test_feasibility_of_returned_optimizer():
    rng = rng_for(111)
    grain = Grain(2)
    for _ in range(10):
        count = int(rng.integers(1, 6))
        cells = {
            CellId(int(rng.integers(0, 4)), int(rng.integers(0, 4))) for _ in range(count)
        }
        result = bitree_capacity(cells, grain, 1e-9)
        assert _feasible(result, cells, grain) >= 1 - 1e-9


def test_capacity_matches_dense_oracle_on_rect_targets():
    for n in (1, 2):
        grain = Grain(n)
        from bicarleson.grid import all_rects

        for rect in all_rects(grain):
            cells = list(rect_cells(rect, grain))
            mine = bitree_capacity(rect, grain, 1e-9)
            dense = qp_capacity_dense(cells, n)
            assert mine.value == pytest.approx(dense, abs=1e-6)


def test_capacity_matches_dense_oracle_on_random_cell_sets():
    rng = rng_for(311)
    grain = Grain(2)
    for _ in range(12):
        cells = sorted(
            {
                CellId(int(rng.integers(0, 4)), int(rng.integers(0, 4)))
                for _ in range(int(rng.integers(1, 7)))
            }
        )
        mine = bitree_capacity(cells, grain, 1e-9)
        dense = qp_capacity_dense(cells, 2)
        assert mine.value == pytest.approx(dense, abs=1e-6)


def test_capacity_upper_bound_by_ancestor_count():
    for n in (1, 2, 3):
        grain = Grain(n)
        for m in range(n + 1):
            for k in range(n + 1):
                rect = hooked_rect(grain, m, k)
                anc = (n - m + 1) * (n - k + 1)
                result = bitree_capacity(rect, grain, 1e-9)
                assert result.value <= 1 / anc + 1e-8


def test_capacity_monotone_and_subadditive():
    rng = rng_for(121)
    grain = Grain(2)
    for _ in range(15):
        first = {
            CellId(int(rng.integers(0, 4)), int(rng.integers(0, 4)))
            for _ in range(int(rng.integers(1, 5)))
        }
        second = {
            CellId(int(rng.integers(0, 4)), int(rng.integers(0, 4)))
            for _ in range(int(rng.integers(1, 5)))
        }
        cap_first = bitree_capacity(first, grain, 1e-9).value
        cap_union = bitree_capacity(first | second, grain, 1e-9).value
        cap_second = bitree_capacity(second, grain, 1e-9).value
        assert cap_first <= cap_union + 1e-9 + 1e-12
        assert cap_union <= cap_first + cap_second + 1e-9 + 1e-12


def test_capacity_guards_and_validation():
    with pytest.raises(ResourceGuardError):
        bitree_capacity([CellId(0, 0)], Grain(7), 1e-8)
    with pytest.raises(ResourceGuardError):
        tree_capacity(DyadicInterval(0, 0), 15, 1e-8)
    with pytest.raises(ValueError):
        bitree_capacity([], Grain(2), 1e-8)
    with pytest.raises(ValueError):
        bitree_capacity([CellId(0, 0)], Grain(2), 0.0)


# --- closed-form estimate -------------------------------------------------------

def test_capacity_estimate_values():
    eighth = DyadicRect(DyadicInterval(3, 0), DyadicInterval(3, 5))
    assert capacity_estimate(eighth) == Fraction(1, 9)
    mixed = DyadicRect(DyadicInterval(1, 0), DyadicInterval(2, 1))
    assert capacity_estimate(mixed) == Fraction(1, 2)
    full_side = DyadicRect(DyadicInterval(0, 0), DyadicInterval(2, 0))
    assert capacity_estimate(full_side) == math.inf


# --- capacitary box report ------------------------------------------------------

def test_capacitary_report_corner_normalized():
    for n in (1, 2, 3, 4):
        mu = corner_measure(Grain(n), Fraction(1, (n + 1) ** 2))
        report = capacitary_box_report(mu)
        assert report.worst == 1
        assert report.witness == hooked_rect(Grain(n), 0, 0)


def test_capacitary_report_zero_measure():
    report = capacitary_box_report(Measure.from_cells(Grain(2), {}))
    assert report.worst == 0
    assert report.witness is None


def test_capacitary_report_lebesgue_n2():
    report = capacitary_box_report(lebesgue_measure(Grain(2)))
    corner = hooked_rect(Grain(2), 0, 0)
    from bicarleson.grid import rect_mass

    assert rect_mass(lebesgue_measure(Grain(2)), corner) * 9 == Fraction(9, 16)
    assert report.worst >= Fraction(9, 16)


# --- box-feasible samples -------------------------------------------------------

def test_box_feasible_sample_normalized_exactly():
    for seed in (0, 1, 7):
        mu = box_feasible_sample(Grain(3), seed, 0.4)
        assert box_constant(mu, ones_weights(Grain(3))).constant == 1


def test_box_feasible_sample_deterministic():
    a = box_feasible_sample(Grain(3), 42, 0.3)
    b = box_feasible_sample(Grain(3), 42, 0.3)
    assert a.masses == b.masses
    c = box_feasible_sample(Grain(3), 43, 0.3)
    assert a.masses != c.masses


def test_rescale_corner_only():
    for n in (2, 3, 4):
        mu = rescale_to_unit_box(corner_measure(Grain(n), Fraction(3, 7)))
        assert mu.mass(CellId(0, 0)) == Fraction(1, (n + 1) ** 2)


# --- recursion check ------------------------------------------------------------

def test_recursion_check_passes_for_samples():
    for seed in range(5):
        mu = box_feasible_sample(Grain(4), (1000, seed), 0.3)
        report = recursion_check(mu)
        assert report.passed
        assert report.tightest_slack >= 0


def test_recursion_check_corner_binding():
    n = 3
    mu = corner_measure(Grain(n), Fraction(1, (n + 1) ** 2))
    report = recursion_check(mu)
    assert report.passed
    assert report.tightest_slack == 0
    assert report.witness == unit_square()


def test_recursion_check_zero_measure():
    report = recursion_check(Measure.from_cells(Grain(2), {}))
    assert report.passed
    assert report.tightest_slack == math.inf


def test_recursion_check_validates_precondition():
    with pytest.raises(ValueError):
        recursion_check(corner_measure(Grain(2), 1))


# --- experiment ------------------------------------------------------------------

def test_experiment_shape_and_determinism():
    report = box_to_capacity_experiment(4, 12, 2024, sparsity=0.3)
    assert len(report.rows) == 12
    assert all(row.recursion_ok for row in report.rows)
    assert report.global_max == max(row.statistic for row in report.rows)
    assert report.stat_min <= report.stat_mean <= report.stat_max
    again = box_to_capacity_experiment(4, 12, 2024, sparsity=0.3)
    assert [r.statistic for r in report.rows] == [r.statistic for r in again.rows]


def test_experiment_statistic_axis_symmetric():
    # transposing a measure leaves the statistic unchanged
    for seed in range(4):
        mu = box_feasible_sample(Grain(3), (2, seed), 0.4)
        direct = capacitary_box_report(mu)
        flipped = capacitary_box_report(mu.transposed())
        assert direct.worst == flipped.worst


def test_experiment_findings_threshold():
    report = box_to_capacity_experiment(3, 5, 7, sparsity=0.4, threshold=0)
    assert report.findings  # every positive statistic exceeds a zero threshold
    calm = box_to_capacity_experiment(3, 5, 7, sparsity=0.4, threshold=16)
    assert not calm.findings


def test_experiment_measured_exponent_present():
    report = box_to_capacity_experiment(3, 10, 11, sparsity=0.5)
    assert report.measured_exponent is not None
    # masses shrink as ancestor counts grow
    assert report.measured_exponent < 0
