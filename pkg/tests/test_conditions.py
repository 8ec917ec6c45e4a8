"""Box, Carleson, embedding and classification checks against oracles."""

from fractions import Fraction

import pytest

from bicarleson.conditions import (
    box_constant,
    box_constant_over,
    carleson_ratio,
    classify_family,
    embedding_constant,
    tree_box_constant,
    tree_embedding_constant,
    worst_carleson_region,
)
from bicarleson.errors import GrainMismatchError, ResourceGuardError
from bicarleson.families import hyperbola_family
from bicarleson.grid import (
    DyadicInterval,
    Grain,
    Measure,
    RectFamily,
    WeightFamily,
    all_rects,
    corner_measure,
    full_family,
    lebesgue_measure,
    ones_weights,
    unit_square,
)
from bicarleson.tree import TreeMeasure, TreeWeights, ones_tree_weights
from conftest import (
    random_family,
    random_measure,
    random_tree_measure,
    random_tree_weights,
    random_weights,
    rng_for,
)
from oracles import (
    box_constant_bruteforce,
    carleson_bruteforce,
    embedding_dense,
    tree_embedding_dense,
)

Q = unit_square()


# --- box condition ----------------------------------------------------------

def test_box_corner_unit_mass():
    report = box_constant(corner_measure(Grain(1), 1), ones_weights(Grain(1)))
    assert report.constant == 4
    assert report.witness == Q
    assert not report.infinite


def test_box_zero_weights():
    report = box_constant(random_measure(rng_for(1), Grain(2)), WeightFamily.build(Grain(2), 0))
    assert report.constant == 0


def test_box_lebesgue_n1():
    report = box_constant(lebesgue_measure(Grain(1)), ones_weights(Grain(1)))
    assert report.constant == Fraction(9, 4)
    assert report.witness == Q


def test_box_matches_bruteforce_on_random_instances():
    for seed in range(8):
        rng = rng_for(100, seed)
        grain = Grain(int(rng.integers(0, 3)))
        mu = random_measure(rng, grain)
        alpha = random_weights(rng, grain)
        expected, witnesses = box_constant_bruteforce(mu, alpha)
        report = box_constant(mu, alpha)
        assert report.constant == expected
        if expected > 0:
            assert report.witness in witnesses


def test_box_itemized_terms_sum_to_numerator():
    grain = Grain(2)
    mu = random_measure(rng_for(7), grain)
    alpha = ones_weights(grain)
    report = box_constant(mu, alpha, itemize=True)
    from oracles import mass_of

    total = sum((contrib for _, contrib in report.terms), Fraction(0))
    assert total == report.constant * mass_of(mu, report.witness)


def test_constants_scale_linearly_with_measure():
    grain = Grain(2)
    mu = random_measure(rng_for(9), grain)
    alpha = random_weights(rng_for(10), grain)
    scaled = mu.scaled(Fraction(3, 2))
    base = box_constant(mu, alpha).constant
    assert box_constant(scaled, alpha).constant == base * Fraction(3, 2)
    fam = random_family(rng_for(11), grain, anchor_support=next(iter(mu.masses)))
    ratio = carleson_ratio(mu, alpha, fam).constant
    assert carleson_ratio(scaled, alpha, fam).constant == ratio * Fraction(3, 2)
    embed = embedding_constant(mu, alpha, 1e-12)
    assert embedding_constant(scaled, alpha, 1e-12) == pytest.approx(
        embed * 1.5, rel=1e-9, abs=1e-12
    )


def test_constants_monotone_in_weights():
    grain = Grain(2)
    mu = random_measure(rng_for(12), grain)
    alpha = random_weights(rng_for(13), grain)
    bigger = WeightFamily.build(
        grain, alpha.default + 1, {r: w + 1 for r, w in alpha.overrides.items()}
    )
    assert box_constant(mu, alpha).constant <= box_constant(mu, bigger).constant
    fam = random_family(rng_for(14), grain, anchor_support=next(iter(mu.masses)))
    assert (
        carleson_ratio(mu, alpha, fam).constant
        <= carleson_ratio(mu, bigger, fam).constant
    )
    assert embedding_constant(mu, alpha, 1e-12) <= embedding_constant(
        mu, bigger, 1e-12
    ) + 1e-9


def test_box_guard():
    with pytest.raises(ResourceGuardError):
        box_constant(corner_measure(Grain(9), 1), ones_weights(Grain(9)))


# --- carleson ratio ----------------------------------------------------------

def test_carleson_on_unit_square_equals_box_at_q():
    grain = Grain(2)
    mu = random_measure(rng_for(21), grain)
    alpha = random_weights(rng_for(22), grain)
    fam = RectFamily.of(grain, [Q])
    ratio = carleson_ratio(mu, alpha, fam)
    box = box_constant_over(mu, alpha, [Q])
    assert ratio.constant == box.constant


def test_carleson_hyperbola_n4():
    family, _, alpha, mu = hyperbola_family(4)
    report = carleson_ratio(mu, alpha, family)
    assert report.constant == Fraction(17, 10)


def test_carleson_zero_measure_degenerate_flag():
    grain = Grain(1)
    mu = Measure.from_cells(grain, {})
    fam = RectFamily.of(grain, [Q])
    report = carleson_ratio(mu, ones_weights(grain), fam)
    assert report.infinite
    assert report.constant == 0
    silent = carleson_ratio(mu, WeightFamily.build(grain, 0), fam)
    assert not silent.infinite


def test_carleson_matches_bruteforce():
    for seed in range(8):
        rng = rng_for(200, seed)
        grain = Grain(int(rng.integers(1, 3)))
        mu = random_measure(rng, grain)
        alpha = random_weights(rng, grain)
        fam = random_family(rng, grain, anchor_support=next(iter(mu.masses)))
        numer, denom = carleson_bruteforce(mu, alpha, fam)
        report = carleson_ratio(mu, alpha, fam)
        assert denom > 0
        assert report.constant == numer / denom


def test_box_is_sup_of_singleton_carleson():
    grain = Grain(2)
    mu = random_measure(rng_for(31), grain)
    alpha = random_weights(rng_for(32), grain)
    best = Fraction(0)
    from oracles import mass_of

    for rect in all_rects(grain):
        if mass_of(mu, rect) == 0:
            continue
        ratio = carleson_ratio(mu, alpha, RectFamily.of(grain, [rect]))
        best = max(best, ratio.constant)
    assert best == box_constant(mu, alpha).constant


def test_carleson_rejects_empty_family():
    grain = Grain(1)
    with pytest.raises(ValueError):
        carleson_ratio(
            corner_measure(grain, 1), ones_weights(grain), RectFamily.of(grain, [])
        )


def test_worst_region_dominates_all_families():
    rng = rng_for(41)
    grain = Grain(1)
    mu = random_measure(rng, grain, density=0.8)
    alpha = random_weights(rng, grain)
    worst = worst_carleson_region(mu, alpha)
    for _ in range(20):
        fam = random_family(rng, grain, anchor_support=next(iter(mu.masses)))
        assert carleson_ratio(mu, alpha, fam).constant <= worst.constant
    # the worst region is itself attained by a family of cells
    assert worst.witness is not None
    attained = carleson_ratio(mu, alpha, worst.witness)
    assert attained.constant == worst.constant


# --- embedding constant -------------------------------------------------------

def test_embedding_single_cell_identity():
    mu = Measure.from_cells(Grain(0), {(0, 0): 1})
    assert embedding_constant(mu, ones_weights(Grain(0)), 1e-12) == pytest.approx(1.0)


def test_embedding_corner_exact():
    for n in (1, 2, 3, 4):
        a = Fraction(1, 10)
        value = embedding_constant(corner_measure(Grain(n), a), ones_weights(Grain(n)), 1e-12)
        assert value == pytest.approx(float(a * (n + 1) ** 2), abs=1e-12)


def test_embedding_matches_dense_oracle():
    value = embedding_constant(lebesgue_measure(Grain(1)), ones_weights(Grain(1)), 1e-13)
    dense = embedding_dense(lebesgue_measure(Grain(1)), ones_weights(Grain(1)))
    assert value >= Fraction(9, 4) - Fraction(1, 10**9)
    assert value == pytest.approx(dense, rel=1e-9)
    for seed in range(6):
        rng = rng_for(300, seed)
        grain = Grain(int(rng.integers(1, 3)))
        mu = random_measure(rng, grain)
        alpha = random_weights(rng, grain)
        value = embedding_constant(mu, alpha, 1e-13)
        assert value == pytest.approx(embedding_dense(mu, alpha), rel=1e-8, abs=1e-12)


def test_embedding_guard_and_tol_validation():
    with pytest.raises(ResourceGuardError):
        embedding_constant(corner_measure(Grain(7), 1), ones_weights(Grain(7)))
    with pytest.raises(ValueError):
        embedding_constant(corner_measure(Grain(1), 1), ones_weights(Grain(1)), 0.0)


# --- one-parameter analogues --------------------------------------------------

def test_tree_box_point_mass():
    mu = TreeMeasure.from_leaves(1, {0: Fraction(1, 3)})
    report = tree_box_constant(mu, ones_tree_weights(1))
    assert report.constant == Fraction(2, 3)
    assert report.witness == DyadicInterval(0, 0)


def test_tree_box_zero_weights():
    mu = random_tree_measure(rng_for(51), 3)
    assert tree_box_constant(mu, TreeWeights.build(3, 0)).constant == 0


def test_tree_box_uniform_depth1():
    mu = TreeMeasure.from_leaves(1, {0: Fraction(1, 2), 1: Fraction(1, 2)})
    report = tree_box_constant(mu, ones_tree_weights(1))
    assert report.constant == Fraction(3, 2)
    assert report.witness == DyadicInterval(0, 0)


def test_tree_embedding_point_mass_equals_box():
    mu = TreeMeasure.from_leaves(1, {0: Fraction(1, 3)})
    value = tree_embedding_constant(mu, ones_tree_weights(1), 1e-12)
    assert value == pytest.approx(2 / 3, abs=1e-12)


def test_tree_embedding_dominates_box_and_matches_dense():
    for seed in range(10):
        rng = rng_for(400, seed)
        depth = int(rng.integers(1, 5))
        mu = random_tree_measure(rng, depth)
        alpha = random_tree_weights(rng, depth)
        value = tree_embedding_constant(mu, alpha, 1e-13)
        box = tree_box_constant(mu, alpha).constant
        assert value >= float(box) - 1e-9
        assert value == pytest.approx(tree_embedding_dense(mu, alpha), rel=1e-8, abs=1e-12)


# --- classification -----------------------------------------------------------

def test_classify_without_hyperbola_forbidden_set():
    for n in (2, 3):
        parts = hyperbola_family(n)
        fam = full_family(n).difference(parts.forbidden)
        verdict = classify_family(fam)
        assert verdict.pruned
        assert verdict.cut
        assert not verdict.vacuous_cut


def test_classify_root_only_not_pruned():
    verdict = classify_family(RectFamily.of(Grain(1), [Q]))
    assert not verdict.pruned


def test_classify_full_family_vacuous():
    verdict = classify_family(full_family(2))
    assert verdict.pruned and verdict.cut and verdict.vacuous_cut


def test_classify_cut_iff_members_closed_under_children():
    rng = rng_for(61)
    grain = Grain(2)
    for _ in range(20):
        fam = random_family(rng, grain, max_size=6)
        verdict = classify_family(fam)
        from bicarleson.grid import children

        closed = all(
            child in fam.members for rect in fam.members for child in children(rect, grain)
        )
        assert verdict.cut == closed


def test_grain_mismatch_between_measure_and_weights():
    with pytest.raises(GrainMismatchError):
        box_constant(corner_measure(Grain(2), 1), ones_weights(Grain(3)))
