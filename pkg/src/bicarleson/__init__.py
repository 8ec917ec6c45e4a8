"""Box and Carleson condition measurements on dyadic bi-trees.

The package measures, at desk scale and with exact rational arithmetic
wherever a verdict depends on it:

* box constants and Carleson quotients of two-weight square sums over
  dyadic rectangles (``conditions``),
* the extremal embedding constant and its dual Hardy-operator form
  (``conditions``, ``hardy``),
* extremal rectangle families, their containment statistics, and the
  under-the-hyperbola scenario whose Carleson quotient outgrows its box
  constant (``families``),
* bi-tree and simple-tree capacities as convex quadratic programs, with
  box-feasibility experiments (``capacity``).

The ``bicarleson`` command line exposes generation, checking, scanning
and experiment runs with reproducible CSV/JSON artifacts.
"""

__version__ = "0.1.0"

from .capacity import (
    BiTreeFunction,
    CapacitaryBoxReport,
    CapacityResult,
    ExperimentReport,
    TreeFunction,
    bitree_capacity,
    box_feasible_sample,
    box_to_capacity_experiment,
    capacitary_box_report,
    capacity_estimate,
    recursion_check,
    rescale_to_unit_box,
    tree_capacity,
)
from .conditions import (
    ConditionReport,
    FamilyClass,
    box_constant,
    box_constant_over,
    carleson_ratio,
    classify_family,
    embedding_constant,
    tree_box_constant,
    tree_embedding_constant,
    worst_carleson_region,
)
from .errors import ConvergenceError, GrainMismatchError, ResourceGuardError
from .families import (
    FamilyStats,
    HyperbolaParts,
    ScenarioReport,
    balanced_family,
    family_stats,
    hyperbola_family,
    scenario_hyperbola,
    u_count,
    wild_alpha,
)
from .grid import (
    CellId,
    DyadicInterval,
    DyadicRect,
    Grain,
    Measure,
    RectFamily,
    StepFunction,
    WeightFamily,
    ancestors,
    contains,
    corner_measure,
    full_family,
    hooked_params,
    hooked_rect,
    hooked_within,
    integrate,
    lebesgue_measure,
    ones_weights,
    parents,
    rect_mass,
    region_cells,
    unit_square,
)
from .hardy import DualReport, dual_constant, hardy_transform
from .tree import TreeMeasure, TreeWeights, interval_mass, ones_tree_weights

__all__ = [name for name in dir() if not name.startswith("_")]
