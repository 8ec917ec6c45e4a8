"""JSON and CSV codecs for the library's value types.

Rationals travel as exact "p/q" strings; floats stay floats.  CSV cells
render numbers with 12 significant digits.  Every artifact written by
the command line embeds the run configuration and the library version,
and all dict keys and row orders are fixed, so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

from .capacity import (
    BiTreeFunction,
    CapacityResult,
    ExperimentReport,
    TreeFunction,
)
from .conditions import ConditionReport, FamilyClass
from .families import FamilyStats, ScenarioReport
from .grid import (
    CellId,
    DyadicInterval,
    DyadicRect,
    Grain,
    Measure,
    RectFamily,
    WeightFamily,
    as_fraction,
)
from .hardy import DualReport


def fraction_to_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def parse_rational(raw: Union[str, int, float]) -> Fraction:
    return as_fraction(raw, "rational")


def number_to_json(value) -> Union[str, float, int]:
    """Exact rationals to "p/q", floats (and infinities) to JSON-safe values."""
    if isinstance(value, Fraction):
        return fraction_to_str(value)
    if isinstance(value, float):
        return "inf" if math.isinf(value) else value
    return value


def fmt12(value) -> str:
    """Decimal rendering with 12 significant digits for CSV cells."""
    return format(float(value), ".12g")


# --- geometry ---------------------------------------------------------------

def rect_to_json(rect: DyadicRect) -> dict:
    return {"hl": rect.h.level, "hi": rect.h.index, "vl": rect.v.level, "vi": rect.v.index}


def rect_from_json(obj: Mapping) -> DyadicRect:
    return DyadicRect(
        DyadicInterval(obj["hl"], obj["hi"]), DyadicInterval(obj["vl"], obj["vi"])
    )


def measure_to_json(mu: Measure) -> dict:
    cells = [
        {"ix": cell.ix, "iy": cell.iy, "mass": fraction_to_str(mass)}
        for cell, mass in sorted(mu.masses.items(), key=lambda kv: (kv[0].ix, kv[0].iy))
    ]
    return {"grain": mu.grain.n, "cells": cells}


def measure_from_json(obj: Mapping) -> Measure:
    cells = {
        CellId(entry["ix"], entry["iy"]): parse_rational(entry["mass"])
        for entry in obj["cells"]
    }
    return Measure.from_cells(Grain(obj["grain"]), cells)


def family_to_json(fam: RectFamily) -> dict:
    return {"grain": fam.grain.n, "rects": [rect_to_json(r) for r in fam.sorted_members()]}


def family_from_json(obj: Mapping) -> RectFamily:
    return RectFamily.of(Grain(obj["grain"]), [rect_from_json(r) for r in obj["rects"]])


def weights_to_json(alpha: WeightFamily) -> dict:
    overrides = [
        {"rect": rect_to_json(rect), "value": fraction_to_str(value)}
        for rect, value in sorted(alpha.overrides.items(), key=lambda kv: kv[0])
    ]
    return {
        "grain": alpha.grain.n,
        "default": fraction_to_str(alpha.default),
        "overrides": overrides,
    }


def weights_from_json(obj: Mapping) -> WeightFamily:
    overrides = {
        rect_from_json(entry["rect"]): parse_rational(entry["value"])
        for entry in obj["overrides"]
    }
    return WeightFamily.build(Grain(obj["grain"]), parse_rational(obj["default"]), overrides)


# --- reports ----------------------------------------------------------------

def _witness_to_json(witness) -> Optional[dict]:
    if witness is None:
        return None
    if isinstance(witness, DyadicRect):
        return {"rect": rect_to_json(witness)}
    if isinstance(witness, DyadicInterval):
        return {"interval": {"level": witness.level, "index": witness.index}}
    if isinstance(witness, RectFamily):
        return {"family": family_to_json(witness)}
    raise TypeError(f"unexpected witness type {type(witness)!r}")


def condition_report_to_json(report: ConditionReport, verbose: bool = False) -> dict:
    out = {
        "constant": number_to_json(report.constant),
        "witness": _witness_to_json(report.witness),
        "infinite": report.infinite,
    }
    if verbose and report.terms is not None:
        out["terms"] = [
            {"vertex": _witness_to_json(vertex), "contribution": number_to_json(value)}
            for vertex, value in report.terms
        ]
    return out


def family_class_to_json(cls: FamilyClass) -> dict:
    return {"pruned": cls.pruned, "cut": cls.cut, "vacuous_cut": cls.vacuous_cut}


def family_stats_to_json(stats: FamilyStats) -> dict:
    return {
        "f_a": stats.f_a,
        "b_a": stats.b_a,
        "witness_box": rect_to_json(stats.witness_box),
    }


def scenario_to_json(report: ScenarioReport) -> dict:
    return {
        "n": report.grain.n,
        "a": fraction_to_str(report.a),
        "f_a": report.stats.f_a,
        "b_a": report.stats.b_a,
        "witness_box": rect_to_json(report.stats.witness_box),
        "ratio_fb": report.ratio_fb,
        "box_on_family": fraction_to_str(report.box_on_family),
        "box_on_all": fraction_to_str(report.box_on_all),
        "carleson": fraction_to_str(report.carleson),
    }


SCAN_COLUMNS = ("n", "f_a", "b_a", "ratio_fb", "box_on_family", "box_on_all", "carleson")


def scan_rows_to_csv(rows, provenance: Sequence[str]) -> str:
    """Rows carry the SCAN_COLUMNS attributes (see the harness ScanRow type)."""
    buf = io.StringIO()
    for line in provenance:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for row in rows:
        writer.writerow(
            [
                row.n,
                row.f_a,
                row.b_a,
                fmt12(row.ratio_fb),
                fmt12(row.box_on_family),
                fmt12(row.box_on_all),
                fmt12(row.carleson),
            ]
        )
    return buf.getvalue()


def capacity_result_to_json(result: CapacityResult) -> dict:
    optimizer = result.optimizer
    if isinstance(optimizer, BiTreeFunction):
        entries = [
            {"rect": rect_to_json(rect), "value": value}
            for rect, value in sorted(optimizer.values.items())
        ]
    elif isinstance(optimizer, TreeFunction):
        entries = [
            {"interval": {"level": iv.level, "index": iv.index}, "value": value}
            for iv, value in sorted(optimizer.values.items())
        ]
    else:
        raise TypeError(f"unexpected optimizer type {type(optimizer)!r}")
    return {
        "value": result.value,
        "kkt_residual": result.kkt_residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "optimizer": entries,
    }


def dual_report_to_json(report: DualReport) -> dict:
    return {"primal": report.primal, "dual": report.dual, "gap": report.gap}


EXPERIMENT_COLUMNS = ("seed", "sample", "max_statistic", "witness")


def _rect_compact(rect: Optional[DyadicRect]) -> str:
    if rect is None:
        return ""
    return f"{rect.h.level}:{rect.h.index}:{rect.v.level}:{rect.v.index}"


def experiment_to_csv(report: ExperimentReport, provenance: Sequence[str]) -> str:
    buf = io.StringIO()
    for line in provenance:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EXPERIMENT_COLUMNS)
    for row in report.rows:
        writer.writerow(
            [report.seed, row.index, fmt12(row.statistic), _rect_compact(row.witness)]
        )
    return buf.getvalue()


def experiment_to_json(report: ExperimentReport) -> dict:
    return {
        "grain": report.grain.n,
        "samples": report.samples,
        "seed": report.seed,
        "threshold": fraction_to_str(report.threshold),
        "global_max": fraction_to_str(report.global_max),
        "global_witness": _witness_to_json(report.global_witness),
        "stat_min": report.stat_min,
        "stat_mean": report.stat_mean,
        "stat_max": report.stat_max,
        "measured_exponent": report.measured_exponent,
        "recursion_all_passed": all(r.recursion_ok for r in report.rows),
        "findings": [
            {
                "sample": row.index,
                "statistic": fraction_to_str(row.statistic),
                "witness": _witness_to_json(row.witness),
            }
            for row in report.findings
        ],
    }


# --- artifacts --------------------------------------------------------------

def wrap_artifact(version: str, config: dict, payload: dict) -> dict:
    return {"tool": "bicarleson", "version": version, "config": config, "result": payload}


def dump_json(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
