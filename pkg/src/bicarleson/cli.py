"""Command-line harness: generation, checks, scans, and experiment runs.

Every command normalizes its parameters into a RunConfig that is
embedded, together with the library version, in all artifacts it
writes, so a result file always says how it was produced.  Runs are
deterministic: repeating the same configuration (seed and output paths
included) rewrites byte-identical CSV and JSON.

Exit codes: 0 success, 1 bad input, 2 usage error, 3 resource guard
violation, 4 solver non-convergence, 5 a condition-violation finding
was emitted.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from . import __version__
from .capacity import bitree_capacity, box_to_capacity_experiment, tree_capacity
from .conditions import (
    BOX_GUARD_N,
    SPECTRAL_GUARD_N,
    box_constant,
    carleson_ratio,
    classify_family,
    embedding_constant,
)
from .errors import ConvergenceError, ResourceGuardError
from .families import (
    LATTICE_GUARD_N,
    ScenarioReport,
    balanced_family,
    family_stats,
    hyperbola_family,
    scenario_hyperbola,
)
from .grid import CellId, DyadicInterval, DyadicRect, Grain
from .hardy import dual_constant
from . import serialize

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_GUARD = 3
EXIT_NONCONVERGENCE = 4
EXIT_FINDING = 5

GUARDS = {
    "exhaustive_max_n": BOX_GUARD_N,
    "spectral_max_n": SPECTRAL_GUARD_N,
    "lattice_max_n": LATTICE_GUARD_N,
}


@dataclass(frozen=True)
class RunConfig:
    """Command name plus every parameter, guard, and output destination."""

    command: str
    options: Dict[str, object] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "guards": GUARDS,
            "options": dict(sorted(self.options.items())),
        }

    def get(self, key: str, default=None):
        return self.options.get(key, default)


@dataclass(frozen=True)
class ScanRow:
    """One grain's scenario measurements; column order is the CSV order."""

    n: int
    f_a: int
    b_a: int
    ratio_fb: float
    box_on_family: Fraction
    box_on_all: Fraction
    carleson: Fraction

    @classmethod
    def from_report(cls, report: ScenarioReport) -> "ScanRow":
        return cls(
            n=report.grain.n,
            f_a=report.stats.f_a,
            b_a=report.stats.b_a,
            ratio_fb=report.ratio_fb,
            box_on_family=report.box_on_family,
            box_on_all=report.box_on_all,
            carleson=report.carleson,
        )


@dataclass
class RunResult:
    exit_code: int
    artifacts: Dict[str, str] = field(default_factory=dict)


def _parse_n_list(raw: str) -> List[int]:
    try:
        values = [int(part) for part in raw.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad grain list {raw!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("empty grain list")
    return values


def _parse_pair(raw: str) -> Tuple[int, int]:
    parts = raw.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected 'a,b', got {raw!r}")
    return int(parts[0]), int(parts[1])


def _parse_rect(raw: str) -> Tuple[int, int, int, int]:
    parts = raw.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(f"rect must be 'hl,hi,vl,vi', got {raw!r}")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _usage(message: str) -> "SystemExit":
    print(f"usage error: {message}", file=sys.stderr)
    return SystemExit(EXIT_USAGE)


def _load_json(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _provenance(config: RunConfig) -> List[str]:
    return [
        f"bicarleson {__version__}",
        "config " + json.dumps(config.to_json(), sort_keys=True),
    ]


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _emit_json(config: RunConfig, payload: dict, path: Optional[str]) -> None:
    text = serialize.dump_json(
        serialize.wrap_artifact(__version__, config.to_json(), payload)
    )
    if path:
        _write_text(path, text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bicarleson",
        description="Box, Carleson and embedding measurements on dyadic bi-trees",
    )
    parser.add_argument("--version", action="version", version=f"bicarleson {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a rectangle family")
    gen.add_argument("kind", choices=["balanced", "hyperbola"])
    gen.add_argument("--n", type=int, required=True, help="grid depth")
    gen.add_argument("--paper-a", action="store_true",
                     help="use corner mass 1/N instead of the exact 1/b_a")
    gen.add_argument("--json", help="output path (stdout when omitted)")

    stats = sub.add_parser("stats", help="containment statistics of a family")
    stats.add_argument("--family", required=True, help="family JSON path")
    stats.add_argument("--json", help="output path")

    check = sub.add_parser("check", help="evaluate a box or Carleson condition")
    check.add_argument("kind", choices=["box", "carleson"])
    check.add_argument("--measure", required=True, help="measure JSON path")
    check.add_argument("--alpha", required=True, help="weights JSON path")
    check.add_argument("--family", help="family JSON path (carleson only)")
    check.add_argument("--verbose", action="store_true", help="itemize the witness terms")
    check.add_argument("--json", help="output path")

    embed = sub.add_parser("embed", help="two-parameter embedding constant")
    embed.add_argument("--measure", required=True)
    embed.add_argument("--alpha", required=True)
    embed.add_argument("--tol", type=float, default=1e-9)
    embed.add_argument("--json", help="output path")

    dual = sub.add_parser("dual", help="primal and dual embedding constants")
    dual.add_argument("--measure", required=True)
    dual.add_argument("--alpha", required=True)
    dual.add_argument("--family", required=True)
    dual.add_argument("--tol", type=float, default=1e-6)
    dual.add_argument("--json", help="output path")

    cap = sub.add_parser("capacity", help="bi-tree or tree capacity of a target")
    cap.add_argument("--n", type=int, help="grid depth for bi-tree targets")
    cap.add_argument("--cell", type=_parse_pair, help="bi-tree cell target 'ix,iy'")
    cap.add_argument("--rect", type=_parse_rect, help="bi-tree rectangle target 'hl,hi,vl,vi'")
    cap.add_argument("--tree-depth", type=int, help="simple-tree depth")
    cap.add_argument("--interval", type=_parse_pair, help="tree interval target 'level,index'")
    cap.add_argument("--tol", type=float, default=1e-8)
    cap.add_argument("--json", help="output path")

    exp = sub.add_parser("experiment", help="box-feasible capacitary statistics")
    exp.add_argument("--n", type=int, required=True)
    exp.add_argument("--samples", type=int, required=True)
    exp.add_argument("--seed", type=int, required=True)
    exp.add_argument("--sparsity", type=float, default=0.25)
    exp.add_argument("--threshold", type=float, default=16.0)
    exp.add_argument("--csv", help="per-sample CSV path")
    exp.add_argument("--json", help="summary JSON path")
    exp.add_argument("--plot", help="histogram PNG path")

    scan = sub.add_parser("scan", help="scenario measurements over several grains")
    scan.add_argument("kind", choices=["hyperbola"])
    scan.add_argument("--n", type=_parse_n_list, help="comma-separated grain list")
    scan.add_argument("--n-list", type=_parse_n_list, dest="n_list", help="alias for --n")
    scan.add_argument("--paper-a", action="store_true",
                      help="use corner mass 1/N instead of the exact 1/b_a")
    scan.add_argument("--csv", help="row CSV path")
    scan.add_argument("--json", help="row JSON path")
    scan.add_argument("--plot", help="quotient-vs-grain PNG path")

    cls = sub.add_parser("classify", help="pruned/cut classification of a family")
    cls.add_argument("--family", required=True)
    cls.add_argument("--json", help="output path")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    options = {
        key: value for key, value in vars(args).items() if key != "command"
    }
    if args.command == "scan":
        merged = options.pop("n") or options.pop("n_list")
        options.pop("n_list", None)
        options.pop("n", None)
        if not merged:
            raise _usage("scan requires --n or --n-list")
        options["n_list"] = list(merged)
    return RunConfig(args.command, options)


# --- command bodies ---------------------------------------------------------

def _cmd_gen(config: RunConfig) -> RunResult:
    if config.get("kind") == "balanced":
        payload = {"family": serialize.family_to_json(balanced_family(config.get("n")))}
    else:
        parts = hyperbola_family(config.get("n"), inverse_n_mass=bool(config.get("paper_a")))
        payload = {
            "family": serialize.family_to_json(parts.family),
            "forbidden": serialize.family_to_json(parts.forbidden),
            "alpha": serialize.weights_to_json(parts.alpha),
            "measure": serialize.measure_to_json(parts.mu),
        }
    _emit_json(config, payload, config.get("json"))
    return RunResult(EXIT_OK)


def _cmd_stats(config: RunConfig) -> RunResult:
    fam = serialize.family_from_json(_load_json(config.get("family")))
    payload = serialize.family_stats_to_json(family_stats(fam))
    _emit_json(config, payload, config.get("json"))
    return RunResult(EXIT_OK)


def _cmd_check(config: RunConfig) -> RunResult:
    if config.get("kind") == "carleson" and not config.get("family"):
        raise _usage("check carleson requires --family")
    mu = serialize.measure_from_json(_load_json(config.get("measure")))
    alpha = serialize.weights_from_json(_load_json(config.get("alpha")))
    verbose = bool(config.get("verbose"))
    if config.get("kind") == "box":
        report = box_constant(mu, alpha, itemize=verbose)
    else:
        fam = serialize.family_from_json(_load_json(config.get("family")))
        report = carleson_ratio(mu, alpha, fam, itemize=verbose)
    payload = serialize.condition_report_to_json(report, verbose=verbose)
    _emit_json(config, payload, config.get("json"))
    return RunResult(EXIT_OK)


def _cmd_embed(config: RunConfig) -> RunResult:
    mu = serialize.measure_from_json(_load_json(config.get("measure")))
    alpha = serialize.weights_from_json(_load_json(config.get("alpha")))
    constant = embedding_constant(mu, alpha, config.get("tol"))
    _emit_json(config, {"constant": constant}, config.get("json"))
    return RunResult(EXIT_OK)


def _cmd_dual(config: RunConfig) -> RunResult:
    mu = serialize.measure_from_json(_load_json(config.get("measure")))
    alpha = serialize.weights_from_json(_load_json(config.get("alpha")))
    fam = serialize.family_from_json(_load_json(config.get("family")))
    tol = config.get("tol")
    report = dual_constant(mu, alpha, fam, tol)
    payload = serialize.dual_report_to_json(report)
    exceeded = report.gap > tol * max(1.0, report.primal)
    if exceeded:
        payload["finding"] = "primal-dual gap exceeds tolerance"
    _emit_json(config, payload, config.get("json"))
    return RunResult(EXIT_FINDING if exceeded else EXIT_OK)


def _cmd_capacity(config: RunConfig) -> RunResult:
    tol = config.get("tol")
    if config.get("tree_depth") is not None:
        if config.get("interval") is None:
            raise _usage("tree capacity requires --interval 'level,index'")
        level, index = config.get("interval")
        result = tree_capacity(DyadicInterval(level, index), config.get("tree_depth"), tol)
    else:
        if config.get("n") is None:
            raise _usage("bi-tree capacity requires --n")
        grain = Grain(config.get("n"))
        if config.get("cell") is not None:
            ix, iy = config.get("cell")
            target = [CellId(ix, iy)]
        elif config.get("rect") is not None:
            hl, hi, vl, vi = config.get("rect")
            target = DyadicRect(DyadicInterval(hl, hi), DyadicInterval(vl, vi))
        else:
            raise _usage("bi-tree capacity requires --cell or --rect")
        result = bitree_capacity(target, grain, tol)
    payload = serialize.capacity_result_to_json(result)
    _emit_json(config, payload, config.get("json"))
    return RunResult(EXIT_OK if result.converged else EXIT_NONCONVERGENCE)


def _cmd_experiment(config: RunConfig) -> RunResult:
    report = box_to_capacity_experiment(
        config.get("n"),
        config.get("samples"),
        config.get("seed"),
        sparsity=config.get("sparsity"),
        threshold=config.get("threshold"),
    )
    artifacts: Dict[str, str] = {}
    if config.get("csv"):
        _write_text(config.get("csv"), serialize.experiment_to_csv(report, _provenance(config)))
        artifacts["csv"] = config.get("csv")
    _emit_json(config, serialize.experiment_to_json(report), config.get("json"))
    if config.get("plot"):
        from .figures import render_experiment_figure

        render_experiment_figure(report, config.get("plot"))
        artifacts["plot"] = config.get("plot")
    return RunResult(EXIT_FINDING if report.findings else EXIT_OK, artifacts)


def _cmd_scan(config: RunConfig) -> RunResult:
    reports = [
        scenario_hyperbola(n, inverse_n_mass=bool(config.get("paper_a")))
        for n in config.get("n_list")
    ]
    rows = [ScanRow.from_report(rep) for rep in reports]
    artifacts: Dict[str, str] = {}
    if config.get("csv"):
        _write_text(config.get("csv"), serialize.scan_rows_to_csv(rows, _provenance(config)))
        artifacts["csv"] = config.get("csv")
    payload = {"rows": [serialize.scenario_to_json(rep) for rep in reports]}
    _emit_json(config, payload, config.get("json"))
    if config.get("plot"):
        from .figures import render_scan_figure

        render_scan_figure(reports, config.get("plot"))
        artifacts["plot"] = config.get("plot")
    return RunResult(EXIT_OK, artifacts)


def _cmd_classify(config: RunConfig) -> RunResult:
    fam = serialize.family_from_json(_load_json(config.get("family")))
    payload = serialize.family_class_to_json(classify_family(fam))
    _emit_json(config, payload, config.get("json"))
    return RunResult(EXIT_OK)


_HANDLERS = {
    "gen": _cmd_gen,
    "stats": _cmd_stats,
    "check": _cmd_check,
    "embed": _cmd_embed,
    "dual": _cmd_dual,
    "capacity": _cmd_capacity,
    "experiment": _cmd_experiment,
    "scan": _cmd_scan,
    "classify": _cmd_classify,
}


def run(config: RunConfig) -> RunResult:
    """Execute a configuration, mapping failures to the documented exit codes."""
    handler = _HANDLERS[config.command]
    try:
        return handler(config)
    except ResourceGuardError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return RunResult(EXIT_GUARD)
    except ConvergenceError as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return RunResult(EXIT_NONCONVERGENCE)
    except (OSError, json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RunResult(EXIT_ERROR)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return run(config_from_args(args)).exit_code


if __name__ == "__main__":
    sys.exit(main())
