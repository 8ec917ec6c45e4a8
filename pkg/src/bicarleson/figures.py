"""Figure rendering for scan and experiment reports.

Figures are a convenience companion to the delimited artifacts: the CSV
stays the canonical, byte-reproducible output, the PNG next to it is
for eyeballs.  Rendering goes through matplotlib's object API so no
global backend state is touched.
"""

from __future__ import annotations

import math
from typing import Sequence

from .capacity import ExperimentReport
from .families import ScenarioReport


def render_scan_figure(reports: Sequence[ScenarioReport], path: str) -> None:
    """Unbalancedness quotient against grain, with the 0.2 ln N floor."""
    from matplotlib.figure import Figure

    ns = [rep.grain.n for rep in reports]
    ratios = [rep.ratio_fb for rep in reports]
    floor = [0.2 * math.log(n) for n in ns]
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.subplots()
    ax.plot(ns, ratios, "o-", label="f_a / b_a")
    ax.plot(ns, floor, "--", color="gray", label="0.2 ln N")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("grain N")
    ax.set_ylabel("containment / box count quotient")
    ax.set_title("Unbalancedness of the under-the-hyperbola family")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def render_experiment_figure(report: ExperimentReport, path: str) -> None:
    """Histogram of the capacitary statistic across box-feasible samples."""
    from matplotlib.figure import Figure

    stats = [float(row.statistic) for row in report.rows]
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.subplots()
    ax.hist(stats, bins=min(40, max(5, len(stats) // 10)), color="steelblue")
    ax.axvline(float(report.threshold), color="firebrick", linestyle="--", label="threshold")
    ax.set_xlabel("max mass x ancestor count over hooked rectangles")
    ax.set_ylabel("samples")
    ax.set_title(f"Capacitary statistic, N={report.grain.n}, {report.samples} samples")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
