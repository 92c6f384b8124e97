"""Smoothing-parameter sweeps and the limit study they feed.

`epsilon_sweep` runs the full solve pipeline once per requested epsilon
and collects per-row diagnostics: the solved constant and moving support
endpoint, constraint residuals, the three-way energy agreement, and the
sup-distance to the sharp-limit tent profile.  A failed epsilon is
recorded in its row rather than aborting the sweep, so a ladder that
walks into a capacity or solver failure still documents where it broke.

`convergence_report` condenses successful rows into the quantities the
limit study cares about: the observed order of the tent distance against
epsilon (log-log slope), monotonicity verdicts for the endpoint and
expectation trajectories, and the worst duality gap.

Rows are independent of each other; they are computed sequentially here
purely for determinism of timing capture, and output order always
follows input order.
"""

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .duality import assemble_density
from .energy import duality_gap
from .errors import InsufficientRows, Monge1dError
from .oracles import tent_limit_density
from .problem import MongeProblemSpec

# Below this the log-scale bracket alpha^2/(2 eps) is so deep that the
# exponential term of the energy drops out of float64 entirely.
EPSILON_FLOOR = 1e-6

# Tent distances are compared across rows, so they share one grid.
_DISTANCE_GRID_N = 2001

_CSV_COLUMNS = ("epsilon", "constant", "support_endpoint", "mass_err",
                "sup_slope", "expectation", "primal", "dual", "gap",
                "dist_tent", "ms", "error")


@dataclass(frozen=True)
class SweepRow:
    """One epsilon's worth of pipeline output.

    Numeric fields are None when `error` is non-empty.  `wall_ms` is
    measured for every row but never serialized (the CSV keeps its `ms`
    column empty so identical inputs give identical bytes).
    """

    epsilon: float
    constant: float | None
    support_endpoint: float | None
    mass_err: float | None
    sup_slope: float | None
    expectation: float | None
    primal: float | None
    dual: float | None
    gap: float | None
    dist_tent: float | None
    wall_ms: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


def _distance_grid(spec: MongeProblemSpec) -> np.ndarray:
    lo, hi = spec.target_interval
    return np.linspace(lo, hi, _DISTANCE_GRID_N)


def _solve_row(spec, epsilon, grid_n, tent, grid) -> SweepRow:
    start = time.perf_counter()
    try:
        solution = assemble_density(spec, epsilon, grid_n)
        report = duality_gap(solution)
        dist = float(np.max(np.abs(solution(grid) - tent(grid))))
    except Monge1dError as exc:
        wall = (time.perf_counter() - start) * 1e3
        return SweepRow(epsilon=epsilon, constant=None, support_endpoint=None,
                        mass_err=None, sup_slope=None, expectation=None,
                        primal=None, dual=None, gap=None, dist_tent=None,
                        wall_ms=wall, error=f"{type(exc).__name__}: {exc}")
    wall = (time.perf_counter() - start) * 1e3
    return SweepRow(
        epsilon=epsilon,
        constant=solution.dual.constant,
        support_endpoint=solution.support_endpoint,
        mass_err=report.constraint_residuals.mass_error,
        sup_slope=solution.max_abs_slope,
        expectation=solution.expectation,
        primal=report.primal,
        dual=report.dual,
        gap=report.gap_primal_dual,
        dist_tent=dist,
        wall_ms=wall)


def epsilon_sweep(spec: MongeProblemSpec, epsilons, grid_n=2001):
    """Run the solve pipeline at each epsilon, in input order.

    Returns a list of SweepRow.  Epsilons below EPSILON_FLOOR are
    rejected up front (the whole request is malformed, not one row);
    per-epsilon solver failures land in their row's `error` field.
    Raises CapacityError if the target cannot hold unit mass even in the
    sharp limit, since then no row has a tent to compare against.
    """
    eps_list = [float(e) for e in epsilons]
    if not eps_list:
        raise ValueError("epsilon_sweep needs at least one epsilon")
    for eps in eps_list:
        if not np.isfinite(eps) or eps < EPSILON_FLOOR:
            raise ValueError(
                f"epsilon {eps!r} is below the supported floor "
                f"{EPSILON_FLOOR}: the energy integrands lose the "
                f"exponential term at that scale")
    tent = tent_limit_density(spec)
    grid = _distance_grid(spec)
    return [_solve_row(spec, eps, grid_n, tent, grid) for eps in eps_list]


def _format_cell(value) -> str:
    if value is None:
        return ""
    return repr(value)


def rows_to_csv(rows) -> str:
    """Serialize sweep rows to CSV text, bit-stable for identical inputs.

    The `ms` column is intentionally left empty: wall time varies run to
    run and would break byte-for-byte determinism of the artifact.  The
    measured value stays available on SweepRow.wall_ms for reports.
    """
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for row in rows:
        writer.writerow([
            _format_cell(row.epsilon),
            _format_cell(row.constant),
            _format_cell(row.support_endpoint),
            _format_cell(row.mass_err),
            _format_cell(row.sup_slope),
            _format_cell(row.expectation),
            _format_cell(row.primal),
            _format_cell(row.dual),
            _format_cell(row.gap),
            _format_cell(row.dist_tent),
            "",
            row.error,
        ])
    return buffer.getvalue()


def _trend(values, slack=1e-12) -> str:
    diffs = np.diff(np.asarray(values, dtype=float))
    if diffs.size == 0 or np.all(np.abs(diffs) <= slack):
        return "constant"
    if np.all(diffs <= slack):
        return "nonincreasing"
    if np.all(diffs >= -slack):
        return "nondecreasing"
    return "mixed"


@dataclass(frozen=True)
class ConvergenceReport:
    """Summary of a sweep: observed order, trends, and the worst gap.

    distance_order is the log-log slope of dist_tent against epsilon
    (positive means the density approaches the tent as epsilon shrinks);
    None when degenerate abscissae or vanishing distances leave it
    undefined, with the reason in slope_note.  Trends are read along
    decreasing epsilon.
    """

    n_rows: int
    n_success: int
    distance_order: float | None
    slope_note: str
    endpoint_trend: str
    expectation_trend: str
    largest_gap: float


def convergence_report(rows) -> ConvergenceReport:
    good = [r for r in rows if r.ok]
    if len(good) < 2:
        raise InsufficientRows(
            f"convergence report needs >= 2 successful rows, got {len(good)}")
    ordered = sorted(good, key=lambda r: -r.epsilon)

    eps = np.array([r.epsilon for r in ordered])
    dist = np.array([r.dist_tent for r in ordered])
    slope = None
    note = ""
    usable = dist > 0.0
    if len(np.unique(eps)) < 2:
        note = "slope undefined: duplicate epsilon abscissae"
    elif np.count_nonzero(usable) < 2 or len(np.unique(eps[usable])) < 2:
        note = "slope undefined: fewer than two positive distances"
    else:
        # positive slope in log-log: distance shrinks with epsilon
        slope = float(np.polyfit(np.log(eps[usable]),
                                 np.log(dist[usable]), 1)[0])

    return ConvergenceReport(
        n_rows=len(rows),
        n_success=len(good),
        distance_order=slope,
        slope_note=note,
        endpoint_trend=_trend([r.support_endpoint for r in ordered]),
        expectation_trend=_trend([r.expectation for r in ordered]),
        largest_gap=max(abs(r.gap) for r in good))
