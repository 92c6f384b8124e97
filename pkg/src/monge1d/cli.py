"""Command-line driver: one JSON config document, five commands.

`validate` checks the problem statement and target capacity without
solving.  `solve` runs the dual pipeline per requested epsilon and emits
plot-ready density samples plus the energy report.  `map` additionally
builds both monotone transport maps.  `sweep` produces the convergence
table and summary.  `verify` runs the invariant battery (constraints,
stationarity, zero gap, variational probes, remainder bound, and oracle
fixtures when present) and reports a pass/fail table.

Exit codes: 0 success, 2 config or validation problem, 3 capacity
failure, 4 solver failure, 5 verification failure.  Scalar flags
override config fields, which override built-in defaults.  All file
writes go through a temp-file rename so a crash never leaves a partial
artifact, and floats are serialized with repr so identical inputs give
byte-identical files.
"""

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .duality import assemble_density
from .energy import (
    SinePerturbation,
    duality_gap,
    second_variation_probe,
    taylor_remainder_check,
)
from .errors import (
    CapacityError,
    ConfigError,
    InsufficientRows,
    MaxDepth,
    MaxIterations,
    Monge1dError,
    NegativeIntegrand,
    NoSignChange,
)
from .oracles import load_fixture, tent_limit_density
from .problem import MongeProblemSpec, spec_from_document, validate_spec
from .sweep import (
    EPSILON_FLOOR,
    SweepRow,
    convergence_report,
    epsilon_sweep,
    rows_to_csv,
)
from .transport import build_map, pushforward_residual

_CONFIG_KEYS = ("problem", "epsilons", "grid_n", "tolerances", "out")
_TOLERANCE_KEYS = ("root", "quad")

# Stage labels for solver failures, keyed by what actually broke.
_STAGE_LABELS = {
    NoSignChange: "constant bracketing",
    MaxIterations: "root refinement",
    MaxDepth: "quadrature subdivision",
    NegativeIntegrand: "cumulative assembly",
}


@dataclass(frozen=True)
class RunConfig:
    """One parsed config document with flag overrides already applied."""

    spec: MongeProblemSpec
    epsilons: tuple[float, ...]
    grid_n: int = 2001
    root_tol: float = 1e-12
    quad_tol: float = 1e-10
    out_dir: Path = Path("out")
    quiet: bool = False


def _positive_float(value, path) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    out = float(value)
    if not (math.isfinite(out) and out > 0.0):
        raise ConfigError(f"{path}: expected a finite positive number, "
                          f"got {value!r}")
    return out


def parse_run_config(doc, *, overrides=None) -> RunConfig:
    """Build a RunConfig from the JSON document, strictly.

    Unknown keys are rejected at every level.  `overrides` carries the
    scalar command-line flags; a None override leaves the file (or
    default) value in place.
    """
    overrides = overrides or {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config: expected an object, got {type(doc).__name__}")
    unknown = sorted(set(doc) - set(_CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"config: unknown keys {unknown}")
    for key in ("problem", "epsilons"):
        if key not in doc:
            raise ConfigError(f"config: missing key {key!r}")
    spec = spec_from_document(doc["problem"])

    raw_eps = overrides.get("epsilons") or doc["epsilons"]
    if not isinstance(raw_eps, (list, tuple)) or not raw_eps:
        raise ConfigError("config.epsilons: expected a nonempty list")
    epsilons = tuple(_positive_float(e, f"config.epsilons[{i}]")
                     for i, e in enumerate(raw_eps))

    grid_n = overrides.get("grid_n")
    if grid_n is None:
        grid_n = doc.get("grid_n", 2001)
    if isinstance(grid_n, bool) or not isinstance(grid_n, int):
        raise ConfigError(f"config.grid_n: expected an integer, got {grid_n!r}")
    if grid_n < 33:
        raise ConfigError(f"config.grid_n: needs at least 33 nodes, got {grid_n}")

    root_tol, quad_tol = 1e-12, 1e-10
    if "tolerances" in doc:
        tols = doc["tolerances"]
        if not isinstance(tols, dict):
            raise ConfigError("config.tolerances: expected an object")
        bad = sorted(set(tols) - set(_TOLERANCE_KEYS))
        if bad:
            raise ConfigError(f"config.tolerances: unknown keys {bad}")
        if "root" in tols:
            root_tol = _positive_float(tols["root"], "config.tolerances.root")
        if "quad" in tols:
            quad_tol = _positive_float(tols["quad"], "config.tolerances.quad")

    out_dir = overrides.get("out") or doc.get("out", "out")
    if not isinstance(out_dir, (str, Path)):
        raise ConfigError(f"config.out: expected a path string, got {out_dir!r}")

    return RunConfig(spec=spec, epsilons=epsilons, grid_n=grid_n,
                     root_tol=root_tol, quad_tol=quad_tol,
                     out_dir=Path(out_dir),
                     quiet=bool(overrides.get("quiet", False)))


def load_run_config(path, *, overrides=None) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_run_config(doc, overrides=overrides)


# -- artifact serialization ---------------------------------------------------


def _write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path: Path, doc):
    _write_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _eps_dir(out_dir: Path, epsilon: float) -> Path:
    return out_dir / f"eps_{epsilon!r}"


def density_csv(solution) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["y", "u", "theta", "log_lambda", "slope"])
    theta = solution.dual.theta(solution.nodes)
    log_lam = solution.dual.log_lambda(solution.nodes)
    slope = solution.slope(solution.nodes)
    for i, y in enumerate(solution.nodes):
        writer.writerow([repr(float(y)), repr(float(solution.values[i])),
                         repr(float(theta[i])), repr(float(log_lam[i])),
                         repr(float(slope[i]))])
    return buffer.getvalue()


def energy_json_document(solution, report) -> dict:
    doc = dataclasses.asdict(report)
    doc.update(
        epsilon=solution.epsilon,
        alpha=solution.spec.alpha,
        assumption=solution.spec.assumption,
        constant=solution.dual.constant,
        support=list(solution.support),
        support_endpoint=solution.support_endpoint,
        crossing=solution.crossing,
        mass=solution.mass,
        expectation=solution.expectation,
        gap=report.gap_primal_dual,
    )
    return doc


def map_csv(spec, increasing, decreasing, grid_n) -> str:
    lo, hi = spec.source_interval
    xs = np.linspace(lo, hi, grid_n)
    inc_vals = increasing.map(xs)
    dec_vals = decreasing.map(xs)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["x", "s_increasing", "s_decreasing"])
    for x, si, sd in zip(xs, inc_vals, dec_vals):
        writer.writerow([repr(float(x)), repr(float(si)), repr(float(sd))])
    return buffer.getvalue()


def cost_json_document(spec, solution, increasing, decreasing) -> dict:
    return {
        "epsilon": solution.epsilon,
        "cost_increasing": increasing.cost,
        "cost_decreasing": decreasing.cost,
        "cost_difference": increasing.cost - decreasing.cost,
        "residual_increasing": pushforward_residual(increasing, solution, spec),
        "residual_decreasing": pushforward_residual(decreasing, solution, spec),
    }


# -- commands -----------------------------------------------------------------


def _emit(config: RunConfig, *parts):
    if not config.quiet:
        print(*parts)


def _fail(message: str) -> None:
    print(message, file=sys.stderr)


def _solver_failure(epsilon, exc) -> int:
    stage = _STAGE_LABELS.get(type(exc), type(exc).__name__)
    _fail(f"solve failed at epsilon={epsilon!r} in {stage}: {exc}")
    return 4


def _required_width(alpha: float) -> float:
    return 2.0 / math.sqrt(alpha)


def cmd_validate(config: RunConfig) -> int:
    report = validate_spec(config.spec)
    if not report.ok:
        _fail(f"spec: invalid: {report.message()}")
        return 2
    _emit(config, "spec: ok")
    required = _required_width(config.spec.alpha)
    try:
        tent_limit_density(config.spec)
    except CapacityError as exc:
        _fail(f"capacity: fail: {exc} (unit mass under the slope bound "
              f"needs width 2/sqrt(alpha) = {required!r}, target width is "
              f"{config.spec.target_width!r})")
        return 3
    _emit(config, f"capacity: ok (target width {config.spec.target_width!r} "
                  f">= 2/sqrt(alpha) = {required!r})")
    return 0


def _check_floor(config: RunConfig) -> int:
    for eps in config.epsilons:
        if eps < EPSILON_FLOOR:
            _fail(f"config.epsilons: {eps!r} is below the supported floor "
                  f"{EPSILON_FLOOR!r}")
            return 2
    return 0


def _solve_one(config: RunConfig, epsilon: float):
    return assemble_density(config.spec, epsilon, config.grid_n,
                            root_tol=config.root_tol,
                            quad_tol=config.quad_tol)


def cmd_solve(config: RunConfig) -> int:
    code = _check_floor(config)
    if code:
        return code
    for eps in config.epsilons:
        try:
            solution = _solve_one(config, eps)
        except CapacityError as exc:
            _fail(f"capacity: fail at epsilon={eps!r}: {exc}")
            return 3
        except Monge1dError as exc:
            return _solver_failure(eps, exc)
        report = duality_gap(solution, quad_tol=config.quad_tol)
        target = _eps_dir(config.out_dir, eps)
        _write_atomic(target / "density.csv", density_csv(solution))
        _write_json(target / "energy.json",
                    energy_json_document(solution, report))
        _emit(config, f"epsilon={eps!r}: support endpoint "
                      f"{solution.support_endpoint!r}, gap "
                      f"{report.gap_primal_dual!r} -> {target}")
    return 0


def cmd_map(config: RunConfig) -> int:
    code = _check_floor(config)
    if code:
        return code
    for eps in config.epsilons:
        try:
            solution = _solve_one(config, eps)
        except CapacityError as exc:
            _fail(f"capacity: fail at epsilon={eps!r}: {exc}")
            return 3
        except Monge1dError as exc:
            return _solver_failure(eps, exc)
        try:
            increasing = build_map(config.spec, solution, "increasing")
            decreasing = build_map(config.spec, solution, "decreasing")
        except Monge1dError as exc:
            _fail(f"map inversion failed at epsilon={eps!r}: {exc}")
            return 4
        target = _eps_dir(config.out_dir, eps)
        _write_atomic(target / "map.csv",
                      map_csv(config.spec, increasing, decreasing,
                              config.grid_n))
        _write_json(target / "cost.json",
                    cost_json_document(config.spec, solution, increasing,
                                       decreasing))
        _emit(config, f"epsilon={eps!r}: cost {increasing.cost!r} -> {target}")
    return 0


def _floor_row(epsilon: float) -> SweepRow:
    return SweepRow(epsilon=epsilon, constant=None, support_endpoint=None,
                    mass_err=None, sup_slope=None, expectation=None,
                    primal=None, dual=None, gap=None, dist_tent=None,
                    wall_ms=0.0,
                    error=f"ValueError: epsilon {epsilon!r} below the "
                          f"supported floor {EPSILON_FLOOR!r}")


def cmd_sweep(config: RunConfig) -> int:
    # sub-floor epsilons become flagged rows instead of aborting the
    # sweep: the table then documents exactly which rung broke
    valid = [e for e in config.epsilons if e >= EPSILON_FLOOR]
    try:
        solved_rows = iter(epsilon_sweep(config.spec, valid, config.grid_n)
                           if valid else [])
    except CapacityError as exc:
        _fail(f"capacity: fail: {exc}")
        return 3
    rows = [next(solved_rows) if eps >= EPSILON_FLOOR else _floor_row(eps)
            for eps in config.epsilons]

    config.out_dir.mkdir(parents=True, exist_ok=True)
    _write_atomic(config.out_dir / "sweep.csv", rows_to_csv(rows))
    try:
        summary = dataclasses.asdict(convergence_report(rows))
    except InsufficientRows as exc:
        summary = {"error": f"{type(exc).__name__}: {exc}"}
    _write_json(config.out_dir / "report.json", summary)

    failed = [r for r in rows if not r.ok]
    for row in failed:
        _fail(f"epsilon={row.epsilon!r}: {row.error}")
    _emit(config, f"sweep: {len(rows) - len(failed)}/{len(rows)} rows ok "
                  f"-> {config.out_dir}")
    return 4 if failed else 0


# -- verification battery -----------------------------------------------------


@dataclass(frozen=True)
class VerifyCheck:
    name: str
    status: str  # "pass" | "fail" | "skipped"
    detail: str


def _check(name, ok, detail) -> VerifyCheck:
    return VerifyCheck(name, "pass" if ok else "fail", detail)


def _battery_for(config: RunConfig, epsilon: float) -> list[VerifyCheck]:
    spec = config.spec
    alpha = spec.alpha
    out = []
    sol = _solve_one(config, epsilon)
    report = duality_gap(sol, quad_tol=config.quad_tol)
    res = report.constraint_residuals

    out.append(_check("mass", res.mass_error <= 1e-8,
                      f"|mass - 1| = {res.mass_error:.3e}"))
    out.append(_check("nonnegative", res.negativity <= 1e-12,
                      f"max(-u) = {res.negativity:.3e}"))
    out.append(_check(
        "slope bound", sol.max_abs_slope <= alpha * (1.0 + 1e-10),
        f"sup|u_y| = {sol.max_abs_slope!r} vs alpha = {alpha!r}"))

    support_values = sol.values[sol.support_slice]
    edge = max(abs(float(support_values[0])), abs(float(support_values[-1])))
    extension_values = np.delete(sol.values,
                                 np.arange(*sol.support_slice.indices(
                                     sol.nodes.size)))
    extension = float(np.max(np.abs(extension_values), initial=0.0))
    out.append(_check("endpoints", edge == 0.0 and extension == 0.0,
                      f"edge = {edge:.3e}, extension = {extension:.3e}"))

    nodes = sol.support_nodes
    lam = np.exp(sol.dual.log_lambda(nodes))
    stationarity = float(np.max(np.abs(lam * sol.slope_nodes
                                       - sol.dual.theta(nodes))))
    out.append(_check("stationarity", stationarity <= 1e-8,
                      f"sup|lambda u_y - theta| = {stationarity:.3e}"))

    gap = max(abs(report.gap_primal_dual), abs(report.gap_primal_xi))
    bound = 1e-6 * max(1.0, abs(report.primal))
    out.append(_check("zero gap", gap <= bound,
                      f"worst gap = {gap:.3e} vs {bound:.3e}"))

    probe = second_variation_probe(
        sol, SinePerturbation(sol.support, k=1),
        (-1e-2, -1e-3, 1e-3, 1e-2),
        dual_perturbation=lambda y: np.full(np.shape(y), 1.0))
    out.append(_check(
        "variational probes",
        probe.min_primal_delta >= -1e-10 and probe.max_dual_delta <= 1e-10,
        f"min primal delta = {probe.min_primal_delta:.3e}, "
        f"max dual delta = {probe.max_dual_delta:.3e}"))

    if 0.0 < epsilon < 0.5 * alpha * alpha:
        remainder = taylor_remainder_check(alpha, epsilon)
        out.append(_check("remainder bound", remainder <= epsilon,
                          f"max deviation = {remainder:.3e} vs "
                          f"epsilon = {epsilon!r}"))
    else:
        out.append(VerifyCheck("remainder bound", "skipped",
                               "epsilon outside the expansion window"))
    return out


def _fixture_checks(config: RunConfig) -> list[VerifyCheck]:
    paths = sorted(config.out_dir.glob("oracle*.csv"))
    if not paths:
        return [VerifyCheck("oracle fixtures", "skipped",
                            f"no oracle*.csv under {config.out_dir}")]
    out = []
    for path in paths:
        try:
            run = load_fixture(path)
        except (OSError, ValueError) as exc:
            out.append(_check(f"oracle {path.name}", False, str(exc)))
            continue
        problems = run.density.violations()
        if problems:
            out.append(_check(f"oracle {path.name}", False, problems[0]))
            continue
        eps = run.epsilon if run.epsilon is not None else config.epsilons[-1]
        sol = _solve_one(config, eps)
        dist = float(np.max(np.abs(run.density.values
                                   - sol(run.density.nodes))))
        out.append(_check(f"oracle {path.name}", dist <= 0.05,
                          f"sup distance to solved density = {dist:.3e}"))
    return out


def cmd_verify(config: RunConfig) -> int:
    code = _check_floor(config)
    if code:
        return code
    checks = []
    for eps in config.epsilons:
        try:
            checks.extend((eps, c) for c in _battery_for(config, eps))
        except CapacityError as exc:
            _fail(f"capacity: fail at epsilon={eps!r}: {exc}")
            return 3
        except Monge1dError as exc:
            return _solver_failure(eps, exc)
    checks.extend((None, c) for c in _fixture_checks(config))

    failed = [c for _, c in checks if c.status == "fail"]
    for eps, check in checks:
        scope = "fixtures" if eps is None else f"epsilon={eps!r}"
        _emit(config, f"{check.status:<8} {check.name:<20} [{scope}] "
                      f"{check.detail}")
    if failed:
        _fail("verify: failed " + ", ".join(sorted({c.name for c in failed})))
        return 5
    _emit(config, f"verify: all {len(checks)} checks passed or skipped")
    return 0


# -- entry point --------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monge1d",
        description="Canonical-duality solver for the 1-D mass transfer "
                    "problem with disjoint intervals.")
    parser.add_argument("command",
                        choices=("validate", "solve", "map", "sweep", "verify"))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", help="output directory (overrides config)")
    parser.add_argument("--epsilon", action="append", type=float,
                        help="smoothing value; repeatable (overrides config)")
    parser.add_argument("--grid", type=int,
                        help="profile grid nodes (overrides config)")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress informational output")
    return parser


_COMMANDS = {
    "validate": cmd_validate,
    "solve": cmd_solve,
    "map": cmd_map,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        "epsilons": tuple(args.epsilon) if args.epsilon else None,
        "grid_n": args.grid,
        "out": args.out,
        "quiet": args.quiet,
    }
    try:
        config = load_run_config(args.config, overrides=overrides)
    except ConfigError as exc:
        _fail(str(exc))
        return 2
    return _COMMANDS[args.command](config)


if __name__ == "__main__":
    sys.exit(main())
