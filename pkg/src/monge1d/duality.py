"""Dual construction of the smoothed transfer density.

The chain of reasoning implemented here, all in closed form up to two
scalar root solves:

1. On its support the stress field is an explicit parabola
   theta(y) = orientation * (constant - y^2/2), so the stress equation
   theta_y + |y| = 0 holds exactly by construction.
2. The pointwise algebraic identity theta^2 = E(lambda) with
   E(lambda) = lambda^2 (alpha^2 + 2 eps ln lambda) links the stress to a
   scale factor lambda = e^l; the density slope is then
   slope = sign(theta) * sqrt(alpha^2 + 2 eps l), which is the exact
   inverse of the smoothed-penalty derivative.
3. The constant is fixed by requiring the density to vanish at both
   support endpoints (scalar root solve), and the free support endpoint is
   fixed by requiring unit mass (outer root solve, nested over the first).
4. The density itself is the cumulative integral of the slope from the
   anchored endpoint.

Everything lambda-related is handled in log form: the lower endpoint
lambda_min = e^{-alpha^2/(2 eps)} underflows already for moderate
parameters, while l = ln lambda stays representable for eps down to 1e-6.

For strong smoothing the solved stress can exceed alpha in magnitude near
the support endpoints; the algebra extends continuously to l > 0 and this
module follows it, reporting max_log_lambda / max_abs_slope diagnostics
instead of clamping.  Clamping would break both the equilibrium identity
and the primal/dual energy match, which downstream modules verify at
tight tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import CapacityError, DomainError, OutOfRange
from .numerics import _adaptive, integrate, refine_to_residual, solve_root
from .problem import ApproxParams, MongeProblemSpec, validate_spec

_BRACKET_SLACK = 1e-12     # admissible negative slack on alpha^2 + 2 eps l
_DEEP_TAIL = 1e-8          # below this slope_sq/alpha^2, skip the log polish


# -- scalar algebra -----------------------------------------------------------

def eval_E(lam, alpha, epsilon):
    """Squared stress produced by a scale factor: lambda^2 (alpha^2 + 2 eps ln lambda).

    Strictly increasing in lambda wherever defined.  The classical domain
    is (0, 1]; larger factors evaluate the same formula (used by
    diagnostics).  Raises DomainError when the slope-squared bracket
    alpha^2 + 2 eps ln lambda drops below -1e-12; values in [-1e-12, 0)
    round up to zero stress.
    """
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr <= 0.0):
        raise DomainError("scale factor must be positive")
    bracket = alpha * alpha + 2.0 * epsilon * np.log(lam_arr)
    if np.any(bracket < -_BRACKET_SLACK):
        raise DomainError(
            f"scale factor below the admissible floor: bracket reaches "
            f"{float(np.min(bracket)):.3e}")
    out = lam_arr * lam_arr * np.maximum(bracket, 0.0)
    return out if np.ndim(lam) else float(out)


def eval_E_log(log_lam, alpha, epsilon):
    """`eval_E` with the scale factor given in log form (survives eps=1e-6)."""
    l_arr = np.asarray(log_lam, dtype=float)
    bracket = alpha * alpha + 2.0 * epsilon * l_arr
    if np.any(bracket < -_BRACKET_SLACK):
        raise DomainError(
            f"log scale factor below the admissible floor: bracket reaches "
            f"{float(np.min(bracket)):.3e}")
    out = np.exp(2.0 * l_arr) * np.maximum(bracket, 0.0)
    return out if np.ndim(log_lam) else float(out)


def _invert_stress_sq(stress_sq, alpha, epsilon):
    """Solve e^{2l} (alpha^2 + 2 eps l) = T for each T >= 0.

    Returns (l, slope_sq) with slope_sq = alpha^2 + 2 eps l evaluated
    without cancellation.  The solve runs in w = ln(slope_sq), where the
    residual phi(w) = (e^w - alpha^2)/eps + w - ln T is convex and
    increasing, so Newton converges globally (at worst one overshoot,
    then monotone).  A final two-step polish directly in l removes the
    cancellation incurred by l = (e^w - alpha^2)/(2 eps) when eps is
    small; in the deep tail (slope_sq << alpha^2) that division is
    already exact and the polish is skipped.

    No cap at l = 0: T > alpha^2 continues smoothly into l > 0.
    """
    T = np.asarray(stress_sq, dtype=float)
    a2 = alpha * alpha
    l_out = np.empty_like(T)
    u_out = np.empty_like(T)
    zero = T <= 0.0
    l_out[zero] = -a2 / (2.0 * epsilon)
    u_out[zero] = 0.0
    pos = ~zero
    if np.any(pos):
        t = T[pos]
        log_t = np.log(t)
        z = log_t - math.log(a2)
        # Two start regimes split where a2 + eps z crosses zero: above it
        # the root has slope_sq near a2 + eps z; below it the tail start
        # ln T + a2/eps is bounded by ln a2 and sits right of the root.
        w = np.where(z > -a2 / epsilon,
                     np.log(np.maximum(a2 + epsilon * z, 1e-300)),
                     log_t + a2 / epsilon)
        for _ in range(80):
            ew = np.exp(w)
            step = ((ew - a2) / epsilon + w - log_t) / (ew / epsilon + 1.0)
            w = w - step
            if float(np.max(np.abs(step))) < 1e-14 * (1.0 + float(np.max(np.abs(w)))):
                break
        u = np.exp(w)
        l = (u - a2) / (2.0 * epsilon)
        polish = u > _DEEP_TAIL * a2
        if np.any(polish):
            lp = l[polish]
            ltp = log_t[polish]
            for _ in range(2):
                up = a2 + 2.0 * epsilon * lp
                g = 2.0 * lp + np.log(up) - ltp
                lp = lp - g / (2.0 + 2.0 * epsilon / up)
            l[polish] = lp
            u[polish] = a2 + 2.0 * epsilon * lp
        l_out[pos] = l
        u_out[pos] = u
    return l_out, u_out


def invert_E(theta_sq, alpha, epsilon):
    """Inverse of `eval_E` on the classical range, returned in log form.

    Accepts theta_sq in [0, alpha^2] (with 1e-14 / relative 1e-12 slack
    below/above; anything further out raises OutOfRange) and returns
    l = ln lambda in [-alpha^2/(2 eps), 0] satisfying
    |e^{2l}(alpha^2 + 2 eps l) - theta_sq| <= 1e-12 max(1, theta_sq).
    """
    t = float(theta_sq)
    a2 = alpha * alpha
    if t < -1e-14 or t > a2 * (1.0 + 1e-12):
        raise OutOfRange(f"squared stress {t!r} outside [0, {a2!r}]")
    t = min(max(t, 0.0), a2)
    l, _ = _invert_stress_sq(np.array([t]), alpha, epsilon)
    return min(float(l[0]), 0.0)


def slope_from_theta(theta, alpha, epsilon):
    """Density slope carried by a stress value: sign(theta) sqrt(alpha^2 + 2 eps l).

    Odd and strictly increasing in theta, with |result| <= alpha; the
    returned v satisfies theta = v e^{(v^2 - alpha^2)/(2 eps)} exactly up
    to the root-solve residual.  |theta| beyond alpha (1 + 1e-12) raises
    OutOfRange.
    """
    th = float(theta)
    if abs(th) > alpha * (1.0 + 1e-12):
        raise OutOfRange(f"stress {th!r} exceeds the slope bound {alpha!r}")
    t = min(th * th, alpha * alpha)
    _, u = _invert_stress_sq(np.array([t]), alpha, epsilon)
    return math.copysign(math.sqrt(float(u[0])), th)


def _slope_many(theta, alpha, epsilon):
    """Vectorized extended slope recovery (no cap at |theta| = alpha)."""
    th = np.asarray(theta, dtype=float)
    _, u = _invert_stress_sq(th * th, alpha, epsilon)
    return np.copysign(np.sqrt(u), th)


# -- the dual field -----------------------------------------------------------

@dataclass(frozen=True)
class DualField:
    """Closed-form stress parabola plus the pointwise scale/slope algebra.

    support is a subinterval of the target; constant is the parabola
    level (the boundary-condition root); orientation +1/-1 selects
    theta = +-(constant - y^2/2).
    """

    support: tuple[float, float]
    constant: float
    orientation: float
    alpha: float
    epsilon: float

    @property
    def crossing(self) -> float:
        """Location where the stress vanishes (the density peak)."""
        return self.orientation * math.sqrt(2.0 * self.constant)

    def theta(self, y):
        y_arr = np.asarray(y, dtype=float)
        out = self.orientation * (self.constant - 0.5 * y_arr * y_arr)
        return out if np.ndim(y) else float(out)

    def log_lambda(self, y):
        th = np.asarray(self.theta(y), dtype=float)
        l, _ = _invert_stress_sq(th * th, self.alpha, self.epsilon)
        return l if np.ndim(y) else float(l)

    def slope(self, y):
        out = _slope_many(self.theta(y), self.alpha, self.epsilon)
        return out if np.ndim(y) else float(out)

    def fields_at(self, y):
        """(theta, log_lambda, slope) arrays from one inversion pass."""
        th = np.asarray(self.theta(y), dtype=float)
        l, u = _invert_stress_sq(th * th, self.alpha, self.epsilon)
        return th, l, np.copysign(np.sqrt(u), th)


def _stress_on(y, r, orientation):
    return orientation * (r - 0.5 * np.asarray(y, dtype=float) ** 2)


def _crossing_of(r, orientation) -> float:
    return orientation * math.sqrt(max(2.0 * r, 0.0))


def _constant_bracket(support):
    lo, hi = support
    lo2, hi2 = 0.5 * lo * lo, 0.5 * hi * hi
    return (min(lo2, hi2), max(lo2, hi2))


def boundary_residual(r, support, spec: MongeProblemSpec, epsilon, *,
                      quad_tol=1e-13):
    """Density value forced at the closing endpoint by a trial constant.

    Integrates the recovered slope across the support: the result is the
    value the density would take at the end of the sweep when pinned to
    zero at the start, so the admissible constant is this function's
    root.  Strictly increasing in r under orientation I, strictly
    decreasing under II.
    """
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise ValueError(f"support [{lo}, {hi}] is degenerate")
    o = spec.orientation
    f = lambda y: _slope_many(_stress_on(y, r, o), spec.alpha, epsilon)
    return integrate(f, lo, hi, tol=quad_tol,
                     breakpoints=(_crossing_of(r, o),))


def solve_constant(support, spec: MongeProblemSpec, epsilon, tol=1e-12, *,
                   root_tol=1e-12):
    """Constant of the stress parabola for a given support.

    Bracketed between the parabola levels that put the stress zero at
    either support endpoint; the returned value drives
    |boundary_residual| below tol.
    """
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise ValueError(f"support [{lo}, {hi}] is degenerate")
    quad_tol = min(1e-13, 0.1 * tol)
    f = lambda r: boundary_residual(r, (lo, hi), spec, epsilon, quad_tol=quad_tol)
    r_lo, r_hi = _constant_bracket((lo, hi))
    r = solve_root(f, r_lo, r_hi, tol=root_tol)
    return refine_to_residual(f, r_lo, r_hi, r, tol)


def total_mass(endpoint, spec: MongeProblemSpec, epsilon, *, constant=None,
               constant_tol=1e-12, quad_tol=1e-11):
    """Mass held by the density supported between `endpoint` and the anchor.

    Solves the constant for that support (unless one is passed in), then
    uses the exact reduction
        integral of u  =  integral of (endpoint - y) * slope(y) dy,
    which folds the double integral of the cumulative construction into a
    single quadrature.
    """
    m = float(endpoint)
    anchor = spec.anchor
    support = (m, anchor) if spec.assumption == "I" else (anchor, m)
    lo, hi = support
    if not lo < hi:
        return 0.0
    if constant is None:
        constant = solve_constant(support, spec, epsilon, tol=constant_tol)
    o = spec.orientation
    f = lambda y: (m - y) * _slope_many(_stress_on(y, constant, o),
                                        spec.alpha, epsilon)
    return integrate(f, lo, hi, tol=quad_tol,
                     breakpoints=(_crossing_of(constant, o),))


def _require_valid(spec: MongeProblemSpec):
    report = validate_spec(spec)
    if not report.ok:
        raise DomainError(f"inadmissible problem: {report.message()}")


def capacity_margin(spec: MongeProblemSpec, epsilon, *, constant_tol=1e-12,
                    quad_tol=1e-11) -> float:
    """Mass the full target could hold: must exceed 1 for solvability."""
    _require_valid(spec)
    return total_mass(spec.far_edge, spec, epsilon,
                      constant_tol=constant_tol, quad_tol=quad_tol)


def check_capacity(spec: MongeProblemSpec, epsilon) -> bool:
    """True iff the target interval is wide enough to hold unit mass
    under the slope bound (full-width mass above 1)."""
    return capacity_margin(spec, epsilon) > 1.0


def solve_support(spec: MongeProblemSpec, epsilon, tol=1e-10, *,
                  root_tol=1e-12):
    """Free endpoint of the support, fixed by the unit-mass condition.

    Nested solve: for every trial endpoint the constant is re-solved at
    0.01x this tolerance, then the held mass is compared to 1.  Raises
    CapacityError when even the full target cannot hold unit mass.
    """
    _require_valid(spec)
    inner_tol = 0.01 * tol
    margin = capacity_margin(spec, epsilon, constant_tol=inner_tol,
                             quad_tol=0.1 * tol)
    if margin <= 1.0:
        raise CapacityError(
            f"target of width {spec.target_width:.6g} holds at most mass "
            f"{margin:.6g} < 1 under slope bound {spec.alpha:.6g}; width "
            f"around {2.0 / math.sqrt(spec.alpha):.6g} is needed")
    anchor = spec.anchor
    far = spec.far_edge

    def residual(m):
        if abs(m - anchor) == 0.0:
            return -1.0
        return total_mass(m, spec, epsilon, constant_tol=inner_tol,
                          quad_tol=0.1 * tol) - 1.0

    m = solve_root(residual, far, anchor, tol=root_tol)
    return refine_to_residual(residual, far, anchor, m, tol)


# -- assembled density --------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensitySolution:
    """Sampled transfer density with its dual field and diagnostics.

    nodes/values cover the whole target interval (zero extension
    included); support_slice marks the support portion.  slope_nodes
    holds the recovered slope at the support nodes, which is the exact
    derivative of the cumulative construction.  boundary_gap is the
    (pre-clip) density value at the closing endpoint, a direct readout of
    the constant-solve residual.  max_abs_slope and max_log_lambda report
    how far the solution runs above the nominal scale ceiling instead of
    clamping it (see the module docstring).
    """

    spec: MongeProblemSpec
    epsilon: float
    dual: DualField
    support_endpoint: float
    support: tuple[float, float]
    crossing: float
    nodes: np.ndarray
    values: np.ndarray
    slope_nodes: np.ndarray
    support_slice: slice
    mass: float
    expectation: float
    max_abs_slope: float
    max_log_lambda: float
    boundary_gap: float
    clip_depth: float
    grid_n: int
    _profile: PchipInterpolator = field(repr=False)

    @property
    def grid(self):
        return self.nodes, self.values

    @property
    def support_nodes(self):
        return self.nodes[self.support_slice]

    @property
    def support_values(self):
        return self.values[self.support_slice]

    def __call__(self, y):
        y_arr = np.asarray(y, dtype=float)
        lo, hi = self.support
        inside = (y_arr >= lo) & (y_arr <= hi)
        out = np.where(inside, self._profile(np.clip(y_arr, lo, hi)), 0.0)
        out = np.maximum(out, 0.0)
        return out if np.ndim(y) else float(out)

    def slope(self, y):
        """Derivative of the density: the cumulative construction makes it
        the recovered dual slope on the support, zero on the extension."""
        y_arr = np.asarray(y, dtype=float)
        lo, hi = self.support
        inside = (y_arr >= lo) & (y_arr <= hi)
        out = np.where(inside, self.dual.slope(np.clip(y_arr, lo, hi)), 0.0)
        return out if np.ndim(y) else float(out)

    def peak(self) -> tuple[float, float]:
        """(location, value) of the interior maximum (at the stress zero)."""
        return self.crossing, float(self(self.crossing))


def assemble_density(spec: MongeProblemSpec, epsilon, grid_n=2001, *,
                     root_tol=1e-12, quad_tol=1e-10,
                     mass_tol=1e-10) -> DensitySolution:
    """Full solve: support, constant, and the sampled density.

    The density is the cumulative integral of the recovered slope,
    anchored at the target endpoint adjacent to the source (it vanishes
    there by construction and at the solved endpoint by the residual
    solve).  The grid is uniform over the support with the stress zero
    inserted as an extra exact node, plus a zero extension over the rest
    of the target at matching resolution.
    """
    _require_valid(spec)
    epsilon = float(epsilon)
    if grid_n < 33:
        raise ValueError(f"grid_n must be >= 33, got {grid_n}")
    m = solve_support(spec, epsilon, tol=mass_tol, root_tol=root_tol)
    anchor = spec.anchor
    support = (m, anchor) if spec.assumption == "I" else (anchor, m)
    constant = solve_constant(support, spec, epsilon, tol=0.01 * mass_tol,
                              root_tol=root_tol)
    dual = DualField(support=support, constant=constant,
                     orientation=spec.orientation, alpha=spec.alpha,
                     epsilon=epsilon)
    crossing = dual.crossing
    lo, hi = support

    base = np.linspace(lo, hi, grid_n)
    if lo < crossing < hi and float(np.min(np.abs(base - crossing))) > 1e-13:
        grid = np.sort(np.append(base, crossing))
    else:
        grid = base
    edges = grid
    cell_id = np.clip(np.searchsorted(grid, edges[:-1], side="right") - 1,
                      0, grid.size - 2)
    slope_arr = lambda y: _slope_many(_stress_on(y, constant, spec.orientation),
                                      spec.alpha, epsilon)
    sums, _ = _adaptive(slope_arr, edges, cell_id, quad_tol, 60)
    cums = np.concatenate([[0.0], np.cumsum(sums)])
    if spec.assumption == "I":
        raw = cums - cums[-1]
        boundary_gap = float(raw[0])
    else:
        raw = cums
        boundary_gap = float(raw[-1])
    # The anchored end is zero exactly; the closing end only up to the
    # residual tolerance, and interior rounding can graze zero, so clip
    # (recording how deep the clip went) and pin both Dirichlet ends.
    clip_depth = float(max(0.0, -np.min(raw)))
    values_support = np.maximum(raw, 0.0)
    values_support[0] = 0.0
    values_support[-1] = 0.0

    h = (hi - lo) / (grid_n - 1)
    tl, tr = spec.target_interval
    if spec.assumption == "I":
        zero_len = lo - tl
        n_zero = int(math.ceil(zero_len / h)) if zero_len > 0 else 0
        zero_nodes = np.linspace(tl, lo, n_zero + 1)[:-1] if n_zero else np.empty(0)
        nodes = np.concatenate([zero_nodes, grid])
        values = np.concatenate([np.zeros(zero_nodes.size), values_support])
        support_slice = slice(zero_nodes.size, nodes.size)
    else:
        zero_len = tr - hi
        n_zero = int(math.ceil(zero_len / h)) if zero_len > 0 else 0
        zero_nodes = np.linspace(hi, tr, n_zero + 1)[1:] if n_zero else np.empty(0)
        nodes = np.concatenate([grid, zero_nodes])
        values = np.concatenate([values_support, np.zeros(zero_nodes.size)])
        support_slice = slice(0, grid.size)

    slope_nodes = slope_arr(grid)
    stress_ends = np.abs(dual.theta(np.array([lo, hi])))
    l_max, u_max = _invert_stress_sq(np.array([float(np.max(stress_ends)) ** 2]),
                                     spec.alpha, epsilon)
    mass = total_mass(m, spec, epsilon, constant=constant,
                      quad_tol=0.1 * mass_tol)
    o = spec.orientation
    expect_f = lambda y: 0.5 * (m * m - y * y) * _slope_many(
        _stress_on(y, constant, o), spec.alpha, epsilon)
    expectation = integrate(expect_f, lo, hi, tol=quad_tol,
                            breakpoints=(crossing,))
    profile = PchipInterpolator(grid, values_support, extrapolate=False)
    return DensitySolution(
        spec=spec, epsilon=epsilon, dual=dual, support_endpoint=m,
        support=support, crossing=crossing, nodes=nodes, values=values,
        slope_nodes=slope_nodes, support_slice=support_slice, mass=float(mass),
        expectation=float(expectation), max_abs_slope=float(np.sqrt(u_max[0])),
        max_log_lambda=float(l_max[0]), boundary_gap=boundary_gap,
        clip_depth=clip_depth, grid_n=grid_n, _profile=profile)


def solve_problem(spec: MongeProblemSpec, params: ApproxParams) -> DensitySolution:
    """`assemble_density` driven by an ApproxParams bundle."""
    return assemble_density(spec, params.epsilon, params.grid_n,
                            root_tol=params.root_tol, quad_tol=params.quad_tol)
