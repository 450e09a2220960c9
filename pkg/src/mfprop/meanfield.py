"""Iterative mean-field maps for wide random deep networks.

For a network with i.i.d. Gaussian weights (variance sigma_w^2 / fan-in)
and biases (variance sigma_b^2), the per-neuron squared pre-activation
length q^l evolves under the length map

    V(q) = sigma_w^2 * E[ phi(sqrt(q) z)^2 ] + sigma_b^2,

with the affine first layer q^1 = sigma_w^2 q^0 + sigma_b^2.  Two inputs
with correlation c evolve under the correlation map; normalizing both
lengths at the fixed point q* gives the scalar c-map

    c  ->  ( sigma_w^2 * E[ phi(u1) phi(u2) ] + sigma_b^2 ) / q*,

whose slope at c=1,

    chi1 = sigma_w^2 * E[ phi'(sqrt(q*) z)^2 ],

separates an ordered phase (chi1 < 1, nearby inputs converge, c* = 1) from
a chaotic phase (chi1 > 1, nearby inputs decorrelate, c* < 1).  The
second-derivative analogue

    chi2 = sigma_w^2 * E[ phi''(sqrt(q*) z)^2 ]

drives the layerwise evolution of the extrinsic geometry of a 1-D manifold
at the fixed-point radius:

    gE_l     = chi1 * gE_{l-1},            gE_1     = q*,
    kappa2_l = 3 chi2 / chi1^2 + kappa2_{l-1} / chi1,   kappa2_1 = 1/q*,

(per-neuron normalized quantities), whose kappa2 fixed point is
3 chi2 / (chi1 (chi1 - 1)) when chi1 > 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .activations import Nonlinearity
from .errors import ConvergenceError, UnsupportedActivationError
from .quadrature import QuadratureRule, default_rule, expect1, expect2_product

# Fixed-point iteration budgets.  Correlation dynamics are slow near the
# critical line, hence the larger cap and the convergence flag.
_Q_TOL = 1e-12
_Q_MAX_ITER = 10_000
_C_TOL = 1e-12
_C_MAX_ITER = 100_000
_C_INIT = 0.999  # start just below the (possibly unstable) c* = 1


@dataclass(frozen=True)
class EnsembleParams:
    """A point (sigma_w, sigma_b) of the weight/bias-variance plane."""

    sigma_w: float
    sigma_b: float
    nonlinearity: Nonlinearity

    def __post_init__(self):
        if not (np.isfinite(self.sigma_w) and self.sigma_w >= 0):
            raise ValueError(f"sigma_w must be a finite nonnegative real, got {self.sigma_w!r}")
        if not (np.isfinite(self.sigma_b) and self.sigma_b >= 0):
            raise ValueError(f"sigma_b must be a finite nonnegative real, got {self.sigma_b!r}")


@dataclass(frozen=True)
class LengthTrajectory:
    q0: float
    values: np.ndarray          # q^l for layers l = 1..depth
    q_star: float
    iterations_to_1pct: int


@dataclass(frozen=True)
class ChiFactors:
    chi1: float
    chi2: Optional[float]       # None when phi'' is not smooth
    q_star: float


@dataclass(frozen=True)
class CorrelationTrajectory:
    values: np.ndarray          # c^l for layers l = 1..depth, values[0] = c0
    c_star: float
    c_star_converged: bool
    chi: ChiFactors


@dataclass(frozen=True)
class CurvatureTrajectory:
    gE: np.ndarray              # per-neuron Euclidean metric, layers 1..depth
    kappa_sq: np.ndarray        # squared normalized extrinsic curvature
    LE_norm: np.ndarray         # 2 pi sqrt(gE)
    LG: np.ndarray              # 2 pi sqrt(gE * kappa_sq)
    kappa_star_sq: float        # inf when the recursion has no finite fixed point
    diverges: bool
    chi: ChiFactors


@dataclass(frozen=True)
class PhaseGrid:
    sigma_w_axis: np.ndarray
    sigma_b_axis: np.ndarray
    q_star: np.ndarray          # shape (n_w, n_b)
    c_star: np.ndarray
    chi1: np.ndarray
    c_converged: np.ndarray     # bool, per cell
    boundary: np.ndarray        # rows (sigma_b, sigma_w_star); NaN where not found
    cell_errors: dict = field(default_factory=dict)  # (i_w, j_b) -> message


# ---------------------------------------------------------------------------
# length map


def length_map(q: float, params: EnsembleParams, rule: QuadratureRule | None = None) -> float:
    """One application of the variance map V(q)."""
    if not (np.isfinite(q) and q >= 0):
        raise ValueError(f"q must be a finite nonnegative real, got {q!r}")
    rule = rule or default_rule()
    phi = params.nonlinearity.value
    sq = math.sqrt(q)
    moment = expect1(lambda z: phi(sq * z) ** 2, rule)
    return params.sigma_w**2 * moment + params.sigma_b**2


def length_fixed_point(
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
    *,
    max_iter: int = _Q_MAX_ITER,
) -> float:
    """Stable fixed point q* of the length map.

    Direct iteration from q=1.0; if that provably cannot reach tolerance
    within the budget (critical slowing-down) falls back to bisection on
    V(q) - q.  The returned value satisfies |V(q*) - q*| < 1e-10 wherever
    floating point permits (evaluating V carries ~eps*q* noise, so for
    huge fixed points the bound is relative instead).
    """
    rule = rule or default_rule()
    q = 1.0
    prev_delta = math.inf
    for i in range(max_iter):
        if not np.isfinite(q) or q > 1e100:
            break  # clearly diverging; let the fallback classify it
        q_next = length_map(q, params, rule)
        delta = abs(q_next - q)
        q = q_next
        if delta <= max(1e-15, 8.0 * np.finfo(float).eps * abs(q)):
            residual = abs(length_map(q, params, rule) - q)
            if residual < _residual_tol(q):
                if params.sigma_b == 0.0 and q < 1e-12:
                    return 0.0  # bias-free decay to the origin
                return q
            break
        # Projected-failure early exit: under linear convergence at the
        # observed per-iteration rate the remaining budget cannot reach
        # tolerance.
        if i % 128 == 127:
            if np.isfinite(prev_delta) and prev_delta > 0:
                rate = (delta / prev_delta) ** (1.0 / 128.0)
                if rate >= 1.0:
                    break
                remaining = max_iter - i
                if delta * rate**remaining > 4.0 * _Q_TOL:
                    break
            prev_delta = delta
    return _length_fixed_point_bisect(params, rule, last_iterate=q)


def _residual_tol(q: float) -> float:
    # 1e-10 in the theory's operating regime; scaled by q where rounding
    # noise in V(q) itself (~eps * q) makes an absolute bound meaningless
    return max(1e-10, 64.0 * np.finfo(float).eps * abs(q))


def _length_fixed_point_bisect(
    params: EnsembleParams, rule: QuadratureRule, *, last_iterate: float
) -> float:
    g = lambda q: length_map(q, params, rule) - q
    eps_q = 1e-18
    if params.sigma_b == 0.0 and abs(length_map(0.0, params, rule)) == 0.0:
        # V(0) = 0; the origin is a fixed point.  It is the stable one
        # iff the map is contracting there.
        if g(eps_q) <= 0.0:
            return 0.0
        lo = eps_q
    else:
        lo = 0.0
    hi = max(1.0, min(last_iterate, 1e100) if np.isfinite(last_iterate) else 1.0)
    doubles = 0
    while g(hi) > 0.0:
        hi *= 2.0
        doubles += 1
        if doubles > 60:
            raise ConvergenceError(
                f"length map has no finite fixed point for sigma_w={params.sigma_w}, "
                f"sigma_b={params.sigma_b} (expansive map); last iterate {last_iterate!r}",
                last_value=last_iterate,
            )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    q_star = 0.5 * (lo + hi)
    residual = abs(g(q_star))
    if residual >= _residual_tol(q_star):
        raise ConvergenceError(
            f"fixed-point residual {residual:.3e} exceeds tolerance at q={q_star!r}",
            last_value=q_star,
        )
    return q_star


def length_trajectory(
    q0: float,
    depth: int,
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
) -> LengthTrajectory:
    """Layerwise theory trajectory q^1..q^depth from input length q0.

    The first layer is affine in the input, q^1 = sigma_w^2 q^0 + sigma_b^2;
    deeper layers apply the length map.  `iterations_to_1pct` counts layers
    until |q^l - q*| <= 0.01 q* (absolute 1e-8 when q* = 0), continuing past
    `depth` if necessary.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if not (np.isfinite(q0) and q0 >= 0):
        raise ValueError(f"q0 must be a finite nonnegative real, got {q0!r}")
    rule = rule or default_rule()
    values = np.empty(depth)
    values[0] = params.sigma_w**2 * q0 + params.sigma_b**2
    for l in range(1, depth):
        values[l] = length_map(values[l - 1], params, rule)
    q_star = length_fixed_point(params, rule)

    def close(q):
        if q_star == 0.0:
            return abs(q - q_star) <= 1e-8
        return abs(q - q_star) / q_star <= 0.01

    # reported as the iteration cap when never reached (possible only for
    # marginal maps, e.g. the identity map of a critical linear network)
    iterations = _Q_MAX_ITER
    q = values[0]
    for l in range(1, _Q_MAX_ITER + 1):
        if close(q):
            iterations = l
            break
        q = length_map(q, params, rule)
    return LengthTrajectory(q0=q0, values=values, q_star=q_star,
                            iterations_to_1pct=iterations)


# ---------------------------------------------------------------------------
# correlation map


def correlation_map(
    c12: float,
    q11: float,
    q22: float,
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
) -> float:
    """Next-layer cross-covariance q_12 for inputs with lengths q11, q22."""
    rule = rule or default_rule()
    phi = params.nonlinearity.value
    moment = expect2_product(phi, phi, c12, q11, q22, rule)
    return params.sigma_w**2 * moment + params.sigma_b**2


def c_map(
    c: float,
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
    *,
    q_star: float | None = None,
) -> float:
    """Correlation-coefficient map at the fixed-point length."""
    rule = rule or default_rule()
    if q_star is None:
        q_star = length_fixed_point(params, rule)
    if q_star <= 0.0:
        raise ValueError("c-map is undefined at q* = 0 (zero fixed-point length)")
    return correlation_map(c, q_star, q_star, params, rule) / q_star


def chi1(
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
    *,
    q_star: float | None = None,
) -> float:
    """Slope of the c-map at c = 1: sigma_w^2 E[phi'(sqrt(q*) z)^2]."""
    rule = rule or default_rule()
    if q_star is None:
        q_star = length_fixed_point(params, rule)
    d1 = params.nonlinearity.deriv1
    sq = math.sqrt(q_star)
    return params.sigma_w**2 * expect1(lambda z: d1(sq * z) ** 2, rule)


def chi2(
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
    *,
    q_star: float | None = None,
) -> float:
    """Curvature injection factor: sigma_w^2 E[phi''(sqrt(q*) z)^2].

    Defined only for activations with a smooth second derivative; for
    piecewise-linear phi the quantity is distributional and refusing is
    more honest than returning 0.
    """
    nl = params.nonlinearity
    if not nl.has_smooth_second_derivative:
        raise UnsupportedActivationError(
            f"chi2 requires a smooth second derivative; {nl.name!r} is piecewise linear"
        )
    rule = rule or default_rule()
    if q_star is None:
        q_star = length_fixed_point(params, rule)
    d2 = nl.deriv2
    sq = math.sqrt(q_star)
    return params.sigma_w**2 * expect1(lambda z: d2(sq * z) ** 2, rule)


def chi_factors(
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
    *,
    q_star: float | None = None,
) -> ChiFactors:
    rule = rule or default_rule()
    if q_star is None:
        q_star = length_fixed_point(params, rule)
    x1 = chi1(params, rule, q_star=q_star)
    x2 = (chi2(params, rule, q_star=q_star)
          if params.nonlinearity.has_smooth_second_derivative else None)
    return ChiFactors(chi1=x1, chi2=x2, q_star=q_star)


def _c_star(
    params: EnsembleParams,
    rule: QuadratureRule,
    q_star: float,
    *,
    c_init: float = _C_INIT,
    tol: float = _C_TOL,
    max_iter: int = _C_MAX_ITER,
) -> tuple[float, bool, int]:
    """Iterate the c-map to its stable fixed point.

    Returns (c_star, converged, iterations).  Near the critical line the
    map is marginally stable; if the observed contraction rate proves the
    budget insufficient, stops early with converged=False.
    """
    c = c_init
    prev_delta = math.inf
    for i in range(max_iter):
        c_next = c_map(c, params, rule, q_star=q_star)
        c_next = min(1.0, max(-1.0, c_next))
        delta = abs(c_next - c)
        c = c_next
        if delta <= tol:
            return c, True, i + 1
        if i % 512 == 511:
            if np.isfinite(prev_delta) and prev_delta > 0:
                rate = (delta / prev_delta) ** (1.0 / 512.0)
                if rate >= 1.0:
                    return c, False, i + 1
                remaining = max_iter - i
                if delta * rate**remaining > 8.0 * tol:
                    return c, False, i + 1
            prev_delta = delta
    return c, False, max_iter


def correlation_trajectory(
    c0: float,
    depth: int,
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
) -> CorrelationTrajectory:
    """Layerwise c^1..c^depth under the c-map, starting at c^1 = c0."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if abs(c0) > 1.0:
        raise ValueError(f"c0 must lie in [-1, 1], got {c0!r}")
    rule = rule or default_rule()
    q_star = length_fixed_point(params, rule)
    values = np.empty(depth)
    values[0] = c0
    for l in range(1, depth):
        values[l] = c_map(values[l - 1], params, rule, q_star=q_star)
    c_star, converged, _ = _c_star(params, rule, q_star)
    chi = chi_factors(params, rule, q_star=q_star)
    return CorrelationTrajectory(values=values, c_star=c_star,
                                 c_star_converged=converged, chi=chi)


# ---------------------------------------------------------------------------
# curvature recursion


def curvature_trajectory(
    depth: int,
    params: EnsembleParams,
    rule: QuadratureRule | None = None,
) -> CurvatureTrajectory:
    """Evolution of (gE, kappa^2) for a circle at the fixed-point radius."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    rule = rule or default_rule()
    q_star = length_fixed_point(params, rule)
    if q_star <= 0.0:
        raise ValueError("curvature recursion is undefined at q* = 0")
    chi = chi_factors(params, rule, q_star=q_star)
    if chi.chi2 is None:
        raise UnsupportedActivationError(
            f"curvature recursion requires a smooth second derivative; "
            f"{params.nonlinearity.name!r} lacks one"
        )
    x1, x2 = chi.chi1, chi.chi2
    if x1 == 0.0:
        raise ValueError("chi1 = 0: curvature recursion is degenerate")
    gE = np.empty(depth)
    kappa_sq = np.empty(depth)
    gE[0] = q_star
    kappa_sq[0] = 1.0 / q_star
    for l in range(1, depth):
        gE[l] = x1 * gE[l - 1]
        kappa_sq[l] = 3.0 * x2 / x1**2 + kappa_sq[l - 1] / x1
    if x1 > 1.0:
        kappa_star_sq = 3.0 * x2 / (x1 * (x1 - 1.0))
        diverges = False
    else:
        kappa_star_sq = math.inf
        diverges = True
    return CurvatureTrajectory(
        gE=gE,
        kappa_sq=kappa_sq,
        LE_norm=2.0 * math.pi * np.sqrt(gE),
        LG=2.0 * math.pi * np.sqrt(gE * kappa_sq),
        kappa_star_sq=kappa_star_sq,
        diverges=diverges,
        chi=chi,
    )


# ---------------------------------------------------------------------------
# phase diagram


def phase_boundary(
    sigma_b: float,
    nonlinearity: Nonlinearity,
    rule: QuadratureRule | None = None,
    *,
    bracket: tuple[float, float] = (1e-3, 10.0),
    tol: float = 1e-8,
    scan_points: int = 9,
) -> float:
    """sigma_w at which chi1 crosses 1, at fixed sigma_b, by bisection.

    A coarse scan first verifies chi1 is nondecreasing in sigma_w over the
    bracket and that a sign change exists.  Ensembles whose length map has
    no finite fixed point (unbounded activations at large sigma_w) count
    as chaotic: lengths and perturbations both grow without bound there,
    and for positively homogeneous activations expansiveness is exactly
    chi1 > 1.
    """
    if sigma_b < 0:
        raise ValueError(f"sigma_b must be nonnegative, got {sigma_b!r}")
    rule = rule or default_rule()

    def chi1_at(sw: float) -> float:
        params = EnsembleParams(sw, sigma_b, nonlinearity)
        try:
            return chi1(params, rule)
        except ConvergenceError:
            return math.inf

    lo, hi = bracket
    scan = np.geomspace(lo, hi, scan_points)
    chis = [chi1_at(s) for s in scan]
    if any(b < a - 1e-9 for a, b in zip(chis, chis[1:])):
        raise ConvergenceError(
            f"chi1 is not monotone increasing in sigma_w over {bracket} at sigma_b={sigma_b}"
        )
    if not (chis[0] < 1.0 < chis[-1]):
        raise ConvergenceError(
            f"chi1 - 1 does not change sign over sigma_w in {bracket} at sigma_b={sigma_b}"
        )
    # Bisect on the sign until the interval is exhausted rather than
    # stopping at the first |chi1 - 1| < tol: where the crossing is
    # tangential (sigma_b = 0) chi1 is flat near 1 and an early stop can
    # sit well away from the true boundary.
    mid = 0.5 * (lo + hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if chi1_at(mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    # Witness the residual at the bracket endpoints; the chaotic side can
    # be infinite (expansive map) right at a first-order transition.
    residual = min(abs(chi1_at(lo) - 1.0), abs(chi1_at(hi) - 1.0))
    if residual >= tol:
        raise ConvergenceError(
            f"bisection stalled: |chi1 - 1| = {residual:.3e} at sigma_w = {mid!r}"
        )
    return mid


def phase_grid(
    sigma_w_axis,
    sigma_b_axis,
    nonlinearity: Nonlinearity,
    rule: QuadratureRule | None = None,
    *,
    with_boundary: bool = True,
    n_workers: int | None = None,
) -> PhaseGrid:
    """Evaluate q*, c*, chi1 on a (sigma_w, sigma_b) grid.

    Per-cell failures (no fixed point, undefined c-map) are recorded in
    `cell_errors` with NaN entries; the sweep never aborts.  Cells are
    independent, so results are identical regardless of worker count.
    """
    sw_axis = np.asarray(sigma_w_axis, dtype=float)
    sb_axis = np.asarray(sigma_b_axis, dtype=float)
    if sw_axis.size < 2 or sb_axis.size < 2:
        raise ValueError("phase grid needs at least 2 samples per axis")
    if np.any(np.diff(sw_axis) <= 0) or np.any(np.diff(sb_axis) <= 0):
        raise ValueError("grid axes must be strictly increasing")
    rule = rule or default_rule()

    n_w, n_b = sw_axis.size, sb_axis.size
    q_star = np.full((n_w, n_b), np.nan)
    c_star = np.full((n_w, n_b), np.nan)
    chi = np.full((n_w, n_b), np.nan)
    converged = np.zeros((n_w, n_b), dtype=bool)
    errors: dict[tuple[int, int], str] = {}

    def evaluate_cell(idx: tuple[int, int]):
        i, j = idx
        params = EnsembleParams(sw_axis[i], sb_axis[j], nonlinearity)
        try:
            qs = length_fixed_point(params, rule)
            x1 = chi1(params, rule, q_star=qs)
        except (ConvergenceError, ValueError) as exc:
            return idx, (np.nan, np.nan, np.nan, False, str(exc))
        if qs <= 0.0:
            return idx, (qs, np.nan, x1, False, "c-map undefined at q* = 0")
        cs, ok, _ = _c_star(params, rule, qs)
        return idx, (qs, cs, x1, ok, None)

    cells = [(i, j) for i in range(n_w) for j in range(n_b)]
    if n_workers and n_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(evaluate_cell, cells))
    else:
        results = [evaluate_cell(c) for c in cells]

    for (i, j), (qs, cs, x1, ok, err) in results:
        q_star[i, j] = qs
        c_star[i, j] = cs
        chi[i, j] = x1
        converged[i, j] = ok
        if err is not None:
            errors[(i, j)] = err

    boundary = np.full((n_b, 2), np.nan)
    if with_boundary:
        for j, sb in enumerate(sb_axis):
            boundary[j, 0] = sb
            try:
                boundary[j, 1] = phase_boundary(sb, nonlinearity, rule)
            except (ConvergenceError, ValueError) as exc:
                errors[("boundary", j)] = str(exc)

    return PhaseGrid(
        sigma_w_axis=sw_axis,
        sigma_b_axis=sb_axis,
        q_star=q_star,
        c_star=c_star,
        chi1=chi,
        c_converged=converged,
        boundary=boundary,
        cell_errors=errors,
    )
