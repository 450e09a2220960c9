"""Expressivity measures: shallow length bound, Fourier regression, weight chaos.

Three independent probes of what depth buys:

* A hard upper bound on the Euclidean length a single hidden layer can
  give a curve: for monotone phi with dynamic range R and an input curve
  whose velocity projections change sign at most s times,
  L^E <= N_1 (1 + s) R, for any weights.

* A function-space probe: ridge-regress output activations over a theta
  grid onto each Fourier basis vector and score each frequency by the
  squared angle between prediction and target.

* Weight chaos: interpolate one layer's weight matrix along
  W(Delta) = sqrt(1-|Delta|) W + sqrt(|Delta|) dW and track the
  function-space correlation C^D(Delta) of the induced maps, against the
  mean-field recursion (layer 2 scaled by sqrt(1-|Delta|), deeper layers
  the ordinary c-map).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import UnsupportedActivationError
from .geometry import periodic_trapezoid
from .meanfield import EnsembleParams, c_map, length_fixed_point
from .quadrature import QuadratureRule, default_rule, expect1
from .simulator import CircleManifold, NetworkRealization, forward_from_first, sample_network


@dataclass(frozen=True)
class ShallowBoundSpec:
    """Inputs to the single-hidden-layer length bound."""

    n_hidden: int
    sign_changes: int
    dynamic_range: float

    def __post_init__(self):
        if self.n_hidden < 1:
            raise ValueError("n_hidden must be >= 1")
        if self.sign_changes < 0 or int(self.sign_changes) != self.sign_changes:
            raise ValueError("sign_changes must be a nonnegative integer")
        if not self.dynamic_range > 0:
            raise ValueError("dynamic_range must be positive")


def shallow_length_bound(spec: ShallowBoundSpec) -> float:
    """N_1 (1 + s) R."""
    return spec.n_hidden * (1 + spec.sign_changes) * spec.dynamic_range


@dataclass(frozen=True)
class ShallowBoundReport:
    spec: ShallowBoundSpec
    bound: float
    lengths: np.ndarray       # per-trial L^E in hidden-activity space
    max_length: float
    violations: int


def verify_shallow_bound(
    n_trials: int,
    n_hidden: int,
    params: EnsembleParams,
    circle: CircleManifold,
    seed: int,
) -> ShallowBoundReport:
    """Measure L^E of x^1(theta) = phi(W x^0(theta)) over random W.

    The circle input has s = 1 (each 1-D projection of its velocity is a
    sinusoid).  Bias after phi shifts the curve rigidly, so it never
    enters the length.
    """
    nl = params.nonlinearity
    if not nl.monotone_nondecreasing:
        raise UnsupportedActivationError("the length bound assumes a monotone nonlinearity")
    if nl.dynamic_range is None:
        raise UnsupportedActivationError(
            f"the length bound needs a bounded dynamic range; {nl.name!r} is unbounded"
        )
    spec = ShallowBoundSpec(n_hidden=n_hidden, sign_changes=1,
                            dynamic_range=nl.dynamic_range)
    bound = shallow_length_bound(spec)
    x0 = circle.h1()
    v0 = circle.v1()
    scale = params.sigma_w / math.sqrt(circle.width)
    children = np.random.SeedSequence(seed).spawn(n_trials)
    lengths = np.empty(n_trials)
    for t in range(n_trials):
        rng = np.random.default_rng(children[t])
        w = rng.normal(0.0, scale, size=(n_hidden, circle.width))
        h = x0 @ w.T
        v_hidden = nl.deriv1(h) * (v0 @ w.T)
        speed = np.sqrt(np.einsum("ij,ij->i", v_hidden, v_hidden))
        lengths[t] = periodic_trapezoid(speed, circle.thetas)
    violations = int(np.sum(lengths > bound))
    return ShallowBoundReport(spec=spec, bound=bound, lengths=lengths,
                              max_length=float(lengths.max()), violations=violations)


# ---------------------------------------------------------------------------
# Fourier regression harness


@dataclass(frozen=True)
class FourierProbe:
    """Fourier basis {1, cos k theta, sin k theta} on a uniform grid."""

    omega_max: int
    thetas: np.ndarray
    ridge: Optional[float] = None   # None: 1e-6 * trace(Gram) / n_columns

    def __post_init__(self):
        thetas = np.asarray(self.thetas, dtype=float)
        object.__setattr__(self, "thetas", thetas)
        if self.omega_max < 1:
            raise ValueError("omega_max must be >= 1")
        if thetas.size <= 2 * self.omega_max + 1:
            raise ValueError(
                f"{thetas.size} theta samples cannot resolve omega_max={self.omega_max}"
            )
        if self.ridge is not None and self.ridge < 0:
            raise ValueError("ridge must be nonnegative")
        basis = self.basis()
        gram = basis.T @ basis
        off = gram - np.diag(np.diag(gram))
        if np.max(np.abs(off)) > 1e-10 * np.max(np.diag(gram)):
            raise ValueError("basis columns are not orthogonal on this theta grid")

    def basis(self) -> np.ndarray:
        """(n_theta, 2*omega_max + 1) matrix; column 0 constant, then cos/sin pairs."""
        n = self.thetas.size
        cols = [np.ones(n)]
        for k in range(1, self.omega_max + 1):
            cols.append(np.cos(k * self.thetas))
            cols.append(np.sin(k * self.thetas))
        return np.stack(cols, axis=1)

    def column_frequencies(self) -> np.ndarray:
        freqs = [0]
        for k in range(1, self.omega_max + 1):
            freqs.extend([k, k])
        return np.asarray(freqs)


def uniform_probe(omega_max: int, n_theta: int, ridge: Optional[float] = None) -> FourierProbe:
    thetas = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    return FourierProbe(omega_max=omega_max, thetas=thetas, ridge=ridge)


@dataclass(frozen=True)
class FourierErrorProfile:
    frequencies: np.ndarray      # 0..omega_max
    errors: np.ndarray           # per frequency (cos/sin averaged)
    column_errors: np.ndarray    # per basis column
    ridge_used: float


def fourier_error_profile(activations: np.ndarray, probe: FourierProbe) -> FourierErrorProfile:
    """Per-frequency regression error of activations against the basis.

    For each basis column y, ridge least squares predicts yhat from the
    activation columns (plus a constant column); the error is the squared
    angle 1 - (yhat.y)^2 / (|yhat|^2 |y|^2), in [0, 1].
    """
    activations = np.asarray(activations, dtype=float)
    if activations.ndim != 2 or activations.shape[0] != probe.thetas.size:
        raise ValueError("activation rows must align with the probe theta grid")
    design = np.concatenate([activations, np.ones((activations.shape[0], 1))], axis=1)
    gram = design.T @ design
    n_cols = gram.shape[0]
    ridge = probe.ridge
    if ridge is None:
        ridge = 1e-6 * float(np.trace(gram)) / n_cols
    basis = probe.basis()
    rhs = design.T @ basis
    if ridge == 0.0 and np.linalg.matrix_rank(design) < n_cols:
        raise ValueError(
            "activation matrix is rank-deficient with ridge = 0; set a positive ridge"
        )
    system = gram + ridge * np.eye(n_cols)
    try:
        chol = np.linalg.cholesky(system)
    except np.linalg.LinAlgError:
        raise ValueError(
            "activation Gram matrix is not positive definite with ridge = 0; "
            "set a positive ridge"
        ) from None
    coef = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
    predictions = design @ coef
    y_norm_sq = np.einsum("ij,ij->j", basis, basis)
    yhat_norm_sq = np.einsum("ij,ij->j", predictions, predictions)
    overlaps = np.einsum("ij,ij->j", predictions, basis)
    column_errors = np.ones(basis.shape[1])
    usable = yhat_norm_sq > (np.finfo(float).eps * y_norm_sq) ** 1.0
    column_errors[usable] = 1.0 - overlaps[usable] ** 2 / (
        yhat_norm_sq[usable] * y_norm_sq[usable]
    )
    column_errors = np.clip(column_errors, 0.0, 1.0)
    freqs = probe.column_frequencies()
    frequencies = np.arange(probe.omega_max + 1)
    errors = np.array([column_errors[freqs == k].mean() for k in frequencies])
    return FourierErrorProfile(
        frequencies=frequencies,
        errors=errors,
        column_errors=column_errors,
        ridge_used=float(ridge),
    )


def random_fourier_function(probe: FourierProbe, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """A random band-limited target: i.i.d. standard-normal coefficients.

    Returns (coefficients, values on the probe grid).
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    basis = probe.basis()
    coeffs = rng.normal(size=basis.shape[1])
    return coeffs, basis @ coeffs


# ---------------------------------------------------------------------------
# weight chaos


@dataclass(frozen=True)
class WeightChaosFamily:
    """A one-parameter family of networks differing only in layer-2 weights."""

    base: NetworkRealization
    d_weights: np.ndarray        # perturbation matrix for layer 2
    delta_grid: np.ndarray
    c_theory: np.ndarray         # C^D(Delta) from the mean-field recursion
    c_empirical: np.ndarray      # measured C^D(Delta)


def weight_chaos_theory(
    params: EnsembleParams,
    delta: float,
    depth: int,
    rule: QuadratureRule | None = None,
    *,
    q_star: float | None = None,
) -> np.ndarray:
    """C^l(Delta) for l = 1..depth.

    C^1 = 1; the layer-2 update scales the weight term by sqrt(1-|Delta|);
    all deeper layers follow the ordinary c-map at q*.
    """
    if abs(delta) > 1.0:
        raise ValueError(f"delta must lie in [-1, 1], got {delta!r}")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    rule = rule or default_rule()
    if q_star is None:
        q_star = length_fixed_point(params, rule)
    if q_star <= 0.0:
        raise ValueError("weight-chaos recursion is undefined at q* = 0")
    out = np.empty(depth)
    out[0] = 1.0
    if depth == 1:
        return out
    phi = params.nonlinearity.value
    sq = math.sqrt(q_star)
    weight_term = params.sigma_w**2 * expect1(lambda z: phi(sq * z) ** 2, rule)
    q2 = math.sqrt(1.0 - abs(delta)) * weight_term + params.sigma_b**2
    out[1] = q2 / q_star
    for l in range(2, depth):
        out[l] = c_map(out[l - 1], params, rule, q_star=q_star)
    return out


def weight_chaos_empirical(
    params: EnsembleParams,
    widths,
    delta_grid,
    seed: int,
    *,
    n_theta: int = 256,
    rule: QuadratureRule | None = None,
) -> WeightChaosFamily:
    """Simulate the interpolated-weight family on a circle at radius q*.

    The circle is injected at the first layer, so the interpolated matrix
    is W^2; the base network, the perturbation, and the circle draw from
    independent child seeds of `seed`.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    if np.any(np.abs(delta_grid) > 1.0):
        raise ValueError("all deltas must lie in [-1, 1]")
    widths = tuple(int(n) for n in widths)
    if len(widths) < 3:
        raise ValueError("weight chaos needs depth >= 2 (widths N_0..N_D)")
    rule = rule or default_rule()
    q_star = length_fixed_point(params, rule)
    if q_star <= 0.0:
        raise ValueError("weight chaos is undefined at q* = 0")

    net_seed, dw_seed, circle_seed = (
        int(s) for s in np.random.SeedSequence(seed).generate_state(3)
    )
    base = sample_network(widths, params, net_seed)
    dw_rng = np.random.default_rng(np.random.SeedSequence(dw_seed))
    w2_shape = base.weights[1].shape
    d_weights = dw_rng.normal(0.0, params.sigma_w / math.sqrt(widths[1]), size=w2_shape)
    circle = CircleManifold.sample(widths[1], q_star, n_theta, circle_seed)
    h1 = circle.h1()

    depth = base.depth
    width_last = widths[-1]
    outputs = []
    for delta in delta_grid:
        w2 = math.sqrt(1.0 - abs(delta)) * base.weights[1] + math.sqrt(abs(delta)) * d_weights
        net = base.with_layer_weights(2, w2)
        outputs.append(forward_from_first(net, h1)[-1].h)
    h_ref = outputs[delta_grid.tolist().index(0.0)] if 0.0 in delta_grid else None
    if h_ref is None:
        base_out = forward_from_first(base, h1)[-1].h
        h_ref = base_out

    q_ref = float(np.mean(np.einsum("ij,ij->i", h_ref, h_ref))) / width_last
    c_emp = np.empty(delta_grid.size)
    for k, h_out in enumerate(outputs):
        q_cross = float(np.mean(np.einsum("ij,ij->i", h_ref, h_out))) / width_last
        q_self = float(np.mean(np.einsum("ij,ij->i", h_out, h_out))) / width_last
        c_emp[k] = q_cross / math.sqrt(q_ref * q_self)

    c_theory = np.array([
        weight_chaos_theory(params, d, depth, rule, q_star=q_star)[-1]
        for d in delta_grid
    ])
    return WeightChaosFamily(
        base=base,
        d_weights=d_weights,
        delta_grid=delta_grid,
        c_theory=c_theory,
        c_empirical=c_emp,
    )
