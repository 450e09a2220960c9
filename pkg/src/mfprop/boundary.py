"""Curvature of a decision boundary backpropagated into earlier layers.

A linear readout y = sgn(beta . x^D - beta0) defines a flat boundary in
the last layer.  Seen from layer l, the boundary is the level set of

    G(x) = beta . x^D(x) - beta0

where x ranges over layer-l activity space and x^D(x) is the suffix of the
feedforward map.  Its local shape at a point x* with G(x*) = 0 is captured
by the normalized Hessian projected onto the tangent plane,

    H = |grad G|^-1  P (d^2 G / dx dx^T) P,      P = I - n n^T,

with n the unit normal grad G / |grad G|.  The N-1 nontrivial eigenvalues
of H, sorted descending, are the signed principal curvatures; positive
values bend the boundary toward the side where G decreases (a sphere
|x|^2 - r^2 = 0 has all curvatures +1/r).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateGeometryError
from .simulator import NetworkRealization

# Boundary membership: |G| below this multiple of |beta| counts as "on the
# boundary" (scale-free in the readout).
BOUNDARY_TOL_FACTOR = 1e-8


@dataclass(frozen=True)
class LinearReadout:
    beta: np.ndarray
    beta0: float = 0.0

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        object.__setattr__(self, "beta", beta)
        if beta.ndim != 1 or float(np.linalg.norm(beta)) == 0.0:
            raise ValueError("readout weight vector must be a nonzero 1-D vector")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.beta))


@dataclass(frozen=True)
class BoundaryPoint:
    layer: int
    x_star: np.ndarray
    residual: float
    grad_norm: float


@dataclass(frozen=True)
class PrincipalCurvatureReport:
    layer: int
    kappas: np.ndarray           # N-1 values, sorted descending
    removed_eigenvalue: float
    normal_alignment: float      # |cos| between removed eigenvector and the normal
    hessian_asymmetry: float     # ||H - H^T|| / ||H|| before symmetrization


@dataclass(frozen=True)
class ScalarField:
    """A differentiable scalar function of layer-l activity.

    `value_and_grad` maps x -> (G(x), grad G(x)).  `tol_scale` sets the
    boundary tolerance (the readout norm for network suffixes).
    """

    dim: int
    layer: int
    value_and_grad: Callable[[np.ndarray], tuple[float, np.ndarray]]
    tol_scale: float = 1.0


def readout_value_and_gradient(
    net: NetworkRealization,
    readout: LinearReadout,
    layer: int,
    x: np.ndarray,
) -> tuple[float, np.ndarray]:
    """G and its exact gradient for the suffix starting at layer-l activity."""
    if not 0 <= layer <= net.depth:
        raise ValueError(f"layer must be in 0..{net.depth}, got {layer}")
    x = np.asarray(x, dtype=float)
    if x.shape != (net.widths[layer],):
        raise ValueError(f"x has shape {x.shape}, expected ({net.widths[layer]},)")
    if readout.beta.shape != (net.widths[net.depth],):
        raise ValueError("readout dimension does not match the last layer")
    nl = net.nonlinearity
    hs = []
    activity = x
    for j in range(layer + 1, net.depth + 1):
        h = net.weights[j - 1] @ activity + net.biases[j - 1]
        hs.append(h)
        activity = nl.value(h)
    value = float(readout.beta @ activity) - readout.beta0
    grad = readout.beta.copy()
    for j in range(net.depth, layer, -1):
        grad = net.weights[j - 1].T @ (nl.deriv1(hs[j - layer - 1]) * grad)
    return value, grad


def readout_field(net: NetworkRealization, readout: LinearReadout, layer: int) -> ScalarField:
    return ScalarField(
        dim=net.widths[layer],
        layer=layer,
        value_and_grad=lambda x: readout_value_and_gradient(net, readout, layer, x),
        tol_scale=readout.norm,
    )


def find_boundary_point(
    field: ScalarField,
    x_init: np.ndarray,
    max_iters: int = 10_000,
) -> BoundaryPoint:
    """Descend G^2 to the level set G = 0 with a backtracking line search.

    The initial trial step each iteration is the scalar-Newton step
    G / |grad G|^2 along the gradient, halved until G^2 decreases
    (Armijo condition); only the converged point matters.
    """
    x = np.asarray(x_init, dtype=float).copy()
    if x.shape != (field.dim,):
        raise ValueError(f"x_init has shape {x.shape}, expected ({field.dim},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("x_init must be finite")
    tol = BOUNDARY_TOL_FACTOR * field.tol_scale
    value, grad = field.value_and_grad(x)
    best = abs(value)
    for _ in range(max_iters):
        if abs(value) < tol:
            return BoundaryPoint(layer=field.layer, x_star=x, residual=abs(value),
                                 grad_norm=float(np.linalg.norm(grad)))
        gnorm_sq = float(grad @ grad)
        f0 = value * value
        if gnorm_sq <= (np.finfo(float).eps * field.tol_scale) ** 2 * max(1.0, f0):
            raise DegenerateGeometryError(
                f"vanishing gradient (|grad|^2={gnorm_sq:.3e}) away from the boundary "
                f"(|G|={abs(value):.3e}): stalled at a saddle of G"
            )
        # descent direction for f = G^2 is -2 G grad; t=1 below is the
        # scalar-Newton step x - (G/|grad|^2) grad
        t = 1.0
        step = (value / gnorm_sq) * grad
        slope = -2.0 * value * value  # directional derivative of f along -step/t
        accepted = False
        for _ in range(60):
            x_try = x - t * step
            v_try, g_try = field.value_and_grad(x_try)
            if v_try * v_try <= f0 + 1e-4 * t * slope:
                x, value, grad = x_try, v_try, g_try
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise ConvergenceError(
                f"line search failed at |G|={abs(value):.3e}", last_value=abs(value)
            )
        best = min(best, abs(value))
    if abs(value) < tol:
        return BoundaryPoint(layer=field.layer, x_star=x, residual=abs(value),
                             grad_norm=float(np.linalg.norm(grad)))
    raise ConvergenceError(
        f"boundary search did not converge in {max_iters} iterations; "
        f"best residual {best:.3e} (tolerance {tol:.3e})",
        iterations=max_iters, last_value=best,
    )


def find_network_boundary_point(
    net: NetworkRealization,
    readout: LinearReadout,
    layer: int,
    x_init: np.ndarray,
    max_iters: int = 10_000,
) -> BoundaryPoint:
    return find_boundary_point(readout_field(net, readout, layer), x_init, max_iters)


def principal_curvatures(
    field: ScalarField,
    point: BoundaryPoint,
    *,
    fd_step_scale: float = 1e-4,
) -> PrincipalCurvatureReport:
    """Signed principal curvatures of the level set at a boundary point.

    The Hessian is assembled column-by-column from central finite
    differences of the exact gradient, symmetrized, projected onto the
    tangent plane and normalized by |grad G|; the single eigenvalue along
    the normal direction is removed after verifying it is numerically zero.
    """
    x = np.asarray(point.x_star, dtype=float)
    tol = BOUNDARY_TOL_FACTOR * field.tol_scale
    value, grad = field.value_and_grad(x)
    if abs(value) >= tol:
        raise ValueError(f"point is not on the boundary: |G|={abs(value):.3e} >= {tol:.3e}")
    grad_norm = float(np.linalg.norm(grad))
    if grad_norm == 0.0:
        raise DegenerateGeometryError("gradient vanishes at the boundary point")
    n = x.size
    delta = fd_step_scale * (1.0 + float(np.linalg.norm(x)))
    hessian = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = delta
        _, g_plus = field.value_and_grad(x + e)
        _, g_minus = field.value_and_grad(x - e)
        hessian[:, i] = (g_plus - g_minus) / (2.0 * delta)
    h_norm = float(np.linalg.norm(hessian))
    asymmetry = 0.0 if h_norm == 0.0 else float(np.linalg.norm(hessian - hessian.T)) / h_norm
    hessian = 0.5 * (hessian + hessian.T)
    normal = grad / grad_norm
    projected = hessian - np.outer(normal, normal @ hessian)
    projected = projected - np.outer(projected @ normal, normal)
    projected /= grad_norm
    eigvals, eigvecs = np.linalg.eigh(projected)
    alignments = np.abs(eigvecs.T @ normal)
    max_abs = float(np.max(np.abs(eigvals))) if n else 0.0
    threshold = 1e-6 * max_abs + 1e-12
    # the normal direction is in the kernel of the projection; drop the
    # near-zero eigenvalue whose eigenvector points along the normal
    near_zero = np.flatnonzero(np.abs(eigvals) < threshold)
    if near_zero.size == 0:
        raise DegenerateGeometryError(
            "no near-zero eigenvalue to assign to the normal direction "
            f"(min |eig| = {np.min(np.abs(eigvals)):.3e}, threshold {threshold:.3e})"
        )
    drop = int(near_zero[np.argmax(alignments[near_zero])])
    kappas = np.delete(eigvals, drop)
    return PrincipalCurvatureReport(
        layer=point.layer,
        kappas=np.sort(kappas)[::-1],
        removed_eigenvalue=float(eigvals[drop]),
        normal_alignment=float(alignments[drop]),
        hessian_asymmetry=asymmetry,
    )


@dataclass(frozen=True)
class LayerCurvatureSummary:
    layer: int
    n_converged: int
    n_attempted: int
    mean_top: np.ndarray         # mean of kappa_1..kappa_4 across points
    mean_bottom: np.ndarray      # mean of kappa_{N-4}..kappa_{N-1}
    reports: tuple[PrincipalCurvatureReport, ...]


def curvature_vs_depth(
    net: NetworkRealization,
    readout: LinearReadout,
    n_points: int,
    seed: int,
    *,
    max_iters: int = 10_000,
    layers: Sequence[int] | None = None,
    init_scale: float = 1.0,
    propagate_inits: bool = False,
) -> list[LayerCurvatureSummary]:
    """Boundary curvature summaries for suffixes from layer D-1 down to 0.

    Search starts are Gaussian with std `init_scale` per coordinate; with
    `propagate_inits` they are random inputs pushed through the network
    prefix to the layer, so starts carry the layer's true activity
    statistics.  Layers where no point converges are reported with
    n_converged = 0 and NaN summaries; the sweep continues.
    """
    if net.depth < 2:
        raise ValueError("curvature-vs-depth needs depth >= 2")
    if layers is None:
        layers = range(net.depth - 1, -1, -1)
    from .simulator import forward  # local import to avoid a cycle

    summaries = []
    for layer in layers:
        field = readout_field(net, readout, layer)
        # one child stream per (layer, point) keeps inits independent of
        # how many layers or points were requested before
        reports = []
        for p in range(n_points):
            child = np.random.SeedSequence(entropy=seed, spawn_key=(layer, p))
            if propagate_inits:
                x_raw = np.random.default_rng(child).normal(size=net.widths[0]) * init_scale
                if layer == 0:
                    x_init = x_raw
                else:
                    h = forward(net, x_raw)[layer - 1].h
                    x_init = net.nonlinearity.value(h)
            else:
                x_init = np.random.default_rng(child).normal(size=field.dim) * init_scale
            try:
                pt = find_boundary_point(field, x_init, max_iters)
                reports.append(principal_curvatures(field, pt))
            except (ConvergenceError, DegenerateGeometryError):
                continue
        if reports:
            tops = np.mean([r.kappas[:4] for r in reports], axis=0)
            bottoms = np.mean([r.kappas[-4:] for r in reports], axis=0)
        else:
            tops = np.full(4, np.nan)
            bottoms = np.full(4, np.nan)
        summaries.append(LayerCurvatureSummary(
            layer=layer,
            n_converged=len(reports),
            n_attempted=n_points,
            mean_top=tops,
            mean_bottom=bottoms,
            reports=tuple(reports),
        ))
    return summaries
