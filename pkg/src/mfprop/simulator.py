"""Finite-width Monte-Carlo simulator for random deep networks.

Samples concrete realizations of the Gaussian network ensemble (weights
i.i.d. N(0, sigma_w^2 / fan_in), biases N(0, sigma_b^2)) and propagates
points, point pairs, circle manifolds, and exact derivative jets through

    x^l = phi(h^l),    h^l = W^l x^{l-1} + b^l.

Derivative jets along a 1-D manifold coordinate theta follow the chain
rule layer by layer:

    v^l = W^l ( phi'(h^{l-1}) . v^{l-1} )
    a^l = W^l ( phi''(h^{l-1}) . v^{l-1} . v^{l-1} + phi'(h^{l-1}) . a^{l-1} )

Each layer draws from an independent child of the realization seed, so
truncating the depth never changes shallower layers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .activations import Nonlinearity, builtin
from .errors import UnsupportedActivationError
from .meanfield import EnsembleParams


@dataclass(frozen=True)
class NetworkRealization:
    """One sampled network: weights W^1..W^D and biases b^1..b^D."""

    widths: tuple[int, ...]              # N_0 .. N_D
    weights: tuple[np.ndarray, ...]      # W^l of shape (N_l, N_{l-1})
    biases: tuple[np.ndarray, ...]       # b^l of shape (N_l,)
    nonlinearity: Nonlinearity
    seed: int
    sigma_w: float
    sigma_b: float

    def __post_init__(self):
        depth = len(self.weights)
        if depth != len(self.biases) or depth != len(self.widths) - 1:
            raise ValueError("inconsistent widths/weights/biases")
        for l, (w, b) in enumerate(zip(self.weights, self.biases), start=1):
            if w.shape != (self.widths[l], self.widths[l - 1]) or b.shape != (self.widths[l],):
                raise ValueError(f"layer {l} matrices do not match widths")

    @property
    def depth(self) -> int:
        return len(self.weights)

    def with_layer_weights(self, layer: int, matrix: np.ndarray) -> "NetworkRealization":
        """Copy of this realization with W^layer replaced (1-based layer)."""
        if not 1 <= layer <= self.depth:
            raise ValueError(f"layer must be in 1..{self.depth}, got {layer}")
        if matrix.shape != self.weights[layer - 1].shape:
            raise ValueError("replacement weight shape mismatch")
        ws = list(self.weights)
        ws[layer - 1] = matrix
        return replace(self, weights=tuple(ws))


@dataclass(frozen=True)
class LayerRecord:
    """Pre-activations (and optional jet arrays) at one layer."""

    layer: int
    h: np.ndarray
    v: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CircleManifold:
    """A circle of squared radius-per-neuron q in a random 2-D subspace."""

    width: int
    q: float
    u0: np.ndarray
    u1: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        if self.q < 0:
            raise ValueError("q must be nonnegative")
        for u in (self.u0, self.u1):
            if u.shape != (self.width,):
                raise ValueError("basis vectors must have shape (width,)")
        if abs(self.u0 @ self.u0 - 1.0) > 1e-12 or abs(self.u1 @ self.u1 - 1.0) > 1e-12:
            raise ValueError("basis vectors must be unit norm")
        if abs(self.u0 @ self.u1) > 1e-12:
            raise ValueError("basis vectors must be orthogonal")

    @classmethod
    def sample(cls, width: int, q: float, n_theta: int, seed: int) -> "CircleManifold":
        """Orthonormalize two Gaussian vectors (rotation-invariant choice)."""
        if width < 2:
            raise ValueError("circle needs ambient width >= 2")
        if n_theta < 1:
            raise ValueError("n_theta must be >= 1")
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        g0, g1 = rng.normal(size=(2, width))
        u0 = g0 / np.linalg.norm(g0)
        u1 = g1 - (g1 @ u0) * u0
        u1 /= np.linalg.norm(u1)
        thetas = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
        return cls(width=width, q=q, u0=u0, u1=u1, thetas=thetas)

    def at(self, thetas: np.ndarray) -> "CircleManifold":
        """Same circle sampled on a different theta grid."""
        return replace(self, thetas=np.asarray(thetas, dtype=float))

    def _radius(self) -> float:
        return math.sqrt(self.width * self.q)

    def h1(self) -> np.ndarray:
        r = self._radius()
        c, s = np.cos(self.thetas), np.sin(self.thetas)
        return r * (c[:, None] * self.u0[None, :] + s[:, None] * self.u1[None, :])

    def v1(self) -> np.ndarray:
        r = self._radius()
        c, s = np.cos(self.thetas), np.sin(self.thetas)
        return r * (-s[:, None] * self.u0[None, :] + c[:, None] * self.u1[None, :])

    def a1(self) -> np.ndarray:
        return -self.h1()


def sample_network(widths: Sequence[int], params: EnsembleParams, seed: int) -> NetworkRealization:
    """Draw one realization; deterministic for a given seed."""
    widths = tuple(int(n) for n in widths)
    if len(widths) < 2:
        raise ValueError("widths must list N_0..N_D with depth >= 1")
    if any(n < 1 for n in widths):
        raise ValueError(f"all widths must be >= 1, got {widths}")
    depth = len(widths) - 1
    children = np.random.SeedSequence(seed).spawn(depth)
    weights = []
    biases = []
    for l in range(1, depth + 1):
        rng = np.random.default_rng(children[l - 1])
        fan_in = widths[l - 1]
        weights.append(rng.normal(0.0, params.sigma_w / math.sqrt(fan_in),
                                  size=(widths[l], fan_in)))
        biases.append(rng.normal(0.0, params.sigma_b, size=widths[l]))
    return NetworkRealization(
        widths=widths,
        weights=tuple(weights),
        biases=tuple(biases),
        nonlinearity=params.nonlinearity,
        seed=int(seed),
        sigma_w=params.sigma_w,
        sigma_b=params.sigma_b,
    )


def forward(net: NetworkRealization, x0: np.ndarray) -> list[LayerRecord]:
    """Propagate input-layer activity x0; returns h^1..h^D.

    x0 may be a single vector (N_0,) or a batch (P, N_0); records keep the
    input's dimensionality.
    """
    x0 = np.asarray(x0, dtype=float)
    single = x0.ndim == 1
    X = np.atleast_2d(x0)
    if X.shape[1] != net.widths[0]:
        raise ValueError(f"input has dimension {X.shape[1]}, expected {net.widths[0]}")
    phi = net.nonlinearity.value
    records = []
    for l, (W, b) in enumerate(zip(net.weights, net.biases), start=1):
        H = X @ W.T + b
        records.append(LayerRecord(layer=l, h=H[0] if single else H))
        X = phi(H)
    return records


def forward_from_first(net: NetworkRealization, h1: np.ndarray) -> list[LayerRecord]:
    """Propagate given first-layer pre-activations h^1 (manifold entry point)."""
    h1 = np.asarray(h1, dtype=float)
    single = h1.ndim == 1
    H = np.atleast_2d(h1)
    if H.shape[1] != net.widths[1]:
        raise ValueError(f"h1 has dimension {H.shape[1]}, expected {net.widths[1]}")
    phi = net.nonlinearity.value
    records = [LayerRecord(layer=1, h=h1)]
    for l in range(2, net.depth + 1):
        W, b = net.weights[l - 1], net.biases[l - 1]
        H = phi(H) @ W.T + b
        records.append(LayerRecord(layer=l, h=H[0] if single else H))
    return records


def forward_jet(
    net: NetworkRealization,
    manifold: CircleManifold,
    *,
    acceleration: bool = True,
) -> list[LayerRecord]:
    """Propagate the circle with exact theta-derivatives at every layer.

    Acceleration propagation needs phi''; for activations without a smooth
    second derivative pass acceleration=False to propagate velocities only.
    """
    nl = net.nonlinearity
    if acceleration and not nl.has_smooth_second_derivative:
        raise UnsupportedActivationError(
            f"acceleration propagation needs a smooth phi''; {nl.name!r} lacks one "
            "(pass acceleration=False for velocity-only jets)"
        )
    if manifold.width != net.widths[1]:
        raise ValueError(f"manifold width {manifold.width} != first layer width {net.widths[1]}")
    H = manifold.h1()
    V = manifold.v1()
    A = manifold.a1() if acceleration else None
    records = [LayerRecord(layer=1, h=H, v=V, a=A)]
    for l in range(2, net.depth + 1):
        W, b = net.weights[l - 1], net.biases[l - 1]
        d1 = nl.deriv1(H)
        X = nl.value(H)
        Vx = d1 * V
        if acceleration:
            Ax = nl.deriv2(H) * V * V + d1 * A
            A = Ax @ W.T
        H = X @ W.T + b
        V = Vx @ W.T
        records.append(LayerRecord(layer=l, h=H, v=V, a=A))
    return records


# ---------------------------------------------------------------------------
# measurements


def empirical_length(h: np.ndarray):
    """Mean squared entry along the last axis: q = (1/N) sum_i h_i^2."""
    h = np.asarray(h, dtype=float)
    if h.size == 0:
        raise ValueError("empirical length of an empty vector is undefined")
    out = np.mean(h * h, axis=-1)
    return float(out) if out.ndim == 0 else out


def empirical_correlation(hA: np.ndarray, hB: np.ndarray) -> tuple[float, float, float, float]:
    """(q11, q22, q12, c12) for two same-layer activity vectors."""
    hA = np.asarray(hA, dtype=float)
    hB = np.asarray(hB, dtype=float)
    if hA.shape != hB.shape or hA.ndim != 1:
        raise ValueError("inputs must be two vectors of equal dimension")
    n = hA.size
    q11 = float(hA @ hA) / n
    q22 = float(hB @ hB) / n
    q12 = float(hA @ hB) / n
    if q11 == 0.0 or q22 == 0.0:
        raise ValueError("correlation coefficient undefined for a zero vector")
    return q11, q22, q12, q12 / math.sqrt(q11 * q22)


def pair_at_correlation(width: int, q: float, c: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Two vectors with exact Gram matrix q * [[1, c], [c, 1]]."""
    if abs(c) > 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {c!r}")
    circle = CircleManifold.sample(width, 1.0, 1, seed)
    r = math.sqrt(width * q)
    hA = r * circle.u0
    hB = r * (c * circle.u0 + math.sqrt(1.0 - c * c) * circle.u1)
    return hA, hB


def autocorrelation(h: np.ndarray, q_star: float) -> tuple[np.ndarray, np.ndarray]:
    """Angular autocorrelation of manifold activity at one layer.

    `h` has shape (n_theta, N) on a uniform theta grid.  Returns
    (delta_thetas, c) where c[k] averages (1/N) h(theta).h(theta+dtheta_k)
    over theta, normalized by q_star.
    """
    if q_star <= 0.0:
        raise ValueError(f"q_star must be positive, got {q_star!r}")
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] < 1:
        raise ValueError("h must have shape (n_theta, N)")
    n, width = h.shape
    gram = (h @ h.T) / width
    rows = np.arange(n)[:, None]
    cols = (np.arange(n)[None, :] + rows) % n
    c = gram[rows, cols].mean(axis=0) / q_star
    dthetas = 2.0 * math.pi * np.arange(n) / n
    return dthetas, c


@dataclass(frozen=True)
class SpectrumResult:
    singular_values: np.ndarray    # descending
    variance_fractions: np.ndarray
    top_k: int
    top_k_fraction: float
    degenerate: bool


def singular_spectrum(h: np.ndarray, top_k: int = 5) -> SpectrumResult:
    """Singular values of mean-centered manifold activity (n_theta, N)."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] < 2:
        raise ValueError("need at least 2 theta samples")
    centered = h - h.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    total = float(np.sum(s * s))
    scale = float(np.abs(h).max())
    degenerate = total <= (1e-12 * max(scale, 1.0)) ** 2
    if degenerate:
        fractions = np.zeros_like(s)
        s = np.zeros_like(s)
        top_fraction = 0.0
    else:
        fractions = s * s / total
        top_fraction = float(np.sum(fractions[:top_k]))
    return SpectrumResult(
        singular_values=s,
        variance_fractions=fractions,
        top_k=top_k,
        top_k_fraction=top_fraction,
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# export


def records_to_csv(
    records: Sequence[LayerRecord],
    path: str,
    *,
    thetas: np.ndarray | None = None,
    block_size: int = 100,
) -> None:
    """Write per-layer, per-point, per-neuron-block statistics as CSV."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["layer", "point", "theta", "block", "block_mean", "block_sq_mean"])
        for rec in records:
            H = np.atleast_2d(rec.h)
            for p in range(H.shape[0]):
                theta = "" if thetas is None else f"{float(thetas[p]):.17g}"
                row_vals = H[p]
                for b0 in range(0, row_vals.size, block_size):
                    block = row_vals[b0:b0 + block_size]
                    writer.writerow([
                        rec.layer, p, theta, b0 // block_size,
                        f"{float(block.mean()):.17g}",
                        f"{float(np.mean(block * block)):.17g}",
                    ])


def save_network(net: NetworkRealization, path: str) -> None:
    """Compact binary dump (npz) of a realization."""
    payload = {
        "widths": np.asarray(net.widths, dtype=np.int64),
        "seed": np.asarray(net.seed, dtype=np.int64),
        "sigma_w": np.asarray(net.sigma_w),
        "sigma_b": np.asarray(net.sigma_b),
        "nonlinearity": np.asarray(net.nonlinearity.name),
    }
    for l, (w, b) in enumerate(zip(net.weights, net.biases), start=1):
        payload[f"W{l}"] = w
        payload[f"b{l}"] = b
    np.savez_compressed(path, **payload)


def load_network(path: str) -> NetworkRealization:
    with np.load(path) as data:
        widths = tuple(int(n) for n in data["widths"])
        depth = len(widths) - 1
        return NetworkRealization(
            widths=widths,
            weights=tuple(data[f"W{l}"] for l in range(1, depth + 1)),
            biases=tuple(data[f"b{l}"] for l in range(1, depth + 1)),
            nonlinearity=builtin(str(data["nonlinearity"])),
            seed=int(data["seed"]),
            sigma_w=float(data["sigma_w"]),
            sigma_b=float(data["sigma_b"]),
        )
