"""Independent reference computations used to check the library's paths.

Everything here is deliberately dumb and slow: dense trapezoid grids,
bisection, triple-loop matrix products.  None of it shares code with the
package beyond numpy itself.
"""

import numpy as np


def gauss_expect_trapezoid(f, n=10**6, lim=12.0):
    """E[f(z)] over N(0,1) by dense trapezoid on [-lim, lim]."""
    z = np.linspace(-lim, lim, n)
    density = np.exp(-z * z / 2.0) / np.sqrt(2.0 * np.pi)
    return float(np.trapezoid(f(z) * density, z))


def gauss_expect2_grid(f, c, q1, q2, n=1500, lim=8.0):
    """E[f(u1, u2)] for the correlated pair, by a dense 2-D trapezoid."""
    z = np.linspace(-lim, lim, n)
    density = np.exp(-z * z / 2.0) / np.sqrt(2.0 * np.pi)
    s = np.sqrt(max(0.0, 1.0 - c * c))
    u1 = np.sqrt(q1) * z
    u2 = np.sqrt(q2) * (c * z[:, None] + s * z[None, :])
    vals = f(u1[:, None] + np.zeros_like(u2), u2) * density[:, None] * density[None, :]
    return float(np.trapezoid(np.trapezoid(vals, z, axis=1), z))


def bisect_root(g, lo, hi, iters=200):
    """Root of g by plain bisection; g(lo) and g(hi) must differ in sign."""
    glo = g(lo)
    if glo == 0.0:
        return lo
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if (g(mid) > 0.0) == (glo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gaussian_moment(k: int) -> float:
    """E[z^k] for z ~ N(0,1): (k-1)!! for even k, 0 for odd."""
    if k % 2 == 1:
        return 0.0
    result = 1.0
    for j in range(k - 1, 0, -2):
        result *= j
    return result


def naive_matmul(a, b):
    """Triple-loop matrix product."""
    n, k = a.shape
    k2, m = b.shape
    assert k == k2
    out = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def gram_singular_values(m):
    """Singular values via eigendecomposition of the Gram matrix."""
    gram = m @ m.T
    eigs = np.linalg.eigvalsh(gram)
    return np.sqrt(np.clip(eigs, 0.0, None))[::-1]


def fd_slope_at_one(f, h=1e-6):
    """One-sided second-order derivative estimate at the domain edge c=1."""
    return (3.0 * f(1.0) - 4.0 * f(1.0 - h) + f(1.0 - 2.0 * h)) / (2.0 * h)


def fd_second_derivative_at_one(f, h=2.5e-5):
    """One-sided second-order estimate of f''(1)."""
    return (2.0 * f(1.0) - 5.0 * f(1.0 - h) + 4.0 * f(1.0 - 2.0 * h)
            - f(1.0 - 3.0 * h)) / h**2
