"""Scalar nonlinearities with analytic derivatives and theory metadata.

The mean-field maps need phi, phi', and for the curvature recursion phi''.
For piecewise-linear activations the second derivative is distributional,
so those report ``has_smooth_second_derivative = False`` and the curvature
operations refuse them instead of silently using phi'' = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

Array = np.ndarray


@dataclass(frozen=True)
class Nonlinearity:
    """A scalar activation phi with first and second derivatives.

    `value`, `deriv1` and `deriv2` must act elementwise on ndarrays.
    `dynamic_range` is max(phi) - min(phi); None means unbounded.
    """

    name: str
    value: Callable[[Array], Array]
    deriv1: Callable[[Array], Array]
    deriv2: Callable[[Array], Array]
    monotone_nondecreasing: bool
    dynamic_range: Optional[float]
    has_smooth_second_derivative: bool

    def __post_init__(self):
        if self.dynamic_range is not None and not self.dynamic_range >= 0:
            raise ValueError("dynamic_range must be nonnegative or None")


def _tanh() -> Nonlinearity:
    def d1(h):
        t = np.tanh(h)
        return 1.0 - t * t

    def d2(h):
        t = np.tanh(h)
        return -2.0 * t * (1.0 - t * t)

    return Nonlinearity(
        name="tanh",
        value=np.tanh,
        deriv1=d1,
        deriv2=d2,
        monotone_nondecreasing=True,
        dynamic_range=2.0,
        has_smooth_second_derivative=True,
    )


def _linear() -> Nonlinearity:
    return Nonlinearity(
        name="linear",
        value=lambda h: np.asarray(h, dtype=float),
        deriv1=lambda h: np.ones_like(np.asarray(h, dtype=float)),
        deriv2=lambda h: np.zeros_like(np.asarray(h, dtype=float)),
        monotone_nondecreasing=True,
        dynamic_range=None,
        has_smooth_second_derivative=True,
    )


def _hard_tanh() -> Nonlinearity:
    def d1(h):
        h = np.asarray(h, dtype=float)
        return ((h > -1.0) & (h < 1.0)).astype(float)

    return Nonlinearity(
        name="hard_tanh",
        value=lambda h: np.clip(h, -1.0, 1.0),
        deriv1=d1,
        deriv2=lambda h: np.zeros_like(np.asarray(h, dtype=float)),
        monotone_nondecreasing=True,
        dynamic_range=2.0,
        has_smooth_second_derivative=False,
    )


def _relu() -> Nonlinearity:
    def d1(h):
        h = np.asarray(h, dtype=float)
        return (h > 0.0).astype(float)

    return Nonlinearity(
        name="relu",
        value=lambda h: np.maximum(np.asarray(h, dtype=float), 0.0),
        deriv1=d1,
        deriv2=lambda h: np.zeros_like(np.asarray(h, dtype=float)),
        monotone_nondecreasing=True,
        dynamic_range=None,
        has_smooth_second_derivative=False,
    )


_BUILTINS: dict[str, Callable[[], Nonlinearity]] = {
    "tanh": _tanh,
    "linear": _linear,
    "hard_tanh": _hard_tanh,
    "relu": _relu,
}


def builtin(name: str) -> Nonlinearity:
    """Return a builtin nonlinearity by name."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        available = ", ".join(sorted(_BUILTINS))
        raise ValueError(f"unknown nonlinearity {name!r}; available: {available}") from None
    return factory()


def builtin_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTINS))
