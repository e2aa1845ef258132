"""Shared math layer: state vectors, comparison functions, dynamics/barrier interfaces."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class NonFiniteError(RuntimeError):
    """A state, input or derived quantity stopped being finite."""


def require_finite(value, what: str) -> None:
    """Abort with a diagnostic if `value` contains NaN or Inf."""
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite {what}: {value!r}")


def vec3(a: float, b: float, c: float) -> np.ndarray:
    """Finite 3-component state vector (for the truck: D [m], v [m/s], v_L [m/s])."""
    x = np.array([a, b, c], dtype=float)
    require_finite(x, "state vector")
    return x


@dataclass(frozen=True)
class KappaFn:
    """Extended class-K-infinity comparison function paired with its exact inverse."""

    alpha: Callable[[float], float]
    alpha_inv: Callable[[float], float]

    def __call__(self, r: float) -> float:
        return self.alpha(r)

    def inv(self, r: float) -> float:
        return self.alpha_inv(r)


def linear_kappa(gain: float) -> KappaFn:
    """alpha(r) = gain * r with gain [1/s] > 0, inverted exactly by r / gain."""
    if not gain > 0.0:
        raise ValueError(f"comparison-function gain must be positive, got {gain}")
    return KappaFn(lambda r: gain * r, lambda r: r / gain)


def check_kappa(kappa: KappaFn, grid: np.ndarray | None = None, rtol: float = 1e-12) -> None:
    """
    Sampled self-check for a user-supplied comparison function: alpha(0) = 0,
    strictly increasing on the grid, and alpha(alpha_inv(r)) = r to within rtol.
    """
    if grid is None:
        grid = np.linspace(-100.0, 100.0, 2001)
    if abs(kappa(0.0)) > rtol:
        raise ValueError(f"alpha(0) = {kappa(0.0)!r}, expected 0")
    vals = np.array([kappa(float(r)) for r in grid])
    if not np.all(np.diff(vals) > 0.0):
        raise ValueError("alpha is not strictly increasing on the sampled grid")
    for r in grid:
        rr = kappa(kappa.inv(float(r)))
        if abs(rr - r) > rtol * max(1.0, abs(r)):
            raise ValueError(f"alpha(alpha_inv({r})) = {rr}, round-trip error above {rtol}")


@dataclass(frozen=True)
class SigmaFn:
    """Robustness weight sigma(h) = sigma0 * exp(-lam * h): positive, non-increasing in h."""

    sigma0: float  # [m/s^3] in the truck scenario
    lam: float     # [1/m]

    def __post_init__(self) -> None:
        if not self.sigma0 > 0.0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0}")
        if self.lam < 0.0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")

    def __call__(self, h: float) -> float:
        return self.sigma0 * math.exp(-self.lam * h)

    def deriv(self, h: float) -> float:
        return -self.lam * self(h)


@dataclass(frozen=True)
class Dynamics:
    """Control-affine single-input dynamics xdot = f(t, x) + g(t, x) * u."""

    f: Callable[[float, np.ndarray], np.ndarray]
    g: Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Barrier:
    """Scalar safety certificate h(x) with its row gradient; the safe set is {h >= 0}."""

    h: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]


def lie_derivatives(dyn: Dynamics, bar: Barrier, t: float, x: np.ndarray) -> tuple[float, float]:
    """Directional derivatives of h along the drift and input fields at (t, x)."""
    require_finite(t, "time")
    require_finite(x, "state")
    grad = np.asarray(bar.grad(x), dtype=float)
    Lfh = float(grad @ np.asarray(dyn.f(t, x), dtype=float))
    Lgh = float(grad @ np.asarray(dyn.g(t, x), dtype=float))
    require_finite((Lfh, Lgh), "Lie derivatives")
    return Lfh, Lgh


def hdot(dyn: Dynamics, bar: Barrier, t: float, x: np.ndarray, u: float) -> float:
    """Time derivative of h along the closed-loop field for input u."""
    Lfh, Lgh = lie_derivatives(dyn, bar, t, x)
    out = Lfh + Lgh * u
    require_finite(out, "hdot")
    return out


def check_gradient(bar: Barrier, x: np.ndarray, atol: float = 1e-6) -> None:
    """
    Compare bar.grad against central finite differences of bar.h at x.

    Step is 1e-5 relative to the component magnitude (floored at 1e-5).
    """
    x = np.asarray(x, dtype=float)
    grad = np.asarray(bar.grad(x), dtype=float)
    for i in range(x.size):
        step = 1e-5 * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        fd = (bar.h(xp) - bar.h(xm)) / (2.0 * step)
        if abs(fd - grad[i]) > atol:
            raise ValueError(
                f"gradient component {i} = {grad[i]} disagrees with finite difference {fd}"
            )
