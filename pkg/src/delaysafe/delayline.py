"""Committed control-input history over the trailing delay window, zero-order held."""

from __future__ import annotations

import math

import numpy as np

from .core import require_finite

# Times within GRID_EPS sample periods of a grid point are treated as on-grid.
GRID_EPS = 1e-6


class InputHistory:
    """
    Ring buffer of committed control inputs on a uniform time grid.

    Holds at least the trailing window [current_time - tau, current_time] so
    that u(t') can be reconstructed by zero-order hold anywhere in it. The
    delay tau must be an exact integer multiple of the sample period dt; this
    is validated instead of rounded so no delay quantization can creep in.
    """

    def __init__(self, tau: float, dt: float, fill: float = 0.0, t0: float = 0.0):
        if dt <= 0.0:
            raise ValueError(f"sample period dt must be positive, got {dt}")
        if tau < 0.0:
            raise ValueError(f"delay tau must be nonnegative, got {tau}")
        n = int(round(tau / dt))
        if abs(tau - n * dt) > GRID_EPS * dt:
            raise ValueError(
                f"delay tau={tau} is not an integer multiple of the sample period dt={dt}"
            )
        k0 = int(round(t0 / dt))
        if abs(t0 - k0 * dt) > GRID_EPS * dt:
            raise ValueError(f"start time t0={t0} is not on the dt={dt} grid")
        require_finite(fill, "initial input")
        self.tau = float(tau)
        self.dt = float(dt)
        self.steps = n
        self._cap = n + 2
        self._buf = np.full(self._cap, float(fill))
        # initial history covers [t0 - tau, t0) plus one older cell so that the
        # full window behind the newest sample is defined from the start
        self._k = k0 - 1
        self._oldest = k0 - n - 1

    @property
    def current_time(self) -> float:
        """Newest committed timestamp."""
        return self._k * self.dt

    def _grid_index(self, t: float) -> int:
        x = t / self.dt
        j = round(x)
        if abs(x - j) <= GRID_EPS:
            return int(j)
        return int(math.floor(x))

    def push(self, t: float, u: float) -> None:
        """Commit the input applied from time t; t must be the next grid step."""
        x = t / self.dt
        j = round(x)
        if abs(x - j) > GRID_EPS:
            raise ValueError(f"push at t={t}: not on the dt={self.dt} grid")
        j = int(j)
        if j != self._k + 1:
            raise ValueError(
                f"push at t={t}: expected the next grid step t={(self._k + 1) * self.dt}"
            )
        require_finite(u, "committed input")
        self._buf[j % self._cap] = u
        self._k = j
        # evict samples older than t - tau - dt
        self._oldest = max(self._oldest, j - self.steps - 1)

    def value_at(self, t: float) -> float:
        """Zero-order-hold lookup: the committed sample at the greatest grid time <= t."""
        j = self._grid_index(t)
        if j > self._k or j < self._oldest:
            raise ValueError(
                f"lookup at t={t}: outside committed window "
                f"[{self._oldest * self.dt}, {self._k * self.dt}]"
            )
        return float(self._buf[j % self._cap])

    def sample(self, theta: float) -> float:
        """Committed input at offset theta in [-tau, 0) behind current_time."""
        if not (-self.tau <= theta < 0.0):
            raise ValueError(f"offset theta={theta} outside [-{self.tau}, 0)")
        return self.value_at(self._k * self.dt + theta)

    def window(self) -> np.ndarray:
        """The newest `steps` committed inputs in chronological order."""
        n = self.steps
        if n == 0:
            return np.empty(0)
        lo_idx = self._k - n + 1
        if lo_idx < self._oldest:
            raise ValueError("input history does not cover the full delay window yet")
        lo = lo_idx % self._cap
        hi = (self._k % self._cap) + 1
        if lo < hi:
            return self._buf[lo:hi].copy()
        return np.concatenate((self._buf[lo:], self._buf[:hi]))

    def __len__(self) -> int:
        return self._k - self._oldest + 1
