"""Forward state prediction over the delay horizon by RK4 integration of the input-driven flow."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .core import Dynamics, require_finite
from .delayline import InputHistory


class PredictorKind(Enum):
    """Information model used to estimate the state one delay ahead."""

    NONE = "none"                  # no prediction: feed back the current state
    FROZEN = "frozen"              # zero disturbance, dynamics pinned at the current time
    NOMINAL = "nominal"            # zero disturbance, true future dynamics
    GROUND_TRUTH = "ground_truth"  # true future dynamics and true disturbance


@dataclass(frozen=True)
class Prediction:
    t_p: float
    x_p: np.ndarray
    kind: PredictorKind


def rk4_step(deriv: Callable, t: float, x, dt: float):
    """One classical 4th-order Runge-Kutta step of xdot = deriv(t, x)."""
    if dt <= 0.0:
        raise ValueError(f"step size must be positive, got {dt}")
    k1 = deriv(t, x)
    k2 = deriv(t + 0.5 * dt, x + (0.5 * dt) * k1)
    k3 = deriv(t + 0.5 * dt, x + (0.5 * dt) * k2)
    k4 = deriv(t + dt, x + dt * k3)
    out = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    require_finite(out, "integrated state")
    return out


def predict(
    kind: PredictorKind,
    dyn: Dynamics,
    t: float,
    x: np.ndarray,
    hist: InputHistory,
    n_sub: int,
    future_dyn: Dynamics | None = None,
    dist: Callable[[float, float], float] | None = None,
) -> Prediction:
    """
    Predicted state one delay ahead, integrating the committed input history
    forward from (t, x) with `n_sub` RK4 sub-steps spanning [0, tau].

    The held input is frozen at each sub-step's left endpoint, consistent with
    the zero-order hold of the delay line. `future_dyn` supplies the dynamics
    at future times (required for NOMINAL and GROUND_TRUTH); FROZEN evaluates
    `dyn` with its time argument pinned at t. `dist` is the disturbance oracle
    (t_abs, u_cell) -> d added to the held input (GROUND_TRUTH only; evaluated
    at the RK4 stage times).
    """
    if kind is PredictorKind.NONE:
        return Prediction(t, np.array(x, dtype=float), kind)
    if kind is PredictorKind.GROUND_TRUTH and (future_dyn is None or dist is None):
        raise ValueError("ground-truth prediction needs future-dynamics and disturbance oracles")
    if kind is PredictorKind.NOMINAL and future_dyn is None:
        raise ValueError("nominal prediction needs the future-dynamics oracle")
    tau = hist.tau
    if tau == 0.0:
        return Prediction(t, np.array(x, dtype=float), kind)
    if n_sub < 1:
        raise ValueError(f"n_sub must be a positive integer, got {n_sub}")

    if kind is PredictorKind.FROZEN:
        f = lambda s, y: dyn.f(t, y)
        g = lambda s, y: dyn.g(t, y)
    else:
        f, g = future_dyn.f, future_dyn.g
    d = dist if kind is PredictorKind.GROUND_TRUTH else None

    h = tau / n_sub
    y = np.array(x, dtype=float)
    for j in range(n_sub):
        s0 = t + j * h
        u_j = hist.value_at(s0 - tau)
        if d is None:
            deriv = lambda s, yy, u_j=u_j: f(s, yy) + g(s, yy) * u_j
        else:
            deriv = lambda s, yy, u_j=u_j: f(s, yy) + g(s, yy) * (u_j + d(s, u_j))
        y = rk4_step(deriv, s0, y, h)
    return Prediction(t + tau, y, kind)
