"""Connected-truck longitudinal scenario: parameters, dynamics, barrier, policies, actuator lag."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import Barrier, Dynamics


@dataclass(frozen=True)
class TruckParams:
    tau: float = 0.5      # input delay [s]
    A: float = 0.4        # distance gain [1/s]
    B: float = 0.5        # velocity gain [1/s]
    D_st: float = 5.0     # standstill distance [m]
    kappa: float = 0.5    # range policy gradient [1/s]
    v_max: float = 20.0   # speed limit [m/s]
    D_sf: float = 3.0     # safe standstill distance [m]
    T: float = 2.0        # safe time headway [s]
    sigma0: float = 1.0   # robustness weight scale [m/s^3]
    lam: float = 0.3      # robustness weight decay [1/m]
    xi: float = 0.25      # unmodeled first-order actuator lag [s]

    def __post_init__(self) -> None:
        if self.tau < 0.0:
            raise ValueError(f"tau must be nonnegative, got {self.tau}")
        for name in ("A", "B", "D_st", "kappa", "v_max", "D_sf", "T", "sigma0", "lam", "xi"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        safe_design = (
            math.isclose(self.B, self.kappa, rel_tol=1e-12)
            and math.isclose(self.B, 1.0 / self.T, rel_tol=1e-12)
            and self.D_st >= self.D_sf
        )
        if not safe_design:
            warnings.warn(
                "parameters violate the provably safe choice B = kappa = 1/T with "
                f"D_st >= D_sf (B={self.B}, kappa={self.kappa}, 1/T={1.0 / self.T}, "
                f"D_st={self.D_st}, D_sf={self.D_sf})",
                UserWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class LeadProfile:
    """Lead vehicle motion: cruise, then brake at a constant rate to a full stop."""

    v0_L: float = 20.0     # initial lead speed [m/s]
    t_brake: float = 1.0   # braking onset [s]
    a_brake: float = -6.0  # braking deceleration [m/s^2]

    def __post_init__(self) -> None:
        if self.v0_L < 0.0:
            raise ValueError(f"v0_L must be nonnegative, got {self.v0_L}")
        if not self.a_brake < 0.0:
            raise ValueError(f"a_brake must be negative, got {self.a_brake}")
        if self.t_brake < 0.0:
            raise ValueError(f"t_brake must be nonnegative, got {self.t_brake}")

    @property
    def t_stop(self) -> float:
        """Time the lead reaches standstill."""
        return self.t_brake - self.v0_L / self.a_brake

    def accel(self, t: float) -> float:
        return self.a_brake if self.t_brake <= t < self.t_stop else 0.0

    def speed(self, t: float) -> float:
        if t < self.t_brake:
            return self.v0_L
        return max(0.0, self.v0_L + self.a_brake * (t - self.t_brake))


def range_policy(p: TruckParams, D: float) -> float:
    """Desired speed for a gap D: linear in the gap above D_st, capped at v_max."""
    return min(p.kappa * (D - p.D_st), p.v_max)


def speed_policy(p: TruckParams, v_L: float) -> float:
    """Desired speed for matching the lead: its speed or the speed limit, whichever is smaller."""
    return min(v_L, p.v_max)


def nominal_control(p: TruckParams, x: np.ndarray) -> float:
    """Car-following law combining the range and speed policies."""
    D, v, v_L = float(x[0]), float(x[1]), float(x[2])
    return p.A * (range_policy(p, D) - v) + p.B * (speed_policy(p, v_L) - v)


def headway_barrier(p: TruckParams) -> Barrier:
    """h(x) = D - D_sf - T v: the gap exceeds the standstill margin plus headway."""

    def h(x: np.ndarray) -> float:
        return float(x[0]) - p.D_sf - p.T * float(x[1])

    def grad(x: np.ndarray) -> np.ndarray:
        return np.array([1.0, -p.T, 0.0])

    return Barrier(h, grad)


def longitudinal_dynamics(p: TruckParams, lead: LeadProfile) -> Dynamics:
    """Three-state model: gap closes with the speed difference, input drives ego acceleration."""

    def f(t: float, x: np.ndarray) -> np.ndarray:
        return np.array([float(x[2]) - float(x[1]), 0.0, lead.accel(t)])

    def g(t: float, x: np.ndarray) -> np.ndarray:
        return np.array([0.0, 1.0, 0.0])

    return Dynamics(f, g)


@dataclass(frozen=True)
class LagPlant:
    """First-order actuator lag: the realized acceleration chases the delayed command."""

    xi: float            # lag time constant [s]
    a: float = 0.0       # realized acceleration state [m/s^2]

    def __post_init__(self) -> None:
        if not self.xi > 0.0:
            raise ValueError(f"xi must be positive, got {self.xi}")


def lag_step(plant: LagPlant, u_delayed: float, dt: float) -> tuple[LagPlant, float]:
    """
    Advance the lag state one RK4 step under a held delayed command; returns
    the new plant and the disturbance d = a_new - u_delayed it induces on the
    delay-only model.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    a, xi = plant.a, plant.xi
    k1 = (u_delayed - a) / xi
    k2 = (u_delayed - (a + 0.5 * dt * k1)) / xi
    k3 = (u_delayed - (a + 0.5 * dt * k2)) / xi
    k4 = (u_delayed - (a + dt * k3)) / xi
    a_new = a + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return LagPlant(xi, a_new), a_new - u_delayed


def lag_disturbance_oracle(a0: float, xi: float, t0: float, hist, n_sub: int):
    """
    Disturbance oracle for ground-truth prediction with the actuator lag on.

    Co-integrates the lag state over [t0, t0 + tau]: the driving input lies
    entirely in the committed history, so the lag response is propagated
    exactly (per input cell, first-order ODE under a held input) and
    d(t', u_cell) = a(t') - u_cell is available at any stage time without
    knowledge of future controller decisions.
    """
    tau = hist.tau
    h = tau / n_sub
    u_cells = [hist.value_at(t0 + j * h - tau) for j in range(n_sub)]
    decay = math.exp(-h / xi)
    a_bounds = [a0]
    for j in range(n_sub):
        a_bounds.append(u_cells[j] + (a_bounds[j] - u_cells[j]) * decay)

    def d(t_abs: float, u_cell: float) -> float:
        jx = (t_abs - t0) / h
        j = min(n_sub - 1, max(0, int(math.floor(jx + 1e-9))))
        s = t_abs - (t0 + j * h)
        a = u_cells[j] + (a_bounds[j] - u_cells[j]) * math.exp(-s / xi)
        return a - u_cell

    return d
