"""Fixed-step closed-loop engine: plant, delay line, actuator lag, controller, predictors."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .core import NonFiniteError, SigmaFn, lie_derivatives, linear_kappa
from .delayline import InputHistory
from .predictor import Prediction, PredictorKind
from .safety import ControllerSpec, SafetyConfig, SynthesizedController, synthesize
from .truck import (
    LeadProfile,
    TruckParams,
    headway_barrier,
    longitudinal_dynamics,
    nominal_control,
)

CSV_COLUMNS = (
    "t", "D", "v", "v_L", "a_L", "u_cmd", "u_applied", "d", "d_hat",
    "h", "h_delta", "Dp", "vp", "vLp", "u_ideal", "margin",
)

_KERNEL_MODE = {
    PredictorKind.FROZEN: _kernels.MODE_FROZEN,
    PredictorKind.NOMINAL: _kernels.MODE_NOMINAL,
    PredictorKind.GROUND_TRUTH: _kernels.MODE_GROUND_TRUTH,
}


class MarginViolation(RuntimeError):
    """The running controller failed its own barrier inequality at an evaluation point."""

    def __init__(self, step: int, t: float, x: np.ndarray, u: float, margin: float):
        self.step = step
        self.t = t
        self.x = np.array(x)
        self.u = u
        self.margin = margin
        super().__init__(
            f"barrier margin {margin:.6e} < 0 at step {step} (t={t:.6f}, "
            f"x=({x[0]:.6f}, {x[1]:.6f}, {x[2]:.6f}), u={u:.6f})"
        )


@dataclass(frozen=True)
class SimConfig:
    controller: ControllerSpec
    truck: TruckParams = field(default_factory=TruckParams)
    lead: LeadProfile = field(default_factory=LeadProfile)
    dt: float = 1e-3          # controller sample period [s]
    t_end: float = 20.0       # simulated horizon [s]
    enable_lag: bool = False  # drive the plant through the first-order actuator lag
    assertions: bool = True   # abort when the controller violates its own inequality
    D0: float = 45.0          # initial gap [m]
    v0: float = 20.0          # initial ego speed [m/s]
    u_init: float = 0.0       # constant initial input history on [-tau, 0) [m/s^2]
    delta: float = 0.0        # disturbance bound for the logged h_delta column [m/s^2]
    clamp_ego_speed: bool = False   # clamp v at zero (model realism flag, off by default)
    u_clamp: float | None = None    # optional symmetric actuator saturation [m/s^2]

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        n = round(self.truck.tau / self.dt)
        if abs(self.truck.tau - n * self.dt) > 1e-6 * self.dt:
            raise ValueError(
                f"delay tau={self.truck.tau} is not an integer multiple of dt={self.dt}"
            )
        if not self.t_end > self.truck.tau:
            raise ValueError(f"t_end={self.t_end} must exceed the delay tau={self.truck.tau}")


@dataclass(frozen=True)
class StepRecord:
    t: float
    D: float
    v: float
    v_L: float
    a_L: float
    u_cmd: float
    u_applied: float
    d: float
    d_hat: float
    h: float
    h_delta: float
    Dp: float
    vp: float
    vLp: float
    u_ideal: float
    margin: float


@dataclass
class TrajectoryLog:
    """Per-step records as a dense column table matching the CSV schema."""

    data: np.ndarray  # shape (n_steps, len(CSV_COLUMNS))

    def column(self, name: str) -> np.ndarray:
        return self.data[:, CSV_COLUMNS.index(name)]

    def row(self, k: int) -> StepRecord:
        return StepRecord(*(float(v) for v in self.data[k]))

    def __len__(self) -> int:
        return self.data.shape[0]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in self.data:
                writer.writerow([repr(float(value)) for value in row])

    @classmethod
    def read_csv(cls, path) -> "TrajectoryLog":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise ValueError(f"{path}: empty CSV")
            if tuple(header) != CSV_COLUMNS:
                raise ValueError(f"{path}: unexpected CSV header {header}")
            rows = [[float(value) for value in row] for row in reader]
        if not rows:
            raise ValueError(f"{path}: no data rows")
        return cls(np.array(rows))


@dataclass(frozen=True)
class Metrics:
    min_h: float
    min_D: float
    max_abs_u: float
    control_effort: float            # integral of u_cmd^2 dt [m^2/s^3]
    max_abs_d: float
    max_abs_d_hat: float             # measured effective-disturbance bound
    safety_violation_duration: float  # total time with h < 0 [s]

    def as_dict(self) -> dict[str, float]:
        return {
            "min_h": self.min_h,
            "min_D": self.min_D,
            "max_abs_u": self.max_abs_u,
            "control_effort": self.control_effort,
            "max_abs_d": self.max_abs_d,
            "max_abs_d_hat": self.max_abs_d_hat,
            "safety_violation_duration": self.safety_violation_duration,
        }


def metrics_from_log(log: TrajectoryLog) -> Metrics:
    t = log.column("t")
    if len(t) < 2:
        raise ValueError("metrics need at least two logged steps")
    dt = float(t[1] - t[0])
    u = log.column("u_cmd")
    h = log.column("h")
    return Metrics(
        min_h=float(np.min(h)),
        min_D=float(np.min(log.column("D"))),
        max_abs_u=float(np.max(np.abs(u))),
        control_effort=float(np.sum(u * u) * dt),
        max_abs_d=float(np.max(np.abs(log.column("d")))),
        max_abs_d_hat=float(np.max(np.abs(log.column("d_hat")))),
        safety_violation_duration=float(np.count_nonzero(h < 0.0) * dt),
    )


def effective_disturbance(d: float, u_delayed: float, u_ideal_delayed: float) -> float:
    """
    Physical disturbance plus the input discrepancy the running controller's
    prediction error introduced relative to the ideal input computed from the
    ground-truth future state: d + u(t-tau) - u_ideal(t-tau).
    """
    return d + (u_delayed - u_ideal_delayed)


def _step_plant(t, D, v, vL, u, dt, accel):
    """One RK4 step of the 3-state model under a held input (same op order as the
    prediction kernel, so an exact-intent prediction reproduces the plant)."""
    half = 0.5 * dt
    aL1 = accel(t)
    aL2 = accel(t + half)
    aL4 = accel(t + dt)
    k1D = vL - v
    k1v = u
    k2D = (vL + half * aL1) - (v + half * k1v)
    k2v = u
    k3D = (vL + half * aL2) - (v + half * k2v)
    k3v = u
    k4D = (vL + dt * aL2) - (v + dt * k3v)
    k4v = u
    return (
        D + dt * (k1D + 2.0 * k2D + 2.0 * k3D + k4D) / 6.0,
        v + dt * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0,
        vL + dt * (aL1 + 2.0 * aL2 + 2.0 * aL2 + aL4) / 6.0,
    )


def _step_plant_lag(t, D, v, vL, a, u, dt, accel, xi):
    """One RK4 step of the 4-state plant (gap, ego speed, lead speed, lag state)."""
    half = 0.5 * dt
    aL1 = accel(t)
    aL2 = accel(t + half)
    aL4 = accel(t + dt)
    k1D = vL - v
    k1v = a
    k1a = (u - a) / xi
    k2D = (vL + half * aL1) - (v + half * k1v)
    k2v = a + half * k1a
    k2a = (u - k2v) / xi
    k3D = (vL + half * aL2) - (v + half * k2v)
    k3v = a + half * k2a
    k3a = (u - k3v) / xi
    k4D = (vL + dt * aL2) - (v + dt * k3v)
    k4v = a + dt * k3a
    k4a = (u - k4v) / xi
    return (
        D + dt * (k1D + 2.0 * k2D + 2.0 * k3D + k4D) / 6.0,
        v + dt * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0,
        vL + dt * (aL1 + 4.0 * aL2 + aL4) / 6.0,
        a + dt * (k1a + 2.0 * k2a + 2.0 * k3a + k4a) / 6.0,
    )


def _make_kernel_predict(kind: PredictorKind, p: TruckParams, lead: LeadProfile,
                         n_sub: int, lag_state: list[float], with_lag: bool):
    """predict_fn closure routing truck predictions through the compiled kernel."""
    mode = _KERNEL_MODE[kind]
    xi = p.xi if with_lag else 1.0

    def predict_fn(t: float, x: np.ndarray, hist: InputHistory) -> Prediction:
        if hist.tau == 0.0:
            return Prediction(t, np.array(x, dtype=float), kind)
        D, v, vL = _kernels.truck_predict(
            float(x[0]), float(x[1]), float(x[2]),
            t, hist.tau, n_sub, hist.window(),
            mode, lead.accel(t),
            lead.t_brake, lead.t_stop, lead.a_brake,
            lag_state[0], xi, with_lag,
        )
        return Prediction(t + hist.tau, np.array([D, v, vL]), kind)

    return predict_fn


def _identity_predict(kind: PredictorKind):
    def predict_fn(t: float, x: np.ndarray, hist: InputHistory) -> Prediction:
        return Prediction(t, np.array(x, dtype=float), kind)

    return predict_fn


def run(config: SimConfig) -> tuple[TrajectoryLog, Metrics]:
    """
    Simulate the closed loop on the controller grid and collect the trajectory
    log and summary metrics.

    The true plant is the 3-state model driven by the delayed command, or the
    4-state model including the actuator lag when enable_lag is set; the
    controller only ever sees the 3-state model. Every step also evaluates the
    ideal input (same controller family fed by the ground-truth predictor) so
    the effective disturbance d_hat = d + u(t-tau) - u_ideal(t-tau) is logged
    without re-simulation.
    """
    p, lead, dt = config.truck, config.lead, config.dt
    spec = config.controller
    n_steps = int(round(config.t_end / dt))
    n_delay = int(round(p.tau / dt))

    dyn = longitudinal_dynamics(p, lead)
    bar = headway_barrier(p)
    cfg = SafetyConfig(linear_kappa(p.A), SigmaFn(p.sigma0, p.lam), config.delta)

    hist = InputHistory(p.tau, dt, fill=config.u_init)
    hist_ideal = InputHistory(p.tau, dt, fill=config.u_init)
    lag_state = [config.u_init]  # actuator pre-settled on the initial history

    kind = spec.predictor_kind
    if kind is PredictorKind.NONE:
        own_predict = _identity_predict(kind)
    else:
        own_predict = _make_kernel_predict(
            kind, p, lead, n_delay, lag_state,
            with_lag=config.enable_lag and kind is PredictorKind.GROUND_TRUTH,
        )
    controller = synthesize(spec, cfg, dyn, bar, predict_fn=own_predict)

    ideal_spec = replace(spec, predictor_kind=PredictorKind.GROUND_TRUTH)
    ideal_predict = _make_kernel_predict(
        PredictorKind.GROUND_TRUTH, p, lead, n_delay, lag_state,
        with_lag=config.enable_lag,
    )
    ideal_controller = synthesize(ideal_spec, cfg, dyn, bar, predict_fn=ideal_predict)
    # with no delay every predictor is the identity, so the ideal input is the
    # commanded input itself
    reuse_ideal = kind is PredictorKind.GROUND_TRUTH or p.tau == 0.0

    x = np.array([config.D0, config.v0, lead.v0_L])
    a = config.u_init
    data = np.empty((n_steps, len(CSV_COLUMNS)))

    for k in range(n_steps):
        t = k * dt
        decision = controller.evaluate(t, x, hist)
        u_cmd = decision.u
        if config.u_clamp is not None:
            u_cmd = min(config.u_clamp, max(-config.u_clamp, u_cmd))
            margin = _margin_at(controller, decision, u_cmd)
        else:
            margin = decision.margin
        if config.assertions and margin < -1e-9:
            raise MarginViolation(k, decision.t_eval, decision.x_eval, u_cmd, margin)

        u_ideal = u_cmd if reuse_ideal else ideal_controller(t, x, hist)

        hist.push(t, u_cmd)
        hist_ideal.push(t, u_ideal)
        u_del = hist.value_at(t - p.tau)
        u_ideal_del = hist_ideal.value_at(t - p.tau)

        if config.enable_lag:
            u_applied = a
            d = a - u_del
        else:
            u_applied = u_del
            d = 0.0
        d_hat = effective_disturbance(d, u_del, u_ideal_del)

        hv = bar.h(x)
        data[k] = (
            t, x[0], x[1], x[2], lead.accel(t), u_cmd, u_applied, d, d_hat,
            hv, hv + _gamma_scalar(cfg, hv), decision.x_eval[0], decision.x_eval[1],
            decision.x_eval[2], u_ideal, margin,
        )

        if config.enable_lag:
            D, v, vL, a = _step_plant_lag(t, x[0], x[1], x[2], a, u_del, dt, lead.accel, p.xi)
        else:
            D, v, vL = _step_plant(t, x[0], x[1], x[2], u_del, dt, lead.accel)
        if config.clamp_ego_speed and v < 0.0:
            v = 0.0
        if not (math.isfinite(D) and math.isfinite(v) and math.isfinite(vL) and math.isfinite(a)):
            raise NonFiniteError(f"non-finite state at step {k + 1} (t={t + dt})")
        x = np.array([D, v, vL])
        lag_state[0] = a

    log = TrajectoryLog(data)
    return log, metrics_from_log(log)


def _gamma_scalar(cfg: SafetyConfig, h: float) -> float:
    if cfg.delta == 0.0:
        return 0.0
    return -cfg.alpha.inv(-(cfg.delta * cfg.delta) / (4.0 * cfg.sigma(h)))


def _margin_at(controller: SynthesizedController, decision, u: float) -> float:
    """Recompute the decision's margin for a clamped input."""
    bar, cfg, dyn = controller.bar, controller.cfg, controller.dyn
    Lfh, Lgh = lie_derivatives(dyn, bar, decision.t_eval, decision.x_eval)
    hv = bar.h(decision.x_eval)
    margin = Lfh + Lgh * u + cfg.alpha(hv)
    if controller.spec.robust:
        margin -= cfg.sigma(hv) * Lgh * Lgh
    return margin
