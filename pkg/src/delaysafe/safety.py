"""Safety margins, the inflated safe set, and closed-form controller composition."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import Barrier, Dynamics, KappaFn, SigmaFn, lie_derivatives
from .delayline import InputHistory
from .predictor import Prediction, PredictorKind, predict


@dataclass(frozen=True)
class SafetyConfig:
    """Comparison function, robustness weight, and the disturbance bound used for reporting."""

    alpha: KappaFn
    sigma: SigmaFn
    delta: float = 0.0  # disturbance bound [m/s^2], >= 0; never enters the control law

    def __post_init__(self) -> None:
        if self.delta < 0.0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")


def cbf_margin(dyn: Dynamics, bar: Barrier, cfg: SafetyConfig,
               t: float, x: np.ndarray, u: float) -> float:
    """hdot + alpha(h) at (t, x, u); nonnegative iff the barrier condition holds there."""
    Lfh, Lgh = lie_derivatives(dyn, bar, t, x)
    return Lfh + Lgh * u + cfg.alpha(bar.h(x))


def tissf_margin(dyn: Dynamics, bar: Barrier, cfg: SafetyConfig,
                 t: float, x: np.ndarray, u: float) -> float:
    """
    hdot + alpha(h) - sigma(h) * Lgh^2 at (t, x, u); nonnegative iff the
    disturbance-robust barrier condition holds there. Independent of cfg.delta.
    """
    Lfh, Lgh = lie_derivatives(dyn, bar, t, x)
    hv = bar.h(x)
    return Lfh + Lgh * u + cfg.alpha(hv) - cfg.sigma(hv) * Lgh * Lgh


def gamma(cfg: SafetyConfig, h: float, delta: float | None = None) -> float:
    """
    Inflation of the safe set under a disturbance bounded by delta:
    gamma = -alpha_inv(-delta^2 / (4 sigma(h))); nonnegative, zero at delta = 0.
    """
    d = cfg.delta if delta is None else delta
    return -cfg.alpha.inv(-(d * d) / (4.0 * cfg.sigma(h)))


def h_delta(cfg: SafetyConfig, bar: Barrier, x: np.ndarray, delta: float | None = None) -> float:
    """Inflated barrier h + gamma(h, delta); its zero level bounds the reachable violation."""
    hv = bar.h(x)
    return hv + gamma(cfg, hv, delta)


@dataclass(frozen=True)
class ControllerSpec:
    """Which controller variant to compose: nominal law, robustifying term, predictor."""

    nominal: Callable[[np.ndarray], float]
    robust: bool = False
    predictor_kind: PredictorKind = PredictorKind.NONE


@dataclass(frozen=True)
class ControlDecision:
    """One controller evaluation: the input plus the point and margin certifying it."""

    u: float
    t_eval: float
    x_eval: np.ndarray
    margin: float  # tissf margin if the law is robustified, else the plain barrier margin


class SynthesizedController:
    """
    Closed-loop control law u = k_n(x~) [+ sigma(h(x~)) * Lgh(t~, x~)], where
    (t~, x~) is the configured predictor's output (identity for kind NONE).
    """

    def __init__(self, spec: ControllerSpec, cfg: SafetyConfig, dyn: Dynamics,
                 bar: Barrier, predict_fn: Callable[[float, np.ndarray, InputHistory], Prediction]):
        self.spec = spec
        self.cfg = cfg
        self.dyn = dyn
        self.bar = bar
        self._predict = predict_fn

    def evaluate(self, t: float, x: np.ndarray, hist: InputHistory) -> ControlDecision:
        pred = self._predict(t, x, hist)
        te, xe = pred.t_p, pred.x_p
        hv = self.bar.h(xe)
        Lfh, Lgh = lie_derivatives(self.dyn, self.bar, te, xe)
        u = self.spec.nominal(xe)
        if self.spec.robust:
            u += self.cfg.sigma(hv) * Lgh
            margin = Lfh + Lgh * u + self.cfg.alpha(hv) - self.cfg.sigma(hv) * Lgh * Lgh
        else:
            margin = Lfh + Lgh * u + self.cfg.alpha(hv)
        return ControlDecision(u, te, xe, margin)

    def __call__(self, t: float, x: np.ndarray, hist: InputHistory) -> float:
        return self.evaluate(t, x, hist).u


def synthesize(
    spec: ControllerSpec,
    cfg: SafetyConfig,
    dyn: Dynamics,
    bar: Barrier,
    future_dyn: Dynamics | None = None,
    dist: Callable[[float, float], float] | None = None,
    n_sub: int | None = None,
    predict_fn: Callable[[float, np.ndarray, InputHistory], Prediction] | None = None,
) -> SynthesizedController:
    """
    Compose the closed-loop law for `spec`. Oracle availability is checked here,
    not mid-run: NOMINAL prediction needs `future_dyn`, GROUND_TRUTH needs
    `future_dyn` and `dist`. A custom `predict_fn` overrides the generic
    integrator (it must honor the same semantics).
    """
    kind = spec.predictor_kind
    if predict_fn is None:
        if kind is PredictorKind.GROUND_TRUTH and (future_dyn is None or dist is None):
            raise ValueError("ground-truth predictor needs future-dynamics and disturbance oracles")
        if kind is PredictorKind.NOMINAL and future_dyn is None:
            raise ValueError("nominal predictor needs the future-dynamics oracle")
        if kind is not PredictorKind.NONE and n_sub is None:
            raise ValueError("predictor variants need the sub-step count n_sub")

        def predict_fn(t: float, x: np.ndarray, hist: InputHistory) -> Prediction:
            return predict(kind, dyn, t, x, hist, n_sub, future_dyn=future_dyn, dist=dist)

    return SynthesizedController(spec, cfg, dyn, bar, predict_fn)
