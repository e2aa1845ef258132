import math

import numpy as np
import pytest

from delaysafe.core import SigmaFn, linear_kappa
from delaysafe.delayline import InputHistory
from delaysafe.predictor import PredictorKind
from delaysafe.safety import (
    ControllerSpec,
    SafetyConfig,
    cbf_margin,
    gamma,
    h_delta,
    synthesize,
    tissf_margin,
)
from delaysafe.truck import (
    LeadProfile,
    TruckParams,
    headway_barrier,
    longitudinal_dynamics,
    nominal_control,
)

P = TruckParams()
CRUISE = LeadProfile(20.0, t_brake=math.inf)
DYN = longitudinal_dynamics(P, CRUISE)
BAR = headway_barrier(P)
CFG = SafetyConfig(linear_kappa(P.A), SigmaFn(P.sigma0, P.lam))


def nominal(x):
    return nominal_control(P, x)


def test_cbf_margin_hand_values():
    x = np.array([45.0, 20.0, 20.0])
    assert cbf_margin(DYN, BAR, CFG, 0.0, x, 0.0) == pytest.approx(0.8, abs=1e-12)
    x = np.array([25.0, 15.0, 10.0])
    # nominal output -4.5: hdot = -5 + 9 = 4, h = -8, margin = 4 - 3.2
    assert nominal(x) == pytest.approx(-4.5, abs=1e-12)
    assert cbf_margin(DYN, BAR, CFG, 0.0, x, -4.5) == pytest.approx(0.8, abs=1e-12)


def test_cbf_margin_boundary_tangent():
    # h = 0 with hdot = 0: margin exactly zero
    x = np.array([43.0, 20.0, 20.0])
    assert BAR.h(x) == 0.0
    assert cbf_margin(DYN, BAR, CFG, 0.0, x, 0.0) == 0.0


def test_tissf_margin_hand_value():
    x = np.array([45.0, 20.0, 20.0])
    sigma_h = math.exp(-0.6)
    u = 0.0 + sigma_h * (-2.0)
    assert u == pytest.approx(-1.097623, abs=1e-6)
    assert tissf_margin(DYN, BAR, CFG, 0.0, x, u) == pytest.approx(0.8, abs=1e-9)


def test_tissf_margin_vanishing_sigma_limit():
    x = np.array([30.0, 14.0, 12.0])
    tiny = SafetyConfig(CFG.alpha, SigmaFn(1e-12, P.lam))
    assert tissf_margin(DYN, BAR, tiny, 0.0, x, -1.0) == pytest.approx(
        cbf_margin(DYN, BAR, tiny, 0.0, x, -1.0), abs=1e-10
    )


def test_tissf_margin_independent_of_delta():
    x = np.array([30.0, 14.0, 12.0])
    a = tissf_margin(DYN, BAR, SafetyConfig(CFG.alpha, CFG.sigma, 0.0), 0.0, x, -1.0)
    b = tissf_margin(DYN, BAR, SafetyConfig(CFG.alpha, CFG.sigma, 2.0), 0.0, x, -1.0)
    assert a == b


def test_gamma_values():
    assert gamma(CFG, 5.0, delta=0.0) == 0.0
    cfg1 = SafetyConfig(CFG.alpha, CFG.sigma, delta=1.0)
    assert gamma(cfg1, 0.0) == pytest.approx(0.625, abs=1e-12)
    # delta^2 exp(lam h) / (4 sigma0 A) evaluated directly
    expected = 1.0 * math.exp(0.3 * 2.0) / (4.0 * 1.0 * 0.4)
    assert gamma(cfg1, 2.0) == pytest.approx(expected, abs=1e-12)


def test_gamma_nonnegative_and_increasing_in_h():
    cfg1 = SafetyConfig(CFG.alpha, CFG.sigma, delta=1.0)
    hs = np.linspace(-5.0, 30.0, 200)
    vals = np.array([gamma(cfg1, float(h)) for h in hs])
    assert np.all(vals >= 0.0)
    # dgamma/dh > 0 (checked by finite differences) given sigma' <= 0
    for h in (-2.0, 0.0, 1.5, 10.0):
        fd = (gamma(cfg1, h + 1e-6) - gamma(cfg1, h - 1e-6)) / 2e-6
        assert fd > 0.0


def test_h_delta():
    x0 = np.array([43.0, 20.0, 20.0])  # h = 0
    assert h_delta(CFG, BAR, x0) == BAR.h(x0)  # delta = 0
    cfg1 = SafetyConfig(CFG.alpha, CFG.sigma, delta=1.0)
    assert h_delta(cfg1, BAR, x0) == pytest.approx(0.625, abs=1e-12)
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.uniform((1.0, 0.0, 0.0), (90.0, 25.0, 25.0))
        assert h_delta(cfg1, BAR, x) >= BAR.h(x)


def constant_hist(u=0.0, tau=0.5):
    return InputHistory(tau, 1e-3, fill=u)


def test_synthesize_nominal_at_equilibrium():
    law = synthesize(ControllerSpec(nominal, False, PredictorKind.NONE), CFG, DYN, BAR)
    assert law(0.0, np.array([45.0, 20.0, 20.0]), constant_hist()) == 0.0


def test_synthesize_robust_at_equilibrium():
    law = synthesize(ControllerSpec(nominal, True, PredictorKind.NONE), CFG, DYN, BAR)
    u = law(0.0, np.array([45.0, 20.0, 20.0]), constant_hist())
    assert u == pytest.approx(-1.097623, abs=1e-6)
    assert u == pytest.approx(math.exp(-0.6) * -2.0, abs=1e-12)


def test_synthesize_predictor_fixed_point():
    # predicting an equilibrium under a stationary history returns the same input
    law = synthesize(ControllerSpec(nominal, False, PredictorKind.NOMINAL),
                     CFG, DYN, BAR, future_dyn=DYN, n_sub=500)
    assert law(0.0, np.array([45.0, 20.0, 20.0]), constant_hist(0.0)) == 0.0


def test_synthesize_requires_oracles_up_front():
    with pytest.raises(ValueError):
        synthesize(ControllerSpec(nominal, False, PredictorKind.NOMINAL), CFG, DYN, BAR)
    with pytest.raises(ValueError):
        synthesize(ControllerSpec(nominal, True, PredictorKind.GROUND_TRUTH),
                   CFG, DYN, BAR, future_dyn=DYN, n_sub=10)
    with pytest.raises(ValueError):
        synthesize(ControllerSpec(nominal, False, PredictorKind.NOMINAL),
                   CFG, DYN, BAR, future_dyn=DYN)  # missing n_sub


def sample_states(rng, n):
    """Operating-envelope states: v_L >= 0, v in [0, v_max], D > 0."""
    D = rng.uniform(0.1, 120.0, n)
    v = rng.uniform(0.0, P.v_max, n)
    vL = rng.uniform(0.0, 30.0, n)
    return np.column_stack([D, v, vL])


def test_safe_parameter_choice_satisfies_cbf_condition():
    # with B = kappa = 1/T and D_st >= D_sf the nominal law satisfies the
    # barrier condition at every sampled operating state
    rng = np.random.default_rng(100)
    states = sample_states(rng, 100_000)
    worst = math.inf
    for x in states:
        margin = cbf_margin(DYN, BAR, CFG, 0.0, x, nominal(x))
        worst = min(worst, margin)
    assert worst >= -1e-9
    # the closed-form floor A * (D_st - D_sf) = 0.8 holds too
    assert worst >= 0.8 - 1e-9


def test_completed_square_disturbance_bound():
    # worst-case disturbance d = -delta * sign(Lgh) against the robustified input:
    # hdot(u + d) >= -alpha(h) - delta^2 / (4 sigma(h))
    rng = np.random.default_rng(200)
    states = sample_states(rng, 100_000)
    deltas = rng.uniform(0.0, 2.0, len(states))
    worst = math.inf
    for x, delta in zip(states, deltas):
        hv = BAR.h(x)
        Lgh = -P.T
        Lfh = x[2] - x[1]
        u = nominal(x) + CFG.sigma(hv) * Lgh
        d = -delta * math.copysign(1.0, Lgh)
        lhs = Lfh + Lgh * (u + d) + CFG.alpha(hv) + delta * delta / (4.0 * CFG.sigma(hv))
        worst = min(worst, lhs)
    assert worst >= -1e-9


def test_zero_delay_reduction_bit_for_bit():
    # tau = 0 collapses every predictor variant onto its delay-free counterpart
    p0 = TruckParams(tau=0.0)
    dyn = longitudinal_dynamics(p0, CRUISE)
    bar = headway_barrier(p0)
    hist = InputHistory(0.0, 1e-3)
    hist.push(0.0, -1.0)
    rng = np.random.default_rng(8)
    base = synthesize(ControllerSpec(nominal, True, PredictorKind.NONE), CFG, dyn, bar)
    for kind in (PredictorKind.FROZEN, PredictorKind.NOMINAL, PredictorKind.GROUND_TRUTH):
        law = synthesize(ControllerSpec(nominal, True, kind), CFG, dyn, bar,
                         future_dyn=dyn, dist=lambda t, u: 0.0, n_sub=1)
        for _ in range(20):
            x = rng.uniform((1.0, 0.0, 0.0), (90.0, 20.0, 25.0))
            assert law(0.0, x, hist) == base(0.0, x, hist)


def test_decision_margin_matches_margin_functions():
    law = synthesize(ControllerSpec(nominal, True, PredictorKind.NONE), CFG, DYN, BAR)
    x = np.array([31.0, 12.0, 9.0])
    decision = law.evaluate(0.0, x, constant_hist())
    assert decision.margin == pytest.approx(
        tissf_margin(DYN, BAR, CFG, 0.0, x, decision.u), abs=1e-12
    )
    law2 = synthesize(ControllerSpec(nominal, False, PredictorKind.NONE), CFG, DYN, BAR)
    decision2 = law2.evaluate(0.0, x, constant_hist())
    assert decision2.margin == pytest.approx(
        cbf_margin(DYN, BAR, CFG, 0.0, x, decision2.u), abs=1e-12
    )
