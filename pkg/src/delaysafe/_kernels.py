"""Numba-compiled fast path for truck-scenario prediction (hot loop of the simulator)."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Predictor modes; must stay in sync with sim._KERNEL_MODE.
MODE_FROZEN = 0
MODE_NOMINAL = 1
MODE_GROUND_TRUTH = 2


@njit(cache=True)
def truck_predict(
    D: float, v: float, vL: float,
    t: float, tau: float, n_sub: int,
    u_win: np.ndarray,
    mode: int,
    aL_frozen: float,
    t_brake: float, t_stop: float, a_brake: float,
    lag_a0: float, lag_xi: float, with_lag: bool,
) -> tuple[float, float, float]:
    """
    RK4 prediction over [t, t+tau] of the truck flow, one sub-step per entry of
    u_win (the committed inputs at the sub-step left endpoints). Semantics match
    predictor.predict specialized to the truck model: FROZEN pins the lead
    acceleration at aL_frozen; NOMINAL/GROUND_TRUTH evaluate the braking profile
    at the true stage times; GROUND_TRUTH with with_lag adds the actuator-lag
    disturbance, propagating the lag state exactly per held-input cell.
    """
    h = tau / n_sub
    half = 0.5 * h
    a_cell = lag_a0
    e_half = math.exp(-half / lag_xi)
    e_full = e_half * e_half
    for j in range(n_sub):
        s0 = t + j * h
        u_j = u_win[j]

        if mode == MODE_FROZEN:
            aL1 = aL_frozen
            aL2 = aL_frozen
            aL4 = aL_frozen
        else:
            s2 = s0 + half
            s4 = s0 + h
            aL1 = a_brake if (t_brake <= s0) and (s0 < t_stop) else 0.0
            aL2 = a_brake if (t_brake <= s2) and (s2 < t_stop) else 0.0
            aL4 = a_brake if (t_brake <= s4) and (s4 < t_stop) else 0.0

        if mode == MODE_GROUND_TRUTH and with_lag:
            gap = a_cell - u_j
            d1 = gap                     # a(s0) - u_j
            d2 = gap * e_half            # a(s0 + h/2) - u_j
            d4 = gap * e_full            # a(s0 + h) - u_j
            a_cell = u_j + gap * e_full  # exact lag propagation across the cell
        else:
            d1 = 0.0
            d2 = 0.0
            d4 = 0.0

        k1D = vL - v
        k1v = u_j + d1
        k1L = aL1
        k2D = (vL + half * k1L) - (v + half * k1v)
        k2v = u_j + d2
        k2L = aL2
        k3D = (vL + half * k2L) - (v + half * k2v)
        k3v = u_j + d2
        k3L = aL2
        k4D = (vL + h * k3L) - (v + h * k3v)
        k4v = u_j + d4
        k4L = aL4

        D += h * (k1D + 2.0 * k2D + 2.0 * k3D + k4D) / 6.0
        v += h * (k1v + 2.0 * k2v + 2.0 * k3v + k4v) / 6.0
        vL += h * (k1L + 2.0 * k2L + 2.0 * k3L + k4L) / 6.0
    return D, v, vL
