"""Pure-numpy implementation of the fringe-fit kernel.

This is the fallback for :mod:`sppdecoh._kernels` when the compiled
extension is unavailable.  Both backends implement the same damped
Gauss-Newton (Levenberg-Marquardt) iteration step for step: accepted steps
must decrease the weighted sum of squared residuals, and iteration stops
when the relative step norm drops below ``step_tol`` or after ``max_iter``
iterations.
"""

from __future__ import annotations

import math
from typing import Tuple

import numpy as np

BACKEND_NAME = "python"

_TWO_PI = 2.0 * math.pi


def _exp(z: float) -> float:
    # C exp() saturates to inf on overflow; math.exp raises instead.  A
    # runaway trial step (very negative gamma_eff) must produce an infinite
    # cost that the LM loop rejects, exactly as the compiled kernel does.
    try:
        return math.exp(z)
    except OverflowError:
        return math.inf


def _midpoint_amplitude(gamma_eff, knowns):
    r, t, g1p, g2p, gt1 = knowns
    mid = r * math.exp(-g1p) + t * math.exp(-(gt1 + g2p))
    amp = 2.0 * math.sqrt(r * t) * _exp(-0.5 * (g1p + g2p + gt1) - gamma_eff)
    return mid, amp


def fringe_curve(
    x: np.ndarray,
    params: Tuple[float, float, float, float],
    knowns: Tuple[float, float, float, float, float],
    lambda0: float,
) -> np.ndarray:
    """Expected counts at stage delays ``x``.

    ``params`` is (gamma_eff, delta, s, i_in); ``knowns`` is
    (reflectance, transmittance, g1p, g2p, gt1).
    """
    gamma_eff, delta, s, i_in = params
    mid, amp = _midpoint_amplitude(gamma_eff, knowns)
    phase = _TWO_PI * s * np.asarray(x, dtype=float) / lambda0 - delta
    with np.errstate(over="ignore", invalid="ignore"):
        return i_in * (mid + amp * np.cos(phase))


def _model(x, p, knowns, lambda0):
    gamma_eff, delta, s, i_in = p
    mid, amp = _midpoint_amplitude(gamma_eff, knowns)
    phase = _TWO_PI * s * x / lambda0 - delta
    return i_in * (mid + amp * np.cos(phase))


def _model_and_jacobian(x, p, knowns, lambda0):
    gamma_eff, delta, s, i_in = p
    mid, amp = _midpoint_amplitude(gamma_eff, knowns)
    phase = _TWO_PI * s * x / lambda0 - delta
    cosp = np.cos(phase)
    sinp = np.sin(phase)
    shape = mid + amp * cosp
    mu = i_in * shape
    jac = np.empty((x.size, 4))
    jac[:, 0] = -i_in * amp * cosp
    jac[:, 1] = i_in * amp * sinp
    jac[:, 2] = -i_in * amp * sinp * (_TWO_PI * x / lambda0)
    jac[:, 3] = shape
    return mu, jac


def lm_fit_fringe(
    x: np.ndarray,
    y: np.ndarray,
    w: np.ndarray,
    p0: Tuple[float, float, float, float],
    knowns: Tuple[float, float, float, float, float],
    lambda0: float,
    fix_gamma: bool = False,
    max_iter: int = 200,
    step_tol: float = 1e-10,
):
    """Weighted Levenberg-Marquardt fit of the fringe model.

    Returns ``(params, cov, cost, n_iter, converged)`` where ``cost`` is the
    weighted sum of squared residuals and ``cov`` the covariance
    (J^T W J)^-1 at the solution.  With ``fix_gamma`` the first parameter is
    pinned at its starting value (used when clipping at the gamma_eff >= 0
    boundary).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sqrt_w = np.sqrt(np.asarray(w, dtype=float))
    p = np.array(p0, dtype=float)

    def cost_at(pv):
        # Trial steps may probe absurd parameter values; like the compiled
        # kernel, let the arithmetic saturate silently and leave rejection
        # to the non-finite cost check.
        with np.errstate(over="ignore", invalid="ignore"):
            resid = sqrt_w * (y - _model(x, pv, knowns, lambda0))
            return float(resid @ resid)

    def normal_system(pv):
        mu, jac = _model_and_jacobian(x, pv, knowns, lambda0)
        jw = jac * sqrt_w[:, None]
        resid = sqrt_w * (y - mu)
        a = jw.T @ jw
        g = jw.T @ resid
        if fix_gamma:
            a[0, :] = 0.0
            a[:, 0] = 0.0
            a[0, 0] = 1.0
            g[0] = 0.0
        return a, g

    cost = cost_at(p)
    lam = 1e-3
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        a, g = normal_system(p)
        diag = np.diag(a).copy()
        diag[diag <= 0.0] = 1.0
        accepted = False
        for _ in range(30):
            try:
                step = np.linalg.solve(a + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam = min(lam * 10.0, 1e12)
                continue
            p_try = p + step
            cost_try = cost_at(p_try)
            if np.isfinite(cost_try) and cost_try <= cost:
                accepted = True
                break
            lam = min(lam * 10.0, 1e12)
        if not accepted:
            # Damping saturated without a downhill step: local minimum to
            # working precision.
            converged = True
            break
        rel_step = float(np.linalg.norm(step)) / (float(np.linalg.norm(p)) + 1e-300)
        p = p_try
        cost = cost_try
        lam = max(lam * 0.3, 1e-12)
        if rel_step < step_tol:
            converged = True
            break

    a, _ = normal_system(p)
    try:
        cov = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), np.nan)
    if fix_gamma:
        cov[0, :] = 0.0
        cov[:, 0] = 0.0
    return p, cov, cost, n_iter, converged
