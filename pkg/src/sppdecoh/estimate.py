"""Parameter extraction: decay fits, fringe fits with Monte-Carlo errors,
the damping-vs-length line, and the final summary record.

The chain mirrors the measurement procedure: an exponential fit of the
decay scan yields the propagation length and amplitude damping rate; each
fringe scan is fit for its effective phase damping ``gamma_eff`` with the
per-scan uncertainty taken from a parametric bootstrap (every count redrawn
Poisson around the measured value, 200 refits); a weighted straight line
through ``gamma_eff`` versus waveguide length separates the per-length pure
dephasing (slope) from the static mode-overlap penalty (intercept); and the
summary converts rates to damping times with first-order error propagation.

All optimizers are damped Gauss-Newton: steps are accepted only when the
weighted sum of squared residuals decreases, and convergence is declared
when the relative step norm falls below 1e-10 (or after 200 iterations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels, channels
from .errors import DomainError, FitFailureError, InsufficientDataError
from .simkit import FringeScan, DecayScan

MAX_ITERATIONS = 200
STEP_TOL = 1e-10

#: Fitted gamma_eff below this counts as pinned at the physical boundary.
BOUNDARY_TOL = 1e-9

#: Multi-start grid for the fringe phase offset, to escape phase folds.
DELTA_STARTS = (0.0, 0.5 * math.pi, math.pi, 1.5 * math.pi)

LAMBDA0_DEFAULT = 810e-9


def _weight_from_sigma(sigma: np.ndarray) -> np.ndarray:
    # Weight floor: sigma below one count is treated as one count.
    return 1.0 / np.maximum(sigma, 1.0) ** 2


def _lm_least_squares(
    eval_fn: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]],
    p0: Sequence[float],
    y: np.ndarray,
    w: np.ndarray,
    max_iter: int = MAX_ITERATIONS,
    step_tol: float = STEP_TOL,
):
    """Generic damped Gauss-Newton for small dense problems.

    ``eval_fn(p)`` returns the model values and Jacobian at ``p``.  Same
    acceptance and convergence rules as the fringe kernel.
    """
    y = np.asarray(y, dtype=float)
    sqrt_w = np.sqrt(np.asarray(w, dtype=float))
    p = np.array(p0, dtype=float)

    def cost_at(pv):
        mu, _ = eval_fn(pv)
        resid = sqrt_w * (y - mu)
        return float(resid @ resid)

    cost = cost_at(p)
    lam = 1e-3
    converged = False
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        mu, jac = eval_fn(p)
        jw = jac * sqrt_w[:, None]
        a = jw.T @ jw
        g = jw.T @ (sqrt_w * (y - mu))
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
            converged = True
            break
        rel_step = float(np.linalg.norm(step)) / (float(np.linalg.norm(p)) + 1e-300)
        p = p_try
        cost = cost_try
        lam = max(lam * 0.3, 1e-12)
        if rel_step < step_tol:
            converged = True
            break

    mu, jac = eval_fn(p)
    jw = jac * sqrt_w[:, None]
    a = jw.T @ jw
    try:
        cov = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        cov = np.full((len(p), len(p)), np.nan)
    return p, cov, cost, n_iter, converged


# ---------------------------------------------------------------------------
# Decay scans

@dataclass(frozen=True)
class DecayFit:
    """Exponential-decay fit: counts = amplitude * exp(-length/L)."""

    propagation_length: float  # m
    propagation_length_std: float
    amplitude: float  # counts at zero length
    amplitude_std: float
    gamma1: float  # 1/s
    gamma1_std: float
    t1: float  # s
    t1_std: float


def fit_exponential_decay(scan: DecayScan, group_velocity: float) -> DecayFit:
    """Weighted fit of the decay scan; Poisson weights 1/counts.

    Zero-count points are excluded from the log-domain seed but kept in the
    nonlinear fit with a weight floor of one count.
    """
    if not group_velocity > 0:
        raise DomainError(f"group_velocity must be > 0, got {group_velocity}")
    lengths = np.array([p.length for p in scan.points])
    counts = np.array([p.counts for p in scan.points], dtype=float)
    if lengths.size < 3:
        raise InsufficientDataError(
            f"decay fit needs >= 3 points, got {lengths.size}"
        )
    w = 1.0 / np.maximum(counts, 1.0)

    positive = counts > 0
    if np.count_nonzero(positive) < 2:
        raise InsufficientDataError("decay fit needs >= 2 nonzero-count points")
    # Log-domain weighted line for the seed: log c = log C0 - length/L.
    coeffs = np.polyfit(
        lengths[positive], np.log(counts[positive]), 1,
        w=np.sqrt(counts[positive]),
    )
    slope, log_c0 = coeffs
    if slope >= 0:
        # Non-decaying seed; fall back to the span.
        seed_length = lengths.max() - lengths.min() or lengths.max()
    else:
        seed_length = -1.0 / slope
    p0 = (math.exp(log_c0), seed_length)

    def eval_fn(p):
        c0, ell = p
        decay = np.exp(-lengths / ell)
        mu = c0 * decay
        jac = np.column_stack((decay, c0 * decay * lengths / ell**2))
        return mu, jac

    p, cov, cost, n_iter, converged = _lm_least_squares(eval_fn, p0, counts, w)
    if not converged or not np.all(np.isfinite(p)) or p[1] <= 0:
        raise FitFailureError(
            f"decay fit did not converge after {n_iter} iterations "
            f"(cost={cost}, params={p.tolist()})"
        )
    c0, ell = p
    c0_std, ell_std = np.sqrt(np.abs(np.diag(cov)))
    gamma1 = channels.gamma1_from_propagation(ell, group_velocity)
    return DecayFit(
        propagation_length=ell,
        propagation_length_std=ell_std,
        amplitude=c0,
        amplitude_std=c0_std,
        gamma1=gamma1,
        gamma1_std=group_velocity * ell_std / ell**2,
        t1=ell / group_velocity,
        t1_std=ell_std / group_velocity,
    )


# ---------------------------------------------------------------------------
# Fringe scans

@dataclass(frozen=True)
class FringeFit:
    """Single-scan fringe fit with fixed arm dampings.

    ``at_boundary`` marks a fit pinned at gamma_eff = 0 (the optimizer
    crossed below zero and the scan was refit with gamma_eff held there).
    """

    gamma_eff: float
    gamma_eff_std: float
    delta_hat: float  # rad, reduced to [0, 2*pi)
    s_hat: float
    i_in_hat: float
    goodness: float  # weighted sum of squared residuals
    at_boundary: bool
    n_iterations: int


def _fringe_starts(scan: FringeScan, lambda0: float):
    y = scan.counts().astype(float)
    w = _weight_from_sigma(scan.sigmas())
    mid_data = float(np.sum(w * y) / np.sum(w))
    kn = scan.knowns
    mid_model = (
        kn.reflectance * math.exp(-kn.g1p)
        + kn.transmittance * math.exp(-(kn.gt1 + kn.g2p))
    )
    if mid_model <= 0:
        raise DomainError("fringe model has zero midpoint; cannot fit")
    i0 = max(mid_data / mid_model, 1e-12)
    amp_data = 0.5 * (float(y.max()) - float(y.min()))
    amp_max = 2.0 * math.sqrt(kn.reflectance * kn.transmittance) * math.exp(
        -0.5 * (kn.g1p + kn.g2p + kn.gt1)
    )
    ratio = amp_data / (i0 * amp_max) if amp_max > 0 and i0 > 0 else 0.0
    if 0.0 < ratio < 1.0:
        gamma0 = -math.log(ratio)
    else:
        gamma0 = 0.0
    return gamma0, i0, y, w


def fit_fringe(scan: FringeScan, lambda0: float = LAMBDA0_DEFAULT) -> FringeFit:
    """Fit (gamma_eff, delta, s, i_in) to one fringe scan.

    The static phase and stage factor are unknown per waveguide, so the fit
    multi-starts over four phase offsets to avoid the phase-fold local
    minima; the best converged start wins.
    """
    x = scan.positions()
    if x.size < 8:
        raise InsufficientDataError(
            f"fringe fit needs >= 8 points, got {x.size}"
        )
    span = float(x.max() - x.min())
    dx = float(np.median(np.diff(x))) if x.size > 1 else 0.0
    if span + dx < lambda0 * (1.0 - 1e-9):
        raise InsufficientDataError(
            f"fringe scan spans {span:.3e} m, less than one nominal period "
            f"{lambda0:.3e} m"
        )
    gamma0, i0, y, w = _fringe_starts(scan, lambda0)
    knowns = scan.knowns.as_tuple()

    best = None
    for delta0 in DELTA_STARTS:
        p0 = (gamma0, delta0, 1.0, i0)
        params, cov, cost, n_iter, converged = _kernels.lm_fit_fringe(
            x, y, w, p0, knowns, lambda0,
            max_iter=MAX_ITERATIONS, step_tol=STEP_TOL,
        )
        if not converged or not np.all(np.isfinite(params)):
            continue
        if best is None or cost < best[2]:
            best = (params, cov, cost, n_iter)
    if best is None:
        raise FitFailureError(
            "fringe fit failed to converge from every phase start"
        )
    params, cov, cost, n_iter = best

    at_boundary = params[0] < BOUNDARY_TOL
    if params[0] < 0.0:
        # Crossed the physical boundary: pin gamma_eff at zero and refit the
        # remaining parameters so they stay meaningful.
        p0 = (0.0, params[1], params[2], params[3])
        params, cov, cost, n_iter2, converged = _kernels.lm_fit_fringe(
            x, y, w, p0, knowns, lambda0, fix_gamma=True,
            max_iter=MAX_ITERATIONS, step_tol=STEP_TOL,
        )
        n_iter += n_iter2
        if not converged:
            raise FitFailureError("boundary refit did not converge")
    return FringeFit(
        gamma_eff=max(float(params[0]), 0.0),
        gamma_eff_std=float(math.sqrt(max(cov[0, 0], 0.0))),
        delta_hat=float(params[1]) % (2.0 * math.pi),
        s_hat=float(params[2]),
        i_in_hat=float(params[3]),
        goodness=float(cost),
        at_boundary=bool(at_boundary),
        n_iterations=int(n_iter),
    )


@dataclass(frozen=True)
class McFringeResult:
    """Parametric-bootstrap distribution of gamma_eff for one scan."""

    mean: float
    std: Optional[float]  # absent when n_instances == 1
    values: np.ndarray
    n_failed: int
    base: FringeFit


def monte_carlo_fringe(
    scan: FringeScan,
    n_instances: int = 200,
    seed: int = 0,
    lambda0: float = LAMBDA0_DEFAULT,
) -> McFringeResult:
    """Redraw every point Poisson around its measured count and refit.

    Instances restart from the base fit (the measured optimum), which is
    where a bootstrap refit belongs and keeps the multi-start cost out of
    the hot loop.  More than 10% failed instances aborts.
    """
    if n_instances < 1:
        raise DomainError(f"n_instances must be >= 1, got {n_instances}")
    base = fit_fringe(scan, lambda0)
    x = scan.positions()
    counts = scan.counts().astype(float)
    knowns = scan.knowns.as_tuple()
    p_base = (base.gamma_eff, base.delta_hat, base.s_hat, base.i_in_hat)

    values = []
    n_failed = 0
    for k in range(n_instances):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))
        y_k = rng.poisson(counts).astype(float)
        w_k = _weight_from_sigma(np.sqrt(y_k))
        params, _, _, _, converged = _kernels.lm_fit_fringe(
            x, y_k, w_k, p_base, knowns, lambda0,
            max_iter=MAX_ITERATIONS, step_tol=STEP_TOL,
        )
        if not converged or not np.all(np.isfinite(params)):
            n_failed += 1
            continue
        values.append(max(float(params[0]), 0.0))
    if n_failed > 0.1 * n_instances:
        raise FitFailureError(
            f"{n_failed}/{n_instances} Monte-Carlo instances failed to converge"
        )
    arr = np.array(values)
    return McFringeResult(
        mean=float(arr.mean()),
        std=float(arr.std(ddof=1)) if arr.size > 1 else None,
        values=arr,
        n_failed=n_failed,
        base=base,
    )


def period_window_fits(
    scan: FringeScan, lambda0: float = LAMBDA0_DEFAULT
) -> List[FringeFit]:
    """Independent fits of consecutive single-period windows of a long scan.

    Emulates refitting several oscillation periods separately; only applies
    when the scan spans more than two nominal periods, otherwise the whole
    scan is the single window.  Each window runs to the first sample that
    completes a full period (the sample grid rarely divides the period
    evenly), and the leftover tail joins the last window, so every point is
    used exactly once.
    """
    x = scan.positions()
    span = float(x.max() - x.min())
    if int(span // lambda0) <= 2:
        return [fit_fringe(scan, lambda0)]
    n = x.size
    edges = [0]
    while True:
        lo = edges[-1]
        if lo >= n:
            break
        j = int(np.searchsorted(x, x[lo] + lambda0, side="left"))
        if j >= n:
            break
        edges.append(j + 1)
    # a tail shorter than one period cannot stand alone; merge it back
    if len(edges) > 1 and (n - edges[-1] < 8 or x[-1] - x[edges[-1]] < lambda0):
        edges.pop()
    edges.append(n)
    fits = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        window = FringeScan(
            waveguide=scan.waveguide,
            regime=scan.regime,
            points=scan.points[lo:hi],
            knowns=scan.knowns,
        )
        fits.append(fit_fringe(window, lambda0))
    return fits


def empirical_visibility(
    scan: FringeScan, lambda0: float = LAMBDA0_DEFAULT
) -> float:
    """Model-free fringe contrast (max - min)/(max + min) of the scan.

    The extreme counts of a noisy scan overshoot the true envelope (the
    maximum of many Poisson draws sits above the mean curve), so taking the
    literal max and min points overestimates the contrast by several error
    bars.  Instead the first harmonic is extracted: y is least-squares
    decomposed into m + a*cos(2*pi*s*x/lambda0) + b*sin(...) over a grid of
    stage factors s, and the contrast is amp/mid of that reconstruction,
    whose extremes are mid +- amp.  No damping model is involved.
    """
    x = scan.positions()
    y = scan.counts().astype(float)
    if x.size < 4:
        raise InsufficientDataError(
            f"visibility estimate needs >= 4 points, got {x.size}"
        )
    if not np.any(y > 0):
        raise DomainError("all counts are zero; visibility undefined")
    best = None
    for s in np.arange(0.8, 1.2, 0.002):
        phase = 2.0 * math.pi * s * x / lambda0
        design = np.column_stack((np.ones_like(x), np.cos(phase), np.sin(phase)))
        coeffs, residual, _, _ = np.linalg.lstsq(design, y, rcond=None)
        cost = float(residual[0]) if residual.size else float(
            np.sum((y - design @ coeffs) ** 2)
        )
        if best is None or cost < best[0]:
            best = (cost, coeffs)
    mid, a, b = best[1]
    if mid <= 0:
        raise DomainError("fringe midpoint is not positive; visibility undefined")
    return float(math.hypot(a, b) / mid)


# ---------------------------------------------------------------------------
# The damping-vs-length line

@dataclass(frozen=True)
class LineFit:
    """Weighted straight line gamma_eff(length) = slope*length + intercept.

    ``slope_std``/``intercept_std`` come straight from the weighted-least-
    squares covariance (the supplied point stds taken at face value); the
    record additionally carries scatter-scaled versions, multiplied by
    sqrt(chi2/(n-2)), since which convention a quoted error follows is
    often ambiguous.
    """

    slope: float  # 1/m
    slope_std: float
    intercept: float
    intercept_std: float
    covariance: np.ndarray  # 2x2, (slope, intercept) ordering
    chi2: float
    n_points: int


def fit_gamma_eff_line(
    points: Sequence[Tuple[float, float, float]]
) -> LineFit:
    """Weighted least squares through (length, gamma_eff, std) triples."""
    if len(points) < 2:
        raise DomainError(f"line fit needs >= 2 points, got {len(points)}")
    lengths = np.array([p[0] for p in points], dtype=float)
    values = np.array([p[1] for p in points], dtype=float)
    stds = np.array([p[2] for p in points], dtype=float)
    if np.unique(lengths).size < 2:
        raise DomainError("line fit needs >= 2 distinct lengths")
    if not np.all(stds > 0):
        raise DomainError("line fit stds must be > 0")
    w = 1.0 / stds**2
    design = np.column_stack((lengths, np.ones_like(lengths)))
    normal = design.T @ (w[:, None] * design)
    rhs = design.T @ (w * values)
    solution = np.linalg.solve(normal, rhs)
    cov = np.linalg.inv(normal)
    residual = values - design @ solution
    chi2 = float(np.sum(w * residual**2))
    return LineFit(
        slope=float(solution[0]),
        slope_std=float(math.sqrt(cov[0, 0])),
        intercept=float(solution[1]),
        intercept_std=float(math.sqrt(cov[1, 1])),
        covariance=cov,
        chi2=chi2,
        n_points=int(lengths.size),
    )


# ---------------------------------------------------------------------------
# Summary

@dataclass(frozen=True)
class DecoherenceSummary:
    """The six reported quantities for one regime, with propagated errors."""

    regime: str
    gamma1: float
    gamma1_std: float
    gamma2_star: float
    gamma2_star_std: float
    gamma2: float
    gamma2_std: float
    t1: float
    t1_std: float
    t2_star: float
    t2_star_std: float
    t2: float
    t2_std: float


def summarize(
    gamma1: float,
    gamma1_std: float,
    slope: float,
    slope_std: float,
    group_velocity: float,
    regime: str = "quantum",
) -> DecoherenceSummary:
    """Combine the decay rate and the line slope into the damping times.

    gamma2_star = slope * v_g; times are reciprocal rates; T2 follows the
    1/T2 = 1/(2 T1) + 1/T2* relation.  Errors are first order with gamma1
    and the slope treated as independent (they come from separate scans).
    """
    if not gamma1 > 0:
        raise DomainError(f"gamma1 must be > 0, got {gamma1}")
    if slope < 0:
        raise DomainError(f"slope must be >= 0, got {slope}")
    if not group_velocity > 0:
        raise DomainError(f"group_velocity must be > 0, got {group_velocity}")
    if gamma1_std < 0 or slope_std < 0:
        raise DomainError("standard deviations must be >= 0")
    gamma2_star = slope * group_velocity
    gamma2_star_std = slope_std * group_velocity
    t1 = 1.0 / gamma1
    t1_std = gamma1_std / gamma1**2
    if gamma2_star > 0:
        t2_star = 1.0 / gamma2_star
        t2_star_std = gamma2_star_std / gamma2_star**2
    else:
        t2_star = math.inf
        t2_star_std = math.inf
    t2 = channels.t2_from(t1, t2_star)
    gamma2 = 0.5 * gamma1 + gamma2_star
    gamma2_std = math.hypot(0.5 * gamma1_std, gamma2_star_std)
    t2_std = gamma2_std / gamma2**2
    return DecoherenceSummary(
        regime=regime,
        gamma1=gamma1,
        gamma1_std=gamma1_std,
        gamma2_star=gamma2_star,
        gamma2_star_std=gamma2_star_std,
        gamma2=gamma2,
        gamma2_std=gamma2_std,
        t1=t1,
        t1_std=t1_std,
        t2_star=t2_star,
        t2_star_std=t2_star_std,
        t2=t2,
        t2_std=t2_std,
    )


# ---------------------------------------------------------------------------
# JSON records (9 significant digits on every floating value)

def round9(x: float) -> float:
    """Round to 9 significant digits for serialization."""
    if not math.isfinite(x):
        return x
    return float(f"{x:.9g}")


def decay_fit_record(fit: DecayFit) -> dict:
    return {
        "L_um": round9(fit.propagation_length * 1e6),
        "L_um_std": round9(fit.propagation_length_std * 1e6),
        "C0": round9(fit.amplitude),
        "C0_std": round9(fit.amplitude_std),
        "gamma1_s": round9(fit.gamma1),
        "gamma1_s_std": round9(fit.gamma1_std),
        "T1_s": round9(fit.t1),
        "T1_s_std": round9(fit.t1_std),
    }


def fringe_fit_record(fit: FringeFit, length: float) -> dict:
    return {
        "length_um": round9(length * 1e6),
        "gamma_eff": round9(fit.gamma_eff),
        "gamma_eff_std": round9(fit.gamma_eff_std),
        "delta_rad": round9(fit.delta_hat),
        "s_hat": round9(fit.s_hat),
        "i_in_hat": round9(fit.i_in_hat),
        "goodness": round9(fit.goodness),
        "at_boundary": fit.at_boundary,
    }


def mc_record(mc: McFringeResult, length: float) -> dict:
    record = fringe_fit_record(mc.base, length)
    record["gamma_eff"] = round9(mc.mean)
    record["gamma_eff_std"] = round9(mc.std) if mc.std is not None else None
    record["n_failed"] = mc.n_failed
    record["n_instances"] = int(mc.values.size) + mc.n_failed
    return record


def line_fit_record(fit: LineFit) -> dict:
    cov = fit.covariance
    scale = (
        math.sqrt(fit.chi2 / (fit.n_points - 2)) if fit.n_points > 2 else None
    )
    return {
        "slope_per_um": round9(fit.slope * 1e-6),
        "slope_per_um_std": round9(fit.slope_std * 1e-6),
        "slope_per_um_std_scaled": (
            round9(fit.slope_std * scale * 1e-6) if scale is not None else None
        ),
        "intercept": round9(fit.intercept),
        "intercept_std": round9(fit.intercept_std),
        "intercept_std_scaled": (
            round9(fit.intercept_std * scale) if scale is not None else None
        ),
        "chi2": round9(fit.chi2),
        "n_points": fit.n_points,
        "cov_per_um": [
            [round9(cov[0, 0] * 1e-12), round9(cov[0, 1] * 1e-6)],
            [round9(cov[1, 0] * 1e-6), round9(cov[1, 1])],
        ],
    }


def summary_record(summary: DecoherenceSummary) -> dict:
    return {
        "regime": summary.regime,
        "gamma1_s": round9(summary.gamma1),
        "gamma1_s_std": round9(summary.gamma1_std),
        "gamma2_star_s": round9(summary.gamma2_star),
        "gamma2_star_s_std": round9(summary.gamma2_star_std),
        "gamma2_s": round9(summary.gamma2),
        "gamma2_s_std": round9(summary.gamma2_std),
        "T1_s": round9(summary.t1),
        "T1_s_std": round9(summary.t1_std),
        "T2_star_s": round9(summary.t2_star),
        "T2_star_s_std": round9(summary.t2_star_std),
        "T2_s": round9(summary.t2),
        "T2_s_std": round9(summary.t2_std),
    }
