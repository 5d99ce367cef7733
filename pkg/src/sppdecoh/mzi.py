"""Detection-probability models for the interferometer variants.

Every variant predicts the count probability (or relative count rate) at the
monitored output port as a function of the scanned phase ``phi``:

* ``Ideal`` -- lossless two-arm interferometer.
* ``Damped`` -- waveguide arm carries amplitude damping ``gt1`` and pure
  phase damping ``gt2s`` (both dimensionless exponents accumulated over the
  arm).
* ``NdBalanced`` -- additionally a tunable attenuator of strength
  ``gamma_free`` on the free arm, used to rebalance the interferometer.
* ``PolarizationSplit`` -- the input splitter is polarization-controlled,
  giving independent injection dampings ``g1p``/``g2p`` on the two arms.
* ``Full`` -- adds an asymmetric recombining beamsplitter (``reflectance``,
  ``transmittance``) and lumps all coherence loss into ``gamma_eff``.

All five reduce to one another in the documented limits; ``Full`` carries no
overall 1/2 normalization, so its output is a relative rate whose scale is
absorbed into a fitted input intensity (strict probability mode restores a
bounded interpretation, see :func:`fringe_probability`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import DegenerateModelError, DomainError

_STRICT_TOL = 1e-12


def _check_nonnegative(name: str, value: float) -> None:
    if value < 0:
        raise DomainError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class Ideal:
    """Lossless interferometer: p = (1 + cos(phi - delta)) / 2."""

    delta: float = 0.0


@dataclass(frozen=True)
class Damped:
    """Damped waveguide arm: p = (1 + e^-gt1 + 2 e^(-gt1/2 - gt2s) cos) / 4."""

    delta: float
    gt1: float
    gt2s: float

    def __post_init__(self) -> None:
        _check_nonnegative("gt1", self.gt1)
        _check_nonnegative("gt2s", self.gt2s)


@dataclass(frozen=True)
class NdBalanced:
    """Attenuator on the free arm:
    p = (e^-gamma_free + e^-gt1 + 2 e^(-(gamma_free+gt1)/2 - gt2s) cos) / 4.
    """

    delta: float
    gamma_free: float
    gt1: float
    gt2s: float

    def __post_init__(self) -> None:
        _check_nonnegative("gamma_free", self.gamma_free)
        _check_nonnegative("gt1", self.gt1)
        _check_nonnegative("gt2s", self.gt2s)


@dataclass(frozen=True)
class PolarizationSplit:
    """Polarization-controlled input splitting:
    p = (e^-g1p + e^-(gt1+g2p) + 2 e^(-(g1p+g2p+gt1)/2 - gt2s) cos) / 2.
    """

    delta: float
    g1p: float
    g2p: float
    gt1: float
    gt2s: float

    def __post_init__(self) -> None:
        _check_nonnegative("g1p", self.g1p)
        _check_nonnegative("g2p", self.g2p)
        _check_nonnegative("gt1", self.gt1)
        _check_nonnegative("gt2s", self.gt2s)


@dataclass(frozen=True)
class Full:
    """Asymmetric recombining beamsplitter and lumped coherence loss:
    p = R e^-g1p + T e^-(gt1+g2p)
        + 2 sqrt(RT) e^(-(g1p+g2p+gt1)/2 - gamma_eff) cos(phi - delta).
    """

    delta: float
    reflectance: float
    transmittance: float
    g1p: float
    g2p: float
    gt1: float
    gamma_eff: float

    def __post_init__(self) -> None:
        _check_nonnegative("reflectance", self.reflectance)
        _check_nonnegative("transmittance", self.transmittance)
        if self.reflectance + self.transmittance > 1.0 + _STRICT_TOL:
            raise DomainError(
                f"reflectance + transmittance must be <= 1, got "
                f"{self.reflectance + self.transmittance}"
            )
        _check_nonnegative("g1p", self.g1p)
        _check_nonnegative("g2p", self.g2p)
        _check_nonnegative("gt1", self.gt1)
        _check_nonnegative("gamma_eff", self.gamma_eff)


MziModel = Union[Ideal, Damped, NdBalanced, PolarizationSplit, Full]


@dataclass(frozen=True)
class StageGeometry:
    """Translation-stage geometry: phase per unit delay is 2*pi*scale/wavelength."""

    scale: float = 1.0
    wavelength: float = 810e-9

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise DomainError(f"scale must be > 0, got {self.scale}")
        if not self.wavelength > 0:
            raise DomainError(f"wavelength must be > 0, got {self.wavelength}")


@dataclass(frozen=True)
class PlasmonicPhase:
    """Static phase accumulated in the guided arm: delta = k_spp * length."""

    k_spp: float  # rad/m
    length: float  # m

    def __post_init__(self) -> None:
        _check_nonnegative("length", self.length)


def midpoint_amplitude(model: MziModel) -> Tuple[float, float]:
    """Decompose the fringe as p(phi) = mid + amp * cos(phi - delta).

    Every variant has this form; ``mid`` is the fringe midpoint and ``amp``
    the (non-negative) oscillation amplitude.
    """
    match model:
        case Ideal():
            return 0.5, 0.5
        case Damped(gt1=g1, gt2s=g2s):
            return (
                0.25 * (1.0 + math.exp(-g1)),
                0.5 * math.exp(-0.5 * g1 - g2s),
            )
        case NdBalanced(gamma_free=gf, gt1=g1, gt2s=g2s):
            return (
                0.25 * (math.exp(-gf) + math.exp(-g1)),
                0.5 * math.exp(-0.5 * (gf + g1) - g2s),
            )
        case PolarizationSplit(g1p=g1p, g2p=g2p, gt1=g1, gt2s=g2s):
            return (
                0.5 * (math.exp(-g1p) + math.exp(-(g1 + g2p))),
                math.exp(-0.5 * (g1p + g2p + g1) - g2s),
            )
        case Full(
            reflectance=r, transmittance=t, g1p=g1p, g2p=g2p, gt1=g1, gamma_eff=ge
        ):
            return (
                r * math.exp(-g1p) + t * math.exp(-(g1 + g2p)),
                2.0
                * math.sqrt(r * t)
                * math.exp(-0.5 * (g1p + g2p + g1) - ge),
            )
    raise TypeError(f"not an MZI model: {model!r}")


def check_strict_probability(model: MziModel) -> None:
    """Validate the arm-splitting budget needed for p(phi) <= 1.

    For the split-input variants the two injection dampings must satisfy
    e^-g1p + e^-g2p <= 1 (a passive splitter cannot put more than the whole
    photon into the two arms).  The symmetric variants are probabilities by
    construction.
    """
    if isinstance(model, (PolarizationSplit, Full)):
        budget = math.exp(-model.g1p) + math.exp(-model.g2p)
        if budget > 1.0 + _STRICT_TOL:
            raise DomainError(
                f"strict probability mode requires e^-g1p + e^-g2p <= 1, "
                f"got {budget}"
            )


def fringe_probability(model: MziModel, phi, strict: bool = False):
    """Detection probability (or relative rate, for ``Full``) at phase ``phi``.

    ``phi`` may be a scalar or an ndarray.  With ``strict=True`` the
    splitting budget is validated first, which guarantees the result lies in
    [0, 1]; without it, ``Full`` is a relative count-rate model whose scale
    is absorbed by the fitted input intensity.
    """
    if strict:
        check_strict_probability(model)
    mid, amp = midpoint_amplitude(model)
    return mid + amp * np.cos(np.asarray(phi) - model.delta)


def visibility(model: MziModel) -> float:
    """Fringe contrast (p_max - p_min) / (p_max + p_min) = amp / mid."""
    mid, amp = midpoint_amplitude(model)
    if mid <= 0.0:
        raise DegenerateModelError(
            "fringe midpoint is zero (both arms fully damped); "
            "visibility undefined"
        )
    return amp / mid


def balance_free_arm(gt1: float, g2p: float) -> float:
    """Free-arm damping that makes the two non-oscillating terms equal: gt1 + g2p."""
    _check_nonnegative("gt1", gt1)
    _check_nonnegative("g2p", g2p)
    return gt1 + g2p


def phase_from_stage(x, geom: StageGeometry):
    """Scanned phase from total stage delay ``x``: 2*pi*scale*x/wavelength."""
    return 2.0 * math.pi * geom.scale * np.asarray(x) / geom.wavelength


def delta_from_waveguide(p: PlasmonicPhase, reduce_mod_2pi: bool = False) -> float:
    """Static arm phase k_spp * length, optionally reduced to [0, 2*pi)."""
    delta = p.k_spp * p.length
    if reduce_mod_2pi:
        delta = math.fmod(delta, 2.0 * math.pi)
        if delta < 0.0:
            delta += 2.0 * math.pi
    return delta


def propagate_pure(phi: float, delta: float) -> Tuple[complex, complex]:
    """Output amplitudes of the lossless interferometer.

    Returns ``(a_out2, a_out1)``: ``a_out2`` multiplies the term with the
    photon in the unmonitored output and ``a_out1`` the term with the photon
    in the monitored one, so the detection probability is ``|a_out1|**2``.
    """
    osc = complex(math.cos(phi - delta), math.sin(phi - delta))
    a_out2 = 0.5 * (1.0 - osc)
    a_out1 = 0.5j * (1.0 + osc)
    return a_out2, a_out1
