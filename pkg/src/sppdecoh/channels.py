"""Single-boson density matrices and the amplitude/phase damping channels.

The propagating excitation lives in the {|0>, |1>} number-state subspace, so
its state is a 2x2 Hermitian density matrix.  Amplitude damping (rate
``gamma1``) drains excited-state population and shrinks coherences; pure
phase damping (rate ``gamma2_star``) shrinks coherences only.  Both maps are
diagonal in this basis and commute, so the composed waveguide channel is
unambiguous.  Time and propagation distance are interchangeable through the
group velocity, ``t = length / group_velocity``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

#: Absolute tolerance for density-matrix invariant checks (double precision
#: leaves ample headroom at this scale).
INVARIANT_TOL = 1e-12


def _check_nonnegative(name: str, value: float) -> None:
    if value < 0:
        raise DomainError(f"{name} must be >= 0, got {value}")


def _check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise DomainError(f"{name} must be > 0, got {value}")


@dataclass(frozen=True)
class DensityMatrix2:
    """2x2 density matrix in the number basis; rho10 is stored implicitly.

    Only ``rho01`` is kept for the off-diagonal part; Hermiticity fixes
    ``rho10 = conj(rho01)``, so the invariant cannot be violated by
    construction.
    """

    rho00: float
    rho11: float
    rho01: complex = 0j

    def __post_init__(self) -> None:
        if self.rho00 < -INVARIANT_TOL or self.rho11 < -INVARIANT_TOL:
            raise DomainError(
                f"populations must be >= 0, got ({self.rho00}, {self.rho11})"
            )
        if abs(self.rho00 + self.rho11 - 1.0) > INVARIANT_TOL:
            raise DomainError(
                f"trace must be 1, got {self.rho00 + self.rho11}"
            )
        if abs(self.rho01) ** 2 > self.rho00 * self.rho11 + INVARIANT_TOL:
            raise DomainError(
                f"positivity violated: |rho01|^2 = {abs(self.rho01) ** 2} > "
                f"rho00*rho11 = {self.rho00 * self.rho11}"
            )

    @property
    def rho10(self) -> complex:
        return self.rho01.conjugate()

    @property
    def coherence(self) -> float:
        """Magnitude of the off-diagonal element."""
        return abs(self.rho01)

    @classmethod
    def excited(cls) -> "DensityMatrix2":
        """The |1><1| state."""
        return cls(0.0, 1.0, 0j)

    @classmethod
    def ground(cls) -> "DensityMatrix2":
        """The |0><0| state."""
        return cls(1.0, 0.0, 0j)

    @classmethod
    def plus(cls) -> "DensityMatrix2":
        """The balanced superposition (|0>+|1>)/sqrt(2) as a density matrix."""
        return cls(0.5, 0.5, 0.5 + 0j)


@dataclass(frozen=True)
class ChannelParams:
    """Ground-truth damping rates and group velocity of the guided mode."""

    gamma1: float  # amplitude damping rate, 1/s
    gamma2_star: float  # pure phase damping rate, 1/s
    group_velocity: float  # m/s

    def __post_init__(self) -> None:
        _check_nonnegative("gamma1", self.gamma1)
        _check_nonnegative("gamma2_star", self.gamma2_star)
        _check_positive("group_velocity", self.group_velocity)


@dataclass(frozen=True)
class DampingTimes:
    """The three damping times; ``t2_star`` may be infinite (no pure dephasing)."""

    t1: float
    t2_star: float
    t2: float

    def __post_init__(self) -> None:
        _check_positive("t1", self.t1)
        _check_positive("t2_star", self.t2_star)
        _check_positive("t2", self.t2)
        if self.t2 > 2.0 * self.t1 * (1.0 + 1e-12):
            raise DomainError(f"t2 = {self.t2} exceeds 2*t1 = {2.0 * self.t1}")

    @classmethod
    def from_rates(cls, gamma1: float, gamma2_star: float) -> "DampingTimes":
        _check_positive("gamma1", gamma1)
        _check_nonnegative("gamma2_star", gamma2_star)
        t1 = 1.0 / gamma1
        t2_star = math.inf if gamma2_star == 0.0 else 1.0 / gamma2_star
        return cls(t1=t1, t2_star=t2_star, t2=t2_from(t1, t2_star))


def apply_amplitude_damping(
    rho: DensityMatrix2, gamma1: float, t: float
) -> DensityMatrix2:
    """Amplitude-damp ``rho`` for a duration ``t`` at rate ``gamma1``.

    Excited population decays as exp(-gamma1*t), the lost weight moves to the
    ground state, and the coherence picks up the square-root factor
    exp(-gamma1*t/2).
    """
    _check_nonnegative("gamma1", gamma1)
    _check_nonnegative("t", t)
    decay = math.exp(-gamma1 * t)
    return DensityMatrix2(
        rho00=rho.rho00 + (1.0 - decay) * rho.rho11,
        rho11=decay * rho.rho11,
        rho01=math.sqrt(decay) * rho.rho01,
    )


def apply_phase_damping(
    rho: DensityMatrix2, gamma2_star: float, t: float
) -> DensityMatrix2:
    """Phase-damp ``rho``: populations untouched, coherence times exp(-gamma2_star*t)."""
    _check_nonnegative("gamma2_star", gamma2_star)
    _check_nonnegative("t", t)
    return DensityMatrix2(
        rho00=rho.rho00,
        rho11=rho.rho11,
        rho01=math.exp(-gamma2_star * t) * rho.rho01,
    )


def apply_waveguide_channel(
    rho: DensityMatrix2, params: ChannelParams, length: float
) -> DensityMatrix2:
    """Both dampings composed over a propagation distance ``length``.

    The two maps commute on this basis, so the composition order is
    irrelevant; the off-diagonal factor is
    exp(-gamma2_star*t) * exp(-gamma1*t/2) with t = length/group_velocity.
    """
    _check_nonnegative("length", length)
    t = length / params.group_velocity
    return apply_phase_damping(
        apply_amplitude_damping(rho, params.gamma1, t), params.gamma2_star, t
    )


def gamma1_from_propagation(propagation_length: float, group_velocity: float) -> float:
    """Amplitude damping rate from the 1/e propagation length: v_g / L."""
    _check_positive("propagation_length", propagation_length)
    _check_positive("group_velocity", group_velocity)
    return group_velocity / propagation_length


def dimensionless_damping(gamma: float, length: float, group_velocity: float) -> float:
    """Accumulated damping exponent over ``length``: gamma * length / v_g."""
    _check_nonnegative("gamma", gamma)
    _check_nonnegative("length", length)
    _check_positive("group_velocity", group_velocity)
    return gamma * length / group_velocity


def t2_from(t1: float, t2_star: float) -> float:
    """Total phase damping time from 1/T2 = 1/(2*T1) + 1/T2*.

    ``t2_star`` may be ``math.inf`` (no pure dephasing), which saturates the
    bound T2 = 2*T1.
    """
    _check_positive("t1", t1)
    _check_positive("t2_star", t2_star)
    if math.isinf(t2_star):
        return 2.0 * t1
    return 1.0 / (0.5 / t1 + 1.0 / t2_star)
