"""Group-velocity dispersion and its effect on wavepacket overlap.

The guided mode's dispersion relation enters as a tabulated ``(omega, v_g)``
curve (computed elsewhere; we never solve for modes here).  From it we take
the GVD coefficient D = d(1/v_g)/d omega at the carrier frequency, propagate
a Gaussian wavepacket, and compute the spectral overlap between the spread
wavepacket and an undispersed reference.  An overlap near 1 rules dispersion
out as a decoherence mechanism.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import DomainError, InsufficientDataError

#: Speed of light in vacuum, m/s (fixed project constant).
C_LIGHT = 2.998e8

#: Central free-space wavelength of the source, m.
LAMBDA0_DEFAULT = 810e-9


def omega_from_wavelength(wavelength: float) -> float:
    """Angular frequency 2*pi*c/lambda."""
    if not wavelength > 0:
        raise DomainError(f"wavelength must be > 0, got {wavelength}")
    return 2.0 * math.pi * C_LIGHT / wavelength


@dataclass(frozen=True)
class DispersionTable:
    """Sampled group velocity v_g(omega) plus the carrier frequency omega0."""

    omega: np.ndarray  # rad/s, strictly increasing
    group_velocity: np.ndarray  # m/s
    omega0: float  # rad/s, inside the sampled range

    def __post_init__(self) -> None:
        omega = np.asarray(self.omega, dtype=float)
        vg = np.asarray(self.group_velocity, dtype=float)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "group_velocity", vg)
        if omega.ndim != 1 or omega.shape != vg.shape:
            raise DomainError("omega and group_velocity must be 1-D and equal length")
        if omega.size >= 2 and not np.all(np.diff(omega) > 0):
            raise DomainError("omega samples must be strictly increasing")
        if not np.all(vg > 0):
            raise DomainError("group velocities must be > 0")
        if omega.size and not (omega[0] <= self.omega0 <= omega[-1]):
            raise DomainError(
                f"omega0 = {self.omega0} outside table range "
                f"[{omega[0]}, {omega[-1]}]"
            )

    @classmethod
    def from_csv(cls, path, omega0: float) -> "DispersionTable":
        """Load a table from CSV with header ``omega_rad_s,vg_m_s``."""
        omegas = []
        vgs = []
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["omega_rad_s", "vg_m_s"]:
                raise DomainError(
                    f"{path}: expected header 'omega_rad_s,vg_m_s', "
                    f"got {reader.fieldnames}"
                )
            for row in reader:
                omegas.append(float(row["omega_rad_s"]))
                vgs.append(float(row["vg_m_s"]))
        return cls(np.array(omegas), np.array(vgs), omega0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["omega_rad_s", "vg_m_s"])
            for om, vg in zip(self.omega, self.group_velocity):
                writer.writerow([repr(float(om)), repr(float(vg))])


def stripe_waveguide_table(omega0: Optional[float] = None) -> DispersionTable:
    """The packaged dispersion table for the gold stripe mode at 810 nm."""
    if omega0 is None:
        omega0 = omega_from_wavelength(LAMBDA0_DEFAULT)
    ref = resources.files("sppdecoh").joinpath("data/stripe_dispersion.csv")
    with resources.as_file(ref) as path:
        return DispersionTable.from_csv(Path(path), omega0)


def gvd_coefficient(table: DispersionTable) -> float:
    """GVD coefficient D = d(1/v_g)/d omega at omega0, in s/(m*Hz).

    Differentiates the quadratic through the three samples nearest omega0
    (the non-uniform central difference), which is exact for any 1/v_g that
    is linear or quadratic in omega and second-order accurate otherwise.
    """
    n = table.omega.size
    if n < 3:
        raise InsufficientDataError(
            f"need at least 3 dispersion samples, got {n}"
        )
    inv_vg = 1.0 / table.group_velocity
    i = int(np.argmin(np.abs(table.omega - table.omega0)))
    i = min(max(i, 1), n - 2)
    x0, x1, x2 = table.omega[i - 1], table.omega[i], table.omega[i + 1]
    y0, y1, y2 = inv_vg[i - 1], inv_vg[i], inv_vg[i + 1]
    w = table.omega0
    return (
        y0 * (2.0 * w - x1 - x2) / ((x0 - x1) * (x0 - x2))
        + y1 * (2.0 * w - x0 - x2) / ((x1 - x0) * (x1 - x2))
        + y2 * (2.0 * w - x0 - x1) / ((x2 - x0) * (x2 - x1))
    )


@dataclass(frozen=True)
class WavepacketSpec:
    """Gaussian wavepacket: spectral std, matched temporal std, carrier wavelength.

    The minimum-uncertainty relation sigma_t0 = 1/(2*sigma_omega) is an
    invariant, so construct via :meth:`from_sigma_omega` or :meth:`from_fwhm`
    unless both values are already consistent.
    """

    sigma_omega: float  # rad/s
    sigma_t0: float  # s
    lambda0: float = LAMBDA0_DEFAULT

    def __post_init__(self) -> None:
        if not self.sigma_omega > 0:
            raise DomainError(f"sigma_omega must be > 0, got {self.sigma_omega}")
        if not self.lambda0 > 0:
            raise DomainError(f"lambda0 must be > 0, got {self.lambda0}")
        if abs(self.sigma_t0 * self.sigma_omega - 0.5) > 1e-12:
            raise DomainError(
                f"sigma_t0 * sigma_omega must equal 1/2, got "
                f"{self.sigma_t0 * self.sigma_omega}"
            )

    @classmethod
    def from_sigma_omega(
        cls, sigma_omega: float, lambda0: float = LAMBDA0_DEFAULT
    ) -> "WavepacketSpec":
        if not sigma_omega > 0:
            raise DomainError(f"sigma_omega must be > 0, got {sigma_omega}")
        return cls(sigma_omega, 0.5 / sigma_omega, lambda0)

    @classmethod
    def from_fwhm(
        cls, delta_lambda: float, lambda0: float = LAMBDA0_DEFAULT
    ) -> "WavepacketSpec":
        return cls.from_sigma_omega(
            sigma_omega_from_fwhm(delta_lambda, lambda0), lambda0
        )


def sigma_omega_from_fwhm(delta_lambda: float, lambda0: float) -> float:
    """Spectral std from a filter FWHM in wavelength.

    Converts the wavelength FWHM to angular frequency,
    Delta_omega = 2*pi*c*delta_lambda/lambda0**2, then divides by the
    Gaussian FWHM-to-std factor 2*sqrt(2*ln 2).
    """
    if not delta_lambda > 0:
        raise DomainError(f"delta_lambda must be > 0, got {delta_lambda}")
    if not lambda0 > 0:
        raise DomainError(f"lambda0 must be > 0, got {lambda0}")
    delta_omega = 2.0 * math.pi * C_LIGHT * delta_lambda / lambda0**2
    return delta_omega / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def temporal_spread(sigma_t0: float, length: float, d_coefficient: float) -> float:
    """Temporal std after propagating a distance ``length`` with GVD ``d_coefficient``.

    sigma_t = sqrt(sigma_t0**2 + (length*D/(2*sigma_t0))**2).  Note the
    overall +1/2 power: the width grows with distance.  Writing the exponent
    as -1/2 instead would predict a packet that narrows the further it
    travels, which free propagation cannot do.
    """
    if not sigma_t0 > 0:
        raise DomainError(f"sigma_t0 must be > 0, got {sigma_t0}")
    if length < 0:
        raise DomainError(f"length must be >= 0, got {length}")
    chirp = length * d_coefficient / (2.0 * sigma_t0)
    return math.hypot(sigma_t0, chirp)


def mode_overlap(sigma_omega_a: float, sigma_omega_b: float) -> float:
    """Overlap integral of two same-centered normalized Gaussian amplitudes.

    Closed form sqrt(2*s_a*s_b/(s_a**2 + s_b**2)); equals 1 iff the widths
    match and decreases as they diverge.
    """
    if not sigma_omega_a > 0 or not sigma_omega_b > 0:
        raise DomainError(
            f"spectral widths must be > 0, got "
            f"({sigma_omega_a}, {sigma_omega_b})"
        )
    return math.sqrt(
        2.0 * sigma_omega_a * sigma_omega_b
        / (sigma_omega_a**2 + sigma_omega_b**2)
    )


def overlap_after_propagation(
    spec: WavepacketSpec, length: float, d_coefficient: float
) -> float:
    """Overlap between the launched wavepacket and itself after dispersion.

    The reference arm sees no dispersion, so its spectral width stays
    ``spec.sigma_omega``; the guided arm's width maps through the temporal
    spread and back, sigma = 1/(2*sigma_t).
    """
    sigma_t = temporal_spread(spec.sigma_t0, length, d_coefficient)
    return mode_overlap(spec.sigma_omega, 0.5 / sigma_t)
