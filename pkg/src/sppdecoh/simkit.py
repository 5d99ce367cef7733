"""Synthetic photon-counting experiments with deterministic seeding.

Three kinds of records are generated from ground-truth damping parameters:
length scans of transmitted counts (decay scans), stage scans of
interference counts (fringe scans), and heralded beam-split coincidence
counts for the second-order correlation check.  The only noise source in
the scans is Poisson shot noise on each expected count; with ``noise=False``
every simulator returns the rounded model mean, so the analytical formulas
in :mod:`sppdecoh.mzi` and :mod:`sppdecoh.channels` double as oracles for
the generated data.

Reproducibility contract: every random draw comes from a generator derived
from ``(seed, scan_id, point_index)``, so identical configurations produce
bit-identical scans no matter how the work is scheduled.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from . import channels, mzi
from .channels import ChannelParams
from .errors import DomainError, FileFormatError, InsufficientDataError
from .mzi import StageGeometry

#: Waveguide lengths available on the probed sample, m.
DEFAULT_LENGTH_RANGE = (7.32e-6, 32.47e-6)

#: Length grids scanned in each regime (4 steps of 5 um), m.
DEFAULT_QUANTUM_LENGTHS = (7.47e-6, 12.47e-6, 17.47e-6, 22.47e-6)
DEFAULT_CLASSICAL_LENGTHS = (8.31e-6, 13.31e-6, 18.31e-6, 23.31e-6)

#: Per-point integration times, s.
DEFAULT_INTEGRATION = {"classical": 1.0, "quantum": 24.0}

#: Default guided-mode wavenumber used to set the static arm phase, rad/m.
#: The fitted phase offset absorbs its exact value.
DEFAULT_K_SPP = 2.0 * math.pi / 790e-9

REGIMES = ("classical", "quantum")


def point_rng(seed: int, scan_id: int, point_index: int) -> np.random.Generator:
    """Generator for one sampled point, independent of evaluation order."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(scan_id, point_index))
    )


def _check_regime(regime: str) -> None:
    if regime not in REGIMES:
        raise DomainError(f"regime must be one of {REGIMES}, got {regime!r}")


@dataclass(frozen=True)
class WaveguideSpec:
    """One probed waveguide."""

    length: float  # m
    label: str = ""

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise DomainError(f"waveguide length must be > 0, got {self.length}")
        if not self.label:
            object.__setattr__(self, "label", f"wg_{self.length * 1e6:.2f}um")


def check_waveguide_lengths(
    waveguides: Sequence[WaveguideSpec],
    length_range: Tuple[float, float] = DEFAULT_LENGTH_RANGE,
) -> None:
    """Validate each length against the configured sample range."""
    lo, hi = length_range
    for wg in waveguides:
        if not lo <= wg.length <= hi:
            raise DomainError(
                f"waveguide {wg.label}: length {wg.length} outside "
                f"configured range [{lo}, {hi}]"
            )


@dataclass(frozen=True)
class DecayPoint:
    length: float  # m
    counts: int
    integration_time: float  # s


@dataclass(frozen=True)
class DecayScan:
    """Counts vs waveguide length in one regime."""

    regime: str
    points: Tuple[DecayPoint, ...]

    def __post_init__(self) -> None:
        _check_regime(self.regime)
        object.__setattr__(self, "points", tuple(self.points))
        lengths = [p.length for p in self.points]
        if len(set(lengths)) != len(lengths):
            raise DomainError("decay scan lengths must be distinct")
        for p in self.points:
            if p.counts < 0:
                raise DomainError(f"counts must be >= 0, got {p.counts}")
            if not p.integration_time > 0:
                raise DomainError(
                    f"integration_time must be > 0, got {p.integration_time}"
                )


@dataclass(frozen=True)
class FringeKnowns:
    """Model parameters held fixed during a fringe fit."""

    reflectance: float
    transmittance: float
    g1p: float
    g2p: float
    gt1: float

    def __post_init__(self) -> None:
        for name in ("reflectance", "transmittance", "g1p", "g2p", "gt1"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.reflectance + self.transmittance > 1.0 + 1e-12:
            raise DomainError("reflectance + transmittance must be <= 1")

    def to_model(self, delta: float, gamma_eff: float) -> mzi.Full:
        return mzi.Full(
            delta=delta,
            reflectance=self.reflectance,
            transmittance=self.transmittance,
            g1p=self.g1p,
            g2p=self.g2p,
            gt1=self.gt1,
            gamma_eff=gamma_eff,
        )

    def as_tuple(self) -> Tuple[float, float, float, float, float]:
        return (self.reflectance, self.transmittance, self.g1p, self.g2p, self.gt1)


@dataclass(frozen=True)
class FringePoint:
    position: float  # total stage delay, m
    counts: int
    sigma: float


@dataclass(frozen=True)
class FringeScan:
    """Counts vs stage delay for one waveguide."""

    waveguide: WaveguideSpec
    regime: str
    points: Tuple[FringePoint, ...]
    knowns: FringeKnowns

    def __post_init__(self) -> None:
        _check_regime(self.regime)
        object.__setattr__(self, "points", tuple(self.points))
        positions = np.array([p.position for p in self.points])
        if positions.size >= 2 and not np.all(np.diff(positions) > 0):
            raise DomainError("fringe scan positions must be strictly increasing")
        for p in self.points:
            if p.counts < 0:
                raise DomainError(f"counts must be >= 0, got {p.counts}")

    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.points])

    def counts(self) -> np.ndarray:
        return np.array([p.counts for p in self.points])

    def sigmas(self) -> np.ndarray:
        return np.array([p.sigma for p in self.points])


@dataclass(frozen=True)
class G2Counts:
    """Heralded beam-split counting record over a common window."""

    n_herald: int
    n_ab: int
    n_ac: int
    n_abc: int
    window: float  # s

    def __post_init__(self) -> None:
        if min(self.n_herald, self.n_ab, self.n_ac, self.n_abc) < 0:
            raise DomainError("counts must be >= 0")
        if not self.n_abc <= min(self.n_ab, self.n_ac) <= self.n_herald:
            raise DomainError(
                f"count ordering violated: need n_abc <= min(n_ab, n_ac) "
                f"<= n_herald, got ({self.n_abc}, {self.n_ab}, {self.n_ac}, "
                f"{self.n_herald})"
            )
        if not self.window > 0:
            raise DomainError(f"window must be > 0, got {self.window}")


@dataclass(frozen=True)
class SourceModel:
    """Heralded single-photon source feeding the beam-split measurement."""

    herald_rate: float  # heralds per second
    transmission: float  # probability the signal photon survives to the splitter
    multi_pair_prob: float  # probability a herald comes with a second photon
    dark_rate: float = 0.0  # per detector, counts per second
    coincidence_window: float = 8e-9  # s

    def __post_init__(self) -> None:
        if self.herald_rate < 0 or self.dark_rate < 0:
            raise DomainError("rates must be >= 0")
        for name in ("transmission", "multi_pair_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must be in [0, 1], got {value}")
        if not self.coincidence_window > 0:
            raise DomainError(
                f"coincidence_window must be > 0, got {self.coincidence_window}"
            )


def simulate_decay_scan(
    truth: ChannelParams,
    lengths: Sequence[float],
    base_rate: float,
    integration_time: float,
    regime: str,
    seed: int,
    noise: bool = True,
    scan_id: int = 0,
) -> DecayScan:
    """Counts vs length with mean base_rate * time * exp(-length/L).

    ``base_rate`` is the count rate extrapolated to zero length.
    """
    _check_regime(regime)
    if not base_rate > 0:
        raise DomainError(f"base_rate must be > 0, got {base_rate}")
    if not len(lengths):
        raise DomainError("lengths must be non-empty")
    points = []
    for i, length in enumerate(lengths):
        exponent = channels.dimensionless_damping(
            truth.gamma1, length, truth.group_velocity
        )
        mean = base_rate * integration_time * math.exp(-exponent)
        if noise:
            counts = int(point_rng(seed, scan_id, i).poisson(mean))
        else:
            counts = int(round(mean))
        points.append(DecayPoint(length, counts, integration_time))
    return DecayScan(regime=regime, points=tuple(points))


def simulate_fringe_scan(
    truth: ChannelParams,
    gamma_int: float,
    waveguide: WaveguideSpec,
    positions: Sequence[float],
    geom: StageGeometry,
    i_in: float,
    seed: int,
    reflectance: float = 0.5,
    transmittance: float = 0.5,
    g2p: float = 0.0,
    k_spp: float = DEFAULT_K_SPP,
    regime: str = "quantum",
    noise: bool = True,
    scan_id: int = 0,
) -> FringeScan:
    """Interference counts vs stage delay for one waveguide.

    The waveguide arm accumulates ``gt1`` from the amplitude damping truth
    and ``gamma_eff = gamma2_star * length / v_g + gamma_int``; the free arm
    is balanced (g1p = gt1 + g2p) so the fringe midpoint sits symmetrically.
    Expected counts are ``i_in`` times the full-model rate; per-point sigma
    is recorded as sqrt(counts).
    """
    if gamma_int < 0:
        raise DomainError(f"gamma_int must be >= 0, got {gamma_int}")
    if not i_in > 0:
        raise DomainError(f"i_in must be > 0, got {i_in}")
    if not len(positions):
        raise DomainError("positions must be non-empty")
    gt1 = channels.dimensionless_damping(
        truth.gamma1, waveguide.length, truth.group_velocity
    )
    gt2s = channels.dimensionless_damping(
        truth.gamma2_star, waveguide.length, truth.group_velocity
    )
    knowns = FringeKnowns(
        reflectance=reflectance,
        transmittance=transmittance,
        g1p=mzi.balance_free_arm(gt1, g2p),
        g2p=g2p,
        gt1=gt1,
    )
    delta = mzi.delta_from_waveguide(
        mzi.PlasmonicPhase(k_spp=k_spp, length=waveguide.length),
        reduce_mod_2pi=True,
    )
    model = knowns.to_model(delta=delta, gamma_eff=gt2s + gamma_int)
    phi = mzi.phase_from_stage(np.asarray(positions, dtype=float), geom)
    means = i_in * mzi.fringe_probability(model, phi)
    points = []
    for i, (x, mean) in enumerate(zip(positions, means)):
        if noise:
            counts = int(point_rng(seed, scan_id, i).poisson(mean))
        else:
            counts = int(round(mean))
        points.append(FringePoint(float(x), counts, math.sqrt(counts)))
    return FringeScan(
        waveguide=waveguide, regime=regime, points=tuple(points), knowns=knowns
    )


def _click_probabilities(source: SourceModel) -> Tuple[float, float, float]:
    """Per-herald probabilities (p_b, p_c, p_bc) of the two detectors firing.

    The signal photon reaches either detector with probability
    transmission/2; an accompanying second photon (probability
    multi_pair_prob) does the same independently; each detector can also
    fire from a dark count inside the coincidence window.  Enumerating the
    3 x 3 photon routings with independent darks gives the exact joint
    click probabilities.
    """
    t = source.transmission
    m = source.multi_pair_prob
    p_dark = 1.0 - math.exp(-source.dark_rate * source.coincidence_window)
    primary = ((0.5 * t, "B"), (0.5 * t, "C"), (1.0 - t, None))
    extra = ((0.5 * m * t, "B"), (0.5 * m * t, "C"), (1.0 - m * t, None))
    p_b = p_c = p_bc = 0.0
    for prob_o, route_o in primary:
        for prob_e, route_e in extra:
            weight = prob_o * prob_e
            q_b = 1.0 if "B" in (route_o, route_e) else p_dark
            q_c = 1.0 if "C" in (route_o, route_e) else p_dark
            p_b += weight * q_b
            p_c += weight * q_c
            p_bc += weight * q_b * q_c
    return p_b, p_c, p_bc


def expected_g2(source: SourceModel) -> float:
    """Large-count limit of the heralded estimator, p_bc / (p_b * p_c)."""
    p_b, p_c, p_bc = _click_probabilities(source)
    if p_b == 0.0 or p_c == 0.0:
        raise DomainError("source never produces clicks; g2 undefined")
    return p_bc / (p_b * p_c)


def simulate_g2_counts(
    source: SourceModel, duration: float, seed: int, scan_id: int = 0
) -> G2Counts:
    """Heralded beam-split counting record for a run of ``duration`` seconds.

    Heralds are iid, so the joint counts follow a multinomial over the four
    per-herald click classes (both detectors, B only, C only, neither);
    drawing that multinomial reproduces the per-herald simulation exactly.
    """
    if not duration > 0:
        raise DomainError(f"duration must be > 0, got {duration}")
    rng = point_rng(seed, scan_id, 0)
    n_herald = int(rng.poisson(source.herald_rate * duration))
    p_b, p_c, p_bc = _click_probabilities(source)
    classes = [p_bc, p_b - p_bc, p_c - p_bc, 1.0 - p_b - p_c + p_bc]
    n_bc, n_b_only, n_c_only, _ = rng.multinomial(n_herald, classes)
    return G2Counts(
        n_herald=n_herald,
        n_ab=int(n_bc + n_b_only),
        n_ac=int(n_bc + n_c_only),
        n_abc=int(n_bc),
        window=source.coincidence_window,
    )


def estimate_g2(counts: G2Counts) -> float:
    """Heralded second-order correlation: n_abc * n_herald / (n_ab * n_ac)."""
    if counts.n_ab == 0 or counts.n_ac == 0:
        raise InsufficientDataError(
            "estimate_g2 needs clicks on both detectors "
            f"(n_ab={counts.n_ab}, n_ac={counts.n_ac})"
        )
    return counts.n_abc * counts.n_herald / (counts.n_ab * counts.n_ac)


# ---------------------------------------------------------------------------
# Scan file formats (CSV, units in the header names)

def write_decay_csv(scan: DecayScan, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["length_um", "counts", "integration_s"])
        for p in scan.points:
            # dividing by the constant the reader multiplies by keeps
            # write/read cycles stable to the last bit
            writer.writerow(
                [repr(float(p.length) / 1e-6), p.counts,
                 repr(float(p.integration_time))]
            )


def read_decay_csv(path, regime: str = "quantum") -> DecayScan:
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["length_um", "counts", "integration_s"]:
            raise FileFormatError(
                f"{path}:1: expected header 'length_um,counts,integration_s', "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            try:
                points.append(
                    DecayPoint(
                        length=float(row["length_um"]) * 1e-6,
                        counts=int(row["counts"]),
                        integration_time=float(row["integration_s"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise FileFormatError(f"{path}:{reader.line_num}: {exc}") from exc
    return DecayScan(regime=regime, points=tuple(points))


def write_fringe_csv(scan: FringeScan, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x_nm", "counts", "sigma"])
        for p in scan.points:
            writer.writerow(
                [repr(float(p.position) / 1e-9), p.counts, repr(float(p.sigma))]
            )


def read_fringe_points(path) -> List[FringePoint]:
    """Points only; the waveguide and fixed model parameters come from config."""
    points = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["x_nm", "counts", "sigma"]:
            raise FileFormatError(
                f"{path}:1: expected header 'x_nm,counts,sigma', "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            try:
                points.append(
                    FringePoint(
                        position=float(row["x_nm"]) * 1e-9,
                        counts=int(row["counts"]),
                        sigma=float(row["sigma"]),
                    )
                )
            except (TypeError, ValueError) as exc:
                raise FileFormatError(f"{path}:{reader.line_num}: {exc}") from exc
    return points


def write_g2_csv(counts: G2Counts, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n_herald", "n_ab", "n_ac", "n_abc", "window_ns"])
        writer.writerow(
            [counts.n_herald, counts.n_ab, counts.n_ac, counts.n_abc,
             repr(float(counts.window) / 1e-9)]
        )


def read_g2_csv(path) -> G2Counts:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["n_herald", "n_ab", "n_ac", "n_abc", "window_ns"]:
            raise FileFormatError(
                f"{path}:1: expected header 'n_herald,n_ab,n_ac,n_abc,window_ns', "
                f"got {reader.fieldnames}"
            )
        rows = list(reader)
    if len(rows) != 1:
        raise FileFormatError(f"{path}: expected exactly one data row, got {len(rows)}")
    row = rows[0]
    try:
        return G2Counts(
            n_herald=int(row["n_herald"]),
            n_ab=int(row["n_ab"]),
            n_ac=int(row["n_ac"]),
            n_abc=int(row["n_abc"]),
            window=float(row["window_ns"]) * 1e-9,
        )
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}:2: {exc}") from exc
