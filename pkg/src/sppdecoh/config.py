"""Experiment configuration: a TOML file with explicit units in key names.

Every quantity in the file carries its unit as a suffix (``lengths_um``,
``rate_cps``, ``window_ns``); values are converted to SI on load and the
loaded object only speaks SI.  The seed is required, never defaulted from
the clock, so two runs of the same file are always identical.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import channels, simkit
from .errors import ConfigError, DomainError

REGIMES = ("classical", "quantum")


@dataclass(frozen=True)
class StageGrid:
    """Piezo positions for a fringe scan: start + k*step, k < n_points."""

    start: float  # m
    step: float  # m
    n_points: int

    def positions(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.n_points)


@dataclass(frozen=True)
class DecayPlan:
    """Evenly spaced sample lengths, optionally several repeated scans."""

    start: float  # m
    stop: float  # m
    n_lengths: int
    n_scans: int

    def lengths(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n_lengths)


@dataclass(frozen=True)
class OverlapCheck:
    delta_lambda: float  # m, spectral FWHM
    length: float  # m, worst-case propagation distance
    min_overlap: float
    gvd: Optional[float]  # s/(m*Hz); bundled table when absent


@dataclass(frozen=True)
class RecoveryChecks:
    """Expected extraction results and tolerances for the report flags."""

    l_target: float  # m
    l_tol_rel: float
    slope_target: float  # 1/m
    slope_tol_stds: float
    t2_target: float  # s
    t2_tol_rel: float
    g2_expected: Optional[float]
    g2_tol: Optional[float]


@dataclass(frozen=True)
class ExperimentConfig:
    regime: str
    seed: int
    lambda0: float  # m
    truth: channels.ChannelParams
    gamma_int: float
    waveguides: Tuple[simkit.WaveguideSpec, ...]
    reflectance: float
    transmittance: float
    gamma2_prime: float
    spp_wavelength: float  # m
    stage_scale: float
    stage: StageGrid
    decay: DecayPlan
    decay_rate: float  # counts/s
    fringe_rate: float  # counts/s
    integration: float  # s
    mc_instances: int
    source: Optional[simkit.SourceModel]
    g2_integration: float  # s
    overlap: OverlapCheck
    checks: Optional[RecoveryChecks]

    @property
    def k_spp(self) -> float:
        return 2.0 * math.pi / self.spp_wavelength


def _table(data: dict, key: str, required: bool = True) -> Optional[dict]:
    if key not in data:
        if required:
            raise ConfigError(f"missing section [{key}]")
        return None
    value = data[key]
    if not isinstance(value, dict):
        raise ConfigError(f"[{key}] must be a section, got {type(value).__name__}")
    return value


def _number(
    table: dict,
    key: str,
    path: str,
    required: bool = True,
    default: Optional[float] = None,
    positive: bool = False,
    nonnegative: bool = False,
) -> Optional[float]:
    if key not in table:
        if required:
            raise ConfigError(f"missing required field {path}.{key}")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(
            f"{path}.{key} must be a number, got {type(value).__name__}"
        )
    value = float(value)
    if positive and not value > 0:
        raise ConfigError(f"{path}.{key} must be > 0, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(f"{path}.{key} must be >= 0, got {value}")
    return value


def _integer(
    table: dict,
    key: str,
    path: str,
    required: bool = True,
    default: Optional[int] = None,
    minimum: Optional[int] = None,
) -> Optional[int]:
    if key not in table:
        if required:
            raise ConfigError(f"missing required field {path}.{key}")
        return default
    value = table[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(
            f"{path}.{key} must be an integer, got {type(value).__name__}"
        )
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key} must be >= {minimum}, got {value}")
    return value


def load_config(
    path: str,
    seed_override: Optional[int] = None,
    regime_override: Optional[str] = None,
) -> ExperimentConfig:
    """Parse and validate a TOML experiment file.

    Raises ConfigError naming the offending field path on any problem.
    """
    try:
        with open(path, "rb") as handle:
            data = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML: {exc}") from exc

    experiment = _table(data, "experiment")
    regime = regime_override or experiment.get("regime")
    if regime not in REGIMES:
        raise ConfigError(
            f"experiment.regime must be one of {REGIMES}, got {regime!r}"
        )
    if seed_override is not None:
        seed = seed_override
    else:
        if "seed" not in experiment:
            raise ConfigError("missing required field experiment.seed")
        seed = experiment["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"experiment.seed must be an integer, got {seed!r}")
    if not 0 <= seed < 2**64:
        raise ConfigError(f"experiment.seed must fit in 64 bits, got {seed}")
    lambda0 = _number(experiment, "lambda0_nm", "experiment", positive=True) * 1e-9

    truth = _table(data, "truth")
    gamma1 = _number(truth, "gamma1_s", "truth", positive=True)
    gamma2_star = _number(truth, "gamma2_star_s", "truth", nonnegative=True)
    gamma_int = _number(truth, "gamma_int", "truth", nonnegative=True)
    group_velocity = _number(truth, "group_velocity_m_s", "truth", positive=True)
    truth_params = channels.ChannelParams(
        gamma1=gamma1, gamma2_star=gamma2_star, group_velocity=group_velocity
    )

    interferometer = _table(data, "interferometer")
    reflectance = _number(
        interferometer, "reflectance", "interferometer", nonnegative=True
    )
    transmittance = _number(
        interferometer, "transmittance", "interferometer", nonnegative=True
    )
    if reflectance + transmittance > 1.0 + 1e-12:
        raise ConfigError(
            "interferometer.reflectance + transmittance must be <= 1, got "
            f"{reflectance + transmittance}"
        )
    gamma2_prime = _number(
        interferometer, "gamma2_prime", "interferometer",
        required=False, default=0.0, nonnegative=True,
    )
    spp_wavelength = _number(
        interferometer, "spp_wavelength_nm", "interferometer", positive=True
    ) * 1e-9
    stage_scale = _number(
        interferometer, "stage_scale", "interferometer",
        required=False, default=1.0, positive=True,
    )

    waveguides_table = _table(data, "waveguides")
    lengths_um = waveguides_table.get("lengths_um")
    if not isinstance(lengths_um, list) or not lengths_um:
        raise ConfigError("waveguides.lengths_um must be a nonempty list")
    specs = []
    for i, value in enumerate(lengths_um):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(
                f"waveguides.lengths_um[{i}] must be a number, got {value!r}"
            )
        specs.append(simkit.WaveguideSpec(length=float(value) * 1e-6))
    try:
        simkit.check_waveguide_lengths(specs)
    except DomainError as exc:
        raise ConfigError(f"waveguides.lengths_um: {exc}") from exc

    stage_table = _table(data, "stage")
    stage = StageGrid(
        start=_number(stage_table, "start_nm", "stage", nonnegative=True) * 1e-9,
        step=_number(stage_table, "step_nm", "stage", positive=True) * 1e-9,
        n_points=_integer(stage_table, "n_points", "stage", minimum=2),
    )

    decay_table = _table(data, "decay")
    decay_start = _number(decay_table, "start_um", "decay", positive=True) * 1e-6
    decay_stop = _number(decay_table, "stop_um", "decay", positive=True) * 1e-6
    if decay_stop <= decay_start:
        raise ConfigError("decay.stop_um must be greater than decay.start_um")
    decay = DecayPlan(
        start=decay_start,
        stop=decay_stop,
        n_lengths=_integer(decay_table, "n_lengths", "decay", minimum=3),
        n_scans=_integer(
            decay_table, "n_scans", "decay", required=False, default=1, minimum=1
        ),
    )

    budget = _table(data, "budget")
    decay_rate = _number(budget, "decay_rate_cps", "budget", positive=True)
    fringe_rate = _number(budget, "fringe_rate_cps", "budget", positive=True)
    integration = _number(budget, "integration_s", "budget", positive=True)

    mc_table = _table(data, "mc", required=False) or {}
    mc_instances = _integer(mc_table, "n_instances", "mc", required=False,
                            default=200, minimum=1)

    source_table = _table(data, "source", required=False)
    source = None
    g2_integration = integration
    if source_table is not None:
        transmission = _number(source_table, "transmission", "source", positive=True)
        if transmission > 1.0:
            raise ConfigError(
                f"source.transmission must be <= 1, got {transmission}"
            )
        multi_pair = _number(
            source_table, "multi_pair_prob", "source", nonnegative=True
        )
        if multi_pair >= 1.0:
            raise ConfigError(
                f"source.multi_pair_prob must be < 1, got {multi_pair}"
            )
        source = simkit.SourceModel(
            herald_rate=_number(
                source_table, "herald_rate_cps", "source", positive=True
            ),
            transmission=transmission,
            multi_pair_prob=multi_pair,
            dark_rate=_number(
                source_table, "dark_rate_cps", "source",
                required=False, default=0.0, nonnegative=True,
            ),
            coincidence_window=_number(
                source_table, "window_ns", "source",
                required=False, default=8.0, positive=True,
            ) * 1e-9,
        )
        g2_integration = _number(
            source_table, "integration_s", "source",
            required=False, default=integration, positive=True,
        )

    overlap_table = _table(data, "overlap", required=False) or {}
    overlap = OverlapCheck(
        delta_lambda=_number(
            overlap_table, "delta_lambda_nm", "overlap",
            required=False, default=40.0, positive=True,
        ) * 1e-9,
        length=_number(
            overlap_table, "check_length_um", "overlap",
            required=False, default=90.0, positive=True,
        ) * 1e-6,
        min_overlap=_number(
            overlap_table, "min_overlap", "overlap",
            required=False, default=0.99, positive=True,
        ),
        gvd=_number(overlap_table, "d_s_per_m_hz", "overlap", required=False),
    )

    checks_table = _table(data, "checks", required=False)
    checks = None
    if checks_table is not None:
        checks = RecoveryChecks(
            l_target=_number(checks_table, "l_um", "checks", positive=True) * 1e-6,
            l_tol_rel=_number(checks_table, "l_tol_rel", "checks", positive=True),
            slope_target=_number(
                checks_table, "slope_per_um", "checks", nonnegative=True
            ) * 1e6,
            slope_tol_stds=_number(
                checks_table, "slope_tol_stds", "checks", positive=True
            ),
            t2_target=_number(checks_table, "t2_s", "checks", positive=True),
            t2_tol_rel=_number(checks_table, "t2_tol_rel", "checks", positive=True),
            g2_expected=_number(checks_table, "g2_expected", "checks",
                                required=False, nonnegative=True),
            g2_tol=_number(checks_table, "g2_tol", "checks",
                           required=False, positive=True),
        )

    return ExperimentConfig(
        regime=regime,
        seed=seed,
        lambda0=lambda0,
        truth=truth_params,
        gamma_int=gamma_int,
        waveguides=tuple(specs),
        reflectance=reflectance,
        transmittance=transmittance,
        gamma2_prime=gamma2_prime,
        spp_wavelength=spp_wavelength,
        stage_scale=stage_scale,
        stage=stage,
        decay=decay,
        decay_rate=decay_rate,
        fringe_rate=fringe_rate,
        integration=integration,
        mc_instances=mc_instances,
        source=source,
        g2_integration=g2_integration,
        overlap=overlap,
        checks=checks,
    )
