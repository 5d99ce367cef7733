import math

import numpy as np
import pytest

from sppdecoh import channels
from sppdecoh.errors import DomainError


def random_density_matrices(n, seed=0):
    """Valid single-boson density matrices with random coherence."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        rho11 = rng.uniform(0.0, 1.0)
        rho00 = 1.0 - rho11
        cap = math.sqrt(rho00 * rho11)
        mag = rng.uniform(0.0, cap)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        out.append(
            channels.DensityMatrix2(rho00, rho11, mag * complex(math.cos(phase), math.sin(phase)))
        )
    return out


class TestDensityMatrix2:
    def test_trace_enforced(self):
        with pytest.raises(DomainError):
            channels.DensityMatrix2(0.6, 0.6, 0.0)

    def test_positivity_enforced(self):
        with pytest.raises(DomainError):
            channels.DensityMatrix2(0.5, 0.5, 0.51)

    def test_negative_population(self):
        with pytest.raises(DomainError):
            channels.DensityMatrix2(-0.1, 1.1, 0.0)

    def test_rho10_is_conjugate(self):
        rho = channels.DensityMatrix2(0.5, 0.5, 0.25j)
        assert rho.rho10 == -0.25j

    def test_constructors(self):
        assert channels.DensityMatrix2.excited().rho11 == 1.0
        assert channels.DensityMatrix2.ground().rho00 == 1.0
        plus = channels.DensityMatrix2.plus()
        assert plus.rho01 == 0.5


class TestAmplitudeDamping:
    def test_excited_state_one_unit(self):
        rho = channels.DensityMatrix2.excited()
        out = channels.apply_amplitude_damping(rho, 1.0, 1.0)
        assert math.isclose(out.rho00, 1.0 - math.exp(-1.0), rel_tol=1e-12)
        assert math.isclose(out.rho11, math.exp(-1.0), rel_tol=1e-12)
        assert out.rho01 == 0.0

    def test_ground_state_fixed_point(self):
        rho = channels.DensityMatrix2.ground()
        out = channels.apply_amplitude_damping(rho, 3.7e13, 1e-12)
        assert out.rho00 == 1.0 and out.rho11 == 0.0

    def test_coherence_half_rate(self):
        rho = channels.DensityMatrix2.plus()
        out = channels.apply_amplitude_damping(rho, math.log(4.0), 1.0)
        assert math.isclose(abs(out.rho01), 0.25, rel_tol=1e-12)

    def test_negative_rate_rejected(self):
        rho = channels.DensityMatrix2.plus()
        with pytest.raises(DomainError):
            channels.apply_amplitude_damping(rho, -1.0, 1.0)
        with pytest.raises(DomainError):
            channels.apply_amplitude_damping(rho, 1.0, -1.0)


class TestPhaseDamping:
    def test_coherence_decay(self):
        rho = channels.DensityMatrix2.plus()
        out = channels.apply_phase_damping(rho, math.log(2.0), 1.0)
        assert math.isclose(abs(out.rho01), 0.25, rel_tol=1e-12)
        assert out.rho00 == rho.rho00 and out.rho11 == rho.rho11

    def test_zero_time_identity(self):
        for rho in random_density_matrices(20, seed=1):
            out = channels.apply_phase_damping(rho, 5e13, 0.0)
            assert out.rho01 == rho.rho01

    def test_zero_coherence_fixed_point(self):
        rho = channels.DensityMatrix2(0.3, 0.7, 0.0)
        out = channels.apply_phase_damping(rho, 5e13, 1e-13)
        assert out.rho01 == 0.0
        assert out.rho11 == 0.7


class TestWaveguideChannel:
    def test_zero_length_identity(self):
        params = channels.ChannelParams(5.27e13, 0.89e13, 2.958e8)
        rho = channels.DensityMatrix2.plus()
        out = channels.apply_waveguide_channel(rho, params, 0.0)
        assert out.rho01 == rho.rho01 and out.rho11 == rho.rho11

    def test_combined_factors(self):
        # rates chosen so gamma1*t = ln4 and gamma2*t = ln2 at length 1 m
        params = channels.ChannelParams(math.log(4.0), math.log(2.0), 1.0)
        rho = channels.DensityMatrix2.plus()
        out = channels.apply_waveguide_channel(rho, params, 1.0)
        assert math.isclose(abs(out.rho01), 0.125, rel_tol=1e-12)

    def test_order_does_not_matter(self):
        gamma1, gamma2, t = 2.3e13, 0.7e13, 3.1e-14
        for rho in random_density_matrices(1000, seed=2):
            a = channels.apply_phase_damping(
                channels.apply_amplitude_damping(rho, gamma1, t), gamma2, t
            )
            b = channels.apply_amplitude_damping(
                channels.apply_phase_damping(rho, gamma2, t), gamma1, t
            )
            assert abs(a.rho01 - b.rho01) < 1e-12
            assert abs(a.rho11 - b.rho11) < 1e-12


class TestRateConversions:
    def test_propagation_rates(self):
        assert math.isclose(
            channels.gamma1_from_propagation(5.85e-6, 2.958e8),
            5.056410256410e13, rel_tol=1e-9,
        )
        assert math.isclose(
            channels.gamma1_from_propagation(5.61e-6, 2.958e8),
            5.272727272727e13, rel_tol=1e-9,
        )

    def test_unit_case(self):
        vg = 2.958e8
        assert channels.gamma1_from_propagation(vg * 1.0, vg) == 1.0

    def test_nonpositive_rejected(self):
        with pytest.raises(DomainError):
            channels.gamma1_from_propagation(0.0, 2.958e8)
        with pytest.raises(DomainError):
            channels.gamma1_from_propagation(5e-6, 0.0)

    def test_dimensionless_damping(self):
        assert math.isclose(
            channels.dimensionless_damping(5.27e13, 5.61e-6, 2.958e8),
            0.999482758621, rel_tol=1e-9,
        )
        assert channels.dimensionless_damping(5.27e13, 0.0, 2.958e8) == 0.0
        assert math.isclose(
            channels.dimensionless_damping(5.27e13, 7.47e-6, 2.958e8),
            1.330862068966, rel_tol=1e-9,
        )
        with pytest.raises(DomainError):
            channels.dimensionless_damping(5.27e13, -1e-6, 2.958e8)


class TestT2From:
    def test_reported_pairs(self):
        # exact arithmetic lands within 0.3% of the rounded values
        assert math.isclose(
            channels.t2_from(1.90e-14, 11.19e-14), 2.83e-14, rel_tol=5e-3
        )
        assert math.isclose(
            channels.t2_from(1.98e-14, 8.03e-14), 2.65e-14, rel_tol=5e-3
        )

    def test_no_pure_dephasing_saturates(self):
        assert channels.t2_from(1.9e-14, math.inf) == 3.8e-14

    def test_bound_and_monotonicity(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            t1 = rng.uniform(1e-15, 1e-13)
            t2s = rng.uniform(1e-15, 1e-12)
            t2 = channels.t2_from(t1, t2s)
            assert t2 <= 2.0 * t1 * (1.0 + 1e-15)
            assert channels.t2_from(t1 * 1.1, t2s) > t2
            assert channels.t2_from(t1, t2s * 1.1) > t2

    def test_nonpositive_rejected(self):
        with pytest.raises(DomainError):
            channels.t2_from(0.0, 1e-14)
        with pytest.raises(DomainError):
            channels.t2_from(1e-14, -1e-14)


class TestDampingTimes:
    def test_from_rates(self):
        times = channels.DampingTimes.from_rates(5.27e13, 0.8874e13)
        assert math.isclose(times.t1, 1.0 / 5.27e13, rel_tol=1e-12)
        assert math.isclose(
            times.t2, channels.t2_from(times.t1, times.t2_star), rel_tol=1e-12
        )

    def test_bound_enforced(self):
        with pytest.raises(DomainError):
            channels.DampingTimes(t1=1e-14, t2_star=1e-13, t2=3e-14)

    def test_infinite_t2_star(self):
        times = channels.DampingTimes.from_rates(5.27e13, 0.0)
        assert math.isinf(times.t2_star)
        assert math.isclose(times.t2, 2.0 * times.t1, rel_tol=1e-12)


def test_channel_maps_preserve_invariants():
    # trace and positivity after arbitrary damping, in either order
    rng = np.random.default_rng(4)
    for rho in random_density_matrices(1000, seed=5):
        gamma1 = rng.uniform(0.0, 1e14)
        gamma2 = rng.uniform(0.0, 1e14)
        t = rng.uniform(0.0, 1e-13)
        out = channels.apply_phase_damping(
            channels.apply_amplitude_damping(rho, gamma1, t), gamma2, t
        )
        assert abs(out.rho00 + out.rho11 - 1.0) < 1e-12
        assert abs(out.rho01) ** 2 <= out.rho00 * out.rho11 + 1e-12
        assert abs(out.rho01) <= abs(rho.rho01) + 1e-15
        assert out.rho11 <= rho.rho11 + 1e-15


def test_semigroup_composition():
    rho = channels.DensityMatrix2(0.4, 0.6, 0.3 + 0.2j)
    for apply in (channels.apply_amplitude_damping, channels.apply_phase_damping):
        a = apply(apply(rho, 3e13, 2e-14), 3e13, 5e-14)
        b = apply(rho, 3e13, 7e-14)
        assert abs(a.rho01 - b.rho01) < 1e-15
        assert abs(a.rho11 - b.rho11) < 1e-15
