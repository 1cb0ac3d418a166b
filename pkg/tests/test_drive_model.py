import cmath
import math

import numpy as np
import pytest
import scipy.integrate
from hypothesis import given, settings
from hypothesis import strategies as st

from floquet_lab import (
    DriveSpec,
    OscillatorParams,
    ResonanceError,
    ResonantTimeError,
    eval_drive,
    floquet_scalar_derivs,
    floquet_scalars,
    fourier_coefficient,
    is_resonant_period,
    mu_nu_sigma,
    phi12,
    psi,
    split_elapsed,
)

T0 = 2 * math.pi * math.sqrt(2)


def two_harmonic_drive() -> DriveSpec:
    return DriveSpec.from_fourier(
        T0, {1: 0.3 - 0.1j, -1: 0.3 + 0.1j, 3: 0.05j, -3: -0.05j, 0: 0.02}
    )


class TestDriveSpec:
    def test_sine_matches_pointwise(self):
        spec = DriveSpec.sine(T0, amplitude=0.7, harmonic=2)
        ts = np.linspace(-3.0, 8.0, 41)
        assert np.allclose(eval_drive(spec, ts), 0.7 * np.sin(2 * 2 * np.pi * ts / T0), atol=1e-14)

    def test_cosine_matches_pointwise(self):
        spec = DriveSpec.cosine(3.0, amplitude=0.4)
        ts = np.linspace(0.0, 9.0, 31)
        assert np.allclose(eval_drive(spec, ts), 0.4 * np.cos(2 * np.pi * ts / 3.0), atol=1e-14)

    def test_real_valuedness_enforced(self):
        # f_{-k} must equal conj(f_k); a lone complex coefficient is rejected
        with pytest.raises(ValueError):
            DriveSpec.from_fourier(T0, {1: 0.3 + 0.2j})

    def test_json_round_trip_exact(self):
        spec = two_harmonic_drive()
        back = DriveSpec.from_json(spec.to_json())
        assert back.period == spec.period
        assert dict(back.fourier) == dict(spec.fourier)

    def test_sampled_drive_round_trip(self):
        ts = np.linspace(0.0, 2.0, 32, endpoint=False)
        fs = np.sin(2 * np.pi * ts / 2.0) + 0.2 * np.cos(4 * np.pi * ts / 2.0)
        spec = DriveSpec.from_samples(2.0, ts, fs)
        back = DriveSpec.from_json(spec.to_json())
        probe = np.linspace(0.0, 4.0, 17)
        assert np.allclose(eval_drive(back, probe), eval_drive(spec, probe), atol=1e-12)

    def test_fourier_coefficient_recovers_inputs(self):
        spec = two_harmonic_drive()
        for k in (-3, -1, 0, 1, 2, 3):
            assert fourier_coefficient(spec, k) == pytest.approx(
                spec.coefficient(k), abs=1e-10
            )


class TestKernelQuadratureOracle:
    """phi1, phi2, psi against direct adaptive quadrature.

    phi1(t,s) = int_s^t cos(w(t-u)) f(u) du, phi2 with sin, and psi is the
    iterated integral of (phi1^2 - phi2^2)/2 in the running upper limit.
    """

    params = OscillatorParams(omega=1.3, period_T=T0)

    def _phi_quad(self, spec, t, s):
        w = self.params.omega

        def c(u):
            return math.cos(w * (t - u)) * float(eval_drive(spec, u))

        def d(u):
            return math.sin(w * (t - u)) * float(eval_drive(spec, u))

        q1 = scipy.integrate.quad(c, s, t, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
        q2 = scipy.integrate.quad(d, s, t, limit=400, epsabs=1e-13, epsrel=1e-13)[0]
        return q1, q2

    @pytest.mark.parametrize("t,s", [(1.7, 0.0), (9.4, 2.2), (0.05, 0.0), (-1.0, 3.0)])
    def test_phi12(self, t, s):
        spec = two_harmonic_drive()
        got = phi12(spec, self.params, t, s)
        want = self._phi_quad(spec, t, s)
        assert got[0] == pytest.approx(want[0], abs=1e-10)
        assert got[1] == pytest.approx(want[1], abs=1e-10)

    @pytest.mark.parametrize("t,s", [(2.9, 0.0), (6.0, 1.5)])
    def test_psi(self, t, s):
        spec = two_harmonic_drive()

        def inner(v):
            p1, p2 = self._phi_quad(spec, v, s)
            return 0.5 * (p1 * p1 - p2 * p2)

        want = scipy.integrate.quad(inner, s, t, limit=200, epsabs=1e-11)[0]
        assert psi(spec, self.params, t, s) == pytest.approx(want, abs=1e-9)

    def test_phi12_additivity(self):
        # phi_i(t,s) = phi_i(t,r) + rotation of phi_i(r,s): check through the
        # complex kernel chi = phi1 + i phi2, chi(t,s) = chi(t,r) + e^{iw(t-r)} chi(r,s)
        spec = two_harmonic_drive()
        w = self.params.omega
        t, r, s = 7.3, 4.1, 1.2
        chi_ts = complex(*phi12(spec, self.params, t, s))
        chi_tr = complex(*phi12(spec, self.params, t, r))
        chi_rs = complex(*phi12(spec, self.params, r, s))
        assert chi_ts == pytest.approx(chi_tr + cmath.exp(1j * w * (t - r)) * chi_rs, abs=1e-11)


class TestSplitElapsed:
    params = OscillatorParams(omega=2.0, period_T=5.0)

    def test_decomposition(self):
        period = 2 * math.pi / self.params.omega
        for elapsed in (0.4, 3.7, 11.0, 2.5 * period + 0.3):
            n, delta = split_elapsed(self.params, elapsed)
            assert n == math.floor(elapsed / period)
            assert 0.0 < delta < period
            assert n * period + delta == pytest.approx(elapsed, abs=1e-12)

    def test_resonant_rejected(self):
        period = 2 * math.pi / self.params.omega
        for k in (0, 1, 3):
            with pytest.raises(ResonantTimeError):
                split_elapsed(self.params, k * period)

    def test_near_resonant_band(self):
        period = 2 * math.pi / self.params.omega
        with pytest.raises(ResonantTimeError):
            split_elapsed(self.params, period * (1 + 1e-10))
        n, delta = split_elapsed(self.params, period * (1 + 1e-7))
        assert n == 1 and delta > 0


class TestResonanceDetection:
    def test_boundary(self):
        base = 2 * math.pi
        assert is_resonant_period(OscillatorParams(omega=1.0, period_T=3 * base))
        assert is_resonant_period(OscillatorParams(omega=1.0, period_T=base * (1 + 2e-10)))
        assert not is_resonant_period(OscillatorParams(omega=1.0, period_T=base * (1 + 1e-8)))
        assert not is_resonant_period(OscillatorParams(omega=1.0, period_T=base * math.sqrt(2)))

    def test_sub_period_not_resonant(self):
        # T must be a positive integer multiple of the oscillator period
        assert not is_resonant_period(OscillatorParams(omega=1.0, period_T=math.pi))


class TestFloquetScalars:
    params = OscillatorParams(omega=1.0, period_T=T0)

    def test_zero_at_zero(self):
        """U_F(0) = I needs all three periodic scalars to vanish at t = 0."""
        spec = two_harmonic_drive()
        sc = floquet_scalars(spec, self.params, 0.0)
        assert abs(sc.f1) <= 1e-12
        assert abs(sc.f2) <= 1e-12
        assert abs(sc.big_phi) <= 1e-12

    def test_periodicity(self):
        spec = two_harmonic_drive()
        a = floquet_scalars(spec, self.params, 1.1)
        b = floquet_scalars(spec, self.params, 1.1 + self.params.period_T)
        assert a.f1 == pytest.approx(b.f1, abs=1e-9)
        assert a.f2 == pytest.approx(b.f2, abs=1e-9)
        assert a.big_phi == pytest.approx(b.big_phi, abs=1e-9)

    def test_derivatives_match_finite_differences(self):
        spec = two_harmonic_drive()
        t, eps = 2.7, 1e-6
        d1, d2, dphi = floquet_scalar_derivs(spec, self.params, t)
        sp = floquet_scalars(spec, self.params, t + eps)
        sm = floquet_scalars(spec, self.params, t - eps)
        assert d1 == pytest.approx((sp.f1 - sm.f1) / (2 * eps), abs=1e-6)
        assert d2 == pytest.approx((sp.f2 - sm.f2) / (2 * eps), abs=1e-6)
        assert dphi == pytest.approx((sp.big_phi - sm.big_phi) / (2 * eps), abs=1e-6)

    def test_resonant_period_rejected(self):
        spec = DriveSpec.sine(2 * math.pi, amplitude=0.1)
        with pytest.raises(ResonanceError):
            floquet_scalars(spec, OscillatorParams(omega=1.0, period_T=2 * math.pi), 0.5)


class TestMuNuSigma:
    params = OscillatorParams(omega=1.0, period_T=T0)

    def test_monodromy_kernel_at_resonance_is_fourier_coefficient(self):
        """Over N whole oscillator periods the memory kernel collapses to
        T times the resonant Fourier coefficient."""
        params = OscillatorParams(omega=1.0, period_T=2 * math.pi)
        spec = DriveSpec.sine(2 * math.pi, amplitude=0.8)
        t = params.period_T
        p1, p2 = phi12(spec, params, t, 0.0)
        chi = complex(p1, p2)
        assert chi == pytest.approx(t * spec.coefficient(1), abs=1e-10)

    def test_whole_period_split_consistency(self):
        spec = two_harmonic_drive()
        res = mu_nu_sigma(spec, self.params, 9.0, 1.0)
        period = 2 * math.pi / self.params.omega
        assert res.whole_periods == math.floor(8.0 / period)
        assert 0 < res.delta < period

    def test_resonant_elapsed_rejected(self):
        spec = two_harmonic_drive()
        with pytest.raises(ResonantTimeError):
            mu_nu_sigma(spec, self.params, 2 * math.pi, 0.0)


@settings(max_examples=40, deadline=None)
@given(
    t=st.floats(min_value=-5.0, max_value=12.0),
    s=st.floats(min_value=-5.0, max_value=12.0),
)
def test_phi12_antisymmetric_under_swap_when_rotated(t, s):
    """chi(s,t) = -e^{iw(s-t)} chi(t,s), from flipping the integration."""
    spec = DriveSpec.sine(T0, amplitude=0.3)
    params = OscillatorParams(omega=1.0, period_T=T0)
    chi_ts = complex(*phi12(spec, params, t, s))
    chi_st = complex(*phi12(spec, params, s, t))
    assert abs(chi_st + cmath.exp(1j * params.omega * (s - t)) * chi_ts) <= 1e-10
