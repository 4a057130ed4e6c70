import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parastab.core_ode import OscillatorParams
from parastab.melnikov import (
    ErosionShift,
    HomoclinicOrbit,
    NeutralFrequency,
    commensurate_ratio,
    damping_coefficient,
    erosion_shift_sign,
    forcing_coefficient,
    forcing_threshold,
    gamma_threshold,
    homoclinic_point,
    mass_coefficient,
    melnikov_closed,
    melnikov_quadrature,
    melnikov_sup,
    threshold_table,
)


class TestOrbit:
    def test_origin_of_time(self):
        assert homoclinic_point(1.0, 0.0) == (-0.5, 0.0)

    def test_tails_reach_saddle(self):
        x, y = homoclinic_point(1.0, np.array([-80.0, 80.0]))
        assert np.allclose(x, 1.0, atol=1e-30) and np.allclose(y, 0.0, atol=1e-30)

    @given(t=st.floats(-30, 30), d=st.floats(0.1, 5))
    def test_on_zero_energy_level_of_saddle(self, t, d):
        x, y = HomoclinicOrbit(d)(t)
        energy = y * y / (2 * d) + x * x / 2 - x**3 / 3
        assert energy == pytest.approx(1 / 6, abs=1e-12)

    def test_velocity_matches_derivative(self):
        t, h = 0.7, 1e-5
        xp, _ = homoclinic_point(2.0, t + h)
        xm, _ = homoclinic_point(2.0, t - h)
        assert homoclinic_point(2.0, t)[1] == pytest.approx((xp - xm) / (2 * h), rel=1e-8)


class TestClosedForm:
    def test_forcing_only_value(self):
        p = OscillatorParams(f_amp=0.1, omega_f=1.0)
        expected = 0.1 * 6 * math.pi / math.sinh(math.pi)
        assert melnikov_closed(p, 0.0).value == pytest.approx(expected, rel=1e-14)

    def test_damping_only_value(self):
        assert melnikov_closed(OscillatorParams(beta=0.05), 1.3).value == pytest.approx(-0.06, rel=1e-14)

    def test_neutral_mass_term(self):
        p = OscillatorParams(delta_hat=1.0, gamma=0.5, omega_m=1.0)
        assert melnikov_closed(p, 0.4).mass_term == 0.0

    def test_decomposition_sums(self):
        p = OscillatorParams(delta_hat=0.7, gamma=0.3, beta=0.05, omega_m=1.4, f_amp=0.2, omega_f=0.6)
        ev = melnikov_closed(p, 2.1)
        assert ev.value == pytest.approx(ev.forcing_term + ev.damping_term + ev.mass_term, rel=1e-15)

    @given(t0=st.floats(-20, 20), k=st.integers(-3, 3))
    def test_periodic_in_common_period(self, t0, k):
        p = OscillatorParams(gamma=0.3, beta=0.05, omega_m=2.0, f_amp=0.2, omega_f=3.0)
        a = melnikov_closed(p, t0).value
        b = melnikov_closed(p, t0 + 2 * math.pi * k).value
        assert a == pytest.approx(b, abs=1e-12)

    @given(f1=st.floats(0, 1), f2=st.floats(0, 1), t0=st.floats(-5, 5))
    def test_affine_in_forcing(self, f1, f2, t0):
        base = OscillatorParams(gamma=0.2, beta=0.03, omega_m=1.3, omega_f=0.8)
        m = lambda f: melnikov_closed(base.replace(f_amp=f), t0).value
        assert m(f1 + f2) - m(0.0) == pytest.approx((m(f1) - m(0.0)) + (m(f2) - m(0.0)), abs=1e-13)


class TestQuadratureOracle:
    @pytest.mark.parametrize(
        "kwargs, t0",
        [
            (dict(delta_hat=1.0, beta=0.05, f_amp=0.1, omega_f=1.0), 0.0),
            (dict(delta_hat=0.5, gamma=0.4, beta=0.02, omega_m=1.7, f_amp=0.3, omega_f=0.9), 1.1),
            (dict(delta_hat=2.0, gamma=0.3, omega_m=0.6), -2.5),
            (dict(delta_hat=0.3, gamma=1.0, beta=0.1, omega_m=2.2, f_amp=0.05, omega_f=2.2), 0.3),
        ],
    )
    def test_closed_equals_quadrature(self, kwargs, t0):
        p = OscillatorParams(**kwargs)
        closed = melnikov_closed(p, t0).value
        assert melnikov_quadrature(p, t0) == pytest.approx(closed, abs=1e-10)

    def test_damping_coefficient_by_quadrature(self):
        p = OscillatorParams(delta_hat=0.8, beta=1.0)
        assert -melnikov_quadrature(p, 0.0) == pytest.approx(damping_coefficient(0.8, 1.0), rel=1e-11)


class TestSupremum:
    def test_incommensurate(self):
        p = OscillatorParams(gamma=0.2, beta=0.05, omega_m=math.sqrt(2), f_amp=0.1, omega_f=1.0)
        a = 0.1 * forcing_coefficient(1.0, 1.0)
        b = mass_coefficient(1.0, 0.2, math.sqrt(2))
        assert melnikov_sup(p) == pytest.approx(a + abs(b) - 0.06, rel=1e-14)

    def test_commensurate_matches_dense_scan(self):
        p = OscillatorParams(gamma=0.2, beta=0.05, omega_m=2.0, f_amp=0.1, omega_f=1.0)
        ts = np.linspace(0, 2 * math.pi, 200001)
        scan = max(melnikov_closed(p, t).value for t in ts[::50])
        assert melnikov_sup(p) >= scan - 1e-12
        assert melnikov_sup(p) == pytest.approx(scan, abs=1e-6)

    def test_ratio_detection(self):
        assert commensurate_ratio(3.0, 2.0) == (3, 2)
        assert commensurate_ratio(math.pi, 1.0) is None


class TestThresholds:
    def test_forcing_only_example(self):
        p = OscillatorParams(delta_hat=0.25, beta=0.01, omega_f=1.0)
        assert forcing_threshold(p) == pytest.approx(0.0213065, rel=1e-5)
        assert forcing_threshold(p) == pytest.approx(0.0015 * math.sinh(2 * math.pi) / (6 * math.pi), rel=1e-14)

    @pytest.mark.parametrize("g", [0.0, 0.01, 0.03, 0.05])
    def test_closed_form_in_gamma(self, g):
        wf = 1 / math.sqrt(2)
        p = OscillatorParams(delta_hat=0.25, gamma=g, beta=0.01, omega_m=1.0, omega_f=wf)
        s2 = math.sinh(2 * math.pi)
        expected = (0.0015 * s2 - 2.25 * math.pi * g) * math.sinh(2 * math.pi * wf) / (6 * math.pi * wf**2 * s2)
        assert forcing_threshold(p) == pytest.approx(expected, rel=1e-12)

    def test_threshold_zeroes_melnikov(self):
        p = OscillatorParams(delta_hat=1.0, gamma=0.03, beta=0.02, omega_m=2.0, omega_f=1.0)
        fm = forcing_threshold(p, quadrature_check=True)
        assert melnikov_sup(p.replace(f_amp=fm)) == pytest.approx(0.0, abs=1e-13)
        assert melnikov_sup(p.replace(f_amp=0.99 * fm)) < 0

    def test_mass_alone_enough(self):
        p = OscillatorParams(delta_hat=0.25, gamma=0.2, beta=0.01, omega_m=1.0)
        assert forcing_threshold(p) == 0.0

    def test_gamma_threshold_example(self):
        assert gamma_threshold(0.25, 0.01, 1.0) == pytest.approx(0.0568172, rel=1e-6)

    def test_gamma_threshold_closes_gap(self):
        gc = gamma_threshold(0.25, 0.01, 1.0)
        p = OscillatorParams(delta_hat=0.25, gamma=gc, beta=0.01, omega_m=1.0)
        assert melnikov_sup(p) == pytest.approx(0.0, abs=1e-15)

    def test_gamma_threshold_neutral(self):
        with pytest.raises(NeutralFrequency):
            gamma_threshold(1.0, 0.01, 1.0)

    def test_table_order(self):
        rows = threshold_table(1.0, 0.01, math.sqrt(3), [0.0, 0.01], [0.5, 1.0])
        assert [(g, w) for g, w, _ in rows] == [(0.0, 0.5), (0.01, 0.5), (0.0, 1.0), (0.01, 1.0)]


class TestErosionSign:
    @given(d=st.floats(0.05, 5), wm=st.floats(0.1, 3))
    @settings(max_examples=200)
    def test_sign_matches_mass_coefficient(self, d, wm):
        # a negative mass amplitude at t0 = 0 delays erosion, by the same factor everywhere
        shift = erosion_shift_sign(d, wm)
        b = mass_coefficient(d, 1.0, wm)
        if math.isclose(d * d, wm**4, rel_tol=1e-12):
            # float evaluation of the amplitude cannot resolve the sign here
            return
        if shift is ErosionShift.DELAY:
            assert b < 0
        elif shift is ErosionShift.ADVANCE:
            assert b > 0
        else:
            assert abs(b) < 1e-12

    def test_examples(self):
        assert erosion_shift_sign(1.0, 0.5) is ErosionShift.DELAY
        assert erosion_shift_sign(0.25, 1.0) is ErosionShift.ADVANCE
        assert erosion_shift_sign(4.0, 2.0) is ErosionShift.NEUTRAL

    @pytest.mark.parametrize("wm, direction", [(0.85, 1), (1.15, -1)])
    def test_threshold_moves_with_gamma(self, wm, direction):
        # coherent forcing and mass: omega_f == omega_m
        base = OscillatorParams(delta_hat=1.0, beta=0.1, omega_m=wm, omega_f=wm)
        f0 = forcing_threshold(base)
        f1 = forcing_threshold(base.replace(gamma=0.05))
        assert math.copysign(1, f1 - f0) == direction
