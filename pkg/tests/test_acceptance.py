"""Acceptance criteria, each run at its stated tolerance.

Every test prints one ``ACCEPTANCE <n> PASS|FAIL`` line.  The integrity
criterion runs the full 151 x 151 desk-scale raster and takes a few minutes
on a single core.
"""

import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parastab.basin import BasinGridSpec, cliff_location, integrity_curve
from parastab.core_ode import OscillatorParams, State, integrate, origin_field
from parastab.hill import DeterminantFamily as Fam
from parastab.hill import damped_first_tongue, solve_transition_curve
from parastab.melnikov import (
    ErosionShift,
    erosion_shift_sign,
    forcing_threshold,
    gamma_threshold,
)
from parastab import verify


@pytest.fixture
def report(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(n, ok, detail):
        with capman.global_and_fixture_disabled():
            print(f"\nACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_01_melnikov_oracle(report):
    start = time.perf_counter()
    res = verify.check_melnikov(samples=100)
    elapsed = time.perf_counter() - start
    report(1, res.status == verify.PASS and elapsed < 10, f"{res.detail}; {elapsed:.2f} s")


def test_02_gamma_threshold_quarter(report):
    g = gamma_threshold(0.25, 0.01, 1.0)
    report(2, abs(g - 0.05681) <= 1e-4, f"gamma_threshold = {g:.7f}")


def test_03_gamma_threshold_pi(report):
    beta = 0.01
    ratio = gamma_threshold(1.0, beta, math.pi) / beta
    report(3, abs(ratio - 6.467) <= 5e-3, f"gamma_threshold / beta = {ratio:.5f}")


def test_04_forcing_threshold_formula(report):
    s2 = math.sinh(2 * math.pi)
    worst = 0.0
    for wf in (0.85, 1.0, 1.15):
        for g in (0.0, 0.02, 0.04):
            p = OscillatorParams(delta_hat=0.25, gamma=g, beta=0.01, omega_m=1.0, omega_f=wf)
            closed = (0.0015 * s2 - 2.25 * math.pi * g) * math.sinh(2 * math.pi * wf) / (
                6 * math.pi * wf**2 * s2
            )
            worst = max(worst, abs(forcing_threshold(p) / closed - 1))
    # affine across the tongue boundary gamma = 0.04: second differences vanish
    kink = 0.0
    gammas = np.linspace(0.0, 0.05, 11)
    for wf in (0.85, 1.0, 1.15):
        fm = [
            forcing_threshold(OscillatorParams(delta_hat=0.25, gamma=g, beta=0.01, omega_f=wf))
            for g in gammas
        ]
        kink = max(kink, float(np.max(np.abs(np.diff(fm, 2)))) / max(fm))
    ok = worst < 1e-9 and kink < 1e-9
    report(4, ok, f"worst relative error {worst:.2e}; worst scaled second difference {kink:.2e}")


def test_05_first_tongue(report):
    lo = solve_transition_curve(Fam.ODD_COSINE, 1, 0.04, 1.0, 25)
    hi = solve_transition_curve(Fam.ODD_SINE, 1, 0.04, 1.0, 25)
    err = max(abs(lo - (0.25 - 0.00125)), abs(hi - (0.25 + 0.00125)))
    tangent = damped_first_tongue(0.04, 0.01, 1.0)
    ok = err < 5e-4 and tangent == (0.25, 0.25)
    report(5, ok, f"boundaries {lo:.8f}, {hi:.8f} (error {err:.2e}); damped tangent {tangent}")


def test_06_width_slopes(report):
    start = time.perf_counter()
    slopes = verify.width_slopes(25)
    elapsed = time.perf_counter() - start
    ok = (
        all(abs(slopes[k] - t) <= tol for k, (t, tol) in verify.SLOPE_TARGETS.items())
        and elapsed < 60
    )
    detail = ", ".join(f"k={k}: {s:.4f}" for k, s in slopes.items())
    report(6, ok, f"{detail}; {elapsed:.2f} s")


def test_07_coexistence(report):
    residual = verify.check_coexistence(ns=(5, 10, 25), samples=20)
    floq = verify.check_coexistence_floquet(
        offsets=(-1e-2, -1e-3, 0.0, 1e-3, 1e-2), products=(0.05, 0.15, 0.3)
    )
    ok = residual.status == verify.PASS and floq.status == verify.PASS
    report(7, ok, f"{residual.detail}; {floq.detail}")


def test_08_floquet_hill(report):
    agree = verify.check_hill_floquet(25, 10)
    liou = verify.check_liouville((0.0, 0.01, 0.1))
    ok = agree.status == verify.PASS and liou.status == verify.PASS
    report(8, ok, f"{agree.detail}; {liou.detail}")


def _max_amplitude(delta_hat, gamma, periods=20):
    p = OscillatorParams(delta_hat=delta_hat, gamma=gamma)
    tr = integrate(origin_field(p), State(0.0, 1.0, 0.0), periods * 2 * math.pi)
    return float(np.max(np.abs(tr.x)))


def test_09_growth_inside_tongue(report):
    gamma = 0.8
    lo = solve_transition_curve(Fam.ODD_COSINE, 1, gamma)
    hi = solve_transition_curve(Fam.ODD_SINE, 1, gamma)
    width = hi - lo
    inside = _max_amplitude(0.5 * (lo + hi), gamma)
    outside = _max_amplitude(lo - 0.25 * width, gamma)
    ok = inside >= 10 and outside <= 2
    report(
        9,
        ok,
        f"tongue [{lo:.5f}, {hi:.5f}] at gamma={gamma}; inside x{inside:.2f}, outside x{outside:.3f}",
    )


# window per omega_m covering the drop; step 0.005
INTEGRITY_WINDOWS = {1.0: (0.10, 0.17), 0.85: (0.055, 0.11), 1.15: (0.15, 0.225)}
INTEGRITY_GAMMA = 0.05
INTEGRITY_STEP = 0.005


def _cliffs(omega_m, workers):
    lo, hi = INTEGRITY_WINDOWS[omega_m]
    fs = np.round(np.arange(lo, hi + 1e-12, INTEGRITY_STEP), 6)
    spec = BasinGridSpec(nx=151, ny=151, horizon_periods=16)
    base = OscillatorParams(delta_hat=1.0, beta=0.1, omega_m=omega_m, omega_f=omega_m)
    out = []
    for g in (0.0, INTEGRITY_GAMMA):
        curve = integrity_curve(base.replace(gamma=g), fs, spec, workers=workers)
        out.append(cliff_location(curve))
    return out


def test_10_integrity_diagrams(report):
    workers = min(8, os.cpu_count() or 1)
    start = time.perf_counter()
    c1 = _cliffs(1.0, workers)
    c085 = _cliffs(0.85, workers)
    c115 = _cliffs(1.15, workers)
    elapsed = time.perf_counter() - start
    ok = (
        None not in c1 + c085 + c115
        and abs(c1[1] - c1[0]) <= 2 * INTEGRITY_STEP
        and c085[1] > c085[0]
        and c115[1] < c115[0]
    )
    report(
        10,
        ok,
        f"cliffs (gamma=0, gamma={INTEGRITY_GAMMA}): omega_m=1 {c1}, 0.85 {c085}, 1.15 {c115}; "
        f"{elapsed:.0f} s on {workers} worker(s)",
    )


def test_11_erosion_shift_sign(report):
    failures = []

    @given(d=st.floats(0.01, 10), wm=st.floats(0.05, 3))
    @settings(max_examples=500, derandomize=True)
    def sweep(d, wm):
        diff = Fraction(d) ** 2 - Fraction(wm) ** 4
        expected = (
            ErosionShift.DELAY if diff > 0 else ErosionShift.ADVANCE if diff < 0 else ErosionShift.NEUTRAL
        )
        if erosion_shift_sign(d, wm) is not expected:
            failures.append((d, wm))

    sweep()
    for d, wm in ((1.0, 1.0), (4.0, 2.0), (0.25, 0.5)):
        if erosion_shift_sign(d, wm) is not ErosionShift.NEUTRAL:
            failures.append((d, wm))
    report(11, not failures, f"500-sample sweep plus exact neutral cases; mismatches {failures[:3]}")
