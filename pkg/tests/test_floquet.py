import math

import numpy as np
import pytest

from parastab.core_ode import OscillatorParams
from parastab.floquet import (
    Stability,
    classify_multipliers,
    floquet_map,
    liouville_det,
    monodromy_origin,
    monodromy_saddle,
    multipliers_from_invariants,
)


def test_undamped_constant_coefficient_origin():
    d, wm = 0.3, 1.0
    res = monodromy_origin(OscillatorParams(delta_hat=d, omega_m=wm))
    assert res.trace == pytest.approx(2 * math.cos(2 * math.pi * math.sqrt(d) / wm), abs=1e-11)
    assert res.det == pytest.approx(1.0, abs=1e-11)
    w = math.sqrt(d) / wm
    expected = [
        [math.cos(2 * math.pi * w), math.sin(2 * math.pi * w) / w],
        [-w * math.sin(2 * math.pi * w), math.cos(2 * math.pi * w)],
    ]
    assert np.allclose(res.matrix, expected, atol=1e-11)


def test_damped_focus_stable():
    res = monodromy_origin(OscillatorParams(delta_hat=0.3, beta=0.05))
    assert max(abs(m) for m in res.multipliers) < 1
    assert res.classification is Stability.STABLE


def test_inside_first_tongue_unstable():
    res = monodromy_origin(OscillatorParams(delta_hat=0.25, gamma=0.06))
    assert res.classification is Stability.UNSTABLE


def test_saddle_hyperbolic_monodromy():
    res = monodromy_saddle(OscillatorParams(delta_hat=1.0))
    assert res.trace / (2 * math.cosh(2 * math.pi)) == pytest.approx(1.0, rel=1e-11)
    assert res.det == pytest.approx(1.0, abs=1e-9)


def test_saddle_near_mass_singularity():
    res = monodromy_saddle(OscillatorParams(delta_hat=1.0, gamma=0.98, beta=0.01))
    assert res.classification is Stability.UNSTABLE


@pytest.mark.parametrize("d", [0.1, 0.5, 1.7, 4.0])
@pytest.mark.parametrize("ga", [0.0, 0.45, 0.9])
@pytest.mark.parametrize("beta", [0.0, 0.1])
def test_saddle_always_unstable(d, ga, beta):
    res = monodromy_saddle(OscillatorParams(delta_hat=d, gamma=ga / d, beta=beta, omega_m=1.3))
    assert res.classification is Stability.UNSTABLE


@pytest.mark.parametrize("beta", [0.0, 0.01, 0.1])
def test_liouville_identity(beta):
    p = OscillatorParams(delta_hat=0.7, gamma=0.9, beta=beta, omega_m=1.2)
    assert monodromy_origin(p).det == pytest.approx(liouville_det(p), abs=1e-10)


def test_multipliers_match_invariants():
    res = monodromy_origin(OscillatorParams(delta_hat=0.9, gamma=0.4, beta=0.02, omega_m=0.8))
    a, b = res.multipliers
    assert (a * b).real == pytest.approx(res.det, rel=1e-12)
    assert (a + b).real == pytest.approx(res.trace, rel=1e-12, abs=1e-14)
    ev = np.linalg.eigvals(res.matrix)
    assert sorted(abs(ev)) == pytest.approx(sorted([abs(a), abs(b)]), rel=1e-9)


def test_multipliers_real_branch_no_cancellation():
    lam = multipliers_from_invariants(1e8 + 1e-8, 1.0)
    assert lam[1].real == pytest.approx(1e-8, rel=1e-12)


@pytest.mark.parametrize(
    "mults, expected",
    [
        ((0.5, 0.5), Stability.STABLE),
        ((1.2, 1 / 1.2), Stability.UNSTABLE),
        ((complex(math.cos(1), math.sin(1)), complex(math.cos(1), -math.sin(1))), Stability.MARGINAL),
    ],
)
def test_classify(mults, expected):
    assert classify_multipliers(mults) is expected


def test_classify_rejects_negative_margin():
    with pytest.raises(ValueError):
        classify_multipliers((1, 1), -1)


def test_floquet_map_rows_and_skip():
    # delta_hat=0.25 sits on the resonance itself, so use 0.3
    rows = floquet_map([0.0, 0.5], [0.3, 2.5], beta=0.0)
    # gamma=0.5, delta_hat=2.5 violates the mass constraint
    assert [(g, d) for g, d, *_ in rows] == [(0.0, 0.3), (0.0, 2.5), (0.5, 0.3)]
    assert rows[0][3] is Stability.MARGINAL
