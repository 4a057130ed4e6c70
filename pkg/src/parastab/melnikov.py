"""Melnikov function for the saddle's homoclinic loop and erosion thresholds.

With ``A = 6*pi*omega_f**2 / sinh(pi*omega_f/sqrt(delta_hat))``,
``D = (6/5)*delta_hat**1.5*beta`` and

    B = -gamma*(3/5)*pi*omega_m**2*(delta_hat**2 - omega_m**4)
        / (delta_hat*sinh(pi*omega_m/sqrt(delta_hat))),

the Melnikov function is ``M(t0) = F*A*cos(omega_f*t0) + B*cos(omega_m*t0) - D``.
:func:`melnikov_quadrature` integrates the defining integral directly and is
kept independent of the closed form so one can check the other.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize

from parastab.core_ode import OscillatorParams


class QuadratureNotConverged(RuntimeError):
    pass


class NeutralFrequency(ValueError):
    """``delta_hat == omega_m**2``: the mass term vanishes identically."""


class OracleMismatch(RuntimeError):
    """Closed form and quadrature disagree."""


class ErosionShift(str, enum.Enum):
    DELAY = "Delay"
    ADVANCE = "Advance"
    NEUTRAL = "Neutral"


@dataclass(frozen=True)
class HomoclinicOrbit:
    delta_hat: float

    def __post_init__(self):
        if not self.delta_hat > 0:
            raise ValueError("delta_hat must be positive")

    def __call__(self, t):
        return homoclinic_point(self.delta_hat, t)


@dataclass(frozen=True)
class MelnikovEvaluation:
    t0: float
    value: float
    forcing_term: float
    damping_term: float
    mass_term: float


def homoclinic_point(delta_hat: float, t):
    """Point ``(x_h, y_h)`` on the loop homoclinic to ``(1, 0)`` at time ``t``.

    ``x_h = 1 - 3/(1 + cosh(s))`` with ``s = sqrt(delta_hat)*t``, evaluated
    through ``u = exp(-|s|)`` so the tails neither overflow nor cancel.
    """
    if not delta_hat > 0:
        raise ValueError("delta_hat must be positive")
    root = math.sqrt(delta_hat)
    s = root * np.asarray(t, dtype=float)
    u = np.exp(-np.abs(s))
    x = 1.0 - 6.0 * u / (1.0 + u) ** 2
    y = 6.0 * root * np.sign(s) * u * (1.0 - u) / (1.0 + u) ** 3
    if np.ndim(x) == 0:
        return float(x), float(y)
    return x, y


def forcing_coefficient(delta_hat: float, omega_f: float) -> float:
    """Melnikov amplitude per unit forcing ``F``."""
    return 6 * math.pi * omega_f**2 / math.sinh(math.pi * omega_f / math.sqrt(delta_hat))


def damping_coefficient(delta_hat: float, beta: float) -> float:
    return 1.2 * delta_hat**1.5 * beta


def mass_coefficient(delta_hat: float, gamma: float, omega_m: float) -> float:
    """Signed amplitude of the ``cos(omega_m*t0)`` term."""
    return (
        -gamma
        * 0.6
        * math.pi
        * omega_m**2
        * (delta_hat**2 - omega_m**4)
        / (delta_hat * math.sinh(math.pi * omega_m / math.sqrt(delta_hat)))
    )


def melnikov_closed(params: OscillatorParams, t0: float) -> MelnikovEvaluation:
    d = params.delta_hat
    forcing = params.f_amp * forcing_coefficient(d, params.omega_f) * math.cos(params.omega_f * t0)
    damping = -damping_coefficient(d, params.beta)
    mass_term = mass_coefficient(d, params.gamma, params.omega_m) * math.cos(params.omega_m * t0)
    return MelnikovEvaluation(
        t0=t0,
        value=forcing + damping + mass_term,
        forcing_term=forcing,
        damping_term=damping,
        mass_term=mass_term,
    )


def melnikov_integrand(params: OscillatorParams, t0: float, t):
    d, g, b = params.delta_hat, params.gamma, params.beta
    wm, F, wf = params.omega_m, params.f_amp, params.omega_f
    x, y = homoclinic_point(d, t)
    return (
        F * d * np.sin(wf * (t + t0)) * y
        - d * b * y * y
        - d * g * wm * np.cos(wm * (t + t0)) * y * y
        + g * d * d * np.sin(wm * (t + t0)) * (x - x * x) * y
    )


def melnikov_quadrature(
    params: OscillatorParams,
    t0: float,
    window: float | None = None,
    tol: float = 1e-12,
) -> float:
    """Adaptive quadrature of the Melnikov integral over ``[-window, window]``.

    The default window ``40/sqrt(delta_hat)`` puts the integrand tail, which
    decays like ``exp(-sqrt(delta_hat)*|t|)``, below 1e-14.
    """
    if window is None:
        window = 40.0 / math.sqrt(params.delta_hat)

    def fn(t):
        return float(melnikov_integrand(params, t0, t))

    total = 0.0
    error = 0.0
    # split at the orbit's turning point t = 0, where y_h changes sign
    for a, b in ((-window, 0.0), (0.0, window)):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                value, err = integrate.quad(fn, a, b, epsabs=tol, epsrel=tol, limit=500)
            except integrate.IntegrationWarning as exc:
                raise QuadratureNotConverged(str(exc)) from exc
        total += value
        error += err
    if error > 10 * tol * max(1.0, abs(total)):
        raise QuadratureNotConverged(f"error estimate {error:.2e} above tolerance")
    return total


def commensurate_ratio(omega_f: float, omega_m: float, max_den: int = 64, rtol: float = 1e-9):
    """``(p, q)`` with ``omega_f/omega_m = p/q`` if such small integers exist, else None."""
    ratio = omega_f / omega_m
    frac = Fraction(ratio).limit_denominator(max_den)
    if abs(float(frac) - ratio) <= rtol * ratio:
        return frac.numerator, frac.denominator
    return None


def _sup_oscillatory(a: float, wf: float, b: float, wm: float) -> float:
    """``max_t0 a*cos(wf*t0) + b*cos(wm*t0)``.

    Commensurate frequencies are scanned over the common period and the best
    samples polished; otherwise the two phases are independent on a dense
    torus orbit and the supremum is ``|a| + |b|``.
    """
    if a == 0.0 or b == 0.0:
        return abs(a) + abs(b)
    pq = commensurate_ratio(wf, wm)
    if pq is None:
        return abs(a) + abs(b)
    p, q = pq
    period = 2 * math.pi * q / wm

    def g(t):
        return a * np.cos(wf * t) + b * np.cos(wm * t)

    samples = max(4096, 256 * (p + q))
    ts = np.linspace(0.0, period, samples, endpoint=False)
    vals = g(ts)
    spacing = period / samples
    best = float(vals.max())
    for i in np.argsort(vals)[-4:]:
        res = optimize.minimize_scalar(
            lambda t: -g(t),
            bounds=(ts[i] - spacing, ts[i] + spacing),
            method="bounded",
            options={"xatol": 1e-13},
        )
        best = max(best, float(-res.fun))
    return best


def melnikov_sup(params: OscillatorParams) -> float:
    """Supremum over ``t0`` of the closed-form Melnikov function."""
    d = params.delta_hat
    a = params.f_amp * forcing_coefficient(d, params.omega_f)
    b = mass_coefficient(d, params.gamma, params.omega_m)
    return _sup_oscillatory(a, params.omega_f, b, params.omega_m) - damping_coefficient(d, params.beta)


def forcing_threshold(params: OscillatorParams, quadrature_check: bool = False) -> float:
    """Smallest ``F >= 0`` at which the Melnikov function acquires a zero.

    ``params.f_amp`` is ignored.  Returns 0 when the mass variation alone
    already produces a zero.

    With ``quadrature_check`` the closed form is compared against
    :func:`melnikov_quadrature` at the threshold and ``t0 = 0``.
    """
    d, wf, wm = params.delta_hat, params.omega_f, params.omega_m
    if params.beta <= 0 and params.gamma <= 0:
        raise ValueError("need beta > 0 or gamma > 0")
    a_unit = forcing_coefficient(d, wf)
    b = mass_coefficient(d, params.gamma, wm)
    damping = damping_coefficient(d, params.beta)

    if abs(b) >= damping:
        threshold = 0.0
    elif commensurate_ratio(wf, wm) is None:
        threshold = (damping - abs(b)) / a_unit
    else:
        hi = 2 * (damping + abs(b)) / a_unit
        threshold = optimize.brentq(
            lambda F: _sup_oscillatory(F * a_unit, wf, b, wm) - damping,
            0.0,
            hi,
            xtol=1e-16,
            rtol=4 * np.finfo(float).eps,
        )

    if quadrature_check:
        probe = params.replace(f_amp=threshold)
        closed = melnikov_closed(probe, 0.0).value
        quad = melnikov_quadrature(probe, 0.0)
        if abs(closed - quad) > 1e-6 * (1 + abs(closed)):
            raise OracleMismatch(f"closed form {closed!r} vs quadrature {quad!r}")
    return threshold


def gamma_threshold(delta_hat: float, beta: float, omega_m: float) -> float:
    """Mass-variation amplitude at which, unforced, the Melnikov function first vanishes."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    gap = omega_m**4 - delta_hat**2
    if gap == 0 or math.isclose(delta_hat**2, omega_m**4, rel_tol=1e-14):
        raise NeutralFrequency("delta_hat == omega_m**2: no finite threshold")
    return (
        2
        * delta_hat**2.5
        * beta
        * math.sinh(omega_m * math.pi / math.sqrt(delta_hat))
        / (omega_m**2 * math.pi * abs(gap))
    )


def erosion_shift_sign(delta_hat: float, omega_m: float) -> ErosionShift:
    """Direction in which mass variation moves the erosion threshold.

    The sign of ``delta_hat**2 - omega_m**4`` is taken in exact rational
    arithmetic, so the float inputs are classified without round-off.
    """
    if not (delta_hat > 0 and omega_m > 0):
        raise ValueError("inputs must be positive")
    lhs, rhs = Fraction(delta_hat) ** 2, Fraction(omega_m) ** 4
    if lhs > rhs:
        return ErosionShift.DELAY
    if lhs < rhs:
        return ErosionShift.ADVANCE
    return ErosionShift.NEUTRAL


def threshold_table(delta_hat, beta, omega_m, gammas, omega_fs):
    """Rows ``(gamma, omega_f, F_M)``, omega_f-major."""
    rows = []
    for wf in omega_fs:
        for g in gammas:
            p = OscillatorParams(delta_hat=delta_hat, gamma=g, beta=beta, omega_m=omega_m, omega_f=wf)
            rows.append((float(g), float(wf), forcing_threshold(p)))
    return rows
