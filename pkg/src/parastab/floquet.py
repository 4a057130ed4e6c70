"""Monodromy matrices of the two fixed points and Floquet classification.

Both linearisations are integrated in scaled time, where the coefficients
have period 2*pi.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from parastab.core_ode import (
    IntegratorSettings,
    OscillatorParams,
    origin_field,
    propagate,
    saddle_field,
)

DEFAULT_MARGIN = 1e-8

# Floquet work needs multipliers near the unit circle to ~1e-6, which in turn
# needs the trace to ~1e-12.
MONODROMY_SETTINGS = IntegratorSettings(rel_tol=1e-13, abs_tol=1e-15)


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class MonodromyResult:
    m11: float
    m12: float
    m21: float
    m22: float
    trace: float
    det: float
    multipliers: tuple[complex, complex]
    classification: Stability

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    @property
    def max_abs_multiplier(self) -> float:
        return max(abs(m) for m in self.multipliers)


def multipliers_from_invariants(trace: float, det: float) -> tuple[complex, complex]:
    """Roots of ``lambda**2 - trace*lambda + det``.

    The larger-magnitude real root is formed first and the other one taken
    from ``det/root`` so neither loses digits to cancellation.
    """
    disc = trace * trace - 4.0 * det
    if disc >= 0:
        root = math.sqrt(disc)
        big = 0.5 * (trace + math.copysign(root, trace)) if trace else 0.5 * root
        if big == 0.0:
            return (0j, 0j)
        return (complex(big), complex(det / big))
    root = cmath.sqrt(disc)
    return (0.5 * (trace + root), 0.5 * (trace - root))


def classify_multipliers(multipliers, margin: float = DEFAULT_MARGIN) -> Stability:
    if margin < 0:
        raise ValueError("margin must be non-negative")
    largest = max(abs(m) for m in multipliers)
    if largest > 1.0 + margin:
        return Stability.UNSTABLE
    if largest < 1.0 - margin:
        return Stability.STABLE
    return Stability.MARGINAL


def classify(result: MonodromyResult, margin: float = DEFAULT_MARGIN) -> Stability:
    return classify_multipliers(result.multipliers, margin)


def _monodromy(field, settings, margin) -> MonodromyResult:
    v = propagate(field, 0.0, np.eye(2), 2 * math.pi, settings)
    m11, m12, m21, m22 = (float(v[0, 0]), float(v[0, 1]), float(v[1, 0]), float(v[1, 1]))
    trace = m11 + m22
    det = m11 * m22 - m12 * m21
    mult = multipliers_from_invariants(trace, det)
    return MonodromyResult(
        m11, m12, m21, m22, trace, det, mult, classify_multipliers(mult, margin)
    )


def monodromy_origin(
    params: OscillatorParams,
    settings: IntegratorSettings | None = None,
    margin: float = DEFAULT_MARGIN,
) -> MonodromyResult:
    """Fundamental matrix of the origin's linearisation over one mass period."""
    return _monodromy(origin_field(params), settings or MONODROMY_SETTINGS, margin)


def monodromy_saddle(
    params: OscillatorParams,
    settings: IntegratorSettings | None = None,
    margin: float = DEFAULT_MARGIN,
) -> MonodromyResult:
    """Fundamental matrix of the linearisation about the saddle ``(1, 0)``."""
    return _monodromy(saddle_field(params), settings or MONODROMY_SETTINGS, margin)


def liouville_det(params: OscillatorParams) -> float:
    """Exact determinant of the origin's monodromy matrix (Abel's identity).

    The ``gamma*cos`` part of the trace integrates to zero over a period,
    leaving ``exp(-2*pi*beta*delta_hat / (omega_m*sqrt(1 - (gamma*delta_hat)**2)))``.
    """
    a = params.gamma * params.delta_hat
    return math.exp(
        -2 * math.pi * params.beta * params.delta_hat / (params.omega_m * math.sqrt(1 - a * a))
    )


def floquet_map(
    gammas,
    delta_hats,
    beta: float = 0.0,
    omega_m: float = 1.0,
    settings: IntegratorSettings | None = None,
    margin: float = DEFAULT_MARGIN,
) -> list[tuple[float, float, float, Stability]]:
    """Origin multipliers over a rectangular ``(gamma, delta_hat)`` grid.

    Rows come out gamma-major in the order given.  Points where
    ``gamma*delta_hat >= 1`` are skipped.
    """
    rows = []
    for g in gammas:
        for d in delta_hats:
            if g * d >= 1:
                continue
            res = monodromy_origin(
                OscillatorParams(delta_hat=d, gamma=g, beta=beta, omega_m=omega_m),
                settings,
                margin,
            )
            rows.append((float(g), float(d), res.max_abs_multiplier, res.classification))
    return rows
