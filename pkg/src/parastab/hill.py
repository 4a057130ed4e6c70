"""Harmonic-balance (Hill) determinants for the origin's linearisation.

After rescaling time, the origin's linearisation with ``beta = 0`` is an Ince
equation

    (1 + a cos 2t) x'' + b sin 2t x' + (c + d cos 2t) x = 0

with ``a = gamma*delta_hat``, ``b = -2a``, ``c = 4*delta_hat/omega_m**2`` and
``d = 0``.  Substituting a Fourier series of period pi or 2*pi and collecting
harmonics gives four decoupled tridiagonal systems, one per parity and
cos/sin family.  A transition curve is a zero of one of their determinants.

Row ``j`` of every family has diagonal ``c - j**2`` and couples to harmonic
``j + 2`` through ``-(a/2)*j*(j + 2)``; the first odd rows carry the extra
``+-a/2`` and the constant-term row of the even cosine family carries a
``-2a`` coupling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TRUNCATION = 25
DEFAULT_TOL = 1e-14

# delta_hat = 0 is an exact factor of the even-cosine determinant; it is a
# transition curve for every gamma and is never solved for.
ZERO_CURVE_DELTA_HAT = 0.0


class NoRootInBracket(RuntimeError):
    """No sign change of the determinant near the seed."""


class Unsupported(ValueError):
    """Requested tongue or family has no tabulated series."""


class DeterminantFamily(str, enum.Enum):
    EVEN_COSINE = "EvenCosine"
    EVEN_SINE = "EvenSine"
    ODD_COSINE = "OddCosine"
    ODD_SINE = "OddSine"

    @property
    def odd(self) -> bool:
        return self in (DeterminantFamily.ODD_COSINE, DeterminantFamily.ODD_SINE)


@dataclass(frozen=True)
class InceCoefficients:
    a: float
    b: float
    c: float
    d: float = 0.0

    @classmethod
    def from_params(cls, gamma: float, delta_hat: float, omega_m: float) -> "InceCoefficients":
        a = delta_hat * gamma
        return cls(a=a, b=-2 * a, c=4 * delta_hat / omega_m**2, d=0.0)


@dataclass(frozen=True)
class TransitionCurvePoint:
    gamma: float
    delta_hat: float
    family: DeterminantFamily
    k: int
    truncation: int


def harmonics(family: DeterminantFamily, n: int) -> list[int]:
    """Fourier indices carried by the rows of an ``n``-row truncation."""
    family = DeterminantFamily(family)
    first = {
        DeterminantFamily.EVEN_COSINE: 0,
        DeterminantFamily.EVEN_SINE: 2,
        DeterminantFamily.ODD_COSINE: 1,
        DeterminantFamily.ODD_SINE: 1,
    }[family]
    return [first + 2 * i for i in range(n)]


def build_hill_matrix(
    family: DeterminantFamily, gamma: float, delta_hat: float, omega_m: float, n: int
) -> np.ndarray:
    if n < 2:
        raise ValueError("truncation must be at least 2")
    family = DeterminantFamily(family)
    ince = InceCoefficients.from_params(gamma, delta_hat, omega_m)
    a, c = ince.a, ince.c
    js = harmonics(family, n)
    mat = np.zeros((n, n))
    for i, j in enumerate(js):
        mat[i, i] = c - j * j
        if i + 1 < n:
            off = -0.5 * a * j * (j + 2)
            mat[i, i + 1] = off
            mat[i + 1, i] = off
    if family is DeterminantFamily.ODD_COSINE:
        mat[0, 0] += 0.5 * a
    elif family is DeterminantFamily.ODD_SINE:
        mat[0, 0] -= 0.5 * a
    elif family is DeterminantFamily.EVEN_COSINE:
        # the a_2 term does not feed the constant harmonic; the conventional row
        # keeps -2a there, which leaves the determinant unchanged
        mat[0, 1] = -2 * a
        mat[1, 0] = 0.0
    return mat


def det_eval(matrix) -> float:
    """Determinant by LU factorisation with partial pivoting."""
    return float(np.linalg.det(np.asarray(matrix, dtype=float)))


def scaled_det(matrix) -> float:
    """Determinant after dividing each row by its largest magnitude.

    Row scales are positive, so the sign (what root finding needs) is kept
    while the ``j**2`` growth of the diagonal is removed.
    """
    matrix = np.asarray(matrix, dtype=float)
    scale = np.max(np.abs(matrix), axis=1)
    if np.any(scale == 0):
        return 0.0
    return det_eval(matrix / scale[:, None])


def seed(family: DeterminantFamily, k: int, omega_m: float) -> float:
    """Where tongue ``k`` of a family touches ``gamma = 0``."""
    if k < 1:
        raise ValueError("tongue index starts at 1")
    if DeterminantFamily(family).odd:
        return ((2 * k - 1) * omega_m / 2) ** 2
    return (k * omega_m) ** 2


def _bracket_radius(family, k, omega_m):
    here = seed(family, k, omega_m)
    below = seed(family, k - 1, omega_m) if k > 1 else ZERO_CURVE_DELTA_HAT
    above = seed(family, k + 1, omega_m)
    return 0.4 * min(here - below, above - here)


def _bisect_secant(fn, lo, hi, flo, fhi, tol, max_iter=200):
    # Plain bisection shrinks the bracket by 1e6, then Illinois-damped secant
    # steps finish it off without stalling on one side.
    stop_bisect = 1e-6 * (hi - lo)
    side = 0
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        if hi - lo > stop_bisect:
            x = 0.5 * (lo + hi)
        else:
            x = (lo * fhi - hi * flo) / (fhi - flo)
            if not lo < x < hi:
                x = 0.5 * (lo + hi)
        fx = fn(x)
        if fx == 0.0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
            if side == -1:
                fhi *= 0.5
            side = -1
        else:
            hi, fhi = x, fx
            if side == 1:
                flo *= 0.5
            side = 1
    return 0.5 * (lo + hi)


def solve_transition_curve(
    family: DeterminantFamily,
    k: int,
    gamma: float,
    omega_m: float = 1.0,
    n: int = DEFAULT_TRUNCATION,
    tol: float = DEFAULT_TOL,
) -> float:
    """``delta_hat`` on the ``k``-th transition curve of ``family`` at ``gamma``.

    The root is bracketed around the ``gamma = 0`` seed and refined by
    bisection followed by secant steps until the bracket is below ``tol``.

    Raises
    ------
    NoRootInBracket
        If no sign change is found, even after widening the bracket once.
    """
    family = DeterminantFamily(family)
    if n < 2 * k + 6:
        raise ValueError(f"truncation {n} too small for tongue {k}; need >= {2 * k + 6}")
    centre = seed(family, k, omega_m)
    if gamma == 0:
        return centre

    def fn(d):
        return scaled_det(build_hill_matrix(family, gamma, d, omega_m, n))

    # the mass stays positive only for delta_hat < 1/gamma
    upper_limit = (1.0 - 1e-9) / gamma
    radius = _bracket_radius(family, k, omega_m)
    for widen in (1.0, 2.0):
        lo = max(centre - widen * radius, 1e-12)
        hi = min(centre + widen * radius, upper_limit)
        if not lo < hi:
            break
        flo, fhi = fn(lo), fn(hi)
        if flo == 0.0:
            return lo
        if fhi == 0.0:
            return hi
        if (flo < 0) != (fhi < 0):
            return _bisect_secant(fn, lo, hi, flo, fhi, tol)
    raise NoRootInBracket(
        f"no sign change for {family.value} k={k} at gamma={gamma} (n={n})"
    )


# Series coefficients as (power of gamma, coefficient, power of omega_m).
# Shared terms first, then the term at which the two curves split; the
# cosine curve takes the minus sign of the splitting term.
_SERIES = {
    1: ([(0, 1 / 4, 2)], (1, 1 / 32, 4)),
    2: ([(0, 9 / 4, 2), (2, -16767 / 4096, 6)], (3, 6561 / 131072, 8)),
    3: (
        [(0, 25 / 4, 2), (2, -1109375 / 12288, 6), (4, 3030048828125 / 1811939328, 10)],
        (5, 2197265625 / 2147483648, 12),
    ),
}


def series_prediction(
    family: DeterminantFamily,
    k: int,
    gamma: float,
    omega_m: float = 1.0,
    max_order: int | None = None,
) -> float:
    """Perturbation series for the odd transition curves, tongues 1-3.

    ``max_order`` drops terms of higher order in ``gamma``.
    """
    family = DeterminantFamily(family)
    if not family.odd:
        raise Unsupported("series are only tabulated for the odd families")
    if k not in _SERIES:
        raise Unsupported(f"no series for tongue k={k}")
    shared, (p, coeff, q) = _SERIES[k]
    total = 0.0
    for power, c, wpow in shared:
        if max_order is None or power <= max_order:
            total += c * omega_m**wpow * gamma**power
    if max_order is None or p <= max_order:
        sign = -1.0 if family is DeterminantFamily.ODD_COSINE else 1.0
        total += sign * coeff * omega_m**q * gamma**p
    return total


def tongue_width(k: int, gamma: float, omega_m: float = 1.0, n: int = DEFAULT_TRUNCATION) -> float:
    lower = solve_transition_curve(DeterminantFamily.ODD_COSINE, k, gamma, omega_m, n)
    upper = solve_transition_curve(DeterminantFamily.ODD_SINE, k, gamma, omega_m, n)
    return abs(upper - lower)


def coexistence_residual(
    gamma: float, delta_hat: float, omega_m: float = 1.0, n: int = 5, relative: bool = False
) -> float:
    """``|det EvenCosine_(n+1) - c * det EvenSine_n|`` with ``c = 4*delta_hat/omega_m**2``.

    The two agree exactly because the even cosine matrix has a single
    non-zero entry in its first column.  With ``relative=True`` the residual
    is divided by the product of the cosine matrix's row norms, which bounds
    both determinants.
    """
    if n < 3:
        raise ValueError("n must be at least 3")
    cos_mat = build_hill_matrix(DeterminantFamily.EVEN_COSINE, gamma, delta_hat, omega_m, n + 1)
    sin_mat = build_hill_matrix(DeterminantFamily.EVEN_SINE, gamma, delta_hat, omega_m, n)
    c = 4 * delta_hat / omega_m**2
    residual = abs(det_eval(cos_mat) - c * det_eval(sin_mat))
    if not relative:
        return residual
    scale = float(np.prod(np.max(np.abs(cos_mat), axis=1)))
    return residual / scale if scale else residual


def damped_first_tongue(gamma: float, beta: float, omega_m: float = 1.0):
    """First-tongue boundaries with damping, to first order.

    Returns ``(lower, upper)`` or None when damping suppresses the tongue
    (``gamma*omega_m < 4*beta``).
    """
    if gamma < 0 or beta < 0:
        raise ValueError("gamma and beta must be non-negative")
    # factored so the tangency gamma*omega_m == 4*beta gives exactly zero
    radicand = (gamma * omega_m - 4 * beta) * (gamma * omega_m + 4 * beta)
    if radicand < 0:
        return None
    half = omega_m**3 / 32 * math.sqrt(radicand)
    centre = omega_m**2 / 4
    return centre - half, centre + half


def trace_tongues(
    gammas,
    ks=(1, 2, 3),
    omega_m: float = 1.0,
    n: int = DEFAULT_TRUNCATION,
    families=(DeterminantFamily.ODD_COSINE, DeterminantFamily.ODD_SINE),
):
    """Transition points over a gamma grid.

    Yields a :class:`TransitionCurvePoint` per solved point, or the tuple
    ``(family, k, gamma, None)`` where the solver found no root.
    """
    for family in families:
        family = DeterminantFamily(family)
        for k in ks:
            for g in gammas:
                try:
                    d = solve_transition_curve(family, k, float(g), omega_m, n)
                except NoRootInBracket:
                    yield (family, k, float(g), None)
                    continue
                yield TransitionCurvePoint(float(g), d, family, k, n)
