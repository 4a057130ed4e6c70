"""Equations of motion for the Helmholtz oscillator with periodic mass.

The mass is ``m(t) = 1/delta_hat + gamma*sin(omega_m*t)``.  Two clocks are
used in this package:

* physical time, for :func:`rhs_full` and everything in :mod:`parastab.basin`;
* mass-period-normalised time ``tau = omega_m*t`` (coefficient period 2*pi),
  for the two linearisations and everything in :mod:`parastab.floquet`.

The integrator is a Dormand-Prince 5(4) pair with PI step control.  It works
on a batch of independent trajectories at once: each column of the state has
its own time and step size, so a trajectory's numbers never depend on which
other trajectories it was batched with.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

__all__ = [
    "ParameterError",
    "StepSizeUnderflow",
    "OscillatorParams",
    "State",
    "Trajectory",
    "IntegratorSettings",
    "DEFAULT_ESCAPE_X",
    "DEFAULT_HORIZON_PERIODS",
    "mass",
    "rhs_full",
    "rhs_linearized_origin",
    "rhs_linearized_saddle",
    "full_field",
    "origin_field",
    "saddle_field",
    "integrate",
    "integrate_until_escape",
    "propagate",
    "escape_batch",
    "horizon",
]

DEFAULT_ESCAPE_X = 10.0
DEFAULT_HORIZON_PERIODS = 32

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


class ParameterError(ValueError):
    """Raised for oscillator parameters outside the physical range."""


class StepSizeUnderflow(RuntimeError):
    """The step size collapsed below the round-off floor."""


@dataclass(frozen=True)
class OscillatorParams:
    """Physical parameters of the oscillator.

    Attributes
    ----------
    delta_hat : float
        Inverse mean mass, ``1/delta``.  Must be positive.
    gamma : float
        Amplitude of the mass variation.  ``gamma*delta_hat < 1`` keeps the
        mass strictly positive.
    beta : float
        Linear damping.
    omega_m : float
        Angular frequency of the mass variation.
    f_amp : float
        Forcing amplitude ``F``.
    omega_f : float
        Forcing angular frequency.
    """

    delta_hat: float = 1.0
    gamma: float = 0.0
    beta: float = 0.0
    omega_m: float = 1.0
    f_amp: float = 0.0
    omega_f: float = 1.0

    def __post_init__(self):
        for name in ("delta_hat", "gamma", "beta", "omega_m", "f_amp", "omega_f"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.delta_hat <= 0:
            raise ParameterError("delta_hat must be positive")
        if self.gamma < 0 or self.beta < 0 or self.f_amp < 0:
            raise ParameterError("gamma, beta and f_amp must be non-negative")
        if self.omega_m <= 0 or self.omega_f <= 0:
            raise ParameterError("omega_m and omega_f must be positive")
        if self.gamma * self.delta_hat >= 1:
            raise ParameterError(
                f"gamma*delta_hat = {self.gamma * self.delta_hat:g} >= 1: the mass vanishes"
            )

    def replace(self, **changes) -> "OscillatorParams":
        return dataclasses.replace(self, **changes)

    @property
    def mass_period(self) -> float:
        return 2 * math.pi / self.omega_m

    @property
    def forcing_period(self) -> float:
        return 2 * math.pi / self.omega_f


@dataclass(frozen=True)
class State:
    t: float
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite state {self}")


@dataclass(frozen=True)
class IntegratorSettings:
    """Tolerances for the adaptive integrator.

    ``initial_step = 0`` picks the first step from the local derivative size.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    max_step: float = math.inf
    initial_step: float = 0.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.initial_step < 0:
            raise ValueError("initial_step must be non-negative")


@dataclass(frozen=True)
class Trajectory:
    """Accepted integrator steps, with slopes kept for Hermite dense output."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray

    def __len__(self):
        return len(self.t)

    def __iter__(self) -> Iterator[State]:
        for t, x, y in zip(self.t, self.x, self.y):
            yield State(float(t), float(x), float(y))

    @property
    def final(self) -> State:
        return State(float(self.t[-1]), float(self.x[-1]), float(self.y[-1]))

    def at(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Cubic Hermite interpolation of ``(x, y)`` at time(s) ``t``."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.t[0]) or np.any(t > self.t[-1]):
            raise ValueError("interpolation time outside the trajectory")
        i = np.clip(np.searchsorted(self.t, t, side="right") - 1, 0, len(self.t) - 2)
        h = self.t[i + 1] - self.t[i]
        s = (t - self.t[i]) / h
        x = _hermite(s, h, self.x[i], self.x[i + 1], self.dx[i], self.dx[i + 1])
        y = _hermite(s, h, self.y[i], self.y[i + 1], self.dy[i], self.dy[i + 1])
        return x, y

    def to_csv(self, dest=None) -> str:
        """Write ``t,x,y`` rows; returns the text when ``dest`` is None."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x", "y"])
        for t, x, y in zip(self.t, self.x, self.y):
            writer.writerow([repr(float(t)), repr(float(x)), repr(float(y))])
        text = buf.getvalue()
        if dest is None:
            return text
        with open(dest, "w", newline="") as fh:
            fh.write(text)
        return text


def _hermite(s, h, p0, p1, m0, m1):
    s2 = s * s
    s3 = s2 * s
    return (
        (2 * s3 - 3 * s2 + 1) * p0
        + (s3 - 2 * s2 + s) * h * m0
        + (-2 * s3 + 3 * s2) * p1
        + (s3 - s2) * h * m1
    )


# --------------------------------------------------------------------------
# Right-hand sides
# --------------------------------------------------------------------------


def mass(params: OscillatorParams, t):
    return 1.0 / params.delta_hat + params.gamma * np.sin(params.omega_m * t)


def full_field(params: OscillatorParams) -> Field:
    """Vectorised field of the full nonlinear system in physical time."""
    d, g, b = params.delta_hat, params.gamma, params.beta
    wm, F, wf = params.omega_m, params.f_amp, params.omega_f

    def field(t, v):
        x, y = v[0], v[1]
        phase = wm * t
        inv = d / (1.0 + g * d * np.sin(phase))
        ydot = inv * (-(x - x * x) - (b + g * wm * np.cos(phase)) * y)
        if F:
            ydot = ydot + inv * F * np.sin(wf * t)
        return np.stack((y, ydot))

    return field


def rhs_full(params: OscillatorParams, s: State) -> tuple[float, float]:
    out = full_field(params)(np.float64(s.t), np.array([s.x, s.y], dtype=float))
    return float(out[0]), float(out[1])


def _linear_field(params: OscillatorParams, sign: float) -> Field:
    # sign=-1: restoring stiffness (origin); sign=+1: saddle at (1, 0).
    d, g, b, wm = params.delta_hat, params.gamma, params.beta, params.omega_m
    stiff = sign * d / wm**2

    def field(t, v):
        v = np.asarray(v, dtype=float)
        inv = 1.0 / (1.0 + g * d * np.sin(t))
        damp = d * (b / wm + g * np.cos(t))
        return np.stack((v[1], inv * (stiff * v[0] - damp * v[1])))

    return field


def origin_field(params: OscillatorParams) -> Field:
    """Linearisation about ``(0, 0)`` in scaled time (coefficient period 2*pi)."""
    return _linear_field(params, -1.0)


def saddle_field(params: OscillatorParams) -> Field:
    """Linearisation about ``(1, 0)`` in scaled time (coefficient period 2*pi)."""
    return _linear_field(params, 1.0)


def rhs_linearized_origin(params: OscillatorParams, t, v) -> np.ndarray:
    return origin_field(params)(t, v)


def rhs_linearized_saddle(params: OscillatorParams, t, v) -> np.ndarray:
    return saddle_field(params)(t, v)


# --------------------------------------------------------------------------
# Dormand-Prince 5(4)
# --------------------------------------------------------------------------

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)
# fifth-order minus embedded fourth-order weights, last entry multiplies k7
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_ALPHA = 0.17  # PI controller exponents (Gustafsson, as in Hairer's DOPRI5)
_BETA = 0.04
_FAC_MIN = 0.2
_FAC_MAX = 10.0
_EPS = np.finfo(float).eps


def _dp_step(field: Field, t, y, f0, h):
    k = [f0]
    for i in range(1, 6):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k) if a)
        k.append(field(t + _C[i] * h, yi))
    y_new = y + h * sum(b * kj for b, kj in zip(_B, k) if b)
    f_new = field(t + h, y_new)
    k.append(f_new)
    err = h * sum(e * kj for e, kj in zip(_E, k) if e)
    return y_new, f_new, err


@dataclass
class _MarchResult:
    t: np.ndarray
    y: np.ndarray
    escaped: np.ndarray
    t_exit: np.ndarray
    failed: np.ndarray
    history: list | None = None


def _initial_step(field, t, y, f, settings, span):
    if settings.initial_step > 0:
        h = np.full(t.shape, settings.initial_step)
    else:
        scale = settings.abs_tol + settings.rel_tol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2, axis=0))
        d1 = np.sqrt(np.mean((f / scale) ** 2, axis=0))
        h = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
        h = np.clip(h, 1e-6 * span, 0.1 * span)
    return np.minimum(h, settings.max_step)


def _locate_crossing(t0, h, x0, x1, m0, m1, level, settings):
    """Bisect the Hermite cubic of each crossing step for ``x = level``."""
    lo = np.zeros_like(t0)
    hi = np.ones_like(t0)
    for _ in range(200):
        width = (hi - lo) * h
        if np.all(width <= settings.abs_tol + settings.rel_tol * np.abs(t0 + h)):
            break
        mid = 0.5 * (lo + hi)
        above = _hermite(mid, h, x0, x1, m0, m1) > level
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return t0 + hi * h


def _march(
    field: Field,
    t0: float,
    y0,
    t_end: float,
    settings: IntegratorSettings,
    escape_x: float | None = None,
    record: bool = False,
    raise_on_underflow: bool = True,
) -> _MarchResult:
    y0 = np.array(y0, dtype=float)
    if y0.ndim == 1:
        y0 = y0[:, None]
    dim, count = y0.shape
    if not t_end > t0:
        raise ValueError("t_end must exceed the initial time")
    if record and count != 1:
        raise ValueError("recording is only supported for a single trajectory")

    out_t = np.full(count, float(t0))
    out_y = y0.copy()
    escaped = np.zeros(count, dtype=bool)
    t_exit = np.full(count, np.nan)
    failed = np.zeros(count, dtype=bool)

    ids = np.arange(count)
    t = out_t.copy()
    y = y0.copy()
    f = np.asarray(field(t, y), dtype=float)
    h = _initial_step(field, t, y, f, settings, t_end - t0)
    err_prev = np.full(count, 1e-4)
    history = [(float(t[0]), y[:, 0].copy(), f[:, 0].copy())] if record else None
    rtol, atol = settings.rel_tol, settings.abs_tol

    while ids.size:
        remaining = t_end - t
        last = remaining - h <= 16 * _EPS * max(abs(t_end), 1.0)
        h = np.where(last, remaining, h)
        y_new, f_new, err = _dp_step(field, t, y, f, h)

        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = np.sqrt(np.mean((err / scale) ** 2, axis=0))
        err_norm = np.where(np.isfinite(err_norm), err_norm, np.inf)
        accept = err_norm <= 1.0

        safe_err = np.maximum(err_norm, 1e-10)
        grow = _SAFETY * safe_err**-_ALPHA * err_prev**_BETA
        shrink = np.maximum(_FAC_MIN, _SAFETY * safe_err**-0.2)
        factor = np.where(accept, np.clip(grow, _FAC_MIN, _FAC_MAX), np.minimum(shrink, 1.0))
        h_next = np.minimum(h * factor, settings.max_step)

        t_new = np.where(last, t_end, t + h)
        done = accept & last
        crossed = np.zeros_like(accept)
        if escape_x is not None:
            crossed = accept & (y_new[0] > escape_x)
            if crossed.any():
                c = crossed
                t_exit[ids[c]] = _locate_crossing(
                    t[c], h[c], y[0, c], y_new[0, c], f[0, c], f_new[0, c], escape_x, settings
                )
                escaped[ids[c]] = True
                done = done | crossed

        t = np.where(accept, t_new, t)
        y = np.where(accept, y_new, y)
        f = np.where(accept, f_new, f)
        err_prev = np.where(accept, np.maximum(err_norm, 1e-4), err_prev)
        h = h_next

        if record and accept[0]:
            history.append((float(t[0]), y[:, 0].copy(), f[:, 0].copy()))

        floor = 16 * _EPS * np.maximum(np.abs(t), 1.0)
        underflow = (h < floor) & ~done
        if underflow.any():
            if raise_on_underflow:
                raise StepSizeUnderflow(
                    f"step size {h[underflow][0]:.3e} below round-off floor at t={t[underflow][0]:.6g}"
                )
            failed[ids[underflow]] = True
            done = done | underflow

        if done.any():
            out_t[ids[done]] = t[done]
            out_y[:, ids[done]] = y[:, done]
            keep = ~done
            ids, t, y, f, h, err_prev = ids[keep], t[keep], y[:, keep], f[:, keep], h[keep], err_prev[keep]

    return _MarchResult(out_t, out_y, escaped, t_exit, failed, history)


def integrate(
    rhs: Field,
    s0: State,
    t_end: float,
    settings: IntegratorSettings | None = None,
) -> Trajectory:
    """Integrate a planar system from ``s0`` to ``t_end``.

    ``rhs(t, v)`` must accept ``t`` of shape ``(m,)`` and ``v`` of shape
    ``(2, m)``; the fields built by :func:`full_field`, :func:`origin_field`
    and :func:`saddle_field` qualify.

    Raises
    ------
    StepSizeUnderflow
        If the step size collapses (stiffness or a singular coefficient).
    """
    settings = settings or IntegratorSettings()
    res = _march(rhs, s0.t, [s0.x, s0.y], t_end, settings, record=True)
    t = np.array([rec[0] for rec in res.history])
    v = np.array([rec[1] for rec in res.history])
    dv = np.array([rec[2] for rec in res.history])
    return Trajectory(t=t, x=v[:, 0], y=v[:, 1], dx=dv[:, 0], dy=dv[:, 1])


def propagate(
    rhs: Field,
    t0: float,
    v0,
    t_end: float,
    settings: IntegratorSettings | None = None,
) -> np.ndarray:
    """Advance the columns of ``v0`` (shape ``(dim, m)``) from ``t0`` to ``t_end``.

    Used for fundamental matrices: pass the identity and get the flow map.
    """
    res = _march(rhs, t0, v0, t_end, settings or IntegratorSettings())
    return res.y


def horizon(params: OscillatorParams, periods: int = DEFAULT_HORIZON_PERIODS) -> float:
    """Horizon in forcing periods, or mass periods for the unforced system."""
    period = params.forcing_period if params.f_amp > 0 else params.mass_period
    return periods * period


def integrate_until_escape(
    params: OscillatorParams,
    s0: State,
    t_max: float | None = None,
    escape_x: float = DEFAULT_ESCAPE_X,
    settings: IntegratorSettings | None = None,
) -> tuple[bool, float | None]:
    """Integrate the full system until ``x > escape_x`` or ``t_max``.

    Returns ``(escaped, t_exit)``; ``t_exit`` is None when the trajectory
    stays in the well.
    """
    if not escape_x > 1:
        raise ValueError("escape_x must lie beyond the saddle at x = 1")
    settings = settings or IntegratorSettings()
    if t_max is None:
        t_max = s0.t + horizon(params)
    res = _march(full_field(params), s0.t, [s0.x, s0.y], t_max, settings, escape_x=escape_x)
    if res.escaped[0]:
        return True, float(res.t_exit[0])
    return False, None


def escape_batch(
    params: OscillatorParams,
    x0,
    y0,
    t_max: float,
    escape_x: float = DEFAULT_ESCAPE_X,
    settings: IntegratorSettings | None = None,
    t0: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Escape test for many initial conditions at once.

    Each initial condition is integrated with its own step sequence, so the
    outcome for one point is identical to a lone call of
    :func:`integrate_until_escape` up to elementwise round-off.

    Returns
    -------
    escaped : (m,) bool array
    failed : (m,) bool array
        Step-size underflow; the caller decides how to count these.
    """
    settings = settings or IntegratorSettings()
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    res = _march(
        full_field(params),
        t0,
        np.stack((x0, y0)),
        t_max,
        settings,
        escape_x=escape_x,
        raise_on_underflow=False,
    )
    return res.escaped, res.failed
