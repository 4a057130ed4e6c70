"""Safe basins and integrity diagrams for the full nonlinear oscillator.

An initial condition is *safe* if its trajectory has not crossed
``x = escape_x`` after ``horizon_periods`` forcing periods (mass periods for
the unforced system).  Grid points are integrated in fixed-size chunks; each
point carries its own step-size sequence, so a raster does not depend on the
chunking or on how many worker processes ran it.
"""

from __future__ import annotations

import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from parastab.core_ode import (
    DEFAULT_ESCAPE_X,
    IntegratorSettings,
    OscillatorParams,
    escape_batch,
    horizon,
)

# Classification only needs the escape decision, not a precise trajectory.
BASIN_SETTINGS = IntegratorSettings(rel_tol=1e-6, abs_tol=1e-9)
CHUNK_SIZE = 4096


class Cell(enum.IntEnum):
    ESCAPED = 0
    SAFE = 1


@dataclass(frozen=True)
class BasinGridSpec:
    x_range: tuple[float, float] = (-1.0, 2.0)
    y_range: tuple[float, float] = (-1.5, 1.5)
    nx: int = 301
    ny: int = 301
    horizon_periods: int = 32
    escape_x: float = DEFAULT_ESCAPE_X

    def __post_init__(self):
        if not (self.x_range[1] > self.x_range[0] and self.y_range[1] > self.y_range[0]):
            raise ValueError("grid ranges must be non-degenerate")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("need at least 2 cells per axis")
        if self.horizon_periods < 1:
            raise ValueError("horizon_periods must be positive")
        if not self.escape_x > 1:
            raise ValueError("escape_x must lie beyond the saddle")

    @property
    def window_area(self) -> float:
        return (self.x_range[1] - self.x_range[0]) * (self.y_range[1] - self.y_range[0])

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates along x and y."""
        dx = (self.x_range[1] - self.x_range[0]) / self.nx
        dy = (self.y_range[1] - self.y_range[0]) / self.ny
        xs = self.x_range[0] + (np.arange(self.nx) + 0.5) * dx
        ys = self.y_range[0] + (np.arange(self.ny) + 0.5) * dy
        return xs, ys


@dataclass(frozen=True)
class BasinRaster:
    """``cells[j, i]`` classifies the initial condition ``(xs[i], ys[j])``."""

    cells: np.ndarray
    params: OscillatorParams
    spec: BasinGridSpec
    failures: int = 0

    @property
    def safe_fraction(self) -> float:
        return float(np.count_nonzero(self.cells == Cell.SAFE)) / self.cells.size

    @property
    def area(self) -> float:
        return self.safe_fraction * self.spec.window_area

    def to_pgm(self) -> str:
        """Plain-text PGM, top row at the largest y (255 = safe)."""
        rows = np.where(self.cells[::-1] == Cell.SAFE, 255, 0)
        lines = ["P2", f"{self.spec.nx} {self.spec.ny}", "255"]
        lines.extend(" ".join(str(v) for v in row) for row in rows)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        xs, ys = self.spec.axes()
        buf = io.StringIO()
        buf.write("x0,y0,class\n")
        for j, y in enumerate(ys):
            for i, x in enumerate(xs):
                buf.write(f"{x!r},{y!r},{Cell(self.cells[j, i]).name.capitalize()}\n")
        return buf.getvalue()


@dataclass(frozen=True)
class IntegrityCurve:
    f_values: tuple[float, ...]
    normalized_area: tuple[float, ...]
    baseline_area: float
    failures: int = 0
    rasters: tuple[BasinRaster, ...] = field(default=(), repr=False, compare=False)

    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.f_values, self.normalized_area))

    def to_csv(self) -> str:
        lines = ["F,normalized_area"]
        lines.extend(f"{f!r},{a!r}" for f, a in self.points())
        return "\n".join(lines) + "\n"


def _time_limit(params: OscillatorParams, spec: BasinGridSpec) -> float:
    return horizon(params, spec.horizon_periods)


def classify_initial_condition(
    params: OscillatorParams,
    x0: float,
    y0: float,
    spec: BasinGridSpec | None = None,
    settings: IntegratorSettings | None = None,
) -> Cell:
    """Safe or Escaped; an integration failure counts as Escaped."""
    spec = spec or BasinGridSpec()
    escaped, failed = escape_batch(
        params, [x0], [y0], _time_limit(params, spec), spec.escape_x, settings or BASIN_SETTINGS
    )
    return Cell.ESCAPED if (escaped[0] or failed[0]) else Cell.SAFE


def _run_chunk(task):
    params, x0, y0, t_max, escape_x, settings = task
    escaped, failed = escape_batch(params, x0, y0, t_max, escape_x, settings)
    return escaped | failed, failed


def _tasks(params, spec, settings):
    xs, ys = spec.axes()
    gx, gy = np.meshgrid(xs, ys)
    gx, gy = gx.ravel(), gy.ravel()
    t_max = _time_limit(params, spec)
    return [
        (params, gx[i : i + CHUNK_SIZE], gy[i : i + CHUNK_SIZE], t_max, spec.escape_x, settings)
        for i in range(0, gx.size, CHUNK_SIZE)
    ]


def _map(tasks, workers):
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [_run_chunk(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_chunk, tasks))


def _assemble(params, spec, results) -> BasinRaster:
    escaped = np.concatenate([r[0] for r in results])
    failures = int(sum(np.count_nonzero(r[1]) for r in results))
    cells = np.where(escaped, Cell.ESCAPED, Cell.SAFE).astype(np.uint8).reshape(spec.ny, spec.nx)
    return BasinRaster(cells=cells, params=params, spec=spec, failures=failures)


def compute_raster(
    params: OscillatorParams,
    spec: BasinGridSpec | None = None,
    settings: IntegratorSettings | None = None,
    workers: int = 1,
) -> BasinRaster:
    spec = spec or BasinGridSpec()
    tasks = _tasks(params, spec, settings or BASIN_SETTINGS)
    return _assemble(params, spec, _map(tasks, workers))


def safe_basin_area(
    params: OscillatorParams,
    spec: BasinGridSpec | None = None,
    settings: IntegratorSettings | None = None,
    workers: int = 1,
) -> float:
    return compute_raster(params, spec, settings, workers).area


def integrity_curve(
    params_template: OscillatorParams,
    f_values,
    spec: BasinGridSpec | None = None,
    settings: IntegratorSettings | None = None,
    workers: int = 1,
    keep_rasters: bool = False,
) -> IntegrityCurve:
    """Safe-basin area against forcing amplitude, normalised by ``F = gamma = 0``.

    The baseline keeps every other parameter of the template.  All rasters
    are submitted to one worker pool.
    """
    spec = spec or BasinGridSpec()
    settings = settings or BASIN_SETTINGS
    f_values = [float(f) for f in f_values]
    if any(b < a for a, b in zip(f_values, f_values[1:])):
        raise ValueError("f_values must be sorted ascending")

    baseline = params_template.replace(f_amp=0.0, gamma=0.0)
    runs = [baseline] + [params_template.replace(f_amp=f) for f in f_values]
    unique = list(dict.fromkeys(runs))
    tasks, owners = [], []
    for idx, p in enumerate(unique):
        chunk = _tasks(p, spec, settings)
        tasks.extend(chunk)
        owners.extend([idx] * len(chunk))
    results = _map(tasks, workers)
    rasters = []
    for idx, p in enumerate(unique):
        rasters.append(_assemble(p, spec, [r for r, o in zip(results, owners) if o == idx]))
    by_params = dict(zip(unique, rasters))

    base = by_params[baseline]
    if base.area == 0:
        raise ValueError("baseline safe basin is empty; enlarge the window")
    curve_rasters = [by_params[p] for p in runs[1:]]
    return IntegrityCurve(
        f_values=tuple(f_values),
        normalized_area=tuple(r.area / base.area for r in curve_rasters),
        baseline_area=base.area,
        failures=sum(r.failures for r in rasters),
        rasters=tuple(curve_rasters) if keep_rasters else (),
    )


def cliff_location(curve: IntegrityCurve, level: float = 0.5) -> float | None:
    """First ``F`` where the normalised area falls below ``level``.

    Linear interpolation between the bracketing samples; None if it never does.
    """
    pts = curve.points()
    for (f0, a0), (f1, a1) in zip(pts, pts[1:]):
        if a0 >= level > a1:
            return f0 + (a0 - level) * (f1 - f0) / (a0 - a1)
    if pts and pts[0][1] < level:
        return pts[0][0]
    return None


def homoclinic_loop_area(delta_hat: float = 1.0) -> float:
    """Area enclosed by the unforced homoclinic loop, by 1-D quadrature.

    The loop is ``y**2 = 2*delta_hat*(1/6 - x**2/2 + x**3/3)`` for
    ``-1/2 <= x <= 1``.
    """
    from scipy import integrate

    def half_height(x):
        return math.sqrt(max(0.0, 2 * delta_hat * (1 / 6 - x * x / 2 + x**3 / 3)))

    value, _ = integrate.quad(half_height, -0.5, 1.0, epsabs=1e-13, epsrel=1e-13)
    return 2 * value
