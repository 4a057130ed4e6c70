"""Cross-oracle checks run by ``parastab verify`` and the acceptance suite.

Each check pits two independent computations against each other and returns
a :class:`CheckResult`.  A check that cannot run at the requested truncation
reports ``UNSUPPORTED`` rather than failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from parastab import melnikov
from parastab.core_ode import OscillatorParams
from parastab.floquet import Stability, liouville_det, monodromy_origin
from parastab.hill import (
    DEFAULT_TRUNCATION,
    DeterminantFamily,
    coexistence_residual,
    solve_transition_curve,
    tongue_width,
)

PASS, FAIL, UNSUPPORTED = "PASS", "FAIL", "UNSUPPORTED"

# fixed so every run draws the same parameter sample
SWEEP_SEED = 20160301

SLOPE_TARGETS = {1: (1.0, 0.1), 2: (3.0, 0.2), 3: (5.0, 0.3)}


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    detail: str

    @property
    def failed(self) -> bool:
        return self.status == FAIL

    def line(self) -> str:
        return f"{self.status:<11} {self.name}: {self.detail}"


def melnikov_sweep(samples: int = 100, seed: int = SWEEP_SEED) -> list[tuple[OscillatorParams, float]]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        d = rng.uniform(0.1, 4.0)
        p = OscillatorParams(
            delta_hat=d,
            gamma=rng.uniform(0.0, 0.5) / d,
            beta=rng.uniform(0.0, 0.1),
            omega_m=rng.uniform(0.3, 3.0),
            f_amp=rng.uniform(0.0, 0.2),
            omega_f=rng.uniform(0.3, 3.0),
        )
        out.append((p, rng.uniform(0.0, 2 * math.pi)))
    return out


def check_melnikov(samples: int = 100, seed: int = SWEEP_SEED) -> CheckResult:
    worst = 0.0
    for p, t0 in melnikov_sweep(samples, seed):
        closed = melnikov.melnikov_closed(p, t0).value
        quad = melnikov.melnikov_quadrature(p, t0)
        worst = max(worst, abs(closed - quad) / (1 + abs(closed)))
    status = PASS if worst < 1e-6 else FAIL
    return CheckResult("melnikov-oracle", status, f"{samples} samples, worst scaled error {worst:.2e}")


def first_tongue_points(n: int = DEFAULT_TRUNCATION, count: int = 10):
    """``count`` solved first-tongue boundary points, alternating the two branches."""
    gammas = np.linspace(0.02, 0.2, (count + 1) // 2)
    pts = []
    for g in gammas:
        for family in (DeterminantFamily.ODD_COSINE, DeterminantFamily.ODD_SINE):
            pts.append((float(g), solve_transition_curve(family, 1, float(g), 1.0, n)))
    return pts[:count]


def check_hill_floquet(n: int = DEFAULT_TRUNCATION, count: int = 10) -> CheckResult:
    try:
        pts = first_tongue_points(n, count)
    except ValueError as exc:
        return CheckResult("hill-floquet", UNSUPPORTED, str(exc))
    worst = 0.0
    for g, d in pts:
        res = monodromy_origin(OscillatorParams(delta_hat=d, gamma=g))
        worst = max(worst, abs(res.max_abs_multiplier - 1))
    status = PASS if worst < 1e-6 else FAIL
    return CheckResult("hill-floquet", status, f"{len(pts)} points, worst | |lambda|-1 | {worst:.2e}")


def coexistence_sample(samples: int = 20, seed: int = SWEEP_SEED):
    rng = np.random.default_rng(seed + 1)
    out = []
    for _ in range(samples):
        d = rng.uniform(0.1, 4.0)
        out.append((rng.uniform(0.0, 0.9) / d, d, rng.uniform(0.3, 3.0)))
    return out


def check_coexistence(ns=(5, 10, 25), samples: int = 20, seed: int = SWEEP_SEED) -> CheckResult:
    worst = max(
        coexistence_residual(g, d, wm, n, relative=True)
        for n in ns
        for g, d, wm in coexistence_sample(samples, seed)
    )
    status = PASS if worst < 1e-10 else FAIL
    return CheckResult("coexistence", status, f"N in {tuple(ns)}, worst relative residual {worst:.2e}")


def check_coexistence_floquet(offsets=(-1e-3, 0.0, 1e-3), products=(0.1, 0.3)) -> CheckResult:
    """Near ``delta_hat = n**2*omega_m**2`` the undamped origin is never unstable."""
    bad = []
    count = 0
    for n in (1, 2):
        for gd in products:
            for off in offsets:
                d = n * n * (1 + off)
                res = monodromy_origin(OscillatorParams(delta_hat=d, gamma=gd / d))
                count += 1
                if res.classification is Stability.UNSTABLE:
                    bad.append((n, gd, off))
    status = FAIL if bad else PASS
    return CheckResult("coexistence-floquet", status, f"{count} samples, unstable at {bad}")


def check_liouville(betas=(0.0, 0.01, 0.1)) -> CheckResult:
    worst = 0.0
    for b in betas:
        p = OscillatorParams(delta_hat=0.7, gamma=0.9, beta=b, omega_m=1.2)
        worst = max(worst, abs(monodromy_origin(p).det - liouville_det(p)))
    status = PASS if worst < 1e-8 else FAIL
    return CheckResult("liouville", status, f"beta in {tuple(betas)}, worst error {worst:.2e}")


def width_slopes(n: int = DEFAULT_TRUNCATION, gammas=None) -> dict[int, float]:
    """Least-squares slope of ``log(width)`` against ``log(gamma)`` per tongue."""
    if gammas is None:
        gammas = np.geomspace(0.02, 0.1, 9)
    slopes = {}
    for k in SLOPE_TARGETS:
        widths = [tongue_width(k, float(g), 1.0, n) for g in gammas]
        slopes[k] = float(np.polyfit(np.log(gammas), np.log(widths), 1)[0])
    return slopes


def check_slopes(n: int = DEFAULT_TRUNCATION) -> CheckResult:
    needed = 2 * max(SLOPE_TARGETS) + 6
    if n < needed:
        return CheckResult("width-slopes", UNSUPPORTED, f"truncation {n} below {needed}")
    slopes = width_slopes(n)
    ok = all(abs(slopes[k] - target) <= tol for k, (target, tol) in SLOPE_TARGETS.items())
    detail = ", ".join(f"k={k}: {s:.4f}" for k, s in slopes.items())
    return CheckResult("width-slopes", PASS if ok else FAIL, detail)


def run_all(truncation: int = DEFAULT_TRUNCATION) -> list[CheckResult]:
    return [
        check_melnikov(),
        check_hill_floquet(truncation),
        check_coexistence(),
        check_coexistence_floquet(),
        check_liouville(),
        check_slopes(truncation),
    ]
