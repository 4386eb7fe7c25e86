"""Sensitivity curves over pulse duration or coupling, and the coupling optimum.

Sweeps evaluate the closed-form minimum detectable force on an axis grid
(one row per squeeze ratio per grid point, axis-major order), always at
the interference phase that minimizes the noise for that grid point.
Rows are plain records so the command line layer can serialize them
without recomputation.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .metrology import (
    SIGNAL_CONSISTENT,
    SIGNAL_VARIANTS,
    FminPoint,
    MeterParams,
    f_min,
    noise,
    phi_opt,
    signal_coeff,
    sql,
)

__all__ = [
    "SweepSpec",
    "KappaOptimum",
    "fig1_spec",
    "fig2_spec",
    "axis_values",
    "fmin_curve",
    "golden_section",
    "optimal_kappa",
]

_AXES = ("tau_scaled", "kappa")


@dataclass(frozen=True)
class SweepSpec:
    """One-axis sweep of the minimum detectable force.

    ``axis`` selects which of ``tau_scaled``/``kappa`` runs over the
    grid; the other is held at the value given here.  Each grid point is
    evaluated for every squeeze ratio in ``ratios`` and, when
    ``include_sql`` is set, for the ratio-1 zero-temperature reference
    at phi = 0.
    """

    axis: str = "tau_scaled"
    lo: float = 0.05
    hi: float = 2.0 * math.pi
    points: int = 512
    log_spaced: bool = False
    kappa: float = 1.0
    tau_scaled: float = math.pi / 2.0
    n_th: float = 20.0
    ratios: tuple[float, ...] = (1.0, 2.0, 10.0)
    include_sql: bool = True
    signal_variant: str = SIGNAL_CONSISTENT

    def __post_init__(self) -> None:
        if self.axis not in _AXES:
            raise ValueError(f"axis must be one of {_AXES}, got {self.axis!r}")
        if not (self.lo > 0 and self.hi > self.lo):
            raise ValueError(f"need 0 < lo < hi, got lo={self.lo} hi={self.hi}")
        if self.points < 2:
            raise ValueError(f"points must be at least 2, got {self.points}")
        if self.kappa <= 0 or self.tau_scaled <= 0:
            raise ValueError("held kappa and tau_scaled must be positive")
        if self.n_th < 0:
            raise ValueError(f"n_th must be nonnegative, got {self.n_th}")
        if not self.ratios or any(r < 1.0 for r in self.ratios):
            raise ValueError(f"ratios must be nonempty and >= 1, got {self.ratios}")
        if self.signal_variant not in SIGNAL_VARIANTS:
            raise ValueError(f"unknown signal variant {self.signal_variant!r}")


def fig1_spec(**overrides) -> SweepSpec:
    """Duration sweep: f_min vs tau_scaled at fixed coupling."""
    return replace(SweepSpec(), **overrides)


def fig2_spec(**overrides) -> SweepSpec:
    """Coupling sweep: f_min vs kappa on a log grid at fixed duration."""
    base = SweepSpec(axis="kappa", lo=0.05, hi=5.0, log_spaced=True)
    return replace(base, **overrides)


def axis_values(spec: SweepSpec) -> np.ndarray:
    if spec.log_spaced:
        return np.geomspace(spec.lo, spec.hi, spec.points)
    return np.linspace(spec.lo, spec.hi, spec.points)


def _evaluate_point(spec: SweepSpec, x: float) -> list[FminPoint]:
    tau = x if spec.axis == "tau_scaled" else spec.tau_scaled
    kappa = x if spec.axis == "kappa" else spec.kappa
    phi = phi_opt(tau)
    if spec.include_sql:
        f_ref = sql(
            MeterParams(kappa=kappa, tau_scaled=tau, signal_variant=spec.signal_variant)
        )
    else:
        f_ref = math.nan
    meter = MeterParams(
        kappa=kappa, tau_scaled=tau, phi=phi, signal_variant=spec.signal_variant
    )
    rows = []
    for ratio in spec.ratios:
        rows.append(
            FminPoint(
                tau_scaled=tau,
                kappa=kappa,
                ratio=ratio,
                n_th=spec.n_th,
                phi=phi,
                signal=signal_coeff(meter),
                noise=noise(meter, ratio, spec.n_th),
                f_min=f_min(meter, ratio, spec.n_th),
                f_sql=f_ref,
            )
        )
    return rows


def fmin_curve(spec: SweepSpec, jobs: int = 1) -> list[FminPoint]:
    """Evaluate the sweep, axis-major: all ratios for a grid point together.

    ``jobs`` > 1 distributes grid points over threads; the row order is
    by grid index regardless, so output is deterministic.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be at least 1, got {jobs}")
    xs = [float(x) for x in axis_values(spec)]
    if jobs == 1:
        per_point = [_evaluate_point(spec, x) for x in xs]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_point = list(pool.map(lambda x: _evaluate_point(spec, x), xs))
    return [row for rows in per_point for row in rows]


def golden_section(fn, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Minimize a unimodal scalar function on [lo, hi].

    Returns (x, fn(x)) once the bracket is narrower than ``tol``.
    """
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


@dataclass(frozen=True)
class KappaOptimum:
    kappa: float
    f_min: float


def optimal_kappa(
    tau_scaled: float,
    ratio: float,
    n_th: float,
    *,
    lo: float = 1e-3,
    hi: float = 1e2,
    rel_tol: float = 1e-6,
    coarse_points: int = 64,
    signal_variant: str = SIGNAL_CONSISTENT,
) -> KappaOptimum:
    """Coupling that minimizes f_min at fixed duration, phase-optimized.

    A coarse logarithmic scan brackets the minimum, then golden-section
    on log(kappa) refines it to the requested relative width.
    """
    if not (lo > 0 and hi > lo):
        raise ValueError(f"need 0 < lo < hi, got lo={lo} hi={hi}")
    if rel_tol <= 0:
        raise ValueError(f"rel_tol must be positive, got {rel_tol}")
    if coarse_points < 3:
        raise ValueError(f"coarse_points must be at least 3, got {coarse_points}")
    phi = phi_opt(tau_scaled)

    def objective(kappa: float) -> float:
        meter = MeterParams(
            kappa=kappa, tau_scaled=tau_scaled, phi=phi, signal_variant=signal_variant
        )
        return f_min(meter, ratio, n_th)

    grid = np.geomspace(lo, hi, coarse_points)
    values = [objective(float(k)) for k in grid]
    i = int(np.argmin(values))
    a = float(grid[max(i - 1, 0)])
    b = float(grid[min(i + 1, coarse_points - 1)])
    log_x, best = golden_section(
        lambda u: objective(math.exp(u)), math.log(a), math.log(b), math.log1p(rel_tol)
    )
    return KappaOptimum(kappa=math.exp(log_x), f_min=best)
