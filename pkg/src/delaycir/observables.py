"""Quantities measured on simulated paths.

Paths are read through the step process ŝ, which holds ``s_n`` on
``[nh, (n+1)h)``, equals the initial history on ``[-tau, 0)`` and takes the
value ``s_N`` at the closed endpoint ``t = T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .driver import GridSpec
from .errors import BadBarrier, GridMismatch, OutOfRange, TooFewPaths
from .model import ModelParams, history_at
from .schemes import PathRecorder

__all__ = [
    "StepProcessView",
    "MomentReport",
    "MeanBoundCurve",
    "step_process_at",
    "moment_report",
    "mean_bound",
    "mean_bound_curve",
    "bond_price",
    "barrier_option_price",
]

_SNAP = 1e-12


@dataclass(frozen=True)
class StepProcessView:
    """Piecewise-constant reading of a recorded path over [-tau, T]."""

    path: PathRecorder

    @property
    def grid(self) -> GridSpec:
        return self.path.grid

    def cell(self, t: float) -> int:
        """Index n with t in [nh, (n+1)h), snapping times that sit on a node
        up to rounding onto that node."""
        g = self.grid
        n = int(np.floor(t / g.h))
        if abs((n + 1) * g.h - t) <= _SNAP * max(1.0, abs(t)):
            n += 1
        return min(max(n, 0), g.n_steps)

    def __call__(self, t: float) -> float:
        return step_process_at(self, t)


def step_process_at(view: StepProcessView, t: float) -> float:
    g = view.grid
    if not (-g.tau <= t <= g.T):
        raise OutOfRange(f"t={t} outside [{-g.tau}, {g.T}]")
    if t < 0:
        return history_at(view.path.history, t, g.tau)
    return float(view.path.values[view.cell(t)])


def _stack(paths: Sequence[PathRecorder], min_paths: int = 1) -> Tuple[GridSpec, np.ndarray]:
    paths = [p.path if isinstance(p, StepProcessView) else p for p in paths]
    if len(paths) < min_paths:
        raise TooFewPaths(f"need at least {min_paths} paths, got {len(paths)}")
    grid = paths[0].grid
    for p in paths[1:]:
        if p.grid != grid:
            raise GridMismatch("all paths must share one grid")
    return grid, np.stack([p.values for p in paths])


def _steps_to(grid: GridSpec, T: Optional[float]) -> int:
    if T is None:
        return grid.n_steps
    n = int(round(T / grid.h))
    if n < 0 or n > grid.n_steps or abs(n * grid.h - T) > 1e-9 * max(T, grid.h):
        raise GridMismatch(f"T={T} is not a grid time of the simulated horizon {grid.T}")
    return n


@dataclass(frozen=True, eq=False)
class MomentReport:
    """Pointwise ensemble moments.

    ``moments[p]`` and ``moment_se[p]`` hold the sample mean of ``s_n**p`` and
    its standard error at each grid time; ``mean`` and ``second_moment`` are
    the p=1 and p=2 entries.
    """

    times: np.ndarray
    mean: np.ndarray
    second_moment: np.ndarray
    mean_se: np.ndarray
    second_moment_se: np.ndarray
    n_paths: int
    moments: dict = field(default_factory=dict)
    moment_se: dict = field(default_factory=dict)


def moment_report(paths: Sequence[PathRecorder], p_list=(1, 2)) -> MomentReport:
    """Sample p-th moments over an ensemble sharing one grid.

    Moments are averaged over the path axis with numpy's pairwise summation in
    path-index order, so the numbers only depend on the path set.
    """
    grid, x = _stack(paths, min_paths=2)
    n = x.shape[0]
    moments, ses = {}, {}
    for p in (1, 2, *p_list):
        p = int(p) if float(p).is_integer() else float(p)
        if p in moments:
            continue
        # non-integer powers are taken of |s|
        xp = x ** p if isinstance(p, int) else np.abs(x) ** p
        moments[p] = xp.mean(axis=0)
        ses[p] = xp.std(axis=0, ddof=1) / np.sqrt(n)
    return MomentReport(
        times=grid.times,
        mean=moments[1],
        second_moment=moments[2],
        mean_se=ses[1],
        second_moment_se=ses[2],
        n_paths=n,
        moments=moments,
        moment_se=ses,
    )


def mean_bound(params: ModelParams, h: float, xi0_mean: float, n):
    """(1 - lam h)^n (xi0_mean - mu) + mu."""
    val = np.power(1.0 - params.lam * h, n) * (xi0_mean - params.mu) + params.mu
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True, eq=False)
class MeanBoundCurve:
    """Analytic mean-reversion bound sampled on a grid.

    ``applicable`` is False when ``h >= 2/lam``; the bound then does not decay
    and should not be drawn against the sample mean.
    """

    times: np.ndarray
    values: np.ndarray
    applicable: bool


def mean_bound_curve(params: ModelParams, grid: GridSpec, xi0_mean: float) -> MeanBoundCurve:
    n = np.arange(grid.n_steps + 1)
    return MeanBoundCurve(
        times=grid.times,
        values=mean_bound(params, grid.h, xi0_mean, n),
        applicable=bool(grid.h < 2.0 / params.lam),
    )


def _mean_se(x: np.ndarray) -> Tuple[float, float]:
    # shifting by the first sample keeps a constant ensemble exact (SE = 0)
    d = x - x[0]
    if len(x) < 2:
        return float(x[0]), 0.0
    return float(x[0] + d.mean()), float(d.std(ddof=1) / np.sqrt(len(x)))


def discount_factors(paths: Sequence[PathRecorder], T: Optional[float] = None) -> np.ndarray:
    """exp(-∫_0^T ŝ dt) per path; the integral of the step process is h Σ_{n<N} s_n."""
    grid, x = _stack(paths)
    n_T = _steps_to(grid, T)
    return np.exp(-grid.h * x[:, :n_T].sum(axis=1))


def bond_price(paths: Sequence[PathRecorder], T: Optional[float] = None) -> Tuple[float, float]:
    """Zero-coupon bond estimate E[exp(-∫_0^T ŝ dt)] and its standard error."""
    return _mean_se(discount_factors(paths, T))


def barrier_payoffs(paths: Sequence[PathRecorder], K: float, B: float,
                    T: Optional[float] = None) -> np.ndarray:
    if not K >= 0:
        raise BadBarrier(f"strike must be >= 0, got {K}")
    if not B > K:
        raise BadBarrier(f"barrier must exceed the strike (K={K}, B={B})")
    grid, x = _stack(paths)
    n_T = _steps_to(grid, T)
    monitored = x[:, : n_T + 1]
    alive = np.all((monitored >= 0) & (monitored <= B), axis=1)
    return np.where(alive, np.maximum(monitored[:, -1] - K, 0.0), 0.0)


def barrier_option_price(paths: Sequence[PathRecorder], K: float, B: float,
                         T: Optional[float] = None) -> Tuple[float, float]:
    """Up-and-out call on the step process, monitored at every grid node.

    A path pays ``(ŝ(T) - K)^+`` if ``0 <= ŝ(t) <= B`` at every node up to
    ``T``, and nothing otherwise.
    """
    return _mean_se(barrier_payoffs(paths, K, B, T))
