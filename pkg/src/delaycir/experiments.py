"""Ensemble studies: strong convergence, positivity census and moment paths.

Paths are processed in fixed blocks of ``BLOCK_SIZE`` consecutive path
indices. Blocks may run on several threads, but their composition never
depends on the worker count and results are reassembled in path order, so
every report is reproducible from ``(inputs, master_seed)`` alone.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .driver import GridSpec, aggregate, generate_block
from .errors import NonDivisibleFactor
from .model import InitialHistory, ModelParams
from .observables import MeanBoundCurve, MomentReport, mean_bound_curve, moment_report
from .schemes import ControlConfig, PathRecorder, simulate_paths

__all__ = [
    "BLOCK_SIZE",
    "DEFAULT_HISTORY",
    "ConvergenceReport",
    "SchemeCensus",
    "PositivityCensus",
    "MomentStudy",
    "simulate_ensemble",
    "convergence_study",
    "positivity_census",
    "moment_study",
    "default_h_list",
    "fit_slope",
]

log = logging.getLogger(__name__)

BLOCK_SIZE = 128
DEFAULT_HISTORY = InitialHistory.constant(1.0)


def _blocks(n_paths: int) -> List[range]:
    return [range(i, min(i + BLOCK_SIZE, n_paths)) for i in range(0, n_paths, BLOCK_SIZE)]


def _map_blocks(fn, n_paths: int, workers: int = 1) -> list:
    blocks = _blocks(n_paths)
    if workers <= 1 or len(blocks) == 1:
        return [fn(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


def simulate_ensemble(scheme: str, params: ModelParams, ctrl: Optional[ControlConfig],
                      grid: GridSpec, n_paths: int, master_seed: int,
                      history: InitialHistory = DEFAULT_HISTORY,
                      workers: int = 1) -> List[PathRecorder]:
    """Simulate paths ``0..n_paths-1``, each on its own seeded stream."""

    def run(block):
        inc = generate_block(grid, params.beta, master_seed, block)
        return simulate_paths(scheme, params, ctrl, grid, inc, history)

    return [p for chunk in _map_blocks(run, n_paths, workers) for p in chunk]


# -- strong convergence ------------------------------------------------------

def default_h_list(h_ref: float = 2.0 ** -11) -> List[float]:
    """Coarse steps 2^(2i-1) h_ref for i = 1..5."""
    return [2.0 ** (2 * i - 1) * h_ref for i in range(1, 6)]


def fit_slope(h: Sequence[float], err: Sequence[float]) -> float:
    """Least-squares slope of log(err) against log(h), ignoring zero errors."""
    h = np.asarray(h, float)
    err = np.asarray(err, float)
    keep = err > 0
    if keep.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(h[keep]), np.log(err[keep]), 1)
    return float(slope)


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    """Endpoint mean-square gaps against a fine reference on shared noise.

    ``strong_error[i]`` is the sample mean of ``|s_ref(T) - s_h(T)|^2`` for
    ``h_list[i]`` and ``std_error[i]`` its standard error over paths.
    """

    scheme: str
    reference_scheme: str
    h_ref: float
    h_list: np.ndarray
    strong_error: np.ndarray
    std_error: np.ndarray
    slope: float
    n_paths: int

    def rows(self) -> List[Tuple[float, float, float]]:
        return list(zip(self.h_list.tolist(), self.strong_error.tolist(),
                        self.std_error.tolist()))


def _factor(h: float, h_ref: float) -> int:
    k = int(round(h / h_ref))
    if k < 1 or abs(k * h_ref - h) > 1e-9 * h:
        raise NonDivisibleFactor(f"h={h} is not an integer multiple of h_ref={h_ref}")
    return k


def convergence_study(params: ModelParams, ctrl: Optional[ControlConfig], scheme: str,
                      T: float, h_ref: float, h_list: Sequence[float], n_paths: int,
                      master_seed: int, history: InitialHistory = DEFAULT_HISTORY,
                      workers: int = 1,
                      reference_scheme: Optional[str] = None) -> ConvergenceReport:
    """Measure e_h = E|s_ref(T) - s_h(T)|^2 for each h in ``h_list``.

    Each path draws its increments once at ``h_ref``; the reference path uses
    them directly and every coarse path uses their block sums, so all grids
    see the same Brownian and Poisson paths. The reference is computed with
    ``reference_scheme`` (default: ``scheme`` itself).
    """
    reference_scheme = reference_scheme or scheme
    fine = GridSpec.from_step(T, h_ref, params.tau)
    factors = [_factor(h, h_ref) for h in h_list]
    for k in factors:
        fine.coarsen(k)  # fail before any simulation

    def run(block):
        inc = generate_block(fine, params.beta, master_seed, block)
        ref = simulate_paths(reference_scheme, params, ctrl, fine, inc, history)
        ref_end = np.array([p.values[-1] for p in ref])
        gaps = []
        for k in factors:
            coarse = aggregate(inc, k)
            paths = simulate_paths(scheme, params, ctrl, coarse.grid, coarse, history)
            end = np.array([p.values[-1] for p in paths])
            gaps.append((ref_end - end) ** 2)
        return np.array(gaps).reshape(len(factors), len(block))

    sq = np.concatenate(_map_blocks(run, n_paths, workers), axis=1)
    err = sq.mean(axis=1)
    se = sq.std(axis=1, ddof=1) / np.sqrt(n_paths) if n_paths > 1 else np.zeros(len(factors))
    h_arr = np.array([k * h_ref for k in factors])
    slope = fit_slope(h_arr, err)
    log.info("convergence %s: slope %.3f over %d paths", scheme, slope, n_paths)
    return ConvergenceReport(scheme, reference_scheme, float(h_ref), h_arr, err, se, slope,
                             n_paths)


# -- positivity --------------------------------------------------------------

@dataclass(frozen=True)
class SchemeCensus:
    """Negativity counts of one scheme over an ensemble.

    ``paths_with_negative_value`` looks at recorded values (always 0 for BIM,
    which clamps); ``paths_with_negativity_event`` and ``negativity_events``
    count raw negative step results, i.e. pre-clamp values for BIM.
    """

    scheme: str
    n_paths: int
    paths_with_negative_value: int
    paths_with_negativity_event: int
    negativity_events: int
    clamp_events: int
    clamps_from_eps_regime: int


@dataclass(frozen=True)
class PositivityCensus:
    h: float
    T: float
    by_scheme: Dict[str, SchemeCensus]

    def __getitem__(self, scheme: str) -> SchemeCensus:
        return self.by_scheme[scheme]


def census_of(paths: Sequence[PathRecorder]) -> SchemeCensus:
    return SchemeCensus(
        scheme=paths[0].scheme,
        n_paths=len(paths),
        paths_with_negative_value=sum(int(np.any(p.values < 0)) for p in paths),
        paths_with_negativity_event=sum(int(p.negativity_events > 0) for p in paths),
        negativity_events=sum(p.negativity_events for p in paths),
        clamp_events=sum(p.clamp_applied for p in paths),
        clamps_from_eps_regime=sum(p.clamps_from_eps_regime for p in paths),
    )


def positivity_census(params: ModelParams, ctrl: Optional[ControlConfig],
                      schemes: Sequence[str], h: float, T: float, n_paths: int,
                      master_seed: int, history: InitialHistory = DEFAULT_HISTORY,
                      workers: int = 1) -> PositivityCensus:
    """Count negative excursions per scheme; all schemes share the same noise."""
    grid = GridSpec.from_step(T, h, params.tau)
    out = {}
    for scheme in schemes:
        paths = simulate_ensemble(scheme, params, ctrl, grid, n_paths, master_seed, history,
                                  workers)
        out[scheme] = census_of(paths)
    return PositivityCensus(h=grid.h, T=grid.T, by_scheme=out)


# -- moments -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MomentStudy:
    report: MomentReport
    bound: MeanBoundCurve

    @property
    def bound_applicable(self) -> bool:
        return self.bound.applicable


def moment_study(params: ModelParams, ctrl: Optional[ControlConfig], scheme: str, h: float,
                 T: float, n_paths: int, master_seed: int,
                 history: InitialHistory = DEFAULT_HISTORY, p_list=(1, 2),
                 workers: int = 1) -> MomentStudy:
    """Ensemble moment trajectories with the analytic mean bound alongside.

    The bound is flagged inapplicable when ``h >= 2/lam``.
    """
    grid = GridSpec.from_step(T, h, params.tau)
    paths = simulate_ensemble(scheme, params, ctrl, grid, n_paths, master_seed, history, workers)
    report = moment_report(paths, p_list)
    bound = mean_bound_curve(params, grid, history.initial_value)
    if not bound.applicable:
        log.info("mean bound inapplicable: h=%g >= 2/lambda=%g", h, 2.0 / params.lam)
    return MomentStudy(report, bound)

