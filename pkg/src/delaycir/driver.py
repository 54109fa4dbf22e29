"""Seeded Brownian and Poisson increments on a uniform grid.

Every path draws from its own stream, derived from ``(master_seed,
path_index)`` as ``SeedSequence(master_seed, spawn_key=(path_index,))``.
Within a stream the Brownian increments are drawn first, then the Poisson
counts. Results therefore do not depend on how paths are batched or on how
many workers simulate them.

Brownian increments are rounded to integer multiples of ``DW_QUANTUM``
(2**-40). Partial sums of such numbers are exact in double precision as long
as they stay below 2**13 in magnitude, so aggregating increments to a
coarser grid yields exactly the increments of the same Brownian path,
independent of summation order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DelayMisaligned, GridError, NonDivisibleFactor

__all__ = [
    "DW_QUANTUM",
    "GridSpec",
    "IncrementTable",
    "SeedPolicy",
    "path_rng",
    "generate",
    "generate_block",
    "aggregate",
    "write_increments_csv",
]

DW_QUANTUM = 2.0 ** -40

_GRID_RTOL = 1e-9


def _whole_ratio(a: float, b: float):
    """Return a/b as an int if it is (numerically) a positive integer, else None."""
    k = int(round(a / b))
    if k < 1 or abs(k * b - a) > _GRID_RTOL * abs(a):
        return None
    return k


@dataclass(frozen=True)
class GridSpec:
    """Uniform mesh t_n = n h on [0, T] with delay offset ``m = tau / h``."""

    T: float
    h: float
    n_steps: int
    m: int

    @classmethod
    def from_step(cls, T: float, h: float, tau: float) -> "GridSpec":
        """Build a grid, insisting that both ``T/h`` and ``tau/h`` are integers.

        Integrality is checked up to a relative tolerance of 1e-9, so decimal
        inputs such as ``h=0.1`` are accepted.
        """
        if not (h > 0 and T > 0 and tau > 0):
            raise GridError(f"T, h and tau must be > 0 (T={T}, h={h}, tau={tau})")
        n = _whole_ratio(T, h)
        if n is None:
            raise GridError(f"T/h must be an integer (T={T}, h={h})")
        m = _whole_ratio(tau, h)
        if m is None:
            raise DelayMisaligned(f"tau/h must be a positive integer (tau={tau}, h={h})")
        return cls(T=float(T), h=float(h), n_steps=n, m=m)

    @property
    def tau(self) -> float:
        return self.m * self.h

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.h

    def coarsen(self, factor: int) -> "GridSpec":
        if factor < 1 or self.n_steps % factor:
            raise NonDivisibleFactor(
                f"factor {factor} does not divide the {self.n_steps} grid steps"
            )
        if self.m % factor:
            raise DelayMisaligned(f"coarse step {factor}h does not divide tau (m={self.m})")
        return GridSpec(T=self.T, h=self.h * factor, n_steps=self.n_steps // factor,
                        m=self.m // factor)


@dataclass(frozen=True)
class SeedPolicy:
    master_seed: int
    path_index: int = 0


def path_rng(seed: SeedPolicy) -> np.random.Generator:
    if seed.master_seed < 0 or seed.path_index < 0:
        raise ValueError("master_seed and path_index must be nonnegative")
    ss = np.random.SeedSequence(seed.master_seed, spawn_key=(seed.path_index,))
    return np.random.default_rng(ss)


@dataclass(frozen=True, eq=False)
class IncrementTable:
    """Per-step increments ΔW_n and ΔN_n on ``grid``.

    ``dW`` and ``dN`` are either 1-d (one path) or 2-d with one row per path;
    the last axis always runs over the ``grid.n_steps`` steps.
    """

    grid: GridSpec
    dW: np.ndarray
    dN: np.ndarray
    beta: float

    def __post_init__(self):
        if self.dW.shape != self.dN.shape or self.dW.shape[-1] != self.grid.n_steps:
            raise GridError(
                f"increment shapes {self.dW.shape}, {self.dN.shape} do not match "
                f"{self.grid.n_steps} steps"
            )

    @property
    def dN_tilde(self) -> np.ndarray:
        """Compensated increments ΔÑ_n = ΔN_n - beta h."""
        return self.dN - self.beta * self.grid.h

    @property
    def n_paths(self) -> int:
        return 1 if self.dW.ndim == 1 else self.dW.shape[0]

    def row(self, i: int) -> "IncrementTable":
        return IncrementTable(self.grid, self.dW[i], self.dN[i], self.beta)


def _draw(rng: np.random.Generator, grid: GridSpec, beta: float):
    z = rng.standard_normal(grid.n_steps) * np.sqrt(grid.h)
    dW = np.round(z / DW_QUANTUM) * DW_QUANTUM
    dN = rng.poisson(beta * grid.h, grid.n_steps).astype(np.int64)
    return dW, dN


def generate(grid: GridSpec, beta: float, seed: SeedPolicy) -> IncrementTable:
    """Draw one path's increments: ΔW_n ~ N(0, h), ΔN_n ~ Poisson(beta h)."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    dW, dN = _draw(path_rng(seed), grid, beta)
    return IncrementTable(grid, dW, dN, float(beta))


def generate_block(grid: GridSpec, beta: float, master_seed: int,
                   path_indices: Iterable[int]) -> IncrementTable:
    """Stack the tables of several paths; row ``i`` equals ``generate`` for that path."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    rows = [_draw(path_rng(SeedPolicy(master_seed, int(i))), grid, beta) for i in path_indices]
    dW = np.array([r[0] for r in rows]).reshape(-1, grid.n_steps)
    dN = np.array([r[1] for r in rows], dtype=np.int64).reshape(-1, grid.n_steps)
    return IncrementTable(grid, dW, dN, float(beta))


def _block_sum(a: np.ndarray, factor: int) -> np.ndarray:
    return a.reshape(a.shape[:-1] + (a.shape[-1] // factor, factor)).sum(axis=-1)


def aggregate(fine: IncrementTable, factor: int) -> IncrementTable:
    """Sum consecutive blocks of ``factor`` steps into one coarse step."""
    if int(factor) != factor or factor < 1:
        raise NonDivisibleFactor(f"factor must be a positive integer, got {factor}")
    factor = int(factor)
    grid = fine.grid.coarsen(factor)
    return IncrementTable(grid, _block_sum(fine.dW, factor), _block_sum(fine.dN, factor),
                          fine.beta)


def write_increments_csv(table: IncrementTable, fh) -> None:
    """Write a single-path table as ``step,dW,dN`` rows to an open text file."""
    if table.dW.ndim != 1:
        raise ValueError("write_increments_csv expects a single-path table")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["step", "dW", "dN"])
    for n, (dw, dn) in enumerate(zip(table.dW, table.dN)):
        w.writerow([n, f"{dw:.17g}", int(dn)])


def read_increments_csv(fh, grid: GridSpec, beta: float) -> IncrementTable:
    rows = list(csv.DictReader(fh))
    dW = np.array([float(r["dW"]) for r in rows])
    dN = np.array([int(r["dN"]) for r in rows], dtype=np.int64)
    return IncrementTable(grid, dW, dN, float(beta))
