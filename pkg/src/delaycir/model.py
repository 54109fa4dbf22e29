"""Delay CIR model with multiplicative compensated-Poisson jumps.

The state follows

    dS(t) = lam (mu - S(t)) dt + sigma S(t - tau)^gamma sqrt(S(t)) dW(t)
            + delta S(t) dÑ(t),                 t >= 0
    S(t)  = xi(t),                              t in [-tau, 0]

where Ñ(t) = N(t) - beta t is a compensated Poisson process of intensity
``beta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import BadHistoryGrid, NonPositiveHistory, NonPositiveParameter, OutOfHistoryRange

__all__ = [
    "ModelParams",
    "InitialHistory",
    "validate",
    "history_at",
    "EXAMPLE_1",
    "EXAMPLE_2",
]

# relative slack used when grid times are matched against history nodes
_NODE_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the delay CIR model with jumps.

    Attributes
    ----------
    lam : float
        Mean-reversion speed (``lambda``), > 0.
    mu : float
        Long-run level, > 0.
    sigma : float
        Diffusion coefficient, >= 0 (zero gives the deterministic reduction).
    gamma : float
        Exponent applied to the delayed state, > 0.
    delta : float
        Jump coefficient, >= 0.
    beta : float
        Poisson intensity, >= 0.
    tau : float
        Delay length, > 0.
    """

    lam: float
    mu: float
    sigma: float
    gamma: float
    delta: float
    beta: float
    tau: float


@dataclass(frozen=True)
class InitialHistory:
    """Initial segment xi(t) on [-tau, 0].

    Use :meth:`constant` or :meth:`tabulated` rather than the raw constructor.
    Tabulated histories are piecewise constant and right-open: the level at
    ``t`` is the one attached to the greatest table time ``<= t``.
    """

    kind: str
    value: Optional[float] = None
    table: Optional[Tuple[Tuple[float, float], ...]] = None

    @classmethod
    def constant(cls, value: float) -> "InitialHistory":
        return cls(kind="constant", value=float(value))

    @classmethod
    def tabulated(cls, table: Sequence[Tuple[float, float]]) -> "InitialHistory":
        rows = tuple((float(t), float(v)) for t, v in table)
        return cls(kind="tabulated", table=rows)

    @property
    def initial_value(self) -> float:
        """xi(0)."""
        if self.kind == "constant":
            return self.value
        return self.table[-1][1]


EXAMPLE_1 = ModelParams(lam=5.0, mu=0.5, sigma=1.5, gamma=0.5, delta=1.0, beta=2.0, tau=1.0)
EXAMPLE_2 = ModelParams(lam=100.0, mu=5.0, sigma=2.0, gamma=1.0, delta=2.0, beta=4.0, tau=1.0)


def validate(params: ModelParams, history: InitialHistory) -> None:
    """Check the standing assumptions on ``params`` and ``history``.

    Returns ``None`` when everything holds and raises on the first violated
    constraint, checked in a fixed order (parameters, then history).

    Raises
    ------
    NonPositiveParameter
        lam, mu, gamma or tau not strictly positive, or sigma, delta or beta
        negative.
    NonPositiveHistory
        Some history level is <= 0.
    BadHistoryGrid
        A tabulated history does not run strictly increasing from -tau to 0.
    """
    for name in ("lam", "mu", "gamma", "tau"):
        v = getattr(params, name)
        if not (np.isfinite(v) and v > 0):
            raise NonPositiveParameter(f"{name} must be > 0, got {v}")
    for name in ("sigma", "delta", "beta"):
        v = getattr(params, name)
        if not (np.isfinite(v) and v >= 0):
            raise NonPositiveParameter(f"{name} must be >= 0, got {v}")

    if history.kind == "constant":
        if history.value is None or not (np.isfinite(history.value) and history.value > 0):
            raise NonPositiveHistory(f"history level must be > 0, got {history.value}")
        return
    if history.kind != "tabulated":
        raise BadHistoryGrid(f"unknown history kind {history.kind!r}")

    table = history.table or ()
    if len(table) == 0:
        raise BadHistoryGrid("tabulated history is empty")
    for _, v in table:
        if not (np.isfinite(v) and v > 0):
            raise NonPositiveHistory(f"history level must be > 0, got {v}")
    times = np.array([t for t, _ in table])
    if len(times) > 1 and np.any(np.diff(times) <= 0):
        raise BadHistoryGrid("history times must be strictly increasing")
    if times[0] != -params.tau or times[-1] != 0.0:
        raise BadHistoryGrid(
            f"history must span [-tau, 0] = [{-params.tau}, 0], got [{times[0]}, {times[-1]}]"
        )


def history_at(history: InitialHistory, t: float, tau: Optional[float] = None) -> float:
    """Evaluate xi(t).

    For a tabulated history the admissible range is the table span. A constant
    history only knows its range when ``tau`` is given; otherwise only
    ``t <= 0`` is enforced.
    """
    if history.kind == "constant":
        lo = -tau if tau is not None else -np.inf
        if not (lo <= t <= 0):
            raise OutOfHistoryRange(f"t={t} outside [{lo}, 0]")
        return history.value

    times = [row[0] for row in history.table]
    lo = times[0] if tau is None else -tau
    if not (lo <= t <= 0):
        raise OutOfHistoryRange(f"t={t} outside [{lo}, 0]")
    idx = int(np.searchsorted(times, t, side="right")) - 1
    return history.table[max(idx, 0)][1]


def history_on_grid(history: InitialHistory, h: float, m: int) -> np.ndarray:
    """Return xi(t_k) for k = -m, ..., 0 with t_k = k h.

    Grid times that miss a table node only by rounding are snapped onto it.
    """
    if history.kind == "constant":
        return np.full(m + 1, history.value)
    times = np.array([row[0] for row in history.table])
    levels = np.array([row[1] for row in history.table])
    tk = np.arange(-m, 1) * h
    tk[0], tk[-1] = times[0], 0.0
    slack = _NODE_TOL * max(1.0, m * h)
    idx = np.searchsorted(times, tk + slack, side="right") - 1
    return levels[np.clip(idx, 0, len(levels) - 1)]
