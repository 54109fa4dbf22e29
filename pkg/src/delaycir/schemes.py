"""Balanced implicit and Euler-Maruyama steppers for the delay CIR jump model.

The balanced implicit method (BIM) adds a damping term ``C_n (s_n - s_{n+1})``
to the explicit update, with

    C_n = c0 h + C1(s_n, s_{n-m}) |ΔW_n| + c2 |ΔÑ_n|,
    C1  = sigma s_{n-m}^gamma / sqrt(max(s_n, epsilon)).

Solving for ``s_{n+1}`` gives the closed form used by :func:`bim_step`::

    s_{n+1} = s_n + [lam (mu - s_n) h + sigma s_{n-m}^gamma sqrt(s_n) ΔW_n
                     + delta s_n ΔÑ_n] / (1 + C_n)

With ``c0 >= lam`` and ``c2 >= delta`` the result is nonnegative whenever
``s_n >= epsilon``. Below ``epsilon`` that guarantee is lost; the path
integrator clamps a negative BIM value to zero and counts the event.

All step functions accept scalars or numpy arrays (one entry per path).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .driver import GridSpec, IncrementTable
from .errors import ControlError, DelayMisaligned, GridMismatch, NegativeState
from .model import InitialHistory, ModelParams, history_on_grid, validate

__all__ = [
    "BIM",
    "EULER",
    "DEFAULT_EPSILON",
    "ControlConfig",
    "DelayBuffer",
    "PathRecorder",
    "control_c1",
    "bim_step",
    "euler_step",
    "simulate_path",
    "simulate_paths",
]

BIM = "bim"
EULER = "euler"
SCHEMES = (BIM, EULER)

DEFAULT_EPSILON = 1e-3


@dataclass(frozen=True)
class ControlConfig:
    """Constants of the BIM control functions.

    ``c0`` weights the time step, ``c2`` weights ``|ΔÑ|`` and ``epsilon`` is the
    state level below which the ``|ΔW|`` weight stops growing like
    ``1/sqrt(s_n)``.
    """

    c0: float
    c2: float
    epsilon: float = DEFAULT_EPSILON

    def check(self, params: ModelParams) -> None:
        if not self.c0 >= params.lam:
            raise ControlError(f"c0 >= lambda required (c0={self.c0}, lambda={params.lam})")
        if not self.c2 >= params.delta:
            raise ControlError(f"c2 >= delta required (c2={self.c2}, delta={params.delta})")
        if not self.epsilon > 0:
            raise ControlError(f"epsilon must be > 0, got {self.epsilon}")


def _as_result(x):
    return float(x) if np.ndim(x) == 0 else x


def _require_nonnegative(**values):
    for name, v in values.items():
        if np.any(np.asarray(v) < 0):
            raise NegativeState(f"{name} must be >= 0")


def control_c1(s_n, s_delay, sigma, gamma, epsilon):
    """Diffusion control weight C1(s_n, s_{n-m}).

    ``sigma * s_delay**gamma / sqrt(epsilon)`` for ``s_n < epsilon`` and
    ``sigma * s_delay**gamma / sqrt(s_n)`` otherwise.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    _require_nonnegative(s_n=s_n, s_delay=s_delay)
    return _as_result(_c1(np.asarray(s_n, float), np.asarray(s_delay, float), sigma, gamma, epsilon))


def _c1(s_n, s_delay, sigma, gamma, epsilon):
    return sigma * np.power(s_delay, gamma) / np.sqrt(np.maximum(s_n, epsilon))


def _bim_update(s_n, s_delay, dW, dNt, p: ModelParams, ctrl: ControlConfig, h):
    vol = p.sigma * np.power(s_delay, p.gamma)
    c_n = (ctrl.c0 * h
           + vol / np.sqrt(np.maximum(s_n, ctrl.epsilon)) * np.abs(dW)
           + ctrl.c2 * np.abs(dNt))
    incr = p.lam * (p.mu - s_n) * h + vol * np.sqrt(s_n) * dW + p.delta * s_n * dNt
    return s_n + incr / (1.0 + c_n)


def _euler_update(s_n, s_delay, dW, dNt, p: ModelParams, h):
    vol = p.sigma * np.power(np.maximum(s_delay, 0.0), p.gamma)
    return (s_n + p.lam * (p.mu - s_n) * h + vol * np.sqrt(np.maximum(s_n, 0.0)) * dW
            + p.delta * s_n * dNt)


def bim_step(s_n, s_delay, dW, dN_tilde, params: ModelParams, ctrl: ControlConfig, h):
    """One balanced implicit step, returning s_{n+1}.

    Raises
    ------
    NegativeState
        If ``s_n`` or ``s_delay`` is negative; clamp before stepping.
    """
    _require_nonnegative(s_n=s_n, s_delay=s_delay)
    out = _bim_update(np.asarray(s_n, float), np.asarray(s_delay, float),
                      np.asarray(dW, float), np.asarray(dN_tilde, float), params, ctrl, h)
    return _as_result(out)


def euler_step(s_n, s_delay, dW, dN_tilde, params: ModelParams, h):
    """One Euler-Maruyama step; the result may be negative.

    The square root and the delay power are taken of ``max(., 0)``, so the
    step stays real-valued once a path has gone below zero.
    """
    out = _euler_update(np.asarray(s_n, float), np.asarray(s_delay, float),
                        np.asarray(dW, float), np.asarray(dN_tilde, float), params, h)
    return _as_result(out)


class DelayBuffer:
    """Ring of the last ``m + 1`` grid values, backed by the initial history.

    Slot ``k % (m + 1)`` holds ``s_k``. At step ``n`` the delayed value
    ``s_{n-m}`` sits in the slot that ``s_{n+1}`` overwrites next, so a ring of
    ``m + 1`` rows is enough.
    """

    def __init__(self, history_values: np.ndarray, n_paths: int):
        self.m = len(history_values) - 1
        self._history = np.asarray(history_values, float)
        self._ring = np.empty((self.m + 1, n_paths))

    def push(self, n: int, values) -> None:
        self._ring[n % (self.m + 1)] = values

    def delayed(self, n: int) -> np.ndarray:
        """Return s_{n-m}: a stored value when n >= m, else xi(t_{n-m})."""
        if n >= self.m:
            return self._ring[(n - self.m) % (self.m + 1)]
        return np.full(self._ring.shape[1], self._history[n])


@dataclass(frozen=True, eq=False)
class PathRecorder:
    """Grid values s_0..s_N of one simulated path plus event counters.

    ``negativity_events`` counts steps whose freshly computed value was
    negative (before any clamp). For BIM every such value is clamped to zero,
    so ``clamp_applied == negativity_events`` and ``values`` stays
    nonnegative; ``clamps_from_eps_regime`` counts the clamps whose preceding
    state was already ``>= epsilon``. Euler values are recorded unclamped.
    """

    scheme: str
    grid: GridSpec
    history: InitialHistory
    values: np.ndarray
    negativity_events: int = 0
    clamp_applied: int = 0
    clamps_from_eps_regime: int = 0

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def has_negative(self) -> bool:
        return self.negativity_events > 0


def _check_inputs(scheme, params, ctrl, grid, increments, history):
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    validate(params, history)
    if increments.grid != grid:
        raise GridMismatch("increment table was generated on a different grid")
    if grid.m < 1 or abs(grid.m * grid.h - params.tau) > 1e-9 * params.tau:
        raise DelayMisaligned(f"grid delay m*h={grid.m * grid.h} differs from tau={params.tau}")
    if scheme == BIM:
        if ctrl is None:
            raise ControlError("BIM needs a ControlConfig")
        ctrl.check(params)


def _integrate(scheme: str, params: ModelParams, ctrl: Optional[ControlConfig],
               grid: GridSpec, dW: np.ndarray, dN: np.ndarray, history: InitialHistory):
    """Integrate every row of (dW, dN) at once; returns arrays per path."""
    n_paths, n_steps = dW.shape
    h = grid.h
    dNt = dN - params.beta * h
    hist = history_on_grid(history, h, grid.m)

    out = np.empty((n_steps + 1, n_paths))
    out[0] = hist[-1]
    buf = DelayBuffer(hist, n_paths)
    buf.push(0, out[0])
    negatives = np.zeros(n_paths, dtype=np.int64)
    eps_clamps = np.zeros(n_paths, dtype=np.int64)

    # column access is contiguous after transposing once
    dW_t = np.ascontiguousarray(dW.T)
    dNt_t = np.ascontiguousarray(dNt.T)
    for n in range(n_steps):
        s = out[n]
        sd = buf.delayed(n)
        if scheme == BIM:
            nxt = _bim_update(s, sd, dW_t[n], dNt_t[n], params, ctrl, h)
            neg = nxt < 0
            if neg.any():
                negatives += neg
                eps_clamps += neg & (s >= ctrl.epsilon)
                nxt = np.where(neg, 0.0, nxt)
        else:
            nxt = _euler_update(s, sd, dW_t[n], dNt_t[n], params, h)
            negatives += nxt < 0
        out[n + 1] = nxt
        buf.push(n + 1, nxt)

    clamps = negatives if scheme == BIM else np.zeros(n_paths, dtype=np.int64)
    return np.ascontiguousarray(out.T), negatives, clamps, eps_clamps


def simulate_paths(scheme: str, params: ModelParams, ctrl: Optional[ControlConfig],
                   grid: GridSpec, increments: IncrementTable,
                   history: InitialHistory) -> List[PathRecorder]:
    """Simulate one path per row of a (possibly multi-path) increment table.

    Paths never interact, so row ``i`` of the result is bitwise identical to
    running :func:`simulate_path` on ``increments.row(i)``.
    """
    scheme = scheme.lower()
    _check_inputs(scheme, params, ctrl, grid, increments, history)
    dW = np.atleast_2d(increments.dW)
    dN = np.atleast_2d(increments.dN)
    values, neg, clamps, eps_clamps = _integrate(scheme, params, ctrl, grid, dW, dN, history)
    return [
        PathRecorder(scheme, grid, history, values[i], int(neg[i]), int(clamps[i]),
                     int(eps_clamps[i]))
        for i in range(values.shape[0])
    ]


def simulate_path(scheme: str, params: ModelParams, ctrl: Optional[ControlConfig],
                  grid: GridSpec, increments: IncrementTable,
                  history: InitialHistory) -> PathRecorder:
    """Iterate ``scheme`` ('bim' or 'euler') over a single-path increment table.

    ``ctrl`` may be ``None`` for Euler.
    """
    if increments.dW.ndim != 1:
        raise GridMismatch("simulate_path expects a single-path table; use simulate_paths")
    return simulate_paths(scheme, params, ctrl, grid, increments, history)[0]
