"""Command-line front end.

Usage::

    delaycir <command> --config FILE [--out FILE] [--threads N] [--seed S]

with ``command`` one of ``paths``, ``converge``, ``moments``, ``bond`` and
``barrier``. The configuration is a flat list of ``key = value`` lines;
``#`` starts a comment. Exit status is 0 on success, 1 for configuration
problems and 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from . import experiments
from .driver import GridSpec
from .errors import (ConfigError, ConfigSyntaxError, ConstraintViolation, DelayCIRError, ModelError,
                     NonPositiveParameter, UnknownKey)
from .model import InitialHistory, ModelParams, validate
from .observables import barrier_option_price, bond_price
from .schemes import BIM, DEFAULT_EPSILON, SCHEMES, ControlConfig

log = logging.getLogger("delaycir")

COMMANDS = ("paths", "converge", "moments", "bond", "barrier")

_FLOAT_KEYS = ("lambda", "mu", "sigma", "gamma", "delta", "beta", "tau", "xi",
               "c0", "c2", "epsilon", "T", "h", "h_ref", "K", "B")
_INT_KEYS = ("n_paths", "master_seed")
_LIST_KEYS = ("h_list", "p_list")
_STR_KEYS = ("scheme", "reference_scheme", "out")
_TABLE_KEYS = ("xi_table",)
KEYS = _FLOAT_KEYS + _INT_KEYS + _LIST_KEYS + _STR_KEYS + _TABLE_KEYS

_MODEL_KEYS = {"lam": "lambda", "mu": "mu", "sigma": "sigma", "gamma": "gamma",
               "delta": "delta", "beta": "beta", "tau": "tau"}


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    history: InitialHistory
    ctrl: ControlConfig
    scheme: str = BIM
    T: Optional[float] = None
    h: Optional[float] = None
    h_ref: Optional[float] = None
    h_list: Optional[Tuple[float, ...]] = None
    n_paths: Optional[int] = None
    master_seed: int = 0
    p_list: Optional[Tuple[float, ...]] = None
    K: Optional[float] = None
    B: Optional[float] = None
    reference_scheme: Optional[str] = None
    out: Optional[str] = None


# -- parsing -----------------------------------------------------------------

def _split_lines(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigSyntaxError(lineno, f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigSyntaxError(lineno, "empty key or value")
        if key not in KEYS:
            raise UnknownKey(key, lineno)
        if key in raw:
            raise ConfigSyntaxError(lineno, f"duplicate key {key!r}")
        raw[key] = (lineno, value)
    return raw


def _convert(key: str, lineno: int, value: str):
    try:
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _INT_KEYS:
            return int(value)
        if key in _LIST_KEYS:
            return tuple(float(v) for v in value.split(",") if v.strip())
        if key in _TABLE_KEYS:
            rows = []
            for item in value.split(","):
                t, v = item.split(":")
                rows.append((float(t), float(v)))
            return tuple(rows)
    except ValueError:
        raise ConfigSyntaxError(lineno, f"bad value for {key}: {value!r}") from None
    return value


def _need(values: dict, key: str):
    if key not in values:
        raise ConstraintViolation(key, "required")
    return values[key]


def parse_config(text: str) -> RunConfig:
    """Parse and validate a ``key = value`` configuration."""
    raw = _split_lines(text)
    v = {k: _convert(k, lineno, val) for k, (lineno, val) in raw.items()}

    params = ModelParams(**{f: _need(v, key) for f, key in _MODEL_KEYS.items()})
    if "xi" in v and "xi_table" in v:
        raise ConstraintViolation("xi_table", "give either xi or xi_table, not both")
    if "xi_table" in v:
        history = InitialHistory.tabulated(v["xi_table"])
    else:
        history = InitialHistory.constant(v.get("xi", 1.0))
    try:
        validate(params, history)
    except ModelError as exc:
        raise ConstraintViolation(_blame(exc, history), str(exc)) from None

    ctrl = ControlConfig(v.get("c0", params.lam), v.get("c2", params.delta),
                         v.get("epsilon", DEFAULT_EPSILON))
    if not ctrl.c0 >= params.lam:
        raise ConstraintViolation("c0", "c0 >= lambda")
    if not ctrl.c2 >= params.delta:
        raise ConstraintViolation("c2", "c2 >= delta")
    if not ctrl.epsilon > 0:
        raise ConstraintViolation("epsilon", "epsilon > 0")

    for key in ("scheme", "reference_scheme"):
        if key in v:
            v[key] = v[key].lower()
            if v[key] not in SCHEMES:
                raise ConstraintViolation(key, f"one of {', '.join(SCHEMES)}")

    cfg = RunConfig(
        params=params,
        history=history,
        ctrl=ctrl,
        scheme=v.get("scheme", BIM),
        T=v.get("T"),
        h=v.get("h"),
        h_ref=v.get("h_ref"),
        h_list=v.get("h_list"),
        n_paths=v.get("n_paths"),
        master_seed=v.get("master_seed", 0),
        p_list=v.get("p_list"),
        K=v.get("K"),
        B=v.get("B"),
        reference_scheme=v.get("reference_scheme"),
        out=v.get("out"),
    )
    _check_numbers(cfg)
    return cfg


def _blame(exc: ModelError, history: InitialHistory) -> str:
    if isinstance(exc, NonPositiveParameter):
        field = str(exc).split()[0]
        return _MODEL_KEYS.get(field, field)
    return "xi" if history.kind == "constant" else "xi_table"


def _integral_ratio(a: float, b: float) -> bool:
    k = round(a / b)
    return k >= 1 and abs(k * b - a) <= 1e-9 * abs(a)


def _check_numbers(cfg: RunConfig) -> None:
    tau = cfg.params.tau
    if cfg.T is not None and not cfg.T > 0:
        raise ConstraintViolation("T", "T > 0")
    if cfg.h is not None:
        if not 0 < cfg.h < 1:
            raise ConstraintViolation("h", "0 < h < 1")
        if not _integral_ratio(tau, cfg.h):
            raise ConstraintViolation("h", "tau/h integer")
        if cfg.T is not None and not _integral_ratio(cfg.T, cfg.h):
            raise ConstraintViolation("h", "T/h integer")
    if cfg.h_ref is not None:
        if not 0 < cfg.h_ref < 1:
            raise ConstraintViolation("h_ref", "0 < h_ref < 1")
        if not _integral_ratio(tau, cfg.h_ref):
            raise ConstraintViolation("h_ref", "tau/h_ref integer")
    if cfg.h_list is not None:
        if not cfg.h_list:
            raise ConstraintViolation("h_list", "non-empty")
        for h in cfg.h_list:
            if not 0 < h < 1:
                raise ConstraintViolation("h_list", "0 < h < 1")
            if not _integral_ratio(tau, h):
                raise ConstraintViolation("h_list", "tau/h integer")
            if cfg.h_ref is not None and not _integral_ratio(h, cfg.h_ref):
                raise ConstraintViolation("h_list", "h multiple of h_ref")
    if cfg.n_paths is not None and cfg.n_paths < 1:
        raise ConstraintViolation("n_paths", "n_paths >= 1")
    if cfg.master_seed < 0:
        raise ConstraintViolation("master_seed", "master_seed >= 0")
    if cfg.p_list is not None and any(not p > 0 for p in cfg.p_list):
        raise ConstraintViolation("p_list", "p > 0")
    if cfg.K is not None and not cfg.K >= 0:
        raise ConstraintViolation("K", "K >= 0")
    if cfg.B is not None and cfg.K is not None and not cfg.B > cfg.K:
        raise ConstraintViolation("B", "B > K")


def _fmt(x: float) -> str:
    return repr(float(x))


def render_config(cfg: RunConfig) -> str:
    """Inverse of :func:`parse_config`: ``parse_config(render_config(c)) == c``."""
    p = cfg.params
    lines = [f"{key} = {_fmt(getattr(p, field))}" for field, key in _MODEL_KEYS.items()]
    if cfg.history.kind == "constant":
        lines.append(f"xi = {_fmt(cfg.history.value)}")
    else:
        table = ", ".join(f"{_fmt(t)}:{_fmt(x)}" for t, x in cfg.history.table)
        lines.append(f"xi_table = {table}")
    lines += [f"c0 = {_fmt(cfg.ctrl.c0)}", f"c2 = {_fmt(cfg.ctrl.c2)}",
              f"epsilon = {_fmt(cfg.ctrl.epsilon)}", f"scheme = {cfg.scheme}",
              f"master_seed = {cfg.master_seed}"]
    for key in ("T", "h", "h_ref", "K", "B"):
        val = getattr(cfg, key)
        if val is not None:
            lines.append(f"{key} = {_fmt(val)}")
    for key in _LIST_KEYS:
        val = getattr(cfg, key)
        if val is not None:
            lines.append(f"{key} = {', '.join(_fmt(x) for x in val)}")
    for key in ("n_paths", "reference_scheme", "out"):
        val = getattr(cfg, key)
        if val is not None:
            lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


# -- commands ----------------------------------------------------------------

def _g(x: float) -> str:
    return format(float(x), ".17g")


def _require(cfg: RunConfig, command: str, *keys: str) -> None:
    for key in keys:
        if getattr(cfg, key) is None:
            raise ConstraintViolation(key, f"required for '{command}'")


def _grid(cfg: RunConfig) -> GridSpec:
    return GridSpec.from_step(cfg.T, cfg.h, cfg.params.tau)


def _ensemble(cfg: RunConfig, workers: int):
    return experiments.simulate_ensemble(cfg.scheme, cfg.params, cfg.ctrl, _grid(cfg),
                                         cfg.n_paths, cfg.master_seed, cfg.history, workers)


def _cmd_paths(cfg, writer, workers):
    _require(cfg, "paths", "T", "h", "n_paths")
    paths = _ensemble(cfg, workers)
    writer.writerow(["t"] + [f"path_{i}" for i in range(len(paths))])
    values = np.stack([p.values for p in paths], axis=1)
    for t, row in zip(paths[0].times, values):
        writer.writerow([_g(t)] + [_g(x) for x in row])
    census = experiments.census_of(paths)
    return (f"{len(paths)} {cfg.scheme} paths, {census.paths_with_negative_value} with negative "
            f"values, {census.clamp_events} clamps")


def _cmd_converge(cfg, writer, workers):
    _require(cfg, "converge", "T", "n_paths")
    h_ref = cfg.h_ref if cfg.h_ref is not None else 2.0 ** -11
    h_list = cfg.h_list if cfg.h_list is not None else experiments.default_h_list(h_ref)
    rep = experiments.convergence_study(cfg.params, cfg.ctrl, cfg.scheme, cfg.T, h_ref, h_list,
                                        cfg.n_paths, cfg.master_seed, cfg.history, workers,
                                        reference_scheme=cfg.reference_scheme)
    writer.writerow(["h", "strong_error", "std_error"])
    for h, e, se in rep.rows():
        writer.writerow([_g(h), _g(e), _g(se)])
    return f"fitted log-log slope {rep.slope:.4f} ({rep.n_paths} paths, h_ref={h_ref:g})"


def _cmd_moments(cfg, writer, workers):
    _require(cfg, "moments", "T", "h", "n_paths")
    if cfg.n_paths < 2:
        raise ConstraintViolation("n_paths", "n_paths >= 2 for 'moments'")
    study = experiments.moment_study(cfg.params, cfg.ctrl, cfg.scheme, cfg.h, cfg.T,
                                     cfg.n_paths, cfg.master_seed, cfg.history,
                                     cfg.p_list or (1, 2), workers)
    rep, bound = study.report, study.bound
    writer.writerow(["t", "mean", "second_moment", "mean_bound"])
    for i, t in enumerate(rep.times):
        b = _g(bound.values[i]) if bound.applicable else ""
        writer.writerow([_g(t), _g(rep.mean[i]), _g(rep.second_moment[i]), b])
    extra = ", ".join(f"max E|s|^{p:g}={rep.moments[p].max():.6g}"
                      for p in sorted(rep.moments))
    note = "" if bound.applicable else "; mean bound inapplicable (h >= 2/lambda)"
    return f"final mean {rep.mean[-1]:.6g} +/- {rep.mean_se[-1]:.2g}; {extra}{note}"


def _cmd_bond(cfg, writer, workers):
    _require(cfg, "bond", "T", "h", "n_paths")
    est, se = bond_price(_ensemble(cfg, workers), cfg.T)
    writer.writerow(["estimate", "std_error", "n_paths"])
    writer.writerow([_g(est), _g(se), cfg.n_paths])
    return f"bond price {est:.8g} +/- {se:.3g}"


def _cmd_barrier(cfg, writer, workers):
    _require(cfg, "barrier", "T", "h", "n_paths", "K", "B")
    est, se = barrier_option_price(_ensemble(cfg, workers), cfg.K, cfg.B, cfg.T)
    writer.writerow(["estimate", "std_error", "n_paths"])
    writer.writerow([_g(est), _g(se), cfg.n_paths])
    return f"up-and-out call {est:.8g} +/- {se:.3g}"


_HANDLERS = {
    "paths": _cmd_paths,
    "converge": _cmd_converge,
    "moments": _cmd_moments,
    "bond": _cmd_bond,
    "barrier": _cmd_barrier,
}


def run(command: str, cfg: RunConfig, out_path: str, workers: int = 1) -> str:
    """Run ``command`` and write its CSV to ``out_path``; returns the summary line.

    The file is written to a temporary sibling and moved into place only on
    success.
    """
    if command not in _HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    directory = os.path.dirname(os.path.abspath(out_path))
    fd, tmp = tempfile.mkstemp(prefix=".delaycir-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            summary = _HANDLERS[command](cfg, csv.writer(fh, lineterminator="\n"), workers)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return summary


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="delaycir", description=__doc__.split("\n\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="key = value configuration file")
    parser.add_argument("--out", help="CSV output path (default: config 'out' or <command>.csv)")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads; results do not depend on it")
    parser.add_argument("--seed", type=int, help="override master_seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
        if args.seed is not None:
            if args.seed < 0:
                raise ConstraintViolation("master_seed", "master_seed >= 0")
            cfg = dataclasses.replace(cfg, master_seed=args.seed)
        if args.threads < 1:
            raise ConstraintViolation("threads", "threads >= 1")
    except (ConfigError, OSError) as exc:
        print(f"delaycir: config error: {exc}", file=sys.stderr)
        return 1

    out_path = args.out or cfg.out or f"{args.command}.csv"
    try:
        summary = run(args.command, cfg, out_path, args.threads)
    except ConfigError as exc:
        print(f"delaycir: config error: {exc}", file=sys.stderr)
        return 1
    except (DelayCIRError, ValueError, OSError, FloatingPointError) as exc:
        print(f"delaycir: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
