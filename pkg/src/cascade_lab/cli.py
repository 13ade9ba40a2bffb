"""Command-line entry point: ``cascade-lab <command> [flags]``.

Every command writes a plot-ready CSV (or JSON) table.  Settings may come from
a JSON config file (``--config``); explicit flags override it.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import __version__
from .enumeration import (
    EnumerationCeilingError,
    default_threads,
    enumerate_metrics,
    expected_total_reward_exact,
    outcome_distribution,
    social_response_matrix,
)
from .model import Binary, Competitive, Condorcet, SignalModel
from .montecarlo import SimulationRun, estimate_metrics
from .rewards import (
    beta_sweep,
    cjt_accuracy,
    default_beta_grid,
    max_effective_beta,
    max_total_reward,
    expected_total_reward_formula,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INVALID = 2
EXIT_CEILING = 3

COMMANDS = ("accuracy", "distribution", "response", "sweep", "max-beta", "simulate", "budget", "figures")
SCHEMES = ("binary", "competitive", "condorcet")
# commands whose output depends on --scheme / --beta
SCHEME_COMMANDS = ("accuracy", "distribution", "response", "simulate")

HEADERS = {
    "distribution": ["k", "probability"],
    "response": ["n_a", "n_b", "p_choose_a"],
    "sweep": ["beta", "n", "collective_accuracy", "individual_accuracy"],
    "max-beta": ["q", "n", "beta_max"],
    "simulate": ["metric", "mean", "standard_error", "trials", "seed"],
    "budget": ["n", "q", "max_total", "expected_closed_form", "expected_enumerated"],
    "accuracy": [
        "n",
        "q",
        "epsilon",
        "scheme",
        "beta",
        "collective_accuracy",
        "individual_accuracy",
        "expected_total_reward",
    ],
}

FIGURE_FILES = ("fig1a.csv", "fig1b.csv", "fig2a.csv", "fig2b.csv", "fig2c.csv", "fig2d.csv")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    n: Tuple[int, ...] = (25,)
    q: Optional[Tuple[float, ...]] = None
    epsilon: Optional[Tuple[float, ...]] = None
    scheme: str = "binary"
    beta: Tuple[float, ...] = ()
    beta_min: float = 0.5
    beta_max: float = 8.0
    beta_steps: int = 60
    trials: int = 100_000
    seed: int = 0
    threads: int = field(default_factory=default_threads)
    out: Optional[str] = None
    format: str = "csv"
    tol: float = 1e-6

    def validate(self, command: str) -> "RunConfig":
        if (self.q is None) == (self.epsilon is None):
            raise ConfigError("exactly one of q and epsilon must be given")
        if not self.n or any(k < 1 for k in self.n):
            raise ConfigError("n must be a positive integer")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {', '.join(SCHEMES)}")
        if any(not (b > 0 and math.isfinite(b)) for b in self.beta):
            raise ConfigError("beta must be positive")
        if command in SCHEME_COMMANDS:
            if self.scheme == "competitive" and len(self.beta) != 1:
                raise ConfigError("scheme competitive requires exactly one beta")
            if self.scheme != "competitive" and self.beta:
                raise ConfigError(f"beta is only valid with scheme competitive, not {self.scheme}")
        if not (0 < self.beta_min < self.beta_max) or self.beta_steps < 1:
            raise ConfigError("beta grid needs 0 < beta-min < beta-max and beta-steps >= 1")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        self.models()
        return self

    def models(self) -> List[SignalModel]:
        try:
            if self.q is not None:
                return [SignalModel.from_q(v) for v in self.q]
            return [SignalModel.from_epsilon(v) for v in self.epsilon]
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def model(self) -> SignalModel:
        return self.models()[0]

    def reward_scheme(self):
        if self.scheme == "binary":
            return Binary()
        if self.scheme == "condorcet":
            return Condorcet()
        return Competitive(self.beta[0])


def _number(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text!r}") from None


def _integer(text) -> int:
    value = _number(text)
    if value != int(value):
        raise ConfigError(f"not an integer: {text!r}")
    return int(value)


def _list(value, conv) -> tuple:
    if isinstance(value, (list, tuple)):
        items = list(value)
    elif isinstance(value, str):
        items = [v for v in value.split(",") if v.strip()]
    else:
        items = [value]
    return tuple(conv(v) for v in items)


def _threads(value) -> int:
    if isinstance(value, str) and value.strip() == "auto":
        return os.cpu_count() or 1
    return _integer(value)


_CONVERTERS = {
    "n": lambda v: _list(v, _integer),
    "q": lambda v: _list(v, _number),
    "epsilon": lambda v: _list(v, _number),
    "scheme": lambda v: str(v).lower(),
    "beta": lambda v: _list(v, _number),
    "beta_min": _number,
    "beta_max": _number,
    "beta_steps": _integer,
    "trials": _integer,
    "seed": _integer,
    "threads": _threads,
    "out": str,
    "format": lambda v: str(v).lower(),
    "tol": _number,
}


def build_config(file_values: Dict, flag_values: Dict) -> RunConfig:
    cfg = RunConfig()
    for source in (file_values, flag_values):
        for key, value in source.items():
            key = key.replace("-", "_")
            if key not in _CONVERTERS:
                raise ConfigError(f"unknown setting {key!r}")
            if value is None:
                continue
            setattr(cfg, key, _CONVERTERS[key](value))
    # a signal given by flag replaces one from the config file
    if flag_values.get("q") is not None:
        cfg.epsilon = None
    if flag_values.get("epsilon") is not None:
        cfg.q = None
    return cfg


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".12g")
    return str(value)


def _json_value(value):
    if isinstance(value, float) and math.isfinite(value):
        return float(format(value, ".12g"))
    if isinstance(value, float):
        return fmt(value)
    return value


def render(columns: Sequence[str], rows: Sequence[Sequence], fmt_name: str, metadata: Dict) -> str:
    if fmt_name == "json":
        doc = {
            "metadata": {k: _json_value(v) for k, v in metadata.items()},
            "columns": list(columns),
            "rows": [{c: _json_value(v) for c, v in zip(columns, row)} for row in rows],
        }
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def _emit(text: str, out: Optional[str]):
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _metadata(cfg: RunConfig, command: str) -> Dict:
    model = cfg.model
    meta = {
        "command": command,
        "version": __version__,
        "q": model.q,
        "epsilon": model.epsilon,
        "Q": model.Q,
        "method": "monte_carlo" if command == "simulate" else "exact",
    }
    if command in SCHEME_COMMANDS:
        meta["scheme"] = cfg.scheme
        if cfg.scheme == "competitive":
            meta["beta"] = cfg.beta[0]
    if command == "simulate":
        meta["trials"] = cfg.trials
        meta["seed"] = cfg.seed
    return meta


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _sweep_grid(cfg: RunConfig) -> List[float]:
    grid = set(default_beta_grid(cfg.beta_min, cfg.beta_max, cfg.beta_steps))
    grid.update(cfg.beta)
    return sorted(grid)


def cmd_accuracy(cfg):
    model = cfg.model
    scheme = cfg.reward_scheme()
    beta = {"binary": 1.0, "condorcet": model.Q}.get(cfg.scheme) or cfg.beta[0]
    rows = []
    for n in cfg.n:
        m = enumerate_metrics(n, scheme, model, threads=cfg.threads)
        rows.append(
            [n, model.q, model.epsilon, cfg.scheme, beta, m.collective_accuracy, m.individual_accuracy, m.expected_total_reward]
        )
    return rows


def cmd_distribution(cfg):
    dist = outcome_distribution(cfg.n[0], cfg.reward_scheme(), cfg.model, threads=cfg.threads)
    return [[k, p] for k, p in enumerate(dist.probabilities)]


def cmd_response(cfg):
    mat = social_response_matrix(cfg.n[0], cfg.reward_scheme(), cfg.model, threads=cfg.threads)
    return [[a, b, p] for (a, b), p in sorted(mat.cells.items(), key=lambda kv: (kv[0][0] + kv[0][1], kv[0][0]))]


def cmd_sweep(cfg):
    rows = []
    grid = _sweep_grid(cfg)
    for n in cfg.n:
        res = beta_sweep(n, cfg.model, grid, threads=cfg.threads)
        rows.extend([b, n, c, i] for b, c, i in zip(res.betas, res.collective, res.individual))
    return rows


def cmd_max_beta(cfg):
    rows = []
    for model in cfg.models():
        for n in cfg.n:
            rows.append([model.q, n, max_effective_beta(n, model, tol=cfg.tol, threads=cfg.threads)])
    return rows


def cmd_simulate(cfg):
    run = SimulationRun(cfg.seed, cfg.trials, cfg.n[0], cfg.reward_scheme(), cfg.model)
    res = estimate_metrics(run, threads=cfg.threads)
    return [[name, est.mean, est.standard_error, est.trials, cfg.seed] for name, est in res.as_rows()]


def cmd_budget(cfg):
    rows = []
    for model in cfg.models():
        for n in cfg.n:
            closed = expected_total_reward_formula(n, model)
            enumerated = expected_total_reward_exact(n, Condorcet(), model, threads=cfg.threads)
            rows.append([n, model.q, max_total_reward(model), closed, enumerated])
            if abs(closed - enumerated) > 1e-9:
                print(
                    f"note: n={n} q={fmt(model.q)} closed-form expected reward {fmt(closed)} "
                    f"differs from enumerated payout {fmt(enumerated)} by {fmt(closed - enumerated)}",
                    file=sys.stderr,
                )
    return rows


def cmd_figures(cfg):
    """Regenerate the data behind every figure into the directory ``cfg.out``."""
    outdir = cfg.out or "figures"
    os.makedirs(outdir, exist_ok=True)
    model = cfg.model
    n_max = max(cfg.n)
    sizes = [n for n in range(3, n_max + 1, 2)]
    tables = {}

    mat = social_response_matrix(n_max, Binary(), model, threads=cfg.threads)
    tables["fig1a.csv"] = (
        HEADERS["response"],
        [[a, b, p] for (a, b), p in sorted(mat.cells.items(), key=lambda kv: (kv[0][0] + kv[0][1], kv[0][0]))],
    )

    social = outcome_distribution(n_max, Binary(), model, threads=cfg.threads)
    indep = outcome_distribution(n_max, Condorcet(), model, threads=cfg.threads)
    tables["fig1b.csv"] = (
        ["k", "probability_binary", "probability_independent"],
        [[k, a, b] for k, (a, b) in enumerate(zip(social.probabilities, indep.probabilities))],
    )

    grid = _sweep_grid(cfg)
    sweeps = [beta_sweep(n, model, grid, threads=cfg.threads) for n in sizes]
    tables["fig2a.csv"] = (
        ["beta", "n", "collective_accuracy"],
        [[b, s.n, c] for s in sweeps for b, c in zip(s.betas, s.collective)],
    )
    tables["fig2b.csv"] = (
        ["beta", "n", "individual_accuracy"],
        [[b, s.n, i] for s in sweeps for b, i in zip(s.betas, s.individual)],
    )
    tables["fig2c.csv"] = (
        ["n", "collective_condorcet", "collective_binary", "cjt_accuracy"],
        [
            [
                n,
                enumerate_metrics(n, Condorcet(), model, threads=cfg.threads).collective_accuracy,
                enumerate_metrics(n, Binary(), model, threads=cfg.threads).collective_accuracy,
                cjt_accuracy(n, model.q),
            ]
            for n in sizes
        ],
    )
    q_grid = cfg.q if cfg.q is not None and len(cfg.q) > 1 else (0.55, 0.6, 2 / 3, 0.7, 0.75, 0.8, 0.85, 0.9)
    rows = []
    for qv in q_grid:
        mq = SignalModel.from_q(qv)
        for n in sizes:
            rows.append([mq.q, n, mq.Q, max_effective_beta(n, mq, tol=cfg.tol, threads=cfg.threads)])
    tables["fig2d.csv"] = (["q", "n", "beta_optimal", "beta_max"], rows)

    for name in FIGURE_FILES:
        columns, body = tables[name]
        _emit(render(columns, body, "csv", {}), os.path.join(outdir, name))
    return None


HANDLERS = {
    "accuracy": cmd_accuracy,
    "distribution": cmd_distribution,
    "response": cmd_response,
    "sweep": cmd_sweep,
    "max-beta": cmd_max_beta,
    "simulate": cmd_simulate,
    "budget": cmd_budget,
    "figures": cmd_figures,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cascade-lab", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--n", help="group size (comma-separated list where a command accepts several)")
    p.add_argument("--q", help="solo accuracy q in (0.5, 1); fractions like 2/3 accepted")
    p.add_argument("--epsilon", help="private-signal noise (alternative to --q)")
    p.add_argument("--scheme", help="binary | competitive | condorcet")
    p.add_argument("--beta", help="competition strength; for sweep, extra grid points")
    p.add_argument("--beta-min", dest="beta_min")
    p.add_argument("--beta-max", dest="beta_max")
    p.add_argument("--beta-steps", dest="beta_steps")
    p.add_argument("--trials")
    p.add_argument("--seed")
    p.add_argument("--threads", help="worker threads or 'auto' (default: $CASCADE_LAB_THREADS)")
    p.add_argument("--out", help="output file (directory for figures); stdout if omitted")
    p.add_argument("--format", help="csv | json")
    p.add_argument("--tol")
    p.add_argument("--version", action="version", version=__version__)
    return p


def _fail(code: int, kind: str, message: str) -> int:
    message = " ".join(str(message).split())
    print(f"error code={kind} message={json.dumps(message)}", file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = vars(make_parser().parse_args(argv))
        command = args.pop("command")
        config_path = args.pop("config")
        file_values = {}
        if config_path:
            try:
                with open(config_path, encoding="utf-8") as fh:
                    file_values = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {config_path}: {exc}") from None
            if not isinstance(file_values, dict):
                raise ConfigError("config file must hold a JSON object")
        cfg = build_config(file_values, args).validate(command)
        rows = HANDLERS[command](cfg)
        if rows is not None:
            _emit(render(HEADERS[command], rows, cfg.format, _metadata(cfg, command)), cfg.out)
            if cfg.out and cfg.format == "csv":
                meta = render([], [], "json", _metadata(cfg, command))
                _emit(meta, cfg.out + ".meta.json")
    except EnumerationCeilingError as exc:
        return _fail(EXIT_CEILING, "enumeration_ceiling", exc)
    except ConfigError as exc:
        return _fail(EXIT_INVALID, "invalid_config", exc)
    except ValueError as exc:
        return _fail(EXIT_INVALID, "invalid_argument", exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
