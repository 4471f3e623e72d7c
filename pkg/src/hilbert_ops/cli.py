"""
Command-line harness.

    hilbert-ops <subcommand> [--config FILE] [--seed N] [--out DIR] [--param value ...]

Parameters resolve as defaults < JSON config file < command-line flags.
Every run writes ``metrics.json`` (schema ``hilbert-ops.metrics/1``) next to
its other artifacts. Exit codes: 0 success, 1 library error, 2 bad
configuration or usage.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import jsonschema
from threadpoolctl import threadpool_limits

from . import experiments, io
from .errors import HilbertOpsError

SCHEMA_VERSION = "hilbert-ops.metrics/1"


class ConfigError(Exception):
    pass


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


# name -> (default, type, validator or allowed choices, help)
COMMANDS: dict[str, dict] = {
    "basis": {
        "help": "analyze/synthesize round-trip, Parseval and projection report",
        "params": {
            "kind": ("fourier", str, ("fourier", "haar"), "basis family"),
            "n": (64, int, _positive, "grid size"),
            "m": (None, int, _positive, "basis size (default: n)"),
            "trials": (100, int, _positive, "random functions to test"),
        },
    },
    "krr": {
        "help": "kernel ridge regression fit, prediction and error report",
        "params": {
            "train": (None, str, None, "training CSV (features..., label); synthetic if omitted"),
            "n_train": (40, int, _positive, "synthetic training points"),
            "n_test": (200, int, _positive, "evaluation grid size"),
            "noise": (0.05, float, _nonneg, "synthetic label noise"),
            "kernel": ("rbf", str, ("rbf", "polynomial", "linear"), "kernel family"),
            "bandwidth": (0.1, float, _positive, "RBF bandwidth"),
            "degree": (3, int, _positive, "polynomial degree"),
            "offset": (1.0, float, _nonneg, "polynomial offset"),
            "lam": (1e-3, float, _nonneg, "ridge parameter"),
        },
    },
    "filter": {
        "help": "spectral low-pass multiplier or learnable threshold training",
        "params": {
            "mode": ("threshold", str, ("threshold", "lowpass"), "filter experiment"),
            "n": (32, int, _positive, "signal length"),
            "pairs": (20, int, _positive, "training pairs"),
            "theta0": (0.5, float, _positive, "initial threshold"),
            "lr": (0.5, float, _nonneg, "learning rate"),
            "steps": (2000, int, _nonneg, "gradient steps"),
            "cutoff": (8, int, _positive, "low-pass bins kept (k < cutoff)"),
        },
    },
    "scatter": {
        "help": "scattering coefficients export",
        "params": {
            "signal": (None, str, None, "signal CSV; random if omitted"),
            "n": (256, int, _positive, "random signal length"),
            "J": (4, int, _positive, "number of scales"),
            "order": (2, int, (0, 1, 2), "cascade depth"),
        },
    },
    "koopman": {
        "help": "EDMD fit, eigenvalue report and forecast errors",
        "params": {
            "system": ("lorenz", str, ("lorenz", "duffing", "linear"), "dynamical system"),
            "x0": (None, list, None, "initial state as a JSON list"),
            "dt": (0.01, float, _positive, "time step"),
            "steps": (2000, int, _positive, "integration steps"),
            "dictionary": ("monomials", str, ("identity", "monomials"), "observables"),
            "degree": (2, int, _positive, "monomial degree"),
            "lam": (0.0, float, _nonneg, "ridge parameter (0: pseudoinverse)"),
            "train_fraction": (0.75, float, lambda v: 0 < v <= 1, "share of snapshots used for fitting"),
            "horizon": (20, int, _positive, "forecast horizon"),
        },
    },
    "reason": {
        "help": "relation fitting, composition and analogy evaluation",
        "params": {
            "dim": (8, int, _positive, "relation embedding dimension"),
            "subjects": (24, int, _positive, "chain start entities"),
            "lam": (1e-6, float, _positive, "ridge parameter"),
            "entities": (50, int, lambda v: v >= 4, "analogy store size"),
            "analogy_dim": (32, int, _positive, "analogy embedding dimension"),
            "quadruples": (20, int, _positive, "analogy questions"),
            "noise": (0.01, float, _nonneg, "relative embedding noise"),
            "metric": ("euclidean", str, ("euclidean", "cosine"), "analogy distance"),
        },
    },
    "recover": {
        "help": "ISTA/FISTA sparse recovery trials and recovery-rate table",
        "params": {
            "trials": (20, int, _positive, "independent trials"),
            "n": (64, int, _positive, "signal length"),
            "m": (32, int, _positive, "measurements"),
            "k": (4, int, _positive, "sparsity"),
            "mu": (1e-4, float, _positive, "l1 weight"),
            "solver": ("fista", str, ("ista", "fista"), "proximal solver"),
            "max_iters": (20000, int, _positive, "iteration cap"),
            "tol": (1e-15, float, _nonneg, "objective-change stopping tolerance"),
        },
    },
    "gen-data": {
        "help": "write trajectories, embeddings or sparse instances",
        "params": {
            "kind": ("lorenz", str, ("lorenz", "duffing", "embeddings", "relations", "sparse"), "dataset"),
            "x0": (None, list, None, "initial state as a JSON list"),
            "dt": (0.01, float, _positive, "time step"),
            "steps": (2000, int, _positive, "integration steps"),
            "entities": (50, int, lambda v: v >= 4, "entities"),
            "dim": (32, int, _positive, "embedding dimension"),
            "quadruples": (20, int, _positive, "analogy questions"),
            "noise": (0.0, float, _nonneg, "relative embedding noise"),
            "n": (64, int, _positive, "sparse signal length"),
            "m": (32, int, _positive, "measurements"),
            "k": (4, int, _positive, "sparsity"),
        },
    },
}

RUNNERS = {
    "basis": experiments.run_basis,
    "krr": experiments.run_krr,
    "filter": experiments.run_filter,
    "scatter": experiments.run_scatter,
    "koopman": experiments.run_koopman,
    "reason": experiments.run_reason,
    "recover": experiments.run_recover,
    "gen-data": experiments.run_gen_data,
}


def _parse_list(text: str) -> list:
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = [float(v) for v in text.split(",")]
    if not isinstance(value, list):
        raise argparse.ArgumentTypeError(f"expected a list, got {text!r}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hilbert-ops", description="Hilbert-space operator learning experiments.")
    sub = parser.add_subparsers(dest="command", metavar="<subcommand>", required=True)
    for name, spec in COMMANDS.items():
        p = sub.add_parser(name, help=spec["help"], description=spec["help"])
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--seed", type=int, help="random seed (default 0)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        for key, (_, typ, choices, helptext) in spec["params"].items():
            kwargs = {"dest": key, "help": helptext, "default": None}
            kwargs["type"] = _parse_list if typ is list else typ
            if isinstance(choices, tuple):
                kwargs["choices"] = choices
            p.add_argument("--" + key.replace("_", "-"), **kwargs)
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    params = COMMANDS[command]["params"]
    cfg = {"seed": 0, **{k: v[0] for k, v in params.items()}}
    if args.config is not None:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {args.config} must hold a JSON object")
        unknown = sorted(set(loaded) - set(cfg))
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
        cfg.update(loaded)
    if args.seed is not None:
        cfg["seed"] = args.seed
    for key in params:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    _validate(command, cfg)
    return cfg


def _validate(command: str, cfg: dict) -> None:
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool) or cfg["seed"] < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {cfg['seed']!r}")
    for key, (_, typ, check, _) in COMMANDS[command]["params"].items():
        value = cfg[key]
        if value is None:
            continue
        if typ is float and isinstance(value, int) and not isinstance(value, bool):
            value = cfg[key] = float(value)
        if not isinstance(value, typ) or isinstance(value, bool):
            raise ConfigError(f"{key} must be of type {typ.__name__}, got {value!r}")
        if isinstance(check, tuple) and value not in check:
            raise ConfigError(f"{key} must be one of {check}, got {value!r}")
        if callable(check) and not check(value):
            raise ConfigError(f"{key}={value!r} is out of range")


def _schema() -> dict:
    return json.loads(resources.files("hilbert_ops").joinpath("schemas/metrics.schema.json").read_text())


def validate_report(report: dict) -> None:
    jsonschema.validate(report, _schema())


def write_report(command: str, cfg: dict, metrics: dict, out: Path) -> dict:
    artifacts = sorted(p.name for p in out.iterdir() if p.is_file() and p.name != "metrics.json")
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": cfg,
        "metrics": metrics,
        "artifacts": artifacts + ["metrics.json"],
    }
    validate_report(report)
    io.dump_json(report, out / "metrics.json")
    return report


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
    except ConfigError as exc:
        print(f"hilbert-ops: config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with threadpool_limits(limits=experiments.thread_limit()):
            metrics = RUNNERS[args.command](cfg, out)
        write_report(args.command, cfg, metrics, out)
    except (HilbertOpsError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"hilbert-ops: {args.command}: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1
    print(json.dumps(metrics, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
