"""Command-line driver for the experiment suite.

Subcommands: phase, curve, converge, runtime, noise, doa. Each accepts
--config <path> (JSON with keyword arguments for the corresponding runner)
plus flag overrides. Exit codes: 0 success, 2 configuration error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import experiments
from .doa import SLAConfig
from .tensor_core import IllConditionedGramError


class ConfigError(ValueError):
    pass


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config file must hold a JSON object")
    return cfg


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with runner keyword arguments")
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV output path (a .json sidecar is written next to it)")
    p.add_argument("--split-k", type=int, dest="split_k")
    p.add_argument("--projection", help="off, auto, or a positive radius")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scalht",
        description="Low-rank Hankel tensor completion experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, descr in [
        ("phase", "success rate over an (s, m) grid"),
        ("curve", "success rate versus observation ratio"),
        ("converge", "iterations to reach error thresholds"),
        ("runtime", "wall time across problem scales"),
        ("noise", "recovery error versus SNR"),
        ("doa", "sparse-array DOA via completion + MUSIC"),
    ]:
        p = sub.add_parser(name, help=descr)
        _common_flags(p)
        if name == "doa":
            p.add_argument("--snr", type=float, help="single SNR point in dB")
            p.add_argument("--dropout", type=float)
    return parser


def _parse_projection(text: str | None):
    if text is None:
        return None
    if text == "off":
        return None
    if text == "auto":
        return "auto"
    try:
        val = float(text)
    except ValueError as exc:
        raise ConfigError(f"projection must be off, auto or a number, got {text!r}") from exc
    if val <= 0:
        raise ConfigError("projection radius must be positive")
    return val


def _assemble_kwargs(args: argparse.Namespace) -> dict:
    kwargs = _load_config(args.config)
    overrides = {
        "n": args.n, "s": args.s, "r": args.r, "eta": args.eta,
        "trials": args.trials, "seed": args.seed, "out": args.out,
    }
    for key, val in overrides.items():
        if val is not None:
            kwargs[key] = val
    if args.p is not None:
        kwargs["p"] = args.p
    if args.m is not None:
        kwargs["m"] = args.m
    if args.projection is not None:
        kwargs["projection"] = _parse_projection(args.projection)
    if args.split_k is not None:
        kwargs["split_k"] = args.split_k
    return kwargs


def _dispatch(args: argparse.Namespace) -> None:
    kwargs = _assemble_kwargs(args)
    cmd = args.command
    if cmd == "phase":
        if "m" in kwargs:
            kwargs["m_grid"] = (kwargs.pop("m"),)
        if "s" in kwargs:
            kwargs["s_grid"] = (kwargs.pop("s"),)
        kwargs.pop("p", None)
        rows = experiments.run_phase_transition(**kwargs)
    elif cmd == "curve":
        if "p" in kwargs:
            kwargs["p_grid"] = (kwargs.pop("p"),)
        kwargs.pop("m", None)
        rows = experiments.run_success_curve(**kwargs)
    elif cmd == "converge":
        if "p" in kwargs:
            kwargs["p_list"] = (kwargs.pop("p"),)
        kwargs.pop("m", None)
        table = experiments.run_convergence(**kwargs)
        for p, iters in table.items():
            print(f"p={p}: mean iterations to thresholds = "
                  + ", ".join(f"{v:.1f}" for v in iters))
        return
    elif cmd == "runtime":
        if "n" in kwargs:
            kwargs["n_grid"] = (kwargs.pop("n"),)
        if "s" in kwargs:
            kwargs["s_grid"] = (kwargs.pop("s"),)
        kwargs.pop("m", None)
        kwargs.pop("p", None)
        rows = experiments.run_runtime(**kwargs)
    elif cmd == "noise":
        kwargs.pop("m", None)
        rows = experiments.run_noise_sweep(**kwargs)
    elif cmd == "doa":
        sla_kwargs = {}
        if "n" in kwargs:
            sla_kwargs["n"] = kwargs.pop("n")
        if "s" in kwargs:
            sla_kwargs["s"] = kwargs.pop("s")
        if getattr(args, "dropout", None) is not None:
            sla_kwargs["dropout"] = args.dropout
        for key in ("sensors", "angles_deg", "dropout"):
            if key in kwargs:
                sla_kwargs[key] = kwargs.pop(key)
        kwargs.pop("r", None)
        kwargs.pop("p", None)
        kwargs.pop("m", None)
        if getattr(args, "snr", None) is not None:
            kwargs["snr_grid"] = (args.snr,)
        if sla_kwargs.get("sensors") is not None:
            sla_kwargs["sensors"] = tuple(sla_kwargs["sensors"])
        if sla_kwargs.get("angles_deg") is not None:
            sla_kwargs["angles_deg"] = tuple(sla_kwargs["angles_deg"])
        kwargs["sla"] = SLAConfig(**sla_kwargs) if sla_kwargs else None
        rows = experiments.run_doa(**kwargs)
    else:  # pragma: no cover - argparse enforces the choices
        raise ConfigError(f"unknown command {cmd}")
    for row in rows:
        print(",".join(str(v) for v in row))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _dispatch(args)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IllConditionedGramError, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
