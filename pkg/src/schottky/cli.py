"""``schottky`` command line: every subcommand reads a JSON config and writes
JSON lines (one record per row, then a summary record)."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .experiments import (ConfigError, ExperimentConfig, PreconditionError, run_base_resonances,
                          run_cover_experiment, run_decomp_check, run_identity_suite, run_norm_trend, run_tangle_mc)
from .geometry import SchottkyError, validate_schottky
from .nonbacktracking import PathCapError
from .thermo import DepthError, hausdorff_dimension

EXIT_OK, EXIT_VALIDATION, EXIT_IDENTITY, EXIT_CAP = 0, 2, 3, 4


def _default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not serializable: {type(o)}")


def _keys_to_str(obj):
    if isinstance(obj, dict):
        return {str(k): _keys_to_str(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_keys_to_str(v) for v in obj]
    return obj


@contextmanager
def _sink(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


def _emit(fh, record):
    fh.write(json.dumps(_keys_to_str(record), default=_default) + "\n")


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    return cfg


def cmd_validate(args, fh):
    rep = validate_schottky(_config(args).data())
    _emit(fh, {"ok": rep.ok, "violations": rep.violations, "max_boundary_error": rep.max_boundary_error,
               "max_det_error": rep.max_det_error, "max_inverse_error": rep.max_inverse_error})
    return EXIT_OK if rep.ok else EXIT_VALIDATION


def cmd_dim(args, fh):
    cfg = _config(args)
    res = hausdorff_dimension(cfg.data(), args.depth or cfg.depth, args.tol or cfg.tol)
    _emit(fh, res.to_dict())
    return EXIT_OK


def cmd_resonances(args, fh):
    cfg = _config(args)
    rep, summary = run_base_resonances(cfg)
    if args.csv:
        Path(args.csv).write_text(rep.grid_csv())
    out = rep.to_dict(include_grid=args.out is not None)
    out["summary"] = summary
    _emit(fh, out)
    return EXIT_OK


def cmd_cover(args, fh):
    rows, summary = run_cover_experiment(_config(args), threads=args.threads)
    for r in rows:
        _emit(fh, r)
    _emit(fh, {"summary": summary})
    return EXIT_OK


def cmd_tangle(args, fh):
    _emit(fh, {"summary": run_tangle_mc(_config(args))})
    return EXIT_OK


def cmd_decomp(args, fh):
    rows = run_decomp_check(_config(args))
    for r in rows:
        _emit(fh, r)
    res = [r["decomposition_residual"] for r in rows if r["decomposition_residual"] is not None]
    _emit(fh, {"summary": {"samples": len(rows), "tangle_free": len(res), "max_residual": max(res) if res else None,
                           "max_conjugation_residual": max(r["conjugation_residual"] for r in rows)}})
    return EXIT_OK


def cmd_norm_trend(args, fh):
    rows, summary = run_norm_trend(_config(args))
    for r in rows:
        _emit(fh, r)
    _emit(fh, {"summary": summary})
    return EXIT_OK


def cmd_identity(args, fh):
    ledger = run_identity_suite(_config(args))
    for entry in ledger:
        _emit(fh, entry)
    ok = all(e["pass"] for e in ledger)
    _emit(fh, {"summary": {"checks": len(ledger), "failed": [e["check"] for e in ledger if not e["pass"]]}})
    return EXIT_OK if ok else EXIT_IDENTITY


COMMANDS = {
    "validate": cmd_validate,
    "dim": cmd_dim,
    "resonances": cmd_resonances,
    "cover": cmd_cover,
    "tangle-mc": cmd_tangle,
    "decomp-check": cmd_decomp,
    "norm-trend": cmd_norm_trend,
    "identity-suite": cmd_identity,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="schottky", description="Resonances of Schottky surfaces and random covers")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        q = sub.add_parser(name)
        q.add_argument("config", help="JSON experiment config")
        q.add_argument("--out", help="write JSON lines here instead of stdout")
        q.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
        q.add_argument("--threads", type=int, default=1)
        if name == "dim":
            q.add_argument("--depth", type=int)
            q.add_argument("--tol", type=float)
        if name == "resonances":
            q.add_argument("--csv", help="also write the determinant grid as CSV")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        with _sink(args.out) as fh:
            return COMMANDS[args.command](args, fh)
    except (ConfigError, PreconditionError, SchottkyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (PathCapError, DepthError) as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
