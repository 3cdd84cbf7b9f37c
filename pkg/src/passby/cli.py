"""Command-line front end: one run per invocation, artifacts into --out."""

from __future__ import annotations

import argparse
import sys
from typing import Any

from .pipeline import (
    EXIT_UNEXPECTED,
    ConfigError,
    PipelineConfig,
    StageError,
    exit_code_for,
    run_pipeline,
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="passby",
        description=(
            "Cluster windows of roadside audio into per-vehicle groups via a "
            "similarity graph, spectral embedding, and incremental reseeding."
        ),
    )
    p.add_argument("--config", help="JSON config file; explicit flags override its values")
    p.add_argument("--manifest", help="clip manifest CSV (path,label,start_s,duration_s); omit to synthesize input")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--window-len", type=int, dest="window_len", help="samples per analysis window")
    p.add_argument("--overlap", type=float, help="window overlap fraction in [0, 1)")
    p.add_argument("--taper", choices=["box", "hamming"], help="per-window taper")
    p.add_argument("--smoothing", type=int, dest="smoothing_len", help="odd moving-mean width over coefficients")
    p.add_argument("--m", type=int, help="number of spectral coefficients kept per window")
    p.add_argument("--knn", type=int, dest="neighbors", help="nearest-neighbor count of the graph")
    p.add_argument("--k", help="cluster count, or 'auto' to pick by eigenvalue gap")
    p.add_argument("--k-max", type=int, dest="k_max", help="largest k the auto selection considers")
    p.add_argument("--method", choices=["spectral", "incres", "incres-embedding", "both"])
    p.add_argument("--iterations", type=int, help="reseeding rounds")
    p.add_argument("--seed-rate", type=float, dest="seed_rate", help="seed budget growth rate per round")
    p.add_argument("--restarts", type=int, help="k-means restarts")
    p.add_argument("--seed", type=int, help="master RNG seed")
    return p


def _overrides(args: argparse.Namespace) -> dict[str, Any]:
    keys = (
        "manifest",
        "window_len",
        "overlap",
        "taper",
        "smoothing_len",
        "m",
        "neighbors",
        "k",
        "k_max",
        "method",
        "iterations",
        "seed_rate",
        "restarts",
        "seed",
    )
    out: dict[str, Any] = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
    if args.out is not None:
        out["out_dir"] = args.out
    if "k" in out and out["k"] != "auto":
        try:
            out["k"] = int(out["k"])
        except ValueError as exc:
            raise ConfigError(f"--k must be an integer or 'auto', got {out['k']!r}") from exc
    return out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        overrides = _overrides(args)
        if args.config is not None:
            cfg = PipelineConfig.from_file(args.config, overrides)
        else:
            cfg = PipelineConfig.from_dict(overrides)
        result = run_pipeline(cfg)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except ConfigError as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports everything
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc) if not isinstance(exc, KeyboardInterrupt) else EXIT_UNEXPECTED

    report = result.report
    k_info = report["k"]
    print(f"windows: {report['n_windows']} x {report['n_coefficients']} coefficients")
    estimated = k_info["estimated"]
    print(f"k: used {k_info['used']} (requested {k_info['requested']}, gap estimate {estimated})")
    for method, ev in sorted(report["methods"].items()):
        print(f"{method}: purity {ev['purity']:.4f}")
    print(f"artifacts: {result.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
