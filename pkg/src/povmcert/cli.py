"""Command-line front end: bounds, curves, simulation, certification.

Every invocation is deterministic for a fixed seed, and every file
artifact gets a sidecar manifest (<artifact>.manifest.json) recording
the command, parameters, seed, version, output list, and wall-clock
duration.  Data artifacts are byte-reproducible; the manifest is not
(it carries the duration).

Exit codes: 0 success (including "ran and said no" verdicts), 1
computation or write failure, 2 usage or parse errors.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .experiment import (
    ExperimentConfig,
    certify,
    counts_from_csv,
    counts_to_csv,
    ingest_counts,
    monte_carlo_systematic,
    sic_experiment,
    simulate_counts,
    trine_experiment,
)
from .fidelity import (
    EnvelopeCurve,
    sample_fidelity_curve,
    samples_to_csv,
    sic_target,
    trine_target,
)
from .optimize import (
    BoundResult,
    OptimizerConfig,
    projective_bound,
    projective_bound_numeric,
    seesaw_maximize,
    three_outcome_max,
)
from .robustness import visibility_curve, visibility_curve_to_csv
from .sampling import RngStream
from .witness import WITNESS_BUILDERS, build_witness

log = logging.getLogger(__name__)

FAMILIES = sorted(WITNESS_BUILDERS)
KINDS = ("projective", "three-outcome", "quantum")

# figure-scale defaults; CI-scale runs override with --samples
DEFAULT_SAMPLES = {"sic": 300_000, "trine": 3_000, "sym-trine": 3_000}

BUILTIN_EXPERIMENTS = {"sic": sic_experiment, "trine": trine_experiment}


def _apply_thread_limit(threads: int | None) -> None:
    # advisory: caps BLAS pools when threadpoolctl is available; the
    # toolkit itself is single-process vectorized numpy either way
    if threads is None:
        return
    os.environ.setdefault("OMP_NUM_THREADS", str(threads))
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(threads)
    except ImportError:
        log.debug("threadpoolctl not installed; --threads is only recorded")


def _out_dir(args: argparse.Namespace) -> Path:
    if args.out_dir is not None:
        return Path(args.out_dir)
    env = os.environ.get("POVMCERT_OUT_DIR")
    return Path(env) if env else Path(".")


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _emit_manifest(
    primary: Path, command: str, args: argparse.Namespace, outputs: list[Path], t0: float
) -> None:
    params = {
        k: v for k, v in sorted(vars(args).items()) if k != "func" and v is not None
    }
    manifest = {
        "command": command,
        "version": __version__,
        "seed": args.seed,
        "parameters": params,
        "outputs": [p.name for p in outputs],
        "duration_s": round(time.perf_counter() - t0, 3),
    }
    _write(primary.with_name(primary.name + ".manifest.json"), json.dumps(manifest, indent=2))


def _parse_kinds(text: str | None, witness: str) -> list[str]:
    if text is None:
        kinds = ["projective", "quantum"]
        if witness == "sic":
            kinds.insert(1, "three-outcome")
        return kinds
    kinds = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in kinds if t not in KINDS]
    if bad:
        raise ValueError(f"unknown bound kinds {bad}; choose from {list(KINDS)}")
    return kinds


def _parse_assignment(text: str | None) -> tuple[int, int] | None:
    if text is None:
        return None
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ValueError("assignment must be two comma-separated outcome indices")
    return (int(parts[0]), int(parts[1]))


def _parse_kgrid(text: str | None) -> list[float] | None:
    if text is None:
        return None
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError("k grid range must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError("k grid step must be positive")
        # round off accumulation drift so grid artifacts print cleanly
        return [round(float(k), 10) for k in np.arange(start, stop + step / 2, step)]
    return [float(p) for p in text.split(",") if p.strip()]


def _optimizer_config(args: argparse.Namespace) -> OptimizerConfig:
    return OptimizerConfig(restarts=args.restarts, seed=args.seed)


def _bounds_csv(results: list[BoundResult]) -> str:
    lines = ["kind,value,k,heuristic"]
    for b in results:
        lines.append(f"{b.kind},{b.value!r},{b.k!r},{int(b.heuristic)}")
    return "\n".join(lines) + "\n"


def _emit(args: argparse.Namespace, command: str, text: str, out_name: str | None, t0: float) -> None:
    """Print to stdout, or write the artifact plus manifest when named."""
    if out_name is None:
        print(text, end="" if text.endswith("\n") else "\n")
        return
    path = _out_dir(args) / out_name
    _write(path, text)
    _emit_manifest(path, command, args, [path], t0)
    print(str(path))


# ---------------------------------------------------------------- commands


def cmd_bounds(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    spec = build_witness(args.witness, args.k)
    config = _optimizer_config(args)
    kinds = _parse_kinds(args.kinds, args.witness)
    assignment = _parse_assignment(args.assignment)
    results: list[BoundResult] = []
    for kind in kinds:
        if kind == "projective":
            if assignment is not None:
                results.append(projective_bound_numeric(spec, config, assignment=assignment))
            else:
                results.append(projective_bound(spec, config))
        elif kind == "three-outcome":
            results.append(three_outcome_max(spec, config))
        else:
            results.append(seesaw_maximize(spec, config))
    if args.format == "csv":
        text = _bounds_csv(results)
    else:
        payload = {
            "witness": args.witness,
            "k": args.k,
            "bounds": [b.to_dict() for b in results],
        }
        text = json.dumps(payload, indent=2) + "\n"
    _emit(args, "bounds", text, args.out, t0)
    return 0


def cmd_fidelity_curve(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    spec = build_witness(args.witness, args.k)
    target = sic_target() if spec.scenario.povm_outcomes == 4 else trine_target()
    samples = args.samples if args.samples is not None else DEFAULT_SAMPLES[args.witness]
    points, envelope = sample_fidelity_curve(
        spec,
        target,
        n_samples=samples,
        bin_width=args.bin_width,
        stream=RngStream(args.seed),
        config=_optimizer_config(args),
        witness_restarts=args.witness_restarts,
        rotation_restarts=args.rotation_restarts,
    )
    stem = args.out or f"fidelity-{args.witness}-k{args.k:g}"
    out = _out_dir(args)
    samples_path = out / f"{stem}.samples.csv"
    envelope_path = out / f"{stem}.envelope.json"
    _write(samples_path, samples_to_csv(points))
    _write(envelope_path, envelope.to_json() + "\n")
    _emit_manifest(samples_path, "fidelity-curve", args, [samples_path, envelope_path], t0)
    print(str(samples_path))
    print(str(envelope_path))
    return 0


def _load_bounds_file(path: str) -> list[BoundResult]:
    data = json.loads(Path(path).read_text())
    entries = data["bounds"] if isinstance(data, dict) else data
    return [
        BoundResult(
            kind=d["kind"],
            value=float(d["value"]),
            k=float(d["k"]),
            heuristic=bool(d["heuristic"]),
            argmax=d.get("argmax"),
            diagnostics=d.get("diagnostics", {}),
        )
        for d in entries
    ]


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    if getattr(args, "config", None):
        return ExperimentConfig.from_json(Path(args.config).read_text())
    builder = BUILTIN_EXPERIMENTS.get(args.witness)
    if builder is None:
        raise ValueError(
            f"no built-in optical configuration for {args.witness!r}; pass --config"
        )
    cfg = builder()
    if getattr(args, "budget", None) is not None:
        cfg = dataclasses.replace(cfg, photon_budget=args.budget)
    return cfg


def cmd_certify(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    if args.format == "csv":
        raise ValueError("certify reports are JSON only")
    spec = build_witness(args.witness, args.k)
    records = counts_from_csv(Path(args.counts).read_text())
    table = ingest_counts(records)

    if args.bounds is not None:
        bounds = _load_bounds_file(args.bounds)
    else:
        config = _optimizer_config(args)
        bounds = [projective_bound(spec, config), seesaw_maximize(spec, config)]
        if spec.scenario.povm_outcomes == 4:
            bounds.insert(1, three_outcome_max(spec, config))

    envelope = None
    if args.envelope is not None:
        envelope = EnvelopeCurve.from_json(Path(args.envelope).read_text())

    syst = args.syst_err
    if args.syst_runs:
        cfg = _experiment_config(args)
        syst = monte_carlo_systematic(cfg, spec, args.syst_runs, RngStream(args.seed))

    report = certify(table, spec, bounds, envelope=envelope, syst_err=syst)
    _emit(args, "certify", report.to_json() + "\n", args.out, t0)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    spec = build_witness(args.witness, args.k)
    cfg = _experiment_config(args)
    records = simulate_counts(cfg, spec, RngStream(args.seed))
    name = args.out or f"counts-{args.witness}-k{args.k:g}.csv"
    path = _out_dir(args) / name
    _write(path, counts_to_csv(records))
    _emit_manifest(path, "simulate", args, [path], t0)
    print(str(path))
    return 0


def cmd_visibility_curve(args: argparse.Namespace) -> int:
    t0 = time.perf_counter()
    curve = visibility_curve(
        args.witness, args.kind, _parse_kgrid(args.kgrid), _optimizer_config(args)
    )
    if args.format == "json":
        text = json.dumps([dataclasses.asdict(p) for p in curve], indent=2) + "\n"
    else:
        text = visibility_curve_to_csv(curve)
    out_name = args.out or f"visibility-{args.witness}-{args.kind}.{args.format}"
    _emit(args, "visibility-curve", text, out_name, t0)
    return 0


# ------------------------------------------------------------------ parser


def _add_common(p: argparse.ArgumentParser, format_default: str = "json") -> None:
    # per-subparser, not a shared parent: parents=[...] would share the
    # action objects, so one subparser's set_defaults would leak to all
    p.add_argument("--seed", type=int, default=0, help="base RNG seed")
    p.add_argument("--out-dir", default=None, help="output directory (default: . or POVMCERT_OUT_DIR)")
    p.add_argument("--threads", type=int, default=None, help="advisory BLAS thread cap")
    p.add_argument("--format", choices=("json", "csv"), default=format_default, help="stdout/file format where both make sense")
    p.add_argument("--restarts", type=int, default=32, help="optimizer restarts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="povmcert",
        description="Certify and self-test qubit POVMs from prepare-and-measure statistics.",
    )
    parser.add_argument("--version", action="version", version=f"povmcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="witness bounds for one family and k")
    _add_common(p)
    p.add_argument("--witness", required=True, choices=FAMILIES)
    p.add_argument("--k", type=float, required=True, help="penalty weight")
    p.add_argument("--kinds", default=None, help="comma list from projective,three-outcome,quantum")
    p.add_argument("--assignment", default=None, help="restrict the projective bound to one outcome pair, e.g. 0,1")
    p.add_argument("--out", default=None, help="write JSON/CSV artifact instead of stdout")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("fidelity-curve", help="sampled (witness value, fidelity) scatter and envelope")
    _add_common(p)
    p.add_argument("--witness", required=True, choices=FAMILIES)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--samples", type=int, default=None, help="POVM samples (default: figure scale per family)")
    p.add_argument("--bin-width", type=float, default=0.002)
    p.add_argument("--witness-restarts", type=int, default=8)
    p.add_argument("--rotation-restarts", type=int, default=4)
    p.add_argument("--out", default=None, help="artifact stem (default fidelity-<witness>-k<k>)")
    p.set_defaults(func=cmd_fidelity_curve)

    p = sub.add_parser("certify", help="evaluate a counts file and issue verdicts")
    _add_common(p)
    p.add_argument("--counts", required=True, help="counts CSV (x,y,b,n)")
    p.add_argument("--witness", required=True, choices=FAMILIES)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--bounds", default=None, help="reuse a bounds JSON artifact instead of recomputing")
    p.add_argument("--envelope", default=None, help="envelope JSON for the fidelity estimate")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--syst-err", type=float, default=0.0, help="systematic error to subtract")
    group.add_argument("--syst-runs", type=int, default=0, help="estimate systematics by Monte Carlo with this many runs")
    p.add_argument("--config", default=None, help="experiment config JSON for --syst-runs")
    p.add_argument("--out", default=None, help="write report JSON instead of stdout")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("simulate", help="synthesize a counts file for the modeled setup")
    _add_common(p)
    p.add_argument("--witness", required=True, choices=FAMILIES)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--config", default=None, help="experiment config JSON (default: built-in published setup)")
    p.add_argument("--budget", type=float, default=None, help="override photon budget per setting")
    p.add_argument("--out", default=None, help="counts CSV name (default counts-<witness>-k<k>.csv)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("visibility-curve", help="critical visibility across penalty weights")
    _add_common(p, format_default="csv")
    p.add_argument("--witness", required=True, choices=FAMILIES)
    p.add_argument("--kind", required=True, choices=("projective", "three-outcome"))
    p.add_argument("--kgrid", default=None, help="comma list or start:stop:step (default 0.01:1:0.01)")
    p.add_argument("--out", default=None, help="CSV name (default visibility-<witness>-<kind>.csv)")
    p.set_defaults(func=cmd_visibility_curve)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _apply_thread_limit(args.threads)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (KeyError, json.JSONDecodeError) as exc:
        print(f"error: malformed input ({exc})", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # abort paths: optimizer failures, bugs
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
