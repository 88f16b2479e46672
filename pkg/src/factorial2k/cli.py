"""Command-line interface.

Subcommands::

    analyze      point/interval estimates for one observed dataset
    sensitivity  association sweep for one effect, CSV + JSON output
    simulate     coverage study driven by a JSON config
    gen-cases    draw simulation populations to a CSV file

Every command is a pure function of its flags, input files, and seed:
reports carry no timestamps, floats are rounded reproducibly, and all
randomness funnels through the single ``--seed`` flag (a random seed is
drawn and echoed when the flag is absent).  Exit codes: 0 success, 2
validation failure, 3 resource limit.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, bayes, harness, neyman, sensitivity
from .assignment import ObservedData
from .design import build_model_matrix
from .errors import ResourceLimitError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RESOURCE = 3

JSON_SIG_DIGITS = 6
MAX_SEED = 2**64 - 1

# Stream keys: every RNG consumer gets a SeedSequence(seed, spawn_key=...)
# with a distinct tag so adding consumers never shifts existing streams.
_KEY_INDEP = 1
_KEY_SWEEP = 2


def _substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


def _round_sig(value):
    """Round floats (recursively through dicts/lists) to 6 significant digits."""
    if isinstance(value, float):
        if not math.isfinite(value):
            return value
        return float(f"{value:.{JSON_SIG_DIGITS}g}")
    if isinstance(value, dict):
        return {k: _round_sig(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_sig(v) for v in value]
    return value


def _emit_json(payload: dict, out: str | None) -> None:
    text = json.dumps(_round_sig(payload), indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _parse_seed(value: str | None) -> int:
    if value is None:
        return int(np.random.SeedSequence().entropy) & MAX_SEED
    seed = int(value)
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must fit in 64 bits, got {value}")
    return seed


def _parse_threads(value: int | None) -> int | None:
    if value is not None:
        if value < 1:
            raise ValueError("--threads must be at least 1")
        return value
    env = os.environ.get("FACTORIAL_THREADS")
    if env:
        threads = int(env)
        if threads < 1:
            raise ValueError("FACTORIAL_THREADS must be at least 1")
        return threads
    return None


def _parse_prior(alpha: str, beta: str, n_arms: int) -> bayes.PriorSpec:
    def parse(text: str, name: str) -> np.ndarray:
        parts = [p.strip() for p in text.split(",")]
        try:
            values = [float(p) for p in parts]
        except ValueError as exc:
            raise ValueError(f"--{name}: {exc}") from exc
        if len(values) == 1:
            values = values * n_arms
        if len(values) != n_arms:
            raise ValueError(f"--{name} needs 1 or {n_arms} values, got {len(values)}")
        return np.asarray(values)

    return bayes.PriorSpec(alpha=parse(alpha, "alpha"), beta=parse(beta, "beta"))


def parse_rho_grid(spec: str) -> np.ndarray:
    """Parse a sweep grid: ``start:stop:step`` (inclusive) or a comma list."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {spec!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"grid {spec!r} is empty or has nonpositive step")
        count = int(round((stop - start) / step)) + 1
        grid = np.round(start + step * np.arange(count), 12)
        grid = grid[grid <= stop + 1e-12]
    else:
        grid = np.asarray([float(p) for p in spec.split(",")])
    if grid.size == 0:
        raise ValueError(f"grid {spec!r} is empty")
    if (grid < 0).any() or (grid >= 1).any():
        raise ValueError(f"grid values must lie in [0, 1), got {spec!r}")
    return grid


def _parse_effects(spec: str, n_effects: int) -> list[int]:
    if spec.strip().lower() == "all":
        return list(range(1, n_effects + 1))
    effects = [int(p) for p in spec.split(",")]
    for l in effects:
        if not 1 <= l <= n_effects:
            raise ValueError(f"effect {l} outside 1..{n_effects}")
    return effects


def load_analysis_input(path: str) -> tuple[ObservedData, str | None]:
    """Load observed data from a JSON file {"K":, "n":, "n_obs":, "label"?:}."""
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: input must be a JSON object")
    unknown = set(raw) - {"K", "n", "n_obs", "label"}
    if unknown:
        raise ValueError(f"{path}: unknown keys {sorted(unknown)}")
    missing = {"K", "n", "n_obs"} - set(raw)
    if missing:
        raise ValueError(f"{path}: missing keys {sorted(missing)}")
    try:
        obs = ObservedData(k=int(raw["K"]), n=np.asarray(raw["n"]), n_obs=np.asarray(raw["n_obs"]))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{path}: {exc}") from exc
    return obs, raw.get("label")


def load_analysis_input_csv(path: str) -> tuple[ObservedData, str | None]:
    """Load observed data from CSV rows of ``arm,size,successes``."""
    per_arm: dict[int, tuple[int, int]] = {}
    with open(path, newline="") as handle:
        for row_no, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not f.strip() for f in row):
                continue
            if row_no == 1 and not row[0].strip().lstrip("-").isdigit():
                continue  # header row
            if len(row) != 3:
                raise ValueError(f"{path}: row {row_no}: expected arm,size,successes")
            try:
                arm, size, successes = (int(f) for f in row)
            except ValueError as exc:
                raise ValueError(f"{path}: row {row_no}: {exc}") from exc
            if arm in per_arm:
                raise ValueError(f"{path}: row {row_no}: duplicate arm {arm}")
            per_arm[arm] = (size, successes)
    n_arms = len(per_arm)
    if n_arms == 0 or sorted(per_arm) != list(range(1, n_arms + 1)):
        raise ValueError(f"{path}: arms must be exactly 1..J, got {sorted(per_arm)}")
    k = n_arms.bit_length() - 1
    if 2**k != n_arms:
        raise ValueError(f"{path}: number of arms must be a power of 2, got {n_arms}")
    n = np.asarray([per_arm[j][0] for j in range(1, n_arms + 1)])
    n_obs = np.asarray([per_arm[j][1] for j in range(1, n_arms + 1)])
    return ObservedData(k=k, n=n, n_obs=n_obs), None


def _load_input(args) -> tuple[ObservedData, str | None]:
    if args.from_csv:
        return load_analysis_input_csv(args.from_csv)
    return load_analysis_input(args.input)


def _interval_dict(report: neyman.IntervalReport, point_key: str = "point") -> dict:
    return {
        point_key: report.point,
        "variance": report.variance,
        "lower": report.lower,
        "upper": report.upper,
    }


def cmd_analyze(args) -> int:
    obs, label = _load_input(args)
    matrix = build_model_matrix(obs.k)
    prior = _parse_prior(args.alpha, args.beta, obs.n_arms)
    seed = _parse_seed(args.seed)
    effects = _parse_effects(args.effects, obs.n_arms - 1)
    grid = parse_rho_grid(args.rho_grid) if args.rho_grid else None

    rows = []
    for l in effects:
        ney = neyman.confidence_interval(obs, matrix, l, args.level)
        cred = bayes.credible_interval(
            obs, matrix, l, prior, args.draws, args.level, _substream(seed, _KEY_INDEP, l)
        )
        row = {
            "effect": l,
            "neyman": _interval_dict(ney),
            "bayes_indep": _interval_dict(cred, point_key="mean"),
        }
        if grid is not None:
            result = sensitivity.sweep(
                obs, matrix, l, prior, grid, args.sweep_draws, args.level,
                _substream(seed, _KEY_SWEEP, l),
            )
            row["sensitivity"] = {
                "draws_per_rho": args.sweep_draws,
                "conservative": _sweep_row(result.conservative),
                "intervals": [_sweep_row(r) for r in result.reports],
            }
        rows.append(row)

    _emit_json(
        {
            "tool": "factorial2k",
            "version": __version__,
            "command": "analyze",
            "input": _input_echo(obs, label),
            "level": args.level,
            "draws": args.draws,
            "prior": {"alpha": prior.alpha.tolist(), "beta": prior.beta.tolist()},
            "seed": seed,
            "effects": rows,
        },
        args.out,
    )
    return EXIT_OK


def _sweep_row(report: neyman.IntervalReport) -> dict:
    return {
        "rho": report.rho,
        "lower": report.lower,
        "upper": report.upper,
        "width": report.width,
    }


def _input_echo(obs: ObservedData, label: str | None) -> dict:
    echo = {"K": obs.k, "n": obs.n.tolist(), "n_obs": obs.n_obs.tolist()}
    if label is not None:
        echo["label"] = label
    return echo


def load_gamma_csv(path: str, n_arms: int) -> sensitivity.GammaStructure:
    """Read a custom JxJ association matrix from CSV."""
    rows = []
    with open(path, newline="") as handle:
        for row_no, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not f.strip() for f in row):
                continue
            try:
                rows.append([float(f) for f in row])
            except ValueError as exc:
                raise ValueError(f"{path}: row {row_no}: {exc}") from exc
    matrix = np.asarray(rows, dtype=np.float64)
    if matrix.shape != (n_arms, n_arms):
        raise ValueError(f"{path}: expected a {n_arms}x{n_arms} matrix, got {matrix.shape}")
    return sensitivity.gamma_custom(matrix)


def cmd_sensitivity(args) -> int:
    obs, label = _load_input(args)
    matrix = build_model_matrix(obs.k)
    prior = _parse_prior(args.alpha, args.beta, obs.n_arms)
    seed = _parse_seed(args.seed)
    rng = _substream(seed, _KEY_SWEEP, args.effect)

    payload = {
        "tool": "factorial2k",
        "version": __version__,
        "command": "sensitivity",
        "input": _input_echo(obs, label),
        "effect": args.effect,
        "level": args.level,
        "prior": {"alpha": prior.alpha.tolist(), "beta": prior.beta.tolist()},
        "seed": seed,
    }
    if args.gamma_csv:
        structure = load_gamma_csv(args.gamma_csv, obs.n_arms)
        reports = [_custom_gamma_interval(obs, matrix, prior, structure, args, rng)]
        payload.update(
            {
                "association": "custom",
                "draws": args.draws,
                "interval": _sweep_row(reports[0]),
            }
        )
        conservative = reports[0]
    else:
        grid = parse_rho_grid(args.grid)
        result = sensitivity.sweep(
            obs, matrix, args.effect, prior, grid, args.draws, args.level, rng
        )
        reports = result.reports
        conservative = result.conservative
        payload.update(
            {
                "association": "ar1",
                "draws_per_rho": args.draws,
                "grid_size": int(grid.size),
                "posterior_mean": conservative.point,
                "conservative": _sweep_row(conservative),
            }
        )

    with open(args.csv_out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["rho", "lower", "upper", "width"])
        for report in reports:
            rho = "" if report.rho is None else repr(report.rho)
            writer.writerow([rho, repr(report.lower), repr(report.upper), repr(report.width)])
    payload["sweep_csv"] = args.csv_out

    _emit_json(payload, args.out)
    return EXIT_OK


def _custom_gamma_interval(obs, matrix, prior, structure, args, rng) -> neyman.IntervalReport:
    if args.draws < bayes.MIN_INTERVAL_DRAWS:
        raise ValueError(f"need at least {bayes.MIN_INTERVAL_DRAWS} draws, got {args.draws}")
    if not 0.0 < args.level < 1.0:
        raise ValueError(f"credible level must be in (0,1), got {args.level}")
    pi = bayes.draw_marginals(obs, prior, rng, draws=args.draws)
    values = sensitivity.draw_effect(obs, matrix, args.effect, pi, structure, rng)
    lower, upper = np.quantile(values, [(1 - args.level) / 2, (1 + args.level) / 2])
    return neyman.IntervalReport(
        effect=args.effect,
        point=bayes.posterior_mean(obs, matrix, args.effect, prior),
        variance=float(np.var(values)),
        lower=float(lower),
        upper=float(upper),
        level=args.level,
        method="bayes-sensitivity",
        mc_draws=args.draws,
    )


def cmd_simulate(args) -> int:
    config = harness.StudyConfig.from_json(args.config)
    if args.cases:
        config = dataclasses.replace(config, cases=str(Path(args.cases).resolve()))
    report = harness.run_study(config, threads=_parse_threads(args.threads))
    report.write_csv(args.out_csv)
    payload = {
        "tool": "factorial2k",
        "version": __version__,
        "command": "simulate",
        "coverage_csv": args.out_csv,
        **report.aggregate_dict(),
    }
    _emit_json(payload, args.out)
    return EXIT_OK


def cmd_gen_cases(args) -> int:
    seed = _parse_seed(args.seed)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    cases = harness.generate_cases(args.count, args.total, args.cells, rng)
    with open(args.out, "w", newline="") as handle:
        for case in cases:
            handle.write(",".join(str(int(c)) for c in case.counts.counts) + "\n")
    _emit_json(
        {
            "tool": "factorial2k",
            "version": __version__,
            "command": "gen-cases",
            "cases": args.count,
            "total": args.total,
            "cells": args.cells,
            "seed": seed,
            "out": args.out,
        },
        None,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factorial2k",
        description="Finite-population causal inference for 2^K factorial designs with binary outcomes.",
    )
    parser.add_argument("--version", action="version", version=f"factorial2k {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input_flags(p):
        group = p.add_mutually_exclusive_group(required=True)
        group.add_argument("--input", help="JSON input file {\"K\":, \"n\":, \"n_obs\":}")
        group.add_argument("--from-csv", help="CSV input file with arm,size,successes rows")
        p.add_argument("--alpha", default="1", help="prior alpha (scalar or comma list per arm)")
        p.add_argument("--beta", default="1", help="prior beta (scalar or comma list per arm)")
        p.add_argument("--level", type=float, default=0.95, help="interval level (default 0.95)")
        p.add_argument("--seed", help="64-bit seed; random (and echoed) if omitted")
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("analyze", help="Neymanian and Bayesian intervals for each effect")
    add_input_flags(p)
    p.add_argument("--draws", type=int, default=200_000, help="posterior draws (default 200000)")
    p.add_argument("--effects", default="all", help='effect selector: "all" or comma list')
    p.add_argument("--rho-grid", help="optional association sweep grid, e.g. 0:0.99:0.01")
    p.add_argument(
        "--sweep-draws", type=int, default=50_000, help="draws per grid point (default 50000)"
    )
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sensitivity", help="association sweep for one effect")
    add_input_flags(p)
    p.add_argument("--effect", type=int, required=True, help="effect index (1-based)")
    p.add_argument("--grid", default="0:0.99:0.01", help="rho grid (default 0:0.99:0.01)")
    p.add_argument("--gamma-csv", help="custom JxJ association matrix (CSV) instead of the rho grid")
    p.add_argument("--draws", type=int, default=50_000, help="draws per grid point (default 50000)")
    p.add_argument("--csv-out", default="sensitivity.csv", help="sweep CSV path")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("simulate", help="run a coverage study from a JSON config")
    p.add_argument("--config", required=True, help="study config JSON")
    p.add_argument("--cases", help="override the config's case file")
    p.add_argument("--out-csv", default="coverage.csv", help="coverage CSV path")
    p.add_argument("--out", help="write the aggregate JSON here instead of stdout")
    p.add_argument("--threads", type=int, help="worker processes (default: all cores)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen-cases", help="draw simulation populations to CSV")
    p.add_argument("--count", type=int, default=100, help="number of cases (default 100)")
    p.add_argument("--total", type=int, default=800, help="units per case (default 800)")
    p.add_argument("--cells", type=int, default=16, help="cells per case: 4 or 16 (default 16)")
    p.add_argument("--seed", help="64-bit seed; random (and echoed) if omitted")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_gen_cases)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ResourceLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
