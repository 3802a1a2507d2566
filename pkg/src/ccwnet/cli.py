"""Command-line entry point wiring all modules together.

Exit codes: 0 success, 1 domain error (bad data, non-identifying summary,
divergence...), 2 usage or configuration error.  Structured output is JSON,
tabular output is CSV, and every file is written atomically (temp file +
rename) with a run manifest alongside recording inputs, seeds, versions and
wall time.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .data import CaseControlSample, SplitSpec, read_dataset_csv, split_dataset, write_dataset_csv
from .dgp import PopulationSpec, get_g, sample_case_control, true_p1
from .errors import CcwnetError
from .ingest import adult_schema, load_csv, preprocess, schema_from_dict
from .mlp import TrainConfig, network_from_dict, network_to_dict
from .pipeline import GridSpec, evaluation_grid, fit, gamma_shift, network_predictor, relative_error
from .proportion import ExternalSummary, delta_variance
from .replication import Scenario, emit_table, replicate_rows, run_experiment

__all__ = ["main", "entry", "build_parser"]


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {text}")
    return value


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".tmp-{os.getpid()}")
    try:
        tmp.write_text(text, encoding="utf-8", newline="\n")
        os.replace(tmp, path)
    finally:
        tmp.unlink(missing_ok=True)


def _write_manifest(directory: Path, subcommand: str, args: argparse.Namespace,
                    outputs: list[str], t0: float) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func" and not callable(v)}
    manifest = {
        "subcommand": subcommand,
        "args": {k: (list(v) if isinstance(v, tuple) else v) for k, v in resolved.items()},
        "versions": {
            "ccwnet": __version__,
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "wall_time_s": round(time.perf_counter() - t0, 3),
        "outputs": outputs,
    }
    _atomic_write(directory / "manifest.json", json.dumps(manifest, indent=2) + "\n")


def cmd_oracle(args) -> int:
    spec = PopulationSpec(get_g(args.g))
    result = true_p1(spec, oracle_draws=args.draws, seed=args.seed)
    print(json.dumps(result.to_dict()))
    return 0


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    g = get_g(args.g)
    spec = PopulationSpec(g)
    sample = sample_case_control(spec, args.n1, args.n0, args.seed)
    oracle = true_p1(spec, oracle_draws=args.draws, seed=0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "data.csv"
    tmp = csv_path.with_name(csv_path.name + f".tmp-{os.getpid()}")
    write_dataset_csv(sample.data, tmp)
    os.replace(tmp, csv_path)
    sidecar = {
        "tag": g.tag,
        "p": g.arity,
        "n1": args.n1,
        "n0": args.n0,
        "seed": args.seed,
        "true_p1": oracle.value,
    }
    _atomic_write(out / "meta.json", json.dumps(sidecar, indent=2) + "\n")
    _write_manifest(out, "simulate", args, ["data.csv", "meta.json"], t0)
    return 0


def _load_summary(path: str) -> ExternalSummary:
    with open(path, "r", encoding="utf-8") as fh:
        return ExternalSummary.from_dict(json.load(fh))


def cmd_estimate_prop(args) -> int:
    sample = CaseControlSample.from_dataset(read_dataset_csv(args.sample))
    summary = _load_summary(args.summary)
    estimate = delta_variance(sample, summary.h, summary, epsilon=args.epsilon)
    print(json.dumps(estimate.to_dict(), indent=2))
    return 0


def _train_config_from(args) -> TrainConfig:
    base = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            base = json.load(fh)
    config = TrainConfig.from_dict(base)
    overrides = {}
    if args.lr is not None:
        overrides["learning_rate"] = args.lr
    if args.epochs is not None:
        overrides["max_epochs"] = args.epochs
    if args.batch_size is not None:
        overrides["batch_size"] = args.batch_size
    overrides["seed"] = args.seed
    return replace(config, **overrides)


def cmd_train(args) -> int:
    t0 = time.perf_counter()
    sample = CaseControlSample.from_dataset(read_dataset_csv(args.sample))
    if args.summary:
        summary = _load_summary(args.summary)
        prop = delta_variance(sample, summary.h, summary, epsilon=args.epsilon)
        weights = (prop.w1_hat, prop.w0_hat)
    else:
        weights = (1.0, 1.0)
    config = _train_config_from(args)
    grid = GridSpec(depths=args.depths, widths=args.widths)
    val_fraction = args.val_fraction
    train_part, val_part, _ = split_dataset(
        sample, SplitSpec((1.0 - val_fraction, val_fraction, 0.0), seed=args.seed)
    )
    result = fit(train_part, val_part, weights, grid, config)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "depth": result.depth,
        "width": result.width,
        "validation_accuracy": result.validation_accuracy,
        "weighted": result.weighted,
        "w1": result.w1,
        "w0": result.w0,
        "network": network_to_dict(result.network),
        "history": [list(entry) for entry in result.history],
    }
    _atomic_write(out / "fit.json", json.dumps(payload) + "\n")
    outputs = ["fit.json"]
    if sample.data.p == 1:
        grid_X = evaluation_grid(200)
        g_hat = network_predictor(result.network, config.output_clamp)(grid_X)
        lines = []
        if args.truth:
            g_true = get_g(args.truth)(grid_X)
            lines.append("x,g_true,g_hat")
            for x, t, f in zip(grid_X[:, 0], g_true, g_hat):
                lines.append(f"{x!r},{t!r},{f!r}")
        else:
            lines.append("x,g_hat")
            for x, f in zip(grid_X[:, 0], g_hat):
                lines.append(f"{x!r},{f!r}")
        _atomic_write(out / "curve.csv", "\n".join(lines) + "\n")
        outputs.append("curve.csv")
    _write_manifest(out, "train", args, outputs, t0)
    return 0


def _load_fit_network(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return network_from_dict(payload["network"] if "network" in payload else payload)


def cmd_evaluate(args) -> int:
    t0 = time.perf_counter()
    net_w = _load_fit_network(args.fit_weighted)
    net_u = _load_fit_network(args.fit_unweighted)
    g = get_g(args.truth)
    test_X = read_dataset_csv(args.test).X
    pred_w = network_predictor(net_w)
    pred_u = network_predictor(net_u)
    payload = {
        "re_weighted": relative_error(pred_w, g, test_X),
        "re_unweighted": relative_error(pred_u, g, test_X),
        "gamma_shift": gamma_shift(pred_w, pred_u, test_X),
    }
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        _atomic_write(out / "evaluation.json", text + "\n")
        _write_manifest(out, "evaluate", args, ["evaluation.json"], t0)
    return 0


def cmd_replicate(args) -> int:
    t0 = time.perf_counter()
    with open(args.scenario, "r", encoding="utf-8") as fh:
        scenario = Scenario.from_dict(json.load(fh))
    overrides = {}
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.fast_path:
        overrides["fast_path"] = True
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if overrides:
        scenario = replace(scenario, **overrides)
    summary = run_experiment(scenario, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _atomic_write(out / "summary.json", json.dumps(summary.to_dict(), indent=2) + "\n")
    _atomic_write(out / "table.csv", "\n".join(emit_table([summary], style="table3")) + "\n")
    _atomic_write(out / "replicates.csv", "\n".join(replicate_rows(summary.results)) + "\n")
    _write_manifest(out, "replicate", args, ["summary.json", "table.csv", "replicates.csv"], t0)
    return 0


def cmd_ingest(args) -> int:
    t0 = time.perf_counter()
    if args.schema == "adult":
        schema = adult_schema()
    else:
        with open(args.schema, "r", encoding="utf-8") as fh:
            schema = schema_from_dict(json.load(fh))
    raw = load_csv(args.input, schema, missing_token=args.missing_token)
    dataset, report = preprocess(raw, schema)
    out_path = Path(args.output)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_name(out_path.name + f".tmp-{os.getpid()}")
    write_dataset_csv(dataset, tmp)
    os.replace(tmp, out_path)
    _atomic_write(Path(args.report), json.dumps(report.to_dict(), indent=2) + "\n")
    _write_manifest(out_path.parent, "ingest", args, [out_path.name, Path(args.report).name], t0)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccwnet",
        description=(
            "Two-step estimation of a nonparametric logistic model from "
            "case-control data with external summary information. Flags "
            "override config-file values, which override built-in defaults."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("oracle", help="true marginal case proportion for a benchmark g")
    p.add_argument("--g", required=True, help="function tag T1..T6")
    p.add_argument("--draws", type=_positive_int, default=10_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", help="draw a case-control sample from a benchmark g")
    p.add_argument("--g", required=True)
    p.add_argument("--n1", type=_positive_int, required=True)
    p.add_argument("--n0", type=_positive_int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=_positive_int, default=1_000_000,
                   help="oracle draws for the sidecar true_p1")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate-prop", help="step-one proportion inference")
    p.add_argument("--sample", required=True, help="dataset CSV")
    p.add_argument("--summary", required=True, help="external summary JSON")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.set_defaults(func=cmd_estimate_prop)

    p = sub.add_parser("train", help="grid-searched weighted (or unweighted) fit")
    p.add_argument("--sample", required=True)
    p.add_argument("--summary", help="external summary JSON; omit for the unweighted baseline")
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--depths", type=_int_list, default=(2, 3, 4))
    p.add_argument("--widths", type=_int_list, default=(64, 128))
    p.add_argument("--config", help="TrainConfig JSON")
    p.add_argument("--lr", type=float)
    p.add_argument("--epochs", type=_nonneg_int)
    p.add_argument("--batch-size", type=_nonneg_int)
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--truth", help="benchmark tag for the univariate curve CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="relative errors and gamma shift of two fits")
    p.add_argument("--fit-weighted", required=True)
    p.add_argument("--fit-unweighted", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--test", required=True, help="test points CSV (dataset format)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("replicate", help="Monte Carlo experiment from a scenario JSON")
    p.add_argument("--scenario", required=True)
    p.add_argument("--reps", type=_positive_int)
    p.add_argument("--workers", type=_positive_int,
                   default=int(os.environ.get("CCWNET_WORKERS", "1")))
    p.add_argument("--fast-path", action="store_true",
                   help="proportion inference only, no network training")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("ingest", help="schema-driven CSV preprocessing")
    p.add_argument("--schema", required=True, help="schema JSON path, or 'adult'")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="clean dataset CSV")
    p.add_argument("--report", required=True, help="preprocessing report JSON")
    p.add_argument("--missing-token", default="?")
    p.set_defaults(func=cmd_ingest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CcwnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except json.JSONDecodeError as exc:
        print(f"error: invalid JSON: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
