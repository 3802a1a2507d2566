"""Monte Carlo experiment harness: scenarios, replicates, aggregation, tables.

A replicate draws its own case-control sample and external summary, runs
step-one inference, optionally fits the weighted and unweighted networks,
and scores them against the true function.  Every stochastic stage consumes
an independent stream derived from (master_seed, replicate index, stage
tag), so experiments reproduce bit-for-bit at any worker count.

Replicate failures are data, not crashes: an error becomes a flagged row in
the aggregate so long experiments survive rare divergences.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import SplitSpec, SummarySpec, split_dataset
from .dgp import PopulationSpec, get_g, make_external_summary, sample_case_control, true_p1
from .errors import DomainError, ExperimentError
from .mlp import TrainConfig
from .pipeline import (
    GridSpec,
    evaluation_grid,
    fit,
    gamma_shift,
    network_predictor,
    relative_error,
)
from .proportion import DEFAULT_EPSILON, delta_variance
from .seeding import derive_seed

__all__ = [
    "Scenario",
    "ReplicationResult",
    "ReplicationSummary",
    "run_replication",
    "run_experiment",
    "emit_table",
    "replicate_rows",
]


@dataclass(frozen=True)
class Scenario:
    """Everything one Monte Carlo experiment needs, JSON-serializable."""

    g_tag: str
    n1: int
    n0: int
    n_e: int = 2000
    h: SummarySpec = field(default_factory=lambda: SummarySpec.coordinate(0))
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    grid: GridSpec = field(default_factory=GridSpec)
    train_config: TrainConfig = field(default_factory=TrainConfig)
    replications: int = 20
    master_seed: int = 0
    epsilon: float = DEFAULT_EPSILON
    fast_path: bool = False
    fit_unweighted: bool = True
    eval_points: int = 200
    oracle_draws: int = 10_000_000

    def __post_init__(self):
        object.__setattr__(self, "split", tuple(float(f) for f in self.split))
        if self.replications < 1:
            raise DomainError("need at least one replication")
        g = get_g(self.g_tag)
        if self.h.j >= g.arity:
            raise DomainError(f"summary coordinate {self.h.j} out of range for {self.g_tag}")

    @classmethod
    def paper_default(cls, g_tag: str, n1: int, n0: int, **overrides) -> "Scenario":
        """80/20 split for univariate functions, 60/20/20 for multivariate."""
        arity = get_g(g_tag).arity
        split = (0.8, 0.2, 0.0) if arity == 1 else (0.6, 0.2, 0.2)
        return cls(g_tag=g_tag, n1=n1, n0=n0, split=split, **overrides)

    def to_dict(self) -> dict:
        return {
            "g_tag": self.g_tag,
            "n1": self.n1,
            "n0": self.n0,
            "n_e": self.n_e,
            "h": self.h.to_dict(),
            "split": list(self.split),
            "grid": self.grid.to_dict(),
            "train_config": self.train_config.to_dict(),
            "replications": self.replications,
            "master_seed": self.master_seed,
            "epsilon": self.epsilon,
            "fast_path": self.fast_path,
            "fit_unweighted": self.fit_unweighted,
            "eval_points": self.eval_points,
            "oracle_draws": self.oracle_draws,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        if "h" in d:
            d["h"] = SummarySpec.from_dict(d["h"])
        if "split" in d:
            d["split"] = tuple(d["split"])
        if "grid" in d:
            d["grid"] = GridSpec.from_dict(d["grid"])
        if "train_config" in d:
            d["train_config"] = TrainConfig.from_dict(d["train_config"])
        return cls(**d)


@dataclass(frozen=True)
class ReplicationResult:
    """Per-replicate metrics; ``error`` is set instead when a stage failed."""

    index: int
    p1_hat: float | None = None
    se: float | None = None
    ci: tuple[float, float] | None = None
    covered: bool | None = None
    re_weighted: float | None = None
    re_unweighted: float | None = None
    gamma_shift: float | None = None
    arch_weighted: tuple[int, int] | None = None
    arch_unweighted: tuple[int, int] | None = None
    runtime_s: float = 0.0
    error: str | None = None


@dataclass(frozen=True)
class ReplicationSummary:
    """Across-replicate aggregates for one scenario."""

    scenario: Scenario
    true_p1: float
    n_replicates: int
    n_failed: int
    mean_p1_hat: float
    sd_p1_hat: float
    mean_se: float
    coverage: float
    mean_re_weighted: float | None
    sd_re_weighted: float | None
    mean_re_unweighted: float | None
    sd_re_unweighted: float | None
    mean_gamma_shift: float | None
    sd_gamma_shift: float | None
    median_gamma_shift: float | None
    results: tuple[ReplicationResult, ...] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "true_p1": self.true_p1,
            "n_replicates": self.n_replicates,
            "n_failed": self.n_failed,
            "mean_p1_hat": self.mean_p1_hat,
            "sd_p1_hat": self.sd_p1_hat,
            "mean_se": self.mean_se,
            "coverage": self.coverage,
            "mean_re_weighted": self.mean_re_weighted,
            "sd_re_weighted": self.sd_re_weighted,
            "mean_re_unweighted": self.mean_re_unweighted,
            "sd_re_unweighted": self.sd_re_unweighted,
            "mean_gamma_shift": self.mean_gamma_shift,
            "sd_gamma_shift": self.sd_gamma_shift,
            "median_gamma_shift": self.median_gamma_shift,
        }


def run_replication(
    scenario: Scenario, index: int, true_p1_value: float | None = None
) -> ReplicationResult:
    """One seeded replicate; any stage error becomes a flagged result row."""
    start = time.perf_counter()
    seed = scenario.master_seed
    try:
        g = get_g(scenario.g_tag)
        pop = PopulationSpec(g)
        if true_p1_value is None:
            true_p1_value = true_p1(pop, scenario.oracle_draws).value

        sample = sample_case_control(
            pop, scenario.n1, scenario.n0, derive_seed(seed, "sample", index)
        )
        summary = make_external_summary(
            pop, scenario.h, scenario.n_e, derive_seed(seed, "summary", index)
        )
        prop = delta_variance(sample, scenario.h, summary, scenario.epsilon)
        covered = bool(prop.ci[0] <= true_p1_value <= prop.ci[1])

        if scenario.fast_path:
            return ReplicationResult(
                index=index,
                p1_hat=prop.p1_hat,
                se=prop.se,
                ci=prop.ci,
                covered=covered,
                runtime_s=time.perf_counter() - start,
            )

        train_part, val_part, test_part = split_dataset(
            sample, SplitSpec(scenario.split, derive_seed(seed, "split", index))
        )
        if val_part is None:
            raise DomainError("scenario split must reserve a validation fraction")

        config = replace(scenario.train_config, seed=derive_seed(seed, "fit", index))
        fit_w = fit(train_part, val_part, (prop.w1_hat, prop.w0_hat), scenario.grid, config)

        if test_part is not None:
            test_X = test_part.data.X
        elif g.arity == 1:
            test_X = evaluation_grid(scenario.eval_points)
        else:
            raise DomainError("multivariate scenarios need a nonzero test fraction")

        clamp = scenario.train_config.output_clamp
        pred_w = network_predictor(fit_w.network, clamp)
        re_w = relative_error(pred_w, g, test_X)

        re_u = arch_u = shift = None
        if scenario.fit_unweighted:
            fit_u = fit(train_part, val_part, (1.0, 1.0), scenario.grid, config)
            pred_u = network_predictor(fit_u.network, clamp)
            re_u = relative_error(pred_u, g, test_X)
            shift = gamma_shift(pred_w, pred_u, test_X)
            arch_u = (fit_u.depth, fit_u.width)

        return ReplicationResult(
            index=index,
            p1_hat=prop.p1_hat,
            se=prop.se,
            ci=prop.ci,
            covered=covered,
            re_weighted=re_w,
            re_unweighted=re_u,
            gamma_shift=shift,
            arch_weighted=(fit_w.depth, fit_w.width),
            arch_unweighted=arch_u,
            runtime_s=time.perf_counter() - start,
        )
    except Exception as exc:  # failure is data, not a crash of the batch
        return ReplicationResult(
            index=index, runtime_s=time.perf_counter() - start, error=f"{type(exc).__name__}: {exc}"
        )


def _run_task(args: tuple) -> ReplicationResult:
    scenario, index, truth = args
    return run_replication(scenario, index, true_p1_value=truth)


def _mean_sd(values: list[float]) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    if arr.size == 1:
        return float(arr[0]), 0.0  # SD of a singleton is 0 by convention
    return float(arr.mean()), float(arr.std(ddof=1))


def run_experiment(scenario: Scenario, workers: int = 1) -> ReplicationSummary:
    """Run all replicates (optionally in parallel) and aggregate.

    Results are keyed by replicate index, so the aggregate is independent of
    completion order and of the worker count.
    """
    truth = true_p1(PopulationSpec(get_g(scenario.g_tag)), scenario.oracle_draws).value
    tasks = [(scenario, i, truth) for i in range(scenario.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    results.sort(key=lambda r: r.index)

    ok = [r for r in results if r.error is None]
    if not ok:
        first = results[0].error if results else "no replicates"
        raise ExperimentError(
            f"all {len(results)} replicates failed; first error: {first}"
        )

    mean_p1, sd_p1 = _mean_sd([r.p1_hat for r in ok])
    mean_se, _ = _mean_sd([r.se for r in ok])
    coverage = float(np.mean([r.covered for r in ok]))

    re_w = [r.re_weighted for r in ok if r.re_weighted is not None]
    re_u = [r.re_unweighted for r in ok if r.re_unweighted is not None]
    shifts = [r.gamma_shift for r in ok if r.gamma_shift is not None]
    mean_re_w, sd_re_w = _mean_sd(re_w) if re_w else (None, None)
    mean_re_u, sd_re_u = _mean_sd(re_u) if re_u else (None, None)
    mean_g, sd_g = _mean_sd(shifts) if shifts else (None, None)
    median_g = float(np.median(shifts)) if shifts else None

    return ReplicationSummary(
        scenario=scenario,
        true_p1=truth,
        n_replicates=len(results),
        n_failed=len(results) - len(ok),
        mean_p1_hat=mean_p1,
        sd_p1_hat=sd_p1,
        mean_se=mean_se,
        coverage=coverage,
        mean_re_weighted=mean_re_w,
        sd_re_weighted=sd_re_w,
        mean_re_unweighted=mean_re_u,
        sd_re_unweighted=sd_re_u,
        mean_gamma_shift=mean_g,
        sd_gamma_shift=sd_g,
        median_gamma_shift=median_g,
        results=tuple(results),
    )


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def emit_table(
    summaries: list[ReplicationSummary], style: str = "table3", human: bool = False
) -> list[str]:
    """CSV lines (header first) in the layout of the paper's summary tables.

    ``table3``: per-scenario relative errors of the weighted and unweighted
    estimators.  ``table1``: function label and true proportion.  With
    ``human=True`` the table3 means carry the SD in brackets.
    """
    if not summaries:
        raise DomainError("emit_table needs at least one summary")
    if style == "table1":
        lines = ["type,form_label,true_p1"]
        for s in summaries:
            g = get_g(s.scenario.g_tag)
            lines.append(f"{g.tag},{g.label},{_fmt(s.true_p1)}")
        return lines
    if style != "table3":
        raise DomainError(f"unknown table style {style!r}")
    if human:
        lines = ["type,n0,n1,re_weighted,re_unweighted"]
        for s in summaries:
            lines.append(
                f"{s.scenario.g_tag},{s.scenario.n0},{s.scenario.n1},"
                f"{_fmt(s.mean_re_weighted)} ({_fmt(s.sd_re_weighted)}),"
                f"{_fmt(s.mean_re_unweighted)} ({_fmt(s.sd_re_unweighted)})"
            )
        return lines
    lines = [
        "type,n0,n1,mean_re_weighted,sd_re_weighted,mean_re_unweighted,sd_re_unweighted"
    ]
    for s in summaries:
        lines.append(
            f"{s.scenario.g_tag},{s.scenario.n0},{s.scenario.n1},"
            f"{_fmt(s.mean_re_weighted)},{_fmt(s.sd_re_weighted)},"
            f"{_fmt(s.mean_re_unweighted)},{_fmt(s.sd_re_unweighted)}"
        )
    return lines


def replicate_rows(results: tuple[ReplicationResult, ...]) -> list[str]:
    """CSV lines for the per-replicate detail file."""
    lines = [
        "index,p1_hat,se,ci_lo,ci_hi,covered,re_weighted,re_unweighted,"
        "gamma_shift,arch_weighted,arch_unweighted,runtime_s,error"
    ]
    for r in results:
        ci_lo = _fmt(r.ci[0]) if r.ci else ""
        ci_hi = _fmt(r.ci[1]) if r.ci else ""
        cov = "" if r.covered is None else int(r.covered)
        aw = f"{r.arch_weighted[0]}x{r.arch_weighted[1]}" if r.arch_weighted else ""
        au = f"{r.arch_unweighted[0]}x{r.arch_unweighted[1]}" if r.arch_unweighted else ""
        err = (r.error or "").replace(",", ";")
        lines.append(
            f"{r.index},{_fmt(r.p1_hat)},{_fmt(r.se)},{ci_lo},{ci_hi},{cov},"
            f"{_fmt(r.re_weighted)},{_fmt(r.re_unweighted)},{_fmt(r.gamma_shift)},"
            f"{aw},{au},{r.runtime_s:.3f},{err}"
        )
    return lines
