"""Monte Carlo harness: determinism, failure handling, aggregation, tables."""

import dataclasses

import numpy as np
import pytest

from ccwnet import (
    DomainError,
    ExperimentError,
    GFunction,
    GridSpec,
    PopulationSpec,
    ReplicationResult,
    ReplicationSummary,
    Scenario,
    TrainConfig,
    derive_seed,
    emit_table,
    get_g,
    register_g,
    replicate_rows,
    run_experiment,
    run_replication,
    true_p1,
)

TINY_NET = dict(
    grid=GridSpec(depths=(1,), widths=(4,)),
    train_config=TrainConfig(max_epochs=40),
    oracle_draws=1_000_000,
)


def fast_scenario(**overrides) -> Scenario:
    base = dict(g_tag="T1", n1=100, n0=100, n_e=500, fast_path=True, replications=5,
                master_seed=7, split=(0.8, 0.2, 0.0))
    base.update(overrides)
    return Scenario(**base)


class TestScenario:
    def test_paper_default_split_by_arity(self):
        assert Scenario.paper_default("T1", 500, 500).split == (0.8, 0.2, 0.0)
        assert Scenario.paper_default("T5", 1000, 1000).split == (0.6, 0.2, 0.2)

    def test_json_round_trip(self):
        sc = Scenario.paper_default("T5", 1000, 1000, replications=3, master_seed=9)
        assert Scenario.from_dict(sc.to_dict()) == sc

    def test_summary_index_checked_against_arity(self):
        from ccwnet import SummarySpec

        with pytest.raises(DomainError):
            Scenario(g_tag="T1", n1=10, n0=10, h=SummarySpec.coordinate(3))


class TestRunReplication:
    def test_fast_path_determinism(self):
        sc = fast_scenario()
        a = run_replication(sc, 0, true_p1_value=0.316)
        b = run_replication(sc, 0, true_p1_value=0.316)
        assert dataclasses.replace(a, runtime_s=0.0) == dataclasses.replace(b, runtime_s=0.0)
        assert a.error is None and a.re_weighted is None

    def test_distinct_indices_differ(self):
        sc = fast_scenario()
        a = run_replication(sc, 0, true_p1_value=0.316)
        b = run_replication(sc, 1, true_p1_value=0.316)
        assert a.p1_hat != b.p1_hat

    def test_full_replicate_has_all_metrics(self):
        sc = Scenario.paper_default("T1", 60, 60, n_e=200, replications=1, master_seed=3,
                                    **TINY_NET)
        r = run_replication(sc, 0, true_p1_value=0.316)
        assert r.error is None
        assert r.re_weighted is not None and r.re_weighted >= 0
        assert r.re_unweighted is not None and r.gamma_shift is not None
        assert r.arch_weighted == (1, 4)

    def test_failure_is_data(self):
        register_g(GFunction("DEGEN", 1, "g=-50", lambda X: np.full(X.shape[0], -50.0)))
        sc = fast_scenario(g_tag="DEGEN", n1=5, n0=5)
        r = run_replication(sc, 0, true_p1_value=0.0)
        assert r.error is not None and "RareClassExhaustion" in r.error

    def test_skips_unweighted_when_disabled(self):
        sc = Scenario.paper_default("T1", 60, 60, n_e=200, replications=1, master_seed=3,
                                    fit_unweighted=False, **TINY_NET)
        r = run_replication(sc, 0, true_p1_value=0.316)
        assert r.error is None
        assert r.re_weighted is not None
        assert r.re_unweighted is None and r.gamma_shift is None


class TestRunExperiment:
    def test_singleton_sd_is_zero(self):
        summary = run_experiment(fast_scenario(replications=1))
        assert summary.n_replicates == 1 and summary.n_failed == 0
        assert summary.sd_p1_hat == 0.0

    def test_worker_count_does_not_change_results(self):
        sc = fast_scenario(replications=12)
        serial = run_experiment(sc, workers=1)
        parallel = run_experiment(sc, workers=2)
        assert serial.to_dict() == parallel.to_dict()

    def test_all_failures_raise(self):
        register_g(GFunction("DEGEN", 1, "g=-50", lambda X: np.full(X.shape[0], -50.0)))
        sc = fast_scenario(g_tag="DEGEN", n1=5, n0=5, replications=3)
        with pytest.raises(ExperimentError, match="all 3 replicates failed"):
            run_experiment(sc)

    def test_aggregates_match_replicates(self):
        sc = fast_scenario(replications=20)
        summary = run_experiment(sc)
        p1s = [r.p1_hat for r in summary.results]
        assert summary.mean_p1_hat == pytest.approx(np.mean(p1s))
        assert summary.sd_p1_hat == pytest.approx(np.std(p1s, ddof=1))
        assert 0.0 <= summary.coverage <= 1.0


class TestSeeding:
    def test_replicate_seeds_pairwise_distinct(self):
        seeds = {derive_seed(123, "sample", i) for i in range(100_000)}
        assert len(seeds) == 100_000

    def test_stage_streams_differ(self):
        assert derive_seed(1, "sample", 0) != derive_seed(1, "summary", 0)
        assert derive_seed(1, "sample", 0) != derive_seed(2, "sample", 0)


def make_summary(tag, n1, n0, re_w, sd_w, re_u, sd_u, truth) -> ReplicationSummary:
    sc = Scenario.paper_default(tag, n1, n0, replications=1)
    return ReplicationSummary(
        scenario=sc, true_p1=truth, n_replicates=1, n_failed=0,
        mean_p1_hat=truth, sd_p1_hat=0.0, mean_se=0.0, coverage=1.0,
        mean_re_weighted=re_w, sd_re_weighted=sd_w,
        mean_re_unweighted=re_u, sd_re_unweighted=sd_u,
        mean_gamma_shift=None, sd_gamma_shift=None, median_gamma_shift=None,
        results=(ReplicationResult(index=0, p1_hat=truth),),
    )


class TestEmitTable:
    def test_table3_shape(self):
        s = make_summary("T5", 1000, 1000, 0.2110, 0.0261, 0.4956, 0.0441, 0.188)
        lines = emit_table([s], style="table3")
        assert lines[0].split(",") == [
            "type", "n0", "n1", "mean_re_weighted", "sd_re_weighted",
            "mean_re_unweighted", "sd_re_unweighted",
        ]
        assert lines[1] == "T5,1000,1000,0.2110,0.0261,0.4956,0.0441"

    def test_table1_true_proportions(self):
        # true_p1 column reproduces the univariate benchmark proportions
        summaries = []
        for tag in ("T1", "T2", "T3", "T4"):
            truth = true_p1(PopulationSpec(get_g(tag))).value
            summaries.append(make_summary(tag, 500, 500, None, None, None, None, truth))
        lines = emit_table(summaries, style="table1")
        values = [float(line.split(",")[-1]) for line in lines[1:]]
        np.testing.assert_allclose(values, [0.316, 0.312, 0.352, 0.187], atol=5e-4)
        assert lines[1].split(",")[1] == "-3 + 2x"

    def test_human_variant_parenthesizes_sd(self):
        s = make_summary("T6", 1800, 200, 0.1925, 0.0336, 0.2062, 0.0421, 0.5725)
        lines = emit_table([s], style="table3", human=True)
        assert "0.1925 (0.0336)" in lines[1]

    def test_empty_input_errors(self):
        with pytest.raises(DomainError):
            emit_table([], style="table3")

    def test_unknown_style_errors(self):
        s = make_summary("T5", 1000, 1000, 0.2, 0.01, 0.5, 0.02, 0.188)
        with pytest.raises(DomainError):
            emit_table([s], style="table9")


class TestReplicateRows:
    def test_rows_include_failures(self):
        ok = ReplicationResult(index=0, p1_hat=0.3, se=0.01, ci=(0.28, 0.32), covered=True,
                               re_weighted=0.2, re_unweighted=0.5, gamma_shift=0.7,
                               arch_weighted=(2, 64), arch_unweighted=(3, 64), runtime_s=1.5)
        bad = ReplicationResult(index=1, error="RareClassExhaustionError: rare class exhaustion")
        lines = replicate_rows((ok, bad))
        assert len(lines) == 3
        assert lines[1].startswith("0,0.3000,0.0100,0.2800,0.3200,1,0.2000,0.5000,0.7000,2x64,3x64")
        assert "RareClassExhaustionError" in lines[2]
