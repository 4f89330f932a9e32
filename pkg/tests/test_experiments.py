"""Experiment orchestration tests: regimes, replicas, determinism, sweeps."""
import numpy as np
import pytest

from rifslab import (
    ConfigError,
    ExperimentConfig,
    NotContractingError,
    arratia_preset,
    fibonacci_preset,
    run_experiment,
    sinai_preset,
    sweep,
)
from rifslab.experiments import (
    CRITICAL_CAVEAT,
    REGIME_AC,
    REGIME_CRITICAL,
    REGIME_SINGULAR,
    classify_regime,
    run_replica,
    support_lower_bound,
)
from rifslab.runio import canonical_json
from rifslab.seeds import ROLE_SWEEP, submaster

TINY = dict(replicas=2, samples=800)


def test_classify_regime_three_cases():
    regime, predicted, caveat = classify_regime(1.0, -0.5)
    assert (regime, predicted, caveat) == (REGIME_AC, 1.0, None)
    regime, predicted, caveat = classify_regime(0.5, -1.25)
    assert regime == REGIME_SINGULAR
    assert predicted == pytest.approx(0.4)
    assert caveat is None
    regime, predicted, caveat = classify_regime(0.7, -0.7 - 1e-14)
    assert regime == REGIME_CRITICAL
    assert predicted == 1.0
    assert caveat == CRITICAL_CAVEAT
    with pytest.raises(NotContractingError):
        classify_regime(1.0, 0.2)


def test_preset_shapes():
    s = sinai_preset(0.5)
    assert list(s.ifs.digits) == [1.0, 1.0]
    assert list(s.ifs.ratios) == [0.5, 1.5]
    assert s.measure.describe()["p"] == [0.5, 0.5]
    assert s.law.kind == "perturbed-uniform"
    assert s.law.log_mean() == 0.0
    assert s.chi() == pytest.approx(0.5 * np.log(0.75), abs=1e-12)

    a = arratia_preset(2.0, replicas=5)
    assert list(a.ifs.digits) == [0.0, 1.0]
    assert a.ifs.is_homogeneous
    assert a.replicas == 5
    assert a.chi() == pytest.approx(-0.5, abs=1e-12)
    assert a.entropy() == pytest.approx(np.log(2.0), abs=1e-12)

    f = fibonacci_preset(1.0)
    assert f.measure.variant == "sft"
    assert f.entropy() == pytest.approx(np.log((1 + np.sqrt(5)) / 2), abs=1e-12)

    with pytest.raises(ConfigError):
        sinai_preset(1.5)
    with pytest.raises(ConfigError):
        arratia_preset(-1.0)


def test_sinai_regime_transition():
    # chi = log(1 - a^2)/2 crosses -log 2 exactly at a = sqrt(3)/2
    assert classify_regime(sinai_preset(0.5).entropy(), sinai_preset(0.5).chi())[0] == REGIME_AC
    crit = sinai_preset(np.sqrt(3.0) / 2.0)
    regime, predicted, caveat = classify_regime(crit.entropy(), crit.chi())
    assert regime == REGIME_CRITICAL
    assert caveat == CRITICAL_CAVEAT
    assert classify_regime(sinai_preset(0.95).entropy(), sinai_preset(0.95).chi())[0] == REGIME_SINGULAR


def test_config_validation_collects_problems():
    with pytest.raises(ConfigError) as info:
        arratia_preset(2.0, replicas=0, samples=1)
    msg = str(info.value)
    assert "replicas" in msg and "samples" in msg


def test_config_rejects_noncontracting():
    from rifslab import Bernoulli, IfsSpec, PiecewiseDensity

    with pytest.raises(NotContractingError):
        ExperimentConfig(
            ifs=IfsSpec([0.0, 1.0], [1.0, 1.0]),
            measure=Bernoulli([0.5, 0.5]),
            law=PiecewiseDensity([1.05, 1.15], [10.0]),
        )


def test_run_replica_is_deterministic():
    cfg = arratia_preset(3.0, **TINY)
    a = run_replica(cfg, 0)
    b = run_replica(cfg, 0)
    assert a.error is None
    assert a.correlation.value == b.correlation.value
    assert a.local.value == b.local.value
    assert a.depth == b.depth
    assert a.value_min == b.value_min and a.value_max == b.value_max
    c = run_replica(cfg, 1)
    assert c.value_min != a.value_min  # fresh error sequence per index


def test_replica_prefix_stability():
    small = run_experiment(arratia_preset(3.0, replicas=2, samples=800))
    large = run_experiment(arratia_preset(3.0, replicas=4, samples=800))
    for i in range(2):
        assert small.replicas[i].correlation.value == large.replicas[i].correlation.value
        assert small.replicas[i].value_min == large.replicas[i].value_min


def test_report_is_byte_deterministic_and_thread_invariant():
    cfg = sinai_preset(0.4, **TINY)
    one = canonical_json(run_experiment(cfg, threads=1).to_dict())
    two = canonical_json(run_experiment(cfg, threads=3).to_dict())
    assert one == two


def test_report_fields_and_aggregates():
    cfg = arratia_preset(4.0, replicas=3, samples=2000, seed=11, label="unit")
    rep = run_experiment(cfg)
    assert rep.label == "unit"
    assert rep.regime == REGIME_AC
    assert rep.predicted_dimension == 1.0
    assert rep.ratio == pytest.approx(rep.entropy / abs(rep.chi))
    agg = rep.aggregates
    assert agg["replicas"] == 3 and agg["failed"] == 0
    dims = sorted(r.correlation.value for r in rep.replicas)
    assert agg["correlation_dimension"]["median"] == pytest.approx(dims[1])
    assert agg["ac_flag"]["true_fraction"] == 1.0
    assert "local_dimension" in agg
    assert agg["fourier"]["theory_bound"] == pytest.approx(4.0 * np.log(2.0))
    assert rep.config == cfg.describe()
    # fourier only applies to homogeneous-ratio systems with i.i.d. symbols
    assert run_experiment(sinai_preset(0.4, **TINY)).replicas[0].fourier is None


def test_failed_replicas_are_recorded_not_raised():
    # contraction this weak needs a series depth beyond the hard cap, so
    # every replica fails in truncation and the report must say so
    cfg = sinai_preset(0.001, replicas=2, samples=10)
    rep = run_experiment(cfg)
    assert rep.aggregates["failed"] == rep.aggregates["replicas"] == 2
    assert all(r.error is not None for r in rep.replicas)
    assert "correlation_dimension" not in rep.aggregates


def test_support_lower_bound_cases():
    a = arratia_preset(2.0)
    # digits {0,1} with min ratio 1 and errors reaching 0: bound is plain 0
    assert support_lower_bound(a.ifs, a.law) == 0.0
    s = sinai_preset(0.5)
    bound = support_lower_bound(s.ifs, s.law)
    assert bound == pytest.approx(1.0 / (1.0 - 0.5 * 0.9))
    from rifslab import IfsSpec

    assert support_lower_bound(IfsSpec([-1.0, 1.0], [0.5, 0.5]), a.law) is None


def test_sweep_seeds_and_summaries():
    values = [2.0, 3.0]
    result = sweep(lambda t: arratia_preset(t, **TINY), values, master_seed=21, parameter="theta")
    assert result.parameter == "theta"
    assert [p.parameter for p in result.points] == values
    for g, point in enumerate(result.points):
        assert point.seed == submaster(21, ROLE_SWEEP, g)
        assert point.error is None
        assert point.report is not None
        row = point.summary()
        assert row["value"] == values[g]
        assert row["median_dimension"] == point.report.aggregates["correlation_dimension"]["median"]
    # grid-index seeding: dropping a value must not disturb the other point
    solo = sweep(lambda t: arratia_preset(t, **TINY), [2.0], master_seed=21)
    assert canonical_json(solo.points[0].report.to_dict()) == canonical_json(
        result.points[0].report.to_dict()
    )


def test_sweep_records_failures_and_continues():
    def build(t):
        if t < 0:
            raise ConfigError(["negative theta"])
        return arratia_preset(t, **TINY)

    result = sweep(build, [-1.0, 2.0], master_seed=3)
    assert result.points[0].error is not None
    assert result.points[0].report is None
    assert result.points[1].error is None
    d = result.to_dict()
    assert d["points"][0]["error"].startswith("ConfigError")
