import json
import math

import pytest

from sdelaplace.experiments import (
    RAO_PROBABILITY,
    ExperimentConfig,
    config_hash,
    consistency_sweep,
    denom_limit_check,
    limit_law_check,
    load_report_config,
    mc_laplace_check,
    random_norm_check,
    run_check,
    run_report,
)
from sdelaplace.model import ModelError

BRIDGE = {"preset": "alpha-bridge"}


def cfg(**kw):
    base = {"name": "x", "check": "mc_laplace", "model": {"preset": "wiener"}, "times": (1.0,), "paths": 1000}
    base.update(kw)
    return ExperimentConfig.from_dict(base)


def test_config_validation():
    with pytest.raises(ModelError):
        cfg(paths=99)
    with pytest.raises(ModelError):
        cfg(check="nope")
    with pytest.raises(ModelError):
        cfg(model=dict(BRIDGE, alpha=1.0), times=(1.0,))
    with pytest.raises(ModelError):
        ExperimentConfig.from_dict({"name": "x", "check": "mc_laplace", "model": {}, "bogus": 1})
    with pytest.raises(ModelError):
        cfg(mu_nu=((-1.0, 0.0),))


def test_config_round_trip_and_hash():
    c = cfg(mu_nu=((0.5, 0.0), (1.0, 2.0)), seed=4)
    again = ExperimentConfig.from_dict(json.loads(json.dumps(c.to_dict())))
    assert again == c and again.hash == c.hash
    assert cfg(seed=5).hash != cfg(seed=6).hash
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})


def test_report_config_inherits_seed():
    seed, cfgs = load_report_config({"seed": 9, "checks": [cfg().to_dict() | {"seed": 3}, {
        "name": "y", "check": "mc_laplace", "model": {"preset": "wiener"}, "times": [1.0]}]})
    assert seed == 9 and cfgs[0].seed == 3 and cfgs[1].seed == 9
    with pytest.raises(ModelError):
        load_report_config({"checks": [cfg().to_dict(), cfg().to_dict()]})
    with pytest.raises(ModelError):
        load_report_config({"checks": [], "extra": 1})


def test_cameron_martin_check_and_trivial_cell():
    rep = mc_laplace_check(cfg(mu_nu=((0.5, 0.0), (0.0, 0.0)), paths=100_000, steps=400, seed=1))
    assert rep.passed
    mc, ric, trivial = rep.records
    assert mc.reference == pytest.approx(0.8050181821945921, rel=1e-14)
    assert ric.name.startswith("riccati") and ric.detail["relative_error"] < 1e-6
    assert trivial.statistic == 1.0 and trivial.detail["z"] == 0.0
    assert all(r.seed == 1 and r.config_hash == rep.config_hash for r in rep.records)


def test_bridge_joint_cell():
    rep = mc_laplace_check(cfg(model=dict(BRIDGE, alpha=1.0), times=(0.9,), mu_nu=((1.0, 1.0),), paths=100_000))
    assert rep.passed and abs(rep.records[0].detail["z"]) <= 3
    assert len(rep.records) == 1  # no Riccati cell when nu > 0


def test_reports_are_deterministic():
    c = cfg(model=dict(BRIDGE, alpha=0.5), check="limit_law", times=(0.3, 0.9), paths=300, steps=200)
    a, b = run_check(c), run_check(c)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


@pytest.mark.parametrize(
    "alpha,expected",
    [(1.0, "normal_ks"), (0.5, "df_ks_reference"), (0.0, "cauchy_median")],
)
def test_limit_law_dispatch(alpha, expected):
    rep = limit_law_check(cfg(check="limit_law", model=dict(BRIDGE, alpha=alpha), times=(), delta=1e-3,
                              paths=200, steps=200))
    assert rep.records[0].name.startswith(expected)
    assert rep.records[0].detail["regime"] in ("normal", "dickey-fuller", "cauchy")


def test_limit_law_needs_terminal_model():
    with pytest.raises(ModelError):
        limit_law_check(cfg(check="limit_law", model={"preset": "ou", "alpha": -1.0}))


def test_limit_law_rejects_nonterminal_custom_model():
    c = cfg(check="limit_law", model={"preset": "custom", "alpha": 0.0, "K": -0.5, "C": 2.0, "T": 1.0},
            times=(0.5,), paths=100)
    with pytest.raises(ModelError):
        limit_law_check(c)


def test_singular_law_is_time_independent():
    rep = limit_law_check(cfg(check="limit_law", model=dict(BRIDGE, alpha=0.5), times=(0.3, 0.9),
                              paths=2000, steps=1000, reference_paths=10000, seed=2))
    assert rep.passed, [(r.name, r.p_value) for r in rep.records]
    assert len(rep.records) == 3


def test_random_norm_probability():
    rep = random_norm_check(cfg(check="random_norm", model=dict(BRIDGE, alpha=0.5), times=(0.6,),
                                paths=10_000, steps=300, seed=3))
    rec = rep.records[0]
    assert rec.reference == pytest.approx(2 * (1 - 0.8413447460685429))
    assert RAO_PROBABILITY == pytest.approx(0.31731050786291415, rel=1e-12)
    assert rep.passed


def test_random_norm_flags_regime_mismatch():
    rep = random_norm_check(cfg(check="random_norm", model=dict(BRIDGE, alpha=1.0), times=(0.9,), paths=200))
    assert rep.records[0].detail["regime_mismatch"] is True
    assert rep.records[0].name.startswith("random_norm_ks")


def test_singular_denominator_value():
    rep = denom_limit_check(cfg(check="denom_limit", model=dict(BRIDGE, alpha=0.5), times=(0.9,),
                                mu_nu=((1.0, 0.0),), paths=20_000, steps=800, seed=4))
    by = {r.name.split("[")[0]: r for r in rep.records}
    assert by["laplace_vs_limit"].reference == pytest.approx(0.5155601117562139, rel=1e-14)
    assert by["closed_form_t_independent"].passed
    assert rep.passed


def test_cauchy_denominator_law():
    rep = denom_limit_check(cfg(check="denom_limit", model=dict(BRIDGE, alpha=0.0), times=(), delta=1e-8,
                                paths=3000, steps=4000, seed=5))
    assert rep.records[0].name.startswith("ratio_ks_reference") and rep.passed


@pytest.mark.xfail(strict=True, reason="Q/I concentrates only logarithmically; about 16% of paths "
                   "satisfy |Q/I - 1| < 0.1 at delta = 1e-6 (sd of Q/I is about 0.52)")
def test_normal_denominator_concentration():
    rep = denom_limit_check(cfg(check="denom_limit", model=dict(BRIDGE, alpha=1.0), times=(), delta=1e-6,
                                paths=2000, steps=2000, seed=6))
    assert rep.records[0].passed


@pytest.mark.parametrize("alpha", [0.0, 0.5, 1.0])
def test_consistency_medians_decrease(alpha):
    rep = consistency_sweep(cfg(check="consistency", model=dict(BRIDGE, alpha=alpha), times=(),
                                paths=1000, steps=1000, seed=7))
    mono = rep.records[0]
    assert mono.passed
    med = mono.detail["medians"]
    assert med[-1] < med[0]


def test_run_report_bit_identical():
    raw = {"seed": 3, "checks": [
        {"name": "a", "check": "mc_laplace", "model": {"preset": "ou", "alpha": -1}, "times": [1.0],
         "mu_nu": [[1, 0.5]], "paths": 500, "steps": 50},
        {"name": "b", "check": "random_norm", "model": {"preset": "alpha-bridge", "alpha": 0.5},
         "times": [0.9], "paths": 500, "steps": 100},
    ]}
    one, _ = run_report(raw)
    two, _ = run_report(raw)
    assert json.dumps(one, sort_keys=True) == json.dumps(two, sort_keys=True)
    assert one["config_hash"] == config_hash(raw)
    assert "runtime" not in one["checks"][0]["records"][0]
    timed, _ = run_report(raw, include_runtime=True)
    assert "runtime" in timed["checks"][0]["records"][0]
