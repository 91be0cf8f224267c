import numpy as np
import pytest

from osclab import harness as hz
from osclab.seminorms import DomainError


@pytest.mark.parametrize("scenario", hz.SCENARIOS)
def test_every_scenario_passes(scenario):
    report, code = hz.run_verify({"scenario": scenario, "seed": 11, "trials": 15})
    failing = [a for a in report["assertions"] if not a.get("passed", True)]
    assert code == 0, failing[:3]
    assert report["violations"] == 0 and report["assertions"]


@pytest.mark.parametrize("mutation", ["block_off_by_one", "non_strict_sequence", "empty_sup"])
def test_mutations_are_caught(mutation):
    report, code = hz.run_verify({"scenario": "seminorm_chain", "seed": 1, "trials": 5, "mutation": mutation})
    assert code == 1 and report["violations"] > 0


def test_vacuous_telescoping_case_recorded():
    report, code = hz.run_verify({"scenario": "eq42_telescoping", "seed": 0, "trials": 11})
    names = {a["name"] for a in report["assertions"]}
    assert code == 0 and "telescoping.martingale.vacuous" in names


@pytest.mark.parametrize("bad", [
    {"scenario": "nope"},
    {"trials": 0},
    {"seed": -1},
    {"r": 0.5},
    {"J_values": []},
    {"tau": [1.0]},
    {"tolerances": {"nonsense": 1}},
    {"mutation": "unknown"},
    {"extra_key": 3},
])
def test_config_errors(bad):
    with pytest.raises(hz.ConfigError):
        hz.ExperimentConfig.from_dict(bad)
    _, code = hz.run_verify(bad)
    assert code == 2


def test_config_from_yaml(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text("scenario: martingale_osc\nseed: 4\ntrials: 3\ntolerances:\n  golden: 1.0e-9\n")
    cfg = hz.ExperimentConfig.from_file(path)
    assert cfg.scenario == "martingale_osc" and cfg.tol("golden") == 1e-9 and cfg.tol("gauss") == 1e-10
    path.write_text("scenario: [unclosed\n")
    with pytest.raises(hz.ConfigError):
        hz.ExperimentConfig.from_file(path)


def test_verify_report_is_deterministic():
    cfg = {"scenario": "seminorm_chain", "seed": 99, "trials": 30}
    a = hz.report_json(hz.run_verify(cfg)[0])
    b = hz.report_json(hz.run_verify(cfg)[0])
    assert a == b


def test_estimate_is_deterministic_and_emits_curves():
    cfg = {"scenario": "martingale_osc", "seed": 3, "trials": 4, "K": 8, "J_values": [2, 4, 8],
           "p_values": [1.5, 2, 4]}
    rep1, code = hz.run_estimate(cfg)
    rep2, _ = hz.run_estimate(cfg)
    assert code == 0 and hz.report_json(rep1) == hz.report_json(rep2)
    assert len(rep1["estimates"]) == 3
    series = hz.read_plot_data(hz.emit_plot_data(rep1))
    per_J = [s for s in series if s.startswith("per_J")]
    assert sorted(per_J) == ["per_J[p=1.5]", "per_J[p=2]", "per_J[p=4]"]
    assert [x for x, _ in series["per_J[p=2]"]] == [2, 4, 8]


def test_estimate_lacunary_and_birkhoff():
    rep, code = hz.run_estimate({"scenario": "dz_theorem", "seed": 0, "trials": 2, "K": 10, "M_max": 100,
                                 "J_values": [2, 4], "tau": [1.5, 2.0]})
    assert code == 0
    assert [e["tau"] for e in rep["estimates"]] == [1.5, 2.0]
    _, code = hz.run_estimate({"scenario": "dz_theorem", "trials": 2, "K": 10, "M_max": 100,
                               "J_values": [40], "tau": [2.0]})
    assert code == 2


def test_empty_report_gives_header_only_csv(tmp_path):
    out = tmp_path / "curves.csv"
    assert hz.emit_plot_data({}, out) == "x,y,series\n"
    assert out.read_text() == "x,y,series\n"


def test_constant_estimate_helpers():
    est = hz.ConstantEstimate("x", 2.0, 10, [4, 16], [1.0, 2.0])
    assert est.normalized == [0.5, 0.5]
    assert est.baseline == [1.0, 2.0]
    assert est.growth() == 2.0 and est.monotone_within(0.0)


def test_birkhoff_stack_matches_direct_sum():
    rng = np.random.default_rng(0)
    f = rng.standard_normal(37)
    stack = hz.birkhoff_stack(f, 50)
    for M in (1, 7, 37, 50):
        ref = np.mean([np.roll(f, -m) for m in range(1, M + 1)], axis=0)
        assert np.max(np.abs(stack[M - 1] - ref)) <= 1e-12


def test_long_short_split_on_dyadic_grid():
    rng = np.random.default_rng(1)
    grid = [1, 2, 4, 8, 16]
    vals = rng.standard_normal((5, 12))
    rep = hz.long_short_split_report(grid, vals)
    assert rep["lhs"] <= rep["rhs"] * (1 + 1e-12)
    with pytest.raises(DomainError):
        hz.long_short_split_report([1, 3, 4], rng.standard_normal((3, 4)))


def test_random_function_ensembles():
    rng = np.random.default_rng(2)
    for ens in ("gaussian", "spikes", "trig", 0, 1, 2):
        f = hz.random_function(rng, 64, ens)
        assert f.shape == (64,) and np.all(np.isfinite(f))
