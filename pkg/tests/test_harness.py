import csv
import io
import json

import numpy as np
import pytest

from race_sampler.distributions import Rng
from race_sampler.harness import checks
from race_sampler.harness.cli import main
from race_sampler.harness.experiment import (
    ExperimentConfig,
    UsageError,
    mean_se,
    run_experiment,
    table1,
    table1_csv,
    TABLE1,
)
from race_sampler.harness.stats import (
    StatReport,
    chi2_gof,
    chi2_homogeneity,
    geom_tail_check,
    ks_test,
    ks_two_sample,
    mean_within,
    with_retries,
)
from race_sampler.harness.verify import verify_suite
from race_sampler.problems import make_discrete
from race_sampler.samplers import rej_first


# statistical kit

def test_fair_coin():
    assert chi2_gof([4980, 5020], [0.5, 0.5]).p_value > 0.05


def test_uniform_ks_pvalues_are_uniform():
    rng = np.random.default_rng(0)
    ps = [ks_test(rng.uniform(size=500), "uniform").p_value for _ in range(300)]
    assert ks_test(ps, "uniform").passed


def test_empty_samples_raise():
    for fn, args in ((chi2_gof, ([], [])), (ks_test, ([], "norm")), (ks_two_sample, ([], [1.0])),
                     (chi2_homogeneity, ([], [1])), (mean_within, ([], 0.0))):
        with pytest.raises(ValueError):
            fn(*args)


def test_pvalue_range_enforced():
    with pytest.raises(ValueError):
        StatReport("bad", 0.0, 1.5, True)


def test_sparse_bins_are_merged():
    rep = chi2_gof([50, 1, 0, 49], [0.5, 0.005, 0.005, 0.49])
    assert rep.passed
    assert rep.sizes == (100,)


def test_geom_tail_on_rej():
    prob = make_discrete([1, 2, 3, 4])
    rng = Rng(0)
    ks = [rej_first(prob, rng).k_proposals for _ in range(20_000)]
    assert geom_tail_check(ks, 10 / 16).passed
    assert not geom_tail_check(ks, 0.9).passed
    with pytest.raises(ValueError):
        geom_tail_check(ks, 0.0)


def test_retries():
    calls = []

    def flaky(attempt):
        calls.append(attempt)
        return StatReport("flaky", 0.0, 0.5, attempt >= 2)

    assert with_retries(flaky).passed
    assert calls == [0, 1, 2]
    group = lambda seed: [StatReport("a", 0.0, None, True), StatReport("b", 0.0, None, seed > 100)]
    assert all(r.passed for r in checks.retrying(group, 0))


# experiment runner

def _rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_run_experiment_is_deterministic(tmp_path):
    cfg = dict(problem="regression", sampler="astar", runs=1, seed=11, n_data=10)
    a = run_experiment(ExperimentConfig(**cfg, out=str(tmp_path / "a.csv")))
    b = run_experiment(ExperimentConfig(**cfg, out=str(tmp_path / "b.csv")))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert a == b


def test_parallel_matches_serial():
    cfg = dict(problem="clutter", sampler="osstar", runs=40, seed=3, dim=2)
    assert run_experiment(ExperimentConfig(**cfg, jobs=1)) == run_experiment(ExperimentConfig(**cfg, jobs=3))


def test_summary_matches_rows():
    text = run_experiment(ExperimentConfig(problem="ising", sampler="astar", runs=50, draws=2, seed=1))
    rows = _rows(text)
    header = rows[0]
    body = [dict(zip(header, r)) for r in rows[1:-1]]
    summary = dict(zip(header, rows[-1]))
    assert summary["run"] == "summary"
    mean, se = mean_se([int(r["k_proposals"]) for r in body])
    assert float(summary["mean_k"]) == mean
    assert float(summary["se_k"]) == se
    assert len(body) == 100
    assert {r["draw"] for r in body} == {"0", "1"}
    assert "wallclock" not in header


def test_timing_column_on_request():
    text = run_experiment(ExperimentConfig(problem="discrete", sampler="rej", runs=3, timing=True))
    assert "wallclock" in _rows(text)[0]


def test_config_validation():
    for bad in (dict(problem="nope"), dict(sampler="nope"), dict(runs=0), dict(seed=-1)):
        with pytest.raises(UsageError):
            ExperimentConfig(**bad).validate()
    with pytest.raises(UsageError):
        ExperimentConfig.from_dict({"runs": 3, "colour": "red"})


def test_table1_small():
    res = table1(runs=20, draws=1, rows=TABLE1[:1])
    assert [r["sampler"] for r in res] == ["osstar", "astar"]
    assert table1_csv(res).splitlines()[0].startswith("row,sampler,mean_k")


# CLI

def test_cli_sample(capsys):
    assert main(["sample", "--problem", "discrete", "--sampler", "astar", "--seed", "4"]) == 0
    out = capsys.readouterr().out
    assert "k_proposals=" in out and "log_time=" in out


def test_cli_bench_flags_override_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"problem": "discrete", "sampler": "per", "runs": 7, "seed": 2}))
    out = tmp_path / "o.csv"
    assert main(["bench", "--config", str(cfg), "--runs", "5", "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert len(rows) == 1 + 5 + 1
    assert rows[1][1] == "per"


def test_cli_env_seed(monkeypatch, capsys):
    monkeypatch.setenv("RACE_SAMPLER_SEED", "9")
    main(["bench", "--problem", "discrete", "--sampler", "rej", "--runs", "3"])
    a = capsys.readouterr().out
    main(["bench", "--problem", "discrete", "--sampler", "rej", "--runs", "3", "--seed", "9"])
    assert a == capsys.readouterr().out
    monkeypatch.setenv("RACE_SAMPLER_SEED", "x")
    assert main(["bench", "--problem", "discrete", "--runs", "3"]) == 2


def test_cli_exit_codes(tmp_path, capsys, monkeypatch):
    with pytest.raises(SystemExit) as exc:
        main(["bench", "--problem", "nope"])
    assert exc.value.code == 2
    assert main(["bench", "--problem", "discrete", "--runs", "0"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["bench", "--config", str(bad)]) == 2
    # a bound that undercuts f is a contract violation: diagnostic exit
    monkeypatch.setattr("race_sampler.harness.experiment.problem_for",
                        lambda config, seed: make_discrete([1, 2, 3, 4], bound_scale=0.5))
    assert main(["bench", "--problem", "discrete", "--sampler", "astar", "--runs", "200"]) == 3
    assert "ContractViolation" in capsys.readouterr().err


def test_cli_race_dump(tmp_path):
    out = tmp_path / "race.csv"
    assert main(["race-dump", "--problem", "clutter", "--dim", "2", "-k", "6", "--mode", "tree",
                 "--out", str(out)]) == 0
    rows = _rows(out.read_text())
    assert rows[0] == ["index", "log_time", "time", "x0", "x1"]
    times = [float(r[1]) for r in rows[1:]]
    assert len(times) == 6 and times == sorted(times)


def test_verify_fault_injection(capsys):
    reports, ok = verify_suite(0, corrupt_bound=True, only=["fixture"], out=None)
    assert not ok and not reports[0].passed
    assert main(["verify", "--corrupt-bound", "--only", "fixture"]) == 4
    assert main(["verify", "--only", "fixture", "--only", "lp", "--scale", "0.3"]) == 0
