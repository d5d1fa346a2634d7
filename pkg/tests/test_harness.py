import csv
import math

import numpy as np
import pytest

from fracsplit.exceptions import InvalidSpecError
from fracsplit.harness import (
    SUMMARY_COLUMNS,
    ExperimentConfig,
    MethodConfig,
    load_config,
    read_csv_without_timing,
    run_experiment,
    time_grid_curve,
)
from fracsplit.solvers import TRACE_COLUMNS, RunTrace


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_single_trial_structure(tmp_path):
    cfg = ExperimentConfig("quadratic_linear", {"k": 20, "m": 4},
                           (MethodConfig("fssm", "fssm", "const:5e-5"),), trials=1,
                           stop="iters:10", out=str(tmp_path))
    run_experiment(cfg)
    trace = _rows(tmp_path / "quadratic_linear_fssm_t0.csv")
    assert len(trace) == 10 and list(trace[0]) == list(TRACE_COLUMNS)
    summary = _rows(tmp_path / "quadratic_linear_summary.csv")
    assert len(summary) == 1 and list(summary[0]) == list(SUMMARY_COLUMNS)


def test_identical_configs_identical_csv(tmp_path):
    paths = []
    for name in ("a", "b"):
        cfg = load_config(family="cobb_douglas", k=8, p=4, trials=2, stop="iters:30",
                          out=str(tmp_path / name))
        run_experiment(cfg)
        paths.append(tmp_path / name)
    files = sorted(f.name for f in paths[0].iterdir())
    assert files == sorted(f.name for f in paths[1].iterdir())
    for f in files:
        assert read_csv_without_timing(paths[0] / f) == read_csv_without_timing(paths[1] / f)
    assert "mean_cost" in _rows(paths[0] / "cobb_douglas_summary.csv")[0]


def test_sum_of_ratios_summary():
    cfg = load_config(family="sum_linear_ratios", k=5, m=5, p=10, trials=10,
                      stop="rel:1e-5,iters:100000")
    res = run_experiment(cfg)
    (row,) = res.summary
    assert row["trials_ok"] + row["trials_failed"] == 10
    assert row["mean_final_obj"] > 0
    assert row["mean_iters"] <= 100000
    finals = [t.theta for t in res.trials if t.error is None]
    assert row["mean_final_obj"] == pytest.approx(sum(finals) / len(finals), rel=1e-12)


def test_failed_trials_are_counted():
    # identity padding swept last leaves the box on this shape
    cfg = load_config(family="sum_linear_ratios", k=5, m=10, p=5, trials=3, stop="iters:2000")
    row = run_experiment(cfg).summary[0]
    assert row["trials_ok"] + row["trials_failed"] == 3
    errors = [t.error for t in run_experiment(cfg).trials if t.error]
    assert all("DenominatorViolationError" in e for e in errors)


def test_identity_first_option():
    cfg = load_config(family="sum_linear_ratios", k=5, m=10, p=5, trials=3, stop="iters:2000",
                      identity_first=True)
    row = run_experiment(cfg).summary[0]
    assert row["trials_failed"] == 0


def test_workers_match_serial():
    base = dict(family="cobb_douglas", k=6, p=3, trials=3, stop="iters:20")
    serial = run_experiment(load_config(**base))
    threaded = run_experiment(load_config(**base, workers=3))
    for a, b in zip(serial.summary, threaded.summary):
        assert {k: v for k, v in a.items() if k != "mean_time_s"} == \
               {k: v for k, v in b.items() if k != "mean_time_s"}


def test_time_grid_curve():
    tr = RunTrace()
    for n, t in enumerate([0.1, 0.35, 0.6, 0.95], start=1):
        tr.append({c: float(n) for c in TRACE_COLUMNS} | {"elapsed_s": t})
    curve = time_grid_curve([tr], 1.0, points=4)
    np.testing.assert_array_equal(curve["elapsed_s"], [0.25, 0.5, 0.75, 1.0])
    np.testing.assert_array_equal(curve["theta"], [1, 2, 3, 4])


def test_config_file(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(
        "[experiment]\nfamily = quadratic_linear\nk = 15\nm = 3\ntrials = 2\nstop = iters:5\n"
        "[method fssm-c]\nsolver = fssm\neta = const:5.1e-5\n"
        "[method da]\nsolver = dinkelbach\ninner_iters = 4\n"
    )
    cfg = load_config(path, trials=1, eta="harmonic:1e-4")
    assert cfg.dims == {"k": 15, "m": 3} and cfg.trials == 1
    assert [m.name for m in cfg.methods] == ["fssm-c", "da"]
    assert cfg.methods[0].eta == "harmonic:1e-4" and cfg.methods[1].inner_iters == 4
    res = run_experiment(cfg)
    assert all(r["trials_ok"] == 1 for r in res.summary)


@pytest.mark.parametrize("kwargs", [
    dict(family="quadratic_linear", method=["ifssm"]),
    dict(family="sum_linear_ratios", method=["fssm"]),
    dict(family="quadratic_linear", trials=0),
    dict(family="quadratic_linear", k=5, m=5),
    dict(family="analytic_1d"),
    dict(family="quadratic_linear", stop="never:1"),
])
def test_config_errors(kwargs):
    with pytest.raises(InvalidSpecError):
        load_config(**kwargs)


def test_time_budget_uses_grid():
    cfg = load_config(family="quadratic_linear", k=20, m=4, trials=2, stop="time:0.2",
                      method=["fssm"], eta="const:5e-5")
    res = run_experiment(cfg)
    curve = res.curves["fssm"]
    assert curve["elapsed_s"].size == 100
    assert math.isclose(curve["elapsed_s"][-1], 0.2)
