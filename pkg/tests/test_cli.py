import json
import os

import numpy as np
import pytest

from sise.cli import main

INTERVALS = "left,right\n1.2,2.0\n0.5,1.0\n2.6,3.4\n3.0,3.0\n2.4,\n1.5,2.2\n"
RECORDS = (
    "id,time,status\n"
    "a,2.0,0\na,6.0,1\n"
    "b,1.5,0\nb,8.0,0\n"
    "c,3.0,0\nc,4.5,1\n"
    "d,2.5,0\nd,7.0,1\n"
)


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def fit_args(data, extra=()):
    return ["fit", "--data", data, "--global-budget", "20", *extra]


def test_version(capsys):
    with pytest.raises(SystemExit) as exc_info:
        main(["--version"])
    assert exc_info.value.code == 0
    assert capsys.readouterr().out.startswith("sise ")


def test_fit_stdout_report(tmp_path, capsys):
    data = write(tmp_path, "iv.csv", INTERVALS)
    code, out, _ = run(fit_args(data), capsys)
    assert code == 0
    report = json.loads(out)
    assert report["n_observations"] == 6
    assert report["bandwidth"] >= 0.0
    assert "raw_fit" in report
    assert report["report"]["bic_s"] <= report["raw_report"]["bic_s"] + 1e-9


def test_fit_out_dir_artifacts(tmp_path, capsys):
    data = write(tmp_path, "iv.csv", INTERVALS)
    out_dir = str(tmp_path / "fit")
    code, out, _ = run(fit_args(data, ["--out-dir", out_dir]), capsys)
    assert code == 0
    assert out.startswith("fit: n=6 ")
    for name in ("raw_fit.json", "smoothed_fit.json", "report.json", "curve.csv"):
        assert os.path.exists(os.path.join(out_dir, name)), name
    curve = open(os.path.join(out_dir, "curve.csv")).readline().strip()
    assert curve == "tau,raw_density,raw_survival,smooth_density,smooth_survival"
    raw = json.load(open(os.path.join(out_dir, "raw_fit.json")))
    assert "step_fit" in raw
    assert raw["bandwidth"] == 0.0


def test_fit_records_frame_spans_visits(tmp_path, capsys):
    data = write(tmp_path, "rec.csv", RECORDS)
    out_dir = str(tmp_path / "fit")
    code, _, _ = run(fit_args(data, ["--out-dir", out_dir]), capsys)
    assert code == 0
    report = json.load(open(os.path.join(out_dir, "report.json")))
    assert report["frame"]["left"] == 1.5
    assert report["frame"]["right"] == 8.0


def test_fit_zero_max_bandwidth_disables_smoothing(tmp_path, capsys):
    data = write(tmp_path, "iv.csv", INTERVALS)
    out_dir = str(tmp_path / "fit0")
    code, _, _ = run(fit_args(data, ["--max-bandwidth", "0", "--out-dir", out_dir]), capsys)
    assert code == 0
    raw = json.load(open(os.path.join(out_dir, "raw_fit.json")))
    smooth = json.load(open(os.path.join(out_dir, "smoothed_fit.json")))
    assert raw["values"] == smooth["values"]


def test_fit_deterministic_across_runs(tmp_path, capsys):
    data = write(tmp_path, "iv.csv", INTERVALS)
    _, out_a, _ = run(fit_args(data, ["--seed", "7"]), capsys)
    _, out_b, _ = run(fit_args(data, ["--seed", "7"]), capsys)
    assert out_a == out_b


def test_fit_nm_penalty_needs_records(tmp_path, capsys):
    data = write(tmp_path, "iv.csv", INTERVALS)
    code, _, err = run(fit_args(data, ["--penalty", "nm"]), capsys)
    assert code == 2
    assert "visit counts" in err

    records = write(tmp_path, "rec.csv", RECORDS)
    code, out, _ = run(fit_args(records, ["--penalty", "nm"]), capsys)
    assert code == 0
    assert json.loads(out)["penalty"] == "nm"


def test_fit_errors(tmp_path, capsys):
    code, _, err = run(fit_args(str(tmp_path / "missing.csv")), capsys)
    assert code == 2

    bad = write(tmp_path, "bad.csv", "left,right\n5,1\n")
    code, _, err = run(fit_args(bad), capsys)
    assert code == 2
    assert "error:" in err


def test_simulate_cohort_out(tmp_path, capsys):
    out_dir = str(tmp_path / "cohort")
    code, out, _ = run(
        ["simulate", "--cohort-out", out_dir, "--n", "15", "--visits", "3",
         "--prevalence", "0.9", "--seed", "2"],
        capsys,
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["n"] == 15
    assert payload["bracket_violations"] == 0
    for name in ("intervals.csv", "records.csv", "onsets.csv"):
        assert os.path.exists(os.path.join(out_dir, name))
    onsets = open(os.path.join(out_dir, "onsets.csv")).read().splitlines()
    assert len(onsets) == 16  # header + one row per individual


def test_simulate_config_file(tmp_path, capsys):
    cfg = {
        "name": "cell", "n": 25, "prevalence": 1.0, "n_visits": 2,
        "n_replicates": 2, "global_budget": 10, "seed": 1,
    }
    path = write(tmp_path, "cell.json", json.dumps(cfg))
    out_dir = str(tmp_path / "sim")
    code, out, err = run(
        ["simulate", "--config", path, "--out-dir", out_dir], capsys
    )
    assert code == 0
    assert "2 replicates" in out
    report = json.load(open(os.path.join(out_dir, "report.json")))
    assert report["results"][0]["config"]["name"] == "cell"
    lines = open(os.path.join(out_dir, "replicates.csv")).read().splitlines()
    assert lines[0] == "scenario,replicate,metric,value"
    assert all(line.startswith("cell,") for line in lines[1:])


def test_simulate_config_errors(tmp_path, capsys):
    garbage = write(tmp_path, "bad.json", "{nope")
    code, _, err = run(["simulate", "--config", garbage], capsys)
    assert code == 2

    unknown_field = write(tmp_path, "bad2.json", json.dumps({"bogus_knob": 1}))
    code, _, err = run(["simulate", "--config", unknown_field], capsys)
    assert code == 2
    assert "bogus_knob" in err


def test_simulate_unknown_preset(capsys):
    # argparse rejects names outside the preset catalog before main's own
    # error mapping gets a chance
    with pytest.raises(SystemExit) as exc_info:
        main(["simulate", "--preset", "nope"])
    assert exc_info.value.code == 2


def test_simulate_split_preset(tmp_path, capsys):
    cohort_dir = str(tmp_path / "cohort")
    run(
        ["simulate", "--cohort-out", cohort_dir, "--n", "40", "--visits", "3",
         "--prevalence", "1.0", "--seed", "4"],
        capsys,
    )
    code, out, _ = run(
        ["simulate", "--preset", "split",
         "--data", os.path.join(cohort_dir, "intervals.csv"),
         "--onsets", os.path.join(cohort_dir, "onsets.csv"),
         "--seed", "3"],
        capsys,
    )
    assert code == 0
    result = json.loads(out)["result"]
    assert result["n_scored"] > 0
    assert result["rmse_raw"] > 0.0


def test_impute_roundtrip(tmp_path, capsys):
    data = write(tmp_path, "iv.csv", INTERVALS)
    fit_dir = str(tmp_path / "fit")
    run(fit_args(data, ["--out-dir", fit_dir]), capsys)

    out_csv = str(tmp_path / "imputed.csv")
    code, out, _ = run(
        ["impute", "--fit", os.path.join(fit_dir, "smoothed_fit.json"),
         "--data", data, "--out", out_csv],
        capsys,
    )
    assert code == 0
    lines = open(out_csv).read().splitlines()
    assert lines[0] == "id,left,right,imputed"
    assert len(lines) == 7
    # the exact row keeps its own time
    exact = [l for l in lines if l.startswith("3,")][0]
    assert exact.split(",")[3] == "3"


def test_impute_strict_vs_skip(tmp_path, capsys):
    data = write(tmp_path, "iv.csv", INTERVALS)
    fit_dir = str(tmp_path / "fit")
    run(fit_args(data, ["--out-dir", fit_dir]), capsys)
    fit_json = os.path.join(fit_dir, "smoothed_fit.json")

    outside = write(tmp_path, "outside.csv", "left,right\n90.0,95.0\n")
    code, _, err = run(
        ["impute", "--fit", fit_json, "--data", outside,
         "--out", str(tmp_path / "x.csv")],
        capsys,
    )
    assert code == 3

    out_csv = str(tmp_path / "skip.csv")
    code, _, err = run(
        ["impute", "--fit", fit_json, "--data", outside, "--out", out_csv,
         "--skip-empty"],
        capsys,
    )
    assert code == 0
    assert "blank" in err
    assert open(out_csv).read().splitlines()[1].endswith(",")


def test_bootstrap_artifacts(tmp_path, capsys):
    data = write(tmp_path, "iv.csv", INTERVALS)
    out_dir = str(tmp_path / "boot")
    code, out, _ = run(
        ["bootstrap", "--data", data, "-B", "8", "--boot-seed", "5",
         "--global-budget", "15", "--out-dir", out_dir],
        capsys,
    )
    assert code == 0
    bands = open(os.path.join(out_dir, "bands.csv")).read().splitlines()
    assert bands[0] == "tau,raw_lo,raw_hi,smooth_lo,smooth_hi"
    summary = json.load(open(os.path.join(out_dir, "summary.json")))
    assert summary["n_boot"] == 8
    assert summary["n_success"] + summary["n_excluded"] == 8
    assert summary["level"] == 0.95

    code, _, _ = run(
        ["bootstrap", "--data", data, "-B", "1", "--out-dir", out_dir], capsys
    )
    assert code == 2


def test_threads_env(monkeypatch):
    from sise.cli import _default_threads

    monkeypatch.delenv("SISE_THREADS", raising=False)
    assert _default_threads() == 1
    monkeypatch.setenv("SISE_THREADS", "4")
    assert _default_threads() == 4
    monkeypatch.setenv("SISE_THREADS", "junk")
    assert _default_threads() == 1


@pytest.mark.filterwarnings("ignore::sise.PenaltyFloorWarning")
def test_fit_collapsed_support_still_fits(tmp_path, capsys):
    # every interval contains t = 3, so the NPMLE is a single point mass and
    # the grid is one bin wide; the fit must come back raw with bandwidth 0
    data = write(tmp_path, "point.csv",
                 "left,right\n1.2,3.4\n2.0,5.0\n0.8,\n3.0,3.0\n2.5,6.0\n1.0,4.0\n")
    code, out, _ = run(fit_args(data), capsys)
    assert code == 0
    report = json.loads(out)
    assert report["bandwidth"] == 0.0
    assert report["report"]["turning_points"] == 0
