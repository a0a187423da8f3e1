import csv
import io
import json
import math

import pytest

from nbapprox.cli import build_grid, build_parser, main


def _run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parser_knows_every_command():
    parser = build_parser()
    for command in ("median-scan", "estimator-sim", "llt-error", "tv-scaling", "poisson-median"):
        args = parser.parse_args([command])
        assert args.command == command


def test_missing_command_is_usage_error():
    with pytest.raises(SystemExit) as e:
        main([])
    assert e.value.code == 2


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["median-scan", "--bogus"])
    assert e.value.code == 2


def test_invalid_parameter_is_usage_error(capsys):
    code, out, err = _run(capsys, "median-scan", "--p", "1.5", "--r-list", "1")
    assert code == 2
    assert out == ""
    assert "✗ Error" in err


def test_write_failure_exits_one(tmp_path, capsys):
    target = tmp_path / "missing" / "out.csv"
    code, _, err = _run(capsys, "median-scan", "--r-list", "1", "--out", str(target))
    assert code == 1
    assert "✗ Error" in err


def test_build_grid():
    assert build_grid(0.5, 1.5, 0.25) == [0.5, 0.75, 1.0, 1.25, 1.5]
    assert len(build_grid(0.5, 15.0, 0.25)) == 59
    assert build_grid(5.0, 5.0, 1.0) == [5.0]


def test_median_scan_geometric_row(capsys):
    code, out, err = _run(capsys, "median-scan", "--p", "0.5", "--r-list", "1")
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 1
    assert float(rows[0]["residual"]) == 0.0
    assert float(rows[0]["jittered_median"]) == 1.0
    assert "✓ Wrote 1 rows" in err


def test_median_scan_columns_and_determinism(tmp_path, capsys):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["median-scan", "--p", "0.25", "--r-min", "1", "--r-max", "10", "--r-step", "0.5"]
    assert main(argv + ["--out", str(first)]) == 0
    assert main(argv + ["--out", str(second)]) == 0
    capsys.readouterr()
    text = first.read_text()
    assert text == second.read_text()
    assert text.splitlines()[0] == "r,integer_median_minus_mean,jittered_median,asymptotic,residual"
    assert len(_rows(text)) == 19


def test_json_mirrors_csv(tmp_path, capsys):
    code, out, _ = _run(capsys, "median-scan", "--r-list", "2", "3", "--format", "json")
    assert code == 0
    rows = json.loads(out)
    assert [row["r"] for row in rows] == [2.0, 3.0]
    assert set(rows[0]) == {"r", "integer_median_minus_mean", "jittered_median", "asymptotic", "residual"}


def test_estimator_sim_is_byte_deterministic(tmp_path, capsys):
    argv = ["estimator-sim", "--r-list", "0.5", "2", "--n", "30", "--reps", "20", "--seed", "7"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(first)]) == 0
    assert main(argv + ["--out", str(second)]) == 0
    capsys.readouterr()
    assert first.read_bytes() == second.read_bytes()
    rows = _rows(first.read_text())
    assert list(rows[0]) == ["r", "bias_robust", "bias_ml", "rmse_robust", "rmse_ml", "rmse_ratio",
                             "degenerate_count"]
    assert [row["degenerate_count"] for row in rows] == ["0", "0"]


def test_llt_error_table(capsys):
    code, out, _ = _run(capsys, "llt-error", "--p", "0.5", "--r-list", "100", "400", "1600")
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 4
    for row in rows[:-1]:
        assert float(row["max_abs_err_corrected_cdf"]) <= float(row["max_abs_err_classical_cdf"])
        assert row["fitted_slope"] == ""
    summary = rows[-1]
    assert summary["r"] == "slope"
    assert -1.75 <= float(summary["fitted_slope"]) <= -1.25
    assert float(summary["max_abs_err_classical_cdf"]) > float(summary["fitted_slope"])


def test_llt_error_single_r_has_nan_slope(capsys):
    code, out, _ = _run(capsys, "llt-error", "--r-list", "100")
    assert code == 0
    assert math.isnan(float(_rows(out)[-1]["fitted_slope"]))


def test_tv_scaling_table(capsys):
    code, out, _ = _run(capsys, "tv-scaling", "--p", "0.5", "--r-list", "16", "64", "256", "1024")
    assert code == 0
    rows = _rows(out)
    tvs = [float(row["tv"]) for row in rows[:-1]]
    assert all(0.0 <= tv <= 1.0 for tv in tvs)
    assert all(b < a for a, b in zip(tvs, tvs[1:]))
    assert rows[-1]["r"] == "slope"
    assert -0.6 <= float(rows[-1]["tv"]) <= -0.4


def test_poisson_median_table(capsys):
    code, out, _ = _run(capsys, "poisson-median", "--lambda-min", "5", "--lambda-max", "500",
                        "--lambda-step", "5")
    assert code == 0
    rows = _rows(out)
    assert len(rows) == 100
    assert all(row["eq12_ok"] == "true" for row in rows)
    for row in rows:
        assert float(row["lambda"]) * abs(float(row["residual_vs_one_third"])) <= 0.05


def test_poisson_median_at_log_two(capsys):
    lam = repr(math.log(2.0))
    code, out, _ = _run(capsys, "poisson-median", "--lambda-min", lam, "--lambda-max", lam,
                        "--lambda-step", "1")
    assert code == 0
    row = _rows(out)[0]
    assert float(row["jittered_median_minus_lambda"]) + math.log(2.0) == pytest.approx(1.0)
    assert row["eq12_ok"] == "true"


def test_metrics_file_written(tmp_path, capsys):
    metrics = tmp_path / "nbapprox.prom"
    code, _, _ = _run(capsys, "median-scan", "--r-list", "1", "--metrics-file", str(metrics))
    assert code == 0
    text = metrics.read_text()
    assert "nbapprox_command_seconds" in text
    assert 'command="median-scan"' in text


def test_estimator_sim_defaults_to_raw_ml(capsys):
    base = ["estimator-sim", "--r-list", "5", "--n", "50", "--reps", "30", "--seed", "3"]
    code, default_out, _ = _run(capsys, *base)
    assert code == 0
    _, raw_out, _ = _run(capsys, *base, "--raw-ml")
    _, jittered_out, _ = _run(capsys, *base, "--jittered-ml")
    assert default_out == raw_out
    assert default_out != jittered_out


def test_ml_input_flags_are_exclusive():
    with pytest.raises(SystemExit) as e:
        main(["estimator-sim", "--raw-ml", "--jittered-ml"])
    assert e.value.code == 2


def test_json_writes_null_for_nan(capsys):
    code, out, _ = _run(capsys, "llt-error", "--r-list", "100", "--format", "json")
    assert code == 0
    assert "NaN" not in out
    rows = json.loads(out)
    assert rows[-1]["r"] == "slope"
    assert rows[-1]["fitted_slope"] is None
    assert rows[0]["fitted_slope"] is None


def test_missing_setting_is_usage_error(monkeypatch, capsys):
    monkeypatch.setattr("nbapprox.cli.command_defaults", lambda name: {"p": 0.5, "r_min": 1.0, "r_max": 3.0})
    code, out, err = _run(capsys, "median-scan")
    assert code == 2
    assert out == ""
    assert "missing setting 'r_step'" in err
    assert "--r-step" in err
