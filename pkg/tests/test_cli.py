"""CLI tests: exit codes, atomic outputs, sidecars, byte-level determinism."""

import csv
import json
import os

import numpy as np
import pytest

from diversample.cli import main
from diversample.data import load_csv
from diversample.evaluation import config_to_json, DatasetSpec, ExperimentConfig
from diversample.classifiers import ModelSpec


def run(args):
    return main(list(args))


@pytest.fixture()
def data_csv(tmp_path):
    path = tmp_path / "train.csv"
    assert run(["gen-synth", "--n-major", "60", "--n-minor", "20",
                "--seed", "5", "--out", str(path)]) == 0
    return str(path)


# -- exit codes -----------------------------------------------------------------


def test_usage_error_exits_one(tmp_path, capsys):
    assert run(["diversity-select", "--input", "x.csv",
                "--out", str(tmp_path / "o.csv")]) == 1  # --keep missing
    assert "--keep" in capsys.readouterr().err
    assert run(["no-such-command"]) == 1
    assert run(["resample", "--bogus-flag"]) == 1
    assert run([]) == 1


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "resample" in capsys.readouterr().out


def test_unreadable_csv_exits_two_naming_path(tmp_path, capsys):
    missing = str(tmp_path / "nope.csv")
    assert run(["resample", "--input", missing,
                "--out", str(tmp_path / "o.csv")]) == 2
    assert "nope.csv" in capsys.readouterr().err


def test_validation_error_prints_class_name(tmp_path, capsys, data_csv):
    out = str(tmp_path / "kept.csv")
    assert run(["diversity-select", "--input", data_csv, "--keep", "5000",
                "--out", out]) == 2
    err = capsys.readouterr().err
    assert err.startswith("RTooLargeError")
    assert not os.path.exists(out)  # failed runs leave nothing behind


def test_non_numeric_cell_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1.0,2.0\n1.0,oops\n")
    assert run(["diversity-select", "--input", str(bad), "--keep", "1",
                "--out", str(tmp_path / "o.csv")]) == 2
    assert "NonNumericCellError" in capsys.readouterr().err


# -- gen-synth / resample ----------------------------------------------------------


def test_gen_synth_output_loads_and_reruns_identically(tmp_path, data_csv):
    loaded = load_csv(data_csv)
    assert len(loaded) == 80
    assert int(loaded.labels.sum()) == 20
    again = tmp_path / "again.csv"
    assert run(["gen-synth", "--n-major", "60", "--n-minor", "20",
                "--seed", "5", "--out", str(again)]) == 0
    assert again.read_bytes() == open(data_csv, "rb").read()
    sidecar = json.loads((tmp_path / "train.csv.config.json").read_text())
    assert sidecar["command"] == "gen-synth"
    assert sidecar["seed"] == 5 and sidecar["dim"] == 2


def test_resample_balances_and_marks_provenance(tmp_path, data_csv):
    out = tmp_path / "balanced.csv"
    assert run(["resample", "--input", data_csv, "--method", "ROS",
                "--seed", "3", "--provenance", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["x0", "x1", "label", "provenance"]
    labels = [r[2] for r in rows[1:]]
    assert labels.count("1") == labels.count("0") == 60
    tags = {r[3] for r in rows[1:]}
    assert tags == {"original-majority", "original-minority", "duplicated"}
    # without --provenance the dataset is identical, minus the tag column
    plain = tmp_path / "plain.csv"
    assert run(["resample", "--input", data_csv, "--method", "ROS",
                "--seed", "3", "--out", str(plain)]) == 0
    plain_rows = list(csv.reader(plain.open()))
    assert [r[:3] for r in rows] == plain_rows


def test_resample_diversity_smoteus_runs(tmp_path, data_csv):
    out = tmp_path / "hybrid.csv"
    assert run(["resample", "--input", data_csv, "--method", "smoteus",
                "--diversity", "--size-ratio", "0.5", "--seed", "1",
                "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) - 1 == 40  # round(0.5 * 80), split 20/20
    labels = [r[2] for r in rows[1:]]
    assert labels.count("1") == 20 and labels.count("0") == 20


def test_resample_infeasible_plan_exits_two(tmp_path, data_csv, capsys):
    assert run(["resample", "--input", data_csv, "--method", "OSUS",
                "--size-ratio", "0.01", "--out", str(tmp_path / "o.csv")]) == 2
    assert "RatioInfeasibleError" in capsys.readouterr().err


def test_resample_bad_flag_value_exits_two(tmp_path, data_csv, capsys):
    assert run(["resample", "--input", data_csv, "--balance", "-2",
                "--out", str(tmp_path / "o.csv")]) == 2
    assert "ValueError" in capsys.readouterr().err


# -- diversity-select --------------------------------------------------------------


def test_diversity_select_keeps_rows_from_input(tmp_path, data_csv):
    out = tmp_path / "kept.csv"
    assert run(["diversity-select", "--input", data_csv, "--keep", "10",
                "--seed", "2", "--out", str(out)]) == 0
    kept = list(csv.reader(out.open()))[1:]
    assert len(kept) == 10
    original = {tuple(float(v) for v in r)
                for r in list(csv.reader(open(data_csv)))[1:]}
    # label column parses as a feature here; kept rows must come from the input
    assert all(tuple(float(v) for v in r) in original for r in kept)
    sidecar = json.loads((tmp_path / "kept.csv.config.json").read_text())
    assert sidecar["command"] == "diversity-select"
    assert sidecar["keep"] == 10 and sidecar["theta"] == 1.0


def test_diversity_select_deterministic(tmp_path, data_csv):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert run(["diversity-select", "--input", data_csv, "--keep", "7",
                    "--seed", "4", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_diversity_select_trace_logs_every_removal(tmp_path, data_csv):
    out, trace = tmp_path / "kept.csv", tmp_path / "trace.csv"
    assert run(["diversity-select", "--input", data_csv, "--keep", "10",
                "--seed", "2", "--trace", str(trace), "--out", str(out)]) == 0
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["removed_row", "contribution", "step"]
    assert len(rows) - 1 == 80 - 10
    assert [int(r[2]) for r in rows[1:]] == list(range(1, 71))
    removed = [int(r[0]) for r in rows[1:]]
    kept = len(list(csv.reader(out.open()))) - 1
    # rows count from 1; removed and kept rows partition the input
    assert set(removed).issubset(range(1, 81)) and len(set(removed)) == 70
    assert kept == 10
    assert all(float(r[1]) >= 0.0 for r in rows[1:])


# -- evaluate ------------------------------------------------------------------------


def test_evaluate_writes_metrics_and_curve(tmp_path, data_csv):
    out = tmp_path / "metrics.csv"
    curve = tmp_path / "curve.csv"
    assert run(["evaluate", "--input", data_csv, "--method", "RUS",
                "--diversity", "--classifier", "knn", "--k", "3",
                "--seed", "9", "--curve", str(curve), "--out", str(out)]) == 0
    metrics = dict(list(csv.reader(out.open()))[1:])
    assert 0.0 < float(metrics["pr_auc"]) <= 1.0
    assert int(metrics["test_rows"]) == 20
    points = list(csv.reader(curve.open()))
    assert points[0] == ["recall", "precision"]
    recalls = [float(r) for r, _ in points[1:]]
    assert recalls == sorted(recalls) and recalls[-1] == 1.0
    sidecar = json.loads((tmp_path / "metrics.csv.config.json").read_text())
    assert sidecar["classifier"] == "knn" and sidecar["k"] == 3
    assert sidecar["trees"] == 100  # defaults included


def test_evaluate_level_too_high_exits_two(tmp_path, data_csv, capsys):
    assert run(["evaluate", "--input", data_csv, "--level", "0.9",
                "--out", str(tmp_path / "m.csv")]) == 2
    assert "LevelNotBelowCurrentError" in capsys.readouterr().err


# -- experiment ----------------------------------------------------------------------


def write_config(tmp_path, **overrides):
    config = ExperimentConfig(
        datasets=(DatasetSpec(name="synth", n_major=40, n_minor=14, seed=2),),
        methods=(("RUS", False), ("RUS", True)),
        classifiers=(ModelSpec(kind="GLM"),),
        imbalance_levels=("original",),
        repetitions=4,
        master_seed=6,
    )
    for key, value in overrides.items():
        object.__setattr__(config, key, value)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config_to_json(config)))
    return str(path)


def test_experiment_end_to_end(tmp_path):
    config = write_config(tmp_path)
    out = tmp_path / "results.csv"
    tables = tmp_path / "tables.txt"
    curves = tmp_path / "curves"
    assert run(["experiment", "--config", config, "--out", str(out),
                "--tables", str(tables), "--curves", str(curves)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["dataset", "level", "method", "diversity",
                       "classifier", "repetition", "pr_auc"]
    assert len(rows) == 1 + 2 * 4
    summary = list(csv.reader((tmp_path / "results-summary.csv").open()))
    assert summary[0][-2:] == ["wilcoxon_p", "significant"]
    assert len(summary) == 3
    assert summary[2][-1] in ("", "*")
    text = tables.read_text()
    assert "D-RUS" in text and "±" in text
    curve_files = sorted(os.listdir(curves))
    assert curve_files == ["synth_original_D-RUS_GLM.csv",
                           "synth_original_RUS_GLM.csv"]
    sidecar = json.loads((tmp_path / "results.csv.config.json").read_text())
    assert sidecar["repetitions"] == 4
    assert sidecar["master_seed"] == 6


def test_experiment_byte_identical_across_runs_and_threads(tmp_path):
    config = write_config(tmp_path)
    outputs = []
    for name, threads in (("r1.csv", "1"), ("r2.csv", "1"), ("r4.csv", "4")):
        out = tmp_path / name
        assert run(["experiment", "--config", config, "--out", str(out),
                    "--threads", threads]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]
    summaries = [
        (tmp_path / f"{stem}-summary.csv").read_bytes()
        for stem in ("r1", "r2", "r4")
    ]
    assert summaries[0] == summaries[1] == summaries[2]


def test_experiment_sidecar_round_trips(tmp_path):
    config = write_config(tmp_path)
    first = tmp_path / "first.csv"
    assert run(["experiment", "--config", config, "--out", str(first)]) == 0
    echoed = tmp_path / "first.csv.config.json"
    second = tmp_path / "second.csv"
    assert run(["experiment", "--config", str(echoed),
                "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_experiment_bad_config_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["experiment", "--config", str(bad),
                "--out", str(tmp_path / "r.csv")]) == 2
    assert "JSONDecodeError" in capsys.readouterr().err
    bad.write_text(json.dumps({"datasets": [], "mystery": 1}))
    assert run(["experiment", "--config", str(bad),
                "--out", str(tmp_path / "r.csv")]) == 2


# -- sort-score ---------------------------------------------------------------------


@pytest.fixture()
def patients_csv(tmp_path):
    path = tmp_path / "patients.csv"
    path.write_text(
        "asa_ps,emergency,severity,malignancy,age_group\n"
        "1,elective,Minor,0,base\n"
        "4,emergency,Xmajor/Complex,0,base\n"
    )
    return str(path)


def test_sort_score_appends_probability(tmp_path, patients_csv):
    out = tmp_path / "scored.csv"
    assert run(["sort-score", "--patients", patients_csv,
                "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0][-1] == "probability"
    assert rows[0][:-1] == ["asa_ps", "emergency", "severity",
                            "malignancy", "age_group"]
    assert float(rows[1][-1]) == pytest.approx(0.0200, abs=1e-4)
    assert float(rows[2][-1]) == pytest.approx(0.924, abs=1e-3)


def test_sort_score_custom_coefficients(tmp_path, patients_csv):
    from diversample.sort import SORT_COEFFICIENTS

    coefficients = {name: 0.0 for name in SORT_COEFFICIENTS}
    path = tmp_path / "coef.json"
    path.write_text(json.dumps(coefficients))
    out = tmp_path / "scored.csv"
    assert run(["sort-score", "--patients", patients_csv,
                "--coefficients", str(path), "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert all(float(r[-1]) == 0.5 for r in rows[1:])


def test_sort_score_bad_patient_exits_two(tmp_path, capsys):
    path = tmp_path / "p.csv"
    path.write_text("asa_ps,emergency,severity,malignancy,age_group\n"
                    "9,elective,Minor,0,base\n")
    assert run(["sort-score", "--patients", str(path),
                "--out", str(tmp_path / "s.csv")]) == 2
    assert "InvalidFieldError" in capsys.readouterr().err
