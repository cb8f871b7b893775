import csv
import json

import pytest

from photonic_qnn.cli import build_parser, main
from photonic_qnn.data import Dataset


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_gen_data_xor(tmp_path, capsys):
    out = tmp_path / "xor.csv"
    assert main(["gen-data", "xor", "--n-per-cluster", "4", "--seed", "2", "--out", str(out)]) == 0
    ds = Dataset.from_csv(out)
    assert len(ds) == 16 and ds.class_counts() == (8, 8)
    assert "16 rows" in capsys.readouterr().out


def test_gen_data_iris(tmp_path):
    out = tmp_path / "iris.csv"
    assert main(["gen-data", "iris", "--out", str(out)]) == 0
    assert Dataset.from_csv(out).class_counts() == (50, 50)


def test_train_writes_models_and_stats(tmp_path, capsys):
    rc = main(["train", "--model", "QNN2", "--iterations", "10", "--trials", "2", "--out", str(tmp_path)])
    assert rc == 0
    out = tmp_path / "train"
    specs = json.loads((out / "QNN2_models.json").read_text())
    assert len(specs) == 2 and len(specs[0]["params"]) == 2
    assert read_csv(out / "QNN2.csv")[0]["n"] == "2"
    assert "final loss" in capsys.readouterr().out


def test_train_adam_on_iris_sampled(tmp_path):
    rc = main(["train", "--model", "QNN6", "--dataset", "iris", "--optimizer", "adam", "--lr", "0.05",
               "--backend", "sampled", "--shots", "100", "--batch-size", "4", "--iterations", "5",
               "--trials", "1", "--out", str(tmp_path)])
    assert rc == 0
    rows = read_csv(tmp_path / "train" / "QNN6_traces.csv")
    assert {r["backend"] for r in rows} == {"sampled"} and rows[0]["batch_size"] == "4"


def test_train_adam_on_photonic_is_a_capability_error(tmp_path, capsys):
    rc = main(["train", "--model", "QNN2", "--optimizer", "adam", "--backend", "photonic", "--shots", "10",
               "--iterations", "2", "--trials", "1", "--out", str(tmp_path)])
    assert rc == 1
    failures = read_csv(tmp_path / "train" / "failures.csv")
    assert "not defined on the photonic backend" in failures[0]["message"]


def test_train_remote_stub(tmp_path):
    rc = main(["train", "--model", "QNN2", "--backend", "remote-stub", "--trials", "1", "--out", str(tmp_path)])
    assert rc == 1
    jobs = json.loads((tmp_path / "train" / "jobs.json").read_text())
    assert jobs[0]["status"] == "unsupported"


def test_ed_subcommand(tmp_path, capsys):
    rc = main(["ed", "--models", "QNN2", "ANN2", "--n-theta", "8", "--n-data", "8", "--trials", "1", "--out", str(tmp_path)])
    assert rc == 0
    rows = read_csv(tmp_path / "ed_table" / "ed_table.csv")
    assert [r["model"] for r in rows] == ["QNN2", "ANN2"]
    assert "normalized_ed" in capsys.readouterr().out


def test_sweep_shots(tmp_path, capsys):
    rc = main(["sweep-shots", "--shots", "10", "100", "--iterations", "5", "--trials", "2", "--out", str(tmp_path)])
    assert rc == 0
    summary = read_csv(tmp_path / "shot_sweep" / "summary.csv")
    assert [r["shots"] for r in summary] == ["10", "100"]
    assert "QNN6_shots100" in capsys.readouterr().out


def test_throughput(tmp_path, capsys):
    assert main(["throughput", "--rep-rate", "80e6"]) == 0
    assert capsys.readouterr().out.strip() == "195555.6 Hz"
    assert main(["throughput", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "throughput" / "throughput.csv")
    assert len(rows) == 4


@pytest.mark.parametrize("fmt", ["json", "toml"])
def test_reproduce_with_config_file(tmp_path, fmt):
    cfg = tmp_path / f"cfg.{fmt}"
    if fmt == "json":
        cfg.write_text(json.dumps({"experiment": "xor_compare", "models": ["QNN2"], "trials": 2,
                                   "train": {"max_iterations": 6}}))
    else:
        cfg.write_text('experiment = "xor_compare"\nmodels = ["QNN2"]\ntrials = 2\n[train]\nmax_iterations = 6\n')
    out = tmp_path / "res"
    assert main(["reproduce", "xor_compare", "--config", str(cfg), "--out", str(out)]) == 0
    rows = read_csv(out / "xor_compare" / "QNN2.csv")
    assert len(rows) == 7 and rows[0]["n"] == "2"


def test_command_line_overrides_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "xor_compare", "models": ["QNN2"], "trials": 5,
                               "train": {"max_iterations": 3}}))
    assert main(["reproduce", "xor_compare", "--config", str(cfg), "--trials", "1", "--out", str(tmp_path)]) == 0
    assert read_csv(tmp_path / "xor_compare" / "finals.csv")[0]["n"] == "1"


def test_errors_exit_with_code_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "shot_sweep"}))
    assert main(["reproduce", "xor_compare", "--config", str(cfg)]) == 2
    assert main(["train", "--model", "QNN2", "--dataset", str(tmp_path / "nope.csv")]) == 2
    assert main(["gen-data", "iris", "--iris-path", str(tmp_path / "nope.csv")]) == 2
    assert "error:" in capsys.readouterr().err


def test_parser_rejects_figure_numbers():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["reproduce", "fig4"])
