import json

import numpy as np
import pytest

from geofourier.artifacts import embeddings_from_bytes, read_checkpoint, read_dataset
from geofourier.cli import main
from geofourier.errors import CheckpointMismatch, DataMismatch, DivergedTraining
from geofourier.training import RunConfig, train


def read_csv_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    assert lines[0].startswith("index,")
    return np.array([[float(x) for x in ln.split(",")[1:]] for ln in lines[1:]])


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture(scope="module")
def topo_data(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "topo.jsonl"
    assert main(["gendata", "--task", "topo", "--pair-type", "point-polygon", "--per-class", "100",
                 "--out", str(path)]) == 0
    return path


def test_gendata_counts(topo_data, tmp_path, capsys):
    lines = topo_data.read_text().splitlines()
    assert len(lines) == 201 and json.loads(lines[0])["meta"]["count"] == 200
    out = tmp_path / "dir.jsonl"
    code, text, _ = run(capsys, "gendata", "--task", "direction", "--pair-type", "point-point",
                        "--per-class", 10, "--out", out)
    assert code == 0 and "NNE" in text
    ds, header = read_dataset(out)
    assert len(ds) == 160 and len(set(ds.labels().tolist())) == 16
    assert header["config_hash"] == RunConfig.from_dict(header["config"]).config_hash()


def test_invalid_task_is_usage_error(tmp_path, capsys):
    code, _, err = run(capsys, "gendata", "--task", "shape", "--out", tmp_path / "x.jsonl")
    assert code == 1 and "usage:" in err and "shape" in err
    code, _, err = run(capsys, "gendata", "--bogus-flag")
    assert code == 1 and "usage:" in err


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"task": "distance", "pair_type": "point-point", "per_class": 3}))
    out = tmp_path / "d.jsonl"
    assert run(capsys, "gendata", "--config", cfg, "--per-class", 4, "--out", out)[0] == 0
    ds, _ = read_dataset(out)
    assert ds.task == "distance" and len(ds) == 8
    cfg.write_text(json.dumps({"no_such_field": 1}))
    assert run(capsys, "gendata", "--config", cfg, "--out", out)[0] == 1


GEOMS = "POINT (0.1 0.2)\nLINESTRING (0 0, 0.5 0.5, 0.9 0.1)\nPOLYGON ((0 0, 0.4 0, 0.4 0.3, 0 0.3, 0 0))\n"


def test_encode_rows_and_determinism(tmp_path, capsys):
    src = tmp_path / "g.wkt"
    src.write_text(GEOMS)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    code, text, _ = run(capsys, "encode", src, "--out", a, "--binary", tmp_path / "a.bin")
    assert code == 0 and "freshly initialized" in text
    assert run(capsys, "encode", src, "--out", b, "--binary", tmp_path / "b.bin")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    assert a.read_text().startswith("# config_hash=")
    rows = read_csv_rows(a)
    assert rows.shape == (3, 32)
    arr, _ = embeddings_from_bytes((tmp_path / "a.bin").read_bytes())
    assert np.array_equal(arr, rows)


def test_encode_translation_law_on_raw_features(tmp_path, capsys):
    src = tmp_path / "p.wkt"
    src.write_text("POINT (0.1 0.2)\nPOINT (0.35 -0.4)\n")
    feats = tmp_path / "f.csv"
    assert run(capsys, "encode", src, "--out", tmp_path / "e.csv", "--features", feats)[0] == 0
    vals = read_csv_rows(feats)
    z, phi = vals[:, :210], vals[:, 210:]
    assert np.max(np.abs(z[0] - z[1])) <= 1e-10
    assert np.max(np.abs(phi[0] - phi[1])) > 0.1


def test_encode_parse_error_has_line_number(tmp_path, capsys):
    src = tmp_path / "bad.wkt"
    src.write_text("POINT (0 0)\nPOINT (oops)\n")
    code, _, err = run(capsys, "encode", src, "--out", tmp_path / "e.csv")
    assert code == 2 and "bad.wkt:2" in err


def test_train_epochs_zero_is_chance(topo_data, tmp_path, capsys):
    report = tmp_path / "r.json"
    code, _, _ = run(capsys, "train", "--data", topo_data, "--checkpoint", tmp_path / "m.bin",
                     "--epochs", 0, "--runs", 1, "--report", report, "--quiet")
    assert code == 0
    acc = json.loads(report.read_text())["runs"][0]["test"]["accuracy"]
    assert abs(acc - 0.5) <= 0.05


def test_train_is_seeded_and_eval_reuses_checkpoint(topo_data, tmp_path, capsys):
    reports = []
    for name in ("a", "b"):
        rep = tmp_path / f"{name}.json"
        ck = tmp_path / f"{name}.bin"
        assert run(capsys, "train", "--data", topo_data, "--checkpoint", ck, "--epochs", 2, "--runs", 2,
                   "--report", rep, "--quiet")[0] == 0
        reports.append(rep.read_bytes())
    assert reports[0] == reports[1]
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    params, header = read_checkpoint(tmp_path / "a.bin")
    assert "head.w1" in params and header["config"]["epochs"] == 2
    code, text, _ = run(capsys, "eval", "--checkpoint", tmp_path / "a.bin", "--data", topo_data,
                        "--split", "test", "--report", tmp_path / "e.json")
    assert code == 0
    ev = json.loads((tmp_path / "e.json").read_text())["metrics"]["test"]
    tr = json.loads(reports[0])["runs"][0]["test"]
    assert ev == tr


def test_eval_rejects_incompatible_checkpoint(topo_data, tmp_path, capsys):
    ck = tmp_path / "m.bin"
    assert run(capsys, "train", "--data", topo_data, "--checkpoint", ck, "--epochs", 0, "--runs", 1,
               "--w-axis", 6, "--quiet")[0] == 0
    code, _, err = run(capsys, "eval", "--checkpoint", ck, "--data", topo_data)
    assert code == 2 and "w_axis" in err
    from geofourier.artifacts import check_compatible
    _, header = read_checkpoint(ck)
    _, data_header = read_dataset(topo_data)
    with pytest.raises(CheckpointMismatch):
        check_compatible(header, data_header)


def test_train_refuses_mismatched_task(topo_data, tmp_path, capsys):
    code, _, err = run(capsys, "train", "--data", topo_data, "--checkpoint", tmp_path / "m.bin",
                       "--task", "direction", "--epochs", 0, "--runs", 1)
    assert code == 2
    ds, header = read_dataset(topo_data)
    with pytest.raises(DataMismatch):
        train(RunConfig.from_dict({**header["config"], "task": "direction"}), ds, 0)


def test_divergence_aborts(topo_data):
    ds, header = read_dataset(topo_data)
    cfg = RunConfig.from_dict({**header["config"], "lr": 1e30, "epochs": 3})
    with pytest.raises(DivergedTraining), np.errstate(all="ignore"):
        train(cfg, ds, 0)


def test_missing_file_is_data_error(tmp_path, capsys):
    code, _, err = run(capsys, "train", "--data", tmp_path / "nope.jsonl", "--checkpoint", tmp_path / "m.bin")
    assert code == 2 and "nope.jsonl" in err


def test_verify_passes_and_controls_fail(capsys):
    code, text, _ = run(capsys, "verify", "--check", "segment_oracle", "--check", "unit_square")
    assert code == 0 and "2/2 checks passed" in text
    code, text, _ = run(capsys, "verify", "--check", "segment_oracle", "--mutate", "sinc")
    assert code == 3 and "FAIL" in text
    code, text, _ = run(capsys, "verify", "--check", "hermitian", "--check", "translation", "--tol", "1e-14")
    assert code == 3 and "FAIL" in text


def test_ablate_reports_every_variant(tmp_path, capsys):
    data = tmp_path / "d.jsonl"
    assert run(capsys, "gendata", "--task", "direction", "--pair-type", "point-point", "--per-class", 5,
               "--out", data)[0] == 0
    rep = tmp_path / "ab.json"
    code, text, _ = run(capsys, "ablate", "--data", data, "--epochs", 1, "--runs", 1, "--report", rep)
    assert code == 0
    assert set(json.loads(rep.read_text())["variants"]) == {"learned", "concat", "mag", "phase"}


def test_no_command_prints_help(capsys):
    code, text, _ = run(capsys)
    assert code == 1 and "gendata" in text
