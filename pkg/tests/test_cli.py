import csv
import json
from importlib import resources

import pytest

from bslab import cli, config


def shipped(name):
    return str(resources.files("bslab") / "configs" / name)


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


SQUARE = {
    "potentials": {"12": {"shape": "square-well", "depth": 1.0, "range": 1.0}},
    "twobody": {"grid_n": 200, "oracle": False, "excess": []},
}


@pytest.mark.parametrize("name", ["square_well.json", "exponential.json", "bounds.json", "threebody.json"])
def test_shipped_configs_validate(name, capsys):
    assert cli.main(["validate", "--config", shipped(name)]) == 0
    assert capsys.readouterr().out == ""


def test_theta_grid_range_warning(tmp_path, capsys):
    cfg = json.loads(open(shipped("threebody.json")).read())
    cfg["threebody"]["theta_grid"] = [1.0, 5.0]
    assert cli.main(["validate", "--config", write(tmp_path, cfg)]) == 0
    assert "warning" in capsys.readouterr().out


def test_missing_block_named(tmp_path, capsys):
    cfg = {"masses": [1, 1, 1], "threebody": {"theta_grid": [1.0, 2.0]}}
    assert cli.main(["validate", "--config", write(tmp_path, cfg), "--experiment", "threebody-scan"]) == 2
    assert "'potentials'" in capsys.readouterr().out


def test_all_violations_listed(tmp_path):
    cfg = {"masses": [1, -1, 1], "bogus": 1, "twobody": {"grid_n": 2}}
    rep = config.validate(cfg)
    text = "\n".join(rep.errors)
    assert len(rep.errors) >= 3
    assert "bogus" in text and "masses/1" in text and "grid_n" in text


def test_run_square_well(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["run", "twobody-threshold", "--config", write(tmp_path, SQUARE), "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "twobody-threshold.csv")))
    assert float(rows[0]["lambda_cr"]) == pytest.approx(2.4674, abs=1e-4)
    meta = json.loads((out / "twobody-threshold.manifest.json").read_text())
    assert meta["config_hash"] == config.config_hash(SQUARE)
    assert {"numpy", "scipy", "python", "bslab"} <= meta["versions"].keys()
    assert meta["wall_time_s"] >= 0


def test_negative_mass_exit_2(tmp_path):
    cfg = json.loads(open(shipped("threebody.json")).read())
    cfg["masses"] = [1.0, -1.0, 1.0]
    out = tmp_path / "out"
    assert cli.main(["run", "threebody-scan", "--config", write(tmp_path, cfg), "--out", str(out)]) == 2
    assert not out.exists()


def test_unreadable_config(tmp_path):
    assert cli.main(["validate", "--config", str(tmp_path / "missing.json")]) == 2


def test_numerical_failure_exit_3(tmp_path):
    cfg = dict(SQUARE, twobody={"grid_n": 200, "k_samples": [1e-15, 1e-3]})
    out = tmp_path / "out"
    assert cli.main(["run", "wk-decomp", "--config", write(tmp_path, cfg), "--out", str(out)]) == 3
    assert not out.exists()


def test_byte_identical_and_thread_independent(tmp_path):
    cfg = dict(SQUARE, twobody={"grid_n": 200, "k_samples": {"start": 1e-3, "stop": 1e-2, "num": 6, "log": True}})
    path = write(tmp_path, cfg)
    blobs = []
    for i, threads in enumerate([1, 1, 3]):
        out = tmp_path / f"o{i}"
        assert cli.main(["run", "mu-curve", "--config", path, "--out", str(out), "--threads", str(threads)]) == 0
        blobs.append((out / "mu-curve.csv").read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


def test_seeded_zabyv_deterministic(tmp_path):
    cfg = {"bounds": {"zabyv": {"R0": [1.0], "delta": [0.5], "samples": 2000}}}
    path = write(tmp_path, cfg)
    a, b, c = (tmp_path / n for n in "abc")
    assert cli.main(["run", "zabyv", "--config", path, "--out", str(a), "--seed", "5"]) == 0
    assert cli.main(["run", "zabyv", "--config", path, "--out", str(b), "--seed", "5"]) == 0
    assert cli.main(["run", "zabyv", "--config", path, "--out", str(c), "--seed", "6"]) == 0
    assert (a / "zabyv.csv").read_bytes() == (b / "zabyv.csv").read_bytes()
    assert (a / "zabyv.csv").read_bytes() != (c / "zabyv.csv").read_bytes()


def test_figures(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = {"bounds": {"z_samples": {"start": 0.1, "stop": 1e-4, "num": 4, "log": True}}}
    out = tmp_path / "out"
    assert cli.main(["run", "lemma3", "--config", write(tmp_path, cfg), "--out", str(out), "--figures"]) == 0
    png = out / "lemma3.png"
    assert png.exists() and png.read_bytes()[:4] == b"\x89PNG"
    assert "lemma3.png" in json.loads((out / "lemma3.manifest.json").read_text())["files"]


def test_csv_header_always_present(tmp_path):
    cfg = {"bounds": {"xi_samples": [0.5, 1.0]}}
    out = tmp_path / "out"
    assert cli.main(["run", "green-bound", "--config", write(tmp_path, cfg), "--out", str(out)]) == 0
    lines = (out / "green-bound.csv").read_text().splitlines()
    assert lines[0] == "xi,G0,G0_closed_form,bound,bound_sharp" and len(lines) == 3
