import csv
import json
from pathlib import Path

import pytest
import yaml
from fastapi.testclient import TestClient
from pydantic import ValidationError

from smerl_lab import harness
from smerl_lab.cli import main
from smerl_lab.config import load_config, packaged_config, parse_config, validation_messages
from smerl_lab.service import app

SMALL = {
    "schema_version": 1,
    "name": "small",
    "env": {"kind": "gridworld", "params": {"width": 5, "height": 3, "start_cell": [0, 1], "goal_cell": [4, 1],
                                            "horizon": 12}},
    "trainer": {"modes": ["SAC1", "SMERL"], "n_latents": 3, "alpha": 1.0, "epsilon": 2.0,
                "optimal_return": {"source": "exact"}, "entropy_temperature": 0.1, "learning_rate": 0.5,
                "discount": 0.95, "episodes": 40, "replay_capacity": 200, "batch_size": 16},
    "eval": {"kind": "obstacle", "levels": [0, 1, 3], "location": [[2, 1], [2, 0], [2, 2]], "budget_k": 3,
             "n_eval": 2},
    "seeds": [0, 1],
}


def write_config(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def data_rows(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# ---- config -------------------------------------------------------------------


def test_packaged_configs_parse():
    for name in ("gridworld", "pointmass", "verify"):
        cfg = load_config(packaged_config(name))
        assert cfg.config_hash == load_config(packaged_config(name)).config_hash


def test_unknown_key_names_the_field():
    bad = json.loads(json.dumps(SMALL))
    bad["trainer"]["learning_rat"] = 0.1
    with pytest.raises(ValidationError) as err:
        parse_config(bad)
    assert any(m.startswith("trainer.learning_rat") for m in validation_messages(err.value))


def test_smerl_without_optimum_rejected():
    bad = json.loads(json.dumps(SMALL))
    del bad["trainer"]["optimal_return"]
    with pytest.raises(ValidationError, match="optimal_return"):
        parse_config(bad)


def test_overrides_change_hash():
    cfg = parse_config(SMALL)
    over = cfg.with_overrides(seed=5, modes=["SAC1"])
    assert over.seeds == [5] and over.trainer.modes == ["SAC1"]
    assert over.config_hash != cfg.config_hash


# ---- harness --------------------------------------------------------------------


def test_training_is_reproducible(tmp_path):
    cfg = parse_config(SMALL).with_overrides(seed=0)
    harness.train(cfg, tmp_path / "a")
    harness.train(cfg, tmp_path / "b")
    for mode in ("SAC1", "SMERL"):
        rel = Path("train") / mode / "seed_0"
        assert (tmp_path / "a" / rel / "metrics.csv").read_bytes() == (tmp_path / "b" / rel / "metrics.csv").read_bytes()
        assert (tmp_path / "a" / rel / "policy.ckpt").read_bytes() == (tmp_path / "b" / rel / "policy.ckpt").read_bytes()
    text = (tmp_path / "a" / "train" / "SMERL" / "seed_0" / "metrics.csv").read_text()
    assert text.startswith(f"# config_hash: {cfg.config_hash}\n# seeds: [0]\n")


@pytest.fixture(scope="module")
def swept(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = parse_config(SMALL)
    res = harness.sweep(cfg, out, train_inline=True)
    return cfg, out, res


def test_sweep_outputs(swept):
    cfg, out, res = swept
    assert not res["errors"]
    rows = data_rows(out / "sweep" / "plot_data.csv")
    L, M = 3, 2
    assert sum(r["kind"] == "raw" for r in rows) == 2 * L * M  # two seeds
    assert sum(r["kind"] == "aggregate" for r in rows) == L * M
    table = data_rows(out / "sweep" / "tables" / "SMERL_seed_1.csv")
    assert [float(r["level"]) for r in table] == [0.0, 1.0, 3.0]
    report = json.loads((out / "sweep" / "report.json").read_text())
    assert report["provenance"]["config_hash"] == cfg.config_hash


def test_report_rerender_is_identical(swept, tmp_path):
    _, out, _ = swept
    harness.report(out / "sweep" / "report.json", tmp_path)
    for name in ("plot_data.csv", "plot_data_success.csv", "tables/SMERL_mean.csv", "tables/SAC1_seed_0.csv"):
        assert (tmp_path / name).read_bytes() == (out / "sweep" / name).read_bytes()


# ---- cli / service ----------------------------------------------------------------


def test_cli_sweep_without_checkpoints_lists_them(tmp_path, capsys):
    code = main(["sweep", "--config", write_config(tmp_path, SMALL), "--out", str(tmp_path / "none")])
    assert code == 3
    err = capsys.readouterr().err
    assert "policy.ckpt" in err and "SMERL" in err and "seed_1" in err


def test_cli_invalid_config_exit_1(tmp_path, capsys):
    bad = dict(SMALL, bogus=1)
    assert main(["train", "--config", write_config(tmp_path, bad)]) == 1
    assert "bogus" in capsys.readouterr().err
    assert main(["train", "--config", str(tmp_path / "nope.yaml")]) == 1


def test_cli_verify_exit_codes(tmp_path, capsys):
    base = {"schema_version": 1, "verify": {"n_instances": 20, "mi_instances": 2}, "output_dir": str(tmp_path)}
    assert main(["verify", "--config", write_config(tmp_path, base)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["violations"] == 0 and not out["vacuous"]
    mutated = {**base, "verify": {"n_instances": 30, "mi_instances": 0, "mutation": True}}
    assert main(["verify", "--config", write_config(tmp_path, mutated, "m.yaml")]) == 2
    capsys.readouterr()
    empty = {**base, "verify": {"n_instances": 0, "mi_instances": 0}}
    assert main(["verify", "--config", write_config(tmp_path, empty, "e.yaml")]) == 0
    assert json.loads(capsys.readouterr().out)["vacuous"] is True


def test_cli_train_then_report(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    out = str(tmp_path / "run")
    assert main(["train", "--config", cfg, "--out", out, "--seed-override", "3", "--modes", "SAC1"]) == 0
    assert (tmp_path / "run" / "train" / "SAC1" / "seed_3" / "policy.ckpt").exists()
    assert not (tmp_path / "run" / "train" / "SMERL").exists()
    assert main(["report", "--out", out]) == 3  # nothing swept yet
    capsys.readouterr()
    assert main(["sweep", "--config", cfg, "--out", out, "--seed-override", "3", "--modes", "SAC1"]) == 0
    assert main(["report", "--out", out]) == 0


def test_service_endpoints(tmp_path):
    client = TestClient(app)
    assert client.get("/health").json() == {"status": "ok"}
    resp = client.post("/train", json={"config": dict(SMALL, trainer={**SMALL["trainer"], "episodes": -1})})
    assert resp.status_code == 422 and any("episodes" in e for e in resp.json()["errors"])
    resp = client.post("/report", json={"report": str(tmp_path / "missing.json")})
    assert resp.status_code == 404
    resp = client.post("/verify", json={"config": {"verify": {"n_instances": 3, "mi_instances": 1}},
                                        "out": str(tmp_path)})
    assert resp.status_code == 200 and resp.json()["violations"] == 0
