"""CLI contract tests: exit codes, wiring, determinism, resolved configs."""

import math
from pathlib import Path

import numpy as np
import pytest

from ircn.cli import main
from ircn.config import RunConfig, parse_kv_lines
from ircn.train import load_state


def _dir_bytes(root: Path) -> dict:
    return {p.relative_to(root): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("ds") / "data"
    code = main(["gen-data", "--out", str(out), "--train", "1", "--test", "1",
                 "--res", "32", "--grid-res", "32", "--seed", "5"])
    assert code == 0
    return out


@pytest.fixture(scope="module")
def run_dir(dataset, tmp_path_factory):
    out = tmp_path_factory.mktemp("run") / "r0"
    code = main(["train", "--data", str(dataset), "--out", str(out),
                 "--set", "train.schedule=coarse_only",
                 "--set", "train.epochs_coarse=1",
                 "--set", "train.crop_size=32",
                 "--set", "train.images_per_step=1",
                 "--set", "sampler.n_points=64",
                 "--set", "train.normal_epochs=1"])
    assert code == 0
    return out


def test_gen_data_idempotent(tmp_path):
    out = tmp_path / "data"
    args = ["gen-data", "--out", str(out), "--train", "1", "--test", "1",
            "--res", "32", "--grid-res", "32", "--seed", "5"]
    assert main(args) == 0
    first = _dir_bytes(out)
    assert main(args) == 0
    second = _dir_bytes(out)
    assert sorted(first) == sorted(second)
    for name in first:
        assert first[name] == second[name], name


def test_gen_data_rejects_odd_resolution(tmp_path):
    assert main(["gen-data", "--out", str(tmp_path / "x"), "--res", "13"]) == 2


def test_unknown_config_key_rejected(tmp_path):
    code = main(["train", "--data", str(tmp_path), "--out", str(tmp_path / "o"),
                 "--set", "train.bogus=1"])
    assert code == 2


def test_bad_value_rejected(tmp_path):
    code = main(["train", "--data", str(tmp_path), "--out", str(tmp_path / "o"),
                 "--set", "train.epochs_coarse=soon"])
    assert code == 2


def test_missing_dataset_is_io_error(tmp_path):
    code = main(["train", "--data", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "o")])
    assert code == 3


def test_help_exits_clean(capsys):
    assert main(["--help"]) == 0
    assert "gen-data" in capsys.readouterr().out


def test_train_outputs(run_dir, dataset):
    assert (run_dir / "model.ckpt").exists()
    assert (run_dir / "train.log").exists()
    resolved = parse_kv_lines((run_dir / "resolved.config").read_text())
    assert resolved["dataset.resolution"] == "32"
    assert resolved["dataset.dir"] == str(dataset)
    assert resolved["train.schedule"] == "coarse_only"
    # the resolved snapshot reloads into the same TrainConfig
    cfg = RunConfig.from_sources(run_dir / "resolved.config")
    tc = cfg.train_config()
    assert tc.resolution == 32 and tc.epochs_coarse == 1
    state = load_state(run_dir / "model.ckpt")
    assert state.epochs["coarse"] == 1 and state.normal is not None


def test_config_file_and_override_precedence(tmp_path):
    (tmp_path / "c.cfg").write_text("train.epochs_coarse=7\nseed=3\n")
    cfg = RunConfig.from_sources(tmp_path / "c.cfg", ["train.epochs_coarse=9"])
    assert cfg["train.epochs_coarse"] == 9
    assert cfg["seed"] == 3


def test_reconstruct_deterministic(run_dir, dataset, tmp_path):
    args = ["reconstruct", "--ckpt", str(run_dir / "model.ckpt"),
            "--data", str(dataset), "--index", "1",
            "--set", "recon.resolution=24", "--set", "recon.level=coarse",
            "--set", "recon.metric_samples=500"]
    outs = []
    for name in ("a.obj", "b.obj"):
        out = tmp_path / name
        code = main(args + ["--out", str(out)])
        assert code in (0, 4)  # barely-trained model may extract nothing
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    assert outs[0].with_suffix(".report").exists()
    assert (tmp_path / "resolved.config").exists()


def test_reconstruct_bad_index(run_dir, dataset, tmp_path):
    code = main(["reconstruct", "--ckpt", str(run_dir / "model.ckpt"),
                 "--data", str(dataset), "--index", "9",
                 "--out", str(tmp_path / "m.obj")])
    assert code == 2


def test_reconstruct_predicted_back_normals(run_dir, dataset, tmp_path):
    code = main(["reconstruct", "--ckpt", str(run_dir / "model.ckpt"),
                 "--data", str(dataset), "--index", "1",
                 "--out", str(tmp_path / "m.obj"),
                 "--predicted-back-normals",
                 "--set", "recon.resolution=16", "--set", "recon.level=coarse",
                 "--set", "recon.metric_samples=500"])
    assert code in (0, 4)


def test_eval_stub_meets_discretization_bound(dataset, tmp_path, capsys):
    out = tmp_path / "table.txt"
    code = main(["eval", "--stub", "--data", str(dataset), "--split", "test",
                 "--out", str(out),
                 "--set", "recon.resolution=48",
                 "--set", "recon.metric_samples=2000"])
    assert code == 0
    capsys.readouterr()
    mean_line = [l for l in out.read_text().splitlines() if l.startswith("    mean")]
    assert len(mean_line) == 1
    # columns: mean, "<n> ok", chamfer, p2s, nc, iou
    chamfer = float(mean_line[0].split()[3])
    assert chamfer <= 2.0 * math.sqrt(3.0) / 48.0


def test_eval_requires_ckpt_without_stub(dataset):
    assert main(["eval", "--data", str(dataset)]) == 2


def test_eval_empty_split_rejected(dataset):
    assert main(["eval", "--stub", "--data", str(dataset),
                 "--split", "validation"]) == 2


def test_gradcheck_passes():
    assert main(["gradcheck", "--seeds", "2"]) == 0


def test_ablate_exit_codes(monkeypatch, tmp_path):
    import ircn.cli as cli
    from ircn.verify import AblationResult

    def fake(which, seeds=(0, 1, 2)):
        return [AblationResult("stub", {"x": 1.0}, {"x": [1.0]}, {},
                               passed=fake.passed)]

    monkeypatch.setattr(cli, "run_all_ablations", fake)
    fake.passed = True
    out = tmp_path / "t.txt"
    assert main(["ablate", "--which", "c", "--out", str(out)]) == 0
    assert "stub" in out.read_text()
    fake.passed = False
    assert main(["ablate", "--which", "c"]) == 5
    assert main(["ablate", "--which", "z"]) == 2


def test_workdir_resolves_relative_paths(tmp_path):
    import os

    old = os.getcwd()
    try:
        code = main(["--workdir", str(tmp_path), "gen-data", "--out", "rel_data",
                     "--train", "1", "--test", "0", "--res", "32",
                     "--grid-res", "32"])
    finally:
        os.chdir(old)
    assert code == 0
    assert (tmp_path / "rel_data" / "resolved.config").exists()
