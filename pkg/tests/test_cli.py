"""End-to-end command behavior through the in-process entry point."""

import json

import pytest

from ganids.checkpoint import load_checkpoint
from ganids.cli import run
from ganids.features import read_feature_csv
from ganids.gan import GanModel


SCENARIO = {
    "version": 1,
    "dataset_id": "mini",
    "duration_s": 60.0,
    "stride": 10,
    "seed": 13,
    "benign_quota": 60,
    "malicious_quota": 20,
    "devices": [{"kind": "webcam_stream", "device_ip": "10.0.0.11",
                 "peer_ips": ["198.51.100.9"], "rate_pps": 40.0,
                 "len_mean": 900.0, "len_std": 250.0}],
    "attacks": [{"kind": "telnet_bruteforce", "source_ip": "203.0.113.66",
                 "target_ips": ["10.0.0.11"], "intensity_pps": 120.0,
                 "duration_s": 6.0, "start_s": 20.0}],
}


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """One simulated mini scenario shared by the command tests."""
    root = tmp_path_factory.mktemp("cli")
    scenario = root / "mini.json"
    scenario.write_text(json.dumps(SCENARIO))
    assert run(["simulate", "--scenario", str(scenario),
                "--out", str(root / "sim")]) == 0
    return root


def test_no_arguments_prints_help(capsys):
    assert run([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_missing_file_names_the_flag(tmp_path, capsys):
    code = run(["train", "--in", str(tmp_path / "nope.csv"),
                "--out", str(tmp_path / "m.json"), "--model", "forest"])
    assert code == 1
    err = capsys.readouterr().err
    assert "--in" in err
    assert "nope.csv" in err


def test_tree_training_rejects_gan_flags(workdir, capsys):
    code = run(["train", "--in", str(workdir / "sim" / "mini_features.csv"),
                "--out", str(workdir / "f.json"), "--model", "forest",
                "--epochs", "3"])
    assert code == 1
    assert "--epochs" in capsys.readouterr().err


def test_commands_echo_their_seed(workdir, capsys):
    scenario = workdir / "mini.json"
    assert run(["simulate", "--scenario", str(scenario),
                "--out", str(workdir / "echo"), "--seed", "5"]) == 0
    err = capsys.readouterr().err
    config = json.loads(err.strip().splitlines()[0])
    assert config["seed"] == 5
    assert config["subcommand"] == "simulate"


def test_simulate_writes_pcap_and_features(workdir):
    assert (workdir / "sim" / "mini.pcap").stat().st_size > 24
    vectors = read_feature_csv(workdir / "sim" / "mini_features.csv")
    assert len(vectors) == 80
    labels = [v.label.value for v in vectors]
    assert labels.count("benign") == 60
    assert labels.count("malicious") == 20


def test_simulate_is_reproducible(workdir):
    scenario = workdir / "mini.json"
    assert run(["simulate", "--scenario", str(scenario),
                "--out", str(workdir / "again")]) == 0
    assert (workdir / "again" / "mini.pcap").read_bytes() == \
        (workdir / "sim" / "mini.pcap").read_bytes()
    assert (workdir / "again" / "mini_features.csv").read_bytes() == \
        (workdir / "sim" / "mini_features.csv").read_bytes()


def test_extract_relabels_everything(workdir):
    out = workdir / "extracted.csv"
    assert run(["extract", "--in", str(workdir / "sim" / "mini.pcap"),
                "--out", str(out), "--devices", "10.0.0.11",
                "--stride", "10", "--label", "unlabeled"]) == 0
    vectors = read_feature_csv(out)
    assert vectors
    assert all(v.label.value == "unlabeled" for v in vectors)
    assert all(v.values.shape == (52,) for v in vectors)
    # Same packets, same stride: extraction reproduces the simulate vectors
    # before quota thinning, so there are at least as many rows.
    assert len(vectors) >= 80


def test_extract_requires_devices(workdir, capsys):
    code = run(["extract", "--in", str(workdir / "sim" / "mini.pcap"),
                "--out", str(workdir / "x.csv"), "--devices", " , "])
    assert code == 1
    assert "--devices" in capsys.readouterr().err


def test_train_score_eval_forest(workdir, capsys):
    features = workdir / "sim" / "mini_features.csv"
    checkpoint = workdir / "forest.json"
    scored = workdir / "scored_forest.csv"
    assert run(["train", "--in", str(features), "--out", str(checkpoint),
                "--model", "forest", "--seed", "3"]) == 0
    assert load_checkpoint(checkpoint).config.seed == 3

    assert run(["score", "--in", str(features), "--checkpoint", str(checkpoint),
                "--out", str(scored)]) == 0
    header = scored.read_text().splitlines()[0]
    assert header == "device_ip,label,score,recon_error,disc_error,verdict"

    out = workdir / "report_forest.json"
    assert run(["eval", "--in", str(scored), "--checkpoint", str(checkpoint),
                "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["models"][0]["model_kind"] == "forest"
    assert doc["models"][0]["metrics"]["tp"] + doc["models"][0]["metrics"]["fn"] == 20
    assert (workdir / "report_forest_sweep.csv").exists()
    assert (workdir / "report_forest_sweep.png").exists()
    assert "precision" in capsys.readouterr().out


def test_train_score_gan(workdir):
    features = workdir / "sim" / "mini_features.csv"
    checkpoint = workdir / "gan.json"
    assert run(["train", "--in", str(features), "--out", str(checkpoint),
                "--model", "gan-benign", "--seed", "1", "--epochs", "2",
                "--optimizer", "sgd", "--lr", "0.05"]) == 0
    model = load_checkpoint(checkpoint)
    assert isinstance(model, GanModel)
    assert model.threshold is not None

    scored = workdir / "scored_gan.csv"
    assert run(["score", "--in", str(features), "--checkpoint", str(checkpoint),
                "--out", str(scored), "--alpha", "0.8"]) == 0
    rows = scored.read_text().strip().splitlines()[1:]
    assert len(rows) == 80
    assert all(row.split(",")[5] in ("anomalous", "normal") for row in rows)


def test_eval_rejects_feature_csv(workdir, capsys):
    features = workdir / "sim" / "mini_features.csv"
    code = run(["eval", "--in", str(features),
                "--checkpoint", str(workdir / "forest.json"),
                "--out", str(workdir / "bad.json")])
    assert code == 2
    assert "scored" in capsys.readouterr().err
