import csv
import os
import subprocess
import sys
from collections import Counter

import pytest

from viralmeme.cli import main
from viralmeme.graph import ParseError, load_network
from viralmeme.pipeline import ALL_MODELS, follower_counts, load_followers

SIM = ["--memes", "500", "--communities", "3", "--community-size", "100"]


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--out-dir", str(d), "--seed", "3", *SIM]) == 0
    return d


def inputs(d):
    return ["--edges", str(d / "edges.txt"), "--communities", str(d / "communities.tsv"),
            "--events", str(d / "events.tsv")]


def test_simulate_writes_three_files_deterministically(world, tmp_path):
    assert sorted(os.listdir(world)) == ["communities.tsv", "edges.txt", "events.tsv"]
    assert main(["simulate", "--out-dir", str(tmp_path), "--seed", "3", *SIM]) == 0
    for name in os.listdir(world):
        assert (world / name).read_bytes() == (tmp_path / name).read_bytes()


def test_simulate_rejects_invalid_settings(tmp_path, capsys):
    assert main(["simulate", "--out-dir", str(tmp_path), "--p-in", "0.01", "--p-out", "0.5"]) != 0
    assert "invalid simulation settings" in capsys.readouterr().err


def test_features_rows_match_event_scan(world, tmp_path):
    out = tmp_path / "f.csv"
    assert main(["features", *inputs(world), "--out", str(out)]) == 0
    with open(world / "events.tsv") as fh:
        counts = Counter(line.split("\t", 1)[0] for line in fh if line.strip())
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == sum(1 for c in counts.values() if c >= 25)
    assert len(rows[0]) == 2 + 13 + 2
    again = tmp_path / "g.csv"
    assert main(["features", *inputs(world), "--out", str(again)]) == 0
    assert out.read_bytes() == again.read_bytes()


@pytest.fixture(scope="module")
def evaluated(world, tmp_path_factory):
    out = tmp_path_factory.mktemp("eval")
    rc = main(["evaluate", *inputs(world), "--out-dir", str(out), "--trees", "20",
               "--model-out", str(out / "model.json")])
    assert rc == 0
    return out


def test_evaluate_outputs(evaluated, capsys):
    for m in ALL_MODELS:
        assert (evaluated / f"report_{m}.csv").exists()
        assert (evaluated / f"confusion_{m}.csv").exists()
    with open(evaluated / "comparison.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["class", *ALL_MODELS]
    b2 = rows[0].index("B2")
    assert sum(1 for r in rows[1:] if float(r[b2]) > 0) == 1
    assert len(rows) >= 3


def test_evaluate_fold_hash_shared_and_stable(world, evaluated, tmp_path, capsys):
    capsys.readouterr()
    main(["evaluate", *inputs(world), "--out-dir", str(tmp_path), "--trees", "5",
          "--models", "B2"])
    first = capsys.readouterr().out.splitlines()[0]
    main(["evaluate", *inputs(world), "--out-dir", str(tmp_path), "--trees", "5",
          "--models", "P_n,B1"])
    second = capsys.readouterr().out.splitlines()[0]
    assert first.startswith("fold hash ") and first == second


def test_missing_input_named(world, tmp_path, capsys):
    args = inputs(world)
    args[args.index("--events") + 1] = str(tmp_path / "nope.tsv")
    assert main(["evaluate", *args, "--out-dir", str(tmp_path)]) != 0
    assert "nope.tsv" in capsys.readouterr().err


def test_config_file_and_flag_override(world, tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    lines = [f"{k}={world / v}" for k, v in
             (("edges", "edges.txt"), ("communities", "communities.tsv"), ("events", "events.tsv"))]
    cfg.write_text("\n".join(lines + ["n=30", "out=ignored.csv"]) + "\n")
    out = tmp_path / "f.csv"
    assert main(["features", "--config", str(cfg), "--out", str(out)]) == 0
    with open(out) as fh:
        ns = {row["n"] for row in csv.DictReader(fh)}
    assert ns == {"30"}
    assert not (tmp_path / "ignored.csv").exists()
    assert main(["features", "--config", str(cfg), "--out", str(out), "--n", "27"]) == 0
    with open(out) as fh:
        assert {row["n"] for row in csv.DictReader(fh)} == {"27"}


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour=blue\n")
    assert main(["detect", "--config", str(cfg), "--edges", "x", "--out", "y"]) == 2
    assert "colour" in capsys.readouterr().err


def test_predict_runs(world, evaluated, capsys):
    capsys.readouterr()
    assert main(["predict", *inputs(world), "--model", str(evaluated / "model.json")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "meme_id\tpredicted_class"
    assert len(lines) > 1
    assert all(int(line.split("\t")[1]) in (1, 2, 3, 4) for line in lines[1:])


def test_predict_rejects_short_meme(world, evaluated, capsys):
    with open(world / "events.tsv") as fh:
        counts = Counter(line.split("\t", 1)[0] for line in fh if line.strip())
    short = next(m for m, c in counts.items() if c < 25)
    rc = main(["predict", *inputs(world), "--model", str(evaluated / "model.json"),
               "--meme", short])
    assert rc == 1
    captured = capsys.readouterr()
    assert short in captured.err and "predicted_class" not in captured.out


def test_detect(world, tmp_path):
    out = tmp_path / "lp.tsv"
    assert main(["detect", "--edges", str(world / "edges.txt"), "--out", str(out)]) == 0
    labels = {line.split("\t")[1] for line in out.read_text().splitlines()}
    assert len(labels) >= 2


def test_followers_file_accepted(world, tmp_path):
    fol = tmp_path / "followers.tsv"
    fol.write_text("# user\tcount\nu0\t500\nu1\t3\n")
    rc = main(["evaluate", *inputs(world), "--out-dir", str(tmp_path / "o"),
               "--models", "B3", "--followers", str(fol)])
    assert rc == 0


def test_load_followers():
    assert load_followers(["# c", "a\t3", "", "b\t0"]) == {"a": 3, "b": 0}
    for bad in (["a 3"], ["a\tx"], ["a\t-1"]):
        with pytest.raises(ParseError) as err:
            load_followers(["ok\t1", *bad])
        assert err.value.line == 2
    net = load_network(["a b", "b c"])
    assert follower_counts(net).tolist() == [1, 2, 1]
    assert follower_counts(net, {"b": 7}).tolist() == [0, 7, 0]


def _python(code, **env):
    full = dict(os.environ, **env)
    return subprocess.run([sys.executable, "-c", code], env=full, capture_output=True,
                          text=True, check=True).stdout.strip()


def test_backend_selection():
    assert _python("import viralmeme; print(viralmeme.BACKEND)", VIRALMEME_PURE="1") == "python"


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "viralmeme", "--help"], capture_output=True,
                         text=True)
    assert out.returncode == 0
    for cmd in ("simulate", "detect", "features", "evaluate", "predict"):
        assert cmd in out.stdout
