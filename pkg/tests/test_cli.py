import csv
import io
import json
import subprocess
import sys

import pytest

from cartrisk import LabeledSample, PruneSequence, Tree, preset, sample
from cartrisk.cli import main
from cartrisk.tree import leaf, node


@pytest.fixture
def files(tmp_path):
    d = preset("tiles")
    sample(d, 80, 1).to_csv(tmp_path / "a.csv")
    sample(d, 80, 2).to_csv(tmp_path / "b.csv")
    return tmp_path


def test_grow_prune_select(files, capsys):
    assert main(["grow", "--sample", str(files / "a.csv"), "--out", str(files / "t.json"), "--max-leaves", "12"]) == 0
    t = Tree.from_json((files / "t.json").read_text())
    assert t.n_leaves <= 12
    assert main(["prune", "--tree", str(files / "t.json"), "--sample", str(files / "b.csv"),
                 "--out", str(files / "seq.json")]) == 0
    seq = PruneSequence.from_json((files / "seq.json").read_text())
    assert seq.trees[0].n_samples == 80
    capsys.readouterr()
    assert main(["select", "--sequence", str(files / "seq.json"), "--test", str(files / "a.csv")]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == seq.K
    assert sum(int(r["selected"]) for r in rows) == 1


def test_oracle_check(files, capsys):
    main(["grow", "--sample", str(files / "a.csv"), "--out", str(files / "t.json"), "--max-leaves", "10"])
    assert main(["oracle-check", "--tree", str(files / "t.json"), "--sample", str(files / "a.csv")]) == 0
    assert "agree" in capsys.readouterr().out
    assert main(["oracle-check", "--tree", str(files / "t.json"), "--sample", str(files / "a.csv"),
                 "--alphas", "0,1/2,3"]) == 0
    assert main(["oracle-check", "--tree", str(files / "t.json"), "--sample", str(files / "a.csv"),
                 "--cap", "1"]) == 3


def test_input_errors_exit_1(files, capsys):
    assert main(["run", "--dist", "preset:nope", "--n", "30"]) == 1
    assert main(["grow", "--sample", str(files / "missing.csv")]) == 1
    (files / "bad.csv").write_text("x0,y\n0.5,7\n")
    assert main(["grow", "--sample", str(files / "bad.csv")]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["run", "--dist", "preset:tiles", "--split", "10,0,10"]) == 1
    assert main(["run", "--dist", "preset:tiles"]) == 1


def test_run_and_sweep(files, capsys):
    assert main(["run", "--method", "m2", "--dist", "preset:tiles", "--n", "300", "--seed", "4",
                 "--out", str(files / "r")]) == 0
    out = capsys.readouterr().out
    assert out == (files / "r" / "reports.csv").read_text()
    assert (files / "r" / "sequence.json").exists()
    cfg = files / "cfg.json"
    cfg.write_text(json.dumps({"dist": "preset:tiles", "method": "m1", "N": [150, 300], "reps": 2}))
    assert main(["sweep", "--config", str(cfg), "--out", str(files / "s1")]) == 0
    assert main(["sweep", "--config", str(cfg), "--out", str(files / "s2")]) == 0
    assert (files / "s1" / "reports.csv").read_bytes() == (files / "s2" / "reports.csv").read_bytes()
    assert main(["sweep", "--dist", "preset:tiles", "--n", "150", "--reps", "2", "--seed", "9"]) == 0


def test_module_entry_point(files):
    r = subprocess.run([sys.executable, "-m", "cartrisk", "grow", "--sample", str(files / "a.csv")],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert Tree.from_json(r.stdout).dim == 2


def test_oracle_check_reports_disagreement(files, monkeypatch, capsys):
    # a sequence that skips its last collapse must be caught
    import cartrisk.cli as cli

    real = cli.t_alpha
    monkeypatch.setattr(cli, "t_alpha", lambda seq, a: real(seq, 0))
    s = LabeledSample.from_points([((0.1,), 0), ((0.2,), 0), ((0.8,), 1), ((0.9,), 1)])
    s.to_csv(files / "s.csv")
    (files / "stump.json").write_text(Tree.from_dict(node(0, 0.5, leaf(), leaf()), dim=1).to_json())
    assert main(["oracle-check", "--tree", str(files / "stump.json"), "--sample", str(files / "s.csv"),
                 "--alphas", "5"]) == 2
    assert "DISAGREE" in capsys.readouterr().out
