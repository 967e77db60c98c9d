from pathlib import Path

import pytest

from kaemsim.cli import main

ROOT = Path(__file__).parent.parent
DECAY = ROOT / "programs" / "decay.kae"


def run_cli(*args):
    return main([str(a) for a in args])


def test_run_writes_expected_artifacts(tmp_path):
    rc = run_cli("run", DECAY, "--lna", "-o", tmp_path, "--emit", "all")
    assert rc == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert {"run1.csv", "run1.plot.svg", "score.svg", "network.dot",
            "odes.txt", "protocol.json"} <= names
    csv = (tmp_path / "run1.csv").read_text()
    assert csv.splitlines()[0].startswith("t,A,cov.A.A")


def test_run_device_emits_trace(tmp_path):
    rc = run_cli("run", ROOT / "programs" / "neutralization.kae",
                 "--device", "-o", tmp_path, "--emit", "all")
    assert rc == 0
    assert (tmp_path / "device.jsonl").exists()
    assert (tmp_path / "device.svg").exists()


def test_failed_run_leaves_no_partial_artifacts(tmp_path):
    bad = tmp_path / "bad.kae"
    bad.write_text("species A @ 10\nA -> ∅ {-1}\nequilibrate 1\n")
    out = tmp_path / "out"
    rc = run_cli("run", bad, "-o", out)
    assert rc == 1
    assert not out.exists() or not list(out.iterdir())


def test_parse_error_is_located_and_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.kae"
    bad.write_text("species\n")
    rc = run_cli("run", bad, "-o", tmp_path / "out")
    assert rc == 1
    err = capsys.readouterr().err
    assert "bad.kae:1:" in err


def test_missing_file_exit_1():
    with pytest.raises(SystemExit) as e:
        run_cli("run", "no_such_file.kae")
    assert e.value.code == 1


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as e:
        run_cli("frobnicate")
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        run_cli()
    assert e.value.code == 2


def test_unknown_emit_kind_exit_2(tmp_path):
    assert run_cli("run", DECAY, "-o", tmp_path, "--emit", "nope") == 2


def test_check_subcommand(capsys):
    assert run_cli("check", DECAY) == 0
    out = capsys.readouterr().out
    assert "1 species" in out


def test_score_subcommand_with_order(tmp_path):
    prog = ROOT / "programs" / "predatorial.kae"
    assert run_cli("score", prog, "-o", tmp_path, "--order", "alpha") == 0
    svg = (tmp_path / "score.svg").read_text()
    assert svg.count("<line ") == 11
    assert (tmp_path / "network.dot").exists()


def test_score_order_from_file(tmp_path):
    perm = tmp_path / "perm.txt"
    perm.write_text("A\n")
    assert run_cli("score", DECAY, "-o", tmp_path, "--order",
                   f"file:{perm}") == 0
    bad = tmp_path / "bad.txt"
    bad.write_text("Nope\n")
    assert run_cli("score", DECAY, "-o", tmp_path, "--order",
                   f"file:{bad}") == 1


def test_kaemsim_out_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("KAEMSIM_OUT", str(tmp_path / "envout"))
    assert run_cli("run", DECAY, "--lna") == 0
    assert (tmp_path / "envout" / "run1.csv").exists()


def test_repeated_runs_are_byte_identical(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run_cli("run", DECAY, "--lna", "-o", out, "--emit", "all") == 0
        outs.append({p.name: p.read_bytes() for p in out.iterdir()})
    assert outs[0] == outs[1]
