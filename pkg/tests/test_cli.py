import json
import subprocess
import sys
from pathlib import Path

import pytest

from tavi.cli import main
from tavi.harness import COLUMNS

DATA = Path(__file__).parent / "data"


def test_run_writes_trace(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["run", "--config", str(DATA / "quartic_ltvi.json"), "--out", str(out)]) == 0
    assert out.read_text() == (DATA / "quartic_ltvi.golden.csv").read_text()
    assert "200 iterations" in capsys.readouterr().out


def test_run_json_and_stdout(tmp_path, capsys):
    out = tmp_path / "t.json"
    assert main(["run", "--config", str(DATA / "quartic_ltvi.json"), "--out", str(out), "--format", "json"]) == 0
    assert json.loads(out.read_text())["columns"] == list(COLUMNS)
    capsys.readouterr()
    assert main(["run", "--config", str(DATA / "quartic_ltvi.json")]) == 0
    assert capsys.readouterr().out.splitlines()[0] == ",".join(COLUMNS)


def test_config_errors_exit_2(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"problem": {"kind": "quartic", "dim": 2}, "method": {"kind": "llgvi"}, "params": {"p": 2, "h": 0.1}}))
    assert main(["run", "--config", str(bad)]) == 2
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2


def test_run_error_exit_1(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"problem": {"kind": "wahba", "seed": 0}, "method": {"kind": "llgvi"}, "params": {"p": 6, "p_ring": 2, "h": 0.05}}))
    assert main(["run", "--config", str(cfg)]) == 1


def test_compare(tmp_path, capsys):
    one = json.loads((DATA / "quartic_ltvi.json").read_text())
    two = dict(one, method={"kind": "htvi", "mode": "adaptive"}, output_path=str(tmp_path / "h.csv"))
    cfg = tmp_path / "cmp.json"
    cfg.write_text(json.dumps([one, two]))
    assert main(["compare", "--config", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert "ltvi-adaptive" in text and "htvi-adaptive" in text
    assert (tmp_path / "h.csv").exists()
    cfg.write_text(json.dumps([one, dict(one, problem={"kind": "quartic", "dim": 2})]))
    assert main(["compare", "--config", str(cfg)]) == 2


def test_verify_quick(capsys):
    assert main(["verify", "--quick"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_verify_exit_3_on_failure(monkeypatch):
    import tavi.verify as verify

    monkeypatch.setattr(verify, "run_suite", lambda quick=False: [verify.CheckResult("forced", False, "")])
    assert main(["verify", "--quick"]) == 3


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "tavi", "verify", "--quick"], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr


def test_usage_error():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2
