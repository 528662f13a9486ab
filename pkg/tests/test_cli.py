import csv
import io
import json
import shutil
import subprocess

import numpy as np
import pytest

from qalab.bounds import BoundsReport
from qalab.cli import main
from qalab.config import load_config, parse_config
from qalab.dynamics import Trajectory
from qalab.errors import ParseError, StructureError
from qalab.harness import SUMMARY_COLUMNS, load_instance, read_summary, report_from_row
from qalab.oracle import enumerate_classical


@pytest.fixture
def files(tmp_path):
    (tmp_path / "single.txt").write_text("n 1\nterm 1.0 0\n")
    (tmp_path / "ferro.txt").write_text("n 2\nterm 1.0 0 1\n")
    return tmp_path


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestGen:
    def test_writes_parseable_instances(self, tmp_path, capsys):
        assert main(["gen", "--n", "4", "--count", "3", "--orders", "1,2,3", "--seed", "7",
                     "--out", str(tmp_path / "g")]) == 0
        paths = sorted((tmp_path / "g").glob("*.txt"))
        assert len(paths) == 3
        inst = load_instance(paths[0])
        assert inst.n_sites == 4 and {t.order for t in inst.terms} == {1, 2, 3}
        assert "seed=7" in paths[0].read_text()
        assert all(-1 <= t.coefficient <= 1 for t in inst.terms)

    def test_deterministic(self, tmp_path):
        for d in ("a", "b"):
            main(["gen", "--n", "5", "--count", "2", "--seed", "3", "--out", str(tmp_path / d)])
        for p in (tmp_path / "a").iterdir():
            assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes()


class TestSpectrum:
    def test_single_field(self, files, capsys):
        assert main(["spectrum", "--instance", str(files / "single.txt"), "--gammas", "0,0.5,1,2"]) == 0
        rows = _csv(capsys.readouterr().out)
        for row in rows:
            g = float(row["gamma"])
            assert float(row["eps_0"]) == pytest.approx(-np.sqrt(1 + g * g), abs=1e-12)
            assert float(row["eps_1"]) == pytest.approx(np.sqrt(1 + g * g), abs=1e-12)
            assert float(row["gap"]) > 0

    def test_zero_gamma_row_sorted_energies(self, files, tmp_path):
        out = tmp_path / "spec.csv"
        assert main(["spectrum", "--instance", str(files / "ferro.txt"), "--gammas", "0,0.1", "--out", str(out)]) == 0
        rows = _csv(out.read_text())
        assert [float(rows[0][f"eps_{k}"]) for k in range(4)] == [-1.0, -1.0, 1.0, 1.0]
        assert float(rows[0]["gap"]) == 0.0 and float(rows[1]["gap"]) > 0
        assert rows[1]["gamma"] == "0.1"

    def test_capacity_exit(self, files, capsys):
        assert main(["spectrum", "--instance", str(files / "ferro.txt"), "--dense-limit", "2"]) == 3

    def test_parse_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("n 3\nterm 0.5 0 0 1\n")
        assert main(["spectrum", "--instance", str(bad)]) == 2
        assert "line 2" in capsys.readouterr().err

    def test_missing_instance(self, tmp_path, capsys):
        assert main(["spectrum", "--instance", str(tmp_path / "nope.txt")]) == 2


class TestBounds:
    def test_ferro_grid_passes(self, files, capsys):
        assert main(["bounds", "--instance", str(files / "ferro.txt"), "--gammas", "1e-3,1e-2,1e-1"]) == 0
        rows = [json.loads(line) for line in capsys.readouterr().out.splitlines()]
        assert len(rows) == 3 and all(r["passed"] for r in rows)
        assert isinstance(report_from_row(rows[0]), BoundsReport)

    def test_single_field_fallback_noted(self, files, capsys):
        assert main(["bounds", "--instance", str(files / "single.txt"), "--gammas", "0.05"]) == 0
        cap = capsys.readouterr()
        row = json.loads(cap.out)
        assert row["exponent"] == 2 and row["default_exponent"] == 1
        assert "used p=2" in cap.err

    def test_batch_jsonl(self, tmp_path, capsys):
        main(["gen", "--n", "3", "--count", "4", "--seed", "1", "--out", str(tmp_path / "g")])
        paths = [str(p) for p in sorted((tmp_path / "g").glob("*.txt"))]
        out = tmp_path / "b.jsonl"
        assert main(["bounds", "--instance", *paths, "--gammas", "1e-2,1e-1", "--out", str(out),
                     "--workers", "2"]) == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 8
        assert [r["instance"] for r in rows] == [p for p in paths for _ in range(2)]

    def test_zero_gamma_is_usage_error(self, files, capsys):
        assert main(["bounds", "--instance", str(files / "ferro.txt"), "--gammas", "0"]) == 2


CONFIG = """
[run]
instance = ferro.txt
dt = 0.05
samples = 6
seed = 11

[schedule]
schedule = power
gamma_final = 1.0

[sweep]
delta = 0.3, 0.1
"""


class TestAnneal:
    def test_outputs_and_determinism(self, files, capsys):
        (files / "run.ini").write_text(CONFIG)
        digests = []
        for k in range(2):
            out = files / f"out{k}"
            assert main(["anneal", "--config", str(files / "run.ini"), "--out", str(out)]) == 0
            digests.append((out / "summary.csv").read_bytes())
        assert digests[0] == digests[1]
        rows = read_summary(files / "out0" / "summary.csv")
        assert tuple(rows[0]) == SUMMARY_COLUMNS and len(rows) == 2
        assert all(r["status"] == "ok" for r in rows)
        traj = Trajectory.from_csv((files / "out0" / "run_0000.csv").read_text())
        assert len(traj) == 6
        assert float(rows[0]["final_fidelity"]) == traj.fidelity[-1]
        assert float(rows[0]["gamma_final"]) == pytest.approx(1.0)
        records = [json.loads(line) for line in (files / "out0" / "records.jsonl").read_text().splitlines()]
        assert len({r["fingerprint"] for r in records}) == 1 and records[0]["seed"] == 11

    def test_failing_cell_does_not_kill_sweep(self, files, capsys):
        (files / "run.ini").write_text(CONFIG.replace("gamma_final = 1.0", "schedule = linear")
                                       .replace("schedule = power\n", ""))
        assert main(["anneal", "--config", str(files / "run.ini"), "--out", str(files / "o")]) == 0
        rows = read_summary(files / "o" / "summary.csv")
        assert all(r["status"].startswith("error") for r in rows)

    def test_needs_out(self, files, capsys):
        assert main(["anneal", "--instance", str(files / "ferro.txt")]) == 2


def test_verify_all_pass(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "invariants hold" in out


def test_verify_select(capsys):
    assert main(["verify", "--select", "harness."]) == 0
    assert capsys.readouterr().out.count("PASS") == 3


def test_console_script(files):
    exe = shutil.which("qalab")
    if exe is None:
        pytest.skip("console script not installed")
    res = subprocess.run([exe, "spectrum", "--instance", str(files / "single.txt"), "--gammas", "1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout.startswith("gamma,eps_0,eps_1,gap")


class TestConfig:
    def test_parse_full(self, files):
        (files / "c.ini").write_text(CONFIG + "\n[limits]\ndense_limit = 256\n")
        cfg = load_config(files / "c.ini").validate()
        assert cfg.instances == [files / "ferro.txt"]
        assert (cfg.dt, cfg.samples, cfg.seed, cfg.dense_limit) == (0.05, 6, 11, 256)
        assert cfg.sweep == {"delta": [0.3, 0.1]}
        assert cfg.gammas == [1e-3, 1e-2, 1e-1]

    def test_fingerprint(self, files):
        cfg = parse_config(CONFIG, files)
        f1 = cfg.fingerprint(files / "ferro.txt")
        assert f1 == parse_config(CONFIG, files).fingerprint(files / "ferro.txt")
        assert f1 != cfg.fingerprint(files / "single.txt")
        assert f1 != parse_config(CONFIG + "\n", files).fingerprint(files / "ferro.txt")

    @pytest.mark.parametrize("text,err", [
        ("[bogus]\nx = 1\n", StructureError),
        ("[sweep]\nbeta = 1\n", StructureError),
        ("[sweep]\ngamma = a, b\n", ParseError),
        ("[run]\ndt = fast\n", ParseError),
        ("no section\n", ParseError),
    ])
    def test_bad_configs(self, text, err):
        with pytest.raises(err):
            parse_config(text)

    @pytest.mark.parametrize("extra", ["[sweep]\ndelta = 0.1, -0.1\n", "[run]\ninstance = ferro.txt\ndt = -1\n",
                                       "[sweep]\ngamma = -1\n"])
    def test_validation(self, files, extra):
        text = extra if "[run]" in extra else "[run]\ninstance = ferro.txt\n" + extra
        with pytest.raises(StructureError):
            parse_config(text, files).validate()

    def test_missing_file(self, tmp_path):
        with pytest.raises(StructureError):
            parse_config("[run]\ninstance = missing.txt\n", tmp_path).validate()


def test_anneal_success_matches_oracle(files, capsys):
    (files / "run.ini").write_text(CONFIG)
    main(["anneal", "--config", str(files / "run.ini"), "--out", str(files / "o")])
    summary = enumerate_classical(load_instance(files / "ferro.txt"))
    row = read_summary(files / "o" / "summary.csv")[0]
    assert 0.0 <= float(row["success_prob"]) <= 1.0
    assert float(row["residual_energy"]) >= -1e-9
    assert summary.n_ground == 2
