import json
import subprocess
import sys

import numpy as np
import pytest
import tomli_w

from brickwork.cli import main
from brickwork.linalg import matrix_to_document


def write(tmp_path, text, name="run.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def record(out):
    return json.loads((out / "record.json").read_text())


def test_spectrum_swap_all_ones(tmp_path, capsys):
    cfg = write(tmp_path, '[run]\ncommand = "spectrum"\n[system]\nM = 2\n[gate]\nfamily = "swap"\n')
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "--out", str(out)]) == 0
    rec = record(out)
    z = np.array(rec["payload"]["eigenvalues"])
    assert z.shape == (16, 2) and np.allclose(z[:, 0], 1) and np.allclose(z[:, 1], 0)
    assert rec["payload"]["tolerances"]["peripheral_eps"] == 1e-9
    lines = (out / "spectrum.tsv").read_text().splitlines()
    assert lines[0] == "index\tre\tim\tmodulus\tis_trivial\tis_peripheral"
    assert len(lines) == 17
    assert (out / "spectrum.png").stat().st_size > 0
    assert "CPTP PASS" in capsys.readouterr().out


def test_verify_prints_pass(tmp_path, capsys):
    cfg = write(tmp_path, '[run]\ncommand = "verify"\nseed = 3\n[system]\nN = 4\nM = 1\n'
                          '[gate]\nfamily = "haar"\nseed = 3\n')
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    line = capsys.readouterr().out.splitlines()[0]
    assert line.startswith("oracle-equivalence PASS, residual")
    assert float(line.split("residual ")[1].split()[0]) <= 1e-10


def test_odd_n_validation_no_output(tmp_path, capsys):
    cfg = write(tmp_path, '[run]\ncommand = "verify"\n[system]\nN = 5\n')
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "system.N" in err and err.startswith("validation error")
    assert not out.exists()


def test_bad_gate_validation_no_output(tmp_path, capsys):
    cfg = write(tmp_path, '[run]\ncommand = "spectrum"\n[gate]\nfamily = "kak"\nJx = 0.1\n')
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "--out", str(out)]) == 2
    assert "gate.Jy" in capsys.readouterr().err
    assert not out.exists()


def test_numerical_error_exit_code(tmp_path, capsys):
    rho = matrix_to_document(np.diag([1.0, 0.0]))
    doc = {"run": {"command": "lightcone"}, "encoding": {"kind": "pair", "rho1": rho, "rho2": rho}}
    cfg = write(tmp_path, tomli_w.dumps(doc))
    assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert capsys.readouterr().err.startswith("numerical error")


def test_lightcone_writes_curve(tmp_path):
    cfg = write(tmp_path, '[run]\ncommand = "lightcone"\n[system]\nt_max = 12\n'
                          '[encoding]\nkind = "phase_plus"\n[gate]\nfamily = "haar"\nseed = 1\n')
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "--out", str(out), "--no-plots"]) == 0
    lines = (out / "curve.tsv").read_text().splitlines()
    assert lines[0] == "t\teta_F\tbound" and len(lines) == 14
    assert not (out / "curve.png").exists()


def test_record_deterministic_and_input_untouched(tmp_path):
    text = ('[run]\ncommand = "haar-sweep"\nseed = 5\n[sweep]\nsamples = 20\nM = [1, 2]\n')
    cfg = write(tmp_path, text)
    recs = []
    for name in ("a", "b"):
        assert main(["--config", str(cfg), "--out", str(tmp_path / name), "--no-plots"]) == 0
        recs.append(record(tmp_path / name))
    assert recs[0]["payload"] == recs[1]["payload"]
    assert recs[0]["config_hash"] == recs[1]["config_hash"]
    assert cfg.read_text() == text
    assert main(["--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "6", "--no-plots"]) == 0
    other = record(tmp_path / "c")
    assert other["payload"] != recs[0]["payload"]
    assert other["config_hash"] != recs[0]["config_hash"]


def test_floquet_small(tmp_path):
    cfg = write(tmp_path, '[run]\ncommand = "floquet"\n[floquet]\nsizes = [5]\n'
                          '[gate]\nfamily = "haar"\nseed = 2\n')
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "--out", str(out)]) == 0
    p = record(out)["payload"]["sizes"]["5"]
    assert 0 < p["mean_gap_ratio"] < 1 and p["site"] == 4
    assert (out / "eigenstates_L5.tsv").exists() and (out / "spacings_L5.png").exists()


def test_search_writes_replayable_hits(tmp_path):
    cfg = write(tmp_path, '[run]\ncommand = "search"\nseed = 2\n[search]\nfamily = "kak"\nM = 1\n'
                          'restarts = 2\nmaxfev = 300\nmax_launches = 3\n')
    out = tmp_path / "o"
    assert main(["--config", str(cfg), "--out", str(out), "--no-plots"]) == 0
    hits = record(out)["payload"]["hits"]
    assert len(hits) == 2
    assert (out / "hits.tsv").exists()
    for h in hits:
        spec = out / h["spec"]
        replay = write(tmp_path, spec.read_text() + '\n[run]\ncommand = "spectrum"\n', "replay.toml")
        assert main(["--config", str(replay), "--out", str(tmp_path / "r"), "--no-plots"]) == 0
        z = record(tmp_path / "r")["payload"]["moduli"]
        assert 1 - max(z[1:]) <= 1e-6


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, '[run]\ncommand = "spectrum"\n[gate]\nfamily = "swap"\n')
    res = subprocess.run([sys.executable, "-m", "brickwork", "--config", str(cfg), "--out",
                          str(tmp_path / "o"), "--threads", "1", "--no-plots"],
                         capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert "record:" in res.stdout


def test_threads_must_be_positive(tmp_path):
    cfg = write(tmp_path, '[run]\ncommand = "spectrum"\n')
    assert main(["--config", str(cfg), "--threads", "0"]) == 2


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "absent.toml")]) == 2


@pytest.mark.parametrize("argv", [[], ["spectrum"]])
def test_config_flag_required(argv):
    with pytest.raises(SystemExit):
        main(argv)
