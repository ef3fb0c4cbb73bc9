import json

import numpy as np
import pytest

from brickwork.channel import build_phi
from brickwork.errors import ValidationError
from brickwork.gates import haar_gate, lossless_example_gate, qutrit_gate
from brickwork.io import (
    RunRecord,
    atomic_write,
    config_hash,
    emit_curve,
    format_number,
    gate_from_spec,
    gate_to_spec,
    load_matrix,
    save_matrix,
    table_text,
    to_jsonable,
)
from brickwork.lightcone import TransferCurve, eta_f_curve, lossy_family, peripheral_family
from brickwork.linalg import RngStream, sample_cue


def test_matrix_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    p = save_matrix(tmp_path / "x.json", X)
    assert np.array_equal(load_matrix(p), X)


def test_load_rejects_entry_count(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"rows": 2, "cols": 2, "entries": [[1, 0]] * 3}))
    with pytest.raises(ValidationError):
        load_matrix(p)
    p.write_text("{not json")
    with pytest.raises(ValidationError):
        load_matrix(p)


def test_atomic_write_leaves_no_temp(tmp_path):
    atomic_write(tmp_path / "a" / "f.txt", "hello")
    atomic_write(tmp_path / "a" / "f.txt", b"bye")
    assert (tmp_path / "a" / "f.txt").read_bytes() == b"bye"
    assert [p.name for p in (tmp_path / "a").iterdir()] == ["f.txt"]


@pytest.mark.parametrize("gate", [
    haar_gate(2, RngStream(1)),
    lossless_example_gate(0.3, 0.2, -0.4, w=sample_cue(2, 2), u_p=sample_cue(2, 3), v_p=sample_cue(2, 4)),
    qutrit_gate(np.linspace(-1, 1, 8), u=np.ones(8), v=-np.ones(8)),
])
def test_gate_spec_replays_phi1(gate, tmp_path):
    spec = gate_to_spec(gate)
    p = tmp_path / "g.json"
    p.write_text(json.dumps(spec))
    back = gate_from_spec(json.loads(p.read_text()))
    assert np.array_equal(build_phi(back, 1).matrix, build_phi(gate, 1).matrix)


def test_gate_spec_errors_name_keys():
    with pytest.raises(ValidationError) as e:
        gate_from_spec({"family": "kak", "Jx": 0.1, "Jy": 0.2})
    assert e.value.key == "gate.Jz"
    with pytest.raises(ValidationError) as e:
        gate_from_spec({"family": "kak", "Jx": 0.1, "Jy": 0.2, "Jz": 0, "colour": 1})
    assert e.value.key == "gate"
    with pytest.raises(ValidationError) as e:
        gate_from_spec({"family": "bogus"})
    assert e.value.key == "gate.family"
    g = gate_from_spec({"family": "kak", "Jx": 0.1, "Jy": 0.2, "Jz": 0.3, "u": [0.1, 0.2, 0.3]})
    assert g.d == 2


def test_haar_spec_is_seeded():
    a = gate_from_spec({"family": "haar", "d": 3, "seed": 4, "stream": 1})
    assert np.array_equal(a.matrix, haar_gate(3, RngStream(4, 1)).matrix)


def test_tables_and_numbers():
    assert format_number(0.1) == "0.10000000000000001"
    assert float(format_number(np.pi)) == np.pi
    assert table_text(("a", "b"), [("x", 1.5)]) == "a\tb\nx\t1.5\n"


def test_to_jsonable():
    out = to_jsonable({"z": np.array([1 + 2j]), "n": np.int64(3), "b": np.bool_(True)})
    assert out == {"z": [[1.0, 2.0]], "n": 3, "b": True}
    json.dumps(out)


def test_config_hash_order_independent():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})
    assert config_hash({"a": 1}) != config_hash({"a": 2})


@pytest.fixture(scope="module")
def lossless():
    return lossless_example_gate(np.pi / 8, 0.7, 0.4, w=sample_cue(2, 5))


def _read(path):
    lines = path.read_text().splitlines()
    return lines[0].split("\t"), np.array([[float(v) for v in ln.split("\t")] for ln in lines[1:]])


def test_emit_peripheral_curve(lossless, tmp_path):
    c = eta_f_curve(peripheral_family(lossless), build_phi(lossless, 1), 40)
    rec = RunRecord("lightcone", {}, "h", "0", 0.0, curve=c)
    head, data = _read(emit_curve(rec, tmp_path / "c.tsv"))
    assert head == ["t", "eta_F", "bound"]
    assert np.allclose(data[:, 1], 1, atol=1e-6)
    assert np.array_equal(data[:, 0], np.arange(41))


def test_emit_lossy_curve(lossless, tmp_path):
    c = eta_f_curve(lossy_family(lossless), build_phi(lossless, 1), 40)
    _, data = _read(emit_curve(c, tmp_path / "c.tsv"))
    eta = data[:, 1]
    assert np.all(np.diff(eta) <= 1e-8)
    # decays like the subleading |z| = sin(pi/4) once the transient is gone
    ratio = eta[10:] / np.sin(np.pi / 4) ** np.arange(10, 41)
    assert np.ptp(ratio) / ratio.mean() <= 0.02


def test_emit_rejects(tmp_path):
    with pytest.raises(ValidationError):
        emit_curve(RunRecord("spectrum", {}, "h", "0", 0.0), tmp_path / "c.tsv")
    empty = TransferCurve("F", np.array([], dtype=int), np.array([]), np.array([]), 0.5, {})
    with pytest.raises(ValidationError):
        emit_curve(empty, tmp_path / "c.tsv")
    assert not (tmp_path / "c.tsv").exists()
