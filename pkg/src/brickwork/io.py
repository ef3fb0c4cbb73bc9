"""Persistence: matrix documents, gate specs, curve tables and run records."""

import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .gates import (
    FAMILIES,
    Gate,
    explicit_gate,
    haar_gate,
    kak_gate,
    lossless_example_gate,
    qutrit_gate,
    swap_gate,
)
from .linalg import RngStream, matrix_from_document, matrix_to_document


def atomic_write(path, data):
    """Write ``data`` (str or bytes) via a temp file in the same directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "w" if isinstance(data, str) else "wb"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def save_matrix(path, X):
    return atomic_write(path, json.dumps(matrix_to_document(X)))


def load_matrix(path):
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not a JSON document ({exc})", str(path)) from None
    return matrix_from_document(doc)


def to_jsonable(obj):
    """Recursively convert numpy values; complex numbers become [re, im]."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# -- gate specs ----------------------------------------------------------------

_LOCALS = {"kak": ("u", "u_p", "v", "v_p"), "qutrit24": ("u", "v", "u_p", "v_p"),
           "lossless7": ("w", "u_p", "v_p")}
_ALLOWED = {
    "kak": {"Jx", "Jy", "Jz", "u", "u_p", "v", "v_p"},
    "swap": {"d"},
    "qutrit24": {"J", "u", "v", "u_p", "v_p"},
    "lossless7": {"Jz", "thetaQ", "thetaR", "w", "u_p", "v_p"},
    "explicit": {"matrix", "d"},
    "haar": {"d", "seed", "stream"},
}


def _local_from_spec(x, key):
    if x is None:
        return None
    if isinstance(x, dict):
        return matrix_from_document(x)
    try:
        return np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("local must be exponent coordinates or a matrix document", key) from None


def _req(spec, key, prefix):
    if key not in spec:
        raise ValidationError("missing required key", f"{prefix}.{key}")
    return spec[key]


def gate_from_spec(spec, prefix="gate"):
    """Build a gate from a spec dict; keys are checked against the family."""
    if not isinstance(spec, dict):
        raise ValidationError("gate spec must be a table", prefix)
    family = spec.get("family")
    if family not in FAMILIES:
        raise ValidationError(f"unknown family {family!r}, expected one of {FAMILIES}", f"{prefix}.family")
    extra = set(spec) - _ALLOWED[family] - {"family"}
    if extra:
        raise ValidationError(f"unknown keys {sorted(extra)} for family {family}", prefix)
    locs = {k: _local_from_spec(spec.get(k), f"{prefix}.{k}") for k in _LOCALS.get(family, ())}
    try:
        if family == "kak":
            return kak_gate(float(_req(spec, "Jx", prefix)), float(_req(spec, "Jy", prefix)),
                            float(_req(spec, "Jz", prefix)), **locs)
        if family == "swap":
            return swap_gate(int(spec.get("d", 2)))
        if family == "qutrit24":
            return qutrit_gate(_req(spec, "J", prefix), **locs)
        if family == "lossless7":
            return lossless_example_gate(float(_req(spec, "Jz", prefix)), float(spec.get("thetaQ", 0.0)),
                                         float(spec.get("thetaR", 0.0)), **locs)
        if family == "explicit":
            U = matrix_from_document(_req(spec, "matrix", prefix))
            return explicit_gate(U, spec.get("d"))
        rs = RngStream(int(spec.get("seed", 0)), int(spec.get("stream", 0)))
        return haar_gate(int(spec.get("d", 2)), rs)
    except ValidationError as exc:
        if exc.key is None:
            raise ValidationError(str(exc), prefix) from None
        raise


def gate_to_spec(gate: Gate):
    """Spec dict that rebuilds ``gate`` exactly; locals are stored as matrices."""
    p = gate.params
    if gate.family == "swap":
        return {"family": "swap", "d": gate.d}
    if gate.family in ("explicit", "haar"):
        return {"family": "explicit", "d": gate.d, "matrix": matrix_to_document(gate.matrix)}
    out = {"family": gate.family}
    for k, v in p.items():
        if k in _LOCALS[gate.family]:
            out[k] = matrix_to_document(v)
        else:
            out[k] = to_jsonable(v)
    return out


# -- tables --------------------------------------------------------------------

def format_number(x):
    return "%.17g" % x


def table_text(header, rows):
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(v if isinstance(v, str) else format_number(v) for v in row))
    return "\n".join(lines) + "\n"


def write_table(path, header, rows):
    return atomic_write(path, table_text(header, rows))


# -- run records ---------------------------------------------------------------

def config_hash(config_dict):
    blob = json.dumps(to_jsonable(config_dict), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


@dataclass
class RunRecord:
    command: str
    config: dict
    config_hash: str
    version: str
    wall_time: float
    payload: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    curve: object = None  # TransferCurve, when the command produced one

    def to_dict(self):
        return to_jsonable({"command": self.command, "config": self.config,
                            "config_hash": self.config_hash, "version": self.version,
                            "wall_time": self.wall_time, "payload": self.payload,
                            "artifacts": self.artifacts})

    def payload_hash(self):
        blob = json.dumps(to_jsonable(self.payload), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def write_record(record: RunRecord, path):
    return atomic_write(path, json.dumps(record.to_dict(), indent=1, sort_keys=True))


def emit_curve(record_or_curve, path):
    """Tab-separated t, eta, bound with 17 significant digits."""
    from .lightcone import TransferCurve

    curve = getattr(record_or_curve, "curve", record_or_curve)
    if not isinstance(curve, TransferCurve):
        raise ValidationError("record does not contain a transfer curve", "payload")
    if len(curve) == 0:
        raise ValidationError("curve is empty", "payload")
    rows = [(int(t), float(e), float(b)) for t, e, b in zip(curve.steps, curve.eta, curve.bound)]
    rows = [(str(t), e, b) for t, e, b in rows]
    return write_table(path, ("t", f"eta_{curve.kind}", "bound"), rows)
