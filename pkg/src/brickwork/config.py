"""Run configuration: one TOML file fully determines a run.

Every section has a fixed schema; unknown sections or keys are rejected
with the dotted key path in the message.
"""

from pathlib import Path

import tomli

from .errors import ValidationError

COMMANDS = ("spectrum", "lightcone", "verify", "haar-sweep", "search", "scan", "floquet")
ENCODINGS = ("peripheral7", "lossy7", "phase_plus", "pair")
PARITIES = ("auto", "even_first", "odd_first")

# section -> key -> (type, default); a default of ... means required
SCHEMA = {
    "run": {
        "command": (str, ...),
        "seed": (int, 0),
        "out": (str, "out"),
        "threads": (int, 1),
        "plots": (bool, True),
    },
    "system": {
        "M": (int, 1),
        "N": (int, 4),
        "t_max": (int, 50),
        "parity": (str, "auto"),
    },
    "encoding": {
        "kind": (str, "phase_plus"),
        "lambda0": (float, 0.0),
        "delta": (float, 1e-5),
        "p_floor": (float, 1e-12),
        "richardson_tol": (float, 0.01),
        "rho1": (dict, None),
        "rho2": (dict, None),
    },
    "tolerances": {
        "peripheral_eps": (float, 1e-9),
        "unitarity": (float, 1e-10),
        "choi": (float, 1e-9),
        "dual": (float, 1e-8),
        "oracle": (float, 1e-10),
        "cond_max": (float, 1e8),
        "max_superop_dim": (int, 4096),
        "max_qubits": (int, 14),
    },
    "sweep": {
        "d": (int, 2),
        "M": (list, [1, 2]),
        "samples": (int, 1000),
        "eps": (float, 1e-6),
    },
    "search": {
        "family": (str, "kak"),
        "M": (int, 2),
        "restarts": (int, 50),
        "maxfev": (int, 2000),
        "max_launches": (int, 6),
        "hit_tol": (float, 1e-6),
        "polish_tol": (float, 1e-9),
        "pattern_tol": (float, 1e-3),
    },
    "scan": {
        "fixed_axis": (str, "z"),
        "beta": (list, [-1.5, 1.5, 7]),
        "gamma": (list, [-1.5, 1.5, 7]),
        "M": (int, 2),
        "restarts": (int, 2),
        "maxfev": (int, 2000),
        "max_launches": (int, 4),
    },
    "floquet": {
        "sizes": (list, [7, 9]),
        "parity": (str, "even_first"),
        "bins": (int, 40),
        "site": (int, -1),
        "cue_draws": (int, 0),
    },
}


def _coerce(value, typ, key):
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, bool):
        raise ValidationError("expected an integer", key)
    if not isinstance(value, typ):
        raise ValidationError(f"expected {typ.__name__}, got {type(value).__name__}", key)
    return value


def normalize(raw):
    """Fill defaults, check types and ranges; returns a plain nested dict."""
    if not isinstance(raw, dict):
        raise ValidationError("config must be a table")
    unknown = set(raw) - set(SCHEMA) - {"gate"}
    if unknown:
        raise ValidationError(f"unknown section(s) {sorted(unknown)}", sorted(unknown)[0])
    cfg = {}
    for sec, fields in SCHEMA.items():
        given = raw.get(sec, {})
        if not isinstance(given, dict):
            raise ValidationError("section must be a table", sec)
        extra = set(given) - set(fields)
        if extra:
            k = sorted(extra)[0]
            raise ValidationError("unknown key", f"{sec}.{k}")
        out = {}
        for k, (typ, default) in fields.items():
            key = f"{sec}.{k}"
            if k in given:
                out[k] = _coerce(given[k], typ, key)
            elif default is ...:
                raise ValidationError("missing required key", key)
            else:
                out[k] = default
        cfg[sec] = out
    cfg["gate"] = dict(raw.get("gate", {"family": "haar", "d": 2}))
    _check_ranges(cfg)
    return cfg


def _check_ranges(cfg):
    run, sy, enc = cfg["run"], cfg["system"], cfg["encoding"]
    if run["command"] not in COMMANDS:
        raise ValidationError(f"unknown command {run['command']!r}, expected one of {COMMANDS}", "run.command")
    if not 0 <= run["seed"] < 2**64:
        raise ValidationError("seed must fit in 64 bits", "run.seed")
    if run["threads"] < 1:
        raise ValidationError("must be >= 1", "run.threads")
    if sy["M"] < 1:
        raise ValidationError("must be >= 1", "system.M")
    if sy["N"] < 2 or sy["N"] % 2:
        raise ValidationError("N must be even and >= 2", "system.N")
    if sy["t_max"] < 1:
        raise ValidationError("must be >= 1", "system.t_max")
    if sy["parity"] not in PARITIES:
        raise ValidationError(f"expected one of {PARITIES}", "system.parity")
    if enc["kind"] not in ENCODINGS:
        raise ValidationError(f"expected one of {ENCODINGS}", "encoding.kind")
    if enc["delta"] <= 0:
        raise ValidationError("must be positive", "encoding.delta")
    for k, v in cfg["tolerances"].items():
        if v <= 0:
            raise ValidationError("must be positive", f"tolerances.{k}")
    sw = cfg["sweep"]
    if sw["samples"] < 1:
        raise ValidationError("must be >= 1", "sweep.samples")
    if not sw["M"] or not all(isinstance(m, int) and m >= 1 for m in sw["M"]):
        raise ValidationError("must be a list of positive integers", "sweep.M")
    se = cfg["search"]
    if se["family"] not in ("kak", "qutrit24"):
        raise ValidationError("expected 'kak' or 'qutrit24'", "search.family")
    for k in ("M", "restarts", "maxfev", "max_launches"):
        if se[k] < 1:
            raise ValidationError("must be >= 1", f"search.{k}")
    sc = cfg["scan"]
    if sc["fixed_axis"] not in ("x", "y", "z"):
        raise ValidationError("expected x, y or z", "scan.fixed_axis")
    for k in ("beta", "gamma"):
        g = sc[k]
        if len(g) != 3 or not all(isinstance(v, (int, float)) for v in g) or int(g[2]) != g[2] or g[2] < 1:
            raise ValidationError("expected [start, stop, count]", f"scan.{k}")
        if max(abs(g[0]), abs(g[1])) > 1.5707963267948966:
            raise ValidationError("grid must lie in [-pi/2, pi/2]", f"scan.{k}")
    fl = cfg["floquet"]
    if not fl["sizes"] or not all(isinstance(s, int) and s >= 3 and s % 2 for s in fl["sizes"]):
        raise ValidationError("chain sizes must be odd integers >= 3", "floquet.sizes")
    if fl["parity"] not in ("even_first", "odd_first"):
        raise ValidationError("expected even_first or odd_first", "floquet.parity")


def load_config(path, overrides=None):
    path = Path(path)
    try:
        raw = tomli.loads(path.read_text())
    except FileNotFoundError:
        raise ValidationError("config file not found", str(path)) from None
    except tomli.TOMLDecodeError as exc:
        raise ValidationError(f"invalid TOML ({exc})", str(path)) from None
    for sec_key, value in (overrides or {}).items():
        sec, key = sec_key.split(".")
        raw.setdefault(sec, {})[key] = value
    return normalize(raw)


def dump_config(cfg):
    import tomli_w

    return tomli_w.dumps(_drop_none(cfg))


def _drop_none(x):
    if isinstance(x, dict):
        return {k: _drop_none(v) for k, v in x.items() if v is not None}
    if isinstance(x, list):
        return [_drop_none(v) for v in x]
    return x
