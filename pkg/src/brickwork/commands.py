"""Command implementations behind the CLI; each returns a RunRecord."""

import json
import time
from pathlib import Path

import numpy as np

from . import __version__, plotting
from .channel import (
    build_phi,
    channel_spectrum,
    conjugation_closure,
    eigen_residuals,
    singular_values_phi,
    validate_channel,
)
from .config import dump_config
from .errors import ValidationError
from .floquet import (
    CUE_GAP_RATIO,
    build_floquet,
    cue_gap_ratio_reference,
    eigenphase_statistics,
    eigenstate_site_expectations,
    floquet_spectrum,
    half_chain_entropy,
)
from .gates import is_dual_unitary, max_linear_entropy, operator_schmidt
from .io import (
    RunRecord,
    atomic_write,
    config_hash,
    emit_curve,
    gate_from_spec,
    gate_to_spec,
    write_record,
    write_table,
)
from .lightcone import (
    brute_force_reduced_state,
    default_parity,
    eta_d_curve,
    eta_f_curve,
    lightcone_reduced_state,
    lossy_family,
    peripheral_family,
    phase_plus_family,
)
from .linalg import RngStream, matrix_from_document, sample_cue
from .search import conjecture_scan, haar_sweep, optimize_peripheral, revalidate


class Context:
    def __init__(self, cfg):
        self.cfg = cfg
        self.out = Path(cfg["run"]["out"])
        self.rng = RngStream(cfg["run"]["seed"])
        self.plots = cfg["run"]["plots"]
        self.artifacts = {}
        self.summary = []

    def path(self, name):
        return self.out / name

    def table(self, name, header, rows):
        write_table(self.path(name), header, rows)
        self.artifacts[name] = "table"

    def figure(self, name, fn, *args, **kw):
        if self.plots:
            fn(*args, self.path(name), **kw)
            self.artifacts[name] = "figure"

    def say(self, line):
        self.summary.append(line)

    def gate(self):
        return gate_from_spec(self.cfg["gate"])


def _spectrum_rows(spec):
    per = set(int(i) for i in spec.peripheral_indices)
    return [(str(k), float(v.real), float(v.imag), float(abs(v)), str(int(k == spec.trivial_index)),
             str(int(k in per))) for k, v in enumerate(spec.eigenvalues)]


def cmd_spectrum(ctx):
    cfg = ctx.cfg
    tol = cfg["tolerances"]
    g = ctx.gate()
    M = cfg["system"]["M"]
    S = build_phi(g, M, tol["max_superop_dim"])
    spec = channel_spectrum(S, eps=tol["peripheral_eps"])
    rep = validate_channel(S, tol["unitarity"], tol["choi"])
    direct, conj = eigen_residuals(S, spec)
    E = operator_schmidt(g).linear_entropy
    payload = {
        "d": g.d, "M": M, "eigenvalues": spec.eigenvalues,
        "moduli": np.abs(spec.eigenvalues), "z_max": spec.z_max, "gap": spec.gap,
        "peripheral_indices": spec.peripheral_indices,
        "max_singular_value": float(singular_values_phi(S)[0]) if S.dim > 1 else 0.0,
        "condition_number": spec.diagonalizability_condition,
        "eigen_residual": direct, "conjugate_residual": conj,
        "conjugation_closure": conjugation_closure(spec.eigenvalues),
        "unitality_residual": rep.unitality_residual,
        "trace_preservation_residual": rep.trace_preservation_residual,
        "choi_min_eigenvalue": rep.choi_min_eigenvalue, "cptp": rep.passed,
        "operator_entropy": E, "dual_unitary": is_dual_unitary(g, tol["dual"]),
        "tolerances": tol,
    }
    ctx.table("spectrum.tsv", ("index", "re", "im", "modulus", "is_trivial", "is_peripheral"),
              _spectrum_rows(spec))
    ctx.figure("spectrum.png", plotting.plot_spectrum, spec.eigenvalues, title=f"Phi_{M}")
    ctx.say(f"Phi_{M} (d={g.d}): |z_max| = {abs(spec.z_max):.12g}, "
            f"{len(spec.peripheral_indices)} peripheral (eps={tol['peripheral_eps']:g}), "
            f"CPTP {'PASS' if rep.passed else 'FAIL ' + ','.join(rep.failures())}")
    return payload, None


def _pair_states(cfg, rng, D):
    enc = cfg["encoding"]
    if enc["rho1"] is not None and enc["rho2"] is not None:
        return matrix_from_document(enc["rho1"]), matrix_from_document(enc["rho2"])
    states = []
    for i in range(2):
        psi = sample_cue(D, rng.child(i))[:, 0]
        states.append(np.outer(psi, psi.conj()))
    return states


def cmd_lightcone(ctx):
    cfg = ctx.cfg
    enc, sy, tol = cfg["encoding"], cfg["system"], cfg["tolerances"]
    g = ctx.gate()
    M, t_max = sy["M"], sy["t_max"]
    S = build_phi(g, M, tol["max_superop_dim"])
    if enc["kind"] == "pair":
        r1, r2 = _pair_states(cfg, ctx.rng, g.d**M)
        curve = eta_d_curve(r1, r2, S, t_max)
    else:
        if enc["kind"] == "phase_plus":
            if g.d != 2:
                raise ValidationError("phase_plus needs qubits", "encoding.kind")
            fam = phase_plus_family(M, enc["lambda0"])
        else:
            if M != 1:
                raise ValidationError(f"{enc['kind']} encoding is defined for M = 1", "system.M")
            maker = peripheral_family if enc["kind"] == "peripheral7" else lossy_family
            fam = maker(g, enc["lambda0"])
        curve = eta_f_curve(fam, S, t_max, enc["delta"], enc["p_floor"], enc["richardson_tol"])
    payload = {"kind": curve.kind, "steps": curve.steps, "eta": curve.eta, "bound": curve.bound,
               "z_max_modulus": curve.z_max_modulus, "monotonicity_violation": curve.monotonicity_violation(),
               "encoding": enc["kind"], "params": curve.params, "tolerances": tol}
    emit_curve(curve, ctx.path("curve.tsv"))
    ctx.artifacts["curve.tsv"] = "table"
    ctx.figure("curve.png", plotting.plot_curve, curve)
    ctx.say(f"eta_{curve.kind}({t_max}) = {curve.eta[-1]:.6g}, |z_max|^t = {curve.bound[-1]:.6g}")
    return payload, curve


def cmd_verify(ctx):
    cfg = ctx.cfg
    sy, tol = cfg["system"], cfg["tolerances"]
    g = ctx.gate()
    N, M = sy["N"], sy["M"]
    parity = default_parity(M) if sy["parity"] == "auto" else sy["parity"]
    psi = sample_cue(g.d**M, ctx.rng.child(0))[:, 0]
    rho = np.outer(psi, psi.conj())
    S = build_phi(g, M, tol["max_superop_dim"])
    a = lightcone_reduced_state(g, N, M, rho, S)
    b = brute_force_reduced_state(g, N, M, rho, parity, tol["max_qubits"])
    resid = float(np.max(np.abs(a - b)))
    rep = validate_channel(S, tol["unitarity"], tol["choi"])
    ok = resid <= tol["oracle"]
    ctx.say(f"oracle-equivalence {'PASS' if ok else 'FAIL'}, residual {resid:.3e} "
            f"({'<=' if ok else '>'} {tol['oracle']:g})")
    ctx.say(f"channel checks {'PASS' if rep.passed else 'FAIL ' + ','.join(rep.failures())}")
    return {"N": N, "M": M, "parity": parity, "residual": resid, "passed": ok,
            "cptp": rep.passed, "choi_min_eigenvalue": rep.choi_min_eigenvalue,
            "tolerances": tol}, None


def cmd_haar_sweep(ctx):
    sw = ctx.cfg["sweep"]
    results = {}
    for M in sw["M"]:
        res = haar_sweep(sw["d"], M, sw["samples"], ctx.rng.child(M), sw["eps"],
                         ctx.cfg["tolerances"]["max_superop_dim"])
        results[M] = res
        ctx.say(f"M={M}: mean |z_max| = {res.mean:.6f}, peripheral {res.peripheral_count}/{res.samples}")
    rows = [(str(i),) + tuple(float(results[M].z_max_moduli[i]) for M in sw["M"])
            for i in range(sw["samples"])]
    ctx.table("zmax.tsv", ("sample",) + tuple(f"M{M}" for M in sw["M"]), rows)
    ctx.figure("zmax.png", plotting.plot_histograms, [results[M].z_max_moduli for M in sw["M"]],
               xlabel="|z_max|", labels=[f"M={M}" for M in sw["M"]])
    payload = {str(M): {"mean": r.mean, "peripheral_count": r.peripheral_count,
                        "z_max_moduli": r.z_max_moduli} for M, r in results.items()}
    payload["eps"] = sw["eps"]
    return payload, None


def cmd_search(ctx):
    se = ctx.cfg["search"]
    res = optimize_peripheral(se["family"], se["M"], se["restarts"], ctx.rng, se["maxfev"],
                              se["hit_tol"], se["polish_tol"], se["max_launches"], se["pattern_tol"],
                              ctx.cfg["tolerances"]["max_superop_dim"])
    hits_dir = ctx.out / "hits"
    rows = []
    hits = []
    for n, h in enumerate(res.hits):
        name = f"hit_{n:03d}.toml"
        atomic_write(hits_dir / name, dump_config({"gate": gate_to_spec(h.gate())}))
        pat = h.pattern or {}
        rows.append((str(n), str(h.restart), h.one_minus_zmax, h.entropy, h.dual_residual,
                     str(int(h.dual_unitary)), str(pat.get("k", "")), str(int(h.low_entropy_flag)))
                    + tuple(float(j) for j in h.couplings))
        hits.append({"restart": h.restart, "one_minus_zmax": h.one_minus_zmax, "entropy": h.entropy,
                     "dual_unitary": h.dual_unitary, "dual_residual": h.dual_residual,
                     "pattern": pat, "couplings": h.couplings, "low_entropy_flag": h.low_entropy_flag,
                     "revalidation": revalidate(h), "spec": f"hits/{name}"})
    header = ("hit", "restart", "one_minus_zmax", "entropy", "dual_residual", "dual_unitary",
              "conjecture_k", "low_entropy_flag") + tuple(f"J{i}" for i in range(len(res.hits[0].couplings) if res.hits else 0))
    ctx.table("hits.tsv", header, rows)
    d = 2 if se["family"] == "kak" else 3
    ctx.figure("hits.png", plotting.plot_hits, [h.entropy for h in res.hits],
               [h.one_minus_zmax for h in res.hits], e_max=max_linear_entropy(d))
    n_non = sum(not h.dual_unitary for h in res.hits)
    ctx.say(f"{se['family']} M={se['M']}: {len(res.hits)} hits in {se['restarts']} restarts, "
            f"{n_non} non-dual-unitary, {len(res.flagged)} flagged below E=0.5")
    return {"family": se["family"], "M": se["M"], "hits": hits, "best_values": res.best_values,
            "flagged": len(res.flagged), "settings": se}, None


def cmd_scan(ctx):
    sc = ctx.cfg["scan"]
    betas = np.linspace(sc["beta"][0], sc["beta"][1], int(sc["beta"][2]))
    gammas = np.linspace(sc["gamma"][0], sc["gamma"][1], int(sc["gamma"][2]))
    pts = conjecture_scan(sc["fixed_axis"], betas, gammas, ctx.rng, sc["M"], sc["restarts"],
                          sc["maxfev"], sc["max_launches"])
    rows = [(p.J_beta, p.J_gamma, p.one_minus_zmax, p.entropy, str(p.conjecture_k)) for p in pts]
    ctx.table("scan.tsv", ("J_beta", "J_gamma", "one_minus_zmax", "entropy", "conjecture_k"), rows)
    grid = np.array([p.one_minus_zmax for p in pts]).reshape(len(betas), len(gammas))
    ctx.figure("scan.png", plotting.plot_scan, betas, gammas, grid)
    n_per = sum(p.peripheral for p in pts)
    off = sum(p.peripheral and p.conjecture_k < 0 for p in pts)
    ctx.say(f"scan: {n_per}/{len(pts)} peripheral points, {off} off the conjectured pattern")
    return {"points": [{"J": p.J, "one_minus_zmax": p.one_minus_zmax, "entropy": p.entropy,
                        "peripheral": p.peripheral, "conjecture_k": p.conjecture_k} for p in pts],
            "locals": "optimised per grid point", "settings": sc}, None


def cmd_floquet(ctx):
    fl = ctx.cfg["floquet"]
    g = ctx.gate()
    if fl["cue_draws"] > 0:
        ref, ref_err = cue_gap_ratio_reference(draws=fl["cue_draws"], seed=ctx.cfg["run"]["seed"])
    else:
        ref, ref_err = CUE_GAP_RATIO, None
    payload = {"cue_reference": ref, "cue_reference_error": ref_err, "sizes": {}}
    for L in fl["sizes"]:
        F = build_floquet(g, L - 1, fl["parity"], ctx.cfg["tolerances"]["max_qubits"])
        spec = floquet_spectrum(F, L, g.d)
        st = eigenphase_statistics(spec, fl["bins"])
        entry = {"mean_gap_ratio": st.mean_gap_ratio, "deviation_from_cue": st.mean_gap_ratio - ref}
        ent = half_chain_entropy(spec)
        entry["entropy_mean"] = float(ent.mean())
        entry["entropy_min"] = float(ent.min())
        rows = [(str(n), float(spec.phases[n]), float(ent[n])) for n in range(len(ent))]
        cols = ("index", "phase", "entropy")
        if g.d == 2:
            site = fl["site"] % L
            ex = eigenstate_site_expectations(spec, site)
            entry["expectation_std"] = ex.std(axis=0)
            entry["site"] = site
            rows = [r + tuple(float(v) for v in ex[n]) for n, r in enumerate(rows)]
            cols += ("sx", "sy", "sz")
            ctx.figure(f"expectations_L{L}.png", plotting.plot_expectations, spec.phases, ex)
        ctx.table(f"eigenstates_L{L}.tsv", cols, rows)
        ctx.table(f"spacings_L{L}.tsv", ("bin_left", "bin_right", "density"),
                  [(float(a), float(b), float(c)) for a, b, c in
                   zip(st.hist_edges[:-1], st.hist_edges[1:], st.hist_counts)])
        ctx.figure(f"spacings_L{L}.png", plotting.plot_spacings, st.hist_edges, st.hist_counts, label=f"L={L}")
        payload["sizes"][str(L)] = entry
        ctx.say(f"L={L}: r = {st.mean_gap_ratio:.4f} (CUE {ref:.4f}), "
                f"mean half-chain entropy {entry['entropy_mean']:.4f}")
    return payload, None


COMMANDS = {
    "spectrum": cmd_spectrum,
    "lightcone": cmd_lightcone,
    "verify": cmd_verify,
    "haar-sweep": cmd_haar_sweep,
    "search": cmd_search,
    "scan": cmd_scan,
    "floquet": cmd_floquet,
}


def run(cfg):
    """Execute one configured command; outputs go under ``cfg['run']['out']``.

    Everything is computed before the first file is written, except the
    command's own table and figure outputs which are written atomically.
    """
    ctx = Context(cfg)
    t0 = time.perf_counter()
    # validate the gate before creating any output
    if cfg["run"]["command"] not in ("haar-sweep", "search", "scan"):
        ctx.gate()
    ctx.out.mkdir(parents=True, exist_ok=True)
    payload, curve = COMMANDS[cfg["run"]["command"]](ctx)
    echo = json.loads(json.dumps(cfg, default=str))
    # output location and threading do not change results
    hashed = {**echo, "run": {k: v for k, v in echo["run"].items() if k not in ("out", "threads", "plots")}}
    rec = RunRecord(cfg["run"]["command"], echo, config_hash(hashed), __version__,
                    time.perf_counter() - t0, payload, ctx.artifacts, curve)
    write_record(rec, ctx.path("record.json"))
    return rec, ctx.summary
