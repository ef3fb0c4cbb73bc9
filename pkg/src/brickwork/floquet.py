"""Floquet operator of a finite brickwork chain and its spectral diagnostics."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import schur

from .errors import ShapeError, SizeLimitError, ValidationError
from .gates import PAULIS, Gate
from .linalg import RngStream, sample_cue

MAX_FLOQUET_QUBITS = 14

#: Mean gap ratio of sample_cue(512), 100 draws from RngStream(0).
#: Regenerate with ``cue_gap_ratio_reference()``.
CUE_GAP_RATIO = 0.6009


def _layer_tensor(T, U, starts, L, d):
    G = np.asarray(U).reshape(d, d, d, d)
    for n in starts:
        T = np.tensordot(G, T, axes=([2, 3], [n, n + 1]))
        T = np.moveaxis(T, [0, 1], [n, n + 1])
    return T


def build_floquet(gate: Gate, N, parity="even_first", max_qubits=MAX_FLOQUET_QUBITS):
    """One period (an even and an odd layer) on N+1 sites, site 0 outermost.

    ``even_first`` gives U_odd @ U_even, ``odd_first`` gives U_even @ U_odd.
    """
    d = gate.d
    if N < 2 or N % 2:
        raise ValidationError("N must be even and >= 2", "N")
    if (N + 1) * np.log2(d) > max_qubits + 1e-9:
        raise SizeLimitError(f"chain of {N + 1} qudits exceeds {max_qubits} qubit-equivalents")
    if parity not in ("even_first", "odd_first"):
        raise ValidationError(f"unknown parity {parity!r}", "parity")
    L = N + 1
    D = d**L
    even = range(0, L - 1, 2)
    odd = range(1, L - 1, 2)
    order = (even, odd) if parity == "even_first" else (odd, even)
    # act on the identity's row index: columns are images of basis states
    T = np.eye(D, dtype=complex).reshape((d,) * L + (D,))
    for starts in order:
        T = _layer_tensor(T, gate.matrix, starts, L, d)
    return T.reshape(D, D)


@dataclass(frozen=True)
class FloquetSpectrum:
    phases: np.ndarray
    vectors: np.ndarray = field(repr=False)
    chain_size: int
    d: int


def floquet_spectrum(F, chain_size, d=2):
    """Eigenphases in (-pi, pi], sorted, with orthonormal eigenvectors.

    A unitary is normal, so the Schur form is diagonal and its Schur vectors
    are orthonormal even when phases are degenerate.
    """
    F = np.asarray(F, dtype=complex)
    if F.shape != (d**chain_size,) * 2:
        raise ShapeError(f"Floquet matrix must be {d**chain_size} square", "F")
    Tm, Z = schur(F, output="complex")
    ph = np.angle(np.diag(Tm))
    ph[ph <= -np.pi] += 2 * np.pi
    order = np.argsort(ph, kind="stable")
    return FloquetSpectrum(ph[order], Z[:, order], chain_size, d)


@dataclass(frozen=True)
class PhaseStatistics:
    spacings: np.ndarray
    gap_ratios: np.ndarray
    mean_gap_ratio: float
    hist_edges: np.ndarray
    hist_counts: np.ndarray
    sectors: list = field(default_factory=list)


def spacings_of(phases):
    """Circular nearest-neighbour spacings scaled to unit mean."""
    ph = np.sort(np.asarray(phases, dtype=float))
    if len(ph) < 2:
        raise ValidationError("need at least two phases", "phases")
    s = np.diff(np.append(ph, ph[0] + 2 * np.pi))
    return s / s.mean()


def gap_ratios_of(s):
    """min/max of consecutive spacings with wraparound; 0/0 counts as 0."""
    s = np.asarray(s)
    nxt = np.roll(s, -1)
    hi = np.maximum(s, nxt)
    lo = np.minimum(s, nxt)
    return np.divide(lo, hi, out=np.zeros_like(lo), where=hi > 0)


def _stats(phases, bins):
    s = spacings_of(phases)
    r = gap_ratios_of(s)
    counts, edges = np.histogram(s, bins=bins, range=(0.0, 4.0), density=True)
    return s, r, counts, edges


def eigenphase_statistics(spec: FloquetSpectrum, bins=40, symmetry=None, F=None):
    """Spacing histogram and gap ratio of the raw spectrum.

    With a Hermitian ``symmetry`` commuting with ``F``, per-sector statistics
    are also reported (each sector is diagonalised on its own).
    """
    s, r, counts, edges = _stats(spec.phases, bins)
    sectors = []
    if symmetry is not None:
        if F is None:
            raise ValidationError("sector resolution needs the Floquet matrix", "F")
        for q, ph in sector_phases(F, symmetry).items():
            if len(ph) >= 3:
                rs = gap_ratios_of(spacings_of(ph))
                sectors.append({"charge": q, "size": len(ph), "mean_gap_ratio": float(rs.mean())})
    return PhaseStatistics(s, r, float(r.mean()), edges, counts, sectors)


def sector_phases(F, Q, decimals=8):
    """Eigenphases of F within each eigenspace of the Hermitian symmetry Q."""
    F = np.asarray(F)
    Q = np.asarray(Q)
    if np.max(np.abs(F @ Q - Q @ F)) > 1e-8:
        raise ValidationError("symmetry does not commute with the Floquet operator", "symmetry")
    q, V = np.linalg.eigh(Q)
    keys = np.round(q, decimals)
    out = {}
    for k in np.unique(keys):
        P = V[:, keys == k]
        out[float(k)] = np.sort(np.angle(np.linalg.eigvals(P.conj().T @ F @ P)))
    return out


def cue_gap_ratio_reference(dim=512, draws=100, seed=0):
    rs = RngStream(seed)
    vals = []
    for i in range(draws):
        z = np.linalg.eigvals(sample_cue(dim, rs.child(i)))
        vals.append(gap_ratios_of(spacings_of(np.angle(z))).mean())
    return float(np.mean(vals)), float(np.std(vals) / np.sqrt(draws))


def eigenstate_site_expectations(spec: FloquetSpectrum, site):
    """(n_states, 3) array of <x>, <y>, <z> at ``site`` for every eigenstate."""
    if spec.d != 2:
        raise ValidationError("Pauli expectations need qubits", "d")
    L = spec.chain_size
    if not 0 <= site < L:
        raise ValidationError(f"site {site} out of range 0..{L - 1}", "site")
    V = spec.vectors.reshape(2**site, 2, 2 ** (L - site - 1), -1)
    out = np.empty((V.shape[-1], 3))
    for k, P in enumerate(PAULIS):
        out[:, k] = np.einsum("aibn,ij,ajbn->n", V.conj(), P, V).real
    return out


def half_chain_entropy(spec: FloquetSpectrum):
    """Entanglement entropy (natural log) of the first ceil(L/2) sites."""
    L, d = spec.chain_size, spec.d
    left = d ** ((L + 1) // 2)
    V = spec.vectors.reshape(left, -1, spec.vectors.shape[1])
    out = np.empty(V.shape[-1])
    for n in range(V.shape[-1]):
        p = np.linalg.svd(V[:, :, n], compute_uv=False) ** 2
        p = p[p > 1e-300]
        out[n] = float(-np.sum(p * np.log(p)))
    return np.clip(out, 0.0, None)
