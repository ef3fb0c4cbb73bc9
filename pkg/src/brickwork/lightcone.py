"""Evolution along the lightcone and information-transfer metrics.

Curves are indexed by the number of channel applications ``t``; for a window
of M sites this is N - M + 1, so t = N when M = 1.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSpectrum, Superoperator, build_phi, lambda_unitaries, z_max_modulus
from .errors import (
    NumericalDriftError,
    ShapeError,
    SizeLimitError,
    StepSizeError,
    UndefinedRatioError,
    UnsupportedDecompositionError,
    ValidationError,
)
from .gates import SIGMA_X, SIGMA_Y, SIGMA_Z, Gate
from .linalg import kron_all, partial_trace_first, trace_norm_distance

QFI_DELTA = 1e-5
P_FLOOR = 1e-12
RICHARDSON_TOL = 0.01
MAX_BRUTE_FORCE_QUBITS = 14
DEFAULT_COND_MAX = 1e8


def density_violations(rho, tol=1e-10, psd_tol=1e-9):
    """Names of the density-matrix invariants that ``rho`` breaks."""
    rho = np.asarray(rho)
    bad = []
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        bad.append("hermiticity")
    if abs(np.trace(rho) - 1) > tol:
        bad.append("trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -psd_tol:
        bad.append("positivity")
    return bad


def check_density(rho, name="rho", tol=1e-10, psd_tol=1e-9):
    bad = density_violations(rho, tol, psd_tol)
    if bad:
        raise ValidationError(f"not a density matrix ({', '.join(bad)})", name)
    return np.asarray(rho, dtype=complex)


def iterate_channel(rho, S: Superoperator, k, check=True, tol=1e-10, psd_tol=1e-9):
    """Apply ``S`` ``k`` times; verify the output stays a density matrix."""
    if k < 0:
        raise ValidationError("k must be >= 0", "k")
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (S.basis.hilbert_dim,) * 2:
        raise ShapeError(f"state shape {rho.shape} does not match the channel", "rho")
    r = S.basis.coefficients(rho).real
    for p in range(1, k + 1):
        r = S.matrix @ r
        if check:
            bad = density_violations(S.basis.operator(r), tol, psd_tol)
            if bad:
                raise NumericalDriftError(f"{', '.join(bad)} violated at power {p}", power=p)
    return S.basis.operator(r)


# -- quantum Fisher information ------------------------------------------------

def qfi_spectral(rho, drho, p_floor=P_FLOOR):
    """2 sum_{ij} |<i|drho|j>|^2 / (p_i + p_j), skipping p_i + p_j <= p_floor."""
    rho = np.asarray(rho)
    p, V = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    X = V.conj().T @ np.asarray(drho) @ V
    den = p[:, None] + p[None, :]
    keep = den > p_floor
    return float(2 * np.sum(np.abs(X[keep]) ** 2 / den[keep]))


@dataclass(frozen=True)
class StateFamily:
    """lambda -> density matrix generator with a default evaluation point."""

    kind: str
    generator: object = field(repr=False)
    lambda0: float = 0.0
    d: int = 2
    M: int = 1

    def __call__(self, lam):
        return np.asarray(self.generator(lam), dtype=complex)

    def derivatives(self, lam=None, delta=QFI_DELTA):
        """Central differences at steps delta and delta/2."""
        lam = self.lambda0 if lam is None else lam
        d1 = (self(lam + delta) - self(lam - delta)) / (2 * delta)
        h = delta / 2
        d2 = (self(lam + h) - self(lam - h)) / (2 * h)
        return d1, d2


def _richardson(F1, F2, tol, abs_floor=1e-14):
    if abs(F1 - F2) > tol * max(abs(F1), abs(F2)) and abs(F1 - F2) > abs_floor:
        raise StepSizeError(
            f"QFI disagrees between step and half step ({F1:.6g} vs {F2:.6g}); "
            "finite-difference step is unreliable")


def family_qfi(family: StateFamily, lam=None, delta=QFI_DELTA, p_floor=P_FLOOR,
               richardson_tol=RICHARDSON_TOL):
    if delta <= 0:
        raise ValidationError("delta must be positive", "delta")
    lam = family.lambda0 if lam is None else lam
    rho = family(lam)
    d1, d2 = family.derivatives(lam, delta)
    F1 = qfi_spectral(rho, d1, p_floor)
    F2 = qfi_spectral(rho, d2, p_floor)
    _richardson(F1, F2, richardson_tol)
    return F2


def _rotated_plus(lam, sign=1):
    plus = np.array([1, 1], dtype=complex) / np.sqrt(2)
    psi = np.exp(sign * 1j * lam * np.array([1, -1])) * plus
    return np.outer(psi, psi.conj())


def phase_plus_family(M=1, lambda0=0.0, sign=1):
    """(e^{i lam Z}|+><+|e^{-i lam Z})^(x)M; ``sign=-1`` flips the rotation."""
    return StateFamily("phase_plus", lambda lam: kron_all([_rotated_plus(lam, sign)] * M),
                       lambda0, 2, M)


def _lossless_frame(gate: Gate):
    if gate.family != "lossless7":
        raise ValidationError("encoding needs a lossless7 gate", "encoding")
    w = np.asarray(gate.params["w"])
    tbar = gate.params["thetaQ"] + gate.params["thetaR"]
    rot = lambda s: w @ s @ w.conj().T
    A1 = rot(SIGMA_Z)
    A2 = np.cos(tbar / 2) * rot(SIGMA_X) + np.sin(tbar / 2) * rot(SIGMA_Y)
    A3 = -np.sin(tbar / 2) * rot(SIGMA_X) + np.cos(tbar / 2) * rot(SIGMA_Y)
    return A1, A2, A3


def peripheral_family(gate: Gate, lambda0=0.0):
    """rho = (I + tanh(lam) w Z w^dag) / 2 on the peripheral eigenoperator."""
    A1 = _lossless_frame(gate)[0]
    return StateFamily("peripheral7", lambda lam: 0.5 * (np.eye(2) + np.tanh(lam) * A1), lambda0)


def lossy_family(gate: Gate, lambda0=0.0):
    """rho = (I + tanh(lam) (A2 + A3) / sqrt 2) / 2 on the decaying eigenoperators."""
    _, A2, A3 = _lossless_frame(gate)
    B = (A2 + A3) / np.sqrt(2)
    return StateFamily("lossy7", lambda lam: 0.5 * (np.eye(2) + np.tanh(lam) * B), lambda0)


def custom_family(generator, d, M, lambda0=0.0):
    return StateFamily("custom", generator, lambda0, d, M)


# -- transfer curves -----------------------------------------------------------

@dataclass(frozen=True)
class TransferCurve:
    kind: str  # "F" or "D"
    steps: np.ndarray
    eta: np.ndarray
    bound: np.ndarray
    z_max_modulus: float
    params: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.steps)

    def monotonicity_violation(self):
        """Largest increase eta[t+1] - eta[t] (<= 0 for a valid curve)."""
        if len(self.eta) < 2:
            return 0.0
        return float(np.max(np.diff(self.eta)))


def eta_f_curve(family: StateFamily, S: Superoperator, t_max, delta=QFI_DELTA,
                p_floor=P_FLOOR, richardson_tol=RICHARDSON_TOL):
    """sqrt(F[rho_out(t)] / F[rho_in]) for t = 0..t_max.

    The channel does not depend on lambda, so the finite-difference
    derivatives are propagated with the state instead of re-differencing.
    """
    if t_max < 1:
        raise ValidationError("t_max must be >= 1", "t_max")
    basis = S.basis
    rho = family(family.lambda0)
    d1, d2 = family.derivatives(family.lambda0, delta)
    vecs = np.stack([basis.coefficients(x) for x in (rho, d1, d2)], axis=1).real
    # derivatives of unit-trace states are traceless; the identity component is
    # pure rounding noise and would otherwise survive every application
    vecs[0, 1:] = 0.0
    F = np.empty(t_max + 1)
    for t in range(t_max + 1):
        if t:
            vecs = S.matrix @ vecs
        r, a, b = (basis.operator(vecs[:, j]) for j in range(3))
        F1, F2 = qfi_spectral(r, a, p_floor), qfi_spectral(r, b, p_floor)
        _richardson(F1, F2, richardson_tol)
        F[t] = F2
    if F[0] <= 0:
        raise UndefinedRatioError("initial QFI is zero; eta_F is undefined")
    steps = np.arange(t_max + 1)
    zm = z_max_modulus(S)
    params = {"family": family.kind, "lambda0": family.lambda0, "delta": delta,
              "p_floor": p_floor, "richardson_tol": richardson_tol}
    return TransferCurve("F", steps, np.sqrt(np.clip(F / F[0], 0, None)), zm**steps, zm, params)


def trace_distance_eta(rho1, rho2, S: Superoperator, t):
    D0 = trace_norm_distance(rho1, rho2)
    if D0 == 0:
        raise UndefinedRatioError("input states are identical; eta_D is undefined")
    out1 = iterate_channel(rho1, S, t, check=False)
    out2 = iterate_channel(rho2, S, t, check=False)
    return trace_norm_distance(out1, out2) / D0


def eta_d_curve(rho1, rho2, S: Superoperator, t_max):
    if t_max < 1:
        raise ValidationError("t_max must be >= 1", "t_max")
    D0 = trace_norm_distance(rho1, rho2)
    if D0 == 0:
        raise UndefinedRatioError("input states are identical; eta_D is undefined")
    basis = S.basis
    r1 = basis.coefficients(rho1).real
    r2 = basis.coefficients(rho2).real
    diff = r1 - r2
    eta = np.empty(t_max + 1)
    for t in range(t_max + 1):
        if t:
            diff = S.matrix @ diff
        eta[t] = trace_norm_distance(basis.operator(diff), np.zeros((basis.hilbert_dim,) * 2)) / D0
    steps = np.arange(t_max + 1)
    zm = z_max_modulus(S)
    return TransferCurve("D", steps, eta, zm**steps, zm, {})


# -- eigenbasis decomposition --------------------------------------------------

@dataclass(frozen=True)
class EigenDecomposition:
    """rho = (I + sum_k c_k A_k) / d^M over all nontrivial unit-norm eigenoperators."""

    coefficients: np.ndarray
    residual: float


def eigenbasis_coefficients(rho, spec: ChannelSpectrum, cond_max=DEFAULT_COND_MAX):
    cond = spec.diagonalizability_condition
    if not np.isfinite(cond) or cond > cond_max:
        raise UnsupportedDecompositionError(
            f"eigenvector matrix is near-defective (condition {cond:.3e} > {cond_max:.1e})")
    basis = spec.basis
    D = basis.hilbert_dim
    r = basis.coefficients(rho)
    c = np.linalg.solve(spec.vectors, r)
    coeffs = D * c[1:]
    rebuilt = (np.eye(D) + basis.operator(spec.vectors[:, 1:] @ coeffs)) / D
    return EigenDecomposition(coeffs, float(np.max(np.abs(rebuilt - rho))))


# -- brute force oracle --------------------------------------------------------

def default_parity(M):
    """Even layer first for odd M, odd layer first for even M."""
    return "even_first" if M % 2 else "odd_first"


def _apply_two_site(T, U, n, L, d):
    """rho -> U_{n,n+1} rho U^dag on a (d,)*2L density tensor."""
    G = np.asarray(U).reshape(d, d, d, d)
    T = np.tensordot(G, T, axes=([2, 3], [n, n + 1]))
    T = np.moveaxis(T, [0, 1], [n, n + 1])
    T = np.tensordot(T, G.conj(), axes=([L + n, L + n + 1], [2, 3]))
    return np.moveaxis(T, [-2, -1], [L + n, L + n + 1])


def brute_force_reduced_state(gate: Gate, N, M, rho_in, parity=None,
                              max_qubits=MAX_BRUTE_FORCE_QUBITS):
    """Reduced state of the last M sites after N brickwork layers on N+1 sites.

    The chain starts in rho_in (x) (I/d)^(N-M+1); layers alternate between
    the even layer (gates on (0,1), (2,3), ...) and the odd layer (gates on
    (1,2), (3,4), ...), starting with ``parity``.
    """
    d = gate.d
    if N < 2 or N % 2:
        raise ValidationError("N must be even and >= 2", "N")
    if not 1 <= M <= N + 1:
        raise ValidationError("need 1 <= M <= N + 1", "M")
    if (N + 1) * np.log2(d) > max_qubits + 1e-9:
        raise SizeLimitError(f"chain of {N + 1} qudits exceeds {max_qubits} qubit-equivalents")
    parity = parity or default_parity(M)
    if parity not in ("even_first", "odd_first"):
        raise ValidationError(f"unknown parity {parity!r}", "parity")
    rho_in = np.asarray(rho_in, dtype=complex)
    if rho_in.shape != (d**M, d**M):
        raise ShapeError(f"rho_in must be {d**M}x{d**M}", "rho_in")
    L = N + 1
    rest = d ** (L - M)
    rho = np.kron(rho_in, np.eye(rest) / rest)
    T = rho.reshape((d,) * (2 * L))
    first = 0 if parity == "even_first" else 1
    for layer in range(N):
        start = (first + layer) % 2
        for n in range(start, L - 1, 2):
            T = _apply_two_site(T, gate.matrix, n, L, d)
    return partial_trace_first(T.reshape(d**L, d**L), d ** (L - M))


def lightcone_reduced_state(gate: Gate, N, M, rho_in, S: Superoperator = None):
    """Lambda_out o Phi_M^(N-M+1) o Lambda_in applied to rho_in."""
    if N < M - 1:
        raise ValidationError("need N >= M - 1", "N")
    S = S if S is not None else build_phi(gate, M)
    lin, lout = lambda_unitaries(gate.matrix, gate.d, M)
    rho = lin @ np.asarray(rho_in) @ lin.conj().T
    rho = iterate_channel(rho, S, N - M + 1, check=False)
    return lout @ rho @ lout.conj().T
