"""The lightcone channel Phi_M, its boundary unitaries and spectral analysis."""

import json
import os
import tempfile
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import EigensolverError, SizeLimitError, ValidationError
from .gates import Gate
from .linalg import (
    DEFAULT_MAX_SUPEROP_DIM,
    HermitianBasis,
    hermitian_basis,
    kron_all,
    matrix_to_document,
)

#: Default peripheral threshold on 1 - |z|.
PERIPHERAL_EPS = 1e-9


@dataclass(frozen=True)
class Superoperator:
    """Real matrix of an M-qudit map in the orthonormal Hermitian basis."""

    d: int
    M: int
    matrix: np.ndarray = field(repr=False)
    basis: HermitianBasis = field(repr=False)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def apply(self, rho):
        r = self.basis.coefficients(rho)
        return self.basis.operator(self.matrix @ r)

    def block_residual(self):
        """max of |S[:,0] - e0| and |S[0,:] - e0| (unitality, trace preservation)."""
        e0 = np.zeros(self.dim)
        e0[0] = 1
        return (float(np.max(np.abs(self.matrix[:, 0] - e0))),
                float(np.max(np.abs(self.matrix[0, :] - e0))))


def staircase_unitary(U, d, M):
    """Unitary of U_{M+1} = (U (x) I^(M-1)) (I (x) U_M), acting on M+1 sites."""
    W = np.asarray(U)
    for m in range(2, M + 1):
        W = np.kron(U, np.eye(d ** (m - 1))) @ np.kron(np.eye(d), W)
    return W


def _superop_from_kraus(kraus, basis):
    K = np.asarray(kraus)
    L = np.einsum("kib,kjc->ijbc", K, K.conj()).reshape(basis.dim, basis.dim)
    S = basis.superop_from_liouville(L)
    imag = np.max(np.abs(S.imag))
    if imag > 1e-10:
        raise ValidationError(f"superoperator is not real (imag {imag:.2e})")
    return S.real.copy()


def _check_size(d, M, max_dim):
    if M < 1:
        raise ValidationError("M must be >= 1", "M")
    if d ** (2 * M) > max_dim:
        raise SizeLimitError(f"d^(2M) = {d ** (2 * M)} exceeds cap {max_dim}", "M")


def build_phi(gate: Gate, M, max_dim=DEFAULT_MAX_SUPEROP_DIM):
    """Phi_M[rho] = Tr_first{ U_{M+1} [rho (x) I/d] } in the Hermitian basis."""
    _check_size(gate.d, M, max_dim)
    d = gate.d
    D = d**M
    basis = hermitian_basis(d, M, max_dim)
    W = staircase_unitary(gate.matrix, d, M)
    # W[(a, i), (b, j)]: a = traced first site, j = fresh maximally mixed site
    K = W.reshape(d, D, D, d).transpose(0, 3, 1, 2).reshape(d * d, D, D) / np.sqrt(d)
    return Superoperator(d, M, _superop_from_kraus(K, basis), basis)


def unitary_superop(V, d, M, max_dim=DEFAULT_MAX_SUPEROP_DIM):
    basis = hermitian_basis(d, M, max_dim)
    return Superoperator(d, M, _superop_from_kraus(np.asarray(V)[None], basis), basis)


def lambda_unitaries(U, d, M):
    """(in, out) boundary unitaries on M sites; identities for M < 3."""
    U = np.asarray(U)
    I1 = np.eye(d)
    if M < 3:
        eye = np.eye(d**M, dtype=complex)
        return eye, eye.copy()
    lin = np.kron(U, I1)
    lout = np.kron(I1, U)
    for m in range(3, M):
        if m % 2:
            layer = kron_all([I1] + [U] * ((m - 1) // 2) + [I1])
        else:
            layer = kron_all([U] * (m // 2) + [I1])
        lin = np.kron(lin, I1) @ layer
        lout = layer @ np.kron(I1, lout)
    return lin, lout


def lambda_in(gate: Gate, M, max_dim=DEFAULT_MAX_SUPEROP_DIM):
    _check_size(gate.d, M, max_dim)
    return unitary_superop(lambda_unitaries(gate.matrix, gate.d, M)[0], gate.d, M, max_dim)


def lambda_out(gate: Gate, M, max_dim=DEFAULT_MAX_SUPEROP_DIM):
    _check_size(gate.d, M, max_dim)
    return unitary_superop(lambda_unitaries(gate.matrix, gate.d, M)[1], gate.d, M, max_dim)


def phi1_qubit_analytic(Jx, Jy, Jz):
    """Diagonal of Phi_1(V(J)) in the (x, y, z) Pauli order."""
    sx, sy, sz = np.sin(2 * Jx), np.sin(2 * Jy), np.sin(2 * Jz)
    return np.array([sy * sz, sz * sx, sx * sy])


def nontrivial_block(S: Superoperator):
    return S.matrix[1:, 1:]


def singular_values_phi(S: Superoperator):
    return np.linalg.svd(nontrivial_block(S), compute_uv=False)


def z_max_modulus(S: Superoperator):
    """Largest nontrivial eigenvalue modulus, without eigenvectors."""
    z = np.linalg.eigvals(nontrivial_block(S))
    return float(np.max(np.abs(z), initial=0.0))


@dataclass(frozen=True)
class ChannelSpectrum:
    """Eigen-decomposition of a channel, trivial pair first.

    ``vectors[:, k]`` holds the unit-norm coefficient vector of eigenoperator
    ``k`` in the Hermitian basis; column 0 is the identity direction.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray = field(repr=False)
    basis: HermitianBasis = field(repr=False)
    eps: float
    trivial_index: int = 0

    @property
    def nontrivial(self):
        return np.arange(1, len(self.eigenvalues))

    @property
    def peripheral_indices(self):
        z = np.abs(self.eigenvalues[1:])
        return np.flatnonzero(z >= 1 - self.eps) + 1

    @property
    def z_max(self):
        if len(self.eigenvalues) == 1:
            return 0j
        return complex(self.eigenvalues[1])

    @property
    def gap(self):
        """1 - |z_max|, reported so callers can re-threshold."""
        return 1 - abs(self.z_max)

    @cached_property
    def diagonalizability_condition(self):
        return float(np.linalg.cond(self.vectors))

    def eigenoperator(self, k):
        return self.basis.operator(self.vectors[:, k])

    @property
    def eigenoperators(self):
        return [self.eigenoperator(k) for k in range(len(self.eigenvalues))]


def _dump_failed(matrix):
    fd, path = tempfile.mkstemp(prefix="brickwork-eig-", suffix=".json")
    with os.fdopen(fd, "w") as fh:
        json.dump(matrix_to_document(matrix), fh, allow_nan=False)
    return path


def channel_spectrum(S: Superoperator, eps=PERIPHERAL_EPS, block_tol=1e-10):
    """Full eigen-decomposition with the identity pair split off.

    The channel matrix is 1 (+) B when it is unital and trace preserving, so
    the unit eigenspace is resolved by taking e0 as the trivial direction and
    diagonalising B on the traceless complement.
    """
    unital, tp = S.block_residual()
    if max(unital, tp) > block_tol:
        raise ValidationError(
            f"superoperator is not unital/trace preserving (residuals {unital:.2e}, {tp:.2e})")
    B = nontrivial_block(S)
    try:
        if not np.all(np.isfinite(B)):
            raise np.linalg.LinAlgError("non-finite entries")
        vals, vecs = np.linalg.eig(B)
    except np.linalg.LinAlgError as exc:
        path = _dump_failed(S.matrix)
        raise EigensolverError(f"eigensolver failed ({exc}); matrix saved to {path}", path) from None
    # deterministic order: modulus descending, then phase
    order = np.lexsort((np.round(np.angle(vals), 12), -np.round(np.abs(vals), 12)))
    vals, vecs = vals[order], vecs[:, order]
    vecs = vecs / np.linalg.norm(vecs, axis=0)
    # phase: largest-magnitude entry real positive
    top = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
    vecs = vecs * (np.abs(top) / top)
    n = S.dim
    V = np.zeros((n, n), dtype=complex)
    V[0, 0] = 1
    V[1:, 1:] = vecs
    z = np.concatenate([[1.0 + 0j], vals])
    return ChannelSpectrum(z, V, S.basis, eps)


def eigen_residuals(S: Superoperator, spec: ChannelSpectrum):
    """max_k |S v_k - z_k v_k| and the same for the conjugate pairs."""
    A = S.matrix
    V, z = spec.vectors, spec.eigenvalues
    direct = np.max(np.abs(A @ V - V * z))
    conj = np.max(np.abs(A @ V.conj() - V.conj() * z.conj()))
    return float(direct), float(conj)


def conjugation_closure(z):
    """Largest distance from any z_k* to the nearest eigenvalue."""
    z = np.asarray(z)
    return float(np.max(np.min(np.abs(z.conj()[:, None] - z[None, :]), axis=1)))


@dataclass(frozen=True)
class ChannelReport:
    unitality_residual: float
    trace_preservation_residual: float
    choi_min_eigenvalue: float
    tol: float = 1e-10
    choi_tol: float = 1e-9

    @property
    def unital(self):
        return self.unitality_residual <= self.tol

    @property
    def trace_preserving(self):
        return self.trace_preservation_residual <= self.tol

    @property
    def completely_positive(self):
        return self.choi_min_eigenvalue >= -self.choi_tol

    @property
    def passed(self):
        return self.unital and self.trace_preserving and self.completely_positive

    def failures(self):
        out = []
        if not self.unital:
            out.append("unitality")
        if not self.trace_preserving:
            out.append("trace preservation")
        if not self.completely_positive:
            out.append("complete positivity")
        return out


def choi_matrix(S: Superoperator):
    D = S.basis.hilbert_dim
    L = S.basis.liouville_from_superop(S.matrix).reshape(D, D, D, D)
    J = L.transpose(2, 0, 3, 1).reshape(D * D, D * D)
    return 0.5 * (J + J.conj().T)


def validate_channel(S: Superoperator, tol=1e-10, choi_tol=1e-9):
    unital, tp = S.block_residual()
    choi_min = float(np.linalg.eigvalsh(choi_matrix(S))[0])
    return ChannelReport(unital, tp, choi_min, tol, choi_tol)


def cluster_means(z, radius=1e-4):
    """Replace each group of eigenvalues closer than ``radius`` by its mean.

    A Jordan block of size k splits computed eigenvalues by ~eps**(1/k); the
    group mean is accurate to ~eps, which is what nesting checks compare.
    """
    z = np.asarray(z)
    out = np.empty_like(z)
    unassigned = np.ones(len(z), dtype=bool)
    for i in range(len(z)):
        if not unassigned[i]:
            continue
        group = unassigned & (np.abs(z - z[i]) <= radius)
        grew = True
        while grew:
            near = unassigned & (np.min(np.abs(z[:, None] - z[group][None, :]), axis=1) <= radius)
            grew = near.sum() > group.sum()
            group = near
        out[group] = z[group].mean()
        unassigned &= ~group
    return out


@dataclass(frozen=True)
class NestingReport:
    M: int
    distances: np.ndarray
    raw_distances: np.ndarray
    singular_residuals: np.ndarray
    eigenoperator_residuals: np.ndarray
    tol: float = 1e-8

    @property
    def max_distance(self):
        return float(np.max(self.distances, initial=0.0))

    @property
    def max_residual(self):
        return float(np.max(self.eigenoperator_residuals, initial=0.0))

    @property
    def passed(self):
        return self.max_distance <= self.tol and self.max_residual <= self.tol


def spectrum_nesting_check(gate: Gate, M, max_dim=DEFAULT_MAX_SUPEROP_DIM, tol=1e-8):
    """Check spec(Phi_M) is contained in spec(Phi_{M+1}) via A -> A (x) I.

    ``distances`` are measured to cluster means of the larger spectrum (see
    :func:`cluster_means`); ``raw_distances`` to the raw eigenvalues and
    ``singular_residuals`` are sigma_min(Phi_{M+1} - z).
    """
    small = build_phi(gate, M, max_dim)
    big = build_phi(gate, M + 1, max_dim)
    s_small = channel_spectrum(small)
    z_big = np.linalg.eigvals(big.matrix)
    z = s_small.eigenvalues[1:]
    raw = np.min(np.abs(z[:, None] - z_big[None, :]), axis=1)
    dist = np.min(np.abs(z[:, None] - cluster_means(z_big)[None, :]), axis=1)
    eye = np.eye(big.dim)
    sing = np.array([np.linalg.svd(big.matrix - zk * eye, compute_uv=False)[-1] for zk in z])
    # coefficient vector of A (x) I is v (x) sqrt(d) e0
    pad = np.zeros(gate.d**2)
    pad[0] = np.sqrt(gate.d)
    res = []
    for k in range(1, len(s_small.eigenvalues)):
        w = np.kron(s_small.vectors[:, k], pad)
        res.append(np.max(np.abs(big.matrix @ w - s_small.eigenvalues[k] * w)) / np.linalg.norm(w))
    return NestingReport(M, dist, raw, sing, np.array(res), tol)
