"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Multi-site
operators use the convention that site 0 is the outermost (leftmost) Kronecker
factor, so ``np.kron(A, B)`` puts ``A`` on site 0.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ShapeError, SizeLimitError, ValidationError

#: Largest allowed superoperator dimension d**(2M).
DEFAULT_MAX_SUPEROP_DIM = 4096
#: Largest allowed number of entries in any single dense matrix we build.
DEFAULT_MAX_ENTRIES = 4096 * 4096


def as_matrix(X, name="matrix"):
    """Return ``X`` as a finite 2-D complex array or raise."""
    A = np.asarray(X, dtype=complex)
    if A.ndim != 2:
        raise ShapeError(f"expected a 2-D array, got shape {A.shape}", name)
    if A.size == 0:
        raise ShapeError("empty matrix", name)
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries", name)
    return A


def check_unitary(U, tol=1e-10, name="unitary"):
    U = as_matrix(U, name)
    if U.shape[0] != U.shape[1]:
        raise ShapeError(f"unitary must be square, got {U.shape}", name)
    resid = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0])))
    if resid > tol:
        raise ValidationError(f"not unitary (residual {resid:.3e} > {tol:.1e})", name)
    return U


def tensor_product(A, B, max_entries=DEFAULT_MAX_ENTRIES):
    """Kronecker product with ``A`` as the outer factor."""
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    n = A.shape[0] * B.shape[0] * A.shape[1] * B.shape[1]
    if n > max_entries:
        raise SizeLimitError(f"tensor product would have {n} entries (cap {max_entries})")
    return np.kron(A, B)


def kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def partial_trace_first(X, d_first):
    """Trace out the outermost tensor factor of dimension ``d_first``."""
    X = as_matrix(X, "X")
    n = X.shape[0]
    if X.shape[1] != n:
        raise ShapeError(f"partial trace needs a square matrix, got {X.shape}")
    if d_first < 1 or n % d_first:
        raise ShapeError(f"dimension {n} is not divisible by {d_first}")
    r = n // d_first
    return np.einsum("aiaj->ij", X.reshape(d_first, r, d_first, r))


def trace_norm_distance(X, Y):
    """Half the trace norm of ``X - Y``."""
    X = as_matrix(X, "X")
    Y = as_matrix(Y, "Y")
    if X.shape != Y.shape or X.shape[0] != X.shape[1]:
        raise ShapeError(f"shape mismatch {X.shape} vs {Y.shape}")
    return 0.5 * float(np.sum(np.linalg.svd(X - Y, compute_uv=False)))


def single_site_basis(d):
    """Orthonormal Hermitian basis of d x d matrices, identity first.

    Generalised Gell-Mann matrices scaled by 1/sqrt(2); for d=2 this is the
    Pauli set (x, y, z) and for d=3 the standard Gell-Mann order.
    """
    if d < 2:
        raise ValidationError("local dimension must be >= 2", "d")
    els = [np.eye(d, dtype=complex) / np.sqrt(d)]
    for k in range(1, d):
        for j in range(k):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k], anti[k, j] = -1j, 1j
            els += [sym / np.sqrt(2), anti / np.sqrt(2)]
        diag = np.zeros(d)
        diag[:k] = 1
        diag[k] = -k
        els.append(np.diag(diag).astype(complex) * np.sqrt(1 / (k * (k + 1))))
    return np.array(els)


@dataclass(frozen=True)
class HermitianBasis:
    """Site-major tensor-product basis of M-qudit operators.

    Element ``mu`` with base-d**2 digits (a_1, ..., a_M) is the product of
    single-site elements a_1 (site 0) through a_M. Elements are orthonormal
    under the Hilbert-Schmidt product and element 0 is I / sqrt(d**M).
    """

    d: int
    M: int
    single: np.ndarray

    @property
    def dim(self):
        return self.d ** (2 * self.M)

    @property
    def hilbert_dim(self):
        return self.d**self.M

    @cached_property
    def _to_site(self):
        # column alpha = row-major vec of single[alpha]
        return self.single.reshape(self.d**2, -1).T.copy()

    @cached_property
    def elements(self):
        out = np.empty((self.dim, self.hilbert_dim, self.hilbert_dim), dtype=complex)
        for mu in range(self.dim):
            out[mu] = self.element(mu)
        return out

    def element(self, mu):
        digits = np.unravel_index(mu, (self.d**2,) * self.M)
        return kron_all(self.single[a] for a in digits)

    def coefficients(self, X):
        """Vector ``r`` with ``r[mu] = Tr[Gamma_mu X]``."""
        d, M = self.d, self.M
        X = np.asarray(X, dtype=complex)
        T = X.reshape((d,) * (2 * M))
        T = T.transpose(_pair_axes(M)).reshape((d * d,) * M)
        T = apply_each_axis(self._to_site.conj().T, T, range(M))
        return T.reshape(-1)

    def operator(self, r):
        """Inverse of :meth:`coefficients`: ``sum_mu r[mu] Gamma_mu``."""
        d, M = self.d, self.M
        T = np.asarray(r, dtype=complex).reshape((d * d,) * M)
        T = apply_each_axis(self._to_site, T, range(M))
        T = T.reshape((d,) * (2 * M)).transpose(np.argsort(_pair_axes(M)))
        return T.reshape(d**M, d**M)

    def superop_from_liouville(self, L):
        """Matrix of a map in this basis from its row-major Liouville matrix."""
        d, M = self.d, self.M
        D2 = self.dim
        T = np.asarray(L).reshape((d,) * (4 * M))
        perm = list(_pair_axes(M)) + [2 * M + a for a in _pair_axes(M)]
        T = T.transpose(perm).reshape((d * d,) * (2 * M))
        T = apply_each_axis(self._to_site.conj().T, T, range(M))
        T = apply_each_axis(self._to_site.T, T, range(M, 2 * M))
        return T.reshape(D2, D2)

    def liouville_from_superop(self, S):
        d, M = self.d, self.M
        T = np.asarray(S, dtype=complex).reshape((d * d,) * (2 * M))
        T = apply_each_axis(self._to_site, T, range(M))
        T = apply_each_axis(self._to_site.conj(), T, range(M, 2 * M))
        perm = list(_pair_axes(M)) + [2 * M + a for a in _pair_axes(M)]
        T = T.reshape((d,) * (4 * M)).transpose(np.argsort(perm))
        return T.reshape(self.dim, self.dim)

    def gram(self):
        E = self.elements.reshape(self.dim, -1)
        return E.conj() @ E.T


def _pair_axes(M):
    # (i_1..i_M, j_1..j_M) -> (i_1, j_1, i_2, j_2, ...)
    return [a for k in range(M) for a in (k, M + k)]


def apply_each_axis(mat, T, axes):
    """Contract ``mat`` (as out x in) into each listed axis of ``T``."""
    for ax in axes:
        T = np.moveaxis(np.tensordot(mat, T, axes=([1], [ax])), 0, ax)
    return T


def hermitian_basis(d, M, max_dim=DEFAULT_MAX_SUPEROP_DIM):
    if M < 1:
        raise ValidationError("number of sites must be >= 1", "M")
    if d < 2:
        raise ValidationError("local dimension must be >= 2", "d")
    if d ** (2 * M) > max_dim:
        raise SizeLimitError(f"basis size d^(2M) = {d ** (2 * M)} exceeds cap {max_dim}")
    return HermitianBasis(d, M, single_site_basis(d))


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by (master_seed, stream_index).

    Each call to :meth:`generator` starts the same sequence from scratch,
    so streams can be handed to parallel tasks without sharing state.
    """

    master_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValidationError("stream index must be >= 0", "stream_index")
        if not 0 <= self.master_seed < 2**64:
            raise ValidationError("master seed must fit in 64 bits", "seed")

    def generator(self):
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index):
        """Stream ``index`` of this stream's master seed, nested under it."""
        return RngStream(self.master_seed, self.stream_index * 1_000_003 + index + 1)


def _as_generator(rng):
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def sample_cue(dim, rng):
    """Haar-random unitary from QR of a complex Ginibre matrix.

    Column phases are fixed by the diagonal of R so the result is Haar.
    Accepts an :class:`RngStream`, a ``numpy`` Generator or a seed.
    """
    if dim < 1:
        raise ValidationError("dimension must be >= 1", "dim")
    g = _as_generator(rng)
    Z = (g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    ph = np.diag(R) / np.abs(np.diag(R))
    return Q * ph


def hermitian_exponential(coords, d):
    """exp(i sum_k c_k h_k) over the traceless single-site basis elements."""
    c = np.asarray(coords, dtype=float)
    if c.shape != (d * d - 1,):
        raise ShapeError(f"expected {d * d - 1} coordinates, got {c.shape}", "coords")
    H = np.tensordot(c, single_site_basis(d)[1:], axes=1)
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * w)) @ V.conj().T


def matrix_to_document(X):
    """Exchange document ``{"rows", "cols", "entries": [[re, im], ...]}``, row-major."""
    A = as_matrix(X)
    flat = A.reshape(-1)
    return {"rows": int(A.shape[0]), "cols": int(A.shape[1]),
            "entries": [[float(z.real), float(z.imag)] for z in flat]}


def matrix_from_document(doc):
    try:
        rows, cols, entries = int(doc["rows"]), int(doc["cols"]), doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix document ({exc})", "matrix") from None
    if rows < 1 or cols < 1:
        raise ShapeError("rows and cols must be positive", "matrix")
    if len(entries) != rows * cols:
        raise ShapeError(f"expected {rows * cols} entries, got {len(entries)}", "matrix")
    try:
        arr = np.array(entries, dtype=float)
    except (TypeError, ValueError):
        raise ValidationError("entries must be [re, im] pairs", "matrix") from None
    if arr.shape != (rows * cols, 2):
        raise ShapeError("entries must be [re, im] pairs", "matrix")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("NaN or Inf in matrix entries", "matrix")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(rows, cols)
