"""Two-qudit gate families and their entanglement diagnostics."""

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import ShapeError, ValidationError
from .linalg import check_unitary, hermitian_exponential, sample_cue, single_site_basis

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

FAMILIES = ("kak", "swap", "qutrit24", "lossless7", "explicit", "haar")

#: Default tolerance on the space-direction unitarity residual.
DUAL_UNITARY_TOL = 1e-8


@dataclass(frozen=True)
class Gate:
    d: int
    matrix: np.ndarray = field(repr=False)
    family: str = "explicit"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown gate family {self.family!r}", "family")
        U = check_unitary(self.matrix, tol=1e-10, name="gate")
        if U.shape != (self.d**2, self.d**2):
            raise ShapeError(f"gate for d={self.d} must be {self.d**2}x{self.d**2}", "gate")
        U = U.copy()
        U.flags.writeable = False
        object.__setattr__(self, "matrix", U)


@dataclass(frozen=True)
class SchmidtData:
    coefficients: np.ndarray
    linear_entropy: float


def _local(u, d, name):
    """Accept an explicit unitary or Hermitian-exponent coordinates."""
    if u is None:
        return np.eye(d, dtype=complex)
    a = np.asarray(u)
    if a.ndim == 1:
        return hermitian_exponential(a.astype(float), d)
    return check_unitary(a, tol=1e-10, name=name).copy()


def nonlocal_part(Jx, Jy, Jz):
    """exp(i (Jx XX + Jy YY + Jz ZZ)), built from the three commuting factors."""
    out = np.eye(4, dtype=complex)
    for J, s in zip((Jx, Jy, Jz), PAULIS):
        ss = np.kron(s, s)
        out = out @ (np.cos(J) * np.eye(4) + 1j * np.sin(J) * ss)
    return out


def kak_gate(Jx, Jy, Jz, u=None, u_p=None, v=None, v_p=None):
    """(u' (x) u) V(J) (v (x) v').

    ``u`` and ``v`` act on the second and first qubit respectively; locals may
    be 2x2 unitaries or 3 Hermitian-exponent coordinates.
    """
    for name, J in (("Jx", Jx), ("Jy", Jy), ("Jz", Jz)):
        if not -np.pi / 2 - 1e-12 <= J <= np.pi / 2 + 1e-12:
            raise ValidationError(f"{J} outside [-pi/2, pi/2]", name)
    u, u_p, v, v_p = (_local(x, 2, n) for x, n in ((u, "u"), (u_p, "u_p"), (v, "v"), (v_p, "v_p")))
    U = np.kron(u_p, u) @ nonlocal_part(Jx, Jy, Jz) @ np.kron(v, v_p)
    params = {"Jx": float(Jx), "Jy": float(Jy), "Jz": float(Jz), "u": u, "u_p": u_p, "v": v, "v_p": v_p}
    return Gate(2, U, "kak", params)


def swap_gate(d=2):
    if d < 2:
        raise ValidationError("local dimension must be >= 2", "d")
    S = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            S[j * d + i, i * d + j] = 1
    return Gate(d, S, "swap", {"d": d})


def qutrit_gate(J, u=None, v=None, u_p=None, v_p=None):
    """(u' (x) u) exp(-i sum_mu J_mu G_mu (x) G_mu) (v (x) v') with Gell-Mann G."""
    J = np.asarray(J, dtype=float)
    if J.shape != (8,):
        raise ShapeError(f"need 8 couplings, got {J.shape}", "J")
    G = single_site_basis(3)[1:]
    H = sum(j * np.kron(g, g) for j, g in zip(J, G))
    u, u_p, v, v_p = (_local(x, 3, n) for x, n in ((u, "u"), (u_p, "u_p"), (v, "v"), (v_p, "v_p")))
    U = np.kron(u_p, u) @ expm(-1j * H) @ np.kron(v, v_p)
    params = {"J": J.tolist(), "u": u, "v": v, "u_p": u_p, "v_p": v_p}
    return Gate(3, U, "qutrit24", params)


def lossless_example_gate(Jz, thetaQ, thetaR, w=None, u_p=None, v_p=None):
    """Dual-unitary gate whose single-site channel has a -1 eigenvalue.

    Fixes Jx = -Jy = -pi/4 with u = w exp(-i thetaQ Z/2) and
    v = exp(i thetaR Z/2) w^dagger.
    """
    w = _local(w, 2, "w")
    rz = lambda t: np.diag([np.exp(-1j * t / 2), np.exp(1j * t / 2)])
    u = w @ rz(thetaQ)
    v = rz(-thetaR) @ w.conj().T
    g = kak_gate(-np.pi / 4, np.pi / 4, Jz, u=u, u_p=u_p, v=v, v_p=v_p)
    params = {"Jz": float(Jz), "thetaQ": float(thetaQ), "thetaR": float(thetaR), "w": w,
              "u_p": g.params["u_p"], "v_p": g.params["v_p"]}
    return Gate(2, g.matrix, "lossless7", params)


def haar_gate(d, rng):
    return Gate(d, sample_cue(d * d, rng), "haar", {"d": d})


def explicit_gate(matrix, d=None):
    U = np.asarray(matrix, dtype=complex)
    if d is None:
        d = int(round(np.sqrt(U.shape[0])))
    return Gate(d, U, "explicit", {"d": d})


def realign(U, d):
    """R[(a, a'), (b, b')] = U[(a, b), (a', b')], the operator-Schmidt reshuffle."""
    return np.asarray(U).reshape(d, d, d, d).transpose(0, 2, 1, 3).reshape(d * d, d * d)


def dual_matrix(U, d):
    """Space-direction propagator: <k l|U~|i j> = <j l|U|i k>."""
    T = np.asarray(U).reshape(d, d, d, d)  # T[j, l, i, k]
    return T.transpose(3, 1, 2, 0).reshape(d * d, d * d)


def operator_schmidt(gate):
    d = gate.d
    s = np.linalg.svd(realign(gate.matrix, d), compute_uv=False)
    a = np.sort(s**2 / d**2)[::-1]
    a = a[a > 1e-15]
    return SchmidtData(a, float(1 - np.sum(a**2)))


def dual_unitarity_residual(gate):
    Ud = dual_matrix(gate.matrix, gate.d)
    return float(np.max(np.abs(Ud.conj().T @ Ud - np.eye(gate.d**2))))


def is_dual_unitary(gate, tol=DUAL_UNITARY_TOL):
    return dual_unitarity_residual(gate) <= tol


def max_linear_entropy(d):
    return (d * d - 1) / (d * d)
