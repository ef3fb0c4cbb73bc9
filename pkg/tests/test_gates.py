import numpy as np
import pytest
from scipy.linalg import expm

from brickwork.channel import build_phi, channel_spectrum
from brickwork.errors import ShapeError, ValidationError
from brickwork.gates import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    dual_matrix,
    dual_unitarity_residual,
    explicit_gate,
    haar_gate,
    is_dual_unitary,
    kak_gate,
    lossless_example_gate,
    max_linear_entropy,
    operator_schmidt,
    qutrit_gate,
    swap_gate,
)
from brickwork.linalg import RngStream, sample_cue

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def test_kak_trivial_and_swap_limit():
    assert np.allclose(kak_gate(0, 0, 0).matrix, np.eye(4))
    q = np.pi / 4
    H = sum(np.kron(s, s) for s in (SIGMA_X, SIGMA_Y, SIGMA_Z))
    U = kak_gate(q, q, q).matrix
    assert np.allclose(U, expm(1j * q * H), atol=1e-13)
    assert np.allclose(U, np.exp(1j * np.pi / 4) * swap_gate().matrix, atol=1e-13)


def test_kak_unitary_with_random_locals():
    rng = np.random.default_rng(0)
    for _ in range(20):
        J = rng.uniform(-np.pi / 2, np.pi / 2, 3)
        locs = {k: rng.normal(size=3) for k in ("u", "u_p", "v", "v_p")}
        U = kak_gate(*J, **locs).matrix
        assert np.max(np.abs(U.conj().T @ U - np.eye(4))) <= 1e-12


def test_kak_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        kak_gate(0.1, 0.2, 0.3, u=np.diag([1.0, 2.0]))
    with pytest.raises(ValidationError):
        kak_gate(2.0, 0, 0)


def test_gate_matrix_is_read_only():
    g = kak_gate(0.1, 0.2, 0.3)
    with pytest.raises(ValueError):
        g.matrix[0, 0] = 2


def test_swap_action():
    S = swap_gate(2).matrix
    ket01 = np.zeros(4)
    ket01[1] = 1
    assert np.allclose(S @ ket01, np.eye(4)[2])
    assert np.allclose(S @ S, np.eye(4))


def test_swap_conjugation_qutrit():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    B = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    S = swap_gate(3).matrix
    assert np.allclose(S @ np.kron(A, B) @ S, np.kron(B, A), atol=1e-12)


def test_qutrit_gate_basic():
    assert np.allclose(qutrit_gate(np.zeros(8)).matrix, np.eye(9))
    rng = np.random.default_rng(2)
    U = qutrit_gate(rng.normal(size=8), u=rng.normal(size=8), v=rng.normal(size=8)).matrix
    assert np.max(np.abs(U.conj().T @ U - np.eye(9))) <= 1e-12
    with pytest.raises(ShapeError):
        qutrit_gate(np.zeros(7))


def test_qutrit_phi1_ignores_outer_locals():
    rng = np.random.default_rng(3)
    J, u, v = rng.normal(size=8), rng.normal(size=8), rng.normal(size=8)
    a = build_phi(qutrit_gate(J, u=u, v=v, u_p=rng.normal(size=8), v_p=rng.normal(size=8)), 1)
    b = build_phi(qutrit_gate(J, u=u, v=v, u_p=rng.normal(size=8), v_p=rng.normal(size=8)), 1)
    assert np.max(np.abs(a.matrix - b.matrix)) <= 1e-12


def test_lossless_gate_spectrum():
    rng = np.random.default_rng(4)
    for Jz in (np.pi / 8, 0.3, -0.5):
        g = lossless_example_gate(Jz, *rng.uniform(-np.pi, np.pi, 2), w=sample_cue(2, rng),
                                  u_p=sample_cue(2, rng), v_p=sample_cue(2, rng))
        z = np.sort_complex(channel_spectrum(build_phi(g, 1)).eigenvalues[1:])
        want = np.sort_complex(np.array([-1, np.sin(2 * Jz), -np.sin(2 * Jz)], dtype=complex))
        assert np.allclose(z, want, atol=1e-10)


def test_lossless_gate_eigenoperator():
    rng = np.random.default_rng(5)
    w = sample_cue(2, rng)
    g = lossless_example_gate(0.4, 0.3, -1.1, w=w, u_p=sample_cue(2, rng), v_p=sample_cue(2, rng))
    spec = channel_spectrum(build_phi(g, 1))
    k = int(np.argmin(np.abs(spec.eigenvalues + 1)))
    A = spec.eigenoperator(k)
    ref = w @ SIGMA_Z @ w.conj().T
    overlap = abs(np.trace(ref.conj().T @ A)) / (np.linalg.norm(ref) * np.linalg.norm(A))
    assert overlap >= 1 - 1e-8


def test_lossless_gate_quarter_pi_all_unit():
    g = lossless_example_gate(np.pi / 4, 0.2, 0.1)
    z = channel_spectrum(build_phi(g, 1)).eigenvalues
    assert np.allclose(np.abs(z), 1, atol=1e-10)


def test_operator_schmidt_examples():
    e = operator_schmidt(kak_gate(0, 0, 0))
    assert np.allclose(e.coefficients, [1]) and e.linear_entropy == pytest.approx(0, abs=1e-14)
    assert operator_schmidt(swap_gate()).linear_entropy == pytest.approx(0.75)
    c = operator_schmidt(explicit_gate(CNOT))
    assert np.allclose(c.coefficients, [0.5, 0.5]) and c.linear_entropy == pytest.approx(0.5)
    assert np.sum(operator_schmidt(haar_gate(3, 0)).coefficients) == pytest.approx(1)


def test_dual_unitarity_examples():
    assert is_dual_unitary(swap_gate())
    rng = np.random.default_rng(6)
    for Jz in rng.uniform(-np.pi / 2, np.pi / 2, 5):
        g = kak_gate(np.pi / 4, np.pi / 4, Jz, **{k: rng.normal(size=3) for k in ("u", "u_p", "v", "v_p")})
        assert is_dual_unitary(g)
    assert dual_unitarity_residual(kak_gate(0.3, 0.2, 0.1)) > 1e-2
    assert not is_dual_unitary(kak_gate(0.3, 0.2, 0.1))


def test_dual_unitary_iff_max_entropy():
    rng = RngStream(9)
    for i in range(50):
        g = haar_gate(2, rng.child(i))
        assert not is_dual_unitary(g)
        assert operator_schmidt(g).linear_entropy < max_linear_entropy(2)
    # conjugating by SWAP maps U to its dual for SWAP itself
    assert np.allclose(dual_matrix(swap_gate().matrix, 2).conj().T @ dual_matrix(swap_gate().matrix, 2), np.eye(4))


def test_haar_gate_deterministic():
    a = haar_gate(2, RngStream(1, 2))
    b = haar_gate(2, RngStream(1, 2))
    assert np.array_equal(a.matrix, b.matrix)


def test_explicit_gate_validation():
    with pytest.raises(ValidationError):
        explicit_gate(np.ones((4, 4)))
    with pytest.raises(ShapeError):
        explicit_gate(np.eye(4), d=3)
