import numpy as np
import pytest

from brickwork.errors import SizeLimitError, ValidationError
from brickwork.gates import is_dual_unitary
from brickwork.linalg import RngStream
from brickwork.search import (
    LOW_ENTROPY,
    SweepResult,
    annotate_hit,
    conjecture_pattern,
    conjecture_scan,
    haar_sweep,
    optimize_peripheral,
    param_space,
    peripheral_objective,
    revalidate,
    simplex_descent,
    wrap_coupling,
)

Q = np.pi / 4


def test_sweep_result_counts():
    r = SweepResult(2, 1, 3, 0, np.array([0.5, 1 - 1e-8, 1.0]), eps=1e-6)
    assert r.peripheral_count == 2
    assert r.mean == pytest.approx((0.5 + 2 - 1e-8) / 3)


def test_haar_sweep_deterministic_and_subunit():
    a = haar_sweep(2, 1, 30, RngStream(3))
    b = haar_sweep(2, 1, 30, RngStream(3))
    assert np.array_equal(a.z_max_moduli, b.z_max_moduli)
    assert a.peripheral_count == 0 and np.all(a.z_max_moduli < 1)
    with pytest.raises(ValidationError):
        haar_sweep(2, 1, 0, RngStream(3))
    with pytest.raises(SizeLimitError):
        haar_sweep(2, 7, 1, RngStream(3))


def test_wrap_coupling():
    assert np.allclose(wrap_coupling([np.pi / 2, -np.pi / 2, 0.1 + np.pi]), [-np.pi / 2, -np.pi / 2, 0.1])


@pytest.mark.parametrize("J,k", [
    ((Q, 0, 0.3), 0),
    ((0.2, -Q, Q), 1),
    ((np.pi / 2, 0.4, Q), 2),
    ((Q + 5e-4, 1e-4, 0.9), 0),
])
def test_conjecture_pattern_matches(J, k):
    p = conjecture_pattern(np.array(J))
    assert p["matches"] and p["k"] == k


def test_conjecture_pattern_rejects():
    assert not conjecture_pattern(np.array([0.3, 0.5, 0.1]))["matches"]
    # pi/4 alone is not enough
    assert not conjecture_pattern(np.array([Q, 0.3, 0.5]))["matches"]
    assert not conjecture_pattern(np.array([Q + 0.01, 0, 0]))["matches"]


def test_param_spaces():
    kak = param_space("kak")
    assert kak.size == 15
    assert param_space("qutrit24").size == 24
    with pytest.raises(ValidationError):
        param_space("ququart")
    x = kak.sample(np.random.default_rng(0))
    J, locs = kak.split(x)
    assert set(locs) == {"u", "u_p", "v", "v_p"} and np.all(np.abs(J) <= np.pi / 2)
    assert kak.gate(x).d == 2 and param_space("qutrit24").gate(np.zeros(24)).d == 3


def test_simplex_descent_quadratic():
    x, fx, nfev = simplex_descent(lambda x: float(np.sum((x - 1) ** 2)), np.zeros(3), 2000, 1e-12)
    assert fx <= 1e-10 and np.allclose(x, 1, atol=1e-4)
    assert nfev > 1


def test_objective_zero_on_swap_family():
    f = peripheral_objective(param_space("kak"), 1)
    x = np.zeros(15)
    x[:3] = Q
    assert f(x) == pytest.approx(0, abs=1e-12)


def test_annotate_dual_unitary_hit():
    space = param_space("kak")
    rng = np.random.default_rng(1)
    x = np.concatenate([[Q, Q, 0.3], rng.normal(size=12)])
    h = annotate_hit(space, 2, x, 0.0, 0, 1)
    assert h.dual_unitary and h.entropy == pytest.approx(0.75)
    assert h.pattern["matches"] and not h.low_entropy_flag
    assert is_dual_unitary(h.gate())


def test_annotate_low_entropy_boundary():
    space = param_space("kak")
    x = np.zeros(15)
    x[:3] = (Q, 0, 0)
    h = annotate_hit(space, 1, x, 0.0, 0, 1)
    # E = 1/2 up to rounding must not be flagged
    assert h.entropy == pytest.approx(LOW_ENTROPY) and not h.low_entropy_flag
    assert not h.dual_unitary


def test_optimize_small_run_deterministic():
    a = optimize_peripheral("kak", 1, 3, RngStream(5), maxfev=400, max_launches=3)
    b = optimize_peripheral("kak", 1, 3, RngStream(5), maxfev=400, max_launches=3)
    assert a.best_values == b.best_values
    assert len(a.best_values) == 3
    for h in a.hits:
        assert h.one_minus_zmax <= 1e-6
        assert revalidate(h) <= 1e-10
    assert [h.one_minus_zmax for h in a.hits] == sorted(h.one_minus_zmax for h in a.hits)
    with pytest.raises(ValidationError):
        optimize_peripheral("kak", 1, 0, RngStream(5))


def test_conjecture_scan_small_grid():
    pts = conjecture_scan("x", [Q, 0.5], [0.3], RngStream(6), M=1, restarts=1, maxfev=300,
                          max_launches=2)
    assert len(pts) == 2
    # at M = 1, J = (pi/4, pi/4, g) keeps a unit eigenvalue for any locals
    assert pts[0].peripheral and pts[0].conjecture_k == 1
    assert not pts[1].peripheral and pts[1].conjecture_k == -1
    assert pts[0].J[0] == pytest.approx(Q)
    with pytest.raises(ValidationError):
        conjecture_scan("w", [0.0], [0.0], RngStream(6))
    with pytest.raises(ValidationError):
        conjecture_scan("x", [2.0], [0.0], RngStream(6))
