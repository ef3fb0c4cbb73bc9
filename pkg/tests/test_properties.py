import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from brickwork.channel import (
    build_phi,
    channel_spectrum,
    conjugation_closure,
    validate_channel,
    z_max_modulus,
)
from brickwork.gates import haar_gate, kak_gate, operator_schmidt
from brickwork.lightcone import eta_d_curve, iterate_channel
from brickwork.linalg import RngStream, sample_cue

seeds = st.integers(0, 2**32 - 1)
angles = st.floats(-np.pi / 2, np.pi / 2, allow_nan=False)


def pure(D, seed):
    psi = sample_cue(D, RngStream(seed, 99))[:, 0]
    return np.outer(psi, psi.conj())


@settings(max_examples=25, deadline=None)
@given(seed=seeds, d=st.sampled_from([2, 3]), M=st.sampled_from([1, 2]))
def test_phi_is_cptp_unital(seed, d, M):
    if d == 3 and M == 2:
        M = 1
    S = build_phi(haar_gate(d, RngStream(seed)), M)
    rep = validate_channel(S)
    assert rep.passed, rep.failures()
    assert rep.choi_min_eigenvalue >= -1e-9


@settings(max_examples=25, deadline=None)
@given(seed=seeds, M=st.sampled_from([1, 2]))
def test_spectrum_closed_and_traceless(seed, M):
    S = build_phi(haar_gate(2, RngStream(seed)), M)
    spec = channel_spectrum(S)
    assert conjugation_closure(spec.eigenvalues) <= 1e-8
    assert np.all(np.abs(spec.eigenvalues) <= 1 + 1e-9)
    for k in spec.nontrivial:
        assert abs(np.trace(spec.eigenoperator(k))) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(Jx=angles, Jy=angles, Jz=angles)
def test_kak_entropy_bounded(Jx, Jy, Jz):
    E = operator_schmidt(kak_gate(Jx, Jy, Jz)).linear_entropy
    assert -1e-12 <= E <= 0.75 + 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=seeds, k=st.integers(1, 40))
def test_iteration_stays_density(seed, k):
    S = build_phi(haar_gate(2, RngStream(seed)), 2)
    out = iterate_channel(pure(4, seed), S, k)
    assert abs(np.trace(out) - 1) <= 1e-10
    assert np.min(np.linalg.eigvalsh(out)) >= -1e-9


@settings(max_examples=20, deadline=None)
@given(seed=seeds, M=st.sampled_from([1, 2]))
def test_eta_d_monotone(seed, M):
    S = build_phi(haar_gate(2, RngStream(seed)), M)
    c = eta_d_curve(pure(2**M, seed), pure(2**M, seed + 1), S, 30)
    assert c.monotonicity_violation() <= 1e-8
    assert np.all(c.eta <= 1 + 1e-8)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_zmax_below_largest_singular_value(seed):
    S = build_phi(haar_gate(2, RngStream(seed)), 1)
    sv = np.linalg.svd(S.matrix[1:, 1:], compute_uv=False)
    assert z_max_modulus(S) <= sv[0] + 1e-10
