import json
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hamlin import corela as la
from hamlin import fermions as fe
from hamlin.errors import ConvergenceError, CostError, DimensionError, HermiticityError, NormalityError, NormError

TOL = 1e-10


def anti(A, B):
    return A @ B + B @ A


def random_vec(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


# Jordan-Wigner ----------------------------------------------------------------

def test_single_mode():
    (A,) = fe.jordan_wigner(1)
    assert np.array_equal(A, [[0, 1], [0, 0]])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_canonical_anticommutation(n):
    ops = fe.jordan_wigner(n)
    I = np.eye(2**n)
    for j, Aj in enumerate(ops):
        for k, Ak in enumerate(ops):
            assert la.spectral_norm(anti(Aj, Ak)) <= 1e-12
            assert la.spectral_norm(anti(Aj, la.dagger(Ak)) - (j == k) * I) <= 1e-12


def test_two_mode_cross_anticommutator():
    A1, A2 = fe.jordan_wigner(2)
    assert np.allclose(anti(A1, la.dagger(A2)), 0)


def test_number_operator_spectrum():
    n = 4
    lam = np.linalg.eigvalsh(fe.number_operator(n))
    assert np.allclose(np.unique(np.round(lam, 10)), np.arange(n + 1))


def test_jw_cost_cap():
    with pytest.raises(CostError):
        fe.jordan_wigner(11)


# Quad and the fermionic identities ------------------------------------------------

def test_quad_examples():
    n = 3
    ops = fe.jordan_wigner(n)
    assert np.allclose(fe.quad(np.eye(n)), fe.number_operator(n))
    E12 = np.zeros((n, n))
    E12[0, 1] = 1
    assert np.allclose(fe.quad(E12), la.dagger(ops[0]) @ ops[1])


def test_quad_dimension_error():
    with pytest.raises(DimensionError):
        fe.quad(np.eye(3), fe.jordan_wigner(2))


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_statement3_identities(seed, n):
    rng = np.random.default_rng(seed)
    L = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    M = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    beta, gamma = random_vec(rng, n), random_vec(rng, n)
    I = np.eye(2**n)
    cre_b, ann_g = fe.cre(beta), fe.ann(gamma)
    # {Cre(beta), Ann(gamma^T)} = gamma^T beta I
    assert la.spectral_norm(anti(cre_b, ann_g) - (gamma @ beta) * I) <= TOL
    assert la.spectral_norm(anti(cre_b, fe.cre(gamma))) <= TOL
    assert la.spectral_norm(anti(fe.ann(beta), ann_g)) <= TOL
    # Ann(beta^dag) = Cre(beta)^dag
    assert la.spectral_norm(fe.ann(beta.conj()) - la.dagger(cre_b)) <= TOL
    # Cre(beta) Ann(gamma^T) = Quad(beta gamma^T)
    assert la.spectral_norm(cre_b @ ann_g - fe.quad(np.outer(beta, gamma))) <= TOL
    QL = fe.quad(L)
    assert la.spectral_norm(la.commutator(QL, cre_b) - fe.cre(L @ beta)) <= TOL
    assert la.spectral_norm(la.commutator(QL, fe.ann(beta)) + fe.ann(beta @ L)) <= TOL
    assert la.spectral_norm(la.commutator(QL, fe.quad(M)) - fe.quad(la.commutator(L, M))) <= TOL


def test_auxiliary_commutator_sign():
    n = 3
    ops = fe.jordan_wigner(n)
    for j in range(n):
        for k in range(n):
            for m in range(n):
                lhs = la.commutator(la.dagger(ops[j]) @ ops[k], ops[m])
                assert np.allclose(lhs, -(j == m) * ops[k])


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_quad_conserves_particle_number(seed, n):
    W = np.random.default_rng(seed).normal(size=(n, n))
    assert la.spectral_norm(la.commutator(fe.quad(W), fe.number_operator(n))) <= TOL


def test_quadcoeff_json_roundtrip(rng):
    q = fe.QuadCoeff(la.random_hermitian(rng, 3), True)
    back = fe.QuadCoeff.from_json(q.to_json())
    assert np.array_equal(back.W, q.W) and back.hermitian_flag
    with pytest.raises(HermiticityError):
        fe.QuadCoeff(np.array([[0, 1], [0, 0]]), True)


# eta-seminorm -----------------------------------------------------------------------

def test_eta_seminorm_examples():
    assert fe.eta_seminorm(np.diag([1.0, -2.0, 3.0]), 0) == 0
    assert fe.eta_seminorm(np.diag([1.0, -2.0, 3.0]), 2) == pytest.approx(4.0)
    for eta in range(5):
        assert fe.eta_seminorm(np.eye(4), eta) == pytest.approx(eta)


def test_eta_seminorm_errors():
    with pytest.raises(NormalityError):
        fe.eta_seminorm(np.array([[0, 1], [0, 0]]), 1)
    with pytest.raises(CostError):
        fe.eta_seminorm_bruteforce(np.eye(17), 2)


@pytest.mark.parametrize("n", range(1, 13))
def test_hermitian_fast_path_matches_bruteforce(n):
    rng = np.random.default_rng(100 + n)
    J = la.random_hermitian(rng, n)
    for eta in range(n + 1):
        assert fe.eta_seminorm(J, eta) == pytest.approx(fe.eta_seminorm_bruteforce(J, eta), abs=1e-10)


@pytest.mark.parametrize("n", range(1, 7))
def test_operator_level_matches_coefficient_level(n):
    rng = np.random.default_rng(200 + n)
    U = la.random_unitary(rng, n)
    normal = U @ np.diag(random_vec(rng, n)) @ la.dagger(U)
    for J in (la.random_hermitian(rng, n), normal):
        for eta in range(n + 1):
            assert fe.eta_seminorm(J, eta) == pytest.approx(fe.eta_seminorm_operator(J, eta), abs=1e-8)


@settings(max_examples=30)
@given(st.integers(0, 2**32 - 1), st.integers(1, 8))
def test_eta_seminorm_spectral_bound(seed, n):
    J = la.random_hermitian(np.random.default_rng(seed), n)
    top = np.max(np.abs(np.linalg.eigvalsh(J)))
    for eta in range(n + 1):
        assert fe.eta_seminorm(J, eta) <= eta * top + 1e-12


def test_eta_seminorm_bound_equality_rank_one():
    J = np.diag([0.0, 0.0, 2.0])
    assert fe.eta_seminorm(J, 1) == pytest.approx(1 * 2.0)
    assert fe.eta_seminorm(-np.eye(3), 2) == pytest.approx(2.0)


# commutator bound ----------------------------------------------------------------

def test_comm_bound_trivial_cases(rng):
    W = la.random_hermitian(rng, 3)
    assert fe.comm_bound_eta_p1([W], 2) == 0
    assert fe.comm_bound_eta_p1([W, W @ W], 2) == 0
    with pytest.raises(HermiticityError):
        fe.comm_bound_eta_p1([W, np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]])], 1)


def test_comm_bound_x_z_two_modes():
    Wx, Wz = np.array([[0, 1], [1, 0]]), np.array([[1, 0], [0, -1]])
    for eta in range(3):
        assert fe.comm_bound_eta_p1([Wx, Wz], eta) >= fe.comm_exact_eta_p1([Wx, Wz], eta) - 1e-12
    assert fe.comm_bound_eta_p1([Wx, Wz], 1) > 0


@settings(max_examples=10)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.integers(2, 3))
def test_comm_bound_dominates_exact(seed, n, terms):
    rng = np.random.default_rng(seed)
    Ws = [la.random_hermitian(rng, n) for _ in range(terms)]
    for eta in range(n + 1):
        assert fe.comm_bound_eta_p1(Ws, eta) >= fe.comm_exact_eta_p1(Ws, eta) - 1e-9
        for _, _, exact, bound in fe.sector_norm_report(Ws, eta):
            assert bound >= exact - 1e-9


# sum of squares ----------------------------------------------------------------

def loglog_slope(xs, ys):
    return np.polyfit(np.log(xs), np.log(ys), 1)[0]


def test_sos_scalar():
    a = 0.7
    res = fe.sos_simulate(fe.SosSpec([[np.array([[a]])]], t=1.0, eps=1e-3))
    assert res.error <= 1e-3
    assert res.controlled[0, 0] == pytest.approx(np.exp(-1j * a * a), abs=1e-3)
    assert np.allclose(res.output.payload, [[a * a]])


def test_sos_zero_is_identity():
    res = fe.sos_simulate(fe.SosSpec([[np.zeros((2, 2))] * 2] * 2, t=0.5))
    assert np.allclose(res.controlled, np.eye(4))
    res = fe.sos_square_path(fe.SosSpec([[np.zeros((2, 2))]], t=0.5))
    assert np.allclose(res.controlled, np.eye(4))


@pytest.mark.parametrize("p", [1, 2, 4])
def test_sos_random_converges(p):
    rng = np.random.default_rng(21)
    terms = [[la.random_matrix(rng, 2, 0.5) for _ in range(2)] for _ in range(2)]
    res = fe.sos_simulate(fe.SosSpec(terms, t=0.5, eps=1e-2, p=p))
    assert res.error <= 1e-2 and res.r <= 2**14
    H = sum(la.dagger(sum(row)) @ sum(row) for row in terms)
    assert la.spectral_norm(res.controlled - fe.exact_controlled(H, 0.5)) == pytest.approx(res.error)


def test_sos_error_slope():
    rng = np.random.default_rng(22)
    terms = [[la.random_matrix(rng, 2, 0.5) for _ in range(2)] for _ in range(2)]
    rs = [4, 8, 16, 32, 64]
    errs = [fe.sos_simulate(fe.SosSpec(terms, t=0.5, p=2, r=r)).error for r in rs]
    # the dominant term predicts r^-(p-1)/2 or better
    assert loglog_slope(rs, errs) <= -0.45


def test_sos_convergence_error():
    rng = np.random.default_rng(23)
    terms = [[la.random_matrix(rng, 2, 0.5) for _ in range(2)] for _ in range(2)]
    with pytest.raises(ConvergenceError) as info:
        fe.sos_simulate(fe.SosSpec(terms, t=0.5, eps=1e-12, p=1, max_log2_r=4))
    assert len(info.value.trace) == 5


def test_sos_spec_validation():
    with pytest.raises(NormError):
        fe.SosSpec([[2.0 * np.eye(2)]])
    with pytest.raises(DimensionError):
        fe.SosSpec([[np.eye(2) * 0.1, np.eye(3) * 0.1]])


def test_sos_spec_json_roundtrip(rng):
    spec = fe.SosSpec([[la.random_matrix(rng, 2, 0.5)]], t=0.3, eps=1e-3, p=2)
    back = fe.SosSpec.from_json(spec.to_json())
    assert np.array_equal(back.terms[0][0], spec.terms[0][0]) and back.t == 0.3


def test_square_path_single_summand(rng):
    h = la.random_hermitian(rng, 2, 0.6)
    res = fe.sos_square_path(fe.SosSpec([[h]], t=0.5, eps=1e-3))
    assert res.error <= 1e-3
    assert la.spectral_norm(res.controlled - fe.exact_controlled(h @ h, 0.5)) <= 1e-3


def test_square_path_agrees_with_generic():
    rng = np.random.default_rng(24)
    terms = [[la.random_hermitian(rng, 2, 0.4) for _ in range(2)] for _ in range(2)]
    eps = 1e-2
    spec = fe.SosSpec(terms, t=0.5, eps=eps, p=2)
    a, b = fe.sos_simulate(spec), fe.sos_square_path(spec)
    assert la.spectral_norm(a.controlled - b.controlled) <= 2 * eps


def test_square_path_needs_hermitian(rng):
    with pytest.raises(HermiticityError):
        fe.sos_square_path(fe.SosSpec([[la.random_matrix(rng, 2, 0.5)]]))


@pytest.mark.parametrize("variant", ["generic", "square"])
def test_sos_preserves_particle_sectors(variant):
    rng = np.random.default_rng(25)
    n = 3
    terms = [[0.3 * fe.quad(la.random_hermitian(rng, n))] for _ in range(2)]
    spec = fe.SosSpec(terms, t=0.5, eps=1e-3, p=2)
    res = fe.sos_simulate(spec) if variant == "generic" else fe.sos_square_path(spec)
    top = res.controlled[: 2**n, : 2**n]
    for eta in range(n + 1):
        idx = fe.sector_basis(n, eta)
        psi = np.zeros(2**n, dtype=complex)
        psi[idx] = random_vec(rng, idx.size)
        psi /= np.linalg.norm(psi)
        out = top @ psi
        outside = np.delete(out, idx)
        assert np.linalg.norm(outside) <= 1e-8
