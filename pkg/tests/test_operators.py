import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardy_lab.core import BlaschkeProduct, HardyFunction, TruncationConfig, multiply_by_blaschke
from hardy_lab.errors import DimensionError, PreconditionError
from hardy_lab.operators import (
    BackwardShift,
    OperatorMatrix,
    PerturbationSpec,
    RankOneTerm,
    SarasonFlavor,
    ToeplitzAdjoint,
    assemble,
    backshift_matrix,
    c0_decay_profile,
    perturbation_rank,
    sarason_backward,
    sarason_forward,
    shift_matrix,
    toeplitz_interior_defect,
    toeplitz_matrix,
)
from hardy_lab.scenarios import make_rng, random_fourier_window, random_orthonormal
from hardy_lab.symbols import AnalyticPolynomial, Blaschke, ConjugateBlaschke, FourierWindow, z_symbol


def e(k, N=8):
    return HardyFunction.monomial(k, N)


def test_shift_pair(cfg8):
    S, Sb = shift_matrix(cfg8).entries, backshift_matrix(cfg8).entries
    assert np.array_equal(Sb @ e(0).coeffs, np.zeros(9))
    assert np.array_equal(Sb @ e(2).coeffs, e(1).coeffs)
    Pc = np.zeros((9, 9))
    Pc[0, 0] = 1
    assert np.array_equal(S @ Sb + Pc, np.eye(9))
    assert np.array_equal(Sb @ S, np.diag([1.0] * 8 + [0.0]))  # z^N is lost by truncation


def test_adjoint_involution():
    A = OperatorMatrix(np.arange(9).reshape(3, 3) * (1 + 2j))
    assert np.array_equal(A.adjoint().adjoint().entries, A.entries)
    with pytest.raises(DimensionError):
        OperatorMatrix(np.zeros((2, 3)))


@pytest.mark.parametrize(
    "sym, expected",
    [
        (AnalyticPolynomial((1,)), lambda N: np.eye(N + 1)),
        (AnalyticPolynomial((0, 1)), lambda N: shift_matrix(N).entries),
        (FourierWindow({-1: 1}), lambda N: backshift_matrix(N).entries),
        (ConjugateBlaschke(BlaschkeProduct((0,))), lambda N: backshift_matrix(N).entries),
    ],
)
def test_toeplitz_special_symbols(sym, expected):
    assert np.allclose(toeplitz_matrix(sym, 8).entries, expected(8))


def test_assemble_examples(cfg8):
    one = e(0)
    assert np.array_equal(assemble(PerturbationSpec(BackwardShift()), cfg8).entries, backshift_matrix(8).entries)
    A = assemble(PerturbationSpec(BackwardShift(), (RankOneTerm(one, one),), sign=1), cfg8).entries
    E00 = np.zeros((9, 9))
    E00[0, 0] = 1
    assert np.array_equal(A, backshift_matrix(8).entries + E00)
    with pytest.raises(DimensionError):
        assemble(PerturbationSpec(BackwardShift(), (RankOneTerm(e(0, 3), e(0, 3)),)), cfg8)


def test_rank_one_applies_inner_product():
    u, v = HardyFunction([1, 2j]), HardyFunction([1j, 1])
    f = HardyFunction([3, 4])
    assert np.allclose(RankOneTerm(u, v).matrix() @ f.coeffs, np.vdot(v.coeffs, f.coeffs) * u.coeffs)


def test_sarason_constant_term_vanishes(cfg8):
    spec = sarason_backward(None, [e(0)], SarasonFlavor.ADJOINT_FIRST, cfg8)
    assert np.array_equal(assemble(spec, cfg8).entries, backshift_matrix(8).entries)


def test_sarason_small_example():
    cfg = TruncationConfig(3, guard=0)
    fs = [HardyFunction.monomial(0, 3), HardyFunction.monomial(1, 3)]
    A = assemble(sarason_backward(z_symbol(), fs, SarasonFlavor.ADJOINT_FIRST, cfg), cfg).entries
    P = np.diag([1.0, 1.0, 0.0, 0.0])
    assert np.allclose(A, backshift_matrix(3).entries @ (np.eye(4) - P), atol=1e-12)


def test_sarason_rejects_non_orthonormal(cfg8):
    with pytest.raises(PreconditionError) as ei:
        sarason_backward(None, [e(0), e(0)], SarasonFlavor.ADJOINT_FIRST, cfg8)
    assert ei.value.details["gram"].shape == (2, 2)


@given(st.integers(0, 2**32), st.integers(1, 3), st.sampled_from([(0,), (0, 0), (0, 0.4 + 0.2j)]))
def test_sarason_flavours_and_adjoint(seed, m, zeros):
    cfg = TruncationConfig(16, guard=4)
    rng = make_rng(seed)
    fs = random_orthonormal(rng, 16, m)
    phi = Blaschke(BlaschkeProduct(zeros))
    A = assemble(sarason_backward(phi, fs, SarasonFlavor.ADJOINT_FIRST, cfg), cfg)
    F = np.stack([f.coeffs for f in fs], axis=1)
    Tst = toeplitz_matrix(phi, 16).adjoint().entries
    assert np.allclose(A.entries, Tst @ (np.eye(17) - F @ F.conj().T), atol=1e-12)
    # contraction
    assert A.norm() <= 1 + 1e-10
    # rank bound
    nominal, eff = perturbation_rank(sarason_backward(phi, fs, SarasonFlavor.FUNCTION_FIRST, cfg), cfg)
    assert nominal == m and eff <= m
    if zeros == (0,):
        fwd = assemble(sarason_forward(fs, cfg), cfg)
        assert np.allclose(A.adjoint().entries, fwd.entries, atol=1e-12)


@given(st.integers(0, 2**32))
def test_toeplitz_interior_identity(seed):
    cfg = TruncationConfig(64, guard=16)
    T = toeplitz_matrix(random_fourier_window(make_rng(seed), 8), cfg)
    assert toeplitz_interior_defect(T, cfg) <= 1e-12


def test_interior_identity_fails_for_non_toeplitz(cfg64):
    T = OperatorMatrix(np.diag(np.arange(65.0)))
    assert toeplitz_interior_defect(T, cfg64) >= 1


def test_decay_backshift_nilpotent(cfg8):
    prof = c0_decay_profile(backshift_matrix(cfg8), e(3), 5, cfg8, orientation="power")
    assert prof.norms == [1, 1, 1, 1, 0, 0] and prof.passed
    adj = c0_decay_profile(shift_matrix(cfg8), e(3), 5, cfg8, orientation="adjoint")
    assert adj.norms == prof.norms


def test_decay_identity_fails(cfg8):
    prof = c0_decay_profile(OperatorMatrix(np.eye(9)), e(2), 4, cfg8)
    assert prof.norms == [1.0] * 5 and not prof.passed
    with pytest.raises(ValueError):
        c0_decay_profile(OperatorMatrix(np.eye(9)), e(2), 0, cfg8)


def test_decay_sarason_constant(cfg64):
    S = assemble(sarason_backward(None, [HardyFunction.monomial(0, 64)], SarasonFlavor.ADJOINT_FIRST, cfg64), cfg64)
    g = HardyFunction(np.random.default_rng(3).standard_normal(65))
    prof = c0_decay_profile(S, g, 65, cfg64)
    assert prof.passed
    assert all(b <= a + 1e-12 for a, b in zip(prof.norms, prof.norms[1:]))


def test_base_toeplitz_adjoint_of_blaschke_is_exact():
    B = BlaschkeProduct((0, 0.5))
    A = assemble(PerturbationSpec(ToeplitzAdjoint(Blaschke(B))), 30).entries
    f = np.zeros(31, dtype=complex)
    f[:30] = np.random.default_rng(0).standard_normal(30)
    # T_B^* (B f) = f for polynomials when the product is formed at a higher degree
    Bf = multiply_by_blaschke(np.concatenate([f, np.zeros(200)]), B)
    big = toeplitz_matrix(Blaschke(B), 230).adjoint().entries @ Bf
    assert np.allclose(big[:31], f, atol=1e-12)
    assert np.allclose(A, toeplitz_matrix(Blaschke(B), 30).entries.conj().T)
