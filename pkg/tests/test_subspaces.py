import numpy as np
import pytest
from hypothesis import given, strategies as st

from hardy_lab.core import BlaschkeProduct, HardyFunction, TruncationConfig, blaschke_series
from hardy_lab.errors import PreconditionError
from hardy_lab.operators import OperatorMatrix, backshift_matrix, shift_matrix, toeplitz_matrix
from hardy_lab.scenarios import make_rng, random_subspace
from hardy_lab.subspaces import (
    almost_invariant_defect,
    bh2_subspace,
    full_space,
    intersect,
    invariance_residual,
    is_invariant,
    kernel,
    krylov_subspace,
    model_space,
    nearly_invariant_check,
    orthonormalize,
    ortho_complement,
    ortho_diff,
    principal_angles,
    span_of_columns,
    zero_subspace,
)
from hardy_lab.symbols import ConjugateBlaschke

from strategies import zero_lists


def mono_span(ks, N):
    return orthonormalize([HardyFunction.monomial(k, N) for k in ks], eps_rank=1e-10)


def test_orthonormalize_drops_dependent(cfg8):
    f = HardyFunction.monomial(1, 8)
    M = orthonormalize([f, 2 * f, f + HardyFunction.monomial(0, 8)], cfg8)
    assert M.dim == 2 and M.orthonormality_error() < 1e-14


def test_complement_and_projection(cfg8):
    M = mono_span([0, 3], 8)
    C = ortho_complement(M)
    assert C.dim == 7
    assert np.abs(M.basis.conj().T @ C.basis).max() < 1e-14
    assert M.distance(HardyFunction.monomial(3, 8)) < 1e-14


def test_intersection_and_difference():
    A = mono_span([0, 1, 2], 8)
    B = mono_span([1, 2, 5], 8)
    I = intersect(A, B)
    assert I.dim == 2
    D = ortho_diff(A, B)
    assert D.dim == 1 and abs(D.basis[0, 0]) == pytest.approx(1)
    assert intersect(A, zero_subspace(8)).dim == 0


def test_principal_angles_small_angle_accuracy():
    t = 1e-9
    A = span_of_columns(np.eye(9)[:, :1])
    v = np.zeros(9)
    v[0], v[1] = np.cos(t), np.sin(t)
    B = span_of_columns(v[:, None])
    pa = principal_angles(A, B)
    assert pa.sines[0] == pytest.approx(t, rel=1e-6)
    # within eps_rank in cosine the intersection is numerically one-dimensional
    assert intersect(A, B, eps_rank=1e-10).dim == 1


def test_model_space_and_bh2_are_complementary(cfg64):
    B = BlaschkeProduct((0, 0.5, 0.5, 0.3j))
    K = model_space(B, cfg64)
    H = bh2_subspace(B, cfg64)
    assert K.dim == 4 and H.dim == 61
    # B z^j is in B H^2 up to the truncation tail
    assert H.distance(blaschke_series(B, 64).coeffs) < 1e-12


def test_model_space_is_backshift_invariant(cfg64):
    K = model_space(BlaschkeProduct((0, 0.6, -0.2 + 0.3j)), cfg64)
    assert is_invariant(backshift_matrix(cfg64), K, cfg64)


def test_invariance_residual_examples(cfg8):
    Sb = backshift_matrix(cfg8)
    assert invariance_residual(Sb, mono_span([0, 1], 8)) == 0
    assert invariance_residual(Sb, mono_span([1], 8)) == pytest.approx(1)
    assert invariance_residual(Sb, zero_subspace(8)) == 0


def test_defect_hand_case(cfg64):
    d = almost_invariant_defect(backshift_matrix(cfg64), mono_span([1], 64), cfg64)
    assert d.defect == 1
    v = d.defect_basis[0].coeffs
    assert abs(abs(v[0]) - 1) < 1e-14 and np.linalg.norm(v[1:]) < 1e-14


@given(st.integers(0, 2**32), st.integers(1, 6))
def test_defect_bounded_by_dimension(seed, dim):
    cfg = TruncationConfig(24, guard=6)
    M = random_subspace(make_rng(seed), cfg, dim)
    d = almost_invariant_defect(shift_matrix(cfg), M, cfg)
    assert d.defect <= dim and d.passed


def test_kernel_examples(cfg8):
    K = kernel(toeplitz_matrix(ConjugateBlaschke(BlaschkeProduct((0, 0))), 8), cfg8)
    assert K.dim == 2
    assert kernel(OperatorMatrix(np.eye(9)), cfg8).dim == 0
    assert kernel(OperatorMatrix(np.zeros((9, 9))), cfg8).dim == 9


def test_krylov_from_seed_is_invariant(cfg64):
    Sb = backshift_matrix(cfg64)
    K = krylov_subspace(Sb, [HardyFunction.monomial(5, 64)], cfg64)
    assert K.dim == 6 and is_invariant(Sb, K, cfg64)


def test_nearly_counterexample_pattern(cfg8):
    M = mono_span([1, 2, 3], 8)
    r2 = nearly_invariant_check(M, BlaschkeProduct((0, 0)), cfg8)
    r1 = nearly_invariant_check(M, BlaschkeProduct((0,)), cfg8)
    assert r2.is_nearly and r2.worst_residual == 0
    assert not r1.is_nearly and r1.worst_residual == pytest.approx(1)


def test_nearly_requires_origin(cfg8):
    with pytest.raises(PreconditionError):
        nearly_invariant_check(full_space(cfg8), BlaschkeProduct((0.5,)), cfg8)


def test_nearly_vacuous_when_intersection_trivial(cfg8):
    rep = nearly_invariant_check(mono_span([0], 8), BlaschkeProduct((0,)), cfg8)
    assert rep.is_nearly and rep.vacuous


@given(zero_lists(max_n=4, rmax=0.6), zero_lists(max_n=4, rmax=0.6))
def test_model_spaces_are_nearly_invariant(mz, bz):
    cfg = TruncationConfig(40, guard=10)
    rep = nearly_invariant_check(model_space(BlaschkeProduct(tuple(mz)), cfg), BlaschkeProduct(tuple(bz)), cfg)
    assert rep.is_nearly
