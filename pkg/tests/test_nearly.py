import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardy_lab.core import BlaschkeProduct, HardyFunction, TruncationConfig, VectorHardyFunction, kernel_function
from hardy_lab.errors import DegenerateInputError, PreconditionError
from hardy_lab.nearly import (
    CorollaryDirection,
    KernelGram,
    UserSupplied,
    corollary_bridge,
    counterexample_space,
    counterexample_suite,
    g_perturbation,
    inclusion_check,
    kernel_perturbation,
    nearly_converse_check,
    nearly_decompose,
    perturbed_toeplitz_kernel,
    random_model_basis,
)
from hardy_lab.operators import backshift_matrix
from hardy_lab.scenarios import invariant_subspace, make_rng, random_blaschke, random_coanalytic
from hardy_lab.subspaces import Subspace, full_space, model_space, orthonormalize
from hardy_lab.symbols import ConjugateBlaschke

Z = BlaschkeProduct((0j,))
Z2 = BlaschkeProduct((0j, 0j))


def span(cols, N):
    return orthonormalize([HardyFunction.from_coeffs(c, N) for c in cols], eps_rank=1e-10)


def test_decompose_two_dimensional_model_space(cfg8):
    d = nearly_decompose(model_space(Z2, cfg8), Z, cfg8)
    assert d.r == 1 and abs(abs(d.G0[0].coeffs[0]) - 1) < 1e-14
    ks = [np.abs(k.coeffs[0]) for k in d.K_samples]
    assert sorted(tuple(np.round(k, 12)) for k in ks) == [(0, 1), (1, 0)]
    assert d.theta_zero_flag and d.report.passed


def test_decompose_single_function(cfg8):
    g = HardyFunction.from_coeffs([0.6, 0.8], 8)
    d = nearly_decompose(span([g.coeffs], 8), Z, cfg8)
    assert d.r == 1 and d.steps == 1
    assert all(k.degree == 0 for k in d.K_samples)


def test_decompose_degenerate_and_preconditions(cfg8):
    with pytest.raises(PreconditionError):
        nearly_decompose(span([[0, 1]], 8), Z, cfg8)  # T_z^* z = 1 not in span{z}
    with pytest.raises(PreconditionError):
        nearly_decompose(full_space(cfg8), BlaschkeProduct((0.5,)), cfg8)
    with pytest.raises(DegenerateInputError):
        nearly_decompose(Subspace(np.zeros((9, 0), dtype=complex)), Z, cfg8)


def test_converse_examples(cfg8):
    G0 = [HardyFunction.monomial(0, 8)]
    Ks = [VectorHardyFunction(np.eye(3)[i][None, :]) for i in range(3)]
    for B in (Z, Z2, BlaschkeProduct((0, 0.3, -0.5j))):
        rep = nearly_converse_check(G0, Ks, B, cfg8)
        assert rep.passed and rep.details["dim_M"] == 3
    rep = nearly_converse_check(G0, [VectorHardyFunction(np.ones((1, 1)))], Z, cfg8)
    assert rep.passed and rep.details["vacuous"]


def test_converse_detects_broken_isometry(cfg8):
    G0 = [HardyFunction.from_coeffs([1, 1], 8)]  # not normalised
    rep = nearly_converse_check(G0, [VectorHardyFunction(np.ones((1, 1)))], Z, cfg8)
    assert not rep.passed


@given(st.integers(0, 2**32), st.integers(1, 6))
@settings(max_examples=15)
def test_round_trip_random_model_spaces(seed, n):
    cfg = TruncationConfig(40, guard=10)
    rng = make_rng(seed)
    B = random_blaschke(rng, n)
    M = model_space(random_blaschke(rng, int(rng.integers(1, 7))), cfg)
    d = nearly_decompose(M, B, cfg, rng=rng)
    assert 1 <= d.r <= n
    assert d.report.passed and d.theta_zero_flag
    assert nearly_converse_check(d.G0, d.K_samples, B, cfg).passed


def test_b1_specialisation(cfg64):
    # with B = z the defect space is one-dimensional
    M = model_space(BlaschkeProduct((0.2, 0.5j, -0.4)), cfg64)
    assert nearly_decompose(M, Z, cfg64).r == 1


def test_corollary_examples(cfg64):
    M = model_space(BlaschkeProduct((0, 0)), cfg64)
    for d in CorollaryDirection:
        assert corollary_bridge(M, BlaschkeProduct((0, 0, 0)), d, cfg64).passed
    rep = corollary_bridge(span([[1], [0, 1]], 64), Z2, CorollaryDirection.CONVERSE, cfg64)
    assert rep.passed and rep.checks[-1].residual <= 1e-10


def test_corollary_forward_kernel_terms(cfg64):
    B = BlaschkeProduct((0, 0.5))
    rng = make_rng(7)
    M = invariant_subspace(kernel_perturbation(B, cfg64), rng, cfg64, 6)
    rep = corollary_bridge(M, B, CorollaryDirection.FORWARD, cfg64)
    assert rep.passed, rep.failures()
    # the zero at the origin contributes nothing: T_z^* k_0 = 0
    assert np.allclose(backshift_matrix(64).entries @ kernel_function(0, 64).coeffs, 0)


def test_corollary_preconditions(cfg8):
    M = span([[0, 1]], 8)
    with pytest.raises(PreconditionError):
        corollary_bridge(M, Z, CorollaryDirection.CONVERSE, cfg8)
    with pytest.raises(PreconditionError):
        corollary_bridge(span([[0, 0, 1]], 8), BlaschkeProduct((0, 0.5)), CorollaryDirection.FORWARD, cfg8)


def test_g_perturbation_matrix():
    G0 = np.zeros((5, 1), dtype=complex)
    G0[0] = 1
    assert np.allclose(g_perturbation(G0).entries, backshift_matrix(4).entries)


def test_toeplitz_kernel_hand_cases(cfg8):
    cz = ConjugateBlaschke(Z)
    r = perturbed_toeplitz_kernel(cz, Z, KernelGram(), cfg8)
    assert r.kernel.dim == 1 and abs(abs(r.kernel.basis[0, 0]) - 1) < 1e-14 and r.nearly
    r = perturbed_toeplitz_kernel(cz, Z2, KernelGram(), cfg8)
    target = np.zeros(9)
    target[0], target[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    assert r.kernel.dim == 1 and r.kernel.distance(target) <= 1e-10
    assert r.nearly and r.vacuous and not r.edge_suspect


def test_toeplitz_kernel_preconditions(cfg8):
    with pytest.raises(PreconditionError):
        perturbed_toeplitz_kernel(ConjugateBlaschke(Z), BlaschkeProduct((0.3,)), KernelGram(), cfg8)
    with pytest.raises(PreconditionError):
        perturbed_toeplitz_kernel(ConjugateBlaschke(Z), Z2, UserSupplied([HardyFunction.monomial(0, 8)]), cfg8)
    bad = UserSupplied([HardyFunction.monomial(0, 8), HardyFunction.monomial(3, 8)])
    with pytest.raises(PreconditionError):
        perturbed_toeplitz_kernel(ConjugateBlaschke(Z), Z2, bad, cfg8)


@given(st.integers(0, 2**32))
@settings(max_examples=15)
def test_toeplitz_kernel_random_bases(seed):
    cfg = TruncationConfig(64, guard=16)
    rng = make_rng(seed)
    B = random_blaschke(rng, int(rng.integers(1, 5)))
    phi = random_coanalytic(rng, int(rng.integers(0, 4)))
    dims = set()
    for choice in [KernelGram()] + [random_model_basis(B, cfg, rng) for _ in range(3)]:
        r = perturbed_toeplitz_kernel(phi, B, choice, cfg)
        assert r.nearly and r.residual <= cfg.eps_residual
        dims.add(r.kernel.dim)
    assert len(dims) == 1  # the operator does not depend on the basis


def test_analytic_symbol_flagged_edge_suspect(cfg64):
    from hardy_lab.symbols import Blaschke

    r = perturbed_toeplitz_kernel(Blaschke(BlaschkeProduct((0, 0.5))), Z2, KernelGram(), cfg64)
    assert r.edge_suspect


@pytest.mark.parametrize("zeros", [(0,), (0, 0.5)])
def test_counterexample_suite(cfg64, zeros):
    rep = counterexample_suite(BlaschkeProduct(zeros), cfg64)
    assert rep.passed, rep.failures()


def test_counterexample_space_is_monomials(cfg8):
    M, Bn = counterexample_space(Z, cfg8)
    assert Bn.zeros == (0, 0) and M.dim == 3
    assert M.distance(np.eye(9)[:, 1:4]) < 1e-14


def test_counterexample_requires_origin(cfg8):
    with pytest.raises(PreconditionError):
        counterexample_suite(BlaschkeProduct((0.5,)), cfg8)


@given(st.integers(0, 2**32))
@settings(max_examples=20)
def test_inclusion_never_violated(seed):
    cfg = TruncationConfig(32, guard=8)
    rng = make_rng(seed)
    B = random_blaschke(rng, int(rng.integers(1, 5)))
    M = invariant_subspace(kernel_perturbation(Z, cfg), rng, cfg, int(rng.integers(1, 8)))
    assert inclusion_check(M, B, cfg).holds
