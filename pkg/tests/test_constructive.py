import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardy_lab.constructive import (
    BridgeDirection,
    adjoint_spec,
    almost_bridge,
    decompose_many,
    extended_degree,
    forward_dual_representation,
    invariant_decomposition,
    sarason_converse_check,
    spanning_samples,
    verify_K_shift_invariance,
    wold_expand,
)
from hardy_lab.core import BlaschkeProduct, HardyFunction, TruncationConfig
from hardy_lab.errors import PreconditionError
from hardy_lab.operators import (
    BackwardShift,
    ForwardShift,
    PerturbationSpec,
    RankOneTerm,
    ToeplitzAdjoint,
    assemble,
    backshift_matrix,
)
from hardy_lab.scenarios import backward_instance, forward_instance, make_rng
from hardy_lab.subspaces import bh2_subspace, full_space, model_space, orthonormalize
from hardy_lab.symbols import Blaschke, z_symbol

Z = BlaschkeProduct((0j,))


def mono(k, N):
    return HardyFunction.monomial(k, N)


def unit_spec(N):
    one = mono(0, N)
    return PerturbationSpec(ToeplitzAdjoint(z_symbol()), (RankOneTerm(one, one),), sign=1)


def test_hand_iteration_f_equals_z(cfg8):
    res = invariant_decomposition(full_space(cfg8), unit_spec(8), mono(1, 8), cfg8)
    assert [complex(a[0]) for a in res.A] == [0, 1]
    assert res.residual_norms == [1.0, 0.0]
    assert np.allclose(res.F.coeffs[0, :2], [0, 1])
    assert res.f0.norm() < 1e-15
    assert res.exact_step == 2 and res.passed(cfg8)


def test_hand_iteration_f_equals_one(cfg8):
    res = invariant_decomposition(full_space(cfg8), unit_spec(8), mono(0, 8), cfg8)
    assert res.steps == 1 and res.residual_norms == [0.0]
    assert np.allclose(res.F.coeffs[0, :1], [1]) and res.f0.norm() < 1e-15


def test_degenerate_branch_puts_everything_in_f0(cfg8):
    # M backshift invariant and orthogonal to the functional direction: W = {0}
    M = model_space(BlaschkeProduct((0, 0)), cfg8)
    v = mono(5, 8)
    spec = PerturbationSpec(ToeplitzAdjoint(z_symbol()), (RankOneTerm(mono(3, 8), v),), sign=1)
    f = mono(0, 8) + mono(1, 8)
    res = invariant_decomposition(M, spec, f, cfg8)
    assert res.degenerate and res.p == 0
    assert np.allclose(res.f0.coeffs[:9], f.coeffs) and res.reconstruction_error < 1e-14


def test_preconditions(cfg8):
    with pytest.raises(PreconditionError):
        invariant_decomposition(full_space(cfg8), PerturbationSpec(BackwardShift()), mono(0, 8), cfg8)
    M = orthonormalize([mono(1, 8)], cfg8)
    with pytest.raises(PreconditionError):  # span{z} is not backshift invariant
        invariant_decomposition(M, PerturbationSpec(ToeplitzAdjoint(z_symbol())), mono(1, 8), cfg8)
    with pytest.raises(PreconditionError):  # f outside M
        invariant_decomposition(model_space(Z, cfg8), PerturbationSpec(ToeplitzAdjoint(z_symbol())), mono(1, 8), cfg8)
    no_origin = PerturbationSpec(ToeplitzAdjoint(Blaschke(BlaschkeProduct((0.5,)))))
    with pytest.raises(PreconditionError):
        invariant_decomposition(full_space(cfg8), no_origin, mono(1, 8), cfg8)


def test_wold_examples():
    cfg = TruncationConfig(9, guard=2)
    a = np.arange(1, 11, dtype=complex)
    f = HardyFunction(a)
    w = wold_expand(f, Z, cfg)
    assert [complex(c.coeffs[0]) for c in w.components] == list(a)
    w2 = wold_expand(f, BlaschkeProduct((0, 0)), cfg)
    for j, c in enumerate(w2.components):
        assert np.allclose(c.coeffs[:2], a[2 * j : 2 * j + 2]) and np.linalg.norm(c.coeffs[2:]) < 1e-14
    # f in K_phi: one component; truncating the kernel costs 0.4^65
    big = TruncationConfig(64)
    k = model_space(BlaschkeProduct((0, 0.4)), big).vectors()[1]
    w3 = wold_expand(k, BlaschkeProduct((0, 0.4)), big)
    assert np.linalg.norm(w3.components[0].coeffs[:65] - k.coeffs) < 1e-12
    assert max((c.norm() for c in w3.components[1:]), default=0.0) < 1e-12


@given(st.integers(0, 2**32))
@settings(max_examples=10)
def test_wold_parseval(seed):
    cfg = TruncationConfig(32, guard=8)
    rng = make_rng(seed)
    f = HardyFunction(rng.standard_normal(33) + 1j * rng.standard_normal(33))
    w = wold_expand(f, BlaschkeProduct((0, 0.3 - 0.4j)), cfg)
    assert w.parseval_gap <= 1e-10 * f.norm() ** 2
    assert w.reconstruction_error <= 1e-10 * f.norm()
    assert w.membership_residual <= 1e-10 * f.norm()


def test_extended_degree_covers_tail():
    assert extended_degree(BlaschkeProduct((0,)), 64) == 128
    L = extended_degree(BlaschkeProduct((0, 0.5)), 64)
    assert 0.5 ** (L - 64) < 1e-18


def test_K_shift_hand_samples(cfg8):
    spec = unit_spec(8)
    M = full_space(cfg8)
    batch = decompose_many(M, spec, [mono(1, 8)], cfg8)
    rep = verify_K_shift_invariance(batch.samples, M, spec, cfg8)
    assert rep.passed
    names = {c.name for c in rep.checks}
    assert {"member_shift1", "zero_sample", "constant_samples"} <= names


def test_sarason_converse_examples(cfg8):
    M = model_space(BlaschkeProduct((0, 0)), cfg8)
    assert sarason_converse_check(M, [], None, cfg8).passed
    F = full_space(cfg8)
    rep = sarason_converse_check(F, [mono(0, 8)], None, cfg8)
    assert rep.passed and rep.checks[-1].residual <= 1e-10
    spec = unit_spec(8)
    batch = decompose_many(F, spec, spanning_samples(F, make_rng(1)), cfg8)
    assert sarason_converse_check(F, [mono(0, 8)], batch.samples, cfg8).passed


@pytest.mark.parametrize("zeros", [(0,), (0, 0), (0, 0.5 + 0.2j)])
@pytest.mark.parametrize("full", [True, False])
def test_random_decompositions(cfg64, zeros, full):
    rng = make_rng(hash((zeros, full)) % 2**32)
    inst = backward_instance(rng, BlaschkeProduct(zeros), 3, cfg64, full)
    batch = decompose_many(inst.M, inst.spec, spanning_samples(inst.M, rng), cfg64)
    assert all(r.passed(cfg64) for r in batch.results)
    assert max(r.norm_identity_gap for r in batch.results) <= 1e-10
    assert verify_K_shift_invariance(batch.samples, inst.M, inst.spec, cfg64).passed
    fs = batch.W.vectors()
    assert sarason_converse_check(inst.M, fs, batch.samples, cfg64).passed


def test_adjoint_spec_swaps_terms(cfg8):
    u, v = mono(1, 8), mono(2, 8)
    spec = PerturbationSpec(ForwardShift(), (RankOneTerm(u, v),), sign=-1)
    adj = adjoint_spec(spec)
    assert np.allclose(assemble(adj, cfg8).entries, assemble(spec, cfg8).adjoint().entries)


def test_forward_dual_without_terms(cfg64):
    M = bh2_subspace(BlaschkeProduct((0, 0.5)), cfg64)
    out = forward_dual_representation(M, PerturbationSpec(ForwardShift()), cfg64)
    assert out.phi_basis == [] and out.report.passed


@pytest.mark.parametrize("seed", range(4))
def test_forward_dual_random(cfg64, seed):
    rng = make_rng(seed)
    inst = forward_instance(rng, 2, cfg64)
    out = forward_dual_representation(inst.M, inst.spec, cfg64, rng)
    assert out.report.passed, out.report.failures()
    assert len(out.phi_basis) <= 2


def test_bridge_hand_case(cfg64):
    M = orthonormalize([mono(1, 64)], cfg64)
    T = backshift_matrix(cfg64)
    rep = almost_bridge(T, M, BridgeDirection.ALMOST_TO_PERTURBATION, cfg64)
    assert rep.passed and rep.details["defect"] == 1
    # (T_z^* - 1 (x) z) z = 1 - 1 = 0
    A = T.entries - np.outer(mono(0, 64).coeffs, mono(1, 64).coeffs)
    assert np.allclose(A @ mono(1, 64).coeffs, 0)


def test_bridge_invariant_subspace_trivial(cfg64):
    M = model_space(BlaschkeProduct((0, 0.3)), cfg64)
    T = backshift_matrix(cfg64)
    for d in BridgeDirection:
        rep = almost_bridge(T, M, d, cfg64)
        assert rep.passed and rep.details["defect"] == 0


@pytest.mark.parametrize("seed", range(5))
def test_bridge_random_rank_two(cfg64, seed):
    rng = make_rng(100 + seed)
    inst = backward_instance(rng, Z, 2, cfg64, False)
    rep = almost_bridge(backshift_matrix(cfg64), inst.M, BridgeDirection.PERTURBATION_TO_ALMOST, cfg64, inst.spec.terms, sign=1)
    assert rep.passed, rep.failures()
    assert rep.details["defect"] <= 2


def test_bridge_forward_rejects_non_invariant(cfg64):
    M = orthonormalize([mono(1, 64)], cfg64)
    with pytest.raises(PreconditionError):
        almost_bridge(backshift_matrix(cfg64), M, BridgeDirection.PERTURBATION_TO_ALMOST, cfg64, ())
