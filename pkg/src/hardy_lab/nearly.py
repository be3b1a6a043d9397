"""Nearly T*_{z,B}-invariant subspaces: isometric multipliers, perturbation bridges, kernels.

Throughout B is a finite Blaschke product with B(0) = 0 and J = M cap B H^2.
For a nearly invariant M with G = M (-) J spanned by g_1..g_r, every f in M
expands as f = G0 K with K = sum_t A_t z^t, where

    A_t = G0^H f_t,   h_t = P_J f_t,   f_{t+1} = T_z^* h_t   (f_0 = f),

and ||f|| = ||K||.  Each step is exact on polynomials, so the expansion is
checked directly by convolving G0 with K.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np
from scipy.signal import fftconvolve

from .core import BlaschkeProduct, HardyFunction, TruncationConfig, VectorHardyFunction, kernel_function, multiply_by_blaschke
from .errors import ConvergenceError, DegenerateInputError, DimensionError, PreconditionError
from .operators import OperatorMatrix, backshift_matrix, check_orthonormal, toeplitz_matrix
from .reports import VerificationReport
from .subspaces import (
    NearlyReport,
    Subspace,
    bh2_subspace,
    intersect,
    invariance_residual,
    invariance_threshold,
    kernel,
    model_space,
    nearly_invariant_check,
    orthonormal_columns,
    ortho_diff,
)
from .symbols import SymbolSpec, as_symbol


def _require_origin(B: BlaschkeProduct) -> None:
    if not B.vanishes_at_origin:
        raise PreconditionError("Blaschke product must vanish at the origin", zeros=B.zeros)


def _g0_split(M: Subspace, B: BlaschkeProduct, cfg: TruncationConfig) -> tuple[Subspace, Subspace]:
    """(G, J) with J = M cap B H^2 and G its orthogonal complement in M."""
    BH = bh2_subspace(B, cfg)
    return ortho_diff(M, BH, cfg.eps_rank), intersect(M, BH, cfg.eps_rank)


def synthesize(G0: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Coefficients of G0 K for K of shape (s, r, n+1); result has shape (s, N + n + 1)."""
    if K.shape[-1] == 0 or G0.shape[1] == 0:
        return np.zeros((K.shape[0], G0.shape[0] + max(K.shape[-1], 1) - 1), dtype=complex)
    return fftconvolve(G0.T[None, :, :], K, axes=-1).sum(axis=1)


def k_space_membership(
    G0: np.ndarray, K: np.ndarray, M: Subspace
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-sample (distance of G0 K to M, |(||G0K||^2 - ||K||^2)| / ||K||^2, ||K||).

    The distance counts mass of G0 K beyond the ambient degree as lying outside M.
    """
    Y = synthesize(G0, K)
    N = M.degree
    head = Y[:, : N + 1].T
    beyond = np.linalg.norm(Y[:, N + 1 :], axis=1) if Y.shape[1] > N + 1 else np.zeros(Y.shape[0])
    inside = np.linalg.norm(head - M.project(head), axis=0) if M.dim else np.linalg.norm(head, axis=0)
    dist = np.hypot(inside, beyond)
    kn = np.linalg.norm(K.reshape(K.shape[0], -1), axis=1)
    gap = np.abs(np.linalg.norm(Y, axis=1) ** 2 - kn**2) / np.maximum(kn**2, np.finfo(float).tiny)
    return dist, gap, kn


@dataclass(frozen=True, eq=False)
class NearlyDecomposition:
    """Isometric-multiplier data of a nearly invariant subspace.

    ``K_samples[i]`` has shape (r, steps) and satisfies G0 K = samples[:, i].
    """

    G0: list[HardyFunction]
    r: int
    K_samples: list[VectorHardyFunction]
    theta_zero_flag: bool
    samples: np.ndarray
    steps: int
    trace: list[float]
    report: VerificationReport

    @property
    def G0_matrix(self) -> np.ndarray:
        return np.stack([g.coeffs for g in self.G0], axis=1)

    def K_array(self) -> np.ndarray:
        return np.stack([k.coeffs for k in self.K_samples], axis=0)


def nearly_decompose(
    M: Subspace,
    B: BlaschkeProduct,
    cfg: TruncationConfig,
    rng: np.random.Generator | None = None,
    n_random: int = 16,
    max_steps: int | None = None,
    rtol: float = 1e-14,
    shifts: int = 3,
) -> NearlyDecomposition:
    """Expand a spanning sample of M (basis plus random unit combinations) as G0 K."""
    cfg = cfg.with_degree(M.degree) if cfg.degree != M.degree else cfg
    _require_origin(B)
    if M.dim == 0:
        raise DegenerateInputError("M is the zero subspace")
    rep0 = nearly_invariant_check(M, B, cfg)
    if not rep0.is_nearly:
        raise PreconditionError("M is not nearly invariant", residual=rep0.worst_residual)
    G, J = _g0_split(M, B, cfg)
    r = G.dim
    if r == 0:
        raise DegenerateInputError("M lies inside B H^2, which forces M = {0}", dim=M.dim)
    G0 = G.basis
    N = M.degree

    X = M.basis
    if rng is not None and n_random > 0:
        Z = rng.standard_normal((M.dim, n_random)) + 1j * rng.standard_normal((M.dim, n_random))
        R = M.basis @ Z
        X = np.concatenate([X, R / np.linalg.norm(R, axis=0)], axis=1)
    fnorm = np.linalg.norm(X, axis=0)

    Sb = backshift_matrix(N).entries
    cap = 200 * (N + 1) if max_steps is None else max_steps
    f = X.copy()
    As, trace = [], []
    while True:
        As.append((G0.conj().T @ f).T)
        f = Sb @ J.project(f) if J.dim else np.zeros_like(f)
        rel = float((np.linalg.norm(f, axis=0) / fnorm).max())
        trace.append(rel)
        if rel <= rtol or len(As) >= cap:
            break
    if trace[-1] > cfg.eps_residual:
        raise ConvergenceError(f"nearly expansion stalled at {trace[-1]:.3e} after {len(As)} steps", trace)
    K = np.stack(As, axis=2)  # (s, r, steps)

    rep = VerificationReport("nearly_decompose")
    rep.add("nearly_precondition", rep0.worst_residual, rep0.threshold)
    rep.add_flag("lemma_r_at_most_n", 1 <= r <= B.n)
    Y = synthesize(G0, K)
    pad = np.zeros_like(Y)
    pad[:, : N + 1] = X.T
    rec = float((np.linalg.norm(Y - pad, axis=1) / fnorm).max())
    rep.add("reconstruction", rec, cfg.eps_residual)
    dist, gap, _ = k_space_membership(G0, K, M)
    rep.add("isometric_identity", float(gap.max()), cfg.eps_residual)
    rep.add("sample_membership", float((dist / fnorm).max()), cfg.eps_residual)
    for k in range(1, shifts + 1):
        if K.shape[2] <= k:
            break
        Ks = K[:, :, k:]
        d, g, kn = k_space_membership(G0, Ks, M)
        live = kn > cfg.eps_residual
        rep.add(f"backshift_member_{k}", float((d[live] / kn[live]).max(initial=0.0)), cfg.eps_residual)
        rep.add(f"backshift_isometry_{k}", float(g[live].max(initial=0.0)), cfg.eps_residual)
    # constants 1 (x) e_i: G0 e_i = g_i must be a member with ||g_i|| = 1
    E = np.eye(r, dtype=complex)[:, :, None]
    d, g, _ = k_space_membership(G0, E, M)
    theta_zero = bool(d.max() <= cfg.eps_residual and g.max() <= cfg.eps_residual)
    rep.add("constant_membership", float(max(d.max(), g.max())), cfg.eps_residual)
    rep.details.update({"r": r, "n": B.n, "steps": K.shape[2], "theta_zero": theta_zero})
    rep.traces["relative_remainder"] = trace

    return NearlyDecomposition(
        G0=[HardyFunction(G0[:, j]) for j in range(r)],
        r=r,
        K_samples=[VectorHardyFunction(K[i]) for i in range(K.shape[0])],
        theta_zero_flag=theta_zero,
        samples=X,
        steps=K.shape[2],
        trace=trace,
        report=rep,
    )


def _stack_K(K_samples: Sequence[VectorHardyFunction], r: int) -> np.ndarray:
    if not K_samples:
        return np.zeros((0, r, 1), dtype=complex)
    width = max(k.degree + 1 for k in K_samples)
    out = np.zeros((len(K_samples), r, width), dtype=complex)
    for i, k in enumerate(K_samples):
        if k.p != r:
            raise DimensionError(f"K sample has {k.p} channels, G0 has {r}")
        out[i, :, : k.degree + 1] = k.coeffs
    return out


def nearly_converse_check(
    G0: Sequence[HardyFunction],
    K_samples: Sequence[VectorHardyFunction],
    B: BlaschkeProduct,
    cfg: TruncationConfig,
) -> VerificationReport:
    """Build M = span{G0 K} from samples and test near invariance against B."""
    rep = VerificationReport("nearly_converse")
    if not G0:
        rep.add_flag("nonempty_G0", False)
        return rep
    N = G0[0].degree
    cfg = cfg.with_degree(N) if cfg.degree != N else cfg
    _require_origin(B)
    G = np.stack([g.coeffs for g in G0], axis=1)
    Gram = G.conj().T @ G
    rep.add("G0_orthonormal", float(np.abs(Gram - np.eye(G.shape[1])).max()), cfg.eps_residual)
    K = _stack_K(K_samples, G.shape[1])
    Y = synthesize(G, K)
    kn = np.linalg.norm(K.reshape(K.shape[0], -1), axis=1)
    live = kn > 0
    gap = np.abs(np.linalg.norm(Y, axis=1) ** 2 - kn**2)[live] / kn[live] ** 2
    rep.add("isometric_identity", float(gap.max(initial=0.0)), cfg.eps_residual)
    beyond = np.linalg.norm(Y[:, N + 1 :], axis=1) if Y.shape[1] > N + 1 else np.zeros(Y.shape[0])
    rep.add("images_in_ambient", float((beyond[live] / kn[live]).max(initial=0.0)), cfg.eps_residual)
    M = Subspace(orthonormal_columns(Y[:, : N + 1].T, cfg.eps_rank), cfg.eps_rank)
    if K.shape[2] > 1:
        d, g, ks = k_space_membership(G, K[:, :, 1:], M)
        ok = ks > cfg.eps_residual
        rep.add("backshift_closed", float((d[ok] / ks[ok]).max(initial=0.0)), cfg.eps_residual)
    nr = nearly_invariant_check(M, B, cfg)
    rep.add("nearly_invariant", nr.worst_residual, nr.threshold)
    rep.details.update({"dim_M": M.dim, "vacuous": nr.vacuous, "intersection_dim": nr.intersection_dim})
    return rep


class CorollaryDirection(Enum):
    FORWARD = "forward"  # invariance under the kernel perturbation => nearly
    CONVERSE = "converse"  # nearly => invariance under the g_i perturbation


def kernel_perturbation(B: BlaschkeProduct, cfg: TruncationConfig) -> OperatorMatrix:
    """T_z^* - sum_i (T_z^* k_{z_i}) (x) k_{z_i}, zeros listed with multiplicity."""
    Sb = backshift_matrix(cfg.degree).entries
    A = Sb.copy()
    for w in B.zeros:
        k = kernel_function(w, cfg).coeffs
        A -= np.outer(Sb @ k, k.conj())
    return OperatorMatrix(A, "T_z* - sum T_z*k (x) k")


def g_perturbation(G0: np.ndarray) -> OperatorMatrix:
    """T_z^* - sum_i (T_z^* g_i) (x) g_i."""
    Sb = backshift_matrix(G0.shape[0] - 1).entries
    return OperatorMatrix(Sb - Sb @ G0 @ G0.conj().T, "T_z* - sum T_z*g (x) g")


def corollary_bridge(
    M: Subspace, B: BlaschkeProduct, direction: CorollaryDirection, cfg: TruncationConfig
) -> VerificationReport:
    cfg = cfg.with_degree(M.degree) if cfg.degree != M.degree else cfg
    _require_origin(B)
    rep = VerificationReport(f"corollary_bridge.{direction.value}")
    if direction is CorollaryDirection.FORWARD:
        T = kernel_perturbation(B, cfg)
        res = invariance_residual(T, M)
        thr = invariance_threshold(T, cfg)
        if res > thr:
            raise PreconditionError("M is not invariant under the kernel perturbation", residual=res)
        rep.add("invariance_precondition", res, thr)
        J = intersect(M, bh2_subspace(B, cfg), cfg.eps_rank)
        if J.dim:
            ks = np.stack([kernel_function(w, cfg).coeffs for w in B.zeros], axis=1)
            vals = np.abs(ks.conj().T @ J.basis).max(initial=0.0)
        else:
            vals = 0.0
        rep.add("terms_annihilate_J", float(vals), cfg.eps_residual)
        nr = nearly_invariant_check(M, B, cfg)
        rep.add("nearly_invariant", nr.worst_residual, nr.threshold)
        rep.details["intersection_dim"] = J.dim
        return rep

    nr = nearly_invariant_check(M, B, cfg)
    if not nr.is_nearly:
        raise PreconditionError("M is not nearly invariant", residual=nr.worst_residual)
    rep.add("nearly_precondition", nr.worst_residual, nr.threshold)
    G, _ = _g0_split(M, B, cfg)
    T = g_perturbation(G.basis)
    rep.add("invariance", invariance_residual(T, M), invariance_threshold(T, cfg))
    rep.details["r"] = G.dim
    return rep


@dataclass(frozen=True)
class KernelGram:
    """Orthonormalised (derivative) reproducing kernels at the zeros of B."""


@dataclass(frozen=True, eq=False)
class UserSupplied:
    functions: tuple[HardyFunction, ...]

    def __post_init__(self):
        object.__setattr__(self, "functions", tuple(self.functions))


BasisChoice = Union[KernelGram, UserSupplied]


def random_model_basis(B: BlaschkeProduct, cfg: TruncationConfig, rng: np.random.Generator) -> UserSupplied:
    """The kernel-Gram basis of K_B mixed by a random unitary."""
    Q = model_space(B, cfg).basis
    Z = rng.standard_normal((Q.shape[1],) * 2) + 1j * rng.standard_normal((Q.shape[1],) * 2)
    U, _ = np.linalg.qr(Z)
    QU = Q @ U
    return UserSupplied(tuple(HardyFunction(QU[:, j]) for j in range(QU.shape[1])))


@dataclass(frozen=True, eq=False)
class ToeplitzKernelResult:
    kernel: Subspace
    nearly: bool
    residual: float
    predicted: bool
    vacuous: bool
    edge_suspect: bool
    guard_mass: float
    basis: tuple[HardyFunction, ...]
    report: VerificationReport


def _has_analytic_part(sym: SymbolSpec, N: int) -> bool:
    fh = as_symbol(sym).fourier(N)
    return bool(np.any(fh[N + 1 :] != 0))


def perturbed_toeplitz_kernel(
    phi: SymbolSpec, B: BlaschkeProduct, basis_choice: BasisChoice, cfg: TruncationConfig
) -> ToeplitzKernelResult:
    """Kernel of T_phi + sum_i f_i (x) T_z^* f_i and its near invariance relative to B.

    Analytic parts of phi make the truncated T_phi lose its last row, so kernel
    vectors with mass in the guard band are flagged as truncation-suspect.
    """
    _require_origin(B)
    N = cfg.degree
    if isinstance(basis_choice, UserSupplied):
        fs = list(basis_choice.functions)
        if len(fs) != B.n:
            raise PreconditionError(f"basis has {len(fs)} functions, model space has dimension {B.n}")
        check_orthonormal(fs, cfg.eps_residual)
        K = model_space(B, cfg)
        F = np.stack([f.coeffs for f in fs], axis=1)
        off = float(np.linalg.norm(F - K.project(F), 2))
        if off > cfg.eps_residual:
            raise PreconditionError("basis does not lie in the model space", residual=off)
    else:
        fs = model_space(B, cfg).vectors()
    Sb = backshift_matrix(N).entries
    A = np.array(toeplitz_matrix(phi, N).entries)
    for f in fs:
        A += np.outer(f.coeffs, (Sb @ f.coeffs).conj())
    ker = kernel(OperatorMatrix(A), cfg)
    nr: NearlyReport = nearly_invariant_check(ker, B, cfg)

    g = cfg.guard
    guard_mass = float(np.linalg.norm(ker.basis[N + 1 - g :], 2)) if ker.dim and g else 0.0
    suspect = _has_analytic_part(phi, N) or guard_mass > np.sqrt(cfg.eps_rank)

    rep = VerificationReport("perturbed_toeplitz_kernel")
    rep.add("nearly_invariant", nr.worst_residual, nr.threshold)
    rep.add_flag("matches_prediction", nr.is_nearly)
    rep.details.update(
        {
            "kernel_dim": ker.dim,
            "vacuous": nr.vacuous,
            "intersection_dim": nr.intersection_dim,
            "edge_suspect": suspect,
            "guard_mass": guard_mass,
        }
    )
    return ToeplitzKernelResult(ker, nr.is_nearly, nr.worst_residual, True, nr.vacuous, suspect, guard_mass, tuple(fs), rep)


@dataclass(frozen=True)
class InclusionResult:
    nearly_z: NearlyReport
    nearly_B: NearlyReport

    @property
    def holds(self) -> bool:
        """Nearly invariant for z implies nearly invariant for B."""
        return (not self.nearly_z.is_nearly) or self.nearly_B.is_nearly


def inclusion_check(M: Subspace, B: BlaschkeProduct, cfg: TruncationConfig) -> InclusionResult:
    cfg = cfg.with_degree(M.degree) if cfg.degree != M.degree else cfg
    return InclusionResult(nearly_invariant_check(M, BlaschkeProduct((0j,)), cfg), nearly_invariant_check(M, B, cfg))


def counterexample_space(B_minor: BlaschkeProduct, cfg: TruncationConfig) -> tuple[Subspace, BlaschkeProduct]:
    """M = span{B_minor, z B_minor, z^2 B_minor} and B_n = z B_minor."""
    _require_origin(B_minor)
    N = cfg.degree
    if N < 2:
        raise DimensionError("degree must be at least 2")
    one = np.zeros(N + 1, dtype=complex)
    one[0] = 1.0
    b = multiply_by_blaschke(one, B_minor)
    cols = []
    for k in range(3):
        v = np.zeros(N + 1, dtype=complex)
        v[k:] = b[: N + 1 - k]
        cols.append(v)
    M = Subspace(orthonormal_columns(np.stack(cols, axis=1), cfg.eps_rank), cfg.eps_rank)
    return M, B_minor.times_z()


def counterexample_suite(B_minor: BlaschkeProduct, cfg: TruncationConfig) -> VerificationReport:
    M, Bn = counterexample_space(B_minor, cfg)
    rep = VerificationReport("counterexample")
    nB = nearly_invariant_check(M, Bn, cfg)
    nz = nearly_invariant_check(M, BlaschkeProduct((0j,)), cfg)
    rep.add("nearly_for_Bn", nB.worst_residual, nB.threshold)
    rep.add("not_nearly_for_z", nz.worst_residual, nz.threshold, passed=not nz.is_nearly)
    Sb = backshift_matrix(cfg.degree)
    res = invariance_residual(Sb, M)
    rep.add("not_backshift_invariant", res, cfg.eps_residual, passed=res > cfg.eps_residual)
    rep.add_flag("inclusion", (not nz.is_nearly) or nB.is_nearly)
    rep.details.update({"dim_M": M.dim, "Bn_zeros": list(Bn.zeros)})
    return rep
