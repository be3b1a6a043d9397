"""Constructive decomposition of invariant subspaces of perturbed T_phi^* and its companions.

For M invariant under T_phi^* + sum u_i (x) v_i (outputs u_i, functionals v_i)
and f in M the iteration

    A_j = F0^H l_j,   g_{j+1} = P_{M (-) W} l_j,   l_{j+1} = T_phi^* g_{j+1}

(l_0 = f) splits f = F0 F + f0 with F = sum A_j phi^j and
f0 = sum P_K(g_{j+1}) phi^j, and ||f||^2 = ||F||^2 + ||f0||^2 up to ||l_{n+1}||^2.

Functions that are genuinely infinite series (phi^j, the K_phi components for a
non-monomial phi) are synthesised at an extended degree L = N + extra, with
extra chosen so that rho^extra is below 1e-18. Norms of F and f0 are taken from
the Wold coefficients, which is exact because {phi^j K_phi} are orthogonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .core import (
    BlaschkeProduct,
    HardyFunction,
    TruncationConfig,
    VectorHardyFunction,
    multiply_by_blaschke,
)
from .errors import ConvergenceError, DimensionError, PreconditionError
from .operators import (
    ForwardShift,
    OperatorMatrix,
    PerturbationSpec,
    RankOneTerm,
    ToeplitzAdjoint,
    assemble,
    backshift_matrix,
    check_orthonormal,
    toeplitz_matrix,
)
from .reports import VerificationReport
from .subspaces import (
    Subspace,
    almost_invariant_defect,
    intersect,
    invariance_residual,
    invariance_threshold,
    model_space,
    ortho_complement,
    span_of_columns,
)
from .symbols import AnalyticPolynomial, Blaschke, SymbolSpec, as_symbol, inner_product_of

ROUNDING_ZERO = 1e-14


def inner_symbol(sym: SymbolSpec | BlaschkeProduct, require_origin: bool = False) -> BlaschkeProduct:
    """The Blaschke product behind an inner symbol; precondition error otherwise."""
    B = sym if isinstance(sym, BlaschkeProduct) else inner_product_of(as_symbol(sym))
    if B is None:
        raise PreconditionError("symbol is not inner (only finite Blaschke products are)", symbol=repr(sym))
    if require_origin and not B.vanishes_at_origin:
        raise PreconditionError("inner symbol must vanish at the origin", zeros=B.zeros)
    return B


def extended_degree(B: BlaschkeProduct, degree: int, floor: float = 1e-18) -> int:
    """Degree at which series built from phi are synthesised (tails below ``floor``)."""
    # at least N extra coefficients so that mass leaking past degree N stays visible
    extra = degree
    if B.rho > 0:
        extra = max(extra, math.ceil(math.log(floor) / math.log(B.rho)))
    return degree + min(extra, 20 * (degree + 1))


def _kbasis(B: BlaschkeProduct, L: int, cfg: TruncationConfig) -> np.ndarray:
    return model_space(B, cfg.with_degree(L)).basis


def _as_columns(fs, degree: int) -> np.ndarray:
    if isinstance(fs, HardyFunction):
        fs = [fs]
    if isinstance(fs, np.ndarray):
        X = np.array(fs, dtype=complex)
        if X.ndim == 1:
            X = X[:, None]
    else:
        fs = list(fs)
        if not fs:
            return np.zeros((degree + 1, 0), dtype=complex)
        X = np.stack([f.coeffs for f in fs], axis=1)
    if X.shape[0] != degree + 1:
        raise DimensionError(f"functions of degree {X.shape[0] - 1} in an ambient of degree {degree}")
    return X


def _horner(A: np.ndarray, gamma: np.ndarray, F0: np.ndarray, E: np.ndarray, B: BlaschkeProduct, L: int):
    """Synthesise F, f0 and F0 F + f0 at degree L from Wold coordinates.

    A: (s, n+1, p), gamma: (s, n+1, k). Terms with j * ord_0(phi) > L vanish
    at degree L and are skipped.
    """
    s, depth, p = A.shape
    N1 = F0.shape[0]
    m0 = max(B.origin_multiplicity, 1)
    J = min(depth, L // m0 + 1)
    R = np.zeros((s, p + 2, L + 1), dtype=complex)
    for j in range(J - 1, -1, -1):
        if j < J - 1:
            R = multiply_by_blaschke(R, B)
        cj = gamma[:, j, :] @ E.T
        R[:, :p, 0] += A[:, j, :]
        R[:, p, :] += cj
        R[:, p + 1, :N1] += A[:, j, :] @ F0.T
        R[:, p + 1, :] += cj
    return R[:, :p, :], R[:, p, :], R[:, p + 1, :]


@dataclass(frozen=True, eq=False)
class ModelSubspaceK:
    """Samples of K = {(F, f0): F0 F + f0 in M, ||F||^2 + ||f0||^2 = ||F0 F + f0||^2}.

    Each sample is stored by its Wold coordinates: A[s, j] in C^p and the
    coordinates gamma[s, j] of the K_phi component c_{j+1} in ``kbasis``.
    """

    M: Subspace
    F0: np.ndarray
    phi: BlaschkeProduct
    kbasis: np.ndarray
    A: np.ndarray
    gamma: np.ndarray
    ref_norms: np.ndarray

    @property
    def degree(self) -> int:
        return self.kbasis.shape[0] - 1

    @property
    def p(self) -> int:
        return self.F0.shape[1]

    @property
    def size(self) -> int:
        return self.A.shape[0]

    def norms_sq(self) -> np.ndarray:
        return (np.abs(self.A) ** 2).sum(axis=(1, 2)) + (np.abs(self.gamma) ** 2).sum(axis=(1, 2))

    def synthesize(self):
        return _horner(self.A, self.gamma, self.F0, self.kbasis, self.phi, self.degree)

    def pairs(self) -> list[tuple[VectorHardyFunction, HardyFunction]]:
        F, f0, _ = self.synthesize()
        return [(VectorHardyFunction(F[i]), HardyFunction(f0[i])) for i in range(self.size)]

    def shifted(self, k: int = 1) -> "ModelSubspaceK":
        """Apply (T_phi^* (x) I) k times: drop the first k Wold levels."""
        return ModelSubspaceK(self.M, self.F0, self.phi, self.kbasis, self.A[:, k:], self.gamma[:, k:], self.ref_norms)

    def with_coordinates(self, A: np.ndarray, gamma: np.ndarray, ref_norms: np.ndarray | None = None) -> "ModelSubspaceK":
        ref = np.sqrt(_norms_sq(A, gamma)) if ref_norms is None else ref_norms
        return ModelSubspaceK(self.M, self.F0, self.phi, self.kbasis, A, gamma, ref)

    def membership_residuals(self) -> tuple[np.ndarray, np.ndarray]:
        """Per sample: distance of F0 F + f0 from M, and the Pythagorean gap, both relative."""
        if self.size == 0:
            return np.zeros(0), np.zeros(0)
        N1 = self.F0.shape[0] if self.F0.size else self.M.degree + 1
        if self.A.shape[1] == 0:
            total = np.zeros((self.size, self.degree + 1), dtype=complex)
        else:
            _, _, total = self.synthesize()
        head = total[:, :N1].T
        off = np.linalg.norm(head - self.M.project(head), axis=0) if self.M.dim else np.linalg.norm(head, axis=0)
        beyond = np.linalg.norm(total[:, N1:], axis=1)
        dist = np.hypot(off, beyond)
        gap = np.abs(self.norms_sq() - np.linalg.norm(total, axis=1) ** 2)
        scale = np.maximum(self.ref_norms, np.finfo(float).tiny)
        return dist / scale, gap / scale**2


def _norms_sq(A: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    return (np.abs(A) ** 2).sum(axis=(1, 2)) + (np.abs(gamma) ** 2).sum(axis=(1, 2))


@dataclass(frozen=True, eq=False)
class DecompositionResult:
    """f = F0 F + f0 for one f, with the iteration's residual and norm bookkeeping."""

    A_coeffs: np.ndarray
    kproj_coords: np.ndarray
    kbasis: np.ndarray
    phi: BlaschkeProduct
    F0: np.ndarray
    F: VectorHardyFunction
    f0: HardyFunction
    residual_norms: list[float]
    norm_gap: float
    norm_identity_gap: float
    reconstruction_error: float
    f_norm: float
    exact_step: int | None
    degenerate: bool

    @property
    def p(self) -> int:
        return self.A_coeffs.shape[1]

    @property
    def steps(self) -> int:
        return len(self.residual_norms)

    @property
    def final_residual(self) -> float:
        return self.residual_norms[-1] if self.residual_norms else 0.0

    @property
    def A(self) -> list[np.ndarray]:
        return [a.copy() for a in self.A_coeffs]

    @property
    def g_kproj(self) -> list[HardyFunction]:
        """P_K g_j for j = 1, 2, ... as series truncated at the extended degree."""
        return [HardyFunction(self.kbasis @ c) for c in self.kproj_coords]

    def passed(self, cfg: TruncationConfig) -> bool:
        tol = cfg.eps_residual
        return (
            self.reconstruction_error <= tol * self.f_norm
            and self.norm_gap <= tol * self.f_norm**2
            and self.final_residual <= tol * self.f_norm
        )


@dataclass(frozen=True, eq=False)
class BatchDecomposition:
    results: list[DecompositionResult]
    samples: ModelSubspaceK
    W: Subspace
    steps: int
    trace: list[float]


def _functional_directions(spec: PerturbationSpec, degree: int) -> np.ndarray:
    return _as_columns(spec.vs, degree)


def decompose_many(
    M: Subspace,
    spec: PerturbationSpec,
    fs,
    cfg: TruncationConfig,
    max_steps: int | None = None,
    rtol: float = 1e-13,
) -> BatchDecomposition:
    """Run the decomposition for several f in M at once (columns share the iteration).

    The loop stops when every ||l_n|| <= rtol * ||f|| or at ``max_steps``
    (default 200 (N+1)); if the final residual still exceeds eps_residual * ||f||
    a ConvergenceError carrying the worst-case norm trace is raised.
    """
    N = M.degree
    if cfg.degree != N:
        cfg = cfg.with_degree(N)
    if not isinstance(spec.base, ToeplitzAdjoint):
        raise PreconditionError("decomposition needs a T_phi^* base", base=type(spec.base).__name__)
    B = inner_symbol(spec.base.symbol, require_origin=True)
    X = _as_columns(fs, N)
    T = assemble(spec, N)
    res = invariance_residual(T, M)
    if res > invariance_threshold(T, cfg):
        raise PreconditionError("M is not invariant under the perturbation", residual=res)
    fnorm = np.linalg.norm(X, axis=0)
    if X.shape[1]:
        dist = np.linalg.norm(X - M.project(X), axis=0)
        bad = dist > cfg.eps_residual * np.maximum(fnorm, 1.0)
        if bad.any():
            raise PreconditionError("f is not in M", residual=float(dist.max()))

    # W = span{P_M v_i}; the v_i are the functional directions of the terms
    V = _functional_directions(spec, N)
    PV = M.project(V) if M.dim else np.zeros_like(V)
    scale = max(1.0, float(np.linalg.norm(V, axis=0).max(initial=0.0)))
    if PV.shape[1]:
        U, sv, _ = np.linalg.svd(PV, full_matrices=False)
        F0 = U[:, sv > cfg.eps_rank * scale]
    else:
        F0 = np.zeros((N + 1, 0), dtype=complex)
    p = F0.shape[1]
    rest = M.basis - F0 @ (F0.conj().T @ M.basis)
    if M.dim - p > 0:
        U, _, _ = np.linalg.svd(rest, full_matrices=False)
        Qq = U[:, : M.dim - p]
    else:
        Qq = np.zeros((N + 1, 0), dtype=complex)
    Pq = Qq @ Qq.conj().T

    L = extended_degree(B, N)
    E = _kbasis(B, L, cfg)
    EhN = E[: N + 1].conj().T
    Tst = toeplitz_matrix(Blaschke(B), N).adjoint().entries
    F0h = F0.conj().T

    cap = 200 * (N + 1) if max_steps is None else max_steps
    stop = rtol * np.maximum(fnorm, np.finfo(float).tiny)
    l = X.copy()
    As, Gs, Ls = [], [], []
    steps = 0
    while True:
        As.append((F0h @ l).T)
        g = Pq @ l
        Gs.append((EhN @ g).T)
        l = Tst @ g
        ln = np.linalg.norm(l, axis=0)
        Ls.append(ln)
        steps += 1
        if np.all(ln <= stop) or steps >= cap:
            break
    A = np.stack(As, axis=1) if X.shape[1] else np.zeros((0, steps, p), dtype=complex)
    Gm = np.stack(Gs, axis=1) if X.shape[1] else np.zeros((0, steps, E.shape[1]), dtype=complex)
    Ln = np.stack(Ls, axis=1) if X.shape[1] else np.zeros((0, steps))
    worst_trace = (Ln / np.maximum(fnorm, np.finfo(float).tiny)[:, None]).max(axis=0).tolist() if X.shape[1] else []

    final = Ln[:, -1] if X.shape[1] else np.zeros(0)
    if np.any(final > cfg.eps_residual * fnorm):
        raise ConvergenceError(
            f"residual still {float((final / np.maximum(fnorm, 1e-300)).max()):.3e} x ||f|| after {steps} steps",
            worst_trace,
        )

    K = ModelSubspaceK(M, F0, B, E, A, Gm, fnorm)
    Fch, f0, total = K.synthesize() if X.shape[1] else (None, None, None)

    # per-iteration norm identity
    a2 = np.cumsum((np.abs(A) ** 2).sum(axis=2), axis=1)
    c2 = np.cumsum((np.abs(Gm) ** 2).sum(axis=2), axis=1)
    ident = np.abs(fnorm[:, None] ** 2 - (a2 + Ln**2 + c2))

    results = []
    for i in range(X.shape[1]):
        fpad = np.zeros(L + 1, dtype=complex)
        fpad[: N + 1] = X[:, i]
        rec = float(np.linalg.norm(fpad - total[i])) + float(Ln[i, -1])
        zeros = np.nonzero(Ln[i] <= ROUNDING_ZERO * max(fnorm[i], np.finfo(float).tiny))[0]
        results.append(
            DecompositionResult(
                A_coeffs=A[i],
                kproj_coords=Gm[i],
                kbasis=E,
                phi=B,
                F0=F0,
                F=VectorHardyFunction(Fch[i]),
                f0=HardyFunction(f0[i]),
                residual_norms=Ln[i].tolist(),
                norm_gap=float(abs(fnorm[i] ** 2 - a2[i, -1] - c2[i, -1])),
                norm_identity_gap=float(ident[i].max()),
                reconstruction_error=rec,
                f_norm=float(fnorm[i]),
                exact_step=int(zeros[0]) + 1 if zeros.size else None,
                degenerate=(p == 0),
            )
        )
    W = Subspace(F0, cfg.eps_rank)
    return BatchDecomposition(results, K, W, steps, worst_trace)


def invariant_decomposition(
    M: Subspace,
    spec: PerturbationSpec,
    f: HardyFunction,
    cfg: TruncationConfig,
    max_steps: int | None = None,
) -> DecompositionResult:
    """Decompose one f in M; see :func:`decompose_many`."""
    return decompose_many(M, spec, [f], cfg, max_steps=max_steps).results[0]


def spanning_samples(M: Subspace, rng: np.random.Generator, r: int = 16) -> np.ndarray:
    """Orthonormal basis of M followed by r random unit combinations."""
    if M.dim == 0:
        return np.zeros((M.degree + 1, 0), dtype=complex)
    Z = rng.standard_normal((M.dim, r)) + 1j * rng.standard_normal((M.dim, r))
    R = M.basis @ Z
    R /= np.linalg.norm(R, axis=0)
    return np.concatenate([M.basis, R], axis=1)


@dataclass(frozen=True, eq=False)
class WoldExpansion:
    components: list[HardyFunction]
    remainder: float
    reconstruction_error: float
    parseval_gap: float
    membership_residual: float


def wold_expand(
    f: HardyFunction,
    phi: SymbolSpec | BlaschkeProduct,
    cfg: TruncationConfig,
    max_terms: int | None = None,
) -> WoldExpansion:
    """f = sum_j phi^j c_j with c_j in K_phi, computed as c_j = P_K (T_phi^*)^j f.

    Components are series truncated at the extended degree. Stops once the
    remainder (T_phi^*)^{J} f is below eps_residual * ||f|| * 1e-6 or after
    ``max_terms`` (default 200 (N+1)) levels.
    """
    B = inner_symbol(phi)
    N = f.degree
    c = cfg.with_degree(N)
    L = extended_degree(B, N)
    E = _kbasis(B, L, c)
    Tst = toeplitz_matrix(Blaschke(B), N).adjoint().entries
    cap = 200 * (N + 1) if max_terms is None else max_terms
    fn = f.norm()
    l = np.array(f.coeffs)
    coords = []
    while True:
        coords.append(E[: N + 1].conj().T @ l)
        l = Tst @ l
        if np.linalg.norm(l) <= 1e-6 * c.eps_residual * max(fn, np.finfo(float).tiny) or len(coords) >= cap:
            break
    G = np.array(coords)[None]
    A = np.zeros((1, G.shape[1], 0), dtype=complex)
    _, f0, _ = _horner(A, G, np.zeros((N + 1, 0)), E, B, L)
    fpad = np.zeros(L + 1, dtype=complex)
    fpad[: N + 1] = f.coeffs
    rem = float(np.linalg.norm(l))
    comps = [HardyFunction(E @ g) for g in coords]
    TstL = toeplitz_matrix(Blaschke(B), L).adjoint().entries
    member = max((float(np.linalg.norm(TstL @ h.coeffs)) for h in comps), default=0.0)
    return WoldExpansion(
        components=comps,
        remainder=rem,
        reconstruction_error=float(np.linalg.norm(fpad - f0[0])) + rem,
        parseval_gap=float(abs(fn**2 - np.sum(np.abs(G) ** 2) - rem**2)),
        membership_residual=member,
    )


def _check_phi(samples: ModelSubspaceK, spec: PerturbationSpec) -> None:
    if not isinstance(spec.base, ToeplitzAdjoint):
        raise PreconditionError("spec base must be T_phi^*", base=type(spec.base).__name__)
    B = inner_symbol(spec.base.symbol)
    if sorted(B.zeros, key=lambda z: (z.real, z.imag)) != sorted(samples.phi.zeros, key=lambda z: (z.real, z.imag)):
        raise PreconditionError("samples were produced for a different inner symbol", zeros=B.zeros)


def verify_K_shift_invariance(
    samples: ModelSubspaceK,
    M: Subspace,
    spec: PerturbationSpec,
    cfg: TruncationConfig,
    shifts: int = 3,
) -> VerificationReport:
    """Check that (T_phi^* (x) I) maps K-samples back into K, for 1..shifts applications.

    Also checks the unshifted samples, the zero sample and the constant samples e_i.
    """
    _check_phi(samples, spec)
    rep = VerificationReport("K_shift_invariance")
    tol = cfg.eps_residual
    for k in range(0, shifts + 1):
        S = samples.shifted(k) if k else samples
        if S.A.shape[1] == 0:
            rep.add(f"member_shift{k}", 0.0, tol)
            rep.add(f"isometry_shift{k}", 0.0, tol)
            continue
        dist, gap = S.membership_residuals()
        rep.add(f"member_shift{k}", float(dist.max(initial=0.0)), tol)
        rep.add(f"isometry_shift{k}", float(gap.max(initial=0.0)), tol)
    p = samples.p
    nk = samples.kbasis.shape[1]
    zero = samples.with_coordinates(np.zeros((1, 1, p), dtype=complex), np.zeros((1, 1, nk), dtype=complex), np.ones(1))
    dz, gz = zero.membership_residuals()
    rep.add("zero_sample", float(max(dz.max(), gz.max())), tol)
    if p:
        consts = samples.with_coordinates(np.eye(p, dtype=complex)[:, None, :], np.zeros((p, 1, nk), dtype=complex))
        dc, gc = consts.membership_residuals()
        rep.add("constant_samples", float(max(dc.max(), gc.max())), tol)
    rep.environment.update(p=p, samples=samples.size, degree=M.degree)
    return rep


def sarason_converse_check(
    M: Subspace,
    fs: Sequence[HardyFunction],
    samples: ModelSubspaceK | None,
    cfg: TruncationConfig,
) -> VerificationReport:
    """Sarason-type converse: M invariant under T_phi^* - sum (T_phi^* f_i) (x) f_i.

    phi is the inner function of the samples (z when no samples are given). The
    per-sample identity <F0 F + f0, f_i> = F_i(0) is reported as well.
    """
    N = M.degree
    c = cfg.with_degree(N)
    check_orthonormal(list(fs), c.eps_residual)
    rep = VerificationReport("sarason_converse")
    Fm = _as_columns(list(fs), N)
    if Fm.shape[1]:
        rep.add("fs_in_M", float(np.linalg.norm(Fm - M.project(Fm), axis=0).max()), c.eps_residual)
    B = samples.phi if samples is not None else BlaschkeProduct((0j,))
    if samples is not None and samples.size:
        if samples.F0.shape != Fm.shape or np.abs(samples.F0 - Fm).max(initial=0.0) > c.eps_residual:
            raise PreconditionError("samples were built on a different orthonormal set")
        dist, gap = samples.membership_residuals()
        if gap.max(initial=0.0) > c.eps_residual:
            raise PreconditionError("pairing map is not isometric on the samples", residual=float(gap.max()))
        rep.add("sample_isometry", float(gap.max(initial=0.0)), c.eps_residual)
        rep.add("sample_membership", float(dist.max(initial=0.0)), c.eps_residual)
        if Fm.shape[1]:
            _, _, total = samples.synthesize()
            pair = total[:, : N + 1].conj() @ Fm  # <F0F+f0, f_i> conjugated
            ident = np.abs(pair.conj() - samples.A[:, 0, :]).max(axis=1) / np.maximum(samples.ref_norms, 1e-300)
            rep.add("pairing_identity", float(ident.max(initial=0.0)), c.eps_residual)
    Tst = toeplitz_matrix(Blaschke(B), N).adjoint()
    P = Tst.entries.copy()
    for i in range(Fm.shape[1]):
        P -= np.outer(Tst.entries @ Fm[:, i], Fm[:, i].conj())
    T = OperatorMatrix(P, "sarason")
    rep.add("invariance", invariance_residual(T, M), invariance_threshold(T, c))
    rep.environment.update(p=Fm.shape[1], degree=N, zeros=[complex(z) for z in B.zeros])
    return rep


@dataclass(frozen=True, eq=False)
class ForwardDualResult:
    phi_basis: list[HardyFunction]
    report: VerificationReport


def adjoint_spec(spec: PerturbationSpec) -> PerturbationSpec:
    """(base + s sum u (x) v)^* = base^* + s sum v (x) u for real s."""
    base = spec.base
    if isinstance(base, ForwardShift):
        new = ToeplitzAdjoint(Blaschke(BlaschkeProduct((0j,))))
    else:
        raise PreconditionError("only forward-shift bases are dualised here", base=type(base).__name__)
    return PerturbationSpec(new, tuple(RankOneTerm(t.v, t.u) for t in spec.terms), spec.sign)


def forward_dual_representation(
    M: Subspace,
    spec: PerturbationSpec,
    cfg: TruncationConfig,
    rng: np.random.Generator | None = None,
    n_random: int = 16,
) -> ForwardDualResult:
    """Dual description of an invariant subspace of T_z + s sum u_i (x) v_i.

    L = span{P_{M-perp} u_i} gets an orthonormal basis phi_i; M-perp is
    decomposed as in the T_z^* case, and membership g in M is tested through
    the pairing sum_i <T_{conj phi_i} g, k_i> + <g, k_{p+1}> over K-samples.
    """
    if not isinstance(spec.base, ForwardShift):
        raise PreconditionError("forward dual needs a forward-shift base", base=type(spec.base).__name__)
    N = M.degree
    c = cfg.with_degree(N)
    rng = np.random.default_rng(0) if rng is None else rng
    T = assemble(spec, N)
    thr = invariance_threshold(T, c)
    res = invariance_residual(T, M)
    if res > thr:
        raise PreconditionError("M is not invariant under the forward perturbation", residual=res)
    rep = VerificationReport("forward_dual")
    Mp = ortho_complement(M)
    dual = adjoint_spec(spec)
    rep.add("complement_invariance", invariance_residual(assemble(dual, N), Mp), thr)

    if Mp.dim:
        batch = decompose_many(Mp, dual, Mp.basis, c)
        phis = batch.W.basis
        K = batch.samples
        Fch, f0, _ = K.synthesize()
    else:
        phis = np.zeros((N + 1, 0), dtype=complex)
        Fch = np.zeros((0, 0, N + 1), dtype=complex)
        f0 = np.zeros((0, N + 1), dtype=complex)
    p = phis.shape[1]
    toe = [toeplitz_matrix(AnalyticPolynomial(phis[:, i]), N).adjoint().entries for i in range(p)]

    def pairing(G: np.ndarray) -> np.ndarray:
        """Rows: K-samples; columns: test functions."""
        out = f0[:, : N + 1].conj() @ G
        for i in range(p):
            out += Fch[:, i, : N + 1].conj() @ (toe[i] @ G)
        return out

    if M.dim:
        Z = rng.standard_normal((M.dim, n_random)) + 1j * rng.standard_normal((M.dim, n_random))
        members = np.concatenate([M.basis, M.basis @ Z / np.linalg.norm(M.basis @ Z, axis=0)], axis=1)
        pm = np.abs(pairing(members)).max(initial=0.0) if Mp.dim else 0.0
        rep.add("members_pair_to_zero", float(pm), c.eps_residual)
    G = rng.standard_normal((N + 1, n_random)) + 1j * rng.standard_normal((N + 1, n_random))
    G /= np.linalg.norm(G, axis=0)
    dist = np.linalg.norm(G - M.project(G), axis=0) if M.dim else np.linalg.norm(G, axis=0)
    pn = np.linalg.norm(pairing(G), axis=0) if Mp.dim else np.zeros(n_random)
    rep.add("pairing_detects_distance", float(np.abs(pn - dist).max()), c.eps_residual)

    S = backshift_matrix(N).entries
    shift_form = np.eye(N + 1, k=-1, dtype=complex)
    for i in range(p):
        shift_form = shift_form - np.outer(phis[:, i], (S @ phis[:, i]).conj())
    Tf = OperatorMatrix(shift_form, "forward_sarason")
    rep.add("forward_sarason_invariance", invariance_residual(Tf, M), invariance_threshold(Tf, c))
    rep.environment.update(p=p, degree=N, dim_M=M.dim)
    return ForwardDualResult([HardyFunction(phis[:, i]) for i in range(p)], rep)


class BridgeDirection(Enum):
    PERTURBATION_TO_ALMOST = "perturbation_to_almost"
    ALMOST_TO_PERTURBATION = "almost_to_perturbation"


def defect_perturbation(T: OperatorMatrix, basis: Sequence[HardyFunction]) -> OperatorMatrix:
    """T - sum f_i (x) T^* f_i."""
    A = np.array(T.entries)
    Ts = T.entries.conj().T
    for f in basis:
        A -= np.outer(f.coeffs, (Ts @ f.coeffs).conj())
    return OperatorMatrix(A, f"{T.label}-defect")


def almost_bridge(
    T: OperatorMatrix,
    M: Subspace,
    direction: BridgeDirection,
    cfg: TruncationConfig,
    terms: Sequence[RankOneTerm] = (),
    sign: int = -1,
) -> VerificationReport:
    """Two-way link between almost invariance under T and invariance under finite-rank perturbations.

    PERTURBATION_TO_ALMOST expects M invariant under T + sign sum u_i (x) v_i and
    checks that the minimal defect is at most m, that the defect space lies in
    M + span{u_i}, and that span{u_i} itself realises the defect.
    ALMOST_TO_PERTURBATION builds T - sum f_i (x) T^* f_i from the defect basis and
    checks invariance.
    """
    N = M.degree
    c = cfg.with_degree(N)
    thr = invariance_threshold(T, c)
    rep = VerificationReport(f"almost_bridge:{direction.value}")
    if direction is BridgeDirection.PERTURBATION_TO_ALMOST:
        terms = tuple(terms)
        P = np.array(T.entries)
        for t in terms:
            P += sign * t.matrix()
        Tp = OperatorMatrix(P, "perturbed")
        res = invariance_residual(Tp, M)
        if res > invariance_threshold(Tp, c):
            raise PreconditionError("M is not invariant under the perturbation", residual=res)
        d = almost_invariant_defect(T, M, c)
        m = len(terms)
        rep.add("defect_at_most_m", float(d.defect), float(m), d.defect <= m)
        rep.add("defect_residual", d.residual, d.threshold)
        U = _as_columns([t.u for t in terms], N)
        MU = span_of_columns(np.concatenate([M.basis, U], axis=1), c.eps_rank)
        if d.defect:
            D = np.stack([f.coeffs for f in d.defect_basis], axis=1)
            sines = np.linalg.norm(D - MU.project(D), axis=0)
            rep.add("defect_in_M_plus_outputs", float(sines.max()), c.eps_residual)
            # a defect space of minimal dimension inside span{u_i}
            Fu = intersect(span_of_columns(U, c.eps_rank), span_of_columns(np.concatenate([M.basis, D], axis=1)), c.eps_rank)
            ext = span_of_columns(np.concatenate([M.basis, Fu.basis], axis=1), c.eps_rank)
            TQ = T.entries @ M.basis
            rep.add("outputs_realise_defect", float(np.linalg.norm(TQ - ext.project(TQ), 2)), thr)
            rep.add("outputs_defect_dim", float(Fu.dim), float(d.defect), Fu.dim >= d.defect)
        rep.details["defect"] = d.defect
        rep.details["nominal_rank"] = m
    else:
        d = almost_invariant_defect(T, M, c)
        Tp = defect_perturbation(T, d.defect_basis)
        rep.add("invariance_after_correction", invariance_residual(Tp, M), invariance_threshold(Tp, c))
        rep.details["defect"] = d.defect
        if rep.passed:
            # round trip: feeding the correction terms back must give defect <= the original
            Ts = T.entries.conj().T
            built = [RankOneTerm(f, HardyFunction(Ts @ f.coeffs)) for f in d.defect_basis]
            back = almost_bridge(T, M, BridgeDirection.PERTURBATION_TO_ALMOST, c, built, sign=-1)
            rep.extend(back, prefix="round_trip.")
    rep.environment.update(degree=N, dim_M=M.dim)
    return rep
