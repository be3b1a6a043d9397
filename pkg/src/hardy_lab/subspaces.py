"""Subspaces of the truncated Hardy space and the three invariance notions.

Truncated B H^2 is taken to be the polynomials of degree <= N lying in B H^2,
i.e. the orthogonal complement inside the ambient of the (truncated) kernels
spanning K_B. For polynomials <f, k> = <f, trunc k> exactly, so this subspace
is exact, has codimension n, and no guard band is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    BlaschkeProduct,
    HardyFunction,
    TruncationConfig,
    model_space_functions,
)
from .errors import DimensionError, PreconditionError
from .operators import OperatorMatrix, backshift_matrix


@dataclass(frozen=True, eq=False)
class Subspace:
    """Column-orthonormal basis Q ((N+1) x d) of a subspace of the truncated space."""

    basis: np.ndarray
    eps_rank: float = 1e-10

    def __post_init__(self):
        Q = np.array(self.basis, dtype=complex)
        if Q.ndim != 2:
            raise DimensionError("subspace basis must be 2-D")
        Q.setflags(write=False)
        object.__setattr__(self, "basis", Q)

    @property
    def degree(self) -> int:
        return self.basis.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def vectors(self) -> list[HardyFunction]:
        return [HardyFunction(self.basis[:, j]) for j in range(self.dim)]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def project(self, x):
        """P_M applied to a HardyFunction or to coefficient columns."""
        if isinstance(x, HardyFunction):
            return HardyFunction(self.basis @ (self.basis.conj().T @ x.coeffs))
        x = np.asarray(x)
        return self.basis @ (self.basis.conj().T @ x)

    def distance(self, x) -> float:
        """||(I - P_M) x|| (Frobenius over columns for a matrix)."""
        c = x.coeffs if isinstance(x, HardyFunction) else np.asarray(x)
        return float(np.linalg.norm(c - self.project(c)))

    def orthonormality_error(self) -> float:
        if self.dim == 0:
            return 0.0
        G = self.basis.conj().T @ self.basis
        return float(np.abs(G - np.eye(self.dim)).max())

    def complement(self) -> "Subspace":
        return ortho_complement(self)

    def resized(self, degree: int) -> "Subspace":
        """Embed into a larger ambient by zero padding."""
        if degree < self.degree:
            raise DimensionError("cannot shrink a subspace ambient")
        Q = np.zeros((degree + 1, self.dim), dtype=complex)
        Q[: self.degree + 1] = self.basis
        return Subspace(Q, self.eps_rank)


def zero_subspace(degree: int, eps_rank: float = 1e-10) -> Subspace:
    return Subspace(np.zeros((degree + 1, 0), dtype=complex), eps_rank)


def full_space(cfg: TruncationConfig) -> Subspace:
    return Subspace(np.eye(cfg.dim, dtype=complex), cfg.eps_rank)


def orthonormal_columns(X: np.ndarray, eps_rank: float) -> np.ndarray:
    """Orthonormal basis of the numerical range of X (relative SV threshold)."""
    X = np.asarray(X, dtype=complex)
    if X.shape[1] == 0:
        return np.zeros((X.shape[0], 0), dtype=complex)
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((X.shape[0], 0), dtype=complex)
    return U[:, s > eps_rank * s[0]]


def orthonormalize(vectors: Sequence[HardyFunction], cfg: TruncationConfig | None = None, eps_rank: float | None = None) -> Subspace:
    """Stable orthonormal basis of span(vectors); numerically dependent directions drop."""
    eps = eps_rank if eps_rank is not None else (cfg.eps_rank if cfg else 1e-10)
    vectors = list(vectors)
    if not vectors:
        if cfg is None:
            raise DimensionError("cannot infer the ambient of an empty list without cfg")
        return zero_subspace(cfg.degree, eps)
    if len({v.degree for v in vectors}) > 1:
        raise DimensionError("vectors live in different ambients")
    X = np.stack([v.coeffs for v in vectors], axis=1)
    return Subspace(orthonormal_columns(X, eps), eps)


def span_of_columns(X: np.ndarray, eps_rank: float = 1e-10) -> Subspace:
    return Subspace(orthonormal_columns(X, eps_rank), eps_rank)


def ortho_complement(M: Subspace) -> Subspace:
    n = M.degree + 1
    if M.dim == 0:
        return Subspace(np.eye(n, dtype=complex), M.eps_rank)
    U, _, _ = np.linalg.svd(M.basis, full_matrices=True)
    return Subspace(U[:, M.dim :], M.eps_rank)


def invariance_residual(T: OperatorMatrix | np.ndarray, M: Subspace) -> float:
    """||(I - P_M) T P_M|| in operator norm (0 for the zero subspace)."""
    A = T.entries if isinstance(T, OperatorMatrix) else np.asarray(T)
    if M.dim == 0:
        return 0.0
    if A.shape[0] != M.degree + 1:
        raise DimensionError("operator and subspace live in different ambients")
    TQ = A @ M.basis
    R = TQ - M.project(TQ)
    return float(np.linalg.norm(R, 2))


def invariance_threshold(T: OperatorMatrix, cfg: TruncationConfig) -> float:
    return cfg.eps_residual * max(1.0, T.norm())


def is_invariant(T: OperatorMatrix, M: Subspace, cfg: TruncationConfig) -> bool:
    return invariance_residual(T, M) <= invariance_threshold(T, cfg)


@dataclass(frozen=True)
class PrincipalAngles:
    cosines: np.ndarray
    sines: np.ndarray

    @property
    def angles(self) -> np.ndarray:
        return np.arctan2(self.sines, self.cosines)


def _intersection_sine(eps_rank: float) -> float:
    # cos(theta) >= 1 - eps  <=>  sin(theta) <= sqrt(eps (2 - eps))
    return math.sqrt(eps_rank * (2.0 - eps_rank))


def _split_by_angle(M: Subspace, K: Subspace, eps_rank: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Directions of M (as columns of Q_M @ Z) ordered by sine to K, and the sines."""
    if M.degree != K.degree:
        raise DimensionError("subspaces live in different ambients")
    Q = M.basis
    R = Q - K.project(Q)
    _, s, Zh = np.linalg.svd(R, full_matrices=True)
    sines = np.zeros(M.dim)
    sines[: s.size] = s
    order = np.argsort(sines)
    Z = Zh.conj().T[:, order]
    return Q @ Z, sines[order], Z


def principal_angles(M: Subspace, K: Subspace) -> PrincipalAngles:
    """Angles between M and K, one per direction of M.

    Sines come from ||(I - P_K) x|| and cosines from ||P_K x|| along the same
    directions, which keeps small angles accurate.
    """
    dirs, sines, _ = _split_by_angle(M, K, M.eps_rank)
    cos = np.linalg.norm(K.basis.conj().T @ dirs, axis=0) if M.dim else np.zeros(0)
    return PrincipalAngles(np.clip(cos, 0.0, 1.0), np.clip(sines, 0.0, 1.0))


def intersect(M: Subspace, K: Subspace, eps_rank: float | None = None) -> Subspace:
    """M cap K: directions of M at angle with cos >= 1 - eps_rank to K."""
    eps = M.eps_rank if eps_rank is None else eps_rank
    if M.dim == 0 or K.dim == 0:
        return zero_subspace(M.degree, eps)
    dirs, sines, _ = _split_by_angle(M, K, eps)
    keep = sines <= _intersection_sine(eps)
    return Subspace(dirs[:, keep], eps)


def ortho_diff(M: Subspace, S: Subspace, eps_rank: float | None = None) -> Subspace:
    """M minus (M cap S): the orthogonal complement of the intersection inside M."""
    eps = M.eps_rank if eps_rank is None else eps_rank
    if M.dim == 0:
        return zero_subspace(M.degree, eps)
    if S.dim == 0:
        return M
    dirs, sines, _ = _split_by_angle(M, S, eps)
    keep = sines > _intersection_sine(eps)
    return Subspace(dirs[:, keep], eps)


def model_space(B: BlaschkeProduct, cfg: TruncationConfig) -> Subspace:
    """Orthonormal basis of (truncated) K_B from kernels and derivative kernels."""
    return orthonormalize(model_space_functions(B, cfg), cfg)


def bh2_subspace(B: BlaschkeProduct, cfg: TruncationConfig) -> Subspace:
    """Polynomials of degree <= N lying in B H^2 (complement of K_B's traces)."""
    return ortho_complement(model_space(B, cfg))


@dataclass(frozen=True)
class NearlyReport:
    is_nearly: bool
    worst_residual: float
    threshold: float
    vacuous: bool
    intersection_dim: int


def nearly_invariant_check(M: Subspace, B: BlaschkeProduct, cfg: TruncationConfig) -> NearlyReport:
    """Is T_z^* (M cap B H^2) inside M?  Vacuously true when the intersection is {0}."""
    if not B.vanishes_at_origin:
        raise PreconditionError("Blaschke product must vanish at the origin", zeros=B.zeros)
    c = cfg.with_degree(M.degree)
    J = intersect(M, bh2_subspace(B, c), c.eps_rank)
    if J.dim == 0:
        return NearlyReport(True, 0.0, c.eps_residual, True, 0)
    S = backshift_matrix(M.degree).entries
    SJ = S @ J.basis
    worst = float(np.linalg.norm(SJ - M.project(SJ), 2))
    return NearlyReport(worst <= c.eps_residual, worst, c.eps_residual, False, J.dim)


@dataclass(frozen=True, eq=False)
class DefectResult:
    defect: int
    defect_basis: list[HardyFunction]
    residual: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.threshold

    def as_subspace(self, eps_rank: float = 1e-10) -> Subspace:
        if not self.defect_basis:
            raise ValueError("empty defect basis has no ambient information")
        return Subspace(np.stack([f.coeffs for f in self.defect_basis], axis=1), eps_rank)


def almost_invariant_defect(T: OperatorMatrix, M: Subspace, cfg: TruncationConfig) -> DefectResult:
    """Minimal defect space span{P_{M-perp} T q}, q over a basis of M.

    Singular directions below eps_residual * max(1, ||T||) are treated as lying in
    M, the same standard used for exact invariance.
    """
    thr = invariance_threshold(T, cfg)
    if M.dim == 0:
        return DefectResult(0, [], 0.0, thr)
    TQ = T.entries @ M.basis
    D = TQ - M.project(TQ)
    U, s, _ = np.linalg.svd(D, full_matrices=False)
    floor = max(thr, cfg.eps_rank * (s[0] if s.size else 0.0))
    keep = s > floor
    F = U[:, keep]
    R = D - F @ (F.conj().T @ D)
    residual = float(np.linalg.norm(R, 2)) if R.size else 0.0
    return DefectResult(int(keep.sum()), [HardyFunction(F[:, j]) for j in range(F.shape[1])], residual, thr)


def kernel(T: OperatorMatrix, cfg: TruncationConfig) -> Subspace:
    """Right singular vectors with singular value <= eps_rank * sigma_max."""
    A = T.entries
    _, s, Vh = np.linalg.svd(A)
    if s[0] == 0:
        return Subspace(np.eye(A.shape[1], dtype=complex), cfg.eps_rank)
    null = s <= cfg.eps_rank * s[0]
    return Subspace(Vh.conj().T[:, null], cfg.eps_rank)


def krylov_subspace(
    T: OperatorMatrix,
    seeds: Sequence[HardyFunction] | np.ndarray,
    cfg: TruncationConfig,
    breakdown: float = 1e-12,
    max_dim: int | None = None,
) -> Subspace:
    """Smallest T-invariant subspace containing the seeds (block Arnoldi).

    New directions whose norm after two Gram-Schmidt passes falls below
    ``breakdown * max(1, ||T||)`` are discarded, which makes the result
    invariant to that level.
    """
    A = T.entries
    n = A.shape[0]
    limit = n if max_dim is None else min(n, max_dim)
    tol = breakdown * max(1.0, T.norm())
    if isinstance(seeds, np.ndarray):
        pending = [seeds[:, j] for j in range(seeds.shape[1])] if seeds.ndim == 2 else [seeds]
    else:
        pending = [s.coeffs for s in seeds]
    Q = np.zeros((n, 0), dtype=complex)
    scale = max((np.linalg.norm(p) for p in pending), default=1.0) or 1.0
    pending = [p / scale for p in pending]
    while pending and Q.shape[1] < limit:
        w = np.array(pending.pop(0), dtype=complex)
        for _ in range(2):
            w -= Q @ (Q.conj().T @ w)
        nw = np.linalg.norm(w)
        if nw <= tol:
            continue
        q = w / nw
        Q = np.column_stack([Q, q])
        pending.append(A @ q)
    return Subspace(Q, cfg.eps_rank)
