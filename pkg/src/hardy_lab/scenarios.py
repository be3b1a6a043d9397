"""Seeded random ingredients: symbols, perturbations and invariant subspaces.

All randomness flows from one integer seed through a Philox counter-based
generator, so a scenario is reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import schur

from .core import BlaschkeProduct, HardyFunction, TruncationConfig
from .operators import (
    ForwardShift,
    OperatorMatrix,
    PerturbationSpec,
    RankOneTerm,
    ToeplitzAdjoint,
    assemble,
)
from .subspaces import Subspace, krylov_subspace, ortho_complement, orthonormal_columns
from .symbols import Blaschke, CoAnalyticPolynomial, FourierWindow


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def child_seeds(rng: np.random.Generator, count: int) -> list[int]:
    return [int(s) for s in rng.integers(0, 2**63 - 1, size=count)]


def random_disc_point(rng: np.random.Generator, rmax: float = 0.6) -> complex:
    r = rmax * np.sqrt(rng.uniform())
    return complex(r * np.exp(2j * np.pi * rng.uniform()))


def random_blaschke(rng: np.random.Generator, n: int, rmax: float = 0.6, origin: bool = True) -> BlaschkeProduct:
    """n zeros in |z| <= rmax; the first is 0 when ``origin``."""
    zeros = [0j] if origin else []
    while len(zeros) < n:
        zeros.append(random_disc_point(rng, rmax))
    return BlaschkeProduct(tuple(zeros))


def random_vectors(rng: np.random.Generator, degree: int, count: int, support: int | None = None) -> np.ndarray:
    """Complex Gaussian columns supported on coefficients 0..support."""
    top = degree if support is None else min(support, degree)
    X = np.zeros((degree + 1, count), dtype=complex)
    X[: top + 1] = rng.standard_normal((top + 1, count)) + 1j * rng.standard_normal((top + 1, count))
    return X


def random_orthonormal(rng: np.random.Generator, degree: int, count: int, support: int | None = None) -> list[HardyFunction]:
    Q, _ = np.linalg.qr(random_vectors(rng, degree, count, support))
    return [HardyFunction(Q[:, j]) for j in range(count)]


def random_fourier_window(rng: np.random.Generator, bandwidth: int = 8) -> FourierWindow:
    lags = range(-bandwidth, bandwidth + 1)
    return FourierWindow({k: complex(rng.standard_normal(), rng.standard_normal()) for k in lags})


def random_coanalytic(rng: np.random.Generator, nzeros: int, rmax: float = 0.6) -> CoAnalyticPolynomial:
    """conj(h) for a monic-scaled polynomial h whose zeros lie in |z| <= rmax."""
    roots = [random_disc_point(rng, rmax) for _ in range(nzeros)]
    h = np.poly(roots)[::-1] if roots else np.ones(1)
    return CoAnalyticPolynomial(tuple(np.conj(h) / np.linalg.norm(h)))


def random_terms(
    rng: np.random.Generator, degree: int, m: int, support: int, scale: float = 0.5
) -> tuple[RankOneTerm, ...]:
    U = random_vectors(rng, degree, m, support)
    V = random_vectors(rng, degree, m, support)
    U *= scale / np.linalg.norm(U, axis=0)
    V /= np.linalg.norm(V, axis=0)
    return tuple(RankOneTerm(HardyFunction(U[:, i]), HardyFunction(V[:, i])) for i in range(m))


def schur_subspace(A: np.ndarray, rng: np.random.Generator, dim: int) -> np.ndarray:
    """Orthonormal basis of the invariant subspace for a random subset of ``dim`` eigenvalues."""
    n = A.shape[0]
    dim = max(0, min(dim, n))
    if dim == 0:
        return np.zeros((n, 0), dtype=complex)
    if dim == n:
        return np.eye(n, dtype=complex)
    T, Z = schur(A.astype(complex), output="complex")
    eig = np.diag(T)
    chosen = set(rng.choice(n, size=dim, replace=False).tolist())
    keep = {complex(eig[i]) for i in chosen}
    # ties between equal eigenvalues could select more than ``dim``; trim afterwards
    T2, Z2, sdim = schur(A.astype(complex), output="complex", sort=lambda x: complex(x) in keep)
    return Z2[:, : min(sdim, dim)] if sdim else Z[:, :dim]


def invariant_subspace(
    T: OperatorMatrix,
    rng: np.random.Generator,
    cfg: TruncationConfig,
    dim: int,
    support: int | None = None,
) -> Subspace:
    """T-invariant subspace grown by Krylov iteration from seeds inside a Schur subspace.

    When ``support`` is given, polynomials of degree <= support must be T-invariant
    and the Schur step runs on that block.
    """
    N = T.degree
    top = N if support is None else support
    A = T.entries[: top + 1, : top + 1]
    Z = schur_subspace(A, rng, dim)
    seeds = np.zeros((N + 1, min(2, Z.shape[1])), dtype=complex)
    if Z.shape[1]:
        mix = rng.standard_normal((Z.shape[1], seeds.shape[1])) + 1j * rng.standard_normal((Z.shape[1], seeds.shape[1]))
        seeds[: top + 1] = Z @ mix
        K = krylov_subspace(T, seeds, cfg, max_dim=Z.shape[1])
        if K.dim == Z.shape[1]:
            return K
    X = np.zeros((N + 1, Z.shape[1]), dtype=complex)
    X[: top + 1] = Z
    return Subspace(X, cfg.eps_rank)


@dataclass(frozen=True, eq=False)
class PerturbedInstance:
    spec: PerturbationSpec
    T: OperatorMatrix
    M: Subspace


def backward_instance(
    rng: np.random.Generator,
    phi: BlaschkeProduct,
    m: int,
    cfg: TruncationConfig,
    full: bool,
    support: int = 8,
) -> PerturbedInstance:
    """T_phi^* + sum u_i (x) v_i with data of degree <= support and an invariant M.

    Polynomials of degree <= support are invariant under the operator, which keeps
    the Schur step small and exact.
    """
    spec = PerturbationSpec(ToeplitzAdjoint(Blaschke(phi)), random_terms(rng, cfg.degree, m, support), sign=1)
    T = assemble(spec, cfg)
    if full:
        M = Subspace(np.eye(cfg.dim, dtype=complex), cfg.eps_rank)
    else:
        dim = int(rng.integers(max(1, m), support + 1))
        M = invariant_subspace(T, rng, cfg, dim, support)
    return PerturbedInstance(spec, T, M)


def forward_instance(rng: np.random.Generator, m: int, cfg: TruncationConfig, support: int = 8) -> PerturbedInstance:
    """T_z + sum u_i (x) v_i with M = complement of an invariant subspace of the adjoint."""
    terms = random_terms(rng, cfg.degree, m, support)
    spec = PerturbationSpec(ForwardShift(), terms, sign=1)
    T = assemble(spec, cfg)
    dim = int(rng.integers(1, support + 1))
    Mp = invariant_subspace(T.adjoint(), rng, cfg, dim, support)
    return PerturbedInstance(spec, T, ortho_complement(Mp))


def random_subspace(rng: np.random.Generator, cfg: TruncationConfig, dim: int, support: int | None = None) -> Subspace:
    return Subspace(orthonormal_columns(random_vectors(rng, cfg.degree, dim, support), cfg.eps_rank), cfg.eps_rank)
