"""Matrix realisations of shifts, Toeplitz operators and finite-rank perturbations.

Matrices act on coefficient vectors of the truncated space. The backward shift
and every T_phi^* with co-analytic data are exact on polynomials of degree
<= N; the forward shift and analytic Toeplitz matrices are compressions and
differ from the true operator only in the last row (z^N is annihilated).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .core import HardyFunction, TruncationConfig
from .errors import DimensionError, PreconditionError
from .symbols import SymbolSpec, as_symbol, z_symbol


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    entries: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"operator matrix must be square, got shape {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def degree(self) -> int:
        return self.entries.shape[0] - 1

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, f"adjoint({self.label})")

    def norm(self) -> float:
        """Operator norm (largest singular value)."""
        return float(np.linalg.norm(self.entries, 2))

    def apply(self, f: HardyFunction) -> HardyFunction:
        if f.degree != self.degree:
            raise DimensionError(f"operator on degree {self.degree} applied to degree {f.degree}")
        return HardyFunction(self.entries @ f.coeffs)

    def __matmul__(self, other):
        if isinstance(other, HardyFunction):
            return self.apply(other)
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.entries @ other.entries, f"{self.label}*{other.label}")
        return self.entries @ other

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.entries + other.entries, f"{self.label}+{other.label}")

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(self.entries - other.entries, f"{self.label}-{other.label}")


@dataclass(frozen=True, eq=False)
class RankOneTerm:
    """u (x) v : f -> <f, v> u."""

    u: HardyFunction
    v: HardyFunction

    def __post_init__(self):
        if self.u.degree != self.v.degree:
            raise DimensionError("rank-one term with mismatched ambients")

    def matrix(self) -> np.ndarray:
        return np.outer(self.u.coeffs, self.v.coeffs.conj())


@dataclass(frozen=True)
class BackwardShift:
    pass


@dataclass(frozen=True)
class ForwardShift:
    pass


@dataclass(frozen=True)
class Toeplitz:
    symbol: SymbolSpec


@dataclass(frozen=True)
class ToeplitzAdjoint:
    symbol: SymbolSpec


Base = Union[BackwardShift, ForwardShift, Toeplitz, ToeplitzAdjoint]


@dataclass(frozen=True, eq=False)
class PerturbationSpec:
    """base + sign * sum_i u_i (x) v_i."""

    base: Base
    terms: tuple[RankOneTerm, ...] = ()
    sign: int = 1

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if len({t.u.degree for t in self.terms}) > 1:
            raise DimensionError("perturbation terms live in different ambients")

    @property
    def nominal_rank(self) -> int:
        return len(self.terms)

    @property
    def us(self) -> list[HardyFunction]:
        return [t.u for t in self.terms]

    @property
    def vs(self) -> list[HardyFunction]:
        return [t.v for t in self.terms]

    def describe(self) -> str:
        sgn = "+" if self.sign > 0 else "-"
        return f"{type(self.base).__name__} {sgn} rank-{self.nominal_rank}"


class SarasonFlavor(Enum):
    ADJOINT_FIRST = "adjoint_first"  # T* - sum (T* f_i) (x) f_i
    FUNCTION_FIRST = "function_first"  # T* - sum f_i (x) (T* f_i)


def _n(cfg: TruncationConfig | int) -> int:
    return cfg if isinstance(cfg, int) else cfg.degree


def shift_matrix(cfg: TruncationConfig | int) -> OperatorMatrix:
    N = _n(cfg)
    return OperatorMatrix(np.eye(N + 1, k=-1), "T_z")


def backshift_matrix(cfg: TruncationConfig | int) -> OperatorMatrix:
    N = _n(cfg)
    return OperatorMatrix(np.eye(N + 1, k=1), "T_z*")


def toeplitz_matrix(sym: SymbolSpec, cfg: TruncationConfig | int) -> OperatorMatrix:
    """Entry (j, k) = phi_hat(j - k)."""
    N = _n(cfg)
    sym = as_symbol(sym)
    fh = sym.fourier(N)  # fh[N + lag]
    j = np.arange(N + 1)
    lags = j[:, None] - j[None, :]
    return OperatorMatrix(fh[N + lags], f"T[{type(sym).__name__}]")


def base_matrix(base: Base, cfg: TruncationConfig | int) -> OperatorMatrix:
    if isinstance(base, BackwardShift):
        return backshift_matrix(cfg)
    if isinstance(base, ForwardShift):
        return shift_matrix(cfg)
    if isinstance(base, Toeplitz):
        return toeplitz_matrix(base.symbol, cfg)
    if isinstance(base, ToeplitzAdjoint):
        return toeplitz_matrix(base.symbol, cfg).adjoint()
    raise TypeError(f"unknown base {base!r}")


def assemble(spec: PerturbationSpec, cfg: TruncationConfig | int) -> OperatorMatrix:
    N = _n(cfg)
    A = np.array(base_matrix(spec.base, N).entries)
    for t in spec.terms:
        if t.u.degree != N:
            raise DimensionError(f"term ambient {t.u.degree} does not match degree {N}")
        A += spec.sign * t.matrix()
    return OperatorMatrix(A, spec.describe())


def gram(fs: Sequence[HardyFunction]) -> np.ndarray:
    if not fs:
        return np.zeros((0, 0), dtype=complex)
    X = np.stack([f.coeffs for f in fs], axis=1)
    return X.conj().T @ X


def check_orthonormal(fs: Sequence[HardyFunction], tol: float) -> None:
    G = gram(fs)
    err = float(np.abs(G - np.eye(len(fs))).max()) if len(fs) else 0.0
    if err > tol:
        raise PreconditionError(
            f"functions are not orthonormal (max |G - I| = {err:.3e})", gram=G, error=err
        )


def sarason_backward(
    phi: SymbolSpec | None,
    fs: Sequence[HardyFunction],
    flavor: SarasonFlavor,
    cfg: TruncationConfig,
) -> PerturbationSpec:
    """Sarason-type perturbation of T_phi^* built from an orthonormal list."""
    phi = z_symbol() if phi is None else as_symbol(phi)
    check_orthonormal(fs, cfg.eps_residual)
    Tstar = toeplitz_matrix(phi, cfg).adjoint()
    terms = []
    for f in fs:
        tf = Tstar.apply(f)
        if flavor is SarasonFlavor.ADJOINT_FIRST:
            terms.append(RankOneTerm(tf, f))
        else:
            terms.append(RankOneTerm(f, tf))
    return PerturbationSpec(ToeplitzAdjoint(phi), tuple(terms), sign=-1)


def sarason_forward(phis: Sequence[HardyFunction], cfg: TruncationConfig) -> PerturbationSpec:
    """T_z - sum phi_i (x) T_z^* phi_i."""
    check_orthonormal(phis, cfg.eps_residual)
    S = backshift_matrix(cfg)
    return PerturbationSpec(ForwardShift(), tuple(RankOneTerm(p, S.apply(p)) for p in phis), sign=-1)


def effective_rank(A: np.ndarray, eps_rank: float) -> int:
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > eps_rank * s[0]))


def perturbation_rank(spec: PerturbationSpec, cfg: TruncationConfig) -> tuple[int, int]:
    """(nominal m, effective numerical rank of assemble(spec) - base)."""
    diff = assemble(spec, cfg).entries - base_matrix(spec.base, cfg).entries
    if not np.any(diff):
        return spec.nominal_rank, 0
    # absolute floor: a perturbation that cancels to rounding has rank 0
    s = np.linalg.svd(diff, compute_uv=False)
    return spec.nominal_rank, int(np.sum(s > cfg.eps_rank * max(1.0, s[0])))


def toeplitz_interior_defect(T: OperatorMatrix, cfg: TruncationConfig) -> float:
    """max |(T_z^* T T_z - T)_{jk}| over the top-left (N-g) x (N-g) block."""
    S = shift_matrix(T.degree).entries
    Sb = backshift_matrix(T.degree).entries
    lhs = Sb @ T.entries @ S
    k = T.degree - cfg.guard
    if k <= 0:
        return 0.0
    return float(np.abs(lhs[:k, :k] - T.entries[:k, :k]).max())


@dataclass(frozen=True)
class DecayProfile:
    norms: list[float]
    threshold: float
    passed: bool
    orientation: str


def c0_decay_profile(
    S: OperatorMatrix,
    h: HardyFunction,
    n_max: int,
    cfg: TruncationConfig,
    orientation: str = "power",
) -> DecayProfile:
    """Norms ||S^n h|| (orientation "power") or ||(S^*)^n h|| ("adjoint"), n = 0..n_max.

    Passes when the last norm is at most eps_residual * ||h||.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if orientation not in ("power", "adjoint"):
        raise ValueError(f"unknown orientation {orientation!r}")
    A = S.entries if orientation == "power" else S.entries.conj().T
    x = np.array(h.coeffs)
    norms = [float(np.linalg.norm(x))]
    for _ in range(n_max):
        x = A @ x
        norms.append(float(np.linalg.norm(x)))
    thr = cfg.eps_residual * norms[0]
    return DecayProfile(norms, thr, norms[-1] <= thr, orientation)
