"""Truncated Hardy-space arithmetic.

An element of H^2 is stored by its Taylor coefficients a_0..a_N; the ambient
space is the polynomials of degree <= N with the l^2 pairing of coefficients.
Functions that are only approximately polynomial (kernels, Blaschke products)
carry a ``tail`` field: an upper bound on the H^2 norm of the discarded part.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np
from scipy.signal import lfilter
from scipy.special import gammaln

from .errors import DimensionError, DomainError

Complex = Union[complex, float, int]


@dataclass(frozen=True)
class TruncationConfig:
    """Truncation degree, guard band and tolerances shared by every check."""

    degree: int
    guard: int | None = None
    eps_residual: float = 1e-8
    eps_rank: float = 1e-10

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 1:
            raise ValueError(f"degree must be an integer >= 1, got {self.degree!r}")
        if self.guard is None:
            object.__setattr__(self, "guard", self.degree // 4)
        if not 0 <= self.guard <= self.degree:
            raise ValueError(f"guard must lie in [0, {self.degree}], got {self.guard}")
        if not self.eps_residual >= 0 or not self.eps_rank >= 0:
            raise ValueError("tolerances must be non-negative")

    @property
    def dim(self) -> int:
        return self.degree + 1

    def with_degree(self, degree: int) -> "TruncationConfig":
        """Same tolerances on another ambient; the guard band is kept as is."""
        return replace(self, degree=degree, guard=min(self.guard, degree))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HardyFunction:
    """Truncated power series sum_k coeffs[k] z^k."""

    coeffs: np.ndarray
    tail: float = 0.0

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.size == 0:
            raise DimensionError("a HardyFunction needs at least one coefficient")
        object.__setattr__(self, "coeffs", _frozen(c))
        object.__setattr__(self, "tail", float(self.tail))

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def zero(cls, degree: int) -> "HardyFunction":
        return cls(np.zeros(degree + 1, dtype=complex))

    @classmethod
    def monomial(cls, k: int, degree: int, scale: Complex = 1.0) -> "HardyFunction":
        if not 0 <= k <= degree:
            raise DimensionError(f"z^{k} does not fit in degree {degree}")
        c = np.zeros(degree + 1, dtype=complex)
        c[k] = scale
        return cls(c)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[Complex], degree: int) -> "HardyFunction":
        """Zero-pad (or truncate, recording the loss) to the given degree."""
        c = np.asarray(coeffs, dtype=complex).reshape(-1)
        out = np.zeros(degree + 1, dtype=complex)
        k = min(c.size, degree + 1)
        out[:k] = c[:k]
        return cls(out, tail=float(np.linalg.norm(c[k:])))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def resized(self, degree: int) -> "HardyFunction":
        """Pad with zeros or truncate; truncation adds the dropped mass to the tail."""
        if degree >= self.degree:
            out = np.zeros(degree + 1, dtype=complex)
            out[: self.coeffs.size] = self.coeffs
            return HardyFunction(out, self.tail)
        dropped = float(np.linalg.norm(self.coeffs[degree + 1 :]))
        return HardyFunction(self.coeffs[: degree + 1].copy(), self.tail + dropped)

    def __call__(self, z: Complex) -> complex:
        return evaluate(self, z)

    def _check(self, other: "HardyFunction") -> None:
        if not isinstance(other, HardyFunction):
            raise TypeError(f"expected HardyFunction, got {type(other).__name__}")
        if other.degree != self.degree:
            raise DimensionError(f"ambient degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other: "HardyFunction") -> "HardyFunction":
        self._check(other)
        return HardyFunction(self.coeffs + other.coeffs, self.tail + other.tail)

    def __sub__(self, other: "HardyFunction") -> "HardyFunction":
        self._check(other)
        return HardyFunction(self.coeffs - other.coeffs, self.tail + other.tail)

    def __neg__(self) -> "HardyFunction":
        return HardyFunction(-self.coeffs, self.tail)

    def __mul__(self, scalar: Complex) -> "HardyFunction":
        if isinstance(scalar, HardyFunction):
            return multiply(self, scalar)
        return HardyFunction(self.coeffs * scalar, self.tail * abs(scalar))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"HardyFunction(degree={self.degree}, norm={self.norm():.3g}, tail={self.tail:.2g})"


@dataclass(frozen=True, eq=False)
class VectorHardyFunction:
    """A C^p-valued truncated series, stored as a (p, N+1) coefficient array."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != 2:
            raise DimensionError("VectorHardyFunction coefficients must be 2-D (p, N+1)")
        object.__setattr__(self, "coeffs", _frozen(c))

    @classmethod
    def from_channels(cls, channels: Sequence[HardyFunction]) -> "VectorHardyFunction":
        degrees = {h.degree for h in channels}
        if len(degrees) > 1:
            raise DimensionError(f"channels have different degrees: {sorted(degrees)}")
        return cls(np.stack([h.coeffs for h in channels]))

    @property
    def p(self) -> int:
        return self.coeffs.shape[0]

    @property
    def degree(self) -> int:
        return self.coeffs.shape[1] - 1

    @property
    def channels(self) -> tuple[HardyFunction, ...]:
        return tuple(HardyFunction(row) for row in self.coeffs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def at_zero(self) -> np.ndarray:
        return self.coeffs[:, 0].copy()


def _check_disc(w: Complex, what: str = "point") -> complex:
    w = complex(w)
    if not abs(w) < 1:
        raise DomainError(f"{what} {w} is not in the open unit disc")
    return w


@dataclass(frozen=True)
class BlaschkeProduct:
    """Finite Blaschke product prod_k (z_k - z) / (1 - conj(z_k) z).

    A zero at the origin contributes the factor z (not -z), so the zero list
    [0] is the coordinate function and [0]*k is z^k.
    """

    zeros: tuple[complex, ...]

    def __post_init__(self):
        zs = tuple(_check_disc(z, "Blaschke zero") for z in self.zeros)
        if not zs:
            raise ValueError("a Blaschke product needs at least one zero")
        object.__setattr__(self, "zeros", zs)

    @property
    def n(self) -> int:
        return len(self.zeros)

    @property
    def origin_multiplicity(self) -> int:
        return sum(1 for z in self.zeros if z == 0)

    @property
    def vanishes_at_origin(self) -> bool:
        return self.origin_multiplicity > 0

    @property
    def rho(self) -> float:
        """Largest modulus among the nonzero zeros (0 for a monomial)."""
        return max((abs(z) for z in self.zeros if z != 0), default=0.0)

    def multiplicities(self) -> list[tuple[complex, int]]:
        out: dict[complex, int] = {}
        for z in self.zeros:
            out[z] = out.get(z, 0) + 1
        return list(out.items())

    def times_z(self) -> "BlaschkeProduct":
        return BlaschkeProduct((0j,) + self.zeros)

    def __call__(self, z: Complex) -> complex:
        z = complex(z)
        val = 1.0 + 0j
        for a in self.zeros:
            val *= z if a == 0 else (a - z) / (1 - a.conjugate() * z)
        return val


def multiply_by_blaschke(coeffs: np.ndarray, B: BlaschkeProduct) -> np.ndarray:
    """Truncated series of B*f for every row of ``coeffs`` (last axis = degree).

    Each factor is applied as a causal recursion, so the result equals the
    truncation of the exact product of B with the truncated input.
    """
    out = np.array(coeffs, dtype=complex)
    for a in B.zeros:
        if a == 0:
            shifted = np.zeros_like(out)
            shifted[..., 1:] = out[..., :-1]
            out = shifted
        else:
            out = lfilter([a, -1.0], [1.0, -a.conjugate()], out, axis=-1)
    return out


def _cauchy_tail(radii: Sequence[float], k0: int) -> float:
    """l^2 bound on the coefficients beyond degree k0 of prod_a b_a, |a| in radii."""
    if k0 < 0:
        return 1.0
    rho = max(radii)
    best = 1.0
    for t in np.linspace(0.02, 0.98, 49):
        R = 1.0 + t * (1.0 / rho - 1.0)
        log_m = sum(math.log(R + r) - math.log(1.0 - r * R) for r in radii)
        log_b = log_m - (k0 + 1) * math.log(R) - 0.5 * math.log(1.0 - R**-2)
        best = min(best, math.exp(min(log_b, 0.0)))
    return best


def blaschke_tail_bound(B: BlaschkeProduct, degree: int) -> float:
    """Bound on ||B - trunc_N B||, geometric in N with rate just above max|z_k|."""
    m0 = B.origin_multiplicity
    radii = [abs(z) for z in B.zeros if z != 0]
    if not radii:
        return 0.0 if m0 <= degree else 1.0
    return _cauchy_tail(radii, degree - m0)


def blaschke_series(B: BlaschkeProduct, cfg: TruncationConfig | int) -> HardyFunction:
    """Taylor coefficients of B up to the truncation degree, with tail bound."""
    N = cfg if isinstance(cfg, int) else cfg.degree
    e = np.zeros(N + 1, dtype=complex)
    e[0] = 1.0
    c = multiply_by_blaschke(e, B)
    if B.vanishes_at_origin:
        c[0] = 0.0
    return HardyFunction(c, tail=blaschke_tail_bound(B, N))


def inner_product(f: HardyFunction, h: HardyFunction) -> complex:
    """<f, h> = sum_k a_k conj(b_k)."""
    f._check(h)
    return complex(np.vdot(h.coeffs, f.coeffs))


def evaluate(f: HardyFunction, z: Complex) -> complex:
    z = _check_disc(z)
    return complex(np.polyval(f.coeffs[::-1], z))


def kernel_coefficients(w: Complex, degree: int, order: int = 0) -> np.ndarray:
    """Coefficients of d^order/d(conj w)^order of the Szego kernel 1/(1 - conj(w) z)."""
    wb = complex(w).conjugate()
    k = np.arange(degree + 1)
    out = np.zeros(degree + 1, dtype=complex)
    live = k >= order
    kk = k[live]
    fall = np.exp(gammaln(kk + 1) - gammaln(kk - order + 1))
    if wb == 0:
        out[order] = fall[0] if order <= degree else 0.0
        return out
    out[live] = fall * wb ** (kk - order)
    return out


def kernel_function(w: Complex, cfg: TruncationConfig | int, order: int = 0) -> HardyFunction:
    """Truncated Szego kernel k_w (order 0) or its conj(w)-derivatives.

    <f, k_w^{(j)}> = f^{(j)}(w) holds exactly for polynomials f of degree <= N.
    """
    w = _check_disc(w)
    N = cfg if isinstance(cfg, int) else cfg.degree
    c = kernel_coefficients(w, N, order)
    r = abs(w)
    if r == 0:
        tail = 0.0
    elif order == 0:
        tail = r ** (N + 1) / math.sqrt(1 - r * r)
    else:
        ext = kernel_coefficients(w, N + 2000, order)[N + 1 :]
        tail = float(np.linalg.norm(ext))
    return HardyFunction(c, tail=tail)


def model_space_functions(B: BlaschkeProduct, cfg: TruncationConfig | int) -> list[HardyFunction]:
    """Kernels (and derivative kernels for repeated zeros) spanning K_B."""
    out = []
    for w, mult in B.multiplicities():
        out.extend(kernel_function(w, cfg, order=j) for j in range(mult))
    return out


def multiply(f: HardyFunction, h: HardyFunction) -> HardyFunction:
    """Coefficient convolution truncated to the common degree.

    Exact when deg f + deg h <= N; otherwise the dropped mass goes to ``tail``.
    """
    f._check(h)
    N = f.degree
    full = np.convolve(f.coeffs, h.coeffs)
    dropped = float(np.linalg.norm(full[N + 1 :]))
    # ||g*p||_2 <= ||p||_{l1} ||g||_2 covers the inherited tails to first order.
    inherited = f.tail * float(np.abs(h.coeffs).sum()) + h.tail * float(np.abs(f.coeffs).sum())
    return HardyFunction(full[: N + 1], tail=dropped + inherited + f.tail * h.tail)


def effective_degree(f: HardyFunction | np.ndarray, tol: float = 0.0) -> int:
    """Largest k with |a_k| > tol * max|a| (-1 for the zero function)."""
    c = f.coeffs if isinstance(f, HardyFunction) else np.asarray(f)
    mags = np.abs(c)
    if mags.size == 0 or mags.max() == 0:
        return -1
    idx = np.nonzero(mags > tol * mags.max())[0]
    return int(idx[-1])
