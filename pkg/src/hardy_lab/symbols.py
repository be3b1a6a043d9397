"""Finitely representable Toeplitz symbols.

Every symbol exposes its Fourier coefficients phi_hat(k) on a lag window; the
Blaschke variants expand through the truncated Taylor series of the product.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .core import BlaschkeProduct, blaschke_series, blaschke_tail_bound


def _carray(coeffs) -> tuple[complex, ...]:
    return tuple(complex(c) for c in np.asarray(coeffs, dtype=complex).reshape(-1))


@dataclass(frozen=True)
class AnalyticPolynomial:
    """phi(z) = sum_k c_k z^k."""

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _carray(self.coeffs))

    def fourier(self, max_lag: int) -> np.ndarray:
        out = np.zeros(2 * max_lag + 1, dtype=complex)
        for k, c in enumerate(self.coeffs[: max_lag + 1]):
            out[max_lag + k] = c
        return out

    def truncation_tail(self, max_lag: int) -> float:
        return float(np.linalg.norm(self.coeffs[max_lag + 1 :]))


@dataclass(frozen=True)
class CoAnalyticPolynomial:
    """phi = sum_k c_k conj(z)^k, i.e. phi_hat(-k) = c_k."""

    coeffs: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _carray(self.coeffs))

    def fourier(self, max_lag: int) -> np.ndarray:
        out = np.zeros(2 * max_lag + 1, dtype=complex)
        for k, c in enumerate(self.coeffs[: max_lag + 1]):
            out[max_lag - k] = c
        return out

    def truncation_tail(self, max_lag: int) -> float:
        return float(np.linalg.norm(self.coeffs[max_lag + 1 :]))


@dataclass(frozen=True)
class FourierWindow:
    """phi_hat(k) given explicitly for -K <= k <= K (missing lags are zero)."""

    coeffs: Mapping[int, complex]

    def __post_init__(self):
        object.__setattr__(
            self, "coeffs", {int(k): complex(v) for k, v in dict(self.coeffs).items()}
        )

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items(), key=lambda kv: kv[0])))

    @property
    def bandwidth(self) -> int:
        return max((abs(k) for k in self.coeffs), default=0)

    def fourier(self, max_lag: int) -> np.ndarray:
        out = np.zeros(2 * max_lag + 1, dtype=complex)
        for k, c in self.coeffs.items():
            if abs(k) <= max_lag:
                out[max_lag + k] = c
        return out

    def truncation_tail(self, max_lag: int) -> float:
        return float(np.linalg.norm([c for k, c in self.coeffs.items() if abs(k) > max_lag]))


@dataclass(frozen=True)
class Blaschke:
    """Inner symbol phi = B."""

    product: BlaschkeProduct

    def fourier(self, max_lag: int) -> np.ndarray:
        out = np.zeros(2 * max_lag + 1, dtype=complex)
        out[max_lag:] = blaschke_series(self.product, max_lag).coeffs
        return out

    def truncation_tail(self, max_lag: int) -> float:
        return blaschke_tail_bound(self.product, max_lag)


@dataclass(frozen=True)
class ConjugateBlaschke:
    """phi = conj(B) on the circle, so T_phi = T_B^*."""

    product: BlaschkeProduct

    def fourier(self, max_lag: int) -> np.ndarray:
        out = np.zeros(2 * max_lag + 1, dtype=complex)
        out[: max_lag + 1] = blaschke_series(self.product, max_lag).coeffs.conj()[::-1]
        return out

    def truncation_tail(self, max_lag: int) -> float:
        return blaschke_tail_bound(self.product, max_lag)


SymbolSpec = Union[AnalyticPolynomial, CoAnalyticPolynomial, FourierWindow, Blaschke, ConjugateBlaschke]


def z_symbol() -> Blaschke:
    return Blaschke(BlaschkeProduct((0j,)))


def inner_product_of(sym: SymbolSpec) -> BlaschkeProduct | None:
    """The Blaschke product behind an inner symbol, or None if not inner.

    Monomials z^k given as analytic polynomials are recognised as inner too.
    """
    if isinstance(sym, Blaschke):
        return sym.product
    if isinstance(sym, AnalyticPolynomial):
        nz = [k for k, c in enumerate(sym.coeffs) if c != 0]
        if len(nz) == 1 and nz[0] > 0 and sym.coeffs[nz[0]] == 1:
            return BlaschkeProduct((0j,) * nz[0])
    return None


def as_symbol(obj: Union[SymbolSpec, BlaschkeProduct, Sequence[complex]]) -> SymbolSpec:
    """Coerce a Blaschke product or an analytic coefficient list into a symbol."""
    if isinstance(obj, (AnalyticPolynomial, CoAnalyticPolynomial, FourierWindow, Blaschke, ConjugateBlaschke)):
        return obj
    if isinstance(obj, BlaschkeProduct):
        return Blaschke(obj)
    return AnalyticPolynomial(tuple(obj))
