"""Dense polynomial and rational-function arithmetic over complex scalars.

Everything in this package expands functions of x in powers of a basis
function h(x), so the polynomials here are polynomials *in h* with complex
coefficients. Differentiation with respect to x enters through the expansion
of h'(x) in powers of h and is exposed as :func:`deriv_x`.

Coefficients are stored dense and ascending (index = power of h). The zero
polynomial is the empty tuple; its degree is ``-inf`` so that
``degree(p*q) == degree(p) + degree(q)`` holds for every pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateDenominator, NearPole

__all__ = [
    "Poly",
    "RationalFn",
    "conv",
    "deriv_x",
    "normalize",
    "poly_roots",
    "polydiv",
]


def _canon(coeffs: Iterable[complex]) -> tuple[complex, ...]:
    cs = [complex(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def conv(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficient convolution; empty input means the zero polynomial."""
    if len(a) == 0 or len(b) == 0:
        return np.zeros(0, dtype=complex)
    return np.convolve(a, b)


@dataclass(frozen=True)
class Poly:
    """Dense univariate polynomial in the basis variable, ascending coefficients."""

    coeffs: tuple[complex, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _canon(self.coeffs))

    # -- construction helpers ------------------------------------------------
    @staticmethod
    def of(*coeffs: complex) -> "Poly":
        return Poly(coeffs)

    @staticmethod
    def monomial(power: int, coeff: complex = 1.0) -> "Poly":
        return Poly((0,) * power + (coeff,))

    @staticmethod
    def from_roots(roots: Sequence[complex], lead: complex = 1.0) -> "Poly":
        arr = np.array([lead], dtype=complex)
        for r in roots:
            arr = np.convolve(arr, np.array([-r, 1.0], dtype=complex))
        return Poly(arr)

    # -- structure -----------------------------------------------------------
    @property
    def degree(self) -> float:
        return len(self.coeffs) - 1 if self.coeffs else -math.inf

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def as_array(self, length: int | None = None) -> np.ndarray:
        n = len(self.coeffs) if length is None else length
        out = np.zeros(n, dtype=complex)
        out[: len(self.coeffs)] = self.coeffs
        return out

    def __len__(self) -> int:
        return len(self.coeffs)

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other) -> "Poly":
        other = _as_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return Poly(self.as_array(n) + other.as_array(n))

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly(tuple(-c for c in self.coeffs))

    def __sub__(self, other) -> "Poly":
        return self + (-_as_poly(other))

    def __rsub__(self, other) -> "Poly":
        return _as_poly(other) - self

    def __mul__(self, other) -> "Poly":
        if isinstance(other, RationalFn):
            return NotImplemented
        if isinstance(other, Poly):
            return Poly(conv(self.as_array(), other.as_array()))
        return Poly(tuple(complex(other) * c for c in self.coeffs))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative powers are rational functions")
        out = Poly.of(1.0)
        for _ in range(n):
            out = out * self
        return out

    def __truediv__(self, other) -> "RationalFn":
        if isinstance(other, Poly):
            return RationalFn(self, other)
        if isinstance(other, RationalFn):
            return RationalFn(self, Poly.of(1.0)) / other
        return self * (1.0 / complex(other))

    def __rtruediv__(self, other) -> "RationalFn":
        return _as_poly(other) / self

    # -- calculus ------------------------------------------------------------
    def deriv(self) -> "Poly":
        """Formal derivative with respect to the basis variable h."""
        return Poly(tuple(k * c for k, c in enumerate(self.coeffs) if k > 0))

    def deriv_x(self, h1) -> "Poly":
        """Derivative with respect to x: (dp/dh) * h'(x), h' expanded in h."""
        return self.deriv() * _h1_poly(h1)

    # -- evaluation ----------------------------------------------------------
    def eval(self, z: complex) -> complex:
        acc = 0.0 + 0.0j
        for c in reversed(self.coeffs):
            acc = acc * z + c
        return acc

    def eval_many(self, zs: np.ndarray) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex)
        if not self.coeffs:
            return np.zeros_like(zs)
        return np.polyval(np.array(self.coeffs[::-1], dtype=complex), zs)

    def mag_at(self, z: complex) -> float:
        """Conditioning scale sum_k |c_k| |z|^k, used for relative smallness tests."""
        az = abs(z)
        return float(sum(abs(c) * az**k for k, c in enumerate(self.coeffs)))

    def chop(self, tol: float = 1e-12) -> "Poly":
        """Drop coefficients tiny relative to the largest one."""
        if not self.coeffs:
            return self
        scale = max(abs(c) for c in self.coeffs)
        return Poly(tuple(0.0 if abs(c) <= tol * scale else c for c in self.coeffs))

    def real_if_close(self, tol: float = 1e-10) -> "Poly":
        if all(abs(c.imag) <= tol * max(1.0, abs(c)) for c in self.coeffs):
            return Poly(tuple(complex(c.real, 0.0) for c in self.coeffs))
        return self

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        parts = []
        for k, c in enumerate(self.coeffs):
            if c == 0:
                continue
            cs = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}j)"
            parts.append(cs if k == 0 else f"{cs}*h^{k}")
        return " + ".join(parts)


def _as_poly(x) -> Poly:
    if isinstance(x, Poly):
        return x
    if isinstance(x, (int, float, complex, np.floating, np.complexfloating)):
        return Poly((complex(x),))
    return Poly(tuple(x))


def _h1_poly(h1) -> Poly:
    """Accept a Poly, a coefficient sequence, or any object with an .h1 attribute."""
    return _as_poly(getattr(h1, "h1", h1))


def deriv_x(p: Poly, frame) -> Poly:
    """x-derivative of p(h(x)) written back as a polynomial in h.

    ``frame`` may be a Frame (its ``h1`` array is used) or the h' expansion
    itself. For frames with h(x) = x this is the plain formal derivative.
    """
    return p.deriv_x(frame)


def polydiv(p: Poly, d: Poly) -> tuple[Poly, Poly]:
    """Long division p = q*d + r with deg r < deg d."""
    if d.is_zero:
        raise DegenerateDenominator("division by the zero polynomial")
    r = list(p.coeffs)
    dn = d.coeffs
    dd = len(dn) - 1
    lead = dn[-1]
    q = [0.0 + 0.0j] * max(0, len(r) - dd)
    for k in range(len(r) - 1, dd - 1, -1):
        f = r[k] / lead
        q[k - dd] = f
        for j in range(dd + 1):
            r[k - dd + j] -= f * dn[j]
    return Poly(q), Poly(r[:dd] if dd > 0 else ())


def divide_out_root(p: Poly, r: complex) -> Poly:
    """Synthetic division of p by (h - r); the remainder is discarded."""
    n = len(p.coeffs)
    if n <= 1:
        return Poly(())
    out = [0.0 + 0.0j] * (n - 1)
    acc = p.coeffs[n - 1]
    for k in range(n - 2, -1, -1):
        out[k] = acc
        acc = p.coeffs[k] + r * acc
    return Poly(out)


def poly_roots(p: Poly) -> np.ndarray:
    if len(p.coeffs) <= 1:
        return np.zeros(0, dtype=complex)
    return np.roots(np.array(p.coeffs[::-1], dtype=complex))


@dataclass(frozen=True)
class RationalFn:
    """Quotient of two polynomials in the basis variable."""

    num: Poly
    den: Poly = Poly((1.0,))

    def __post_init__(self):
        object.__setattr__(self, "num", _as_poly(self.num))
        object.__setattr__(self, "den", _as_poly(self.den))
        if self.den.is_zero:
            raise DegenerateDenominator("zero denominator")

    # -- arithmetic ----------------------------------------------------------
    def _coerce(self, other) -> "RationalFn":
        if isinstance(other, RationalFn):
            return other
        return RationalFn(_as_poly(other))

    def __add__(self, other) -> "RationalFn":
        o = self._coerce(other)
        return RationalFn(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self) -> "RationalFn":
        return RationalFn(-self.num, self.den)

    def __sub__(self, other) -> "RationalFn":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RationalFn":
        return self._coerce(other) - self

    def __mul__(self, other) -> "RationalFn":
        o = self._coerce(other)
        return RationalFn(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RationalFn":
        o = self._coerce(other)
        if o.num.is_zero:
            raise DegenerateDenominator("division by the zero rational function")
        return RationalFn(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other) -> "RationalFn":
        return self._coerce(other) / self

    def __pow__(self, n: int) -> "RationalFn":
        if n < 0:
            return RationalFn(self.den, self.num) ** (-n)
        return RationalFn(self.num**n, self.den**n)

    # -- calculus ------------------------------------------------------------
    def deriv_x(self, h1) -> "RationalFn":
        """Quotient-rule x-derivative using h' = sum_l h1_l h^l."""
        hp = _h1_poly(h1)
        n, d = self.num, self.den
        return RationalFn((n.deriv() * d - n * d.deriv()) * hp, d * d)

    # -- evaluation ----------------------------------------------------------
    def eval(self, z: complex, pole_tol: float = 1e-12) -> complex:
        dz = self.den.eval(z)
        if abs(dz) <= pole_tol * max(1.0, self.den.mag_at(z)):
            raise NearPole(f"denominator vanishes near z={z}")
        return self.num.eval(z) / dz

    def eval_many(self, zs: np.ndarray, pole_tol: float = 1e-12) -> np.ndarray:
        zs = np.asarray(zs, dtype=complex)
        dz = self.den.eval_many(zs)
        scale = np.maximum(1.0, sum(abs(c) * np.abs(zs) ** k for k, c in enumerate(self.den.coeffs)))
        bad = np.abs(dz) <= pole_tol * scale
        if np.any(bad):
            raise NearPole(f"denominator vanishes near z={zs[bad][:3]}")
        return self.num.eval_many(zs) / dz

    def sampler(self):
        """Callable evaluating this rational function on scalars or arrays."""

        def f(x):
            if np.isscalar(x):
                return self.eval(x)
            return self.eval_many(np.asarray(x))

        return f

    # -- canonicalization ----------------------------------------------------
    def normalize(self, tol: float = 1e-8) -> "RationalFn":
        """Cancel (near-)common factors and make the denominator monic.

        Coefficient dust far below the working scale (relative 1e-14) is
        chopped first, since accumulated products otherwise grow spurious
        near-zero factors that defeat root extraction. Candidate
        cancellations then come from the denominator's roots; a root r is
        divided out of both sides only when |num(r)| and |den(r)| are tiny
        relative to the natural conditioning scale sum |c_k||r|^k. The
        evaluation test (rather than root-pair distance alone) keeps clusters
        from multiple roots, whose computed locations are O(eps^(1/m)) fuzzy,
        cancelling reliably.
        """
        num, den = self.num.chop(1e-14), self.den.chop(1e-14)
        if den.is_zero:
            raise DegenerateDenominator("denominator is numerically zero")
        if num.is_zero:
            return RationalFn(Poly(()), Poly.of(1.0))
        changed = (num.coeffs != self.num.coeffs) or (den.coeffs != self.den.coeffs)
        while den.degree >= 1 and not num.is_zero:
            cancelled = False
            nroots = poly_roots(num)
            for r in poly_roots(den):
                if not np.isfinite(r) or abs(r) > 1e10:
                    continue
                nmag = num.mag_at(r)
                dmag = den.mag_at(r)
                if not (np.isfinite(nmag) and np.isfinite(dmag)):
                    continue
                if abs(den.eval(r)) > 1e-6 * max(dmag, 1e-300):
                    continue
                ok = abs(num.eval(r)) <= tol * max(nmag, 1e-300)
                if not ok and len(nroots):
                    # root pairing rescues factors whose evaluation noise floor
                    # sits above the numerator's own coefficient scale
                    dist = np.min(np.abs(nroots - r))
                    ok = dist <= 1e-7 * max(1.0, abs(r)) and abs(num.eval(r)) <= 1e-3 * max(nmag, 1e-300)
                if ok:
                    num = divide_out_root(num, r)
                    den = divide_out_root(den, r)
                    cancelled = changed = True
                    break
            if not cancelled:
                break
        lead = den.coeffs[-1]
        if lead != 1.0:
            num = num * (1.0 / lead)
            den = den * (1.0 / lead)
            changed = True
        if not changed:
            return self
        return RationalFn(num, den)

    def isclose(self, other: "RationalFn", tol: float = 1e-9) -> bool:
        """Cross-multiplied coefficient comparison, insensitive to common factors."""
        a = self.num * other.den
        b = other.num * self.den
        n = max(len(a), len(b))
        diff = a.as_array(n) - b.as_array(n)
        scale = max(np.max(np.abs(a.as_array(n))), np.max(np.abs(b.as_array(n))), 1e-300)
        return bool(np.max(np.abs(diff)) <= tol * scale)

    def real_if_close(self, tol: float = 1e-10) -> "RationalFn":
        return RationalFn(self.num.real_if_close(tol), self.den.real_if_close(tol))

    def __str__(self) -> str:
        return f"({self.num}) / ({self.den})"


def normalize(r: RationalFn, tol: float = 1e-8) -> RationalFn:
    return r.normalize(tol)
