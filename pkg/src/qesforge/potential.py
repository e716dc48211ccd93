"""Assembly of the potential fixed by a ground state of the ansatz form.

Requiring psi_L = g f^lam S_L(h) to solve the Schrodinger equation at zero
energy determines V = psi_L''/psi_L. Written in the h-basis the curvature
ratio clears to a polynomial identity: V = N(h) / (f^2 S_L) with an
eight-term numerator assembled from the frame arrays. The numerator builder
is shared with the constraint generators, which subtract two such numerators
against each other.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, NotFExpressible
from .frame import Ansatz, Frame
from .polyalg import Poly, RationalFn, polydiv

__all__ = ["PotentialExpr", "build_potential", "curvature_numerator", "partial_fractions", "potential_sampler"]


def curvature_numerator(frame: Frame, lam: complex, s_poly: Poly) -> Poly:
    """Numerator of (psi''/psi) * f^2 * S for a state with exponent lam and polynomial S.

    The eight groups, in order: the squared weight log-derivative, its x-derivative,
    the f-curvature term, the (lam^2 - lam) f'^2 term, the weight/f cross term, the
    f/S cross term, the weight/S cross term, and the S-curvature term.
    """
    F0, F1, H1, G1 = frame.f0, frame.f1, frame.h1, frame.g1
    S = s_poly
    Sp = S.deriv()
    F02 = F0 * F0
    return (
        F02 * G1 * G1 * S
        - F02 * G1.deriv() * H1 * S
        + lam * (F1.deriv() * H1 * F0 * S)
        + (lam * lam - lam) * (F1 * F1 * S)
        - 2.0 * lam * (G1 * F0 * F1 * S)
        + 2.0 * lam * (F0 * F1 * H1 * Sp)
        - 2.0 * (F02 * G1 * H1 * Sp)
        + F02 * (H1 * H1 * Sp.deriv() + H1.deriv() * H1 * Sp)
    )


@dataclass(frozen=True)
class PotentialExpr:
    v: RationalFn
    frame: Frame
    ground: Ansatz

    @property
    def raw(self) -> RationalFn:
        """Uncancelled form over the denominator f^2 * S_L."""
        return RationalFn(
            curvature_numerator(self.frame, self.ground.lam, self.ground.poly),
            self.frame.f0 * self.frame.f0 * self.ground.poly,
        )


def build_potential(frame: Frame, ground: Ansatz, tol: float = 1e-8) -> PotentialExpr:
    """Potential admitting ``ground`` as a zero-energy solution.

    Poles of the raw quotient sitting at zeros of S_L are kept; whether the
    final solution removes them is the constraint solver's business, and the
    verifier reports any that survive.
    """
    if ground.energy != 0:
        raise ValueError("the potential construction pins the ground energy to zero")
    den = frame.f0 * frame.f0 * ground.poly
    if den.is_zero:
        raise DegenerateDenominator("f^2 * S_L vanishes identically")
    num = curvature_numerator(frame, ground.lam, ground.poly)
    return PotentialExpr(RationalFn(num, den).normalize(tol), frame, ground)


def potential_sampler(p: PotentialExpr):
    """V as a function of x through the frame's h sampler."""
    if p.frame.samplers is None:
        raise ValueError("frame has no samplers")
    h = p.frame.samplers.h
    v = p.v

    def f(x):
        return v.eval_many(np.atleast_1d(np.asarray(h(x), dtype=complex))) if not np.isscalar(x) else v.eval(complex(h(x)))

    return f


def partial_fractions(p: PotentialExpr, tol: float = 1e-8) -> list[tuple[int, Poly]]:
    """Display decomposition V = sum_k f^k * (polynomial in h), k <= 0.

    The denominator must be a power of f up to the cancellation tolerance;
    otherwise the potential is not expressible in inverse powers of f and
    NotFExpressible is raised. The polynomial part is returned as the single
    k = 0 entry regardless of its degree.
    """
    v = p.v.normalize(tol)
    f0 = p.frame.f0
    lead = f0.coeffs[-1]
    f_monic = f0 * (1.0 / lead)

    den = v.den
    mult = 0
    while den.degree >= 1:
        if f_monic.degree < 1:
            raise NotFExpressible("denominator is nonconstant but f is constant")
        q, r = polydiv(den, f_monic)
        rs = max((abs(c) for c in r.coeffs), default=0.0)
        scale = max(abs(c) for c in den.coeffs)
        if rs > tol * max(scale, 1e-300):
            raise NotFExpressible("denominator has roots foreign to f")
        den = q
        mult += 1
    const = den.coeffs[0] if den.coeffs else 1.0

    # v = num / (const * f_monic^mult) = (num * lead^mult / const) / f^mult
    pieces: list[tuple[int, Poly]] = []
    numer = v.num * (lead**mult / const)
    for k in range(mult, 0, -1):
        numer, rem = polydiv(numer, f0)
        pieces.append((-k, rem.chop(1e-13)))
    pieces.append((0, numer.chop(1e-13)))
    pieces = [(k, poly) for k, poly in pieces if not poly.is_zero or k == 0]
    pieces.sort(key=lambda t: t[0])
    return pieces


def recompose_partial_fractions(frame: Frame, pieces) -> RationalFn:
    """Sum the decomposition back into a single rational function."""
    total = RationalFn(Poly(()))
    f = RationalFn(frame.f0)
    for k, poly in pieces:
        term = RationalFn(poly) * (f**k)
        total = total + term
    return total.normalize()
