"""Basis frames and eigenfunction ansatz data.

A frame packages the four coefficient arrays that expand the ansatz
ingredients in powers of the basis function h(x):

    g'(x) = -g(x) * sum_l g1[l] h(x)^l        (weight factor, via its log-derivative)
    f(x)  =         sum_l f0[l] h(x)^l
    f'(x) =         sum_l f1[l] h(x)^l
    h'(x) =         sum_l h1[l] h(x)^l

Optionally a frame carries closed-form samplers of g, f, h on a real interval;
those are only used for validation, verification grids and plotting. Every
algebraic construction downstream consumes the coefficient arrays alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateState, UnknownFrame, ValidationFailed
from .polyalg import Poly, RationalFn, _as_poly

__all__ = [
    "Frame",
    "FrameSamplers",
    "Ansatz",
    "standard_frame",
    "validate_frame",
    "log_derivative",
    "state_sampler",
    "weight_sampler_from_g1",
]


@dataclass(frozen=True)
class FrameSamplers:
    f: Callable[[np.ndarray], np.ndarray]
    h: Callable[[np.ndarray], np.ndarray]
    g: Callable[[np.ndarray], np.ndarray] | None = None
    interval: tuple[float, float] = (-3.0, 3.0)


@dataclass(frozen=True)
class Frame:
    g1: Poly
    f0: Poly
    f1: Poly
    h1: Poly
    M: int = -1  # auto-computed when negative
    samplers: FrameSamplers | None = None

    def __post_init__(self):
        for name in ("g1", "f0", "f1", "h1"):
            object.__setattr__(self, name, _as_poly(getattr(self, name)))
        degrees = [int(p.degree) for p in (self.g1, self.f0, self.f1, self.h1) if not p.is_zero]
        auto = max(degrees) if degrees else 0
        if self.M < 0:
            object.__setattr__(self, "M", auto)
        elif auto > self.M:
            raise ValueError(f"coefficient array of degree {auto} exceeds declared truncation M={self.M}")
        if self.f0.is_zero:
            raise ValueError("f must not vanish identically")
        if self.h1.is_zero:
            raise ValueError("h' must not vanish identically")

    def with_weight(self, g1, g_sampler=None) -> "Frame":
        """Return a copy carrying the given weight-factor expansion (and sampler)."""
        samplers = self.samplers
        if g_sampler is not None:
            if samplers is None:
                raise ValueError("cannot attach a weight sampler to a frame without f/h samplers")
            samplers = replace(samplers, g=g_sampler)
        return Frame(_as_poly(g1), self.f0, self.f1, self.h1, samplers=samplers)

    @property
    def h_is_x(self) -> bool:
        """True when h' = 1, so the basis variable can be identified with x."""
        return self.h1.coeffs == (1.0 + 0.0j,)


@dataclass(frozen=True)
class Ansatz:
    """One eigenfunction of the form psi = g * f^lam * sum_m c[m] h^m."""

    lam: complex
    c: tuple[complex, ...]
    energy: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(complex(v) for v in self.c))
        object.__setattr__(self, "lam", complex(self.lam))
        object.__setattr__(self, "energy", complex(self.energy))
        if not self.c:
            raise DegenerateState("ansatz needs at least one coefficient")
        if self.c[-1] == 0:
            raise ValueError("top ansatz coefficient must be nonzero (fix the normalization)")

    @property
    def degree(self) -> int:
        return len(self.c) - 1

    @property
    def poly(self) -> Poly:
        return Poly(self.c)


def standard_frame(name: str) -> Frame:
    """Catalog of standard frames; the weight expansion defaults to zero."""
    if name == "rational-x":
        return Frame(
            g1=Poly(()),
            f0=Poly.of(1.0, 0.0, 1.0),
            f1=Poly.of(0.0, 2.0),
            h1=Poly.of(1.0),
            samplers=FrameSamplers(f=lambda x: 1.0 + np.asarray(x) ** 2, h=lambda x: np.asarray(x) + 0.0),
        )
    if name in ("harmonic", "sextic"):
        return Frame(
            g1=Poly(()),
            f0=Poly.of(1.0),
            f1=Poly(()),
            h1=Poly.of(1.0),
            samplers=FrameSamplers(f=lambda x: np.ones_like(np.asarray(x, dtype=float)), h=lambda x: np.asarray(x) + 0.0),
        )
    raise UnknownFrame(name)


def _central_diff(fn, x, step=1e-6):
    return (np.asarray(fn(x + step)) - np.asarray(fn(x - step))) / (2 * step)


@dataclass(frozen=True)
class FrameValidation:
    residuals: dict
    tol: float

    @property
    def ok(self) -> bool:
        return all(v <= self.tol for v in self.residuals.values())


def validate_frame(frame: Frame, grid: Sequence[float], tol: float = 1e-6, raise_on_fail: bool = True) -> FrameValidation:
    """Check the four expansion identities against the samplers on a grid.

    Sampler derivatives are taken by central finite differences (step 1e-6).
    Returns the per-equation max residual; raises ValidationFailed naming the
    offending equation and point when any residual exceeds ``tol``.
    """
    if frame.samplers is None:
        raise ValidationFailed("frame has no closed-form samplers to validate against")
    s = frame.samplers
    x = np.asarray(grid, dtype=float)
    h = np.asarray(s.h(x), dtype=complex)
    res: dict[str, float] = {}
    worst: dict[str, float] = {}

    def record(key, values):
        i = int(np.argmax(np.abs(values)))
        res[key] = float(np.abs(values[i]))
        worst[key] = float(x[i])

    record("f", np.asarray(s.f(x), dtype=complex) - frame.f0.eval_many(h))
    record("f_prime", _central_diff(s.f, x) - frame.f1.eval_many(h))
    record("h_prime", _central_diff(s.h, x) - frame.h1.eval_many(h))
    if s.g is not None:
        g = np.asarray(s.g(x), dtype=complex)
        record("weight", _central_diff(s.g, x) + g * frame.g1.eval_many(h))
    report = FrameValidation(res, tol)
    if raise_on_fail and not report.ok:
        bad = {k: (v, worst[k]) for k, v in res.items() if v > tol}
        raise ValidationFailed(f"frame expansion mismatch: {bad}")
    return report


def weight_sampler_from_g1(g1: Poly):
    """Closed-form weight g(x) = exp(-P(x)), P the antiderivative of the g1 array.

    Only meaningful for identity-basis frames (h(x) = x), where the weight
    log-derivative expansion is a polynomial in x itself.
    """
    g1 = _as_poly(g1)
    anti = Poly((0.0,) + tuple(c / (k + 1) for k, c in enumerate(g1.coeffs)))

    def g(x):
        return np.exp(-anti.eval_many(np.asarray(x, dtype=complex)))

    return g


def log_derivative(frame: Frame, state: Ansatz) -> RationalFn:
    """psi'/psi as a rational function of h.

    psi'/psi = -sum_l g1[l] h^l + lam * f'/f + (dS/dh) h' / S
    """
    S = state.poly
    if S.is_zero:
        raise DegenerateState("state polynomial is identically zero")
    num = -frame.g1 * frame.f0 * S + state.lam * frame.f1 * S + S.deriv() * frame.h1 * frame.f0
    return RationalFn(num, frame.f0 * S)


def state_sampler(frame: Frame, state: Ansatz) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form sampler of psi = g * f^lam * S(h); requires frame samplers with g."""
    if frame.samplers is None or frame.samplers.g is None:
        raise ValueError("frame lacks the samplers needed to evaluate the state")
    s = frame.samplers
    S = state.poly
    lam = state.lam

    def psi(x):
        xa = np.asarray(x, dtype=float)
        f = np.asarray(s.f(xa), dtype=complex)
        h = np.asarray(s.h(xa), dtype=complex)
        g = np.asarray(s.g(xa), dtype=complex)
        return g * np.exp(lam * np.log(f)) * S.eval_many(h)

    return psi


def frame_to_json(frame: Frame, sampler_name: str | None = None) -> dict:
    def cpairs(p: Poly):
        return [[c.real, c.imag] for c in p.coeffs]

    return {
        "M": frame.M,
        "g1": cpairs(frame.g1),
        "f0": cpairs(frame.f0),
        "f1": cpairs(frame.f1),
        "h1": cpairs(frame.h1),
        "samplers": sampler_name,
    }


def frame_from_json(obj: dict) -> Frame:
    def poly(key):
        return Poly(tuple(complex(re, im) for re, im in obj.get(key, [])))

    samplers = None
    if obj.get("samplers"):
        samplers = standard_frame(obj["samplers"]).samplers
    return Frame(
        g1=poly("g1"),
        f0=poly("f0"),
        f1=poly("f1"),
        h1=poly("h1"),
        M=int(obj.get("M", -1)),
        samplers=samplers,
    )
