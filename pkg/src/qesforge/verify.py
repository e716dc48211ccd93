"""Independent verification of claimed potential/eigenpair data.

Two complementary residuals are used everywhere: a symbolic one that clears
the Schrodinger ratio identity to polynomial coefficients in h (zero means
exact eigenpair), and a grid one built from finite differences of sampled
wave functions. On top of those come normalizability and orthogonality
checks, PT-symmetry deviation, and recovery of energies that the constraint
systems leave implicit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import DegenerateState
from .frame import Ansatz, Frame, log_derivative, state_sampler
from .polyalg import Poly, RationalFn, poly_roots
from .potential import PotentialExpr, potential_sampler

__all__ = [
    "EigenpairReport",
    "schrodinger_residual_symbolic",
    "recover_energy_symbolic",
    "schrodinger_residual_grid",
    "normalizable",
    "orthogonality",
    "pt_symmetry_check",
    "rayleigh_energy",
    "parity_of",
    "real_poles",
    "eigenpair_report",
    "dump_samples",
]


def _as_rational(v) -> RationalFn:
    if isinstance(v, PotentialExpr):
        return v.v
    return v


def _residual_parts(frame: Frame, v, state: Ansatz):
    """Numerator pieces of (psi'/psi)^2 + d/dx(psi'/psi) - V + E over a common denominator."""
    ld = log_derivative(frame, state)
    vr = _as_rational(v)
    nl, dl = ld.num, ld.den
    h1 = frame.h1
    # (psi'/psi)^2 + (psi'/psi)' share the denominator dl^2
    curv = nl * nl + (nl.deriv() * dl - nl * dl.deriv()) * h1
    a = curv * vr.den
    b = -vr.num * (dl * dl)
    d = vr.den * (dl * dl)  # multiplies E
    return a, b, d


def _maxc(p: Poly) -> float:
    return max((abs(c) for c in p.coeffs), default=0.0)


def schrodinger_residual_symbolic(frame: Frame, v, state: Ansatz, energy=None) -> float:
    """Max cleared-numerator coefficient of the eigenvalue identity, relative.

    Zero (to rounding) certifies the eigenpair exactly; the result is scaled
    by the largest coefficient among the assembled pieces so the threshold is
    meaningful across normalizations.
    """
    if state.poly.is_zero:
        raise DegenerateState("state polynomial is identically zero")
    e = state.energy if energy is None else energy
    a, b, d = _residual_parts(frame, v, state)
    total = a + b + e * d
    scale = max(_maxc(a), _maxc(b), abs(e) * _maxc(d), 1.0)
    return _maxc(total) / scale


def recover_energy_symbolic(frame: Frame, v, state: Ansatz) -> complex:
    """The energy minimizing the cleared residual; exact for true eigenpairs.

    The cleared numerator is linear in E, so this is a one-dimensional least
    squares solve over the coefficient vectors.
    """
    a, b, d = _residual_parts(frame, v, state)
    n = max(len(a), len(b), len(d))
    ab = a.as_array(n) + b.as_array(n)
    dd = d.as_array(n)
    denom = np.vdot(dd, dd)
    if denom == 0:
        raise DegenerateState("energy does not enter the residual")
    return complex(-np.vdot(dd, ab) / denom)


def _second_derivative(fn, x, step=1e-4):
    x = np.asarray(x, dtype=float)
    f = lambda y: np.asarray(fn(y), dtype=complex)
    return (-f(x + 2 * step) + 16 * f(x + step) - 30 * f(x) + 16 * f(x - step) - f(x - 2 * step)) / (12 * step**2)


def schrodinger_residual_grid(v_sampler, psi_sampler, energy, grid, step=1e-4) -> float:
    """Max of |-psi'' + (V - E) psi| / |psi| over the grid, nodes excluded."""
    x = np.asarray(grid, dtype=float)
    psi = np.asarray(psi_sampler(x), dtype=complex)
    vv = np.asarray(v_sampler(x), dtype=complex)
    rrs = -_second_derivative(psi_sampler, x, step) + (vv - energy) * psi
    mask = np.abs(psi) > 1e-6 * max(np.max(np.abs(psi)), 1e-300)
    if not np.any(mask):
        raise DegenerateState("state vanishes on the whole grid")
    return float(np.max(np.abs(rrs[mask]) / np.maximum(np.abs(psi[mask]), 1e-30)))


def normalizable(psi_sampler, interval=(-6.0, 6.0), tail_tol=1e-3):
    """(is_normalizable, decay rate) with the rate = slope of log|psi|^2 vs x^2.

    The tail fit runs over [end, 2*end]; a Gaussian weight exp(-a x^2 / 2)
    shows up as rate -a. Square integrability is confirmed by adaptive
    quadrature of |psi|^2 over the doubled interval.
    """
    end = float(interval[1])
    xs = np.linspace(end, 2 * end, 80)
    vals = np.abs(np.asarray(psi_sampler(xs), dtype=complex)) ** 2
    good = vals > 1e-290
    if np.count_nonzero(good) < 10:
        # underflow this far out means violent decay
        return True, -np.inf
    slope = np.polyfit(xs[good] ** 2, np.log(vals[good]), 1)[0]
    if slope >= -tail_tol:
        return False, float(slope)
    total, _ = quad(lambda t: abs(psi_sampler(t)) ** 2, 2 * interval[0], 2 * end, limit=200)
    return bool(np.isfinite(total)), float(slope)


def _cquad(fn, a, b):
    re, _ = quad(lambda t: np.real(fn(t)), a, b, limit=200)
    im, _ = quad(lambda t: np.imag(fn(t)), a, b, limit=200)
    return re + 1j * im


def orthogonality(psi_a, psi_b, interval=(-8.0, 8.0)) -> float:
    """|integral of psi_a psi_b| normalized by the L2 norms."""
    a, b = float(interval[0]), float(interval[1])
    cross = _cquad(lambda t: psi_a(t) * psi_b(t), a, b)
    na = quad(lambda t: abs(psi_a(t)) ** 2, a, b, limit=200)[0]
    nb = quad(lambda t: abs(psi_b(t)) ** 2, a, b, limit=200)[0]
    return float(abs(cross) / np.sqrt(na * nb))


def pt_symmetry_check(v_sampler, grid) -> float:
    """Max deviation of conj(V(-x)) from V(x) over the grid."""
    x = np.asarray(grid, dtype=float)
    vx = np.asarray(v_sampler(x), dtype=complex)
    vmx = np.asarray(v_sampler(-x), dtype=complex)
    return float(np.max(np.abs(np.conj(vmx) - vx)))


def rayleigh_energy(v_sampler, psi_sampler, interval=(-6.0, 6.0), mode="pointwise", npts=401) -> complex:
    """Recover the energy of a sampled state under a sampled potential.

    ``pointwise`` (default, and the right choice for complex potentials where
    the L2 pairing is not canonical): median over the grid of the ratio
    (-psi'' + V psi) / psi. ``quadrature``: the usual quotient of integrals.
    """
    if mode == "pointwise":
        x = np.linspace(interval[0], interval[1], npts)
        psi = np.asarray(psi_sampler(x), dtype=complex)
        mask = np.abs(psi) > 1e-4 * np.max(np.abs(psi))
        x = x[mask]
        psi = psi[mask]
        ratio = (-_second_derivative(psi_sampler, x) + np.asarray(v_sampler(x), dtype=complex) * psi) / psi
        return complex(np.median(ratio.real), np.median(ratio.imag))
    if mode == "quadrature":
        a, b = float(interval[0]), float(interval[1])

        def hpsi(t):
            return complex(-_second_derivative(psi_sampler, np.array([t]))[0] + v_sampler(t) * psi_sampler(t))

        top = _cquad(lambda t: np.conj(psi_sampler(t)) * hpsi(t), a, b)
        bot = _cquad(lambda t: np.conj(psi_sampler(t)) * psi_sampler(t), a, b)
        return complex(top / bot)
    raise ValueError(f"unknown mode {mode!r}")


def parity_of(sampler, grid) -> str:
    x = np.abs(np.asarray(grid, dtype=float))
    x = x[x > 1e-8]
    plus = np.asarray(sampler(x), dtype=complex)
    minus = np.asarray(sampler(-x), dtype=complex)
    scale = max(np.max(np.abs(plus)), 1e-300)
    if np.max(np.abs(minus - plus)) <= 1e-8 * scale:
        return "even"
    if np.max(np.abs(minus + plus)) <= 1e-8 * scale:
        return "odd"
    return "none"


def real_poles(r: RationalFn, interval=(-10.0, 10.0), imag_tol=1e-8) -> list[float]:
    """Real-axis poles of a (normalized) rational function inside the interval."""
    rn = r.normalize()
    out = []
    for z in poly_roots(rn.den):
        if abs(z.imag) <= imag_tol * (1.0 + abs(z.real)) and interval[0] <= z.real <= interval[1]:
            out.append(float(z.real))
    return sorted(out)


@dataclass(frozen=True)
class EigenpairReport:
    state_index: int
    energy: complex
    symbolic_residual_max: float
    grid_residual_max: float | None
    normalizable: bool | None
    decay_rate: float | None
    pole_report: tuple[float, ...]
    energy_recovered: complex
    energy_rayleigh: complex | None
    parity: str | None = None

    @property
    def ok(self) -> bool:
        checks = [self.symbolic_residual_max < 1e-8]
        if self.grid_residual_max is not None:
            checks.append(self.grid_residual_max < 1e-4)
        checks.append(abs(self.energy_recovered - self.energy) <= 1e-6 * max(1.0, abs(self.energy)))
        return all(checks)

    def to_json(self) -> dict:
        def c(z):
            return None if z is None else [complex(z).real, complex(z).imag]

        return {
            "state": self.state_index,
            "energy": c(self.energy),
            "symbolic_residual_max": self.symbolic_residual_max,
            "grid_residual_max": self.grid_residual_max,
            "normalizable": self.normalizable,
            "decay_rate": self.decay_rate,
            "poles": list(self.pole_report),
            "energy_recovered": c(self.energy_recovered),
            "energy_rayleigh": c(self.energy_rayleigh),
            "parity": self.parity,
            "ok": self.ok,
        }


def eigenpair_report(frame: Frame, pexpr, state: Ansatz, index: int = 0,
                     interval=(-4.0, 4.0), npts=201) -> EigenpairReport:
    """Run the full verification battery on one claimed eigenpair."""
    vr = _as_rational(pexpr)
    sym = schrodinger_residual_symbolic(frame, vr, state)
    erec = recover_energy_symbolic(frame, vr, state)
    poles = real_poles(vr, (2 * interval[0], 2 * interval[1]))
    if state.lam.real < 0:
        poles = sorted(set(poles) | set(real_poles(RationalFn(Poly.of(1.0), frame.f0), (2 * interval[0], 2 * interval[1]))))

    grid_res = norm = rate = eray = par = None
    if frame.samplers is not None and frame.samplers.g is not None:
        psi = state_sampler(frame, state)
        vfun = potential_sampler(pexpr) if isinstance(pexpr, PotentialExpr) else vr.sampler()
        grid = np.linspace(interval[0], interval[1], npts)
        keep = np.ones_like(grid, dtype=bool)
        for p in poles:
            keep &= np.abs(grid - p) > 0.05
        grid_res = schrodinger_residual_grid(vfun, psi, state.energy, grid[keep])
        norm, rate = normalizable(psi, interval)
        is_complex = _maxc(Poly(tuple(c.imag for c in vr.num.coeffs))) > 1e-12 * max(_maxc(vr.num), 1.0)
        eray = rayleigh_energy(vfun, psi, interval, mode="pointwise" if is_complex else "quadrature")
        par = parity_of(psi, grid[keep])
    return EigenpairReport(
        state_index=index,
        energy=state.energy,
        symbolic_residual_max=sym,
        grid_residual_max=grid_res,
        normalizable=norm,
        decay_rate=rate,
        pole_report=tuple(poles),
        energy_recovered=erec,
        energy_rayleigh=eray,
        parity=par,
    )


def dump_samples(path, xs, v_vals, psi_columns, labels=None):
    """CSV table "x,V_re,V_im,psi1_re,psi1_im,..." for external plotting."""
    labels = labels or [f"psi{i + 1}" for i in range(len(psi_columns))]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "V_re", "V_im"] + [f"{n}_{p}" for n in labels for p in ("re", "im")])
        for i, x in enumerate(xs):
            row = [f"{float(x):.12g}", f"{v_vals[i].real:.12g}", f"{v_vals[i].imag:.12g}"]
            for col in psi_columns:
                row += [f"{col[i].real:.12g}", f"{col[i].imag:.12g}"]
            w.writerow(row)
