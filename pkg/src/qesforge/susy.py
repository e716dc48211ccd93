"""Superpotential chains, Riccati residuals and the master-function toolkit.

The comparison formalism factorizes the Hamiltonian through superpotentials
W_k linked by Riccati equations; the sums of consecutive superpotentials
multiply into a master function U whose zero structure decides whether the
chain fits the restricted two-simple-zeros class. This module derives chains
from closed-form states, verifies printed chains, classifies U, and runs the
reverse direction: given U and the energy gaps, recover the superpotentials
branch by branch on a grid.

Everything here works with rational functions of x directly, so frames must
use the identity basis h(x) = x (all shipped instances do). Antiderivatives
of rational superpotentials are never represented symbolically; states coming
out of the chain are sampled through quadrature instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize_scalar

from .errors import BranchCollision, ComplexValuedOnInterval, DegenerateState
from .frame import Ansatz, Frame, log_derivative
from .polyalg import Poly, RationalFn, poly_roots

__all__ = [
    "UFunction",
    "UClassification",
    "superpotential_from_state",
    "chain_from_states",
    "riccati_residual",
    "u_function",
    "master_residual",
    "classify_u",
    "kuliy_tkachuk_report",
    "susy_from_U",
    "SusyFromU",
    "partner_state",
    "singular_coefficient",
    "tune_quadratic_strength",
]

_X1 = Poly.of(1.0)  # h' for the identity basis


def _dx(r: RationalFn) -> RationalFn:
    return r.deriv_x(_X1)


def superpotential_from_state(frame: Frame, state: Ansatz) -> RationalFn:
    """W = -psi'/psi as a rational function of x (identity-basis frames only)."""
    if not frame.h_is_x:
        raise ValueError("superpotentials are rational in x only for frames with h(x) = x")
    ld = log_derivative(frame, state)
    return (-ld).normalize()


def _raise_level(logderiv: RationalFn, w: RationalFn) -> RationalFn:
    """Log-derivative of (d/dx + w) applied to a state with the given log-derivative.

    If r = psi'/psi + w then ((d/dx + w) psi)'/((d/dx + w) psi) = psi'/psi + r'/r.
    Every intermediate is normalized: the quotients otherwise pile up common
    factors whose degree defeats reliable cancellation later.
    """
    r = (logderiv + w).normalize()
    if r.num.is_zero:
        raise DegenerateState("state is annihilated by the lowering operator")
    ratio = (_dx(r).normalize() / r).normalize()
    return (logderiv + ratio).normalize()


def chain_from_states(frame: Frame, states) -> list[RationalFn]:
    """Superpotentials W_L, W_{L+1}, ... derived from closed-form eigenstates.

    The k-th entry is minus the log-derivative of the state obtained by
    pushing the k-th eigenstate down through the k lowering operators of the
    partners already built.
    """
    if not frame.h_is_x:
        raise ValueError("superpotential chains need frames with h(x) = x")
    chain: list[RationalFn] = []
    for level, state in enumerate(states):
        ld = log_derivative(frame, state)
        for j in range(level):
            ld = _raise_level(ld, chain[j])
        chain.append((-ld).normalize())
    return chain


def riccati_residual(w_k: RationalFn, w_k1: RationalFn, e_k, e_k1, grid) -> float:
    """Max |W_k^2 + W_k' + E_k - W_{k+1}^2 + W_{k+1}' - E_{k+1}| over the grid."""
    x = np.asarray(grid, dtype=complex)
    lhs = w_k.eval_many(x) ** 2 + _dx(w_k).eval_many(x) + e_k
    rhs = w_k1.eval_many(x) ** 2 - _dx(w_k1).eval_many(x) + e_k1
    return float(np.max(np.abs(lhs - rhs)))


def _cluster_roots(roots, tol=1e-6):
    out: list[list] = []
    for r in sorted(roots, key=lambda z: (z.real, z.imag)):
        for c in out:
            if abs(r - c[0]) <= tol * max(1.0, abs(r), abs(c[0])):
                c[1] += 1
                c[0] = c[0] + (r - c[0]) / c[1]
                break
        else:
            out.append([r, 1])
    return tuple((complex(c[0]), int(c[1])) for c in out)


@dataclass(frozen=True)
class UFunction:
    u: RationalFn
    zeros: tuple[tuple[complex, int], ...]
    poles: tuple[tuple[complex, int], ...]


def u_function(w_plus_l: RationalFn, w_plus_l1: RationalFn | None = None) -> UFunction:
    """Master function: the product of the two summed superpotentials.

    For two-eigenstate chains there is only one summed superpotential and U
    reduces to it; pass a single argument in that case.
    """
    u = w_plus_l if w_plus_l1 is None else (w_plus_l * w_plus_l1)
    u = u.normalize()
    return UFunction(u=u, zeros=_cluster_roots(poly_roots(u.num)), poles=_cluster_roots(poly_roots(u.den)))


def master_residual(w_plus_l: RationalFn, w_plus_l1: RationalFn, e_l1, e_l2, grid) -> float:
    """Residual of the single equation the Riccati pair collapses to."""
    x = np.asarray(grid, dtype=complex)
    a = w_plus_l.eval_many(x)
    b = w_plus_l1.eval_many(x)
    prod_deriv = _dx((w_plus_l * w_plus_l1).normalize()).eval_many(x)
    val = a * b * (b - a) - prod_deriv + (e_l2 - e_l1) * a + e_l1 * b
    return float(np.max(np.abs(val)))


@dataclass(frozen=True)
class UClassification:
    real_zeros: tuple[tuple[float, int], ...]
    real_poles: tuple[float, ...]
    sign_pattern: tuple[int, ...]           # signs on the intervals between zeros
    derivative_signs: tuple[int, ...]       # sign of U' at each real zero
    kuliy_tkachuk_admissible: bool
    reasons: tuple[str, ...]

    def to_json(self) -> dict:
        return {
            "real_zeros": [[z, o] for z, o in self.real_zeros],
            "real_poles": list(self.real_poles),
            "sign_pattern": list(self.sign_pattern),
            "derivative_signs": list(self.derivative_signs),
            "kuliy_tkachuk_admissible": self.kuliy_tkachuk_admissible,
            "reasons": list(self.reasons),
        }


def classify_u(u, interval=(-6.0, 6.0), tol=1e-9) -> UClassification:
    """Zero/sign/derivative facts of U on the real axis and the admissibility verdict.

    Admissible means: no real poles, exactly two simple real zeros, U <= 0
    between them and U > 0 outside, with U' negative at the left zero and
    positive at the right one.
    """
    uf = u if isinstance(u, UFunction) else u_function(u)
    rat = uf.u
    lo, hi = float(interval[0]), float(interval[1])

    zs = [(z.real, o) for z, o in uf.zeros if abs(z.imag) <= 1e-7 * (1.0 + abs(z)) and lo <= z.real <= hi]
    ps = [z.real for z, _ in uf.poles if abs(z.imag) <= 1e-7 * (1.0 + abs(z)) and lo <= z.real <= hi]
    zs.sort()
    ps.sort()

    xs = np.linspace(lo, hi, 601)
    for marks in (zs, [(p, 1) for p in ps]):
        for z, _ in marks:
            xs = xs[np.abs(xs - z) > 5e-3]
    vals = rat.eval_many(xs.astype(complex))
    scale = max(np.max(np.abs(vals)), 1e-300)
    if np.max(np.abs(vals.imag)) > max(tol, 1e-9) * scale:
        raise ComplexValuedOnInterval("U has a nonreal part on the requested interval")

    # sign on each maximal interval between consecutive zero/pole marks
    marks = sorted([z for z, _ in zs] + ps)
    edges = [lo] + marks + [hi]
    pattern = []
    for a, b in zip(edges[:-1], edges[1:]):
        mid_mask = (xs > a) & (xs < b)
        if not np.any(mid_mask):
            pattern.append(0)
            continue
        seg = vals.real[mid_mask]
        m = seg[np.argmax(np.abs(seg))]
        pattern.append(0 if abs(m) <= tol * scale else (1 if m > 0 else -1))

    du = _dx(rat)
    dsigns = []
    for z, order in zs:
        dz = du.eval(complex(z))
        dsigns.append(0 if abs(dz) <= 1e-7 * max(1.0, scale) else (1 if dz.real > 0 else -1))

    reasons = []
    if ps:
        reasons.append("real pole")
    simple = [z for z, o in zs if o == 1]
    if len(zs) != 2 or len(simple) != 2:
        reasons.append("needs exactly two simple real zeros")
    admissible = not reasons
    if admissible:
        left, right = simple[0], simple[1]
        i_left = edges.index(left)
        if not (pattern[i_left] <= 0 and all(p > 0 for p in (pattern[0], pattern[-1]))):
            reasons.append("sign pattern is not negative-inside / positive-outside")
        if not (dsigns[0] < 0 and dsigns[1] > 0):
            reasons.append("derivative signs at the zeros are wrong")
        admissible = not reasons
    return UClassification(
        real_zeros=tuple((float(z), int(o)) for z, o in zs),
        real_poles=tuple(float(p) for p in ps),
        sign_pattern=tuple(pattern),
        derivative_signs=tuple(dsigns),
        kuliy_tkachuk_admissible=admissible,
        reasons=tuple(reasons),
    )


def kuliy_tkachuk_report(u, interval=(-6.0, 6.0)) -> dict:
    """Classification as JSON, folding the complex-valued case into a verdict."""
    try:
        cls = classify_u(u, interval)
    except ComplexValuedOnInterval:
        return {"kuliy_tkachuk_admissible": False, "reasons": ["complex-valued on the real axis"]}
    return cls.to_json()


# -- reverse direction: from a prescribed U ---------------------------------

@dataclass(frozen=True)
class SusyFromU:
    x: np.ndarray
    w_plus_l: np.ndarray
    w_plus_l1: np.ndarray
    w_levels: tuple[np.ndarray, np.ndarray, np.ndarray]
    potential: np.ndarray
    master_deviation: float
    collisions: tuple[int, ...]
    swaps: tuple[int, ...]
    diagnostics: tuple[dict, ...]

    @property
    def physical(self) -> bool:
        return all(d["bounded"] and not d["singular"] for d in self.diagnostics)


def _u_deriv(u_sampler, x, step=1e-6):
    h = step * np.maximum(1.0, np.abs(x))
    return (np.asarray(u_sampler(x + h), dtype=complex) - np.asarray(u_sampler(x - h), dtype=complex)) / (2 * h)


def susy_from_U(u_sampler, e1, e2, x_grid, branch="minus", *, strict=False) -> SusyFromU:
    """Solve the master equation pointwise for W_+^(L), given U and the energies.

    Substituting W_+^(L+1) = U / W into the master equation and clearing W
    leaves the quadratic (e2 - e1 - U) W^2 - U' W + U^2 + e1 U = 0 at every
    grid point. ``branch`` picks the starting root ("plus"/"minus" sign of
    the square root at the leftmost point); afterwards roots are tracked by
    continuity, recording swap events, and near-vanishing discriminants are
    recorded as collisions (raised as BranchCollision when ``strict``).
    The full level chain W_L, W_{L+1}, W_{L+2} follows from the Riccati split
    and the product structure, with boundedness/singularity diagnostics for
    each level.
    """
    x = np.asarray(x_grid, dtype=float)
    u = np.asarray(u_sampler(x), dtype=complex)
    up = _u_deriv(u_sampler, x)
    a = (e2 - e1) - u
    b = -up
    c = u * u + e1 * u
    disc = b * b - 4 * a * c
    sq = np.sqrt(disc)
    scale = np.maximum(np.abs(b), np.abs(a) + np.abs(c)) + 1e-300

    collisions = [int(i) for i in np.nonzero(np.abs(sq) <= 1e-9 * scale)[0]]
    if strict and collisions:
        raise BranchCollision(f"discriminant vanishes at {len(collisions)} grid points", collisions)

    with np.errstate(all="ignore"):
        r_plus = np.where(np.abs(a) > 1e-14 * scale, (-b + sq) / (2 * a), -c / np.where(b == 0, 1e-300, b))
        r_minus = np.where(np.abs(a) > 1e-14 * scale, (-b - sq) / (2 * a), -c / np.where(b == 0, 1e-300, b))

    w = np.empty_like(u)
    w[0] = r_plus[0] if branch == "plus" else r_minus[0]
    swaps = []
    took_plus = branch == "plus"
    for i in range(1, len(x)):
        dp, dm = abs(r_plus[i] - w[i - 1]), abs(r_minus[i] - w[i - 1])
        pick_plus = dp <= dm
        w[i] = r_plus[i] if pick_plus else r_minus[i]
        if pick_plus != took_plus:
            swaps.append(int(i))
            took_plus = pick_plus
    with np.errstate(all="ignore"):
        w1 = u / w

    wp = np.gradient(w, x)
    w1p = np.gradient(w1, x)
    with np.errstate(all="ignore"):
        w_l = 0.5 * (w + (e1 - wp) / w)
        w_l1 = 0.5 * (w - (e1 - wp) / w)
        w_l1_alt = 0.5 * (w1 + ((e2 - e1) - w1p) / w1)
        w_l2 = w1 - w_l1
    inner = (np.abs(x) < 0.8 * np.max(np.abs(x)))
    fin = inner & np.isfinite(w_l1) & np.isfinite(w_l1_alt)
    master_dev = float(np.max(np.abs(w_l1[fin] - w_l1_alt[fin]))) if np.any(fin) else np.inf

    v = w_l * w_l - np.gradient(w_l, x)

    diags = []
    for arr in (w_l, w_l1, w_l2):
        finite = np.isfinite(arr)
        singular = (not np.all(finite)) or np.max(np.abs(arr[finite])) > 1e5
        left_ok = finite[0] and arr[0].real < 0
        right_ok = finite[-1] and arr[-1].real > 0
        diags.append({"singular": bool(singular), "bounded": bool(left_ok and right_ok)})

    return SusyFromU(
        x=x, w_plus_l=w, w_plus_l1=w1, w_levels=(w_l, w_l1, w_l2),
        potential=v, master_deviation=master_dev,
        collisions=tuple(collisions), swaps=tuple(swaps), diagnostics=tuple(diags),
    )


def singular_coefficient(u_sampler, e1, e2, branch="minus") -> complex:
    """Strength of the 1/x^2 term of the implied potential at the origin.

    Extrapolated from a one-sided small-x fit of x^2 V(x); vanishes exactly
    when the energy gaps and scale of U conspire to make W_L regular there.
    """
    xs = np.linspace(2e-4, 4e-3, 240)
    res = susy_from_U(u_sampler, e1, e2, xs, branch=branch)
    y = xs**2 * res.potential
    design = np.vstack([np.ones_like(xs), xs**2]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return complex(coef[0])


def tune_quadratic_strength(e1, e2, bounds=(0.2, 3.0)) -> tuple[float, float]:
    """Scale c of U = c x^2 removing the origin singularity, found numerically.

    Returns (c, |singular coefficient| at c). A coarse scan brackets the
    minimum of the singular strength before a bounded scalar refine.
    """

    def strength(cval):
        return abs(singular_coefficient(lambda t: cval * np.asarray(t) ** 2, e1, e2))

    cs = np.linspace(bounds[0], bounds[1], 57)
    ks = [strength(cv) for cv in cs]
    i = int(np.argmin(ks))
    lo = cs[max(i - 1, 0)]
    hi = cs[min(i + 1, len(cs) - 1)]
    r = minimize_scalar(strength, bounds=(lo, hi), method="bounded",
                        options={"xatol": 1e-10})
    return float(r.x), float(r.fun)


def partner_state(w_chain, level: int, x_grid) -> np.ndarray:
    """Samples (up to an overall constant) of the level-th eigenstate of the chain.

    The seed is exp(-int W_level) accumulated by trapezoid quadrature from the
    left end of the grid; the creation operators (-d/dx + W_j), j < level, are
    then applied with finite differences on the same grid. Simple odd poles of
    W_level integrate through symmetric grids in the principal-value sense.
    """
    x = np.asarray(x_grid, dtype=float)
    funcs = [wf.sampler() if isinstance(wf, RationalFn) else wf for wf in w_chain]
    w_vals = np.asarray(funcs[level](x), dtype=complex)
    w_vals = np.where(np.isfinite(w_vals), w_vals, 0.0)
    integral = np.concatenate([[0.0], cumulative_trapezoid(w_vals, x)])
    integral -= integral[len(x) // 2]  # recenter to tame overflow
    state = np.exp(-integral)
    for j in range(level - 1, -1, -1):
        wj = np.asarray(funcs[j](x), dtype=complex)
        state = -np.gradient(state, x) + wj * state
    return state
