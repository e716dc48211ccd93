"""Damped Gauss-Newton multistart solver for stacked constraint systems.

All residuals are flattened to real vectors (complex entries interleaved,
complex unknowns split into real pairs), the systems are stacked into one
least-squares objective, and each random start is driven by Gauss-Newton
steps with Armijo backtracking. Converged points are deduplicated into
clusters; classification of clusters as physical or formal is deliberately
left to the verifier.

A plain uniform draw almost never reaches the isolated solutions of these
systems: the joint variety carries positive-dimensional components (shifted
oscillator families, zero-energy companion families) that swallow nearly
every trajectory. Each start is therefore expanded into a handful of
structured attempts before the damped Gauss-Newton run:

* the target-state block of every system is linear in its coefficients and
  energy, so candidate (E, c) pairs come from a small generalized
  eigenproblem (matrix pencil) that is exact at the true values of the
  remaining unknowns;
* the target exponent enters the constraints through the factor
  (lam_L - lam_N)(lam_L + lam_N - 1), so the two factor roots lam_N = lam_L
  and lam_N = 1 - lam_L are tried alongside the uniform draw;
* when several systems are stacked, the lowest one is solved first under
  each exponent rule and its roots are extended into joint starts.

All of this only changes where trajectories start; every reported solution
is a converged, re-verified root of the stacked least-squares objective.
Uniform seeding remains available via ``structured_starts=False``.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from itertools import product

import numpy as np
import scipy.linalg

from .constraints import ConstraintSystem, pack_assignment, unpack_assignment
from .errors import NoConvergence

__all__ = ["SolveOptions", "Solution", "solve", "polish"]


@dataclass(frozen=True)
class SolveOptions:
    seed: int
    starts: int = 500
    box: tuple[float, float] | dict = (-3.0, 3.0)
    max_iter: int = 60
    tol_residual: float = 1e-10
    tol_dedup: float = 1e-6
    damping: tuple[float, float] = (1.0, 0.5)
    max_backtracks: int = 30
    structured_starts: bool = True
    max_candidates: int = 10
    jobs: int = 1

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("need at least one start")
        if self.tol_residual <= 0:
            raise ValueError("tol_residual must be positive")


@dataclass(frozen=True)
class Solution:
    assignment: dict
    residual_norm: float
    multiplicity: int = 1
    flags: tuple[str, ...] = ()

    def value(self, name: str) -> complex:
        return self.assignment[name]


class _Union:
    """Stack of systems over the union of their unknowns, by name."""

    def __init__(self, systems, shared_unknowns=None):
        if not systems:
            raise ValueError("no systems given")
        self.systems = list(systems)
        self.real = systems[0].real
        if any(s.real != self.real for s in systems):
            raise ValueError("systems disagree on the real/complex unknown convention")
        names: list[str] = []
        seen = set()
        fixed_seen: dict[str, complex] = {}
        unknown_names = set()
        for s in systems:
            unknown_names |= set(s.unknowns)
        for s in systems:
            for n in s.unknowns:
                if n not in seen:
                    seen.add(n)
                    names.append(n)
            for n, v in s.fixed.items():
                if n in unknown_names:
                    raise ValueError(f"'{n}' is unknown in one system but pinned in another")
                if n in fixed_seen and fixed_seen[n] != v:
                    raise ValueError(f"'{n}' pinned inconsistently across systems")
                fixed_seen[n] = v
        self.names = tuple(names)
        if shared_unknowns is not None:
            missing = set(shared_unknowns) - set(names)
            if missing:
                raise ValueError(f"declared shared unknowns absent: {sorted(missing)}")
        self.n = len(names) if self.real else 2 * len(names)
        self.slot = {}
        i = 0
        for nme in names:
            self.slot[nme] = i
            i += 1 if self.real else 2
        self._fast = [s.bind(self.names, self.real) for s in systems]
        self._fast_batch = [s.bind_batch(self.names, self.real) for s in systems]

    def unpack(self, x: np.ndarray) -> dict:
        return unpack_assignment(self.names, self.real, x)

    def pack(self, assignment) -> np.ndarray:
        return pack_assignment(self.names, self.real, assignment)

    def residual(self, x: np.ndarray) -> np.ndarray:
        return np.concatenate([f(x) for f in self._fast])

    def residual_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.hstack([f(xs) for f in self._fast_batch])

    def set_value(self, x: np.ndarray, name: str, value: complex):
        i = self.slot[name]
        x[i] = value.real
        if not self.real:
            x[i + 1] = value.imag


def _norm(r: np.ndarray) -> float:
    v = float(np.linalg.norm(r))
    return np.inf if not np.isfinite(v) else v


def _fd_jacobian(fun, x, r0, step=1e-7, fun_batch=None):
    n = len(x)
    if fun_batch is not None:
        hs = step * np.maximum(1.0, np.abs(x))
        xs = np.tile(x, (n, 1))
        xs[np.arange(n), np.arange(n)] += hs
        return (fun_batch(xs) - r0).T / hs
    J = np.zeros((len(r0), n))
    for j in range(n):
        h = step * max(1.0, abs(x[j]))
        xj = x.copy()
        xj[j] += h
        J[:, j] = (fun(xj) - r0) / h
    return J


def _gauss_newton(fun, x0, *, max_iter, tol, damping=(1.0, 0.5), max_backtracks=30,
                  fun_batch=None):
    x = np.asarray(x0, dtype=float)
    with np.errstate(all="ignore"):
        r = fun(x)
    phi = _norm(r)
    step0, shrink = damping
    phi_marker = np.inf
    for it in range(max_iter):
        if phi < tol or not np.isfinite(phi):
            break
        if it >= 5 and phi > 1e8:
            break
        if it % 8 == 0:
            # stagnation guard: give up on trajectories that stopped making progress
            if it >= 16 and phi > 1e3 * tol and phi > 0.7 * phi_marker:
                break
            phi_marker = phi
        with np.errstate(all="ignore"):
            J = _fd_jacobian(fun, x, r, fun_batch=fun_batch)
        if not np.all(np.isfinite(J)):
            break
        d, *_ = np.linalg.lstsq(J, -r, rcond=None)
        if not np.all(np.isfinite(d)):
            break
        alpha = step0
        improved = False
        for _ in range(max_backtracks):
            xn = x + alpha * d
            with np.errstate(all="ignore"):
                rn = fun(xn)
            phin = _norm(rn)
            if phin < phi:
                improved = True
                break
            alpha *= shrink
        if not improved:
            break
        x, r, phi = xn, rn, phin
        if np.linalg.norm(alpha * d) < 1e-15 * (1.0 + np.linalg.norm(x)):
            break
    return x, phi


def _sample_start(union: _Union, opts: SolveOptions, k: int) -> np.ndarray:
    rng = np.random.default_rng((opts.seed, k))
    if isinstance(opts.box, dict):
        lo = np.empty(union.n)
        hi = np.empty(union.n)
        i = 0
        per = 1 if union.real else 2
        for name in union.names:
            a, b = opts.box.get(name, (-3.0, 3.0))
            lo[i: i + per] = a
            hi[i: i + per] = b
            i += per
    else:
        lo = np.full(union.n, opts.box[0])
        hi = np.full(union.n, opts.box[1])
    return rng.uniform(lo, hi)


def _pencil_candidates(system: ConstraintSystem, core: dict, real: bool, topk: int = 2):
    """Eigen-consistent (energy, coefficient-block) seeds for one system.

    Returns a list of (score, {name: value}) sorted by the pencil residual of
    the candidate; empty when the block is not fully free or the pencil
    degenerates.
    """
    cnames, ename = system.target_block()
    free = set(system.unknowns)
    if ename is not None and ename not in free:
        return []
    if any(n not in free for n in cnames[:-1]):
        return []
    try:
        m_cols, b_cols = system.linear_pencil(core)
    except Exception:
        return []
    pin = system.fixed.get(cnames[-1])
    cands = []
    if b_cols is None:
        # no energy symbol: seeds are (approximate) null vectors
        try:
            _, sv, vh = np.linalg.svd(m_cols)
        except np.linalg.LinAlgError:
            return []
        for i in range(len(vh) - 1, max(len(vh) - 1 - topk, -1), -1):
            t = vh[i].conj()
            score = float(np.linalg.norm(m_cols @ t))
            cands.append((score, None, t))
    else:
        a1 = b_cols.conj().T @ m_cols
        b1 = b_cols.conj().T @ b_cols
        try:
            w, v = scipy.linalg.eig(a1, b1)
        except (ValueError, np.linalg.LinAlgError):
            return []
        for i in range(len(w)):
            if not np.isfinite(w[i]):
                continue
            t = v[:, i]
            score = float(np.linalg.norm(m_cols @ t - w[i] * (b_cols @ t)))
            cands.append((score, complex(w[i]), t))
    out = []
    for score, energy, t in cands:
        if pin is not None:
            if abs(t[-1]) < 1e-10:
                continue
            t = t * (pin / t[-1])
        values = {}
        for n, tv in zip(cnames, t):
            if n in free:
                values[n] = complex(tv.real, 0.0) if real else complex(tv)
        if energy is not None:
            if real and abs(energy.imag) > 1e-8 * (1.0 + abs(energy.real)):
                continue
            values[ename] = complex(energy.real, 0.0) if real else energy
        if system.exclude_trivial and "mu_sep" in free:
            # make the deflation row consistent with the candidate
            def resolve(name):
                if name in values:
                    return values[name]
                if name in system.fixed:
                    return system.fixed[name]
                return complex(core[name])

            s_vals = np.array([resolve(f"c{system.L}_{m}") for m in range(system.L + 1)], dtype=complex)
            ct = np.array([resolve(n) for n in cnames], dtype=complex)
            sep = np.sum((ct - s_vals) ** 2)
            if system.lambda_rule == "free":
                sep += (resolve("lamt") - resolve(f"lam{system.L}")) ** 2
            if abs(sep) > 1e-12:
                values["mu_sep"] = 1.0 / sep
        out.append((score, values))
    out.sort(key=lambda t: (t[0], sorted((k, v.real, v.imag) for k, v in t[1].items())))
    return out[:topk]


def _system_core(system, base):
    """Values of the system's non-target unknowns, pulled from a full assignment."""
    cnames, ename = system.target_block()
    block = set(cnames) | ({ename} if ename else set()) | {"mu_sep"}
    return {k: base[k] for k in system.unknowns if k not in block}


def _pencil_block(system, base, real, topk=2):
    try:
        return _pencil_candidates(system, {**system.fixed, **_system_core(system, base)}, real, topk=topk)
    except Exception:
        return []


class _Seeder:
    """Turns one uniform draw into a prioritized list of start vectors."""

    def __init__(self, union: _Union, opts: SolveOptions):
        self.union = union
        self.opts = opts
        self.stage = []
        systems = union.systems
        if opts.structured_starts and all(s.kind == "excited" for s in systems):
            first = systems[0]
            if f"lam{first.n_target}" in first.unknowns:
                for rule in ("tied", "mirror"):
                    variant = first.seed_variant(rule)
                    self.stage.append((rule, variant, _Union([variant])))

    def _plain(self, base, x0):
        per_system = []
        for s in self.union.systems:
            cands = _pencil_block(s, base, self.union.real, topk=2)
            per_system.append(cands if cands else [(0.0, {})])
        combos = sorted(product(*per_system), key=lambda c: sum(t[0] for t in c))
        starts = []
        for combo in combos[:2]:
            x = x0.copy()
            for _, values in combo:
                for n, v in values.items():
                    self.union.set_value(x, n, v)
            starts.append(x)
        return starts

    def _staged(self, base, x0):
        union, opts = self.union, self.opts
        first = union.systems[0]
        lam_first = f"lam{first.n_target}"
        lam_ground = f"lam{first.L}"
        starts = []
        for rule, variant, vu in self.stage:
            cands = _pencil_block(variant, base, union.real, topk=1)
            if not cands:
                continue
            x1 = vu.pack({**{n: base[n] for n in vu.names}, **cands[0][1]})
            x1, phi1 = _gauss_newton(vu.residual, x1, max_iter=50,
                                     tol=min(1e-11, opts.tol_residual),
                                     fun_batch=vu.residual_batch)
            if phi1 > 1e-9:
                continue
            p = vu.unpack(x1)
            lam_l = p.get(lam_ground, first.fixed.get(lam_ground, base.get(lam_ground, 0.0)))
            p[lam_first] = lam_l if rule == "tied" else 1.0 - lam_l
            a = dict(base)
            a.update(p)
            # seed the remaining systems on top of the stage-1 root
            lam_seeds_rest = []
            for s in union.systems[1:]:
                lam_s = f"lam{s.n_target}"
                if lam_s in s.unknowns:
                    seeds = [1.0 - lam_l, lam_l, base[lam_s]]
                    dedup = []
                    for v in seeds:
                        if all(abs(v - w) > 1e-9 for w in dedup):
                            dedup.append(v)
                    lam_seeds_rest.append((s, lam_s, dedup))
                else:
                    lam_seeds_rest.append((s, None, [None]))
            for combo in product(*(seeds for _, _, seeds in lam_seeds_rest)):
                aa = dict(a)
                ok = True
                for (s, lam_s, _), lam_val in zip(lam_seeds_rest, combo):
                    if lam_s is not None:
                        aa[lam_s] = lam_val
                    cands_s = _pencil_block(s, aa, union.real, topk=1)
                    if not cands_s:
                        ok = False
                        break
                    aa.update(cands_s[0][1])
                if ok:
                    starts.append(union.pack(aa))
        return starts

    def attempts(self, x0):
        if not self.opts.structured_starts:
            return [x0]
        base = self.union.unpack(x0)
        starts = self._staged(base, x0) if self.stage else []
        starts += self._plain(base, x0)
        return starts[: self.opts.max_candidates] or [x0]


def _run_starts(args):
    union, opts, indices = args
    seeder = _Seeder(union, opts)
    hits = []
    best = np.inf
    for k in indices:
        x0 = _sample_start(union, opts, k)
        for x_init in seeder.attempts(x0):
            x, phi = _gauss_newton(
                union.residual,
                x_init,
                max_iter=opts.max_iter,
                tol=opts.tol_residual,
                damping=opts.damping,
                max_backtracks=opts.max_backtracks,
                fun_batch=union.residual_batch,
            )
            best = min(best, phi)
            if phi < opts.tol_residual:
                hits.append((k, x, phi))
    return hits, best


def solve(systems, opts: SolveOptions, shared_unknowns=None) -> list[Solution]:
    """Multistart least-squares solve of the stacked systems.

    Systems are always solved jointly in the least-squares sense, never
    square-truncated, so equation counts may exceed unknown counts. Raises
    NoConvergence (carrying the best residual reached) if no start converges.
    """
    if isinstance(systems, ConstraintSystem):
        systems = [systems]
    union = _Union(systems, shared_unknowns)
    indices = list(range(opts.starts))
    if opts.jobs > 1:
        chunks = [indices[i:: opts.jobs] for i in range(opts.jobs)]
        with ProcessPoolExecutor(max_workers=opts.jobs) as ex:
            parts = list(ex.map(_run_starts, [(union, opts, c) for c in chunks]))
        hits = sorted([h for part, _ in parts for h in part])
        best = min(b for _, b in parts)
    else:
        hits, best = _run_starts((union, opts, indices))
    if not hits:
        raise NoConvergence(
            f"no start reached tol_residual={opts.tol_residual:g}; best residual {best:.3e}",
            best_residual=best,
        )

    # re-check every candidate against the original systems, then deduplicate
    checked = []
    for _, x, _ in hits:
        phi = _norm(union.residual(x))
        if phi < opts.tol_residual:
            checked.append((phi, x))
    if not checked:
        raise NoConvergence("candidates failed re-evaluation", best_residual=best)
    checked.sort(key=lambda t: (t[0], tuple(np.round(t[1], 12))))

    reps: list[list] = []  # [phi, x, multiplicity]
    for phi, x in checked:
        for rep in reps:
            if _same_point(rep[1], x, opts.tol_dedup):
                rep[2] += 1
                break
        else:
            reps.append([phi, x, 1])

    sols = [
        Solution(assignment=union.unpack(x), residual_norm=phi, multiplicity=m)
        for phi, x, m in reps
    ]
    sols.sort(key=lambda s: (s.residual_norm, tuple(np.round(union.pack(s.assignment), 9))))
    return sols


def _same_point(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return bool(np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))))


def polish(sol: Solution, systems, tol: float = 1e-13) -> Solution:
    """Extra full-precision Gauss-Newton steps from a converged solution.

    The residual norm never increases; at a numerically singular Jacobian the
    input is returned unchanged, flagged accordingly.
    """
    if isinstance(systems, ConstraintSystem):
        systems = [systems]
    union = _Union(systems)
    x0 = union.pack(sol.assignment)
    r0 = union.residual(x0)
    J = _fd_jacobian(union.residual, x0, r0)
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        return replace(sol, flags=sol.flags + ("singular_jacobian",))
    x, phi = _gauss_newton(union.residual, x0, max_iter=15, tol=tol,
                           fun_batch=union.residual_batch)
    if phi <= sol.residual_norm:
        return replace(sol, assignment=union.unpack(x), residual_norm=phi,
                       flags=sol.flags + ("polished",))
    return sol
