"""Command-line front end: build / solve / verify / susy / catalog.

JSON goes in and out with stable key ordering; plot data is emitted as CSV,
never rendered. Exit codes: 0 ok, 2 input validation, 3 no convergence,
4 verification failure, 5 branch collision.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import catalog, problems, susy, verify
from .errors import (BranchCollision, NoConvergence, QesError, UnknownEntry)
from .polyalg import Poly, RationalFn
from .potential import partial_fractions, potential_sampler
from .solver import polish, solve

FIXTURE_ENV = "QESFORGE_FIXTURES"


def _cpairs(values):
    return [[complex(v).real, complex(v).imag] for v in values]


def _emit(obj, out_path):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
        print(f"wrote {out_path}")
    else:
        print(text)


def _entries() -> dict:
    override = os.environ.get(FIXTURE_ENV)
    if override:
        return catalog.load_fixture_dir(override)
    return {i: catalog.get(i) for i in catalog.list_ids()}


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


# -- build --------------------------------------------------------------------

def cmd_build(args) -> int:
    ps = problems.load_problem(_load_json(args.problem))
    if not ps.fully_pinned():
        print("build requires a fully pinned ground ansatz "
              f"(unknowns left: {ps.unknown_names})", file=sys.stderr)
        return 2
    pexpr = problems.solution_potential(ps, {})
    out = {
        "potential": {"num": _cpairs(pexpr.v.num.coeffs), "den": _cpairs(pexpr.v.den.coeffs)},
    }
    try:
        out["partial_fractions"] = [[k, _cpairs(p.coeffs)] for k, p in partial_fractions(pexpr)]
    except QesError as exc:
        out["partial_fractions_error"] = str(exc)
    if args.samples:
        xs = np.linspace(-3.0, 3.0, 241)
        vfun = potential_sampler(pexpr)
        frame, ground = problems.ground_from_assignment(ps, {})
        from .frame import state_sampler

        psi = state_sampler(frame, ground)(xs)
        verify.dump_samples(args.samples, xs, np.asarray(vfun(xs), dtype=complex), [psi], ["psi_ground"])
        out["samples_csv"] = args.samples
    _emit(out, args.out)
    return 0


# -- solve ----------------------------------------------------------------------

def _solution_json(ps, sol, pexpr, reports):
    return {
        "assignment": {k: [v.real, v.imag] for k, v in sorted(sol.assignment.items())},
        "residual_norm": sol.residual_norm,
        "multiplicity": sol.multiplicity,
        "flags": list(sol.flags),
        "potential": {"num": _cpairs(pexpr.v.num.coeffs), "den": _cpairs(pexpr.v.den.coeffs)},
        "verification": reports,
    }


def cmd_solve(args) -> int:
    spec = _load_json(args.problem)
    ps = problems.load_problem(spec)
    opts = problems.solve_options(ps, seed=args.seed, starts=args.starts,
                                  tol_residual=args.tol, jobs=args.jobs)
    sols = problems.run_solve(ps, opts)
    if not (ps.mode["kind"] == "degenerate" and ps.mode.get("pt_search")):
        systems = problems.build_systems(ps)
        sols = [polish(s, systems) for s in sols]
    results = []
    for sol in sols:
        frame, ground = problems.ground_from_assignment(ps, sol.assignment)
        pexpr = problems.solution_potential(ps, sol.assignment)
        reports = []
        ok = True
        for i, st in enumerate([ground] + problems.target_states_from_assignment(ps, sol.assignment)):
            r = verify.schrodinger_residual_symbolic(frame, pexpr.v, st)
            reports.append({"state": i, "symbolic_residual": r, "energy": [st.energy.real, st.energy.imag]})
            ok = ok and r < 1e-8
        if ok or args.raw:
            results.append(_solution_json(ps, sol, pexpr, reports))
    _emit({"seed": opts.seed, "starts": opts.starts, "solutions": results}, args.out)
    return 0


# -- verify ----------------------------------------------------------------------

def _verify_entry(entry) -> tuple[bool, dict]:
    reports = []
    ok = True
    for i, st in enumerate(entry.states):
        rep = verify.eigenpair_report(entry.frame, entry.potential, st, index=i)
        reports.append(rep.to_json())
        ok = ok and rep.ok
    result = {"id": entry.id, "states": reports}
    vfun = potential_sampler(entry.potential)
    vals = np.asarray(vfun(np.linspace(-3, 3, 41)), dtype=complex)
    if np.max(np.abs(vals.imag)) > 1e-10 * max(1.0, np.max(np.abs(vals))):
        dev = verify.pt_symmetry_check(vfun, np.linspace(-4.0, 4.0, 81))
        result["pt_deviation"] = dev
        ok = ok and dev < 1e-10
    return ok, result


def cmd_verify(args) -> int:
    entries = _entries()
    targets = args.target
    if args.all or not targets:
        targets = sorted(entries)
    all_ok = True
    out = []
    for tgt in targets:
        if tgt in entries:
            ok, rep = _verify_entry(entries[tgt])
        elif os.path.exists(tgt):
            ok, rep = _verify_solutions_file(tgt)
        else:
            raise UnknownEntry(tgt)
        all_ok = all_ok and ok
        out.append(rep)
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {rep.get('id', tgt)}")
    _emit({"reports": out, "ok": all_ok}, args.out)
    return 0 if all_ok else 4


def _verify_solutions_file(path) -> tuple[bool, dict]:
    obj = _load_json(path)
    ps = problems.load_problem(obj["problem"]) if "problem" in obj else None
    if ps is None:
        raise QesError(f"{path} does not carry an embedded problem descriptor")
    ok = True
    reports = []
    for sol in obj.get("solutions", []):
        assignment = {k: complex(re, im) for k, (re, im) in sol["assignment"].items()}
        frame, ground = problems.ground_from_assignment(ps, assignment)
        pexpr = problems.solution_potential(ps, assignment)
        for st in [ground] + problems.target_states_from_assignment(ps, assignment):
            r = verify.schrodinger_residual_symbolic(frame, pexpr.v, st)
            reports.append({"symbolic_residual": r})
            ok = ok and r < 1e-8
    return ok, {"id": path, "solutions_checked": len(reports), "reports": reports}


# -- susy ----------------------------------------------------------------------

def _safe_grid(rats, lo=-3.0, hi=3.0, n=201):
    xs = np.linspace(lo, hi, n)
    keep = np.ones_like(xs, dtype=bool)
    for r in rats:
        den = np.abs(r.den.eval_many(xs.astype(complex)))
        scale = max(np.max(den), 1e-300)
        keep &= den > 1e-3 * scale
    return xs[keep]


def _parse_rational_expr(text: str, constants: dict) -> RationalFn:
    cleaned = text.replace("^", "**")
    if "__" in cleaned or any(ch not in "0123456789.+-*/() eEjxabcdfghiklmnopqrstuvwyzABCDFGHIKLMNOPQRSTUVWYZ_" for ch in cleaned):
        raise QesError(f"unsupported character in expression {text!r}")
    namespace = {"x": RationalFn(Poly.of(0.0, 1.0))}
    namespace.update({k: float(v) for k, v in constants.items()})
    try:
        val = eval(cleaned, {"__builtins__": {}}, namespace)  # noqa: S307 - sanitized mini-language
    except NameError as exc:
        raise QesError(f"unknown name in expression: {exc}") from exc
    if isinstance(val, (int, float, complex)):
        val = RationalFn(Poly.of(complex(val)))
    if isinstance(val, Poly):
        val = RationalFn(val)
    return val.normalize()


def cmd_susy(args) -> int:
    if args.u_expr:
        return _susy_from_u(args)
    entries = _entries()
    if args.target not in entries:
        raise UnknownEntry(args.target or "<missing>")
    entry = entries[args.target]
    chain = susy.chain_from_states(entry.frame, entry.states)
    energies = [complex(e) for e in entry.energies]
    wp = [ (chain[k] + chain[k + 1]).normalize() for k in range(len(chain) - 1)]
    uf = susy.u_function(*wp[:2]) if len(wp) >= 2 else susy.u_function(wp[0])
    grid = _safe_grid(chain + [uf.u])
    out = {
        "id": entry.id,
        "superpotentials": [{"num": _cpairs(w.num.coeffs), "den": _cpairs(w.den.coeffs)} for w in chain],
        "u": {"num": _cpairs(uf.u.num.coeffs), "den": _cpairs(uf.u.den.coeffs)},
        "classification": susy.kuliy_tkachuk_report(uf),
        "riccati_residuals": [
            susy.riccati_residual(chain[k], chain[k + 1], energies[k], energies[k + 1], grid)
            for k in range(len(chain) - 1)
        ],
    }
    if len(wp) >= 2:
        out["master_residual"] = susy.master_residual(wp[0], wp[1], energies[1], energies[2], grid)
    _emit(out, args.out)
    return 0


def _fit_polynomial(xs, vals, max_deg=6):
    for deg in range(max_deg + 1):
        coef = np.polynomial.polynomial.polyfit(xs, vals.real, deg)
        err = np.max(np.abs(np.polynomial.polynomial.polyval(xs, coef) - vals.real))
        if err < 1e-6 * max(1.0, np.max(np.abs(vals))):
            return list(coef), float(err)
    return None, None


def _susy_from_u(args) -> int:
    constants = {}
    for item in args.constants or []:
        k, v = item.split("=")
        constants[k.strip()] = float(v)
    energies = [float(t) for t in args.energies.split(",")]
    if len(energies) != 3 or energies[0] != 0.0:
        raise QesError("susy --u-expr needs three energies starting at 0")
    e1, e2 = energies[1], energies[2]
    out = {"u": args.u_expr, "energies": energies}
    if args.tune:
        name = args.tune

        def strength(cv):
            r = _parse_rational_expr(args.u_expr, {**constants, name: cv})
            return abs(susy.singular_coefficient(r.sampler(), e1, e2))

        cs = np.linspace(args.tune_lo, args.tune_hi, 41)
        best = min(cs, key=strength)
        from scipy.optimize import minimize_scalar

        r = minimize_scalar(strength, bounds=(best - 0.1, best + 0.1), method="bounded",
                            options={"xatol": 1e-9})
        constants[name] = float(r.x)
        out["tuned"] = {name: float(r.x), "singular_coefficient": float(r.fun)}
    u = _parse_rational_expr(args.u_expr, constants)
    lo, hi, n = args.grid
    xs = np.linspace(lo, hi, int(n))
    xs = xs[np.abs(xs) > 1e-9]
    branches = {}
    for branch in ("minus", "plus"):
        res = susy.susy_from_U(u.sampler(), e1, e2, xs, branch=branch, strict=not args.ignore_collisions)
        fit, err = _fit_polynomial(res.x, res.potential)
        branches[branch] = {
            "physical": res.physical,
            "diagnostics": list(res.diagnostics),
            "swaps": list(res.swaps),
            "collisions": list(res.collisions),
            "master_deviation": res.master_deviation,
            "potential_fit": fit,
            "potential_fit_error": err,
        }
    out["branches"] = branches
    _emit(out, args.out)
    return 0


# -- catalog ----------------------------------------------------------------------

def cmd_catalog(args) -> int:
    entries = _entries()
    if args.action == "list":
        for i in sorted(entries):
            print(i)
        return 0
    if args.action == "show":
        if args.id not in entries:
            raise UnknownEntry(args.id or "<missing>")
        _emit(catalog.entry_to_json(entries[args.id]), args.out)
        return 0
    if args.action == "verify":
        targets = sorted(entries) if (args.all or not args.id) else [args.id]
        ok = True
        out = []
        for t in targets:
            if t not in entries:
                raise UnknownEntry(t)
            good, rep = _verify_entry(entries[t])
            ok = ok and good
            out.append(rep)
            print(f"[{'PASS' if good else 'FAIL'}] {t}")
        _emit({"reports": out, "ok": ok}, args.out)
        return 0 if ok else 4
    raise QesError(f"unknown catalog action {args.action!r}")


# -- entry point ----------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qesforge", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="assemble the potential of a fully pinned problem")
    b.add_argument("problem")
    b.add_argument("--out")
    b.add_argument("--samples", help="CSV sample table path")
    b.set_defaults(fn=cmd_build)

    s = sub.add_parser("solve", help="multistart solve of the problem's constraint systems")
    s.add_argument("problem")
    s.add_argument("--seed", type=int)
    s.add_argument("--starts", type=int)
    s.add_argument("--tol", type=float, help="residual tolerance")
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--raw", action="store_true", help="keep solutions that fail verification")
    s.add_argument("--out")
    s.set_defaults(fn=cmd_solve)

    v = sub.add_parser("verify", help="verify catalog entries or solve-result files")
    v.add_argument("target", nargs="*")
    v.add_argument("--all", action="store_true")
    v.add_argument("--out")
    v.set_defaults(fn=cmd_verify)

    y = sub.add_parser("susy", help="superpotential chain reports")
    y.add_argument("target", nargs="?")
    y.add_argument("--u-expr", help="rational expression in x with named constants")
    y.add_argument("--constants", nargs="*", help="name=value pairs for --u-expr")
    y.add_argument("--energies", default="0,1,2")
    y.add_argument("--tune", help="constant name to tune against the origin singularity")
    y.add_argument("--tune-lo", type=float, default=0.2)
    y.add_argument("--tune-hi", type=float, default=3.0)
    y.add_argument("--grid", nargs=3, type=float, default=(-4.0, 4.0, 161), metavar=("LO", "HI", "N"))
    y.add_argument("--ignore-collisions", action="store_true")
    y.add_argument("--out")
    y.set_defaults(fn=cmd_susy)

    c = sub.add_parser("catalog", help="list/show/verify the built-in instances")
    c.add_argument("action", choices=["list", "show", "verify"])
    c.add_argument("id", nargs="?")
    c.add_argument("--all", action="store_true")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_catalog)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except NoConvergence as exc:
        print(f"no convergence: {exc}", file=sys.stderr)
        return 3
    except BranchCollision as exc:
        print(f"branch collision: {exc} (use --ignore-collisions to proceed)", file=sys.stderr)
        return 5
    except (OSError, json.JSONDecodeError, KeyError, ValueError, QesError) as exc:
        print(f"input error: {exc!r}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
