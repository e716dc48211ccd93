"""Problem descriptors tying JSON input to systems, solutions and states.

A problem file names a frame, a ground-state skeleton with pinned values and
"?" markers for unknowns, a target mode (excited level list or a same-degree
companion search) and solver options. This module parses that, builds the
constraint systems, and reconstructs frames/states from solved assignments so
results can be verified and serialized.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .constraints import ConstraintSystem, degenerate_system, excited_system
from .frame import Ansatz, Frame, frame_from_json, standard_frame, weight_sampler_from_g1
from .polyalg import Poly
from .potential import PotentialExpr, build_potential
from .solver import SolveOptions

__all__ = ["ProblemSpec", "load_problem", "build_systems", "solve_options",
           "ground_from_assignment", "target_states_from_assignment"]

UNKNOWN = None


def _parse_value(v):
    if v == "?":
        return UNKNOWN
    if isinstance(v, (list, tuple)):
        re, im = v
        return complex(float(re), float(im))
    return complex(float(v), 0.0)


@dataclass
class ProblemSpec:
    frame: Frame
    frame_desc: str | dict
    g1: list  # complex | None per entry
    L: int
    ground_lam: complex | None
    ground_c: list  # complex | None per entry, length L+1
    mode: dict
    solver: dict = field(default_factory=dict)
    real: bool = True

    @property
    def unknown_names(self) -> list[str]:
        names = [f"g1_{i}" for i, v in enumerate(self.g1) if v is UNKNOWN]
        if self.ground_lam is UNKNOWN:
            names.append(f"lam{self.L}")
        names += [f"c{self.L}_{m}" for m, v in enumerate(self.ground_c) if v is UNKNOWN]
        return names

    def fully_pinned(self) -> bool:
        return not self.unknown_names


def load_problem(obj: dict) -> ProblemSpec:
    fd = obj["frame"]
    frame = standard_frame(fd) if isinstance(fd, str) else frame_from_json(fd)
    g1 = [_parse_value(v) for v in obj.get("g1", [])]
    ground = obj["ground"]
    L = int(ground["L"])
    c_spec = [_parse_value(v) for v in ground["c"]]
    if len(c_spec) != L + 1:
        raise ValueError(f"ground coefficient list must have length L+1 = {L + 1}")
    if complex(float(ground.get("energy", 0.0)), 0.0) != 0:
        raise ValueError("the ground energy is fixed at zero by construction")
    mode = dict(obj.get("mode", {"kind": "excited", "levels": [L + 1]}))
    if mode.get("kind") not in ("excited", "degenerate"):
        raise ValueError(f"unknown mode kind {mode.get('kind')!r}")
    return ProblemSpec(
        frame=frame,
        frame_desc=fd,
        g1=g1,
        L=L,
        ground_lam=_parse_value(ground.get("lambda", 0.0)),
        ground_c=c_spec,
        mode=mode,
        solver=dict(obj.get("solver", {})),
        real=bool(obj.get("real", True)),
    )


def _skeleton(ps: ProblemSpec) -> tuple[Frame, Ansatz]:
    """Frame and ground ansatz with placeholder values in the unknown slots."""
    g1_vals = [0.0 if v is UNKNOWN else v for v in ps.g1]
    frame = ps.frame.with_weight(Poly(tuple(g1_vals)))
    c_vals = [(1.0 if m == ps.L else 0.0) if v is UNKNOWN else v for m, v in enumerate(ps.ground_c)]
    if c_vals[-1] == 0:
        c_vals[-1] = 1.0
    lam = 0.0 if ps.ground_lam is UNKNOWN else ps.ground_lam
    return frame, Ansatz(lam=lam, c=tuple(c_vals), energy=0.0)


def build_systems(ps: ProblemSpec) -> list[ConstraintSystem]:
    frame, ground = _skeleton(ps)
    unknown = ps.unknown_names
    pins = {k: _parse_value(v) for k, v in ps.mode.get("pins", {}).items()}
    if ps.mode["kind"] == "excited":
        levels = [int(n) for n in ps.mode.get("levels", [ps.L + 1])]
        shared = bool(ps.mode.get("lambda_shared", False))
        return [
            excited_system(frame, ground, n, lambda_shared=shared, unknown=unknown,
                           pins=dict(pins), real=ps.real, g1_len=len(ps.g1) or None)
            for n in levels
        ]
    return [
        degenerate_system(
            frame, ground,
            tie_lambda=bool(ps.mode.get("tie_lambda", False)),
            companion_energy=bool(ps.mode.get("companion_energy", True)),
            exclude_trivial=bool(ps.mode.get("exclude_trivial", False)),
            unknown=unknown, pins=pins, real=ps.real, g1_len=len(ps.g1) or None,
        )
    ]


def solve_options(ps: ProblemSpec, **overrides) -> SolveOptions:
    cfg = dict(ps.solver)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in cfg:
        raise ValueError("a seed is required for reproducible solves")
    box = cfg.get("box", (-3.0, 3.0))
    if isinstance(box, list):
        box = tuple(box)
    return SolveOptions(
        seed=int(cfg["seed"]),
        starts=int(cfg.get("starts", 500)),
        box=box,
        max_iter=int(cfg.get("max_iter", 60)),
        tol_residual=float(cfg.get("tol_residual", 1e-10)),
        tol_dedup=float(cfg.get("tol_dedup", 1e-6)),
        jobs=int(cfg.get("jobs", 1)),
    )


def run_solve(ps: ProblemSpec, opts):
    """Dispatch to the plain multistart or the PT companion search."""
    from .solver import solve
    if ps.mode["kind"] == "degenerate" and ps.mode.get("pt_search"):
        from .ptsearch import pt_companion_search
        frame, ground = _skeleton(ps)
        return pt_companion_search(
            frame, ground, seed=opts.seed, starts=opts.starts,
            unknown=ps.unknown_names, g1_len=len(ps.g1) or None,
            tol_residual=opts.tol_residual, tol_dedup=opts.tol_dedup, box=opts.box,
        )
    return solve(build_systems(ps), opts)


def _resolved(ps: ProblemSpec, assignment, name: str, pinned):
    return assignment[name] if name in assignment else pinned


def ground_from_assignment(ps: ProblemSpec, assignment) -> tuple[Frame, Ansatz]:
    """Concrete frame (with weight sampler) and ground state for one solution."""
    g1_vals = [
        _resolved(ps, assignment, f"g1_{i}", v if v is not UNKNOWN else 0.0)
        for i, v in enumerate(ps.g1)
    ]
    g1p = Poly(tuple(g1_vals))
    frame = ps.frame
    if frame.samplers is not None and frame.h_is_x:
        frame = frame.with_weight(g1p, weight_sampler_from_g1(g1p))
    else:
        frame = frame.with_weight(g1p)
    lam = _resolved(ps, assignment, f"lam{ps.L}", ps.ground_lam if ps.ground_lam is not UNKNOWN else 0.0)
    c = tuple(
        _resolved(ps, assignment, f"c{ps.L}_{m}", v if v is not UNKNOWN else (1.0 if m == ps.L else 0.0))
        for m, v in enumerate(ps.ground_c)
    )
    return frame, Ansatz(lam=lam, c=c, energy=0.0)


def target_states_from_assignment(ps: ProblemSpec, assignment) -> list[Ansatz]:
    """The non-ground states a solution claims (excited levels or the companion)."""
    frame, ground = ground_from_assignment(ps, assignment)
    out = []
    if ps.mode["kind"] == "excited":
        shared = bool(ps.mode.get("lambda_shared", False))
        pins = {k: _parse_value(v) for k, v in ps.mode.get("pins", {}).items()}
        for n in (int(v) for v in ps.mode.get("levels", [ps.L + 1])):
            lam = ground.lam if shared else assignment.get(f"lam{n}", pins.get(f"lam{n}", 0.0))
            c = tuple(
                assignment.get(f"c{n}_{m}", pins.get(f"c{n}_{m}", 1.0 if m == n else 0.0))
                for m in range(n + 1)
            )
            energy = assignment.get(f"E{n}", pins.get(f"E{n}", 0.0))
            out.append(Ansatz(lam=lam, c=c, energy=energy))
        return out
    tie = bool(ps.mode.get("tie_lambda", False))
    lam = ground.lam if tie else assignment.get("lamt", 0.0)
    c = tuple(assignment.get(f"ct_{m}", 1.0 if m == ps.L else 0.0) for m in range(ps.L + 1))
    energy = assignment.get("Et", 0.0)
    return [Ansatz(lam=lam, c=c, energy=energy)]


def solution_potential(ps: ProblemSpec, assignment) -> PotentialExpr:
    frame, ground = ground_from_assignment(ps, assignment)
    return build_potential(frame, ground)
