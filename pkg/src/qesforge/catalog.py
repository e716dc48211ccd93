"""Built-in instances: frames, states, potentials and reference chains.

Every entry is constructed programmatically from closed-form constants so
fixture precision is machine precision, not a printed decimal. The same
entries can be exported to / reloaded from standalone JSON files, which is
what the CLI verification commands consume when an override directory is
configured.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import UnknownEntry
from .frame import (Ansatz, Frame, frame_from_json, frame_to_json,
                    standard_frame, weight_sampler_from_g1)
from .polyalg import Poly, RationalFn
from .potential import PotentialExpr, build_potential

__all__ = [
    "CatalogEntry",
    "get",
    "list_ids",
    "flagship_constants",
    "potential_fixture",
    "superpotential_fixtures",
    "u_fixture",
    "entry_to_json",
    "entry_from_json",
    "export_fixtures",
    "load_fixture_dir",
]

_IDS = ("flagship", "pt-complex", "kuliy-tkachuk", "sextic", "harmonic")


def flagship_constants() -> tuple[float, float]:
    """(c, sqrt(c)) for the three-state rational entry.

    sqrt(c) is the positive root of 4 t^3 + 12 t^2 - 3 t - 15, evaluated in
    closed trigonometric form.
    """
    s = -1.0 + math.sqrt(5.0) * math.cos(math.atan(math.sqrt(109.0) / 4.0) / 3.0)
    return s * s, s


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    frame: Frame
    states: tuple[Ansatz, ...]
    potential: PotentialExpr
    description: str
    constants: dict

    @property
    def ground(self) -> Ansatz:
        return self.states[0]

    @property
    def energies(self) -> tuple[complex, ...]:
        return tuple(s.energy for s in self.states)


def _with_weight(name: str, g1) -> Frame:
    base = standard_frame(name)
    g1p = Poly(tuple(g1))
    return base.with_weight(g1p, weight_sampler_from_g1(g1p))


def _build(entry_id: str) -> CatalogEntry:
    if entry_id == "flagship":
        c, s = flagship_constants()
        frame = _with_weight("rational-x", (0.0, s))
        states = (
            Ansatz(lam=s - 0.5, c=(0.0, 1.0), energy=0.0),
            Ansatz(lam=s - 0.5, c=(-1.0, 0.0, 1.0), energy=2.0 * s),
            Ansatz(lam=1.5 - s, c=(0.0, 1.0 / (4.0 * c / 3.0 - 2.0), 0.0, 1.0), energy=-8.0 * c + 12.0 * s),
        )
        return CatalogEntry(entry_id, frame, states, build_potential(frame, states[0]),
                            "three bound states on the rational frame f = 1 + x^2",
                            {"c": c, "sqrt_c": s})
    if entry_id == "kuliy-tkachuk":
        r = math.sqrt(3.0)
        frame = _with_weight("rational-x", (0.0, r / 2.0))
        states = (
            Ansatz(lam=(3.0 - r) / 2.0, c=(1.0,), energy=0.0),
            Ansatz(lam=(r - 1.0) / 2.0, c=(0.0, 1.0), energy=6.0 - 3.0 * r),
            Ansatz(lam=(r - 1.0) / 2.0, c=(1.0, 0.0, -1.0), energy=6.0 - 2.0 * r),
        )
        return CatalogEntry(entry_id, frame, states, build_potential(frame, states[0]),
                            "reference three-state chain on the rational frame",
                            {"sqrt_3": r})
    if entry_id == "pt-complex":
        frame = _with_weight("rational-x", (0.0, 1.0 / 6.0))
        states = (
            Ansatz(lam=-1.0, c=(3.0, 2.0j, 1.0), energy=0.0),
            Ansatz(lam=0.0, c=(-1.0, 2.0j, 1.0), energy=2.0 / 3.0),
        )
        return CatalogEntry(entry_id, frame, states, build_potential(frame, states[0]),
                            "complex PT-symmetric potential with two real-energy states",
                            {})
    if entry_id == "sextic":
        frame = _with_weight("sextic", (0.0, 0.0, 0.0, 1.0))
        states = (
            Ansatz(lam=0.0, c=(1.0, 0.0, 4.0, 0.0, 2.0), energy=0.0),
            Ansatz(lam=0.0, c=(-3.0, 0.0, 0.0, 0.0, 2.0), energy=8.0),
            Ansatz(lam=0.0, c=(1.0, 0.0, -4.0, 0.0, 2.0), energy=16.0),
        )
        return CatalogEntry(entry_id, frame, states, build_potential(frame, states[0]),
                            "sextic oscillator with three polynomial-times-quartic-Gaussian states",
                            {})
    if entry_id == "harmonic":
        frame = _with_weight("harmonic", (0.0, 1.0))
        states = (
            Ansatz(lam=0.0, c=(1.0,), energy=0.0),
            Ansatz(lam=0.0, c=(0.0, 1.0), energy=2.0),
            Ansatz(lam=0.0, c=(-1.0, 0.0, 2.0), energy=4.0),
        )
        return CatalogEntry(entry_id, frame, states, build_potential(frame, states[0]),
                            "harmonic oscillator shifted to a zero ground energy",
                            {})
    raise UnknownEntry(entry_id)


def list_ids() -> tuple[str, ...]:
    return _IDS


def get(entry_id: str) -> CatalogEntry:
    if entry_id not in _IDS:
        raise UnknownEntry(entry_id)
    return _build(entry_id)


# -- independent closed-form fixtures (for regression, typed separately) ----

def _x() -> RationalFn:
    return RationalFn(Poly.of(0.0, 1.0))


def potential_fixture(entry_id: str) -> RationalFn:
    """The potential in its displayed closed form, assembled independently of
    the ground-state construction."""
    x = _x()
    f = RationalFn(Poly.of(1.0, 0.0, 1.0))
    if entry_id == "flagship":
        c, s = flagship_constants()
        v = c * x**2 - (4.0 * c + s) + (8.0 * c - 4.0 * s) / f - (4.0 * c - 8.0 * s + 3.0) / f**2
        return v.normalize()
    if entry_id == "kuliy-tkachuk":
        r = math.sqrt(3.0)
        v = 0.75 * x**2 + 0.5 * (6.0 - 7.0 * r) - 2.0 * (-3.0 + r) / f + 2.0 * (-3.0 + 2.0 * r) / f**2
        return v.normalize()
    if entry_id == "pt-complex":
        v = (1.0 / 36.0) * x**2 - 1.0 / 6.0 + RationalFn(Poly.of(4.0 / 3.0, 2.0j / 3.0), Poly.of(-1.0, 2.0j, 1.0))
        return v.normalize()
    if entry_id == "sextic":
        return RationalFn(Poly.of(8.0, 0.0, -11.0, 0.0, 0.0, 0.0, 1.0)).normalize()
    if entry_id == "harmonic":
        return RationalFn(Poly.of(-1.0, 0.0, 1.0)).normalize()
    raise UnknownEntry(entry_id)


def superpotential_fixtures(entry_id: str) -> list[RationalFn]:
    """Printed superpotential chains for the entries that carry them."""
    x = _x()
    f = RationalFn(Poly.of(1.0, 0.0, 1.0))
    if entry_id == "flagship":
        c, s = flagship_constants()
        den = Poly.of(-3.0 * s, 0.0, 14.0 * c - 3.0 * s - 15.0, 0.0, 34.0 * c + 6.0 * s - 45.0)
        tail = RationalFn(Poly.of(0.0, 2.0 * (14.0 * c - 3.0 * s - 15.0), 0.0, 2.0 * (68.0 * c + 12.0 * s - 90.0)), den)
        w0 = s * x - (2.0 * s - 1.0) * x / f - 1.0 / x
        w1 = s * x - (2.0 * s + 1.0) * x / f + 1.0 / x
        w2 = s * x + (2.0 * s + 1.0) * x / f - 1.0 / x - tail
        return [w.normalize() for w in (w0, w1, w2)]
    if entry_id == "pt-complex":
        w0 = x / 6.0 + 1.0 / (x + 1.0j) - 1.0 / (x + 3.0j)
        w1 = x / 6.0 - 1.0 / (x + 1.0j) + 1.0 / (x + 3.0j) - 1.0 / (x + 4.0j)
        return [w.normalize() for w in (w0, w1)]
    raise UnknownEntry(entry_id)


def u_fixture(entry_id: str) -> RationalFn:
    """Printed master functions U(x)."""
    x = _x()
    if entry_id == "flagship":
        c, s = flagship_constants()
        den = Poly.of(-3.0 * s, 0.0, 14.0 * c - 3.0 * s - 15.0, 0.0, 34.0 * c + 6.0 * s - 45.0)
        num = (
            2.0 * s * x**2 * (x**2 - 1.0)
            * RationalFn(Poly.of(2.0 * (-17.0 * c + 3.0 * s + 15.0), 0.0, -192.0 * c - 39.0 * s + 255.0))
        )
        return (num / RationalFn(den)).normalize()
    if entry_id == "pt-complex":
        return (x / 3.0 - 1.0 / (x + 4.0j)).normalize()
    if entry_id == "sextic":
        num = Poly.of(3.0, 0.0, 0.0, 0.0, -8.0, 0.0, 0.0, 0.0, 4.0)  # (2x^4-3)(2x^4-1)
        return RationalFn(num, Poly.of(0.0, 0.0, 1.0)).normalize()
    raise UnknownEntry(entry_id)


# -- JSON round trip ---------------------------------------------------------

def _cpairs(values) -> list:
    return [[complex(v).real, complex(v).imag] for v in values]


def _poly_json(p: Poly) -> list:
    return _cpairs(p.coeffs)


def _poly_from(obj) -> Poly:
    return Poly(tuple(complex(re, im) for re, im in obj))


def entry_to_json(entry: CatalogEntry) -> dict:
    sampler_name = "rational-x" if entry.frame.f0.degree == 2 else "harmonic"
    return {
        "id": entry.id,
        "description": entry.description,
        "frame": frame_to_json(entry.frame, sampler_name),
        "states": [
            {"lambda": [s.lam.real, s.lam.imag], "c": _cpairs(s.c), "energy": [s.energy.real, s.energy.imag]}
            for s in entry.states
        ],
        "potential": {"num": _poly_json(entry.potential.v.num), "den": _poly_json(entry.potential.v.den)},
        "constants": entry.constants,
    }


def entry_from_json(obj: dict) -> CatalogEntry:
    frame = frame_from_json(obj["frame"])
    if frame.samplers is not None:
        frame = frame.with_weight(frame.g1, weight_sampler_from_g1(frame.g1))
    states = tuple(
        Ansatz(lam=complex(*st["lambda"]), c=tuple(complex(re, im) for re, im in st["c"]),
               energy=complex(*st["energy"]))
        for st in obj["states"]
    )
    v = RationalFn(_poly_from(obj["potential"]["num"]), _poly_from(obj["potential"]["den"]))
    pexpr = PotentialExpr(v, frame, states[0])
    return CatalogEntry(obj["id"], frame, states, pexpr, obj.get("description", ""), obj.get("constants", {}))


def export_fixtures(directory: str) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    written = []
    for entry_id in _IDS:
        path = os.path.join(directory, f"{entry_id}.json")
        with open(path, "w") as fh:
            json.dump(entry_to_json(get(entry_id)), fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written


def load_fixture_dir(directory: str) -> dict[str, CatalogEntry]:
    entries = {}
    for name in sorted(os.listdir(directory)):
        if name.endswith(".json"):
            with open(os.path.join(directory, name)) as fh:
                entry = entry_from_json(json.load(fh))
            entries[entry.id] = entry
    return entries
