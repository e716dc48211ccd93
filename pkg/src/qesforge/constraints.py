"""Algebraic constraint systems for additional eigenstates.

Once the ground state fixes the potential, demanding that another ansatz
state solves the same Schrodinger equation clears to a polynomial identity in
the basis variable h. Collecting the coefficient of every power of h turns
the differential condition into algebraic equations; the residual vectors
produced here are exactly those coefficient lists.

Two kinds are generated:

* ``excited`` - a state of higher polynomial degree N > L carrying its own
  exponent lam_N and energy E_N. The assembled groups are, in order: the
  curvature of the new polynomial part, its weight and f cross terms, the
  (lam_L - lam_N)-weighted block, the ground-polynomial counterparts and the
  energy term.
* ``degenerate`` - a companion of the same degree L. When the companion
  exponent is tied to the ground's and no energy offset is allowed, the
  residual reduces to three antisymmetric (t - s)-weighted groups that vanish
  identically for proportional coefficient sets. The worked two-state
  complex example requires the companion exponent and its energy offset to
  stay free, so both are optional unknowns; with them the system is the
  same-degree specialization of the excited one.

Unknowns are chosen by name. The weight-expansion entries are ``g1_<l>``,
the ground exponent ``lam<L>`` and coefficients ``c<L>_<m>``; excited states
add ``c<N>_<m>``, ``lam<N>``, ``E<N>``; companions add ``ct_<m>``, ``lamt``
and ``Et``. Everything not named unknown is pinned from the frame/ansatz
values (top coefficients default to 1 by the usual normalization freedom).

The residuals are linear in the target-state coefficient block and in the
energy (jointly a matrix pencil), which `linear_pencil` exposes so the
solver can seed multistart trajectories with eigen-consistent blocks.
"""

from __future__ import annotations

import numpy as np

from .frame import Ansatz, Frame

try:  # an optional accelerator; the kernels run unjitted without it
    from numba import njit as _njit

    def _jit(f):
        return _njit(cache=True)(f)
except ImportError:  # pragma: no cover
    def _jit(f):
        return f

__all__ = [
    "ConstraintSystem",
    "excited_system",
    "degenerate_system",
    "jacobian",
    "pack_assignment",
    "unpack_assignment",
]

_EMPTY = np.zeros(0, dtype=complex)


def _arr(poly) -> np.ndarray:
    return np.ascontiguousarray(np.array(poly.coeffs, dtype=np.complex128))


@_jit
def _k_conv(a, b):
    na, nb = a.shape[0], b.shape[0]
    if na == 0 or nb == 0:
        return np.zeros(0, np.complex128)
    out = np.zeros(na + nb - 1, np.complex128)
    for i in range(na):
        ai = a[i]
        if ai != 0:
            for j in range(nb):
                out[i + j] += ai * b[j]
    return out


@_jit
def _k_deriv(a):
    n = a.shape[0]
    if n <= 1:
        return np.zeros(0, np.complex128)
    out = np.empty(n - 1, np.complex128)
    for k in range(1, n):
        out[k - 1] = k * a[k]
    return out


@_jit
def _k_acc(out, coef, v):
    for i in range(v.shape[0]):
        out[i] += coef * v[i]


@_jit
def _k_pad_sub(a, b):
    n = max(a.shape[0], b.shape[0])
    out = np.zeros(n, np.complex128)
    for i in range(a.shape[0]):
        out[i] += a[i]
    for i in range(b.shape[0]):
        out[i] -= b[i]
    return out


@_jit
def _k_excited(p1, p2, p3, p4, p5, p6, p7, p8, g1, s, t, lam_l, lam_n, e_n, nout):
    out = np.zeros(nout, np.complex128)
    sp = _k_deriv(s)
    tp = _k_deriv(t)
    spp = _k_deriv(sp)
    tpp = _k_deriv(tp)
    st = _k_conv(s, t)
    tps = _k_conv(tp, s)
    spt = _k_conv(sp, t)
    _k_acc(out, -1.0 + 0.0j, _k_conv(p7, _k_conv(tpp, s)))
    _k_acc(out, -1.0 + 0.0j, _k_conv(p8, tps))
    _k_acc(out, 2.0 + 0.0j, _k_conv(p6, _k_conv(g1, tps)))
    _k_acc(out, -2.0 * lam_n, _k_conv(p2, tps))
    dl = lam_l - lam_n
    _k_acc(out, dl, _k_conv(p3, st))
    _k_acc(out, -2.0 * dl, _k_conv(p5, _k_conv(g1, st)))
    _k_acc(out, dl * (lam_l + lam_n - 1.0), _k_conv(p4, st))
    _k_acc(out, 2.0 * lam_l, _k_conv(p2, spt))
    _k_acc(out, -2.0 + 0.0j, _k_conv(p6, _k_conv(g1, spt)))
    _k_acc(out, 1.0 + 0.0j, _k_conv(p7, _k_conv(spp, t)))
    _k_acc(out, 1.0 + 0.0j, _k_conv(p8, spt))
    _k_acc(out, -e_n, _k_conv(p1, st))
    return out


@_jit
def _k_reduced(q1, q2, q3, q4, g1, s, ct, lam, nout):
    out = np.zeros(nout, np.complex128)
    sp = _k_deriv(s)
    cp = _k_deriv(ct)
    spp = _k_deriv(sp)
    cpp = _k_deriv(cp)
    d1 = _k_pad_sub(_k_conv(sp, ct), _k_conv(cp, s))
    d2 = _k_pad_sub(_k_conv(spp, ct), _k_conv(cpp, s))
    _k_acc(out, 1.0 + 0.0j, _k_conv(q1, d2))
    _k_acc(out, 1.0 + 0.0j, _k_conv(q2, d1))
    _k_acc(out, -2.0 + 0.0j, _k_conv(q3, _k_conv(g1, d1)))
    _k_acc(out, 2.0 * lam, _k_conv(q4, d1))
    return out


@_jit
def _k_batch(p1, p2, p3, p4, p5, p6, p7, p8, q1, q2, q3, q4,
             vals_rows, gl, big_l, n_t, rule, kind_reduced, with_energy,
             deflate, nout):
    """Residual rows for a batch of parameter vectors (see _kernel for layout).

    rule: 0 free exponent, 1 tied, 2 mirrored. The optional deflation row is
    the last entry of each output row.
    """
    nb = vals_rows.shape[0]
    out = np.zeros((nb, nout), np.complex128)
    ncore = nout - 1 if deflate else nout
    for b in range(nb):
        vals = vals_rows[b]
        g1 = vals[:gl].copy()
        lam_l = vals[gl]
        s = vals[gl + 1: gl + 2 + big_l].copy()
        i = gl + 2 + big_l
        t = vals[i: i + n_t + 1].copy()
        i += n_t + 1
        if rule == 0:
            lam_n = vals[i]
            i += 1
        elif rule == 1:
            lam_n = lam_l
        elif rule == 2:
            lam_n = 1.0 - lam_l
        elif rule == 3:
            lam_n = lam_l + 1.0
        else:
            lam_n = lam_l - 1.0
        if with_energy:
            e_n = vals[i]
            i += 1
        else:
            e_n = 0.0 + 0.0j
        if kind_reduced:
            core = _k_reduced(q1, q2, q3, q4, g1, s, t, lam_l, ncore)
        else:
            core = _k_excited(p1, p2, p3, p4, p5, p6, p7, p8,
                              g1, s, t, lam_l, lam_n, e_n, ncore)
        for j in range(ncore):
            out[b, j] = core[j]
        if deflate:
            sep = 0.0 + 0.0j
            for m in range(big_l + 1):
                d = t[m] - s[m]
                sep += d * d
            if rule == 0:
                d = lam_n - lam_l
                sep += d * d
            out[b, nout - 1] = vals[i] * sep - 1.0
    return out


_RULE_CODES = {"free": 0, "tied": 1, "mirror": 2, "up": 3, "down": 4}


def _apply_rule(rule, lam_l):
    if rule == "tied":
        return lam_l
    if rule == "mirror":
        return 1.0 - lam_l
    if rule == "up":
        return lam_l + 1.0
    if rule == "down":
        return lam_l - 1.0
    raise ValueError(f"unknown exponent rule {rule!r}")


def _conv_all(*arrays):
    out = None
    for a in arrays:
        if len(a) == 0:
            return _EMPTY
        out = a if out is None else np.convolve(out, a)
    return np.ascontiguousarray(out if out is not None else _EMPTY)


def _conv_len(*lens: int) -> int:
    if any(l == 0 for l in lens):
        return 0
    return sum(lens) - len(lens) + 1


class _Static:
    """Frame-only convolution products shared by every residual evaluation."""

    def __init__(self, frame: Frame):
        f0, f1, h1 = _arr(frame.f0), _arr(frame.f1), _arr(frame.h1)
        df1, dh1 = _k_deriv(f1), _k_deriv(h1)
        self.P1 = _conv_all(f0, f0)                  # f^2
        self.P2 = _conv_all(f0, f1, h1)              # f f' h'
        self.P3 = _conv_all(df1, h1, f0)             # f (df'/dh) h'
        self.P4 = _conv_all(f1, f1)                  # f'^2
        self.P5 = _conv_all(f0, f1)                  # f f'
        self.P6 = _conv_all(self.P1, h1)             # f^2 h'
        self.P7 = _conv_all(self.P6, h1)             # f^2 h'^2
        self.P8 = _conv_all(self.P1, dh1, h1)        # f^2 (dh'/dh) h'
        # reduced (same-degree, tied) companion groups
        self.Q1 = _conv_all(f0, h1, h1)              # f h'^2
        self.Q2 = _conv_all(f0, dh1, h1)             # f (dh'/dh) h'
        self.Q3 = _conv_all(f0, h1)                  # f h'
        self.Q4 = _conv_all(f1, h1)                  # f' h'


def _eq_excited_len(st: _Static, lg, ls, lt):
    lsp, ltp = max(ls - 1, 0), max(lt - 1, 0)
    lspp, ltpp = max(ls - 2, 0), max(lt - 2, 0)
    return max(
        _conv_len(len(st.P7), ltpp, ls),
        _conv_len(len(st.P8), ltp, ls),
        _conv_len(len(st.P6), lg, ltp, ls),
        _conv_len(len(st.P2), ltp, ls),
        _conv_len(len(st.P3), ls, lt),
        _conv_len(len(st.P5), lg, ls, lt),
        _conv_len(len(st.P4), ls, lt),
        _conv_len(len(st.P2), lsp, lt),
        _conv_len(len(st.P6), lg, lsp, lt),
        _conv_len(len(st.P7), lspp, lt),
        _conv_len(len(st.P8), lsp, lt),
        _conv_len(len(st.P1), ls, lt),
    )


def _eq_reduced_len(st: _Static, lg, ls):
    ld1 = max(2 * (ls - 1), 0)
    ld2 = max(2 * ls - 3, 0)
    return max(
        _conv_len(len(st.Q1), ld2),
        _conv_len(len(st.Q2), ld1),
        _conv_len(len(st.Q3), lg, ld1),
        _conv_len(len(st.Q4), ld1),
    )


class ConstraintSystem:
    """Named unknowns plus a residual evaluator over h-power coefficients."""

    def __init__(self, *, kind, frame, L, n_target, unknowns, fixed, real,
                 g1_len, lambda_shared=False, tie_lambda=False,
                 with_energy=False, reduced=False, exclude_trivial=False,
                 lambda_rule="free", _static=None):
        self.kind = kind
        self.L = L
        self.n_target = n_target
        self.unknowns = tuple(unknowns)
        self.fixed = dict(fixed)
        self.real = bool(real)
        self.g1_len = g1_len
        self.lambda_shared = lambda_shared
        self.tie_lambda = tie_lambda
        self.with_energy = with_energy
        self.reduced = reduced
        self.exclude_trivial = exclude_trivial
        # how the target exponent is obtained: "free" (own unknown), "tied"
        # (equal to the ground's) or "mirror" (one minus the ground's, the
        # other root of the (lam_L - lam_N)(lam_L + lam_N - 1) factor)
        self.lambda_rule = "tied" if lambda_shared or tie_lambda else lambda_rule
        self._static = _Static(frame) if _static is None else _static
        overlap = set(self.unknowns) & set(self.fixed)
        if overlap:
            raise ValueError(f"names both pinned and unknown: {sorted(overlap)}")
        if reduced:
            base = _eq_reduced_len(self._static, g1_len, L + 1)
        else:
            base = _eq_excited_len(self._static, g1_len, L + 1, n_target + 1)
        self.n_equations = base + (1 if exclude_trivial else 0)
        # canonical parameter layout consumed by the kernels
        order = [f"g1_{l}" for l in range(g1_len)]
        order.append(f"lam{L}")
        order += [f"c{L}_{m}" for m in range(L + 1)]
        if kind == "excited":
            n = n_target
            order += [f"c{n}_{m}" for m in range(n + 1)]
            order += ([] if self.lambda_rule != "free" else [f"lam{n}"]) + [f"E{n}"]
        else:
            order += [f"ct_{m}" for m in range(L + 1)]
            if self.lambda_rule == "free":
                order.append("lamt")
            if with_energy:
                order.append("Et")
            if exclude_trivial:
                order.append("mu_sep")
        self._order = tuple(order)
        missing = set(self._order) - set(self.unknowns) - set(self.fixed)
        if missing:
            raise ValueError(f"parameters with neither pin nor unknown status: {sorted(missing)}")

    def seed_variant(self, rule: str) -> "ConstraintSystem":
        """A copy with the target exponent tied by ``rule`` ("tied"/"mirror").

        Used by the solver to generate structured starts; the variant drops
        the exponent unknown and shares this system's static products.
        """
        lam_name = f"lam{self.n_target}" if self.kind == "excited" else "lamt"
        if lam_name not in self.unknowns:
            raise ValueError("target exponent is not free; no variant to build")
        return ConstraintSystem(
            kind=self.kind, frame=None, L=self.L, n_target=self.n_target,
            unknowns=tuple(n for n in self.unknowns if n != lam_name),
            fixed=self.fixed, real=self.real, g1_len=self.g1_len,
            with_energy=self.with_energy, reduced=self.reduced,
            exclude_trivial=self.exclude_trivial, lambda_rule=rule,
            _static=self._static,
        )

    # -- parameter materialization --------------------------------------------
    def _values_from(self, full) -> np.ndarray:
        return np.array([full[n] for n in self._order], dtype=np.complex128)

    def _kernel(self, vals: np.ndarray, nout: int | None = None) -> np.ndarray:
        st = self._static
        gl, L = self.g1_len, self.L
        nout = self.n_equations - (1 if self.exclude_trivial else 0) if nout is None else nout
        g1 = np.ascontiguousarray(vals[:gl])
        lam_l = vals[gl]
        s = np.ascontiguousarray(vals[gl + 1: gl + 2 + L])
        i = gl + 2 + L
        rule = self.lambda_rule
        if self.kind == "excited":
            n = self.n_target
            t = np.ascontiguousarray(vals[i: i + n + 1])
            i += n + 1
            if rule == "free":
                lam_n, e_n = vals[i], vals[i + 1]
            else:
                lam_n = _apply_rule(rule, lam_l)
                e_n = vals[i]
            return _k_excited(st.P1, st.P2, st.P3, st.P4, st.P5, st.P6, st.P7, st.P8,
                              g1, s, t, lam_l, lam_n, e_n, nout)
        ct = np.ascontiguousarray(vals[i: i + L + 1])
        i += L + 1
        if rule == "free":
            lam_t = vals[i]
            i += 1
        else:
            lam_t = _apply_rule(rule, lam_l)
        e_t = vals[i] if self.with_energy else 0.0 + 0.0j
        if self.with_energy:
            i += 1
        if self.reduced:
            core = _k_reduced(st.Q1, st.Q2, st.Q3, st.Q4, g1, s, ct, lam_l, nout)
        else:
            core = _k_excited(st.P1, st.P2, st.P3, st.P4, st.P5, st.P6, st.P7, st.P8,
                              g1, s, ct, lam_l, lam_t, e_t, nout)
        if not self.exclude_trivial:
            return core
        sep = np.sum((ct - s) ** 2)
        if rule == "free":
            sep = sep + (lam_t - lam_l) ** 2
        return np.append(core, vals[i] * sep - 1.0)

    # -- evaluation ----------------------------------------------------------
    def residual(self, assignment) -> np.ndarray:
        """Complex residual vector, one entry per power of h (fixed length)."""
        full = dict(self.fixed)
        for name in self.unknowns:
            full[name] = complex(assignment[name])
        return self._kernel(self._values_from(full))

    def residual_real(self, assignment) -> np.ndarray:
        r = self.residual(assignment)
        if self.real:
            return r.real.copy()
        return np.column_stack([r.real, r.imag]).ravel()

    def _resolve_slots(self, names, real: bool):
        slot = {}
        i = 0
        for n in names:
            slot[n] = i
            i += 1 if real else 2
        base = np.array([self.fixed.get(n, 0.0) for n in self._order], dtype=np.complex128)
        pos, re_idx, im_idx = [], [], []
        for j, n in enumerate(self._order):
            if n not in self.fixed:
                if n not in slot:
                    raise ValueError(f"binding misses unknown {n!r}")
                pos.append(j)
                re_idx.append(slot[n])
                im_idx.append(slot[n] + 1 if not real else 0)
        return (base, np.array(pos, dtype=int), np.array(re_idx, dtype=int),
                np.array(im_idx, dtype=int))

    def _batch_args(self):
        st = self._static
        rule = _RULE_CODES[self.lambda_rule]
        with_energy = True if self.kind == "excited" else self.with_energy
        return (st.P1, st.P2, st.P3, st.P4, st.P5, st.P6, st.P7, st.P8,
                st.Q1, st.Q2, st.Q3, st.Q4,
                self.g1_len, self.L, self.n_target, rule,
                self.reduced, with_energy, self.exclude_trivial, self.n_equations)

    def bind(self, names, real: bool):
        """Fast residual over a packed real vector laid out by ``names``.

        Returns a callable x -> real residual. ``names`` must cover this
        system's unknowns; extra names are ignored.
        """
        base, pos, re_idx, im_idx = self._resolve_slots(names, real)
        sys_real = self.real

        def fast(x: np.ndarray) -> np.ndarray:
            vals = base.copy()
            if real:
                vals[pos] = x[re_idx]
            else:
                vals[pos] = x[re_idx] + 1j * x[im_idx]
            r = self._kernel(vals)
            if sys_real:
                return r.real
            return np.column_stack([r.real, r.imag]).ravel()

        return fast

    def bind_batch(self, names, real: bool):
        """Row-batched variant of :meth:`bind`: (B, nx) -> (B, n_residual_real)."""
        base, pos, re_idx, im_idx = self._resolve_slots(names, real)
        args = self._batch_args()
        sys_real = self.real

        def fast_batch(xs: np.ndarray) -> np.ndarray:
            nb = xs.shape[0]
            vals = np.tile(base, (nb, 1))
            if real:
                vals[:, pos] = xs[:, re_idx]
            else:
                vals[:, pos] = xs[:, re_idx] + 1j * xs[:, im_idx]
            r = _k_batch(*args[:12], vals, *args[12:])
            if sys_real:
                return np.ascontiguousarray(r.real)
            out = np.empty((nb, 2 * r.shape[1]))
            out[:, 0::2] = r.real
            out[:, 1::2] = r.imag
            return out

        return fast_batch

    # -- structured-start support ---------------------------------------------
    def target_block(self) -> tuple[list[str], str | None]:
        """Names of the target-state coefficients and of its energy (if present)."""
        if self.kind == "excited":
            n = self.n_target
            return [f"c{n}_{m}" for m in range(n + 1)], f"E{n}"
        names = [f"ct_{m}" for m in range(self.L + 1)]
        return names, ("Et" if self.with_energy else None)

    def linear_pencil(self, core) -> tuple[np.ndarray, np.ndarray | None]:
        """(M, B) with residual = M @ t - E * (B @ t) over the target block.

        ``core`` must assign every parameter outside the target block. The
        residual is degree-1 homogeneous in the block and affine in E, so the
        pencil is exact, the deflation row (if any) excluded. B is None when
        the system carries no energy symbol (reduced companion form), in
        which case candidates are null vectors of M.
        """
        cnames, ename = self.target_block()
        full = dict(self.fixed)
        full.update({k: complex(v) for k, v in core.items()})
        for n in cnames:
            full[n] = 0.0
        nout = self.n_equations - (1 if self.exclude_trivial else 0)
        k = len(cnames)
        m_cols = np.zeros((nout, k), dtype=complex)
        b_cols = np.zeros((nout, k), dtype=complex) if ename else None
        for j, n in enumerate(cnames):
            full[n] = 1.0
            if ename:
                full[ename] = 0.0
            m_cols[:, j] = self._kernel(self._values_from(full), nout)
            if ename:
                full[ename] = 1.0
                b_cols[:, j] = -(self._kernel(self._values_from(full), nout) - m_cols[:, j])
                full[ename] = 0.0
            full[n] = 0.0
        return m_cols, b_cols

    # -- bookkeeping ---------------------------------------------------------
    @property
    def n_residual_real(self) -> int:
        return self.n_equations if self.real else 2 * self.n_equations

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "ground_degree": self.L,
            "target_degree": self.n_target,
            "unknowns": list(self.unknowns),
            "fixed": {k: [complex(v).real, complex(v).imag] for k, v in sorted(self.fixed.items())},
            "equations": self.n_equations,
            "real": self.real,
        }


def _infer_g1_len(frame, unknown, pins, g1_len):
    n = len(frame.g1.coeffs)
    for name in list(unknown) + list(pins):
        if name.startswith("g1_"):
            n = max(n, int(name.split("_")[1]) + 1)
    if g1_len is not None:
        if g1_len < n:
            raise ValueError("g1_len shorter than named g1 entries")
        n = g1_len
    return n


def _split_params(frame, ground, unknown, pins, g1_len):
    """Common pinned/unknown bookkeeping for the frame and ground symbols."""
    L = ground.degree
    unknown = set(unknown or ())
    pins = dict(pins or {})
    g1n = _infer_g1_len(frame, unknown, pins, g1_len)
    fixed = {}
    order = []
    g1base = frame.g1.as_array(g1n) if g1n else np.zeros(0, dtype=complex)
    for l in range(g1n):
        order.append(f"g1_{l}")
    order.append(f"lam{L}")
    for m in range(L + 1):
        order.append(f"c{L}_{m}")
    defaults = {f"g1_{l}": g1base[l] for l in range(g1n)}
    defaults[f"lam{L}"] = ground.lam
    for m in range(L + 1):
        defaults[f"c{L}_{m}"] = ground.c[m]
    return L, unknown, pins, fixed, order, defaults, g1n


def _finalize(order, defaults, unknown, pins, fixed):
    for name in order:
        if name in pins:
            unknown.discard(name)
            fixed[name] = complex(pins.pop(name))
        elif name in unknown:
            continue
        else:
            fixed[name] = complex(defaults[name])
    stray = (unknown | set(pins)) - set(order)
    if stray:
        raise ValueError(f"unrecognized parameter names: {sorted(stray)}")
    return tuple(n for n in order if n in unknown), fixed


def excited_system(frame: Frame, ground: Ansatz, n: int, *, lambda_shared: bool = False,
                   unknown=(), pins=None, real: bool = True, g1_len: int | None = None) -> ConstraintSystem:
    """Constraint system for an excited state of polynomial degree n > L.

    By default the new state's coefficients below the top one, its exponent
    (unless ``lambda_shared``) and its energy are unknowns, and the top
    coefficient is pinned to 1. Ground/frame symbols named in ``unknown``
    are freed as well; ``pins`` overrides any default value.
    """
    if ground.energy != 0:
        raise ValueError("ground state must sit at zero energy")
    L = ground.degree
    if n <= L:
        raise ValueError("excited degree must exceed the ground degree")
    L, unk, pins, fixed, order, defaults, g1n = _split_params(frame, ground, unknown, pins, g1_len)
    for m in range(n + 1):
        order.append(f"c{n}_{m}")
        defaults[f"c{n}_{m}"] = 1.0 if m == n else 0.0
        if m < n:
            unk.add(f"c{n}_{m}")
    if not lambda_shared:
        order.append(f"lam{n}")
        defaults[f"lam{n}"] = 0.0
        unk.add(f"lam{n}")
    order.append(f"E{n}")
    defaults[f"E{n}"] = 0.0
    unk.add(f"E{n}")
    unknowns, fixed = _finalize(order, defaults, unk, pins, fixed)
    return ConstraintSystem(kind="excited", frame=frame, L=L, n_target=n,
                            unknowns=unknowns, fixed=fixed, real=real,
                            g1_len=g1n, lambda_shared=lambda_shared)


def degenerate_system(frame: Frame, ground: Ansatz, *, tie_lambda: bool = False,
                      companion_energy: bool = True, exclude_trivial: bool = False,
                      unknown=(), pins=None, real: bool = False,
                      g1_len: int | None = None) -> ConstraintSystem:
    """Constraint system for a same-degree companion state.

    With ``tie_lambda=True`` and ``companion_energy=False`` this is the
    literal antisymmetric three-group system, which annihilates proportional
    coefficient sets; the defaults keep the companion exponent and energy
    offset free, which the complex two-state family requires.
    ``exclude_trivial`` appends a deflation equation mu * sum((ct-c)^2) = 1
    so multistart runs cannot settle on the companion-equals-ground manifold.
    """
    if ground.energy != 0:
        raise ValueError("ground state must sit at zero energy")
    if ground.degree < 1:
        raise ValueError("a degree-0 ground admits no independent companion")
    L, unk, pins, fixed, order, defaults, g1n = _split_params(frame, ground, unknown, pins, g1_len)
    for m in range(L + 1):
        order.append(f"ct_{m}")
        defaults[f"ct_{m}"] = 1.0 if m == L else 0.0
        if m < L:
            unk.add(f"ct_{m}")
    if not tie_lambda:
        order.append("lamt")
        defaults["lamt"] = 0.0
        unk.add("lamt")
    if companion_energy:
        order.append("Et")
        defaults["Et"] = 0.0
        unk.add("Et")
    if exclude_trivial:
        order.append("mu_sep")
        defaults["mu_sep"] = 1.0
        unk.add("mu_sep")
    reduced = tie_lambda and not companion_energy
    unknowns, fixed = _finalize(order, defaults, unk, pins, fixed)
    return ConstraintSystem(kind="degenerate", frame=frame, L=L, n_target=L,
                            unknowns=unknowns, fixed=fixed, real=real, g1_len=g1n,
                            tie_lambda=tie_lambda, with_energy=companion_energy,
                            reduced=reduced, exclude_trivial=exclude_trivial)


# -- real-vector packing -----------------------------------------------------

def real_coords(unknowns, real: bool):
    """Coordinate labels ("name", part) of the flattened real vector."""
    coords = []
    for name in unknowns:
        coords.append((name, "re"))
        if not real:
            coords.append((name, "im"))
    return coords


def pack_assignment(unknowns, real: bool, assignment) -> np.ndarray:
    out = []
    for name in unknowns:
        z = complex(assignment[name])
        out.append(z.real)
        if not real:
            out.append(z.imag)
    return np.array(out, dtype=float)


def unpack_assignment(unknowns, real: bool, x: np.ndarray) -> dict:
    out = {}
    i = 0
    for name in unknowns:
        if real:
            out[name] = complex(x[i], 0.0)
            i += 1
        else:
            out[name] = complex(x[i], x[i + 1])
            i += 2
    return out


def jacobian(system: ConstraintSystem, assignment, step: float = 1e-7) -> np.ndarray:
    """Forward-difference Jacobian of the real residual over real coordinates."""
    x0 = pack_assignment(system.unknowns, system.real, assignment)
    fast = system.bind(system.unknowns, system.real)
    r0 = fast(x0)
    J = np.zeros((len(r0), len(x0)))
    for j in range(len(x0)):
        h = step * max(1.0, abs(x0[j]))
        xj = x0.copy()
        xj[j] += h
        J[:, j] = (fast(xj) - r0) / h
    return J
