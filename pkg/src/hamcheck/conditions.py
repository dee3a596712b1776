"""Residual generators for the Hamiltonian conditions of ``P + omega``.

Families:

* ``W1``, ``W2`` -- ``omega`` is a Poisson tensor (skew-symmetry and Jacobi);
* ``M1`` .. ``M7`` -- the first-order part ``P`` is Hamiltonian;
* ``C1``, ``C2`` -- compatibility between ``P`` and ``omega`` through
  ``T^{ijk a} = g^{il a} d_l w^{jk} - b_l^{ij a} w^{lk} - b_l^{ik a} w^{jl}``.

Repeated ``l`` is summed.  ``sum_(a,b)`` is the exchange sum
``X(a, b) + X(b, a)``, ``sum_(i,j,k)`` the cyclic sum.  Each residual is an
exact :class:`~hamcheck.symkernel.Expr`; the operator is Hamiltonian iff all of
them vanish identically.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

from .operators import OperatorSpec
from .symkernel import ZERO, Expr, diff

__all__ = [
    "FAMILIES", "ConditionId", "ConditionReport", "Tensors",
    "residuals", "check_ultralocal", "check_mokhov", "check_compatibility",
    "verify", "t_tensor", "Reading", "TermEdit", "DEFAULT_READING", "PRINTED",
    "M6_TERMS", "C2_TERMS", "m6_variants", "c2_variants",
]

FAMILIES = ("W1", "W2", "M1", "M2", "M3", "M4", "M5", "M6", "M7", "C1", "C2")
GROUPS = {
    "W": ("W1", "W2"),
    "M": ("M1", "M2", "M3", "M4", "M5", "M6", "M7"),
    "C": ("C1", "C2"),
}
# index letters per family; field indices first, then dimensions
INDEX_NAMES = {
    "W1": ("i", "j"), "W2": ("i", "j", "k"),
    "M1": ("i", "j", "alpha"), "M2": ("i", "j", "k", "alpha"),
    "M3": ("i", "j", "k", "alpha", "beta"), "M4": ("i", "j", "k", "alpha", "beta"),
    "M5": ("i", "j", "k", "r", "alpha", "beta"), "M6": ("i", "j", "k", "r", "alpha", "beta"),
    "M7": ("i", "j", "k", "r", "s", "alpha", "beta"),
    "C1": ("i", "j", "k", "alpha"), "C2": ("i", "j", "k", "s", "alpha"),
}
_DIM_LETTERS = ("alpha", "beta")


@dataclass(frozen=True, order=True)
class ConditionId:
    family: str
    indices: tuple  # 0-based, in INDEX_NAMES order

    def sort_key(self):
        return FAMILIES.index(self.family), self.indices

    def named(self, fields, dims) -> dict:
        out = {}
        for name, v in zip(INDEX_NAMES[self.family], self.indices):
            out[name] = dims[v] if name in _DIM_LETTERS else fields[v]
        return out

    def label(self, fields=None, dims=None) -> str:
        if fields is None:
            body = ",".join(f"{n}={v + 1}" for n, v in zip(INDEX_NAMES[self.family], self.indices))
        else:
            body = ",".join(f"{n}={v}" for n, v in self.named(fields, dims).items())
        return f"{self.family}[{body}]"

    def __str__(self):
        return self.label()


def _sum(terms) -> Expr:
    total = ZERO
    for t in terms:
        if t.num.terms:
            total = total + t
    return total


def _mul(a: Expr, b: Expr) -> Expr:
    if not a.num.terms or not b.num.terms:
        return ZERO
    return a * b


class Tensors:
    """Cached coefficient arrays and derivatives of one operator."""

    def __init__(self, spec: OperatorSpec, reading: Reading | None = None):
        self.spec = spec
        self.reading = reading or DEFAULT_READING
        self.n = spec.n
        self.N = spec.N
        self.g = spec.g
        self.b = spec.b
        self.w = spec.omega
        self.rw = spec.rewrites
        self._y: dict = {}
        self._dy: dict = {}
        self._t: dict = {}
        self._dt: dict = {}

    def d(self, e: Expr, l: int) -> Expr:
        if not e.num.terms:
            return ZERO
        return diff(e, l, self.rw)

    @cached_property
    def dg(self):
        n = range(self.n)
        return [[[[self.d(self.g[a][i][j], k) for k in n] for j in n] for i in n] for a in range(self.N)]

    @cached_property
    def db(self):
        n = range(self.n)
        return [[[[[self.d(self.b[a][i][j][k], l) for l in n] for k in n] for j in n] for i in n]
                for a in range(self.N)]

    @cached_property
    def dw(self):
        n = range(self.n)
        return [[[self.d(self.w[i][j], l) for l in n] for j in n] for i in n]

    # -- M blocks ----------------------------------------------------------
    def X(self, i, j, k, a, c) -> Expr:
        """``g^{li a} b_l^{jk c} - g^{lj c} b_l^{ik a}``."""
        g, b = self.g, self.b
        return _sum(_mul(g[a][l][i], b[c][j][k][l]) - _mul(g[c][l][j], b[a][i][k][l])
                    for l in range(self.n))

    def Y(self, i, j, k, r, a, c) -> Expr:
        """``g^{li a}(d_r b_l^{jk c} - d_l b_r^{jk c}) + b_l^{ij a} b_r^{lk c} - b_l^{ik a} b_r^{lj c}``."""
        key = (i, j, k, r, a, c)
        hit = self._y.get(key)
        if hit is not None:
            return hit
        g, b, db = self.g, self.b, self.db
        out = _sum(
            _mul(g[a][l][i], db[c][j][k][l][r] - db[c][j][k][r][l])
            + _mul(b[a][i][j][l], b[c][l][k][r])
            - _mul(b[a][i][k][l], b[c][l][j][r])
            for l in range(self.n))
        self._y[key] = out
        return out

    def dY(self, i, j, k, r, a, c, s) -> Expr:
        key = (i, j, k, r, a, c, s)
        hit = self._dy.get(key)
        if hit is None:
            hit = self._dy[key] = self.d(self.Y(i, j, k, r, a, c), s)
        return hit

    # -- compatibility -------------------------------------------------------
    def T(self, i, j, k, a) -> Expr:
        key = (i, j, k, a)
        hit = self._t.get(key)
        if hit is not None:
            return hit
        g, b, w, dw = self.g, self.b, self.w, self.dw
        out = _sum(
            _mul(g[a][i][l], dw[j][k][l]) - _mul(b[a][i][j][l], w[l][k]) - _mul(b[a][i][k][l], w[j][l])
            for l in range(self.n))
        self._t[key] = out
        return out

    def dT(self, i, j, k, a, s) -> Expr:
        key = (i, j, k, a, s)
        hit = self._dt.get(key)
        if hit is None:
            hit = self._dt[key] = self.d(self.T(i, j, k, a), s)
        return hit


def t_tensor(spec: OperatorSpec) -> dict:
    """All components ``T^{ijk a}`` keyed by ``(i, j, k, a)``."""
    t = Tensors(spec)
    n, N = spec.n, spec.N
    return {(i, j, k, a): t.T(i, j, k, a)
            for i in range(n) for j in range(n) for k in range(n) for a in range(N)}


# ---------------------------------------------------------------------------
# per-family generators
# ---------------------------------------------------------------------------

def _w1(t: Tensors, full: bool):
    n = t.n
    for i in range(n):
        for j in range(n):
            if full or i <= j:
                yield (i, j), t.w[i][j] + t.w[j][i]


def _w2(t: Tensors, full: bool):
    n, w, dw = t.n, t.w, t.dw
    for i, j, k in itertools.product(range(n), repeat=3):
        if not full and not i < j < k:
            continue
        yield (i, j, k), _sum(
            _mul(w[i][s], dw[j][k][s]) + _mul(w[j][s], dw[k][i][s]) + _mul(w[k][s], dw[i][j][s])
            for s in range(n))


def _m1(t: Tensors, full: bool):
    for a in range(t.N):
        for i in range(t.n):
            for j in range(t.n):
                if full or i < j:
                    yield (i, j, a), t.g[a][i][j] - t.g[a][j][i]


def _m2(t: Tensors, full: bool):
    g, b, dg = t.g, t.b, t.dg
    for i, j, k in itertools.product(range(t.n), repeat=3):
        for a in range(t.N):
            yield (i, j, k, a), dg[a][i][j][k] - b[a][i][j][k] - b[a][j][i][k]


def _m3(t: Tensors, full: bool):
    for i, j, k in itertools.product(range(t.n), repeat=3):
        for a, c in itertools.product(range(t.N), repeat=2):
            if full or a <= c:
                yield (i, j, k, a, c), t.X(i, j, k, a, c) + t.X(i, j, k, c, a)


def _m4(t: Tensors, full: bool):
    for i, j, k in itertools.product(range(t.n), repeat=3):
        for a, c in itertools.product(range(t.N), repeat=2):
            yield (i, j, k, a, c), t.X(i, j, k, a, c) + t.X(j, k, i, a, c) + t.X(k, i, j, a, c)


def _m5(t: Tensors, full: bool):
    for i, j, k, r in itertools.product(range(t.n), repeat=4):
        for a, c in itertools.product(range(t.N), repeat=2):
            if full or a <= c:
                yield (i, j, k, r, a, c), t.Y(i, j, k, r, a, c) + t.Y(i, j, k, r, c, a)


# Terms of M6 as (sign, first factor, second factor).  A factor is
# (array, dim slot, upper/lower index letters); "a" is alpha, "c" is beta.
M6_TERMS = (
    (+1, ("g", "c", "li"), ("db", "a", "jkrl")),
    (-1, ("g", "a", "lj"), ("db", "c", "ikrl")),
    (-1, ("b", "c", "ijl"), ("b", "a", "lkr")),
    (-1, ("b", "a", "ikl"), ("b", "c", "ljr")),
    (+1, ("b", "a", "jil"), ("b", "c", "lkr")),
    (+1, ("b", "a", "jkl"), ("b", "c", "ilr")),
)

# C2 right-hand side terms, same layout; "curl" is db_s,l - db_l,s.
C2_TERMS = (
    (+1, ("b", "a", "lks"), ("dw", None, "ijl")),
    (+1, ("curl", "a", "kisl"), ("w", None, "lj")),
)


@dataclass(frozen=True)
class TermEdit:
    """A single-term modification of a printed condition.

    ``term`` is 1-based.  ``swap_dims`` exchanges alpha and beta in the term,
    ``transpose`` swaps the two upper indices of the second factor (of the
    first factor for C2, whose second factor is an omega array).
    """
    term: int
    negate: bool = False
    swap_dims: bool = False
    transpose: bool = False

    def apply(self, terms, second=True):
        out = list(terms)
        sign, f1, f2 = out[self.term - 1]
        if self.negate:
            sign = -sign
        if self.swap_dims:
            sw = {"a": "c", "c": "a", None: None}
            f1 = (f1[0], sw[f1[1]], f1[2])
            f2 = (f2[0], sw[f2[1]], f2[2])
        if self.transpose:
            tgt = f2 if second else f1
            idx = tgt[2][1] + tgt[2][0] + tgt[2][2:]
            if second:
                f2 = (tgt[0], tgt[1], idx)
            else:
                f1 = (tgt[0], tgt[1], idx)
        out[self.term - 1] = (sign, f1, f2)
        return tuple(out)


@dataclass(frozen=True)
class Reading:
    """Which transcription of M6 and C2 the generators use.

    The default corrects the fourth M6 term to ``b_l^{ik beta} b_r^{jl alpha}``
    and wraps the right-hand side of C2 in a cyclic sum over ``(i, j, k)``.
    :data:`PRINTED` reproduces the conditions literally.
    """
    m6_edits: tuple = (TermEdit(4, swap_dims=True, transpose=True),)
    c2_cyclic: bool = True
    c2_edits: tuple = ()

    def m6_terms(self):
        terms = M6_TERMS
        for e in self.m6_edits:
            terms = e.apply(terms)
        return terms

    def c2_terms(self):
        terms = C2_TERMS
        for e in self.c2_edits:
            terms = e.apply(terms, second=False)
        return terms


DEFAULT_READING = Reading()
PRINTED = Reading(m6_edits=(), c2_cyclic=False)


def _single_edits(count: int):
    for term in range(1, count + 1):
        for neg, swap, tr in itertools.product((False, True), repeat=3):
            if neg or swap or tr:
                yield TermEdit(term, neg, swap, tr)


def m6_variants():
    """The printed M6 plus every single-term edit of it (43 readings)."""
    out = [PRINTED]
    out += [Reading(m6_edits=(e,), c2_cyclic=False) for e in _single_edits(len(M6_TERMS))]
    return out


def c2_variants():
    """Printed C2 terms, with or without the cyclic sum, plus single-term edits."""
    out = []
    for cyc in (False, True):
        out.append(Reading(c2_cyclic=cyc))
        out += [Reading(c2_cyclic=cyc, c2_edits=(e,))
                for e in _single_edits(len(C2_TERMS)) if not e.swap_dims]
    return out


def _factor(t: Tensors, f, env):
    name, dim, letters = f
    idx = [env[x] for x in letters]
    if name == "g":
        return t.g[env[dim]][idx[0]][idx[1]]
    if name == "b":
        return t.b[env[dim]][idx[0]][idx[1]][idx[2]]
    if name == "db":
        return t.db[env[dim]][idx[0]][idx[1]][idx[2]][idx[3]]
    if name == "curl":
        row = t.db[env[dim]][idx[0]][idx[1]]
        return row[idx[2]][idx[3]] - row[idx[3]][idx[2]]
    if name == "dw":
        return t.dw[idx[0]][idx[1]][idx[2]]
    return t.w[idx[0]][idx[1]]


def _eval_terms(t: Tensors, terms, env) -> Expr:
    out = ZERO
    for l in range(t.n):
        env["l"] = l
        for sign, f1, f2 in terms:
            p = _mul(_factor(t, f1, env), _factor(t, f2, env))
            if p.num.terms:
                out = out + p if sign > 0 else out - p
    return out


def _m6(t: Tensors, full: bool):
    terms = t.reading.m6_terms()
    for i, j, k, r in itertools.product(range(t.n), repeat=4):
        for a, c in itertools.product(range(t.N), repeat=2):
            env = dict(i=i, j=j, k=k, r=r, a=a, c=c)
            yield (i, j, k, r, a, c), _eval_terms(t, terms, env)


def _m7_cyc(t: Tensors, i, j, k, r, s, a, c) -> Expr:
    b, db, n = t.b, t.db, t.n
    out = ZERO
    for (p, q, m) in ((i, j, k), (j, k, i), (k, i, j)):
        out = out + _sum(
            _mul(b[c][l][p][r], db[a][q][m][s][l] - db[a][q][m][l][s])
            + _mul(b[a][l][p][s], db[c][q][m][r][l] - db[c][q][m][l][r])
            for l in range(n))
    return out


def _m7(t: Tensors, full: bool):
    n = t.n
    for i, j, k, r, s in itertools.product(range(n), repeat=5):
        for a, c in itertools.product(range(t.N), repeat=2):
            yield (i, j, k, r, s, a, c), (
                t.dY(i, j, k, r, a, c, s) + t.dY(i, j, k, s, c, a, r) + _m7_cyc(t, i, j, k, r, s, a, c))


def _c1(t: Tensors, full: bool):
    for i, j, k in itertools.product(range(t.n), repeat=3):
        for a in range(t.N):
            yield (i, j, k, a), t.T(i, j, k, a) - t.T(k, i, j, a)


def _c2(t: Tensors, full: bool):
    terms = t.reading.c2_terms()
    shifts = ((0, 1, 2), (2, 0, 1), (1, 2, 0)) if t.reading.c2_cyclic else ((0, 1, 2),)
    for i, j, k, s in itertools.product(range(t.n), repeat=4):
        for a in range(t.N):
            rhs = ZERO
            for p in shifts:
                # cyclic relabelling i -> k -> j -> i
                ijk = (i, j, k)
                env = dict(i=ijk[p[0]], j=ijk[p[1]], k=ijk[p[2]], s=s, a=a)
                rhs = rhs + _eval_terms(t, terms, env)
            yield (i, j, k, s, a), t.dT(i, j, k, a, s) - rhs


_GENERATORS = {
    "W1": _w1, "W2": _w2, "M1": _m1, "M2": _m2, "M3": _m3, "M4": _m4,
    "M5": _m5, "M6": _m6, "M7": _m7, "C1": _c1, "C2": _c2,
}


def residuals(spec: OperatorSpec, families=FAMILIES, full_range: bool = False,
              tensors: Tensors | None = None, reading: Reading | None = None):
    """Yield ``(ConditionId, residual)`` for every generated index tuple."""
    t = tensors or Tensors(spec, reading)
    for fam in families:
        for idx, res in _GENERATORS[fam](t, full_range):
            yield ConditionId(fam, idx), res


def _nonzero(spec, families, full_range, reading=None) -> dict:
    return {cid: r for cid, r in residuals(spec, families, full_range, reading=reading)
            if not r.is_zero()}


def check_ultralocal(spec: OperatorSpec, full_range: bool = False) -> dict:
    return _nonzero(spec, GROUPS["W"], full_range)


def check_mokhov(spec: OperatorSpec, full_range: bool = False, reading: Reading | None = None) -> dict:
    return _nonzero(spec, GROUPS["M"], full_range, reading)


def check_compatibility(spec: OperatorSpec, full_range: bool = False, reading: Reading | None = None) -> dict:
    return _nonzero(spec, GROUPS["C"], full_range, reading)


@dataclass
class ConditionReport:
    name: str
    fields: tuple
    dims: tuple
    residuals: dict = field(default_factory=dict)   # ConditionId -> nonzero Expr
    checked: dict = field(default_factory=dict)     # family -> number of tuples tested
    families: tuple = FAMILIES

    def _ok(self, group) -> bool:
        return not any(cid.family in GROUPS[group] for cid in self.residuals)

    @property
    def ultralocal_ok(self) -> bool:
        return self._ok("W")

    @property
    def leading_ok(self) -> bool:
        return self._ok("M")

    @property
    def compatibility_ok(self) -> bool:
        return self._ok("C")

    @property
    def hamiltonian(self) -> bool:
        return not self.residuals

    def failing(self) -> list:
        return sorted(self.residuals, key=ConditionId.sort_key)

    def first_failure(self) -> ConditionId | None:
        f = self.failing()
        return f[0] if f else None

    def family_status(self) -> dict:
        out = {}
        for fam in self.families:
            out[fam] = not any(cid.family == fam for cid in self.residuals)
        return out


def _expand_families(families) -> tuple:
    if families is None:
        return FAMILIES
    out = []
    for f in families:
        out.extend(GROUPS.get(f, (f,)))
    bad = [f for f in out if f not in FAMILIES]
    if bad:
        raise ValueError(f"unknown condition families: {bad}")
    return tuple(f for f in FAMILIES if f in out)


def verify(spec: OperatorSpec, families=None, full_range: bool = False, stop_early: bool = False,
           reading: Reading | None = None) -> ConditionReport:
    """Check every requested condition family and collect nonzero residuals.

    ``families`` accepts family names (``"M6"``) or groups (``"W"``, ``"M"``,
    ``"C"``).  With ``stop_early`` generation stops at the first nonzero
    residual.  ``reading`` selects the transcription of M6 and C2.
    """
    fams = _expand_families(families)
    report = ConditionReport(spec.name, spec.space.fields, spec.space.dims, families=fams)
    t = Tensors(spec, reading)
    for fam in fams:
        count = 0
        for idx, res in _GENERATORS[fam](t, full_range):
            count += 1
            if not res.is_zero():
                report.residuals[ConditionId(fam, idx)] = res
                if stop_early:
                    report.checked[fam] = count
                    return report
        report.checked[fam] = count
    return report
