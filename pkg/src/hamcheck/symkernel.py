"""Exact rational-function arithmetic over algebraically independent atoms.

An :class:`Expr` is a quotient ``num / den`` where ``num`` is a
:class:`Polynomial` with exact rational coefficients and ``den`` is a
product of primitive polynomial factors, each with a positive leading
coefficient.  Atoms are field variables ``u^i``, jet variables ``u^k_a``,
scalar parameters and partial derivatives of abstract functions.  Since the
atoms are algebraically independent, an expression is zero exactly when its
numerator polynomial has no terms.

Field and dimension indices are 0-based throughout.
"""
from __future__ import annotations

import functools
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable, Mapping, Union

__all__ = [
    "Atom", "FieldVar", "JetVar", "Param", "FuncDeriv",
    "Polynomial", "Expr", "RewriteTable", "ZeroDivisionExprError",
    "NonLinearJetError", "SubstitutionError",
    "const", "var", "jet", "param", "func", "ZERO", "ONE",
    "add", "mul", "div", "neg", "int_pow", "diff", "is_zero",
    "substitute", "coeff_of_jet", "jet_free_part", "atoms_of",
]


class ZeroDivisionExprError(ZeroDivisionError):
    pass


class NonLinearJetError(ValueError):
    pass


class SubstitutionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# atoms
# ---------------------------------------------------------------------------

class Atom(tuple):
    """Base class of all atoms.

    Atoms are tuples whose first slot is a variant rank, so the natural
    tuple order is the canonical total order (rank first, then indices or
    names).
    """
    __slots__ = ()
    rank = -1

    def __repr__(self):
        return f"{type(self).__name__}{tuple(self[1:])!r}"


class FieldVar(Atom):
    __slots__ = ()
    rank = 0

    def __new__(cls, index: int):
        return tuple.__new__(cls, (0, index))

    @property
    def index(self) -> int:
        return self[1]


class JetVar(Atom):
    __slots__ = ()
    rank = 1

    def __new__(cls, field: int, dim: int):
        return tuple.__new__(cls, (1, field, dim))

    @property
    def field(self) -> int:
        return self[1]

    @property
    def dim(self) -> int:
        return self[2]


class Param(Atom):
    __slots__ = ()
    rank = 2

    def __new__(cls, name: str):
        return tuple.__new__(cls, (2, name))

    @property
    def name(self) -> str:
        return self[1]


class FuncDeriv(Atom):
    """Partial derivative ``f_D`` of an abstract function ``f(args)``.

    ``args`` is a tuple of field indices; ``deriv`` is a sorted multiset of
    field indices drawn from ``args``.
    """
    __slots__ = ()
    rank = 3

    def __new__(cls, name: str, args: Iterable[int], deriv: Iterable[int] = ()):
        args = tuple(args)
        deriv = tuple(sorted(deriv))
        if len(set(args)) != len(args):
            raise ValueError(f"repeated argument in {name}{args}")
        for d in deriv:
            if d not in args:
                raise ValueError(f"derivative index {d} is not an argument of {name}{args}")
        return tuple.__new__(cls, (3, name, args, deriv))

    @property
    def name(self) -> str:
        return self[1]

    @property
    def args(self) -> tuple:
        return self[2]

    @property
    def deriv(self) -> tuple:
        return self[3]

    @property
    def base(self) -> "FuncDeriv":
        return FuncDeriv(self[1], self[2]) if self[3] else self

    def derivative(self, i: int) -> "FuncDeriv | None":
        if i not in self[2]:
            return None
        return FuncDeriv(self[1], self[2], self[3] + (i,))


# ---------------------------------------------------------------------------
# polynomials
# ---------------------------------------------------------------------------

Monomial = tuple  # tuple of (atom, exponent) pairs sorted by atom
Number = Union[int, Fraction]


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    d = dict(m1)
    for a, e in m2:
        d[a] = d.get(a, 0) + e
    return tuple(sorted(d.items()))


def _lex_cmp(m1: Monomial, m2: Monomial) -> int:
    # lex order with smaller atoms as higher-priority variables
    for (a1, e1), (a2, e2) in zip(m1, m2):
        if a1 != a2:
            return 1 if a1 < a2 else -1
        if e1 != e2:
            return 1 if e1 > e2 else -1
    return (len(m1) > len(m2)) - (len(m1) < len(m2))


_lex_key = functools.cmp_to_key(_lex_cmp)


class Polynomial:
    """Sparse polynomial: a dict from monomials to nonzero Fractions."""

    __slots__ = ("terms", "_key")

    def __init__(self, terms: Mapping[Monomial, Number] | None = None):
        self.terms = {m: Fraction(c) for m, c in (terms or {}).items() if c}
        self._key = None

    @classmethod
    def _raw(cls, terms: dict) -> "Polynomial":
        p = object.__new__(cls)
        p.terms = terms
        p._key = None
        return p

    @classmethod
    def constant(cls, c: Number) -> "Polynomial":
        return cls._raw({(): Fraction(c)} if c else {})

    @classmethod
    def atom(cls, a: Atom) -> "Polynomial":
        return cls._raw({((a, 1),): Fraction(1)})

    def key(self) -> tuple:
        if self._key is None:
            self._key = tuple(sorted(self.terms.items()))
        return self._key

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(self.key())

    def __lt__(self, other):
        return self.key() < other.key()

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"Polynomial({dict(self.key())!r})"

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def atoms(self) -> set:
        return {a for m in self.terms for a, _ in m}

    def __add__(self, other: "Polynomial") -> "Polynomial":
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m)
            if s is None:
                out[m] = c
            else:
                s += c
                if s:
                    out[m] = s
                else:
                    del out[m]
        return Polynomial._raw(out)

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        if not self.terms or not other.terms:
            return Polynomial._raw({})
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = _mono_mul(m1, m2)
                s = out.get(m)
                out[m] = c1 * c2 if s is None else s + c1 * c2
        return Polynomial._raw({m: c for m, c in out.items() if c})

    def scale(self, c: Number) -> "Polynomial":
        if not c:
            return Polynomial._raw({})
        c = Fraction(c)
        return Polynomial._raw({m: v * c for m, v in self.terms.items()})

    def __pow__(self, m: int) -> "Polynomial":
        result = Polynomial.constant(1)
        base = self
        while m:
            if m & 1:
                result = result * base
            base = base * base
            m >>= 1
        return result

    def leading(self) -> tuple:
        """Leading (monomial, coefficient) in lex order."""
        m = max(self.terms, key=_lex_key)
        return m, self.terms[m]

    def diff(self, i: int) -> "Polynomial":
        """Raw partial derivative w.r.t. field ``i`` (no rewrites)."""
        out: dict = {}
        for mono, c in self.terms.items():
            for pos, (a, e) in enumerate(mono):
                r = a[0]
                if r == 0:
                    if a[1] != i:
                        continue
                    new = None
                elif r == 3:
                    if i not in a[2]:
                        continue
                    new = FuncDeriv(a[1], a[2], a[3] + (i,))
                else:
                    continue
                rest = mono[:pos] + (((a, e - 1),) if e > 1 else ()) + mono[pos + 1:]
                if new is not None:
                    rest = _mono_mul(rest, ((new, 1),))
                coef = c * e
                s = out.get(rest)
                out[rest] = coef if s is None else s + coef
        return Polynomial._raw({m: c for m, c in out.items() if c})

    def content_split(self):
        """Split into ``scalar * monomial * primitive``.

        Returns ``(scalar, {atom: exp}, primitive)`` where ``primitive`` has
        coprime integer coefficients, positive leading coefficient and no
        monomial factor.
        """
        terms = self.terms
        if not terms:
            raise ZeroDivisionExprError("zero denominator")
        monos = iter(terms)
        common = dict(next(monos))
        for m in monos:
            if not common:
                break
            md = dict(m)
            common = {a: min(e, md[a]) for a, e in common.items() if a in md}
        den_lcm = 1
        num_gcd = 0
        for c in terms.values():
            den_lcm = den_lcm * c.denominator // gcd(den_lcm, c.denominator)
            num_gcd = gcd(num_gcd, c.numerator)
        scalar = Fraction(num_gcd, den_lcm)
        out = {}
        for m, c in terms.items():
            if common:
                m = tuple((a, e - common.get(a, 0)) for a, e in m if e != common.get(a, 0))
            out[m] = c / scalar
        prim = Polynomial._raw(out)
        if prim.leading()[1] < 0:
            prim = -prim
            scalar = -scalar
        return scalar, common, prim

    def exact_div(self, f: "Polynomial") -> "Polynomial | None":
        """Return ``self / f`` if ``f`` divides exactly, else None."""
        lm_f, lc_f = f.leading()
        lm_f_d = dict(lm_f)
        rem = self
        quot: dict = {}
        while rem.terms:
            lm, lc = rem.leading()
            lmd = dict(lm)
            if any(lmd.get(a, 0) < e for a, e in lm_f_d.items()):
                return None
            qm = tuple((a, e - lm_f_d.get(a, 0)) for a, e in lm if e != lm_f_d.get(a, 0))
            qc = lc / lc_f
            quot[qm] = quot.get(qm, 0) + qc
            rem = rem - Polynomial._raw({qm: qc}) * f
        return Polynomial._raw({m: c for m, c in quot.items() if c})


# ---------------------------------------------------------------------------
# rational expressions
# ---------------------------------------------------------------------------

def _single_atom(f: Polynomial):
    # a primitive factor that is exactly one atom to the first power
    if len(f.terms) == 1:
        (m,) = f.terms
        if len(m) == 1 and m[0][1] == 1:
            return m[0][0]
    return None


class Expr:
    """Immutable exact rational expression in normal form.

    ``den`` is a tuple of ``(factor, exponent)`` pairs sorted by factor; each
    factor is a primitive polynomial with positive leading coefficient.
    Every rational scalar lives in the numerator.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Polynomial, den: Mapping[Polynomial, int] | Iterable = ()):
        den = dict(den)
        n, d = _normalize(num, den)
        self.num = n
        self.den = d

    @classmethod
    def _raw(cls, num: Polynomial, den: tuple) -> "Expr":
        e = object.__new__(cls)
        e.num = num
        e.den = den
        return e

    @classmethod
    def from_poly(cls, p: Polynomial) -> "Expr":
        return cls._raw(p, ())

    # -- predicates --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num.terms

    def is_constant(self) -> bool:
        return not self.den and self.num.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("expression is not constant")
        return self.num.terms.get((), Fraction(0))

    def atoms(self) -> set:
        s = self.num.atoms()
        for f, _ in self.den:
            s |= f.atoms()
        return s

    def has_jets(self) -> bool:
        return any(a[0] == 1 for a in self.atoms())

    def same_form(self, other: "Expr") -> bool:
        """Bit-exact structural equality of normal forms."""
        return self.num == other.num and self.den == other.den

    def den_poly(self) -> Polynomial:
        p = Polynomial.constant(1)
        for f, e in self.den:
            p = p * f ** e
        return p

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return add(self, neg(other))

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return add(other, neg(self))

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return div(self, other)

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, m):
        if not isinstance(m, int):
            return NotImplemented
        return int_pow(self, m)

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return other
        if self.same_form(other):
            return True
        return add(self, neg(other)).is_zero()

    __hash__ = None

    def __repr__(self):
        from .dsl import expr_to_text
        return f"Expr({expr_to_text(self)})"


def _coerce(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, Fraction)):
        return const(x)
    if isinstance(x, Atom):
        return Expr.from_poly(Polynomial.atom(x))
    return NotImplemented


def _normalize(num: Polynomial, den: dict) -> tuple:
    if not num.terms:
        return num, ()
    out = []
    for f, e in den.items():
        if e <= 0:
            continue
        a = _single_atom(f)
        if a is not None:
            lo = e
            for m in num.terms:
                k = 0
                for b, eb in m:
                    if b == a:
                        k = eb
                        break
                if k < lo:
                    lo = k
                    if not lo:
                        break
            if lo:
                new = {}
                for m, c in num.terms.items():
                    nm = tuple((b, eb - lo) if b == a else (b, eb) for b, eb in m)
                    new[tuple(p for p in nm if p[1])] = c
                num = Polynomial._raw(new)
                e -= lo
        else:
            while e:
                q = num.exact_div(f)
                if q is None:
                    break
                num = q
                e -= 1
        if e:
            out.append((f, e))
    out.sort(key=lambda fe: fe[0].key())
    return num, tuple(out)


def _merge_den(d1: tuple, d2: tuple) -> dict:
    out = dict(d1)
    for f, e in d2:
        out[f] = out.get(f, 0) + e
    return out


def const(c: Number) -> Expr:
    return Expr._raw(Polynomial.constant(c), ())


ZERO = const(0)
ONE = const(1)


def var(i: int) -> Expr:
    return Expr._raw(Polynomial.atom(FieldVar(i)), ())


def jet(k: int, dim: int) -> Expr:
    return Expr._raw(Polynomial.atom(JetVar(k, dim)), ())


def param(name: str) -> Expr:
    return Expr._raw(Polynomial.atom(Param(name)), ())


def func(name: str, args: Iterable[int], deriv: Iterable[int] = ()) -> Expr:
    return Expr._raw(Polynomial.atom(FuncDeriv(name, args, deriv)), ())


def add(a: Expr, b: Expr) -> Expr:
    if not a.num.terms:
        return b
    if not b.num.terms:
        return a
    if a.den == b.den:
        return Expr(a.num + b.num, a.den)
    da = dict(a.den)
    db = dict(b.den)
    common = dict(da)
    for f, e in db.items():
        if e > common.get(f, 0):
            common[f] = e
    na = a.num
    for f, e in common.items():
        k = e - da.get(f, 0)
        if k:
            na = na * f ** k
    nb = b.num
    for f, e in common.items():
        k = e - db.get(f, 0)
        if k:
            nb = nb * f ** k
    return Expr(na + nb, common)


def neg(a: Expr) -> Expr:
    return Expr._raw(-a.num, a.den)


def mul(a: Expr, b: Expr) -> Expr:
    if not a.num.terms or not b.num.terms:
        return ZERO
    if not a.den and not b.den:
        return Expr._raw(a.num * b.num, ())
    return Expr(a.num * b.num, _merge_den(a.den, b.den))


def _factor_den(p: Polynomial) -> tuple:
    """Split a numerator used as divisor into (scalar, factor dict)."""
    scalar, mono, prim = p.content_split()
    factors = {Polynomial.atom(a): e for a, e in mono.items()}
    if not prim.is_constant():
        factors[prim] = factors.get(prim, 0) + 1
    return scalar, factors


def div(a: Expr, b: Expr) -> Expr:
    if not b.num.terms:
        raise ZeroDivisionExprError("zero denominator")
    if not a.num.terms:
        return ZERO
    scalar, factors = _factor_den(b.num)
    num = a.num.scale(1 / scalar)
    for f, e in b.den:
        num = num * f ** e
    return Expr(num, _merge_den(a.den, tuple(factors.items())))


def int_pow(a: Expr, m: int) -> Expr:
    if m < 0:
        return div(ONE, int_pow(a, -m))
    if m == 0:
        return ONE
    return Expr._raw(a.num ** m, tuple((f, e * m) for f, e in a.den))


# ---------------------------------------------------------------------------
# rewrite rules
# ---------------------------------------------------------------------------

class RewriteTable:
    """Definitional substitutions for derivatives of abstract functions.

    A rule ``f_D -> rhs`` also fixes every higher derivative ``f_{D+E}`` as
    the corresponding derivative of ``rhs``.
    """

    MAX_DEPTH = 32

    def __init__(self, rules: Mapping[FuncDeriv, Expr] | None = None):
        self.rules: dict = {}
        self._by_func: dict = {}
        for lhs, rhs in (rules or {}).items():
            if not isinstance(lhs, FuncDeriv) or not lhs.deriv:
                raise ValueError(f"rewrite left-hand side must be a function derivative, got {lhs!r}")
            self.rules[lhs] = rhs
            self._by_func.setdefault((lhs.name, lhs.args), []).append(lhs)
        for v in self._by_func.values():
            v.sort()
        self._cache: dict = {}
        for lhs in self.rules:
            self.resolve(lhs)  # raises on cycles

    def __bool__(self):
        return bool(self.rules)

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(sorted(self.rules.items()))

    def merged(self, other: "RewriteTable | None") -> "RewriteTable":
        if not other:
            return self
        rules = dict(self.rules)
        rules.update(other.rules)
        return RewriteTable(rules)

    def match(self, a: Atom):
        if a[0] != 3 or not a[3]:
            return None
        cands = self._by_func.get((a[1], a[2]))
        if not cands:
            return None
        for lhs in cands:
            rest = list(a[3])
            try:
                for d in lhs.deriv:
                    rest.remove(d)
            except ValueError:
                continue
            return lhs, rest
        return None

    def resolve(self, a: Atom, depth: int = 0) -> Expr | None:
        """Fully rewritten image of atom ``a`` or None if no rule applies."""
        if a in self._cache:
            return self._cache[a]
        hit = self.match(a)
        if hit is None:
            return None
        if depth > self.MAX_DEPTH:
            raise ValueError("cyclic rewrite rules")
        lhs, rest = hit
        e = self.apply(self.rules[lhs], depth + 1)
        for i in rest:
            e = self.apply(_raw_diff(e, i), depth + 1)
        self._cache[a] = e
        return e

    def apply(self, e: Expr, depth: int = 0) -> Expr:
        if not self.rules:
            return e
        hits = {}
        for a in e.atoms():
            if a[0] == 3 and a[3]:
                r = self.resolve(a, depth)
                if r is not None:
                    hits[a] = r
        if not hits:
            return e
        return _subst_atoms(e, hits)


# ---------------------------------------------------------------------------
# calculus and substitution
# ---------------------------------------------------------------------------

def _raw_diff(e: Expr, i: int) -> Expr:
    dn = e.num.diff(i)
    if not e.den:
        return Expr._raw(dn, ())
    result = Expr(dn, e.den) if dn.terms else ZERO
    for f, k in e.den:
        df = f.diff(i)
        if not df.terms:
            continue
        den = dict(e.den)
        den[f] += 1
        result = add(result, Expr((e.num * df).scale(-k), den))
    return result


def diff(e: Expr, i: int, rewrites: RewriteTable | None = None) -> Expr:
    """Partial derivative of ``e`` with respect to the field variable ``u^i``."""
    d = _raw_diff(e, i)
    if rewrites:
        d = rewrites.apply(d)
    return d


def is_zero(e: Expr, rewrites: RewriteTable | None = None) -> bool:
    if rewrites:
        e = rewrites.apply(e)
    return e.is_zero()


def atoms_of(e: Expr) -> set:
    return e.atoms()


def _eval_poly(p: Polynomial, images: Mapping[Atom, Expr], cache: dict) -> Expr:
    # evaluate polynomial with atoms replaced by images; untouched monomials stay polynomial
    plain: dict = {}
    result = ZERO
    for m, c in p.terms.items():
        if not any(a in images for a, _ in m):
            plain[m] = c
            continue
        term = const(c)
        rest = []
        for a, e in m:
            if a in images:
                key = (a, e)
                img = cache.get(key)
                if img is None:
                    img = int_pow(images[a], e)
                    cache[key] = img
                term = mul(term, img)
            else:
                rest.append((a, e))
        if rest:
            term = mul(term, Expr._raw(Polynomial._raw({tuple(rest): Fraction(1)}), ()))
        result = add(result, term)
    if plain:
        result = add(result, Expr._raw(Polynomial._raw(plain), ()))
    return result


def _subst_atoms(e: Expr, images: Mapping[Atom, Expr]) -> Expr:
    cache: dict = {}
    out = _eval_poly(e.num, images, cache)
    for f, k in e.den:
        if any(a in images for a in f.atoms()):
            img = _eval_poly(f, images, cache)
            for _ in range(k):
                out = div(out, img)
        else:
            out = mul(out, Expr(Polynomial.constant(1), {f: k}))
    return out


def substitute(e: Expr, bindings: Mapping[Atom, Expr], rewrites: RewriteTable | None = None) -> Expr:
    """Substitute atoms by expressions.

    Binding a base function atom ``F`` (no derivative indices) also maps each
    derivative ``F_D`` to the matching derivative of the image.  Binding a
    field variable is refused if some remaining function depends on it.
    """
    bindings = {a: _coerce(v) for a, v in bindings.items()}
    for a, v in bindings.items():
        if not isinstance(a, Atom):
            raise SubstitutionError(f"binding key {a!r} is not an atom")
        if a[0] == 1:
            raise SubstitutionError("jet variables cannot be substituted")
    present = e.atoms()
    bases = {a for a in bindings if a[0] == 3 and not a[3]}
    images: dict = {}
    for a in present:
        if a in bindings:
            images[a] = bindings[a]
        if a[0] == 3 and a[3]:
            b = FuncDeriv(a[1], a[2])
            if b in bases:
                img = bindings[b]
                for i in a[3]:
                    img = diff(img, i, rewrites)
                if a in bindings and not is_zero(bindings[a] - img, rewrites):
                    raise SubstitutionError(
                        f"binding for {a!r} is inconsistent with the binding of its base function")
                images[a] = img
    fields = {a[1] for a in bindings if a[0] == 0}
    if fields:
        for a in present:
            if a[0] == 3 and a not in images and fields & set(a[2]):
                raise SubstitutionError(
                    f"cannot substitute a field variable that {a[1]} depends on")
    if not images:
        return e
    out = _subst_atoms(e, images)
    if rewrites:
        out = rewrites.apply(out)
    return out


def coeff_of_jet(e: Expr, k: int, dim: int) -> Expr:
    """Coefficient of the jet variable ``u^k_dim`` in an expression linear in jets."""
    _check_jet_linear(e)
    target = JetVar(k, dim)
    out = {}
    for m, c in e.num.terms.items():
        for a, _ in m:
            if a == target:
                out[tuple(p for p in m if p[0] != target)] = c
                break
    if not out:
        return ZERO
    return Expr(Polynomial._raw(out), e.den)


def jet_free_part(e: Expr) -> Expr:
    _check_jet_linear(e)
    out = {m: c for m, c in e.num.terms.items() if not any(a[0] == 1 for a, _ in m)}
    if not out:
        return ZERO
    return Expr(Polynomial._raw(out), e.den)


def _check_jet_linear(e: Expr) -> None:
    for f, _ in e.den:
        if any(a[0] == 1 for a in f.atoms()):
            raise NonLinearJetError("tail not linear in jet variables")
    for m in e.num.terms:
        if sum(x for a, x in m if a[0] == 1) > 1:
            raise NonLinearJetError("tail not linear in jet variables")


def map_atoms(e: Expr, fn: Callable[[Atom], Expr | None]) -> Expr:
    """Substitute every atom ``a`` with ``fn(a)`` when it is not None (no chain rule)."""
    images = {}
    for a in e.atoms():
        img = fn(a)
        if img is not None:
            images[a] = _coerce(img)
    if not images:
        return e
    return _subst_atoms(e, images)
