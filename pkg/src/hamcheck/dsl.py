"""The ``.hop`` text format for operators, omega families and fixtures.

Grammar (EBNF)::

    unit      = { statement } ;
    statement = "fields" ident { "," ident }
              | "dims" ident { "," ident }
              | "func" fdecl { "," fdecl }
              | "param" ident { "," ident }
              | ident "=" matrix                 (* g<dim>, tail, omega *)
              | "rewrite" expr "=" expr          (* lhs: diff(F(..), ..) *)
              | "perturb" "{" { "omega" "[" int "," int "]" "+=" expr } "}" ;
    fdecl     = ident "(" [ ident { "," ident } ] ")" ;
    matrix    = "[" row { "," row } "]" ;
    row       = "[" expr { "," expr } "]" ;
    expr      = term { ( "+" | "-" ) term } ;
    term      = unary { ( "*" | "/" ) unary } ;
    unary     = ( "+" | "-" ) unary | power ;
    power     = primary [ "^" [ "-" ] int ] ;
    primary   = int | ident | ident "(" [ ident { "," ident } ] ")"
              | "diff" "(" expr { "," ident } ")" | "(" expr ")" ;

Identifiers resolve to fields, declared parameters, jet variables
``<field>_<dim>`` or declared functions.  ``eps`` is always available as a
parameter.  ``#`` starts a comment running to the end of the line.  Indices
in ``perturb`` blocks are 1-based; each entry also subtracts the increment
from the transposed cell so omega stays skew.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .operators import FieldSpace, OperatorError, OperatorSpec, from_parts, tail_matrix
from .symkernel import (
    ZERO, Expr, FieldVar, FuncDeriv, JetVar, NonLinearJetError, Param,
    Polynomial, RewriteTable, ZeroDivisionExprError, const, diff,
)

__all__ = [
    "DSLError", "SourceUnit", "Perturbation", "Document",
    "parse", "parse_unit", "print_spec", "expr_to_text", "load",
]

EPS = "eps"
KEYWORDS = {"fields", "dims", "func", "param", "rewrite", "perturb", "diff"}
MAX_DEPTH = 200
MAX_EXPONENT = 64


class DSLError(ValueError):
    """Structured parse/conversion error with a source location."""

    def __init__(self, message: str, line: int = 0, col: int = 0, token: str = ""):
        self.message = message
        self.line = line
        self.col = col
        self.token = token
        loc = f"{line}:{col}: " if line else ""
        tok = f" (at {token!r})" if token else ""
        super().__init__(f"{loc}{message}{tok}")


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_DEFAULT_FIELDS = ("u", "v", "w")
_DEFAULT_DIMS = ("x", "y", "z")


def _name(names, i, default, prefix):
    if names is not None and i < len(names):
        return names[i]
    if i < len(default):
        return default[i]
    return f"{prefix}{i + 1}"


def atom_to_text(a, fields=None, dims=None) -> str:
    r = a[0]
    if r == 0:
        return _name(fields, a[1], _DEFAULT_FIELDS, "u")
    if r == 1:
        return f"{_name(fields, a[1], _DEFAULT_FIELDS, 'u')}_{_name(dims, a[2], _DEFAULT_DIMS, 'x')}"
    if r == 2:
        return a[1]
    call = f"{a[1]}({', '.join(_name(fields, i, _DEFAULT_FIELDS, 'u') for i in a[2])})"
    if not a[3]:
        return call
    return f"diff({call}, {', '.join(_name(fields, i, _DEFAULT_FIELDS, 'u') for i in a[3])})"


def _coef_text(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def poly_to_text(p: Polynomial, fields=None, dims=None) -> str:
    if not p.terms:
        return "0"
    parts = []
    for mono, c in p.key():
        factors = []
        for a, e in mono:
            s = atom_to_text(a, fields, dims)
            factors.append(s if e == 1 else f"{s}^{e}")
        body = "*".join(factors)
        mag = abs(c)
        if not body:
            text = _coef_text(mag)
        elif mag == 1:
            text = body
        else:
            text = f"{_coef_text(mag)}*{body}"
        parts.append((c < 0, text))
    out = ("-" if parts[0][0] else "") + parts[0][1]
    for negative, text in parts[1:]:
        out += (" - " if negative else " + ") + text
    return out


def expr_to_text(e: Expr, fields=None, dims=None) -> str:
    num = poly_to_text(e.num, fields, dims)
    if not e.den:
        return num
    if len(e.num.terms) > 1:
        num = f"({num})"
    facs = []
    for f, k in e.den:
        s = poly_to_text(f, fields, dims)
        if len(f.terms) > 1:
            s = f"({s})"
        facs.append(s if k == 1 else f"{s}^{k}")
    den = "*".join(facs)
    if len(facs) > 1:
        den = f"({den})"
    return f"{num}/{den}"


def _matrix_text(m, fields, dims, indent="  ") -> str:
    rows = ["[" + ", ".join(expr_to_text(x, fields, dims) for x in row) + "]" for row in m]
    return "[\n" + ",\n".join(indent + r for r in rows) + "\n]"


def _collect_functions(exprs) -> dict:
    funcs: dict = {}
    for e in exprs:
        for a in e.atoms():
            if a[0] == 3:
                prev = funcs.setdefault(a[1], a[2])
                if prev != a[2]:
                    raise ValueError(f"function {a[1]} used with two signatures {prev} and {a[2]}")
    return funcs


def _collect_params(exprs) -> list:
    out = set()
    for e in exprs:
        for a in e.atoms():
            if a[0] == 2:
                out.add(a[1])
    return sorted(out)


@dataclass(frozen=True, eq=False)
class Perturbation:
    i: int          # 0-based
    j: int
    delta: Expr


def print_spec(spec: OperatorSpec, perturb=(), header: str | None = None) -> str:
    """Deterministic canonical text for an operator (plus optional perturbations)."""
    f, d = spec.space.fields, spec.space.dims
    tail = tail_matrix(spec)
    exprs = [x for m in spec.g for row in m for x in row]
    exprs += [x for row in tail for x in row]
    exprs += [x for row in spec.omega for x in row]
    rules = list(spec.rewrites)
    for lhs, rhs in rules:
        exprs.append(rhs)
        exprs.append(Expr.from_poly(Polynomial.atom(lhs)))
    exprs += [p.delta for p in perturb]
    funcs = _collect_functions(exprs)
    params = _collect_params(exprs)
    lines = []
    if header:
        lines += [f"# {h}" if h else "#" for h in header.splitlines()]
    lines.append(f"fields {', '.join(f)}")
    lines.append(f"dims {', '.join(d)}")
    for name in sorted(funcs):
        lines.append(f"func {name}({', '.join(f[i] for i in funcs[name])})")
    if params:
        lines.append(f"param {', '.join(params)}")
    for a in range(spec.N):
        lines.append(f"g{d[a]} = {_matrix_text(spec.g[a], f, d)}")
    lines.append(f"tail = {_matrix_text(tail, f, d)}")
    lines.append(f"omega = {_matrix_text(spec.omega, f, d)}")
    for lhs, rhs in rules:
        lines.append(f"rewrite {atom_to_text(lhs, f, d)} = {expr_to_text(rhs, f, d)}")
    if perturb:
        lines.append("perturb {")
        for p in perturb:
            lines.append(f"  omega[{p.i + 1}, {p.j + 1}] += {expr_to_text(p.delta, f, d)}")
        lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# lexing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[^\W\d]\w*)
  | (?P<op>\+=|[-+*/^()\[\],={}])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLError("unexpected character", line, pos - line_start + 1, text[pos])
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

@dataclass
class SourceUnit:
    fields: tuple = ()
    dims: tuple = ()
    funcs: dict = field(default_factory=dict)      # name -> tuple of field indices
    params: list = field(default_factory=list)
    matrices: dict = field(default_factory=dict)   # name -> (rows, token)
    rewrites: list = field(default_factory=list)   # (FuncDeriv, Expr)
    perturb: list = field(default_factory=list)    # Perturbation


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.pos = 0
        self.unit = SourceUnit()
        self.depth = 0

    # -- helpers --------------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        return DSLError(msg, tok.line, tok.col, tok.text or "<eof>")

    def advance(self) -> Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def accept(self, text: str) -> Token | None:
        if self.tok.text == text and self.tok.kind in ("op", "ident"):
            return self.advance()
        return None

    def expect(self, text: str) -> Token:
        t = self.accept(text)
        if t is None:
            raise self.error(f"expected {text!r}")
        return t

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error("expected identifier")
        return self.advance()

    def integer(self) -> int:
        if self.tok.kind != "int":
            raise self.error("expected integer")
        return int(self.advance().text)

    # -- statements ---------------------------------------------------------
    def parse(self) -> SourceUnit:
        while self.tok.kind != "eof":
            self.statement()
        return self.unit

    def _ident_list(self) -> list:
        out = [self.ident()]
        while self.accept(","):
            out.append(self.ident())
        return out

    def _check_new(self, t: Token):
        u = self.unit
        taken = set(u.fields) | set(u.dims) | set(u.funcs) | set(u.params) | KEYWORDS
        if t.text in taken:
            raise self.error(f"duplicate or reserved name {t.text!r}", t)

    def statement(self):
        t = self.tok
        u = self.unit
        if t.kind != "ident":
            raise self.error("expected a statement")
        kw = t.text
        if kw == "fields":
            self.advance()
            if u.fields:
                raise self.error("fields declared twice", t)
            names = self._ident_list()
            for x in names:
                self._check_new(x)
                u.fields += (x.text,)
        elif kw == "dims":
            self.advance()
            if u.dims:
                raise self.error("dims declared twice", t)
            for x in self._ident_list():
                self._check_new(x)
                u.dims += (x.text,)
        elif kw == "func":
            self.advance()
            self._fdecl()
            while self.accept(","):
                self._fdecl()
        elif kw == "param":
            self.advance()
            for x in self._ident_list():
                if x.text == EPS and EPS not in u.params:
                    u.params.append(EPS)
                    continue
                self._check_new(x)
                u.params.append(x.text)
        elif kw == "rewrite":
            self.advance()
            self._need_space(t)
            lhs_tok = self.tok
            lhs = self.expr()
            self.expect("=")
            rhs = self.expr()
            atoms = list(lhs.num.terms)
            if (lhs.den or len(atoms) != 1 or lhs.num.terms[atoms[0]] != 1
                    or len(atoms[0]) != 1 or atoms[0][0][1] != 1
                    or atoms[0][0][0][0] != 3 or not atoms[0][0][0][3]):
                raise self.error("rewrite left-hand side must be a function derivative", lhs_tok)
            u.rewrites.append((atoms[0][0][0], rhs))
        elif kw == "perturb":
            self.advance()
            self._need_space(t)
            self.expect("{")
            while not self.accept("}"):
                if self.tok.kind == "eof":
                    raise self.error("unterminated perturb block")
                w = self.ident()
                if w.text != "omega":
                    raise self.error("perturb entries must target omega", w)
                self.expect("[")
                i = self.integer()
                self.expect(",")
                j = self.integer()
                self.expect("]")
                n = len(u.fields)
                if not (1 <= i <= n and 1 <= j <= n) or i == j:
                    raise self.error(f"perturb index out of range or diagonal: [{i}, {j}]", w)
                self.expect("+=")
                u.perturb.append(Perturbation(i - 1, j - 1, self.expr()))
        else:
            self.advance()
            if not self.accept("="):
                raise self.error(f"unknown statement {kw!r}", t)
            self._need_space(t)
            valid = {"tail", "omega"} | {f"g{d}" for d in u.dims}
            if kw not in valid:
                raise self.error(f"unknown matrix {kw!r}; expected one of {sorted(valid)}", t)
            if kw in u.matrices:
                raise self.error(f"matrix {kw!r} assigned twice", t)
            u.matrices[kw] = (self.matrix(), t)

    def _need_space(self, t: Token):
        if not self.unit.fields or not self.unit.dims:
            raise self.error("fields and dims must be declared first", t)

    def _fdecl(self):
        u = self.unit
        name = self.ident()
        self._check_new(name)
        if not u.fields:
            raise self.error("fields must be declared before functions", name)
        self.expect("(")
        args = []
        if not self.accept(")"):
            args = self._ident_list()
            self.expect(")")
        idx = []
        for a in args:
            if a.text not in u.fields:
                raise self.error(f"function argument {a.text!r} is not a field", a)
            if u.fields.index(a.text) in idx:
                raise self.error("repeated function argument", a)
            idx.append(u.fields.index(a.text))
        u.funcs[name.text] = tuple(idx)

    def matrix(self) -> list:
        start = self.expect("[")
        rows = []
        if self.accept("]"):
            return rows
        while True:
            self.expect("[")
            row = [self.expr()]
            while self.accept(","):
                row.append(self.expr())
            self.expect("]")
            rows.append(row)
            if self.accept("]"):
                break
            self.expect(",")
        n = len(self.unit.fields)
        if len(rows) != n or any(len(r) != n for r in rows):
            raise DSLError(f"matrix shape does not match {n} fields", start.line, start.col, start.text)
        return rows

    # -- expressions --------------------------------------------------------
    def _enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("expression nested too deeply")

    def expr(self) -> Expr:
        self._enter()
        e = self.term()
        while True:
            if self.accept("+"):
                e = e + self.term()
            elif self.accept("-"):
                e = e - self.term()
            else:
                break
        self.depth -= 1
        return e

    def term(self) -> Expr:
        e = self.unary()
        while True:
            if self.accept("*"):
                e = e * self.unary()
            elif self.tok.text == "/" and self.tok.kind == "op":
                t = self.advance()
                d = self.unary()
                try:
                    e = e / d
                except ZeroDivisionExprError:
                    raise self.error("division by zero", t) from None
            else:
                return e

    def unary(self) -> Expr:
        self._enter()
        if self.accept("-"):
            e = -self.unary()
        elif self.accept("+"):
            e = self.unary()
        else:
            e = self.power()
        self.depth -= 1
        return e

    def power(self) -> Expr:
        e = self.primary()
        if self.accept("^"):
            t = self.tok
            sign = -1 if self.accept("-") else 1
            m = self.integer()
            if m > MAX_EXPONENT:
                raise self.error(f"exponent larger than {MAX_EXPONENT}", t)
            try:
                e = e ** (sign * m)
            except ZeroDivisionExprError:
                raise self.error("division by zero", t) from None
        return e

    def primary(self) -> Expr:
        t = self.tok
        u = self.unit
        if t.kind == "int":
            self.advance()
            return const(int(t.text))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "ident":
            raise self.error("expected an expression")
        self.advance()
        name = t.text
        if name == "diff":
            self.expect("(")
            e = self.expr()
            while self.accept(","):
                v = self.ident()
                if v.text not in u.fields:
                    raise self.error(f"can only differentiate by a field, got {v.text!r}", v)
                e = diff(e, u.fields.index(v.text))
            self.expect(")")
            return e
        if name in u.funcs:
            self.expect("(")
            args = []
            if not self.accept(")"):
                args = self._ident_list()
                self.expect(")")
            sig = tuple(u.fields.index(a.text) if a.text in u.fields else -1 for a in args)
            if sig != u.funcs[name]:
                declared = ", ".join(u.fields[i] for i in u.funcs[name])
                raise self.error(f"{name} must be applied as {name}({declared})", t)
            return Expr.from_poly(Polynomial.atom(FuncDeriv(name, sig)))
        if name in u.fields:
            return Expr.from_poly(Polynomial.atom(FieldVar(u.fields.index(name))))
        if name in u.params or name == EPS:
            return Expr.from_poly(Polynomial.atom(Param(name)))
        if "_" in name:
            fname, _, dname = name.rpartition("_")
            if fname in u.fields and dname in u.dims:
                return Expr.from_poly(Polynomial.atom(JetVar(u.fields.index(fname), u.dims.index(dname))))
        raise self.error(f"undeclared identifier {name!r}", t)


def parse_unit(text: str) -> SourceUnit:
    """Parse text into a :class:`SourceUnit`; every failure is a :class:`DSLError`."""
    try:
        return _Parser(text).parse()
    except DSLError:
        raise
    except RecursionError:
        raise DSLError("expression nested too deeply") from None
    except (ValueError, ZeroDivisionError) as exc:
        raise DSLError(str(exc)) from None


@dataclass(eq=False)
class Document:
    spec: OperatorSpec
    perturb: list
    unit: SourceUnit


def to_document(unit: SourceUnit, name: str = "") -> Document:
    if not unit.fields or not unit.dims:
        raise DSLError("missing fields or dims declaration")
    space = FieldSpace(unit.fields, unit.dims)
    n = space.n
    zero = [[ZERO] * n for _ in range(n)]
    g = [unit.matrices.get(f"g{d}", (zero, None))[0] for d in unit.dims]
    tail, tail_tok = unit.matrices.get("tail", (None, None))
    omega_rows, omega_tok = unit.matrices.get("omega", (zero, None))
    try:
        rewrites = RewriteTable(dict(unit.rewrites))
    except ValueError as exc:
        raise DSLError(str(exc)) from None
    for a, (rows, tok) in enumerate(unit.matrices.get(f"g{d}", (zero, None)) for d in unit.dims):
        _check_jet_free(rows, tok, f"g{unit.dims[a]}", unit)
    _check_jet_free(omega_rows, omega_tok, "omega", unit)
    try:
        spec = from_parts(space, g, tail, omega_rows, rewrites, name)
    except NonLinearJetError as exc:
        line, col = (tail_tok.line, tail_tok.col) if tail_tok else (0, 0)
        raise DSLError(str(exc), line, col, "tail") from None
    except OperatorError as exc:
        raise DSLError(str(exc)) from None
    return Document(spec, list(unit.perturb), unit)


def _check_jet_free(rows, tok, what, unit):
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            if x.has_jets():
                line, col = (tok.line, tok.col) if tok else (0, 0)
                raise DSLError(
                    f"jet variables are not allowed in {what}[{unit.fields[i]},{unit.fields[j]}]",
                    line, col, what)


def load(text: str, name: str = "") -> Document:
    """Parse and convert text to an operator plus perturbation entries."""
    return to_document(parse_unit(text), name)


def parse(text: str, name: str = "") -> OperatorSpec:
    return load(text, name).spec


def apply_perturbations(spec: OperatorSpec, perturb) -> OperatorSpec:
    """Add each increment to ``omega[i][j]`` and subtract it from ``omega[j][i]``."""
    w = [list(r) for r in spec.omega]
    for p in perturb:
        w[p.i][p.j] = w[p.i][p.j] + p.delta
        w[p.j][p.i] = w[p.j][p.i] - p.delta
    return spec.with_omega(w)
