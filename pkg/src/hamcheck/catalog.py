"""Built-in library of canonical operators and their classified omega families.

Each operator is written in the ``.hop`` format as displayed (leading
matrices plus the tail matrix with jet variables); ``b`` is read off by
:func:`~hamcheck.operators.from_parts`.  A :class:`FamilyCase` gives the
off-diagonal entries of omega (``f`` for two fields; ``f1 = w^{12}``,
``f2 = w^{13}``, ``f3 = w^{23}`` for three) together with any specialisation
of the functions appearing in ``P``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .dsl import load, parse_unit, to_document
from .operators import OperatorSpec
from .symkernel import FuncDeriv, Param, substitute

__all__ = ["CatalogEntry", "FamilyCase", "CATALOG", "names", "get", "enumerate_cases",
           "UnknownEntryError"]


class UnknownEntryError(KeyError):
    pass


@dataclass(frozen=True)
class FamilyCase:
    label: str
    slots: tuple                       # omega entries above the diagonal, row-major
    decls: str = ""                    # extra func/param declarations
    p_bind: tuple = ()                 # ((function or param name, expr text), ...)
    rewrites: tuple = ()               # ((lhs text, rhs text), ...)
    condition: str = ""                # side conditions, human readable


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    group: str                         # two-field, three-field or three-wave
    rank_class: str
    p_text: str
    cases: tuple
    notes: tuple = ()
    literal_text: str | None = None    # display-literal reading when it differs
    negate: bool = False               # stored operator is minus the displayed one

    @property
    def n(self) -> int:
        return len(self.spec().space.fields)

    def _unit(self, text: str, case: FamilyCase | None):
        body = text
        if case is not None:
            body += "\n" + case.decls + "\n"
            body += _omega_text(case.slots, _count_fields(text)) + "\n"
            for lhs, rhs in case.rewrites:
                body += f"rewrite {lhs} = {rhs}\n"
        return parse_unit(body)

    def spec(self, case: FamilyCase | str | None = None, literal: bool = False) -> OperatorSpec:
        """The operator with omega from ``case`` (omega = 0 when None)."""
        if isinstance(case, str):
            case = self.case(case)
        text = self.literal_text if literal and self.literal_text else self.p_text
        unit = self._unit(text, case)
        label = self.name if case is None else f"{self.name} case {case.label}"
        if literal and self.literal_text:
            label += " (literal)"
        doc = to_document(unit, label)
        spec = doc.spec
        if self.negate and not literal:
            spec = spec.negated()
        if case is not None and case.p_bind:
            bindings = {}
            for key, rhs in case.p_bind:
                src = _expr_unit(unit, rhs)
                if key in unit.funcs:
                    bindings[FuncDeriv(key, unit.funcs[key])] = src
                else:
                    bindings[Param(key)] = src
            r = spec.rewrites
            spec = spec.map_entries(lambda x: substitute(x, bindings, r))
        return spec

    def parse_expr(self, text: str, case: FamilyCase | str | None = None):
        """Parse an expression in the context of this entry (and case)."""
        if isinstance(case, str):
            case = self.case(case)
        return _expr_unit(self._unit(self.p_text, case), text)

    def case(self, label: str) -> FamilyCase:
        for c in self.cases:
            if c.label == label:
                return c
        raise UnknownEntryError(f"{self.name} has no case {label!r}")

    def omega_family(self, case: FamilyCase | str | None = None):
        case = self.cases[0] if case is None else case
        return self.spec(case).omega


def _count_fields(text: str) -> int:
    return len(parse_unit(text).fields)


def _omega_text(slots, n: int) -> str:
    w = [["0"] * n for _ in range(n)]
    it = iter(slots)
    for i in range(n):
        for j in range(i + 1, n):
            s = next(it)
            w[i][j] = f"({s})"
            w[j][i] = f"-({s})"
    return "omega = [" + ", ".join("[" + ", ".join(r) + "]" for r in w) + "]"


def _expr_unit(unit, text: str):
    from .dsl import _Parser
    p = _Parser(text)
    p.unit = unit
    e = p.expr()
    if p.tok.kind != "eof":
        raise ValueError(f"trailing input in {text!r}")
    return e


# ---------------------------------------------------------------------------
# operator texts
# ---------------------------------------------------------------------------

_TWO = "fields u, v\ndims x, y\n"
_THREE = "fields u, v, w\ndims x, y\n"
_E = "[[1, 0, 0], [0, 0, 0], [0, 0, 0]]"
_ANTI = "[[0, 1, 0], [1, 0, 0], [0, 0, 0]]"
_FLAT3 = "[[0, 0, 1], [0, 1, 0], [1, 0, 0]]"

_P = {}

_P["P1"] = _TWO + """
gx = [[1, 0], [0, 0]]
gy = [[v, 0], [0, 0]]
tail = [[1/2*v_y, 0], [0, 0]]
"""

_P["P2"] = _TWO + """
gx = [[1, 0], [0, 0]]
gy = [[v, 0], [0, 0]]
tail = [[1/2*v_y, -(v_x + v*v_y)/u], [(v_x + v*v_y)/u, 0]]
"""

_P["P3"] = _THREE + "param lambda\n" + f"gx = {_FLAT3}\n" + """
gy = [[-2*v, w, lambda], [w, lambda, 0], [lambda, 0, 0]]
tail = [[-v_y, 2*w_y, 0], [-w_y, 0, 0], [0, 0, 0]]
"""

_P["P4"] = _THREE + f"gx = {_FLAT3}\n" + """
gy = [[-2*u, -1/2*v, w], [-1/2*v, w, 0], [w, 0, 0]]
tail = [[-u_y, 1/2*v_y, 2*w_y], [-v_y, 1/2*w_y, 0], [-w_y, 0, 0]]
"""

_P["P5"] = _THREE + """
tail = [[0, w_x + u*w_y, 0], [-w_x - u*w_y, 0, 0], [0, 0, 0]]
"""

_P["P6"] = _THREE + """
tail = [[0, w_x + w*w_y, 0], [-w_x - w*w_y, 0, 0], [0, 0, 0]]
"""

_P["P7"] = _THREE + "func h(v, w)\n" + f"gx = {_E}\n" + """
tail = [[0, 0, h(v, w)*v_y], [0, 0, 0], [-h(v, w)*v_y, 0, 0]]
"""

_P["P8"] = _THREE + "func h(v, w)\n" + f"gx = {_E}\n" + """
gy = [[v, 0, 0], [0, 0, 0], [0, 0, 0]]
tail = [[1/2*v_y, 0, h(v, w)*v_y], [0, 0, 0], [-h(v, w)*v_y, 0, 0]]
"""

_P9_TAIL = """
tail = [[(diff(f(v, w), v)*v_y + diff(f(v, w), w)*w_y)/2, w_x + h(v, w)*w_y, 0],
        [-w_x - h(v, w)*w_y, 0, 0],
        [0, 0, 0]]
"""
# second leading matrix read as d/dy
_P["P9"] = _THREE + "func f(v, w), h(v, w)\n" + f"gx = {_E}\n" + """
gy = [[f(v, w), 0, 0], [0, 0, 0], [0, 0, 0]]
""" + _P9_TAIL
# both leading matrices multiply d/dx, as displayed
_P9_LITERAL = _THREE + "func f(v, w), h(v, w)\n" + """
gx = [[1 + f(v, w), 0, 0], [0, 0, 0], [0, 0, 0]]
""" + _P9_TAIL

_P10_TAIL = """
tail = [[(diff(f(v, w), v)*v_y + diff(f(v, w), w)*w_y)/2, 0, -(w_x + f(v, w)*w_y - h(v, w)*v_y)/u],
        [0, 0, 0],
        [(w_x + f(v, w)*w_y - h(v, w)*v_y)/u, 0, 0]]
"""
_P["P10"] = _THREE + "func f(v, w), h(v, w)\n" + f"gx = {_E}\n" + """
gy = [[f(v, w), 0, 0], [0, 0, 0], [0, 0, 0]]
""" + _P10_TAIL
_P10_LITERAL = _THREE + "func f(v, w), h(v, w)\n" + """
gx = [[1 + f(v, w), 0, 0], [0, 0, 0], [0, 0, 0]]
""" + _P10_TAIL

_P["P11"] = _THREE + f"gx = {_E}\n" + """
gy = [[v, 0, 0], [0, 0, 0], [0, 0, 0]]
tail = [[v_y/2, -(v_x + v*v_y)/u, -(w_x + v*w_y)/u],
        [(v_x + v*v_y)/u, 0, 0],
        [(w_x + v*w_y)/u, 0, 0]]
"""

_P["P12"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[-2*u, v, 0], [v, 0, 0], [0, 0, 0]]
tail = [[-u_y, 2*v_y, 0], [-v_y, 0, 0], [0, 0, 0]]
"""

_P["P13"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[-2*u, v, 0], [v, 0, 0], [0, 0, 0]]
tail = [[-u_y, 2*v_y, w_y], [-v_y, 0, 0], [-w_y, 0, 0]]
"""

_P["P14"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[0, 0, 1], [0, 0, 0], [1, 0, 0]]
"""

_P["P15"] = _THREE + "func p(w), q(w), r(w)\n" + f"gx = {_ANTI}\n" + """
gy = [[p(w), q(w), 0], [q(w), r(w), 0], [0, 0, 0]]
tail = [[diff(p(w), w)/2*w_y, 0, 0],
        [diff(q(w), w)*w_y, diff(r(w), w)/2*w_y, 0],
        [0, 0, 0]]
"""

_P["P16"] = _THREE + "func p(w), q(w), r(w)\n" + f"gx = {_ANTI}\n" + """
gy = [[p(w), q(w), 0], [q(w), r(w), 0], [0, 0, 0]]
tail = [[diff(p(w), w)/2*w_y, w_y, 0],
        [(diff(q(w), w) - 1)*w_y, diff(r(w), w)/2*w_y, 0],
        [0, 0, 0]]
"""

_P["P17"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[1, 0, 0], [0, 0, 0], [0, 0, 0]]
tail = [[0, 0, -w_x/v], [0, 0, 0], [w_x/v, 0, 0]]
"""

_P["P18"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[0, w, 0], [w, 0, 0], [0, 0, 0]]
tail = [[0, 0, -(w_x + w*w_y)/v], [w_y, 0, 0], [(w_x + w*w_y)/v, 0, 0]]
"""

_P["P19"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[1, w, 0], [w, 0, 0], [0, 0, 0]]
tail = [[0, 0, -(w_x + w*w_y)/v], [w_y, 0, 0], [(w_x + w*w_y)/v, 0, 0]]
"""

_P["P20"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[0, 0, 0], [0, 0, 1], [0, 1, 0]]
tail = [[0, 0, -(w_x - u_y)/v], [0, 0, 0], [(w_x - u_y)/v, 0, 0]]
"""

_P["P21"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[0, 0, 1], [0, 0, 0], [1, 0, 0]]
tail = [[0, 0, -(w_x - v_y)/v], [0, 0, 0], [(w_x - v_y)/v, 0, 0]]
"""

_P["P22"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[u, -v/2, 0], [-v/2, 0, 0], [0, 0, 0]]
tail = [[u_y/2, -v_y, -w_x/v], [v_y/2, 0, 0], [w_x/v, 0, 0]]
"""

_P["P23"] = _THREE + f"gx = {_ANTI}\n" + """
gy = [[1, -w, 0], [-w, w^2, 0], [0, 0, 0]]
tail = [[0, 0, (w_x - 2*w*w_y)/(w*u - v)],
        [-w_y, w*w_y, -(w*w_x - 2*w^2*w_y)/(w*u - v)],
        [-(w_x - 2*w*w_y)/(w*u - v), (w*w_x - 2*w^2*w_y)/(w*u - v), 0]]
"""

_P["P24"] = _THREE + "param k\n" + f"gx = {_ANTI}\n" + """
gy = [[1, -k, 0], [-k, k*w, 0], [0, 0, 0]]
tail = [[-k*w_y/w^2, k*w_y/(2*w), (w_x - 2*k*w_y)/(w*u - v)],
        [-k*w_y/(2*w), w_y/2, -(w*w_x - 2*k*w*w_y)/(w*u - v)],
        [-(w_x - 2*k*w_y)/(w*u - v), (w*w_x - 2*k*w*w_y)/(w*u - v), 0]]
"""

_P["ThreeWave1D"] = """
fields u, v, w
dims x
gx = [[1, 0, 0], [0, -1, 0], [0, 0, -1]]
"""

_P["ThreeWave2D"] = _THREE + "param S, a, b, d, e\n" + """
gx = [[S, 0, 0], [0, S, 0], [0, 0, S]]
gy = [[(d - e)/(a - b)*S, 0, 0], [0, (d - e)/(a - b)*S, 0], [0, 0, (d - e)/(a - b)*S]]
"""


def _c(label, *slots, decls="", p_bind=(), rewrites=(), condition=""):
    return FamilyCase(label, tuple(slots), decls, tuple(p_bind), tuple(rewrites), condition)


_ENTRIES = [
    CatalogEntry("P1", "two-field", "n=2 degenerate", _P["P1"], (
        _c("1", "F(v)", decls="func F(v)", condition="f = F(v)"),)),
    CatalogEntry("P2", "two-field", "n=2 degenerate", _P["P2"], (
        _c("1", "F(v)/u", decls="func F(v)", condition="f = F(v)/u"),)),
    CatalogEntry("P3", "three-field", "non-degenerate", _P["P3"], (
        _c("1", "c*u + c1", "-c*v", "c*w", decls="param c, c1",
           condition="f1 = c u + c1, f2 = -c v, f3 = c w"),)),
    CatalogEntry("P4", "three-field", "non-degenerate", _P["P4"], (
        _c("1", "0", "0", "0", condition="f1 = f2 = f3 = 0"),)),
    CatalogEntry("P5", "three-field", "rank 0", _P["P5"], (
        _c("1", "f1(u, v, w)", "0", "0", decls="func f1(u, v, w)",
           condition="f2 = f3 = 0, f1 arbitrary"),)),
    CatalogEntry("P6", "three-field", "rank 0", _P["P6"], (
        _c("1", "f1(u, v, w)", "0", "0", decls="func f1(u, v, w)",
           condition="f2 = f3 = 0, f1 arbitrary"),)),
    CatalogEntry("P7", "three-field", "rank 1", _P["P7"], (
        _c("1", "0", "f2(v, w)", "0", decls="func f2(v, w)",
           condition="h arbitrary, f1 = f3 = 0, f2 = f2(v, w)"),
        _c("2", "f1(v, w)", "f2(v, w)", "0", decls="func f1(v, w), f2(v, w)",
           p_bind=(("h", "0"),), condition="h = 0, f3 = 0, f1 = f1(v, w), f2 = f2(v, w)"),
        _c("3", "f1(v, w)", "-(g(v, w) + f4(v))*f3(v, w)", "f3(v, w)",
           decls="func f1(v, w), f3(v, w), g(v, w), f4(v)",
           p_bind=(("h", "0"),),
           rewrites=(("diff(g(v, w), w)", "diff(f1(v, w)/f3(v, w), v)"),),
           condition="h = 0, f2 = -(int d/dv(f1/f3) dw + f4(v)) f3; the integral is g(v, w)"),
    )),
    CatalogEntry("P8", "three-field", "rank 1", _P["P8"], (
        _c("1", "0", "f2(v, w)", "0", decls="func f2(v, w)",
           condition="h arbitrary, f1 = f3 = 0, f2 = f2(v, w)"),
        _c("2", "f1(v, w)", "f2(v, w)", "0", decls="func f1(v, w), f2(v, w)",
           p_bind=(("h", "0"),), condition="h = 0, f3 = 0, f1 = f1(v, w), f2 = f2(v, w)"),
    )),
    CatalogEntry("P9", "three-field", "rank 1", _P["P9"], (
        _c("1", "f1(v, w)", "0", "0", decls="func f1(v, w)",
           condition="f2 = f3 = 0, f1 = f1(v, w)"),),
        notes=("displayed with two d/dx leading terms; the second is read as d/dy",),
        literal_text=_P9_LITERAL),
    CatalogEntry("P10", "three-field", "rank 1", _P["P10"], (
        _c("1", "0", "F2(v, w)/u", "0", decls="func F2(v, w)",
           condition="f1 = f3 = 0, f2 = F2(v, w)/u"),),
        notes=("displayed with two d/dx leading terms; the second is read as d/dy",
               "displayed as -P10 = ...; the stored operator is the negated right-hand side"),
        literal_text=_P10_LITERAL, negate=True),
    CatalogEntry("P11", "three-field", "rank 1", _P["P11"], (
        _c("1", "F1(v, w)/u", "F2(v, w)/u", "0", decls="func F1(v, w), F2(v, w)",
           condition="f3 = 0, f1 = F1(v, w)/u, f2 = F2(v, w)/u"),)),
    CatalogEntry("P12", "three-field", "rank 2", _P["P12"], (
        _c("1", "0", "0", "0", condition="f1 = f2 = f3 = 0"),)),
    CatalogEntry("P13", "three-field", "rank 2", _P["P13"], (
        _c("1", "0", "f2(w)", "0", decls="func f2(w)", condition="f1 = f3 = 0, f2 = f2(w)"),)),
    CatalogEntry("P14", "three-field", "rank 2", _P["P14"], (
        _c("1", "c1", "c2", "c3", decls="param c1, c2, c3", condition="f1, f2, f3 constants"),)),
    CatalogEntry("P15", "three-field", "rank 2", _P["P15"], (
        _c("1", "f1(w)", "f2(w)", "c*f2(w)", decls="func f1(w), f2(w)\nparam c, c1, c2",
           p_bind=(("p", "c1"), ("r", "2*c*q(w) + c2")),
           condition="p = c1, r = 2 c q + c2, q arbitrary; f3 = c f2"),
        _c("2", "f1(w)", "0", "f3(w)", decls="func f1(w), f3(w)\nparam p0, q0",
           p_bind=(("p", "p0"), ("q", "q0")),
           condition="p, q constants, r arbitrary; f2 = 0"),
        _c("3", "f1(w)", "f2(w)", "0", decls="func f1(w), f2(w)\nparam r0",
           p_bind=(("r", "r0"),),
           condition="p, q arbitrary, r constant; f3 = 0"),
        _c("4", "f1(w)", "0", "0", decls="func f1(w)",
           condition="p, q, r arbitrary; f2 = f3 = 0"),
    ), notes=("case 1 prints 'c. c_1' between constants; read as the list c, c1, c2",)),
    CatalogEntry("P16", "three-field", "rank 2", _P["P16"], (
        _c("1", "f1(w)", "f2(w)", "c*f2(w)", decls="func f1(w), f2(w)\nparam c, c1, c2",
           p_bind=(("p", "2*w/c + c1"), ("r", "2*c*(q(w) - w) + c2")),
           condition="p = 2w/c + c1, q arbitrary, r = 2c(q - w) + c2; f3 = c f2"),
        _c("2", "f1(w)", "0", "f3(w)", decls="func f1(w), f3(w)\nparam p0, c",
           p_bind=(("p", "p0"), ("q", "c + w")),
           condition="r arbitrary, p constant, q = c + w; f2 = 0"),
        _c("3", "f1(w)", "0", "0", decls="func f1(w)",
           condition="p, q, r arbitrary; f2 = f3 = 0"),
    )),
    CatalogEntry("P17", "three-field", "rank 2", _P["P17"], (
        _c("1", "f1(w)", "F2(w)/v", "0", decls="func f1(w), F2(w)",
           condition="f3 = 0, f1 = f1(w), f2 = F2(w)/v"),)),
    CatalogEntry("P18", "three-field", "rank 2", _P["P18"], (
        _c("1", "f1(w)", "F2(w)/v", "0", decls="func f1(w), F2(w)",
           condition="f3 = 0, f1 = f1(w), f2 = F2(w)/v"),)),
    CatalogEntry("P19", "three-field", "rank 2", _P["P19"], (
        _c("1", "f1(w)", "F2(w)/v", "0", decls="func f1(w), F2(w)",
           condition="f3 = 0, f1 = f1(w), f2 = F2(w)/v"),)),
    CatalogEntry("P20", "three-field", "rank 2", _P["P20"], (
        _c("1", "0", "c/v", "0", decls="param c", condition="f1 = f3 = 0, f2 = c/v"),)),
    CatalogEntry("P21", "three-field", "rank 2", _P["P21"], (
        _c("1", "c", "(c*w + c1)/v", "0", decls="param c, c1",
           condition="f1 = c, f3 = 0, f2 = (c w + c1)/v"),)),
    CatalogEntry("P22", "three-field", "rank 2", _P["P22"], (
        _c("1", "0", "F2(w)/v", "0", decls="func F2(w)", condition="f1 = f3 = 0, f2 = F2(w)/v"),)),
    CatalogEntry("P23", "three-field", "rank 2", _P["P23"], (
        _c("1", "F1(w)", "-2*w*F1(w)/(w*u - v)", "2*w^2*F1(w)/(w*u - v)", decls="func F1(w)",
           condition="f1 = F1(w), f2 = -2 w F1/(wu - v), f3 = 2 w^2 F1/(wu - v)"),)),
    CatalogEntry("P24", "three-field", "rank 2", _P["P24"], (
        _c("1", "0", "0", "0", condition="f1 = f2 = f3 = 0"),)),
    CatalogEntry("ThreeWave1D", "three-wave", "1D non-degenerate", _P["ThreeWave1D"], (
        _c("1", "-2*w", "2*v", "2*u", condition="displayed constant-coefficient omega"),)),
    CatalogEntry("ThreeWave2D", "three-wave", "non-degenerate", _P["ThreeWave2D"], (
        _c("1", "S*w", "-S*v", "S*u",
           condition="S, a, b, d, e free; f = (d(c-b) + e(a-c))/(a-b) enters only the system"),),
        notes=("the relation for f constrains the quasilinear system, not the operator",)),
]

CATALOG = {e.name: e for e in _ENTRIES}


def names() -> list:
    return list(CATALOG)


def get(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownEntryError(f"unknown catalog entry {name!r}") from None


def enumerate_cases(name: str) -> list:
    return list(get(name).cases)
