"""Necessity-side tooling for ``P + omega``.

Three mechanisms, all exact:

* :func:`extract` builds omega from unknown functions (the *ansatz*) and keeps
  every W2, C1, C2 residual with those functions symbolic;
* :func:`detect_forced_zero` finds residuals of the shape ``q * A^m`` with
  ``q`` free of unknowns, so ``A`` must vanish wherever ``q`` does not;
* :func:`perturb_and_refute` pushes a classified family off its stated form
  and reports a condition that stops holding.

Per-entry fixtures pin the expected forced atoms and perturbation directions.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import catalog
from .conditions import ConditionId, GROUPS, Reading, check_mokhov, residuals, verify
from .dsl import Perturbation, expr_to_text
from .operators import OperatorSpec
from .symkernel import ZERO, Expr, FuncDeriv, Polynomial, func, substitute

__all__ = [
    "Ansatz", "AnsatzConstraintSet", "PreconditionError", "extract", "detect_forced_zero",
    "perturb_and_refute", "Direction", "NecessityFixture", "FixtureResult", "FIXTURES",
    "run_fixture", "slot_pair",
]

_EXTRACT_FAMILIES = ("W2",) + GROUPS["C"]


class PreconditionError(ValueError):
    pass


def slot_pair(slot: int, n: int) -> tuple:
    """0-based ``(i, j)`` of the 1-based above-diagonal slot, row-major."""
    k = 0
    for i in range(n):
        for j in range(i + 1, n):
            k += 1
            if k == slot:
                return i, j
    raise ValueError(f"slot {slot} out of range for {n} fields")


@dataclass(frozen=True)
class Ansatz:
    """Omega built from unknown functions.

    ``slots`` are the entries above the diagonal in row-major order; the
    matrix is completed skew-symmetrically.
    """
    unknowns: tuple          # base FuncDeriv atoms
    slots: tuple             # Exprs

    @classmethod
    def generic(cls, n: int) -> Ansatz:
        args = tuple(range(n))
        m = n * (n - 1) // 2
        names = ("f",) if m == 1 else tuple(f"f{k}" for k in range(1, m + 1))
        fs = tuple(func(name, args) for name in names)
        return cls(tuple(FuncDeriv(name, args) for name in names), fs)

    @classmethod
    def zero(cls, n: int) -> Ansatz:
        return cls((), (ZERO,) * (n * (n - 1) // 2))

    @property
    def names(self) -> frozenset:
        return frozenset(a[1] for a in self.unknowns)

    def omega(self, n: int) -> list:
        w = [[ZERO] * n for _ in range(n)]
        it = iter(self.slots)
        for i in range(n):
            for j in range(i + 1, n):
                s = next(it)
                w[i][j] = s
                w[j][i] = -s
        return w


@dataclass
class AnsatzConstraintSet:
    p: OperatorSpec
    ansatz: Ansatz
    residuals: dict = field(default_factory=dict)     # ConditionId -> Expr, nonzero only

    @property
    def spec(self) -> OperatorSpec:
        return self.p.with_omega(self.ansatz.omega(self.p.n))

    def __len__(self):
        return len(self.residuals)


def extract(p: OperatorSpec, ansatz: Ansatz | None = None, reading: Reading | None = None,
            check: bool = True) -> AnsatzConstraintSet:
    """All nonzero W2, C1, C2 residuals of ``p`` plus the ansatz omega."""
    if check:
        bad = check_mokhov(p, reading=reading)
        if bad:
            first = min(bad, key=ConditionId.sort_key)
            raise PreconditionError(f"{p.name}: first-order part fails {first.label(p.space.fields, p.space.dims)}")
    ansatz = ansatz or Ansatz.generic(p.n)
    spec = p.with_omega(ansatz.omega(p.n))
    out = {cid: r for cid, r in residuals(spec, _EXTRACT_FAMILIES, reading=reading)
           if not r.is_zero()}
    return AnsatzConstraintSet(p, ansatz, out)


def _forced_atom(e: Expr, names):
    """The unknown atom ``A`` if ``e = q * A^m`` with ``q`` free of unknowns."""
    for f, _ in e.den:
        if any(a[0] == 3 and a[1] in names for a in f.atoms()):
            return None
    common = None
    for mono in e.num.terms:
        unk = tuple((a, k) for a, k in mono if a[0] == 3 and a[1] in names)
        if len(unk) != 1:
            return None
        if common is None:
            common = unk
        elif unk != common:
            return None
    return None if common is None else common[0][0]


def _implied(atom, found) -> bool:
    """True if ``atom`` is a derivative of an atom already forced to zero."""
    for b in found:
        if b[1] == atom[1] and b != atom and len(b[3]) < len(atom[3]):
            rest = list(atom[3])
            try:
                for i in b[3]:
                    rest.remove(i)
            except ValueError:
                continue
            return True
    return False


def _linear_rows(res, current: dict) -> tuple:
    """Rows ``{atom: coefficient}`` from residuals linear in the unknowns.

    Numerators are split by powers of the field variables no unknown depends
    on; each coefficient of such a power must vanish on its own.
    """
    names = set(current)
    used = {i for a in current.values() for i in a[2]}
    rows, seen = [], set()
    for e in res.values():
        if any(a[0] == 3 and a[1] in names for f, _ in e.den for a in f.atoms()):
            continue
        split: dict = {}
        ok = True
        for mono, c in e.num.terms.items():
            unk = [(a, k) for a, k in mono if a[0] == 3 and a[1] in names]
            if len(unk) != 1 or unk[0][1] != 1:
                ok = False
                break
            free = tuple((a, k) for a, k in mono if a[0] == 0 and a[1] not in used)
            rest = tuple((a, k) for a, k in mono
                         if (a, k) not in free and not (a[0] == 3 and a[1] in names))
            split.setdefault(free, {}).setdefault(unk[0][0], {})[rest] = c
        if not ok:
            continue
        for part in split.values():
            row = {a: Expr(Polynomial._raw(t), {}) for a, t in part.items()}
            row = {a: x for a, x in row.items() if not x.is_zero()}
            if not row:
                continue
            key = frozenset((a, x.num.key()) for a, x in row.items())
            if key not in seen:
                seen.add(key)
                rows.append(row)
    return rows


def _echelon(rows, cols):
    """Reduced row echelon form over rational functions; rows as lists."""
    m = [[r.get(c, ZERO) for c in cols] for r in rows]
    out, col = [], 0
    while m and col < len(cols):
        piv = next((r for r in m if not r[col].is_zero()), None)
        if piv is None:
            col += 1
            continue
        m.remove(piv)
        p = piv[col]
        piv = [x / p for x in piv]
        m = [[r[c] - r[col] * piv[c] for c in range(len(cols))] if not r[col].is_zero() else r for r in m]
        m = [r for r in m if any(not x.is_zero() for x in r)]
        out = [[r[c] - r[col] * piv[c] for c in range(len(cols))] if not r[col].is_zero() else r for r in out]
        out.append(piv)
        col += 1
    return out


def _linear_forced(res, current: dict) -> list:
    """Atoms ``A`` such that some combination of linear residuals is ``q * A``."""
    rows = _linear_rows(res, current)
    if not rows:
        return []
    cols = sorted({a for r in rows for a in r})
    basis = _echelon(rows, cols)
    basis = [{c: x for c, x in zip(cols, r) if not x.is_zero()} for r in basis]
    found = []
    for a in cols:
        order = [c for c in cols if c != a] + [a]
        for r in _echelon(basis, order):
            nz = [c for c, x in zip(order, r) if not x.is_zero()]
            if nz == [a]:
                found.append((a, r[-1] * func(a[1], a[2], a[3])))
                break
    return found


def _reductions(hits, current: dict) -> dict:
    """Bindings implied by forced atoms; updates ``current`` in place."""
    bindings = {}
    for name, base in list(current.items()):
        mine = [a for a in hits if a[1] == name]
        if any(not a[3] for a in mine):
            bindings[base] = ZERO
            del current[name]
            continue
        drop = {a[3][0] for a in mine if len(a[3]) == 1 and a[3][0] in base[2]}
        if drop:
            args = tuple(x for x in base[2] if x not in drop)
            bindings[base] = func(name, args)
            current[name] = FuncDeriv(name, args)
    return bindings


def detect_forced_zero(cs: AnsatzConstraintSet, reading: Reading | None = None, closure: bool = True,
                       linear: bool = True) -> list:
    """Unknown atoms forced to vanish, each with a witness residual.

    With ``closure`` the consequences are fed back: a vanishing function is
    set to zero, a vanishing first derivative drops that argument, and the
    residuals are re-extracted until nothing changes.  When no single residual
    has the required shape, ``linear`` also tries exact elimination over the
    residuals that are linear in the unknowns.  Atoms are reported in
    the signature of the original ansatz; derivatives of atoms already forced
    are left out.
    """
    names = cs.ansatz.names
    original = {a[1]: a[2] for a in cs.ansatz.unknowns}
    slots = cs.ansatz.slots
    current = {a[1]: a for a in cs.ansatz.unknowns}
    witness: dict = {}
    res = cs.residuals
    while True:
        hits = []
        for cid in sorted(res, key=ConditionId.sort_key):
            a = _forced_atom(res[cid], names)
            if a is None:
                continue
            hits.append(a)
            key = FuncDeriv(a[1], original[a[1]], a[3])
            witness.setdefault(key, res[cid])
        if not closure:
            break
        bindings = _reductions(hits, current)
        if not bindings and linear:
            for a, w in _linear_forced(res, current):
                hits.append(a)
                witness.setdefault(FuncDeriv(a[1], original[a[1]], a[3]), w)
            bindings = _reductions(hits, current)
        if not bindings:
            break
        slots = tuple(substitute(x, bindings) for x in slots)
        reduced = Ansatz(tuple(current.values()), slots)
        res = extract(cs.p, reduced, reading, check=False).residuals
    keys = list(witness)
    return [(k, witness[k]) for k in keys if not _implied(k, keys)]


def perturb_and_refute(spec: OperatorSpec, perturb, reading: Reading | None = None,
                       check: bool = True) -> ConditionId | None:
    """First condition broken by the perturbed family, or None if it still passes."""
    if check:
        rep = verify(spec, reading=reading, stop_early=True)
        if not rep.hamiltonian:
            raise PreconditionError(f"{spec.name}: unperturbed family already fails "
                                    f"{rep.first_failure().label(rep.fields, rep.dims)}")
    w = [list(r) for r in spec.omega]
    for p in perturb:
        w[p.i][p.j] = w[p.i][p.j] + p.delta
        w[p.j][p.i] = w[p.j][p.i] - p.delta
    rep = verify(spec.with_omega(w), reading=reading, stop_early=True)
    return rep.first_failure()


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Direction:
    case: str
    slot: int                # 1-based omega slot (f1, f2, f3 order)
    delta: str               # DSL text; may use eps


@dataclass(frozen=True)
class NecessityFixture:
    entry: str
    forced: tuple = ()       # atoms (as text) expected from the generic ansatz
    directions: tuple = ()


@dataclass
class FixtureResult:
    fixture: NecessityFixture
    forced: list             # [(atom text, witness Expr)]
    refutations: list        # [(Direction, ConditionId | None)]
    precondition: str | None = None     # set when P itself fails the M conditions

    @property
    def forced_ok(self) -> bool:
        got = {a for a, _ in self.forced}
        return set(self.fixture.forced) <= got

    @property
    def refuted(self) -> bool:
        return all(c is not None for _, c in self.refutations)

    @property
    def ok(self) -> bool:
        return self.forced_ok and self.refuted


def _d(case, slot, delta):
    return Direction(case, slot, delta)


def atom_text(atom, spec: OperatorSpec) -> str:
    return expr_to_text(func(atom[1], atom[2], atom[3]), spec.space.fields, spec.space.dims)


def direction_perturbation(entry: catalog.CatalogEntry, d: Direction):
    spec = entry.spec(d.case)
    i, j = slot_pair(d.slot, spec.n)
    return spec, Perturbation(i, j, entry.parse_expr(d.delta, d.case))


def run_fixture(fx: NecessityFixture, reading: Reading | None = None, forced: bool = True) -> FixtureResult:
    """Run one fixture.

    If the first-order part fails the M conditions the perturbations are
    still applied (without the precondition check) and the failure is noted
    in ``precondition``; such refutations say nothing about omega.
    """
    entry = catalog.get(fx.entry)
    p = entry.spec()
    pre = None
    bad = check_mokhov(p, reading=reading)
    if bad:
        first = min(bad, key=ConditionId.sort_key)
        pre = f"first-order part fails {first.label(p.space.fields, p.space.dims)}"
    atoms = []
    if forced and fx.forced and pre is None:
        cs = extract(p, reading=reading, check=False)
        atoms = [(atom_text(a, p), w) for a, w in detect_forced_zero(cs, reading)]
    refs = []
    for d in fx.directions:
        spec, pert = direction_perturbation(entry, d)
        refs.append((d, perturb_and_refute(spec, [pert], reading, check=pre is None)))
    return FixtureResult(fx, atoms, refs, pre)


# Forced atoms refer to the generic ansatz; directions are fixed, not random.
FIXTURES = {
    'P1': NecessityFixture(
        'P1',
        forced=('diff(f(u, v), u)',),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 1, 'u - F(v)'),
        )),
    'P2': NecessityFixture(
        'P2',
        forced=(),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 1, 'eps*v'),
        )),
    'P3': NecessityFixture(
        'P3',
        forced=(
            'diff(f1(u, v, w), w)',
            'diff(f2(u, v, w), w)',
            'diff(f1(u, v, w), v)',
            'diff(f2(u, v, w), u)',
            'diff(f3(u, v, w), v)',
            'diff(f3(u, v, w), u)',
            'diff(f3(u, v, w), w, w)',
            'diff(f2(u, v, w), v, v)',
            'diff(f1(u, v, w), u, u)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P4': NecessityFixture(
        'P4',
        forced=(
            'f1(u, v, w)',
            'f2(u, v, w)',
            'f3(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
            _d('1', 1, '1'),
        )),
    'P5': NecessityFixture(
        'P5',
        forced=('f2(u, v, w)', 'f3(u, v, w)'),
        directions=(
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P6': NecessityFixture(
        'P6',
        forced=('f2(u, v, w)', 'f3(u, v, w)'),
        directions=(
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P7': NecessityFixture(
        'P7',
        forced=(
            'diff(f2(u, v, w), u)',
            'f1(u, v, w)',
            'f3(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps*u'),
            _d('1', 3, 'eps'),
            _d('2', 1, 'eps*u'),
            _d('2', 2, 'eps*u'),
            _d('2', 3, 'eps'),
            _d('3', 1, 'eps'),
            _d('3', 2, 'eps'),
            _d('3', 3, 'eps'),
        )),
    'P8': NecessityFixture(
        'P8',
        forced=(
            'diff(f2(u, v, w), u)',
            'f3(u, v, w)',
            'f1(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps*u'),
            _d('1', 3, 'eps'),
            _d('2', 1, 'eps*u'),
            _d('2', 2, 'eps*u'),
            _d('2', 3, 'eps'),
        )),
    'P9': NecessityFixture(
        'P9',
        forced=(
            'f3(u, v, w)',
            'diff(f1(u, v, w), u)',
            'f2(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P10': NecessityFixture(
        'P10',
        forced=('f3(u, v, w)', 'f1(u, v, w)'),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P11': NecessityFixture(
        'P11',
        forced=('f3(u, v, w)',),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P12': NecessityFixture(
        'P12',
        forced=(
            'f1(u, v, w)',
            'f2(u, v, w)',
            'f3(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P13': NecessityFixture(
        'P13',
        forced=(
            'diff(f2(u, v, w), v)',
            'diff(f2(u, v, w), u)',
            'f1(u, v, w)',
            'f3(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps*u'),
            _d('1', 3, 'eps'),
        )),
    'P14': NecessityFixture(
        'P14',
        forced=(
            'diff(f1(u, v, w), v)',
            'diff(f1(u, v, w), w)',
            'diff(f2(u, v, w), v)',
            'diff(f2(u, v, w), w)',
            'diff(f1(u, v, w), u)',
            'diff(f3(u, v, w), v)',
            'diff(f3(u, v, w), w)',
            'diff(f2(u, v, w), u)',
            'diff(f3(u, v, w), u)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps*u'),
            _d('1', 3, 'eps*u'),
        )),
    'P15': NecessityFixture(
        'P15',
        forced=(
            'diff(f1(u, v, w), v)',
            'diff(f1(u, v, w), u)',
            'f3(u, v, w)',
            'f2(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
            _d('2', 1, 'eps*u'),
            _d('2', 2, 'eps'),
            _d('2', 3, 'eps*u'),
            _d('3', 1, 'eps*u'),
            _d('3', 2, 'eps*u'),
            _d('3', 3, 'eps'),
            _d('4', 1, 'eps*u'),
            _d('4', 2, 'eps'),
            _d('4', 3, 'eps'),
        )),
    'P16': NecessityFixture(
        'P16',
        forced=(
            'diff(f1(u, v, w), v)',
            'diff(f1(u, v, w), u)',
            'f2(u, v, w)',
            'f3(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
            _d('2', 1, 'eps*u'),
            _d('2', 2, 'eps'),
            _d('2', 3, 'eps*u'),
            _d('3', 1, 'eps*u'),
            _d('3', 2, 'eps'),
            _d('3', 3, 'eps'),
        )),
    'P17': NecessityFixture(
        'P17',
        forced=(
            'diff(f1(u, v, w), v)',
            'diff(f1(u, v, w), u)',
            'diff(f2(u, v, w), u)',
            'f3(u, v, w)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P18': NecessityFixture(
        'P18',
        forced=(
            'diff(f1(u, v, w), v)',
            'diff(f1(u, v, w), u)',
            'f3(u, v, w)',
            'diff(f2(u, v, w), u)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P19': NecessityFixture(
        'P19',
        forced=(
            'diff(f1(u, v, w), v)',
            'diff(f1(u, v, w), u)',
            'f3(u, v, w)',
            'diff(f2(u, v, w), u)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P20': NecessityFixture(
        'P20',
        forced=(
            'diff(f1(u, v, w), v)',
            'diff(f1(u, v, w), u)',
            'diff(f1(u, v, w), w)',
            'diff(f3(u, v, w), v)',
            'diff(f3(u, v, w), u)',
            'diff(f3(u, v, w), w)',
            'diff(f2(u, v, w), u, u)',
            'diff(f2(u, v, w), w, w)',
            'diff(f2(u, v, w), u, w)',
        ),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
            _d('1', 2, 'u/v - c/v'),
        )),
    'P21': NecessityFixture(
        'P21',
        forced=(
            'diff(f1(u, v, w), v)',
            'diff(f1(u, v, w), w)',
            'diff(f1(u, v, w), u)',
            'diff(f3(u, v, w), v)',
            'diff(f3(u, v, w), w)',
            'diff(f3(u, v, w), u)',
            'diff(f2(u, v, w), u, u)',
            'diff(f2(u, v, w), u, w)',
            'diff(f2(u, v, w), w, w)',
        ),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P22': NecessityFixture(
        'P22',
        forced=(
            'f1(u, v, w)',
            'f3(u, v, w)',
            'diff(f2(u, v, w), u)',
        ),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P23': NecessityFixture(
        'P23',
        forced=('diff(f1(u, v, w), v)', 'diff(f1(u, v, w), u)'),
        directions=(
            _d('1', 1, 'eps'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'P24': NecessityFixture(
        'P24',
        forced=(),
        directions=(
            _d('1', 1, 'eps*w'),
            _d('1', 2, 'eps'),
            _d('1', 3, 'eps'),
        )),
    'ThreeWave1D': NecessityFixture(
        'ThreeWave1D',
        forced=(
            'diff(f1(u, v, w), u)',
            'diff(f2(u, v, w), u)',
            'diff(f1(u, v, w), v)',
            'diff(f2(u, v, w), w)',
            'diff(f3(u, v, w), v)',
            'diff(f3(u, v, w), w)',
            'diff(f3(u, v, w), u, u)',
            'diff(f2(u, v, w), v, v)',
            'diff(f1(u, v, w), w, w)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps*u'),
            _d('1', 3, 'eps*u'),
        )),
    'ThreeWave2D': NecessityFixture(
        'ThreeWave2D',
        forced=(
            'diff(f1(u, v, w), u)',
            'diff(f2(u, v, w), u)',
            'diff(f1(u, v, w), v)',
            'diff(f2(u, v, w), w)',
            'diff(f3(u, v, w), v)',
            'diff(f3(u, v, w), w)',
            'diff(f3(u, v, w), u, u)',
            'diff(f2(u, v, w), v, v)',
            'diff(f1(u, v, w), w, w)',
        ),
        directions=(
            _d('1', 1, 'eps*u'),
            _d('1', 2, 'eps*u'),
            _d('1', 3, 'eps*u'),
        )),
}
