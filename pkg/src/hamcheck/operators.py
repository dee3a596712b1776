"""Non-homogeneous hydrodynamic operators ``P + omega`` in N spatial dimensions.

The first-order part is stored through its leading coefficients
``g[a][i][j] = g^{ij a}`` and the tail coefficients
``b[a][i][j][k] = b_k^{ij a}``, i.e. the coefficient of the jet variable
``u^k_a`` in entry ``(i, j)`` of the tail matrix.  This index order is used
everywhere in the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .symkernel import (
    ZERO, Expr, JetVar, NonLinearJetError, Param, RewriteTable,
    _coerce, coeff_of_jet, jet, jet_free_part,
)

__all__ = [
    "FieldSpace", "OperatorSpec", "OperatorError", "Degeneracy",
    "from_parts", "tail_matrix", "degeneracy", "matrix_rank", "determinant",
]


class OperatorError(ValueError):
    pass


@dataclass(frozen=True)
class FieldSpace:
    fields: tuple = ("u", "v")
    dims: tuple = ("x", "y")

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(self, "dims", tuple(self.dims))
        if not self.fields or not self.dims:
            raise OperatorError("need at least one field and one dimension")
        names = self.fields + self.dims
        if len(set(names)) != len(names):
            raise OperatorError(f"field and dimension names must be unique: {names}")

    @property
    def n(self) -> int:
        return len(self.fields)

    @property
    def N(self) -> int:
        return len(self.dims)

    def field_index(self, name: str) -> int:
        return self.fields.index(name)

    def dim_index(self, name: str) -> int:
        return self.dims.index(name)


def _matrix(rows, n: int, what: str) -> tuple:
    rows = tuple(tuple(_coerce(x) for x in row) for row in rows)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise OperatorError(f"{what} must be {n}x{n}")
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            if x is NotImplemented:
                raise OperatorError(f"{what}[{i}][{j}] is not an expression")
    return rows


def _zero_matrix(n: int) -> tuple:
    return tuple(tuple(ZERO for _ in range(n)) for _ in range(n))


@dataclass(frozen=True, eq=False)
class OperatorSpec:
    space: FieldSpace
    g: tuple
    b: tuple
    omega: tuple
    rewrites: RewriteTable = field(default_factory=RewriteTable)
    name: str = ""

    def __post_init__(self):
        n, N = self.space.n, self.space.N
        if len(self.g) != N or len(self.b) != N:
            raise OperatorError(f"expected {N} leading/tail coefficient blocks")
        g = tuple(_matrix(m, n, f"g{self.space.dims[a]}") for a, m in enumerate(self.g))
        omega = _matrix(self.omega, n, "omega")
        b = tuple(
            tuple(tuple(tuple(_coerce(self.b[a][i][j][k]) for k in range(n))
                        for j in range(n)) for i in range(n))
            for a in range(N))
        r = self.rewrites
        if r:
            g = tuple(tuple(tuple(r.apply(x) for x in row) for row in m) for m in g)
            omega = tuple(tuple(r.apply(x) for x in row) for row in omega)
            b = tuple(tuple(tuple(tuple(r.apply(x) for x in bk) for bk in bj) for bj in bi) for bi in b)
        for what, mats in (("g", g), ("omega", (omega,))):
            for m in mats:
                for row in m:
                    for x in row:
                        if x.has_jets():
                            raise OperatorError(f"jet variables are not allowed in {what}")
        for ba in b:
            for bi in ba:
                for bj in bi:
                    for x in bj:
                        if x.has_jets():
                            raise OperatorError("jet variables are not allowed in b")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "omega", omega)

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def N(self) -> int:
        return self.space.N

    def with_omega(self, omega, name: str | None = None, rewrites: RewriteTable | None = None) -> "OperatorSpec":
        r = self.rewrites.merged(rewrites) if rewrites else self.rewrites
        return OperatorSpec(self.space, self.g, self.b, omega, r, self.name if name is None else name)

    def negated(self, omega_too: bool = False) -> "OperatorSpec":
        """The operator ``-P + omega`` (or ``-(P + omega)``)."""
        g = tuple(tuple(tuple(-x for x in row) for row in m) for m in self.g)
        b = tuple(tuple(tuple(tuple(-x for x in bk) for bk in bj) for bj in bi) for bi in self.b)
        w = self.omega
        if omega_too:
            w = tuple(tuple(-x for x in row) for row in w)
        return OperatorSpec(self.space, g, b, w, self.rewrites, self.name)

    def map_entries(self, fn) -> "OperatorSpec":
        """Apply ``fn`` to every coefficient (g, b and omega)."""
        g = tuple(tuple(tuple(fn(x) for x in row) for row in m) for m in self.g)
        b = tuple(tuple(tuple(tuple(fn(x) for x in bk) for bk in bj) for bj in bi) for bi in self.b)
        w = tuple(tuple(fn(x) for x in row) for row in self.omega)
        return OperatorSpec(self.space, g, b, w, self.rewrites, self.name)

    def entries(self):
        """Yield ``(label, expr)`` for every stored coefficient."""
        d, f = self.space.dims, self.space.fields
        for a in range(self.N):
            for i in range(self.n):
                for j in range(self.n):
                    yield f"g{d[a]}[{f[i]},{f[j]}]", self.g[a][i][j]
        for a in range(self.N):
            for i in range(self.n):
                for j in range(self.n):
                    for k in range(self.n):
                        yield f"b{d[a]}[{f[i]},{f[j]};{f[k]}]", self.b[a][i][j][k]
        for i in range(self.n):
            for j in range(self.n):
                yield f"omega[{f[i]},{f[j]}]", self.omega[i][j]


def from_parts(space: FieldSpace, g: Sequence, tail=None, omega=None,
               rewrites: RewriteTable | None = None, name: str = "") -> OperatorSpec:
    """Build an operator from leading matrices, a tail matrix and omega.

    ``tail[i][j]`` must be linear in the jet variables with no jet-free part;
    ``b`` is read off as the jet coefficients.
    """
    n, N = space.n, space.N
    g = list(g)
    if len(g) != N:
        raise OperatorError(f"expected {N} leading matrices, got {len(g)}")
    tail = _zero_matrix(n) if tail is None else _matrix(tail, n, "tail")
    omega = _zero_matrix(n) if omega is None else _matrix(omega, n, "omega")
    b = [[[[ZERO] * n for _ in range(n)] for _ in range(n)] for _ in range(N)]
    for i in range(n):
        for j in range(n):
            t = tail[i][j]
            try:
                if not jet_free_part(t).is_zero():
                    raise OperatorError(
                        f"tail[{space.fields[i]},{space.fields[j]}] has a jet-free part; it belongs in omega")
                for a in t.atoms():
                    if isinstance(a, tuple) and a[0] == 1 and (a[1] >= n or a[2] >= N):
                        raise OperatorError(f"jet variable out of range in tail[{i}][{j}]")
                for a in range(N):
                    for k in range(n):
                        b[a][i][j][k] = coeff_of_jet(t, k, a)
            except NonLinearJetError as exc:
                raise NonLinearJetError(
                    f"tail not linear in jet variables at [{space.fields[i]},{space.fields[j]}]") from exc
    return OperatorSpec(space, tuple(g), b, omega, rewrites or RewriteTable(), name)


def tail_matrix(spec: OperatorSpec) -> tuple:
    """Re-assemble ``sum_{k,a} b_k^{ij a} u^k_a``."""
    n, N = spec.n, spec.N
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            t = ZERO
            for a in range(N):
                for k in range(n):
                    c = spec.b[a][i][j][k]
                    if not c.is_zero():
                        t = t + c * jet(k, a)
            row.append(t)
        rows.append(tuple(row))
    return tuple(rows)


def matrix_rank(m, rewrites: RewriteTable | None = None) -> int:
    """Rank over the field of rational functions (exact Gaussian elimination)."""
    rows = [[_coerce(x) for x in r] for r in m]
    if rewrites:
        rows = [[rewrites.apply(x) for x in r] for r in rows]
    nrows = len(rows)
    ncols = len(rows[0]) if rows else 0
    rank = 0
    col = 0
    while rank < nrows and col < ncols:
        piv = next((r for r in range(rank, nrows) if not rows[r][col].is_zero()), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank][col]
        for r in range(rank + 1, nrows):
            x = rows[r][col]
            if x.is_zero():
                continue
            f = x / p
            rows[r] = [rows[r][c] - f * rows[rank][c] for c in range(ncols)]
        rank += 1
        col += 1
    return rank


def determinant(m) -> Expr:
    """Cofactor-expansion determinant (intended for small matrices)."""
    m = [[_coerce(x) for x in r] for r in m]
    n = len(m)
    if n == 1:
        return m[0][0]
    total = ZERO
    for j in range(n):
        if m[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * determinant(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


@dataclass(frozen=True)
class Degeneracy:
    determinants: tuple      # det(g^a) per dimension
    degenerate: tuple        # det(g^a) == 0 per dimension
    pencil_rank: int

    @property
    def nondegenerate(self) -> bool:
        return not any(self.degenerate)


PENCIL_PARAM = "lambda_pencil"


def degeneracy(spec: OperatorSpec) -> Degeneracy:
    """Determinants of the leading matrices and the generic rank of their pencil.

    The pencil is ``g^1 - lam_2 g^2 - ... - lam_N g^N`` with fresh parameters.
    """
    dets = tuple(determinant(m) for m in spec.g)
    n = spec.n
    pencil = [list(r) for r in spec.g[0]]
    for a in range(1, spec.N):
        lam = Param(PENCIL_PARAM if spec.N == 2 else f"{PENCIL_PARAM}{a}")
        for i in range(n):
            for j in range(n):
                pencil[i][j] = pencil[i][j] - _coerce(lam) * spec.g[a][i][j]
    return Degeneracy(dets, tuple(d.is_zero() for d in dets), matrix_rank(pencil, spec.rewrites))
