from fractions import Fraction

import pytest

from hamcheck import catalog
from hamcheck.operators import (
    FieldSpace, OperatorError, OperatorSpec, degeneracy, determinant, from_parts,
    matrix_rank, tail_matrix,
)
from hamcheck.symkernel import NonLinearJetError, ZERO, const, func, jet, var

SPACE2 = FieldSpace(("u", "v"), ("x", "y"))
u, v = var(0), var(1)
X, Y = 0, 1


def nonzero_b(spec):
    out = {}
    for a in range(spec.N):
        for i in range(spec.n):
            for j in range(spec.n):
                for k in range(spec.n):
                    if not spec.b[a][i][j][k].is_zero():
                        out[(a, i, j, k)] = spec.b[a][i][j][k]
    return out


def test_p1_tail_coefficients():
    spec = catalog.get("P1").spec()
    assert nonzero_b(spec) == {(Y, 0, 0, 1): Fraction(1, 2)}


def test_p14_has_no_tail():
    assert nonzero_b(catalog.get("P14").spec()) == {}


def test_p2_tail_coefficients():
    b = nonzero_b(catalog.get("P2").spec())
    expected = {
        (X, 0, 1, 1): -1 / u, (Y, 0, 1, 1): -v / u,
        (X, 1, 0, 1): 1 / u, (Y, 1, 0, 1): v / u,
        (Y, 0, 0, 1): const(Fraction(1, 2)),
    }
    assert set(b) == set(expected)
    for key, val in expected.items():
        assert b[key] == val


def test_from_parts_matches_catalog():
    g = [[[1, 0], [0, 0]], [[v, 0], [0, 0]]]
    tail = [[Fraction(1, 2) * jet(1, Y), 0], [0, 0]]
    built = from_parts(SPACE2, g, tail)
    ref = catalog.get("P1").spec()
    assert all(x == y for (_, x), (_, y) in zip(built.entries(), ref.entries()))


def test_tail_round_trip():
    for name in catalog.names():
        spec = catalog.get(name).spec()
        again = from_parts(spec.space, spec.g, tail_matrix(spec), spec.omega, spec.rewrites)
        for (la, x), (lb, y) in zip(spec.entries(), again.entries()):
            assert la == lb and x == y, (name, la)


def test_nonlinear_tail_rejected():
    with pytest.raises(NonLinearJetError, match="tail not linear"):
        from_parts(SPACE2, [[[0, 0], [0, 0]]] * 2, [[jet(0, X) * jet(1, X), 0], [0, 0]])


def test_jet_free_tail_rejected():
    with pytest.raises(OperatorError, match="jet-free"):
        from_parts(SPACE2, [[[0, 0], [0, 0]]] * 2, [[u, 0], [0, 0]])


def test_jets_rejected_in_leading_and_omega():
    with pytest.raises(OperatorError, match="g"):
        from_parts(SPACE2, [[[jet(0, X), 0], [0, 0]], [[0, 0], [0, 0]]])
    with pytest.raises(OperatorError, match="omega"):
        from_parts(SPACE2, [[[0, 0], [0, 0]]] * 2, omega=[[0, jet(0, X)], [-jet(0, X), 0]])


def test_shape_errors():
    with pytest.raises(OperatorError):
        from_parts(SPACE2, [[[1, 0], [0, 0]]])
    with pytest.raises(OperatorError):
        FieldSpace(("u", "x"), ("x",))


def test_p3_nondegenerate():
    d = degeneracy(catalog.get("P3").spec())
    assert d.determinants[X] == -1
    assert not d.degenerate[X]


def test_ranks():
    assert degeneracy(catalog.get("P5").spec()).pencil_rank == 0
    assert degeneracy(catalog.get("P12").spec()).pencil_rank == 2


RANKS = {"rank 0": 0, "rank 1": 1, "rank 2": 2, "non-degenerate": 3}


@pytest.mark.parametrize("name", [n for n in catalog.names() if n.startswith("P") and n not in ("P1", "P2")])
def test_rank_class_consistent(name):
    e = catalog.get(name)
    assert degeneracy(e.spec()).pencil_rank == RANKS[e.rank_class]


def test_matrix_helpers():
    m = [[u, v], [u * u, u * v]]
    assert determinant(m).is_zero()
    assert matrix_rank(m) == 1
    assert matrix_rank([[ZERO, ZERO], [ZERO, ZERO]]) == 0
    F = func("F", (1,))
    assert determinant([[F, 1], [1, F]]) == F * F - 1


def test_negated_and_with_omega():
    spec = catalog.get("P2").spec()
    neg = spec.negated()
    assert neg.b[Y][0][1][1] == v / u
    w = spec.with_omega([[0, u], [-u, 0]])
    assert w.omega[0][1] == u and w.g == spec.g
