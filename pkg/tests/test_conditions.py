import random

import pytest
import sympy as sp

from hamcheck import catalog
from hamcheck.conditions import (
    DEFAULT_READING, FAMILIES, PRINTED, ConditionId, Reading, TermEdit, c2_variants,
    check_compatibility, check_mokhov, check_ultralocal, m6_variants, residuals, verify,
)
from hamcheck.operators import FieldSpace, from_parts
from hamcheck.symkernel import add, const, mul, neg, var
from jacobi_oracle import JacobiOracle, JetSpace, to_sympy

u, v, w = var(0), var(1), var(2)
VALID = [n for n in catalog.names() if n != "P24"]


def with_f(name, *slots):
    """Catalog P with an omega built from expression texts above the diagonal."""
    e = catalog.get(name)
    spec = e.spec()
    n = spec.n
    om = [[const(0)] * n for _ in range(n)]
    it = iter(slots)
    for i in range(n):
        for j in range(i + 1, n):
            x = e.parse_expr(next(it))
            om[i][j], om[j][i] = x, -x
    return spec.with_omega(om)


# -- ultralocal -------------------------------------------------------------

def w2_oracle(omega):
    """Brute-force expansion of the cyclic W2 sum with sympy."""
    js = JetSpace(("u", "v", "w"), ("x",))
    W = [[to_sympy(x, js) for x in row] for row in omega]
    X = [js.sym("u", i, (0,)) for i in range(3)]
    out = {}
    for i in range(3):
        for j in range(3):
            for k in range(3):
                s = sum(W[i][l] * sp.diff(W[j][k], X[l]) + W[j][l] * sp.diff(W[k][i], X[l])
                        + W[k][l] * sp.diff(W[i][j], X[l]) for l in range(3))
                out[(i, j, k)] = sp.simplify(s)
    return out


def test_three_wave_omega_is_poisson():
    assert check_ultralocal(catalog.get("ThreeWave1D").spec("1")) == {}


def test_zero_omega_ultralocal():
    assert check_ultralocal(catalog.get("P4").spec()) == {}


def test_linear_gradient_omega_passes_w2():
    # J = (w, -v, u) is a gradient, so this linear omega is Poisson
    spec = with_f("P4", "u", "v", "w")
    assert all(x == 0 for x in w2_oracle(spec.omega).values())
    assert check_ultralocal(spec, full_range=True) == {}


def test_w2_residual_matches_expansion():
    spec = with_f("P4", "v", "0", "u")
    brute = w2_oracle(spec.omega)
    ours = dict(check_ultralocal(spec, full_range=True))
    js = JetSpace(("u", "v", "w"), ("x",))
    assert ours
    for (i, j, k), val in brute.items():
        got = ours.get(ConditionId("W2", (i, j, k)))
        got = 0 if got is None else to_sympy(got, js)
        assert sp.simplify(got - val) == 0


def test_w1_skew():
    e = catalog.get("P1")
    x = e.parse_expr("u")
    bad = e.spec().with_omega([[0, x], [x, 0]])
    assert ConditionId("W1", (0, 1)) in check_ultralocal(bad)


# -- leading operator -------------------------------------------------------

def test_p1_mokhov():
    assert check_mokhov(catalog.get("P1").spec()) == {}


def test_zero_operator():
    space = FieldSpace(("u", "v"), ("x", "y"))
    zero = from_parts(space, [[[0, 0], [0, 0]]] * 2)
    assert verify(zero).hamiltonian


def test_m2_single_entry_change():
    e = catalog.get("P1")
    p = e.spec()
    g = [[list(r) for r in m] for m in p.g]
    g[1][0][0] = u
    bad = type(p)(p.space, g, p.b, p.omega)
    res = check_mokhov(bad)
    assert res[ConditionId("M2", (0, 0, 1, 1))] == -1


def test_printed_m6_fails_valid_entries():
    failing = [n for n in VALID if check_mokhov(catalog.get(n).spec(), reading=PRINTED)]
    assert "P2" in failing and "P1" not in failing
    assert all(check_mokhov(catalog.get(n).spec()) == {} for n in failing)


def test_m_residuals_ignore_omega():
    base = catalog.get("P23").spec()
    full = catalog.get("P23").spec("1")
    a = {c: r for c, r in residuals(base, ("M1", "M2", "M3"))}
    b = {c: r for c, r in residuals(full, ("M1", "M2", "M3"))}
    assert a.keys() == b.keys() and all(a[c].same_form(b[c]) for c in a)


# -- compatibility ----------------------------------------------------------

def test_zero_omega_compatible():
    for name in catalog.names():
        assert check_compatibility(catalog.get(name).spec()) == {}


def test_p1_abstract_family_passes():
    assert verify(catalog.get("P1").spec("1")).hamiltonian


def test_p1_f_equals_u_pinned():
    rep = verify(with_f("P1", "u"))
    assert not rep.hamiltonian
    assert rep.first_failure() == ConditionId("C1", (0, 0, 1, 0))
    assert rep.residuals[rep.first_failure()] == 1
    assert ConditionId("C2", (0, 0, 1, 1, 1)) in rep.residuals


def test_p3_family():
    assert verify(catalog.get("P3").spec("1")).hamiltonian


def test_p4_zero_and_one():
    assert verify(catalog.get("P4").spec("1")).hamiltonian
    rep = verify(with_f("P4", "1", "0", "0"))
    assert rep.first_failure() == ConditionId("C1", (0, 0, 1, 1))
    assert rep.residuals[rep.first_failure()] == const(1) / 2


def test_three_wave_2d():
    assert verify(catalog.get("ThreeWave2D").spec("1")).hamiltonian


def test_c_linear_in_omega():
    spec = with_f("P1", "u*v")
    flipped = spec.with_omega([[-x for x in row] for row in spec.omega])
    a = check_compatibility(spec)
    b = check_compatibility(flipped)
    assert a.keys() == b.keys() and all(a[c] == -b[c] for c in a)


# -- report mechanics -------------------------------------------------------

def test_full_range_agrees():
    for name in ("P2", "P13", "P23"):
        spec = catalog.get(name).spec("1")
        assert verify(spec, full_range=True).hamiltonian
    bad = with_f("P4", "1", "0", "0")
    short = verify(bad)
    full = verify(bad, full_range=True)
    assert set(short.residuals) <= set(full.residuals)
    assert sum(full.checked.values()) > sum(short.checked.values())


def test_family_filter_and_stop_early():
    bad = with_f("P4", "1", "0", "0")
    rep = verify(bad, families=["M"])
    assert rep.hamiltonian and set(rep.checked) == set(FAMILIES[2:9])
    rep = verify(bad, stop_early=True)
    assert len(rep.residuals) == 1
    with pytest.raises(ValueError):
        verify(bad, families=["Q"])


def test_condition_labels():
    cid = ConditionId("M2", (0, 0, 1, 1))
    assert cid.label() == "M2[i=1,j=1,k=2,alpha=2]"
    assert cid.label(("u", "v"), ("x", "y")) == "M2[i=u,j=u,k=v,alpha=y]"


# -- transcription gate -----------------------------------------------------

def _passes(spec, fams, reading):
    return not any(not r.is_zero() for _, r in residuals(spec, fams, reading=reading))


def test_unique_m6_variant():
    specs = [catalog.get(n).spec() for n in VALID]
    good = [rd for rd in m6_variants() if all(_passes(s, ("M6",), rd) for s in specs)]
    assert good == [Reading(m6_edits=(TermEdit(4, swap_dims=True, transpose=True),), c2_cyclic=False)]
    assert good[0].m6_terms() == DEFAULT_READING.m6_terms()


def test_c2_variants():
    specs = [catalog.get(n).spec(c) for n in VALID for c in catalog.get(n).cases]
    good = [rd for rd in c2_variants() if all(_passes(s, ("C2",), rd) for s in specs)]
    # the bare cyclic sum, and one edit equal to it modulo M2
    assert DEFAULT_READING in good
    assert len(good) == 2 and all(rd.c2_cyclic for rd in good)


def test_p24_known_failure():
    rep = verify(catalog.get("P24").spec())
    assert not rep.leading_ok
    assert ConditionId("M2", (0, 0, 2, 1)) in rep.residuals
    assert not JacobiOracle(catalog.get("P24").spec()).is_hamiltonian()


# -- independent oracle -----------------------------------------------------

def _oracle_cases():
    rng = random.Random(3)
    out = []
    for name in catalog.names():
        e = catalog.get(name)
        for c in e.cases:
            if c.rewrites:
                continue  # the oracle has no rewrite support
            s = e.spec(c)
            out.append((f"{name}-{c.label}", s))
            i, j = rng.sample(range(s.n), 2)
            f = mul(const(rng.randint(1, 3)), var(rng.randrange(s.n)))
            om = [list(r) for r in s.omega]
            om[i][j], om[j][i] = add(om[i][j], f), add(om[j][i], neg(f))
            out.append((f"{name}-{c.label}-perturbed", s.with_omega(om)))
    return out


@pytest.mark.parametrize("label,spec", _oracle_cases(), ids=lambda x: x if isinstance(x, str) else "")
def test_agrees_with_jacobi_oracle(label, spec):
    assert verify(spec).hamiltonian == JacobiOracle(spec).is_hamiltonian()
