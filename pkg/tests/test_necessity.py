import dataclasses

import pytest

from hamcheck import catalog
from hamcheck.conditions import ConditionId, verify
from hamcheck.dsl import Perturbation
from hamcheck.necessity import (
    FIXTURES, Ansatz, AnsatzConstraintSet, Direction, NecessityFixture, PreconditionError,
    atom_text, detect_forced_zero, direction_perturbation, extract, perturb_and_refute,
    run_fixture, slot_pair,
)
from hamcheck.symkernel import FuncDeriv, ZERO, func, is_zero, substitute, var


def forced_texts(name):
    p = catalog.get(name).spec()
    return {atom_text(a, p) for a, _ in detect_forced_zero(extract(p))}


def test_p1_forces_u_derivative():
    assert "diff(f(u, v), u)" in forced_texts("P1")


def test_p5_forces_f2_f3():
    got = forced_texts("P5")
    assert {"f2(u, v, w)", "f3(u, v, w)"} <= got
    assert "f1(u, v, w)" not in got


def test_p12_forces_everything():
    assert forced_texts("P12") == {"f1(u, v, w)", "f2(u, v, w)", "f3(u, v, w)"}


def test_p9_forces_f2_f3():
    assert {"f2(u, v, w)", "f3(u, v, w)"} <= forced_texts("P9")


def test_zero_ansatz_is_empty():
    cs = extract(catalog.get("P12").spec(), Ansatz.zero(3))
    assert len(cs) == 0
    assert detect_forced_zero(cs) == []


def test_no_forced_shape():
    p = catalog.get("P1").spec()
    f = func("f", (0, 1))
    cs = AnsatzConstraintSet(p, Ansatz.generic(2), {ConditionId("C1", (0, 0, 1, 0)): f + var(0)})
    assert detect_forced_zero(cs, closure=False) == []


def test_precondition():
    with pytest.raises(PreconditionError, match="M2"):
        extract(catalog.get("P24").spec())


def test_slot_pair():
    assert [slot_pair(k, 3) for k in (1, 2, 3)] == [(0, 1), (0, 2), (1, 2)]
    with pytest.raises(ValueError):
        slot_pair(4, 3)


def _refute(name, case, slot, delta):
    e = catalog.get(name)
    spec, pert = direction_perturbation(e, Direction(case, slot, delta))
    return perturb_and_refute(spec, [pert])


def test_p2_perturbation_refuted():
    cid = _refute("P2", "1", 1, "eps*v")
    assert cid is not None and cid.family in ("C1", "C2")


def test_p13_perturbation_refuted():
    assert _refute("P13", "1", 2, "eps*u") is not None


def test_zero_direction_not_refuted():
    assert _refute("P13", "1", 2, "0") is None
    assert _refute("P1", "1", 1, "0*eps") is None


def test_failing_family_rejected():
    spec = catalog.get("P4").spec()
    bad = spec.with_omega([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    with pytest.raises(PreconditionError):
        perturb_and_refute(bad, [Perturbation(0, 1, ZERO)])


def test_every_entry_has_a_fixture():
    assert set(FIXTURES) == set(catalog.names())


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_fixture(name):
    res = run_fixture(FIXTURES[name])
    assert res.ok, (res.forced, res.refutations)
    if name == "P24":
        assert res.precondition and "M2" in res.precondition
    else:
        assert res.precondition is None


def test_empty_fixture_is_vacuous():
    res = run_fixture(NecessityFixture("P5"))
    assert res.ok and res.forced == [] and res.refutations == []


@pytest.mark.parametrize("name", [n for n in sorted(FIXTURES) if FIXTURES[n].forced and n != "P24"])
def test_forced_atoms_hold_on_family(name):
    # forced atoms hold at generic points of P, so cases that specialise P are skipped
    e = catalog.get(name)
    n = e.spec().n
    gen = Ansatz.generic(n)
    p = e.spec()
    found = detect_forced_zero(extract(p))
    for case in e.cases:
        if case.p_bind:
            continue
        spec = e.spec(case)
        bindings = {}
        for k, base in enumerate(gen.unknowns):
            i, j = slot_pair(k + 1, n)
            bindings[base] = spec.omega[i][j]
        for atom, witness in found:
            assert not witness.is_zero()
            image = substitute(func(atom[1], atom[2], atom[3]), bindings, spec.rewrites)
            assert is_zero(image, spec.rewrites), (name, case.label, atom_text(atom, p))


@pytest.mark.parametrize("name", ["P1", "P4", "P9", "P12"])
def test_witness_vanishes_with_atom(name):
    p = catalog.get(name).spec()
    for atom, witness in detect_forced_zero(extract(p)):
        if atom[3]:
            continue
        # the witness may live in a reduced ansatz with fewer arguments
        bases = {FuncDeriv(a[1], a[2]) for a in witness.atoms() if a[0] == 3 and a[1] == atom[1]}
        assert bases
        assert is_zero(substitute(witness, {b: ZERO for b in bases}))


@pytest.mark.parametrize("name,label", [
    (e.name, c.label) for e in catalog.CATALOG.values() for c in e.cases if c.p_bind])
def test_case_needs_its_p_specialisation(name, label):
    # an omega family paired with a generic P (off-case combination) must fail
    e = catalog.get(name)
    case = dataclasses.replace(e.case(label), p_bind=())
    assert verify(e.spec(label)).hamiltonian
    assert not verify(e.spec(case)).hamiltonian
