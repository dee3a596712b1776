import random

import pytest

import fuzzgen
from hamcheck import catalog
from hamcheck.dsl import DSLError, apply_perturbations, expr_to_text, load, parse, print_spec
from hamcheck.symkernel import FuncDeriv, Param, func, var

P2_TEXT = """
# the second two-field operator
fields u, v
dims x, y
gx = [[1, 0], [0, 0]]
gy = [[v, 0], [0, 0]]
tail = [[1/2*v_y, -(v_x + v*v_y)/u],
        [(v_x + v*v_y)/u, 0]]
"""


def same_spec(a, b):
    ea, eb = list(a.entries()), list(b.entries())
    return len(ea) == len(eb) and all(la == lb and x == y for (la, x), (lb, y) in zip(ea, eb))


def test_p2_text_matches_catalog():
    assert same_spec(parse(P2_TEXT), catalog.get("P2").spec())


def test_abstract_omega():
    spec = parse("fields u, v\ndims x, y\nfunc F(v)\nomega = [[0, F(v)/u], [-F(v)/u, 0]]")
    F = func("F", (1,))
    assert spec.omega[0][1] == F / var(0)
    assert spec.omega[1][0] == -F / var(0)


def test_empty_tail():
    spec = parse("fields u\ndims x\ngx = [[1]]\n")
    assert spec.b[0][0][0][0].is_zero()


def test_param_printed():
    spec = parse("fields u, v\ndims x\nparam lambda\ngx = [[lambda, 0], [0, 1]]")
    text = print_spec(spec)
    assert "param lambda" in text
    assert same_spec(parse(text), spec)


def test_p23_denominators():
    text = print_spec(catalog.get("P23").spec("1"))
    assert "/(u*w - v)" in text


def test_rewrite_and_diff():
    text = """fields u, v, w
dims x
func f1(v, w), f3(v, w), g(v, w)
rewrite diff(g(v, w), w) = diff(f1(v, w)/f3(v, w), v)
omega = [[0, diff(g(v, w), w), 0], [-diff(g(v, w), w), 0, 0], [0, 0, 0]]
"""
    spec = parse(text)
    assert not any(a[0] == 3 and a[1] == "g" for a in spec.omega[0][1].atoms())
    assert same_spec(parse(print_spec(spec)), spec)


def test_perturb_block():
    doc = load(fuzzgen.VALID_SEED)
    assert len(doc.perturb) == 1 and doc.perturb[0].i == 0 and doc.perturb[0].j == 1
    spec = apply_perturbations(doc.spec, doc.perturb)
    assert spec.omega[0][1] == func("F", (1,)) + Param("eps") * var(0)
    assert spec.omega[1][0] == -spec.omega[0][1]
    again = load(print_spec(doc.spec, doc.perturb))
    assert len(again.perturb) == 1 and again.perturb[0].delta == doc.perturb[0].delta


@pytest.mark.parametrize("text,line,col", [
    ("fields u, v\ndims x\ngx = [[1, 0], [0, @]]", 3, 19),
    ("fields u\ndims x\ngq = [[1]]", 3, 1),
    ("fields u, v\ndims x\ngx = [[1, 0]]", 3, 6),
    ("fields u\ndims x\ngx = [[u^999]]", 3, 10),
    ("fields u\ndims x\ngx = [[1/0]]", 0, 0),
    ("fields u, u\ndims x", 1, 11),
    ("dims x\ngx = [[1]]", 2, 1),
    ("fields u, v\ndims x\ntail = [[u_x*v_x, 0], [0, 0]]", 3, 1),
    ("fields u, v\ndims x\nomega = [[0, u_x], [-u_x, 0]]", 3, 1),
    ("fields u, v\ndims x\nperturb { omega[1, 1] += u }", 3, 11),
    ("fields u\ndims x\ngx = [[F(u)]]", 3, 8),
])
def test_errors_have_locations(text, line, col):
    with pytest.raises(DSLError) as info:
        load(text)
    err = info.value
    if line:
        assert (err.line, err.col) == (line, col), str(err)
    assert err.message


def test_deep_nesting_is_structured():
    with pytest.raises(DSLError):
        load("fields u\ndims x\ngx = [[" + "(" * 5000 + "u" + ")" * 5000 + "]]")


@pytest.mark.parametrize("name", catalog.names())
def test_catalog_round_trip(name):
    e = catalog.get(name)
    for case in [None, *e.cases]:
        spec = e.spec(case)
        again = parse(print_spec(spec))
        assert same_spec(again, spec), (name, case)
        assert again.rewrites.rules.keys() == spec.rewrites.rules.keys()


def test_expr_text_round_trip():
    e = catalog.get("P23")
    for x in (e.parse_expr("F1(w)^2/(w*u - v)^3 - 1/2", "1"), e.parse_expr("-w_x/v + 3")):
        assert e.parse_expr(expr_to_text(x, ("u", "v", "w"), ("x", "y")), "1") == x


def test_fuzz_smoke():
    rng = random.Random(11)
    for _ in range(5000):
        try:
            load(fuzzgen.sample(rng))
        except DSLError:
            pass
