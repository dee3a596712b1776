"""Two-field operators: the classified omega passes, a nearby one does not.

Run: python3 demos/two_components.py
"""
from hamcheck import catalog, verify
from hamcheck.dsl import expr_to_text


def show(title, spec):
    rep = verify(spec)
    print(f"{title}: {'Hamiltonian' if rep.hamiltonian else 'NOT Hamiltonian'}")
    for cid in rep.failing()[:4]:
        print(f"    {cid.label(rep.fields, rep.dims)} = {expr_to_text(rep.residuals[cid], rep.fields)}")


def main():
    p1 = catalog.get("P1")
    # F stays an abstract function of v throughout
    show("P1 with f = F(v)", p1.spec("1"))

    u = p1.parse_expr("u")
    show("P1 with f = u", p1.spec().with_omega([[0, u], [-u, 0]]))

    show("P2 with f = F(v)/u", catalog.get("P2").spec("1"))


if __name__ == "__main__":
    main()
