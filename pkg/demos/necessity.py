"""Necessity side: which unknowns the conditions force to vanish.

The generic ansatz puts unknown functions of all fields into omega; the
checker then looks for residuals of the form q * A with q free of unknowns.

Run: python3 demos/necessity.py
"""
from hamcheck import catalog
from hamcheck.necessity import FIXTURES, atom_text, detect_forced_zero, extract, run_fixture


def main():
    for name in ("P1", "P5", "P12"):
        p = catalog.get(name).spec()
        forced = detect_forced_zero(extract(p))
        print(f"{name}: forced to vanish {', '.join(atom_text(a, p) for a, _ in forced)}")

    res = run_fixture(FIXTURES["P2"])
    for d, cid in res.refutations:
        print(f"P2 slot {d.slot} += {d.delta}: broken at {cid}")


if __name__ == "__main__":
    main()
