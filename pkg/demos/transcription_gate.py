"""Why the checker uses a corrected reading of M6 and C2.

The leading-term conditions as printed reject operators that an independent
Jacobi check accepts.  Trying every single-term edit of M6 leaves exactly one
that accepts all valid catalog operators.

Run: python3 demos/transcription_gate.py
"""
from hamcheck import catalog
from hamcheck.conditions import DEFAULT_READING, PRINTED, m6_variants, residuals


def m6_clean(spec, reading):
    return all(r.is_zero() for _, r in residuals(spec, ("M6",), reading=reading))


def main():
    specs = {n: catalog.get(n).spec() for n in catalog.names() if n != "P24"}
    rejected = [n for n, s in specs.items() if not m6_clean(s, PRINTED)]
    print(f"M6 as printed rejects {len(rejected)} of {len(specs)} operators: {', '.join(rejected)}")

    winners = [rd for rd in m6_variants() if all(m6_clean(s, rd) for s in specs.values())]
    print(f"single-term edits accepting all {len(specs)}: {len(winners)}")
    for rd in winners:
        print(f"    {rd.m6_edits}")
    print(f"default reading uses {DEFAULT_READING.m6_edits} and a cyclic C2: {DEFAULT_READING.c2_cyclic}")

    bad = [c for c, r in residuals(catalog.get("P24").spec(), ("M2",)) if not r.is_zero()]
    print(f"P24 as displayed fails M2 independently of the reading: {[str(c) for c in bad]}")


if __name__ == "__main__":
    main()
