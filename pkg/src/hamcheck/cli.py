"""Command-line front end.

    hamcheck verify FILE.hop [--json] [--family W|M|C] [--full-range] [--printed]
    hamcheck catalog list
    hamcheck catalog verify NAME | --all
    hamcheck catalog export NAME [--case LABEL | --bare] [-o FILE]
    hamcheck necessity NAME
    hamcheck necessity fixture FILE.hop

Exit codes: 0 success, 1 verification or refutation failure, 2 bad input
(parse error, unknown entry, usage), 3 internal error.  Every command builds
a JSON-able report first; the text output is rendered from it.  The only
non-deterministic field is ``timing``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__, catalog
from .conditions import DEFAULT_READING, PRINTED, ConditionReport, verify
from .dsl import DSLError, apply_perturbations, expr_to_text, load, print_spec
from .necessity import (PreconditionError, atom_text, detect_forced_zero, extract,
                        perturb_and_refute, FIXTURES, NecessityFixture, run_fixture)

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(Exception):
    pass


def threads() -> int:
    raw = os.environ.get("HAMCHECK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"HAMCHECK_THREADS must be an integer, got {raw!r}") from None


def _report_dict(rep: ConditionReport) -> dict:
    return {
        "name": rep.name,
        "hamiltonian": rep.hamiltonian,
        "families": {f: ("pass" if ok else "fail") for f, ok in rep.family_status().items()},
        "checked": dict(rep.checked),
        "failures": [
            {"id": cid.label(rep.fields, rep.dims), "family": cid.family,
             "indices": cid.named(rep.fields, rep.dims),
             "residual": expr_to_text(rep.residuals[cid], rep.fields, rep.dims)}
            for cid in rep.failing()
        ],
    }


def _envelope(command: str, target: dict, reading, results: list, ok: bool, t0: float) -> dict:
    return {
        "tool": "hamcheck",
        "version": __version__,
        "command": command,
        "input": target,
        "reading": "printed" if reading is PRINTED else "corrected",
        "results": results,
        "status": "pass" if ok else "fail",
        "exit_code": EXIT_OK if ok else EXIT_FAIL,
        "timing": {"seconds": round(time.perf_counter() - t0, 3)},
    }


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


# -- verify -----------------------------------------------------------------

def cmd_verify(args) -> dict:
    t0 = time.perf_counter()
    reading = PRINTED if args.printed else DEFAULT_READING
    doc = load(_read(args.path), os.path.basename(args.path))
    spec = apply_perturbations(doc.spec, doc.perturb) if doc.perturb else doc.spec
    rep = verify(spec, families=args.family or None, full_range=args.full_range, reading=reading)
    return _envelope("verify", {"path": args.path}, reading, [_report_dict(rep)], rep.hamiltonian, t0)


# -- catalog ----------------------------------------------------------------

def _verify_entry(name: str, printed: bool = False) -> list:
    reading = PRINTED if printed else DEFAULT_READING
    e = catalog.get(name)
    out = [_report_dict(verify(e.spec(), reading=reading))]
    out += [_report_dict(verify(e.spec(c), reading=reading)) for c in e.cases]
    return out


def cmd_catalog(args) -> dict:
    t0 = time.perf_counter()
    if args.action == "list":
        rows = [{"name": e.name, "group": e.group, "rank_class": e.rank_class,
                 "cases": [c.label for c in e.cases]} for e in catalog.CATALOG.values()]
        return _envelope("catalog list", {}, DEFAULT_READING, rows, True, t0)
    if args.action == "verify":
        if args.all == (args.name is not None):
            raise InputError("catalog verify needs exactly one of NAME or --all")
        names = catalog.names() if args.all else [catalog.get(args.name).name]
        workers = min(threads(), len(names))
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                chunks = list(pool.map(_verify_entry, names, [args.printed] * len(names)))
        else:
            chunks = [_verify_entry(n, args.printed) for n in names]
        results = [r for c in chunks for r in c]
        ok = all(r["hamiltonian"] for r in results)
        target = {"entries": "all"} if args.all else {"entry": args.name}
        return _envelope("catalog verify", target, PRINTED if args.printed else DEFAULT_READING,
                         results, ok, t0)
    # export
    if args.name is None:
        raise InputError("catalog export needs NAME")
    e = catalog.get(args.name)
    case = None if args.bare else (e.case(args.case) if args.case else e.cases[0])
    spec = e.spec(case)
    header = f"{e.name}" + (f" case {case.label}: {case.condition}" if case else " (omega = 0)")
    text = print_spec(spec, header=header)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    target = {"entry": e.name, "case": case.label if case else None, "output": args.output}
    env = _envelope("catalog export", target, DEFAULT_READING, [{"text": text}], True, t0)
    return env


# -- necessity --------------------------------------------------------------

def _fixture_dict(res) -> dict:
    return {
        "entry": res.fixture.entry,
        "precondition": res.precondition,
        "forced_expected": list(res.fixture.forced),
        "forced_found": [a for a, _ in res.forced],
        "forced_ok": res.forced_ok,
        "refutations": [
            {"case": d.case, "slot": d.slot, "delta": d.delta,
             "witness": cid.label(*_labels(res.fixture.entry)) if cid else None}
            for d, cid in res.refutations
        ],
        "ok": res.ok,
    }


def _labels(name):
    s = catalog.get(name).spec()
    return s.space.fields, s.space.dims


def cmd_necessity(args) -> dict:
    t0 = time.perf_counter()
    reading = PRINTED if args.printed else DEFAULT_READING
    if args.target == "fixture":
        if not args.path:
            raise InputError("necessity fixture needs a .hop path")
        doc = load(_read(args.path), os.path.basename(args.path))
        spec = doc.spec
        f, d = spec.space.fields, spec.space.dims
        forced = []
        try:
            cs = extract(spec, reading=reading)
            forced = [atom_text(a, spec) for a, _ in detect_forced_zero(cs, reading)]
            pre = None
        except PreconditionError as exc:
            pre = str(exc)
        refs = []
        for p in doc.perturb:
            try:
                cid = perturb_and_refute(spec, [p], reading)
            except PreconditionError as exc:
                raise InputError(str(exc)) from None
            refs.append({"entry": [f[p.i], f[p.j]], "delta": expr_to_text(p.delta, f, d),
                         "witness": cid.label(f, d) if cid else None})
        ok = all(r["witness"] for r in refs)
        result = {"entry": args.path, "precondition": pre, "forced_found": forced,
                  "refutations": refs, "ok": ok}
        return _envelope("necessity", {"path": args.path}, reading, [result], ok, t0)
    name = catalog.get(args.target).name
    fx = FIXTURES.get(name, NecessityFixture(name))
    res = _fixture_dict(run_fixture(fx, reading))
    return _envelope("necessity", {"entry": name}, reading, [res], res["ok"], t0)


# -- rendering --------------------------------------------------------------

def render_text(rep: dict, max_failures: int = 10) -> str:
    lines = []
    cmd = rep["command"]
    if cmd == "catalog list":
        for r in rep["results"]:
            lines.append(f"{r['name']:<12} {r['group']:<12} {r['rank_class']:<20} "
                         f"cases: {', '.join(r['cases'])}")
        return "\n".join(lines) + "\n"
    if cmd == "catalog export":
        return "" if rep["input"].get("output") else rep["results"][0]["text"]
    if cmd == "necessity":
        for r in rep["results"]:
            lines.append(f"{r['entry']}: {'ok' if r['ok'] else 'FAILED'}")
            if r.get("precondition"):
                lines.append(f"  precondition: {r['precondition']}")
            if r.get("forced_found"):
                lines.append("  forced to vanish: " + ", ".join(r["forced_found"]))
            for x in r["refutations"]:
                where = f"case {x['case']} slot {x['slot']}" if "case" in x else ",".join(x["entry"])
                lines.append(f"  {where} += {x['delta']}: "
                             + (f"refuted by {x['witness']}" if x["witness"] else "NOT refuted"))
        return "\n".join(lines) + "\n"
    for r in rep["results"]:
        status = "Hamiltonian" if r["hamiltonian"] else "NOT Hamiltonian"
        lines.append(f"{r['name']}: {status}")
        fams = " ".join(f"{f}:{'ok' if s == 'pass' else 'FAIL'}" for f, s in r["families"].items())
        lines.append(f"  {fams}")
        for x in r["failures"][:max_failures]:
            lines.append(f"  {x['id']} = {x['residual']}")
        if len(r["failures"]) > max_failures:
            lines.append(f"  ... {len(r['failures']) - max_failures} more")
    lines.append(f"{rep['status']} ({rep['timing']['seconds']} s)")
    return "\n".join(lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamcheck", description="Exact Hamiltonian checks for P + omega.")
    ap.add_argument("--version", action="version", version=f"hamcheck {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--json", action="store_true", help="emit the JSON report")
        p.add_argument("--printed", action="store_true",
                       help="use M6 and C2 exactly as printed instead of the corrected reading")

    v = sub.add_parser("verify", help="verify a .hop file")
    v.add_argument("path")
    v.add_argument("--family", action="append", choices=["W", "M", "C"],
                   help="restrict to a condition group (repeatable)")
    v.add_argument("--full-range", action="store_true", help="disable symmetry reductions")
    common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("catalog", help="list, verify or export built-in operators")
    c.add_argument("action", choices=["list", "verify", "export"])
    c.add_argument("name", nargs="?")
    c.add_argument("--all", action="store_true", help="verify every entry")
    c.add_argument("--case", help="family case label for export (default: first case)")
    c.add_argument("--bare", action="store_true", help="export with omega = 0")
    c.add_argument("-o", "--output", help="write the export to this file")
    common(c)
    c.set_defaults(func=cmd_catalog)

    n = sub.add_parser("necessity", help="forced-zero detection and perturbation fixtures")
    n.add_argument("target", help="catalog entry name, or 'fixture'")
    n.add_argument("path", nargs="?")
    common(n)
    n.set_defaults(func=cmd_necessity)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        rep = args.func(args)
    except DSLError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, catalog.UnknownEntryError) as exc:
        msg = exc.args[0] if exc.args else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=False))
    else:
        sys.stdout.write(render_text(rep))
    return rep["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
