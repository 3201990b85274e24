"""Batch front end: ``localadj {validate,certify,index,expectation,forge,report}``.

Exit codes: 0 pass, 1 usage or input error, 2 certified false, 3 numerical failure.
"""
import argparse
import hashlib
import os
import sys
from importlib import resources

import numpy as np

from . import forge
from .adjunction import certify, index_search, numerical_indices
from .errors import InfiniteIndex, LocalAdjError, NoLocalAdjoint, NumericalFailure, ParseError
from .expectation import expectation_to_candidate, fk_index, w_uniqueness_check
from .linalg import Tolerance
from .serialize import DocumentBuilder, canonical_text, parse

EXIT_OK, EXIT_INPUT, EXIT_FALSE, EXIT_NUMERIC = 0, 1, 2, 3
REPORT_VERSION = "lac-1-report"


# -- report values --------------------------------------------------------------------

def _clean(v):
    """Plain JSON values; floats rounded to 12 significant digits for stable text."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        x = float(v)
        if not np.isfinite(x):
            return repr(x)
        x = float(f"{x:.12g}")
        return 0.0 if x == 0 else x
    if isinstance(v, complex):
        return [_clean(v.real), _clean(v.imag)]
    return v


def _check(label, value, tol):
    ok = value <= tol
    return f"{label}: residual {value:.3e} (tol {tol:.1e}) {'pass' if ok else 'FAIL'}", ok


# -- commands on one document ---------------------------------------------------------

def _selected(table, name):
    if name is None:
        return sorted(table)
    if name not in table:
        raise LocalAdjError(f"no object named {name!r}")
    return [name]


def run_validate(doc, args):
    res, lines = {}, []
    for s in ("algebras", "modules", "correspondences", "candidates", "expectations", "actions"):
        names = sorted(getattr(doc, s))
        res[s] = names
        lines.append(f"{s}: {len(names)} valid" + (f" ({', '.join(names)})" if names else ""))
    return res, lines, True


def _cert_lines(name, c, args):
    t = args.tol_eq
    scale = max(1.0, c.l, c.r)
    out = [f"[{name}] local adjoint: {'yes' if c.is_local_adjoint else 'no'}; "
           f"full adjunction: {'yes' if c.is_full_adjunction else 'no'}",
           f"[{name}] numerical indices l = {c.l:.9f}, r = {c.r:.9f}; search {c.l_search:.9f}, {c.r_search:.9f}",
           f"[{name}] cb(Phi) = {c.cb_phi:.9f}, cb(Phi^-1) = {c.cb_phi_inv:.9f} "
           f"({'exact' if c.cb_exact else 'lower bound'})"]
    ok = c.is_local_adjoint
    for label, val, tol in [("triangle identities", max(c.triangle_residuals), t * scale),
                            ("naturality of Phi", max(c.naturality_residuals), 1e-8),
                            ("Phi inverse", c.phi_inverse_residual, 1e-8),
                            ("ideal decomposition", c.decomposition_residual, t * scale)]:
        line, good = _check(f"[{name}] {label}", val, tol)
        out.append(line)
        ok = ok and good
    return out, ok


def run_certify(doc, args):
    res, lines, ok = {}, [], True
    for name in _selected(doc.candidates, args.name):
        c = certify(doc.candidates[name], levels=args.levels, seed=args.seed, samples=args.samples)
        res[name] = c.to_dict()
        ls, good = _cert_lines(name, c, args)
        lines += ls
        ok = ok and good
    return res, lines, ok


def _index_record(cand, args):
    l, r = numerical_indices(cand)
    rng = np.random.default_rng(args.seed)
    s1, s2 = (int(x) for x in rng.integers(0, 2 ** 31, size=2))
    ls = index_search(cand, "l", samples=args.samples, rng=s1)
    rs = index_search(cand, "r", samples=args.samples, rng=s2)
    return {"l": l, "r": r, "l_search": ls, "r_search": rs,
            "consistent": bool(ls <= l * (1 + 1e-6) + 1e-12 and rs <= r * (1 + 1e-6) + 1e-12)}


def _fk_record(phi, args):
    fk = fk_index(phi, rng=args.seed)
    return {"lambda": fk.lam, "lambda_lower": fk.lam_lower, "lambda_upper": fk.lam_upper,
            "lambda_exact": fk.lam_exact, "kappa": fk.kappa, "lambda_below_kappa": fk.gap}


def run_index(doc, args):
    res, lines, ok = {"candidates": {}, "expectations": {}}, [], True
    names_c = sorted(doc.candidates) if args.name is None else [n for n in [args.name] if n in doc.candidates]
    names_e = sorted(doc.expectations) if args.name is None else [n for n in [args.name] if n in doc.expectations]
    if args.name is not None and not names_c and not names_e:
        raise LocalAdjError(f"no candidate or expectation named {args.name!r}")
    for n in names_c:
        rec = _index_record(doc.candidates[n], args)
        res["candidates"][n] = rec
        lines.append(f"[{n}] l = {rec['l']:.9f}, r = {rec['r']:.9f}; search {rec['l_search']:.9f}, "
                     f"{rec['r_search']:.9f} ({'consistent' if rec['consistent'] else 'INCONSISTENT'})")
        ok = ok and rec["consistent"]
    for n in names_e:
        rec = _fk_record(doc.expectations[n]["expectation"], args)
        res["expectations"][n] = rec
        lam = f"{rec['lambda']:.9f}" if rec["lambda_exact"] else f"[{rec['lambda_lower']:.9f}, {rec['lambda_upper']:.9f}]"
        note = "; lambda may lie below kappa" if rec["lambda_below_kappa"] else ""
        lines.append(f"[{n}] index lambda = {lam}, kappa = {rec['kappa']:.9f}{note}")
    return res, lines, ok


def run_expectation(doc, args):
    res, lines, ok = {}, [], True
    for n in _selected(doc.expectations, args.name):
        entry = doc.expectations[n]
        phi = entry["expectation"]
        rec = {"kind": entry["kind"], "residuals": phi.residuals(), "index": _fk_record(phi, args)}
        on = max(rec["residuals"].values())
        line, good = _check(f"[{n}] expectation axioms", on, 1e-8)
        lines.append(line)
        cand = expectation_to_candidate(phi, entry["module"])
        l, r = numerical_indices(cand)
        rec["candidate_indices"] = [l, r]
        lines.append(f"[{n}] kappa = {rec['index']['kappa']:.9f}; induced candidate l = {l:.9f}, r = {r:.9f}")
        if entry["kind"] == "group-average":
            flag, w = w_uniqueness_check(entry["action"], cand, entry["average"])
            rec["w_uniqueness"] = {"holds": flag, "residual": w}
            rec["fixed_algebra"] = list(phi.sub.block_sizes)
            lines.append(f"[{n}] fixed-point algebra blocks {list(phi.sub.block_sizes)}; "
                         f"uniqueness residual {w:.3e} ({'pass' if flag else 'FAIL'})")
            good = good and flag
        res[n] = rec
        ok = ok and good
    return res, lines, ok


RUNNERS = {"validate": run_validate, "certify": run_certify, "index": run_index,
           "expectation": run_expectation}


def run_document(doc, args, command):
    """Run ``command`` (or the document's requests for ``report``) and return (results, lines, ok)."""
    if command != "report":
        return RUNNERS[command](doc, args)
    reqs = doc.requests or [{"command": "validate"}, {"command": "certify"}, {"command": "expectation"}]
    res, lines, ok = [], [], True
    for r in reqs:
        sub = argparse.Namespace(**vars(args))
        sub.name = r.get("target")
        for k in ("seed", "levels", "samples"):
            if k in r:
                setattr(sub, k, int(r[k]))
        cmd = r["command"] if r["command"] != "report" else "validate"
        if cmd == "certify" and sub.name is not None and sub.name not in doc.candidates:
            raise LocalAdjError(f"certify target {sub.name!r} is not a candidate")
        out, ls, good = RUNNERS[cmd](doc, sub)
        res.append({"command": cmd, "target": sub.name, "result": out})
        lines += ls
        ok = ok and good
    return res, lines, ok


# -- forge -----------------------------------------------------------------------------

def _ints(s):
    return [int(x) for x in s.split(",") if x.strip()]


def _floats(s):
    return [float(x) for x in s.split(",") if x.strip()]


def forge_document(args):
    """Build a document for a named family; returns (text, summary lines)."""
    b = DocumentBuilder()
    lines = []
    fam = args.family
    if fam == "cover":
        if args.weights:
            w = _floats(args.weights)
            cover = forge.FiniteCover(len(w), 1, [0] * len(w), w)
        else:
            cover = forge.uniform_cover(args.k, args.base)
        _, cand = forge.forge_cover(cover)
        b.candidate(cand, "cover")
        b.cover_expectation(cover, "fibre_average")
        lines.append(f"cover of {cover.base} point(s) by {cover.total}, weights {cover.weights}")
    elif fam == "morita":
        _, cand = forge.forge_morita(args.n, args.m)
        b.candidate(cand, f"morita_{args.n}_{args.m}")
        lines.append(f"Morita bimodule M_{args.n}x{args.m}")
    elif fam == "distinct":
        da = forge.forge_distinct_adjoints()
        b.candidate(da.cand_phi, "phi")
        b.candidate(da.cand_psi, "psi")
        b.cover_expectation(forge.FiniteCover(2, 1, [0, 0], [0.5, 0.5]), "phi_weight")
        b.cover_expectation(forge.FiniteCover(2, 1, [0, 0], [2 / 3, 1 / 3]), "psi_weight")
        lines.append("two-point fold with weights (1/2, 1/2) and (2/3, 1/3)")
    elif fam == "sum":
        sf = forge.forge_sum_family(args.m)
        b.candidate(sf.cand, f"sum_{args.m}")
        for i, q in enumerate(sf.ratios, start=1):
            lines.append(f"summand C^{i}: operator-structure ratio {q:.9f} (sqrt {np.sqrt(i):.9f})")
        lines.append(f"log-log slope {sf.slope:.6f} (expected 0.5 +- 0.05) "
                     f"{'pass' if abs(sf.slope - 0.5) <= 0.05 else 'FAIL'}" if args.m >= 2 else "slope needs m >= 2")
    elif fam == "ideal":
        _, cand = forge.forge_ideal_pair(_ints(args.blocks), _ints(args.subset))
        b.candidate(cand, "ideal_pair")
        lines.append(f"ideal {_ints(args.subset)} of blocks {_ints(args.blocks)}")
    elif fam == "partial":
        _, cand = forge.forge_partial_action()
        b.candidate(cand, "partial_action")
        lines.append("C + C acting on C through the first summand")
    elif fam == "group":
        makers = {"z2-cover": forge.forge_swap_cover, "z3-cover": forge.forge_cyclic_cover,
                  "s3-twisted": forge.forge_s3_twisted_cover, "s3-irrep": forge.forge_s3_irrep,
                  "z2-plane": forge.forge_z2_on_plane}
        if args.group not in makers:
            raise LocalAdjError(f"unknown group instance {args.group!r}; choose from {sorted(makers)}")
        gi = makers[args.group]()
        b.candidate(gi.cand, "average_candidate")
        b.group_expectation(gi.action, "average")
        lines.append(f"{gi.name}: fixed-point algebra blocks {list(gi.average.expectation.sub.block_sizes)}")
    elif fam == "random":
        cand = forge.random_candidate(np.random.default_rng(args.seed))
        b.candidate(cand, "random")
        lines.append(f"random candidate of dimension {cand.dim}")
    else:
        raise LocalAdjError(f"unknown family {fam!r}")
    return b.text(), lines


# -- corpus ----------------------------------------------------------------------------

def corpus_files():
    root = resources.files("localadj") / "corpus"
    return sorted((p for p in root.iterdir() if p.name.endswith(".json")), key=lambda p: p.name)


def run_corpus(args):
    reports, lines, ok = {}, [], True
    for p in corpus_files():
        text = p.read_text(encoding="utf-8")
        doc = parse(text, tol=args.tol)
        res, ls, good = run_document(doc, args, "report")
        name = p.name[:-5]
        reports[name] = {"sha256": _digest(text), "requests": res}
        lines += [f"{name}: {x}" for x in ls]
        ok = ok and good
    return reports, lines, ok


# -- entry point -----------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-psd", type=float, default=1e-9)
    common.add_argument("--tol-eq", type=float, default=1e-10)
    common.add_argument("--levels", type=int, default=4, help="amplification cap")
    common.add_argument("--samples", type=int, default=5000, help="random families per index search")
    common.add_argument("--out", help="write the JSON report (or forged document) here")
    p = argparse.ArgumentParser(prog="localadj", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in ("validate", "certify", "index", "expectation"):
        s = sub.add_parser(cmd, parents=[common])
        s.add_argument("document", help="problem document path, or - for stdin")
        s.add_argument("--name", help="restrict to one named object")
    s = sub.add_parser("report", parents=[common])
    s.add_argument("document", nargs="?", help="problem document path, or - for stdin")
    s.add_argument("--corpus", action="store_true", help="run every bundled corpus document")
    s = sub.add_parser("forge", parents=[common])
    s.add_argument("family", choices=["cover", "morita", "distinct", "sum", "ideal", "partial", "group", "random"])
    s.add_argument("--k", type=int, default=2, help="sheets of a uniform cover")
    s.add_argument("--base", type=int, default=1, help="base points of a uniform cover")
    s.add_argument("--weights", help="comma-separated fibre weights over one point")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--m", type=int, default=3)
    s.add_argument("--blocks", default="1,1")
    s.add_argument("--subset", default="0")
    s.add_argument("--group", default="z2-cover")
    return p


def _digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _load_arg(path, tol):
    """Parsed document and the SHA-256 of its text."""
    if path in (None, "-"):
        text = sys.stdin.read()
        return parse(text, tol=tol), _digest(text)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse(text, tol=tol), _digest(text)
    except ParseError as exc:
        raise ParseError(exc.message, f"{path}: {exc.path}") from None


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        args.tol = Tolerance(args.tol_psd, args.tol_eq)
        if args.levels < 1 or args.samples < 0:
            raise LocalAdjError("--levels must be positive and --samples non-negative")
        if args.command == "forge":
            text, lines = forge_document(args)
            if args.out:
                _write(args.out, text)
            else:
                sys.stdout.write(text)
            for x in lines:
                print(x, file=sys.stderr if not args.out else sys.stdout)
            return EXIT_OK
        if args.command == "report" and args.corpus:
            res, lines, ok = run_corpus(args)
            source, digest = "corpus", _digest("".join(res[n]["sha256"] for n in sorted(res)))
        else:
            if args.command == "report" and args.document is None:
                raise LocalAdjError("report needs a document or --corpus")
            doc, digest = _load_arg(args.document, args.tol)
            res, lines, ok = run_document(doc, args, args.command)
            source = os.path.basename(args.document) if args.document not in (None, "-") else "stdin"
        report = {"version": REPORT_VERSION, "command": args.command, "source": source,
                  "provenance": {"document_sha256": digest, "seed": args.seed, "eps_psd": args.tol_psd, "eps_eq": args.tol_eq,
                                 "levels": args.levels, "samples": args.samples},
                  "results": _clean(res), "summary": lines, "passed": bool(ok)}
        if args.out:
            _write(args.out, canonical_text(report))
        for x in lines:
            print(x)
        print("PASS" if ok else "FAIL")
        return EXIT_OK if ok else EXIT_FALSE
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InfiniteIndex, NoLocalAdjoint) as exc:
        print(f"certified false: {exc}", file=sys.stderr)
        return EXIT_FALSE
    except (LocalAdjError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
