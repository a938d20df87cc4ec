"""Command-line front end: ``jetlaw <subcommand> ...``.

Exit status: 0 when every verdict holds, 1 when any verdict fails,
2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys as _sys
from concurrent.futures import ThreadPoolExecutor

from . import numcheck as nc
from .cases import load_corpus, run_case
from .conservation import (FAILED, approx_conserved_vector, conserved_vector, cosmetic,
                           verify_conservation)
from .dsl import (declarations_of, deserialize_vector, dumps_vector, load_document, parse_expression,
                  print_ansatz, print_expression, serialize_vector)
from .errors import DslError, JetlawError
from .jet import check_approx_symmetry, is_exact_symmetry
from .selfadjoint import (check_ansa, check_nsa, determining_system, generic_ansatz,
                          solve_finite_ansatz)
from .variational import adjoint_system

OK, FAIL, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _out(text: str = "") -> None:
    print(text)


def _write_json(path: str, text: str) -> None:
    if path == "-":
        _sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load(path: str):
    try:
        return load_document(path)
    except DslError as exc:
        raise DslError(exc.message, exc.line, exc.column, source=path) from None


def _print_multipliers(mult: dict) -> None:
    for name, table in mult.items():
        for (a, b), v in table.items():
            label = name if len(table) == 1 else f"{name}[{a + 1},{b + 1}]"
            _out(f"  {label} = {print_expression(v)}")


def _print_residual(residual: dict) -> None:
    for name, r in residual.items():
        _out(f"  residual {name}: {print_expression(r)}")


# -- subcommands -------------------------------------------------------------

def cmd_adjoint(args) -> int:
    sys = _load(args.file).system()
    for F in adjoint_system(sys):
        _out(f"{print_expression(F)} = 0")
    return OK


def cmd_check_nsa(args) -> int:
    doc = _load(args.file)
    rep = check_nsa(doc.system(), doc.substitution(args.subst))
    _out(f"nonlinearly self-adjoint: {'yes' if rep.holds else 'no'}")
    _print_multipliers(rep.multipliers)
    _print_residual(rep.residual)
    return OK if rep.holds else FAIL


def cmd_check_ansa(args) -> int:
    doc = _load(args.file)
    rep = check_ansa(doc.system(), doc.substitution(args.subst))
    _out(f"approximately nonlinearly self-adjoint: {'yes' if rep.holds else 'no'}")
    _print_multipliers(rep.multipliers)
    _print_residual(rep.residual)
    return OK if rep.holds else FAIL


def cmd_determining(args) -> int:
    doc = _load(args.file)
    sys = doc.system()
    ansatz = doc.substitution(args.subst) if doc.substitutions and not args.generic else None
    ds = determining_system(sys, ansatz, eliminate=args.eliminate)
    for g, e in zip(ds.grades, ds.equations):
        _out(f"[{g}] {print_expression(e)} = 0")
    return OK


def _parse_basis(specs, sys, ansatz) -> dict:
    decls = declarations_of(sys)
    names = [f.name for f in ansatz.functions]
    basis = {}
    for spec in specs:
        name, sep, body = spec.partition("=")
        if sep:
            targets = [name.strip()]
        else:
            targets, body = names, spec
        monos = [parse_expression(m.strip(), decls) for m in body.split(",") if m.strip()]
        for t in targets:
            if t not in names:
                raise UsageError(f"unknown function {t!r}; the ansatz has {names}")
            basis[t] = monos
    return basis


def cmd_solve_ansatz(args) -> int:
    doc = _load(args.file)
    sys = doc.system()
    perturbed = sys.eps_order >= 1
    ansatz = generic_ansatz(sys, perturbed=perturbed)
    ds = determining_system(sys, ansatz, eliminate=True, perturbed=perturbed)
    fam = solve_finite_ansatz(ds, _parse_basis(args.basis, sys, ansatz))
    _out(f"parameters: {len(fam.parameters)}")
    _out(print_ansatz(fam.ansatz))
    return OK if fam.parameters else FAIL


def cmd_check_symmetry(args) -> int:
    doc = _load(args.file)
    sys = doc.system()
    X = doc.generator(args.gen)
    if sys.eps_order < 1:
        holds = is_exact_symmetry(X, sys)
        _out(f"symmetry: {'yes' if holds else 'no'}")
        return OK if holds else FAIL
    rep = check_approx_symmetry(X, sys)
    _out(f"approximate symmetry: {'yes' if rep.holds else 'no'}")
    for name, h in rep.H.items():
        _out(f"  H[{name}] = {print_expression(h)}")
    for note in rep.notes:
        _out(f"  note: {note}")
    _print_residual(rep.residual)
    return OK if rep.holds else FAIL


def _report_vector(T, sys, args, generator=None, ansatz=None) -> int:
    rep = verify_conservation(T, sys, k=args.eps_order, seed=args.seed)
    shown = cosmetic(T, sys) if args.cosmetic else T
    for x, c in shown.components.items():
        _out(f"T^{x} = {print_expression(c)}")
    _out(f"verdict: {rep.verdict}")
    if not rep.exact:
        _out(f"residual: {print_expression(rep.residual)}")
    if args.json:
        _write_json(args.json, dumps_vector(serialize_vector(shown, sys, rep, generator, ansatz)))
    return FAIL if rep.verdict == FAILED else OK


def cmd_conslaw(args) -> int:
    doc = _load(args.file)
    sys = doc.system()
    X, subst = doc.generator(args.gen), doc.substitution(args.subst)
    T = conserved_vector(sys, X, subst, keep_xi_L=args.keep_xil)
    args.eps_order = 0
    return _report_vector(T, sys.unperturbed(), args, X, subst)


def cmd_approx_conslaw(args) -> int:
    doc = _load(args.file)
    sys = doc.system()
    X, subst = doc.generator(args.gen), doc.substitution(args.subst)
    T = approx_conserved_vector(sys, X, subst, keep_xi_L=args.keep_xil, keep_xi1_L2=args.keep_xi1l2,
                                exact_substitution=args.exact_substitution)
    return _report_vector(T, sys, args, X, subst)


def cmd_verify(args) -> int:
    try:
        with open(args.file, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{args.file}: not JSON ({exc})") from None
    T, sys = deserialize_vector(doc)
    rep = verify_conservation(T, sys, k=args.eps_order, seed=args.seed)
    _out(rep.verdict)
    if not rep.exact:
        _out(f"residual: {print_expression(rep.residual)}")
    return FAIL if rep.verdict == FAILED else OK


def cmd_classify_wave(args) -> int:
    cases = load_corpus(args.corpus)
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(run_case, cases))
    results.sort(key=lambda r: r.case.name)
    width = max(len(r.case.name) for r in results)
    for r in results:
        mark = "verified" if r.verified else "MISMATCH"
        _out(f"{r.case.name:<{width}}  {r.case.check:<14} {r.outcome:<14} expected {r.case.expect:<14} {mark}")
        if args.verbose:
            _out(f"    {r.case.title}")
            if r.detail:
                _out(f"    {r.detail}")
    good = sum(r.verified for r in results)
    _out(f"{good}/{len(results)} cases verified")
    return OK if good == len(results) else FAIL


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_numcheck(args) -> int:
    u0, v0 = nc.INITIAL_DATA[args.ic]
    template = nc.SimConfig(N=args.grid, t_final=args.tfinal, u0=u0, v0=v0)
    eps_list = args.eps_list
    rec = nc.drift_scaling(args.density, template, eps_list, max_grid=args.max_grid, flux=args.flux)
    doc = {"schema": "jetlaw.drift.v1", "density": args.density, "flux": args.flux, "ic": args.ic, "t_final": args.tfinal,
           "eps": rec.eps_values, "drift": rec.drifts, "ratios": rec.ratios, "grid": rec.grid,
           "discretization_error": rec.discretization_error, "window": list(rec.window),
           "passed": rec.passed}
    _out(f"ratios: {', '.join(f'{r:.3f}' for r in rec.ratios)}  -> {'pass' if rec.passed else 'fail'}")
    status = OK if rec.passed else FAIL
    if args.control:
        ctl = nc.drift_scaling(nc.DAMPED_CONTROL_TEXT, template, eps_list, max_grid=args.max_grid)
        flagged = not ctl.passed
        doc["control"] = {"density": nc.DAMPED_CONTROL_TEXT, "drift": ctl.drifts, "ratios": ctl.ratios,
                          "flagged": flagged}
        _out(f"control ratios: {', '.join(f'{r:.3f}' for r in ctl.ratios)}  -> "
             f"{'flagged' if flagged else 'NOT flagged'}")
        if not flagged:
            status = FAIL
    if args.json:
        _write_json(args.json, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    return status


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jetlaw", description="Approximate self-adjointness and conservation laws.")
    sub = p.add_subparsers(dest="command", required=True)

    def with_file(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("file", help="DSL document")
        s.set_defaults(func=fn)
        return s

    with_file("adjoint", cmd_adjoint, "print the adjoint system")
    for name, fn in (("check-nsa", cmd_check_nsa), ("check-ansa", cmd_check_ansa)):
        s = with_file(name, fn, "test a substitution for (approximate) nonlinear self-adjointness")
        s.add_argument("--subst", type=int, default=0, help="index of the substitution statement")
    s = with_file("determining", cmd_determining, "print the determining system")
    s.add_argument("--eliminate", action="store_true", help="reduce on-shell instead of using multipliers")
    s.add_argument("--generic", action="store_true", help="ignore subst statements and use psi + eps*phi")
    s.add_argument("--subst", type=int, default=0)
    s = with_file("solve-ansatz", cmd_solve_ansatz, "solve the determining system over a monomial basis")
    s.add_argument("--basis", action="append", required=True,
                   help="'psi=1,x,t*x' or '1,x,u' for every unknown function; repeatable")
    s = with_file("check-symmetry", cmd_check_symmetry, "test an (approximate) symmetry")
    s.add_argument("--gen", default=None, help="generator name")
    for name, fn in (("conslaw", cmd_conslaw), ("approx-conslaw", cmd_approx_conslaw)):
        s = with_file(name, fn, "build and verify a conserved vector")
        s.add_argument("--gen", default=None)
        s.add_argument("--subst", type=int, default=0)
        s.add_argument("--keep-xil", action=argparse.BooleanOptionalAction, default=True)
        s.add_argument("--cosmetic", action="store_true", help="on-shell cleanup for display")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--json", default=None, help="write a vector document ('-' for stdout)")
        if name == "approx-conslaw":
            s.add_argument("--keep-xi1l2", action=argparse.BooleanOptionalAction, default=True)
            s.add_argument("--exact-substitution", action="store_true",
                           help="insert the full w everywhere without truncation")
            s.add_argument("--eps-order", type=int, default=1)
    s = with_file("verify", cmd_verify, "verify a serialized conserved vector")
    s.add_argument("--eps-order", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s = sub.add_parser("classify-wave", help="replay the wave-family regression corpus")
    s.add_argument("--corpus", default=None, help="directory of .pde cases")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(func=cmd_classify_wave)
    s = sub.add_parser("numcheck", help="finite-difference drift scaling of a density")
    s.add_argument("--eps-list", type=_float_list, default=[0.2, 0.1, 0.05])
    s.add_argument("--grid", type=int, default=512)
    s.add_argument("--max-grid", type=int, default=4096)
    s.add_argument("--tfinal", type=float, default=10.0)
    s.add_argument("--ic", choices=sorted(nc.INITIAL_DATA), default="sine")
    s.add_argument("--density", default=nc.DAMPED_ENERGY_TEXT)
    s.add_argument("--flux", default=None,
                   help="T^x, needed when it depends explicitly on x so the boundary flux is not periodic")
    s.add_argument("--control", action="store_true", help="also run the negative-control density")
    s.add_argument("--json", default=None)
    s.set_defaults(func=cmd_numcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DslError as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return USAGE
    except (UsageError, FileNotFoundError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return USAGE
    except JetlawError as exc:
        print(f"{type(exc).__name__}: {exc}", file=_sys.stderr)
        return FAIL


if __name__ == "__main__":
    _sys.exit(main())
