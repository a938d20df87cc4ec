"""Regression corpus for the nonlinear wave family.

Each ``.pde`` file in ``jetlaw/corpus`` is an ordinary DSL document whose
``#!`` comment lines carry the case metadata::

    #! title: free text
    #! check: nsa | ansa | lift | approx-conslaw
    #! expect: holds | fails | exact-zero | order-1-zero | failed
    #! flags: exact-substitution, no-keep-xil, no-keep-xi1l2
    #! compare: identical | identical-at-order-1 | gauge
    #! printed-t: <expr>          (one line per component)

A case is *verified* when the computed outcome equals the expectation
(and, for conservation laws, the reference components match). ``identical``
compares the cosmetic form; ``identical-at-order-1`` first drops grades above 1.
"""

from __future__ import annotations

import time as _time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .conservation import (ConservedVector, approx_conserved_vector, compare_vectors, cosmetic, vector_from_exprs,
                           verify_conservation)
from .dsl import Document, declarations_of, parse_document, parse_expression
from .errors import JetlawError
from .selfadjoint import check_ansa, check_nsa, lift_substitution
from .series import EpsSeries

CHECKS = ("nsa", "ansa", "lift", "approx-conslaw")


@dataclass
class Case:
    name: str
    title: str
    check: str
    expect: str
    document: Document
    flags: tuple = ()
    compare: str = ""
    reference: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


@dataclass
class CaseResult:
    case: Case
    outcome: str
    verified: bool
    detail: str = ""
    seconds: float = 0.0


def parse_case(text: str, name: str) -> Case:
    meta, refs, notes = {}, {}, []
    for line in text.splitlines():
        if not line.startswith("#!"):
            continue
        key, _, value = line[2:].partition(":")
        key, value = key.strip(), value.strip()
        if key.startswith("printed-"):
            refs[key[len("printed-"):]] = value
        elif key == "note":
            notes.append(value)
        else:
            meta[key] = value
    if meta.get("check") not in CHECKS:
        raise ValueError(f"{name}: unknown check {meta.get('check')!r}")
    doc = parse_document(text)
    flags = tuple(f.strip() for f in meta.get("flags", "").split(",") if f.strip())
    return Case(name, meta.get("title", name), meta["check"], meta.get("expect", "holds"), doc, flags,
                meta.get("compare", ""), refs, notes)


def corpus_dir() -> Path:
    return Path(str(resources.files("jetlaw") / "corpus"))


def load_corpus(directory=None) -> list[Case]:
    d = Path(directory) if directory else corpus_dir()
    return [parse_case(p.read_text(encoding="utf-8"), p.stem) for p in sorted(d.glob("*.pde"))]


def _reference_vector(case: Case, sys):
    decls = declarations_of(sys)
    comps = {x: parse_expression(text, decls) for x, text in case.reference.items()}
    return vector_from_exprs(comps, 1)


def _truncated(T: ConservedVector, order: int) -> ConservedVector:
    return ConservedVector({x: c.with_order(order) for x, c in T.components.items()}, dict(T.provenance), order)


def _run_conslaw(case: Case):
    doc = case.document
    sys = doc.system()
    subst = doc.substitution()
    T = approx_conserved_vector(sys, doc.generator(), subst,
                                keep_xi_L="no-keep-xil" not in case.flags,
                                keep_xi1_L2="no-keep-xi1l2" not in case.flags,
                                exact_substitution="exact-substitution" in case.flags)
    rep = verify_conservation(T, sys, k=1)
    outcome, detail = rep.verdict, ""
    if case.reference:
        R = _reference_vector(case, sys)
        if case.compare == "identical":
            same = compare_vectors(cosmetic(T, sys), R, sys).identical
        elif case.compare == "identical-at-order-1":
            same = compare_vectors(cosmetic(_truncated(T, 1), sys), R, sys).identical
        else:
            same = compare_vectors(T, R, sys).gauge_equivalent
        detail = f"reference {case.compare or 'gauge'}: {'yes' if same else 'no'}"
        if not same:
            outcome += " (reference mismatch)"
    return outcome, detail


def _format_residual(residual: dict) -> str:
    parts = []
    for name, r in residual.items():
        r = r.to_expr() if isinstance(r, EpsSeries) else r
        if r != 0:
            parts.append(f"{name}: {r}")
    return "; ".join(parts)


def run_case(case: Case) -> CaseResult:
    start = _time.perf_counter()
    doc = case.document
    try:
        if case.check == "approx-conslaw":
            outcome, detail = _run_conslaw(case)
        elif case.check == "lift":
            lifted = lift_substitution(doc.system(), doc.substitution())
            rep = check_ansa(doc.system(), lifted)
            outcome, detail = ("holds" if rep.holds else "fails"), _format_residual(rep.residual)
        else:
            fn = check_nsa if case.check == "nsa" else check_ansa
            rep = fn(doc.system(), doc.substitution())
            outcome, detail = ("holds" if rep.holds else "fails"), _format_residual(rep.residual)
    except JetlawError as exc:
        outcome, detail = "error", f"{type(exc).__name__}: {exc}"
    return CaseResult(case, outcome, outcome == case.expect, detail, _time.perf_counter() - start)


def run_corpus(directory=None) -> list[CaseResult]:
    return [run_case(c) for c in load_corpus(directory)]
