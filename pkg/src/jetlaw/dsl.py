"""Text DSL for systems, generators and substitutions; canonical printing; JSON vectors.

Grammar (statements end with ``;``, ``#`` starts a comment)::

    document   := statement*
    statement  := "indep" NAME+ | "dep" NAME+ | "func" fdecl ("," fdecl)*
                | "const" NAME ("," NAME)* | "eps" "order" INT
                | "eq" NAME ":" expr "=" expr "lead" JET
                | "gen" NAME ":" comp ("," comp)*
                | "subst" NAME "=" expr ("," NAME "=" expr)* ["satisfying" cond ("," cond)*]
    fdecl      := NAME "(" NAME ("," NAME)* ")"
    comp       := ("xi" | "eta") "(" NAME ")" "=" expr
    cond       := expr ["=" expr]
    expr       := term (("+" | "-") term)*
    term       := unary (("*" | "/") unary)*
    unary      := ("-" | "+") unary | power
    power      := atom [("^" | "**") unary]
    atom       := INT | NAME ["'"*] ["(" expr ("," expr)* ")"] | "(" expr ")"

Jet variables are written ``u_tx`` (letter order is irrelevant), formal
function derivatives ``F'(u)`` or ``f_tt(x, t)``. Only integer literals
exist; rationals are written as quotients such as ``1/2``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import sympy as sp
from sympy.core.function import AppliedUndef

from .errors import DslError, InvalidSubstitution
from .expr import EPS, JetSymbol, MultiIndex, jets_in, normalize
from .jet import FunctionSig, Generator, PdeEquation, PdeSystem
from .selfadjoint import SubstitutionAnsatz
from .series import EpsSeries, eps_degree, split_grades

KEYWORDS = {"indep", "dep", "func", "const", "eps", "eq", "gen", "subst"}
CONCRETE = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "log": sp.log}
SCHEMA = "jetlaw.vector.v1"

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d*)?)
  | (?P<name>[A-Za-z][A-Za-z0-9_]*)
  | (?P<op>\*\*|[-+*/^(),:;='])
  | (?P<bad>.)
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out, line, start = [], 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        col = m.start() - start + 1
        if kind == "nl":
            line += 1
            start = m.end()
            continue
        if kind in ("ws", "comment"):
            continue
        if kind == "bad":
            raise DslError(f"unexpected character {m.group()!r}", line, col)
        if kind == "num" and "." in m.group():
            raise DslError(f"decimal literal {m.group()} not allowed; write a rational such as 1/2", line, col)
        out.append(Token(kind, m.group(), line, col))
    out.append(Token("eof", "", line, 1))
    return out


@dataclass
class Declarations:
    independents: list = field(default_factory=list)
    dependents: list = field(default_factory=list)
    functions: dict = field(default_factory=dict)
    constants: list = field(default_factory=list)
    eps_order: int = 1
    adjoint_names: set = field(default_factory=set)

    def symbol(self, name):
        return sp.Symbol(name)

    def refresh_adjoint_names(self):
        taken = set(self.independents) | set(self.dependents) | set(self.functions) | set(self.constants)
        names = set()
        for stem in ("v", "w"):
            s = stem
            while s in taken or any(f"{s}{k}" in taken for k in range(1, 10)):
                s += "_"
            names.add(s)
            names |= {f"{s}{k}" for k in range(1, 10)}
        self.adjoint_names = names

    def is_dependent(self, name):
        return name in self.dependents or name in self.adjoint_names


class Parser:
    def __init__(self, text: str, decls: Declarations | None = None):
        self.toks = tokenize(text)
        self.i = 0
        self.decls = decls or Declarations()
        if not self.decls.adjoint_names:
            self.decls.refresh_adjoint_names()

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return DslError(msg, tok.line, tok.col)

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def accept(self, text) -> bool:
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            self.i += 1
            return True
        return False

    def expect(self, text) -> Token:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    def expect_name(self) -> Token:
        if self.tok.kind != "name":
            raise self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    # expressions
    def expr(self):
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.advance().text
            right = self.term()
            left = left + right if op == "+" else left - right
        return left

    def term(self):
        left = self.unary()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.advance()
            right = self.unary()
            if op.text == "*":
                left = left * right
            else:
                if right.free_symbols or right.atoms(AppliedUndef) or right == 0:
                    raise self.error("division only by nonzero rational constants", op)
                left = left / right
        return left

    def unary(self):
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return -self.unary()
        if self.tok.kind == "op" and self.tok.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.kind == "op" and self.tok.text in ("^", "**"):
            op = self.advance()
            exp = self.unary()
            if not (exp.is_Integer):
                raise self.error("exponents must be integers", op)
            return base ** exp
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return sp.Integer(int(t.text))
        if t.kind == "op" and t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "name":
            return self.name_atom()
        raise self.error(f"unexpected {t.text or 'end of input'!r}")

    def call_args(self):
        args = [self.expr()]
        while self.accept(","):
            args.append(self.expr())
        self.expect(")")
        return args

    def name_atom(self):
        t = self.advance()
        name = t.text
        primes = 0
        while self.tok.kind == "op" and self.tok.text == "'":
            self.advance()
            primes += 1
        d = self.decls
        has_call = self.tok.kind == "op" and self.tok.text == "("
        if name in CONCRETE and name not in d.functions:
            if primes or not has_call:
                raise self.error(f"{name} needs an argument list", t)
            self.advance()
            args = self.call_args()
            return CONCRETE[name](*args)
        base, _, suffix = name.partition("_")
        if name == "eps":
            return EPS
        if name in d.independents or name in d.constants:
            return sp.Symbol(name)
        if base in d.functions:
            sig = d.functions[base]
            args = list(sig.args)
            if has_call:
                self.advance()
                args = self.call_args()
                if len(args) != len(sig.args):
                    raise self.error(f"{base} takes {len(sig.args)} argument(s), got {len(args)}", t)
            app = sp.Function(base)(*args)
            if primes and suffix:
                raise self.error("use either primes or subscripts for a function derivative", t)
            if primes:
                if len(args) != 1:
                    raise self.error(f"primes are only for one-argument functions; write {base}_...", t)
                return sp.diff(app, args[0], primes) if primes else app
            if suffix:
                names = [str(a) for a in sig.args]
                wrt = []
                for ch in suffix:
                    if ch not in names:
                        raise self.error(f"{ch} is not an argument of {base}", t)
                    wrt.append(args[names.index(ch)])
                return sp.diff(app, *wrt)
            return app
        if d.is_dependent(base):
            if primes or has_call:
                raise self.error(f"{base} is a dependent variable, not a function", t)
            for ch in suffix:
                if ch not in d.independents:
                    raise self.error(f"{ch} in {name} is not an independent variable", t)
            return JetSymbol(base, MultiIndex.from_letters(suffix))
        raise self.error(f"undeclared symbol {name!r}", t)

    def at_end(self):
        return self.tok.kind == "eof"


# -- documents ---------------------------------------------------------------

@dataclass
class Document:
    decls: Declarations
    equations: list = field(default_factory=list)
    generators: dict = field(default_factory=dict)
    substitutions: list = field(default_factory=list)

    def system(self) -> PdeSystem:
        if not self.equations:
            raise DslError("no equations declared")
        d = self.decls
        funcs = tuple(FunctionSig(n, tuple(s.args)) for n, s in d.functions.items())
        return PdeSystem(tuple(d.independents), tuple(d.dependents), tuple(self.equations), funcs,
                         tuple(sp.Symbol(c) for c in d.constants), d.eps_order)

    def generator(self, name: str | None = None) -> Generator:
        if not self.generators:
            raise DslError("no generator declared")
        if name is None:
            return next(iter(self.generators.values()))
        return self.generators[name]

    def substitution(self, index: int = 0) -> SubstitutionAnsatz:
        if not self.substitutions:
            raise DslError("no substitution declared")
        return self.substitutions[index]


def _decl_arg(p: Parser, tok: Token):
    d = p.decls
    name = tok.text
    if name in d.independents:
        return sp.Symbol(name)
    if name in d.dependents:
        return JetSymbol(name)
    raise p.error(f"function argument {name!r} is not a declared variable", tok)


def _check_fresh(p: Parser, tok: Token):
    d = p.decls
    name = tok.text
    if name in KEYWORDS or name == "eps" or name in CONCRETE:
        raise p.error(f"{name!r} is reserved", tok)
    if name in d.independents or name in d.dependents or name in d.functions or name in d.constants:
        raise p.error(f"{name!r} declared twice", tok)


def parse_document(text: str) -> Document:
    p = Parser(text)
    doc = Document(p.decls)
    d = p.decls
    while not p.at_end():
        kw = p.expect_name()
        k = kw.text
        if k == "indep":
            while p.tok.kind == "name":
                tok = p.advance()
                _check_fresh(p, tok)
                if len(tok.text) != 1:
                    raise p.error("independent variables must be single letters", tok)
                d.independents.append(tok.text)
                p.accept(",")
        elif k == "dep":
            while p.tok.kind == "name":
                tok = p.advance()
                _check_fresh(p, tok)
                if "_" in tok.text:
                    raise p.error("dependent names may not contain '_'", tok)
                d.dependents.append(tok.text)
                p.accept(",")
        elif k == "func":
            while True:
                tok = p.expect_name()
                _check_fresh(p, tok)
                if "_" in tok.text:
                    raise p.error("function names may not contain '_'", tok)
                p.expect("(")
                args = [_decl_arg(p, p.expect_name())]
                while p.accept(","):
                    args.append(_decl_arg(p, p.expect_name()))
                p.expect(")")
                d.functions[tok.text] = FunctionSig(tok.text, tuple(args))
                if not p.accept(","):
                    break
        elif k == "const":
            while True:
                tok = p.expect_name()
                _check_fresh(p, tok)
                d.constants.append(tok.text)
                if not p.accept(","):
                    break
        elif k == "eps":
            p.expect("order")
            t = p.advance()
            if t.kind != "num":
                raise p.error("expected an integer order", t)
            d.eps_order = int(t.text)
        elif k == "eq":
            eq = _parse_equation(p)
            if any(e.leading == eq.leading for e in doc.equations):
                raise DslError(f"duplicate leading derivative {eq.leading}", kw.line, kw.col)
            if any(e.name == eq.name for e in doc.equations):
                raise DslError(f"duplicate equation name {eq.name}", kw.line, kw.col)
            doc.equations.append(eq)
        elif k == "gen":
            name, X = _parse_generator(p)
            doc.generators[name] = X
        elif k == "subst":
            doc.substitutions.append(_parse_subst(p))
        else:
            raise p.error(f"unknown statement {k!r}", kw)
        d.refresh_adjoint_names()
        p.expect(";")
    return doc


def _parse_equation(p: Parser) -> PdeEquation:
    name = p.expect_name().text
    p.expect(":")
    start = p.tok
    lhs = p.expr()
    p.expect("=")
    rhs = p.expr()
    lead_kw = p.expect_name()
    if lead_kw.text != "lead":
        raise p.error("expected 'lead'", lead_kw)
    ltok = p.tok
    lead = p.atom()
    if not isinstance(lead, JetSymbol) or lead.dep not in p.decls.dependents:
        raise p.error("leading derivative must be a jet of a dependent variable", ltok)
    full = normalize(lhs - rhs, cap=None)
    K = p.decls.eps_order
    bad = [a for a in full.atoms(sp.Function, sp.Pow) if a.has(EPS) and not (a.is_Pow and a.base == EPS)]
    if bad:
        raise p.error(f"eps may only enter polynomially, found {bad[0]}", start)
    if any(eps_degree(t) > 1 for t in sp.Add.make_args(full)):
        raise p.error("eps appears beyond first order; equations are E0 + eps*E1", start)
    e0, e1 = split_grades(full, 1)
    if lead not in e0.free_symbols:
        raise p.error(f"leading derivative {lead} absent from equation {name}", ltok)
    try:
        eq = PdeEquation(name, e0, e1 if K >= 1 else sp.S.Zero, lead)
        d = p.decls
        PdeSystem(tuple(d.independents), tuple(d.dependents), (eq,), eps_order=K)
    except ValueError as exc:
        raise p.error(str(exc), start) from None
    return eq


def _parse_generator(p: Parser):
    name = p.expect_name().text
    p.expect(":")
    xi, eta = {}, {}
    while True:
        kt = p.expect_name()
        if kt.text not in ("xi", "eta"):
            raise p.error("expected xi(...) or eta(...)", kt)
        p.expect("(")
        vt = p.expect_name()
        p.expect(")")
        p.expect("=")
        value = p.expr()
        if kt.text == "xi":
            if vt.text not in p.decls.independents:
                raise p.error(f"{vt.text} is not an independent variable", vt)
            xi[sp.Symbol(vt.text)] = value
        else:
            if vt.text not in p.decls.dependents:
                raise p.error(f"{vt.text} is not a dependent variable", vt)
            eta[vt.text] = value
        if not p.accept(","):
            break
    try:
        return name, Generator.from_exprs(xi, eta, max(p.decls.eps_order, 1), name)
    except ValueError as exc:
        raise p.error(str(exc)) from None


def _parse_subst(p: Parser) -> SubstitutionAnsatz:
    images = {}
    while True:
        nt = p.expect_name()
        if not p.decls.is_dependent(nt.text) or nt.text in p.decls.dependents:
            raise p.error(f"{nt.text!r} is not an adjoint variable name", nt)
        p.expect("=")
        images[nt.text] = p.expr()
        if not p.accept(","):
            break
    conds = []
    if p.tok.kind == "name" and p.tok.text == "satisfying":
        p.advance()
        while True:
            lhs = p.expr()
            if p.accept("="):
                lhs = lhs - p.expr()
            conds.append(sp.expand(lhs))
            if not p.accept(","):
                break
    used = set()
    for e in images.values():
        used |= {a.func.__name__ for a in e.atoms(AppliedUndef)}
    d = p.decls
    funcs = tuple(d.functions[n] for n in sorted(used) if n in d.functions)
    consts = tuple(sorted({str(s) for e in images.values() for s in e.free_symbols} & set(d.constants)))
    try:
        return SubstitutionAnsatz(images, consts, funcs, tuple(conds), max(d.eps_order, 1))
    except InvalidSubstitution as exc:
        raise p.error(str(exc)) from None


def parse_system(text: str) -> PdeSystem:
    return parse_document(text).system()


def parse_generator(text: str, decls_text: str = "") -> Generator:
    return parse_document(decls_text + "\n" + text).generator()


def parse_ansatz(text: str, decls_text: str = "") -> SubstitutionAnsatz:
    return parse_document(decls_text + "\n" + text).substitution()


def parse_expression(text: str, decls: Declarations):
    p = Parser(text, decls)
    e = p.expr()
    if not p.at_end():
        raise p.error(f"unexpected {p.tok.text!r} after expression")
    return e


def declarations_of(sys: PdeSystem) -> Declarations:
    d = Declarations([str(x) for x in sys.independents], list(sys.dependents),
                     {f.name: f for f in sys.functions}, [str(c) for c in sys.constants], sys.eps_order)
    d.refresh_adjoint_names()
    return d


# -- printing ----------------------------------------------------------------

def _rational_text(r) -> str:
    r = sp.Rational(r)
    return str(r.p) if r.q == 1 else f"{r.p}/{r.q}"


def _factor_rank(b):
    if b == EPS:
        return (0, "")
    if isinstance(b, (AppliedUndef, sp.Derivative)) or isinstance(b, sp.Function):
        return (1, sp.srepr(b))
    if isinstance(b, JetSymbol):
        return (3, b.dep, b.order, b.index.letters())
    if isinstance(b, sp.Symbol):
        return (2, b.name)
    return (4, sp.srepr(b))


def _print_function(f) -> str:
    if isinstance(f, sp.Derivative) and isinstance(f.expr, AppliedUndef):
        app = f.expr
        name = app.func.__name__
        if len(app.args) == 1:
            n = sum(int(c) for _, c in f.variable_count)
            return f"{name}{chr(39) * n}({print_expression(app.args[0])})"
        letters = "".join(str(v) * int(c) for v, c in sorted(f.variable_count, key=lambda vc: str(vc[0])))
        return f"{name}_{letters}({', '.join(print_expression(a) for a in app.args)})"
    return f"{f.func.__name__}({', '.join(print_expression(a) for a in f.args)})"


def _print_atom(b) -> str:
    if isinstance(b, (sp.Symbol, JetSymbol)):
        return b.name
    if isinstance(b, (AppliedUndef, sp.Derivative)) or isinstance(b, sp.Function):
        return _print_function(b)
    return f"({print_expression(b)})"


def _powers(rest) -> dict:
    # exp(u) stays whole; as_powers_dict would split it into E**u
    out = {}
    for f in sp.Mul.make_args(rest):
        b, e = (f.base, f.exp) if f.is_Pow else (f, sp.S.One)
        out[b] = out.get(b, 0) + e
    return out


def _print_monomial(factors) -> str:
    parts = []
    for b, e in sorted(factors.items(), key=lambda be: _factor_rank(be[0])):
        s = _print_atom(b)
        if e == 1:
            parts.append(s)
        elif e.is_Integer and e > 0:
            parts.append(f"{s}^{e}")
        else:
            parts.append(f"{s}^({_rational_text(e)})")
    return "*".join(parts)


def _term_key(term):
    jets = sorted(jets_in(term), key=lambda s: (-s.order, s.dep, s.index.letters()))
    top = max((s.order for s in jets), default=0)
    return (eps_degree(term), -top, [(-s.order, s.dep, s.index.letters()) for s in jets], sp.srepr(term))


def print_expression(e) -> str:
    """Deterministic text in DSL syntax; terms ordered by eps grade then jet order."""
    if isinstance(e, EpsSeries):
        e = e.to_expr()
    e = normalize(e, cap=None)
    if e == 0:
        return "0"
    out = []
    for term in sorted(sp.Add.make_args(e), key=_term_key):
        coeff, rest = term.as_coeff_Mul()
        factors = _powers(rest) if rest != 1 else {}
        mono = _print_monomial(factors) if factors else ""
        neg = coeff < 0
        c = abs(coeff)
        if mono and c == 1:
            body = mono
        elif mono:
            body = f"{_rational_text(c)}*{mono}"
        else:
            body = _rational_text(c)
        if not out:
            out.append(f"-{body}" if neg else body)
        else:
            out.append(f" - {body}" if neg else f" + {body}")
    return "".join(out)


def print_system(sys: PdeSystem) -> str:
    lines = [f"indep {' '.join(str(x) for x in sys.independents)};",
             f"dep {' '.join(sys.dependents)};"]
    if sys.functions:
        lines.append("func " + ", ".join(f"{f.name}({', '.join(str(a) for a in f.args)})"
                                         for f in sys.functions) + ";")
    if sys.constants:
        lines.append("const " + ", ".join(str(c) for c in sys.constants) + ";")
    lines.append(f"eps order {sys.eps_order};")
    for eq in sys.equations:
        full = eq.e0 + EPS * eq.e1
        lines.append(f"eq {eq.name}: {print_expression(full)} = 0 lead {eq.leading.name};")
    return "\n".join(lines) + "\n"


def print_generator(X: Generator) -> str:
    comps = [f"xi({x})={print_expression(s)}" for x, s in X.xi.items() if not s.is_zero()]
    comps += [f"eta({d})={print_expression(s)}" for d, s in X.eta.items() if not s.is_zero()]
    if not comps:
        comps = [f"xi({next(iter(X.xi), 't')})=0"] if X.xi else []
    return f"gen {X.name}: " + ", ".join(comps) + ";"


def print_ansatz(a: SubstitutionAnsatz) -> str:
    text = "subst " + ", ".join(f"{n} = {print_expression(s)}" for n, s in a.images.items())
    if a.side_conditions:
        text += " satisfying " + ", ".join(print_expression(c) for c in a.side_conditions)
    return text + ";"


# -- serialization -------------------------------------------------------------

def _terms(e) -> list:
    e = normalize(e, cap=None)
    if e == 0:
        return []
    out = []
    for term in sorted(sp.Add.make_args(e), key=_term_key):
        coeff, rest = term.as_coeff_Mul()
        out.append([_rational_text(coeff), _print_monomial(_powers(rest)) if rest != 1 else "1"])
    return out


def serialize_vector(T, sys: PdeSystem, report=None, generator: Generator | None = None,
                     ansatz: SubstitutionAnsatz | None = None) -> dict:
    """JSON-compatible document; keys sorted on dump so output is bit-stable."""
    comps = {}
    for x, s in T.components.items():
        comps[str(x)] = {"grades": [_terms(s.grade(k)) for k in range(s.order + 1)],
                         "text": print_expression(s)}
    flags = {k: v for k, v in T.provenance.items() if isinstance(v, bool)}
    doc = {"schema": SCHEMA, "system": print_system(sys), "order": int(T.order),
           "components": comps, "flags": flags}
    prov = {}
    if generator is not None:
        prov["generator"] = print_generator(generator)
    if ansatz is not None:
        prov["substitution"] = print_ansatz(ansatz)
    elif "substitution" in T.provenance:
        prov["substitution"] = {k: print_expression(v) for k, v in T.provenance["substitution"].items()}
    doc["provenance"] = prov
    if report is not None:
        doc["verdict"] = report.verdict
        doc["residual"] = [print_expression(report.residual.grade(k)) for k in range(report.residual.order + 1)]
    return doc


def dumps_vector(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def deserialize_vector(doc: dict):
    from .conservation import ConservedVector
    if doc.get("schema") != SCHEMA:
        raise DslError(f"unsupported schema {doc.get('schema')!r}; expected {SCHEMA}")
    sys = parse_system(doc["system"])
    decls = declarations_of(sys)
    order = int(doc["order"])
    comps = {}
    for x, c in doc["components"].items():
        grades = []
        for terms in c["grades"]:
            grades.append(sp.Add(*[sp.Rational(coef) * parse_expression(mono, decls) for coef, mono in terms]))
        comps[sp.Symbol(x)] = EpsSeries(grades, order)
    return ConservedVector(comps, dict(doc.get("flags", {})), order), sys


def load_document(path) -> Document:
    with open(path, encoding="utf-8") as fh:
        return parse_document(fh.read())
