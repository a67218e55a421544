"""Scenario file format: declarations plus checks, one statement per line.

The grammar is deliberately small and LL(1):

    version 1
    block NAME vars INT cap INT
    quotient NAME vars INT degcap INT relations { POLY, POLY, ... }
    point NAME = VECEXPR
    map NAME ( PARAMS ) -> INT { EXPR, EXPR, ... }
    form NAME arity INT dim INT { [I, J, K] = RAT ... }
    connection NAME dim INT { GAMMA[I][J, K] = POLY ... }
    retract NAME iota=MAPNAME r=MAPNAME
    check KIND ARGS

`#` starts a comment; newlines are insignificant inside brackets.  Vector
lists in check arguments are parenthesized and `;`-separated, so a literal
coordinate tuple inside a list reads `((1, 2); Q)`.  Quotient relations use
the quotient's own generators (`q[1]*q[2]`), connection entries use the
coordinate names `x1..xn`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .polymap import Poly

__all__ = [
    "ParseError",
    "ENum",
    "ERef",
    "ECall",
    "ENeg",
    "EPow",
    "EBin",
    "EVec",
    "BlockDecl",
    "QuotientDecl",
    "PointDecl",
    "MapDecl",
    "FormDecl",
    "ConnectionDecl",
    "RetractDecl",
    "CheckDecl",
    "Scenario",
    "CHECK_KINDS",
    "parse_scenario",
    "parse_expression",
    "render_scenario",
    "render_expr",
]

CHECK_KINDS = (
    "in-Dk",
    "in-DNk",
    "i-tuple",
    "nilsquare",
    "i-morphism",
    "axioms",
    "equiv-connection",
    "pullback-lemma",
    "idempotent",
)

# Names that start a statement (or are otherwise magic) cannot be declared.
_RESERVED = {
    "version", "block", "quotient", "point", "map", "form", "connection",
    "retract", "check", "sqrt", "GAMMA",
}


class ParseError(Exception):
    """Syntax or semantic error with a 1-based source position."""

    def __init__(self, line: int, column: int, expected: str, found: str):
        self.line = line
        self.column = column
        self.expected = expected
        self.found = found
        super().__init__(f"line {line}, col {column}: expected {expected}, found {found}")


# -- expression AST ----------------------------------------------------------------


@dataclass(frozen=True)
class ENum:
    value: Fraction


@dataclass(frozen=True)
class ERef:
    """A bare name, or an indexed generator reference ``name[i]`` (1-based)."""

    name: str
    index: Optional[int] = None


@dataclass(frozen=True)
class ECall:
    name: str
    args: tuple


@dataclass(frozen=True)
class ENeg:
    operand: object


@dataclass(frozen=True)
class EPow:
    base: object
    exponent: int


@dataclass(frozen=True)
class EBin:
    op: str  # + - * /
    left: object
    right: object


@dataclass(frozen=True)
class EVec:
    """Literal coordinate tuple; one-dimensional tuples read ``(expr,)``."""

    items: tuple


# -- statements --------------------------------------------------------------------

# Polynomials inside declarations are stored canonically as a sorted tuple of
# (exponent-tuple, coefficient) pairs so scenario equality is syntax-independent.
PolyData = tuple


@dataclass(frozen=True)
class BlockDecl:
    name: str
    nvars: int
    cap: int
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class QuotientDecl:
    name: str
    nvars: int
    degcap: int
    relations: tuple  # of PolyData
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class PointDecl:
    name: str
    expr: object
    dim: int = field(compare=False, default=0)
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class MapDecl:
    name: str
    params: tuple
    out_dim: int
    bodies: tuple
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class FormDecl:
    name: str
    arity: int
    dim: int
    entries: tuple  # of ((i1..ik) 0-based, Fraction), sorted
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class ConnectionDecl:
    name: str
    dim: int
    entries: tuple  # of ((i, a, b) 0-based with a <= b, PolyData), sorted
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class RetractDecl:
    name: str
    iota: str
    r: str
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class CheckDecl:
    kind: str
    vectors: tuple = ()
    k: Optional[int] = None
    target: Optional[str] = None  # map / connection / retract name
    iota: Optional[str] = None
    at: Optional[object] = None
    weights: tuple = ()
    outer: tuple = ()
    mode: Optional[str] = None  # axioms: canonical | connection | retract
    line: int = field(compare=False, default=0)


@dataclass(frozen=True)
class Scenario:
    version: Optional[int]
    statements: tuple

    @property
    def checks(self) -> tuple:
        return tuple(s for s in self.statements if isinstance(s, CheckDecl))


# -- lexer -------------------------------------------------------------------------

_PUNCT2 = ("->",)
_PUNCT1 = "(){}[],;=+-*/^"


@dataclass(frozen=True)
class _Tok:
    type: str  # NAME INT NEWLINE EOF or the punct itself
    value: str
    line: int
    col: int


def _lex(text: str):
    toks = []
    line, col = 1, 1
    depth = 0
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch == "\n":
            if depth == 0:
                toks.append(_Tok("NEWLINE", "\\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("->", i):
            toks.append(_Tok("->", "->", line, col))
            i += 2
            col += 2
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(_Tok("INT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("NAME", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in _PUNCT1:
            if ch in "([{":
                depth += 1
            elif ch in ")]}":
                depth = max(0, depth - 1)
            toks.append(_Tok(ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(line, col, "a token", repr(ch))
    toks.append(_Tok("EOF", "end of input", line, col))
    return toks


# -- parser ------------------------------------------------------------------------


class _Sym:
    __slots__ = ("kind", "a", "b")

    def __init__(self, kind: str, a: int = 0, b: int = 0):
        self.kind = kind  # block quotient point map form connection retract
        self.a = a  # nvars / dim / in_dim / arity / chart_dim
        self.b = b  # out_dim / dim / ambient_dim


class _Parser:
    def __init__(self, text: str):
        self.toks = _lex(text)
        self.pos = 0
        self.symbols: dict = {}

    # token plumbing

    def peek(self, ahead: int = 0) -> _Tok:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def advance(self) -> _Tok:
        t = self.toks[self.pos]
        if t.type != "EOF":
            self.pos += 1
        return t

    def fail(self, expected: str, tok: Optional[_Tok] = None):
        tok = tok or self.peek()
        found = tok.value if tok.type != "NEWLINE" else "end of line"
        raise ParseError(tok.line, tok.col, expected, found)

    def expect(self, type_: str, expected: Optional[str] = None) -> _Tok:
        if self.peek().type != type_:
            self.fail(expected or f"'{type_}'")
        return self.advance()

    def expect_word(self, word: str) -> _Tok:
        t = self.peek()
        if t.type != "NAME" or t.value != word:
            self.fail(f"'{word}'")
        return self.advance()

    def expect_int(self, what: str = "an integer") -> int:
        return int(self.expect("INT", what).value)

    def skip_newlines(self):
        while self.peek().type == "NEWLINE":
            self.advance()

    def end_statement(self):
        t = self.peek()
        if t.type not in ("NEWLINE", "EOF"):
            self.fail("end of statement")

    # symbols

    def declare(self, tok: _Tok, sym: _Sym) -> str:
        name = tok.value
        if name in _RESERVED:
            self.fail("a fresh name (keyword is reserved)", tok)
        if name in self.symbols:
            self.fail("a fresh name (already declared)", tok)
        self.symbols[name] = sym
        return name

    def lookup(self, tok: _Tok, kinds) -> _Sym:
        sym = self.symbols.get(tok.value)
        if sym is None:
            self.fail(f"a declared name ({' or '.join(kinds)})", tok)
        if sym.kind not in kinds:
            self.fail(f"a name of kind {' or '.join(kinds)}", tok)
        return sym

    # scenario

    def parse(self) -> Scenario:
        stmts = []
        version = None
        self.skip_newlines()
        if self.peek().type == "NAME" and self.peek().value == "version":
            self.advance()
            version = self.expect_int("a version number")
            if version != 1:
                self.fail("version 1", self.toks[self.pos - 1])
            self.end_statement()
            self.skip_newlines()
        while self.peek().type != "EOF":
            stmts.append(self.statement())
            self.end_statement()
            self.skip_newlines()
        return Scenario(version, tuple(stmts))

    def statement(self):
        t = self.peek()
        if t.type != "NAME":
            self.fail("a statement keyword")
        handler = {
            "block": self.stmt_block,
            "quotient": self.stmt_quotient,
            "point": self.stmt_point,
            "map": self.stmt_map,
            "form": self.stmt_form,
            "connection": self.stmt_connection,
            "retract": self.stmt_retract,
            "check": self.stmt_check,
        }.get(t.value)
        if handler is None:
            self.fail("a statement keyword (block/quotient/point/map/form/connection/retract/check)")
        return handler()

    # declarations

    def stmt_block(self):
        line = self.advance().line
        name_tok = self.expect("NAME", "a block name")
        self.expect_word("vars")
        nvars = self.expect_int()
        self.expect_word("cap")
        cap = self.expect_int()
        if nvars < 1:
            self.fail("vars >= 1", name_tok)
        if cap < 1:
            self.fail("cap >= 1", name_tok)
        self.declare(name_tok, _Sym("block", nvars))
        return BlockDecl(name_tok.value, nvars, cap, line=line)

    def stmt_quotient(self):
        line = self.advance().line
        name_tok = self.expect("NAME", "a quotient name")
        self.expect_word("vars")
        nvars = self.expect_int()
        self.expect_word("degcap")
        degcap = self.expect_int()
        if nvars < 1:
            self.fail("vars >= 1", name_tok)
        if degcap < 1:
            self.fail("degcap >= 1", name_tok)
        # declared before its relations so q[1]*q[2] can reference q itself
        self.declare(name_tok, _Sym("quotient", nvars))
        self.expect_word("relations")
        self.expect("{")
        varmap = {name_tok.value: nvars}
        rels = [self.polynomial(varmap, nvars)]
        while self.peek().type == ",":
            self.advance()
            rels.append(self.polynomial(varmap, nvars))
        self.expect("}")
        return QuotientDecl(name_tok.value, nvars, degcap, tuple(rels), line=line)

    def stmt_point(self):
        line = self.advance().line
        name_tok = self.expect("NAME", "a point name")
        self.expect("=")
        start = self.peek()
        expr = self.vecexpr()
        dim = self.infer_vector(expr, start)
        self.declare(name_tok, _Sym("point", dim))
        return PointDecl(name_tok.value, expr, dim=dim, line=line)

    def stmt_map(self):
        line = self.advance().line
        name_tok = self.expect("NAME", "a map name")
        self.expect("(")
        params = [self.expect("NAME", "a parameter name").value]
        while self.peek().type == ",":
            self.advance()
            params.append(self.expect("NAME", "a parameter name").value)
        self.expect(")")
        if len(set(params)) != len(params):
            self.fail("distinct parameter names", name_tok)
        self.expect("->")
        out_dim = self.expect_int("the output dimension")
        if out_dim < 1:
            self.fail("output dimension >= 1", name_tok)
        self.expect("{")
        env = {p: i for i, p in enumerate(params)}
        bodies = [self.map_body_expr(env)]
        while self.peek().type == ",":
            self.advance()
            bodies.append(self.map_body_expr(env))
        close = self.peek()
        self.expect("}")
        if len(bodies) != out_dim:
            self.fail(f"{out_dim} component expression(s)", close)
        self.declare(name_tok, _Sym("map", len(params), out_dim))
        return MapDecl(name_tok.value, tuple(params), out_dim, tuple(bodies), line=line)

    def stmt_form(self):
        line = self.advance().line
        name_tok = self.expect("NAME", "a form name")
        self.expect_word("arity")
        arity = self.expect_int()
        self.expect_word("dim")
        dim = self.expect_int()
        if arity < 1 or dim < 1:
            self.fail("arity >= 1 and dim >= 1", name_tok)
        self.expect("{")
        entries = {}
        while self.peek().type == "[":
            open_tok = self.advance()
            idx = [self.expect_int("a coordinate index")]
            while self.peek().type == ",":
                self.advance()
                idx.append(self.expect_int("a coordinate index"))
            self.expect("]")
            if len(idx) != arity:
                self.fail(f"{arity} indices", open_tok)
            if any(not 1 <= i <= dim for i in idx):
                self.fail(f"indices in 1..{dim}", open_tok)
            key = tuple(i - 1 for i in idx)
            if key in entries:
                self.fail("a fresh index tuple (duplicate entry)", open_tok)
            self.expect("=")
            entries[key] = self.rational()
        self.expect("}")
        self.declare(name_tok, _Sym("form", arity, dim))
        entries = tuple(sorted((k, v) for k, v in entries.items() if v))
        return FormDecl(name_tok.value, arity, dim, entries, line=line)

    def stmt_connection(self):
        line = self.advance().line
        name_tok = self.expect("NAME", "a connection name")
        self.expect_word("dim")
        dim = self.expect_int()
        if dim < 1:
            self.fail("dim >= 1", name_tok)
        varmap = {f"x{j}": j - 1 for j in range(1, dim + 1)}
        self.expect("{")
        entries = {}
        while self.peek().type == "NAME" and self.peek().value == "GAMMA":
            gtok = self.advance()
            self.expect("[")
            i = self.expect_int("a component index")
            self.expect("]")
            self.expect("[")
            a = self.expect_int("a coordinate index")
            self.expect(",")
            b = self.expect_int("a coordinate index")
            self.expect("]")
            if not (1 <= i <= dim and 1 <= a <= dim and 1 <= b <= dim):
                self.fail(f"indices in 1..{dim}", gtok)
            key = (i - 1, min(a, b) - 1, max(a, b) - 1)
            if key in entries:
                self.fail("a fresh GAMMA entry (duplicate after symmetrization)", gtok)
            self.expect("=")
            entries[key] = self.polynomial(varmap, dim, homogeneous=False)
        self.expect("}")
        self.declare(name_tok, _Sym("connection", dim))
        return ConnectionDecl(name_tok.value, dim, tuple(sorted(entries.items())), line=line)

    def stmt_retract(self):
        line = self.advance().line
        name_tok = self.expect("NAME", "a retract name")
        self.expect_word("iota")
        self.expect("=")
        iota_tok = self.expect("NAME", "a map name")
        iota = self.lookup(iota_tok, ("map",))
        self.expect_word("r")
        self.expect("=")
        r_tok = self.expect("NAME", "a map name")
        r = self.lookup(r_tok, ("map",))
        if iota.a != r.b or iota.b != r.a:
            self.fail("maps with matching chart/ambient dimensions", r_tok)
        self.declare(name_tok, _Sym("retract", iota.a, iota.b))
        return RetractDecl(name_tok.value, iota_tok.value, r_tok.value, line=line)

    # checks

    def stmt_check(self):
        line = self.advance().line
        kind_tok = self.peek()
        kind = self.check_kind()
        handler = {
            "in-Dk": self.check_membership,
            "in-DNk": self.check_membership,
            "i-tuple": self.check_membership,
            "nilsquare": self.check_membership,
            "i-morphism": self.check_imorphism,
            "axioms": self.check_axioms,
            "equiv-connection": self.check_equiv,
            "pullback-lemma": self.check_pullback,
            "idempotent": self.check_idempotent,
        }[kind]
        return handler(kind, kind_tok, line)

    def check_kind(self) -> str:
        parts = [self.expect("NAME", "a check kind").value]
        while self.peek().type == "-":
            self.advance()
            parts.append(self.expect("NAME", "rest of the check kind").value)
        kind = "-".join(parts)
        if kind not in CHECK_KINDS:
            self.fail("a check kind (%s)" % ", ".join(CHECK_KINDS), self.toks[self.pos - 1])
        return kind

    def check_membership(self, kind, kind_tok, line):
        vectors, dim = self.vector_list()
        k = None
        if kind != "nilsquare":
            k = self.k_param()
        if kind in ("i-tuple", "nilsquare") and len(vectors) < 2:
            self.fail("at least two points", kind_tok)
        if kind == "in-Dk" and len(vectors) != 1:
            self.fail("exactly one vector", kind_tok)
        if kind == "in-DNk" and len(vectors) != k + 1:
            self.fail(f"k+1 = {k + 1} vectors", kind_tok)
        return CheckDecl(kind, vectors=vectors, k=k, line=line)

    def check_imorphism(self, kind, kind_tok, line):
        map_tok = self.expect("NAME", "a map name")
        sym = self.lookup(map_tok, ("map",))
        vectors, dim = self.vector_list()
        if len(vectors) < 2:
            self.fail("at least two points", kind_tok)
        if dim != sym.a:
            self.fail(f"points of dimension {sym.a}", map_tok)
        k = self.k_param()
        return CheckDecl(kind, vectors=vectors, k=k, target=map_tok.value, line=line)

    def check_axioms(self, kind, kind_tok, line):
        mode_tok = self.expect("NAME", "canonical, connection=NAME, or retract=NAME")
        mode = mode_tok.value
        k = None
        target = None
        if mode == "canonical":
            k = self.k_param()
        elif mode in ("connection", "retract"):
            self.expect("=")
            target_tok = self.expect("NAME", f"a {mode} name")
            self.lookup(target_tok, (mode,))
            target = target_tok.value
        else:
            self.fail("canonical, connection=NAME, or retract=NAME", mode_tok)
        self.expect_word("points")
        points, dim = self.vector_list()
        self.expect_word("weights")
        weights = self.weight_rows(len(points))
        outer = ()
        if self.peek().type == "NAME" and self.peek().value == "outer":
            self.advance()
            outer = self.weight_row(len(weights))
        return CheckDecl(
            kind, vectors=points, k=k, target=target, weights=weights,
            outer=outer, mode=mode, line=line,
        )

    def check_equiv(self, kind, kind_tok, line):
        conn_tok = self.expect("NAME", "a connection name")
        self.lookup(conn_tok, ("connection",))
        self.expect_word("points")
        points, dim = self.vector_list()
        if len(points) != 3:
            self.fail("exactly three points (P; Q; S)", kind_tok)
        return CheckDecl(kind, vectors=points, target=conn_tok.value, line=line)

    def check_pullback(self, kind, kind_tok, line):
        self.expect_word("connection")
        self.expect("=")
        conn_tok = self.expect("NAME", "a connection name")
        conn = self.lookup(conn_tok, ("connection",))
        self.expect_word("iota")
        self.expect("=")
        iota_tok = self.expect("NAME", "a map name")
        iota = self.lookup(iota_tok, ("map",))
        if iota.a != iota.b or iota.b != conn.a:
            self.fail("a square map matching the connection dimension", iota_tok)
        self.expect_word("points")
        points, dim = self.vector_list()
        if dim != conn.a:
            self.fail(f"points of dimension {conn.a}", conn_tok)
        self.expect_word("weights")
        weights = self.weight_rows(len(points))
        return CheckDecl(
            kind, vectors=points, target=conn_tok.value, iota=iota_tok.value,
            weights=weights, line=line,
        )

    def check_idempotent(self, kind, kind_tok, line):
        name_tok = self.expect("NAME", "a map or retract name")
        sym = self.lookup(name_tok, ("map", "retract"))
        if sym.kind == "map" and sym.a != sym.b:
            self.fail("a square map (idempotents need in-dim == out-dim)", name_tok)
        ambient = sym.b
        self.expect_word("at")
        start = self.peek()
        at = self.vecexpr()
        if self.infer_vector(at, start) != ambient:
            self.fail(f"a base point of dimension {ambient}", start)
        return CheckDecl(kind, target=name_tok.value, at=at, line=line)

    # shared argument helpers

    def k_param(self) -> int:
        self.expect_word("k")
        self.expect("=")
        tok = self.peek()
        k = self.expect_int("an order k >= 1")
        if k < 1:
            self.fail("an order k >= 1", tok)
        return k

    def vector_list(self):
        """Parenthesized `;`-separated VECEXPRs; returns (tuple, common dim)."""
        self.expect("(")
        start = self.peek()
        items = [self.vecexpr()]
        dims = [self.infer_vector(items[0], start)]
        while self.peek().type == ";":
            self.advance()
            start = self.peek()
            items.append(self.vecexpr())
            dims.append(self.infer_vector(items[-1], start))
        self.expect(")")
        if len(set(dims)) > 1:
            self.fail("vectors of equal dimension", start)
        return tuple(items), dims[0]

    def weight_row(self, width: int):
        open_tok = self.expect("(")
        vals = [self.rational()]
        while self.peek().type == ",":
            self.advance()
            vals.append(self.rational())
        self.expect(")")
        if len(vals) != width:
            self.fail(f"{width} weights", open_tok)
        if sum(vals) != 1:
            self.fail("weights summing to 1", open_tok)
        return tuple(vals)

    def weight_rows(self, width: int):
        self.expect("(")
        rows = [self.weight_row(width)]
        while self.peek().type == ";":
            self.advance()
            rows.append(self.weight_row(width))
        self.expect(")")
        return tuple(rows)

    def rational(self) -> Fraction:
        neg = False
        if self.peek().type == "-":
            self.advance()
            neg = True
        num = self.expect_int("a rational number")
        den = 1
        if self.peek().type == "/":
            self.advance()
            den = self.expect_int("a denominator")
            if den == 0:
                self.fail("a nonzero denominator", self.toks[self.pos - 1])
        q = Fraction(num, den)
        return -q if neg else q

    # expressions

    def vecexpr(self):
        """Additive expression over points / generator refs / literal tuples."""
        return self.expr(env=None, calls=False)

    def map_body_expr(self, env):
        return self.expr(env=env, calls="sqrt")

    def expr(self, env, calls):
        node = self.mulexpr(env, calls)
        while self.peek().type in ("+", "-"):
            op = self.advance().type
            node = _fold(EBin(op, node, self.mulexpr(env, calls)))
        return node

    def mulexpr(self, env, calls):
        node = self.unary(env, calls)
        while self.peek().type in ("*", "/"):
            op = self.advance().type
            node = _fold(EBin(op, node, self.unary(env, calls)))
        return node

    def unary(self, env, calls):
        if self.peek().type == "-":
            self.advance()
            return _fold(ENeg(self.unary(env, calls)))
        node = self.atom(env, calls)
        if self.peek().type == "^":
            self.advance()
            node = EPow(node, self.expect_int("a nonnegative integer exponent"))
        return node

    def atom(self, env, calls):
        t = self.peek()
        if t.type == "INT":
            self.advance()
            return ENum(Fraction(int(t.value)))
        if t.type == "(":
            self.advance()
            first = self.expr(env, calls)
            if self.peek().type == ",":
                items = [first]
                while self.peek().type == ",":
                    self.advance()
                    if self.peek().type == ")":  # 1-tuple: "(x,)"
                        break
                    items.append(self.expr(env, calls))
                self.expect(")")
                return EVec(tuple(items))
            self.expect(")")
            return first
        if t.type == "NAME":
            self.advance()
            if self.peek().type == "(" and calls:
                if calls == "sqrt" and t.value != "sqrt":
                    self.fail("sqrt (the only call allowed here)", t)
                self.advance()
                args = [self.expr(env, calls)]
                while self.peek().type == ",":
                    self.advance()
                    args.append(self.expr(env, calls))
                self.expect(")")
                if t.value == "sqrt" and len(args) != 1:
                    self.fail("one argument to sqrt", t)
                if t.value != "sqrt":
                    self.lookup(t, ("map",))
                return ECall(t.value, tuple(args))
            if self.peek().type == "[":
                self.advance()
                itok = self.peek()
                index = self.expect_int("a generator index")
                self.expect("]")
                if env is not None:
                    self.fail("a parameter name (no generators inside map bodies)", t)
                sym = self.lookup(t, ("block", "quotient"))
                if not 1 <= index <= sym.a:
                    self.fail(f"an index in 1..{sym.a}", itok)
                return ERef(t.value, index)
            if env is not None:
                if t.value not in env:
                    self.fail("a declared parameter name", t)
                return ERef(t.value)
            return ERef(t.value)
        self.fail("an expression")

    # expression typing: returns dimension for vectors, 0 for scalars

    def typeof(self, node, tok) -> int:
        if isinstance(node, ENum):
            return 0
        if isinstance(node, ERef):
            if node.index is not None:
                return 0
            sym = self.symbols.get(node.name)
            if sym is None:
                self.fail("a declared point name", tok)
            if sym.kind != "point":
                self.fail("a point name", tok)
            return sym.a
        if isinstance(node, EVec):
            for item in node.items:
                if self.typeof(item, tok) != 0:
                    self.fail("scalar tuple components", tok)
            return len(node.items)
        if isinstance(node, ENeg):
            return self.typeof(node.operand, tok)
        if isinstance(node, EPow):
            if self.typeof(node.base, tok) != 0:
                self.fail("a scalar base for ^", tok)
            return 0
        if isinstance(node, ECall):
            if node.name == "sqrt":
                return 0
            return self.symbols[node.name].b
        if isinstance(node, EBin):
            lt = self.typeof(node.left, tok)
            rt = self.typeof(node.right, tok)
            if node.op in ("+", "-"):
                if lt != rt:
                    self.fail("operands of equal dimension", tok)
                return lt
            if node.op == "*":
                if lt and rt:
                    self.fail("at most one vector factor", tok)
                return lt or rt
            if rt != 0:
                self.fail("a scalar divisor", tok)
            return lt
        raise AssertionError(node)

    def infer_vector(self, node, tok) -> int:
        dim = self.typeof(node, tok)
        if dim == 0:
            self.fail("a vector-valued expression", tok)
        return dim

    # polynomial folding (quotient relations, connection entries)

    def polynomial(self, varmap: dict, nvars: int, homogeneous: bool = True):
        start = self.peek()
        expr = self.expr(env=None, calls=False)
        poly = self._to_poly(expr, varmap, nvars, start)
        if poly.is_zero():
            self.fail("a nonzero polynomial", start)
        if homogeneous:
            degs = {sum(m) for m in poly.terms}
            if len(degs) != 1:
                self.fail("a homogeneous polynomial", start)
            if min(degs) < 2:
                self.fail("a relation of degree >= 2", start)
        return tuple(sorted(poly.terms.items()))

    def _to_poly(self, node, varmap, nvars, tok) -> Poly:
        if isinstance(node, ENum):
            return Poly.constant(nvars, node.value)
        if isinstance(node, ERef):
            if node.index is not None:
                if node.name not in varmap:
                    self.fail("this declaration's own generators", tok)
                return Poly.variable(nvars, node.index - 1)
            if node.name in varmap:
                return Poly.variable(nvars, varmap[node.name])
            self.fail("a polynomial in the declared variables", tok)
        if isinstance(node, ENeg):
            return -self._to_poly(node.operand, varmap, nvars, tok)
        if isinstance(node, EPow):
            return self._to_poly(node.base, varmap, nvars, tok) ** node.exponent
        if isinstance(node, EBin):
            left = self._to_poly(node.left, varmap, nvars, tok)
            right = self._to_poly(node.right, varmap, nvars, tok)
            if node.op == "+":
                return left + right
            if node.op == "-":
                return left - right
            if node.op == "*":
                return left * right
            if not right.is_constant() or right.constant_value() == 0:
                self.fail("division by a nonzero constant", tok)
            return left * (Fraction(1) / right.constant_value())
        self.fail("a polynomial expression", tok)


def _fold(node):
    """Constant-fold rational arithmetic so `3/2` is a literal, not a division."""
    if isinstance(node, ENeg) and isinstance(node.operand, ENum):
        return ENum(-node.operand.value)
    if isinstance(node, EBin) and isinstance(node.left, ENum) and isinstance(node.right, ENum):
        a, b = node.left.value, node.right.value
        if node.op == "+":
            return ENum(a + b)
        if node.op == "-":
            return ENum(a - b)
        if node.op == "*":
            return ENum(a * b)
        if b != 0:
            return ENum(a / b)
    return node


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario; raises ParseError with a 1-based position."""
    return _Parser(text).parse()


def parse_expression(text: str) -> object:
    """Parse a standalone expression (the CLI eval surface: calls allowed)."""
    p = _Parser("")
    p.toks = _lex(text.replace("\n", " "))
    p.pos = 0
    # no symbol table: name resolution happens at evaluation time
    p.lookup = lambda tok, kinds: _Sym("block", 10 ** 9, 10 ** 9)  # type: ignore[assignment]
    node = p.expr(env=None, calls=True)
    if p.peek().type != "EOF":
        p.fail("end of expression")
    return node


# -- rendering ---------------------------------------------------------------------

_PREC = {"+": 10, "-": 10, "*": 20, "/": 20}


def render_expr(node) -> str:
    return _render(node, 0)


def _render(node, parent_prec: int) -> str:
    if isinstance(node, ENum):
        return str(node.value)
    if isinstance(node, ERef):
        return node.name if node.index is None else f"{node.name}[{node.index}]"
    if isinstance(node, EVec):
        inner = ", ".join(_render(item, 0) for item in node.items)
        return f"({inner},)" if len(node.items) == 1 else f"({inner})"
    if isinstance(node, ECall):
        return f"{node.name}({', '.join(_render(a, 0) for a in node.args)})"
    if isinstance(node, ENeg):
        text = f"-{_render(node.operand, 30)}"
        return f"({text})" if parent_prec > 30 else text
    if isinstance(node, EPow):
        text = f"{_render(node.base, 41)}^{node.exponent}"
        return f"({text})" if parent_prec > 40 else text
    if isinstance(node, EBin):
        prec = _PREC[node.op]
        left = _render(node.left, prec)
        right = _render(node.right, prec + 1)  # right-side ties get parens
        text = f"{left} {node.op} {right}"
        return f"({text})" if parent_prec > prec else text
    raise AssertionError(node)


def _render_poly(data: PolyData, names) -> str:
    poly = Poly(len(names), dict(data))
    return poly.format(names)


def _render_weights(rows) -> str:
    return "(" + "; ".join(_render_row(r) for r in rows) + ")"


def _render_row(row) -> str:
    return "(" + ", ".join(str(v) for v in row) + ")"


def _render_check(c: CheckDecl) -> str:
    vecs = "(" + "; ".join(render_expr(v) for v in c.vectors) + ")"
    if c.kind in ("in-Dk", "in-DNk", "i-tuple"):
        return f"check {c.kind} {vecs} k={c.k}"
    if c.kind == "nilsquare":
        return f"check nilsquare {vecs}"
    if c.kind == "i-morphism":
        return f"check i-morphism {c.target} {vecs} k={c.k}"
    if c.kind == "axioms":
        head = "canonical k=%d" % c.k if c.mode == "canonical" else f"{c.mode}={c.target}"
        text = f"check axioms {head} points {vecs} weights {_render_weights(c.weights)}"
        if c.outer:
            text += f" outer {_render_row(c.outer)}"
        return text
    if c.kind == "equiv-connection":
        return f"check equiv-connection {c.target} points {vecs}"
    if c.kind == "pullback-lemma":
        return (
            f"check pullback-lemma connection={c.target} iota={c.iota} "
            f"points {vecs} weights {_render_weights(c.weights)}"
        )
    if c.kind == "idempotent":
        return f"check idempotent {c.target} at {render_expr(c.at)}"
    raise AssertionError(c.kind)


def render_scenario(s: Scenario) -> str:
    """Canonical text that re-parses to an equal scenario."""
    lines = []
    if s.version is not None:
        lines.append(f"version {s.version}")
    for st in s.statements:
        if isinstance(st, BlockDecl):
            lines.append(f"block {st.name} vars {st.nvars} cap {st.cap}")
        elif isinstance(st, QuotientDecl):
            names = [f"{st.name}[{i}]" for i in range(1, st.nvars + 1)]
            rels = ", ".join(_render_poly(r, names) for r in st.relations)
            lines.append(
                f"quotient {st.name} vars {st.nvars} degcap {st.degcap} relations {{ {rels} }}"
            )
        elif isinstance(st, PointDecl):
            lines.append(f"point {st.name} = {render_expr(st.expr)}")
        elif isinstance(st, MapDecl):
            bodies = ", ".join(render_expr(b) for b in st.bodies)
            lines.append(
                f"map {st.name}({', '.join(st.params)}) -> {st.out_dim} {{ {bodies} }}"
            )
        elif isinstance(st, FormDecl):
            parts = " ".join(
                "[%s] = %s" % (", ".join(str(i + 1) for i in idx), val)
                for idx, val in st.entries
            )
            lines.append(f"form {st.name} arity {st.arity} dim {st.dim} {{ {parts} }}")
        elif isinstance(st, ConnectionDecl):
            names = [f"x{j}" for j in range(1, st.dim + 1)]
            parts = " ".join(
                "GAMMA[%d][%d, %d] = %s" % (i + 1, a + 1, b + 1, _render_poly(p, names))
                for (i, a, b), p in st.entries
            )
            lines.append(f"connection {st.name} dim {st.dim} {{ {parts} }}")
        elif isinstance(st, RetractDecl):
            lines.append(f"retract {st.name} iota={st.iota} r={st.r}")
        elif isinstance(st, CheckDecl):
            lines.append(_render_check(st))
        else:
            raise AssertionError(st)
    return "\n".join(lines) + "\n"
