"""Parsers and serializers for the `.fm` structure format, the `.fml` formula
DSL, and the deterministic JSON report encoding.

`.fm` grammar (line oriented, `#` starts a comment anywhere on a line):

    signature: R/2 S/1
    universe: 5
    relation R: (0,1) (1,0)
    set A: (1) (2)
    seq I: (0) (1) (2)
    submodel M0: 0 1 2

`.fml` grammar:

    phi(x0,...,x{r-1}; y0,...,y{s-1}) := <body>

with atoms `R(v,...)`, connectives `~ & | -> <->` (precedence from tightest:
~, &, |, ->, <->; all left associative except -> which is right associative),
quantifiers `exists v.` / `forall v.` taking maximal scope, and parentheses.
Head variables must be named x0..x{r-1} and y0..y{s-1} in block order; bound
variables must be z-prefixed.
"""

from __future__ import annotations

import dataclasses
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

from .core import (And, Atom, Exists, Forall, Formula, Iff, Implies, Not, Or,
                   PartitionedFormula, Signature, Structure, TupleSequence)
from .util import FmlabError


class ParseError(FmlabError):
    """Syntax or validation error with a 1-based line:column position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass
class StructureDocument:
    structure: Structure
    sets: dict[str, frozenset[tuple[int, ...]]] = field(default_factory=dict)
    seqs: dict[str, TupleSequence] = field(default_factory=dict)
    submodels: dict[str, tuple[int, ...]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def __eq__(self, other):
        if not isinstance(other, StructureDocument):
            return NotImplemented
        return (self.structure.signature == other.structure.signature
                and self.structure.universe_size == other.structure.universe_size
                and dict(self.structure.relations) == dict(other.structure.relations)
                and self.sets == other.sets
                and self.seqs == other.seqs
                and self.submodels == other.submodels)


@dataclass(frozen=True)
class FormulaSource:
    name: str
    formula: PartitionedFormula


# ---------------------------------------------------------------------------
# .fm structures
# ---------------------------------------------------------------------------

_TUPLE_RE = re.compile(r"\(\s*(-?\d+(?:\s*,\s*-?\d+)*)\s*\)")


def _strip_comment(line: str) -> str:
    idx = line.find("#")
    return line if idx < 0 else line[:idx]


def _parse_tuples(body: str, lineno: int, col0: int) -> list[tuple[int, ...]]:
    out = []
    pos = 0
    while pos < len(body):
        if body[pos].isspace():
            pos += 1
            continue
        m = _TUPLE_RE.match(body, pos)
        if not m:
            raise ParseError("expected a tuple like (0,1)", lineno, col0 + pos + 1)
        out.append(tuple(int(x) for x in m.group(1).split(",")))
        pos = m.end()
    return out


def parse_structure(text: str) -> StructureDocument:
    signature: Optional[Signature] = None
    universe: Optional[int] = None
    relations: dict[str, list[tuple[int, ...]]] = {}
    sets: dict[str, list[tuple[int, ...]]] = {}
    seqs: dict[str, list[tuple[int, ...]]] = {}
    submodels: dict[str, tuple[int, ...]] = {}
    warnings: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line.strip():
            continue
        if ":" not in line:
            raise ParseError("expected 'keyword ...:' section line", lineno, 1)
        head, _, body = line.partition(":")
        parts = head.split()
        if not parts:
            raise ParseError("missing section keyword", lineno, 1)
        keyword, *rest = parts
        col0 = len(head) + 1

        if keyword == "signature":
            decls = []
            for part in body.split():
                if "/" not in part:
                    raise ParseError(f"bad relation declaration {part!r}, expected name/arity",
                                     lineno, line.index(part) + 1)
                name, _, ar = part.partition("/")
                if not name.isidentifier():
                    raise ParseError(f"bad relation name {name!r}", lineno, line.index(part) + 1)
                try:
                    arity = int(ar)
                except ValueError:
                    raise ParseError(f"bad arity {ar!r}", lineno, line.index(part) + 1)
                decls.append((name, arity))
            try:
                signature = Signature(tuple(decls))
            except FmlabError as e:
                raise ParseError(str(e), lineno, 1)
        elif keyword == "universe":
            try:
                universe = int(body.strip())
            except ValueError:
                raise ParseError("universe must be an integer", lineno, col0 + 1)
            if universe < 0:
                raise ParseError("universe must be a natural number", lineno, col0 + 1)
        elif keyword == "relation":
            if signature is None:
                raise ParseError("missing signature", lineno, 1)
            if universe is None:
                raise ParseError("missing universe", lineno, 1)
            if len(rest) != 1:
                raise ParseError("relation line needs a name", lineno, 1)
            name = rest[0]
            if not signature.has(name):
                raise ParseError(f"unknown relation: {name}", lineno, 1)
            ar = signature.arity(name)
            tuples = _parse_tuples(body, lineno, col0)
            bucket = relations.setdefault(name, [])
            for t in tuples:
                if len(t) != ar:
                    raise ParseError(f"arity mismatch: {name} expects {ar}-tuples, got {t}",
                                     lineno, col0 + 1)
                for e in t:
                    if not (0 <= e < universe):
                        raise ParseError(f"element out of range: {e}", lineno, col0 + 1)
                if t in bucket:
                    warnings.append(f"{lineno}: duplicate tuple {t} in relation {name}")
                else:
                    bucket.append(t)
        elif keyword in ("set", "seq"):
            if universe is None:
                raise ParseError("missing universe", lineno, 1)
            if len(rest) != 1:
                raise ParseError(f"{keyword} line needs a name", lineno, 1)
            name = rest[0]
            tuples = _parse_tuples(body, lineno, col0)
            for t in tuples:
                for e in t:
                    if not (0 <= e < universe):
                        raise ParseError(f"element out of range: {e}", lineno, col0 + 1)
            if keyword == "set":
                bucket = sets.setdefault(name, [])
                for t in tuples:
                    if t in bucket:
                        warnings.append(f"{lineno}: duplicate tuple {t} in set {name}")
                    else:
                        bucket.append(t)
            else:
                if tuples and len({len(t) for t in tuples}) != 1:
                    raise ParseError("sequence entries must share one arity", lineno, col0 + 1)
                seqs.setdefault(name, []).extend(tuples)
        elif keyword == "submodel":
            if universe is None:
                raise ParseError("missing universe", lineno, 1)
            if len(rest) != 1:
                raise ParseError("submodel line needs a name", lineno, 1)
            name = rest[0]
            try:
                verts = tuple(sorted({int(x) for x in body.split()}))
            except ValueError:
                raise ParseError("submodel expects whitespace-separated vertices", lineno, col0 + 1)
            for v in verts:
                if not (0 <= v < universe):
                    raise ParseError(f"element out of range: {v}", lineno, col0 + 1)
            submodels[name] = verts
        else:
            raise ParseError(f"unknown section keyword {keyword!r}", lineno, 1)

    if signature is None:
        raise ParseError("missing signature", max(1, text.count("\n") + 1), 1)
    if universe is None:
        raise ParseError("missing universe", max(1, text.count("\n") + 1), 1)

    structure = Structure(signature, universe, relations)
    return StructureDocument(
        structure=structure,
        sets={n: frozenset(ts) for n, ts in sets.items()},
        seqs={n: TupleSequence.of(ts) if ts else TupleSequence((), 1)
              for n, ts in seqs.items()},
        submodels=submodels,
        warnings=warnings,
    )


def serialize_structure(doc: StructureDocument) -> str:
    M = doc.structure
    lines = []
    lines.append("signature: " + " ".join(f"{n}/{a}" for n, a in M.signature.relations))
    lines.append(f"universe: {M.universe_size}")
    for name, _ in M.signature.relations:
        ts = sorted(M.relations[name])
        body = " ".join("(" + ",".join(map(str, t)) + ")" for t in ts)
        lines.append(f"relation {name}:" + (" " + body if body else ""))
    for name in sorted(doc.sets):
        body = " ".join("(" + ",".join(map(str, t)) + ")" for t in sorted(doc.sets[name]))
        lines.append(f"set {name}:" + (" " + body if body else ""))
    for name in sorted(doc.seqs):
        body = " ".join("(" + ",".join(map(str, t)) + ")" for t in doc.seqs[name])
        lines.append(f"seq {name}:" + (" " + body if body else ""))
    for name in sorted(doc.submodels):
        body = " ".join(map(str, doc.submodels[name]))
        lines.append(f"submodel {name}:" + (" " + body if body else ""))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# .fml formulas
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><->|->|[~&|().,;])
  | (?P<assign>:=)
""", re.VERBOSE)

_OBJ_VAR = re.compile(r"x(\d+)$")
_PAR_VAR = re.compile(r"y(\d+)$")
_BOUND_VAR = re.compile(r"z(\d+)$")


@dataclass
class _Token:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        value = m.group(0)
        kind = m.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, value, line, col))
        nl = value.count("\n")
        if nl:
            line += nl
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


class _FormulaParser:
    """Recursive descent over the token list; precedence ~ > & > | > -> > <->."""

    def __init__(self, tokens: list[_Token], signature: Optional[Signature],
                 declared: set[str]):
        self.toks = tokens
        self.i = 0
        self.signature = signature
        self.declared = declared
        self.bound: list[str] = []

    def peek(self) -> _Token:
        return self.toks[self.i]

    def take(self, value: Optional[str] = None, kind: Optional[str] = None) -> _Token:
        tok = self.toks[self.i]
        if value is not None and tok.value != value:
            raise ParseError(f"expected {value!r}", tok.line, tok.col)
        if kind is not None and tok.kind != kind:
            raise ParseError(f"expected {kind}", tok.line, tok.col)
        self.i += 1
        return tok

    def parse(self) -> Formula:
        f = self.parse_iff()
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.value!r}", tok.line, tok.col)
        return f

    def parse_iff(self) -> Formula:
        left = self.parse_implies()
        while self.peek().value == "<->":
            self.take("<->")
            left = Iff(left, self.parse_implies())
        return left

    def parse_implies(self) -> Formula:
        left = self.parse_or()
        if self.peek().value == "->":
            self.take("->")
            return Implies(left, self.parse_implies())  # right associative
        return left

    def parse_or(self) -> Formula:
        left = self.parse_and()
        while self.peek().value == "|":
            self.take("|")
            left = Or(left, self.parse_and())
        return left

    def parse_and(self) -> Formula:
        left = self.parse_unary()
        while self.peek().value == "&":
            self.take("&")
            left = And(left, self.parse_unary())
        return left

    def parse_unary(self) -> Formula:
        tok = self.peek()
        if tok.value == "~":
            self.take("~")
            return Not(self.parse_unary())
        if tok.value in ("exists", "forall"):
            self.take(tok.value)
            var = self.take(kind="name")
            if not _BOUND_VAR.match(var.value):
                raise ParseError("bound variables must be named z0, z1, ...",
                                 var.line, var.col)
            if var.value in self.bound or var.value in self.declared:
                raise ParseError(f"variable {var.value} shadows an outer variable",
                                 var.line, var.col)
            self.take(".")
            self.bound.append(var.value)
            body = self.parse_iff()  # quantifier takes maximal scope
            self.bound.pop()
            return (Exists if tok.value == "exists" else Forall)(var.value, body)
        if tok.value == "(":
            self.take("(")
            f = self.parse_iff()
            self.take(")")
            return f
        if tok.kind == "name":
            return self.parse_atom()
        raise ParseError(f"unexpected {tok.value!r}" if tok.value else "unexpected end of input",
                         tok.line, tok.col)

    def parse_atom(self) -> Formula:
        name = self.take(kind="name")
        if self.signature is not None and not self.signature.has(name.value):
            raise ParseError(f"unknown relation: {name.value}", name.line, name.col)
        self.take("(")
        args = []
        while True:
            var = self.take(kind="name")
            if var.value not in self.declared and var.value not in self.bound:
                raise ParseError(f"undeclared variable: {var.value}", var.line, var.col)
            args.append(var.value)
            if self.peek().value == ",":
                self.take(",")
                continue
            break
        self.take(")")
        if self.signature is not None and self.signature.arity(name.value) != len(args):
            raise ParseError(
                f"arity mismatch: {name.value} expects "
                f"{self.signature.arity(name.value)} arguments, got {len(args)}",
                name.line, name.col)
        return Atom(name.value, tuple(args))


def parse_formula(text: str, signature: Optional[Signature] = None) -> FormulaSource:
    """Parse a declaration `name(x...; y...) := body` into a PartitionedFormula."""
    tokens = _tokenize(text)
    toks = tokens

    i = 0

    def take(value=None, kind=None):
        nonlocal i
        tok = toks[i]
        if value is not None and tok.value != value:
            raise ParseError(f"expected {value!r}", tok.line, tok.col)
        if kind is not None and tok.kind != kind:
            raise ParseError(f"expected {kind}", tok.line, tok.col)
        i += 1
        return tok

    name = take(kind="name").value
    take("(")
    object_vars: list[str] = []
    param_vars: list[str] = []
    while toks[i].value != ";":
        tok = take(kind="name")
        m = _OBJ_VAR.match(tok.value)
        if not m or int(m.group(1)) != len(object_vars):
            raise ParseError(
                f"object variables must be x0..x{{r-1}} in order, got {tok.value!r}",
                tok.line, tok.col)
        object_vars.append(tok.value)
        if toks[i].value == ",":
            take(",")
    take(";")
    while toks[i].value != ")":
        tok = take(kind="name")
        m = _PAR_VAR.match(tok.value)
        if not m or int(m.group(1)) != len(param_vars):
            raise ParseError(
                f"parameter variables must be y0..y{{s-1}} in order, got {tok.value!r}",
                tok.line, tok.col)
        param_vars.append(tok.value)
        if toks[i].value == ",":
            take(",")
    take(")")
    take(":=")
    if not object_vars:
        tok = toks[i]
        raise ParseError("at least one object variable is required", tok.line, tok.col)

    body_parser = _FormulaParser(toks[i:], signature, set(object_vars) | set(param_vars))
    ast = body_parser.parse()
    formula = PartitionedFormula(ast, tuple(object_vars), tuple(param_vars))
    return FormulaSource(name, formula)


def serialize_formula(src: FormulaSource) -> str:
    return src.formula.text(src.name)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def _reportable(value: Any) -> Any:
    """Convert a result value into deterministic JSON-ready data.

    Rationals become "num/den" strings; reals are rounded to 12 significant
    digits; sets are sorted; dataclasses become dicts; objects may provide
    their own to_report().
    """
    if hasattr(value, "to_report"):
        return _reportable(value.to_report())
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        return float(f"{value:.12g}")
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, dict):
        return {str(k): _reportable(v) for k, v in sorted(value.items(), key=lambda kv: str(kv[0]))}
    if isinstance(value, (set, frozenset)):
        return [_reportable(v) for v in sorted(value, key=repr)]
    if isinstance(value, (list, tuple)):
        return [_reportable(v) for v in value]
    if isinstance(value, TupleSequence):
        return [list(t) for t in value]
    if isinstance(value, PartitionedFormula):
        return value.text()
    if isinstance(value, Structure):
        return {"universe": value.universe_size,
                "relations": {n: sorted(map(list, value.relations[n]))
                              for n, _ in value.signature.relations}}
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {f.name: _reportable(getattr(value, f.name))
                for f in dataclasses.fields(value)}
    raise FmlabError(f"cannot serialize value of type {type(value).__name__}")


def emit_report(value: Any) -> str:
    """Deterministic JSON text: sorted keys, no floating nondeterminism."""
    return json.dumps(_reportable(value), sort_keys=True, separators=(",", ":"))


def subset_key(w) -> str:
    """Canonical string key for an index subset, e.g. {} / {0} / {0,2}."""
    return "{" + ",".join(map(str, sorted(w))) + "}"
