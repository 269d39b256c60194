"""Finite relational structures, first-order formulas, evaluation, and local types.

Everything downstream (witness searches, indiscernibility, averages) reduces to
the three primitives here: Tarskian evaluation, signed local types, and the set
of types realized by tuples of a structure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .util import EvaluationError, FmlabError, PreconditionError


# ---------------------------------------------------------------------------
# signatures and structures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    """A purely relational similarity type: (name, arity) pairs, names unique."""

    relations: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [n for n, _ in self.relations]
        if len(set(names)) != len(names):
            raise FmlabError("duplicate relation name in signature")
        for name, ar in self.relations:
            if ar < 1:
                raise FmlabError(f"relation {name} has arity {ar}; arities must be >= 1")

    def arity(self, name: str) -> int:
        for n, ar in self.relations:
            if n == name:
                return ar
        raise FmlabError(f"unknown relation: {name}")

    def has(self, name: str) -> bool:
        return any(n == name for n, _ in self.relations)


class Structure:
    """A finite relational model: universe {0..N-1} plus named tuple sets.

    Immutable after construction; all operations on it are pure functions.
    """

    __slots__ = ("signature", "universe_size", "relations", "_bitrows")

    def __init__(self, signature: Signature, universe_size: int,
                 relations: Mapping[str, Iterable[tuple[int, ...]]]):
        if universe_size < 0:
            raise FmlabError("universe size must be a natural number")
        frozen: dict[str, frozenset[tuple[int, ...]]] = {}
        for name, ar in signature.relations:
            tuples = frozenset(tuple(t) for t in relations.get(name, ()))
            for t in tuples:
                if len(t) != ar:
                    raise FmlabError(
                        f"arity mismatch: relation {name} expects {ar}-tuples, got {t}")
                for e in t:
                    if not (0 <= e < universe_size):
                        raise FmlabError(
                            f"element out of range: {e} in relation {name}")
            frozen[name] = tuples
        for name in relations:
            if not signature.has(name):
                raise FmlabError(f"unknown relation: {name}")
        object.__setattr__(self, "signature", signature)
        object.__setattr__(self, "universe_size", universe_size)
        object.__setattr__(self, "relations", MappingProxyType(frozen))
        # bit-matrix fast path for binary relations, row i has bit j iff (i,j) in R
        bitrows: dict[str, tuple[int, ...]] = {}
        for name, ar in signature.relations:
            if ar == 2:
                rows = [0] * universe_size
                for (i, j) in frozen[name]:
                    rows[i] |= 1 << j
                bitrows[name] = tuple(rows)
        object.__setattr__(self, "_bitrows", bitrows)

    def __setattr__(self, *a):
        raise AttributeError("Structure is immutable")

    def __repr__(self):
        rels = ", ".join(f"{n}:{len(self.relations[n])}" for n, _ in self.signature.relations)
        return f"Structure(N={self.universe_size}, {rels})"

    def holds_atom(self, name: str, args: tuple[int, ...]) -> bool:
        rows = self._bitrows.get(name)
        if rows is not None and len(args) == 2:
            return bool((rows[args[0]] >> args[1]) & 1)
        return args in self.relations[name]

    def universe(self) -> range:
        return range(self.universe_size)

    def tuples(self, arity: int, domain: Optional[Iterable[int]] = None) -> Iterator[tuple[int, ...]]:
        """All arity-tuples over the universe (or a sub-universe), lexicographic."""
        dom = range(self.universe_size) if domain is None else sorted(domain)
        return itertools.product(dom, repeat=arity)


# ---------------------------------------------------------------------------
# formula syntax
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Not:
    sub: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"


Formula = Union[Atom, Not, And, Or, Implies, Iff, Exists, Forall]

_BINOPS = {And: "&", Or: "|", Implies: "->", Iff: "<->"}


def free_vars(f: Formula) -> frozenset[str]:
    t = type(f)
    if t is Atom:
        return frozenset(f.args)
    if t is Not:
        return free_vars(f.sub)
    if t in (And, Or, Implies, Iff):
        return free_vars(f.left) | free_vars(f.right)
    if t in (Exists, Forall):
        return free_vars(f.body) - {f.var}
    raise FmlabError(f"ill-formed formula node: {f!r}")


def bound_vars(f: Formula) -> frozenset[str]:
    t = type(f)
    if t is Atom:
        return frozenset()
    if t is Not:
        return bound_vars(f.sub)
    if t in (And, Or, Implies, Iff):
        return bound_vars(f.left) | bound_vars(f.right)
    if t in (Exists, Forall):
        return bound_vars(f.body) | {f.var}
    raise FmlabError(f"ill-formed formula node: {f!r}")


def rename_free(f: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free variables. Targets must not collide with bound variables."""
    captured = bound_vars(f) & set(mapping.values())
    if captured:
        raise FmlabError(f"renaming would capture bound variables: {sorted(captured)}")

    def go(node: Formula, shadowed: frozenset[str]) -> Formula:
        t = type(node)
        if t is Atom:
            return Atom(node.rel, tuple(
                mapping.get(a, a) if a not in shadowed else a for a in node.args))
        if t is Not:
            return Not(go(node.sub, shadowed))
        if t in (And, Or, Implies, Iff):
            return t(go(node.left, shadowed), go(node.right, shadowed))
        if t in (Exists, Forall):
            return t(node.var, go(node.body, shadowed | {node.var}))
        raise FmlabError(f"ill-formed formula node: {node!r}")

    return go(f, frozenset())


def formula_text(f: Formula) -> str:
    """Deterministic fully parenthesized rendering (re-parseable)."""
    t = type(f)
    if t is Atom:
        return f"{f.rel}({','.join(f.args)})"
    if t is Not:
        return f"~{formula_text(f.sub)}"
    if t in (And, Or, Implies, Iff):
        return f"({formula_text(f.left)} {_BINOPS[t]} {formula_text(f.right)})"
    if t is Exists:
        return f"(exists {f.var}. {formula_text(f.body)})"
    if t is Forall:
        return f"(forall {f.var}. {formula_text(f.body)})"
    raise FmlabError(f"ill-formed formula node: {f!r}")


def subformulas(f: Formula) -> Iterator[Formula]:
    """All subformulas of f, including f itself (preorder)."""
    yield f
    t = type(f)
    if t is Not:
        yield from subformulas(f.sub)
    elif t in (And, Or, Implies, Iff):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif t in (Exists, Forall):
        yield from subformulas(f.body)


# ---------------------------------------------------------------------------
# partitioned formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionedFormula:
    """A formula with a designated object block x and parameter block y.

    Either block may be empty: parameter-free formulas (s = 0) are what make
    type comparisons over the empty parameter set informative. Operations that
    need both blocks check for themselves.
    """

    ast: Formula
    object_vars: tuple[str, ...]
    param_vars: tuple[str, ...]

    def __post_init__(self):
        ov, pv = set(self.object_vars), set(self.param_vars)
        if len(ov) != len(self.object_vars) or len(pv) != len(self.param_vars):
            raise FmlabError("repeated variable in a block")
        if ov & pv:
            raise FmlabError("object and parameter blocks must be disjoint")
        extra = free_vars(self.ast) - ov - pv
        if extra:
            raise FmlabError(f"undeclared free variables: {sorted(extra)}")

    @property
    def r(self) -> int:
        return len(self.object_vars)

    @property
    def s(self) -> int:
        return len(self.param_vars)

    @property
    def t(self) -> int:
        return max(self.r, self.s)

    def negated(self) -> "PartitionedFormula":
        if type(self.ast) is Not:
            return PartitionedFormula(self.ast.sub, self.object_vars, self.param_vars)
        return PartitionedFormula(Not(self.ast), self.object_vars, self.param_vars)

    def swapped(self) -> "PartitionedFormula":
        """The block swap psi(y;x) = phi(x;y)."""
        return PartitionedFormula(self.ast, self.param_vars, self.object_vars)

    def text(self, name: str = "phi") -> str:
        head = f"{name}({','.join(self.object_vars)}; {','.join(self.param_vars)})"
        return f"{head} := {formula_text(self.ast)}"

    def sort_key(self) -> tuple:
        return (self.r, self.s, formula_text(self.ast),
                self.object_vars, self.param_vars)

    def holds(self, M: Structure, obj: tuple[int, ...], par: tuple[int, ...] = (),
              domain: Optional[frozenset[int]] = None) -> bool:
        """Instance satisfaction M |= phi[obj; par]."""
        if len(obj) != self.r or len(par) != self.s:
            raise EvaluationError(
                f"arity mismatch: expected blocks {self.r}/{self.s}, "
                f"got {len(obj)}/{len(par)}")
        env = dict(zip(self.object_vars, obj))
        env.update(zip(self.param_vars, par))
        return evaluate(M, self, env, domain=domain)


def atom_formula(rel: str, object_vars: Sequence[str], param_vars: Sequence[str]) -> PartitionedFormula:
    """Convenience builder for an atomic partitioned formula R(x...,y...)."""
    return PartitionedFormula(Atom(rel, tuple(object_vars) + tuple(param_vars)),
                              tuple(object_vars), tuple(param_vars))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def evaluate(M: Structure, phi: Union[PartitionedFormula, Formula],
             assignment: Mapping[str, int],
             domain: Optional[Iterable[int]] = None) -> bool:
    """Tarskian satisfaction by structural recursion.

    `assignment` must cover all free variables. Quantifiers range over the full
    universe, or over `domain` when evaluating inside an induced substructure.
    """
    ast = phi.ast if isinstance(phi, PartitionedFormula) else phi
    dom: Sequence[int]
    if domain is None:
        dom = range(M.universe_size)
    else:
        dom = sorted(domain)
    sig = M.signature

    def ev(node: Formula, env: dict[str, int]) -> bool:
        t = type(node)
        if t is Atom:
            args = []
            for v in node.args:
                if v not in env:
                    raise EvaluationError(f"unbound variable: {v}")
                val = env[v]
                if not (0 <= val < M.universe_size):
                    raise EvaluationError(f"element out of range: {val}")
                args.append(val)
            if sig.arity(node.rel) != len(args):
                raise EvaluationError(f"arity mismatch in atom {node.rel}")
            return M.holds_atom(node.rel, tuple(args))
        if t is Not:
            return not ev(node.sub, env)
        if t is And:
            return ev(node.left, env) and ev(node.right, env)
        if t is Or:
            return ev(node.left, env) or ev(node.right, env)
        if t is Implies:
            return (not ev(node.left, env)) or ev(node.right, env)
        if t is Iff:
            return ev(node.left, env) == ev(node.right, env)
        if t is Exists:
            for e in dom:
                env[node.var] = e
                if ev(node.body, env):
                    del env[node.var]
                    return True
            env.pop(node.var, None)
            return False
        if t is Forall:
            for e in dom:
                env[node.var] = e
                if not ev(node.body, env):
                    del env[node.var]
                    return False
            env.pop(node.var, None)
            return True
        raise EvaluationError(f"ill-formed formula node: {node!r}")

    return ev(ast, dict(assignment))


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PhiType:
    """A signed local type: entries (formula, parameter tuple, sign).

    Canonical equality is syntactic set equality; entries are kept in a
    frozenset and sorted only for display.
    """

    entries: frozenset[tuple[PartitionedFormula, tuple[int, ...], bool]]
    object_arity: int

    def __post_init__(self):
        seen = set()
        for f, b, _ in self.entries:
            if (f, b) in seen:
                raise FmlabError("type contains an instance with both signs")
            seen.add((f, b))

    def domain(self) -> frozenset[tuple[int, ...]]:
        """dom(p): the parameter tuples mentioned by the type."""
        return frozenset(b for _, b, _ in self.entries)

    def sign(self, f: PartitionedFormula, b: tuple[int, ...]) -> Optional[bool]:
        for g, c, s in self.entries:
            if g == f and c == b:
                return s
        return None

    def restrict(self, params: Iterable[tuple[int, ...]]) -> "PhiType":
        """p|A': keep only entries whose parameter tuple lies in the given set."""
        allowed = frozenset(tuple(b) for b in params)
        return PhiType(frozenset((f, b, s) for f, b, s in self.entries if b in allowed),
                       self.object_arity)

    def positives(self) -> frozenset[tuple[PartitionedFormula, tuple[int, ...]]]:
        return frozenset((f, b) for f, b, s in self.entries if s)

    def sorted_entries(self) -> list[tuple[PartitionedFormula, tuple[int, ...], bool]]:
        return sorted(self.entries, key=lambda e: (e[0].sort_key(), e[1], e[2]))

    def is_complete_over(self, delta: Sequence[PartitionedFormula],
                         A: Iterable[tuple[int, ...]]) -> bool:
        """Exactly one entry per applicable (formula, parameter) pair."""
        A = list(A)
        for f in delta:
            if f.r != self.object_arity:
                continue
            pars = [()] if f.s == 0 else [b for b in A if len(b) == f.s]
            for b in pars:
                if self.sign(f, tuple(b)) is None:
                    return False
        return True


def tp(delta: Sequence[PartitionedFormula], a: tuple[int, ...],
       A: Iterable[tuple[int, ...]], M: Structure,
       domain: Optional[frozenset[int]] = None) -> PhiType:
    """The complete signed type of tuple `a` over parameter set `A`.

    Formulas whose object arity differs from len(a) contribute nothing; a
    parameter-free formula contributes one entry via the empty parameter
    tuple, which is what makes types over the empty set informative.
    """
    a = tuple(a)
    A = [tuple(b) for b in A]
    entries = []
    for f in delta:
        if f.r != len(a):
            continue
        if f.s == 0:
            pars = [()]
        else:
            pars = sorted(b for b in A if len(b) == f.s)
        for b in pars:
            entries.append((f, b, f.holds(M, a, b, domain=domain)))
    return PhiType(frozenset(entries), len(a))


def realized_types(delta: Sequence[PartitionedFormula], A: Iterable[tuple[int, ...]],
                   M: Structure, object_arity: int,
                   domain: Optional[frozenset[int]] = None) -> frozenset[PhiType]:
    """S_delta(A, M): the distinct types over A realized by tuples of M.

    Only realized types are collected; there is no closure under consistency.
    """
    if object_arity < 1:
        raise PreconditionError("object arity must be >= 1")
    A = [tuple(b) for b in A]
    out = set()
    for a in M.tuples(object_arity, domain=domain):
        out.add(tp(delta, a, A, M, domain=domain))
    return frozenset(out)


def closed_under_negation(delta: Sequence[PartitionedFormula]) -> list[PartitionedFormula]:
    """Normalize a formula set so each member appears with its negation."""
    out: list[PartitionedFormula] = []
    seen = set()
    for f in delta:
        for g in (f, f.negated()):
            key = (formula_text(g.ast), g.object_vars, g.param_vars)
            if key not in seen:
                seen.add(key)
                out.append(g)
    return out


# ---------------------------------------------------------------------------
# tuple sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TupleSequence:
    """An ordered list of equal-length tuples."""

    tuples: tuple[tuple[int, ...], ...]
    tuple_arity: int

    def __post_init__(self):
        for t in self.tuples:
            if len(t) != self.tuple_arity:
                raise FmlabError("sequence entries must all have the declared arity")

    @staticmethod
    def of(items: Iterable[Sequence[int]], arity: Optional[int] = None) -> "TupleSequence":
        ts = tuple(tuple(t) for t in items)
        if arity is None:
            if not ts:
                raise FmlabError("cannot infer arity of an empty sequence")
            arity = len(ts[0])
        return TupleSequence(ts, arity)

    def __len__(self):
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def __getitem__(self, i):
        return self.tuples[i]

    def concat(self, indices: Sequence[int]) -> tuple[int, ...]:
        """Flatten the selected entries into one tuple, in the given order."""
        out: list[int] = []
        for i in indices:
            out.extend(self.tuples[i])
        return tuple(out)
