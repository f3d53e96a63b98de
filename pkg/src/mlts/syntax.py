"""Core term and type representation.

Terms use a locally nameless encoding: occurrences of variables bound by a
program binder (fun, let, fix, backslash, new, nab, pattern variables) are de
Bruijn indices, while nominal constants that have been generated at run time
are globally unique atoms.  Alpha-equivalence is then plain structural
equality (binder name hints are excluded from comparison), and the escape
check performed when a `new` scope is popped is an atom occurrence check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union


class MltsError(Exception):
    """Base class for all interpreter errors."""


class NotOpenTypeError(MltsError):
    """A nominal was requested at a type that cannot contain nominals."""


# ---------------------------------------------------------------------------
# Types


class Type:
    __slots__ = ()


@dataclass(frozen=True)
class TyInt(Type):
    def __str__(self):
        return "int"


@dataclass(frozen=True)
class TyBool(Type):
    def __str__(self):
        return "bool"


@dataclass(frozen=True)
class TyBase(Type):
    """A declared datatype; `is_open` datatypes may contain nominals."""

    name: str
    is_open: bool = True

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class TyFn(Type):
    """The function arrow `->`."""

    arg: Type
    res: Type

    def __str__(self):
        return f"{_ty_atom(self.arg)} -> {self.res}"


@dataclass(frozen=True)
class TyAbs(Type):
    """The abstraction arrow `=>`; `arg` must be an open type."""

    arg: Type
    res: Type

    def __str__(self):
        return f"{_ty_atom(self.arg)} => {self.res}"


@dataclass(frozen=True)
class TyProd(Type):
    fst: Type
    snd: Type

    def __str__(self):
        return f"{_ty_atom(self.fst)} * {_ty_atom(self.snd)}"


@dataclass(frozen=True)
class TyList(Type):
    elem: Type

    def __str__(self):
        return f"{_ty_atom(self.elem)} list"


@dataclass(frozen=True)
class TyVar(Type):
    id: int

    def __str__(self):
        return f"'t{self.id}"


def _ty_atom(ty: Type) -> str:
    if isinstance(ty, (TyFn, TyAbs, TyProd)):
        return f"({ty})"
    return str(ty)


def is_open_type(ty: Type) -> bool:
    return isinstance(ty, TyBase) and ty.is_open


# A placeholder open type used when evaluating terms that were never type
# checked (library-level tests); checked programs carry real annotations.
ANY_OPEN = TyBase("_nominal", is_open=True)


# ---------------------------------------------------------------------------
# Atoms (run-time nominal constants)


@dataclass(frozen=True)
class Atom:
    id: int
    ty: Type = field(compare=False)
    hint: str = field(default="X", compare=False, repr=False)

    def __repr__(self):
        return f"{self.hint}#{self.id}"


_atom_ids = itertools.count(1)
_pvar_ids = itertools.count(1)


def fresh_atom(ty: Type, hint: str = "X") -> Atom:
    """Mint a nominal of the given open type with a session-unique id."""
    if not is_open_type(ty):
        raise NotOpenTypeError(f"type {ty} cannot contain nominals")
    return Atom(next(_atom_ids), ty, hint)


def fresh_pvar_id() -> int:
    return next(_pvar_ids)


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class Loc:
    line: int
    col: int

    def __repr__(self):
        return f"{self.line}:{self.col}"


@dataclass(frozen=True)
class Term:
    loc: Optional[Loc] = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass(frozen=True)
class Binder:
    """A scope with de Bruijn index 0 referring to the binder itself."""

    scope: Term
    hint: str = field(default="x", compare=False)


@dataclass(frozen=True)
class Bound(Term):
    index: int


@dataclass(frozen=True)
class Nom(Term):
    atom: Atom


@dataclass(frozen=True)
class Lam(Term):
    binder: Binder


@dataclass(frozen=True)
class New(Term):
    """`new X in M`: scope of a freshly generated nominal."""

    binder: Binder
    ty: Optional[Type] = field(default=None, compare=False)


@dataclass(frozen=True)
class Back(Term):
    """Backslash abstraction `X\\ M` of a nominal over its scope."""

    binder: Binder
    ty: Optional[Type] = field(default=None, compare=False)


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class At(Term):
    """`t @ u1 ... un`: elimination of backslash abstractions (left-assoc)."""

    head: Term
    args: tuple[Term, ...]

    def __post_init__(self):
        assert self.args, "@ requires at least one argument"


@dataclass(frozen=True)
class Let(Term):
    bound: Term
    binder: Binder


@dataclass(frozen=True)
class Fix(Term):
    binder: Binder


@dataclass(frozen=True)
class Variant(Term):
    ctor: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Special(Term):
    """Run-time primitive application (arithmetic, comparisons, equality)."""

    op: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True)
class Pair(Term):
    fst: Term
    snd: Term


@dataclass(frozen=True)
class TopRef(Term):
    """Reference to a top-level binding, resolved before evaluation."""

    name: str


@dataclass(frozen=True)
class PVar(Term):
    """A pattern variable opened during matching or clause analysis."""

    id: int
    hint: str = field(default="x", compare=False)


@dataclass(frozen=True)
class Wild(Term):
    """The `_` pattern: matches anything, binds nothing."""


# Match clauses.  A clause is a quantifier prefix over a pattern/right-hand
# side pair; `CAll` binds a pattern variable, `CNab` binds a clause-local
# nominal.  Prefix binders count as de Bruijn levels for the terms inside.


@dataclass(frozen=True)
class Clause:
    loc: Optional[Loc] = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass(frozen=True)
class CAll(Clause):
    body: Clause
    hint: str = field(default="x", compare=False)


@dataclass(frozen=True)
class CNab(Clause):
    body: Clause
    hint: str = field(default="X", compare=False)
    ty: Optional[Type] = field(default=None, compare=False)


@dataclass(frozen=True)
class CRule(Clause):
    pattern: Term
    rhs: Term


@dataclass(frozen=True)
class Match(Term):
    scrutinee: Term
    clauses: tuple[Clause, ...]


Node = Union[Term, Clause]

TRUE = Variant("true", ())
FALSE = Variant("false", ())
NIL = Variant("[]", ())


def cons(head: Term, tail: Term) -> Term:
    return Variant("::", (head, tail))


def mklist(items) -> Term:
    out: Term = NIL
    for item in reversed(list(items)):
        out = cons(item, out)
    return out


def at(head: Term, *args: Term) -> Term:
    """Build `head @ args`, flattening the left-associated spine."""
    if isinstance(head, At):
        return At(head.head, head.args + tuple(args))
    return At(head, tuple(args))


# ---------------------------------------------------------------------------
# Structural traversal


def _rebuild(node: Node, depth: int, leaf) -> Node:
    """Rebuild `node`, applying `leaf(n, depth)` to Bound/Nom/PVar leaves.

    `leaf` returns a replacement term or None to keep the leaf.  Returns the
    original object when nothing changed underneath.
    """
    match node:
        case Bound() | Nom() | PVar():
            out = leaf(node, depth)
            return node if out is None else out
        case IntLit() | TopRef() | Wild():
            return node
        case Lam(b):
            s = _rebuild(b.scope, depth + 1, leaf)
            return node if s is b.scope else Lam(Binder(s, b.hint), loc=node.loc)
        case New(b, ty):
            s = _rebuild(b.scope, depth + 1, leaf)
            return node if s is b.scope else New(Binder(s, b.hint), ty, loc=node.loc)
        case Back(b, ty):
            s = _rebuild(b.scope, depth + 1, leaf)
            return node if s is b.scope else Back(Binder(s, b.hint), ty, loc=node.loc)
        case Fix(b):
            s = _rebuild(b.scope, depth + 1, leaf)
            return node if s is b.scope else Fix(Binder(s, b.hint), loc=node.loc)
        case Let(bound, b):
            nb = _rebuild(bound, depth, leaf)
            s = _rebuild(b.scope, depth + 1, leaf)
            if nb is bound and s is b.scope:
                return node
            return Let(nb, Binder(s, b.hint), loc=node.loc)
        case App(fn, arg):
            nf, na = _rebuild(fn, depth, leaf), _rebuild(arg, depth, leaf)
            return node if nf is fn and na is arg else App(nf, na, loc=node.loc)
        case At(head, args):
            nh = _rebuild(head, depth, leaf)
            nargs = tuple(_rebuild(a, depth, leaf) for a in args)
            if nh is head and all(x is y for x, y in zip(nargs, args)):
                return node
            return At(nh, nargs, loc=node.loc)
        case Pair(f, s):
            nf, ns = _rebuild(f, depth, leaf), _rebuild(s, depth, leaf)
            return node if nf is f and ns is s else Pair(nf, ns, loc=node.loc)
        case Variant(c, args):
            nargs = tuple(_rebuild(a, depth, leaf) for a in args)
            if all(x is y for x, y in zip(nargs, args)):
                return node
            return Variant(c, nargs, loc=node.loc)
        case Special(op, args):
            nargs = tuple(_rebuild(a, depth, leaf) for a in args)
            if all(x is y for x, y in zip(nargs, args)):
                return node
            return Special(op, nargs, loc=node.loc)
        case Match(scr, clauses):
            ns = _rebuild(scr, depth, leaf)
            ncs = tuple(_rebuild(c, depth, leaf) for c in clauses)
            if ns is scr and all(x is y for x, y in zip(ncs, clauses)):
                return node
            return Match(ns, ncs, loc=node.loc)
        case CAll(body, hint):
            nb = _rebuild(body, depth + 1, leaf)
            return node if nb is body else CAll(nb, hint, loc=node.loc)
        case CNab(body, hint, ty):
            nb = _rebuild(body, depth + 1, leaf)
            return node if nb is body else CNab(nb, hint, ty, loc=node.loc)
        case CRule(pat, rhs):
            np_, nr = _rebuild(pat, depth, leaf), _rebuild(rhs, depth, leaf)
            return node if np_ is pat and nr is rhs else CRule(np_, nr, loc=node.loc)
    raise TypeError(f"unknown node {node!r}")


def walk(node: Node) -> Iterator[Node]:
    """Yield every sub-node, including clause structure, binders opened as-is."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        match n:
            case Lam(b) | New(b, _) | Back(b, _) | Fix(b):
                stack.append(b.scope)
            case Let(bound, b):
                stack += [bound, b.scope]
            case App(fn, arg):
                stack += [fn, arg]
            case At(head, args):
                stack.append(head)
                stack += list(args)
            case Pair(f, s):
                stack += [f, s]
            case Variant(_, args) | Special(_, args):
                stack += list(args)
            case Match(scr, clauses):
                stack.append(scr)
                stack += list(clauses)
            case CAll(body) | CNab(body):
                stack.append(body)
            case CRule(pat, rhs):
                stack += [pat, rhs]
            case _:
                pass


# ---------------------------------------------------------------------------
# Substitution and binding

# Every substitution below inserts locally closed terms only, so no index
# shifting of the replacement is ever required.


def instantiate(binder: Binder, repl: Term) -> Term:
    """Replace index 0 of the binder with `repl` (full beta when `repl` is
    arbitrary, binder opening when it is a nominal)."""

    def leaf(n, depth):
        if isinstance(n, Bound):
            if n.index == depth:
                return repl
            if n.index > depth:
                return Bound(n.index - 1)
        return None

    return _rebuild(binder.scope, 0, leaf)


def subst_general(binder: Binder, term: Term) -> Term:
    """Capture-avoiding substitution of `term` for the binder's variable."""
    return instantiate(binder, term)


def open_binder(binder: Binder, atom: Atom) -> Term:
    """Move the binder to the program level by replacing it with `atom`."""
    return instantiate(binder, Nom(atom))


def close_binder(atom: Atom, term: Term, hint: Optional[str] = None) -> Binder:
    """Abstract every occurrence of `atom` out of `term`."""

    def leaf(n, depth):
        if isinstance(n, Nom) and n.atom == atom:
            return Bound(depth)
        if isinstance(n, Bound) and n.index >= depth:
            return Bound(n.index + 1)
        return None

    return Binder(_rebuild(term, 0, leaf), hint or atom.hint)


def open_clause(clause: Clause, repl: Term) -> Clause:
    """Instantiate the outermost quantifier of a clause (CAll or CNab)."""
    assert isinstance(clause, (CAll, CNab))

    def leaf(n, depth):
        if isinstance(n, Bound):
            if n.index == depth:
                return repl
            if n.index > depth:
                return Bound(n.index - 1)
        return None

    return _rebuild(clause.body, 0, leaf)


def close_many(atoms: list[Atom], term: Term) -> Term:
    """Scope of the abstraction binding `atoms` left-to-right over `term`;
    the last atom becomes index 0."""
    positions = {a: i for i, a in enumerate(atoms)}
    m = len(atoms)

    def leaf(n, depth):
        if isinstance(n, Nom) and n.atom in positions:
            return Bound(depth + (m - 1 - positions[n.atom]))
        if isinstance(n, Bound) and n.index >= depth:
            return Bound(n.index + m)
        return None

    return _rebuild(term, 0, leaf)


def open_many(scope: Term, atoms: list[Atom]) -> Term:
    """Inverse of `close_many`: plug `atoms` into the leading indices."""
    m = len(atoms)

    def leaf(n, depth):
        if isinstance(n, Bound):
            if depth <= n.index < depth + m:
                return Nom(atoms[m - 1 - (n.index - depth)])
            if n.index >= depth + m:
                return Bound(n.index - m)
        return None

    return _rebuild(scope, 0, leaf)


def close_pvars(ids: list[int], node: Node) -> Node:
    """Turn the listed pattern-variable placeholders into de Bruijn indices
    for a prefix of binders, the last id becoming index 0.  Existing free
    indices are shifted past the new binders."""
    positions = {v: i for i, v in enumerate(ids)}
    m = len(ids)

    def leaf(n, depth):
        if isinstance(n, PVar) and n.id in positions:
            return Bound(depth + (m - 1 - positions[n.id]))
        if isinstance(n, Bound) and n.index >= depth:
            return Bound(n.index + m)
        return None

    return _rebuild(node, 0, leaf)


def subst_pvars(node: Node, solution: dict[int, Term]) -> Node:
    def leaf(n, depth):
        if isinstance(n, PVar) and n.id in solution:
            return solution[n.id]
        return None

    return _rebuild(node, 0, leaf)


def rename_atoms(node: Node, mapping: dict[Atom, Atom]) -> Node:
    def leaf(n, depth):
        if isinstance(n, Nom) and n.atom in mapping:
            return Nom(mapping[n.atom])
        return None

    return _rebuild(node, 0, leaf)


# ---------------------------------------------------------------------------
# Queries


def occurs_atom(atom: Atom, node: Node) -> bool:
    return any(isinstance(n, Nom) and n.atom == atom for n in walk(node))


def atoms_of(node: Node) -> set[Atom]:
    return {n.atom for n in walk(node) if isinstance(n, Nom)}


def pvars_of(node: Node) -> set[int]:
    return {n.id for n in walk(node) if isinstance(n, PVar)}


def node_count(term: Term) -> int:
    return sum(1 for n in walk(term) if isinstance(n, Term))


def locally_closed(term: Term) -> bool:
    def check(node: Node, depth: int) -> bool:
        match node:
            case Bound(i):
                return i < depth
            case Lam(b) | New(b, _) | Back(b, _) | Fix(b):
                return check(b.scope, depth + 1)
            case Let(bound, b):
                return check(bound, depth) and check(b.scope, depth + 1)
            case CAll(body) | CNab(body):
                return check(body, depth + 1)
            case CRule(pat, rhs):
                return check(pat, depth) and check(rhs, depth)
            case Match(scr, clauses):
                return check(scr, depth) and all(check(c, depth) for c in clauses)
            case App(f, a):
                return check(f, depth) and check(a, depth)
            case At(h, args):
                return check(h, depth) and all(check(a, depth) for a in args)
            case Pair(f, s):
                return check(f, depth) and check(s, depth)
            case Variant(_, args) | Special(_, args):
                return all(check(a, depth) for a in args)
            case _:
                return True

    return check(term, 0)


# ---------------------------------------------------------------------------
# Values

# The value grammar: nominals, lam abstractions (bodies unevaluated),
# backslash abstractions whose scope is a value, variants/pairs/ints of
# values.  Indices under backslash binders stand for nominals and count as
# values.


def is_value(term: Term) -> bool:
    match term:
        case Nom() | IntLit() | Lam() | Bound():
            return True
        case Back(b, _):
            return is_value(b.scope)
        case Variant(_, args):
            return all(is_value(a) for a in args)
        case Pair(f, s):
            return is_value(f) and is_value(s)
        case _:
            return False


# ---------------------------------------------------------------------------
# Alpha/eta equivalence


def _unshift(term: Term) -> Term:
    # Drop one binder level; index 0 must not occur.
    def leaf(n, depth):
        if isinstance(n, Bound) and n.index > depth:
            return Bound(n.index - 1)
        return None

    return _rebuild(term, 0, leaf)


def _index_free(term: Term, index: int) -> bool:
    def go(node: Node, depth: int) -> bool:
        match node:
            case Bound(i):
                return i == depth
            case Lam(b) | New(b, _) | Back(b, _) | Fix(b):
                return go(b.scope, depth + 1)
            case Let(bound, b):
                return go(bound, depth) or go(b.scope, depth + 1)
            case CAll(body) | CNab(body):
                return go(body, depth + 1)
            case CRule(pat, rhs):
                return go(pat, depth) or go(rhs, depth)
            case Match(scr, clauses):
                return go(scr, depth) or any(go(c, depth) for c in clauses)
            case App(f, a):
                return go(f, depth) or go(a, depth)
            case At(h, args):
                return go(h, depth) or any(go(a, depth) for a in args)
            case Pair(f, s):
                return go(f, depth) or go(s, depth)
            case Variant(_, args) | Special(_, args):
                return any(go(a, depth) for a in args)
            case _:
                return False

    return go(term, index)


def eta_normal(node: Node) -> Node:
    """Normalize @-spines to flat left-associated form and contract
    eta-redexes of backslash abstractions: `X\\ (t @ ... X)` becomes
    `t @ ...` when X does not occur in t or the earlier arguments."""

    match node:
        case Back(b, ty):
            scope = eta_normal(b.scope)
            if isinstance(scope, At) and scope.args[-1] == Bound(0):
                rest = At(scope.head, scope.args[:-1]) if len(scope.args) > 1 else scope.head
                if not _index_free(rest, 0):
                    return eta_normal(_unshift(rest))
            if scope is b.scope:
                return node
            return Back(Binder(scope, b.hint), ty, loc=node.loc)
        case At(head, args):
            nh = eta_normal(head)
            nargs = tuple(eta_normal(a) for a in args)
            if isinstance(nh, At):
                return At(nh.head, nh.args + nargs, loc=node.loc)
            if nh is head and all(x is y for x, y in zip(nargs, args)):
                return node
            return At(nh, nargs, loc=node.loc)
        case Lam(b):
            s = eta_normal(b.scope)
            return node if s is b.scope else Lam(Binder(s, b.hint), loc=node.loc)
        case New(b, ty):
            s = eta_normal(b.scope)
            return node if s is b.scope else New(Binder(s, b.hint), ty, loc=node.loc)
        case Fix(b):
            s = eta_normal(b.scope)
            return node if s is b.scope else Fix(Binder(s, b.hint), loc=node.loc)
        case Let(bound, b):
            nb, s = eta_normal(bound), eta_normal(b.scope)
            if nb is bound and s is b.scope:
                return node
            return Let(nb, Binder(s, b.hint), loc=node.loc)
        case App(f, a):
            nf, na = eta_normal(f), eta_normal(a)
            return node if nf is f and na is a else App(nf, na, loc=node.loc)
        case Pair(f, s):
            nf, ns = eta_normal(f), eta_normal(s)
            return node if nf is f and ns is s else Pair(nf, ns, loc=node.loc)
        case Variant(c, args):
            nargs = tuple(eta_normal(a) for a in args)
            if all(x is y for x, y in zip(nargs, args)):
                return node
            return Variant(c, nargs, loc=node.loc)
        case Special(op, args):
            nargs = tuple(eta_normal(a) for a in args)
            if all(x is y for x, y in zip(nargs, args)):
                return node
            return Special(op, nargs, loc=node.loc)
        case Match(scr, clauses):
            ns = eta_normal(scr)
            ncs = tuple(eta_normal(c) for c in clauses)
            if ns is scr and all(x is y for x, y in zip(ncs, clauses)):
                return node
            return Match(ns, ncs, loc=node.loc)
        case CAll(body, hint):
            nb = eta_normal(body)
            return node if nb is body else CAll(nb, hint, loc=node.loc)
        case CNab(body, hint, ty):
            nb = eta_normal(body)
            return node if nb is body else CNab(nb, hint, ty, loc=node.loc)
        case CRule(pat, rhs):
            np_, nr = eta_normal(pat), eta_normal(rhs)
            return node if np_ is pat and nr is rhs else CRule(np_, nr, loc=node.loc)
        case _:
            return node


def alpha_eq(t1: Node, t2: Node) -> bool:
    """Equality modulo alpha renaming, eta at abstraction type, and
    association of @-spines.  Binder hints never participate."""
    if t1 == t2:
        return True
    return eta_normal(t1) == eta_normal(t2)
