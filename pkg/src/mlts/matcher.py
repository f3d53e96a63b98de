"""Rigid paths and pattern matching.

Matching a value against a clause resolves each nab-bound nominal by reading
the value at one of the nominal's rigid paths (occurrences not inside an `@`
argument), then structurally matches the instantiated pattern.  The freshness
side conditions make the outcome unique: the nominal read from the value must
not already occur in the clause, and after the structural match it must not
occur in any value bound to a pattern variable it does not scope over.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from mlts.syntax import (
    ANY_OPEN, At, Atom, Back, Bound, CAll, CNab, CRule, Clause, IntLit,
    MltsError, Nom, PVar, Pair, Term, Variant, Wild, atoms_of, close_binder,
    fresh_atom, fresh_pvar_id, occurs_atom, open_binder, open_clause,
    subst_pvars,
)


class MatcherInvariantError(MltsError):
    """A clause violating the static restrictions reached the matcher."""


# ---------------------------------------------------------------------------
# Rigid paths.  A path is a tuple of steps, outermost first; the empty tuple
# is the hole selecting the whole value.


@dataclass(frozen=True)
class VariantAt:
    ctor: str
    index: int  # 1-based


@dataclass(frozen=True)
class PairAt:
    index: int  # 1 or 2


@dataclass(frozen=True)
class BackUnder:
    pass


@dataclass(frozen=True)
class AtStep:
    """Descend into the head of an `@` application; `arg` names the argument
    nominal, either directly or as a de Bruijn distance into the backslash
    binders opened by earlier BackUnder steps."""

    arg: Union[Atom, int]


Path = tuple


def rigid_paths_of(clause: CNab) -> list[Path]:
    """All rigid paths of the clause's outermost nab-bound nominal in its
    pattern, in leftmost-outermost traversal order."""
    paths: list[Path] = []

    def clause_walk(c: Clause, target: int):
        match c:
            case CAll(body) | CNab(body):
                clause_walk(body, target + 1)
            case CRule(pattern, _):
                pattern_walk(pattern, target, (), 0)

    def pattern_walk(p: Term, target: int, path: Path, backs: int):
        match p:
            case Bound(i) if i == target:
                paths.append(path)
            case Variant(c, args):
                for i, a in enumerate(args):
                    pattern_walk(a, target, path + (VariantAt(c, i + 1),), backs)
            case Pair(f, s):
                pattern_walk(f, target, path + (PairAt(1),), backs)
                pattern_walk(s, target, path + (PairAt(2),), backs)
            case Back(b, _):
                pattern_walk(b.scope, target + 1,
                             path + (BackUnder(),), backs + 1)
            case At(head, args):
                steps = []
                for arg in reversed(args):
                    match arg:
                        case Nom(a):
                            steps.append(AtStep(a))
                        case Bound(i) if i < backs:
                            # bound by a backslash crossed on this path;
                            # i is its distance among the opened binders
                            steps.append(AtStep(i))
                        case _:
                            return  # head unreachable through this @
                pattern_walk(head, target, path + tuple(steps), backs)
            case _:
                pass

    clause_walk(clause.body, 0)
    return paths


def value_at_path(value: Term, path: Path) -> Optional[Term]:
    """The sub-value at a rigid path, or None when the path does not fit.
    Backslash binders opened along the way must not leak into the result."""
    cur = value
    opened: list[Atom] = []
    for step in path:
        match step:
            case VariantAt(ctor, i):
                if not (isinstance(cur, Variant) and cur.ctor == ctor
                        and len(cur.args) >= i):
                    return None
                cur = cur.args[i - 1]
            case PairAt(i):
                if not isinstance(cur, Pair):
                    return None
                cur = cur.fst if i == 1 else cur.snd
            case BackUnder():
                if not isinstance(cur, Back):
                    return None
                atom = fresh_atom(cur.ty.arg if cur.ty else ANY_OPEN,
                                  cur.binder.hint)
                opened.append(atom)
                cur = open_binder(cur.binder, atom)
            case AtStep(arg):
                atom = arg if isinstance(arg, Atom) else opened[-1 - arg]
                cur = Back(close_binder(atom, cur))
    if any(occurs_atom(a, cur) for a in opened):
        return None
    return cur


# ---------------------------------------------------------------------------
# Structural matching of a value against a pattern


def match_pattern(value: Term, pattern: Term) -> Optional[dict[int, Term]]:
    """The unique substitution from pattern variables to sub-values, or None.

    Backslash patterns open both sides with one fresh nominal, which may not
    escape into the values bound to pattern variables underneath; an `@`
    pattern matches by abstracting its argument nominals out of the value.
    """
    match pattern:
        case PVar(x):
            return {x: value}
        case Wild():
            return {}
        case Nom(a):
            return {} if value == Nom(a) else None
        case IntLit(n):
            return {} if value == IntLit(n) else None
        case Variant(ctor, pargs):
            if not (isinstance(value, Variant) and value.ctor == ctor
                    and len(value.args) == len(pargs)):
                return None
            return _merge_all(value.args, pargs)
        case Pair(pf, ps):
            if not isinstance(value, Pair):
                return None
            return _merge_all((value.fst, value.snd), (pf, ps))
        case Back(pb, _):
            if not isinstance(value, Back):
                return None
            atom = fresh_atom(value.ty.arg if value.ty else ANY_OPEN,
                              pb.hint)
            sub = match_pattern(open_binder(value.binder, atom),
                                open_binder(pb, atom))
            if sub is None:
                return None
            if any(occurs_atom(atom, v) for v in sub.values()):
                return None
            return sub
        case At(head, args):
            cur = value
            for arg in reversed(args):
                if not isinstance(arg, Nom):
                    return None
                cur = Back(close_binder(arg.atom, cur))
            return match_pattern(cur, head)
    return None


def _merge_all(values, patterns) -> Optional[dict[int, Term]]:
    out: dict[int, Term] = {}
    for v, p in zip(values, patterns):
        sub = match_pattern(v, p)
        if sub is None:
            return None
        overlap = out.keys() & sub.keys()
        if overlap:
            raise MatcherInvariantError(
                f"pattern variable bound twice: {sorted(overlap)}")
        out.update(sub)
    return out


# ---------------------------------------------------------------------------
# Matching a value against a whole clause


def match_clause(value: Term, clause: Clause) -> Optional[Term]:
    """Resolve the clause's quantifier prefix against the value and return
    the instantiated right-hand side, or None if the clause does not match."""
    pvars: list[int] = []
    guards: list[tuple[Atom, frozenset[int]]] = []
    c = clause
    while not isinstance(c, CRule):
        if isinstance(c, CAll):
            pv = PVar(fresh_pvar_id(), c.hint)
            pvars.append(pv.id)
            c = open_clause(c, pv)
        else:
            assert isinstance(c, CNab)
            clause_atoms = atoms_of(c.body)
            chosen: Optional[Atom] = None
            for path in rigid_paths_of(c):
                got = value_at_path(value, path)
                if isinstance(got, Nom) and got.atom not in clause_atoms:
                    chosen = got.atom
                    break
            if chosen is None:
                return None
            guards.append((chosen, frozenset(pvars)))
            c = open_clause(c, Nom(chosen))
    sub = match_pattern(value, c.pattern)
    if sub is None:
        return None
    for atom, visible in guards:
        for x in visible:
            if x in sub and occurs_atom(atom, sub[x]):
                return None
    missing = [x for x in pvars if x not in sub]
    if missing:
        raise MatcherInvariantError(
            "pattern variables with no occurrence in the pattern: "
            f"{missing} (rejected by the static checks)")
    return subst_pvars(c.rhs, sub)
