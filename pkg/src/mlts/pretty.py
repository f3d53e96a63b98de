"""Concrete-syntax printer.

Printed closed terms re-parse to alpha-equal terms.  Binder display names are
synthesized from hints; names of bound variables carry no meaning, so the
printer only has to avoid collisions within a scope.
"""

from __future__ import annotations

from mlts.syntax import (
    App, At, Back, Bound, CAll, CNab, CRule, Clause, Fix, IntLit, Lam, Let,
    Match, New, Nom, PVar, Pair, Special, Term, TopRef, Variant, Wild,
)

# precedence levels, loosest to tightest
LOW, PAIR, CMP, CONS, ADD, MUL, AT, APP, ATOM = 0, 1, 2, 3, 4, 5, 6, 7, 8

_INFIX = {
    "add": ("+", ADD), "sub": ("-", ADD),
    "mul": ("*", MUL), "div": ("/", MUL),
    "eq": ("=", CMP), "ne": ("<>", CMP),
    "lt": ("<", CMP), "le": ("<=", CMP), "gt": (">", CMP), "ge": (">=", CMP),
}


def _name_for(hint: str, used: frozenset[str]) -> str:
    if hint and hint != "_" and hint not in used:
        return hint
    base = hint if hint and hint != "_" else "x"
    k = 1
    while f"{base}{k}" in used:
        k += 1
    return f"{base}{k}"


def _wrap(s: str, level: int, ctx: int) -> str:
    return f"({s})" if level < ctx else s


def pretty(term: Term, ctx: int = LOW) -> str:
    return _pp(term, (), frozenset(), ctx)


def pretty_clause(clause: Clause) -> str:
    return _pp_clause(clause, (), frozenset())


def _pp(t: Term, env: tuple[str, ...], used: frozenset[str], ctx: int) -> str:
    match t:
        case Bound(i):
            return env[i] if i < len(env) else f"?{i}"
        case Nom(a):
            return f"{a.hint}#{a.id}"
        case PVar(i, hint):
            return f"?{hint}{i}"
        case Wild():
            return "_"
        case TopRef(name):
            return name
        case IntLit(n):
            return str(n) if n >= 0 or ctx == LOW else f"({n})"
        case Variant("true", ()):
            return "true"
        case Variant("false", ()):
            return "false"
        case Variant("[]", ()):
            return "[]"
        case Variant("::", (h, tl)):
            items, rest = [h], tl
            while isinstance(rest, Variant) and rest.ctor == "::":
                items.append(rest.args[0])
                rest = rest.args[1]
            if isinstance(rest, Variant) and rest.ctor == "[]":
                inner = "; ".join(_pp(x, env, used, PAIR) for x in items)
                return f"[{inner}]"
            s = f"{_pp(h, env, used, ADD)} :: {_pp(tl, env, used, CONS)}"
            return _wrap(s, CONS, ctx)
        case Variant(c, ()):
            return c
        case Variant(c, (arg,)):
            return f"{c}({_pp(arg, env, used, LOW)})"
        case Variant(c, args):
            inner = ", ".join(_pp(a, env, used, PAIR) for a in args)
            return f"{c}({inner})"
        case Pair(f, s):
            return f"({_pp(f, env, used, PAIR)}, {_pp(s, env, used, PAIR)})"
        case App(f, a):
            s = f"{_pp(f, env, used, APP)} {_pp(a, env, used, ATOM)}"
            return _wrap(s, APP, ctx)
        case At(head, args):
            parts = " ".join(_pp(a, env, used, ATOM) for a in args)
            s = f"{_pp(head, env, used, APP)} @ {parts}"
            return _wrap(s, AT, ctx)
        case Special(op, (l, r)) if op in _INFIX:
            sym, lvl = _INFIX[op]
            left = _pp(l, env, used, lvl)
            right = _pp(r, env, used, lvl + 1)
            return _wrap(f"{left} {sym} {right}", lvl, ctx)
        case Special(op, args):
            inner = " ".join(_pp(a, env, used, ATOM) for a in args)
            return _wrap(f"%{op} {inner}", APP, ctx)
        case Lam(b):
            x = _name_for(b.hint, used)
            s = f"fun {x} -> {_pp(b.scope, (x,) + env, used | {x}, LOW)}"
            return _wrap(s, LOW, ctx)
        case Fix(b):
            x = _name_for(b.hint, used)
            s = f"fix {x} -> {_pp(b.scope, (x,) + env, used | {x}, LOW)}"
            return _wrap(s, LOW, ctx)
        case New(b, _):
            x = _name_for(b.hint, used)
            s = f"new {x} in {_pp(b.scope, (x,) + env, used | {x}, LOW)}"
            return _wrap(s, LOW, ctx)
        case Back(b, _):
            x = _name_for(b.hint, used)
            s = f"{x}\\ {_pp(b.scope, (x,) + env, used | {x}, LOW)}"
            return _wrap(s, LOW, ctx)
        case Let(Fix(fb), b):
            x = _name_for(b.hint, used)
            bound = _pp(fb.scope, (x,) + env, used | {x}, LOW)
            body = _pp(b.scope, (x,) + env, used | {x}, LOW)
            return _wrap(f"let rec {x} = {bound} in {body}", LOW, ctx)
        case Let(bound, b):
            x = _name_for(b.hint, used)
            s = (f"let {x} = {_pp(bound, env, used, LOW)} "
                 f"in {_pp(b.scope, (x,) + env, used | {x}, LOW)}")
            return _wrap(s, LOW, ctx)
        case Match(c, (CRule(Variant("true", ()), a), CRule(Variant("false", ()), b))):
            s = (f"if {_pp(c, env, used, LOW)} then {_pp(a, env, used, LOW)} "
                 f"else {_pp(b, env, used, LOW)}")
            return _wrap(s, LOW, ctx)
        case Match(scr, clauses):
            body = " ".join(f"| {_pp_clause(c, env, used)}" for c in clauses)
            return _wrap(f"match {_pp(scr, env, used, LOW)} with {body}", LOW, ctx)
    raise TypeError(f"cannot print {t!r}")


def _pp_clause(c: Clause, env: tuple[str, ...], used: frozenset[str]) -> str:
    nabs: list[str] = []
    while not isinstance(c, CRule):
        hint = c.hint
        x = _name_for(hint, used)
        if isinstance(c, CNab):
            nabs.append(x)
        env = (x,) + env
        used = used | {x}
        c = c.body
    prefix = f"nab {' '.join(nabs)} in " if nabs else ""
    return (f"{prefix}{_pp(c.pattern, env, used, PAIR)} -> "
            f"{_pp(c.rhs, env, used, LOW)}")
