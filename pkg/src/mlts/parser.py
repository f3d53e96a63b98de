"""Lexer and recursive-descent parser for the concrete syntax.

The language is an OCaml subset extended with five binding constructs:
`new X in e`, the abstraction arrow `=>` in types, the backslash abstraction
`X\\ e`, abstraction elimination `e @ X1 ... Xn` (left associative, binding
tighter than the other infix operators), and `nab X in pat -> rhs` clauses.
Nominals are capitalized and resolve to the closest enclosing `new`, `\\` or
`nab` binder; capitalized names with no such binder are datatype constructors.
Lowercase identifiers occurring in a pattern are implicitly bound pattern
variables, quantified outside the clause's `nab` binders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from mlts.syntax import (
    App, At, Back, Binder, Bound, CAll, CNab, CRule, Clause, Fix, IntLit,
    Lam, Let, Loc, Match, MltsError, NIL, New, PVar, Pair, Special, Term,
    TopRef, TyAbs, TyBase, TyBool, TyFn, TyInt, TyList, TyProd, Type,
    Variant, Wild, close_pvars, cons, fresh_pvar_id,
)


class ParseError(MltsError):
    def __init__(self, msg: str, loc: Optional[Loc] = None):
        super().__init__(msg)
        self.msg = msg
        self.loc = loc


KEYWORDS = {
    "let", "rec", "in", "fun", "fix", "match", "with", "new", "nab",
    "type", "of", "if", "then", "else", "true", "false",
}

SYMBOLS = [
    ";;", "::", "->", "=>", "<=", ">=", "<>", "&&", "||",
    "(", ")", "[", "]", ",", ";", "|", "\\", "@", "*", "+", "-", "/",
    "=", "<", ">",
]


@dataclass
class Token:
    kind: str  # INT LIDENT UIDENT WILD keyword/symbol EOF
    text: str
    loc: Loc


def tokenize(src: str) -> list[Token]:
    toks: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(src)

    def here() -> Loc:
        return Loc(line, col)

    while i < n:
        c = src[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("(*", i):
            depth, start = 1, here()
            i += 2
            col += 2
            while i < n and depth:
                if src.startswith("(*", i):
                    depth += 1
                    i += 2
                    col += 2
                elif src.startswith("*)", i):
                    depth -= 1
                    i += 2
                    col += 2
                elif src[i] == "\n":
                    i += 1
                    line += 1
                    col = 1
                else:
                    i += 1
                    col += 1
            if depth:
                raise ParseError("unterminated comment", start)
            continue
        if c.isdigit():
            start, loc = i, here()
            while i < n and src[i].isdigit():
                i += 1
            toks.append(Token("INT", src[start:i], loc))
            col += i - start
            continue
        if c.isalpha() or c == "_":
            start, loc = i, here()
            while i < n and (src[i].isalnum() or src[i] in "_'"):
                i += 1
            text = src[start:i]
            col += i - start
            if text == "_":
                toks.append(Token("WILD", text, loc))
            elif text in KEYWORDS:
                toks.append(Token(text, text, loc))
            elif text[0].isupper():
                toks.append(Token("UIDENT", text, loc))
            else:
                toks.append(Token("LIDENT", text, loc))
            continue
        for sym in SYMBOLS:
            if src.startswith(sym, i):
                toks.append(Token(sym, sym, here()))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", here())
    toks.append(Token("EOF", "", here()))
    return toks


# ---------------------------------------------------------------------------
# Program structure


@dataclass
class CtorSig:
    name: str
    args: list[Type]
    result: TyBase
    loc: Optional[Loc] = None


@dataclass
class TypeDecl:
    name: str
    ctors: list[CtorSig]
    loc: Optional[Loc] = None


@dataclass
class TopLet:
    name: str
    term: Term
    loc: Optional[Loc] = None


@dataclass
class TopExpr:
    term: Term
    loc: Optional[Loc] = None


@dataclass
class SourceProgram:
    phrases: list
    ctors: dict[str, CtorSig] = field(default_factory=dict)
    types: dict[str, TyBase] = field(default_factory=dict)


BUILTIN_ARITY = {"true": 0, "false": 0, "[]": 0, "::": 2}


# Binder kinds tracked while parsing, used again by the static checks.
K_VAR, K_NOM = "var", "nom"


class _ClauseScope:
    """Names bound by the clause currently being parsed.

    `mark` records how many ordinary binders enclosed the clause when it was
    opened, so name resolution can interleave clause names with binders
    pushed later inside the right-hand side.
    """

    def __init__(self, mark: int):
        self.mark = mark
        self.pvars: dict[str, PVar] = {}
        self.order: list[str] = []
        self.nabs: dict[str, PVar] = {}

    def pattern_var(self, name: str) -> PVar:
        if name not in self.pvars:
            self.pvars[name] = PVar(fresh_pvar_id(), name)
            self.order.append(name)
        return self.pvars[name]


class Parser:
    def __init__(self, src: str, ctor_arity: Optional[dict[str, int]] = None,
                 toplevel: Optional[set[str]] = None):
        self.toks = tokenize(src)
        self.pos = 0
        self.arity = dict(BUILTIN_ARITY)
        if ctor_arity:
            self.arity.update(ctor_arity)
        self.types: dict[str, TyBase] = {}
        self.toplevel = set(toplevel or ())
        # innermost binder last: (name, kind)
        self.env: list[tuple[str, str]] = []
        self.clauses: list[_ClauseScope] = []

    # -- token plumbing

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def at(self, kind: str) -> bool:
        return self.peek().kind == kind

    def eat(self, kind: str) -> Token:
        if not self.at(kind):
            tok = self.peek()
            raise ParseError(f"expected {kind!r}, found {tok.text!r}", tok.loc)
        return self.next()

    def fail(self, msg: str):
        raise ParseError(msg, self.peek().loc)

    # -- scope helpers

    def push(self, name: str, kind: str):
        self.env.append((name, kind))

    def pop(self):
        self.env.pop()

    def resolve(self, name: str) -> Optional[Term]:
        """Find the closest binding for a name: ordinary binders and clause
        scopes are searched innermost first, interleaved by position."""
        nominal = name[0].isupper()
        for p in range(len(self.env), -1, -1):
            for scope in reversed(self.clauses):
                if scope.mark == p:
                    table = scope.nabs if nominal else scope.pvars
                    if name in table:
                        return table[name]
            if p == 0:
                break
            if self.env[p - 1][0] == name:
                return Bound(len(self.env) - p)
        return None

    # -- programs

    def parse_program(self) -> SourceProgram:
        prog = SourceProgram([])
        while not self.at("EOF"):
            if self.at(";;"):
                self.next()
                continue
            prog.phrases.append(self.parse_phrase(prog))
        return prog

    def parse_phrase(self, prog: SourceProgram):
        tok = self.peek()
        if tok.kind == "type":
            decl = self.parse_type_decl()
            prog.types[decl.name] = TyBase(decl.name, is_open=True)
            for sig in decl.ctors:
                prog.ctors[sig.name] = sig
            return decl
        if tok.kind == "let":
            save = self.pos
            self.next()
            rec = self.at("rec") and bool(self.next())
            if not self.at("LIDENT"):
                self.fail("expected a name after let")
            name = self.next().text
            params = []
            while self.at("LIDENT"):
                params.append(self.next().text)
            self.eat("=")
            if rec:
                self.push(name, K_VAR)
            for p in params:
                self.push(p, K_VAR)
            body = self.parse_expr()
            for _ in params:
                self.pop()
            if rec:
                self.pop()
            if self.at("in"):
                # actually an expression phrase starting with let
                self.pos = save
                term = self.parse_expr()
                return TopExpr(term, loc=tok.loc)
            term = body
            for p in reversed(params):
                term = Lam(Binder(term, p))
            if rec:
                term = Fix(Binder(term, name))
            self.toplevel.add(name)
            return TopLet(name, term, loc=tok.loc)
        term = self.parse_expr()
        return TopExpr(term, loc=tok.loc)

    def parse_type_decl(self) -> TypeDecl:
        loc = self.eat("type").loc
        name = self.eat("LIDENT").text
        result = TyBase(name, is_open=True)
        self.types[name] = result
        self.eat("=")
        ctors: list[CtorSig] = []
        if self.at("|"):
            self.next()
        while True:
            cloc = self.peek().loc
            cname = self.eat("UIDENT").text
            args: list[Type] = []
            if self.at("of"):
                self.next()
                args.append(self.parse_type(no_prod=True))
                while self.at("*"):
                    self.next()
                    args.append(self.parse_type(no_prod=True))
            ctors.append(CtorSig(cname, args, result, cloc))
            self.arity[cname] = len(args)
            if self.at("|"):
                self.next()
                continue
            break
        return TypeDecl(name, ctors, loc=loc)

    def parse_type(self, no_prod: bool = False) -> Type:
        left = self.parse_type_post()
        if not no_prod and self.at("*"):
            self.next()
            right = self.parse_type_post()
            left = TyProd(left, right)
            if self.at("*"):
                self.fail("only binary products are supported")
        if self.at("->"):
            self.next()
            return TyFn(left, self.parse_type(no_prod=no_prod))
        if self.at("=>"):
            self.next()
            return TyAbs(left, self.parse_type(no_prod=no_prod))
        return left

    def parse_type_post(self) -> Type:
        ty = self.parse_type_atom()
        while self.at("LIDENT") and self.peek().text == "list":
            self.next()
            ty = TyList(ty)
        return ty

    def parse_type_atom(self) -> Type:
        tok = self.peek()
        if tok.kind == "(":
            self.next()
            ty = self.parse_type()
            self.eat(")")
            return ty
        if tok.kind == "LIDENT":
            self.next()
            if tok.text == "int":
                return TyInt()
            if tok.text == "bool":
                return TyBool()
            if tok.text in self.types:
                return self.types[tok.text]
            raise ParseError(f"unknown type {tok.text!r}", tok.loc)
        raise ParseError(f"expected a type, found {tok.text!r}", tok.loc)

    # -- expressions

    def parse_expr(self) -> Term:
        tok = self.peek()
        match tok.kind:
            case "fun":
                self.next()
                params = []
                while self.at("LIDENT"):
                    params.append(self.next().text)
                if not params:
                    self.fail("expected parameter names after fun")
                self.eat("->")
                for p in params:
                    self.push(p, K_VAR)
                body = self.parse_expr()
                for p in reversed(params):
                    self.pop()
                    body = Lam(Binder(body, p), loc=tok.loc)
                return body
            case "fix":
                self.next()
                name = self.eat("LIDENT").text
                self.eat("->")
                self.push(name, K_VAR)
                body = self.parse_expr()
                self.pop()
                return Fix(Binder(body, name), loc=tok.loc)
            case "let":
                self.next()
                rec = self.at("rec") and bool(self.next())
                name_tok = self.peek()
                if name_tok.kind == "UIDENT":
                    raise ParseError(
                        "let-bound names must be lowercase", name_tok.loc)
                name = self.eat("LIDENT").text
                params = []
                while self.at("LIDENT"):
                    params.append(self.next().text)
                self.eat("=")
                if rec:
                    self.push(name, K_VAR)
                for p in params:
                    self.push(p, K_VAR)
                bound = self.parse_expr()
                for _ in params:
                    self.pop()
                for p in reversed(params):
                    bound = Lam(Binder(bound, p))
                if rec:
                    self.pop()
                    bound = Fix(Binder(bound, name))
                self.eat("in")
                self.push(name, K_VAR)
                body = self.parse_expr()
                self.pop()
                return Let(bound, Binder(body, name), loc=tok.loc)
            case "new":
                self.next()
                name_tok = self.peek()
                name = self.eat_nominal_name()
                self.eat("in")
                self.push(name, K_NOM)
                body = self.parse_expr()
                self.pop()
                return New(Binder(body, name), loc=name_tok.loc)
            case "match":
                self.next()
                scrutinee = self.parse_expr()
                self.eat("with")
                clauses = self.parse_clauses()
                return Match(scrutinee, tuple(clauses), loc=tok.loc)
            case "if":
                self.next()
                cond = self.parse_expr()
                self.eat("then")
                then = self.parse_expr()
                self.eat("else")
                other = self.parse_expr()
                return Match(cond, (CRule(Variant("true", ()), then),
                                    CRule(Variant("false", ()), other)),
                             loc=tok.loc)
            case "UIDENT" if self.peek(1).kind == "\\":
                name = self.next().text
                self.next()
                self.push(name, K_NOM)
                body = self.parse_expr()
                self.pop()
                return Back(Binder(body, name), loc=tok.loc)
        return self.parse_pair()

    def eat_nominal_name(self) -> str:
        tok = self.peek()
        if tok.kind == "LIDENT":
            raise ParseError(
                f"nominals must be capitalized, found {tok.text!r}", tok.loc)
        return self.eat("UIDENT").text

    def parse_pair(self) -> Term:
        left = self.parse_or()
        if self.at(","):
            loc = self.next().loc
            right = self.parse_or()
            if self.at(","):
                self.fail("only pairs are supported, nest parentheses")
            return Pair(left, right, loc=loc)
        return left

    def parse_or(self) -> Term:
        left = self.parse_and()
        while self.at("||"):
            loc = self.next().loc
            right = self.parse_and()
            left = Match(left, (CRule(Variant("true", ()), Variant("true", ())),
                                CRule(Variant("false", ()), right)), loc=loc)
        return left

    def parse_and(self) -> Term:
        left = self.parse_cmp()
        while self.at("&&"):
            loc = self.next().loc
            right = self.parse_cmp()
            left = Match(left, (CRule(Variant("true", ()), right),
                                CRule(Variant("false", ()), Variant("false", ()))),
                         loc=loc)
        return left

    _CMP = {"=": "eq", "<>": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge"}

    def parse_cmp(self) -> Term:
        left = self.parse_cons()
        if self.peek().kind in self._CMP:
            tok = self.next()
            right = self.parse_cons()
            return Special(self._CMP[tok.kind], (left, right), loc=tok.loc)
        return left

    def parse_cons(self) -> Term:
        left = self.parse_add()
        if self.at("::"):
            loc = self.next().loc
            right = self.parse_cons()
            return Variant("::", (left, right), loc=loc)
        return left

    def parse_add(self) -> Term:
        left = self.parse_mul()
        while self.peek().kind in ("+", "-"):
            tok = self.next()
            right = self.parse_mul()
            op = "add" if tok.kind == "+" else "sub"
            left = Special(op, (left, right), loc=tok.loc)
        return left

    def parse_mul(self) -> Term:
        left = self.parse_at()
        while self.peek().kind in ("*", "/"):
            tok = self.next()
            right = self.parse_at()
            op = "mul" if tok.kind == "*" else "div"
            left = Special(op, (left, right), loc=tok.loc)
        return left

    def parse_at(self) -> Term:
        left = self.parse_app()
        while self.at("@"):
            loc = self.next().loc
            args = [self.parse_atom()]
            while self.starts_atom():
                args.append(self.parse_atom())
            if isinstance(left, At):
                left = At(left.head, left.args + tuple(args), loc=left.loc)
            else:
                left = At(left, tuple(args), loc=loc)
        return left

    def parse_app(self) -> Term:
        fn = self.parse_atom()
        while self.starts_atom():
            arg = self.parse_atom()
            fn = App(fn, arg, loc=fn.loc)
        return fn

    def starts_atom(self) -> bool:
        k = self.peek().kind
        if k in ("INT", "LIDENT", "(", "[", "true", "false"):
            return True
        if k == "UIDENT":
            return self.peek(1).kind != "\\"
        return False

    def parse_atom(self) -> Term:
        tok = self.peek()
        match tok.kind:
            case "INT":
                self.next()
                return IntLit(int(tok.text), loc=tok.loc)
            case "-" if self.peek(1).kind == "INT":
                self.next()
                val = self.next()
                return IntLit(-int(val.text), loc=tok.loc)
            case "true":
                self.next()
                return Variant("true", (), loc=tok.loc)
            case "false":
                self.next()
                return Variant("false", (), loc=tok.loc)
            case "(":
                self.next()
                inner = self.parse_expr()
                self.eat(")")
                return inner
            case "[":
                self.next()
                items = []
                if not self.at("]"):
                    items.append(self.parse_pair())
                    while self.at(";"):
                        self.next()
                        items.append(self.parse_pair())
                self.eat("]")
                out: Term = Variant("[]", (), loc=tok.loc)
                for item in reversed(items):
                    out = cons(item, out)
                return out
            case "LIDENT":
                self.next()
                bound = self.resolve(tok.text)
                if bound is not None:
                    return Bound(bound.index, loc=tok.loc) \
                        if isinstance(bound, Bound) else bound
                return TopRef(tok.text, loc=tok.loc)
            case "UIDENT":
                self.next()
                return self.finish_uident(tok, pattern=False)
        raise ParseError(f"unexpected token {tok.text!r}", tok.loc)

    def finish_uident(self, tok: Token, pattern: bool) -> Term:
        name = tok.text
        bound = self.resolve(name)
        if bound is not None:
            return Bound(bound.index, loc=tok.loc) \
                if isinstance(bound, Bound) else bound
        if name in self.arity:
            arity = self.arity[name]
            if arity == 0:
                return Variant(name, (), loc=tok.loc)
            if not self.starts_atom():
                raise ParseError(
                    f"constructor {name} expects {arity} arguments", tok.loc)
            arg = self.parse_pattern_atom() if pattern else self.parse_atom()
            args = self.split_ctor_args(name, arity, arg, tok.loc)
            return Variant(name, tuple(args), loc=tok.loc)
        raise ParseError(f"unbound nominal or constructor {name!r}", tok.loc)

    def split_ctor_args(self, name, arity, arg, loc) -> list[Term]:
        if arity == 1:
            return [arg]
        args = []
        node = arg
        while isinstance(node, Pair) and len(args) < arity - 1:
            args.append(node.fst)
            node = node.snd
        args.append(node)
        if len(args) != arity:
            raise ParseError(
                f"constructor {name} expects {arity} arguments", loc)
        return args

    # -- clauses and patterns

    def parse_clauses(self) -> list[Clause]:
        if self.at("|"):
            self.next()
        clauses = [self.parse_clause_body()]
        while self.at("|"):
            self.next()
            clauses.append(self.parse_clause_body())
        return clauses

    def parse_clause_body(self) -> Clause:
        loc = self.peek().loc
        scope = _ClauseScope(len(self.env))
        nab_names: list[str] = []
        if self.at("nab"):
            self.next()
            while self.at("UIDENT"):
                name = self.next().text
                nab_names.append(name)
                scope.nabs[name] = PVar(fresh_pvar_id(), name)
            if not nab_names:
                self.fail("expected nominal names after nab")
            self.eat("in")
        self.clauses.append(scope)
        pattern = self.parse_pattern()
        self.eat("->")
        rhs = self.parse_expr()
        self.clauses.pop()
        # quantifier prefix: pattern variables outermost, then nab nominals
        all_ids = [scope.pvars[n].id for n in scope.order]
        nab_ids = [scope.nabs[n].id for n in nab_names]
        rule: Clause = CRule(close_pvars(all_ids + nab_ids, pattern),
                             close_pvars(all_ids + nab_ids, rhs), loc=loc)
        for name in reversed(nab_names):
            rule = CNab(rule, name, loc=loc)
        for name in reversed(scope.order):
            rule = CAll(rule, name, loc=loc)
        return rule

    def parse_pattern(self) -> Term:
        left = self.parse_pattern_cons()
        if self.at(","):
            loc = self.next().loc
            right = self.parse_pattern_cons()
            if self.at(","):
                self.fail("only pairs are supported, nest parentheses")
            return Pair(left, right, loc=loc)
        return left

    def parse_pattern_cons(self) -> Term:
        left = self.parse_pattern_at()
        if self.at("::"):
            loc = self.next().loc
            right = self.parse_pattern_cons()
            return Variant("::", (left, right), loc=loc)
        return left

    def parse_pattern_at(self) -> Term:
        left = self.parse_pattern_app()
        while self.at("@"):
            loc = self.next().loc
            args = [self.parse_pattern_atom()]
            while self.starts_atom():
                args.append(self.parse_pattern_atom())
            if isinstance(left, At):
                left = At(left.head, left.args + tuple(args), loc=left.loc)
            else:
                left = At(left, tuple(args), loc=loc)
        return left

    def parse_pattern_app(self) -> Term:
        tok = self.peek()
        if tok.kind == "UIDENT" and self.peek(1).kind != "\\":
            self.next()
            return self.finish_uident(tok, pattern=True)
        return self.parse_pattern_atom()

    def parse_pattern_atom(self) -> Term:
        tok = self.peek()
        match tok.kind:
            case "WILD":
                self.next()
                return Wild(loc=tok.loc)
            case "INT":
                self.next()
                return IntLit(int(tok.text), loc=tok.loc)
            case "-" if self.peek(1).kind == "INT":
                self.next()
                val = self.next()
                return IntLit(-int(val.text), loc=tok.loc)
            case "true":
                self.next()
                return Variant("true", (), loc=tok.loc)
            case "false":
                self.next()
                return Variant("false", (), loc=tok.loc)
            case "(":
                self.next()
                inner = self.parse_pattern()
                self.eat(")")
                return inner
            case "[":
                self.next()
                items = []
                if not self.at("]"):
                    items.append(self.parse_pattern())
                    while self.at(";"):
                        self.next()
                        items.append(self.parse_pattern())
                self.eat("]")
                out: Term = Variant("[]", (), loc=tok.loc)
                for item in reversed(items):
                    out = cons(item, out)
                return out
            case "LIDENT":
                self.next()
                return self.clauses[-1].pattern_var(tok.text)
            case "UIDENT":
                if self.peek(1).kind == "\\":
                    name = self.next().text
                    bloc = self.next().loc
                    self.push(name, K_NOM)
                    body = self.parse_pattern_cons()
                    self.pop()
                    return Back(Binder(body, name), loc=bloc)
                self.next()
                return self.finish_uident(tok, pattern=True)
        raise ParseError(f"unexpected token {tok.text!r} in pattern", tok.loc)


# ---------------------------------------------------------------------------
# Entry points


def parse_program(text: str) -> SourceProgram:
    """Parse a whole source file into a sequence of top-level phrases."""
    return Parser(text).parse_program()


DEFAULT_PRELUDE = "type tm = | App of tm * tm | Abs of tm => tm;;"


def parse_clause(text: str, prelude: str = DEFAULT_PRELUDE) -> Clause:
    """Parse a single match clause such as `| App(n, m) -> 1 + size n`."""
    parser = Parser(prelude)
    parser.parse_program()
    parser.toks = tokenize(text)
    parser.pos = 0
    clauses = parser.parse_clauses()
    if len(clauses) != 1 or not parser.at("EOF"):
        parser.fail("expected exactly one clause")
    return clauses[0]


def parse_expr(text: str, prelude: str = DEFAULT_PRELUDE) -> Term:
    """Parse a single expression, with the prelude's types in scope."""
    parser = Parser(prelude)
    parser.parse_program()
    parser.toks = tokenize(text)
    parser.pos = 0
    term = parser.parse_expr()
    if parser.at(";;"):
        parser.next()
    if not parser.at("EOF"):
        parser.fail("trailing input after expression")
    return term
