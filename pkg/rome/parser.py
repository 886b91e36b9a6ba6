"""
Surface syntax: lexer, parser and name resolution.

A program is a sequence of declarations; any token in column 1 starts a new
one. Parsing yields name-based surface trees, which ``Resolver`` turns into
de Bruijn core syntax.
"""
import logging
from dataclasses import dataclass, field

from .exceptions import KindError, ParseError
from .syntax import (
    EMPTY_ROW, App, Const, Flavor, KArrow, Kind, LABEL, Lam, Leq, LabelElim,
    LabelIntro, Plus, RecordLit, Ref, RowKind, STAR, SingVal, TApp, TArrow,
    TCompl, TForall, TLabel, TLam, TMu, TName, TQual, TRow, TSing, TVar, TXi,
    Term, TyApp, TyLam, Type, Var, row_insert_sorted,
)

logger = logging.getLogger('rome')

TERM_KEYWORDS = frozenset({'prj', 'inj', 'syn', 'ana', 'in', 'out', 'fix'})
TYPE_KEYWORDS = frozenset({'Pi', 'Sigma', 'Mu'})
RESERVED = frozenset({'forall', 'type'}) | TERM_KEYWORDS | TYPE_KEYWORDS

# Longest first.
SYMBOLS = ('/\\', ':=', '=>', '->', '++', '\\', '.', '(', ')', '{', '}', '[', ']',
           ',', ':', '=', '<', '+', '~', '-', '#', '*', '|', '/')


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'label', 'sym' or 'eof'
    text: str
    line: int
    col: int

    @property
    def pos(self) -> tuple[int, int]:
        return (self.line, self.col)


def tokenize(source: str) -> list[Token]:
    """Split source text into tokens, dropping whitespace and ``--`` comments."""
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == '\n':
            i, line, col = i + 1, line + 1, 1
            continue
        if ch.isspace():
            i, col = i + 1, col + 1
            continue
        if source.startswith('--', i):
            while i < n and source[i] != '\n':
                i += 1
            continue
        if ch.isalpha() or ch == '_':
            j = i
            while j < n and (source[j].isalnum() or source[j] == '_'):
                j += 1
            tokens.append(Token('ident', source[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch == "'":
            j = i + 1
            while j < n and (source[j].isalnum() or source[j] == '_'):
                j += 1
            if j == i + 1:
                raise ParseError("expected a label name after '", line, col)
            tokens.append(Token('label', source[i + 1:j], line, col))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token('sym', sym, line, col))
                i, col = i + len(sym), col + len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token('eof', '', line, col))
    return tokens


# ---------------------------------------------------------------------------
# Surface trees
# ---------------------------------------------------------------------------

SPos = tuple[int, int] | None


@dataclass(frozen=True)
class Surface:
    pos: SPos = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass(frozen=True)
class SVar(Surface):
    name: str


@dataclass(frozen=True)
class SLabel(Surface):
    name: str


@dataclass(frozen=True)
class SCon(Surface):
    """``Pi``, ``Sigma`` or ``Mu``."""
    name: str


@dataclass(frozen=True)
class SForall(Surface):
    binders: tuple[tuple[str, Kind | None], ...]
    body: Surface


@dataclass(frozen=True)
class STLam(Surface):
    binders: tuple[tuple[str, Kind | None], ...]
    body: Surface


@dataclass(frozen=True)
class STApp(Surface):
    fn: Surface
    arg: Surface


@dataclass(frozen=True)
class SArrow(Surface):
    dom: Surface
    cod: Surface


@dataclass(frozen=True)
class SLeq(Surface):
    lhs: Surface
    rhs: Surface


@dataclass(frozen=True)
class SPlus(Surface):
    left: Surface
    right: Surface
    total: Surface


@dataclass(frozen=True)
class SQual(Surface):
    preds: tuple[Surface, ...]
    body: Surface


@dataclass(frozen=True)
class SRow(Surface):
    entries: tuple[tuple[Surface, Surface], ...] = ()


@dataclass(frozen=True)
class SSing(Surface):
    ty: Surface


@dataclass(frozen=True)
class SCompl(Surface):
    minuend: Surface
    subtrahend: Surface


@dataclass(frozen=True)
class SName(Surface):
    name: str


@dataclass(frozen=True)
class SConst(Surface):
    name: str


@dataclass(frozen=True)
class SLam(Surface):
    params: tuple[tuple[str, Surface | None], ...]
    body: Surface


@dataclass(frozen=True)
class STyLam(Surface):
    binders: tuple[tuple[str, Kind | None], ...]
    body: Surface


@dataclass(frozen=True)
class SApply(Surface):
    fn: Surface
    arg: Surface


@dataclass(frozen=True)
class STyApply(Surface):
    term: Surface
    ty: Surface


@dataclass(frozen=True)
class SBinary(Surface):
    """Infix ``++`` or ``|``."""
    op: str
    left: Surface
    right: Surface


@dataclass(frozen=True)
class SSingTerm(Surface):
    ty: Surface


@dataclass(frozen=True)
class SAssign(Surface):
    label: Surface
    payload: Surface


@dataclass(frozen=True)
class SSelect(Surface):
    target: Surface
    label: Surface


@dataclass(frozen=True)
class SEmptyRecord(Surface):
    pass


@dataclass(frozen=True)
class TypeSig(Surface):
    name: str
    kind: Kind


@dataclass(frozen=True)
class TypeDef(Surface):
    name: str
    body: Surface


@dataclass(frozen=True)
class TermSig(Surface):
    name: str
    ty: Surface


@dataclass(frozen=True)
class TermDef(Surface):
    name: str
    body: Surface


SurfaceDecl = TypeSig | TypeDef | TermSig | TermDef


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class Parser:
    """Recursive-descent parser over the tokens of one declaration."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != 'eof':
            self.i += 1
        return tok

    def at_sym(self, *syms: str) -> bool:
        return self.tok.kind == 'sym' and self.tok.text in syms

    def at_word(self, *words: str) -> bool:
        return self.tok.kind == 'ident' and self.tok.text in words

    def expect_sym(self, sym: str) -> Token:
        if not self.at_sym(sym):
            raise self.error(f"expected '{sym}'")
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != 'ident' or self.tok.text in RESERVED:
            raise self.error('expected an identifier')
        return self.advance()

    def error(self, message: str) -> ParseError:
        tok = self.tok
        found = 'end of declaration' if tok.kind == 'eof' else repr(tok.text)
        return ParseError(f'{message}, found {found}', tok.line, tok.col)

    def expect_end(self) -> None:
        if self.tok.kind != 'eof':
            if self.at_sym(')', ']', '}'):
                raise self.error('unbalanced delimiter')
            raise self.error('unexpected token')

    # declarations

    def declaration(self) -> SurfaceDecl:
        start = self.tok
        if self.at_word('type'):
            self.advance()
            name = self.expect_ident().text
            if self.at_sym(':'):
                self.advance()
                decl = TypeSig(name, self.kind(), pos=start.pos)
            else:
                self.expect_sym('=')
                decl = TypeDef(name, self.type_(), pos=start.pos)
        else:
            name = self.expect_ident().text
            if self.at_sym(':'):
                self.advance()
                decl = TermSig(name, self.type_(), pos=start.pos)
            else:
                self.expect_sym('=')
                decl = TermDef(name, self.term(), pos=start.pos)
        self.expect_end()
        return decl

    # kinds

    def kind(self) -> Kind:
        dom = self.kind_atom()
        if self.at_sym('->'):
            self.advance()
            return KArrow(dom, self.kind())
        return dom

    def kind_atom(self) -> Kind:
        if self.at_sym('*'):
            self.advance()
            return STAR
        if self.at_word('L'):
            self.advance()
            return LABEL
        if self.at_word('R'):
            self.advance()
            self.expect_sym('[')
            elem = self.kind()
            self.expect_sym(']')
            return RowKind(elem)
        if self.at_sym('('):
            self.advance()
            k = self.kind()
            self.expect_sym(')')
            return k
        raise self.error('expected a kind')

    # types

    def binders(self) -> tuple[tuple[str, Kind | None], ...]:
        result: list[tuple[str, Kind | None]] = []
        pending: list[str] = []
        while not self.at_sym('.'):
            if self.at_sym('('):
                self.advance()
                names = [self.expect_ident().text]
                while not self.at_sym(':'):
                    names.append(self.expect_ident().text)
                self.advance()
                k = self.kind()
                self.expect_sym(')')
                result.extend((p, None) for p in pending)
                pending = []
                result.extend((nm, k) for nm in names)
            elif self.at_sym(':'):
                if not pending:
                    raise self.error('kind annotation without binders')
                self.advance()
                k = self.kind()
                result.extend((p, k) for p in pending)
                pending = []
            else:
                pending.append(self.expect_ident().text)
        result.extend((p, None) for p in pending)
        if not result:
            raise self.error('expected at least one binder')
        self.expect_sym('.')
        return tuple(result)

    def type_(self) -> Surface:
        start = self.tok
        if self.at_word('forall'):
            self.advance()
            binders = self.binders()
            return SForall(binders, self.type_(), pos=start.pos)
        if self.at_sym('\\'):
            self.advance()
            binders = self.binders()
            return STLam(binders, self.type_(), pos=start.pos)
        lhs = self.ctype()
        if self.at_sym('<', '+'):
            preds = [self.predicate_rest(lhs)]
            while self.at_sym(','):
                self.advance()
                preds.append(self.predicate_rest(self.ctype()))
            self.expect_sym('=>')
            return SQual(tuple(preds), self.type_(), pos=start.pos)
        if self.at_sym('->'):
            self.advance()
            return SArrow(lhs, self.type_(), pos=start.pos)
        return lhs

    def predicate_rest(self, lhs: Surface) -> Surface:
        if self.at_sym('<'):
            self.advance()
            return SLeq(lhs, self.ctype(), pos=lhs.pos)
        if self.at_sym('+'):
            self.advance()
            right = self.ctype()
            self.expect_sym('~')
            return SPlus(lhs, right, self.ctype(), pos=lhs.pos)
        raise self.error("expected '<' or '+'")

    def ctype(self) -> Surface:
        t = self.btype()
        while self.at_sym('-'):
            self.advance()
            t = SCompl(t, self.btype(), pos=t.pos)
        return t

    def starts_atype(self) -> bool:
        tok = self.tok
        if tok.kind == 'label':
            return True
        if tok.kind == 'ident':
            return tok.text not in ('forall', 'type')
        return self.at_sym('(', '{', '#')

    def btype(self) -> Surface:
        if not self.starts_atype():
            raise self.error('expected a type')
        t = self.atype()
        while self.starts_atype():
            t = STApp(t, self.atype(), pos=t.pos)
        return t

    def atype(self) -> Surface:
        tok = self.tok
        if tok.kind == 'label':
            self.advance()
            return SLabel(tok.text, pos=tok.pos)
        if tok.kind == 'ident':
            self.advance()
            if tok.text in TYPE_KEYWORDS:
                return SCon(tok.text, pos=tok.pos)
            if tok.text in RESERVED:
                raise ParseError(f"'{tok.text}' cannot be used as a type", tok.line, tok.col)
            return SVar(tok.text, pos=tok.pos)
        if self.at_sym('#'):
            self.advance()
            if not self.starts_atype() or self.at_sym('#'):
                raise self.error("expected a label, variable or parenthesised type after '#'")
            return SSing(self.atype(), pos=tok.pos)
        if self.at_sym('('):
            self.advance()
            t = self.type_()
            self.expect_sym(')')
            return t
        if self.at_sym('{'):
            self.advance()
            entries: list[tuple[Surface, Surface]] = []
            if not self.at_sym('}'):
                entries.append(self.row_entry())
                while self.at_sym(','):
                    self.advance()
                    entries.append(self.row_entry())
            self.expect_sym('}')
            return SRow(tuple(entries), pos=tok.pos)
        raise self.error('expected a type')

    def row_entry(self) -> tuple[Surface, Surface]:
        label = self.atype()
        self.expect_sym(':=')
        return label, self.type_()

    # terms

    def term(self) -> Surface:
        lhs = self.branch()
        if self.at_sym(':='):
            self.advance()
            return SAssign(lhs, self.term(), pos=lhs.pos)
        return lhs

    def branch(self) -> Surface:
        t = self.concat()
        while self.at_sym('|'):
            self.advance()
            t = SBinary('|', t, self.concat(), pos=t.pos)
        return t

    def concat(self) -> Surface:
        t = self.select()
        while self.at_sym('++'):
            self.advance()
            t = SBinary('++', t, self.select(), pos=t.pos)
        return t

    def select(self) -> Surface:
        t = self.application()
        while self.at_sym('/'):
            self.advance()
            t = SSelect(t, self.application(), pos=t.pos)
        return t

    def starts_aterm(self) -> bool:
        tok = self.tok
        if tok.kind == 'ident':
            return tok.text not in ('forall', 'type') and tok.text not in TYPE_KEYWORDS
        return self.at_sym('(', '{', '#', '\\', '/\\')

    def application(self) -> Surface:
        if not self.starts_aterm():
            raise self.error('expected a term')
        t = self.aterm()
        while True:
            if self.at_sym('['):
                self.advance()
                ty = self.type_()
                self.expect_sym(']')
                t = STyApply(t, ty, pos=t.pos)
            elif self.starts_aterm():
                t = SApply(t, self.aterm(), pos=t.pos)
            else:
                return t

    def aterm(self) -> Surface:
        tok = self.tok
        if tok.kind == 'ident':
            self.advance()
            if tok.text in TERM_KEYWORDS:
                return SConst(tok.text, pos=tok.pos)
            return SName(tok.text, pos=tok.pos)
        if self.at_sym('#'):
            self.advance()
            if not self.starts_atype() or self.at_sym('#'):
                raise self.error("expected a label, variable or parenthesised type after '#'")
            return SSingTerm(self.atype(), pos=tok.pos)
        if self.at_sym('('):
            self.advance()
            t = self.term()
            self.expect_sym(')')
            return t
        if self.at_sym('{'):
            self.advance()
            self.expect_sym('}')
            return SEmptyRecord(pos=tok.pos)
        if self.at_sym('\\'):
            self.advance()
            params: list[tuple[str, Surface | None]] = []
            while not self.at_sym('.'):
                if self.at_sym('('):
                    self.advance()
                    names = [self.expect_ident().text]
                    while not self.at_sym(':'):
                        names.append(self.expect_ident().text)
                    self.advance()
                    annot = self.type_()
                    self.expect_sym(')')
                    params.extend((nm, annot) for nm in names)
                else:
                    params.append((self.expect_ident().text, None))
            if not params:
                raise self.error('expected at least one parameter')
            self.advance()
            return SLam(tuple(params), self.term(), pos=tok.pos)
        if self.at_sym('/\\'):
            self.advance()
            binders = self.binders()
            return STyLam(binders, self.term(), pos=tok.pos)
        raise self.error('expected a term')


def split_declarations(tokens: list[Token]) -> list[list[Token]]:
    """Group tokens into declarations; a token in column 1 starts a new group."""
    groups: list[list[Token]] = []
    for tok in tokens[:-1]:
        if tok.col == 1 or not groups:
            groups.append([])
        groups[-1].append(tok)
    for group in groups:
        last = group[-1]
        group.append(Token('eof', '', last.line, last.col + len(last.text)))
    if groups and groups[0][0].col != 1:
        first = groups[0][0]
        raise ParseError('declarations must start in column 1', first.line, first.col)
    return groups


def parse_program(source: str) -> list[SurfaceDecl]:
    """Parse a whole source text into surface declarations."""
    decls = [Parser(group).declaration() for group in split_declarations(tokenize(source))]
    logger.debug(f"Parsed {len(decls)} declarations")
    return decls


def parse_type(source: str) -> Surface:
    parser = Parser(tokenize(source))
    t = parser.type_()
    parser.expect_end()
    return t


def parse_term(source: str) -> Surface:
    parser = Parser(tokenize(source))
    t = parser.term()
    parser.expect_end()
    return t


def parse_kind(source: str) -> Kind:
    parser = Parser(tokenize(source))
    k = parser.kind()
    parser.expect_end()
    return k


# ---------------------------------------------------------------------------
# Name resolution
# ---------------------------------------------------------------------------

@dataclass
class CoreDecl:
    """A resolved declaration: a type synonym or a term definition."""
    sort: str  # 'type' or 'term'
    name: str
    signature: Kind | Type | None
    body: Type | Term
    pos: SPos = None


class Resolver:
    """
    Turns surface declarations into core declarations.

    Top-level names may only refer to earlier declarations; ``type_names``
    and ``term_names`` hold what is already in scope (the prelude, say).
    """

    def __init__(self, type_names=(), term_names=()):
        self.type_names: set[str] = set(type_names)
        self.term_names: set[str] = set(term_names)

    def resolve(self, decls: list[SurfaceDecl]) -> list[CoreDecl]:
        out: list[CoreDecl] = []
        type_sigs: dict[str, TypeSig] = {}
        term_sigs: dict[str, TermSig] = {}
        for decl in decls:
            match decl:
                case TypeSig(name=name):
                    if name in type_sigs or name in self.type_names:
                        raise ParseError(f"duplicate type name '{name}'").at(decl.pos)
                    type_sigs[name] = decl
                case TermSig(name=name):
                    if name in term_sigs or name in self.term_names:
                        raise ParseError(f"duplicate name '{name}'").at(decl.pos)
                    term_sigs[name] = decl
                case TypeDef(name=name, body=body):
                    if name in self.type_names:
                        raise ParseError(f"duplicate type name '{name}'").at(decl.pos)
                    sig = type_sigs.pop(name, None)
                    core = self.resolve_type(body, [], own=name)
                    out.append(CoreDecl('type', name, sig.kind if sig else None, core, decl.pos))
                    self.type_names.add(name)
                case TermDef(name=name, body=body):
                    if name in self.term_names:
                        raise ParseError(f"duplicate name '{name}'").at(decl.pos)
                    sig = term_sigs.pop(name, None)
                    sig_type = self.resolve_type(sig.ty, []) if sig else None
                    core = self.resolve_term(body, [], [], own=name)
                    out.append(CoreDecl('term', name, sig_type, core, decl.pos))
                    self.term_names.add(name)
        for sig in list(type_sigs.values()) + list(term_sigs.values()):
            raise ParseError(f"signature for '{sig.name}' lacks a definition").at(sig.pos)
        return out

    # types

    def resolve_type(self, s: Surface, scope: list[str], own: str | None = None) -> Type:
        """Resolve a surface type; ``scope`` lists bound type variables, innermost last."""
        def go(t: Surface, sc: list[str]) -> Type:
            match t:
                case SVar(name):
                    if name in sc:
                        return TVar(len(sc) - 1 - _rindex(sc, name), pos=t.pos)
                    if name == own:
                        raise ParseError(f"type '{name}' refers to itself").at(t.pos)
                    if name in self.type_names:
                        return TName(name, pos=t.pos)
                    raise ParseError(f"unbound type identifier '{name}'").at(t.pos)
                case SLabel(name):
                    return TLabel(name, pos=t.pos)
                case SCon('Pi'):
                    return TXi(Flavor.PI, None, pos=t.pos)
                case SCon('Sigma'):
                    return TXi(Flavor.SIGMA, None, pos=t.pos)
                case SCon('Mu'):
                    return TMu(pos=t.pos)
                case SForall(binders, body):
                    inner = sc + [nm for nm, _ in binders]
                    result = go(body, inner)
                    for nm, k in reversed(binders):
                        result = TForall(k, result, nm, pos=t.pos)
                    return result
                case STLam(binders, body):
                    inner = sc + [nm for nm, _ in binders]
                    result = go(body, inner)
                    for nm, k in reversed(binders):
                        result = TLam(k, result, nm, pos=t.pos)
                    return result
                case STApp(fn, arg):
                    return TApp(go(fn, sc), go(arg, sc), pos=t.pos)
                case SArrow(dom, cod):
                    return TArrow(go(dom, sc), go(cod, sc), pos=t.pos)
                case SQual(preds, body):
                    result = go(body, sc)
                    for p in reversed(preds):
                        result = TQual(self._pred(p, sc, go), result, pos=t.pos)
                    return result
                case SRow(entries):
                    return self._row(t, [(go(lab, sc), go(ty, sc)) for lab, ty in entries])
                case SSing(ty):
                    return TSing(go(ty, sc), pos=t.pos)
                case SCompl(a, b):
                    return TCompl(go(a, sc), go(b, sc), pos=t.pos)
            raise ParseError('expected a type, found a term or predicate').at(t.pos)

        return go(s, list(scope))

    def _pred(self, p: Surface, sc: list[str], go):
        match p:
            case SLeq(lhs, rhs):
                return Leq(go(lhs, sc), go(rhs, sc))
            case SPlus(left, right, total):
                return Plus(go(left, sc), go(right, sc), go(total, sc))
        raise ParseError('expected a predicate').at(p.pos)

    @staticmethod
    def _row(node: Surface, entries: list[tuple[Type, Type]]) -> TRow:
        if all(isinstance(lab, TLabel) for lab, _ in entries):
            row: tuple = ()
            for lab, ty in entries:
                try:
                    row = row_insert_sorted(row, lab, ty)
                except KindError as exc:
                    raise ParseError(exc.message).at(lab.pos or node.pos) from None
            return TRow(row, pos=node.pos)
        # Kinding decides whether a variable-labelled row is acceptable.
        return TRow(tuple(entries), pos=node.pos)

    # terms

    def resolve_term(self, s: Surface, terms: list[str], types: list[str],
                     own: str | None = None) -> Term:
        """Resolve a surface term; ``terms``/``types`` list bound names, innermost last."""
        def go(t: Surface, tm: list[str], ty: list[str]) -> Term:
            match t:
                case SName(name):
                    if name in tm:
                        return Var(len(tm) - 1 - _rindex(tm, name), pos=t.pos)
                    if name == own:
                        raise ParseError(f"'{name}' refers to itself; recursion goes through fix").at(t.pos)
                    if name in self.term_names:
                        return Ref(name, pos=t.pos)
                    raise ParseError(f"unbound identifier '{name}'").at(t.pos)
                case SConst(name):
                    return Const(name, pos=t.pos)
                case SLam(params, body):
                    inner = tm + [nm for nm, _ in params]
                    result = go(body, inner, ty)
                    for nm, annot in reversed(params):
                        annot_t = None if annot is None else self.resolve_type(annot, ty)
                        result = Lam(annot_t, result, nm, pos=t.pos)
                    return result
                case STyLam(binders, body):
                    result = go(body, tm, ty + [nm for nm, _ in binders])
                    for nm, k in reversed(binders):
                        result = TyLam(k, result, nm, pos=t.pos)
                    return result
                case SApply(fn, arg):
                    return App(go(fn, tm, ty), go(arg, tm, ty), pos=t.pos)
                case STyApply(term, arg):
                    return TyApp(go(term, tm, ty), self.resolve_type(arg, ty), pos=t.pos)
                case SBinary(op, left, right):
                    head = Const(op, pos=t.pos)
                    return App(App(head, go(left, tm, ty), pos=t.pos), go(right, tm, ty), pos=t.pos)
                case SSingTerm(arg):
                    return SingVal(self.resolve_type(arg, ty), pos=t.pos)
                case SAssign(label, payload):
                    return LabelIntro(go(label, tm, ty), go(payload, tm, ty), pos=t.pos)
                case SSelect(target, label):
                    return LabelElim(go(target, tm, ty), go(label, tm, ty), pos=t.pos)
                case SEmptyRecord():
                    return RecordLit(EMPTY_ROW, (), pos=t.pos)
            raise ParseError('expected a term').at(t.pos)

        return go(s, list(terms), list(types))


def _rindex(names: list[str], name: str) -> int:
    return len(names) - 1 - names[::-1].index(name)

