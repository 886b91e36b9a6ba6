"""
Core syntax of the row calculus.

Kinds, types, predicates, evidence and terms, plus the de Bruijn plumbing
(shifting and substitution) every later stage relies on. Index 0 is always
the innermost binder; types, evidence and terms are three separate
namespaces.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .exceptions import InvariantBreach, KindError

Pos = tuple[int, int] | None


# ---------------------------------------------------------------------------
# Kinds
# ---------------------------------------------------------------------------

class Kind:
    """Classifier of types."""


@dataclass(frozen=True)
class Star(Kind):
    def __str__(self) -> str:
        return '*'


@dataclass(frozen=True)
class LabelKind(Kind):
    def __str__(self) -> str:
        return 'L'


@dataclass(frozen=True)
class RowKind(Kind):
    elem: Kind

    def __str__(self) -> str:
        return f'R[{self.elem}]'


@dataclass(frozen=True)
class KArrow(Kind):
    dom: Kind
    cod: Kind

    def __str__(self) -> str:
        dom = f'({self.dom})' if isinstance(self.dom, KArrow) else str(self.dom)
        return f'{dom} -> {self.cod}'


STAR = Star()
LABEL = LabelKind()


def is_ground(kind: Kind) -> bool:
    return isinstance(kind, (Star, LabelKind))


class Flavor(Enum):
    """Which of the two row constructors a label operation targets."""
    PI = 'Pi'
    SIGMA = 'Sigma'


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Type:
    pos: Pos = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass(frozen=True)
class TVar(Type):
    ix: int


@dataclass(frozen=True)
class TArrow(Type):
    dom: Type
    cod: Type


@dataclass(frozen=True)
class TXi(Type):
    """The record (Pi) or variant (Sigma) constructor at a given kind."""
    flavor: Flavor
    kind: Kind | None = None


@dataclass(frozen=True)
class TMu(Type):
    pass


@dataclass(frozen=True)
class TForall(Type):
    kind: Kind | None
    body: Type
    name: str = field(default='', compare=False)


@dataclass(frozen=True)
class TQual(Type):
    pred: 'Predicate'
    body: Type


@dataclass(frozen=True)
class TLam(Type):
    kind: Kind | None
    body: Type
    name: str = field(default='', compare=False)


@dataclass(frozen=True)
class TApp(Type):
    fn: Type
    arg: Type


@dataclass(frozen=True)
class TRow(Type):
    """Row literal; labels are label literals, strictly ascending."""
    entries: tuple[tuple[Type, Type], ...] = ()


@dataclass(frozen=True)
class TLabel(Type):
    name: str


@dataclass(frozen=True)
class TSing(Type):
    ty: Type


@dataclass(frozen=True)
class TLabeled(Type):
    """One-entry row whose label is not a literal."""
    label: Type
    ty: Type


@dataclass(frozen=True)
class TMap(Type):
    fn: Type
    row: Type


@dataclass(frozen=True)
class TCompl(Type):
    minuend: Type
    subtrahend: Type


@dataclass(frozen=True)
class TName(Type):
    """Reference to a top-level type synonym; expanded by kinding."""
    name: str


_meta_ids = itertools.count(1)


class MetaVar:
    """
    Unification variable used by the type checker.

    ``depth`` is the length of the type context it was created in; its
    solution lives in that context.
    """
    __slots__ = ('id', 'kind', 'depth', 'solution', 'hint')

    def __init__(self, kind: Kind, depth: int, hint: str = ''):
        self.id = next(_meta_ids)
        self.kind = kind
        self.depth = depth
        self.solution: Type | None = None
        self.hint = hint

    def __repr__(self) -> str:
        return f'?{self.hint or "m"}{self.id}'


@dataclass(frozen=True)
class TMeta(Type):
    """Metavariable weakened by ``offset`` binders."""
    meta: MetaVar
    offset: int = 0


# ---------------------------------------------------------------------------
# Predicates and evidence
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Predicate:
    pass


@dataclass(frozen=True)
class Leq(Predicate):
    lhs: Type
    rhs: Type


@dataclass(frozen=True)
class Plus(Predicate):
    left: Type
    right: Type
    total: Type


IndexMap = tuple[int, ...]


@dataclass(frozen=True)
class Evidence:
    pass


@dataclass(frozen=True)
class EVar(Evidence):
    ix: int


@dataclass(frozen=True)
class Trans(Evidence):
    first: Evidence
    second: Evidence


@dataclass(frozen=True)
class Incl(Evidence):
    targets: IndexMap


@dataclass(frozen=True)
class Comb(Evidence):
    left: IndexMap
    right: IndexMap


@dataclass(frozen=True)
class LeqRefl(Evidence):
    row: Type


@dataclass(frozen=True)
class LeqMap(Evidence):
    inner: Evidence
    fn: Type


@dataclass(frozen=True)
class PlusL(Evidence):
    inner: Evidence


@dataclass(frozen=True)
class PlusR(Evidence):
    inner: Evidence


@dataclass(frozen=True)
class PlusEmptyL(Evidence):
    row: Type


@dataclass(frozen=True)
class PlusEmptyR(Evidence):
    row: Type


@dataclass(frozen=True)
class PlusMap(Evidence):
    inner: Evidence
    fn: Type


@dataclass(frozen=True)
class ComplL(Evidence):
    """(row - r) + r ~ row, from r < row."""
    inner: Evidence
    row: Type


@dataclass(frozen=True)
class ComplR(Evidence):
    """r + (row - r) ~ row, from r < row."""
    inner: Evidence
    row: Type


class EvidenceHole:
    """Placeholder filled once the predicate it stands for is solved."""
    __slots__ = ('value', 'pred')

    def __init__(self, pred: Predicate):
        self.pred = pred
        self.value: Evidence | None = None


@dataclass(frozen=True)
class EHole(Evidence):
    hole: EvidenceHole


def is_evidence_value(q: Evidence) -> bool:
    return isinstance(q, (Incl, Comb))


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

CONSTANTS = ('prj', '++', 'inj', '|', 'syn', 'ana', 'in', 'out', 'fix')


@dataclass(frozen=True)
class Term:
    pos: Pos = field(default=None, kw_only=True, compare=False, repr=False)


@dataclass(frozen=True)
class Var(Term):
    ix: int


@dataclass(frozen=True)
class Ref(Term):
    """Reference to an earlier top-level definition."""
    name: str


@dataclass(frozen=True)
class Const(Term):
    name: str
    kind: Kind | None = None


@dataclass(frozen=True)
class Lam(Term):
    annot: Type | None
    body: Term
    name: str = field(default='', compare=False)


@dataclass(frozen=True)
class App(Term):
    fn: Term
    arg: Term


@dataclass(frozen=True)
class TyLam(Term):
    kind: Kind | None
    body: Term
    name: str = field(default='', compare=False)


@dataclass(frozen=True)
class TyApp(Term):
    term: Term
    ty: Type


@dataclass(frozen=True)
class EvLam(Term):
    pred: Predicate
    body: Term


@dataclass(frozen=True)
class EvApp(Term):
    term: Term
    evidence: Evidence


@dataclass(frozen=True)
class SingVal(Term):
    ty: Type


@dataclass(frozen=True)
class LabelIntro(Term):
    """``label := payload``; flavor and payload type are set by elaboration."""
    label: Term
    payload: Term
    flavor: Flavor | None = None
    ty: Type | None = None


@dataclass(frozen=True)
class LabelElim(Term):
    """``target / label``."""
    target: Term
    label: Term
    flavor: Flavor | None = None


@dataclass(frozen=True)
class RecordLit(Term):
    row: Type
    fields: tuple[Term, ...] = ()


@dataclass(frozen=True)
class VariantLit(Term):
    row: Type
    tag: int
    payload: Term


# ---------------------------------------------------------------------------
# Environments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Contexts:
    """Kind (Delta), predicate (Phi) and type (Gamma) environments."""
    kinds: tuple[Kind, ...] = ()
    preds: tuple[Predicate, ...] = ()
    types: tuple[Type, ...] = ()
    type_names: tuple[str, ...] = ()
    term_names: tuple[str, ...] = ()

    @property
    def depth(self) -> int:
        return len(self.kinds)

    def bind_type(self, kind: Kind, name: str = '') -> 'Contexts':
        return Contexts(
            (kind,) + self.kinds,
            tuple(shift_pred(p, 0, 1) for p in self.preds),
            tuple(shift_type(t, 0, 1) for t in self.types),
            (name,) + self.type_names,
            self.term_names,
        )

    def bind_pred(self, pred: Predicate) -> 'Contexts':
        return Contexts(self.kinds, (pred,) + self.preds, self.types,
                        self.type_names, self.term_names)

    def bind_term(self, ty: Type, name: str = '') -> 'Contexts':
        return Contexts(self.kinds, self.preds, (ty,) + self.types,
                        self.type_names, (name,) + self.term_names)


EMPTY = Contexts()


# ---------------------------------------------------------------------------
# Type traversal, shifting and substitution
# ---------------------------------------------------------------------------

VarFn = Callable[[int, int], Type]
MetaFn = Callable[[TMeta, int], Type]


def walk_type(t: Type, c: int, var_fn: VarFn, meta_fn: MetaFn) -> Type:
    """Rebuild ``t``, replacing variables and metas; ``c`` counts binders passed."""
    match t:
        case TVar(ix):
            return var_fn(ix, c)
        case TMeta():
            return meta_fn(t, c)
        case TArrow(dom, cod):
            return TArrow(walk_type(dom, c, var_fn, meta_fn), walk_type(cod, c, var_fn, meta_fn))
        case TForall(kind, body, name):
            return TForall(kind, walk_type(body, c + 1, var_fn, meta_fn), name)
        case TQual(pred, body):
            return TQual(walk_pred(pred, c, var_fn, meta_fn), walk_type(body, c, var_fn, meta_fn))
        case TLam(kind, body, name):
            return TLam(kind, walk_type(body, c + 1, var_fn, meta_fn), name)
        case TApp(fn, arg):
            return TApp(walk_type(fn, c, var_fn, meta_fn), walk_type(arg, c, var_fn, meta_fn))
        case TRow(entries):
            return TRow(tuple(
                (walk_type(lab, c, var_fn, meta_fn), walk_type(ty, c, var_fn, meta_fn))
                for lab, ty in entries
            ))
        case TSing(ty):
            return TSing(walk_type(ty, c, var_fn, meta_fn))
        case TLabeled(label, ty):
            return TLabeled(walk_type(label, c, var_fn, meta_fn), walk_type(ty, c, var_fn, meta_fn))
        case TMap(fn, row):
            return TMap(walk_type(fn, c, var_fn, meta_fn), walk_type(row, c, var_fn, meta_fn))
        case TCompl(a, b):
            return TCompl(walk_type(a, c, var_fn, meta_fn), walk_type(b, c, var_fn, meta_fn))
        case TLabel() | TXi() | TMu() | TName():
            return t
    raise InvariantBreach(f'unknown type node {t!r}')


def walk_pred(p: Predicate, c: int, var_fn: VarFn, meta_fn: MetaFn) -> Predicate:
    match p:
        case Leq(lhs, rhs):
            return Leq(walk_type(lhs, c, var_fn, meta_fn), walk_type(rhs, c, var_fn, meta_fn))
        case Plus(left, right, total):
            return Plus(walk_type(left, c, var_fn, meta_fn),
                        walk_type(right, c, var_fn, meta_fn),
                        walk_type(total, c, var_fn, meta_fn))
    raise InvariantBreach(f'unknown predicate {p!r}')


def shift_type(t: Type, cutoff: int, amount: int) -> Type:
    """Add ``amount`` to every free index at or above ``cutoff``."""
    if amount == 0:
        return t

    def var_fn(ix: int, c: int) -> Type:
        if ix < c + cutoff:
            return TVar(ix)
        if ix + amount < c + cutoff:
            raise InvariantBreach(f'index {ix} shifted by {amount} escapes its scope')
        return TVar(ix + amount)

    def meta_fn(m: TMeta, c: int) -> Type:
        if m.offset >= c + cutoff:
            if m.offset + amount < 0:
                raise InvariantBreach(f'metavariable {m.meta!r} shifted out of scope')
            return TMeta(m.meta, m.offset + amount)
        if m.meta.solution is not None:
            return shift_type(zonk_meta(m), c + cutoff, amount)
        raise InvariantBreach(f'cannot shift unsolved {m.meta!r} across a binder')

    return walk_type(t, 0, var_fn, meta_fn)


def zonk_meta(m: TMeta) -> Type:
    """The solution of a solved meta, weakened to the meta's position."""
    return shift_type(m.meta.solution, 0, m.offset)


def subst_type_at(body: Type, j: int, arg: Type) -> Type:
    """Replace index ``j`` by ``arg`` (given in the context outside ``j``), decrementing above."""
    def var_fn(ix: int, c: int) -> Type:
        if ix == j + c:
            return shift_type(arg, 0, j + c)
        if ix > j + c:
            return TVar(ix - 1)
        return TVar(ix)

    def meta_fn(m: TMeta, c: int) -> Type:
        if m.offset > j + c:
            return TMeta(m.meta, m.offset - 1)
        if m.meta.solution is not None:
            return subst_type_at(zonk_meta(m), j + c, arg)
        raise InvariantBreach(f'cannot substitute under unsolved {m.meta!r}')

    return walk_type(body, 0, var_fn, meta_fn)


def subst_type(body: Type, arg: Type) -> Type:
    """Substitute ``arg`` for index 0 of ``body``."""
    return subst_type_at(body, 0, arg)


def shift_pred(p: Predicate, cutoff: int, amount: int) -> Predicate:
    match p:
        case Leq(lhs, rhs):
            return Leq(shift_type(lhs, cutoff, amount), shift_type(rhs, cutoff, amount))
        case Plus(left, right, total):
            return Plus(shift_type(left, cutoff, amount), shift_type(right, cutoff, amount),
                        shift_type(total, cutoff, amount))
    raise InvariantBreach(f'unknown predicate {p!r}')


def map_pred(p: Predicate, fn: Callable[[Type], Type]) -> Predicate:
    match p:
        case Leq(lhs, rhs):
            return Leq(fn(lhs), fn(rhs))
        case Plus(left, right, total):
            return Plus(fn(left), fn(right), fn(total))
    raise InvariantBreach(f'unknown predicate {p!r}')


def pred_types(p: Predicate) -> tuple[Type, ...]:
    match p:
        case Leq(lhs, rhs):
            return (lhs, rhs)
        case Plus(left, right, total):
            return (left, right, total)
    raise InvariantBreach(f'unknown predicate {p!r}')


def type_metas(t: Type) -> list[MetaVar]:
    """Unsolved metavariables reachable from ``t``."""
    found: list[MetaVar] = []

    def meta_fn(m: TMeta, c: int) -> Type:
        if m.meta.solution is not None:
            found.extend(type_metas(m.meta.solution))
        elif m.meta not in found:
            found.append(m.meta)
        return m

    walk_type(t, 0, lambda ix, c: TVar(ix), meta_fn)
    return found


def has_metas(t: Type) -> bool:
    return bool(type_metas(t))


def free_type_vars(t: Type) -> set[int]:
    """Free indices of ``t``, ignoring metavariables."""
    found: set[int] = set()

    def var_fn(ix: int, c: int) -> Type:
        if ix >= c:
            found.add(ix - c)
        return TVar(ix)

    walk_type(t, 0, var_fn, lambda m, c: m)
    return found


# ---------------------------------------------------------------------------
# Evidence traversal
# ---------------------------------------------------------------------------

def walk_evidence(q: Evidence, cev: int, ev_fn: Callable[[int, int], Evidence],
                  type_fn: Callable[[Type], Type]) -> Evidence:
    match q:
        case EVar(ix):
            return ev_fn(ix, cev)
        case Trans(first, second):
            return Trans(walk_evidence(first, cev, ev_fn, type_fn),
                         walk_evidence(second, cev, ev_fn, type_fn))
        case Incl() | Comb():
            return q
        case LeqRefl(row):
            return LeqRefl(type_fn(row))
        case LeqMap(inner, fn):
            return LeqMap(walk_evidence(inner, cev, ev_fn, type_fn), type_fn(fn))
        case PlusL(inner):
            return PlusL(walk_evidence(inner, cev, ev_fn, type_fn))
        case PlusR(inner):
            return PlusR(walk_evidence(inner, cev, ev_fn, type_fn))
        case PlusEmptyL(row):
            return PlusEmptyL(type_fn(row))
        case PlusEmptyR(row):
            return PlusEmptyR(type_fn(row))
        case PlusMap(inner, fn):
            return PlusMap(walk_evidence(inner, cev, ev_fn, type_fn), type_fn(fn))
        case ComplL(inner, row):
            return ComplL(walk_evidence(inner, cev, ev_fn, type_fn), type_fn(row))
        case ComplR(inner, row):
            return ComplR(walk_evidence(inner, cev, ev_fn, type_fn), type_fn(row))
        case EHole(hole):
            if hole.value is not None:
                return walk_evidence(hole.value, cev, ev_fn, type_fn)
            return q
    raise InvariantBreach(f'unknown evidence node {q!r}')


def shift_evidence(q: Evidence, cutoff: int, amount: int) -> Evidence:
    """Shift evidence variables."""
    def ev_fn(ix: int, c: int) -> Evidence:
        if ix < cutoff:
            return EVar(ix)
        if ix + amount < cutoff:
            raise InvariantBreach(f'evidence index {ix} shifted by {amount} escapes its scope')
        return EVar(ix + amount)

    return walk_evidence(q, 0, ev_fn, lambda t: t)


def shift_evidence_types(q: Evidence, cutoff: int, amount: int) -> Evidence:
    return walk_evidence(q, 0, lambda ix, c: EVar(ix), lambda t: shift_type(t, cutoff, amount))


# ---------------------------------------------------------------------------
# Term traversal, shifting and substitution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Depth:
    term: int = 0
    ty: int = 0
    ev: int = 0


def walk_term(t: Term, d: _Depth,
              var_fn: Callable[[int, _Depth], Term],
              type_fn: Callable[[Type, _Depth], Type],
              ev_fn: Callable[[Evidence, _Depth], Evidence]) -> Term:
    def go(u: Term, dd: _Depth) -> Term:
        match u:
            case Var(ix):
                return var_fn(ix, dd)
            case Ref() | Const():
                return u
            case Lam(annot, body, name):
                return Lam(None if annot is None else type_fn(annot, dd),
                           go(body, _Depth(dd.term + 1, dd.ty, dd.ev)), name)
            case App(fn, arg):
                return App(go(fn, dd), go(arg, dd))
            case TyLam(kind, body, name):
                return TyLam(kind, go(body, _Depth(dd.term, dd.ty + 1, dd.ev)), name)
            case TyApp(term, ty):
                return TyApp(go(term, dd), type_fn(ty, dd))
            case EvLam(pred, body):
                return EvLam(map_pred(pred, lambda x: type_fn(x, dd)),
                             go(body, _Depth(dd.term, dd.ty, dd.ev + 1)))
            case EvApp(term, evidence):
                return EvApp(go(term, dd), ev_fn(evidence, dd))
            case SingVal(ty):
                return SingVal(type_fn(ty, dd))
            case LabelIntro(label, payload, flavor, ty):
                return LabelIntro(go(label, dd), go(payload, dd), flavor,
                                  None if ty is None else type_fn(ty, dd))
            case LabelElim(target, label, flavor):
                return LabelElim(go(target, dd), go(label, dd), flavor)
            case RecordLit(row, fields):
                return RecordLit(type_fn(row, dd), tuple(go(f, dd) for f in fields))
            case VariantLit(row, tag, payload):
                return VariantLit(type_fn(row, dd), tag, go(payload, dd))
        raise InvariantBreach(f'unknown term node {u!r}')

    return go(t, d)


def _same_var(ix: int, d: _Depth) -> Term:
    return Var(ix)


def _same_type(t: Type, d: _Depth) -> Type:
    return t


def _same_ev(q: Evidence, d: _Depth) -> Evidence:
    return q


def shift_term(t: Term, cutoff: int, amount: int) -> Term:
    """Shift term variables."""
    if amount == 0:
        return t

    def var_fn(ix: int, d: _Depth) -> Term:
        if ix < d.term + cutoff:
            return Var(ix)
        if ix + amount < d.term + cutoff:
            raise InvariantBreach(f'term index {ix} shifted by {amount} escapes its scope')
        return Var(ix + amount)

    return walk_term(t, _Depth(), var_fn, _same_type, _same_ev)


def shift_term_types(t: Term, cutoff: int, amount: int) -> Term:
    """Shift type variables inside the annotations of ``t``."""
    if amount == 0:
        return t
    return walk_term(
        t, _Depth(), _same_var,
        lambda ty, d: shift_type(ty, d.ty + cutoff, amount),
        lambda q, d: shift_evidence_types(q, d.ty + cutoff, amount),
    )


def shift_term_evidence(t: Term, cutoff: int, amount: int) -> Term:
    if amount == 0:
        return t
    return walk_term(t, _Depth(), _same_var, _same_type,
                     lambda q, d: shift_evidence(q, d.ev + cutoff, amount))


def subst_term(body: Term, arg: Term, closed: bool = False) -> Term:
    """
    Substitute ``arg`` for term variable 0 of ``body``.

    With ``closed`` the argument is known to have no free variables of any
    namespace and is inserted without shifting.
    """
    def var_fn(ix: int, d: _Depth) -> Term:
        if ix == d.term:
            if closed:
                return arg
            moved = shift_term(arg, 0, d.term)
            moved = shift_term_types(moved, 0, d.ty)
            return shift_term_evidence(moved, 0, d.ev)
        if ix > d.term:
            return Var(ix - 1)
        return Var(ix)

    return walk_term(body, _Depth(), var_fn, _same_type, _same_ev)


def subst_term_type(body: Term, ty: Type) -> Term:
    """Substitute ``ty`` for type variable 0 throughout ``body``."""
    def type_fn(t: Type, d: _Depth) -> Type:
        return subst_type_at(t, d.ty, ty)

    def ev_fn(q: Evidence, d: _Depth) -> Evidence:
        return walk_evidence(q, 0, lambda ix, c: EVar(ix), lambda t: subst_type_at(t, d.ty, ty))

    return walk_term(body, _Depth(), _same_var, type_fn, ev_fn)


def subst_term_evidence(body: Term, q: Evidence) -> Term:
    """Substitute ``q`` for evidence variable 0 throughout ``body``."""
    def ev_fn(e: Evidence, d: _Depth) -> Evidence:
        def var(ix: int, c: int) -> Evidence:
            if ix == d.ev:
                moved = shift_evidence(q, 0, d.ev)
                return shift_evidence_types(moved, 0, d.ty)
            if ix > d.ev:
                return EVar(ix - 1)
            return EVar(ix)
        return walk_evidence(e, 0, var, lambda t: t)

    return walk_term(body, _Depth(), _same_var, _same_type, ev_fn)


def shift(t: Type | Term | Evidence, cutoff: int, amount: int):
    """Shift the free variables of ``t`` in its own namespace."""
    if isinstance(t, Type):
        return shift_type(t, cutoff, amount)
    if isinstance(t, Term):
        return shift_term(t, cutoff, amount)
    if isinstance(t, Evidence):
        return shift_evidence(t, cutoff, amount)
    raise InvariantBreach(f'cannot shift {t!r}')


# ---------------------------------------------------------------------------
# Rows
# ---------------------------------------------------------------------------

def label_key(name: str) -> bytes:
    """Labels are ordered by the bytes of their text."""
    return name.encode('utf-8')


def row_insert_sorted(entries: tuple[tuple[Type, Type], ...], label: Type,
                      ty: Type) -> tuple[tuple[Type, Type], ...]:
    """Insert a literal-labelled entry at its sorted position."""
    if not isinstance(label, TLabel):
        raise InvariantBreach('only label literals have a sorted position')
    key = label_key(label.name)
    for i, (existing, _) in enumerate(entries):
        existing_key = label_key(existing.name)
        if existing_key == key:
            raise KindError(f"duplicate label '{label.name} in row", *(label.pos or (None, None)))
        if existing_key > key:
            return entries[:i] + ((label, ty),) + entries[i:]
    return entries + ((label, ty),)


def is_sorted_row(entries: tuple[tuple[Type, Type], ...]) -> bool:
    keys = [label_key(lab.name) for lab, _ in entries if isinstance(lab, TLabel)]
    if len(keys) != len(entries):
        return False
    return all(a < b for a, b in zip(keys, keys[1:]))


def row_lookup(row: TRow, name: str) -> Type | None:
    for lab, ty in row.entries:
        if isinstance(lab, TLabel) and lab.name == name:
            return ty
    return None


EMPTY_ROW = TRow(())


def record_of(row: Type) -> Type:
    return TApp(TXi(Flavor.PI, STAR), row)


def variant_of(row: Type) -> Type:
    return TApp(TXi(Flavor.SIGMA, STAR), row)


def flavor_of(t: Type) -> tuple[Flavor, Type] | None:
    """Split a normal record or variant type into flavor and row."""
    match t:
        case TApp(TXi(flavor, kind), row) if kind == STAR or kind is None:
            return flavor, row
    return None


def type_spine(t: Type) -> tuple[Type, list[Type]]:
    args: list[Type] = []
    while isinstance(t, TApp):
        args.append(t.arg)
        t = t.fn
    args.reverse()
    return t, args


def type_apply(head: Type, args: list[Type]) -> Type:
    for a in args:
        head = TApp(head, a)
    return head


def term_spine(t: Term) -> tuple[Term, list[tuple[str, object]]]:
    """Split an application spine into its head and ``('term'|'type'|'ev', arg)`` items."""
    items: list[tuple[str, object]] = []
    while True:
        match t:
            case App(fn, arg):
                items.append(('term', arg))
                t = fn
            case TyApp(term, ty):
                items.append(('type', ty))
                t = term
            case EvApp(term, evidence):
                items.append(('ev', evidence))
                t = term
            case _:
                break
    items.reverse()
    return t, items


def term_apply(head: Term, items: list[tuple[str, object]]) -> Term:
    for tag, arg in items:
        if tag == 'term':
            head = App(head, arg)
        elif tag == 'type':
            head = TyApp(head, arg)
        else:
            head = EvApp(head, arg)
    return head
