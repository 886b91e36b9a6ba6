"""
Normalization of types by evaluation.

Types are evaluated into a semantic domain where type-level functions are
Python closures and rows are literal entry lists, inert maps over neutral
rows, or inert complements. Reading a semantic value back at its kind gives
the normal form: beta-reduced, eta-long at arrow kinds, maps computed or
fused, records and variants pushed through higher kinds, and complements of
literal rows computed.

Neutral variables are de Bruijn levels inside the domain and become indices
again on readback.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .exceptions import InvariantBreach
from .kinding import kind_of
from .syntax import (
    Flavor, KArrow, Kind, LABEL, LabelKind, Leq, MetaVar, Plus, Predicate,
    RowKind, STAR, Star, TApp, TArrow, TCompl, TForall, TLabel, TLabeled,
    TLam, TMap, TMeta, TMu, TName, TQual, TRow, TSing, TVar, TXi, Type,
    label_key,
)

# Depth used when comparing semantic values outside any real context.
_COMPARE_DEPTH = 1 << 20


# ---------------------------------------------------------------------------
# Semantic domain
# ---------------------------------------------------------------------------

class Neutral:
    pass


@dataclass(frozen=True)
class NVar(Neutral):
    level: int


@dataclass(frozen=True)
class NMeta(Neutral):
    meta: MetaVar


@dataclass(frozen=True)
class NApp(Neutral):
    head: Neutral
    arg: 'Sem'
    arg_kind: Kind


class Sem:
    pass


@dataclass(frozen=True, eq=False)
class VNe(Sem):
    """Neutral at ground kind."""
    ne: Neutral


@dataclass(frozen=True, eq=False)
class VLam(Sem):
    kind: Kind
    fn: Callable[[Sem], Sem]
    name: str = ''


@dataclass(frozen=True, eq=False)
class VForall(Sem):
    kind: Kind
    body: Callable[[Sem], Sem]
    name: str = ''


@dataclass(frozen=True, eq=False)
class VQual(Sem):
    pred: tuple
    body: Sem


@dataclass(frozen=True, eq=False)
class VArrow(Sem):
    dom: Sem
    cod: Sem


@dataclass(frozen=True, eq=False)
class VXi(Sem):
    """A record or variant type at kind ``*``."""
    flavor: Flavor
    row: Sem


@dataclass(frozen=True, eq=False)
class VMu(Sem):
    fn: Sem


@dataclass(frozen=True, eq=False)
class VLabel(Sem):
    name: str


@dataclass(frozen=True, eq=False)
class VSing(Sem):
    ty: Sem
    kind: Kind


@dataclass(frozen=True, eq=False)
class VRow(Sem):
    entries: tuple[tuple[str, Sem], ...]


@dataclass(frozen=True, eq=False)
class VLabeled(Sem):
    label: Sem
    ty: Sem


@dataclass(frozen=True, eq=False)
class VMapN(Sem):
    """Inert map of ``fn`` (None for the identity) over a neutral row of ``elem`` entries."""
    fn: VLam | None
    ne: Neutral
    elem: Kind


@dataclass(frozen=True, eq=False)
class VCompl(Sem):
    minuend: Sem
    subtrahend: Sem


def reflect(ne: Neutral, kind: Kind) -> Sem:
    """Embed a neutral at ``kind``, eta-expanding at arrow kinds."""
    match kind:
        case KArrow(dom, cod):
            return VLam(dom, lambda v: reflect(NApp(ne, v, dom), cod))
        case RowKind(elem):
            return VMapN(None, ne, elem)
    return VNe(ne)


def apply(fn: Sem, arg: Sem) -> Sem:
    if isinstance(fn, VLam):
        return fn.fn(arg)
    raise InvariantBreach(f'applying a non-function semantic value {fn!r}')


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

Env = tuple[Sem, ...]


def evaluate(t: Type, env: Env, kinds: tuple[Kind, ...]) -> Sem:
    """Evaluate ``t``; ``env`` and ``kinds`` are indexed by de Bruijn index."""
    match t:
        case TVar(ix):
            return env[ix]
        case TMeta(meta, offset):
            if meta.solution is not None:
                return evaluate(meta.solution, env[offset:], kinds[offset:])
            return reflect(NMeta(meta), meta.kind)
        case TArrow(dom, cod):
            return VArrow(evaluate(dom, env, kinds), evaluate(cod, env, kinds))
        case TForall(kind, body, name):
            return VForall(kind, lambda v: evaluate(body, (v,) + env, (kind,) + kinds), name)
        case TQual(pred, body):
            return VQual(evaluate_pred(pred, env, kinds), evaluate(body, env, kinds))
        case TLam(kind, body, name):
            return VLam(kind, lambda v: evaluate(body, (v,) + env, (kind,) + kinds), name)
        case TApp(fn, arg):
            return apply(evaluate(fn, env, kinds), evaluate(arg, env, kinds))
        case TXi(flavor, kind):
            if kind is None:
                raise InvariantBreach('record or variant constructor without a kind')
            return xi_sem(flavor, kind)
        case TMu():
            return VLam(KArrow(STAR, STAR), VMu, 'f')
        case TRow(entries):
            return VRow(tuple((lab.name, evaluate(ty, env, kinds)) for lab, ty in entries))
        case TLabel(name):
            return VLabel(name)
        case TLabeled(label, ty):
            lab = evaluate(label, env, kinds)
            ty_s = evaluate(ty, env, kinds)
            if isinstance(lab, VLabel):
                return VRow(((lab.name, ty_s),))
            return VLabeled(lab, ty_s)
        case TSing(ty):
            return VSing(evaluate(ty, env, kinds), kind_of(kinds, ty))
        case TMap(fn, row):
            return map_sem(evaluate(fn, env, kinds), evaluate(row, env, kinds))
        case TCompl(a, b):
            return compl_sem(evaluate(a, env, kinds), evaluate(b, env, kinds),
                             _row_kind(kinds, (a, b)))
        case TName(name):
            raise InvariantBreach(f"type synonym '{name}' was not expanded")
    raise InvariantBreach(f'unknown type node {t!r}')


def _row_kind(kinds, types) -> Kind:
    """Row kind of a group of same-kinded rows, preferring one that is not ``{}``."""
    for t in types:
        if not (isinstance(t, TRow) and not t.entries):
            return kind_of(kinds, t)
    return RowKind(STAR)


def evaluate_pred(p: Predicate, env: Env, kinds) -> tuple:
    match p:
        case Leq(lhs, rhs):
            return ('leq', _row_kind(kinds, (lhs, rhs)),
                    evaluate(lhs, env, kinds), evaluate(rhs, env, kinds))
        case Plus(left, right, total):
            return ('plus', _row_kind(kinds, (left, right, total)),
                    evaluate(left, env, kinds), evaluate(right, env, kinds),
                    evaluate(total, env, kinds))
    raise InvariantBreach(f'unknown predicate {p!r}')


def xi_sem(flavor: Flavor, kind: Kind) -> VLam:
    return VLam(RowKind(kind), lambda r: xi_apply(flavor, kind, r), flavor.value)


def xi_apply(flavor: Flavor, kind: Kind, row: Sem) -> Sem:
    """``Pi``/``Sigma`` at ``kind`` applied to a row of that kind."""
    match kind:
        case Star():
            return VXi(flavor, row)
        case KArrow(dom, cod):
            def lifted(v: Sem) -> Sem:
                flap = VLam(kind, lambda f: apply(f, v), 'f')
                return xi_apply(flavor, cod, map_sem(flap, row))
            return VLam(dom, lifted)
        case RowKind(elem):
            return map_sem(xi_sem(flavor, elem), row)
    raise InvariantBreach(f'records and variants at kind {kind}')


def map_sem(fn: Sem, row: Sem) -> Sem:
    match row:
        case VRow(entries):
            return VRow(tuple((lab, apply(fn, s)) for lab, s in entries))
        case VLabeled(label, ty):
            return VLabeled(label, apply(fn, ty))
        case VMapN(inner, ne, elem):
            if inner is None:
                return VMapN(fn, ne, elem)
            return VMapN(VLam(elem, lambda v: apply(fn, apply(inner, v))), ne, elem)
        case VCompl(a, b):
            return VCompl(map_sem(fn, a), map_sem(fn, b))
    raise InvariantBreach(f'mapping over a non-row {row!r}')


def compl_sem(a: Sem, b: Sem, kind: Kind) -> Sem:
    if isinstance(a, VRow) and isinstance(b, VRow):
        elem = kind.elem if isinstance(kind, RowKind) else STAR
        return VRow(tuple(subtract_entries(
            a.entries, b.entries, lambda x, y: sem_equal(x, y, elem), key=label_key)))
    return VCompl(a, b)


def subtract_entries(left, right, same, key=label_key) -> list:
    """
    Entries of ``left`` not matched (same label and same type) in ``right``.

    Both sides are sorted by label. An entry of ``right`` whose label matches
    but whose type differs is skipped.
    """
    out = []
    i = j = 0
    while i < len(left) and j < len(right):
        (lab, ty), (lab2, ty2) = left[i], right[j]
        k1, k2 = key(lab), key(lab2)
        if k1 == k2 and same(ty, ty2):
            i += 1
            j += 1
        elif k1 < k2:
            out.append(left[i])
            i += 1
        else:
            j += 1
    out.extend(left[i:])
    return out


def subtract(minuend: TRow, subtrahend: TRow) -> TRow:
    """Relative complement of two normal row literals."""
    entries = subtract_entries(minuend.entries, subtrahend.entries,
                               lambda x, y: x == y, key=lambda lab: label_key(lab.name))
    return TRow(tuple(entries))


# ---------------------------------------------------------------------------
# Readback
# ---------------------------------------------------------------------------

def readback(v: Sem, kind: Kind, depth: int) -> Type:
    match kind:
        case KArrow(dom, cod):
            if not isinstance(v, VLam):
                raise InvariantBreach(f'expected a function at kind {kind}, got {v!r}')
            body = readback(v.fn(reflect(NVar(depth), dom)), cod, depth + 1)
            return TLam(dom, body, v.name)
        case RowKind(elem):
            return _readback_row(v, elem, depth)
    match v:
        case VNe(ne):
            return readback_ne(ne, depth)
        case VArrow(dom, cod):
            return TArrow(readback(dom, STAR, depth), readback(cod, STAR, depth))
        case VForall(k, body, name):
            return TForall(k, readback(body(reflect(NVar(depth), k)), STAR, depth + 1), name)
        case VQual(pred, body):
            return TQual(readback_pred(pred, depth), readback(body, STAR, depth))
        case VXi(flavor, row):
            return TApp(TXi(flavor, STAR), readback(row, RowKind(STAR), depth))
        case VMu(fn):
            return TApp(TMu(), readback(fn, KArrow(STAR, STAR), depth))
        case VLabel(name):
            return TLabel(name)
        case VSing(ty, k):
            return TSing(readback(ty, k, depth))
    raise InvariantBreach(f'cannot read back {v!r} at kind {kind}')


def _readback_row(v: Sem, elem: Kind, depth: int) -> Type:
    match v:
        case VRow(entries):
            return TRow(tuple((TLabel(lab), readback(s, elem, depth)) for lab, s in entries))
        case VLabeled(label, ty):
            return TLabeled(readback(label, LABEL, depth), readback(ty, elem, depth))
        case VMapN(fn, ne, src):
            row = readback_ne(ne, depth)
            if fn is None:
                return row
            fn_t = readback(fn, KArrow(src, elem), depth)
            if src == elem and fn_t == identity_type(src):
                return row
            return TMap(fn_t, row)
        case VCompl(a, b):
            kind = RowKind(elem)
            return TCompl(readback(a, kind, depth), readback(b, kind, depth))
    raise InvariantBreach(f'cannot read back {v!r} as a row')


def readback_ne(ne: Neutral, depth: int) -> Type:
    match ne:
        case NVar(level):
            if level >= depth:
                raise InvariantBreach(f'level {level} escapes depth {depth}')
            return TVar(depth - 1 - level)
        case NMeta(meta):
            if meta.solution is not None:
                raise InvariantBreach(f'{meta!r} was solved while neutral')
            if depth < meta.depth:
                raise InvariantBreach(f'{meta!r} read back outside its context')
            return TMeta(meta, depth - meta.depth)
        case NApp(head, arg, arg_kind):
            return TApp(readback_ne(head, depth), readback(arg, arg_kind, depth))
    raise InvariantBreach(f'unknown neutral {ne!r}')


def readback_pred(pred: tuple, depth: int) -> Predicate:
    if pred[0] == 'leq':
        _, kind, lhs, rhs = pred
        return Leq(readback(lhs, kind, depth), readback(rhs, kind, depth))
    _, kind, left, right, total = pred
    return Plus(readback(left, kind, depth), readback(right, kind, depth),
                readback(total, kind, depth))


_identities: dict[Kind, Type] = {}


def identity_type(kind: Kind) -> Type:
    """The eta-long identity function at ``kind``."""
    if kind not in _identities:
        _identities[kind] = readback(VLam(kind, lambda v: v), KArrow(kind, kind), 0)
    return _identities[kind]


def sem_equal(a: Sem, b: Sem, kind: Kind) -> bool:
    return readback(a, kind, _COMPARE_DEPTH) == readback(b, kind, _COMPARE_DEPTH)


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def identity_env(kinds: Sequence[Kind]) -> Env:
    depth = len(kinds)
    return tuple(reflect(NVar(depth - 1 - ix), k) for ix, k in enumerate(kinds))


def normalize(kinds: Sequence[Kind], t: Type, kind: Kind | None = None) -> Type:
    """
    Normal form of ``t``.

    Args:
        kinds: kinds of the free type variables, index 0 first
        t: an elaborated type
        kind: the kind of ``t`` if already known

    Returns:
        The normal form of ``t`` at its kind
    """
    kinds = tuple(kinds)
    kind = kind if kind is not None else kind_of(kinds, t)
    return readback(evaluate(t, identity_env(kinds), kinds), kind, len(kinds))


def normalize_pred(kinds: Sequence[Kind], p: Predicate) -> Predicate:
    kinds = tuple(kinds)
    return readback_pred(evaluate_pred(p, identity_env(kinds), kinds), len(kinds))


def type_equal(kinds: Sequence[Kind], a: Type, b: Type, kind: Kind | None = None) -> bool:
    if kind is None:
        kind = _row_kind(tuple(kinds), (a, b))
    return normalize(kinds, a, kind) == normalize(kinds, b, kind)


def embed(n: Type) -> Type:
    """Normal forms share the type syntax, so embedding is the identity."""
    return n


def is_normal(kinds: Sequence[Kind], t: Type) -> bool:
    return normalize(kinds, t) == t


def is_ground(kind: Kind) -> bool:
    return isinstance(kind, (Star, LabelKind))
