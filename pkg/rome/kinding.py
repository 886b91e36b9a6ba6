"""
Kind checking and elaboration of types.

Besides checking, kinding fills in what the surface leaves implicit: the
kind at which each ``Pi``/``Sigma`` is used, binder kinds, and the maps that
apply a type operator across a row. Unknown kinds are kind metavariables
solved by unification; they must all be determined by the end.
"""
import itertools
import logging
from typing import Mapping, Sequence

from .exceptions import InvariantBreach, KindError
from .syntax import (
    KArrow, Kind, LABEL, LabelKind, Leq, Plus, Predicate, RowKind, STAR, Star,
    Contexts, TApp, TArrow, TCompl, TForall, TLabel, TLabeled, TLam, TMap,
    TMeta, TMu, TName, TQual, TRow, TSing, TVar, TXi, Type, label_key,
    shift_type,
)

logger = logging.getLogger('rome')

Synonyms = Mapping[str, tuple[Type, Kind]]

_kmeta_ids = itertools.count(1)


class KMeta(Kind):
    """Unknown kind, solved at most once."""

    def __init__(self):
        self.id = next(_kmeta_ids)
        self.solution: Kind | None = None

    def __str__(self) -> str:
        if self.solution is not None:
            return str(self.solution)
        return f'?k{self.id}'

    __repr__ = __str__


def zonk_kind(k: Kind) -> Kind:
    match k:
        case KMeta():
            if k.solution is None:
                return k
            k.solution = zonk_kind(k.solution)
            return k.solution
        case RowKind(elem):
            return RowKind(zonk_kind(elem))
        case KArrow(dom, cod):
            return KArrow(zonk_kind(dom), zonk_kind(cod))
    return k


def _occurs(m: KMeta, k: Kind) -> bool:
    match zonk_kind(k):
        case KMeta() as other:
            return other is m
        case RowKind(elem):
            return _occurs(m, elem)
        case KArrow(dom, cod):
            return _occurs(m, dom) or _occurs(m, cod)
    return False


def unify_kinds(expected: Kind, actual: Kind, pos=None, what: str = 'type') -> None:
    a, b = zonk_kind(expected), zonk_kind(actual)
    if a is b:
        return
    if isinstance(a, KMeta) or isinstance(b, KMeta):
        m, other = (a, b) if isinstance(a, KMeta) else (b, a)
        if _occurs(m, other):
            raise KindError(f'infinite kind while checking {what}').at(pos)
        m.solution = other
        return
    match a, b:
        case RowKind(e1), RowKind(e2):
            try:
                unify_kinds(e1, e2, pos, what)
                return
            except KindError:
                pass
        case KArrow(d1, c1), KArrow(d2, c2):
            try:
                unify_kinds(d1, d2, pos, what)
                unify_kinds(c1, c2, pos, what)
                return
            except KindError:
                pass
        case (Star(), Star()) | (LabelKind(), LabelKind()):
            return
    raise KindError(
        f'kind mismatch in {what}: expected {zonk_kind(a)}, found {zonk_kind(b)}'
    ).at(pos)


def kind_has_metas(k: Kind) -> bool:
    match zonk_kind(k):
        case KMeta():
            return True
        case RowKind(elem):
            return kind_has_metas(elem)
        case KArrow(dom, cod):
            return kind_has_metas(dom) or kind_has_metas(cod)
    return False


class Kinder:
    """
    Bidirectional kind inference over one type (or a group of related types).

    Metavariables are shared across calls on the same instance, so a
    signature's predicates and body may jointly determine binder kinds.
    """

    def __init__(self, synonyms: Synonyms | None = None):
        self.synonyms = synonyms or {}
        self.xi_nodes: list[tuple[Kind, object]] = []

    # inference

    def infer(self, kinds: Sequence[Kind], t: Type) -> tuple[Type, Kind]:
        match t:
            case TVar(ix):
                if ix >= len(kinds):
                    raise InvariantBreach(f'type index {ix} out of scope')
                return t, kinds[ix]
            case TMeta(meta):
                return t, meta.kind
            case TName(name):
                if name not in self.synonyms:
                    raise KindError(f"unknown type '{name}'").at(t.pos)
                body, kind = self.synonyms[name]
                return body, kind
            case TLabel():
                return t, LABEL
            case TArrow(dom, cod):
                return TArrow(self.check(kinds, dom, STAR), self.check(kinds, cod, STAR)), STAR
            case TXi(flavor, kind):
                k = kind if kind is not None else KMeta()
                self.xi_nodes.append((k, t.pos))
                return TXi(flavor, k, pos=t.pos), KArrow(RowKind(k), k)
            case TMu():
                return t, KArrow(KArrow(STAR, STAR), STAR)
            case TForall(kind, body, name):
                k = kind if kind is not None else KMeta()
                inner = (k,) + tuple(kinds)
                return TForall(k, self.check(inner, body, STAR), name, pos=t.pos), STAR
            case TQual(pred, body):
                return TQual(self.check_pred(kinds, pred, t.pos), self.check(kinds, body, STAR), pos=t.pos), STAR
            case TLam(kind, body, name):
                k = kind if kind is not None else KMeta()
                body_t, body_k = self.infer((k,) + tuple(kinds), body)
                return TLam(k, body_t, name, pos=t.pos), KArrow(k, body_k)
            case TApp(fn, arg):
                return self._infer_app(kinds, t, fn, arg)
            case TRow(entries):
                return self._infer_row(kinds, t, entries, None)
            case TSing(ty):
                ty_t, _ = self.infer(kinds, ty)
                return TSing(ty_t, pos=t.pos), STAR
            case TLabeled(label, ty):
                label_t = self.check(kinds, label, LABEL)
                ty_t, ty_k = self.infer(kinds, ty)
                return TLabeled(label_t, ty_t, pos=t.pos), RowKind(ty_k)
            case TMap(fn, row):
                fn_t, fn_k = self.infer(kinds, fn)
                fn_k = zonk_kind(fn_k)
                if isinstance(fn_k, KMeta):
                    unify_kinds(fn_k, KArrow(KMeta(), KMeta()), t.pos)
                    fn_k = zonk_kind(fn_k)
                if not isinstance(fn_k, KArrow):
                    raise KindError(f'cannot map a type of kind {fn_k} over a row').at(t.pos)
                row_t = self.check(kinds, row, RowKind(fn_k.dom))
                return TMap(fn_t, row_t, pos=t.pos), RowKind(fn_k.cod)
            case TCompl(a, b):
                a_t, a_k = self.infer(kinds, a)
                a_k = zonk_kind(a_k)
                if isinstance(a_k, KMeta):
                    unify_kinds(a_k, RowKind(KMeta()), t.pos)
                    a_k = zonk_kind(a_k)
                if not isinstance(a_k, RowKind):
                    raise KindError(f'complement of a non-row type of kind {a_k}').at(a.pos or t.pos)
                b_t = self.check(kinds, b, a_k)
                return TCompl(a_t, b_t, pos=t.pos), a_k
        raise InvariantBreach(f'unknown type node {t!r}')

    def _infer_app(self, kinds, t: TApp, fn: Type, arg: Type) -> tuple[Type, Kind]:
        fn_t, fn_k = self.infer(kinds, fn)
        fn_k = zonk_kind(fn_k)
        if isinstance(fn_k, RowKind) and isinstance(zonk_kind(fn_k.elem), KMeta):
            arg_t, arg_k = self.infer(kinds, arg)
            if isinstance(zonk_kind(arg_k), RowKind):
                raise KindError('ambiguous application of a row to a row; annotate the kinds').at(t.pos)
            unify_kinds(fn_k.elem, KArrow(arg_k, KMeta()), t.pos)
            fn_k = zonk_kind(fn_k)
            return self._row_apply(fn_t, fn_k, arg_t, t)
        if isinstance(fn_k, RowKind) and isinstance(zonk_kind(fn_k.elem), KArrow):
            elem = zonk_kind(fn_k.elem)
            arg_t = self.check(kinds, arg, elem.dom)
            return self._row_apply(fn_t, RowKind(elem), arg_t, t)
        if isinstance(fn_k, KMeta):
            arg_t, arg_k = self.infer(kinds, arg)
            if isinstance(zonk_kind(arg_k), RowKind):
                raise KindError(
                    'ambiguous application to a row: the operator may be mapped or applied; annotate its kind'
                ).at(t.pos)
            cod = KMeta()
            unify_kinds(fn_k, KArrow(arg_k, cod), t.pos)
            return TApp(fn_t, arg_t, pos=t.pos), cod
        if not isinstance(fn_k, KArrow):
            raise KindError(f'cannot apply a type of kind {fn_k}').at(t.pos)
        dom = zonk_kind(fn_k.dom)
        if isinstance(arg, TLam):
            return TApp(fn_t, self.check(kinds, arg, dom), pos=t.pos), fn_k.cod
        arg_t, arg_k = self.infer(kinds, arg)
        arg_k = zonk_kind(arg_k)
        if isinstance(arg_k, RowKind) and not isinstance(dom, (RowKind, KMeta)):
            unify_kinds(dom, arg_k.elem, t.pos, 'mapped application')
            return TMap(fn_t, arg_t, pos=t.pos), RowKind(fn_k.cod)
        if isinstance(arg_k, RowKind) and isinstance(dom, KMeta):
            raise KindError(
                'ambiguous application to a row: the operator may be mapped or applied; annotate its kind'
            ).at(t.pos)
        unify_kinds(dom, arg_k, arg.pos or t.pos, 'type application')
        return TApp(fn_t, arg_t, pos=t.pos), fn_k.cod

    @staticmethod
    def _row_apply(fn_t: Type, fn_k: RowKind, arg_t: Type, t: Type) -> tuple[Type, Kind]:
        """A row of operators applied to a type maps ``\\f. f arg`` over the row."""
        elem = zonk_kind(fn_k.elem)
        flap = TLam(elem, TApp(TVar(0), shift_type(arg_t, 0, 1)), 'f')
        return TMap(flap, fn_t, pos=t.pos), RowKind(elem.cod)

    def _infer_row(self, kinds, t: TRow, entries, elem: Kind | None) -> tuple[Type, Kind]:
        elem = elem if elem is not None else KMeta()
        checked = []
        for lab, ty in entries:
            checked.append((self.check(kinds, lab, LABEL), self.check(kinds, ty, elem)))
        if any(not isinstance(lab, TLabel) for lab, _ in checked):
            if len(checked) != 1:
                raise KindError('a row with a variable label must have exactly one entry').at(t.pos)
            lab, ty = checked[0]
            return TLabeled(lab, ty, pos=t.pos), RowKind(elem)
        keys = [label_key(lab.name) for lab, _ in checked]
        for (lab, _), before, after in zip(checked[1:], keys, keys[1:]):
            if before >= after:
                kind_of_fault = 'duplicate' if before == after else 'unsorted'
                raise KindError(f"{kind_of_fault} label '{lab.name} in row").at(lab.pos or t.pos)
        return TRow(tuple(checked), pos=t.pos), RowKind(elem)

    # checking

    def check(self, kinds: Sequence[Kind], t: Type, expected: Kind) -> Type:
        expected = zonk_kind(expected)
        match t:
            case TLam(kind, body, name) if isinstance(expected, KArrow):
                if kind is not None:
                    unify_kinds(expected.dom, kind, t.pos, 'lambda binder')
                body_t = self.check((expected.dom,) + tuple(kinds), body, expected.cod)
                return TLam(expected.dom, body_t, name, pos=t.pos)
            case TRow(entries) if isinstance(expected, RowKind):
                row_t, _ = self._infer_row(kinds, t, entries, expected.elem)
                return row_t
        t2, k = self.infer(kinds, t)
        unify_kinds(expected, k, t.pos)
        return t2

    def check_pred(self, kinds: Sequence[Kind], p: Predicate, pos=None) -> Predicate:
        match p:
            case Leq(lhs, rhs):
                lhs_t, k = self._row_side(kinds, lhs, pos)
                return Leq(lhs_t, self.check(kinds, rhs, k))
            case Plus(left, right, total):
                left_t, k = self._row_side(kinds, left, pos)
                return Plus(left_t, self.check(kinds, right, k), self.check(kinds, total, k))
        raise InvariantBreach(f'unknown predicate {p!r}')

    def _row_side(self, kinds, t: Type, pos) -> tuple[Type, Kind]:
        t2, k = self.infer(kinds, t)
        k = zonk_kind(k)
        if isinstance(k, KMeta):
            unify_kinds(k, RowKind(KMeta()), t.pos or pos)
            k = zonk_kind(k)
        if not isinstance(k, RowKind):
            raise KindError(f'predicates relate rows, found a type of kind {k}').at(t.pos or pos)
        return t2, k

    # finishing

    def finish(self, t: Type, default_star: bool = False) -> Type:
        """Replace solved kind metas; unsolved ones are errors unless defaulted."""
        for k, pos in self.xi_nodes:
            kz = zonk_kind(k)
            if isinstance(kz, LabelKind):
                raise KindError('records and variants cannot be formed at label kind').at(pos)
        self.xi_nodes = []
        return _finish_type(t, default_star)

    def finish_pred(self, p: Predicate, default_star: bool = False) -> Predicate:
        match p:
            case Leq(lhs, rhs):
                return Leq(self.finish(lhs, default_star), self.finish(rhs, default_star))
            case Plus(left, right, total):
                return Plus(self.finish(left, default_star), self.finish(right, default_star),
                            self.finish(total, default_star))
        raise InvariantBreach(f'unknown predicate {p!r}')


def _default_kind(k: Kind, default_star: bool, pos, name: str = '') -> Kind:
    k = zonk_kind(k)
    if not kind_has_metas(k):
        return k
    if not default_star:
        what = f"of '{name}'" if name else 'of a type'
        raise KindError(f'cannot determine the kind {what}; add an annotation').at(pos)

    def fill(kk: Kind) -> Kind:
        match zonk_kind(kk):
            case KMeta() as m:
                m.solution = STAR
                return STAR
            case RowKind(elem):
                return RowKind(fill(elem))
            case KArrow(dom, cod):
                return KArrow(fill(dom), fill(cod))
        return zonk_kind(kk)

    return fill(k)


def _finish_type(t: Type, default_star: bool) -> Type:
    def go(u: Type) -> Type:
        match u:
            case TXi(flavor, kind):
                k = _default_kind(kind, default_star, u.pos)
                if isinstance(k, LabelKind):
                    raise KindError('records and variants cannot be formed at label kind').at(u.pos)
                return TXi(flavor, k, pos=u.pos)
            case TForall(kind, body, name):
                return TForall(_default_kind(kind, default_star, u.pos, name), go(body), name, pos=u.pos)
            case TLam(kind, body, name):
                return TLam(_default_kind(kind, default_star, u.pos, name), go(body), name, pos=u.pos)
            case TQual(pred, body):
                return TQual(_finish_pred(pred, go), go(body), pos=u.pos)
            case TArrow(dom, cod):
                return TArrow(go(dom), go(cod), pos=u.pos)
            case TApp(fn, arg):
                return TApp(go(fn), go(arg), pos=u.pos)
            case TRow(entries):
                return TRow(tuple((go(lab), go(ty)) for lab, ty in entries), pos=u.pos)
            case TSing(ty):
                return TSing(go(ty), pos=u.pos)
            case TLabeled(label, ty):
                return TLabeled(go(label), go(ty), pos=u.pos)
            case TMap(fn, row):
                return TMap(go(fn), go(row), pos=u.pos)
            case TCompl(a, b):
                return TCompl(go(a), go(b), pos=u.pos)
        return u

    return go(t)


def _finish_pred(p: Predicate, go) -> Predicate:
    match p:
        case Leq(lhs, rhs):
            return Leq(go(lhs), go(rhs))
        case Plus(left, right, total):
            return Plus(go(left), go(right), go(total))
    raise InvariantBreach(f'unknown predicate {p!r}')


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------

def infer_kind(kinds: Sequence[Kind], t: Type, synonyms: Synonyms | None = None,
               default_star: bool = False) -> tuple[Type, Kind]:
    """
    Infer the kind of ``t`` and return it elaborated.

    Args:
        kinds: kinds of the free type variables, index 0 first
        t: the type to check
        synonyms: elaborated bodies and kinds of top-level type names
        default_star: settle undetermined kinds at ``*`` instead of failing

    Returns:
        The elaborated type and its kind
    """
    kinder = Kinder(synonyms)
    t2, k = kinder.infer(tuple(kinds), t)
    t2 = kinder.finish(t2, default_star)
    return t2, _default_kind(k, default_star, t.pos)


def check_kind(kinds: Sequence[Kind], t: Type, expected: Kind,
               synonyms: Synonyms | None = None) -> Type:
    kinder = Kinder(synonyms)
    t2 = kinder.check(tuple(kinds), t, expected)
    return kinder.finish(t2)


def check_predicate(kinds: Sequence[Kind], p: Predicate,
                    synonyms: Synonyms | None = None) -> Predicate:
    kinder = Kinder(synonyms)
    p2 = kinder.check_pred(tuple(kinds), p)
    return kinder.finish_pred(p2)


def check_env(ctx: Contexts, synonyms: Synonyms | None = None) -> None:
    """Every predicate must be well formed and every term variable must have a type of kind ``*``."""
    for p in ctx.preds:
        check_predicate(ctx.kinds, p, synonyms)
    for ty in ctx.types:
        check_kind(ctx.kinds, ty, STAR, synonyms)


def kind_of(kinds: Sequence[Kind], t: Type) -> Kind:
    """
    Kind of an already elaborated type, without any checking.

    The empty row literal carries no element kind; it is reported at ``R[*]``.
    """
    match t:
        case TVar(ix):
            return kinds[ix]
        case TMeta(meta):
            return meta.kind
        case TLabel():
            return LABEL
        case TArrow() | TForall() | TQual() | TSing():
            return STAR
        case TXi(_, kind):
            return KArrow(RowKind(kind), kind)
        case TMu():
            return KArrow(KArrow(STAR, STAR), STAR)
        case TLam(kind, body):
            return KArrow(kind, kind_of((kind,) + tuple(kinds), body))
        case TApp(fn, _):
            fk = kind_of(kinds, fn)
            if not isinstance(fk, KArrow):
                raise InvariantBreach(f'application of a type of kind {fk}')
            return fk.cod
        case TRow(entries):
            if not entries:
                return RowKind(STAR)
            return RowKind(kind_of(kinds, entries[0][1]))
        case TLabeled(_, ty):
            return RowKind(kind_of(kinds, ty))
        case TMap(fn, _):
            fk = kind_of(kinds, fn)
            if not isinstance(fk, KArrow):
                raise InvariantBreach(f'map of a type of kind {fk}')
            return RowKind(fk.cod)
        case TCompl(a, _):
            return kind_of(kinds, a)
    raise InvariantBreach(f'cannot compute the kind of {t!r}')
