"""
Bidirectional type checking with elaboration.

Checking a definition produces an elaborated term in which every type
abstraction and application, evidence abstraction and application, and
label operation flavor is explicit. Type arguments that the source leaves
out become metavariables; they are solved by unification, by the
functional dependencies of row predicates, and finally defaulted.
Predicates met while instantiating become evidence holes that the
entailment solver fills once the definition has been checked.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

from .entail import check_evidence, solver_for
from .exceptions import InvariantBreach, KindError, TypeCheckError, UnsolvablePredicate
from .kinding import check_kind, infer_kind, kind_of
from .normalize import normalize, normalize_pred
from .parser import Resolver, parse_type
from .pretty import show_pred, show_type
from .syntax import (
    App, Const, Contexts, EHole, EMPTY, EMPTY_ROW, EVar, EvLam, Evidence,
    EvidenceHole, EvApp, Flavor, KArrow, Kind, LABEL, LabelElim, LabelIntro,
    LabelKind, Lam, Leq, MetaVar, Plus, Predicate, RecordLit, Ref, RowKind,
    STAR, SingVal, Star, TApp, TArrow, TCompl, TForall, TLabel, TLabeled, TLam, TMap,
    TMeta, TQual, TRow, TSing, TVar, Term, TyApp, TyLam, Type, Var, VariantLit,
    _Depth, flavor_of, free_type_vars, has_metas, map_pred, pred_types,
    record_of, row_insert_sorted, row_lookup, shift_term_types, subst_type,
    term_apply, term_spine, type_apply, type_metas, type_spine, variant_of,
    walk_evidence, walk_term, walk_type, zonk_meta,
)

logger = logging.getLogger('rome')


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

SCHEMES = {
    'prj': 'forall (y z : R[*]). y < z => Pi z -> Pi y',
    '++': 'forall (x y z : R[*]). x + y ~ z => Pi x -> Pi y -> Pi z',
    'inj': 'forall (y z : R[*]). y < z => Sigma y -> Sigma z',
    '|': 'forall (x y z : R[*]) (t : *). x + y ~ z => (Sigma x -> t) -> (Sigma y -> t) -> Sigma z -> t',
    'in': 'forall (f : * -> *). f (Mu f) -> Mu f',
    'out': 'forall (f : * -> *). Mu f -> f (Mu f)',
    'fix': 'forall (t : *). (t -> t) -> t',
    'syn': ('forall (f : ({k}) -> *) (z : R[{k}]). #f -> '
            '(forall (l : L) (t : {k}). {{l := t}} < z => #l -> f t) -> Pi (f z)'),
    'ana': ('forall (f : ({k}) -> *) (z : R[{k}]) (t : *). #f -> '
            '(forall (l : L) (u : {k}). {{l := u}} < z => #l -> f u -> t) -> Sigma (f z) -> t'),
}

KIND_INDEXED = ('syn', 'ana')


@lru_cache(maxsize=None)
def constant_scheme(name: str, kind: Kind | None = None) -> Type:
    """Normal type scheme of a built-in constant; ``syn`` and ``ana`` need the kind they work at."""
    if name in KIND_INDEXED:
        if kind is None:
            raise TypeCheckError(f"the kind '{name}' works at is unknown")
        source = SCHEMES[name].format(k=kind)
    else:
        source = SCHEMES[name]
    ty, k = infer_kind((), Resolver().resolve_type(parse_type(source), []), default_star=True)
    if k != STAR:
        raise InvariantBreach(f"scheme of '{name}' has kind {k}")
    return normalize((), ty, STAR)


def constant_arity(name: str) -> tuple[int, int, int]:
    """Numbers of type, evidence and term arguments a constant consumes."""
    counts = [0, 0, 0]
    t = constant_scheme(name, STAR if name in KIND_INDEXED else None)
    while True:
        match t:
            case TForall(body=body):
                counts[0] += 1
            case TQual(body=body):
                counts[1] += 1
            case TArrow(cod=body):
                counts[2] += 1
            case _:
                return counts[0], counts[1], counts[2]
        t = body


def constant_wrapper(name: str, kind: Kind | None = None) -> Term:
    """The eta-expanded form of a constant: abstractions around its saturated application."""
    binders = []
    t = constant_scheme(name, kind)
    while True:
        match t:
            case TForall(k, body, nm):
                binders.append(('type', k, nm))
            case TQual(pred, body):
                binders.append(('ev', pred, ''))
            case TArrow(dom, body):
                binders.append(('term', dom, ''))
            case _:
                break
        t = body
    totals = {tag: sum(1 for b in binders if b[0] == tag) for tag in ('type', 'ev', 'term')}
    seen = {'type': 0, 'ev': 0, 'term': 0}
    items = []
    for tag, _, _ in binders:
        ix = totals[tag] - 1 - seen[tag]
        seen[tag] += 1
        items.append((tag, {'type': TVar, 'ev': EVar, 'term': Var}[tag](ix)))
    body = term_apply(Const(name, kind), items)
    count = totals['term']
    for tag, payload, nm in reversed(binders):
        if tag == 'type':
            body = TyLam(payload, body, nm)
        elif tag == 'ev':
            body = EvLam(payload, body)
        else:
            count -= 1
            body = Lam(payload, body, f'x{count}')
    return body


# ---------------------------------------------------------------------------
# Environment
# ---------------------------------------------------------------------------

@dataclass
class TypeEnv:
    """Top-level type synonyms and the types of earlier definitions."""
    synonyms: dict[str, tuple[Type, Kind]] = field(default_factory=dict)
    types: dict[str, Type] = field(default_factory=dict)

    def type_of(self, name: str) -> Type:
        try:
            return self.types[name]
        except KeyError:
            raise TypeCheckError(f"'{name}' has no type yet") from None


@dataclass
class Wanted:
    ctx: Contexts
    pred: Predicate
    hole: EvidenceHole
    pos: tuple[int, int] | None = None


@dataclass
class Postponed:
    ctx: Contexts
    lhs: Type
    rhs: Type
    pos: tuple[int, int] | None = None


@dataclass
class Explanation:
    """A solved predicate, for --explain-evidence."""
    names: tuple[str, ...]
    pred: Predicate
    evidence: Evidence


class _Mismatch(Exception):
    pass


def zonk_type(t: Type) -> Type:
    """Replace solved metavariables by their solutions."""
    def meta_fn(m: TMeta, c: int) -> Type:
        if m.meta.solution is not None:
            return zonk_type(zonk_meta(m))
        return m

    return walk_type(t, 0, lambda ix, c: TVar(ix), meta_fn)


def _has_solved(t: Type) -> bool:
    found = False

    def meta_fn(m: TMeta, c: int) -> Type:
        nonlocal found
        if m.meta.solution is not None:
            found = True
        return m

    walk_type(t, 0, lambda ix, c: TVar(ix), meta_fn)
    return found


def zonk_term(t: Term) -> Term:
    def ev_fn(q: Evidence, d: _Depth) -> Evidence:
        return walk_evidence(q, 0, lambda ix, c: EVar(ix), zonk_type)

    return walk_term(t, _Depth(), lambda ix, d: Var(ix), lambda ty, d: zonk_type(ty), ev_fn)


def _entries(row: Type):
    match row:
        case TRow(entries):
            return entries
        case TLabeled(label, ty):
            return ((label, ty),)
    return None


def _single(label: Type, ty: Type) -> Type:
    if isinstance(label, TLabel):
        return TRow(((label, ty),))
    return TLabeled(label, ty)


def _same_labels(a: Type, b: Type) -> bool:
    ea, eb = _entries(a), _entries(b)
    return ea is not None and eb is not None and [x for x, _ in ea] == [y for y, _ in eb]


def _shapes_rows(kind: Kind) -> bool:
    match kind:
        case RowKind() | LabelKind():
            return True
        case KArrow(_, cod):
            return _shapes_rows(cod)
    return False


def _default_for(kind: Kind) -> Type:
    match kind:
        case Star():
            return record_of(EMPTY_ROW)
        case KArrow(dom, cod):
            return TLam(dom, _default_for(cod))
    raise InvariantBreach(f'no default at kind {kind}')


def _divide(outer: Type, inner: Type) -> Type | None:
    """
    ``g`` such that mapping ``outer`` over ``map g r`` is mapping ``inner`` over ``r``.

    Both operators must be flaps, ``\\h. h a1 .. an``; ``inner``'s arguments
    must end with ``outer``'s.
    """
    if not (isinstance(outer, TLam) and isinstance(inner, TLam)):
        return None
    h1, xs = type_spine(outer.body)
    h2, ys = type_spine(inner.body)
    if h1 != TVar(0) or h2 != TVar(0) or len(ys) < len(xs):
        return None
    k = len(ys) - len(xs)
    if list(ys[k:]) != list(xs):
        return None
    prefix = ys[:k]
    if any(0 in free_type_vars(p) for p in prefix):
        return None
    return TLam(inner.kind, type_apply(TVar(0), prefix), inner.name)


# ---------------------------------------------------------------------------
# Checker
# ---------------------------------------------------------------------------

class Checker:
    """
    Elaborates one top-level definition.

    Metavariable solutions are recorded on a trail so a failed attempt can
    be undone.
    """

    def __init__(self, env: TypeEnv, entail_depth: int | None = None):
        self.env = env
        self.entail_depth = entail_depth
        self.trail: list[MetaVar] = []
        self.assignments = 0
        self.wanteds: list[Wanted] = []
        self.postponed: list[Postponed] = []
        self.explanations: list[Explanation] = []

    # metavariables

    def fresh(self, ctx: Contexts, kind: Kind, hint: str = 't') -> TMeta:
        return TMeta(MetaVar(kind, ctx.depth, hint), 0)

    def _set(self, meta: MetaVar, solution: Type) -> None:
        if meta.solution is not None:
            raise InvariantBreach(f'{meta!r} solved twice')
        meta.solution = solution
        self.trail.append(meta)
        self.assignments += 1

    def _snapshot(self) -> tuple[int, int]:
        return len(self.trail), len(self.postponed)

    def _rollback(self, snap: tuple[int, int]) -> None:
        trail_len, postponed_len = snap
        while len(self.trail) > trail_len:
            self.trail.pop().solution = None
        del self.postponed[postponed_len:]

    def want(self, ctx: Contexts, pred: Predicate, pos=None) -> EvidenceHole:
        hole = EvidenceHole(pred)
        self.wanteds.append(Wanted(ctx, pred, hole, pos))
        return hole

    # types

    def resolve(self, ctx: Contexts, t: Type) -> Type:
        """``t`` with solved metavariables substituted and renormalized."""
        if _has_solved(t):
            return normalize(ctx.kinds, t)
        return t

    def show(self, ctx: Contexts, t: Type) -> str:
        return show_type(zonk_type(t), ctx.type_names)

    def elab_type(self, ctx: Contexts, t: Type, kind: Kind | None = None) -> tuple[Type, Kind]:
        if kind is None:
            t2, kind = infer_kind(ctx.kinds, t, self.env.synonyms, default_star=True)
        else:
            t2 = check_kind(ctx.kinds, t, kind, self.env.synonyms)
        return normalize(ctx.kinds, t2, kind), kind

    def _flexible(self, ctx: Contexts, t: Type) -> bool:
        head, _ = type_spine(self.resolve(ctx, t))
        return isinstance(head, TMeta)

    # unification

    def unify(self, ctx: Contexts, actual: Type, expected: Type, pos=None) -> None:
        snap = self._snapshot()
        try:
            self._unify(ctx, actual, expected)
        except _Mismatch:
            self._rollback(snap)
            raise TypeCheckError(
                f"type mismatch: expected {self.show(ctx, expected)}, "
                f"found {self.show(ctx, actual)}").at(pos) from None

    def _postpone(self, ctx: Contexts, a: Type, b: Type) -> None:
        self.postponed.append(Postponed(ctx, a, b))

    def _unify(self, ctx: Contexts, a: Type, b: Type) -> None:
        a = self.resolve(ctx, a)
        b = self.resolve(ctx, b)
        if a == b:
            return
        if isinstance(a, TMeta):
            return self._assign(ctx, a, b)
        if isinstance(b, TMeta):
            return self._assign(ctx, b, a)
        ha, xs = type_spine(a)
        hb, ys = type_spine(b)
        if isinstance(ha, TMeta):
            return self._flex(ctx, a, ha, xs, b)
        if isinstance(hb, TMeta):
            return self._flex(ctx, b, hb, ys, a)
        match a, b:
            case TArrow(d1, c1), TArrow(d2, c2):
                self._unify(ctx, d1, d2)
                self._unify(ctx, c1, c2)
            case (TForall(k1, b1, n1), TForall(k2, b2, _)) | (TLam(k1, b1, n1), TLam(k2, b2, _)):
                if k1 != k2 or type(a) is not type(b):
                    raise _Mismatch
                self._unify(_under(ctx, k1, n1), b1, b2)
            case TQual(p1, b1), TQual(p2, b2):
                if type(p1) is not type(p2):
                    raise _Mismatch
                for x, y in zip(pred_types(p1), pred_types(p2)):
                    self._unify(ctx, x, y)
                self._unify(ctx, b1, b2)
            case TApp(f1, x1), TApp(f2, x2):
                self._unify(ctx, f1, f2)
                self._unify(ctx, x1, x2)
            case TRow(e1), TRow(e2):
                if [lab for lab, _ in e1] != [lab for lab, _ in e2]:
                    raise _Mismatch
                for (_, t1), (_, t2) in zip(e1, e2):
                    self._unify(ctx, t1, t2)
            case (TLabeled(), TLabeled()) | (TLabeled(), TRow()) | (TRow(), TLabeled()):
                ea, eb = _entries(a), _entries(b)
                if len(ea) != 1 or len(eb) != 1:
                    raise _Mismatch
                self._unify(ctx, ea[0][0], eb[0][0])
                self._unify(ctx, ea[0][1], eb[0][1])
            case TMap(), TMap():
                self._unify_maps(ctx, a, b)
            case TMap(_, TMeta()), TRow():
                self._invert(ctx, a, b)
            case TRow(), TMap(_, TMeta()):
                self._invert(ctx, b, a)
            case TCompl(x1, y1), TCompl(x2, y2):
                self._unify(ctx, x1, x2)
                self._unify(ctx, y1, y2)
            case TSing(x), TSing(y):
                self._unify(ctx, x, y)
            case _:
                if any(isinstance(t, (TMap, TCompl)) and has_metas(t) for t in (a, b)):
                    return self._postpone(ctx, a, b)
                raise _Mismatch

    def _assign(self, ctx: Contexts, m: TMeta, t: Type) -> None:
        meta = m.meta
        if isinstance(t, TMeta) and t.meta is meta:
            raise _Mismatch
        if meta in type_metas(t):
            raise _Mismatch
        if ctx.depth - m.offset != meta.depth:
            raise InvariantBreach(f'{meta!r} used at the wrong depth')
        self._set(meta, self._rename(t, m.offset, 0, {}, meta.depth))

    def _rename(self, t: Type, off: int, n: int, local_map: dict[int, int],
                target_depth: int) -> Type:
        """
        Move ``t`` into the context of a metavariable ``off`` binders out,
        extended by ``n`` abstractions; ``local_map`` sends the local indices
        that may occur to their abstraction.
        """
        def var_fn(ix: int, c: int) -> Type:
            if ix < c:
                return TVar(ix)
            j = ix - c
            if j < off:
                if j in local_map:
                    return TVar(c + local_map[j])
                raise _Mismatch
            return TVar(c + j - off + n)

        def meta_fn(tm: TMeta, c: int) -> Type:
            if tm.offset - c >= off:
                return TMeta(tm.meta, tm.offset - off + n)
            # Lives under the locals; it may not depend on them.
            pruned = MetaVar(tm.meta.kind, target_depth, tm.meta.hint)
            self._set(tm.meta, TMeta(pruned, tm.meta.depth - target_depth))
            return TMeta(pruned, c + n)

        return walk_type(t, 0, var_fn, meta_fn)

    def _flex(self, ctx: Contexts, whole: Type, head: TMeta, args: list[Type], other: Type) -> None:
        off = head.offset
        locals_: list[int] = []
        for arg in args:
            if not isinstance(arg, TVar) or arg.ix >= off or arg.ix in locals_:
                return self._postpone(ctx, whole, other)
            locals_.append(arg.ix)
        if head.meta in type_metas(other):
            raise _Mismatch
        if ctx.depth - off != head.meta.depth:
            raise InvariantBreach(f'{head.meta!r} used at the wrong depth')
        n = len(locals_)
        local_map = {j: n - 1 - p for p, j in enumerate(locals_)}
        solution = self._rename(other, off, n, local_map, head.meta.depth)
        for j in reversed(locals_):
            solution = TLam(ctx.kinds[j], solution, ctx.type_names[j] if j < len(ctx.type_names) else '')
        self._set(head.meta, solution)

    def _unify_maps(self, ctx: Contexts, a: TMap, b: TMap) -> None:
        snap = self._snapshot()
        try:
            self._unify(ctx, a.fn, b.fn)
            self._unify(ctx, a.row, b.row)
            return
        except _Mismatch:
            self._rollback(snap)
        for x, y in ((a, b), (b, a)):
            if isinstance(x.row, TMeta):
                g = _divide(x.fn, y.fn)
                if g is not None:
                    return self._unify(ctx, x.row, normalize(ctx.kinds, TMap(g, y.row)))
        if has_metas(a) or has_metas(b):
            return self._postpone(ctx, a, b)
        raise _Mismatch

    def _invert(self, ctx: Contexts, mapped: TMap, row: TRow) -> None:
        """A map over an unknown row equal to a literal: the row has the same labels."""
        m = mapped.row
        fk = kind_of(ctx.kinds, mapped.fn)
        if not isinstance(fk, KArrow) or ctx.depth - m.offset != m.meta.depth:
            raise _Mismatch
        entries = tuple((lab, TMeta(MetaVar(fk.dom, m.meta.depth, 'r'), 0)) for lab, _ in row.entries)
        self._set(m.meta, TRow(entries))
        self._unify(ctx, mapped, row)

    # improvement

    def solve_pending(self) -> None:
        """Retry postponed equations and improve wanted predicates until nothing changes."""
        while True:
            before = self.assignments
            pending, self.postponed = self.postponed, []
            for item in pending:
                self.unify(item.ctx, item.lhs, item.rhs, item.pos)
            for wanted in list(self.wanteds):
                self._improve(wanted)
            if self.assignments == before:
                return

    def _solver(self, ctx: Contexts):
        return solver_for(ctx.kinds, ctx.preds, self.entail_depth, ctx.type_names)

    def _improve(self, w: Wanted) -> None:
        ctx = w.ctx
        p = normalize_pred(ctx.kinds, w.pred)
        if not any(has_metas(t) for t in pred_types(p)):
            return
        match p:
            case Leq(lhs, rhs):
                self._improve_leq(ctx, lhs, rhs, w.pos)
            case Plus(left, right, total):
                self._improve_plus(ctx, left, right, total, w.pos)

    def _improve_leq(self, ctx: Contexts, lhs: Type, rhs: Type, pos) -> None:
        entries = _entries(lhs)
        if entries is None or self._flexible(ctx, rhs):
            return
        if isinstance(rhs, TRow):
            for lab, ty in entries:
                if isinstance(lab, TLabel):
                    found = row_lookup(rhs, lab.name)
                    if found is not None:
                        self.unify(ctx, ty, found, pos)
            return
        facts = self._solver(ctx).leq_facts(rhs)
        for lab, ty in entries:
            if not (has_metas(ty) or has_metas(lab)):
                continue
            for fact in facts:
                known = _entries(fact.pred.lhs) or ()
                match = [fty for flab, fty in known if flab == lab]
                if match:
                    self.unify(ctx, ty, match[0], pos)
                    break

    def _improve_plus(self, ctx: Contexts, left: Type, right: Type, total: Type, pos) -> None:
        if isinstance(total, TRow):
            for part in (left, right):
                for lab, ty in _entries(part) or ():
                    if isinstance(lab, TLabel):
                        found = row_lookup(total, lab.name)
                        if found is not None:
                            self.unify(ctx, ty, found, pos)
        left, right, total = (self.resolve(ctx, r) for r in (left, right, total))
        if isinstance(left, TRow) and isinstance(right, TRow) and isinstance(total, TMeta):
            merged = left.entries
            for lab, ty in right.entries:
                try:
                    merged = row_insert_sorted(merged, lab, ty)
                except KindError:
                    raise TypeCheckError(f"label '{lab.name} occurs on both sides of a combination").at(pos) from None
            return self.unify(ctx, total, TRow(merged), pos)
        if isinstance(total, TRow):
            for known, unknown in ((left, right), (right, left)):
                if isinstance(known, TRow) and isinstance(unknown, TMeta):
                    names = {lab.name for lab, _ in known.entries}
                    rest = tuple(e for e in total.entries if e[0].name not in names)
                    return self.unify(ctx, unknown, TRow(rest), pos)
            return
        solver = self._solver(ctx)
        for fact in solver.plus_facts(Plus(left, right, total)):
            fl, fr, ft = fact.pred.left, fact.pred.right, fact.pred.total
            if isinstance(total, TMeta) and fl == left and fr == right:
                return self.unify(ctx, total, ft, pos)
            if ft != total:
                continue
            if _same_labels(left, fl) or (fl == left and isinstance(right, TMeta)):
                self.unify(ctx, left, fl, pos)
                return self.unify(ctx, right, fr, pos)
            if _same_labels(right, fr) or (fr == right and isinstance(left, TMeta)):
                self.unify(ctx, right, fr, pos)
                return self.unify(ctx, left, fl, pos)
        for known, unknown in ((left, right), (right, left)):
            if isinstance(unknown, TMeta) and not has_metas(known) and not has_metas(total) \
                    and solver.try_solve(Leq(known, total)) is not None:
                return self.unify(ctx, unknown, normalize(ctx.kinds, TCompl(total, known)), pos)

    # terms

    def check(self, ctx: Contexts, term: Term, expected: Type) -> Term:
        expected = self.resolve(ctx, expected)
        match expected:
            case TForall(kind, body, name):
                if isinstance(term, TyLam):
                    if term.kind is not None and term.kind != kind:
                        raise TypeCheckError(
                            f"type abstraction over kind {term.kind} where {kind} was expected").at(term.pos)
                    inner = self.check(ctx.bind_type(kind, term.name), term.body, body)
                    return TyLam(kind, inner, term.name)
                inner = self.check(ctx.bind_type(kind, name), shift_term_types(term, 0, 1), body)
                return TyLam(kind, inner, name)
            case TQual(pred, body):
                return EvLam(pred, self.check(ctx.bind_pred(pred), term, body))
        match term:
            case Lam(annot, body, name):
                arrow = self._expect_arrow(ctx, expected, term.pos)
                if annot is not None:
                    given, _ = self.elab_type(ctx, annot, STAR)
                    self.unify(ctx, given, arrow.dom, term.pos)
                inner = self.check(ctx.bind_term(arrow.dom, name), body, arrow.cod)
                return Lam(arrow.dom, inner, name, pos=term.pos)
            case LabelIntro():
                return self._intro(ctx, term, expected)
            case LabelElim():
                return self._elim(ctx, term, expected)[0]
            case App() | TyApp():
                return self._spine(ctx, term, expected)[0]
            case TyLam():
                raise TypeCheckError(
                    f"type abstraction where {self.show(ctx, expected)} was expected").at(term.pos)
        elab, ty = self.infer(ctx, term)
        items: list = []
        ty = self._instantiate(ctx, items, ty, term.pos)
        self.unify(ctx, ty, expected, term.pos)
        return term_apply(elab, items)

    def infer(self, ctx: Contexts, term: Term) -> tuple[Term, Type]:
        match term:
            case Var(ix):
                return term, ctx.types[ix]
            case Ref(name):
                return term, self.env.type_of(name)
            case Const(name, kind):
                if name in KIND_INDEXED and kind is None:
                    raise TypeCheckError(
                        f"'{name}' must be applied to a type function singleton, as in {name} #(\\x. x)").at(term.pos)
                return constant_wrapper(name, kind), constant_scheme(name, kind)
            case Lam(annot, body, name):
                dom = self.elab_type(ctx, annot, STAR)[0] if annot is not None else self.fresh(ctx, STAR, 'a')
                inner, cod = self.infer(ctx.bind_term(dom, name), body)
                return Lam(dom, inner, name, pos=term.pos), TArrow(dom, cod)
            case TyLam(kind, body, name):
                k = kind or STAR
                inner, ty = self.infer(ctx.bind_type(k, name), body)
                return TyLam(k, inner, name), TForall(k, ty, name)
            case SingVal(ty):
                t, _ = self.elab_type(ctx, ty)
                return SingVal(t, pos=term.pos), TSing(t)
            case LabelIntro():
                raise TypeCheckError(
                    "cannot tell whether ':=' builds a record or a variant here; add a type signature").at(term.pos)
            case LabelElim():
                return self._elim(ctx, term, None)
            case App() | TyApp():
                return self._spine(ctx, term, None)
            case RecordLit(row, ()) if row == EMPTY_ROW:
                return RecordLit(EMPTY_ROW, (), pos=term.pos), record_of(EMPTY_ROW)
        raise TypeCheckError('cannot infer a type for this term').at(term.pos)

    def _instantiate(self, ctx: Contexts, items: list, ty: Type, pos, quals_only: bool = False) -> Type:
        while True:
            ty = self.resolve(ctx, ty)
            match ty:
                case TForall(kind, body, name) if not quals_only:
                    m = self.fresh(ctx, kind, name or 't')
                    items.append(('type', m))
                    ty = normalize(ctx.kinds, subst_type(body, m), STAR)
                case TQual(pred, body):
                    items.append(('ev', EHole(self.want(ctx, pred, pos))))
                    ty = body
                case _:
                    return ty

    def _expect_arrow(self, ctx: Contexts, expected: Type, pos) -> TArrow:
        if isinstance(expected, TArrow):
            return expected
        if self._flexible(ctx, expected):
            arrow = TArrow(self.fresh(ctx, STAR, 'a'), self.fresh(ctx, STAR, 'b'))
            self.unify(ctx, arrow, expected, pos)
            return arrow
        raise TypeCheckError(f"a function was given where {self.show(ctx, expected)} was expected").at(pos)

    def _function_type(self, ctx: Contexts, items: list, ty: Type, pos) -> TArrow:
        ty = self._instantiate(ctx, items, ty, pos)
        if self._flexible(ctx, ty):
            self.solve_pending()
            ty = self._instantiate(ctx, items, ty, pos)
        if isinstance(ty, TArrow):
            return ty
        if self._flexible(ctx, ty):
            arrow = TArrow(self.fresh(ctx, STAR, 'a'), self.fresh(ctx, STAR, 'b'))
            self.unify(ctx, ty, arrow, pos)
            return arrow
        raise TypeCheckError(f"a term of type {self.show(ctx, ty)} is not a function").at(pos)

    def _deferred(self, ctx: Contexts, arg: Term, dom: Type) -> bool:
        if isinstance(arg, (Lam, TyLam)) or self._flexible(ctx, dom):
            return True
        split = flavor_of(self.resolve(ctx, dom))
        return isinstance(arg, LabelIntro) and split is not None and self._flexible(ctx, split[1])

    def _syn_kind(self, ctx: Contexts, head: Const, raw: list) -> Kind:
        first = next((arg for tag, arg in raw if tag == 'term'), None)
        if isinstance(first, SingVal):
            _, k = self.elab_type(ctx, first.ty)
            if isinstance(k, KArrow) and k.cod == STAR:
                return k.dom
            raise TypeCheckError(
                f"'{head.name}' needs a type function of kind k -> *, not {k}").at(first.pos)
        raise TypeCheckError(
            f"'{head.name}' must be applied to a type function singleton, as in {head.name} #(\\x. x)").at(head.pos)

    def _spine(self, ctx: Contexts, term: Term, expected: Type | None) -> tuple[Term, Type]:
        head, raw = term_spine(term)
        if isinstance(head, Const):
            kind = head.kind
            if head.name in KIND_INDEXED and kind is None:
                kind = self._syn_kind(ctx, head, raw)
            elab_head, ty = constant_wrapper(head.name, kind), constant_scheme(head.name, kind)
        else:
            elab_head, ty = self.infer(ctx, head)
        items: list = []
        args: list[Term | None] = []
        deferred: list[tuple[int, Term, Type]] = []
        for tag, arg in raw:
            if tag == 'type':
                ty = self._instantiate(ctx, items, ty, term.pos, quals_only=True)
                if not isinstance(ty, TForall):
                    raise TypeCheckError(
                        f"type argument given to a term of type {self.show(ctx, ty)}, "
                        f"which is not polymorphic").at(arg.pos or term.pos)
                given, _ = self.elab_type(ctx, arg, ty.kind)
                items.append(('type', given))
                ty = normalize(ctx.kinds, subst_type(ty.body, given), STAR)
                continue
            if tag != 'term':
                raise InvariantBreach('evidence application in source')
            arrow = self._function_type(ctx, items, ty, arg.pos or term.pos)
            index = len(args)
            args.append(None)
            items.append(('term', index))
            if self._deferred(ctx, arg, arrow.dom):
                deferred.append((index, arg, arrow.dom))
            else:
                args[index] = self.check(ctx, arg, arrow.dom)
            ty = arrow.cod
        if expected is not None:
            ty = self._instantiate(ctx, items, ty, term.pos)
            self.unify(ctx, ty, expected, term.pos)

        def order(entry):
            arg = entry[1]
            return 2 if isinstance(arg, (Lam, TyLam)) else 1 if isinstance(arg, LabelIntro) else 0

        for index, arg, dom in sorted(deferred, key=order):
            self.solve_pending()
            args[index] = self.check(ctx, arg, dom)
        elab = term_apply(elab_head, [(tag, args[v] if tag == 'term' else v) for tag, v in items])
        return elab, ty

    def _label_of(self, ctx: Contexts, ty: Type, pos) -> Type:
        ty = self.resolve(ctx, ty)
        if isinstance(ty, TSing) and kind_of(ctx.kinds, ty.ty) == LABEL:
            return ty.ty
        raise TypeCheckError(f"expected a label, found a term of type {self.show(ctx, ty)}").at(pos)

    def _intro(self, ctx: Contexts, term: LabelIntro, expected: Type) -> Term:
        split = flavor_of(expected)
        if split is None and self._flexible(ctx, expected):
            self.solve_pending()
            split = flavor_of(self.resolve(ctx, expected))
        if split is None:
            if self._flexible(ctx, expected):
                raise TypeCheckError(
                    "cannot tell whether ':=' builds a record or a variant here; "
                    "add a type signature").at(term.pos)
            raise TypeCheckError(
                f"a labelled term was given where {self.show(ctx, expected)} was expected").at(term.pos)
        flavor, row = split
        label, label_ty = self.infer(ctx, term.label)
        lab = self._label_of(ctx, label_ty, term.label.pos or term.pos)
        entry = self.fresh(ctx, STAR, 'p')
        self.unify(ctx, _single(lab, entry), row, term.pos)
        if self._flexible(ctx, entry):
            self.solve_pending()
        known = self.resolve(ctx, entry)
        if self._flexible(ctx, known):
            payload, payload_ty = self.infer(ctx, term.payload)
            self.unify(ctx, payload_ty, known, term.payload.pos or term.pos)
        else:
            payload = self.check(ctx, term.payload, known)
        return LabelIntro(label, payload, flavor, entry, pos=term.pos)

    def _elim(self, ctx: Contexts, term: LabelElim, expected: Type | None) -> tuple[Term, Type]:
        target, target_ty = self.infer(ctx, term.target)
        items: list = []
        target_ty = self._instantiate(ctx, items, target_ty, term.pos)
        target = term_apply(target, items)
        split = flavor_of(target_ty)
        if split is None and self._flexible(ctx, target_ty):
            self.solve_pending()
            split = flavor_of(self.resolve(ctx, target_ty))
        if split is None:
            raise TypeCheckError(
                f"cannot select a label from a term of type {self.show(ctx, target_ty)}").at(term.pos)
        flavor, row = split
        label, label_ty = self.infer(ctx, term.label)
        lab = self._label_of(ctx, label_ty, term.label.pos or term.pos)
        result = expected if expected is not None else self.fresh(ctx, STAR, 't')
        self.unify(ctx, _single(lab, result), row, term.pos)
        return LabelElim(target, label, flavor, pos=term.pos), result

    # finishing

    def _default_metas(self, types: list[Type], keep: set[MetaVar]) -> None:
        """
        Default unsolved payload metavariables outside ``keep``.

        Row and label metavariables decide which evidence is built, so one
        left over is an ambiguity error rather than a default.
        """
        for t in types:
            for meta in type_metas(t):
                if meta.solution is not None or meta in keep:
                    continue
                if _shapes_rows(meta.kind):
                    keep.add(meta)
                    continue
                value = _default_for(meta.kind)
                logger.debug(f"Defaulted {meta!r} : {meta.kind} to {show_type(value)}")
                self._set(meta, value)

    def finish(self, elab: Term, ty: Type, pos=None) -> tuple[Term, Type]:
        """Solve what is left, fill evidence holes and return the zonked term and type."""
        self.solve_pending()
        escaping = set(type_metas(ty))
        if self.postponed:
            self._default_metas([t for p in self.postponed for t in (p.lhs, p.rhs)], set(escaping))
            self.solve_pending()
        if self.postponed:
            item = self.postponed[0]
            raise TypeCheckError(
                f"cannot solve {self.show(item.ctx, item.lhs)} = {self.show(item.ctx, item.rhs)}; "
                f"add a type annotation").at(item.pos)
        if type_metas(ty):
            raise TypeCheckError(
                f"ambiguous type {self.show(EMPTY, ty)}; "
                f"give the type arguments explicitly with [..] or add a signature").at(pos)
        self._default_metas([t for w in self.wanteds for t in pred_types(w.pred)], set())
        self.solve_pending()
        for w in self.wanteds:
            goal = normalize_pred(w.ctx.kinds, w.pred)
            if any(has_metas(t) for t in pred_types(goal)):
                raise TypeCheckError(
                    f"ambiguous predicate {show_pred(zonk_pred(goal), w.ctx.type_names)}; "
                    f"give the type arguments explicitly with [..]").at(w.pos)
        collected: list[Type] = []

        def note(t: Type, d: _Depth) -> Type:
            collected.append(t)
            return t

        walk_term(elab, _Depth(), lambda ix, d: Var(ix), note, lambda q, d: q)
        leftover: set[MetaVar] = set()
        self._default_metas(collected, leftover)
        if leftover:
            meta = min(leftover, key=lambda m: m.id)
            raise TypeCheckError(
                f"cannot determine {meta!r} : {meta.kind}; "
                f"give the type arguments explicitly with [..]").at(pos)
        for w in self.wanteds:
            goal = normalize_pred(w.ctx.kinds, w.pred)
            try:
                w.hole.value = self._solver(w.ctx).solve(goal)
            except UnsolvablePredicate as exc:
                raise exc.at(w.pos)
            self.explanations.append(Explanation(w.ctx.type_names, goal, w.hole.value))
        return zonk_term(elab), normalize((), zonk_type(ty), STAR)


def zonk_pred(p: Predicate) -> Predicate:
    return map_pred(p, zonk_type)


def _under(ctx: Contexts, kind: Kind, name: str = '') -> Contexts:
    """Type context extended by one binder; enough for unification."""
    return Contexts((kind,) + ctx.kinds, (), (), (name,) + ctx.type_names, ())


@dataclass
class Checked:
    name: str
    term: Term
    type: Type
    explanations: list[Explanation]


def check_definition(env: TypeEnv, name: str, signature: Type | None, body: Term,
                     entail_depth: int | None = None) -> Checked:
    """
    Check one top-level definition.

    Args:
        env: synonyms and the types of earlier definitions
        name: the definition's name, for messages
        signature: its declared type, unkinded, or None to infer one
        body: the resolved body

    Returns:
        The elaborated term, its normal type and the evidence that was built
    """
    checker = Checker(env, entail_depth)
    if signature is not None:
        declared, kind = infer_kind((), signature, env.synonyms, default_star=True)
        if kind != STAR:
            raise TypeCheckError(f"the signature of '{name}' has kind {kind}, not *").at(signature.pos)
        declared = normalize((), declared, STAR)
        elab = checker.check(EMPTY, body, declared)
        ty = declared
    else:
        elab, ty = checker.infer(EMPTY, body)
    elab, ty = checker.finish(elab, ty, body.pos)
    logger.debug(f"Elaborated {name} with {len(checker.explanations)} solved predicates")
    return Checked(name, elab, ty, checker.explanations)


def infer_term(env: TypeEnv, body: Term, entail_depth: int | None = None) -> tuple[Term, Type]:
    checker = Checker(env, entail_depth)
    elab, ty = checker.infer(EMPTY, body)
    return checker.finish(elab, ty, body.pos)


# ---------------------------------------------------------------------------
# Rechecking elaborated terms
# ---------------------------------------------------------------------------

class Rechecker:
    """
    Computes the type of an elaborated term without any inference.

    Every binder carries its annotation and every predicate is witnessed by
    explicit evidence, so this is a plain syntax-directed traversal. Used to
    validate elaboration and to check that evaluation preserves types.
    """

    def __init__(self, env: TypeEnv):
        self.env = env

    def fail(self, message: str, term: Term):
        raise TypeCheckError(f'elaborated term is ill-typed: {message}').at(term.pos)

    def infer(self, ctx: Contexts, t: Term) -> Type:
        kinds = ctx.kinds
        match t:
            case Var(ix):
                if ix >= len(ctx.types):
                    self.fail(f'unbound variable {ix}', t)
                return normalize(kinds, ctx.types[ix], STAR)
            case Ref(name):
                return self.env.type_of(name)
            case Const(name, kind):
                return constant_scheme(name, kind)
            case Lam(annot, body, name):
                if annot is None:
                    self.fail('unannotated abstraction', t)
                dom = normalize(kinds, annot, STAR)
                return TArrow(dom, self.infer(ctx.bind_term(dom, name), body))
            case App(fn, arg):
                fn_ty = self.infer(ctx, fn)
                if not isinstance(fn_ty, TArrow):
                    self.fail(f'applying a term of type {show_type(fn_ty, ctx.type_names)}', t)
                arg_ty = self.infer(ctx, arg)
                if arg_ty != fn_ty.dom:
                    self.fail(f'argument has type {show_type(arg_ty, ctx.type_names)}, '
                              f'expected {show_type(fn_ty.dom, ctx.type_names)}', t)
                return fn_ty.cod
            case TyLam(kind, body, name):
                return TForall(kind, self.infer(ctx.bind_type(kind, name), body), name)
            case TyApp(term, ty):
                fn_ty = self.infer(ctx, term)
                if not isinstance(fn_ty, TForall):
                    self.fail('type application of a monomorphic term', t)
                if not (isinstance(ty, TRow) and not ty.entries) and kind_of(kinds, ty) != fn_ty.kind:
                    self.fail(f'type argument of kind {kind_of(kinds, ty)}, expected {fn_ty.kind}', t)
                return normalize(kinds, subst_type(fn_ty.body, ty), STAR)
            case EvLam(pred, body):
                return TQual(normalize_pred(kinds, pred), self.infer(ctx.bind_pred(pred), body))
            case EvApp(term, evidence):
                fn_ty = self.infer(ctx, term)
                if not isinstance(fn_ty, TQual):
                    self.fail('evidence given to an unqualified term', t)
                if not check_evidence(kinds, ctx.preds, evidence, fn_ty.pred):
                    self.fail(f'evidence does not prove {show_pred(fn_ty.pred, ctx.type_names)}', t)
                return fn_ty.body
            case SingVal(ty):
                return normalize(kinds, TSing(ty), STAR)
            case LabelIntro(label, payload, flavor, _):
                lab = self._label(ctx, label)
                row = normalize(kinds, _single(lab, self.infer(ctx, payload)))
                return record_of(row) if flavor is Flavor.PI else variant_of(row)
            case LabelElim(target, label, flavor):
                split = flavor_of(self.infer(ctx, target))
                if split is None or (flavor is not None and split[0] is not flavor):
                    self.fail('selection from a term that is not a record or variant', t)
                entries = _entries(split[1])
                lab = self._label(ctx, label)
                if entries is None or len(entries) != 1 or entries[0][0] != lab:
                    self.fail('selection from a row that is not the singleton of the label', t)
                return entries[0][1]
            case RecordLit(row, fields):
                row_n = normalize(kinds, row)
                if not isinstance(row_n, TRow) or len(row_n.entries) != len(fields):
                    self.fail('record literal does not match its row', t)
                for (_, ty), f in zip(row_n.entries, fields):
                    if self.infer(ctx, f) != ty:
                        self.fail('record field has the wrong type', t)
                return record_of(row_n)
            case VariantLit(row, tag, payload):
                row_n = normalize(kinds, row)
                if not isinstance(row_n, TRow) or not 0 <= tag < len(row_n.entries):
                    self.fail('variant literal does not match its row', t)
                if self.infer(ctx, payload) != row_n.entries[tag][1]:
                    self.fail('variant payload has the wrong type', t)
                return variant_of(row_n)
        self.fail(f'unexpected node {type(t).__name__}', t)

    def _label(self, ctx: Contexts, label: Term) -> Type:
        ty = self.infer(ctx, label)
        if not isinstance(ty, TSing):
            self.fail('label position holds a non-singleton', label)
        return ty.ty


def recheck(env: TypeEnv, term: Term, ctx: Contexts = EMPTY) -> Type:
    return Rechecker(env).infer(ctx, term)
