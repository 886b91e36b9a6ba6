"""
Entailment of row predicates and evidence computation.

Evidence values are index maps: ``Incl`` sends each position of the smaller
row to its position in the larger one, ``Comb`` does the same for both
parts of a combination. Compound evidence built from hypotheses reduces to
these once the rows involved are closed literals.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

from django.conf import settings

from .exceptions import InvariantBreach, UnsolvablePredicate
from .kinding import kind_of
from .normalize import normalize, normalize_pred
from .pretty import show_pred
from .syntax import (
    Comb, ComplL, ComplR, EHole, EVar, Evidence, Incl, IndexMap, KArrow, Kind,
    Leq, LeqMap, LeqRefl, Plus, PlusEmptyL, PlusEmptyR, PlusL, PlusMap, PlusR,
    Predicate, RowKind, TCompl, TMap, TRow, Trans, Type, has_metas, pred_types,
)

logger = logging.getLogger('rome')


@dataclass(frozen=True)
class Fact:
    """A predicate known to hold, with the evidence that proves it."""
    pred: Predicate
    evidence: Evidence


# ---------------------------------------------------------------------------
# Literal rows
# ---------------------------------------------------------------------------

def is_literal(row: Type) -> bool:
    return isinstance(row, TRow)


def literal_inclusion(small: TRow, big: TRow) -> IndexMap | None:
    """Positions of ``small``'s entries inside ``big``, or None if it is not a subrow."""
    index = {lab.name: (i, ty) for i, (lab, ty) in enumerate(big.entries)}
    targets = []
    for lab, ty in small.entries:
        found = index.get(lab.name)
        if found is None or found[1] != ty:
            return None
        targets.append(found[0])
    return tuple(targets)


def literal_combination(left: TRow, right: TRow, total: TRow) -> Comb | None:
    p = literal_inclusion(left, total)
    q = literal_inclusion(right, total)
    if p is None or q is None:
        return None
    if set(p) & set(q) or len(p) + len(q) != len(total.entries):
        return None
    return Comb(p, q)


def dual(p: IndexMap, n: int) -> IndexMap:
    """The positions of ``range(n)`` that ``p`` does not hit, ascending."""
    hit = set(p)
    return tuple(i for i in range(n) if i not in hit)


def pick(p: IndexMap, q: IndexMap, i: int) -> tuple[str, int]:
    """Which part of a combination position ``i`` comes from, and where."""
    if i in p:
        return 'left', p.index(i)
    if i in q:
        return 'right', q.index(i)
    raise InvariantBreach(f'position {i} is covered by neither side of the combination')


# ---------------------------------------------------------------------------
# Solving
# ---------------------------------------------------------------------------

def _map_fns(p: Predicate) -> list[Type]:
    """Closed-over map operators occurring at the top of the rows of ``p``."""
    found: list[Type] = []

    def note(t: Type) -> None:
        match t:
            case TMap(fn, _):
                if fn not in found:
                    found.append(fn)
            case TCompl(a, b):
                note(a)
                note(b)

    match p:
        case Leq(lhs, rhs):
            note(lhs)
            note(rhs)
        case Plus(left, right, total):
            note(left)
            note(right)
            note(total)
    return found


def _row_elem(kinds, p: Predicate) -> Kind | None:
    rows = (p.lhs, p.rhs) if isinstance(p, Leq) else (p.left, p.right, p.total)
    for row in rows:
        if isinstance(row, TRow) and not row.entries:
            continue
        k = kind_of(kinds, row)
        if isinstance(k, RowKind):
            return k.elem
    return None


class Solver:
    """
    Proves predicates from a set of hypotheses.

    Hypotheses are indexed like evidence variables: ``preds[0]`` is ``EVar(0)``.
    """

    def __init__(self, kinds: Sequence[Kind], preds: Sequence[Predicate],
                 depth: int | None = None, names=()):
        self.kinds = tuple(kinds)
        self.depth = depth if depth is not None else settings.ROME_ENTAIL_DEPTH
        self.names = tuple(names)
        self.facts: list[Fact] = []
        for i, p in enumerate(preds):
            self._add_hypothesis(normalize_pred(self.kinds, p), EVar(i))
        self._saturate()

    # facts

    def _add(self, pred: Predicate, evidence: Evidence) -> bool:
        if any(f.pred == pred for f in self.facts):
            return False
        self.facts.append(Fact(pred, evidence))
        return True

    def _compl(self, whole: Type, part: Type) -> Type:
        return normalize(self.kinds, TCompl(whole, part))

    def _add_hypothesis(self, pred: Predicate, v: Evidence) -> None:
        self._add(pred, v)
        match pred:
            case Plus(left, right, total):
                self._add(Leq(left, total), PlusL(v))
                self._add(Leq(right, total), PlusR(v))
            case Leq(lhs, rhs) if not isinstance(lhs, TRow) or lhs.entries:
                rest = self._compl(rhs, lhs)
                self._add(Plus(lhs, rest, rhs), ComplR(v, rhs))
                self._add(Plus(rest, lhs, rhs), ComplL(v, rhs))
                self._add(Leq(rest, rhs), PlusL(ComplL(v, rhs)))

    def _saturate(self) -> None:
        for _ in range(self.depth):
            grown = False
            leqs = [f for f in self.facts if isinstance(f.pred, Leq)]
            for a in leqs:
                for b in leqs:
                    if a is b or a.pred.rhs != b.pred.lhs or a.pred.lhs == b.pred.rhs:
                        continue
                    grown |= self._add(Leq(a.pred.lhs, b.pred.rhs), Trans(a.evidence, b.evidence))
            if not grown:
                break
        logger.debug(f"Entailment context holds {len(self.facts)} facts")

    def _mapped(self, fact: Fact, fn: Type) -> Fact | None:
        fk = kind_of(self.kinds, fn)
        if not isinstance(fk, KArrow) or _row_elem(self.kinds, fact.pred) != fk.dom:
            return None
        kind = RowKind(fk.cod)

        def mapped(row: Type) -> Type:
            return normalize(self.kinds, TMap(fn, row), kind)

        match fact.pred:
            case Leq(lhs, rhs):
                return Fact(Leq(mapped(lhs), mapped(rhs)), LeqMap(fact.evidence, fn))
            case Plus(left, right, total):
                return Fact(Plus(mapped(left), mapped(right), mapped(total)),
                            PlusMap(fact.evidence, fn))
        return None

    def facts_for(self, goal: Predicate) -> list[Fact]:
        """Hypothesis facts plus their images under the maps ``goal`` mentions."""
        result = list(self.facts)
        for fn in _map_fns(goal):
            for fact in self.facts:
                m = self._mapped(fact, fn)
                if m is not None and all(m.pred != f.pred for f in result):
                    result.append(m)
        return result

    def leq_facts(self, rhs: Type) -> list[Fact]:
        """Facts of the form ``x < rhs``."""
        return [f for f in self.facts_for(Leq(rhs, rhs))
                if isinstance(f.pred, Leq) and f.pred.rhs == rhs]

    def plus_facts(self, goal: Predicate) -> list[Fact]:
        return [f for f in self.facts_for(goal) if isinstance(f.pred, Plus)]

    # goals

    def solve(self, goal: Predicate) -> Evidence:
        goal = normalize_pred(self.kinds, goal)
        facts = self.facts_for(goal)
        evidence = self._solve(goal, facts, self.depth)
        if evidence is None:
            raise UnsolvablePredicate(
                f"cannot prove {show_pred(goal, self.names)}",
                goal, [f.pred for f in facts])
        logger.debug(f"Proved {show_pred(goal, self.names)}")
        return evidence

    def try_solve(self, goal: Predicate) -> Evidence | None:
        goal = normalize_pred(self.kinds, goal)
        return self._solve(goal, self.facts_for(goal), self.depth)

    def _lookup(self, goal: Predicate, facts: list[Fact]) -> Evidence | None:
        for f in facts:
            if f.pred == goal:
                return f.evidence
        return None

    def _solve(self, goal: Predicate, facts: list[Fact], budget: int) -> Evidence | None:
        match goal:
            case Leq(lhs, rhs):
                return self._solve_leq(lhs, rhs, facts, budget)
            case Plus(left, right, total):
                return self._solve_plus(left, right, total, facts, budget)
        raise InvariantBreach(f'unknown predicate {goal!r}')

    def _solve_leq(self, lhs: Type, rhs: Type, facts, budget: int) -> Evidence | None:
        if lhs == rhs:
            return LeqRefl(lhs)
        if isinstance(lhs, TRow) and isinstance(rhs, TRow):
            p = literal_inclusion(lhs, rhs)
            return None if p is None else Incl(p)
        if isinstance(lhs, TRow) and not lhs.entries:
            return PlusL(PlusEmptyL(rhs))
        found = self._lookup(Leq(lhs, rhs), facts)
        if found is not None:
            return found
        if isinstance(lhs, TMap) and isinstance(rhs, TMap) and lhs.fn == rhs.fn:
            inner = self._solve_leq(lhs.row, rhs.row, facts, budget)
            if inner is not None:
                return LeqMap(inner, lhs.fn)
        if isinstance(lhs, TCompl) and lhs.minuend == rhs:
            inner = self._solve_leq(lhs.subtrahend, rhs, facts, budget)
            if inner is not None:
                return PlusL(ComplL(inner, rhs))
        if budget <= 0:
            return None
        for f in facts:
            if not isinstance(f.pred, Leq) or f.pred.rhs != rhs or f.pred.lhs == rhs:
                continue
            mid = f.pred.lhs
            if mid == lhs:
                continue
            inner = self._solve_leq(lhs, mid, facts, budget - 1)
            if inner is not None:
                return Trans(inner, f.evidence)
        return None

    def _solve_plus(self, left: Type, right: Type, total: Type, facts,
                    budget: int) -> Evidence | None:
        if all(isinstance(r, TRow) for r in (left, right, total)):
            return literal_combination(left, right, total)
        if isinstance(left, TRow) and not left.entries and right == total:
            return PlusEmptyL(total)
        if isinstance(right, TRow) and not right.entries and left == total:
            return PlusEmptyR(total)
        found = self._lookup(Plus(left, right, total), facts)
        if found is not None:
            return found
        if all(isinstance(r, TMap) for r in (left, right, total)) \
                and left.fn == right.fn == total.fn:
            inner = self._solve_plus(left.row, right.row, total.row, facts, budget)
            if inner is not None:
                return PlusMap(inner, total.fn)
        if right == self._compl(total, left):
            inner = self._solve_leq(left, total, facts, budget)
            if inner is not None:
                return ComplR(inner, total)
        if left == self._compl(total, right):
            inner = self._solve_leq(right, total, facts, budget)
            if inner is not None:
                return ComplL(inner, total)
        return None


@lru_cache(maxsize=512)
def _shared_solver(kinds: tuple[Kind, ...], preds: tuple[Predicate, ...], depth: int) -> Solver:
    return Solver(kinds, preds, depth)


def solver_for(kinds: Sequence[Kind], preds: Sequence[Predicate], depth: int | None = None,
               names=()) -> Solver:
    """A solver for the given hypotheses, shared while the hypotheses mention no metavariables."""
    if depth is None:
        depth = settings.ROME_ENTAIL_DEPTH
    if any(has_metas(t) for p in preds for t in pred_types(p)):
        return Solver(kinds, preds, depth, names)
    solver = _shared_solver(tuple(kinds), tuple(preds), depth)
    solver.names = tuple(names)
    return solver


def entails(kinds: Sequence[Kind], preds: Sequence[Predicate], goal: Predicate,
            depth: int | None = None, names=()) -> Evidence:
    """Evidence for ``goal`` under ``preds``; raises UnsolvablePredicate."""
    return solver_for(kinds, preds, depth, names).solve(goal)


# ---------------------------------------------------------------------------
# Evidence reduction
# ---------------------------------------------------------------------------

def _size(kinds, row: Type) -> int:
    n = normalize(kinds, row)
    if not isinstance(n, TRow):
        raise InvariantBreach(f'evidence over an open row {n!r}')
    return len(n.entries)


def evidence_step(q: Evidence, kinds: Sequence[Kind] = ()) -> Evidence:
    """One reduction step on closed evidence."""
    match q:
        case Incl() | Comb():
            raise InvariantBreach('evidence is already a value')
        case EVar(ix):
            raise InvariantBreach(f'evidence variable {ix} is free at run time')
        case EHole(hole):
            if hole.value is None:
                raise InvariantBreach('unsolved evidence hole at run time')
            return hole.value
        case LeqRefl(row):
            return Incl(tuple(range(_size(kinds, row))))
        case Trans(first, second):
            if not isinstance(first, Incl):
                return Trans(evidence_step(first, kinds), second)
            if not isinstance(second, Incl):
                return Trans(first, evidence_step(second, kinds))
            return Incl(tuple(second.targets[i] for i in first.targets))
        case LeqMap(inner, fn) | PlusMap(inner, fn):
            if not isinstance(inner, (Incl, Comb)):
                return type(q)(evidence_step(inner, kinds), fn)
            return inner
        case PlusL(inner) | PlusR(inner):
            if not isinstance(inner, Comb):
                return type(q)(evidence_step(inner, kinds))
            return Incl(inner.left if isinstance(q, PlusL) else inner.right)
        case PlusEmptyL(row):
            return Comb((), tuple(range(_size(kinds, row))))
        case PlusEmptyR(row):
            return Comb(tuple(range(_size(kinds, row))), ())
        case ComplL(inner, row) | ComplR(inner, row):
            if not isinstance(inner, Incl):
                return type(q)(evidence_step(inner, kinds), row)
            rest = dual(inner.targets, _size(kinds, row))
            if isinstance(q, ComplL):
                return Comb(rest, inner.targets)
            return Comb(inner.targets, rest)
    raise InvariantBreach(f'unknown evidence node {q!r}')


def evidence_normalize(q: Evidence, kinds: Sequence[Kind] = ()) -> Evidence:
    while not isinstance(q, (Incl, Comb)):
        q = evidence_step(q, kinds)
    return q


# ---------------------------------------------------------------------------
# Checking evidence against a predicate
# ---------------------------------------------------------------------------

def _increasing(p: IndexMap, n: int) -> bool:
    return all(0 <= i < n for i in p) and all(a < b for a, b in zip(p, p[1:]))


def evidence_predicate(kinds: Sequence[Kind], preds: Sequence[Predicate],
                       q: Evidence) -> Predicate | None:
    """The predicate compound evidence proves, or None for index maps, which prove many."""
    kinds = tuple(kinds)
    match q:
        case EVar(ix):
            if ix >= len(preds):
                raise InvariantBreach(f'evidence variable {ix} is unbound')
            return normalize_pred(kinds, preds[ix])
        case EHole(hole):
            if hole.value is None:
                raise InvariantBreach('unsolved evidence hole')
            return evidence_predicate(kinds, preds, hole.value)
        case Incl() | Comb():
            return None
        case LeqRefl(row):
            n = normalize(kinds, row)
            return Leq(n, n)
        case Trans(first, second):
            a = _proved(kinds, preds, first, Leq)
            b = _proved(kinds, preds, second, Leq)
            if a is None or b is None or a.rhs != b.lhs:
                return None
            return Leq(a.lhs, b.rhs)
        case LeqMap(inner, fn):
            p = _proved(kinds, preds, inner, Leq)
            if p is None:
                return None
            return normalize_pred(kinds, Leq(TMap(fn, p.lhs), TMap(fn, p.rhs)))
        case PlusMap(inner, fn):
            p = _proved(kinds, preds, inner, Plus)
            if p is None:
                return None
            return normalize_pred(kinds, Plus(TMap(fn, p.left), TMap(fn, p.right),
                                              TMap(fn, p.total)))
        case PlusL(inner) | PlusR(inner):
            p = _proved(kinds, preds, inner, Plus)
            if p is None:
                return None
            return Leq(p.left if isinstance(q, PlusL) else p.right, p.total)
        case PlusEmptyL(row):
            n = normalize(kinds, row)
            return Plus(TRow(()), n, n)
        case PlusEmptyR(row):
            n = normalize(kinds, row)
            return Plus(n, TRow(()), n)
        case ComplL(inner, row) | ComplR(inner, row):
            p = _proved(kinds, preds, inner, Leq)
            whole = normalize(kinds, row)
            if p is None or p.rhs != whole:
                return None
            rest = normalize(kinds, TCompl(whole, p.lhs))
            if isinstance(q, ComplL):
                return Plus(rest, p.lhs, whole)
            return Plus(p.lhs, rest, whole)
    raise InvariantBreach(f'unknown evidence node {q!r}')


def _proved(kinds, preds, q: Evidence, shape) -> Predicate | None:
    p = evidence_predicate(kinds, preds, q)
    return p if isinstance(p, shape) else None


def check_evidence(kinds: Sequence[Kind], preds: Sequence[Predicate], q: Evidence,
                   goal: Predicate) -> bool:
    """Whether ``q`` is evidence for ``goal`` in the given context."""
    kinds = tuple(kinds)
    goal = normalize_pred(kinds, goal)
    match q:
        case Incl(targets):
            if not isinstance(goal, Leq) or not (is_literal(goal.lhs) and is_literal(goal.rhs)):
                return False
            return literal_inclusion(goal.lhs, goal.rhs) == targets \
                and _increasing(targets, len(goal.rhs.entries))
        case Comb():
            if not isinstance(goal, Plus) or not all(
                    is_literal(r) for r in (goal.left, goal.right, goal.total)):
                return False
            return literal_combination(goal.left, goal.right, goal.total) == q
    return evidence_predicate(kinds, preds, q) == goal

