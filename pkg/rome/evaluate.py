"""
Small-step evaluation of elaborated terms.

Ordinary application is call by name. Arguments of the built-in constants
are evaluated left to right before the constant fires; their type
arguments are normalized and their evidence reduced to index maps first.
Types are kept at run time: ``syn`` needs its row argument to know how
many fields to build.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

from django.conf import settings

from .entail import evidence_step, pick
from .exceptions import InvariantBreach, OutOfFuel, StuckTerm
from .normalize import normalize
from .syntax import (
    App, Comb, Const, EvApp, EvLam, Evidence, Flavor, Incl, LabelElim,
    LabelIntro, Lam, RecordLit, Ref, SingVal, TLabel, TMap, TRow, Term, TyApp,
    TyLam, Type, VariantLit, is_evidence_value, subst_term, subst_term_evidence,
    subst_term_type, term_apply, term_spine,
)
from .typecheck import constant_arity

logger = logging.getLogger('rome')

Tracer = Callable[[int, str, Term], None]


@dataclass(frozen=True)
class Step:
    term: Term
    rule: str
    redex: Term


def _arity(name: str) -> int:
    return sum(constant_arity(name))


def is_value(t: Term) -> bool:
    match t:
        case Lam() | TyLam() | EvLam() | SingVal():
            return True
        case RecordLit(_, fields):
            return all(is_value(f) for f in fields)
        case VariantLit(_, _, payload):
            return is_value(payload)
        case Const() | App() | TyApp() | EvApp():
            head, items = term_spine(t)
            if not isinstance(head, Const):
                return False
            n = _arity(head.name)
            if len(items) > n or (len(items) == n and head.name != 'in'):
                return False
            return all(_item_is_value(tag, arg) for tag, arg in items)
    return False


def _item_is_value(tag: str, arg) -> bool:
    if tag == 'term':
        return is_value(arg)
    if tag == 'ev':
        return is_evidence_value(arg)
    return _is_normal(arg)


@lru_cache(maxsize=4096)
def _is_normal(ty: Type) -> bool:
    return normalize((), ty) == ty


def _unroll(t: Term) -> Term | None:
    """The payload of ``in [f] V``, or None."""
    head, items = term_spine(t)
    if isinstance(head, Const) and head.name == 'in' and len(items) == 2:
        return items[1][1]
    return None


class Evaluator:
    """
    Steps closed terms.

    ``definitions`` maps top-level names to their elaborated terms; a
    reference unfolds to its definition.
    """

    def __init__(self, definitions: Mapping[str, Term]):
        self.definitions = definitions

    def step(self, t: Term) -> Step | None:
        """One reduction step, or None when ``t`` is a value."""
        if is_value(t):
            return None
        return self._step(t)

    def _step(self, t: Term) -> Step:
        match t:
            case Ref(name):
                if name not in self.definitions:
                    raise StuckTerm(f"no definition for '{name}'")
                return Step(self.definitions[name], 'δdef', t)
            case LabelIntro(label, payload, flavor, ty):
                if not is_value(label):
                    s = self._step(label)
                    return Step(LabelIntro(s.term, payload, flavor, ty), s.rule, s.redex)
                if not is_value(payload):
                    s = self._step(payload)
                    return Step(LabelIntro(label, s.term, flavor, ty), s.rule, s.redex)
                row = TRow(((self._label(label), normalize((), ty)),))
                if flavor is Flavor.PI:
                    return Step(RecordLit(row, (payload,)), 'δ▷Π', t)
                return Step(VariantLit(row, 0, payload), 'δ▷Σ', t)
            case LabelElim(target, label, flavor):
                if not is_value(target):
                    s = self._step(target)
                    return Step(LabelElim(s.term, label, flavor), s.rule, s.redex)
                if not is_value(label):
                    s = self._step(label)
                    return Step(LabelElim(target, s.term, flavor), s.rule, s.redex)
                match target:
                    case RecordLit(_, (field,)):
                        return Step(field, 'δ/Π', t)
                    case VariantLit(_, 0, payload):
                        return Step(payload, 'δ/Σ', t)
                raise StuckTerm('selection from a value that is not a singleton')
            case RecordLit(row, fields):
                for i, f in enumerate(fields):
                    if not is_value(f):
                        s = self._step(f)
                        return Step(RecordLit(row, fields[:i] + (s.term,) + fields[i + 1:]),
                                    s.rule, s.redex)
            case VariantLit(row, tag, payload):
                s = self._step(payload)
                return Step(VariantLit(row, tag, s.term), s.rule, s.redex)
            case App() | TyApp() | EvApp():
                head, _ = term_spine(t)
                if isinstance(head, Const):
                    return self._step_constant(t)
                return self._step_application(t)
        raise StuckTerm(f'no rule applies to {type(t).__name__}')

    def _step_application(self, t: Term) -> Step:
        match t:
            case App(Lam(_, body), arg):
                return Step(subst_term(body, arg, closed=True), 'β→', t)
            case TyApp(TyLam(_, body), ty):
                return Step(subst_term_type(body, ty), 'β∀', t)
            case EvApp(EvLam(_, body), evidence):
                return Step(subst_term_evidence(body, evidence), 'β⇒', t)
            case App(fn, arg):
                s = self._step(fn)
                return Step(App(s.term, arg), s.rule, s.redex)
            case TyApp(fn, ty):
                s = self._step(fn)
                return Step(TyApp(s.term, ty), s.rule, s.redex)
            case EvApp(fn, evidence):
                s = self._step(fn)
                return Step(EvApp(s.term, evidence), s.rule, s.redex)
        raise StuckTerm('application of a non-function value')

    def _step_constant(self, t: Term) -> Step:
        head, items = term_spine(t)
        n = _arity(head.name)
        for i, (tag, arg) in enumerate(items[:n]):
            if tag == 'type':
                if not _is_normal(arg):
                    nf = normalize((), arg)
                    return Step(self._replace(head, items, i, nf), 'ξT', arg)
            elif tag == 'ev':
                if not is_evidence_value(arg):
                    return Step(self._replace(head, items, i, evidence_step(arg)), 'ξQ', t)
            elif not is_value(arg):
                s = self._step(arg)
                return Step(self._replace(head, items, i, s.term), s.rule, s.redex)
        if len(items) < n:
            raise StuckTerm(f"partial application of '{head.name}' is not a value")
        prefix = term_apply(head, items[:n])
        result, rule = self._delta(head, items[:n], prefix)
        return Step(term_apply(result, items[n:]), rule, prefix)

    @staticmethod
    def _replace(head: Const, items: list, i: int, value) -> Term:
        items = list(items)
        items[i] = (items[i][0], value)
        return term_apply(head, items)

    @staticmethod
    def _label(label: Term) -> Type:
        if isinstance(label, SingVal):
            lab = normalize((), label.ty)
            if isinstance(lab, TLabel):
                return lab
        raise StuckTerm('label position does not hold a label singleton')

    def _delta(self, head: Const, items: list, prefix: Term) -> tuple[Term, str]:
        types = [a for tag, a in items if tag == 'type']
        evs: list[Evidence] = [a for tag, a in items if tag == 'ev']
        args = [a for tag, a in items if tag == 'term']
        match head.name:
            case 'prj':
                y, _ = types
                (record,) = args
                p = _incl(evs[0])
                if len(_row(y).entries) != len(p):
                    raise InvariantBreach('projection evidence does not fit its row')
                return RecordLit(y, tuple(_fields(record)[j] for j in p)), 'δprj'
            case '++':
                _, _, z = types
                left, right = args
                ev = _comb(evs[0])
                lf, rf = _fields(left), _fields(right)
                fields = []
                for k in range(len(_row(z).entries)):
                    side, j = pick(ev.left, ev.right, k)
                    fields.append(lf[j] if side == 'left' else rf[j])
                if len(fields) != len(lf) + len(rf):
                    raise InvariantBreach('concatenation evidence does not fit its rows')
                return RecordLit(z, tuple(fields)), 'δ++'
            case 'inj':
                _, z = types
                (variant,) = args
                p = _incl(evs[0])
                tag, payload = _variant(variant)
                return VariantLit(z, p[tag], payload), 'δinj'
            case '|':
                x, y, _, _ = types
                f, g, variant = args
                ev = _comb(evs[0])
                tag, payload = _variant(variant)
                side, j = pick(ev.left, ev.right, tag)
                if side == 'left':
                    return App(f, VariantLit(x, j, payload)), 'δ|'
                return App(g, VariantLit(y, j, payload)), 'δ|'
            case 'out':
                payload = _unroll(args[0])
                if payload is None:
                    raise StuckTerm('out applied to a value not built by in')
                return payload, 'δμ'
            case 'fix':
                return App(args[0], prefix), 'δfix'
            case 'syn':
                fn, z = types
                _, body = args
                row = _row(z)
                annot = normalize((), TMap(fn, z))
                fields = tuple(self._instance(body, i, lab, ty) for i, (lab, ty) in enumerate(row.entries))
                return RecordLit(annot, fields), 'δsyn'
            case 'ana':
                _, z, _ = types
                _, body, variant = args
                tag, payload = _variant(variant)
                lab, ty = _row(z).entries[tag]
                return App(self._instance(body, tag, lab, ty), payload), 'δana'
        raise StuckTerm(f"'{head.name}' has no reduction")

    @staticmethod
    def _instance(body: Term, i: int, lab: Type, ty: Type) -> Term:
        """The generic body at entry ``i``: its label, type, inclusion and singleton."""
        return App(EvApp(TyApp(TyApp(body, lab), ty), Incl((i,))), SingVal(lab))

    def run(self, t: Term, fuel: int | None = None, trace: Tracer | None = None) -> Term:
        """
        Evaluate ``t`` to a value.

        Args:
            t: a closed elaborated term
            fuel: maximum number of steps, ROME_FUEL when not given
            trace: called with the step number, rule and redex of every step

        Returns:
            The value ``t`` reduces to
        """
        if fuel is None:
            fuel = settings.ROME_FUEL
        steps = 0
        while True:
            s = self.step(t)
            if s is None:
                logger.debug(f"Reached a value after {steps} steps")
                return t
            if steps >= fuel:
                raise OutOfFuel(f'evaluation ran out of fuel after {steps} steps', steps, t)
            steps += 1
            if trace is not None:
                trace(steps, s.rule, s.redex)
            t = s.term


def _row(t: Type) -> TRow:
    if not isinstance(t, TRow):
        raise StuckTerm('row argument is not a literal at run time')
    return t


def _incl(q: Evidence) -> tuple[int, ...]:
    if not isinstance(q, Incl):
        raise InvariantBreach('expected inclusion evidence')
    return q.targets


def _comb(q: Evidence) -> Comb:
    if not isinstance(q, Comb):
        raise InvariantBreach('expected combination evidence')
    return q


def _fields(t: Term) -> tuple[Term, ...]:
    if not isinstance(t, RecordLit):
        raise StuckTerm('expected a record value')
    return t.fields


def _variant(t: Term) -> tuple[int, Term]:
    if not isinstance(t, VariantLit):
        raise StuckTerm('expected a variant value')
    return t.tag, t.payload


def eval_to_value(definitions: Mapping[str, Term], t: Term, fuel: int | None = None,
                  trace: Tracer | None = None) -> Term:
    return Evaluator(definitions).run(t, fuel, trace)
