"""
Printing of core syntax through the surface grammar.

Core trees are first turned back into surface trees (inventing names for
de Bruijn binders) and then rendered. Output for closed values and for
types free of metavariables parses back to the same thing.
"""
from .parser import (
    RESERVED, SApply, SArrow, SBinary, SCompl, SCon, SConst, SEmptyRecord,
    SForall, SLabel, SLam, SLeq, SName, SPlus, SQual, SRow, SSelect, SSing,
    SSingTerm, STApp, STLam, STyApply, STyLam, SVar, SAssign, Surface,
    TermDef, TermSig, TypeDef, TypeSig,
)
from .syntax import (
    App, Comb, ComplL, ComplR, Const, EHole, EVar, EvApp, EvLam, Evidence,
    Flavor, Incl, Kind, LabelElim, LabelIntro, Lam, Leq, LeqMap, LeqRefl,
    Plus, PlusEmptyL, PlusEmptyR, PlusL, PlusMap, PlusR, Predicate, RecordLit,
    Ref, SingVal, TApp, TArrow, TCompl, TForall, TLabel, TLabeled, TLam,
    TMap, TMeta, TMu, TName, TQual, TRow, TSing, TVar, TXi, Term, Trans,
    TyApp, TyLam, Type, Var, VariantLit, zonk_meta,
)

_DEFAULT_TYPE_NAMES = 'abcdefghijklmnopqrstuvwxyz'


def _fresh(hint: str, taken, default: str) -> str:
    base = hint if hint and hint.isidentifier() and hint not in RESERVED else default
    if base not in taken:
        return base
    n = 1
    while f'{base}{n}' in taken:
        n += 1
    return f'{base}{n}'


# ---------------------------------------------------------------------------
# Core to surface
# ---------------------------------------------------------------------------

def type_to_surface(t: Type, names=(), avoid=frozenset()) -> Surface:
    """``names`` gives the names of the free type variables, index 0 first."""
    scope = list(reversed(list(names)))  # innermost last

    def bind(hint: str) -> str:
        return _fresh(hint, set(scope) | avoid | {'L', 'R'}, 't')

    def go(u: Type) -> Surface:
        match u:
            case TVar(ix):
                if ix < len(scope):
                    return SVar(scope[len(scope) - 1 - ix])
                return SVar(f'_free{ix - len(scope)}')
            case TMeta(meta):
                if meta.solution is not None:
                    return go(zonk_meta(u))
                return SVar(f'?{meta.id}')
            case TArrow(dom, cod):
                return SArrow(go(dom), go(cod))
            case TXi(flavor):
                return SCon('Pi' if flavor is Flavor.PI else 'Sigma')
            case TMu():
                return SCon('Mu')
            case TForall() | TLam():
                ctor = SForall if isinstance(u, TForall) else STLam
                cls = type(u)
                binders = []
                pushed = 0
                while isinstance(u, cls):
                    nm = bind(u.name)
                    scope.append(nm)
                    pushed += 1
                    binders.append((nm, u.kind))
                    u = u.body
                body = go(u)
                del scope[len(scope) - pushed:]
                return ctor(tuple(binders), body)
            case TQual():
                preds = []
                while isinstance(u, TQual):
                    preds.append(pred(u.pred))
                    u = u.body
                return SQual(tuple(preds), go(u))
            case TApp(fn, arg):
                return STApp(go(fn), go(arg))
            case TRow(entries):
                return SRow(tuple((go(lab), go(ty)) for lab, ty in entries))
            case TLabel(name):
                return SLabel(name)
            case TSing(ty):
                return SSing(go(ty))
            case TLabeled(label, ty):
                return SRow(((go(label), go(ty)),))
            case TMap(fn, row):
                return STApp(go(fn), go(row))
            case TCompl(a, b):
                return SCompl(go(a), go(b))
            case TName(name):
                return SVar(name)
        raise ValueError(f'cannot print {u!r}')

    def pred(p: Predicate) -> Surface:
        match p:
            case Leq(lhs, rhs):
                return SLeq(go(lhs), go(rhs))
            case Plus(left, right, total):
                return SPlus(go(left), go(right), go(total))
        raise ValueError(f'cannot print {p!r}')

    return go(t)


def pred_to_surface(p: Predicate, names=()) -> Surface:
    wrapped = type_to_surface(TQual(p, TRow(())), names)
    return wrapped.preds[0]


def term_to_surface(t: Term, term_names=(), type_names=(), avoid=frozenset(),
                    erase_types: bool = False) -> Surface:
    """
    Evidence abstractions and applications have no surface form and are dropped.

    With ``erase_types`` type abstractions, type applications and lambda
    annotations are dropped as well; singletons keep their label.
    """
    terms = list(reversed(list(term_names)))
    types = list(reversed(list(type_names)))

    def go(u: Term) -> Surface:
        match u:
            case Var(ix):
                if ix < len(terms):
                    return SName(terms[len(terms) - 1 - ix])
                return SName(f'_free{ix - len(terms)}')
            case Ref(name):
                return SName(name)
            case Const(name):
                return SConst(name)
            case Lam():
                params = []
                pushed = 0
                while isinstance(u, Lam):
                    nm = _fresh(u.name, set(terms) | avoid, 'x')
                    annot = None if u.annot is None or erase_types else type_to_surface(
                        u.annot, list(reversed(types)), avoid)
                    params.append((nm, annot))
                    terms.append(nm)
                    pushed += 1
                    u = u.body
                body = go(u)
                del terms[len(terms) - pushed:]
                return SLam(tuple(params), body)
            case TyLam():
                binders = []
                pushed = 0
                while isinstance(u, TyLam):
                    nm = _fresh(u.name, set(types) | avoid | {'L', 'R'}, 't')
                    binders.append((nm, u.kind))
                    types.append(nm)
                    pushed += 1
                    u = u.body
                body = go(u)
                del types[len(types) - pushed:]
                return body if erase_types else STyLam(tuple(binders), body)
            case EvLam(_, body):
                return go(body)
            case EvApp(term, _):
                return go(term)
            case App(App(fn, left), right) if _infix_head(fn):
                return SBinary(_infix_head(fn), go(left), go(right))
            case App(fn, arg):
                return SApply(go(fn), go(arg))
            case TyApp(term, _) if erase_types:
                return go(term)
            case TyApp(term, ty):
                return STyApply(go(term), ty_(ty))
            case SingVal(ty):
                return SSingTerm(ty_(ty))
            case LabelIntro(label, payload):
                return SAssign(go(label), go(payload))
            case LabelElim(target, label):
                return SSelect(go(target), go(label))
            case RecordLit(row, fields):
                if not fields:
                    return SEmptyRecord()
                parts = [SAssign(SSingTerm(ty_(lab)), go(f))
                         for (lab, _), f in zip(_row_entries(row), fields)]
                result = parts[0]
                for part in parts[1:]:
                    result = SBinary('++', result, part)
                return result
            case VariantLit(row, tag, payload):
                entries = _row_entries(row)
                lab = entries[tag][0] if tag < len(entries) else TLabel(f'_{tag}')
                return SAssign(SSingTerm(ty_(lab)), go(payload))
        raise ValueError(f'cannot print {u!r}')

    def ty_(t: Type) -> Surface:
        return type_to_surface(t, list(reversed(types)), avoid)

    return go(t)


def _infix_head(fn: Term) -> str | None:
    while isinstance(fn, (TyApp, EvApp)):
        fn = fn.term
    if isinstance(fn, Const) and fn.name in ('++', '|'):
        return fn.name
    return None


def _row_entries(row: Type):
    match row:
        case TRow(entries):
            return entries
        case TLabeled(label, ty):
            return ((label, ty),)
    return ()


# ---------------------------------------------------------------------------
# Surface to text
# ---------------------------------------------------------------------------

def _paren(text: str, wrap: bool) -> str:
    return f'({text})' if wrap else text


def _binders(binders) -> str:
    parts = []
    for name, kind in binders:
        parts.append(name if kind is None else f'({name} : {kind})')
    return ' '.join(parts)


def render_type(s: Surface, prec: int = 0) -> str:
    """Precedence levels: 0 type, 1 complement, 2 application, 3 atom."""
    match s:
        case SForall(binders, body):
            return _paren(f'forall {_binders(binders)}. {render_type(body)}', prec > 0)
        case STLam(binders, body):
            return _paren(f'\\ {_binders(binders)}. {render_type(body)}', prec > 0)
        case SQual(preds, body):
            text = ', '.join(render_pred(p) for p in preds)
            return _paren(f'{text} => {render_type(body)}', prec > 0)
        case SArrow(dom, cod):
            return _paren(f'{render_type(dom, 1)} -> {render_type(cod, 0)}', prec > 0)
        case SCompl(a, b):
            return _paren(f'{render_type(a, 1)} - {render_type(b, 2)}', prec > 1)
        case STApp(fn, arg):
            return _paren(f'{render_type(fn, 2)} {render_type(arg, 3)}', prec > 2)
        case SVar(name) | SCon(name):
            return name
        case SLabel(name):
            return f"'{name}"
        case SRow(entries):
            if not entries:
                return '{}'
            inner = ', '.join(f'{render_type(lab, 3)} := {render_type(ty)}' for lab, ty in entries)
            return '{' + inner + '}'
        case SSing(ty):
            return '#' + render_type(ty, 3)
    raise ValueError(f'cannot render {s!r}')


def render_pred(s: Surface) -> str:
    match s:
        case SLeq(lhs, rhs):
            return f'{render_type(lhs, 1)} < {render_type(rhs, 1)}'
        case SPlus(left, right, total):
            return f'{render_type(left, 1)} + {render_type(right, 1)} ~ {render_type(total, 1)}'
    raise ValueError(f'cannot render {s!r}')


def render_term(s: Surface, prec: int = 0) -> str:
    """Precedence levels: 0 assignment, 1 branch, 2 concat, 3 select, 4 application, 5 atom."""
    match s:
        case SLam(params, body):
            ps = ' '.join(nm if annot is None else f'({nm} : {render_type(annot)})'
                          for nm, annot in params)
            return _paren(f'\\ {ps}. {render_term(body)}', prec > 0)
        case STyLam(binders, body):
            return _paren(f'/\\ {_binders(binders)}. {render_term(body)}', prec > 0)
        case SAssign(label, payload):
            return _paren(f'{render_term(label, 1)} := {render_term(payload, 0)}', prec > 0)
        case SBinary('|', left, right):
            return _paren(f'{render_term(left, 1)} | {render_term(right, 2)}', prec > 1)
        case SBinary('++', left, right):
            return _paren(f'{render_term(left, 2)} ++ {render_term(right, 3)}', prec > 2)
        case SSelect(target, label):
            return _paren(f'{render_term(target, 3)} / {render_term(label, 4)}', prec > 3)
        case SApply(fn, arg):
            return _paren(f'{render_term(fn, 4)} {render_term(arg, 5)}', prec > 4)
        case STyApply(term, ty):
            return _paren(f'{render_term(term, 4)} [{render_type(ty)}]', prec > 4)
        case SName(name) | SConst(name):
            return name
        case SSingTerm(ty):
            return '#' + render_type(ty, 3)
        case SEmptyRecord():
            return '{}'
    raise ValueError(f'cannot render {s!r}')


def render_decl(d) -> str:
    match d:
        case TypeSig(name, kind):
            return f'type {name} : {kind}'
        case TypeDef(name, body):
            return f'type {name} = {render_type(body)}'
        case TermSig(name, ty):
            return f'{name} : {render_type(ty)}'
        case TermDef(name, body):
            return f'{name} = {render_term(body)}'
    raise ValueError(f'cannot render {d!r}')


def render_program(decls) -> str:
    return '\n\n'.join(render_decl(d) for d in decls) + ('\n' if decls else '')


# ---------------------------------------------------------------------------
# Shortcuts
# ---------------------------------------------------------------------------

def show_kind(k: Kind) -> str:
    return str(k)


def show_type(t: Type, names=()) -> str:
    return render_type(type_to_surface(t, names))


def show_pred(p: Predicate, names=()) -> str:
    return render_pred(pred_to_surface(p, names))


def show_term(t: Term, term_names=(), type_names=(), avoid=frozenset()) -> str:
    return render_term(term_to_surface(t, term_names, type_names, frozenset(avoid)))


def show_value(t: Term) -> str:
    """A closed value as the evaluator prints it, without type arguments."""
    return render_term(term_to_surface(t, erase_types=True))


def show_evidence(q: Evidence) -> str:
    match q:
        case EVar(ix):
            return f'v{ix}'
        case Incl(targets):
            return f'Incl[{", ".join(map(str, targets))}]'
        case Comb(left, right):
            return f'Comb[{", ".join(map(str, left))}][{", ".join(map(str, right))}]'
        case Trans(first, second):
            return f'trans({show_evidence(first)}, {show_evidence(second)})'
        case LeqRefl():
            return 'refl'
        case LeqMap(inner):
            return f'leqMap({show_evidence(inner)})'
        case PlusL(inner):
            return f'plusL({show_evidence(inner)})'
        case PlusR(inner):
            return f'plusR({show_evidence(inner)})'
        case PlusEmptyL():
            return 'emptyL'
        case PlusEmptyR():
            return 'emptyR'
        case PlusMap(inner):
            return f'plusMap({show_evidence(inner)})'
        case ComplL(inner):
            return f'complL({show_evidence(inner)})'
        case ComplR(inner):
            return f'complR({show_evidence(inner)})'
        case EHole(hole):
            return '?' if hole.value is None else show_evidence(hole.value)
    raise ValueError(f'cannot show {q!r}')
