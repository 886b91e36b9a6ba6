"""Seeded generators of well-kinded types and row literals for property tests."""
import random

from rome.syntax import (
    Flavor, KArrow, LABEL, Kind, Leq, RowKind, STAR, TApp, TArrow, TCompl,
    TForall, TLabel, TLabeled, TLam, TMap, TMu, TQual, TRow, TSing, TVar, TXi,
    Type, row_insert_sorted,
)

ARROW = KArrow(STAR, STAR)
ROW = RowKind(STAR)
OP_ROW = RowKind(ARROW)
LABELS = ('Zero', 'a', 'b', 'c', 'x', 'y')

# Free variables of every generated type, index 0 first.
CONTEXT = (STAR, ROW, ARROW, LABEL)

UNIT = TApp(TXi(Flavor.PI, STAR), TRow(()))


class TypeGenerator:
    """
    Builds random elaborated types of a requested kind.

    Every type is well kinded in the context it is generated for, so no
    shifting is needed when a binder extends the context.
    """

    def __init__(self, seed: int, max_depth: int = 6):
        self.rng = random.Random(seed)
        self.max_depth = max_depth

    def type(self, kinds=CONTEXT, kind: Kind = STAR) -> Type:
        return self._gen(tuple(kinds), kind, self.max_depth)

    def _vars(self, kinds, kind):
        return [TVar(ix) for ix, k in enumerate(kinds) if k == kind]

    def _gen(self, kinds, kind, depth) -> Type:
        if kind == STAR:
            return self._star(kinds, depth)
        if kind == ARROW:
            return self._arrow(kinds, depth)
        if kind == ROW:
            return self._row(kinds, depth)
        if kind == OP_ROW:
            return self._literal(kinds, ARROW, depth)
        if kind == LABEL:
            options = self._vars(kinds, LABEL)
            if options and self.rng.random() < 0.4:
                return self.rng.choice(options)
            return TLabel(self.rng.choice(LABELS))
        raise ValueError(f'no generator for kind {kind}')

    def _star(self, kinds, depth) -> Type:
        leaves = self._vars(kinds, STAR) + [UNIT]
        if depth <= 0:
            return self.rng.choice(leaves)
        d = depth - 1
        choice = self.rng.randrange(10)
        if choice == 0:
            return self.rng.choice(leaves)
        if choice == 1:
            return TArrow(self._star(kinds, d), self._star(kinds, d))
        if choice == 2:
            return TApp(TXi(self._flavor(), STAR), self._row(kinds, d))
        if choice == 3:
            return TApp(self._arrow(kinds, d), self._star(kinds, d))
        if choice == 4:
            k = self.rng.choice((STAR, ROW, ARROW, LABEL))
            return TForall(k, self._star((k,) + kinds, d))
        if choice == 5:
            return TSing(self._gen(kinds, LABEL, d))
        if choice == 6:
            return TApp(TMu(), self._arrow(kinds, d))
        if choice == 7:
            lifted = TApp(TXi(self._flavor(), ARROW), self._literal(kinds, ARROW, d))
            return TApp(lifted, self._star(kinds, d))
        if choice == 8:
            return TQual(Leq(self._row(kinds, d), self._row(kinds, d)), self._star(kinds, d))
        return TApp(TLam(STAR, self._star((STAR,) + kinds, d)), self._star(kinds, d))

    def _arrow(self, kinds, depth) -> Type:
        options = self._vars(kinds, ARROW)
        if depth <= 0:
            return self.rng.choice(options) if options else TLam(STAR, TVar(0))
        d = depth - 1
        choice = self.rng.randrange(4)
        if choice == 0 and options:
            return self.rng.choice(options)
        if choice == 1:
            return TApp(TXi(self._flavor(), ARROW), self._literal(kinds, ARROW, d))
        return TLam(STAR, self._star((STAR,) + kinds, d))

    def _row(self, kinds, depth) -> Type:
        options = self._vars(kinds, ROW)
        if depth <= 0:
            return self.rng.choice(options) if options else TRow(())
        d = depth - 1
        choice = self.rng.randrange(7)
        if choice == 0 and options:
            return self.rng.choice(options)
        if choice == 1:
            return TMap(self._arrow(kinds, d), self._row(kinds, d))
        if choice == 2:
            return TCompl(self._row(kinds, d), self._row(kinds, d))
        if choice == 3:
            return TLabeled(self._gen(kinds, LABEL, d), self._star(kinds, d))
        if choice == 4:
            return TApp(TLam(STAR, self._row((STAR,) + kinds, d)), self._star(kinds, d))
        return self._literal(kinds, STAR, d)

    def _literal(self, kinds, elem, depth) -> TRow:
        entries = ()
        for name in self.rng.sample(LABELS, self.rng.randint(0, 3)):
            entries = row_insert_sorted(entries, TLabel(name), self._gen(kinds, elem, depth))
        return TRow(entries)

    def _flavor(self) -> Flavor:
        return self.rng.choice((Flavor.PI, Flavor.SIGMA))


def random_literal(rng: random.Random, payloads, size: int | None = None) -> TRow:
    """A sorted row literal over ``LABELS`` with payloads drawn from ``payloads``."""
    size = rng.randint(0, len(LABELS)) if size is None else size
    entries = ()
    for name in rng.sample(LABELS, size):
        entries = row_insert_sorted(entries, TLabel(name), rng.choice(payloads))
    return TRow(entries)
