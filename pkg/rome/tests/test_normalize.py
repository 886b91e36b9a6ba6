"""Tests for type normalization and row complement."""
import random

from django.test import SimpleTestCase

from rome.exceptions import InvariantBreach
from rome.kinding import kind_of
from rome.normalize import embed, is_normal, normalize, subtract, type_equal
from rome.syntax import (
    Flavor, KArrow, LABEL, RowKind, STAR, TApp, TArrow, TCompl, TForall, TLabel,
    TLabeled, TLam, TMap, TName, TRow, TVar, TXi, row_insert_sorted, shift_type,
    subst_type,
)

from .generators import ARROW, CONTEXT, LABELS, ROW, UNIT, TypeGenerator, random_literal

FN = TArrow(UNIT, UNIT)


def _row(**entries):
    return TRow(tuple((TLabel(name), ty) for name, ty in sorted(entries.items())))


class NormalFormPropertyTests(SimpleTestCase):
    """Test normalization over generated types."""

    def setUp(self):
        self.generator = TypeGenerator(seed=20240901)

    def _samples(self, kind, count):
        for _ in range(count):
            yield self.generator.type(CONTEXT, kind)

    def test_idempotent_on_types(self):
        """Normalizing a normal form changes nothing."""
        for t in self._samples(STAR, 700):
            n = normalize(CONTEXT, t)
            self.assertEqual(normalize(CONTEXT, embed(n)), n, t)
            self.assertEqual(kind_of(CONTEXT, n), STAR)

    def test_idempotent_on_rows(self):
        """Rows normalize to rows that are already normal."""
        for t in self._samples(ROW, 200):
            n = normalize(CONTEXT, t, ROW)
            self.assertEqual(normalize(CONTEXT, n, ROW), n, t)

    def test_idempotent_on_operators(self):
        """Operators normalize eta-long and stay put."""
        for t in self._samples(ARROW, 150):
            n = normalize(CONTEXT, t)
            self.assertIsInstance(n, TLam)
            self.assertTrue(is_normal(CONTEXT, n))

    def test_type_equal_is_reflexive_through_normal_forms(self):
        """A type and its normal form are equal."""
        for t in self._samples(STAR, 100):
            self.assertTrue(type_equal(CONTEXT, t, normalize(CONTEXT, t)))


class NormalizationRuleTests(SimpleTestCase):
    """Test each reduction performed by the normalizer."""

    def test_beta(self):
        """Type-level application of a lambda substitutes."""
        t = TApp(TLam(STAR, TArrow(TVar(0), TVar(0))), UNIT)
        self.assertEqual(normalize((), t), FN)

    def test_beta_under_binder(self):
        """Redexes under a quantifier are reduced."""
        t = TForall(STAR, TApp(TLam(STAR, TVar(0)), TVar(0)))
        self.assertEqual(normalize((), t), TForall(STAR, TVar(0)))

    def test_eta_long_variable(self):
        """A variable of arrow kind is read back eta-expanded."""
        self.assertEqual(normalize((ARROW,), TVar(0)), TLam(STAR, TApp(TVar(1), TVar(0))))

    def test_map_identity(self):
        """Mapping the identity over a neutral row is the row."""
        t = TMap(TLam(STAR, TVar(0)), TVar(0))
        self.assertEqual(normalize((ROW,), t), TVar(0))

    def test_map_fusion(self):
        """Two maps over a neutral row fuse into one."""
        kinds = (ARROW, ROW)
        t = TMap(TVar(0), TMap(TVar(0), TVar(1)))
        expected = TMap(TLam(STAR, TApp(TVar(1), TApp(TVar(1), TVar(0)))), TVar(1))
        self.assertEqual(normalize(kinds, t), expected)

    def test_map_over_literal(self):
        """Mapping over a literal applies the operator to every entry."""
        t = TMap(TLam(STAR, TArrow(TVar(0), TVar(0))), _row(a=UNIT, b=FN))
        self.assertEqual(normalize((), t), _row(a=FN, b=TArrow(FN, FN)))

    def test_record_lifts_over_application(self):
        """A record of operators applied to a type is a record of applications."""
        ops = _row(a=TLam(STAR, TArrow(TVar(0), TVar(0))), b=TLam(STAR, TVar(0)))
        t = TApp(TApp(TXi(Flavor.PI, ARROW), ops), UNIT)
        self.assertEqual(normalize((), t), TApp(TXi(Flavor.PI, STAR), _row(a=FN, b=UNIT)))

    def test_variant_lifts_at_row_kind(self):
        """Sigma at a row kind maps over the row."""
        row_of_rows = _row(a=TRow(()))
        t = TApp(TXi(Flavor.SIGMA, ROW), row_of_rows)
        self.assertEqual(normalize((), t, RowKind(STAR)),
                         _row(a=TApp(TXi(Flavor.SIGMA, STAR), TRow(()))))

    def test_labeled_singleton(self):
        """A row with a literal label becomes a one-entry literal."""
        t = TLabeled(TLabel('a'), UNIT)
        self.assertEqual(normalize((), t), _row(a=UNIT))

    def test_labeled_with_variable_stays(self):
        """A row under a label variable stays labeled."""
        t = TLabeled(TVar(0), UNIT)
        self.assertEqual(normalize((LABEL,), t), t)

    def test_literal_complement(self):
        """The complement of two literals is computed."""
        t = TCompl(_row(a=UNIT, b=FN), _row(a=UNIT))
        self.assertEqual(normalize((), t), _row(b=FN))

    def test_complement_needs_same_type(self):
        """An entry is removed only when label and type both match."""
        t = TCompl(_row(a=UNIT), _row(a=FN))
        self.assertEqual(normalize((), t), _row(a=UNIT))

    def test_neutral_complement_stays(self):
        """A complement involving a variable is left inert."""
        t = TCompl(TVar(0), _row(a=UNIT))
        self.assertEqual(normalize((ROW,), t), t)

    def test_map_distributes_over_complement(self):
        """Mapping over an inert complement maps both sides."""
        f = TLam(STAR, TArrow(TVar(0), TVar(0)))
        t = TMap(f, TCompl(TVar(0), _row(a=UNIT)))
        self.assertEqual(normalize((ROW,), t), TCompl(TMap(f, TVar(0)), _row(a=FN)))

    def test_unexpanded_synonym(self):
        """Synonyms must be expanded before normalization."""
        with self.assertRaises(InvariantBreach):
            normalize((), TName('Nat'), STAR)

    def test_lifted_operator_row(self):
        """A record at arrow kind reads back as an eta-long operator."""
        ops = _row(a=TLam(STAR, TVar(0)))
        n = normalize((), TApp(TXi(Flavor.PI, ARROW), ops))
        self.assertEqual(n, TLam(STAR, TApp(TXi(Flavor.PI, STAR), _row(a=TVar(0)))))
        self.assertEqual(kind_of((), n), KArrow(STAR, STAR))


class SubtractTests(SimpleTestCase):
    """Test relative complement of literal rows against a set difference."""

    def setUp(self):
        self.rng = random.Random(7)
        self.payloads = (UNIT, FN, TArrow(FN, UNIT))

    def _oracle(self, left, right):
        taken = {(lab.name, ty) for lab, ty in right.entries}
        return TRow(tuple((lab, ty) for lab, ty in left.entries if (lab.name, ty) not in taken))

    def test_matches_set_difference(self):
        """subtract keeps exactly the entries missing from the subtrahend."""
        for _ in range(600):
            left = random_literal(self.rng, self.payloads)
            right = random_literal(self.rng, self.payloads)
            self.assertEqual(subtract(left, right), self._oracle(left, right))

    def test_result_is_sorted(self):
        """The complement of sorted rows is sorted."""
        for _ in range(100):
            left = random_literal(self.rng, self.payloads)
            result = subtract(left, random_literal(self.rng, self.payloads))
            names = [lab.name.encode() for lab, _ in result.entries]
            self.assertEqual(names, sorted(names))

    def test_self_complement_is_empty(self):
        """A row minus itself is empty."""
        row = random_literal(self.rng, self.payloads, size=6)
        self.assertEqual(subtract(row, row), TRow(()))


class RuleSamplingTests(SimpleTestCase):
    """Test generated instances of each equivalence: both sides share a normal form."""

    SAMPLES = 150

    def setUp(self):
        self.generator = TypeGenerator(seed=1187, max_depth=4)
        self.rng = random.Random(1187)

    def _gen(self, kind, kinds=CONTEXT):
        return self.generator.type(kinds, kind)

    def _literal(self, elem, size=None):
        entries = ()
        size = self.rng.randint(0, 4) if size is None else size
        for name in self.rng.sample(LABELS, size):
            entries = row_insert_sorted(entries, TLabel(name), self._gen(elem))
        return TRow(entries)

    def _same(self, lhs, rhs, kind):
        self.assertEqual(normalize(CONTEXT, lhs, kind), normalize(CONTEXT, rhs, kind), (lhs, rhs))

    def test_beta(self):
        for n in range(self.SAMPLES):
            kind = (STAR, ROW)[n % 2]
            bound = (STAR, ROW, ARROW, LABEL)[n % 4]
            body = self._gen(kind, (bound,) + CONTEXT)
            arg = self._gen(bound)
            self._same(TApp(TLam(bound, body), arg), subst_type(body, arg), kind)

    def test_eta(self):
        for _ in range(self.SAMPLES):
            f = self._gen(ARROW)
            self._same(TLam(STAR, TApp(shift_type(f, 0, 1), TVar(0))), f, ARROW)

    def test_map_identity(self):
        for _ in range(self.SAMPLES):
            row = self._gen(ROW)
            self._same(TMap(TLam(STAR, TVar(0)), row), row, ROW)

    def test_map_fusion(self):
        for _ in range(self.SAMPLES):
            f, g, row = self._gen(ARROW), self._gen(ARROW), self._gen(ROW)
            composed = TLam(STAR, TApp(shift_type(f, 0, 1), TApp(shift_type(g, 0, 1), TVar(0))))
            self._same(TMap(f, TMap(g, row)), TMap(composed, row), ROW)

    def test_map_over_literal(self):
        for _ in range(self.SAMPLES):
            f, row = self._gen(ARROW), self._literal(STAR)
            mapped = TRow(tuple((lab, TApp(f, ty)) for lab, ty in row.entries))
            self._same(TMap(f, row), mapped, ROW)

    def test_lifting_over_application(self):
        """A record or variant of operators applied to a type."""
        for n in range(self.SAMPLES):
            flavor = (Flavor.PI, Flavor.SIGMA)[n % 2]
            ops, arg = self._literal(ARROW), self._gen(STAR)
            lhs = TApp(TApp(TXi(flavor, ARROW), ops), arg)
            applied = TRow(tuple((lab, TApp(op, arg)) for lab, op in ops.entries))
            self._same(lhs, TApp(TXi(flavor, STAR), applied), STAR)

    def test_lifting_at_row_kind(self):
        """A record or variant of rows is a row of records or variants."""
        for n in range(self.SAMPLES):
            flavor = (Flavor.PI, Flavor.SIGMA)[n % 2]
            rows = self._literal(ROW)
            lifted = TRow(tuple((lab, TApp(TXi(flavor, STAR), r)) for lab, r in rows.entries))
            self._same(TApp(TXi(flavor, ROW), rows), lifted, ROW)

    def test_labeled_singleton(self):
        for _ in range(self.SAMPLES):
            label, ty = TLabel(self.rng.choice(LABELS)), self._gen(STAR)
            self._same(TLabeled(label, ty), TRow(((label, ty),)), ROW)

    def test_literal_complement(self):
        """Removing a sub-literal leaves the other entries."""
        for _ in range(self.SAMPLES):
            row = self._literal(STAR)
            taken = [e for e in row.entries if self.rng.random() < 0.5]
            kept = tuple(e for e in row.entries if e not in taken)
            self._same(TCompl(row, TRow(tuple(taken))), TRow(kept), ROW)

    def test_map_over_complement(self):
        """A map distributes over a complement that cannot be computed yet."""
        for _ in range(self.SAMPLES):
            f, right = self._gen(ARROW), self._gen(ROW)
            self._same(TMap(f, TCompl(TVar(1), right)), TCompl(TMap(f, TVar(1)), TMap(f, right)), ROW)
