"""Tests for small-step evaluation."""
from functools import lru_cache
from unittest.mock import patch

from django.conf import settings
from django.test import SimpleTestCase

from rome.evaluate import Evaluator, eval_to_value, is_value
from rome.exceptions import OutOfFuel, StuckTerm
from rome.pretty import show_value
from rome.program import PRELUDE_DIR, load_prelude
from rome.syntax import (
    App, Const, Lam, RecordLit, Ref, SingVal, TLabel, VariantLit, term_spine,
)

GOLDEN = PRELUDE_DIR.parent / 'corpus' / 'golden.rome'


@lru_cache(maxsize=1)
def _golden_program():
    program = load_prelude()
    results = program.load_file(GOLDEN)
    failures = [r.name for r in results if not r.ok]
    if failures:
        raise AssertionError(f'golden corpus failed to check: {failures}')
    return program


def _unroll(value):
    """The variant under ``in``."""
    head, items = term_spine(value)
    assert head == Const('in'), show_value(value)
    return items[-1][1]


def _label(variant):
    assert isinstance(variant, VariantLit), show_value(variant)
    return variant.row.entries[variant.tag][0].name


def _nat(value) -> int:
    n = 0
    while True:
        variant = _unroll(value)
        if _label(variant) == 'Zero':
            return n
        value = variant.payload
        n += 1


class GoldenValueTests(SimpleTestCase):
    """Test the closed programs of the golden corpus against their known values."""

    def setUp(self):
        self.program = _golden_program().copy()

    def _run(self, entry):
        return self.program.run(entry)

    def test_arithmetic(self):
        """Recursion through fix and out computes sums."""
        self.assertEqual(_nat(self._run('addOneTwo')), 3)

    def test_booleans(self):
        """Matching on a variant picks the right branch."""
        self.assertEqual(_label(self._run('notTrue')), 'False')
        self.assertEqual(_label(self._run('notFalse')), 'True')

    def test_wand(self):
        """Projection from a concatenation finds the label on either side."""
        self.assertEqual(_nat(self._run('wandLeft')), 1)
        self.assertEqual(_nat(self._run('wandRight')), 2)

    def test_dnaw(self):
        """Injection into a branched variant reaches the matching branch."""
        self.assertEqual(_nat(self._run('dnawPicked')), 2)

    def test_tuple_selection(self):
        self.assertEqual(_nat(self._run('secondOfTriple')), 2)

    def test_lists(self):
        """List access returns optional values."""
        head = self._run('headOfList')
        self.assertEqual(_label(head), 'Just')
        self.assertEqual(_nat(head.payload), 1)
        nth = self._run('nthOfList')
        self.assertEqual(_label(nth), 'Just')
        self.assertEqual(_nat(nth.payload), 2)
        self.assertEqual(_label(self._run('nthMissing')), 'Nothing')

    def test_modify(self):
        """Updating a field changes its type and keeps the rest."""
        moved = self._run('moved')
        self.assertIsInstance(moved, RecordLit)
        self.assertEqual([lab.name for lab, _ in moved.row.entries], ['x', 'y'])
        self.assertEqual(_label(moved.fields[0]), 'True')
        self.assertEqual(_nat(moved.fields[1]), 2)

    def test_generic_equality(self):
        """Equality built with syn and ana compares constructors."""
        self.assertEqual(_label(self._run('eqTrueFalse')), 'False')
        self.assertEqual(_label(self._run('eqTrueTrue')), 'True')

    def test_catamorphism(self):
        """A fold over a modular expression counts its nodes."""
        self.assertEqual(_nat(self._run('sizeOfPlus')), 3)

    def test_modular_interpreter(self):
        """The combined interpreter evaluates each language fragment."""
        for entry, expected in (('evalCond', 1), ('evalSum', 3), ('evalApp', 2)):
            result = _unroll(self._run(entry))
            self.assertEqual(_label(result), 'Nat', entry)
            self.assertEqual(_nat(result.payload), expected, entry)

    def test_interpreter_error(self):
        """Adding a Boolean is an evaluation error value."""
        self.assertEqual(_label(_unroll(self._run('evalBad'))), 'Err')

    def test_desugaring_removes_booleans(self):
        """Desugared terms use only the lambda fragment."""
        seen = set()

        def collect(value):
            match value:
                case VariantLit():
                    seen.add(_label(value))
                    collect(value.payload)
                case RecordLit(_, fields):
                    for f in fields:
                        collect(f)
                case _:
                    head, items = term_spine(value)
                    for tag, arg in items:
                        if tag == 'term':
                            collect(arg)

        collect(self._run('desugarNot'))
        self.assertTrue(seen)
        self.assertFalse(seen & {'BConst', 'If'}, seen)
        self.assertTrue(seen <= {'App', 'Lam', 'Var', 'Zero', 'Succ'}, seen)

    def test_divergence(self):
        """A looping definition runs out of fuel."""
        with self.assertRaises(OutOfFuel) as ctx:
            self.program.run('loop', fuel=100)
        self.assertEqual(ctx.exception.steps, 100)

    def test_zero_fuel(self):
        """A budget of zero allows no steps at all."""
        with self.assertRaises(OutOfFuel) as ctx:
            self.program.run('addOneTwo', fuel=0)
        self.assertEqual(ctx.exception.steps, 0)

    @patch.object(settings, 'ROME_FUEL', 50)
    def test_default_fuel_from_settings(self):
        """Without an explicit budget ROME_FUEL applies."""
        with self.assertRaises(OutOfFuel) as ctx:
            self.program.run('loop')
        self.assertEqual(ctx.exception.steps, 50)


class ValuePrintingTests(SimpleTestCase):
    """Test the printed form of values."""

    def setUp(self):
        self.program = load_prelude()

    def test_natural(self):
        value, _ = self.program.evaluate('three')
        self.assertEqual(show_value(value),
                         "in (#'Succ := in (#'Succ := in (#'Succ := in (#'Zero := #'Unit))))")

    def test_variant(self):
        value, _ = self.program.evaluate('True')
        self.assertEqual(show_value(value), "#'True := #'Unit")

    def test_record(self):
        """Records print as a concatenation of their fields."""
        value, _ = self.program.evaluate("(#'y := tt) ++ (#'x := False)")
        self.assertEqual(show_value(value), "(#'x := #'False := #'Unit) ++ (#'y := #'Unit)")

    def test_empty_record(self):
        value, _ = self.program.evaluate('{}')
        self.assertEqual(show_value(value), '{}')


class StepTests(SimpleTestCase):
    """Test single reduction steps."""

    def setUp(self):
        self.program = load_prelude()
        self.unit = SingVal(TLabel('Unit'))

    def test_values(self):
        """Abstractions, singletons and partial constants are values."""
        self.assertTrue(is_value(Lam(None, Ref('tt'))))
        self.assertTrue(is_value(self.unit))
        self.assertTrue(is_value(Const('prj')))
        self.assertFalse(is_value(Ref('tt')))
        self.assertFalse(is_value(App(Lam(None, self.unit), self.unit)))

    def test_beta(self):
        """Application of a lambda substitutes without evaluating the argument."""
        step = Evaluator({}).step(App(Lam(None, self.unit), Ref('missing')))
        self.assertEqual(step.rule, 'β→')
        self.assertEqual(step.term, self.unit)

    def test_eval_to_value(self):
        """The evaluation loop is available without a program."""
        term, _ = self.program.infer('add one one')
        definitions = {name: c.term for name, c in self.program.definitions.items()}
        self.assertEqual(_nat(eval_to_value(definitions, term)), 2)
        with self.assertRaises(OutOfFuel):
            eval_to_value(definitions, term, fuel=3)

    def test_value_does_not_step(self):
        self.assertIsNone(Evaluator({}).step(self.unit))

    def test_unknown_reference(self):
        """A reference without a definition is stuck."""
        with self.assertRaises(StuckTerm):
            Evaluator({}).step(Ref('missing'))

    def test_projection(self):
        """Projection keeps the fields its evidence selects."""
        self.program.load("r : Pi {'y := Bool}\nr = prj ((#'x := one) ++ (#'y := True))")
        value = self.program.run('r')
        self.assertIsInstance(value, RecordLit)
        self.assertEqual([lab.name for lab, _ in value.row.entries], ['y'])
        self.assertEqual(_label(value.fields[0]), 'True')

    def test_out_unrolls(self):
        """out exposes the variant under in."""
        value, _ = self.program.evaluate('out one')
        self.assertEqual(_label(value), 'Succ')

    def test_trace(self):
        """Every step is reported in order with its rule."""
        steps = []
        self.program.evaluate('not True', trace=lambda n, rule, redex: steps.append((n, rule)))
        self.assertEqual([n for n, _ in steps], list(range(1, len(steps) + 1)))
        rules = {rule for _, rule in steps}
        self.assertIn('δdef', rules)
        self.assertIn('δ|', rules)
