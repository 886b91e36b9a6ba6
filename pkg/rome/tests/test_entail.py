"""Tests for entailment, index maps and evidence reduction."""
import itertools
import random
from unittest.mock import patch

from django.conf import settings
from django.test import SimpleTestCase

from rome.entail import (
    Solver, check_evidence, dual, entails, evidence_normalize,
    evidence_predicate, evidence_step, literal_combination, literal_inclusion, pick,
    solver_for,
)
from rome.exceptions import InvariantBreach, UnsolvablePredicate
from rome.syntax import (
    Comb, ComplL, ComplR, EVar, Incl, Leq, LeqMap, LeqRefl, Plus, PlusEmptyL,
    PlusL, TArrow, TCompl, TLabel, TMap, TRow, TVar, Trans,
)

from .generators import ARROW, ROW, UNIT, random_literal

FN = TArrow(UNIT, UNIT)
PAYLOADS = (UNIT, FN)


def _brute_inclusions(small, big):
    """Every increasing map placing ``small``'s entries at equal entries of ``big``."""
    found = []
    for targets in itertools.combinations(range(len(big.entries)), len(small.entries)):
        if all(big.entries[j] == small.entries[i] for i, j in enumerate(targets)):
            found.append(targets)
    return found


def _brute_combinations(left, right, total):
    found = []
    for p in _brute_inclusions(left, total):
        for q in _brute_inclusions(right, total):
            if not set(p) & set(q) and len(p) + len(q) == len(total.entries):
                found.append(Comb(p, q))
    return found


def _split(rng, row):
    """Partition a literal into two sorted literals."""
    left, right = [], []
    for entry in row.entries:
        (left if rng.random() < 0.5 else right).append(entry)
    return TRow(tuple(left)), TRow(tuple(right))


class LiteralEntailmentTests(SimpleTestCase):
    """Test literal containment and combination against brute force."""

    def setUp(self):
        self.rng = random.Random(11)
        self.solver = Solver((), ())

    def test_inclusion_matches_brute_force(self):
        """Solving a literal containment finds the unique map, if any."""
        for _ in range(400):
            big = random_literal(self.rng, PAYLOADS)
            if self.rng.random() < 0.6:
                small, _ = _split(self.rng, big)
            else:
                small = random_literal(self.rng, PAYLOADS)
            expected = _brute_inclusions(small, big)
            self.assertLessEqual(len(expected), 1)
            found = self.solver.try_solve(Leq(small, big))
            if expected:
                self.assertEqual(evidence_normalize(found), Incl(expected[0]))
                self.assertEqual(literal_inclusion(small, big), expected[0])
            else:
                self.assertIsNone(found)

    def test_combination_matches_brute_force(self):
        """Solving a literal combination finds the unique pair of maps, if any."""
        for _ in range(300):
            total = random_literal(self.rng, PAYLOADS)
            if self.rng.random() < 0.7:
                left, right = _split(self.rng, total)
            else:
                left = random_literal(self.rng, PAYLOADS, size=2)
                right = random_literal(self.rng, PAYLOADS, size=2)
            expected = _brute_combinations(left, right, total)
            self.assertLessEqual(len(expected), 1)
            found = self.solver.try_solve(Plus(left, right, total))
            if expected:
                self.assertEqual(evidence_normalize(found), expected[0])
            else:
                self.assertIsNone(found)

    def test_combination_commutes(self):
        """Swapping the parts of a combination swaps its maps."""
        for _ in range(100):
            total = random_literal(self.rng, PAYLOADS)
            left, right = _split(self.rng, total)
            forward = literal_combination(left, right, total)
            backward = literal_combination(right, left, total)
            self.assertEqual(backward, Comb(forward.right, forward.left))

    def test_complement_round_trip(self):
        """A containment and its complement combine back into the whole row."""
        for _ in range(100):
            total = random_literal(self.rng, PAYLOADS)
            part, _ = _split(self.rng, total)
            incl = evidence_normalize(self.solver.solve(Leq(part, total)))
            comb = evidence_normalize(self.solver.solve(Plus(part, TCompl(total, part), total)))
            self.assertEqual(comb.left, incl.targets)
            self.assertEqual(comb.right, dual(incl.targets, len(total.entries)))
            self.assertEqual(evidence_normalize(ComplR(incl, total)), comb)

    def test_self_containment(self):
        """A row contains itself through the identity map."""
        row = random_literal(self.rng, PAYLOADS, size=4)
        q = self.solver.solve(Leq(row, row))
        self.assertEqual(q, LeqRefl(row))
        self.assertEqual(evidence_normalize(q), Incl((0, 1, 2, 3)))

    def test_missing_label(self):
        """A row with an extra label is not contained."""
        small = TRow(((TLabel('q'), UNIT),))
        with self.assertRaises(UnsolvablePredicate) as ctx:
            self.solver.solve(Leq(small, TRow(())))
        self.assertEqual(ctx.exception.goal, Leq(small, TRow(())))


class IndexMapTests(SimpleTestCase):
    """Test the index map helpers."""

    def setUp(self):
        self.rng = random.Random(3)

    def test_dual_partitions(self):
        """A map and its dual cover every position exactly once."""
        for _ in range(200):
            n = self.rng.randint(0, 7)
            p = tuple(sorted(self.rng.sample(range(n), self.rng.randint(0, n))))
            d = dual(p, n)
            self.assertEqual(sorted(p + d), list(range(n)))
            self.assertEqual(list(d), sorted(d))

    def test_pick_inverts(self):
        """pick finds the side and position each total position came from."""
        for _ in range(200):
            n = self.rng.randint(0, 7)
            p = tuple(sorted(self.rng.sample(range(n), self.rng.randint(0, n))))
            q = dual(p, n)
            for i in range(n):
                side, j = pick(p, q, i)
                self.assertEqual((p if side == 'left' else q)[j], i)

    def test_pick_outside_ranges(self):
        """A position neither side covers is an invariant breach."""
        with self.assertRaises(InvariantBreach):
            pick((0,), (2,), 1)


class HypothesisEntailmentTests(SimpleTestCase):
    """Test solving with row variables and hypotheses."""

    def setUp(self):
        # x, y, z : R[*], index 0 first
        self.kinds = (ROW, ROW, ROW)
        self.x, self.y, self.z = TVar(0), TVar(1), TVar(2)

    def test_plus_gives_containment(self):
        """Each part of a combination is contained in the total."""
        preds = [Plus(self.x, self.y, self.z)]
        q = entails(self.kinds, preds, Leq(self.x, self.z))
        self.assertEqual(q, PlusL(EVar(0)))
        self.assertTrue(check_evidence(self.kinds, preds, q, Leq(self.x, self.z)))

    def test_transitivity(self):
        """Containments chain."""
        preds = [Leq(self.x, self.y), Leq(self.y, self.z)]
        q = Solver(self.kinds, preds).solve(Leq(self.x, self.z))
        self.assertEqual(q, Trans(EVar(0), EVar(1)))
        self.assertTrue(check_evidence(self.kinds, preds, q, Leq(self.x, self.z)))

    def test_depth_bounds_chains(self):
        """Chains longer than the saturation depth are not found."""
        kinds = (ROW,) * 4
        a, b, c, d = (TVar(i) for i in range(4))
        preds = [Leq(a, b), Leq(b, c), Leq(c, d)]
        self.assertIsNone(Solver(kinds, preds, depth=0).try_solve(Leq(a, d)))
        q = Solver(kinds, preds, depth=4).solve(Leq(a, d))
        self.assertEqual(evidence_predicate(kinds, preds, q), Leq(a, d))

    def test_shared_solver_follows_depth_setting(self):
        """A shared solver is rebuilt when ROME_ENTAIL_DEPTH changes."""
        kinds = (ROW,) * 4
        a, b, c, d = (TVar(i) for i in range(4))
        preds = [Leq(a, b), Leq(b, c), Leq(c, d)]
        with patch.object(settings, 'ROME_ENTAIL_DEPTH', 0):
            shallow = solver_for(kinds, preds)
            self.assertEqual(shallow.depth, 0)
            self.assertIsNone(shallow.try_solve(Leq(a, d)))
        with patch.object(settings, 'ROME_ENTAIL_DEPTH', 8):
            deep = solver_for(kinds, preds)
            self.assertEqual(deep.depth, 8)
            self.assertIsNotNone(deep.try_solve(Leq(a, d)))
        self.assertIs(solver_for(kinds, preds, depth=8), deep)

    def test_empty_row_is_contained(self):
        """The empty row is contained in every row."""
        q = Solver(self.kinds, []).solve(Leq(TRow(()), self.z))
        self.assertEqual(q, PlusL(PlusEmptyL(self.z)))
        self.assertEqual(evidence_predicate(self.kinds, [], q), Leq(TRow(()), self.z))

    def test_complement_from_containment(self):
        """A containment yields the combination with its complement."""
        preds = [Leq(self.x, self.z)]
        goal = Plus(self.x, TCompl(self.z, self.x), self.z)
        q = Solver(self.kinds, preds).solve(goal)
        self.assertEqual(q, ComplR(EVar(0), self.z))
        self.assertTrue(check_evidence(self.kinds, preds, q, goal))

    def test_mapped_goal(self):
        """A containment holds under any map applied to both sides."""
        kinds = (ROW, ROW, ARROW)
        preds = [Leq(TVar(0), TVar(1))]
        goal = Leq(TMap(TVar(2), TVar(0)), TMap(TVar(2), TVar(1)))
        q = Solver(kinds, preds).solve(goal)
        self.assertIsInstance(q, LeqMap)
        self.assertEqual(q.inner, EVar(0))
        self.assertTrue(check_evidence(kinds, preds, q, goal))

    def test_unprovable(self):
        """Containment does not run backwards."""
        preds = [Leq(self.x, self.z)]
        with self.assertRaises(UnsolvablePredicate) as ctx:
            Solver(self.kinds, preds).solve(Leq(self.z, self.x))
        self.assertIn(Leq(self.x, self.z), ctx.exception.facts)

    def test_deterministic(self):
        """The same goal gets the same evidence every time."""
        preds = [Plus(self.x, self.y, self.z), Leq(self.x, self.y)]
        first = Solver(self.kinds, preds).solve(Leq(self.x, self.z))
        second = Solver(self.kinds, preds).solve(Leq(self.x, self.z))
        self.assertEqual(first, second)


class EvidenceReductionTests(SimpleTestCase):
    """Test reduction of compound evidence to index maps."""

    def _row(self, n):
        return TRow(tuple((TLabel(name), UNIT) for name in 'abcdefg'[:n]))

    def test_trans_composes(self):
        """Transitivity composes the maps."""
        q = Trans(Incl((0, 2)), Incl((1, 2, 4)))
        self.assertEqual(evidence_normalize(q), Incl((1, 4)))

    def test_reflexivity(self):
        """Reflexivity is the identity map."""
        self.assertEqual(evidence_normalize(LeqRefl(self._row(3))), Incl((0, 1, 2)))

    def test_empty_units(self):
        """The empty row combines with anything."""
        self.assertEqual(evidence_normalize(PlusEmptyL(self._row(2))), Comb((), (0, 1)))

    def test_projections(self):
        """Each side of a combination is a containment."""
        self.assertEqual(evidence_normalize(PlusL(Comb((0,), (1,)))), Incl((0,)))
        self.assertEqual(evidence_normalize(PlusL(PlusEmptyL(self._row(2)))), Incl(()))

    def test_complement_left(self):
        """The complement fills the positions the containment misses."""
        q = ComplL(Incl((1,)), self._row(3))
        self.assertEqual(evidence_normalize(q), Comb((0, 2), (1,)))

    def test_map_is_transparent(self):
        """Mapping does not change positions."""
        q = LeqMap(Trans(Incl((0,)), Incl((1,))), TVar(0))
        self.assertEqual(evidence_normalize(q), Incl((1,)))

    def test_values_do_not_step(self):
        """Index maps and free variables cannot step."""
        with self.assertRaises(InvariantBreach):
            evidence_step(Incl(()))
        with self.assertRaises(InvariantBreach):
            evidence_step(EVar(0))
