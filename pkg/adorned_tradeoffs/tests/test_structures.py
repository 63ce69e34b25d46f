import itertools
from fractions import Fraction

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from testfixtures import LogCapture, compare

from adorned_tradeoffs.covers import best_cover_for_time
from adorned_tradeoffs.families import family_query
from adorned_tradeoffs.generators import random_digraph
from adorned_tradeoffs.query import AccessRequest, hypergraph_of, parse_query
from adorned_tradeoffs.relations import Database, UNKNOWN_CONSTANT
from adorned_tradeoffs.structures import (
    SpaceLedger, answer, build, heavy_chain_holds, predicted_space, restore,
    threshold_for,
)
from adorned_tradeoffs.wcoj import (
    CostMeter, ResidualCost, Threshold, brute_force_eval,
)

EDGES = [('a', 'b'), ('b', 'c'), ('a', 'c'), ('c', 'd'), ('b', 'd'), ('d', 'e')]


def triangle_setup(tau=Fraction(0)):
    q = family_query('triangle')
    db = Database.from_rows({'R': (('src', 'dst'), EDGES)})
    cover = best_cover_for_time(hypergraph_of(q), None, tau)
    return q, db, cover


def request(q, db, *raw):
    return AccessRequest.for_query(q, db.intern_values(raw))


def every_request(q, db):
    domain = sorted(db.active_domain) + [UNKNOWN_CONSTANT]
    for values in itertools.product(domain, repeat=len(q.bound_vars)):
        yield AccessRequest.for_query(q, values)


class TestBuild(SimpleTestCase):

    def test_zero_threshold_stores_every_valid_request(self):
        q, db, cover = triangle_setup()
        s = build(q, db, cover, Threshold.of(0))
        # (x,y) in R with y a source: ab, bc, ac, cd, bd
        self.assertEqual(s.ledger.stored_entries, 5)
        self.assertEqual(s.ledger.valid_requests, 5)
        self.assertTrue(s.ledger.all_valid_stored)
        self.assertTrue(s.ledger.heavy_chain_holds)
        self.assertEqual(sum(s.entries.values()), 2)

    def test_large_threshold_stores_nothing(self):
        q, db, cover = triangle_setup()
        s = build(q, db, cover, Threshold.of(10 ** 6))
        self.assertEqual(s.ledger.stored_entries, 0)
        self.assertFalse(s.ledger.all_valid_stored)
        self.assertGreater(s.ledger.index_entries, 0)
        self.assertTrue(s.answer(request(q, db, 'a', 'b')))
        self.assertFalse(s.answer(request(q, db, 'a', 'c')))

    def test_heavy_and_light(self):
        q, db, cover = triangle_setup()
        with LogCapture('adorned_tradeoffs.structures') as capture:
            s = build(q, db, cover, Threshold.of(1))
        self.assertIn('Built Triangle at T=1', capture.records[-1].getMessage())
        # T(c,d) = |R(d,·)|^{1/2}·|R(c,·)|^{1/2} = 1 is not above T
        self.assertEqual(s.ledger.stored_entries, 4)
        self.assertFalse(s.is_heavy(request(q, db, 'c', 'd')))
        self.assertTrue(s.is_heavy(request(q, db, 'a', 'b')))

        meter = CostMeter()
        self.assertTrue(s.answer(request(q, db, 'a', 'b'), meter))
        # three validity probes and one lookup
        self.assertEqual(meter.steps, 4)

    def test_invalid_request(self):
        q, db, cover = triangle_setup()
        s = build(q, db, cover, Threshold.of(0))
        meter = CostMeter()
        self.assertFalse(s.answer(request(q, db, 'e', 'a'), meter))
        self.assertEqual(meter.steps, 1)
        unknown = AccessRequest.for_query(q, (UNKNOWN_CONSTANT, UNKNOWN_CONSTANT))
        self.assertFalse(s.answer(unknown))

    def test_rejects_unsupported_queries(self):
        db = Database.from_rows({
            'R': (('src', 'dst'), EDGES), 'S': (('src', 'dst'), EDGES),
        })
        cases = [
            ('Q(b x, f y) = R(x,y)', 'non_boolean'),
            ('Q(b x, b y) = R(x,y), !S(x,y)', 'negation_unsupported'),
        ]
        for text, code in cases:
            with self.subTest(text=text):
                q = parse_query(text)
                cover = best_cover_for_time(hypergraph_of(q), None, Fraction(0))
                with self.assertRaises(ValidationError) as cm:
                    build(q, db, cover, Threshold.of(1))
                self.assertEqual(cm.exception.code, code)

    def test_restore(self):
        q, db, cover = triangle_setup()
        s = build(q, db, cover, Threshold.of(1))
        restored = restore(q, db, cover, s.threshold, s.entries, s.ledger)
        compare(restored.entries, expected=s.entries)
        for a in every_request(q, db):
            self.assertEqual(restored.answer(a), s.answer(a))

    def test_heavy_costs_are_kept_per_entry(self):
        q, db, cover = triangle_setup(Fraction(1, 2))
        threshold = threshold_for(db, Fraction(1, 2))
        s = build(q, db, cover, threshold)
        compare(set(s.heavy_costs), expected=set(s.entries))
        for cost in s.heavy_costs.values():
            self.assertIsInstance(cost, ResidualCost)
            self.assertGreater(cost.compare(threshold), 0)
        self.assertTrue(s.ledger.heavy_chain_holds)
        restored = restore(q, db, cover, s.threshold, s.entries, s.ledger)
        compare(restored.heavy_costs, expected={})


class TestAgainstBruteForce(SimpleTestCase):

    def test_random_graphs(self):
        families = (('triangle', None), ('square', None), ('k-star', 2),
                    ('k-path', 3))
        for (name, k), seed in itertools.product(families, range(2)):
            q = family_query(name, k)
            db = Database.from_rows(random_digraph(6, 15, seed))
            h = hypergraph_of(q)
            for tau in (Fraction(0), Fraction(1, 2), Fraction(1)):
                cover = best_cover_for_time(h, None, tau)
                for threshold in (Threshold.of(0), threshold_for(db, tau),
                                  Threshold.of(10 ** 6)):
                    with self.subTest(family=name, seed=seed, tau=tau,
                                      threshold=str(threshold)):
                        s = build(q, db, cover, threshold)
                        self.assertTrue(s.ledger.heavy_chain_holds)
                        for a in every_request(q, db):
                            self.assertEqual(
                                answer(s, a), brute_force_eval(q, db, a)
                            )


class TestHelpers(SimpleTestCase):

    def test_threshold_for(self):
        _q, db, _cover = triangle_setup()
        self.assertEqual(threshold_for(db, threshold=5), Threshold.of(5))
        self.assertEqual(
            threshold_for(db, Fraction(1, 2)), Threshold(6, Fraction(1, 2))
        )

    def test_ledger_sum(self):
        total = SpaceLedger(3, 10, True, 4, True) + SpaceLedger(1, 5, False, 2, True)
        compare(total, expected=SpaceLedger(4, 15, False, 6, True))
        self.assertEqual(total.total_space_units, 19)

    def test_predicted_space(self):
        _q, _db, cover = triangle_setup()
        predicted = predicted_space(cover, Fraction(1, 4))
        self.assertEqual(predicted.quotient, 'S = |D|^{3/2}/T')
        self.assertEqual(predicted.product, 'S·T = |D|^{3/2}')
        self.assertEqual(predicted.exponent, Fraction(5, 4))
        self.assertEqual(predicted_space(cover, Fraction(1)).exponent, 1)
        compare(predicted.to_json(), expected={
            'quotient': 'S = |D|^{3/2}/T', 'product': 'S·T = |D|^{3/2}',
            'exponent': '5/4',
        })

    def test_heavy_chain_is_exact(self):
        threshold = Threshold.of(2 ** 60)
        above = ResidualCost(((2 ** 60 + 1, Fraction(1)),))
        # same float as the threshold, but not above it
        equal = ResidualCost(((2 ** 60, Fraction(1)),))
        self.assertEqual(float(equal), float(above))
        self.assertTrue(heavy_chain_holds([above], threshold))
        self.assertFalse(heavy_chain_holds([above, equal], threshold))
        self.assertTrue(heavy_chain_holds([], threshold))
        root = Threshold(8, Fraction(1, 2))
        self.assertTrue(heavy_chain_holds(
            [ResidualCost(((3, Fraction(1)),))], root
        ))
        self.assertFalse(heavy_chain_holds(
            [ResidualCost(((2, Fraction(3, 2)),))], root
        ))
