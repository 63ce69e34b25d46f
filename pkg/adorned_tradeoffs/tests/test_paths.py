import itertools
from fractions import Fraction

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from testfixtures import LogCapture, compare

from adorned_tradeoffs.families import family_query
from adorned_tradeoffs.generators import adversarial_heavy, random_digraph
from adorned_tradeoffs.paths import (
    BreadthFirstPath, PathInstance, answer_path4, answer_pathk, bfs_fallback,
    build_path4, build_pathk, delta_for_time, min_regime_delta,
    select_path_strategy, strategy_envelope,
)
from adorned_tradeoffs.query import AccessRequest, parse_query
from adorned_tradeoffs.relations import Database, UNKNOWN_CONSTANT
from adorned_tradeoffs.wcoj import CostMeter, brute_force_eval


def every_request(q, db):
    domain = sorted(db.active_domain) + [UNKNOWN_CONSTANT]
    for values in itertools.product(domain, repeat=2):
        yield AccessRequest.for_query(q, values)


class TestPathStructures(SimpleTestCase):

    def test_against_brute_force(self):
        for k, seed in itertools.product((4, 5, 6), range(2)):
            q = family_query('k-path', k)
            db = Database.from_rows(random_digraph(6, 12, seed))
            instance = PathInstance.from_query(q, db)
            expected = {a: brute_force_eval(q, db, a) for a in every_request(q, db)}
            for a, answer in expected.items():
                self.assertEqual(bfs_fallback(instance, a), answer)
            for delta in (1, min_regime_delta(db.total_size), 12):
                with self.subTest(k=k, seed=seed, delta=delta):
                    s = build_pathk(instance, delta)
                    for a, answer in expected.items():
                        self.assertEqual(answer_pathk(s, a), answer)

    def test_heavy_hub(self):
        q = family_query('k-path', 4)
        db = Database.from_rows(adversarial_heavy(8, 12, 0))
        instance = PathInstance.from_query(q, db)
        delta = min_regime_delta(db.total_size)
        s = build_path4(instance, delta)
        self.assertTrue(s.in_regime)
        (hub,) = db.intern_values(['hub'])
        self.assertIn(hub, s.split.heavy)
        self.assertNotIn(hub, s.split.light)
        self.assertTrue(s.ledger.heavy_chain_holds)
        for a in every_request(q, db):
            self.assertEqual(answer_path4(s, a), brute_force_eval(q, db, a))

    def test_below_regime_warns(self):
        q = family_query('k-path', 4)
        db = Database.from_rows(random_digraph(6, 12, 0))
        with LogCapture('adorned_tradeoffs.paths') as capture:
            s = build_path4(PathInstance.from_query(q, db), 1)
        self.assertFalse(s.in_regime)
        self.assertIn('below', capture.records[0].getMessage())
        self.assertEqual(capture.records[0].levelname, 'WARNING')

    def test_shared_substructures(self):
        db = Database.from_rows(random_digraph(6, 12, 1))
        s = build_pathk(PathInstance.of_length(db, 'R', 5), 3)
        self.assertIs(s.first, s.last)
        compare([row['k'] for row in s.levels()], expected=[5, 4])

    def test_distinct_relations(self):
        spec = {
            name: random_digraph(5, 9, seed)['R']
            for seed, name in enumerate('RSTUV')
        }
        text = 'P(b x1, b x6) = R(x1,x2), S(x2,x3), T(x3,x4), U(x4,x5), V(x5,x6)'
        q = parse_query(text)
        db = Database.from_rows(spec)
        s = build_pathk(PathInstance.from_query(q, db), 2)
        self.assertIsNot(s.first, s.last)
        for a in every_request(q, db):
            self.assertEqual(s.answer(a), brute_force_eval(q, db, a))

    def test_errors(self):
        db = Database.from_rows({
            'R': (('src', 'dst'), [('a', 'b')]),
            'W': (('a', 'b', 'c'), [('a', 'b', 'c')]),
        })
        cases = [
            (lambda: PathInstance(db, ('R',)), 'invalid_config'),
            (lambda: PathInstance(db, ('R', 'W')), 'arity'),
            (lambda: PathInstance.from_query(family_query('triangle'), db),
             'strategy_mismatch'),
            (lambda: build_path4(PathInstance.of_length(db, 'R', 5), 2),
             'invalid_config'),
            (lambda: build_pathk(PathInstance.of_length(db, 'R', 3), 2),
             'invalid_config'),
            (lambda: build_path4(PathInstance.of_length(db, 'R', 4), 0),
             'invalid_config'),
        ]
        for i, (call, code) in enumerate(cases):
            with self.subTest(case=i):
                with self.assertRaises(ValidationError) as cm:
                    call()
                self.assertEqual(cm.exception.code, code)


class TestBreadthFirst(SimpleTestCase):

    def test_meter(self):
        db = Database.from_rows({'R': (('src', 'dst'), [('a', 'b'), ('b', 'c')])})
        q = family_query('k-path', 2)
        s = BreadthFirstPath(PathInstance.from_query(q, db))
        meter = CostMeter()
        a, c = db.intern_values(['a', 'c'])
        self.assertTrue(s.answer(AccessRequest.for_query(q, (a, c)), meter))
        self.assertEqual(meter.steps, 4)
        self.assertEqual(s.ledger.stored_entries, 0)
        self.assertFalse(s.answer(AccessRequest.for_query(q, (c, a))))


class TestStrategySelection(SimpleTestCase):

    def test_min_regime_delta(self):
        self.assertEqual(min_regime_delta(100), 10)
        self.assertEqual(min_regime_delta(101), 11)
        self.assertEqual(min_regime_delta(0), 0)

    def test_delta_for_time(self):
        self.assertEqual(delta_for_time(6, 10000, 1), 100)
        self.assertEqual(delta_for_time(4, 100, Fraction(1, 2)), 10)
        self.assertEqual(delta_for_time(4, 100, 0), 100)
        # never below the regime threshold
        self.assertEqual(delta_for_time(4, 100, 1), 10)

    def test_six_path(self):
        cases = [
            (Fraction(0), 'decomp'),
            (Fraction(1, 2), 'path'),
            (Fraction(9, 16), 'path'),
            (Fraction(3, 4), 'decomp'),
            (Fraction(1), 'bfs'),
        ]
        for t, expected in cases:
            with self.subTest(t=t):
                report = select_path_strategy(6, 10000, t)
                self.assertEqual(report.strategy, expected)
        report = select_path_strategy(6, 10000, Fraction(1, 2))
        self.assertGreaterEqual(report.delta, 100)
        compare(report.switch_points,
                expected=(Fraction(1, 2), Fraction(5, 8), Fraction(1)))
        compare(report.to_json()['space_exponents'], expected={
            'decomp': '9/5', 'path': '7/4', 'bfs': None,
        })

    def test_four_path_envelope(self):
        frontier, switch_points = strategy_envelope(4)
        compare(switch_points,
                expected=(Fraction(1, 2), Fraction(3, 4), Fraction(1)))
        compare(frontier, expected=(
            (Fraction(0), 'path', Fraction(2)),
            (Fraction(1, 2), 'path', Fraction(3, 2)),
            (Fraction(3, 4), 'decomp', Fraction(3, 2)),
            (Fraction(1), 'bfs', Fraction(1)),
        ))

    def test_envelope_ignores_grid(self):
        expected = strategy_envelope(5)
        compare(expected[1], expected=(Fraction(1, 2), Fraction(2, 3), Fraction(1)))
        for q in (2, 4, 8):
            with self.subTest(grid_q=q):
                with self.settings(ADORNED_TRADEOFFS={'GRID_Q': q}):
                    report = select_path_strategy(5, 1000, Fraction(1, q))
                compare(report.switch_points, expected=expected[1])
                compare(report.frontier, expected=expected[0])

    def test_tie_at_zero_is_not_a_switch(self):
        for k in (3, 4, 5, 6, 8):
            with self.subTest(k=k):
                _frontier, switch_points = strategy_envelope(k)
                self.assertNotIn(Fraction(0), switch_points)
                self.assertEqual(switch_points[-1], Fraction(1))

    def test_short_paths_have_no_path_structure(self):
        report = select_path_strategy(3, 100, Fraction(1, 2))
        self.assertEqual(report.strategy, 'decomp')
        self.assertIsNone(dict(report.space_exponents)['path'])
        self.assertIsNone(report.delta)
        compare(report.switch_points, expected=(Fraction(1),))
