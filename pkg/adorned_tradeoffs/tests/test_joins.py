import itertools
from fractions import Fraction

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from testfixtures import compare

from adorned_tradeoffs.covers import best_cover_for_time
from adorned_tradeoffs.families import family_query
from adorned_tradeoffs.generators import random_digraph
from adorned_tradeoffs.query import AccessRequest, hypergraph_of, parse_query
from adorned_tradeoffs.relations import Database
from adorned_tradeoffs.wcoj import (
    BoundJoinPlan, CostMeter, ResidualCost, Threshold, brute_force_eval,
    eval_bound, iter_bound, residual_cost,
)

TRIANGLE_EDGES = [
    ('a', 'b'), ('b', 'c'), ('a', 'c'), ('c', 'd'), ('b', 'd'), ('d', 'e'),
]


def graph_db(rows):
    return Database.from_rows({'R': (('src', 'dst'), rows)})


def all_requests(q, db):
    domain = sorted(db.active_domain)
    for values in itertools.product(domain, repeat=len(q.bound_vars)):
        yield AccessRequest.for_query(q, values)


class TestThreshold(SimpleTestCase):

    def test_float(self):
        self.assertAlmostEqual(float(Threshold(16, Fraction(1, 2))), 4.0)
        self.assertEqual(float(Threshold.of(7)), 7.0)
        self.assertEqual(float(Threshold.of(0)), 0.0)

    def test_str(self):
        self.assertEqual(str(Threshold.of(5)), '5')
        self.assertEqual(str(Threshold(16, Fraction(1, 2))), '16^1/2')


class TestResidualCost(SimpleTestCase):

    def test_exact_comparison(self):
        # 2^{1/2}·8^{1/2} = 4 exactly
        cost = ResidualCost(((2, Fraction(1, 2)), (8, Fraction(1, 2))))
        self.assertEqual(cost.compare(Threshold.of(4)), 0)
        self.assertFalse(cost.exceeds(Threshold.of(4)))
        self.assertTrue(cost.exceeds(Threshold.of(3)))
        self.assertEqual(cost.compare(Threshold(16, Fraction(1, 2))), 0)

    def test_zero(self):
        cost = ResidualCost(((0, Fraction(1)), (5, Fraction(1))))
        self.assertTrue(cost.is_zero)
        self.assertFalse(cost.exceeds(Threshold.of(0)))
        self.assertEqual(float(cost), 0.0)

    def test_triangle_residual(self):
        q = family_query('triangle')
        db = graph_db(TRIANGLE_EDGES)
        h = hypergraph_of(q)
        cover = best_cover_for_time(h, None, Fraction(0))
        a, b = db.intern_values(['a', 'b'])
        cost = residual_cost(q, db, cover, AccessRequest.for_query(q, (a, b)))
        # |R(a,b)|^{1/2}·|R(b,·)|^{1/2}·|R(a,·)|^{1/2} = 1·2^{1/2}·2^{1/2}
        self.assertAlmostEqual(float(cost), 2.0)
        self.assertEqual(cost.compare(Threshold.of(2)), 0)


class TestGenericJoin(SimpleTestCase):

    def test_iter_triangle(self):
        q = family_query('triangle')
        db = graph_db(TRIANGLE_EDGES)
        a, c, b = db.intern_values(['a', 'c', 'b'])
        witnesses = list(iter_bound(q, db, AccessRequest.for_query(q, (a, b))))
        compare(witnesses, expected=[{'x': a, 'y': b, 'z': c}])

    def test_meter_counts(self):
        q = family_query('triangle')
        db = graph_db(TRIANGLE_EDGES)
        a, e = db.intern_values(['a', 'e'])
        meter = CostMeter()
        self.assertFalse(eval_bound(q, db, AccessRequest.for_query(q, (a, e)), meter))
        # the bound atom R(a,e) fails on the first probe
        self.assertEqual(meter.steps, 1)

    def test_plan_order(self):
        q = family_query('k-path', 3)
        db = graph_db(TRIANGLE_EDGES)
        plan = BoundJoinPlan.for_query(q, db)
        self.assertEqual(plan.variable_order, ('x2', 'x3'))
        compare(plan.participants, expected={'x2': (0, 1), 'x3': (1, 2)})

    def test_arity_mismatch(self):
        q = parse_query('Q(b x) = R(x)')
        db = graph_db(TRIANGLE_EDGES)
        with self.assertRaises(ValidationError) as cm:
            eval_bound(q, db, AccessRequest.for_query(q, (0,)))
        self.assertEqual(cm.exception.code, 'arity')

    def test_prune(self):
        db = graph_db(TRIANGLE_EDGES)
        (a,) = db.intern_values(['a'])
        q = parse_query('P(b x1) = R(x1,x2), R(x2,x3)')
        a_request = AccessRequest.for_query(q, (a,))
        # a-b-c, a-b-d, a-c-d
        self.assertEqual(len(list(iter_bound(q, db, a_request))), 3)
        pruned = list(iter_bound(
            q, db, a_request, prune=lambda assignment: True
        ))
        compare(pruned, expected=[])


class TestAgainstBruteForce(SimpleTestCase):

    def test_families_on_random_graphs(self):
        for name, k in (('triangle', None), ('square', None),
                        ('opposite-square', None), ('k-path', 3),
                        ('k-star', 2)):
            q = family_query(name, k)
            for seed in range(3):
                with self.subTest(family=name, seed=seed):
                    db = Database.from_rows(random_digraph(6, 14, seed))
                    for a in all_requests(q, db):
                        self.assertEqual(
                            eval_bound(q, db, a), brute_force_eval(q, db, a)
                        )

    def test_negation_oracle(self):
        q = parse_query('Q(b x, b z) = R(x,y), R(y,z), !S(x,z)')
        db = Database.from_rows({
            'R': (('src', 'dst'), [('a', 'b'), ('b', 'c'), ('b', 'd')]),
            'S': (('src', 'dst'), [('a', 'c')]),
        })
        a, c, d = db.intern_values(['a', 'c', 'd'])
        self.assertFalse(brute_force_eval(q, db, AccessRequest.for_query(q, (a, c))))
        self.assertTrue(brute_force_eval(q, db, AccessRequest.for_query(q, (a, d))))
