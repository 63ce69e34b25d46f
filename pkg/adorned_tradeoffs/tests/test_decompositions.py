import itertools
import os
from dataclasses import replace
from fractions import Fraction

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from testfixtures import TempDirectory, compare

from adorned_tradeoffs.decompositions import (
    NEGATION, affine_form, apply_appendix_optimizations,
    answer_decomp, build_decomp_structure, build_negation_structure,
    decomposition_from_json, enumerate_decompositions, load_decomposition,
    negation_decomposition, negation_report, optimization_report,
    optimize_delta, render_affine, single_bag_decomposition,
    uniform_tau_profile, validate_decomposition,
)
from adorned_tradeoffs.families import family_query
from adorned_tradeoffs.generators import random_digraph
from adorned_tradeoffs.query import AccessRequest, hypergraph_of, positive_part
from adorned_tradeoffs.relations import Database, UNKNOWN_CONSTANT
from adorned_tradeoffs.wcoj import brute_force_eval

FIXTURES = os.path.join(os.path.dirname(__file__), 'fixtures')
FIVE_PATH_DECOMPOSITION = os.path.join(FIXTURES, 'five_path_decomposition.json')

TAUS = [Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]


def five_path():
    q = family_query('k-path', 5)
    return q, hypergraph_of(q)


def opposite_square_decomposition():
    return decomposition_from_json({
        'nodes': [
            {'id': 't1', 'bag': ['x1', 'x3'], 'in_A': True},
            {'id': 't2', 'bag': ['x1', 'x2', 'x3']},
            {'id': 't3', 'bag': ['x1', 'x3', 'x4']},
        ],
        'edges': [['t1', 't2'], ['t1', 't3']],
    })


def every_request(q, db):
    domain = sorted(db.active_domain) + [UNKNOWN_CONSTANT]
    for values in itertools.product(domain, repeat=len(q.bound_vars)):
        yield AccessRequest.for_query(q, values)


def multi_relation_db(names, seed, n=5, m=10):
    return Database.from_rows({
        name: random_digraph(n, m, seed * 31 + i)['R']
        for i, name in enumerate(names)
    })


class TestValidation(SimpleTestCase):

    def test_fixture(self):
        _q, h = five_path()
        d = load_decomposition(FIVE_PATH_DECOMPOSITION)
        report = validate_decomposition(h, d)
        self.assertEqual(report.width, Fraction(3, 2))
        self.assertEqual(report.height, 1)
        compare(report.to_json(), expected={
            'f': '3/2', 'h': '1', 'node_widths': {'t2': '3/2', 't3': '3/2'},
        })
        self.assertEqual(d.bound_vars('t3'), frozenset({'x2', 'x5'}))
        self.assertEqual(d.free_vars('t2'), frozenset({'x2', 'x5'}))

    def test_json_round_trip(self):
        d = load_decomposition(FIVE_PATH_DECOMPOSITION)
        compare(decomposition_from_json(d.to_json()), expected=d)

    def _invalid(self, nodes, edges, code='decomposition'):
        _q, h = five_path()
        d = decomposition_from_json({'nodes': nodes, 'edges': edges})
        with self.assertRaises(ValidationError) as cm:
            validate_decomposition(h, d)
        self.assertEqual(cm.exception.code, code)
        return cm.exception

    def test_root_outside_anchor(self):
        self._invalid(
            [{'id': 't1', 'bag': ['x1', 'x6']},
             {'id': 't2', 'bag': ['x1', 'x2', 'x3', 'x4', 'x5', 'x6']}],
            [['t1', 't2']],
        )

    def test_wrong_anchor_variables(self):
        error = self._invalid(
            [{'id': 't1', 'bag': ['x1'], 'in_A': True},
             {'id': 't2', 'bag': ['x1', 'x2', 'x3', 'x4', 'x5', 'x6']}],
            [['t1', 't2']],
        )
        self.assertIn('x1, x6', error.messages[0])

    def test_not_a_tree(self):
        self._invalid(
            [{'id': 't1', 'bag': ['x1', 'x6'], 'in_A': True},
             {'id': 't2', 'bag': ['x1', 'x2', 'x3', 'x4', 'x5', 'x6']}],
            [],
        )

    def test_negative_budget(self):
        self._invalid(
            [{'id': 't1', 'bag': ['x1', 'x6'], 'in_A': True},
             {'id': 't2', 'bag': ['x1', 'x2', 'x3', 'x4', 'x5', 'x6'],
              'delta': '-1/2'}],
            [['t1', 't2']],
        )

    def test_atom_in_no_bag(self):
        self._invalid(
            [{'id': 't1', 'bag': ['x1', 'x6'], 'in_A': True},
             {'id': 't2', 'bag': ['x1', 'x2', 'x5', 'x6']}],
            [['t1', 't2']],
        )

    def test_disconnected_variable(self):
        self._invalid(
            [{'id': 't1', 'bag': ['x1', 'x6'], 'in_A': True},
             {'id': 't2', 'bag': ['x1', 'x2', 'x3', 'x6']},
             {'id': 't3', 'bag': ['x3', 'x4', 'x5', 'x6']},
             {'id': 't4', 'bag': ['x2', 'x3']}],
            [['t1', 't2'], ['t1', 't3'], ['t3', 't4']],
        )

    def test_uncoverable_bag(self):
        error = self._invalid(
            [{'id': 't1', 'bag': ['x1', 'x6'], 'in_A': True},
             {'id': 't2', 'bag': ['x1', 'x2', 'x4', 'x6']},
             {'id': 't3', 'bag': ['x2', 'x3', 'x4', 'x5', 'x6']}],
            [['t1', 't2'], ['t2', 't3']],
            code='uncoverable',
        )
        self.assertIn('x4, x6', error.messages[0])

    def test_unknown_kind(self):
        with self.assertRaises(ValidationError) as cm:
            decomposition_from_json({
                'nodes': [{'id': 't1', 'bag': ['x'], 'kind': 'weird'}]
            })
        self.assertEqual(cm.exception.code, 'decomposition')

    def test_files(self):
        with self.assertRaises(ValidationError) as cm:
            load_decomposition(os.path.join(FIXTURES, 'nope.json'))
        self.assertEqual(cm.exception.code, 'missing_file')
        with TempDirectory() as d:
            d.write('broken.json', b'{"nodes": [')
            with self.assertRaises(ValidationError) as cm:
                load_decomposition(os.path.join(d.path, 'broken.json'))
        self.assertEqual(cm.exception.code, 'decomposition')


class TestProfiles(SimpleTestCase):

    def test_five_path_profile(self):
        _q, h = five_path()
        d = load_decomposition(FIVE_PATH_DECOMPOSITION)
        profile = uniform_tau_profile(h, d, TAUS)
        self.assertEqual(affine_form([(t, f) for t, f, _h in profile]), '2−τ')
        self.assertEqual(affine_form([(t, hh) for t, _f, hh in profile]), '2τ')

    def test_opposite_square_profile(self):
        h = hypergraph_of(family_query('opposite-square'))
        d = opposite_square_decomposition()
        profile = uniform_tau_profile(h, d, TAUS)
        self.assertEqual(affine_form([(t, f) for t, f, _h in profile]), '2−2τ')
        self.assertEqual(affine_form([(t, hh) for t, _f, hh in profile]), 'τ')

    def test_single_bag_five_path(self):
        _q, h = five_path()
        profile = uniform_tau_profile(h, single_bag_decomposition(h), TAUS)
        self.assertEqual(affine_form([(t, f) for t, f, _h in profile]), '3−τ')

    def test_render_affine(self):
        cases = [
            ((Fraction(2), Fraction(0)), '2'),
            ((Fraction(0), Fraction(-1)), '−τ'),
            ((Fraction(3, 2), Fraction(1, 2)), '3/2+1/2τ'),
        ]
        for (const, slope), expected in cases:
            with self.subTest(expected=expected):
                self.assertEqual(render_affine(const, slope), expected)

    def test_affine_form_rejects_curves(self):
        points = [(Fraction(0), Fraction(2)), (Fraction(1, 2), Fraction(2)),
                  (Fraction(1), Fraction(1))]
        self.assertIsNone(affine_form(points))
        self.assertIsNone(affine_form(points[:1]))


class TestEnumeration(SimpleTestCase):

    def test_five_path(self):
        _q, h = five_path()
        found = enumerate_decompositions(h)
        self.assertEqual(len(found), 4)
        compare(
            found[0].canonical_key(),
            expected=single_bag_decomposition(h).canonical_key()
        )
        fixture = load_decomposition(FIVE_PATH_DECOMPOSITION).canonical_key()
        self.assertIn(fixture, [d.canonical_key() for d in found])
        for d in found:
            validate_decomposition(h, d)

    def test_too_many_variables(self):
        _q, h = five_path()
        with self.assertRaises(ValidationError) as cm:
            enumerate_decompositions(h, max_vars=3)
        self.assertEqual(cm.exception.code, 'too_many_variables')

    def test_optimize_delta(self):
        _q, h = five_path()
        d = load_decomposition(FIVE_PATH_DECOMPOSITION).with_deltas(
            {'t2': Fraction(0), 't3': Fraction(0)}
        )
        best = optimize_delta(h, d, 1, grid_q=4)
        self.assertEqual(best.node('t2').delta, Fraction(1, 2))
        self.assertEqual(best.node('t3').delta, Fraction(1, 2))
        report = validate_decomposition(h, best)
        self.assertEqual(report.width, Fraction(3, 2))
        self.assertEqual(report.height, 1)


class TestOptimizations(SimpleTestCase):

    def test_star_bag_materializes_free_variable(self):
        h = hypergraph_of(family_query('k-star', 2))
        d = single_bag_decomposition(h)
        compare(optimization_report(h, d), expected={
            'anchor_rho': '2',
            'anchor_materialization_useful': True,
            'bags': {'t2': {'width': '2', 'rho_free': '1'}},
        })
        optimized = apply_appendix_optimizations(h, d)
        self.assertTrue(optimized.node('t2').materialize_free)
        self.assertEqual(optimized.node('t2').delta, 1)
        self.assertFalse(optimized.materialize_anchor)
        self.assertEqual(validate_decomposition(h, optimized).width, 1)


class TestNegation(SimpleTestCase):

    def test_reports(self):
        self.assertEqual(
            negation_report(family_query('negated-path')), 'S = |D|^3/τ, T = τ'
        )
        self.assertEqual(
            negation_report(family_query('open-triangle')),
            'S = |D|^2/τ^2, T = τ'
        )

    def test_negation_decomposition_shape(self):
        q = family_query('negated-path')
        d = negation_decomposition(q, Fraction(1, 2))
        kinds = [n.kind for n in d.nodes]
        self.assertEqual(kinds.count(NEGATION), 2)
        compare(d.children('t2'), expected=['t3', 't4'])
        validate_decomposition(hypergraph_of(positive_part(q)), d)

    def test_negated_atom_checked_nowhere(self):
        q = family_query('negated-path')
        h = hypergraph_of(positive_part(q))
        db = multi_relation_db('RSTUV', 0)
        with self.assertRaises(ValidationError) as cm:
            build_decomp_structure(q, db, single_bag_decomposition(h))
        self.assertEqual(cm.exception.code, 'negation_unsupported')


class TestDecompStructures(SimpleTestCase):

    def _check(self, q, db, s):
        for a in every_request(q, db):
            self.assertEqual(answer_decomp(s, a), brute_force_eval(q, db, a))

    def test_five_path(self):
        q, _h = five_path()
        fixture = load_decomposition(FIVE_PATH_DECOMPOSITION)
        for seed, delta in itertools.product(
                range(2), (Fraction(0), Fraction(1, 2), Fraction(1))):
            with self.subTest(seed=seed, delta=delta):
                db = Database.from_rows(random_digraph(6, 14, seed))
                d = fixture.with_deltas({'t2': delta, 't3': delta})
                s = build_decomp_structure(q, db, d)
                self.assertTrue(s.ledger.heavy_chain_holds)
                self._check(q, db, s)

    def test_materialized_anchor(self):
        q, _h = five_path()
        db = Database.from_rows(random_digraph(6, 14, 3))
        d = replace(load_decomposition(FIVE_PATH_DECOMPOSITION),
                    materialize_anchor=True)
        s = build_decomp_structure(q, db, d)
        self.assertIsNotNone(s.anchor_structure)
        self._check(q, db, s)

    def test_opposite_square(self):
        q = family_query('opposite-square')
        d = opposite_square_decomposition().with_deltas(
            {'t2': Fraction(1, 2), 't3': Fraction(1, 2)}
        )
        for seed in range(2):
            with self.subTest(seed=seed):
                db = Database.from_rows(random_digraph(6, 16, seed))
                self._check(q, db, build_decomp_structure(q, db, d))

    def test_free_materialization(self):
        q = family_query('k-star', 2)
        h = hypergraph_of(q)
        d = apply_appendix_optimizations(h, single_bag_decomposition(h))
        db = Database.from_rows(random_digraph(6, 14, 1))
        s = build_decomp_structure(q, db, d)
        self.assertIn('t2', s.free_indexes)
        self._check(q, db, s)

    def test_negated_path(self):
        q = family_query('negated-path')
        for seed, delta in itertools.product(range(2), (Fraction(0), Fraction(1))):
            with self.subTest(seed=seed, delta=delta):
                db = multi_relation_db('RSTUV', seed)
                self._check(q, db, build_negation_structure(q, db, delta))

    def test_open_triangle_checks_negation_at_root(self):
        q = family_query('open-triangle')
        db = multi_relation_db(['R1', 'R2', 'R3'], 4)
        s = build_negation_structure(q, db, Fraction(1, 2))
        self.assertEqual(len(s.root_negations), 1)
        self._check(q, db, s)

    def test_empty_negated_relations_reduce_to_positive_part(self):
        cases = [
            ('negated-path', 'RSTUV', ('S', 'U')),
            ('open-triangle', ['R1', 'R2', 'R3'], ('R2',)),
        ]
        for family, names, negated in cases:
            q = family_query(family)
            positive = positive_part(q)
            for seed in range(2):
                with self.subTest(family=family, seed=seed):
                    rows = {
                        name: random_digraph(5, 10, seed * 31 + i)['R']
                        for i, name in enumerate(names)
                    }
                    for name in negated:
                        rows[name] = (('src', 'dst'), [])
                    db = Database.from_rows(rows)
                    s = build_negation_structure(q, db)
                    plain = build_decomp_structure(
                        positive, db,
                        single_bag_decomposition(hypergraph_of(positive))
                    )
                    for a in every_request(q, db):
                        expected = brute_force_eval(positive, db, a)
                        self.assertEqual(answer_decomp(s, a), expected)
                        self.assertEqual(answer_decomp(plain, a), expected)
