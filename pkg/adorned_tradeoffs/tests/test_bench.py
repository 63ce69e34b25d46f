import io
import math
from dataclasses import replace
from fractions import Fraction

from django.core.exceptions import ValidationError
from django.test import SimpleTestCase, tag
from testfixtures import compare

from adorned_tradeoffs.bench import (
    CSV_COLUMNS, BenchPoint, BenchRow, BoundViolation, bench_instance,
    bench_points, check_bounds, clean_bench_config, fit_slopes, plot_data,
    run_bench, sample_requests, write_rows,
)
from adorned_tradeoffs.families import family_query
from adorned_tradeoffs.generators import random_digraph
from adorned_tradeoffs.relations import Database


def make_row(**overrides):
    values = dict(
        family='triangle', k=None, strategy='adstruct', seed=0, size=100,
        budget='tau=1/2', time_threshold=10.0, stored_entries=50,
        index_entries=200, max_answer_steps=12, mean_answer_steps=3.5,
        light_max_steps=12, predicted_space_exponent=Fraction(3, 2),
        predicted_time_exponent=Fraction(1, 2), space_constant=0.5,
        time_constant=0.1, asserted=True, saturated=False,
    )
    values.update(overrides)
    return BenchRow(**values)


class TestConfig(SimpleTestCase):

    def test_grid_order(self):
        config = clean_bench_config({
            'family': 'k-path', 'k': 4, 'strategies': 'adstruct,path,bfs',
            'sizes': '20,40', 'time_exponents': '0,1/2', 'deltas': '5',
            'seeds': '0,1',
        })
        points = bench_points(config)
        self.assertEqual(len(points), 16)
        first = points[0]
        self.assertEqual(
            (first.strategy, first.size, first.time_exponent, first.seed),
            ('adstruct', 20, Fraction(0), 0)
        )
        self.assertEqual(points[1].seed, 1)
        self.assertEqual(points[2].budget_label, 'tau=1/2')
        compare([p.budget_label for p in points[8:12]], expected=['delta=5'] * 4)
        compare({p.budget_label for p in points[12:]}, expected={'-'})
        # the test settings lower the default sample size
        self.assertEqual(first.sample_requests, 200)

    def test_default_strategy(self):
        config = clean_bench_config({
            'family': 'triangle', 'sizes': [20], 'thresholds': [4],
            'seeds': [0],
        })
        compare(config['strategies'], expected=['adstruct'])

    def test_errors(self):
        base = {'sizes': '20', 'seeds': '0', 'time_exponents': '1/2'}
        cases = [
            ({'family': 'k-path'}, 'invalid_config'),
            ({'family': 'k-path', 'k': 4, 'strategies': 'path'}, 'invalid_config'),
            ({'family': 'triangle', 'strategies': 'bfs'}, 'strategy_mismatch'),
            ({'family': 'custom'}, 'invalid_config'),
            ({'family': 'triangle', 'sizes': '0'}, 'invalid_config'),
            ({'family': 'pentagon'}, 'invalid_choice'),
        ]
        for data, code in cases:
            with self.subTest(**data):
                with self.assertRaises(ValidationError) as cm:
                    clean_bench_config(dict(base, **data))
                self.assertEqual(cm.exception.error_list[0].code, code)

    def test_negated_families(self):
        base = {'sizes': '20', 'seeds': '0', 'time_exponents': '1/2'}
        for family in ('negated-path', 'open-triangle'):
            with self.subTest(family=family):
                config = clean_bench_config(dict(base, family=family))
                compare(config['strategies'], expected=['negation'])
                for strategy in ('adstruct', 'decomp', 'negation,adstruct'):
                    with self.assertRaises(ValidationError) as cm:
                        clean_bench_config(
                            dict(base, family=family, strategies=strategy)
                        )
                    self.assertEqual(cm.exception.code, 'strategy_mismatch')
        config = clean_bench_config(dict(base, family='opposite-square'))
        compare(config['strategies'], expected=['adstruct'])

    def test_budget_required(self):
        with self.assertRaises(ValidationError) as cm:
            clean_bench_config({'family': 'square', 'sizes': '20', 'seeds': '0'})
        self.assertIn('threshold or time exponent',
                      cm.exception.messages[0])


class TestInstances(SimpleTestCase):

    def test_k_star_instance(self):
        point = BenchPoint('k-star', 2, 'adstruct', 30, 0, time_exponent=Fraction(0))
        q, db = bench_instance(point)
        self.assertEqual(q.bound_vars, ('y1', 'y2'))
        self.assertEqual(db.total_size, 30)

    def test_graph_instance(self):
        point = BenchPoint('square', None, 'adstruct', 20, 3, threshold=2)
        q, db = bench_instance(point)
        self.assertEqual(q.name, 'Square')
        self.assertEqual(db.total_size, 20)
        compare(bench_instance(point)[1].relations['R'].tuples,
                expected=db.relations['R'].tuples)

    def test_negated_relations_get_rows(self):
        point = BenchPoint('negated-path', None, 'negation', 20, 1,
                           time_exponent=Fraction(0))
        q, db = bench_instance(point)
        compare([a.relation_name for a in q.negated_atoms], expected=['S', 'U'])
        compare(sorted(db.relations), expected=['R', 'S', 'T', 'U', 'V'])
        for name in 'STUV':
            compare(db[name].tuples, expected=db['R'].tuples)
        self.assertEqual(db.total_size, 100)

    def test_opposite_square_instance(self):
        point = BenchPoint('opposite-square', None, 'decomp', 20, 0,
                           time_exponent=Fraction(0))
        q, db = bench_instance(point)
        self.assertEqual(q.bound_vars, ('x1', 'x3'))
        self.assertEqual(db.total_size, 20)

    def test_custom_instance(self):
        point = BenchPoint(
            'custom', None, 'adstruct', 20, 0, threshold=2,
            query='Q(b x, b y) = R(x,y), S(y,z), T(x,z)',
        )
        q, db = bench_instance(point)
        self.assertEqual(len(db['S']), 20)
        self.assertEqual(db.total_size, 60)

    def test_custom_non_binary(self):
        point = BenchPoint(
            'custom', None, 'adstruct', 20, 0, threshold=2,
            query='Q(b x) = R(x,y,z)',
        )
        with self.assertRaises(ValidationError) as cm:
            bench_instance(point)
        self.assertEqual(cm.exception.code, 'invalid_config')

    def test_sample_requests(self):
        q = family_query('triangle')
        db = Database.from_rows(random_digraph(8, 20, 0))
        first = sample_requests(q, db, 25, (1, 20))
        self.assertEqual(len(first), 25)
        compare(sample_requests(q, db, 25, (1, 20)), expected=first)
        sources = db['R'].column('src')
        targets = db['R'].column('dst')
        for a in first:
            self.assertIn(a['x'], sources)
            self.assertIn(a['y'], targets)


class TestRun(SimpleTestCase):

    config = {
        'family': 'triangle', 'sizes': [20], 'time_exponents': ['0', '1/2'],
        'seeds': [0], 'sample_requests': 30,
    }

    def test_rows_are_reproducible(self):
        config = clean_bench_config(self.config)
        rows = run_bench(config)
        self.assertEqual(len(rows), 2)
        compare(run_bench(config), expected=rows)
        for row in rows:
            self.assertTrue(row.asserted)
            self.assertEqual(row.size, 20)
            self.assertIsNone(row.build_millis)
        self.assertAlmostEqual(rows[0].time_threshold, 1.0)
        self.assertAlmostEqual(rows[1].time_threshold, math.sqrt(20))

    def test_negated_family_run(self):
        config = clean_bench_config({
            'family': 'open-triangle', 'sizes': [20],
            'time_exponents': ['0', '1/2'], 'seeds': [0],
            'sample_requests': 20,
        })
        rows = run_bench(config)
        compare([(r.strategy, r.budget) for r in rows], expected=[
            ('negation', 'tau=0'), ('negation', 'tau=1/2'),
        ])
        self.assertEqual(rows[0].size, 60)
        check_bounds(rows)

    def test_timing(self):
        config = clean_bench_config(dict(self.config, timing=True))
        (row, _second) = run_bench(config)
        self.assertGreaterEqual(row.build_millis, 0)

    @tag('slow')
    def test_path_sweep(self):
        config = clean_bench_config({
            'family': 'k-path', 'k': 4, 'strategies': ['path', 'bfs'],
            'sizes': [40], 'deltas': [7, 40], 'seeds': [0, 1],
            'sample_requests': 50,
        })
        rows = run_bench(config)
        self.assertEqual(len(rows), 6)
        path_rows = [r for r in rows if r.strategy == 'path']
        self.assertTrue(all(r.asserted for r in path_rows))
        self.assertFalse(any(r.asserted for r in rows if r.strategy == 'bfs'))
        check_bounds(rows)

    @tag('slow')
    def test_set_disjointness_sweep(self):
        config = clean_bench_config({
            'family': 'k-star', 'k': 2, 'sizes': [2000],
            'thresholds': [10, 20, 40, 80, 160], 'seeds': [0],
            'sample_requests': 200,
        })
        rows = run_bench(config)
        check_bounds(rows)
        stored = [r.stored_entries for r in rows]
        compare(stored, expected=sorted(stored, reverse=True))
        for row in rows:
            self.assertLessEqual(row.space_constant, 1.0)


class TestBounds(SimpleTestCase):

    def test_check_bounds(self):
        check_bounds([make_row(), make_row(asserted=False, space_constant=99.0)])
        with self.assertRaises(BoundViolation) as cm:
            check_bounds([make_row(time_constant=9.0)])
        self.assertEqual(cm.exception.quantity, 'time_constant')
        self.assertIn('triangle, adstruct, |D|=100', str(cm.exception))
        with self.assertRaises(BoundViolation):
            check_bounds([make_row(space_constant=2.0)], constant=1.5)


class TestSlopes(SimpleTestCase):

    def test_fit(self):
        rows = [
            make_row(time_threshold=10.0, stored_entries=100),
            make_row(time_threshold=100.0, stored_entries=10),
            make_row(time_threshold=1000.0, stored_entries=0, saturated=True),
            make_row(strategy='decomp', time_threshold=10.0),
        ]
        slopes = fit_slopes(rows)
        self.assertAlmostEqual(slopes[('triangle', 0, 'adstruct', 100)], -1.0)
        self.assertIsNone(slopes[('triangle', 0, 'decomp', 100)])

    def test_plot_data(self):
        rows = [
            make_row(time_threshold=10.0, stored_entries=100),
            make_row(time_threshold=100.0, stored_entries=10),
        ]
        (series,) = plot_data(rows)['series']
        self.assertEqual(series['slope'], -1.0)
        self.assertEqual(series['points'][0]['log_t'], round(math.log(10), 6))
        self.assertIsNone(series['k'])


class TestCSV(SimpleTestCase):

    def test_write_rows(self):
        out = io.StringIO()
        write_rows(out, [make_row()])
        compare(out.getvalue().splitlines(), expected=[
            ','.join(CSV_COLUMNS),
            'triangle,,adstruct,0,100,tau=1/2,10.000000,50,200,12,3.500000,'
            '12,3/2,1/2,0.500000,0.100000,true,false',
        ])

    def test_timing_column(self):
        out = io.StringIO()
        write_rows(out, [replace(make_row(), build_millis=1.25)], timing=True)
        header, line = out.getvalue().splitlines()
        self.assertTrue(header.endswith(',build_millis'))
        self.assertTrue(line.endswith(',1.250000'))
