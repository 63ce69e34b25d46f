from django.core.exceptions import ValidationError
from django.test import SimpleTestCase
from testfixtures import compare

from adorned_tradeoffs.families import QUERY_FAMILIES, family_query, family_text
from adorned_tradeoffs.query import (
    AccessRequest, Adornment, Atom, hypergraph_of, intern_request,
    is_path_query, parse_query, path_relations, positive_part,
)
from adorned_tradeoffs.relations import Database, UNKNOWN_CONSTANT


class TestParse(SimpleTestCase):

    def test_parse_negated_path(self):
        q = parse_query(
            'Q(b x1, b x6) = R(x1,x2), !S(x2,x3), T(x3,x4), V(x4,x5), '
            'W(x5,x6), U(x2,x3)'
        )
        self.assertEqual(q.name, 'Q')
        self.assertEqual(q.bound_vars, ('x1', 'x6'))
        self.assertTrue(q.is_boolean)
        compare(q.negated_atoms, expected=(Atom('S', ('x2', 'x3'), True),))
        self.assertEqual(len(q.positive_atoms), 5)
        self.assertEqual(
            q.variables, frozenset('x%d' % i for i in range(1, 7))
        )

    def test_render_round_trip(self):
        text = 'Q(b x, f y) = R(x,y), !S(x,y)'
        q = parse_query(text)
        self.assertEqual(str(q), text)
        self.assertEqual(parse_query(str(q)), q)
        self.assertFalse(q.is_boolean)
        self.assertEqual(q.free_head_vars, ('y',))

    def test_whitespace(self):
        q = parse_query('  Q( b x ,b y )=R( x , y ) ,  S(y,x)  ')
        self.assertEqual(q.head, (('x', Adornment.BOUND), ('y', Adornment.BOUND)))
        self.assertEqual(len(q.body), 2)

    def test_errors(self):
        cases = [
            ('Q(b x) R(x)', 'syntax'),
            ('Q(x) = R(x)', 'syntax'),
            ('Q(b x) = ', 'syntax'),
            ('Q(b x) = R(x,)', 'syntax'),
            ('Q(b x) = R(x),', 'syntax'),
            ('Q(b x) = R(x), S(x) ,', 'syntax'),
            ('Q(b x) = R(x),,S(x)', 'syntax'),
            ('Q(b x, b x) = R(x)', 'syntax'),
            ('Q(b x) = R(x,x)', 'repeated_variable'),
            ('Q(b x) = R(x), !S(x,z)', 'unsafe_negation'),
            ('Q(b x, b w) = R(x)', 'head_not_in_body'),
        ]
        for text, code in cases:
            with self.subTest(text=text):
                with self.assertRaises(ValidationError) as cm:
                    parse_query(text)
                self.assertEqual(cm.exception.code, code)

    def test_require_boolean(self):
        q = parse_query('Q(b x, f y) = R(x,y)')
        with self.assertRaises(ValidationError) as cm:
            q.require_boolean()
        self.assertEqual(cm.exception.code, 'non_boolean')

    def test_require_positive(self):
        q = parse_query('Q(b x) = R(x,y), !S(x,y)')
        with self.assertRaises(ValidationError) as cm:
            q.require_positive()
        self.assertEqual(cm.exception.code, 'negation_unsupported')
        positive_part(q).require_positive()


class TestHypergraph(SimpleTestCase):

    def test_triangle(self):
        h = hypergraph_of(family_query('triangle'))
        self.assertEqual(h.nodes, frozenset('xyz'))
        self.assertEqual(h.bound_nodes, frozenset('xy'))
        self.assertEqual(h.free_nodes, frozenset('z'))
        compare(h.edge_ids, expected=(0, 1, 2))
        self.assertEqual(h.edge(1), frozenset('yz'))

    def test_restrict(self):
        h = hypergraph_of(family_query('k-path', 3))
        sub = h.restrict({'x1', 'x2', 'x3'}, bound={'x1'})
        compare(sub.edge_ids, expected=(0, 1))
        self.assertEqual(sub.bound_nodes, frozenset({'x1'}))

    def test_negated_atoms_are_not_edges(self):
        q = family_query('open-triangle')
        h = hypergraph_of(positive_part(q))
        self.assertEqual(len(h.edges), 2)


class TestAccessRequest(SimpleTestCase):

    def test_for_query(self):
        q = family_query('triangle')
        a = AccessRequest.for_query(q, (3, 4))
        self.assertEqual(a['x'], 3)
        self.assertEqual(a.values_for(('y', 'x')), (4, 3))
        compare(a.restrict({'y'}), expected=AccessRequest((('y', 4),)))

    def test_arity(self):
        q = family_query('triangle')
        with self.assertRaises(ValidationError) as cm:
            AccessRequest.for_query(q, (1,))
        self.assertEqual(cm.exception.code, 'request_arity')

    def test_intern_unknown(self):
        db = Database.from_rows({'R': (('src', 'dst'), [('a', 'b')])})
        q = family_query('triangle')
        a = intern_request(q, db, ['a', 'nowhere'])
        self.assertEqual(a['y'], UNKNOWN_CONSTANT)


class TestFamilies(SimpleTestCase):

    def test_every_family_parses(self):
        for name in QUERY_FAMILIES:
            with self.subTest(name=name):
                q = family_query(name, 3)
                self.assertTrue(q.is_boolean)

    def test_k_required(self):
        with self.assertRaises(ValidationError) as cm:
            family_text('k-star')
        self.assertEqual(cm.exception.code, 'invalid_config')

    def test_unknown_family(self):
        with self.assertRaises(ValidationError) as cm:
            family_text('pentagon')
        self.assertEqual(cm.exception.code, 'invalid_config')

    def test_k_star_shape(self):
        q = family_query('k-star', 3)
        self.assertEqual(q.bound_vars, ('y1', 'y2', 'y3'))
        self.assertEqual(len(q.body), 3)


class TestPathRecognition(SimpleTestCase):

    def test_k_path(self):
        for k in range(2, 7):
            with self.subTest(k=k):
                q = family_query('k-path', k)
                self.assertEqual(path_relations(q), ['R'] * k)

    def test_shuffled_atoms(self):
        q = parse_query('P(b a, b d) = T(c,d), R(a,b), S(b,c)')
        self.assertEqual(path_relations(q), ['R', 'S', 'T'])

    def test_not_paths(self):
        for name in ('triangle', 'square', 'negated-path', 'k-star'):
            with self.subTest(name=name):
                self.assertFalse(is_path_query(family_query(name, 2)))

    def test_branching(self):
        q = parse_query('P(b a, b c) = R(a,b), S(b,c), T(b,d)')
        self.assertIsNone(path_relations(q))
