"""
Relational storage.

Relations are sets of tuples over a schema of distinct variables. Constants are
interned to integers when a database is loaded, one intern table per database.
Indexes over a subset of the schema are built lazily on first request and
cached on the relation; they answer membership in π_S(R) and |σ_{S=t}(R)|
with a single hash lookup.
"""
import json
import logging
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import (
    Dict, Tuple, Iterable, Sequence, Optional, FrozenSet, List, Mapping,
)

from django.core.exceptions import ValidationError
from django.utils.functional import cached_property
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.forms.config import (
    ManifestRelationForm, form_errors_to_validation_error,
)
from adorned_tradeoffs.forms.tsv import RelationTSVParser
from adorned_tradeoffs.forms.utils import (
    ParserErrorAggregator, raise_collected,
)

__all__ = [
    'UNKNOWN_CONSTANT', 'InternTable', 'Schema', 'SubschemaIndex', 'Relation',
    'Database', 'build_index', 'select_count', 'load_database',
    'write_database',
]

logger = logging.getLogger(__name__)

# matches no tuple in any relation
UNKNOWN_CONSTANT = -1

Key = Tuple[int, ...]
Row = Tuple[int, ...]


class InternTable:

    def __init__(self):
        self._ids: Dict[str, int] = {}
        self._values: List[str] = []

    def intern(self, value: str) -> int:
        value = str(value)
        try:
            return self._ids[value]
        except KeyError:
            ident = len(self._values)
            self._ids[value] = ident
            self._values.append(value)
            return ident

    def lookup(self, value: str) -> int:
        return self._ids.get(str(value), UNKNOWN_CONSTANT)

    def value_of(self, ident: int) -> str:
        if ident == UNKNOWN_CONSTANT:
            return '?'
        return self._values[ident]

    def __len__(self):
        return len(self._values)


@dataclass(frozen=True)
class Schema:
    variables: Tuple[str, ...]

    def __post_init__(self):
        if not self.variables:
            raise ValidationError(
                _('A schema must have at least one variable.'),
                code='bad_manifest'
            )
        if len(set(self.variables)) != len(self.variables):
            raise ValidationError(
                _('Schema %(schema)s repeats a variable.'),
                code='bad_manifest', params={'schema': self.variables}
            )

    @property
    def arity(self) -> int:
        return len(self.variables)

    def positions(self, key_vars: Sequence[str]) -> Tuple[int, ...]:
        try:
            return tuple(self.variables.index(v) for v in key_vars)
        except ValueError:
            raise ValidationError(
                _('Variables %(key)s are not a subset of schema %(schema)s.'),
                code='not_subset',
                params={'key': tuple(key_vars), 'schema': self.variables}
            )


class SubschemaIndex:
    """
    Hash index over a subset of a relation's schema. Each key maps to the
    tuples of the relation that agree with it, so counts and membership are a
    single lookup.
    """

    def __init__(self, key_vars: Tuple[str, ...], entries: Dict[Key, List[Row]]):
        self.key_vars = key_vars
        self.entries = entries

    def count(self, key: Key) -> int:
        try:
            return len(self.entries[key])
        except KeyError:
            return 0

    def contains(self, key: Key) -> bool:
        return key in self.entries

    def matching(self, key: Key) -> Sequence[Row]:
        return self.entries.get(key, ())

    def keys(self):
        return self.entries.keys()

    def __len__(self):
        return len(self.entries)

    @property
    def stored_entries(self) -> int:
        return sum(len(v) for v in self.entries.values())


class Relation:

    def __init__(self, name: str, schema: Schema, tuples: Iterable[Row]):
        self.name = name
        self.schema = schema
        self.tuples: FrozenSet[Row] = frozenset(tuples)
        self._indexes: Dict[Tuple[str, ...], SubschemaIndex] = {}
        self._extensions: Dict[Tuple[Tuple[str, ...], str], dict] = {}

    def __len__(self):
        return len(self.tuples)

    def __contains__(self, row: Row):
        return row in self.tuples

    def __repr__(self):
        return 'Relation(%s%s, |R|=%d)' % (
            self.name, self.schema.variables, len(self)
        )

    @property
    def variables(self) -> Tuple[str, ...]:
        return self.schema.variables

    def index(self, key_vars: Sequence[str]) -> SubschemaIndex:
        key_vars = tuple(key_vars)
        try:
            return self._indexes[key_vars]
        except KeyError:
            pass
        positions = self.schema.positions(key_vars)
        entries: Dict[Key, List[Row]] = defaultdict(list)
        # sorted so that postings (and everything iterating them) are
        # deterministic across runs
        for row in sorted(self.tuples):
            entries[tuple(row[p] for p in positions)].append(row)
        index = SubschemaIndex(key_vars, dict(entries))
        self._indexes[key_vars] = index
        logger.debug(
            'Built index on %(rel)s%(key)s with %(keys)d keys',
            {'rel': self.name, 'key': key_vars, 'keys': len(index)}
        )
        return index

    def extensions(self, key_vars: Sequence[str], var: str) -> Dict[Key, Tuple[int, ...]]:
        """
        For every key over key_vars, the sorted distinct values that var takes
        in the matching tuples (one level of a trie).
        """
        cache_key = (tuple(key_vars), var)
        try:
            return self._extensions[cache_key]
        except KeyError:
            pass
        (var_pos,) = self.schema.positions((var,))
        ext = {
            key: tuple(sorted({row[var_pos] for row in rows}))
            for key, rows in self.index(key_vars).entries.items()
        }
        self._extensions[cache_key] = ext
        return ext

    def column(self, var: str) -> FrozenSet[int]:
        (pos,) = self.schema.positions((var,))
        return frozenset(row[pos] for row in self.tuples)

    @property
    def index_entries(self) -> int:
        return sum(idx.stored_entries for idx in self._indexes.values())


def build_index(rel: Relation, key_vars: Sequence[str]) -> SubschemaIndex:
    return rel.index(key_vars)


def select_count(rel: Relation, key_vars: Sequence[str], key: Key) -> int:
    return rel.index(key_vars).count(tuple(key))


class Database:

    def __init__(self, relations: Mapping[str, Relation],
                 interner: Optional[InternTable] = None):
        self.relations: Dict[str, Relation] = dict(relations)
        self.interner = interner if interner is not None else InternTable()

    def __getitem__(self, name: str) -> Relation:
        try:
            return self.relations[name]
        except KeyError:
            raise ValidationError(
                _('Unknown relation %(name)s.'), code='unknown_relation',
                params={'name': name}
            )

    def __contains__(self, name):
        return name in self.relations

    @property
    def total_size(self) -> int:
        return sum(len(r) for r in self.relations.values())

    @property
    def index_entries(self) -> int:
        return sum(r.index_entries for r in self.relations.values())

    @cached_property
    def active_domain(self) -> FrozenSet[int]:
        return frozenset(
            v for r in self.relations.values() for row in r.tuples for v in row
        )

    @classmethod
    def from_rows(cls, spec: Mapping[str, Tuple[Sequence[str], Iterable[Sequence]]],
                  interner: Optional[InternTable] = None) -> 'Database':
        """
        Build a database from raw rows: {name: (variables, rows)}.
        Raw constants are interned in sorted order per relation so that ids
        do not depend on set iteration order.
        """
        interner = interner if interner is not None else InternTable()
        relations = {}
        for name, (variables, rows) in spec.items():
            schema = Schema(tuple(variables))
            rows = sorted(tuple(str(v) for v in row) for row in rows)
            for row in rows:
                if len(row) != schema.arity:
                    raise ValidationError(
                        _('Relation %(rel)s expects %(arity)d columns, '
                          'got %(row)s.'),
                        code='arity',
                        params={'rel': name, 'arity': schema.arity, 'row': row}
                    )
            relations[name] = Relation(
                name, schema,
                (tuple(interner.intern(v) for v in row) for row in rows)
            )
        return cls(relations, interner)

    def with_relations(self, relations: Mapping[str, Relation]) -> 'Database':
        """
        Database over already-interned relations that shares this database's
        intern table.
        """
        return Database(relations, self.interner)

    def intern_values(self, values: Sequence[str]) -> Tuple[int, ...]:
        return tuple(self.interner.lookup(v) for v in values)

    def raw_values(self, ids: Sequence[int]) -> Tuple[str, ...]:
        return tuple(self.interner.value_of(i) for i in ids)


def load_database(manifest_path: str) -> Database:
    """
    Load every relation named in a JSON manifest of the form
    {"relations": [{"name": ..., "vars": [...], "file": ...}]}.
    Data file paths are resolved relative to the manifest.
    """
    if not os.path.isfile(manifest_path):
        raise ValidationError(
            _('Manifest %(path)s does not exist.'), code='missing_file',
            params={'path': manifest_path}
        )
    with open(manifest_path, encoding='utf-8') as f:
        try:
            manifest = json.load(f)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ValidationError(
                _('Manifest %(path)s is not valid JSON: %(err)s'),
                code='bad_manifest', params={'path': manifest_path, 'err': e}
            )
    try:
        entries = manifest['relations']
    except (KeyError, TypeError):
        raise ValidationError(
            _('Manifest %(path)s has no "relations" list.'),
            code='bad_manifest', params={'path': manifest_path}
        )

    base_dir = os.path.dirname(os.path.abspath(manifest_path))
    interner = InternTable()
    relations: Dict[str, Relation] = {}
    aggregator = ParserErrorAggregator()
    for entry in entries:
        form = ManifestRelationForm(data=entry)
        if not form.is_valid():
            raise form_errors_to_validation_error(form, 'bad_manifest')
        name = form.cleaned_data['name']
        if name in relations:
            raise ValidationError(
                _('Relation %(name)s is declared twice.'),
                code='duplicate_relation', params={'name': name}
            )
        schema = Schema(tuple(form.cleaned_data['vars']))
        data_path = os.path.join(base_dir, form.cleaned_data['file'])
        if not os.path.isfile(data_path):
            raise ValidationError(
                _('Data file %(path)s for relation %(name)s does not exist.'),
                code='missing_file', params={'path': data_path, 'name': name}
            )
        with open(data_path, encoding='utf-8') as data_file:
            parser = RelationTSVParser(data_file, schema.arity)
            rows = parser.parsed_data
            aggregator.absorb(form.cleaned_data['file'], parser)
        relations[name] = Relation(
            name, schema,
            (tuple(interner.intern(v) for v in row) for row in rows)
        )
    raise_collected(aggregator, 'arity')
    db = Database(relations, interner)
    logger.info(
        'Loaded %(count)d relations from %(path)s, |D|=%(size)d',
        {'count': len(relations), 'path': manifest_path,
         'size': db.total_size}
    )
    return db


def write_database(spec: Mapping[str, Tuple[Sequence[str], Iterable[Sequence]]],
                   directory: str, manifest_name: str = 'manifest.json') -> str:
    """
    Write raw rows as TSV files plus a manifest; the inverse of load_database.
    Rows are deduplicated and sorted so the output is reproducible.
    """
    os.makedirs(directory, exist_ok=True)
    manifest = {'relations': []}
    for name, (variables, rows) in spec.items():
        file_name = '%s.tsv' % name
        distinct = sorted({tuple(str(v) for v in row) for row in rows})
        with open(os.path.join(directory, file_name), 'w',
                  encoding='utf-8', newline='') as f:
            for row in distinct:
                f.write('\t'.join(row) + '\n')
        manifest['relations'].append(
            {'name': name, 'vars': list(variables), 'file': file_name}
        )
    manifest_path = os.path.join(directory, manifest_name)
    with open(manifest_path, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')
    return manifest_path
