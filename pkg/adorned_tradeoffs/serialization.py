"""
Structure files written by the build command and read by the query command.

A structure file records the query, the database manifest it was built
over, the build parameters and everything the build computed: stored heavy
answers, bag indexes, free-variable joins, heavy/light splits and
materialized views. Constants are written raw, so a structure is restored
over a freshly loaded database without building anything again.
"""
import json
import logging
import os
from fractions import Fraction
from typing import Dict, Optional, Tuple

from django.core.exceptions import ValidationError
from django.utils.translation import gettext_lazy as _

from adorned_tradeoffs.covers import cover_from_json
from adorned_tradeoffs.decompositions import (
    DecompStructure, decomposition_from_json, restore_decomp_structure,
)
from adorned_tradeoffs.paths import (
    BreadthFirstPath, HeavyLightSplit, PathInstance, PathStructure4,
    PathStructureK, restore_path4, restore_pathk,
)
from adorned_tradeoffs.query import AdornedQuery, parse_query
from adorned_tradeoffs.relations import Database, load_database
from adorned_tradeoffs.strategies import BuiltStructure
from adorned_tradeoffs.structures import (
    SpaceLedger, StoredIndex, TradeoffStructure,
)
from adorned_tradeoffs.utils import format_fraction, parse_fraction
from adorned_tradeoffs.wcoj import Threshold

__all__ = [
    'FORMAT_VERSION', 'structure_to_json', 'write_structure',
    'load_structure', 'database_fingerprint',
]

logger = logging.getLogger(__name__)

FORMAT_VERSION = 2

LEDGER_FIELDS = (
    'stored_entries', 'index_entries', 'heavy_chain_holds', 'valid_requests',
    'all_valid_stored',
)


def _structure_error(msg, **params):
    return ValidationError(msg, code='structure_file', params=params)


def database_fingerprint(db: Database) -> dict:
    return {
        'total_size': db.total_size,
        'relations': {
            name: len(rel) for name, rel in sorted(db.relations.items())
        },
    }


def _raw_list(db: Database, ids) -> list:
    return sorted(db.raw_values(tuple(ids)))


def _raw_pairs(db: Database, pairs) -> list:
    return sorted(list(db.raw_values(pair)) for pair in pairs)


def _ids(db: Database, raw) -> frozenset:
    return frozenset(db.intern_values(raw))


def _pairs(db: Database, raw_pairs) -> frozenset:
    return frozenset(db.intern_values(pair) for pair in raw_pairs)


def _ledger_from_json(data: dict) -> SpaceLedger:
    return SpaceLedger(**{k: data[k] for k in LEDGER_FIELDS})


def _index_to_json(stored: StoredIndex, db: Database) -> dict:
    return {
        'threshold': {
            'base': format_fraction(Fraction(stored.threshold.base)),
            'exponent': format_fraction(stored.threshold.exponent),
        },
        'cover': stored.cover.to_json(),
        'covered': sorted(stored.cover.cover.covered_set),
        'bound_vars': list(stored.bound_vars),
        'entries': sorted(
            [list(db.raw_values(key)), value]
            for key, value in stored.entries.items()
        ),
        'ledger': stored.ledger.to_json(),
    }


def _index_from_json(data: dict, db: Database) -> StoredIndex:
    base = parse_fraction(data['threshold']['base'])
    if base.denominator == 1:
        base = int(base)
    return StoredIndex(
        cover=cover_from_json(data['cover'], data['covered']),
        threshold=Threshold(base, parse_fraction(data['threshold']['exponent'])),
        bound_vars=tuple(data['bound_vars']),
        entries={
            db.intern_values(raw): bool(value)
            for raw, value in data['entries']
        },
        ledger=_ledger_from_json(data['ledger']),
    )


def _decomp_to_json(s: DecompStructure) -> dict:
    db = s.db

    def raw_binding(values: Dict[str, int]) -> Dict[str, str]:
        names = sorted(values)
        return dict(zip(names, db.raw_values(tuple(values[v] for v in names))))

    negated = list(s.query.negated_atoms)
    return {
        'decomposition': s.decomposition.to_json(),
        'root_negations': [negated.index(atom) for atom, _rel in s.root_negations],
        'bags': {
            node_id: _index_to_json(StoredIndex.of(st), db)
            for node_id, st in sorted(s.node_structures.items())
        },
        'free': {
            node_id: [[raw_binding(values), bit] for values, bit in index.tuples]
            for node_id, index in sorted(s.free_indexes.items())
        },
        'anchor': (
            None if s.anchor_structure is None
            else _index_to_json(StoredIndex.of(s.anchor_structure), db)
        ),
        'ledger': s.ledger.to_json(),
    }


def _decomp_from_json(q: AdornedQuery, db: Database, data: dict) -> DecompStructure:
    def binding(raw: Dict[str, str]) -> Dict[str, int]:
        names = sorted(raw)
        return dict(zip(names, db.intern_values([raw[v] for v in names])))

    negated = q.negated_atoms
    anchor = data['anchor']
    return restore_decomp_structure(
        q, db, decomposition_from_json(data['decomposition']),
        bag_indexes={
            node_id: _index_from_json(index, db)
            for node_id, index in data['bags'].items()
        },
        free_tuples={
            node_id: [
                (binding(values), None if bit is None else bool(bit))
                for values, bit in rows
            ]
            for node_id, rows in data['free'].items()
        },
        anchor=None if anchor is None else _index_from_json(anchor, db),
        ledger=_ledger_from_json(data['ledger']),
        root_negations=[negated[i] for i in data['root_negations']],
    )


def _level_key(relations: Tuple[str, ...]) -> str:
    return ','.join(relations)


def _path_to_json(root) -> dict:
    db = root.instance.db
    levels = {}

    def view_map(view: Dict[int, Tuple[int, ...]]) -> list:
        return sorted(
            [db.raw_values((x,))[0], _raw_list(db, values)]
            for x, values in view.items()
        )

    def add(s):
        key = _level_key(s.instance.relations)
        if key in levels:
            return
        if isinstance(s, PathStructure4):
            levels[key] = {
                'heavy': _raw_list(db, s.split.heavy),
                'light': _raw_list(db, s.split.light),
                'v1': view_map(s.v1),
                'v2': view_map(s.v2),
                'v3': _raw_pairs(db, s.v3.tuples),
                'inner': _index_to_json(StoredIndex.of(s.inner), db),
            }
        else:
            levels[key] = {
                'heavy_sources': _raw_list(db, s.heavy_sources),
                'heavy_targets': _raw_list(db, s.heavy_targets),
                'view': _raw_pairs(db, s.view),
            }
        for sub in s.substructures():
            add(sub)

    add(root)
    return {'delta': root.delta, 'levels': levels}


def _path_from_json(q: AdornedQuery, db: Database, data: dict):
    delta = int(data['delta'])
    levels = data['levels']
    memo = {}

    def view_map(rows) -> Dict[int, Tuple[int, ...]]:
        return {
            db.intern_values([x])[0]: tuple(sorted(db.intern_values(values)))
            for x, values in rows
        }

    def restore_level(instance: PathInstance):
        key = instance.relations
        if key in memo:
            return memo[key]
        level = levels[_level_key(key)]
        if instance.k == 4:
            split = HeavyLightSplit(
                delta, _ids(db, level['heavy']), _ids(db, level['light'])
            )
            structure = restore_path4(
                instance, delta, split, view_map(level['v1']),
                view_map(level['v2']), _pairs(db, level['v3']),
                _index_from_json(level['inner'], db),
            )
        else:
            first = restore_level(instance.sub(key[1:]))
            last = restore_level(instance.sub(key[:-1]))
            structure = restore_pathk(
                instance, delta, _ids(db, level['heavy_sources']),
                _ids(db, level['heavy_targets']), _pairs(db, level['view']),
                first, last,
            )
        memo[key] = structure
        return structure

    return restore_level(PathInstance.from_query(q, db))


def structure_to_json(built: BuiltStructure, manifest_path: str) -> dict:
    data = built.summary()
    data.update({
        'version': FORMAT_VERSION,
        'manifest': os.path.abspath(manifest_path),
        'database': database_fingerprint(built.db),
    })
    s = built.structure
    if isinstance(s, TradeoffStructure):
        data['heavy_index'] = _index_to_json(StoredIndex.of(s), built.db)
    elif isinstance(s, DecompStructure):
        data['decomposition_structure'] = _decomp_to_json(s)
    elif isinstance(s, (PathStructure4, PathStructureK)):
        data['path_structure'] = _path_to_json(s)
    return data


def write_structure(built: BuiltStructure, manifest_path: str, path: str):
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(structure_to_json(built, manifest_path), f, indent=1,
                  sort_keys=True)
        f.write('\n')
    logger.info(
        'Wrote %(strategy)s structure for %(query)s to %(path)s',
        {'strategy': built.strategy, 'query': built.query.name, 'path': path}
    )


def _restore(strategy: str, q: AdornedQuery, db: Database, data: dict):
    if strategy == 'adstruct':
        return _index_from_json(data['heavy_index'], db).restore_over(q, db)
    if strategy in ('decomp', 'negation'):
        return _decomp_from_json(q, db, data['decomposition_structure'])
    if strategy == 'path':
        return _path_from_json(q, db, data['path_structure'])
    if strategy == 'bfs':
        return BreadthFirstPath(PathInstance.from_query(q, db))
    raise _structure_error(
        _('Unknown strategy %(strategy)s in structure file.'), strategy=strategy
    )


def load_structure(path: str, manifest_path: Optional[str] = None) -> BuiltStructure:
    """
    Load a structure file. The database is read from the manifest recorded
    in the file unless ``manifest_path`` overrides it, and must have the
    relation sizes recorded at build time.
    """
    if not os.path.isfile(path):
        raise ValidationError(
            _('Structure file %(path)s does not exist.'), code='missing_file',
            params={'path': path}
        )
    with open(path, encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise _structure_error(
                _('Structure file %(path)s is not valid JSON: %(err)s'),
                path=path, err=e
            )
    if not isinstance(data, dict) or data.get('version') != FORMAT_VERSION:
        raise _structure_error(
            _('Structure file %(path)s has an unsupported format version.'),
            path=path
        )
    try:
        strategy = data['strategy']
        query_text = data['query']
        parameters = data['parameters']
        stored_manifest = data['manifest']
        fingerprint = data['database']
    except KeyError:
        raise _structure_error(
            _('Structure file %(path)s misses required fields.'), path=path
        )

    q = parse_query(query_text)
    db = load_database(manifest_path or stored_manifest)
    if database_fingerprint(db) != fingerprint:
        raise _structure_error(
            _('The database no longer matches the one the structure was '
              'built over.')
        )
    try:
        structure = _restore(strategy, q, db, data)
    except (KeyError, TypeError, ValueError, IndexError, AttributeError):
        raise _structure_error(
            _('The stored %(strategy)s structure in %(path)s is malformed.'),
            strategy=strategy, path=path
        )
    logger.debug(
        'Restored %(strategy)s structure from %(path)s',
        {'strategy': strategy, 'path': path}
    )

    def exponent(name):
        value = data.get(name)
        return None if value is None else parse_fraction(value)

    return BuiltStructure(
        strategy, q, db, structure, parameters=parameters,
        predicted_space_exponent=exponent('predicted_space_exponent'),
        predicted_time_exponent=exponent('predicted_time_exponent'),
    )
