"""
Parsing of relation data files.

A relation file holds one tuple per line, columns in schema order, separated
by a single tab character, UTF-8 encoded and without a header.
"""
from typing import Optional, List, Tuple

from django.utils.translation import gettext_lazy as _

__all__ = ['RelationTSVParser']


class RelationTSVParser:
    delimiter = '\t'

    def __init__(self, tsv_file, arity: int):
        self.tsv_file = tsv_file
        self.arity = arity
        self._file_read = False
        # (line number, message, error code or None for the caller's default)
        self._errors: List[Tuple[int, str, Optional[str]]] = []
        self._objects: List[Tuple[str, ...]] = []

    def error(self, line_no: int, msg: str, code: Optional[str] = None):
        self._errors.append((line_no, msg, code))

    def parse_row(self, line_no: int, line: str) -> Optional[Tuple[str, ...]]:
        line = line.rstrip('\r\n')
        if not line:
            # trailing blank lines are harmless
            return None
        values = tuple(line.split(self.delimiter))
        if len(values) != self.arity:
            self.error(
                line_no,
                _('Expected %(arity)d columns, found %(found)d.') % {
                    'arity': self.arity, 'found': len(values)
                }
            )
            return None
        return values

    @property
    def errors(self):
        if not self._file_read:
            self._read()
        return self._errors

    @property
    def parsed_data(self):
        if not self._file_read:
            self._read()
        return self._objects

    def _read(self):
        if self.tsv_file is None:
            self._file_read = True
            return
        lines = iter(self.tsv_file)
        line_no = 0
        while True:
            try:
                line = next(lines)
            except StopIteration:
                break
            except UnicodeDecodeError:
                # decoding runs ahead in chunks, so the bad bytes are at or
                # after this line
                self.error(
                    line_no + 1, str(_('The file is not valid UTF-8 text.')),
                    code='encoding'
                )
                break
            line_no += 1
            t = self.parse_row(line_no, line)
            if t is not None:
                self._objects.append(t)
        self._file_read = True
