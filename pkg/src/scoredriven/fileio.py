"""CSV input and the plain-text result document.

A result document is a sequence of sections. ``[name]`` opens a key-value
section with one ``key = value`` per line; ``[table name]`` opens a
rectangular section holding a CSV header line and CSV rows. Reals are
written with 17 significant digits so a document reads back to the same
doubles, and missing values are written as ``NA``.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MISSING_TOKENS = ("", "NA")


class DataError(ValueError):
    """Malformed input data, with a location in the message."""


@dataclass
class DataTable:
    """Columns of a CSV file, kept as text until a column is requested."""

    path: str
    names: list
    rows: list

    @property
    def n_rows(self):
        return len(self.rows)

    def text(self, name):
        return [row[self._col(name)] for row in self.rows]

    def numeric(self, name):
        """Column as floats; empty cells and ``NA`` become NaN."""
        j = self._col(name)
        out = np.empty(len(self.rows))
        for i, row in enumerate(self.rows):
            cell = row[j].strip()
            if cell in MISSING_TOKENS:
                out[i] = np.nan
                continue
            try:
                out[i] = float(cell)
            except ValueError:
                raise DataError(
                    f"{self.path}: row {i + 2}, column {name!r}: {cell!r} is not a number"
                ) from None
        return out

    def _col(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"{self.path}: no column named {name!r} (columns: {', '.join(self.names)})") from None


def parse_data(path):
    """Read a CSV file with a header row.

    A single-column file may contain blank lines; they are read as missing
    values. Otherwise every row must have as many cells as the header.
    """
    try:
        with open(path, newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    if not lines or not lines[0].strip():
        raise DataError(f"{path}: missing header row")
    reader = csv.reader(lines)
    header = [h.strip() for h in next(reader)]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names")
    rows = []
    for i, row in enumerate(reader, start=2):
        if not row:
            row = [""]
            if len(header) != 1:
                continue
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        rows.append(row)
    return DataTable(str(path), header, rows)


def read_matrix(path, columns):
    """Numeric matrix of the named columns of a CSV file."""
    table = parse_data(path)
    return np.column_stack([table.numeric(c) for c in columns]) if columns else np.zeros((table.n_rows, 0))


def format_value(v):
    """Render a scalar for a result document."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NA"
        if math.isinf(v):
            return "Inf" if v > 0 else "-Inf"
        return f"{v:.17g}"
    if v is None:
        return "NA"
    if isinstance(v, (list, tuple, dict, np.ndarray)):
        return json.dumps(_jsonable(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(a) for a in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(a) for a in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(a) for k, a in v.items()}
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    return v


def parse_value(text):
    """Inverse of :func:`format_value` for scalars; JSON for lists and tables."""
    text = text.strip()
    if text == "NA":
        return math.nan
    if text in ("Inf", "-Inf"):
        return math.inf if text == "Inf" else -math.inf
    if text in ("true", "false"):
        return text == "true"
    if text[:1] in "[{":
        return json.loads(text)
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


@dataclass
class Table:
    """A rectangular section: column names and rows of cells."""

    columns: list
    rows: list

    def column(self, name):
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def numeric(self, name):
        return np.array([np.nan if isinstance(v, str) else float(v) for v in self.column(name)])

    def matrix(self, columns=None):
        columns = columns or self.columns
        return np.column_stack([self.numeric(c) for c in columns]) if self.rows else np.zeros((0, len(columns)))


@dataclass
class Document:
    """Ordered sections of a result document."""

    sections: dict = field(default_factory=dict)

    def add(self, name, content):
        if name in self.sections:
            raise ValueError(f"duplicate section {name!r}")
        self.sections[name] = content
        return content

    def __getitem__(self, name):
        return self.sections[name]

    def __contains__(self, name):
        return name in self.sections

    def render(self):
        out = []
        for name, content in self.sections.items():
            if isinstance(content, Table):
                out.append(f"[table {name}]")
                out.append(",".join(content.columns))
                out.extend(",".join(format_value(v) for v in row) for row in content.rows)
            else:
                out.append(f"[{name}]")
                out.extend(f"{k} = {format_value(v)}" for k, v in content.items())
            out.append("")
        return "\n".join(out)


def write_results(doc, path):
    """Write a :class:`Document` to ``path``."""
    try:
        Path(path).write_text(doc.render())
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror}") from None


def read_results(path):
    """Parse a result document written by :func:`write_results`."""
    doc = Document()
    current, is_table, header_pending = None, False, False
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("[") and line.endswith("]"):
            title = line[1:-1]
            is_table = title.startswith("table ")
            name = title[6:] if is_table else title
            current = doc.add(name, Table([], []) if is_table else {})
            header_pending = is_table
            continue
        if current is None:
            raise DataError(f"{path}: line {lineno} lies outside any section")
        if is_table:
            cells = next(csv.reader([line]))
            if header_pending:
                current.columns = cells
                header_pending = False
            else:
                current.rows.append([parse_value(c) for c in cells])
        else:
            key, sep, value = line.partition(" = ")
            if not sep:
                raise DataError(f"{path}: line {lineno} is not a 'key = value' pair")
            current[key] = parse_value(value)
    return doc
