"""Observation matrices and their ingestion from delimited text."""
from __future__ import annotations

import csv
import logging
from importlib import resources
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DegenerateColumnError, ParseError

logger = logging.getLogger(__name__)

__all__ = ["DataMatrix", "read_data", "read_labels", "write_data", "tiny_dataset_path"]


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """``n x p`` observations, one column per variable.

    Parameters
    ----------
    values : array_like, shape (n, p)
        Rows are observations.
    names : sequence of str, optional
        Unique variable names; ``v0, v1, ...`` when omitted.
    de_labels : sequence of bool, optional
        Differential-expression flag per variable; all False when omitted.
    """

    values: np.ndarray
    names: tuple[str, ...] = field(default=())
    de_labels: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise ParseError(f"data must be two-dimensional, got shape {values.shape}")
        n, p = values.shape
        names = tuple(self.names) if len(self.names) else tuple(f"v{j}" for j in range(p))
        if len(names) != p:
            raise ParseError(f"{len(names)} names for {p} columns")
        dup = sorted({x for x in names if names.count(x) > 1}) if len(set(names)) != p else []
        if dup:
            raise ParseError("duplicate variable names: " + ", ".join(dup))
        if not np.all(np.isfinite(values)):
            raise ParseError("data contains missing or non-finite values")
        labels = np.zeros(p, dtype=bool) if self.de_labels is None else np.asarray(self.de_labels, dtype=bool)
        if labels.shape != (p,):
            raise ParseError(f"{labels.size} labels for {p} columns")
        if n < 2:
            raise ParseError("at least two observations are required")
        spread = values.max(axis=0) - values.min(axis=0)
        bad = [names[j] for j in np.flatnonzero(spread == 0)]
        if bad:
            raise DegenerateColumnError(bad)
        values.setflags(write=False)
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "de_labels", labels)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def with_labels(self, de_labels) -> "DataMatrix":
        return DataMatrix(self.values, self.names, de_labels)

    def index_of(self, name: str) -> int:
        return self.names.index(name)


def _delimiter(path: Path, sample: str) -> str:
    if path.suffix.lower() in (".tsv", ".tab"):
        return "\t"
    if path.suffix.lower() == ".csv":
        return ","
    return "\t" if sample.count("\t") > sample.count(",") else ","


def read_data(path, labels=None, log2: bool = False) -> DataMatrix:
    """Read a CSV/TSV file whose first row holds the variable names.

    ``labels`` may be a path to a labels file (see :func:`read_labels`) or a
    sequence of flags. With ``log2`` the values are replaced by their base-2
    logarithm, which requires strictly positive entries.
    """
    path = Path(path)
    text = path.read_text()
    delim = _delimiter(path, text[:4096])
    rows = [r for r in csv.reader(text.splitlines(), delimiter=delim) if r and any(x.strip() for x in r)]
    if len(rows) < 2:
        raise ParseError(f"{path}: need a header row and at least one observation")
    names = [x.strip() for x in rows[0]]
    values = np.empty((len(rows) - 1, len(names)))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(names):
            raise ParseError(f"{path}:{i}: expected {len(names)} fields, found {len(row)}")
        for j, x in enumerate(row):
            try:
                values[i - 2, j] = float(x)
            except ValueError:
                raise ParseError(f"{path}:{i}: cannot parse {x!r} in column {names[j]!r}") from None
    if log2:
        if np.any(values <= 0):
            raise ParseError(f"{path}: log2 transform requires strictly positive values")
        values = np.log2(values)
    flags = None
    if labels is not None:
        flags = read_labels(labels, names) if isinstance(labels, (str, Path)) else labels
    return DataMatrix(values, tuple(names), flags)


def read_labels(path, names: Sequence[str]) -> np.ndarray:
    """Read ``name,flag`` rows (flag 0 or 1) and align them to ``names``.

    A header row is skipped when its second field is not a flag. Unknown
    names are an error; variables without a row default to non-DE.
    """
    path = Path(path)
    text = path.read_text()
    delim = _delimiter(path, text[:4096])
    index = {x: j for j, x in enumerate(names)}
    flags = np.zeros(len(names), dtype=bool)
    given = set()
    for lineno, row in enumerate(csv.reader(text.splitlines(), delimiter=delim), start=1):
        if not row or not any(x.strip() for x in row):
            continue
        if len(row) != 2:
            raise ParseError(f"{path}:{lineno}: expected two fields, found {len(row)}")
        name, flag = row[0].strip(), row[1].strip()
        if flag not in ("0", "1"):
            if lineno == 1:
                continue
            raise ParseError(f"{path}:{lineno}: label must be 0 or 1, got {flag!r}")
        if name not in index:
            raise ParseError(f"{path}:{lineno}: unknown variable name {name!r}")
        flags[index[name]] = flag == "1"
        given.add(name)
    missing = len(names) - len(given)
    if missing:
        logger.warning("%d variables have no label and are treated as non-DE", missing)
    return flags


def write_data(path, data: DataMatrix, delimiter: str = ",") -> None:
    """Write ``data`` in the format accepted by :func:`read_data`."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow(data.names)
        for row in data.values:
            w.writerow([repr(float(x)) for x in row])


def tiny_dataset_path() -> Path:
    """Path of the bundled 10 x 6 example table."""
    return Path(str(resources.files("coexnet") / "datasets" / "tiny.csv"))
