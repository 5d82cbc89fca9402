"""Block-wise observed (split questionnaire) datasets.

Covariates are split into a common block ``blocks[0]`` observed for every
case and ``M`` further blocks. Complete cases observe everything; every
other case observes the common block plus exactly one further block.

Columns are 0-based throughout. Missing covariate values are ``NaN``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import CsvParseError, DataError, InvalidPartitionError, PatternError

__all__ = [
    "BlockPartition",
    "DataBlock",
    "PatternReport",
    "SqdDataset",
    "detect_pattern",
    "ingest_csv",
    "load_partition_config",
    "make_partition",
    "split_blocks",
    "write_csv",
]


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class BlockPartition:
    """Disjoint covariate index sets ``blocks[0]`` (common) .. ``blocks[M]``.

    Use :func:`make_partition` for the contiguous layout, or
    :meth:`from_index_sets` for arbitrary column sets.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(int(j) for j in b) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if len(blocks) < 2:
            raise InvalidPartitionError("need a common block and at least one further block (M >= 1)")
        flat = [j for b in blocks for j in b]
        if len(flat) != len(set(flat)):
            raise InvalidPartitionError("blocks overlap")
        if sorted(flat) != list(range(len(flat))):
            raise InvalidPartitionError(f"blocks must cover columns 0..{len(flat) - 1} exactly")
        for m, b in enumerate(blocks[1:], start=1):
            if not b:
                raise InvalidPartitionError(f"block {m} is empty; only the common block may be empty")

    @classmethod
    def from_index_sets(cls, blocks: Sequence[Sequence[int]]) -> "BlockPartition":
        return cls(tuple(tuple(sorted(int(j) for j in b)) for b in blocks))

    @property
    def sizes(self) -> tuple:
        return tuple(len(b) for b in self.blocks)

    @property
    def p(self) -> int:
        return sum(self.sizes)

    @property
    def M(self) -> int:
        return len(self.blocks) - 1

    @property
    def common(self) -> tuple:
        return self.blocks[0]

    def observed(self, m: int) -> tuple:
        """Columns observed by cases in group ``m`` (all columns for m = 0)."""
        if m == 0:
            return tuple(range(self.p))
        return tuple(sorted(self.blocks[0] + self.blocks[m]))

    def to_dict(self) -> dict:
        return {"blocks": [list(b) for b in self.blocks]}

    @classmethod
    def from_dict(cls, d: dict) -> "BlockPartition":
        if "blocks" in d:
            return cls.from_index_sets(d["blocks"])
        sizes = d["block_sizes"]
        return make_partition(sum(sizes), sizes)


def make_partition(p: int, block_sizes: Sequence[int]) -> BlockPartition:
    """Contiguous partition: the common block takes the first ``block_sizes[0]`` columns, and so on.

    >>> make_partition(3, (0, 1, 2)).blocks
    ((), (0,), (1, 2))
    """
    sizes = [int(s) for s in block_sizes]
    if any(s < 0 for s in sizes):
        raise InvalidPartitionError(f"negative block size in {sizes}")
    if sum(sizes) != p:
        raise InvalidPartitionError(f"block sizes {sizes} sum to {sum(sizes)}, expected p={p}")
    edges = np.cumsum([0] + sizes)
    return BlockPartition(tuple(tuple(range(edges[k], edges[k + 1])) for k in range(len(sizes))))


@dataclass(frozen=True)
class PatternReport:
    """Group assignment of each case; ``assignment[i] == -1`` marks a violation."""

    partition: BlockPartition
    assignment: np.ndarray
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def groups(self) -> tuple:
        return tuple(np.flatnonzero(self.assignment == m) for m in range(self.partition.M + 1))


def _describe_violation(observed_row, partition):
    common = partition.blocks[0]
    if common and not observed_row[list(common)].all():
        return "common block partially missing"
    touched = [m for m in range(1, partition.M + 1) if observed_row[list(partition.blocks[m])].any()]
    if not touched:
        return "no non-common block observed"
    if len(touched) > 1:
        return f"observes blocks {touched}: overlapping pattern unsupported"
    return f"block {touched[0]} partially observed"


def detect_pattern(y, X, partition: BlockPartition) -> PatternReport:
    """Assign each case to its group S_0..S_M from the missingness of ``X``.

    Fully observed cases go to S_0. A case whose observed set is not exactly
    one of the allowed patterns is recorded as a violation, never down-masked.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2 or X.shape[1] != partition.p:
        raise DataError(f"X has shape {X.shape}, partition expects {partition.p} columns")
    if X.shape[0] != y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    observed = ~np.isnan(X)
    patterns = np.zeros((partition.M + 1, partition.p), dtype=bool)
    for m in range(partition.M + 1):
        patterns[m, list(partition.observed(m))] = True
    match = (observed[:, None, :] == patterns[None, :, :]).all(axis=2)
    assignment = np.where(match.any(axis=1), match.argmax(axis=1), -1)
    violations = []
    for i in np.flatnonzero(np.isnan(y)):
        violations.append((int(i), "response missing"))
        assignment[i] = -1
    for i in np.flatnonzero(assignment == -1):
        if not np.isnan(y[i]):
            violations.append((int(i), _describe_violation(observed[i], partition)))
    violations.sort()
    assignment.setflags(write=False)
    return PatternReport(partition, assignment, violations)


@dataclass(frozen=True, eq=False)
class SqdDataset:
    """Responses, covariates (NaN = unobserved) and the case groups S_0..S_M.

    Build with :meth:`from_arrays`, which validates the observation pattern.
    The requirement ``n_0 > p`` is checked when fitting, not here.
    """

    y: np.ndarray
    X: np.ndarray
    partition: BlockPartition
    groups: tuple
    covariate_names: tuple = ()
    response_name: str = "y"

    @classmethod
    def from_arrays(cls, y, X, partition, covariate_names=None, response_name="y"):
        y = _frozen(np.asarray(y, dtype=float).ravel())
        X = _frozen(X)
        report = detect_pattern(y, X, partition)
        if not report.ok:
            shown = "; ".join(f"case {i}: {d}" for i, d in report.violations[:10])
            more = "" if len(report.violations) <= 10 else f" (+{len(report.violations) - 10} more)"
            raise PatternError(f"{len(report.violations)} case(s) violate the block pattern: {shown}{more}",
                               report.violations)
        if covariate_names is None:
            covariate_names = tuple(f"x{j + 1}" for j in range(partition.p))
        groups = tuple(_frozen(g, dtype=np.intp) for g in report.groups())
        return cls(y, X, partition, groups, tuple(covariate_names), response_name)

    @property
    def mask(self) -> np.ndarray:
        return ~np.isnan(self.X)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def group_sizes(self) -> tuple:
        return tuple(len(g) for g in self.groups)

    @property
    def complete(self) -> np.ndarray:
        return self.groups[0]


@dataclass(frozen=True, eq=False)
class DataBlock:
    """One of the M+2 data blocks D_0..D_{M+1}.

    ``skip`` is set for D_1 when the common block is empty (zero columns).
    """

    block_id: int
    y: np.ndarray
    X: np.ndarray
    cases: np.ndarray
    covariates: tuple
    skip: bool = False

    @property
    def shape(self):
        return self.X.shape


def split_blocks(dataset: SqdDataset) -> list:
    """Cut ``dataset`` into D_0 (complete cases, all columns), D_1 (incomplete cases,
    common columns, groups in order S_1..S_M) and D_{m+1} (S_m, block m columns)."""
    part = dataset.partition
    X, y = dataset.X, dataset.y

    def block(m, cases, cols, skip=False):
        cases = np.asarray(cases, dtype=np.intp)
        cols = tuple(cols)
        return DataBlock(m, _frozen(y[cases]), _frozen(X[np.ix_(cases, cols)]), _frozen(cases, np.intp), cols, skip)

    out = [block(0, dataset.groups[0], range(part.p))]
    incomplete = np.concatenate([dataset.groups[m] for m in range(1, part.M + 1)])
    out.append(block(1, incomplete, part.common, skip=not part.common))
    for m in range(1, part.M + 1):
        out.append(block(m + 1, dataset.groups[m], part.blocks[m]))
    return out


# --------------------------------------------------------------------------
# CSV ingestion
# --------------------------------------------------------------------------

def load_partition_config(source):
    """Read the sidecar partition config.

    Accepts a path, an open file or an already-parsed dict of the form
    ``{"block_sizes": [3, 5, 5], "response": "y", "na": "NA"}``; ``"blocks"``
    (explicit index lists) may replace ``"block_sizes"``.

    Returns
    -------
    partition : BlockPartition
    response : str
    na : str
    """
    if isinstance(source, dict):
        cfg = source
    elif hasattr(source, "read"):
        cfg = json.load(source)
    else:
        with open(source, encoding="utf-8") as fh:
            cfg = json.load(fh)
    unknown = set(cfg) - {"block_sizes", "blocks", "response", "na"}
    if unknown:
        raise DataError(f"unknown partition config keys: {sorted(unknown)}")
    if ("block_sizes" in cfg) == ("blocks" in cfg):
        raise DataError("partition config needs exactly one of 'block_sizes' or 'blocks'")
    return BlockPartition.from_dict(cfg), cfg.get("response", "y"), cfg.get("na", "NA")


def _open_text(source):
    if hasattr(source, "read"):
        return source, False
    if isinstance(source, (str, os.PathLike)):
        return open(source, encoding="utf-8", newline=""), True
    raise TypeError(f"cannot read CSV from {type(source).__name__}")


def _parse_number(text, line, column):
    try:
        value = float(text)
    except ValueError:
        raise CsvParseError(f"line {line}, column {column!r}: cannot parse {text!r} as a number",
                            line, column) from None
    if not math.isfinite(value):
        raise CsvParseError(f"line {line}, column {column!r}: non-finite value {text!r}", line, column)
    return value


def ingest_csv(source, partition: BlockPartition, response: str = "y", na: str = "NA") -> SqdDataset:
    """Read a block-wise observed dataset from CSV.

    The first row is a header. Every column other than ``response`` is a
    covariate, taken in header order; there must be ``partition.p`` of them.
    Fields equal to ``na`` (after stripping whitespace) are missing.

    Raises
    ------
    CsvParseError
        A field is not a finite number; the message names line and column.
    DataError
        Empty file, no data rows, missing response column or missing response value.
    PatternError
        Some cases do not follow the block pattern.
    """
    fh, close = _open_text(source)
    try:
        rows = list(csv.reader(fh))
    finally:
        if close:
            fh.close()
    if not rows:
        raise DataError("empty file: header row missing")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise DataError(f"response column {response!r} not in header {header}")
    r_idx = header.index(response)
    cov_idx = [j for j in range(len(header)) if j != r_idx]
    if len(cov_idx) != partition.p:
        raise InvalidPartitionError(f"CSV has {len(cov_idx)} covariate columns, partition expects {partition.p}")
    body = [(k + 2, r) for k, r in enumerate(rows[1:]) if any(f.strip() for f in r)]
    if not body:
        raise DataError("no cases after header")
    y = np.empty(len(body))
    X = np.empty((len(body), partition.p))
    for i, (line, row) in enumerate(body):
        if len(row) != len(header):
            raise CsvParseError(f"line {line}: expected {len(header)} fields, found {len(row)}", line)
        field_r = row[r_idx].strip()
        if field_r == na:
            raise DataError(f"line {line} (case {i}): response {response!r} is missing")
        y[i] = _parse_number(field_r, line, response)
        for k, j in enumerate(cov_idx):
            f = row[j].strip()
            X[i, k] = np.nan if f == na else _parse_number(f, line, header[j])
    names = tuple(header[j] for j in cov_idx)
    return SqdDataset.from_arrays(y, X, partition, covariate_names=names, response_name=response)


def write_csv(dataset: SqdDataset, dest=None, na: str = "NA"):
    """Serialize ``dataset`` in the ingestion format; floats use shortest round-trip repr.

    Returns the CSV text when ``dest`` is None.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow((dataset.response_name,) + tuple(dataset.covariate_names))
    for yi, row in zip(dataset.y, dataset.X):
        w.writerow([repr(float(yi))] + [na if np.isnan(v) else repr(float(v)) for v in row])
    text = buf.getvalue()
    if dest is None:
        return text
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return None
