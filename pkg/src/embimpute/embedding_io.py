"""Text-format embedding tables, entity alignment, and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .domain_geometry import DomainMatrix
from .errors import ValidationError


@dataclass
class EmbeddingTable:
    """Ordered token -> vector map with a fixed dimension."""

    dim: int
    entries: dict[str, np.ndarray]

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError("embedding dimension must be at least 1")
        converted: dict[str, np.ndarray] = {}
        for token, vec in self.entries.items():
            if not token:
                raise ValidationError("empty token in embedding table")
            vec = np.asarray(vec, dtype=float)
            if vec.shape != (self.dim,):
                raise ValidationError(
                    f"token '{token}' has a vector of shape {vec.shape}, expected ({self.dim},)"
                )
            converted[token] = vec
        self.entries = converted

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries

    def tokens(self) -> list[str]:
        return list(self.entries)


@dataclass
class AlignedProblem:
    """Entity order with the known block first, plus its vectors.

    ``permutation[i]`` is the position in the original domain matrix of the
    entity now at position i.
    """

    order: tuple[str, ...]
    domain: DomainMatrix
    known: np.ndarray
    p: int
    q: int
    permutation: np.ndarray


def _parses_as_int(token: str) -> bool:
    try:
        int(token)
    except ValueError:
        return False
    return True


def load_embeddings(path) -> EmbeddingTable:
    """Parse a text embedding file: optional ``m s`` header, then
    ``token v1 ... vs`` lines. Dimensions must be consistent throughout."""
    entries: dict[str, np.ndarray] = {}
    dim: int | None = None
    declared_rows: int | None = None
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first:
            raise ValidationError(f"{path}: empty embedding file")
        parts = first.split()
        data_start = 1
        if len(parts) == 2 and _parses_as_int(parts[0]) and _parses_as_int(parts[1]):
            declared_rows, dim = int(parts[0]), int(parts[1])
            if declared_rows < 0 or dim < 1:
                raise ValidationError(f"{path}:1: invalid header '{first.strip()}'")
            data_start = 2
            pending = []
        else:
            pending = [(1, parts)]

        for lineno, line in enumerate(fh, start=data_start + len(pending)):
            pending.append((lineno, line.split()))

        for lineno, parts in pending:
            if not parts:
                raise ValidationError(f"{path}:{lineno}: blank line in embedding file")
            token, raw = parts[0], parts[1:]
            if dim is None:
                dim = len(raw)
                if dim == 0:
                    raise ValidationError(f"{path}:{lineno}: no values after token")
            if len(raw) != dim:
                raise ValidationError(
                    f"{path}:{lineno}: expected {dim} values, found {len(raw)}"
                )
            try:
                vec = np.array([float(v) for v in raw])
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: malformed float value") from None
            if not np.isfinite(vec).all():
                raise ValidationError(f"{path}:{lineno}: non-finite embedding value")
            if token in entries:
                raise ValidationError(f"{path}:{lineno}: duplicate token '{token}'")
            entries[token] = vec

    if declared_rows is not None and declared_rows != len(entries):
        raise ValidationError(
            f"{path}: header declares {declared_rows} rows, found {len(entries)}"
        )
    if dim is None:
        raise ValidationError(f"{path}: cannot infer dimension from an empty file")
    return EmbeddingTable(dim, entries)


def save_embeddings(table: EmbeddingTable, path) -> None:
    """Write header plus one line per token at full round-trip precision."""
    for token in table.entries:
        if len(token.split()) != 1 or token != token.strip():
            raise ValidationError(
                f"token {token!r} contains whitespace and cannot be serialized"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(table.entries)} {table.dim}\n")
        for token, vec in table.entries.items():
            values = " ".join(f"{v:.17g}" for v in vec)
            fh.write(f"{token} {values}\n")


def align(domain: DomainMatrix, table: EmbeddingTable) -> AlignedProblem:
    """Stable-partition domain entities into (known, missing).

    Entities with a vector in the table come first, preserving relative
    order within each part, so the diffusion can treat the leading block as
    anchors. Requires at least one known entity.
    """
    present = [i for i, e in enumerate(domain.entities) if e in table.entries]
    absent = [i for i, e in enumerate(domain.entities) if e not in table.entries]
    p = len(present)
    if p == 0:
        raise ValidationError(
            "no anchors: none of the domain entities has a known embedding"
        )
    permutation = np.array(present + absent, dtype=np.int64)
    order = tuple(domain.entities[i] for i in permutation)
    aligned = DomainMatrix(order, domain.data[permutation])
    known = np.array([table.entries[tok] for tok in order[:p]])
    return AlignedProblem(order, aligned, known, p, domain.n - p, permutation)


def merge_imputed(table: EmbeddingTable, problem: AlignedProblem, result) -> EmbeddingTable:
    """Original table plus the newly imputed tokens; existing entries pass
    through untouched."""
    Y = np.asarray(result.Y)
    if Y.shape != (problem.p + problem.q, table.dim):
        raise ValidationError(
            f"result matrix has shape {Y.shape}, expected ({problem.p + problem.q}, {table.dim})"
        )
    entries = dict(table.entries)
    for offset, token in enumerate(problem.order[problem.p :]):
        if token in entries:
            raise ValidationError(f"imputed token '{token}' already present in table")
        entries[token] = Y[problem.p + offset].copy()
    return EmbeddingTable(table.dim, entries)


def _parses_as_float(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_entity_csv(path, allow_missing: bool):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValidationError(f"{path}: empty CSV file")
    start = 0
    first = rows[0]
    if len(first) < 2:
        raise ValidationError(f"{path}: need an identifier plus at least one value column")
    second = first[1].strip()
    if second and not _parses_as_float(second):
        start = 1  # header row
        if len(rows) == 1:
            raise ValidationError(f"{path}: no data rows after header")

    width = len(rows[start])
    entities: list[str] = []
    values: list[list[float]] = []
    for rowno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ValidationError(
                f"{path}:{rowno}: expected {width} fields, found {len(row)}"
            )
        entity = row[0].strip()
        if not entity:
            raise ValidationError(f"{path}:{rowno}: empty entity identifier")
        parsed = []
        for col, cell in enumerate(row[1:], start=2):
            cell = cell.strip()
            if not cell:
                if allow_missing:
                    parsed.append(float("nan"))
                    continue
                raise ValidationError(f"{path}:{rowno}: empty cell in column {col}")
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ValidationError(
                    f"{path}:{rowno}: malformed float in column {col}"
                ) from None
        entities.append(entity)
        values.append(parsed)
    return entities, np.array(values, dtype=float)


def load_domain_csv(path) -> DomainMatrix:
    """Domain matrix CSV: identifier column then float columns; a header
    row is auto-detected from a non-numeric second field."""
    entities, values = _read_entity_csv(path, allow_missing=False)
    return DomainMatrix(entities, values)


def load_returns_csv(path) -> tuple[list[str], np.ndarray]:
    """Returns CSV in the same shape; empty cells become NaN."""
    return _read_entity_csv(path, allow_missing=True)


def load_labels_csv(path) -> dict[str, str]:
    """Label CSV with an ``entity,label`` header row."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if len(rows) < 2:
        raise ValidationError(f"{path}: expected a header row plus data rows")
    labels: dict[str, str] = {}
    for rowno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise ValidationError(f"{path}:{rowno}: expected 'entity,label'")
        entity, label = row[0].strip(), row[1].strip()
        if not entity or not label:
            raise ValidationError(f"{path}:{rowno}: empty entity or label")
        if entity in labels:
            raise ValidationError(f"{path}:{rowno}: duplicate entity '{entity}'")
        labels[entity] = label
    return labels
