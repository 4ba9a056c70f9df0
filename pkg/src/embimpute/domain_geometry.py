"""Distance and affinity structure over entity feature matrices.

The feature matrix describes each entity in the affinity space; pairwise
Euclidean distances over its rows drive the neighbor-graph construction.
A small preprocessing helper turns raw return series into a correlation
matrix usable as such a feature matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ValidationError


@dataclass
class DomainMatrix:
    """Feature matrix over named entities; row i describes ``entities[i]``.

    Arrays are not defensively copied. Requires at least two entities, one
    feature column, unique identifiers, and finite values throughout.
    """

    entities: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        self.entities = tuple(str(e) for e in self.entities)
        self.data = np.ascontiguousarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise ValidationError("domain data must be a 2-D matrix")
        n, d = self.data.shape
        if n < 2:
            raise ValidationError(f"domain matrix needs at least 2 entities, got {n}")
        if d < 1:
            raise ValidationError("domain matrix needs at least 1 feature column")
        if len(self.entities) != n:
            raise ValidationError(
                f"got {len(self.entities)} entity identifiers for {n} data rows"
            )
        if len(set(self.entities)) != n:
            raise ValidationError("entity identifiers must be unique")
        bad_rows = np.flatnonzero(~np.isfinite(self.data).all(axis=1))
        if bad_rows.size:
            i = int(bad_rows[0])
            raise ValidationError(
                f"non-finite value in row {i} ({self.entities[i]})"
            )

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def euclidean_distance_matrix(domain: DomainMatrix | np.ndarray) -> np.ndarray:
    """Pairwise Euclidean distance matrix over entity rows.

    Accepts a DomainMatrix or a bare (n, d) array. The result is symmetric
    with an exactly zero diagonal; distances are computed in double
    precision with no squared-distance shortcut in the result.
    """
    if isinstance(domain, DomainMatrix):
        data = domain.data
    else:
        data = np.asarray(domain, dtype=float)
        if data.ndim != 2:
            raise ValidationError("expected a 2-D matrix of entity rows")
        bad_rows = np.flatnonzero(~np.isfinite(data).all(axis=1))
        if bad_rows.size:
            raise ValidationError(f"non-finite value in row {int(bad_rows[0])}")
    if data.shape[0] < 2:
        raise ValidationError("distance matrix needs at least 2 rows")
    return cdist(data, data)


def correlation_domain_matrix(
    entities,
    returns: np.ndarray,
    max_missing_fraction: float = 0.20,
) -> DomainMatrix:
    """Build a correlation-row feature matrix from per-entity return series.

    ``returns`` is (n, T) with NaN marking missing observations. Rows with a
    missing fraction above ``max_missing_fraction`` are dropped; remaining
    missing cells are filled with the per-column mean of observed values.
    Row i of the result is row i of the Pearson correlation matrix of the
    filled series, so the output is square over the retained entities.
    """
    entities = [str(e) for e in entities]
    R = np.array(returns, dtype=float)
    if R.ndim != 2:
        raise ValidationError("returns must be a 2-D matrix")
    if len(entities) != R.shape[0]:
        raise ValidationError(
            f"got {len(entities)} entity identifiers for {R.shape[0]} return rows"
        )
    if R.shape[1] < 2:
        raise ValidationError("correlation needs at least 2 observations per entity")
    if not 0.0 <= max_missing_fraction <= 1.0:
        raise ValidationError("max_missing_fraction must lie in [0, 1]")
    if np.isinf(R).any():
        raise ValidationError("returns contain infinite values")

    missing = np.isnan(R)
    keep = missing.mean(axis=1) <= max_missing_fraction
    if int(keep.sum()) < 2:
        raise ValidationError(
            "fewer than 2 entities remain after dropping rows with too many missing values"
        )
    R = R[keep]
    missing = missing[keep]
    kept_entities = [e for e, k in zip(entities, keep) if k]

    dead_cols = np.flatnonzero(missing.all(axis=0))
    if dead_cols.size:
        raise ValidationError(
            f"column {int(dead_cols[0])} has no observed values; cannot fill"
        )
    col_means = np.nanmean(R, axis=0)
    filled = np.where(missing, col_means[None, :], R)

    constant = np.flatnonzero((filled == filled[:, :1]).all(axis=1))
    if constant.size:
        i = int(constant[0])
        raise ValidationError(
            f"zero-variance return series for entity '{kept_entities[i]}'; "
            "correlation is undefined"
        )

    corr = np.corrcoef(filled)
    np.fill_diagonal(corr, 1.0)
    np.clip(corr, -1.0, 1.0, out=corr)
    return DomainMatrix(kept_entities, corr)
