"""
Dataset service - validation, construction and splitting of labeled data.
"""
import logging
from collections.abc import Sequence

import numpy as np

from cspcr.core.exceptions import (
    DimensionMismatchError,
    EmptyDatasetError,
    NonFiniteError,
    PopulationMismatchError,
    SplitError,
)
from cspcr.core.random import Stream, substream
from cspcr.models.enums import Population
from cspcr.schemas.dataset import LabeledSample, SourceDataset, UnlabeledPool

logger = logging.getLogger(__name__)


class DatasetService:
    """Service for dataset validation and partitioning."""

    def validate_dataset(self, dataset: SourceDataset) -> SourceDataset:
        """
        Check that the dataset is nonempty and finite.

        Returns the dataset unchanged, raises on the first offending row and field.
        """
        if dataset.n == 0:
            raise EmptyDatasetError()
        self._check_finite(
            {"y": dataset.y, "x": dataset.x, "z": dataset.z, "v": dataset.v}, dataset.n
        )
        logger.debug("Validated dataset: n=%d p=%d d=%d", dataset.n, dataset.p, dataset.d)
        return dataset

    def validate_pool(
        self,
        pool: UnlabeledPool,
        dataset: SourceDataset | None = None,
        population: Population | None = None,
    ) -> UnlabeledPool:
        """Check a pool is nonempty, finite and shaped like `dataset`."""
        if pool.n == 0:
            raise EmptyDatasetError(f"{pool.population.value.capitalize()} pool is empty")
        if population is not None and pool.population != population:
            raise PopulationMismatchError(population.value, pool.population.value)
        self._check_finite({"x": pool.x, "z": pool.z, "v": pool.v}, pool.n)
        if dataset is not None:
            if pool.z.shape[1] != dataset.p:
                raise DimensionMismatchError(
                    0, f"pool has {pool.z.shape[1]} confounders, dataset has {dataset.p}"
                )
            if pool.v.shape[1] != dataset.d:
                raise DimensionMismatchError(
                    0, f"pool has {pool.v.shape[1]} surrogates, dataset has {dataset.d}"
                )
        return pool

    def build_dataset(self, samples: Sequence[LabeledSample]) -> SourceDataset:
        """Assemble labeled rows into a dataset, checking uniform dimensions."""
        if not samples:
            raise EmptyDatasetError()
        p, d = len(samples[0].z), len(samples[0].v)
        for j, sample in enumerate(samples):
            if len(sample.z) != p:
                raise DimensionMismatchError(j, f"z has length {len(sample.z)}, expected {p}")
            if len(sample.v) != d:
                raise DimensionMismatchError(j, f"v has length {len(sample.v)}, expected {d}")
        dataset = SourceDataset(
            y=[s.y for s in samples],
            x=[s.x for s in samples],
            z=np.array([s.z for s in samples], dtype=float).reshape(len(samples), p),
            v=np.array([s.v for s in samples], dtype=float).reshape(len(samples), d),
        )
        return self.validate_dataset(dataset)

    def split_indices(self, n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
        """Random disjoint partition of range(n); part A has round(fraction * n) rows."""
        if not 0.0 < fraction < 1.0:
            raise SplitError(f"Split fraction must be in (0, 1), got {fraction}")
        if n < 2:
            raise SplitError("Need at least 2 rows to split")
        size_a = int(np.floor(fraction * n + 0.5))
        if size_a == 0 or size_a == n:
            raise SplitError(f"Fraction {fraction} leaves an empty part for n={n}")
        order = substream(seed, Stream.SPLIT).permutation(n)
        return np.sort(order[:size_a]), np.sort(order[size_a:])

    def split_dataset(
        self,
        dataset: SourceDataset,
        fraction: float,
        seed: int,
    ) -> tuple[SourceDataset, SourceDataset]:
        """Split into two disjoint datasets, deterministic given seed."""
        idx_a, idx_b = self.split_indices(dataset.n, fraction, seed)
        logger.debug("Split %d rows into %d and %d", dataset.n, idx_a.size, idx_b.size)
        return dataset.take(idx_a), dataset.take(idx_b)

    @staticmethod
    def concat(first: SourceDataset, second: SourceDataset) -> SourceDataset:
        """Stack two datasets with matching dimensions."""
        if first.p != second.p or first.d != second.d:
            raise DimensionMismatchError(first.n, "datasets have different dimensions")
        return SourceDataset(
            y=np.concatenate([first.y, second.y]),
            x=np.concatenate([first.x, second.x]),
            z=np.vstack([first.z, second.z]),
            v=np.vstack([first.v, second.v]),
        )

    @staticmethod
    def _check_finite(blocks: dict[str, np.ndarray], n: int) -> None:
        columns: list[tuple[str, np.ndarray]] = []
        for name, block in blocks.items():
            if block.ndim == 1:
                columns.append((name, block))
            else:
                columns.extend((f"{name}[{i}]", block[:, i]) for i in range(block.shape[1]))
        if not columns:
            return
        bad = ~np.isfinite(np.column_stack([c for _, c in columns]))
        rows = np.flatnonzero(bad.any(axis=1))
        if rows.size:
            row = int(rows[0])
            field = columns[int(np.flatnonzero(bad[row])[0])][0]
            raise NonFiniteError(row, field)
