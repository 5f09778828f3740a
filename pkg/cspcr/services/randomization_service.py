"""
Randomization service - counterfeit draws, tie-aware ranking and label assignment.

Each row draws its counterfeits from its own LABELING sub-stream and breaks
ties from its own TIE_BREAKS sub-stream, both keyed by the row's original
index, so labels do not depend on processing order or on which other rows
are present.
"""
import logging

import numpy as np

from cspcr.core.exceptions import ConfigurationError, NonFiniteStatisticError
from cspcr.core.random import Stream, substream
from cspcr.models.sampler import ConditionalSampler
from cspcr.models.statistic import StatisticFn
from cspcr.schemas.dataset import SourceDataset
from cspcr.schemas.labels import LabelAssignment

logger = logging.getLogger(__name__)


class RandomizationService:
    """Service implementing the conditional randomization step."""

    @staticmethod
    def counterfeits(
        z: np.ndarray,
        sampler: ConditionalSampler,
        count: int,
        rng: np.random.Generator,
    ) -> np.ndarray:
        """`count` independent draws of X from the sampler given z."""
        if count < 1:
            raise ConfigurationError("Need at least one counterfeit per row")
        draws = np.asarray(sampler.sample(np.asarray(z, dtype=float), rng, count), dtype=float)
        return draws.reshape(count)

    @staticmethod
    def rank_with_ties(t0: float, t_counterfeit: np.ndarray, rng: np.random.Generator) -> int:
        """Ascending rank of t0 among all M+1 scores, uniform within its tie block."""
        t_counterfeit = np.asarray(t_counterfeit, dtype=float)
        below = int(np.count_nonzero(t_counterfeit < t0))
        ties = int(np.count_nonzero(t_counterfeit == t0))
        return below + 1 + int(rng.integers(0, ties + 1))

    def assign_labels(
        self,
        dataset: SourceDataset,
        sampler: ConditionalSampler,
        statistic: StatisticFn,
        k: int,
        l: int,  # noqa: E741
        seed: int,
        row_keys=None,
        streams: tuple[Stream, Stream] = (Stream.LABELING, Stream.TIE_BREAKS),
    ) -> LabelAssignment:
        """
        Score each row against its counterfeits and bin the rank into L labels.

        `row_keys` are the original row indices used to key each row's
        randomness; they default to 0..n-1. `streams` names the counterfeit and
        tie-break sub-streams; target-pool rows use their own pair.
        """
        if k * l < 2:
            raise ConfigurationError("K*L must be at least 2")
        m = k * l - 1
        keys = np.arange(dataset.n) if row_keys is None else np.asarray(row_keys, dtype=int)
        if keys.shape[0] != dataset.n:
            raise ConfigurationError("row_keys must have one entry per row")

        ranks = np.empty(dataset.n, dtype=int)
        for j in range(dataset.n):
            key = int(keys[j])
            z_j, v_j, y_j = dataset.z[j], dataset.v[j], float(dataset.y[j])
            fakes = self.counterfeits(z_j, sampler, m, substream(seed, streams[0], key))
            candidates = np.concatenate([[dataset.x[j]], fakes])
            scores = np.asarray(statistic(candidates, y_j, z_j, v_j), dtype=float).reshape(-1)
            if scores.shape[0] != m + 1 or not np.all(np.isfinite(scores)):
                raise NonFiniteStatisticError(key)
            ranks[j] = self.rank_with_ties(
                scores[0], scores[1:], substream(seed, streams[1], key)
            )

        labels = (ranks - 1) // k + 1
        logger.debug("Label counts: %s", np.bincount(labels, minlength=l + 1)[1:].tolist())
        return LabelAssignment(
            labels=tuple(int(v) for v in labels),
            ranks=tuple(int(r) for r in ranks),
            k=k,
            l=l,
        )
