"""Distributional inference: fill a sparse vector in from its neighbours."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Union

from .neighbours import NeighbourSet, RetrievalPolicy
from .vsm import SparseVector, VectorStore


@dataclass(frozen=True)
class InferenceConfig:
    """How many (and which) neighbours a vector consumes, and how they are added.

    By default neighbour vectors are summed as they are.  ``normalize_neighbours``
    scales each one to unit L2 norm first; ``weight_by_similarity`` scales it by
    its cosine to the query.  Both may be combined.
    """

    policy: RetrievalPolicy = field(default_factory=RetrievalPolicy)
    normalize_neighbours: bool = False
    weight_by_similarity: bool = False

    @classmethod
    def static(cls, n: int = 30, **kwargs) -> "InferenceConfig":
        return cls(RetrievalPolicy("static", n), **kwargs)

    @property
    def n(self) -> int:
        return self.policy.n

    def with_n(self, n: int) -> "InferenceConfig":
        return replace(self, policy=self.policy.with_n(n))

    def describe(self) -> str:
        flags = []
        if self.normalize_neighbours:
            flags.append("unit")
        if self.weight_by_similarity:
            flags.append("simw")
        return self.policy.describe() + ("+" + "+".join(flags) if flags else "")


@dataclass(frozen=True)
class EnrichedVector:
    base: SparseVector
    contribution: SparseVector
    result: SparseVector
    neighbours: NeighbourSet


def enrich(store: VectorStore, entry_or_vector: Union[str, SparseVector],
           cfg: InferenceConfig = None, exclude: Iterable[str] = ()) -> EnrichedVector:
    """Add the neighbours chosen by ``cfg.policy`` onto the base vector.

    The base is never rescaled.  With no neighbours the result *is* the base
    object.  Raises :class:`~aptkit.vsm.OutOfVocabularyError` for an unknown
    entry name.
    """
    cfg = cfg or InferenceConfig()
    base = store[entry_or_vector] if isinstance(entry_or_vector, str) else entry_or_vector
    if cfg.policy.empty:
        return EnrichedVector(base, SparseVector(), base, NeighbourSet(entry_or_vector))
    neighbours = cfg.policy.retrieve(store, entry_or_vector, exclude)
    parts = []
    for nb in neighbours:
        vec = store.vectors[nb.name]
        if cfg.normalize_neighbours:
            norm = vec.norm()
            if norm == 0:
                continue
            vec = vec.scale(1.0 / norm)
        if cfg.weight_by_similarity:
            vec = vec.scale(nb.similarity)
        parts.append(vec)
    contribution = SparseVector.sum_of(parts)
    return EnrichedVector(base, contribution, base + contribution, neighbours)
