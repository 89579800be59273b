"""Phrase vectors from constituent vectors.

Untyped vectors compose by pointwise addition (union) or multiplication
(intersection).  Typed vectors are first aligned: the dependent's features
are re-anchored at the head by prefixing every path with the head-to-
dependent relation and cancelling ``r``/``_r`` pairs.  Only then are they
merged, which makes typed composition non-commutative.
"""
from __future__ import annotations

import math
from dataclasses import InitVar, dataclass
from functools import lru_cache
from typing import Callable, Mapping, Optional, Union

from .inference import InferenceConfig, enrich
from .ingest import DepPath, TypedFeature
from .vsm import FeatureInterner, SparseVector, VectorStore

PHRASE_TYPES = ("AN", "NN", "VO")

# first label per type is the default relation from head to dependent
RELATION_MAP = {
    "AN": ("amod",),
    "NN": ("compound", "nn"),
    "VO": ("dobj", "obj"),
}

_TYPE_ALIASES = {
    "an": "AN", "adjective-noun": "AN", "adjectivenouns": "AN",
    "nn": "NN", "noun-noun": "NN", "compoundnouns": "NN",
    "vo": "VO", "verb-object": "VO", "verbobjects": "VO",
}

UNION_MODES = ("union", "add")
INTERSECTION_MODES = ("intersection", "mult")


def phrase_type(name: str) -> str:
    try:
        return _TYPE_ALIASES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown phrase type {name!r}") from None


@dataclass(frozen=True)
class PhraseSpec:
    phrase_type: str
    head: str
    dependent: str
    relation: Optional[str] = None
    relation_map: InitVar[Optional[Mapping]] = None

    def __post_init__(self, relation_map):
        ptype = phrase_type(self.phrase_type)
        allowed = (relation_map or RELATION_MAP).get(ptype, ())
        relation = self.relation or (allowed[0] if allowed else None)
        if relation not in allowed:
            raise ValueError(f"relation {relation!r} not configured for phrase type {ptype}")
        object.__setattr__(self, "phrase_type", ptype)
        object.__setattr__(self, "relation", relation)

    @property
    def name(self) -> str:
        return f"{self.head}_{self.dependent}_{self.relation}"

    @property
    def surface(self) -> str:
        if self.phrase_type == "VO":
            return f"{self.head} {self.dependent}"
        return f"{self.dependent} {self.head}"


def reduce_path(path: DepPath) -> DepPath:
    return DepPath(path).reduced()


@lru_cache(maxsize=1 << 18)
def _parse_feature(text: str) -> TypedFeature:
    return TypedFeature.parse(text)


def _interner(space) -> FeatureInterner:
    if isinstance(space, VectorStore):
        if not space.typed:
            raise ValueError("offsetting needs a typed store")
        return space.interner
    return space


def offset(vec: SparseVector, prefix: DepPath, space: Union[VectorStore, FeatureInterner],
           max_order: Optional[int] = None) -> SparseVector:
    """Re-anchor ``vec`` by prefixing each feature path with ``prefix``.

    Reduced paths longer than ``max_order`` are dropped (``None`` keeps
    everything); features landing on the same path and lemma are summed.
    New feature texts are interned into ``space``.
    """
    interner = _interner(space)
    prefix = DepPath(prefix)
    if not prefix:
        return vec
    mapped: dict = {}
    for fid, weight in vec.items():
        feat = _parse_feature(interner.text(fid))
        path = (prefix + feat.path).reduced()
        if max_order is not None and len(path) > max_order:
            continue
        new_id = interner.intern(TypedFeature(path, feat.lemma).text)
        mapped.setdefault(new_id, []).append(weight)
    return SparseVector.from_dict({fid: math.fsum(ws) for fid, ws in mapped.items()})


def compose_untyped(a: SparseVector, b: SparseVector, mode: str = "add") -> SparseVector:
    if mode in UNION_MODES:
        return a + b
    if mode in INTERSECTION_MODES:
        return a * b
    raise ValueError(f"unknown composition mode {mode!r}")


def _merge(mode) -> Callable:
    if callable(mode):
        return mode
    if mode in UNION_MODES:
        return lambda a, b: a + b
    if mode in INTERSECTION_MODES:
        return lambda a, b: a * b
    raise ValueError(f"unknown composition mode {mode!r}")


def compose_typed(head_vec: SparseVector, dep_vec: SparseVector, spec: PhraseSpec, mode,
                  space: Union[VectorStore, FeatureInterner], order_limit: Optional[int] = None,
                  unlimited: bool = False) -> SparseVector:
    """Align the dependent at the head, then merge (``union``, ``intersection`` or a callable).

    ``order_limit`` defaults to the store's order bound; ``unlimited``
    switches truncation off.
    """
    merge = _merge(mode)
    if unlimited:
        limit = None
    elif order_limit is not None:
        limit = order_limit
    elif isinstance(space, VectorStore) and space.meta.max_order:
        limit = space.meta.max_order
    else:
        limit = None
    aligned = offset(dep_vec, DepPath.forward(spec.relation), space, limit)
    return merge(head_vec, aligned)


def compose(store: VectorStore, head_vec: SparseVector, dep_vec: SparseVector, spec: PhraseSpec,
            mode, **kwargs) -> SparseVector:
    if store.typed:
        return compose_typed(head_vec, dep_vec, spec, mode, store, **kwargs)
    return compose_untyped(head_vec, dep_vec, mode)


def compose_with_di(store: VectorStore, spec: PhraseSpec, mode,
                    di_cfg: Optional[InferenceConfig] = None, **kwargs) -> SparseVector:
    """Enrich each constituent, then compose; ``di_cfg=None`` skips enrichment."""
    head = store[spec.head]
    dep = store[spec.dependent]
    if di_cfg is not None:
        head = enrich(store, spec.head, di_cfg).result
        dep = enrich(store, spec.dependent, di_cfg).result
    return compose(store, head, dep, spec, mode, **kwargs)
