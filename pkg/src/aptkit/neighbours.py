"""Cosine neighbour retrieval over a vector store.

Three retrieval functions choose the neighbours a vector may consume during
distributional inference: a static top-n cut, a density window (everything
within ``delta`` of the best similarity, capped), and a synonym lexicon.

Ranking is exact.  Candidate scores come from one sparse matrix product
over the whole vocabulary; every candidate that could reach the final list
is then re-scored with :func:`cosine` so the output is identical to a
brute-force scan, ties (within ``TIE_TOLERANCE``) broken by entry name.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Optional, Union

import numpy as np
from scipy import sparse

from .vsm import SparseVector, VectorStore

# approximate scores within this margin of the cut-off are re-scored exactly
_RESCORE_MARGIN = 1e-9
# similarities closer than this are ties, broken by entry name
TIE_TOLERANCE = 1e-12

Query = Union[str, SparseVector]


class Neighbour(NamedTuple):
    name: str
    similarity: float


@dataclass(frozen=True)
class NeighbourSet:
    query: object
    neighbours: tuple = ()

    def __iter__(self):
        return iter(self.neighbours)

    def __len__(self):
        return len(self.neighbours)

    def __getitem__(self, i):
        return self.neighbours[i]

    def names(self) -> list:
        return [nb.name for nb in self.neighbours]


def cosine(a: SparseVector, b: SparseVector) -> float:
    """Cosine similarity; 0.0 when either vector has zero norm."""
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, a.dot(b) / (na * nb)))


def _ranked(scored: Iterable[tuple]) -> tuple:
    """Order ``(similarity, name)`` pairs best first.

    Similarities within ``TIE_TOLERANCE`` of a run's first value count as
    tied and are ordered by name.  Cosines that are equal in exact
    arithmetic often differ in the last bit, and that noise must not decide
    the ranking (it would change under rescaling of the query).
    """
    out: list = []
    group: list = []
    lead = 0.0
    for sim, name in sorted(scored, key=lambda pair: (-pair[0], pair[1])):
        if group and lead - sim > TIE_TOLERANCE:
            out.extend(sorted(group, key=lambda pair: pair[1]))
            group = []
        if not group:
            lead = sim
        group.append((sim, name))
    out.extend(sorted(group, key=lambda pair: pair[1]))
    return tuple(Neighbour(name, sim) for sim, name in out)


def _resolve(store: VectorStore, query: Query, exclude) -> tuple:
    exclude = set(exclude)
    if isinstance(query, str):
        vec = store[query]
        exclude.add(query)
    else:
        vec = query
    return vec, exclude


def _approx_scores(store: VectorStore, vec: SparseVector) -> tuple:
    names, matrix, norms = store.index()
    width = matrix.shape[1]
    keep = vec.ids < width
    column = sparse.csc_matrix((vec.weights[keep], (vec.ids[keep], np.zeros(int(keep.sum()), dtype=np.int64))),
                               shape=(width, 1))
    dots = np.asarray((matrix @ column).todense()).ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = np.where(norms > 0, dots / (norms * vec.norm()), 0.0)
    return names, scores


def top_n(store: VectorStore, query: Query, n: int, exclude: Iterable[str] = ()) -> NeighbourSet:
    """The ``n`` most cosine-similar entries; zero-similarity entries never appear.

    A string query names a store entry, which is then excluded from its own
    neighbourhood.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    vec, exclude = _resolve(store, query, exclude)
    if n == 0 or not vec or not len(store):
        return NeighbourSet(query)
    names, scores = _approx_scores(store, vec)
    for entry in exclude:
        row = bisect_left(names, entry)
        if row < len(names) and names[row] == entry:
            scores[row] = 0.0
    cand = np.flatnonzero(scores > 0)
    if cand.size > n:
        cutoff = np.partition(scores[cand], cand.size - n)[cand.size - n]
        cand = cand[scores[cand] >= cutoff - _RESCORE_MARGIN]
    scored = []
    for i in cand:
        sim = cosine(store.vectors[names[i]], vec)
        if sim > 0:
            scored.append((sim, names[i]))
    return NeighbourSet(query, _ranked(scored)[:n])


def density_window(store: VectorStore, query: Query, delta: float = 0.05, cap: int = 100,
                   exclude: Iterable[str] = ()) -> NeighbourSet:
    """All neighbours with similarity >= best - ``delta``, at most ``cap`` of them."""
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    ranked = top_n(store, query, cap, exclude)
    if not len(ranked):
        return ranked
    floor = ranked[0].similarity - delta
    return NeighbourSet(query, tuple(nb for nb in ranked if nb.similarity >= floor))


def lexicon_neighbours(lexicon: Mapping[str, Iterable[str]], store: VectorStore, query_entry: str,
                       cap: int, exclude: Iterable[str] = ()) -> NeighbourSet:
    """In-vocabulary synonyms of ``query_entry`` ranked by cosine, truncated to ``cap``.

    Synonyms are kept even at similarity 0: the lexicon, not the space,
    vouches for them.
    """
    vec = store[query_entry]
    skip = set(exclude) | {query_entry}
    synonyms = {s for s in lexicon.get(query_entry, ()) if s in store.vectors and s not in skip}
    scored = [(cosine(store.vectors[s], vec), s) for s in synonyms]
    return NeighbourSet(query_entry, _ranked(scored)[:max(cap, 0)])


def mangle_names(store: VectorStore, extra: Mapping[str, SparseVector], suffix: str = "#phrase") -> dict:
    """Rename ad-hoc vectors whose names collide with vocabulary entries."""
    out = {}
    for name, vec in extra.items():
        new = name
        while new in store.vectors or new in out:
            new += suffix
        out[new] = vec
    return out


def neighbours_over_union(store: VectorStore, extra: Mapping[str, SparseVector], query: Query,
                          n: int, exclude: Iterable[str] = ()) -> NeighbourSet:
    """Top-n over the vocabulary plus ``extra`` named vectors (e.g. composed phrases).

    A string query may name either a store entry or an extra vector.
    """
    extra = mangle_names(store, extra)
    exclude = set(exclude)
    if isinstance(query, str):
        if query in extra and query not in store.vectors:
            vec = extra[query]
        else:
            vec = store[query]
        exclude.add(query)
    else:
        vec = query
    if n <= 0 or not vec:
        return NeighbourSet(query)
    words = top_n(store, vec, n, exclude)
    scored = [(nb.similarity, nb.name) for nb in words]
    for name, other in extra.items():
        if name in exclude:
            continue
        sim = cosine(other, vec)
        if sim > 0:
            scored.append((sim, name))
    return NeighbourSet(query, _ranked(scored)[:n])


@dataclass(frozen=True)
class RetrievalPolicy:
    """Which neighbours a vector may consume.

    ``kind`` is ``"static"`` (top ``n``), ``"density"`` (``delta`` band,
    at most ``cap``) or ``"lexicon"`` (synonyms, at most ``n``).
    """

    kind: str = "static"
    n: int = 30
    delta: float = 0.05
    cap: int = 100
    lexicon: Optional[Mapping] = None
    stoplist: frozenset = frozenset()

    def __post_init__(self):
        if self.kind not in ("static", "density", "lexicon"):
            raise ValueError(f"unknown retrieval policy {self.kind!r}")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.cap < 1:
            raise ValueError("cap must be >= 1")
        if not 0 < self.delta <= 1:
            raise ValueError("delta must lie in (0, 1]")
        if self.kind == "lexicon" and self.lexicon is None:
            raise ValueError("lexicon policy needs a synonym table")

    def with_n(self, n: int) -> "RetrievalPolicy":
        return RetrievalPolicy(self.kind, n, self.delta, self.cap, self.lexicon, self.stoplist)

    @property
    def empty(self) -> bool:
        return self.kind != "density" and self.n == 0

    def retrieve(self, store: VectorStore, query: Query, exclude: Iterable[str] = ()) -> NeighbourSet:
        exclude = set(exclude) | set(self.stoplist)
        if self.kind == "static":
            return top_n(store, query, self.n, exclude)
        if self.kind == "density":
            return density_window(store, query, self.delta, self.cap, exclude)
        if not isinstance(query, str):
            raise ValueError("lexicon retrieval needs a named vocabulary entry")
        return lexicon_neighbours(self.lexicon, store, query, self.n, exclude)

    def describe(self) -> str:
        if self.kind == "density":
            return f"density(delta={self.delta:g},cap={self.cap})"
        return f"{self.kind}(n={self.n})"


def load_lexicon(path) -> dict:
    """Read ``lemma<TAB>syn1,syn2,...`` lines into ``{lemma: (syn, ...)}``."""
    table: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            lemma, sep, rest = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected lemma<TAB>synonyms")
            syns = table.setdefault(lemma.strip().lower(), [])
            for syn in rest.split(","):
                syn = syn.strip().lower()
                if syn and syn not in syns:
                    syns.append(syn)
    return {lemma: tuple(syns) for lemma, syns in table.items()}
