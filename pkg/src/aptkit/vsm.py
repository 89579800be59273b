"""Sparse vectors, vector stores, frequency filtering and shifted PPMI."""
from __future__ import annotations

import gzip
import io
import json
import logging
import math
import threading
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Mapping, Optional

import numpy as np
from scipy import sparse

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MAGIC = "%APTKIT-STORE"


class StoreStateError(ValueError):
    """An operation was applied to a store in the wrong weighting state."""


class DoubleWeightingError(StoreStateError):
    pass


class StoreFormatError(ValueError):
    pass


class OutOfVocabularyError(KeyError):
    def __init__(self, entry):
        super().__init__(entry)
        self.entry = entry

    def __str__(self):
        return f"out of vocabulary: {self.entry!r}"


class SparseVector:
    """Immutable sparse vector: strictly increasing int64 ids, float64 weights.

    Zero weights are never stored.
    """

    __slots__ = ("ids", "weights")

    def __init__(self, ids=(), weights=(), check: bool = True):
        ids = np.asarray(ids, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.float64)
        if check:
            if ids.shape != weights.shape or ids.ndim != 1:
                raise ValueError("ids and weights must be 1-d and of equal length")
            if ids.size > 1 and not np.all(np.diff(ids) > 0):
                raise ValueError("feature ids must be strictly increasing")
            if np.any(weights == 0):
                keep = weights != 0
                ids, weights = ids[keep], weights[keep]
        ids.flags.writeable = False
        weights.flags.writeable = False
        self.ids = ids
        self.weights = weights

    @classmethod
    def from_dict(cls, mapping: Mapping[int, float]) -> "SparseVector":
        items = sorted((int(k), float(v)) for k, v in mapping.items() if v != 0)
        if not items:
            return cls()
        ids, weights = zip(*items)
        return cls(ids, weights, check=False)

    @classmethod
    def sum_of(cls, vectors: Iterable["SparseVector"]) -> "SparseVector":
        """Featurewise sum; each feature is accumulated in argument order."""
        vectors = list(vectors)
        if not vectors:
            return cls()
        if len(vectors) == 1:
            return vectors[0]
        ids = np.concatenate([v.ids for v in vectors])
        weights = np.concatenate([v.weights for v in vectors])
        if not ids.size:
            return cls()
        order = np.argsort(ids, kind="stable")
        ids, weights = ids[order], weights[order]
        starts = np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]])
        return cls(ids[starts], np.add.reduceat(weights, starts), check=True)

    def to_dict(self) -> Dict[int, float]:
        return dict(zip(self.ids.tolist(), self.weights.tolist()))

    def items(self):
        return zip(self.ids.tolist(), self.weights.tolist())

    @property
    def nnz(self) -> int:
        return int(self.ids.size)

    def __len__(self):
        return self.nnz

    def __bool__(self):
        return self.nnz > 0

    def support(self) -> frozenset:
        return frozenset(self.ids.tolist())

    def norm(self) -> float:
        return math.sqrt(float(np.dot(self.weights, self.weights)))

    def dot(self, other: "SparseVector") -> float:
        _, ia, ib = np.intersect1d(self.ids, other.ids, assume_unique=True, return_indices=True)
        return float(np.dot(self.weights[ia], other.weights[ib]))

    def scale(self, factor: float) -> "SparseVector":
        return SparseVector(self.ids, self.weights * factor)

    def __add__(self, other: "SparseVector") -> "SparseVector":
        if not other:
            return self
        if not self:
            return other
        return SparseVector.sum_of([self, other])

    def __mul__(self, other: "SparseVector") -> "SparseVector":
        common, ia, ib = np.intersect1d(self.ids, other.ids, assume_unique=True, return_indices=True)
        return SparseVector(common, self.weights[ia] * other.weights[ib])

    def __eq__(self, other):
        if not isinstance(other, SparseVector):
            return NotImplemented
        return np.array_equal(self.ids, other.ids) and np.array_equal(self.weights, other.weights)

    __hash__ = None

    def __repr__(self):
        head = zip(self.ids[:6].tolist(), self.weights[:6].tolist())
        body = ", ".join(f"{i}: {w!r}" for i, w in head)
        more = ", ..." if self.nnz > 6 else ""
        return f"SparseVector({{{body}{more}}})"


class FeatureInterner:
    """Bijection between feature text and dense integer ids (append-only)."""

    def __init__(self, texts: Iterable[str] = ()):
        self._texts: list = []
        self._ids: dict = {}
        self._lock = threading.Lock()
        for text in texts:
            self.intern(text)

    def intern(self, text: str) -> int:
        fid = self._ids.get(text)
        if fid is None:
            with self._lock:
                fid = self._ids.get(text)
                if fid is None:
                    fid = len(self._texts)
                    self._texts.append(text)
                    self._ids[text] = fid
        return fid

    def get(self, text: str, default=None):
        return self._ids.get(text, default)

    def __getitem__(self, text: str) -> int:
        return self._ids[text]

    def text(self, fid: int) -> str:
        return self._texts[fid]

    def __contains__(self, text):
        return text in self._ids

    def __len__(self):
        return len(self._texts)

    def __iter__(self):
        return iter(self._texts)

    def __eq__(self, other):
        if not isinstance(other, FeatureInterner):
            return NotImplemented
        return self._texts == other._texts

    def copy(self) -> "FeatureInterner":
        return FeatureInterner(self._texts)


@dataclass(frozen=True)
class StoreMeta:
    model_type: str = "typed"
    max_order: int = 0
    window: int = 0
    weighting: str = "raw"
    k: Optional[float] = None
    key_scheme: str = "lemma"
    history: tuple = ()

    @property
    def weighted(self) -> bool:
        return self.weighting != "raw"

    def with_history(self, config: Optional[Mapping]) -> "StoreMeta":
        if config is None:
            return self
        entry = json.dumps(dict(config), sort_keys=True, separators=(",", ":"), default=str)
        return replace(self, history=self.history + (entry,))


@dataclass(eq=False)
class VectorStore:
    vectors: Dict[str, SparseVector]
    interner: FeatureInterner
    target_marginals: Dict[str, float]
    feature_marginals: Dict[int, float]
    grand_total: float
    meta: StoreMeta = field(default_factory=StoreMeta)
    term_counts: Dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self._index = None

    def __getitem__(self, entry: str) -> SparseVector:
        try:
            return self.vectors[entry]
        except KeyError:
            raise OutOfVocabularyError(entry) from None

    def __contains__(self, entry):
        return entry in self.vectors

    def __len__(self):
        return len(self.vectors)

    @property
    def names(self) -> list:
        return sorted(self.vectors)

    @property
    def typed(self) -> bool:
        return self.meta.model_type == "typed"

    def feature_text(self, fid: int) -> str:
        return self.interner.text(fid)

    def vector_from_texts(self, mapping: Mapping[str, float]) -> SparseVector:
        """Build a vector from ``{feature_text: weight}``, interning as needed."""
        return SparseVector.from_dict({self.interner.intern(t): w for t, w in mapping.items()})

    def texts(self, vec: SparseVector) -> Dict[str, float]:
        return {self.interner.text(i): w for i, w in vec.items()}

    def index(self):
        """Row-normalised CSR matrix over the sorted vocabulary (cached).

        Returns ``(names, matrix, norms)``; rows with zero norm stay zero.
        """
        if self._index is None:
            names = self.names
            indptr = np.zeros(len(names) + 1, dtype=np.int64)
            for i, name in enumerate(names):
                indptr[i + 1] = indptr[i] + self.vectors[name].nnz
            if names:
                indices = np.concatenate([self.vectors[n].ids for n in names])
                data = np.concatenate([self.vectors[n].weights for n in names])
            else:
                indices = np.zeros(0, dtype=np.int64)
                data = np.zeros(0)
            width = int(indices.max()) + 1 if indices.size else 0
            matrix = sparse.csr_matrix((data, indices, indptr), shape=(len(names), width))
            norms = np.sqrt(np.asarray(matrix.multiply(matrix).sum(axis=1)).ravel())
            self._index = (names, matrix, norms)
        return self._index

    def __eq__(self, other):
        if not isinstance(other, VectorStore):
            return NotImplemented
        return (self.meta == other.meta
                and self.interner == other.interner
                and self.grand_total == other.grand_total
                and self.target_marginals == other.target_marginals
                and self.feature_marginals == other.feature_marginals
                and self.term_counts == other.term_counts
                and self.vectors.keys() == other.vectors.keys()
                and all(v == other.vectors[k] for k, v in self.vectors.items()))

    __hash__ = None

    def __repr__(self):
        return (f"VectorStore({self.meta.model_type}, {self.meta.weighting}, "
                f"{len(self.vectors)} entries, {len(self.interner)} features)")


def _marginals(vectors: Mapping[str, SparseVector]):
    target = {w: math.fsum(v.weights.tolist()) for w, v in vectors.items()}
    per_feature: dict = {}
    for v in vectors.values():
        for fid, weight in v.items():
            per_feature.setdefault(fid, []).append(weight)
    feature = {fid: math.fsum(ws) for fid, ws in sorted(per_feature.items())}
    total = math.fsum(target.values())
    return target, feature, total


def from_counts(pair_counts: Mapping, meta: Optional[StoreMeta] = None,
                term_counts: Optional[Mapping[str, int]] = None) -> VectorStore:
    """Raw store from ``{(target, feature_text): count}``.

    Feature ids are assigned in sorted feature-text order, so the result
    does not depend on the order in which counts were gathered.
    """
    interner = FeatureInterner(sorted({f for _, f in pair_counts}))
    rows: dict = {}
    for (target, ftext), count in pair_counts.items():
        if count:
            rows.setdefault(target, {})[interner[ftext]] = float(count)
    vectors = {t: SparseVector.from_dict(rows[t]) for t in sorted(rows)}
    target, feature, total = _marginals(vectors)
    return VectorStore(vectors, interner, target, feature, total,
                       meta or StoreMeta(), dict(sorted((term_counts or {}).items())))


def accumulate(events: Iterable, meta: Optional[StoreMeta] = None,
               term_counts: Optional[Mapping[str, int]] = None) -> VectorStore:
    """Sum co-occurrence events into a raw store."""
    counts: Counter = Counter()
    for event in events:
        counts[(event.target, event.feature_text)] += event.count
    return from_counts(counts, meta, term_counts)


def filter_store(store: VectorStore, min_feature_count: float = 1, min_nnz: int = 1,
                 min_term_freq: float = 1) -> VectorStore:
    """Prune features, then sparse vectors, then rare targets.

    A target's frequency is its corpus term count when the store carries
    term counts, otherwise its co-occurrence marginal.
    """
    if store.meta.weighted:
        raise StoreStateError("filtering requires a raw (unweighted) store")
    dropped = [fid for fid, total in store.feature_marginals.items() if total < min_feature_count]
    drop_ids = np.asarray(sorted(dropped), dtype=np.int64)
    vectors = {}
    for target, vec in store.vectors.items():
        if drop_ids.size:
            keep = ~np.isin(vec.ids, drop_ids, assume_unique=True)
            vec = SparseVector(vec.ids[keep], vec.weights[keep], check=False)
        if vec.nnz < max(min_nnz, 1):
            continue
        vectors[target] = vec
    if min_term_freq > 1:
        freq = store.term_counts if store.term_counts else store.target_marginals
        vectors = {t: v for t, v in vectors.items() if freq.get(t, 0) >= min_term_freq}
    target, feature, total = _marginals(vectors)
    log.info("filter: %d -> %d targets, %d -> %d features", len(store.vectors), len(vectors),
             len(store.feature_marginals), len(feature))
    return VectorStore(vectors, store.interner.copy(), target, feature, total, store.meta,
                       dict(store.term_counts))


def sppmi(store: VectorStore, k: float = 1.0) -> VectorStore:
    """Shifted positive PMI: ``max(log(P(w,c) / (P(w) P(c))) - log(k), 0)``.

    Natural logarithms throughout; cells that end up at zero are dropped.
    The raw marginals used for the transform are kept on the result.
    """
    if store.meta.weighted:
        raise DoubleWeightingError(f"store is already weighted ({store.meta.weighting}, k={store.meta.k})")
    if not k >= 1:
        raise ValueError(f"shift k must be >= 1, got {k}")
    shift = math.log(k)
    feat_margin = np.zeros(len(store.interner))
    for fid, total in store.feature_marginals.items():
        feat_margin[fid] = total
    total = store.grand_total
    vectors = {}
    for target, vec in store.vectors.items():
        if not vec:
            vectors[target] = vec
            continue
        ratio = (vec.weights * total) / (store.target_marginals[target] * feat_margin[vec.ids])
        weights = np.log(ratio) - shift
        keep = weights > 0
        vectors[target] = SparseVector(vec.ids[keep], weights[keep], check=False)
    meta = replace(store.meta, weighting="sppmi", k=float(k))
    return VectorStore(vectors, store.interner.copy(), dict(store.target_marginals),
                       dict(store.feature_marginals), total, meta, dict(store.term_counts))


# --- persistence -----------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def dumps(store: VectorStore) -> str:
    meta = store.meta
    records = []
    for target in sorted(store.vectors):
        vec = store.vectors[target]
        for ftext, weight in sorted((store.interner.text(i), w) for i, w in vec.items()):
            records.append(f"{target}\t{ftext}\t{_fmt(weight)}")
    out = io.StringIO()
    out.write(MAGIC + "\n")
    header = [
        ("format_version", FORMAT_VERSION),
        ("model_type", meta.model_type),
        ("max_order", meta.max_order),
        ("window", meta.window),
        ("weighting", meta.weighting),
        ("k", "" if meta.k is None else _fmt(meta.k)),
        ("log_base", "e"),
        ("key_scheme", meta.key_scheme),
        ("grand_total", _fmt(store.grand_total)),
        ("counts", f"{len(records)} {len(store.vectors)} {len(store.interner)}"),
    ]
    header += [("history", h) for h in meta.history]
    for key, value in header:
        out.write(f"{key}\t{value}\n")
    out.write("##\n")
    for line in records:
        out.write(line + "\n")
    out.write("## features\n")
    for fid, text in enumerate(store.interner):
        out.write(f"{fid}\t{text}\n")
    out.write("## targets\n")
    for target in sorted(store.target_marginals):
        out.write(f"{target}\t{_fmt(store.target_marginals[target])}\n")
    out.write("## feature_marginals\n")
    for fid in sorted(store.feature_marginals):
        out.write(f"{fid}\t{_fmt(store.feature_marginals[fid])}\n")
    out.write("## term_counts\n")
    for term in sorted(store.term_counts):
        out.write(f"{term}\t{store.term_counts[term]}\n")
    out.write("## end\n")
    return out.getvalue()


def save(store: VectorStore, path) -> None:
    """Write ``store``; a ``.gz`` suffix selects gzip (with a fixed mtime)."""
    data = dumps(store).encode("utf-8")
    if str(path).endswith(".gz"):
        with open(path, "wb") as raw, gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as fh:
            fh.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def read_text(path) -> str:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"\x1f\x8b":
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise StoreFormatError(f"{path}: corrupt gzip stream ({exc})") from None
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise StoreFormatError(f"{path}: not UTF-8 ({exc})") from None


def read_header(path) -> list:
    """The raw header lines (magic line through the first ``##``)."""
    lines = []
    for line in read_text(path).split("\n"):
        lines.append(line)
        if line == "##":
            break
    if not lines or lines[0] != MAGIC:
        raise StoreFormatError(f"{path}: bad magic header")
    return lines


def loads(text: str, source: str = "<string>") -> VectorStore:
    lines = text.split("\n")
    if not lines or lines[0] != MAGIC:
        raise StoreFormatError(f"{source}: bad magic header (expected {MAGIC!r})")

    def fail(lineno, msg):
        raise StoreFormatError(f"{source}:{lineno}: {msg}")

    header: dict = {}
    history = []
    pos = 1
    while pos < len(lines) and lines[pos] != "##":
        key, sep, value = lines[pos].partition("\t")
        if not sep:
            fail(pos + 1, "malformed header line")
        if key == "history":
            history.append(value)
        else:
            header[key] = value
        pos += 1
    if pos >= len(lines):
        fail(pos, "truncated file: header never terminated")
    try:
        version = int(header.get("format_version", ""))
    except ValueError:
        fail(2, "missing format_version")
    if version != FORMAT_VERSION:
        raise StoreFormatError(f"{source}: format version {version} unsupported (expected {FORMAT_VERSION})")

    sections = {"records": []}
    current = "records"
    ended = False
    for lineno in range(pos + 1, len(lines)):
        line = lines[lineno]
        if line.startswith("## "):
            current = line[3:]
            if current == "end":
                ended = True
                break
            sections[current] = []
        elif line:
            sections[current].append((lineno + 1, line))
    if not ended:
        raise StoreFormatError(f"{source}: truncated file (missing end marker)")

    try:
        n_records, n_targets, n_features = (int(x) for x in header["counts"].split())
        meta = StoreMeta(
            model_type=header["model_type"],
            max_order=int(header["max_order"]),
            window=int(header["window"]),
            weighting=header["weighting"],
            k=float(header["k"]) if header.get("k") else None,
            key_scheme=header.get("key_scheme", "lemma"),
            history=tuple(history),
        )
        grand_total = float(header["grand_total"])
    except (KeyError, ValueError) as exc:
        raise StoreFormatError(f"{source}: bad header field ({exc})") from None

    def split(entry, n):
        lineno, line = entry
        parts = line.split("\t")
        if len(parts) != n:
            fail(lineno, f"expected {n} fields, got {len(parts)}")
        return lineno, parts

    texts = []
    for entry in sections.get("features", []):
        lineno, (fid, text) = split(entry, 2)
        if int(fid) != len(texts):
            fail(lineno, "feature ids out of sequence")
        texts.append(text)
    interner = FeatureInterner(texts)
    if len(interner) != n_features or len(interner) != len(texts):
        raise StoreFormatError(f"{source}: feature table size mismatch")

    target_marginals = {}
    for entry in sections.get("targets", []):
        lineno, (target, value) = split(entry, 2)
        target_marginals[target] = float(value)
    if len(target_marginals) != n_targets:
        raise StoreFormatError(f"{source}: expected {n_targets} targets, found {len(target_marginals)}")
    feature_marginals = {}
    for entry in sections.get("feature_marginals", []):
        lineno, (fid, value) = split(entry, 2)
        feature_marginals[int(fid)] = float(value)
    term_counts = {}
    for entry in sections.get("term_counts", []):
        lineno, (term, value) = split(entry, 2)
        term_counts[term] = int(value)

    rows: dict = {t: {} for t in target_marginals}
    for entry in sections["records"]:
        lineno, (target, ftext, weight) = split(entry, 3)
        fid = interner.get(ftext)
        if fid is None:
            fail(lineno, f"unknown feature {ftext!r}")
        if target not in rows:
            fail(lineno, f"record for unlisted target {target!r}")
        rows[target][fid] = float(weight)
    if len(sections["records"]) != n_records:
        raise StoreFormatError(f"{source}: expected {n_records} records, found {len(sections['records'])}")
    vectors = {t: SparseVector.from_dict(rows[t]) for t in sorted(rows)}
    return VectorStore(vectors, interner, target_marginals, feature_marginals, grand_total,
                       meta, term_counts)


def load(path) -> VectorStore:
    return loads(read_text(path), str(path))


def write_vectors(named: Mapping[str, SparseVector], interner: FeatureInterner, out) -> None:
    """Emit ad-hoc vectors (enriched words, phrases) in the store record format."""
    for name in named:
        vec = named[name]
        for ftext, weight in sorted((interner.text(i), w) for i, w in vec.items()):
            out.write(f"{name}\t{ftext}\t{_fmt(weight)}\n")
