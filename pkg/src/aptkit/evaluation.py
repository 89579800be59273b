"""Gold datasets, Spearman correlation and experiment grids."""
from __future__ import annotations

import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import rankdata

from .composition import PHRASE_TYPES, PhraseSpec, compose_with_di, phrase_type
from .inference import InferenceConfig, enrich
from .neighbours import RetrievalPolicy, cosine, neighbours_over_union
from .vsm import OutOfVocabularyError, StoreStateError, VectorStore, sppmi

log = logging.getLogger(__name__)


class EvalError(ValueError):
    pass


class UndefinedCorrelationError(EvalError):
    pass


class DatasetError(ValueError):
    pass


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Pearson correlation of average (fractional) ranks."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("spearman needs two equal-length 1-d sequences")
    if x.size < 2:
        raise UndefinedCorrelationError("spearman needs at least two items")
    if np.isnan(x).any() or np.isnan(y).any():
        raise ValueError("NaN in input")
    dx = rankdata(x) - (x.size + 1) / 2
    dy = rankdata(y) - (y.size + 1) / 2
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("zero rank variance; correlation undefined")
    # rank deviations are half-integers, so these sums are exact and
    # identical or reversed rankings give exactly +1 / -1
    return max(-1.0, min(1.0, float(dx @ dy) / math.sqrt(sxx * syy)))


# --- datasets --------------------------------------------------------------

@dataclass(frozen=True)
class WordPairItem:
    w1: str
    w2: str
    gold: float


@dataclass(frozen=True)
class PhrasePairItem:
    first: PhraseSpec
    second: PhraseSpec
    gold: float

    @property
    def phrase_type(self) -> str:
        return self.first.phrase_type


@dataclass(frozen=True)
class PairSchema:
    """Column map for a gold file (0-based columns).

    Word files use ``(w1, w2, score)``.  Phrase files use
    ``(type, a1, a2, b1, b2, score)`` where each phrase is given in surface
    order: modifier before head for AN and NN, verb before object for VO.
    ``header=None`` skips a first line whose score does not parse.
    """

    kind: str = "word"
    columns: tuple = (0, 1, 2)
    delimiter: Optional[str] = "\t"
    header: Optional[bool] = None
    score_range: Optional[Tuple[float, float]] = None
    strip_pos_suffix: bool = False
    fixed_type: Optional[str] = None


PRESETS: Dict[str, PairSchema] = {
    "tsv": PairSchema(),
    "simlex": PairSchema(columns=(0, 1, 3), header=True, score_range=(0.0, 10.0)),
    "ws353": PairSchema(score_range=(0.0, 10.0)),
    "men": PairSchema(delimiter=None, strip_pos_suffix=True, score_range=(0.0, 50.0)),
    "ml2010": PairSchema(kind="phrase", columns=(1, 3, 4, 5, 6, 7), delimiter=None,
                         score_range=(1.0, 7.0)),
    "phrase-tsv": PairSchema(kind="phrase", columns=(0, 1, 2, 3, 4, 5)),
}


@dataclass
class LoadStats:
    rows: int = 0
    skipped: int = 0


def _phrase(ptype: str, w1: str, w2: str) -> PhraseSpec:
    if ptype == "VO":
        return PhraseSpec(ptype, w1, w2)
    return PhraseSpec(ptype, w2, w1)


def load_pairs(path, schema: Union[str, PairSchema] = "tsv", aggregation: str = "mean",
               strict: bool = True, stats: Optional[LoadStats] = None) -> list:
    """Read word-pair or phrase-pair judgements.

    Rows naming the same item (e.g. one row per rater) are averaged into a
    single item with ``aggregation="mean"``; items keep first-seen order.
    Malformed rows raise :class:`DatasetError` with the line number, or are
    counted in ``stats.skipped`` when ``strict`` is false.
    """
    if isinstance(schema, str):
        schema = PRESETS[schema]
    if aggregation not in ("mean", "none"):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    stats = stats if stats is not None else LoadStats()
    width = max(schema.columns) + 1
    scores: Dict[tuple, list] = {}
    order: list = []

    def word(token):
        token = token.strip().lower()
        if schema.strip_pos_suffix and "-" in token:
            token = token.rsplit("-", 1)[0]
        return token

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            if lineno == 1 and schema.header:
                continue
            fields = line.split(schema.delimiter)
            try:
                if len(fields) < width:
                    raise DatasetError(f"expected at least {width} columns, got {len(fields)}")
                try:
                    gold = float(fields[schema.columns[-1]])
                except ValueError:
                    if lineno == 1 and schema.header is None:
                        continue
                    raise DatasetError(f"unparseable score {fields[schema.columns[-1]]!r}") from None
                if schema.score_range and not schema.score_range[0] <= gold <= schema.score_range[1]:
                    raise DatasetError(f"score {gold} outside {schema.score_range}")
                if schema.kind == "word":
                    key = (word(fields[schema.columns[0]]), word(fields[schema.columns[1]]))
                else:
                    ptype = phrase_type(schema.fixed_type or fields[schema.columns[0]])
                    key = (ptype,) + tuple(word(fields[c]) for c in schema.columns[1:5])
            except ValueError as exc:
                if strict:
                    raise DatasetError(f"{path}:{lineno}: {exc}") from None
                stats.skipped += 1
                continue
            stats.rows += 1
            if aggregation == "none":
                key = key + (lineno,)
            if key not in scores:
                scores[key] = []
                order.append(key)
            scores[key].append(gold)

    items = []
    for key in order:
        gold = math.fsum(scores[key]) / len(scores[key])
        if schema.kind == "word":
            items.append(WordPairItem(key[0], key[1], gold))
        else:
            ptype = key[0]
            items.append(PhrasePairItem(_phrase(ptype, key[1], key[2]), _phrase(ptype, key[3], key[4]), gold))
    return items


# --- evaluation ------------------------------------------------------------

@dataclass(frozen=True)
class EvalReport:
    dataset: str
    rho: float
    coverage: float
    scored: int
    total: int
    config: tuple = ()

    @property
    def excluded(self) -> int:
        return self.total - self.scored


@dataclass(frozen=True)
class CompositionReport:
    dataset: str
    per_type: Mapping[str, EvalReport]
    average: float
    config: tuple = ()


def _require_weighted(store: VectorStore):
    if not store.meta.weighted:
        raise StoreStateError("evaluation expects a weighted store; apply sppmi first")


def _config(store: VectorStore, di_cfg: Optional[InferenceConfig], **extra) -> tuple:
    cfg = [("model", store.meta.model_type), ("k", store.meta.k),
           ("di", di_cfg.describe() if di_cfg is not None and not di_cfg.policy.empty else "none")]
    cfg.extend(extra.items())
    return tuple(cfg)


def eval_wordsim(store: VectorStore, items: Sequence[WordPairItem],
                 di_cfg: Optional[InferenceConfig] = None, dataset: str = "") -> EvalReport:
    """Spearman's rho between gold scores and cosines; OOV pairs are excluded."""
    _require_weighted(store)
    cache: dict = {}

    def rep(word):
        if word not in cache:
            cache[word] = enrich(store, word, di_cfg).result if di_cfg is not None else store[word]
        return cache[word]

    golds, sims = [], []
    for item in items:
        if item.w1 not in store or item.w2 not in store:
            continue
        sims.append(cosine(rep(item.w1), rep(item.w2)))
        golds.append(item.gold)
    if not sims:
        raise EvalError(f"{dataset or 'dataset'}: no item is in vocabulary")
    rho = spearman(sims, golds)
    return EvalReport(dataset, rho, len(sims) / len(items), len(sims), len(items), _config(store, di_cfg))


def eval_composition(store: VectorStore, items: Sequence[PhrasePairItem], mode: str,
                     di_cfg: Optional[InferenceConfig] = None,
                     per_type_n: Optional[Mapping[str, int]] = None, dataset: str = "") -> CompositionReport:
    """Per phrase type rho of composed-phrase cosines, plus their unweighted mean.

    ``per_type_n`` overrides the neighbour count of ``di_cfg`` per type.
    """
    _require_weighted(store)
    per_type_n = {phrase_type(t): n for t, n in (per_type_n or {}).items()}
    reports = {}
    for ptype in PHRASE_TYPES:
        group = [it for it in items if it.phrase_type == ptype]
        if not group:
            continue
        cfg = di_cfg
        if ptype in per_type_n:
            cfg = (di_cfg or InferenceConfig()).with_n(per_type_n[ptype])
        cache: dict = {}

        def rep(spec):
            if spec not in cache:
                cache[spec] = compose_with_di(store, spec, mode, cfg)
            return cache[spec]

        golds, sims = [], []
        for item in group:
            lemmas = (item.first.head, item.first.dependent, item.second.head, item.second.dependent)
            if not all(w in store for w in lemmas):
                continue
            sims.append(cosine(rep(item.first), rep(item.second)))
            golds.append(item.gold)
        if not sims:
            raise EvalError(f"{dataset or 'dataset'} {ptype}: no item is in vocabulary")
        rho = spearman(sims, golds)
        reports[ptype] = EvalReport(f"{dataset}:{ptype}" if dataset else ptype, rho, len(sims) / len(group),
                                    len(sims), len(group), _config(store, cfg, mode=mode))
    if not reports:
        raise EvalError(f"{dataset or 'dataset'}: no phrase pairs")
    average = math.fsum(r.rho for r in reports.values()) / len(reports)
    return CompositionReport(dataset, reports, average, _config(store, di_cfg, mode=mode))


# --- sweeps ----------------------------------------------------------------

@dataclass(frozen=True)
class SweepGrid:
    ks: tuple = (40.0,)
    ns: tuple = (30,)
    policies: tuple = ("static",)
    modes: tuple = ("union",)
    delta: float = 0.05
    lexicon: Optional[Mapping] = None

    def __post_init__(self):
        if not (self.ks and self.ns and self.policies and self.modes):
            raise ValueError("every grid axis needs at least one value")


@dataclass(frozen=True)
class SweepRow:
    k: float
    policy: str
    n: int
    mode: str
    dataset: str
    phrase_type: str
    rho: float
    coverage: float
    status: str = "ok"

    def sort_key(self):
        return (self.k, self.policy, self.n, self.mode, self.dataset, self.phrase_type)


def _di_config(policy: str, n: int, grid: SweepGrid) -> Optional[InferenceConfig]:
    if n == 0:
        return None
    if policy == "density":
        return InferenceConfig(RetrievalPolicy("density", n=n, delta=grid.delta, cap=n))
    return InferenceConfig(RetrievalPolicy(policy, n=n, lexicon=grid.lexicon))


def sweep(raw_store: VectorStore, grid: SweepGrid, word_datasets: Mapping[str, Sequence] = None,
          phrase_datasets: Mapping[str, Sequence] = None, threads: int = 1) -> List[SweepRow]:
    """Evaluate the Cartesian product of the grid.

    One weighted store is built per k and shared by its cells.  ``n = 0``
    means no inference; for the density policy ``n`` is the cap.  A failing
    cell becomes a row with ``status="failed: ..."``.
    """
    word_datasets = dict(word_datasets or {})
    phrase_datasets = dict(phrase_datasets or {})
    if not word_datasets and not phrase_datasets:
        raise ValueError("sweep needs at least one dataset")
    stores = {k: sppmi(raw_store, k) for k in grid.ks}
    cells = []
    for k in grid.ks:
        for policy in grid.policies:
            for n in grid.ns:
                for name in word_datasets:
                    cells.append((k, policy, n, "-", name))
                for mode in grid.modes:
                    for name in phrase_datasets:
                        cells.append((k, policy, n, mode, name))

    def run(cell):
        k, policy, n, mode, name = cell
        store = stores[k]
        try:
            cfg = _di_config(policy, n, grid)
            if mode == "-":
                rep = eval_wordsim(store, word_datasets[name], cfg, name)
                return [SweepRow(k, policy, n, mode, name, "-", rep.rho, rep.coverage)]
            comp = eval_composition(store, phrase_datasets[name], mode, cfg, dataset=name)
            rows = [SweepRow(k, policy, n, mode, name, t, r.rho, r.coverage) for t, r in comp.per_type.items()]
            rows.append(SweepRow(k, policy, n, mode, name, "average", comp.average,
                                 sum(r.scored for r in comp.per_type.values())
                                 / sum(r.total for r in comp.per_type.values())))
            return rows
        except (ValueError, KeyError) as exc:
            log.warning("sweep cell %s failed: %s", cell, exc)
            return [SweepRow(k, policy, n, mode, name, "-", math.nan, math.nan,
                             f"failed: {type(exc).__name__}: {exc}")]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, cells))
    else:
        results = [run(c) for c in cells]
    rows = [row for group in results for row in group]
    return sorted(rows, key=SweepRow.sort_key)


# --- neighbour dumps -------------------------------------------------------

@dataclass(frozen=True)
class NeighbourRow:
    query: str
    condition: str
    neighbours: Optional[tuple]

    @property
    def oov(self) -> bool:
        return self.neighbours is None


def dump_neighbours(store: VectorStore, queries: Iterable[Union[str, PhraseSpec]], mode: str,
                    di_cfg: Optional[InferenceConfig], n: int = 3,
                    pool: Iterable[PhraseSpec] = ()) -> List[NeighbourRow]:
    """Top-n neighbours of words and phrases over words plus composed phrases.

    The candidate pool holds every vocabulary word (as is) and every phrase
    among ``queries`` and ``pool``, composed under the same condition as
    the queries.  Phrases are named by surface form.
    """
    _require_weighted(store)
    queries = list(queries)
    condition = mode + ("+DI" if di_cfg is not None and not di_cfg.policy.empty else "")
    phrases: Dict[str, object] = {}
    for spec in [q for q in queries if isinstance(q, PhraseSpec)] + list(pool):
        if spec.surface in phrases:
            continue
        try:
            phrases[spec.surface] = compose_with_di(store, spec, mode, di_cfg)
        except OutOfVocabularyError:
            phrases[spec.surface] = None
    extra = {name: vec for name, vec in phrases.items() if vec is not None}
    rows = []
    for query in queries:
        if isinstance(query, PhraseSpec):
            label = query.surface
            vec = phrases[label]
            exclude = {label}
        else:
            label = query
            if query not in store:
                vec = None
            else:
                vec = enrich(store, query, di_cfg).result if di_cfg is not None else store[query]
            exclude = {query}
        if vec is None:
            rows.append(NeighbourRow(label, condition, None))
            continue
        found = neighbours_over_union(store, extra, vec, n, exclude)
        rows.append(NeighbourRow(label, condition, tuple(found)))
    return rows


# --- report formatting -----------------------------------------------------

def _cell(value, precision: Optional[int]) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return repr(value) if precision is None else f"{value:.{precision}f}"
    return "" if value is None else str(value)


def format_tsv(header: Sequence[str], rows: Iterable[Sequence], comment: Optional[str] = None) -> str:
    out = io.StringIO()
    if comment:
        out.write(f"# {comment}\n")
    out.write("\t".join(header) + "\n")
    for row in rows:
        out.write("\t".join(_cell(v, None) for v in row) + "\n")
    return out.getvalue()


def format_table(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    cells = [list(header)] + [[_cell(v, 4) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


SWEEP_HEADER = ("k", "policy", "n", "mode", "dataset", "phrase_type", "rho", "coverage", "status")


def sweep_rows(rows: Iterable[SweepRow]) -> list:
    return [(r.k, r.policy, r.n, r.mode, r.dataset, r.phrase_type, r.rho, r.coverage, r.status) for r in rows]


def format_neighbours(rows: Iterable[NeighbourRow]) -> str:
    out = io.StringIO()
    for row in rows:
        if row.oov:
            listing = "OOV"
        else:
            listing = ", ".join(f"{nb.name} ({nb.similarity:.4f})" for nb in row.neighbours)
        out.write(f"{row.query}\t{row.condition}\t{listing}\n")
    return out.getvalue()
