"""Reading dependency-parsed corpora and extracting co-occurrence events.

Two kinds of events are produced from a :class:`DependencySentence`:

* typed events, whose feature is a dependency path from the target to a
  context token plus that token's lemma (``_amod»det:the``), and
* untyped events, whose feature is the bare lemma of a token inside a
  symmetric window around the target.

Extraction is a pure function of one sentence, so a corpus can be sharded
and the resulting counts merged by addition.
"""
from __future__ import annotations

import gzip
import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import islice
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Union

log = logging.getLogger(__name__)

PATH_SEP = "»"
INVERSE_MARK = "_"
FEATURE_SEP = ":"

DEFAULT_SKIP_POS = frozenset({"PUNCT", "."})


class IngestError(Exception):
    """The corpus could not be read at all."""


class MalformedSentence(ValueError):
    pass


class Step(NamedTuple):
    label: str
    inverse: bool = False

    def __str__(self):
        return INVERSE_MARK + self.label if self.inverse else self.label

    def flipped(self) -> "Step":
        return Step(self.label, not self.inverse)

    @classmethod
    def parse(cls, text: str) -> "Step":
        if text.startswith(INVERSE_MARK) and len(text) > 1:
            return cls(text[1:], True)
        return cls(text, False)


class DepPath(tuple):
    """An ordered sequence of :class:`Step` s; the empty path is the anchor."""

    def __new__(cls, steps: Iterable[Step] = ()):
        return super().__new__(cls, (s if isinstance(s, Step) else Step(*s) for s in steps))

    def __str__(self):
        return PATH_SEP.join(str(s) for s in self)

    def __repr__(self):
        return f"DepPath({str(self)!r})"

    def __add__(self, other):
        return DepPath(tuple.__add__(self, other))

    @property
    def order(self) -> int:
        return len(self)

    @classmethod
    def parse(cls, text: str) -> "DepPath":
        if not text:
            return cls()
        return cls(Step.parse(t) for t in text.split(PATH_SEP))

    @classmethod
    def forward(cls, label: str) -> "DepPath":
        return cls([Step(label, False)])

    def inverse(self) -> "DepPath":
        """Reverse step order and flip every direction."""
        return DepPath(s.flipped() for s in reversed(self))

    def reduced(self) -> "DepPath":
        """Cancel adjacent ``r``/``_r`` pairs until none remain."""
        stack: list = []
        for step in self:
            if stack and stack[-1].label == step.label and stack[-1].inverse != step.inverse:
                stack.pop()
            else:
                stack.append(step)
        return DepPath(stack)


class TypedFeature(NamedTuple):
    path: DepPath
    lemma: str

    @property
    def text(self) -> str:
        return f"{self.path}{FEATURE_SEP}{self.lemma}"

    def __str__(self):
        return self.text

    @classmethod
    def parse(cls, text: str) -> "TypedFeature":
        path_text, sep, lemma = text.partition(FEATURE_SEP)
        if not sep:
            raise ValueError(f"not a typed feature: {text!r}")
        return cls(DepPath.parse(path_text), lemma)


class CooccurrenceEvent(NamedTuple):
    target: str
    feature: Union[TypedFeature, str]
    count: int = 1

    @property
    def feature_text(self) -> str:
        return self.feature if isinstance(self.feature, str) else self.feature.text


@dataclass(frozen=True)
class TokenRecord:
    index: int
    lemma: str
    pos: str
    head: int
    rel: str
    form: str = ""

    def key(self, scheme: str = "lemma") -> str:
        if scheme == "lemma/pos":
            return f"{self.lemma}/{self.pos}"
        return self.lemma


@dataclass(frozen=True)
class DependencySentence:
    tokens: tuple

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    @property
    def root(self) -> TokenRecord:
        return next(t for t in self.tokens if t.head == 0)

    def validate(self) -> None:
        n = len(self.tokens)
        for pos, tok in enumerate(self.tokens, start=1):
            if tok.index != pos:
                raise MalformedSentence(f"token {pos} carries index {tok.index}")
            if not tok.lemma:
                raise MalformedSentence(f"token {pos} has an empty lemma")
            if not 0 <= tok.head <= n:
                raise MalformedSentence(f"token {pos} has head {tok.head} outside 0..{n}")
            if tok.head == tok.index:
                raise MalformedSentence(f"token {pos} is its own head")
        roots = sum(1 for t in self.tokens if t.head == 0)
        if n and roots != 1:
            raise MalformedSentence(f"expected one root, found {roots}")
        for tok in self.tokens:
            seen = 0
            node = tok
            while node.head != 0:
                seen += 1
                if seen > n:
                    raise MalformedSentence(f"cycle through token {tok.index}")
                node = self.tokens[node.head - 1]

    def adjacency(self) -> list:
        """Per token (0-based), its tree neighbours as ``(Step, 0-based index)``.

        The head comes first (reached by an inverse step), then dependents in
        surface order (reached by forward steps).
        """
        adj: list = [[] for _ in self.tokens]
        for i, tok in enumerate(self.tokens):
            if tok.head:
                adj[i].append((Step(tok.rel, True), tok.head - 1))
        for i, tok in enumerate(self.tokens):
            if tok.head:
                adj[tok.head - 1].append((Step(tok.rel, False), i))
        return adj


@dataclass
class ConllColumns:
    """1-based column positions; defaults follow 10-column CoNLL."""

    index: int = 1
    form: int = 2
    lemma: int = 3
    pos: int = 4
    head: int = 7
    rel: int = 8

    @property
    def width(self) -> int:
        return max(self.index, self.form, self.lemma, self.pos, self.head, self.rel)


@dataclass
class ParseStats:
    sentences: int = 0
    skipped: int = 0
    errors: list = field(default_factory=list)


def normalise_label(label: str) -> str:
    # ':' separates path from lemma in feature text, so subtypes use '.'
    return label.replace(FEATURE_SEP, ".")


def _parse_block(lines: Sequence[str], cols: ConllColumns) -> DependencySentence:
    tokens = []
    for line in lines:
        fields = line.split("\t")
        if len(fields) < cols.width:
            raise MalformedSentence(f"expected {cols.width} columns, got {len(fields)}")
        raw_index = fields[cols.index - 1]
        if "-" in raw_index or "." in raw_index:
            continue  # CoNLL-U multiword ranges and empty nodes
        try:
            index = int(raw_index)
            head = int(fields[cols.head - 1])
        except ValueError as exc:
            raise MalformedSentence(str(exc)) from None
        lemma = fields[cols.lemma - 1]
        form = fields[cols.form - 1]
        if lemma == "_" and form not in ("", "_"):
            lemma = form
        tokens.append(TokenRecord(index=index, lemma=lemma.lower(), pos=fields[cols.pos - 1],
                                  head=head, rel=normalise_label(fields[cols.rel - 1]), form=form))
    sentence = DependencySentence(tuple(tokens))
    sentence.validate()
    return sentence


def parse_conll(stream: Iterable[str], columns: Optional[ConllColumns] = None,
                stats: Optional[ParseStats] = None) -> Iterator[DependencySentence]:
    """Yield well-formed sentences from CoNLL-style lines.

    Malformed blocks are skipped and counted in ``stats``; they never abort
    the stream.
    """
    cols = columns or ConllColumns()
    stats = stats if stats is not None else ParseStats()
    block: list = []
    first_line = 1
    lineno = 0

    def flush():
        try:
            sentence = _parse_block(block, cols)
        except MalformedSentence as exc:
            stats.skipped += 1
            stats.errors.append((first_line, str(exc)))
            log.debug("skipping sentence at line %d: %s", first_line, exc)
            return None
        if not len(sentence):
            return None
        stats.sentences += 1
        return sentence

    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if line.startswith("#"):
            continue
        if not line.strip():
            if block:
                sentence = flush()
                if sentence is not None:
                    yield sentence
                block = []
            continue
        if not block:
            first_line = lineno
        block.append(line)
    if block:
        sentence = flush()
        if sentence is not None:
            yield sentence


def open_corpus(path) -> Iterator[str]:
    """Yield text lines from a plain or gzip-compressed file."""
    try:
        with open(path, "rb") as fh:
            gzipped = fh.read(2) == b"\x1f\x8b"
        opener = gzip.open if gzipped else open
        with opener(path, "rt", encoding="utf-8") as fh:
            yield from fh
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read corpus {path}: {exc}") from exc


def read_corpus(paths, columns=None, stats=None) -> Iterator[DependencySentence]:
    if isinstance(paths, (str, bytes)) or hasattr(paths, "__fspath__"):
        paths = [paths]
    for path in paths:
        yield from parse_conll(open_corpus(path), columns, stats)


def extract_typed(sentence: DependencySentence, max_order: int,
                  skip_pos=DEFAULT_SKIP_POS, key: str = "lemma") -> list:
    """All (target, path:context) events along tree paths of length <= max_order.

    Punctuation is neither a target nor a context, but paths may pass
    through it.
    """
    if max_order < 1:
        raise ValueError("max_order must be >= 1")
    toks = sentence.tokens
    adj = sentence.adjacency()
    events = []
    for start, tok in enumerate(toks):
        if tok.pos in skip_pos:
            continue
        target = tok.key(key)
        # breadth-first walk; a tree has exactly one simple path to each node
        frontier = [(start, -1, ())]
        for _ in range(max_order):
            nxt = []
            for node, came_from, steps in frontier:
                for step, other in adj[node]:
                    if other == came_from:
                        continue
                    path = steps + (step,)
                    nxt.append((other, node, path))
                    ctx = toks[other]
                    if ctx.pos not in skip_pos:
                        events.append(CooccurrenceEvent(target, TypedFeature(DepPath(path), ctx.key(key))))
            frontier = nxt
    return events


def extract_window(sentence: DependencySentence, window: int,
                   skip_pos=DEFAULT_SKIP_POS, key: str = "lemma") -> list:
    """Symmetric-window events; punctuation is removed before windowing."""
    if window < 1:
        raise ValueError("window must be >= 1")
    words = [t.key(key) for t in sentence.tokens if t.pos not in skip_pos]
    events = []
    for i, target in enumerate(words):
        lo, hi = max(0, i - window), min(len(words), i + window + 1)
        for j in range(lo, hi):
            if j != i:
                events.append(CooccurrenceEvent(target, words[j]))
    return events


def _count_chunk(args):
    sentences, mode, size, skip_pos, key = args
    pairs: Counter = Counter()
    terms: Counter = Counter()
    for sentence in sentences:
        for tok in sentence.tokens:
            if tok.pos not in skip_pos:
                terms[tok.key(key)] += 1
        if mode == "typed":
            events = extract_typed(sentence, size, skip_pos, key)
        else:
            events = extract_window(sentence, size, skip_pos, key)
        pairs.update((e.target, e.feature_text) for e in events)
    return pairs, terms


def count_cooccurrences(sentences: Iterable[DependencySentence], mode: str, size: int,
                        skip_pos=DEFAULT_SKIP_POS, key: str = "lemma",
                        threads: int = 1, chunk_size: int = 2000):
    """Count events over a corpus.

    ``size`` is the maximum path order for ``mode="typed"`` and the window
    radius for ``mode="untyped"``.  Returns ``(pair_counts, term_counts)``
    keyed by ``(target, feature_text)`` and by lemma.
    """
    if mode not in ("typed", "untyped"):
        raise ValueError(f"unknown model type {mode!r}")
    skip_pos = frozenset(skip_pos)
    it = iter(sentences)
    chunks = iter(lambda: list(islice(it, chunk_size)), [])
    jobs = ((chunk, mode, size, skip_pos, key) for chunk in chunks)
    pairs: Counter = Counter()
    terms: Counter = Counter()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = pool.map(_count_chunk, jobs)
            for p, t in results:
                pairs.update(p)
                terms.update(t)
    else:
        for p, t in map(_count_chunk, jobs):
            pairs.update(p)
            terms.update(t)
    return pairs, terms
