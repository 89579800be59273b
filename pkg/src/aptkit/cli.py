"""Command-line front end: ``aptkit <subcommand> ...``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  Errors are
reported as a single ``aptkit: <kind>: <message>`` line on stderr; logs go to
stderr and results to stdout (or ``--output``).
"""
from __future__ import annotations

import argparse
import io
import json
import logging
import shlex
import sys
from pathlib import Path

from . import __version__
from .composition import PhraseSpec, compose_with_di, phrase_type
from .evaluation import (PRESETS, SWEEP_HEADER, DatasetError, SweepGrid, dump_neighbours, eval_composition,
                         eval_wordsim, format_neighbours, format_table, format_tsv, load_pairs, sweep,
                         sweep_rows)
from .inference import InferenceConfig, enrich
from .ingest import DEFAULT_SKIP_POS, ConllColumns, IngestError, ParseStats, count_cooccurrences, read_corpus
from .neighbours import RetrievalPolicy, load_lexicon
from .vsm import (StoreFormatError, StoreMeta, filter_store, from_counts, load, read_header, save, sppmi,
                  write_vectors)

log = logging.getLogger("aptkit")

DEFAULT_K = {"typed": 40.0, "untyped": 1.0}
DEFAULT_FILTER = {
    "typed": {"min_feature_count": 10, "min_nnz": 50, "min_term_freq": 1},
    "untyped": {"min_feature_count": 1, "min_nnz": 1, "min_term_freq": 50},
}
# not echoed into artifacts: they never change results
_NOT_ECHOED = {"func", "config", "threads", "verbose", "quiet"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- config handling -------------------------------------------------------

def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _given(action, argv) -> bool:
    for token in argv:
        for opt in action.option_strings:
            if token == opt or token.startswith(opt + "="):
                return True
    return False


def apply_config(parser, ns, argv, values: dict) -> None:
    """Fill options absent from ``argv`` with config-file values (flags win)."""
    actions = {a.dest: a for a in parser._actions if a.option_strings}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise UsageError(f"config key {key!r} is not an option of this subcommand")
        if _given(action, argv):
            continue
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        else:
            convert = action.type or str
            parts = shlex.split(raw.replace(",", " "))
            try:
                if action.nargs in ("+", "*"):
                    value = [convert(p) for p in parts]
                else:
                    value = convert(raw)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from None
            if action.choices is not None:
                for v in value if isinstance(value, list) else [value]:
                    if v not in action.choices:
                        raise UsageError(f"config key {key!r}: invalid choice {v!r}")
        setattr(ns, action.dest, value)


def resolved_config(ns) -> dict:
    return {k: v for k, v in sorted(vars(ns).items()) if k not in _NOT_ECHOED}


# --- shared helpers --------------------------------------------------------

def _existing(path: str) -> str:
    if not Path(path).exists():
        raise UsageError(f"no such file: {path}")
    return path


def _load_store(path):
    return load(_existing(path))


def _columns(spec: str) -> ConllColumns:
    cols = ConllColumns()
    if spec:
        for item in spec.split(","):
            name, _, pos = item.partition("=")
            if not hasattr(cols, name.strip()) or not pos.strip().isdigit():
                raise UsageError(f"bad column spec {item!r}; use e.g. lemma=3,head=7")
            setattr(cols, name.strip(), int(pos))
    return cols


def _di_config(args):
    if args.n == 0 and args.policy != "density":
        return None
    lexicon = None
    if args.policy == "lexicon":
        if not args.lexicon:
            raise UsageError("--policy lexicon needs --lexicon FILE")
        lexicon = load_lexicon(_existing(args.lexicon))
    policy = RetrievalPolicy(args.policy, n=args.n, delta=args.delta, cap=args.cap, lexicon=lexicon)
    return InferenceConfig(policy, normalize_neighbours=args.normalize, weight_by_similarity=args.weight_by_sim)


def _phrase_query(token: str) -> PhraseSpec:
    """``AN:white:house`` style phrase (surface order)."""
    parts = token.split(":")
    if len(parts) != 3:
        raise UsageError(f"bad phrase query {token!r}; use TYPE:w1:w2")
    ptype = phrase_type(parts[0])
    w1, w2 = parts[1].lower(), parts[2].lower()
    return PhraseSpec(ptype, w1, w2) if ptype == "VO" else PhraseSpec(ptype, w2, w1)


def _write(text: str, output) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _echo(ns) -> str:
    return "config " + json.dumps(resolved_config(ns), sort_keys=True, separators=(",", ":"))


# --- subcommands -----------------------------------------------------------

def cmd_build(args, mode):
    stats = ParseStats()
    sentences = read_corpus([_existing(p) for p in args.corpus], _columns(args.columns), stats)
    skip = frozenset(s for s in args.skip_pos.split(",") if s) if args.skip_pos is not None else DEFAULT_SKIP_POS
    size = args.max_order if mode == "typed" else args.window
    pairs, terms = count_cooccurrences(sentences, mode, size, skip, args.key_scheme, threads=args.threads)
    log.info("read %d sentences, skipped %d malformed", stats.sentences, stats.skipped)
    meta = StoreMeta(model_type=mode, max_order=size if mode == "typed" else 0,
                     window=size if mode == "untyped" else 0, key_scheme=args.key_scheme)
    store = from_counts(pairs, meta.with_history(resolved_config(args)), terms)
    log.info("built %s store: %d targets, %d features", mode, len(store), len(store.interner))
    save(store, args.output)
    return 0


def cmd_filter(args):
    store = _load_store(args.store)
    defaults = DEFAULT_FILTER[store.meta.model_type]
    for key, value in defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    out = filter_store(store, args.min_feature_count, args.min_nnz, args.min_term_freq)
    out.meta = out.meta.with_history(resolved_config(args))
    save(out, args.output)
    return 0


def cmd_weight(args):
    store = _load_store(args.store)
    if args.k is None:
        args.k = DEFAULT_K[store.meta.model_type]
    out = sppmi(store, args.k)
    out.meta = out.meta.with_history(resolved_config(args))
    save(out, args.output)
    return 0


def cmd_neighbours(args):
    store = _load_store(args.store)
    cfg = _di_config(args)
    policy = cfg.policy if cfg is not None else RetrievalPolicy("static", n=0)
    found = policy.retrieve(store, args.word)
    rows = [(i, nb.name, nb.similarity) for i, nb in enumerate(found, start=1)]
    header = ("rank", "neighbour", "similarity")
    _write(format_table(header, rows) if args.format == "table" else format_tsv(header, rows, _echo(args)),
           args.output)
    return 0


def cmd_infer(args):
    store = _load_store(args.store)
    enriched = enrich(store, args.word, _di_config(args) or InferenceConfig.static(0))
    for nb in enriched.neighbours:
        log.info("consumed %s (%.4f)", nb.name, nb.similarity)
    buf = io.StringIO()
    buf.write(f"# {_echo(args)}\n")
    write_vectors({args.word: enriched.result}, store.interner, buf)
    _write(buf.getvalue(), args.output)
    return 0


def cmd_compose(args):
    store = _load_store(args.store)
    spec = _phrase_query(f"{args.type}:{args.w1}:{args.w2}")
    vec = compose_with_di(store, spec, args.mode, _di_config(args))
    buf = io.StringIO()
    buf.write(f"# {_echo(args)}\n")
    write_vectors({spec.name: vec}, store.interner, buf)
    _write(buf.getvalue(), args.output)
    return 0


def cmd_eval_wordsim(args):
    store = _load_store(args.store)
    cfg = _di_config(args)
    rows = []
    for path in args.datasets:
        items = load_pairs(_existing(path), args.preset)
        rep = eval_wordsim(store, items, cfg, Path(path).name)
        rows.append((rep.dataset, rep.rho, rep.coverage, rep.scored, rep.total, dict(rep.config)["di"]))
    header = ("dataset", "rho", "coverage", "scored", "total", "di")
    text = format_table(header, rows) if args.format == "table" else format_tsv(header, rows, _echo(args))
    _write(text, args.output)
    return 0


def cmd_eval_comp(args):
    store = _load_store(args.store)
    cfg = _di_config(args)
    per_type = {t: n for t, n in (("AN", args.n_an), ("NN", args.n_nn), ("VO", args.n_vo)) if n is not None}
    items = load_pairs(_existing(args.dataset), args.preset)
    rep = eval_composition(store, items, args.mode, cfg, per_type, Path(args.dataset).name)
    rows = [(t, r.rho, r.coverage, r.scored, r.total, dict(r.config)["di"]) for t, r in rep.per_type.items()]
    rows.append(("average", rep.average, "", "", "", ""))
    header = ("phrase_type", "rho", "coverage", "scored", "total", "di")
    text = format_table(header, rows) if args.format == "table" else format_tsv(header, rows, _echo(args))
    _write(text, args.output)
    return 0


def cmd_sweep(args):
    store = _load_store(args.store)
    lexicon = load_lexicon(_existing(args.lexicon)) if args.lexicon else None
    if "lexicon" in args.policies and lexicon is None:
        raise UsageError("policy lexicon needs --lexicon FILE")
    grid = SweepGrid(tuple(args.ks), tuple(args.ns), tuple(args.policies), tuple(args.modes),
                     args.delta, lexicon)
    words = {Path(p).name: load_pairs(_existing(p), args.preset) for p in args.wordsim}
    phrases = {Path(p).name: load_pairs(_existing(p), args.phrase_preset) for p in args.phrases}
    if not words and not phrases:
        raise UsageError("sweep needs --wordsim and/or --phrases datasets")
    rows = sweep_rows(sweep(store, grid, words, phrases, threads=args.threads))
    text = format_table(SWEEP_HEADER, rows) if args.format == "table" else format_tsv(SWEEP_HEADER, rows, _echo(args))
    _write(text, args.output)
    return 0


def cmd_dump_neighbours(args):
    store = _load_store(args.store)
    queries = [_phrase_query(q) if ":" in q else q.lower() for q in args.queries]
    pool = []
    for path in args.pool:
        for item in load_pairs(_existing(path), args.pool_preset):
            pool.extend([item.first, item.second])
    di_cfg = _di_config(args)
    conditions = [None, di_cfg] if di_cfg is not None and args.compare else [di_cfg]
    rows = []
    for mode in args.modes:
        for cfg in conditions:
            rows.extend(dump_neighbours(store, queries, mode, cfg, args.top, pool))
    rows.sort(key=lambda r: (queries_index(queries, r.query), r.condition))
    _write(format_neighbours(rows), args.output)
    return 0


def queries_index(queries, label):
    for i, q in enumerate(queries):
        if (q.surface if isinstance(q, PhraseSpec) else q) == label:
            return i
    return len(queries)


def cmd_info(args):
    for line in read_header(_existing(args.store)):
        print(line)
    return 0


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value file; command-line flags take precedence")
    common.add_argument("--threads", type=int, default=1, help="worker cap for ingestion and sweeps")
    common.add_argument("-v", "--verbose", action="store_true")
    common.add_argument("-q", "--quiet", action="store_true")

    di = _Parser(add_help=False)
    di.add_argument("--policy", choices=("static", "density", "lexicon"), default="static")
    di.add_argument("--n", type=int, default=30, help="neighbours consumed (0 disables inference)")
    di.add_argument("--delta", type=float, default=0.05, help="density-window band width")
    di.add_argument("--cap", type=int, default=100, help="density-window cap")
    di.add_argument("--lexicon", help="synonym lexicon file for --policy lexicon")
    di.add_argument("--normalize", action="store_true", help="unit-normalise neighbours before adding")
    di.add_argument("--weight-by-sim", action="store_true", help="scale neighbours by their similarity")

    fmt = _Parser(add_help=False)
    fmt.add_argument("--format", choices=("tsv", "table"), default="tsv")
    fmt.add_argument("-o", "--output")

    parser = _Parser(prog="aptkit",
                     description="Build, weight, query and evaluate sparse distributional vector spaces.")
    parser.add_argument("--version", action="version", version=f"aptkit {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    corpus = _Parser(add_help=False)
    corpus.add_argument("corpus", nargs="+", help="CoNLL files (optionally gzipped)")
    corpus.add_argument("-o", "--output", required=True)
    corpus.add_argument("--columns", default="", help="1-based column map, e.g. index=1,lemma=3,pos=4,head=7,rel=8")
    corpus.add_argument("--skip-pos", default=None, help="comma-separated POS tags to ignore (default PUNCT,.)")
    corpus.add_argument("--key-scheme", choices=("lemma", "lemma/pos"), default="lemma")

    p = sub.add_parser("build-typed", parents=[common, corpus], help="dependency-path co-occurrence store")
    p.add_argument("--max-order", type=int, default=3)
    p.set_defaults(func=lambda a: cmd_build(a, "typed"))

    p = sub.add_parser("build-window", parents=[common, corpus], help="window co-occurrence store")
    p.add_argument("--window", type=int, default=5)
    p.set_defaults(func=lambda a: cmd_build(a, "untyped"))

    p = sub.add_parser("filter", parents=[common], help="frequency filtering of a raw store")
    p.add_argument("store")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--min-feature-count", type=float, default=None, help="default 10 typed / 1 untyped")
    p.add_argument("--min-nnz", type=int, default=None, help="default 50 typed / 1 untyped")
    p.add_argument("--min-term-freq", type=float, default=None, help="default 1 typed / 50 untyped")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("weight", parents=[common], help="shifted PPMI weighting")
    p.add_argument("store")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--k", type=float, default=None, help="shift (default 40 typed / 1 untyped)")
    p.set_defaults(func=cmd_weight)

    p = sub.add_parser("neighbours", parents=[common, di, fmt], help="nearest neighbours of a word")
    p.add_argument("store")
    p.add_argument("word")
    p.set_defaults(func=cmd_neighbours)

    p = sub.add_parser("infer", parents=[common, di], help="enrich a word vector")
    p.add_argument("store")
    p.add_argument("word")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("compose", parents=[common, di], help="compose a two-word phrase")
    p.add_argument("store")
    p.add_argument("type", help="AN, NN or VO")
    p.add_argument("w1", help="first word in surface order")
    p.add_argument("w2")
    p.add_argument("--mode", choices=("union", "intersection", "add", "mult"), default="intersection")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("eval-wordsim", parents=[common, di, fmt], help="word similarity evaluation")
    p.add_argument("store")
    p.add_argument("datasets", nargs="+")
    p.add_argument("--preset", choices=sorted(PRESETS), default="tsv")
    p.set_defaults(func=cmd_eval_wordsim)

    p = sub.add_parser("eval-comp", parents=[common, di, fmt], help="phrase similarity evaluation")
    p.add_argument("store")
    p.add_argument("dataset")
    p.add_argument("--preset", choices=sorted(PRESETS), default="ml2010")
    p.add_argument("--mode", choices=("union", "intersection", "add", "mult"), default="intersection")
    p.add_argument("--n-an", type=int)
    p.add_argument("--n-nn", type=int)
    p.add_argument("--n-vo", type=int)
    p.set_defaults(func=cmd_eval_comp)

    p = sub.add_parser("sweep", parents=[common, fmt], help="grid over k, n, policy and mode")
    p.add_argument("store", help="raw (unweighted) store")
    p.add_argument("--k", dest="ks", type=float, nargs="+", default=[1.0, 5.0, 10.0, 40.0, 100.0])
    p.add_argument("--n", dest="ns", type=int, nargs="+", default=[0, 30])
    p.add_argument("--policy", dest="policies", nargs="+", choices=("static", "density", "lexicon"),
                   default=["static"])
    p.add_argument("--mode", dest="modes", nargs="+", choices=("union", "intersection", "add", "mult"),
                   default=["union", "intersection"])
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--lexicon")
    p.add_argument("--wordsim", nargs="+", default=[])
    p.add_argument("--phrases", nargs="+", default=[])
    p.add_argument("--preset", choices=sorted(PRESETS), default="tsv")
    p.add_argument("--phrase-preset", choices=sorted(PRESETS), default="ml2010")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("dump-neighbours", parents=[common, di], help="neighbour table for words and phrases")
    p.add_argument("store")
    p.add_argument("queries", nargs="+", help="words, or phrases as TYPE:w1:w2 (e.g. AN:white:house)")
    p.add_argument("--top", type=int, default=3)
    p.add_argument("--modes", nargs="+", choices=("union", "intersection", "add", "mult"),
                   default=["union", "intersection"])
    p.add_argument("--pool", nargs="+", default=[], help="phrase datasets whose pairs join the candidate pool")
    p.add_argument("--pool-preset", choices=sorted(PRESETS), default="ml2010")
    p.add_argument("--no-compare", dest="compare", action="store_false",
                   help="only the DI condition (default shows with and without)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_dump_neighbours)

    p = sub.add_parser("info", parents=[common], help="print a store's metadata header")
    p.add_argument("store")
    p.set_defaults(func=cmd_info)
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("missing subcommand")
        if args.config:
            apply_config(_subparser(parser, args.command), args, argv, read_config_file(args.config))
        level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
        logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                            force=True)
        log.info("%s %s", args.command, json.dumps(resolved_config(args), sort_keys=True))
        return args.func(args)
    except UsageError as exc:
        print(f"aptkit: usage-error: {exc}", file=sys.stderr)
        return 2
    except DatasetError as exc:
        print(f"aptkit: usage-error: {exc}", file=sys.stderr)
        return 2
    except (IngestError, StoreFormatError, ValueError, KeyError, OSError) as exc:
        print(f"aptkit: runtime-error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
