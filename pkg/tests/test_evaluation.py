import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aptkit.composition import PhraseSpec, compose_with_di
from aptkit.evaluation import (SWEEP_HEADER, DatasetError, EvalError, LoadStats, PairSchema, PhrasePairItem,
                               SweepGrid, UndefinedCorrelationError, WordPairItem, dump_neighbours,
                               eval_composition, eval_wordsim, format_neighbours, format_table, format_tsv,
                               load_pairs, spearman, sweep, sweep_rows)
from aptkit.inference import InferenceConfig, enrich
from aptkit.neighbours import neighbours_over_union, top_n
from aptkit.vsm import StoreStateError, sppmi
from oracles import dict_cosine, naive_spearman, scan
from toydata import TOY_PHRASES, TOY_WORDSIM, make_store

# --- spearman ----------------------------------------------------------------


def test_spearman_hand_value():
    assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)
    assert naive_spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=40).filter(lambda xs: len(set(xs)) > 1))
def test_spearman_extremes_exact(xs):
    assert spearman(xs, xs) == 1.0
    assert spearman(xs, [-x for x in xs]) == -1.0


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_spearman_matches_naive(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    xs = rng.integers(0, 6, n).astype(float)  # plenty of ties
    ys = rng.normal(size=n).round(1)
    if len(set(xs)) < 2 or len(set(ys)) < 2:
        return
    assert abs(spearman(xs, ys) - naive_spearman(list(xs), list(ys))) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(-100, 100), min_size=3, max_size=30, unique=True),
       st.lists(st.integers(-100, 100), min_size=3, max_size=30, unique=True))
def test_spearman_monotone_invariance(xs, ys):
    # integers keep the transforms strictly monotone in floating point
    n = min(len(xs), len(ys))
    xs, ys = [x / 10 for x in xs[:n]], [y / 10 for y in ys[:n]]
    rho = spearman(xs, ys)
    assert spearman([math.atan(x) * 7 + 1 for x in xs], ys) == pytest.approx(rho, abs=1e-12)
    assert spearman(xs, [y ** 3 for y in ys]) == pytest.approx(rho, abs=1e-12)


def test_spearman_undefined_cases():
    with pytest.raises(UndefinedCorrelationError):
        spearman([1.0], [2.0])
    with pytest.raises(UndefinedCorrelationError):
        spearman([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])


# --- datasets ----------------------------------------------------------------

def test_load_empty_and_two_line(tmp_path):
    empty = tmp_path / "empty.tsv"
    empty.write_text("")
    assert load_pairs(empty) == []
    two = tmp_path / "two.tsv"
    two.write_text("a\tb\t5.0\nc\td\t1.0\n")
    assert load_pairs(two) == [WordPairItem("a", "b", 5.0), WordPairItem("c", "d", 1.0)]


def test_raters_are_averaged(tmp_path):
    path = tmp_path / "ml.txt"
    path.write_text("participant type group input1 input2 input3 input4 input\n"
                    "p1 adjectivenouns 1 white house black cat 7\n"
                    "p2 adjectivenouns 1 white house black cat 6\n"
                    "p3 adjectivenouns 1 white house black cat 5\n"
                    "p1 verbobjects 1 eat bread bake cake 2\n")
    items = load_pairs(path, "ml2010")
    assert len(items) == 2
    first = items[0]
    assert first.gold == 6.0 and first.phrase_type == "AN"
    assert first.first == PhraseSpec("AN", "house", "white")
    assert items[1].first == PhraseSpec("VO", "eat", "bread")
    assert len(load_pairs(path, "ml2010", aggregation="none")) == 4


def test_toy_phrase_file():
    items = load_pairs(TOY_PHRASES, "ml2010")
    assert len(items) == 16
    assert {it.phrase_type for it in items} == {"AN", "NN", "VO"}


def test_malformed_row(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("a\tb\t5.0\nc\td\n e\tf\tlots\n")
    with pytest.raises(DatasetError, match=":2:"):
        load_pairs(path)
    stats = LoadStats()
    assert len(load_pairs(path, strict=False, stats=stats)) == 1
    assert stats.skipped == 2 and stats.rows == 1


def test_score_range_checked(tmp_path):
    path = tmp_path / "ws.tsv"
    path.write_text("a\tb\t11.0\n")
    with pytest.raises(DatasetError):
        load_pairs(path, "ws353")


def test_header_skipped_and_presets(tmp_path):
    tsv = tmp_path / "h.tsv"
    tsv.write_text("word1\tword2\tscore\nold\tnew\t1.5\n")
    assert load_pairs(tsv) == [WordPairItem("old", "new", 1.5)]
    simlex = tmp_path / "simlex.txt"
    simlex.write_text("word1\tword2\tPOS\tSimLex999\nold\tnew\tA\t1.58\n")
    assert load_pairs(simlex, "simlex") == [WordPairItem("old", "new", 1.58)]
    men = tmp_path / "men.txt"
    men.write_text("sun-n sunlight-n 50.0\n")
    assert load_pairs(men, "men") == [WordPairItem("sun", "sunlight", 50.0)]
    custom = PairSchema(columns=(1, 2, 0), delimiter=",")
    csv = tmp_path / "c.csv"
    csv.write_text("3.5,Cat,Dog\n")
    assert load_pairs(csv, custom) == [WordPairItem("cat", "dog", 3.5)]


# --- word similarity -------------------------------------------------------------

WORDS = {
    "cat": {"x": 2.0, "y": 1.0},
    "dog": {"x": 1.5, "y": 1.5, "z": 0.2},
    "car": {"z": 3.0, "w": 1.0},
    "bus": {"z": 2.0, "w": 2.5, "x": 0.1},
    "tea": {"v": 1.0, "x": 0.3},
}
ITEMS = [WordPairItem("cat", "dog", 9.0), WordPairItem("car", "bus", 8.0), WordPairItem("cat", "car", 1.0),
         WordPairItem("dog", "tea", 2.5), WordPairItem("cat", "unicorn", 5.0)]


def test_wordsim_chain_oracle():
    store = make_store(WORDS)
    rep = eval_wordsim(store, ITEMS, None, "hand")
    sims = [dict_cosine(WORDS[it.w1], WORDS[it.w2]) for it in ITEMS[:4]]
    assert rep.rho == pytest.approx(naive_spearman(sims, [9.0, 8.0, 1.0, 2.5]), abs=1e-12)
    assert (rep.scored, rep.total, rep.excluded) == (4, 5, 1)
    assert rep.coverage == 0.8
    assert dict(rep.config)["di"] == "none"


def test_wordsim_with_di_uses_enriched_vectors():
    store = make_store(WORDS)
    cfg = InferenceConfig.static(1)
    rep = eval_wordsim(store, ITEMS, cfg)
    sims = []
    for it in ITEMS[:4]:
        a = store.texts(enrich(store, it.w1, cfg).result)
        b = store.texts(enrich(store, it.w2, cfg).result)
        sims.append(dict_cosine(a, b))
    assert rep.rho == pytest.approx(naive_spearman(sims, [9.0, 8.0, 1.0, 2.5]), abs=1e-12)


def test_wordsim_n_zero_equals_plain(typed_store):
    items = load_pairs(TOY_WORDSIM)
    assert eval_wordsim(typed_store, items, InferenceConfig.static(0)).rho == eval_wordsim(typed_store, items).rho


def test_wordsim_errors():
    store = make_store(WORDS)
    with pytest.raises(EvalError):
        eval_wordsim(store, [WordPairItem("x1", "x2", 1.0)])
    with pytest.raises(StoreStateError):
        eval_wordsim(make_store(WORDS, weighting="raw"), ITEMS)


# --- composition -----------------------------------------------------------------

def _phrase_items():
    def an(d1, h1, d2, h2, gold):
        return PhrasePairItem(PhraseSpec("AN", h1, d1), PhraseSpec("AN", h2, d2), gold)

    def vo(v1, o1, v2, o2, gold):
        return PhrasePairItem(PhraseSpec("VO", v1, o1), PhraseSpec("VO", v2, o2), gold)

    return [an("white", "house", "large", "cottage", 6.0), an("fresh", "bread", "sweet", "cake", 5.0),
            an("young", "man", "red", "bike", 1.0),
            vo("eat", "bread", "bake", "cake", 6.5), vo("drive", "car", "park", "truck", 5.5),
            vo("paint", "house", "cook", "soup", 1.5)]


@pytest.mark.parametrize("mode", ["union", "intersection"])
def test_composition_chain_oracle(typed_k1, mode):
    items = _phrase_items()
    report = eval_composition(typed_k1, items, mode, None, dataset="toy")
    for ptype in ("AN", "VO"):
        group = [it for it in items if it.phrase_type == ptype]
        sims = []
        for it in group:
            a = typed_k1.texts(compose_with_di(typed_k1, it.first, mode))
            b = typed_k1.texts(compose_with_di(typed_k1, it.second, mode))
            sims.append(dict_cosine(a, b))
        want = naive_spearman(sims, [it.gold for it in group])
        assert report.per_type[ptype].rho == pytest.approx(want, abs=1e-12)
    assert set(report.per_type) == {"AN", "VO"}
    assert report.average == pytest.approx((report.per_type["AN"].rho + report.per_type["VO"].rho) / 2)


def test_composition_zero_variance_surfaced():
    store = make_store({"house": {"det:the": 1.0}, "white": {"_amod:house": 1.0},
                        "cat": {"det:a": 1.0}, "black": {"_amod:cat": 1.0}},
                       model_type="typed", max_order=3)
    items = [PhrasePairItem(PhraseSpec("AN", "house", "white"), PhraseSpec("AN", "cat", "black"), 3.0),
             PhrasePairItem(PhraseSpec("AN", "cat", "black"), PhraseSpec("AN", "house", "white"), 5.0)]
    with pytest.raises(UndefinedCorrelationError):
        eval_composition(store, items, "intersection")


def test_per_type_n(typed_k1):
    items = _phrase_items()
    cfg = InferenceConfig.static(5)
    default = eval_composition(typed_k1, items, "union", cfg)
    assert dict(default.per_type["AN"].config)["di"] == "static(n=5)"
    mixed = eval_composition(typed_k1, items, "union", cfg, per_type_n={"AN": 2})
    assert dict(mixed.per_type["AN"].config)["di"] == "static(n=2)"
    assert dict(mixed.per_type["VO"].config)["di"] == "static(n=5)"
    assert mixed.per_type["VO"].rho == default.per_type["VO"].rho
    direct = eval_composition(typed_k1, [it for it in items if it.phrase_type == "AN"], "union",
                              InferenceConfig.static(2))
    assert mixed.per_type["AN"].rho == direct.per_type["AN"].rho


def test_composition_coverage():
    store = make_store(WORDS)
    items = [PhrasePairItem(PhraseSpec("AN", "cat", "dog"), PhraseSpec("AN", "car", "bus"), 1.0),
             PhrasePairItem(PhraseSpec("AN", "cat", "tea"), PhraseSpec("AN", "bus", "dog"), 2.0),
             PhrasePairItem(PhraseSpec("AN", "cat", "zebra"), PhraseSpec("AN", "bus", "dog"), 2.0)]
    rep = eval_composition(store, items, "add").per_type["AN"]
    assert (rep.scored, rep.total) == (2, 3)


# --- sweep -----------------------------------------------------------------------

def test_sweep_single_cell(typed_raw):
    items = load_pairs(TOY_WORDSIM)
    rows = sweep(typed_raw, SweepGrid(ks=(40.0,), ns=(30,)), {"toy": items})
    assert len(rows) == 1
    direct = eval_wordsim(sppmi(typed_raw, 40), items, InferenceConfig.static(30), "toy")
    assert rows[0].rho == direct.rho and rows[0].status == "ok"


def test_sweep_two_by_two(typed_raw):
    items = load_pairs(TOY_WORDSIM)
    rows = sweep(typed_raw, SweepGrid(ks=(40.0, 1.0), ns=(5, 0)), {"toy": items}, threads=2)
    assert [(r.k, r.n) for r in rows] == [(1.0, 0), (1.0, 5), (40.0, 0), (40.0, 5)]
    for row in rows:
        cfg = InferenceConfig.static(row.n) if row.n else None
        assert row.rho == eval_wordsim(sppmi(typed_raw, row.k), items, cfg).rho


def test_sweep_annotates_failed_cell(typed_raw):
    good = load_pairs(TOY_WORDSIM)
    bad = [WordPairItem("qqq", "zzz", 1.0)]
    rows = sweep(typed_raw, SweepGrid(ks=(1.0,), ns=(0,)), {"good": good, "oov": bad})
    status = {r.dataset: r.status for r in rows}
    assert status["good"] == "ok"
    assert status["oov"].startswith("failed: EvalError")
    assert math.isnan([r for r in rows if r.dataset == "oov"][0].rho)


def test_sweep_phrase_rows(typed_raw):
    rows = sweep(typed_raw, SweepGrid(ks=(1.0,), ns=(0,), modes=("union",)), phrase_datasets={"p": _phrase_items()})
    assert [r.phrase_type for r in rows] == ["AN", "VO", "average"]
    table = format_tsv(SWEEP_HEADER, sweep_rows(rows))
    assert table.splitlines()[0].split("\t") == list(SWEEP_HEADER)


def test_sweep_needs_grid_and_data(typed_raw):
    with pytest.raises(ValueError):
        SweepGrid(ks=())
    with pytest.raises(ValueError):
        sweep(typed_raw, SweepGrid())


# --- neighbour dumps ------------------------------------------------------------------

def test_dump_word_matches_top_n(typed_k1):
    (row,) = dump_neighbours(typed_k1, ["dog"], "union", None, n=5)
    assert [nb.name for nb in row.neighbours] == top_n(typed_k1, "dog", 5).names()
    assert row.condition == "union"


def test_dump_phrase_equal_to_word_ranks_it_first():
    store = make_store({"h": {"x": 1.0}, "d": {"y": 1.0}, "hd": {"x": 1.0, "y": 1.0}, "o": {"x": 1.0, "z": 5.0}})
    (row,) = dump_neighbours(store, [PhraseSpec("AN", "h", "d")], "add", None, n=2)
    assert row.neighbours[0].name == "hd" and row.neighbours[0].similarity == pytest.approx(1.0)


def test_dump_matches_scan():
    store = make_store({"a": {"x": 1.0, "y": 0.5}, "b": {"y": 2.0}, "c": {"x": 0.3, "z": 1.0}})
    p1, p2 = PhraseSpec("AN", "a", "b"), PhraseSpec("AN", "c", "b")
    rows = dump_neighbours(store, ["a", p1], "add", None, n=4, pool=[p2])
    pool = {name: store.texts(v) for name, v in store.vectors.items()}
    pool["b a"] = {"x": 1.0, "y": 2.5}
    pool["b c"] = {"x": 0.3, "y": 2.0, "z": 1.0}
    want_word = scan(pool, pool["a"], 4, exclude={"a"})
    want_phrase = scan(pool, pool["b a"], 4, exclude={"b a"})
    for row, want in zip(rows, (want_word, want_phrase)):
        assert [nb.name for nb in row.neighbours] == [name for name, _ in want]


def test_dump_with_di_and_oov(typed_k1):
    cfg = InferenceConfig.static(5)
    rows = dump_neighbours(typed_k1, ["dog", "unicorn", PhraseSpec("AN", "house", "white")], "intersection",
                           cfg, n=3)
    assert [r.condition for r in rows] == ["intersection+DI"] * 3
    assert rows[1].oov and not rows[0].oov
    enriched = enrich(typed_k1, "dog", cfg).result
    phrase = compose_with_di(typed_k1, PhraseSpec("AN", "house", "white"), "intersection", cfg)
    expected = neighbours_over_union(typed_k1, {"white house": phrase}, enriched, 3, {"dog"})
    assert rows[0].neighbours == tuple(expected)
    text = format_neighbours(rows)
    assert "unicorn\tintersection+DI\tOOV" in text


# --- formatting and determinism --------------------------------------------------------

def test_table_and_tsv_formats():
    rows = [("toy", 0.123456789, 1.0, 3)]
    assert format_tsv(("d", "rho", "cov", "n"), rows, "config {}") == \
        "# config {}\nd\trho\tcov\tn\ntoy\t0.123456789\t1.0\t3\n"
    table = format_table(("d", "rho", "cov", "n"), rows)
    assert "0.1235" in table and "1.0000" in table


def test_reports_deterministic(typed_store):
    items = load_pairs(TOY_WORDSIM)
    cfg = InferenceConfig.static(30)
    a = eval_wordsim(typed_store, items, cfg, "toy")
    b = eval_wordsim(typed_store, items, cfg, "toy")
    assert a == b
    assert format_tsv(("rho",), [(a.rho,)]) == format_tsv(("rho",), [(b.rho,)])


def test_rho_defined_on_default_pipeline(typed_store):
    rng = random.Random(0)
    items = load_pairs(TOY_WORDSIM)
    rng.shuffle(items)
    rep = eval_wordsim(typed_store, items, InferenceConfig.static(30))
    assert -1.0 <= rep.rho <= 1.0 and rep.coverage == 1.0
