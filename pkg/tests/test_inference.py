import math

import pytest

from aptkit.inference import InferenceConfig, enrich
from aptkit.neighbours import RetrievalPolicy, cosine
from aptkit.vsm import OutOfVocabularyError, SparseVector
from oracles import rank
from toydata import make_store


def test_n_zero_is_identity():
    store = make_store({"a": {"f1": 1.0}, "b": {"f1": 1.0, "f2": 2.0}})
    out = enrich(store, "a", InferenceConfig.static(0))
    assert out.result is store["a"]
    assert len(out.neighbours) == 0 and out.contribution.nnz == 0


def test_single_neighbour_hand_sum():
    store = make_store({"a": {"f1": 1.0}, "b": {"f1": 1.0, "f2": 2.0}})
    out = enrich(store, "a", InferenceConfig.static(5))
    assert out.neighbours.names() == ["b"]
    assert store.texts(out.result) == {"f1": 2.0, "f2": 2.0}
    assert out.base is store["a"]


def test_vector_query_is_not_self_excluded():
    store = make_store({"a": {"f1": 1.0}, "b": {"f1": 1.0, "f2": 2.0}})
    out = enrich(store, store.vector_from_texts({"f1": 1.0}), InferenceConfig.static(5))
    assert out.neighbours.names() == ["a", "b"]


def test_oov_entry_raises():
    store = make_store({"a": {"f1": 1.0}})
    with pytest.raises(OutOfVocabularyError):
        enrich(store, "zzz", InferenceConfig.static(3))


def test_normalise_and_similarity_weighting():
    store = make_store({"a": {"f1": 1.0}, "b": {"f1": 3.0, "f2": 4.0}})
    sim = 3.0 / 5.0
    unit = enrich(store, "a", InferenceConfig.static(1, normalize_neighbours=True))
    assert store.texts(unit.result) == pytest.approx({"f1": 1.0 + 0.6, "f2": 0.8})
    weighted = enrich(store, "a", InferenceConfig.static(1, weight_by_similarity=True))
    assert store.texts(weighted.result) == pytest.approx({"f1": 1.0 + 3 * sim, "f2": 4 * sim})
    both = enrich(store, "a", InferenceConfig.static(1, normalize_neighbours=True, weight_by_similarity=True))
    assert store.texts(both.result) == pytest.approx({"f1": 1.0 + 0.6 * sim, "f2": 0.8 * sim})


def test_describe():
    assert InferenceConfig.static(30).describe() == "static(n=30)"
    cfg = InferenceConfig(RetrievalPolicy("density", delta=0.1, cap=7), normalize_neighbours=True)
    assert cfg.describe() == "density(delta=0.1,cap=7)+unit"
    assert cfg.with_n(3).policy.cap == 7


def test_density_policy_consumes_band():
    store = make_store({"q": {"x": 1.0}, "n0": {"x": 0.9, "y": math.sqrt(1 - 0.81)},
                        "n1": {"x": 0.6, "y": 0.8}})
    out = enrich(store, "q", InferenceConfig(RetrievalPolicy("density", delta=0.05)))
    assert out.neighbours.names() == ["n0"]


def test_lexicon_policy():
    store = make_store({"car": {"x": 1.0}, "truck": {"x": 1.0, "y": 1.0}, "van": {"z": 1.0}})
    cfg = InferenceConfig(RetrievalPolicy("lexicon", n=5, lexicon={"car": ("van", "truck")}))
    out = enrich(store, "car", cfg)
    assert out.neighbours.names() == ["truck", "van"]
    assert store.texts(out.result) == {"x": 2.0, "y": 1.0, "z": 1.0}


# --- against the toy corpus --------------------------------------------------

QUERIES = ("dog", "car", "house", "bread", "man", "white", "eat")


@pytest.fixture(params=["typed_k1", "typed_store"])
def toy(request):
    return request.getfixturevalue(request.param)


def test_equals_base_plus_brute_neighbours(toy):
    names = toy.names
    for word in QUERIES:
        base = toy[word]
        brute = rank([(s, m) for s, m in ((cosine(toy[m], base), m) for m in names if m != word) if s > 0])
        chosen = [name for name, _ in brute[:30]]
        total = base.to_dict()
        for name in chosen:
            for f, w in toy[name].items():
                total[f] = total.get(f, 0.0) + w
        out = enrich(toy, word, InferenceConfig.static(30))
        assert out.neighbours.names() == chosen
        got = out.result.to_dict()
        assert got.keys() == total.keys()
        assert all(math.isclose(got[f], total[f], rel_tol=1e-12) for f in got)


def test_support_growth(toy):
    for word in QUERIES:
        out = enrich(toy, word, InferenceConfig.static(10))
        expected = toy[word].support().union(*(toy[n].support() for n in out.neighbours.names()))
        assert out.result.support() == expected
        assert out.result.nnz >= toy[word].nnz


def test_prefix_nesting(toy):
    for word in QUERIES:
        five = enrich(toy, word, InferenceConfig.static(5))
        ten = enrich(toy, word, InferenceConfig.static(10))
        assert ten.neighbours.names()[:5] == five.neighbours.names()
        extra = SparseVector.sum_of(toy[n] for n in ten.neighbours.names()[5:])
        gap = (ten.result + five.result.scale(-1.0)).to_dict()
        want = extra.to_dict()
        assert set(want) >= set(gap)
        assert all(math.isclose(gap.get(f, 0.0), w, rel_tol=1e-9, abs_tol=1e-9) for f, w in want.items())


def test_deterministic(toy):
    a = enrich(toy, "dog", InferenceConfig.static(30)).result
    b = enrich(toy, "dog", InferenceConfig.static(30)).result
    assert a.ids.tobytes() == b.ids.tobytes() and a.weights.tobytes() == b.weights.tobytes()
