"""Regenerate the bundled toy data in src/aptkit/data/.

The corpus is produced by a small seeded grammar over eight semantic classes,
so word and phrase similarities have a known structure.  Output is
byte-identical across runs.

    python scripts/make_toy_data.py
"""
import gzip
import random
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "aptkit" / "data"
SEED = 20161101
N_SENTENCES = 15000

NOUNS = {
    "animal": "dog cat horse cow sheep wolf fox lion tiger bear".split(),
    "vehicle": "car truck bus bike train van boat plane taxi tractor".split(),
    "food": "bread apple cheese soup cake rice pasta salad pie cookie".split(),
    "building": "house cottage apartment cabin building school church castle hotel barn".split(),
    "person": "man woman child teacher leader official student doctor farmer soldier".split(),
    "tool": "hammer knife saw drill axe shovel wrench brush rope ladder".split(),
    "clothing": "shirt coat hat dress shoe jacket scarf glove sock skirt".split(),
    "plant": "tree flower rose oak grass bush fern tulip vine palm".split(),
}
ADJECTIVES = {
    "animal": "wild furry hungry fierce tame wounded sleepy loyal".split(),
    "vehicle": "fast red broken shiny rusty electric parked stolen".split(),
    "food": "fresh sweet tasty hot spicy sour delicious frozen".split(),
    "building": "small large white empty ancient tall wooden haunted".split(),
    "person": "young clever happy angry brave famous tired honest".split(),
    "tool": "sharp heavy blunt steel handy sturdy useful metal".split(),
    "clothing": "warm woolen striped cotton tight fancy dirty blue".split(),
    "plant": "leafy blooming wilting tropical thorny lush pink evergreen".split(),
}
SHARED_ADJECTIVES = ["big", "old", "good", "new"]
VERBS = {
    "animal": "feed chase hunt tame pet groom".split(),
    "vehicle": "drive park repair wash ride crash".split(),
    "food": "eat cook bake taste serve chop".split(),
    "building": "build paint visit clean renovate rent".split(),
    "person": "meet help call hire thank greet".split(),
    "tool": "use sharpen hold grab swing borrow".split(),
    "clothing": "wear fold iron sew knit mend".split(),
    "plant": "water plant prune grow trim pick".split(),
}
SHARED_VERBS = ["buy", "see", "like", "find"]
SUBJECT_CLASSES = ["person"] * 4 + ["animal"]
LOCATION_CLASSES = ["building", "plant"]
COMPOUNDS = [  # (modifier, head, class of head)
    ("party", "leader", "person"), ("school", "teacher", "person"), ("bus", "driver", "person"),
    ("train", "station", "building"), ("apple", "cake", "food"), ("farm", "house", "building"),
    ("police", "car", "vehicle"), ("sheep", "dog", "animal"), ("garden", "tool", "tool"),
    ("rose", "bush", "plant"), ("winter", "coat", "clothing"),
]
PREPOSITIONS = ["in", "near", "behind"]


def zipf_preferences(rng, options):
    """A per-word distribution over ``options``: Zipf weights on a random order."""
    order = list(options)
    rng.shuffle(order)
    return order, [1.0 / (rank ** 1.5) for rank in range(1, len(order) + 1)]


def build_lexicon(rng):
    prefs = {}
    for cls, nouns in NOUNS.items():
        for noun in nouns:
            prefs[noun] = (cls, zipf_preferences(rng, ADJECTIVES[cls]), zipf_preferences(rng, VERBS[cls]))
    return prefs


class Sentence:
    def __init__(self):
        self.rows = []

    def add(self, lemma, pos, head, rel):
        self.rows.append([lemma, pos, head, rel])
        return len(self.rows)

    def set_head(self, idx, head, rel):
        self.rows[idx - 1][2] = head
        self.rows[idx - 1][3] = rel

    def conll(self):
        lines = []
        for i, (lemma, pos, head, rel) in enumerate(self.rows, start=1):
            form = lemma
            lines.append("\t".join([str(i), form, lemma, pos, pos, "_", str(head), rel, "_", "_"]))
        return "\n".join(lines) + "\n\n"


def noun_phrase(rng, prefs, sent, cls):
    """det (adj) (compound) noun; returns the noun's index and lemma."""
    det = sent.add("the", "DET", 0, "det")
    options = [c for c in COMPOUNDS if c[2] == cls]
    comp = None
    if options and rng.random() < 0.15:
        mod, lemma, _ = rng.choice(options)
        noun_prefs = prefs.get(lemma) or (cls, zipf_preferences(rng, ADJECTIVES[cls]), None)
    else:
        lemma = rng.choice(NOUNS[cls])
        noun_prefs = prefs[lemma]
        mod = None
    adj = None
    if rng.random() < 0.7:
        if rng.random() < 0.85:
            adjs, weights = noun_prefs[1]
            word = rng.choices(adjs, weights)[0]
        else:
            word = rng.choice(SHARED_ADJECTIVES)
        adj = sent.add(word, "ADJ", 0, "amod")
    if mod:
        comp = sent.add(mod, "NOUN", 0, "compound")
    noun = sent.add(lemma, "NOUN", 0, "_")
    sent.set_head(det, noun, "det")
    if adj:
        sent.set_head(adj, noun, "amod")
    if comp:
        sent.set_head(comp, noun, "compound")
    return noun, lemma


def make_sentence(rng, prefs):
    sent = Sentence()
    subj, _ = noun_phrase(rng, prefs, sent, rng.choice(SUBJECT_CLASSES))
    obj_cls = rng.choice(list(NOUNS))
    verb = sent.add("_", "VERB", 0, "root")
    sent.set_head(subj, verb, "nsubj")
    obj, obj_lemma = noun_phrase(rng, prefs, sent, obj_cls)
    sent.set_head(obj, verb, "dobj")
    verb_prefs = prefs.get(obj_lemma, (None, None, None))[2]
    if verb_prefs and rng.random() < 0.8:
        sent.rows[verb - 1][0] = rng.choices(*verb_prefs)[0]
    elif rng.random() < 0.5:
        sent.rows[verb - 1][0] = rng.choice(VERBS[obj_cls])
    else:
        sent.rows[verb - 1][0] = rng.choice(SHARED_VERBS)
    if rng.random() < 0.3:
        case = sent.add(rng.choice(PREPOSITIONS), "ADP", 0, "case")
        loc, _ = noun_phrase(rng, prefs, sent, rng.choice(LOCATION_CLASSES))
        sent.set_head(case, loc, "case")
        sent.set_head(loc, verb, "nmod")
    sent.add(".", "PUNCT", verb, "punct")
    return sent


def write_corpus():
    rng = random.Random(SEED)
    prefs = build_lexicon(rng)
    text = "".join("# toy sentence %d\n" % i + make_sentence(rng, prefs).conll() for i in range(N_SENTENCES))
    with open(OUT / "toy_corpus.conll.gz", "wb") as raw, \
            gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as fh:
        fh.write(text.encode("utf-8"))


WORDSIM = [
    ("dog", "cat", 8.5), ("dog", "wolf", 8.8), ("horse", "cow", 7.6), ("lion", "fox", 7.0),
    ("car", "truck", 8.9), ("bus", "train", 7.8), ("bike", "van", 6.5),
    ("bread", "cake", 8.0), ("apple", "cheese", 6.9), ("soup", "rice", 7.2),
    ("house", "cottage", 9.1), ("apartment", "cabin", 7.9), ("school", "building", 6.8),
    ("man", "woman", 8.3), ("teacher", "student", 7.4),
    ("dog", "car", 1.2), ("cake", "truck", 0.6), ("house", "lion", 1.0),
    ("bread", "teacher", 0.9), ("bus", "cheese", 0.5),
]

# (type, w1, w2, w3, w4, ratings from three raters); phrases in surface order
PHRASES = [
    ("adjectivenouns", "small", "house", "large", "cottage", (6, 5, 6)),
    ("adjectivenouns", "fresh", "bread", "sweet", "cake", (6, 6, 5)),
    ("adjectivenouns", "fast", "car", "new", "truck", (5, 6, 5)),
    ("adjectivenouns", "wild", "dog", "fierce", "wolf", (7, 6, 6)),
    ("adjectivenouns", "hot", "soup", "empty", "school", (1, 2, 1)),
    ("adjectivenouns", "young", "man", "red", "bike", (1, 1, 2)),
    ("compoundnouns", "party", "leader", "school", "teacher", (4, 5, 4)),
    ("compoundnouns", "police", "car", "bus", "driver", (2, 3, 2)),
    ("compoundnouns", "apple", "cake", "farm", "house", (1, 2, 1)),
    ("compoundnouns", "sheep", "dog", "party", "leader", (1, 1, 2)),
    ("compoundnouns", "train", "station", "farm", "house", (4, 3, 4)),
    ("verbobjects", "eat", "bread", "bake", "cake", (6, 6, 7)),
    ("verbobjects", "drive", "car", "park", "truck", (6, 5, 5)),
    ("verbobjects", "chase", "dog", "hunt", "wolf", (6, 6, 5)),
    ("verbobjects", "paint", "house", "cook", "soup", (1, 1, 2)),
    ("verbobjects", "meet", "teacher", "repair", "bike", (1, 2, 1)),
]

LEXICON = {
    "dog": ["hound", "wolf"], "car": ["automobile", "truck", "van"], "house": ["home", "cottage", "building"],
    "bread": ["loaf", "cake"], "man": ["person", "woman"], "big": ["large"], "small": ["little"],
    "fast": ["quick", "rapid"], "eat": ["consume", "taste"],
}


def write_gold():
    with open(OUT / "toy_wordsim.tsv", "w", encoding="utf-8") as fh:
        for w1, w2, score in WORDSIM:
            fh.write(f"{w1}\t{w2}\t{score}\n")
    with open(OUT / "toy_phrases.txt", "w", encoding="utf-8") as fh:
        fh.write("participant type group input1 input2 input3 input4 input\n")
        for rater in range(3):
            for ptype, a, b, c, d, scores in PHRASES:
                fh.write(f"participant{rater + 1} {ptype} 1 {a} {b} {c} {d} {scores[rater]}\n")
    with open(OUT / "toy_lexicon.tsv", "w", encoding="utf-8") as fh:
        for lemma in sorted(LEXICON):
            fh.write(f"{lemma}\t{','.join(LEXICON[lemma])}\n")


WHITE_HOUSE = """\
# the white house
1\tthe\tthe\tDET\tDT\t_\t3\tdet\t_\t_
2\twhite\twhite\tADJ\tJJ\t_\t3\tamod\t_\t_
3\thouse\thouse\tNOUN\tNN\t_\t0\troot\t_\t_

# the white cat
1\tthe\tthe\tDET\tDT\t_\t3\tdet\t_\t_
2\twhite\twhite\tADJ\tJJ\t_\t3\tamod\t_\t_
3\tcat\tcat\tNOUN\tNN\t_\t0\troot\t_\t_

# the black cat
1\tthe\tthe\tDET\tDT\t_\t3\tdet\t_\t_
2\tblack\tblack\tADJ\tJJ\t_\t3\tamod\t_\t_
3\tcat\tcat\tNOUN\tNN\t_\t0\troot\t_\t_

# a big house .
1\ta\ta\tDET\tDT\t_\t3\tdet\t_\t_
2\tbig\tbig\tADJ\tJJ\t_\t3\tamod\t_\t_
3\thouse\thouse\tNOUN\tNN\t_\t0\troot\t_\t_
4\t.\t.\tPUNCT\t.\t_\t3\tpunct\t_\t_
"""


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    write_corpus()
    write_gold()
    (OUT / "white_house.conll").write_text(WHITE_HOUSE, encoding="utf-8")


if __name__ == "__main__":
    main()
