"""Seeded synthetic code-mixed corpora for tests, benchmarks and demos.

``keyword_corpus`` marks each class with three exclusive keyword stems
hidden in random Tamil/English filler (Latin and Tamil script).
``imbalanced_corpus`` builds a binary 95/5 set with a noisy minority marker.
"""

import numpy as np

ENGLISH_FILLER = (
    "movie trailer super mass hero waiting fans level song video release "
    "scene story director comedy best worst like time music screen"
).split()

ROMANIZED_FILLER = (
    "padam semma thala vera nalla irukku enna paaru ivan avan romba "
    "kandippa pola mokka sema thalaivar anna namma oru intha"
).split()

NATIVE_FILLER = "படம் நல்ல இருக்கு வேற லெவல் சூப்பர் அண்ணா தலைவர் பாரு".split()

KEYWORD_STEMS = (
    ("kuzhal", "vembu", "thirut"),
    ("maaligai", "kuruvi", "poonai"),
    ("nadhiya", "kalavu", "sirippu"),
    ("velicham", "thundu", "marundhu"),
    ("aruvi", "kaatril", "pookal"),
    ("ilakku", "vaanam", "kodai"),
)

SUFFIXES = ("", "u", "a", "ey", "kal", "ingo")

MINORITY_STEMS = ("kevalam", "naari", "pichai")


def _filler(rng, n_words):
    pools = (ENGLISH_FILLER, ROMANIZED_FILLER, NATIVE_FILLER)
    # per-sentence language mix, so CMI varies across the corpus
    weights = rng.dirichlet((1.0, 1.0, 0.5))
    words = []
    for _ in range(n_words):
        pool = pools[rng.choice(3, p=weights)]
        words.append(pool[rng.integers(len(pool))])
    return words


def _insert(rng, words, token):
    pos = int(rng.integers(len(words) + 1))
    words.insert(pos, token)


def class_names(n_classes):
    return tuple(f"class_{i}" for i in range(n_classes))


def keyword_corpus(n_classes=4, per_class=200, seed=42, min_words=5, max_words=12):
    """Return a shuffled list of ``(text, label)`` pairs."""
    if not 2 <= n_classes <= len(KEYWORD_STEMS):
        raise ValueError(f"n_classes must be in [2, {len(KEYWORD_STEMS)}]")
    rng = np.random.default_rng(seed)
    names = class_names(n_classes)
    data = []
    for c in range(n_classes):
        stems = KEYWORD_STEMS[c]
        for _ in range(per_class):
            words = _filler(rng, int(rng.integers(min_words, max_words + 1)))
            for _ in range(int(rng.integers(1, 3))):
                stem = stems[rng.integers(len(stems))]
                _insert(rng, words, stem + SUFFIXES[rng.integers(len(SUFFIXES))])
            data.append((" ".join(words), names[c]))
    order = rng.permutation(len(data))
    return [data[i] for i in order]


def imbalanced_corpus(n=1000, minority_frac=0.05, seed=0, marker_rate=0.7, leak_rate=0.03):
    """Binary corpus: ``majority`` vs ``minority``.

    Minority texts carry a marker stem with probability ``marker_rate``;
    majority texts carry one with probability ``leak_rate``.
    """
    rng = np.random.default_rng(seed)
    n_min = int(round(n * minority_frac))
    labels = ["minority"] * n_min + ["majority"] * (n - n_min)
    data = []
    for label in labels:
        words = _filler(rng, int(rng.integers(5, 12)))
        rate = marker_rate if label == "minority" else leak_rate
        if rng.random() < rate:
            stem = MINORITY_STEMS[rng.integers(len(MINORITY_STEMS))]
            _insert(rng, words, stem + SUFFIXES[rng.integers(len(SUFFIXES))])
        data.append((" ".join(words), label))
    order = rng.permutation(len(data))
    return [data[i] for i in order]


def split_holdout(data, frac=0.2):
    """Deterministic tail split: the last ``frac`` of the list is held out."""
    cut = len(data) - int(round(len(data) * frac))
    return data[:cut], data[cut:]
