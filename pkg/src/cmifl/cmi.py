"""Code-Mixing Index of tagged sentences, batches and corpora.

For a sentence with ``N`` tokens of which ``U`` are language-independent,
the index is ``1 - dominant / (N - U)`` where ``dominant`` is the token
count of the more frequent language, and ``0`` when ``N == U``.  Native and
romanized-native tokens form one language, English the other.  Values are
fractions in ``[0, 1]`` (never the x100 form).
"""

from dataclasses import dataclass, field
from fractions import Fraction

from cmifl.errors import EmptyBatch
from cmifl.textlang import LangTag

N_BINS = 10

_NATIVE_TAGS = (LangTag.NATIVE, LangTag.ROMANIZED_NATIVE)


@dataclass(frozen=True)
class CmiScore:
    value: float
    n_tokens: int
    n_universal: int
    dominant_count: int

    @property
    def fraction(self):
        """The index as an exact rational."""
        lang_tokens = self.n_tokens - self.n_universal
        if lang_tokens == 0:
            return Fraction(0)
        return Fraction(lang_tokens - self.dominant_count, lang_tokens)

    @property
    def bin_index(self):
        """Histogram bin in ``range(N_BINS)``, computed in integers."""
        lang_tokens = self.n_tokens - self.n_universal
        if lang_tokens == 0:
            return 0
        b = (N_BINS * (lang_tokens - self.dominant_count)) // lang_tokens
        return min(b, N_BINS - 1)

    def to_dict(self):
        return {
            "value": self.value,
            "n_tokens": self.n_tokens,
            "n_universal": self.n_universal,
            "dominant_count": self.dominant_count,
        }


@dataclass(frozen=True)
class CorpusCmiProfile:
    per_sentence: tuple = ()
    mean: float = 0.0
    histogram: tuple = field(default=(0,) * N_BINS)

    def to_dict(self):
        return {
            "mean": self.mean,
            "histogram": list(self.histogram),
            "per_sentence": [s.to_dict() for s in self.per_sentence],
        }


def score_from_tags(tags):
    n_tokens = n_universal = native = english = 0
    for tag in tags:
        n_tokens += 1
        if tag is LangTag.UNIVERSAL:
            n_universal += 1
        elif tag is LangTag.ENGLISH:
            english += 1
        elif tag in _NATIVE_TAGS:
            native += 1
        else:
            raise TypeError(f"not a LangTag: {tag!r}")
    lang_tokens = n_tokens - n_universal
    dominant = max(native, english)
    if lang_tokens == 0:
        return CmiScore(0.0, n_tokens, n_universal, 0)
    # (lang - dom) / lang in one correctly rounded division
    value = (lang_tokens - dominant) / lang_tokens
    return CmiScore(value, n_tokens, n_universal, dominant)


def sentence_cmi(sentence):
    return score_from_tags(sentence.tags)


def batch_cmi(scores):
    """Arithmetic mean of the sentence values, summed in index order."""
    scores = list(scores)
    if not scores:
        raise EmptyBatch("batch_cmi needs at least one score")
    total = 0.0
    for s in scores:
        total += s.value if isinstance(s, CmiScore) else float(s)
    return total / len(scores)


def corpus_profile(sentences):
    per_sentence = tuple(sentence_cmi(s) for s in sentences)
    if not per_sentence:
        return CorpusCmiProfile()
    hist = [0] * N_BINS
    for score in per_sentence:
        hist[score.bin_index] += 1
    return CorpusCmiProfile(
        per_sentence=per_sentence,
        mean=batch_cmi(per_sentence),
        histogram=tuple(hist),
    )
