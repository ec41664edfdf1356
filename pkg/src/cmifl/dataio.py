"""Dataset, prediction and model files.

Datasets are ``text<TAB>label`` lines (DravidianLangTech layout).
Predictions are ``label<TAB>prob`` lines.  Models use a little-endian binary
layout::

    magic "CMFL" | version u32 | head u8 (0 dot, 1 cosine) | feature_dim u32
    | emb_dim u32 | C u32 | n_min u8 | n_max u8 | lowercase u8 | scale f64
    | P f64[feature_dim * emb_dim] | W f64[C * emb_dim] | bias f64[C] (dot only)
    | n_labels u32 | (len u32, utf-8 bytes) per label
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from cmifl.errors import (
    BadMagic,
    MalformedLine,
    ModelFormatError,
    Truncated,
    UnknownLabel,
    UnsupportedVersion,
)
from cmifl.model import FeatureConfig, ModelParams
from cmifl.textlang import TargetLanguage

MAGIC = b"CMFL"
VERSION = 1
_HEADER = struct.Struct("<4sIBIIIBBBd")

BOM = "\ufeff"


@dataclass(frozen=True)
class LabeledExample:
    text: str
    label: str


def default_vocabulary(lang):
    """Class names in index order for a language."""
    lang = TargetLanguage.parse(lang)
    labels = [
        "Not_offensive",
        f"not-{lang.display_name}",
        "Offensive_Targeted_Insult_Individual",
        "Offensive_Targeted_Insult_Group",
        "Offensive_Untargeted",
    ]
    if lang is not TargetLanguage.MALAYALAM:
        labels.append("Offensive_Targeted_Insult_Other")
    return tuple(labels)


# Per-class training-set counts of the DravidianLangTech offensive-language
# shared task, in default_vocabulary order.
SHARED_TASK_COUNTS = {
    TargetLanguage.KANNADA: (3382, 1407, 486, 327, 212, 122),
    TargetLanguage.MALAYALAM: (10382, 882, 171, 106, 154),
    TargetLanguage.TAMIL: (25215, 1447, 2338, 2550, 2894, 454),
}


def _clean_line(line, first):
    if first and line.startswith(BOM):
        line = line[1:]
    return line.rstrip("\n").rstrip("\r")


def _read_lines(path):
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, 1):
            yield lineno, _clean_line(line, lineno == 1)


def load_tsv(path, has_header=False, vocab=None, strict=False):
    """Read ``text<TAB>label`` lines.

    The last TAB separates text from label, so text may itself contain
    TABs unless ``strict`` is set.  Blank lines are skipped.  With ``vocab``
    given, any other label raises :class:`UnknownLabel`.
    """
    allowed = None if vocab is None else set(vocab)
    out = []
    for lineno, line in _read_lines(path):
        if has_header and lineno == 1:
            continue
        if not line.strip():
            continue
        if "\t" not in line:
            raise MalformedLine(lineno, path, "missing TAB between text and label")
        if strict and line.count("\t") > 1:
            raise MalformedLine(lineno, path, "embedded TAB in text")
        text, label = line.rsplit("\t", 1)
        label = label.strip()
        if not text.strip():
            raise MalformedLine(lineno, path, "empty text")
        if allowed is not None and label not in allowed:
            raise UnknownLabel(label, line=lineno, source=path)
        out.append(LabeledExample(text, label))
    return out


def write_tsv(path, examples):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for ex in examples:
            text, label = (ex.text, ex.label) if isinstance(ex, LabeledExample) else ex
            if "\t" in text or "\n" in text:
                raise ValueError("text may not contain TAB or newline")
            fh.write(f"{text}\t{label}\n")


def read_texts(path):
    """One text per non-blank line; a trailing ``<TAB>field`` is dropped."""
    texts = []
    for _, line in _read_lines(path):
        if not line.strip():
            continue
        texts.append(line.rsplit("\t", 1)[0] if "\t" in line else line)
    return texts


def write_predictions(path, preds):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for label, prob in preds:
            fh.write(f"{label}\t{prob:.6f}\n")


def read_predictions(path):
    out = []
    for lineno, line in _read_lines(path):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise MalformedLine(lineno, path, "expected label<TAB>prob")
        try:
            prob = float(parts[1])
        except ValueError:
            raise MalformedLine(lineno, path, f"bad probability {parts[1]!r}") from None
        out.append((parts[0], prob))
    return out


# -- model files ---------------------------------------------------------------

def model_to_bytes(params):
    f = params.features
    head = 0 if params.head == "dot" else 1
    chunks = [
        _HEADER.pack(MAGIC, VERSION, head, f.feature_dim, params.emb_dim,
                     params.n_classes, f.n_min, f.n_max, int(f.lowercase),
                     float(params.scale)),
        np.ascontiguousarray(params.P, dtype="<f8").tobytes(),
        np.ascontiguousarray(params.W, dtype="<f8").tobytes(),
    ]
    if head == 0:
        chunks.append(np.ascontiguousarray(params.b, dtype="<f8").tobytes())
    chunks.append(struct.pack("<I", params.n_classes))
    for name in params.labels:
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<I", len(raw)))
        chunks.append(raw)
    return b"".join(chunks)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise Truncated(f"model file ends inside {what} (offset {self.pos})")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def floats(self, count, what):
        raw = self.take(8 * count, what)
        return np.frombuffer(raw, dtype="<f8").astype(np.float64)


def model_from_bytes(data):
    if len(data) >= 4 and data[:4] != MAGIC:
        raise BadMagic(f"not a model file (magic {data[:4]!r})")
    r = _Reader(data)
    magic, version, head, dim, emb, n_classes, n_min, n_max, lower, scale = _HEADER.unpack(
        r.take(_HEADER.size, "header")
    )
    if magic != MAGIC:
        raise BadMagic(f"not a model file (magic {magic!r})")
    if version != VERSION:
        raise UnsupportedVersion(f"model format version {version} (expected {VERSION})")
    if head not in (0, 1):
        raise ModelFormatError(f"unknown head type {head}")
    P = r.floats(dim * emb, "P").reshape(dim, emb)
    W = r.floats(n_classes * emb, "W").reshape(n_classes, emb)
    b = r.floats(n_classes, "bias") if head == 0 else None
    (n_labels,) = struct.unpack("<I", r.take(4, "label count"))
    if n_labels != n_classes:
        raise ModelFormatError(f"{n_labels} labels for {n_classes} classes")
    labels = []
    for _ in range(n_labels):
        (length,) = struct.unpack("<I", r.take(4, "label length"))
        labels.append(r.take(length, "label").decode("utf-8"))
    if r.pos != len(data):
        raise ModelFormatError(f"{len(data) - r.pos} trailing bytes after model")
    try:
        features = FeatureConfig(n_min=n_min, n_max=n_max, feature_dim=dim, lowercase=bool(lower))
        return ModelParams(P=P, W=W, b=b, head="dot" if head == 0 else "cosine",
                           labels=tuple(labels), scale=scale, features=features)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from None


def save_model(path, params):
    Path(path).write_bytes(model_to_bytes(params))


def load_model(path):
    return model_from_bytes(Path(path).read_bytes())
