"""Hashed character n-gram features and the desk-scale classifier.

Pipeline: sparse L2-normalised n-gram counts ``x`` -> ``e = P^T x`` ->
head -> softmax.  Two heads are available:

``dot``
    ``logits = W e + b``, the conventional baseline.
``cosine``
    ``e`` is squashed to norm ``|e|^2 / (1 + |e|^2)`` keeping its direction,
    the rows of ``W`` are unit-normalised, and
    ``logits_j = scale * <squash(e), W_j / |W_j|>``.  No bias.

Everything is float64.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from cmifl import kernels
from cmifl.errors import IndexOutOfRange, ShapeMismatch
from cmifl.rng import SplitMix64

BOT = "␂"  # start-of-word marker
EOT = "␃"  # end-of-word marker

HEADS = ("dot", "cosine")


@dataclass(frozen=True)
class FeatureConfig:
    n_min: int = 1
    n_max: int = 4
    feature_dim: int = 65536
    lowercase: bool = True

    def __post_init__(self):
        if not 1 <= self.n_min <= self.n_max <= 8:
            raise ValueError(f"need 1 <= n_min <= n_max <= 8, got {self.n_min}, {self.n_max}")
        dim = self.feature_dim
        if dim < 256 or dim & (dim - 1):
            raise ValueError(f"feature_dim must be a power of two >= 256, got {dim}")


@dataclass(frozen=True)
class SparseVec:
    """Sorted unique feature indices with their (nonzero) values."""

    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def empty(cls):
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))

    @property
    def nnz(self):
        return int(self.indices.shape[0])

    @property
    def pairs(self):
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def norm(self):
        return float(np.sqrt(np.dot(self.values, self.values)))

    def __eq__(self, other):
        if not isinstance(other, SparseVec):
            return NotImplemented
        return (
            np.array_equal(self.indices, other.indices)
            and self.values.tobytes() == other.values.tobytes()
        )

    __hash__ = None


@dataclass(frozen=True)
class CsrBatch:
    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray

    @property
    def n_rows(self):
        return self.indptr.shape[0] - 1

    @classmethod
    def stack(cls, vecs):
        vecs = list(vecs)
        lengths = np.array([v.nnz for v in vecs], dtype=np.int64)
        indptr = np.zeros(len(vecs) + 1, dtype=np.int64)
        np.cumsum(lengths, out=indptr[1:])
        if vecs:
            indices = np.concatenate([v.indices for v in vecs]).astype(np.int64, copy=False)
            values = np.concatenate([v.values for v in vecs]).astype(np.float64, copy=False)
        else:
            indices = np.empty(0, dtype=np.int64)
            values = np.empty(0, dtype=np.float64)
        return cls(indptr, indices, values)


def _utf8_widths(codepoints):
    cp = codepoints.astype(np.int64)
    return 1 + (cp >= 0x80) + (cp >= 0x800) + (cp >= 0x10000)


def ngram_hash_values(text, cfg):
    """Raw 64-bit FNV-1a hashes of every n-gram in ``text``."""
    if cfg.lowercase:
        text = text.lower()
    words = text.split()
    if not words:
        return np.empty(0, dtype=np.uint64)
    marked = [BOT + w + EOT for w in words]
    joined = "".join(marked)
    cps = np.frombuffer(joined.encode("utf-32-le"), dtype=np.uint32)
    char_off = np.zeros(cps.shape[0] + 1, dtype=np.int64)
    np.cumsum(_utf8_widths(cps), out=char_off[1:])
    buf = np.frombuffer(joined.encode("utf-8"), dtype=np.uint8)
    word_len = np.array([len(w) for w in marked], dtype=np.int64)
    ends = np.cumsum(word_len)
    tok_end = np.repeat(ends, word_len)
    return kernels.ngram_hashes(buf, char_off, tok_end, cfg.n_min, cfg.n_max)


def featurize(text, cfg=FeatureConfig()):
    hashes = ngram_hash_values(text, cfg)
    if hashes.size == 0:
        return SparseVec.empty()
    idx = (hashes & np.uint64(cfg.feature_dim - 1)).astype(np.int64)
    uniq, counts = np.unique(idx, return_counts=True)
    counts = counts.astype(np.float64)
    values = counts / np.sqrt(np.dot(counts, counts))
    return SparseVec(uniq, values)


def squash(e):
    """Scale ``e`` to norm ``|e|^2 / (1 + |e|^2)``, keeping its direction."""
    e = np.asarray(e, dtype=np.float64)
    r = np.sqrt(np.sum(e * e, axis=-1, keepdims=True))
    return e * (r / (1.0 + r * r))


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - np.max(z, axis=-1, keepdims=True)
    ez = np.exp(z)
    return ez / np.sum(ez, axis=-1, keepdims=True)


@dataclass
class ModelParams:
    P: np.ndarray
    W: np.ndarray
    b: np.ndarray | None
    head: str
    labels: tuple
    scale: float = 1.0
    features: FeatureConfig = field(default_factory=FeatureConfig)

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"head must be one of {HEADS}, got {self.head!r}")
        self.labels = tuple(self.labels)
        if len(self.labels) < 2:
            raise ValueError("need at least two classes")
        if self.P.shape[0] != self.features.feature_dim:
            raise ShapeMismatch("P rows must equal feature_dim")
        if self.W.shape != (len(self.labels), self.P.shape[1]):
            raise ShapeMismatch(f"W has shape {self.W.shape}, expected (C, emb_dim)")
        if self.head == "dot":
            if self.b is None:
                self.b = np.zeros(len(self.labels))
            if self.b.shape != (len(self.labels),):
                raise ShapeMismatch("bias must have one entry per class")
        else:
            if self.b is not None:
                raise ValueError("the cosine head has no bias")
            if not self.scale > 0:
                raise ValueError("scale must be positive")

    @property
    def emb_dim(self):
        return self.P.shape[1]

    @property
    def n_classes(self):
        return len(self.labels)

    @classmethod
    def initialize(cls, labels, head="cosine", emb_dim=32, features=FeatureConfig(),
                   scale=1.0, rng=None):
        """Uniform ``±1/sqrt(emb_dim)`` weights drawn from ``rng`` (P first, then W)."""
        rng = rng if rng is not None else SplitMix64(42)
        bound = 1.0 / np.sqrt(emb_dim)
        P = rng.uniform(-bound, bound, (features.feature_dim, emb_dim))
        W = rng.uniform(-bound, bound, (len(labels), emb_dim))
        b = np.zeros(len(labels)) if head == "dot" else None
        return cls(P=P, W=W, b=b, head=head, labels=tuple(labels), scale=scale,
                   features=features)

    def copy(self):
        return replace(
            self,
            P=self.P.copy(),
            W=self.W.copy(),
            b=None if self.b is None else self.b.copy(),
        )


@dataclass
class BatchTrace:
    x: CsrBatch
    e: np.ndarray  # embeddings after dropout, B x d
    e_norm: np.ndarray
    logits: np.ndarray
    probs: np.ndarray
    dropout_mask: np.ndarray | None = None


@dataclass
class ForwardTrace:
    x: SparseVec
    e: np.ndarray
    e_norm: np.ndarray
    logits: np.ndarray
    probs: np.ndarray


@dataclass
class ParamGrads:
    P_rows: np.ndarray
    P: np.ndarray  # one row per entry of P_rows
    W: np.ndarray
    b: np.ndarray | None = None

    def dense_P(self, shape):
        out = np.zeros(shape)
        out[self.P_rows] = self.P
        return out


def _check_indices(params, x):
    if x.indices.size and (x.indices.min() < 0 or x.indices.max() >= params.P.shape[0]):
        raise IndexOutOfRange(
            f"feature index outside [0, {params.P.shape[0]})"
        )


def _unit_rows(W):
    norms = np.sqrt(np.sum(W * W, axis=1))
    return W / norms[:, None], norms


def head_logits(params, E):
    """Return (logits, squashed embeddings) for a block of embeddings."""
    En = squash(E)
    if params.head == "dot":
        return E @ params.W.T + params.b, En
    Wn, _ = _unit_rows(params.W)
    return params.scale * (En @ Wn.T), En


def forward_batch(params, X, dropout_mask=None):
    _check_indices(params, X)
    E = kernels.sparse_embed(X.indptr, X.indices, X.values, params.P)
    if dropout_mask is not None:
        E = E * dropout_mask
    logits, En = head_logits(params, E)
    return BatchTrace(x=X, e=E, e_norm=En, logits=logits, probs=softmax(logits),
                      dropout_mask=dropout_mask)


def _squash_backward(E, dEn):
    r2 = np.sum(E * E, axis=1)
    r = np.sqrt(r2)
    f = r / (1.0 + r2)
    safe_r = np.where(r > 0, r, 1.0)
    fprime_over_r = np.where(r > 0, (1.0 - r2) / ((1.0 + r2) ** 2 * safe_r), 0.0)
    radial = np.sum(E * dEn, axis=1)
    return f[:, None] * dEn + E * (fprime_over_r * radial)[:, None]


def backward_batch(params, trace, dlogits):
    dZ = np.asarray(dlogits, dtype=np.float64)
    E = trace.e
    if dZ.shape != trace.logits.shape or dZ.shape[1] != params.n_classes:
        raise ShapeMismatch(f"dlogits shape {dZ.shape} does not match logits {trace.logits.shape}")
    if E.shape[1] != params.emb_dim:
        raise ShapeMismatch("trace embedding size differs from params")

    if params.head == "dot":
        gW = dZ.T @ E
        gb = dZ.sum(axis=0)
        dE = dZ @ params.W
    else:
        Wn, norms = _unit_rows(params.W)
        gWn = params.scale * (dZ.T @ trace.e_norm)
        gW = (gWn - Wn * np.sum(gWn * Wn, axis=1)[:, None]) / norms[:, None]
        gb = None
        dEn = params.scale * (dZ @ Wn)
        dE = _squash_backward(E, dEn)

    if trace.dropout_mask is not None:
        dE = dE * trace.dropout_mask

    X = trace.x
    rows, slot = np.unique(X.indices, return_inverse=True)
    gP = kernels.sparse_row_grad(X.indptr, slot.astype(np.int64), X.values, dE, rows.shape[0])
    return ParamGrads(P_rows=rows, P=gP, W=gW, b=gb)


def forward(params, x):
    X = CsrBatch.stack([x])
    t = forward_batch(params, X)
    return ForwardTrace(x=x, e=t.e[0], e_norm=t.e_norm[0], logits=t.logits[0], probs=t.probs[0])


def backward(params, trace, dL_dlogits):
    d = np.asarray(dL_dlogits, dtype=np.float64)
    if d.shape != (params.n_classes,) or trace.e.shape != (params.emb_dim,):
        raise ShapeMismatch(
            f"expected {params.n_classes} logit gradients and a {params.emb_dim}-dim trace"
        )
    bt = BatchTrace(
        x=CsrBatch.stack([trace.x]),
        e=trace.e[None, :],
        e_norm=trace.e_norm[None, :],
        logits=trace.logits[None, :],
        probs=trace.probs[None, :],
    )
    return backward_batch(params, bt, d[None, :])


def predict(params, x):
    """Return ``(class index, probs)``; ties go to the lowest index."""
    trace = forward(params, x)
    return int(np.argmax(trace.probs)), trace.probs


def predict_batch(params, vecs, chunk=1024):
    vecs = list(vecs)
    n = len(vecs)
    probs = np.empty((n, params.n_classes))
    for lo in range(0, n, chunk):
        X = CsrBatch.stack(vecs[lo:lo + chunk])
        probs[lo:lo + chunk] = forward_batch(params, X).probs
    return np.argmax(probs, axis=1) if n else np.empty(0, dtype=np.int64), probs
