"""Adam training loop and two-phase pseudo-labelling.

The projection matrix is large and each batch touches only a few of its
rows, so it is updated lazily: a row's Adam moments are advanced through the
steps it missed (with a zero gradient) the next time it is touched, and
:meth:`AdamState.flush` brings every row up to date.  After a flush the
parameters equal those of dense Adam.
"""

import dataclasses
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from cmifl import kernels
from cmifl.cmi import sentence_cmi
from cmifl.dataio import LabeledExample, default_vocabulary
from cmifl.errors import DataError, EmptyDataset, ShapeMismatch, UnknownLabel
from cmifl.loss import ClassWeights, LossConfig, LossKind, batch_loss, class_weights_from_counts
from cmifl.model import (
    CsrBatch,
    FeatureConfig,
    ModelParams,
    backward_batch,
    featurize,
    forward_batch,
    predict_batch,
)
from cmifl.rng import SplitMix64
from cmifl.textlang import Dictionary, TargetLanguage, tag_sentence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    seed: int = 42
    loss: LossConfig = field(default_factory=LossConfig)
    head: str = "cosine"
    emb_dim: int = 32
    scale: float = 1.0
    dropout: float = 0.0
    features: FeatureConfig = field(default_factory=FeatureConfig)
    pseudo_threshold: float = 0.0
    labels: tuple | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.head not in ("dot", "cosine"):
            raise ValueError(f"head must be dot or cosine, got {self.head!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if not 0.0 <= self.pseudo_threshold <= 1.0:
            raise ValueError("pseudo_threshold must lie in [0, 1]")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))


# -- config file -------------------------------------------------------------

def _parse_bool(text):
    key = text.strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_labels(text):
    return tuple(s.strip() for s in text.split(",") if s.strip())


_TOP_KEYS = {
    "epochs": int,
    "batch_size": int,
    "learning_rate": float,
    "lr": float,
    "beta1": float,
    "beta2": float,
    "epsilon": float,
    "seed": int,
    "head": str,
    "emb_dim": int,
    "scale": float,
    "dropout": float,
    "pseudo_threshold": float,
    "labels": _parse_labels,
}
_LOSS_KEYS = {
    "kind": str,
    "alpha": float,
    "gamma": float,
    "use_class_weights": _parse_bool,
    "cmi_mode": str,
}
_FEATURE_KEYS = {
    "n_min": int,
    "n_max": int,
    "feature_dim": int,
    "dim": int,
    "lowercase": _parse_bool,
}
CONFIG_KEYS = (
    sorted(_TOP_KEYS)
    + [f"loss.{k}" for k in sorted(_LOSS_KEYS)]
    + [f"features.{k}" for k in sorted(_FEATURE_KEYS)]
)


class ConfigError(DataError):
    pass


def parse_config_lines(lines, source="<config>"):
    """Parse ``key = value`` lines into a dict of raw strings."""
    out = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def load_config_file(path):
    with open(path, encoding="utf-8-sig") as fh:
        return parse_config_lines(fh, source=str(path))


def apply_overrides(cfg, values):
    """Return ``cfg`` with the ``key -> string`` entries of ``values`` applied."""
    top, loss, feats = {}, {}, {}
    for key, raw in values.items():
        try:
            if key.startswith("loss."):
                name = key[5:]
                loss[name] = _LOSS_KEYS[name](raw)
            elif key.startswith("features."):
                name = key[9:]
                feats["feature_dim" if name == "dim" else name] = _FEATURE_KEYS[name](raw)
            else:
                top["learning_rate" if key == "lr" else key] = _TOP_KEYS[key](raw)
        except KeyError:
            raise ConfigError(f"unknown config key {key!r}") from None
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}") from None
    try:
        if loss:
            top["loss"] = dataclasses.replace(cfg.loss, **loss)
        if feats:
            top["features"] = dataclasses.replace(cfg.features, **feats)
        return dataclasses.replace(cfg, **top)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# -- Adam ----------------------------------------------------------------------

class AdamState:
    """First/second moments for P, W and b plus the shared step counter."""

    def __init__(self, params, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.lr = float(lr)
        self.beta1, self.beta2 = (float(b) for b in betas)
        self.eps = float(eps)
        self.t = 0
        self.m_P = np.zeros_like(params.P)
        self.v_P = np.zeros_like(params.P)
        self.last_P = np.zeros(params.P.shape[0], dtype=np.int64)
        self.m_W = np.zeros_like(params.W)
        self.v_W = np.zeros_like(params.W)
        self.m_b = None if params.b is None else np.zeros_like(params.b)
        self.v_b = None if params.b is None else np.zeros_like(params.b)
        self._bc1 = np.zeros(1)
        self._bc2 = np.zeros(1)

    def _corrections(self):
        have = self._bc1.shape[0]
        if have <= self.t:
            size = max(2 * have, self.t + 1)
            steps = np.arange(size, dtype=np.float64)
            self._bc1 = np.array([1.0 - self.beta1**s for s in steps])
            self._bc2 = np.array([1.0 - self.beta2**s for s in steps])
        return self._bc1, self._bc2

    def _dense(self, p, m, v, g, bc1, bc2):
        b1, b2 = self.beta1, self.beta2
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * g * g
        p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def flush(self, params):
        """Catch every lazily-updated row of P up to the current step."""
        bc1, bc2 = self._corrections()
        kernels.adam_flush(params.P, self.m_P, self.v_P, self.last_P, self.t,
                           self.lr, self.beta1, self.beta2, self.eps, bc1, bc2)


def adam_step(params, grads, state):
    """One bias-corrected Adam step, in place.  Returns ``(params, state)``."""
    if grads.W.shape != params.W.shape or grads.P.shape[1:] != params.P.shape[1:]:
        raise ShapeMismatch("gradient shapes do not match the parameters")
    if (grads.b is None) != (params.b is None):
        raise ShapeMismatch("bias gradient presence does not match the head")
    state.t += 1
    bc1, bc2 = state._corrections()
    t = state.t
    state._dense(params.W, state.m_W, state.v_W, grads.W, bc1[t], bc2[t])
    if params.b is not None:
        state._dense(params.b, state.m_b, state.v_b, grads.b, bc1[t], bc2[t])
    rows = np.asarray(grads.P_rows, dtype=np.int64)
    kernels.adam_rows(params.P, state.m_P, state.v_P, state.last_P, rows,
                      np.ascontiguousarray(grads.P, dtype=np.float64), t,
                      state.lr, state.beta1, state.beta2, state.eps, bc1, bc2)
    return params, state


# -- training ------------------------------------------------------------------

@dataclass
class TrainHistory:
    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)
    phase_sizes: list = field(default_factory=list)
    seconds: float = field(default=0.0, compare=False)

    @property
    def epochs(self):
        return list(zip(self.loss, self.accuracy))

    def extend(self, other):
        self.loss.extend(other.loss)
        self.accuracy.extend(other.accuracy)
        self.phase_sizes.extend(other.phase_sizes)
        self.seconds += other.seconds


def _pairs(data):
    for item in data:
        if isinstance(item, LabeledExample):
            yield item.text, item.label
        else:
            text, label = item
            yield text, label


def resolve_labels(cfg, lang):
    if cfg.labels is not None:
        return cfg.labels
    return default_vocabulary(TargetLanguage.parse(lang))


@dataclass
class PreparedData:
    vectors: list
    targets: np.ndarray
    cmis: list


def prepare(data, cfg, dictionary, lang, labels):
    index = {name: i for i, name in enumerate(labels)}
    vectors, targets, cmis = [], [], []
    for pos, (text, label) in enumerate(_pairs(data)):
        if label not in index:
            raise UnknownLabel(label, line=pos + 1, source="training data")
        vectors.append(featurize(text, cfg.features))
        targets.append(index[label])
        cmis.append(sentence_cmi(tag_sentence(text, dictionary, lang)))
    return PreparedData(vectors, np.asarray(targets, dtype=np.int64), cmis)


def fit(prepared, cfg, labels, params=None):
    """Train on already featurised data.  Returns ``(params, history)``."""
    n = len(prepared.vectors)
    if n == 0:
        raise EmptyDataset("no training examples")
    start = time.perf_counter()
    root = SplitMix64(cfg.seed)
    init_rng, shuffle_rng, dropout_rng = root.spawn(), root.spawn(), root.spawn()
    if params is None:
        params = ModelParams.initialize(
            labels, head=cfg.head, emb_dim=cfg.emb_dim, features=cfg.features,
            scale=cfg.scale, rng=init_rng,
        )
    else:
        params = params.copy()

    weights = None
    if cfg.loss.use_class_weights:
        counts = np.bincount(prepared.targets, minlength=len(labels))
        present = counts > 0
        # classes absent from the data never act as targets; their weight is inert
        w = np.ones(len(labels))
        w[present] = class_weights_from_counts(counts[present]).w
        weights = ClassWeights(w)

    state = AdamState(params, cfg.learning_rate, (cfg.beta1, cfg.beta2), cfg.epsilon)
    history = TrainHistory(phase_sizes=[n])
    keep = 1.0 - cfg.dropout

    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            X = CsrBatch.stack(prepared.vectors[i] for i in idx)
            y = prepared.targets[idx]
            mask = None
            if cfg.dropout > 0:
                draws = dropout_rng.random(idx.size * params.emb_dim).reshape(idx.size, -1)
                mask = (draws < keep) / keep
            trace = forward_batch(params, X, dropout_mask=mask)
            cmis = [prepared.cmis[i] for i in idx] if cfg.loss.kind is LossKind.CMI_FL else None
            mean, dlogits = batch_loss(trace.probs, y, cfg.loss, weights, cmis)
            grads = backward_batch(params, trace, dlogits)
            adam_step(params, grads, state)
            loss_sum += mean * idx.size
            correct += int(np.sum(np.argmax(trace.probs, axis=1) == y))
        history.loss.append(loss_sum / n)
        history.accuracy.append(correct / n)
        log.info("epoch %d/%d loss=%.6f acc=%.4f", epoch + 1, cfg.epochs,
                 history.loss[-1], history.accuracy[-1])

    state.flush(params)
    history.seconds = time.perf_counter() - start
    return params, history


def train(labeled, cfg=TrainConfig(), dictionary=None, lang=TargetLanguage.TAMIL):
    dictionary = dictionary if dictionary is not None else Dictionary.default()
    labels = resolve_labels(cfg, lang)
    prepared = prepare(labeled, cfg, dictionary, lang, labels)
    return fit(prepared, cfg, labels)


def pseudo_label(params, unlabeled, threshold=0.0):
    """Predict every text and keep those whose top probability reaches ``threshold``."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    texts = list(unlabeled)
    if not texts:
        return []
    vecs = [featurize(t, params.features) for t in texts]
    pred, probs = predict_batch(params, vecs)
    top = probs[np.arange(len(texts)), pred]
    return [
        (text, params.labels[k])
        for text, k, p in zip(texts, pred.tolist(), top.tolist())
        if p >= threshold
    ]


def train_with_pseudo(labeled, unlabeled, cfg=TrainConfig(), dictionary=None,
                      lang=TargetLanguage.TAMIL, continue_training=False):
    """Train, pseudo-label ``unlabeled``, then train again on the union.

    Phase 2 starts from a fresh initialisation with the same seed unless
    ``continue_training`` is set, in which case it starts from the phase-1
    weights.  The history holds both phases; ``phase_sizes`` records the
    training-set size of each.
    """
    dictionary = dictionary if dictionary is not None else Dictionary.default()
    labels = resolve_labels(cfg, lang)
    labeled = list(_pairs(labeled))
    first = prepare(labeled, cfg, dictionary, lang, labels)
    params, history = fit(first, cfg, labels)

    accepted = pseudo_label(params, unlabeled, cfg.pseudo_threshold)
    log.info("pseudo-labelled %d examples", len(accepted))
    extra = prepare(accepted, cfg, dictionary, lang, labels)
    combined = PreparedData(
        vectors=first.vectors + extra.vectors,
        targets=np.concatenate([first.targets, extra.targets]),
        cmis=first.cmis + extra.cmis,
    )
    params2, history2 = fit(combined, cfg, labels, params=params if continue_training else None)
    history.extend(history2)
    return params2, history
