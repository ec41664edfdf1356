"""Class weights, weighted cross-entropy, focal loss and the CMI-weighted loss.

The CMI-weighted loss is

    L = alpha * CE * (1 - cmi)**gamma + alpha * CE * cmi**gamma

i.e. the (class-weighted) cross-entropy times ``cmi_multiplier(cmi)``.  The
code-mixing index does not depend on the parameters, so the logit gradient
is the CE gradient times the same multiplier.
"""

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from cmifl.cmi import CmiScore, batch_cmi
from cmifl.errors import DomainError, EmptyBatch, LengthMismatch, NonFiniteProb, ZeroCount


class LossKind(enum.Enum):
    CE = "ce"
    FOCAL = "focal"
    CMI_FL = "cmi-fl"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"cmifl": "cmi-fl", "cmi": "cmi-fl", "cross-entropy": "ce"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown loss kind {value!r}; expected ce, focal or cmi-fl") from None


class CmiMode(enum.Enum):
    PER_BATCH = "batch"
    PER_SENTENCE = "sentence"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for prefix in ("per-", "per"):
            if key.startswith(prefix):
                key = key[len(prefix):]
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown cmi mode {value!r}; expected batch or sentence") from None


@dataclass(frozen=True)
class LossConfig:
    kind: LossKind = LossKind.CMI_FL
    alpha: float = 1.7
    gamma: float = 0.25
    use_class_weights: bool = True
    cmi_mode: CmiMode = CmiMode.PER_BATCH

    def __post_init__(self):
        object.__setattr__(self, "kind", LossKind.parse(self.kind))
        object.__setattr__(self, "cmi_mode", CmiMode.parse(self.cmi_mode))
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.gamma >= 0:
            raise ValueError("gamma must be nonnegative")


@dataclass(frozen=True)
class ClassWeights:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 1 or not np.all(w > 0):
            raise ValueError("class weights must be a vector of positive floats")
        object.__setattr__(self, "w", w)

    def __len__(self):
        return self.w.shape[0]

    def __getitem__(self, c):
        return self.w[c]

    @classmethod
    def uniform(cls, n_classes):
        return cls(np.ones(n_classes))


@dataclass(frozen=True)
class LossValue:
    value: float
    dlogits: np.ndarray


def class_weights_from_counts(counts):
    """Inverse-frequency weights ``N / (C * N_c)``."""
    counts = np.asarray(counts)
    if counts.ndim != 1 or counts.size < 1:
        raise ValueError("counts must be a non-empty vector")
    if np.any(counts <= 0):
        zero = [i for i, c in enumerate(counts.tolist()) if c <= 0]
        raise ZeroCount(f"classes {zero} have no examples")
    total = float(counts.sum())
    return ClassWeights(total / (counts.size * counts.astype(np.float64)))


def _as_weights(w, n_classes):
    if w is None:
        return np.ones(n_classes)
    return w.w if isinstance(w, ClassWeights) else np.asarray(w, dtype=np.float64)


def _check_probs(p_y):
    bad = ~(p_y > 0)
    if np.any(bad):
        raise NonFiniteProb("probability of the gold class must be positive")


def _one_minus_py(probs, y):
    # sum of the other probabilities is more accurate than 1 - p_y near p_y = 1
    mask = np.ones_like(probs, dtype=bool)
    mask[np.arange(probs.shape[0]), y] = False
    return np.sum(np.where(mask, probs, 0.0), axis=1)


def ce_terms(probs, y, weights):
    """Per-example weighted CE values and logit gradients (no batch mean)."""
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    rows = np.arange(probs.shape[0])
    p_y = probs[rows, y]
    _check_probs(p_y)
    w_y = weights[y]
    values = -w_y * np.log(p_y)
    grad = probs.copy()
    grad[rows, y] -= 1.0
    return values, grad * w_y[:, None]


def focal_terms(probs, y, weights, gamma):
    probs = np.atleast_2d(np.asarray(probs, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.int64))
    if gamma == 0:
        return ce_terms(probs, y, weights)
    rows = np.arange(probs.shape[0])
    p_y = probs[rows, y]
    _check_probs(p_y)
    w_y = weights[y]
    q = _one_minus_py(probs, y)
    log_p = np.log(p_y)
    mod = q**gamma
    values = -w_y * mod * log_p

    # dL/dz_j = w_y * [gamma q^(gamma-1) p_y log p_y - q^gamma] * (onehot_j - p_j)
    with np.errstate(divide="ignore", invalid="ignore"):
        pull = np.where(q > 0, gamma * q ** (gamma - 1.0) * p_y * log_p, 0.0)
    coef = w_y * (pull - mod)
    onehot = np.zeros_like(probs)
    onehot[rows, y] = 1.0
    grad = coef[:, None] * (onehot - probs)
    return values, grad


def weighted_ce(probs, y, w=None):
    probs = np.asarray(probs, dtype=np.float64)
    values, grad = ce_terms(probs[None, :], [y], _as_weights(w, probs.shape[0]))
    return LossValue(float(values[0]), grad[0])


def focal(probs, y, w=None, gamma=0.25):
    probs = np.asarray(probs, dtype=np.float64)
    values, grad = focal_terms(probs[None, :], [y], _as_weights(w, probs.shape[0]), gamma)
    return LossValue(float(values[0]), grad[0])


def cmi_multiplier(cmi, alpha=1.7, gamma=0.25):
    """``alpha * ((1 - cmi)**gamma + cmi**gamma)`` with ``0**0 == 1``."""
    cmi = float(cmi)
    if not 0.0 <= cmi <= 1.0:
        raise DomainError(f"CMI must lie in [0, 1], got {cmi}")
    # Python's float power already gives 0**g == 0 for g > 0 and 0**0 == 1
    return alpha * ((1.0 - cmi) ** gamma + cmi**gamma)


def cmi_fl(ce, cmi, alpha=1.7, gamma=0.25):
    m = cmi_multiplier(cmi, alpha, gamma)
    return LossValue(ce.value * m, ce.dlogits * m)


def _cmi_value(s):
    return s.value if isinstance(s, CmiScore) else float(s)


def batch_loss(probs, labels, cfg, weights=None, cmis=None):
    """Mean loss over a batch and per-example logit gradients divided by B.

    ``probs`` is a ``B x C`` array or a sequence of traces exposing ``.probs``.
    """
    if not isinstance(probs, np.ndarray):
        probs = np.array([t.probs for t in probs]) if len(probs) else np.empty((0, 0))
    probs = np.atleast_2d(probs)
    labels = np.asarray(labels, dtype=np.int64)
    n = probs.shape[0]
    if n == 0:
        raise EmptyBatch("batch_loss needs at least one example")
    if labels.shape[0] != n:
        raise LengthMismatch(f"{n} predictions but {labels.shape[0]} labels")
    n_classes = probs.shape[1]
    if cfg.use_class_weights and weights is not None:
        w = _as_weights(weights, n_classes)
    else:
        w = np.ones(n_classes)

    if cfg.kind is LossKind.FOCAL:
        values, grad = focal_terms(probs, labels, w, cfg.gamma)
    else:
        values, grad = ce_terms(probs, labels, w)

    if cfg.kind is LossKind.CMI_FL:
        if cmis is None or len(cmis) != n:
            raise LengthMismatch("CMI-weighted loss needs one CMI score per example")
        if cfg.gamma == 0:
            warnings.warn("gamma = 0 makes the CMI-weighted loss a constant 2*alpha*CE",
                          stacklevel=2)
        if cfg.cmi_mode is CmiMode.PER_BATCH:
            m = np.full(n, cmi_multiplier(batch_cmi(cmis), cfg.alpha, cfg.gamma))
        else:
            m = np.array([cmi_multiplier(_cmi_value(s), cfg.alpha, cfg.gamma) for s in cmis])
        values = values * m
        grad = grad * m[:, None]

    total = 0.0
    for v in values.tolist():
        total += v
    return total / n, grad / n
