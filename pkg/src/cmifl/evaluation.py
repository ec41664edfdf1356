"""Classification metrics and the Stuart-Maxwell marginal-homogeneity test."""

import math
from dataclasses import dataclass

import numpy as np

from cmifl.errors import DomainError, LengthMismatch, SingularCovariance, UnknownLabel

# ---------------------------------------------------------------------------
# Confusion matrix and P/R/F1
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # rows gold, columns predicted
    labels: tuple

    @property
    def total(self):
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self):
        return {
            "label": self.label,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "support": self.support,
        }


@dataclass(frozen=True)
class Averages:
    precision: float
    recall: float
    f1: float

    def to_dict(self):
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class MetricsReport:
    per_class: tuple
    macro: Averages
    weighted: Averages
    accuracy: float

    def to_dict(self, classwise=True):
        out = {
            "macro": self.macro.to_dict(),
            "weighted": self.weighted.to_dict(),
            "accuracy": self.accuracy,
        }
        if classwise:
            out["per_class"] = [c.to_dict() for c in self.per_class]
        return out


def _vocab_from(*seqs):
    seen = set()
    for seq in seqs:
        seen.update(seq)
    return tuple(sorted(seen))


def confusion(gold, pred, labels=None):
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise LengthMismatch(f"{len(gold)} gold labels but {len(pred)} predictions")
    if not gold:
        raise LengthMismatch("nothing to evaluate")
    labels = tuple(labels) if labels is not None else _vocab_from(gold, pred)
    index = {name: i for i, name in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for pos, (g, p) in enumerate(zip(gold, pred)):
        for name in (g, p):
            if name not in index:
                raise UnknownLabel(name, line=pos + 1)
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(counts, labels)


def _ratio(num, den):
    return num / den if den > 0 else 0.0


def metrics(cm):
    counts = cm.counts
    total = int(counts.sum())
    tp = np.diag(counts)
    pred_tot = counts.sum(axis=0)
    gold_tot = counts.sum(axis=1)
    per_class = []
    for c, label in enumerate(cm.labels):
        p = _ratio(tp[c], pred_tot[c])
        r = _ratio(tp[c], gold_tot[c])
        f = _ratio(2 * p * r, p + r)
        per_class.append(ClassMetrics(label, float(p), float(r), float(f), int(gold_tot[c])))

    k = len(per_class)
    macro = Averages(
        precision=sum(c.precision for c in per_class) / k,
        recall=sum(c.recall for c in per_class) / k,
        f1=sum(c.f1 for c in per_class) / k,
    )
    accuracy = _ratio(int(tp.sum()), total)
    weighted = Averages(
        precision=sum(c.support * c.precision for c in per_class) / total,
        # support * tp / support is tp; summing counts keeps this equal to accuracy
        recall=accuracy,
        f1=sum(c.support * c.f1 for c in per_class) / total,
    )
    return MetricsReport(tuple(per_class), macro, weighted, accuracy)


# ---------------------------------------------------------------------------
# Chi-square upper tail via the regularised incomplete gamma function
# ---------------------------------------------------------------------------

_EPS = 1e-16
_FPMIN = 1e-300
_MAX_ITER = 10_000


def _gamma_p_series(a, x):
    term = total = 1.0 / a
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a, x):
    # modified Lentz evaluation
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a, x):
    """Regularised upper incomplete gamma ``Q(a, x)``."""
    if x < 0 or a <= 0:
        raise DomainError("gamma_q needs a > 0 and x >= 0")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def chi_square_sf(x, df):
    """Upper-tail probability of a chi-square variable with ``df`` degrees of freedom."""
    x = float(x)
    if x < 0 or math.isnan(x):
        raise DomainError(f"chi-square statistic must be >= 0, got {x}")
    if int(df) != df or df < 1:
        raise DomainError(f"df must be a positive integer, got {df}")
    if math.isinf(x):
        return 0.0
    return min(1.0, max(0.0, gamma_q(df / 2.0, x / 2.0)))


# ---------------------------------------------------------------------------
# Stuart-Maxwell
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairedTable:
    """``n[i, j]`` counts items that system A put in class i and B in class j."""

    n: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        n = np.asarray(self.n)
        if n.ndim != 2 or n.shape[0] != n.shape[1] or n.shape[0] < 2:
            raise ValueError("paired table must be square with k >= 2")
        if np.any(n < 0):
            raise ValueError("paired table counts must be nonnegative")
        if n.sum() < 1:
            raise ValueError("paired table is empty")
        object.__setattr__(self, "n", n)


@dataclass(frozen=True)
class SmResult:
    chi2: float
    df: int
    p_value: float

    def to_dict(self):
        return {"chi2": self.chi2, "df": self.df, "p_value": self.p_value}


def paired_table(a, b, labels=None):
    a, b = list(a), list(b)
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} items for system A but {len(b)} for system B")
    cm = confusion(a, b, labels)
    return PairedTable(cm.counts, cm.labels)


def solve_pivoting(A, rhs, rel_tol=1e-12):
    """Solve ``A z = rhs`` by Gaussian elimination with partial pivoting."""
    M = np.array(A, dtype=np.float64)
    z = np.array(rhs, dtype=np.float64)
    n = M.shape[0]
    scale = np.max(np.abs(M)) if M.size else 0.0
    if scale == 0.0:
        raise SingularCovariance("covariance matrix is zero")
    for col in range(n):
        piv = col + int(np.argmax(np.abs(M[col:, col])))
        if abs(M[piv, col]) <= rel_tol * scale:
            raise SingularCovariance("covariance matrix is singular")
        if piv != col:
            M[[col, piv]] = M[[piv, col]]
            z[[col, piv]] = z[[piv, col]]
        for r in range(col + 1, n):
            f = M[r, col] / M[col, col]
            if f != 0.0:
                M[r, col:] -= f * M[col, col:]
                z[r] -= f * z[col]
    for col in range(n - 1, -1, -1):
        z[col] = (z[col] - M[col, col + 1:] @ z[col + 1:]) / M[col, col]
    return z


def stuart_maxwell(table):
    if not isinstance(table, PairedTable):
        table = PairedTable(np.asarray(table))
    n = table.n.astype(np.float64)
    row = n.sum(axis=1)
    col = n.sum(axis=0)
    keep = np.nonzero(row + col > 0)[0]
    if keep.size < 2:
        raise SingularCovariance("fewer than two categories are in use")
    n = n[np.ix_(keep, keep)]
    row, col = row[keep], col[keep]

    # Leave out the last category, but keep the busiest one in the reduced
    # system.  The statistic does not depend on which category is dropped.
    drop = keep.size - 1
    if drop == int(np.argmax(row + col)):
        drop -= 1
    idx = np.array([i for i in range(keep.size) if i != drop])
    d = (row - col)[idx]
    S = -(n + n.T)
    np.fill_diagonal(S, row + col - 2.0 * np.diag(n))
    S = S[np.ix_(idx, idx)]

    z = solve_pivoting(S, d)
    chi2 = max(0.0, float(d @ z))
    df = int(idx.size)
    return SmResult(chi2=chi2, df=df, p_value=chi_square_sf(chi2, df))
