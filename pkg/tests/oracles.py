"""Independent reference implementations used to check the package.

Nothing here imports the code paths it is used to check.
"""

import math
from fractions import Fraction

import numpy as np

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK64 = (1 << 64) - 1


def fnv1a64(data):
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & MASK64
    return h


def ngram_counts(text, n_min, n_max, dim, lowercase=True):
    """Brute-force hashed n-gram counts: dict index -> count."""
    if lowercase:
        text = text.lower()
    counts = {}
    for word in text.split():
        marked = "␂" + word + "␃"
        for n in range(n_min, n_max + 1):
            for s in range(len(marked) - n + 1):
                gram = marked[s:s + n]
                h = fnv1a64(bytes([n]) + gram.encode("utf-8"))
                idx = h % dim
                counts[idx] = counts.get(idx, 0) + 1
    return counts


def cmi_fraction(tags):
    """Exact CMI from tag names ('N', 'R', 'E', 'U')."""
    n = len(tags)
    u = sum(1 for t in tags if t == "U")
    native = sum(1 for t in tags if t in ("N", "R"))
    english = sum(1 for t in tags if t == "E")
    if n == u:
        return Fraction(0)
    return 1 - Fraction(max(native, english), n - u)


class DenseAdam:
    """Textbook Adam over a list of arrays."""

    def __init__(self, shapes, lr, b1=0.9, b2=0.999, eps=1e-8):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.lr, self.b1, self.b2, self.eps = lr, b1, b2, eps
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m[...] = self.b1 * m + (1 - self.b1) * g
            v[...] = self.b2 * v + (1 - self.b2) * g * g
            mhat = m / (1 - self.b1**self.t)
            vhat = v / (1 - self.b2**self.t)
            p -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def central_difference(f, x, h=1e-5):
    """Gradient of scalar ``f`` w.r.t. every entry of array ``x`` (in place)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        up = f()
        x[i] = old - h
        down = f()
        x[i] = old
        grad[i] = (up - down) / (2 * h)
    return grad


def relative_error(a, b, floor=1e-6):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


def ref_forward(P, W, b, head, scale, idx, val):
    """Straight-line forward pass returning probabilities."""
    e = np.zeros(P.shape[1])
    for i, v in zip(idx, val):
        e += v * P[i]
    if head == "dot":
        z = W @ e + b
    else:
        r = math.sqrt(float(e @ e))
        en = e * (r / (1 + r * r))
        wn = W / np.linalg.norm(W, axis=1, keepdims=True)
        z = scale * (wn @ en)
    z = z - z.max()
    ez = np.exp(z)
    return ez / ez.sum()


def ref_loss(probs, y, kind, w, gamma, alpha, cmi):
    p = probs[y]
    ce = -w[y] * math.log(p)
    if kind == "ce":
        return ce
    if kind == "focal":
        return w[y] * (1 - p) ** gamma * -math.log(p)
    return alpha * ce * (1 - cmi) ** gamma + alpha * ce * cmi**gamma


def mcnemar(b, c):
    return (b - c) ** 2 / (b + c)


def stuart_maxwell_ref(table, drop):
    """Statistic via numpy's LAPACK solve, leaving out category ``drop``."""
    n = np.asarray(table, dtype=float)
    k = n.shape[0]
    keep = [i for i in range(k) if i != drop]
    row, col = n.sum(1), n.sum(0)
    d = np.array([row[i] - col[i] for i in keep])
    S = np.empty((k - 1, k - 1))
    for a, i in enumerate(keep):
        for bb, j in enumerate(keep):
            S[a, bb] = row[i] + col[i] - 2 * n[i, i] if i == j else -(n[i, j] + n[j, i])
    return float(d @ np.linalg.solve(S, d))
