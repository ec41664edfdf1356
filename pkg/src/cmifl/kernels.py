"""Hot numeric kernels, each in a numba and a pure-numpy flavour.

The public names (``ngram_hashes``, ``sparse_embed``, ``sparse_row_grad``,
``adam_rows``, ``adam_flush``) are bound at import time to the backend chosen
in :mod:`cmifl._accel`.  The ``*_nb`` / ``*_np`` variants stay importable so
tests and the benchmark can compare both.
"""

import numpy as np

from cmifl._accel import USE_NUMBA, njit

FNV_OFFSET = np.uint64(0xCBF29CE484222325)
FNV_PRIME = np.uint64(0x100000001B3)


# ---------------------------------------------------------------------------
# FNV-1a hashing of character n-grams
# ---------------------------------------------------------------------------
#
# Inputs describe a list of tokens already wrapped in boundary markers:
#   buf        uint8   UTF-8 bytes of all tokens, concatenated
#   char_off   int64   byte offset of every character, plus a final sentinel
#   tok_end    int64   for each character, the index one past its token's end
# Output order is: n ascending, then character position ascending.


@njit
def ngram_hashes_nb(buf, char_off, tok_end, n_min, n_max):
    n_chars = tok_end.shape[0]
    count = 0
    for n in range(n_min, n_max + 1):
        for s in range(n_chars):
            if s + n <= tok_end[s]:
                count += 1
    out = np.empty(count, dtype=np.uint64)
    k = 0
    for n in range(n_min, n_max + 1):
        for s in range(n_chars):
            if s + n > tok_end[s]:
                continue
            h = FNV_OFFSET
            h ^= np.uint64(n)
            h *= FNV_PRIME
            for bi in range(char_off[s], char_off[s + n]):
                h ^= np.uint64(buf[bi])
                h *= FNV_PRIME
            out[k] = h
            k += 1
    return out


def ngram_hashes_np(buf, char_off, tok_end, n_min, n_max):
    n_chars = tok_end.shape[0]
    positions = np.arange(n_chars, dtype=np.int64)
    buf64 = buf.astype(np.uint64)
    chunks = []
    for n in range(n_min, n_max + 1):
        starts = positions[positions + n <= tok_end]
        if starts.size == 0:
            continue
        lengths = char_off[starts + n] - char_off[starts]
        base = char_off[starts]
        h = np.full(starts.size, FNV_OFFSET, dtype=np.uint64)
        h ^= np.uint64(n)
        h *= FNV_PRIME
        for j in range(int(lengths.max())):
            live = lengths > j
            hv = h[live]
            hv ^= buf64[base[live] + j]
            hv *= FNV_PRIME
            h[live] = hv
        chunks.append(h)
    if not chunks:
        return np.empty(0, dtype=np.uint64)
    return np.concatenate(chunks)


# ---------------------------------------------------------------------------
# Sparse projection  E[b] = sum_k values[k] * P[indices[k]]
# ---------------------------------------------------------------------------


@njit
def sparse_embed_nb(indptr, indices, values, P):
    n_rows = indptr.shape[0] - 1
    dim = P.shape[1]
    E = np.zeros((n_rows, dim))
    for b in range(n_rows):
        for k in range(indptr[b], indptr[b + 1]):
            row = indices[k]
            val = values[k]
            for j in range(dim):
                E[b, j] += val * P[row, j]
    return E


def sparse_embed_np(indptr, indices, values, P):
    n_rows = indptr.shape[0] - 1
    E = np.zeros((n_rows, P.shape[1]))
    owner = np.repeat(np.arange(n_rows), np.diff(indptr))
    np.add.at(E, owner, values[:, None] * P[indices])
    return E


# ---------------------------------------------------------------------------
# Gradient of the projection, restricted to the rows that were touched.
#   slot[k]  position of indices[k] inside the unique-row list
# ---------------------------------------------------------------------------


@njit
def sparse_row_grad_nb(indptr, slot, values, dE, n_slots):
    n_rows = indptr.shape[0] - 1
    dim = dE.shape[1]
    G = np.zeros((n_slots, dim))
    for b in range(n_rows):
        for k in range(indptr[b], indptr[b + 1]):
            s = slot[k]
            val = values[k]
            for j in range(dim):
                G[s, j] += val * dE[b, j]
    return G


def sparse_row_grad_np(indptr, slot, values, dE, n_slots):
    n_rows = indptr.shape[0] - 1
    G = np.zeros((n_slots, dE.shape[1]))
    owner = np.repeat(np.arange(n_rows), np.diff(indptr))
    np.add.at(G, slot, values[:, None] * dE[owner])
    return G


# ---------------------------------------------------------------------------
# Lazy Adam over the rows of a large matrix.
#
# last[r] is the last step at which row r was brought up to date.  Skipped
# steps are replayed with a zero gradient on touch, which reproduces dense
# Adam exactly.  bc1[s] = 1 - beta1**s, bc2[s] = 1 - beta2**s.
# A row whose moments are all zero is left alone: replaying zero-gradient
# steps cannot move it.
# ---------------------------------------------------------------------------


@njit
def _row_is_idle(m, v, r):
    for j in range(m.shape[1]):
        if m[r, j] != 0.0 or v[r, j] != 0.0:
            return False
    return True


@njit
def _replay(P, m, v, r, s0, s1, lr, b1, b2, eps, bc1, bc2):
    # zero-gradient steps s0..s1-1
    for s in range(s0, s1):
        for j in range(P.shape[1]):
            m[r, j] = b1 * m[r, j] + (1.0 - b1) * 0.0
            v[r, j] = b2 * v[r, j] + (1.0 - b2) * 0.0
            P[r, j] -= lr * (m[r, j] / bc1[s]) / (np.sqrt(v[r, j] / bc2[s]) + eps)


@njit
def adam_rows_nb(P, m, v, last, rows, G, t, lr, b1, b2, eps, bc1, bc2):
    for i in range(rows.shape[0]):
        r = rows[i]
        if last[r] + 1 < t and not _row_is_idle(m, v, r):
            _replay(P, m, v, r, last[r] + 1, t, lr, b1, b2, eps, bc1, bc2)
        for j in range(P.shape[1]):
            g = G[i, j]
            m[r, j] = b1 * m[r, j] + (1.0 - b1) * g
            v[r, j] = b2 * v[r, j] + (1.0 - b2) * g * g
            P[r, j] -= lr * (m[r, j] / bc1[t]) / (np.sqrt(v[r, j] / bc2[t]) + eps)
        last[r] = t


@njit
def adam_flush_nb(P, m, v, last, t, lr, b1, b2, eps, bc1, bc2):
    for r in range(P.shape[0]):
        if last[r] < t:
            if not _row_is_idle(m, v, r):
                _replay(P, m, v, r, last[r] + 1, t + 1, lr, b1, b2, eps, bc1, bc2)
            last[r] = t


def _replay_np(P, m, v, rows, first, stop, lr, b1, b2, eps, bc1, bc2):
    """Replay zero-gradient steps ``first[i]..stop-1`` for each row."""
    if rows.size == 0:
        return
    for s in range(int(first.min()), stop):
        sel = rows[first <= s]
        if sel.size == 0:
            continue
        ms = b1 * m[sel] + (1.0 - b1) * 0.0
        vs = b2 * v[sel] + (1.0 - b2) * 0.0
        m[sel] = ms
        v[sel] = vs
        P[sel] -= lr * (ms / bc1[s]) / (np.sqrt(vs / bc2[s]) + eps)


def _busy(m, v, rows):
    return np.any(m[rows] != 0.0, axis=1) | np.any(v[rows] != 0.0, axis=1)


def adam_rows_np(P, m, v, last, rows, G, t, lr, b1, b2, eps, bc1, bc2):
    stale = rows[(last[rows] + 1 < t)]
    stale = stale[_busy(m, v, stale)]
    _replay_np(P, m, v, stale, last[stale] + 1, t, lr, b1, b2, eps, bc1, bc2)
    mr = b1 * m[rows] + (1.0 - b1) * G
    vr = b2 * v[rows] + (1.0 - b2) * G * G
    m[rows] = mr
    v[rows] = vr
    P[rows] -= lr * (mr / bc1[t]) / (np.sqrt(vr / bc2[t]) + eps)
    last[rows] = t


def adam_flush_np(P, m, v, last, t, lr, b1, b2, eps, bc1, bc2):
    behind = np.nonzero(last < t)[0]
    busy = behind[_busy(m, v, behind)]
    _replay_np(P, m, v, busy, last[busy] + 1, t + 1, lr, b1, b2, eps, bc1, bc2)
    last[behind] = t


if USE_NUMBA:
    ngram_hashes = ngram_hashes_nb
    sparse_embed = sparse_embed_nb
    sparse_row_grad = sparse_row_grad_nb
    adam_rows = adam_rows_nb
    adam_flush = adam_flush_nb
else:
    ngram_hashes = ngram_hashes_np
    sparse_embed = sparse_embed_np
    sparse_row_grad = sparse_row_grad_np
    adam_rows = adam_rows_np
    adam_flush = adam_flush_np
