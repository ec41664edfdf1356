"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N] [--train]

``--train`` also times a full training run under each backend, each in a
fresh interpreter so the environment flag takes effect at import.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from cmifl import kernels
from cmifl._accel import HAVE_NUMBA
from cmifl.model import FeatureConfig, ngram_hash_values
from cmifl.synthetic import keyword_corpus

TRAIN_SNIPPET = """
import time
from cmifl._accel import backend_name
from cmifl.synthetic import class_names, keyword_corpus
from cmifl.train import TrainConfig, train
data = keyword_corpus()
start = time.perf_counter()
train(data, TrainConfig(epochs=10, labels=class_names(4)))
print(backend_name(), time.perf_counter() - start)
"""


def _hash_inputs():
    captured = []

    def grab(buf, char_off, tok_end, n_min, n_max):
        captured.append((buf, char_off, tok_end))
        return kernels.ngram_hashes_np(buf, char_off, tok_end, n_min, n_max)

    orig, kernels.ngram_hashes = kernels.ngram_hashes, grab
    try:
        for text, _ in keyword_corpus(per_class=50, seed=0):
            ngram_hash_values(text, FeatureConfig())
    finally:
        kernels.ngram_hashes = orig
    return captured


def _csr(rng, rows, dim, nnz):
    indptr = np.arange(0, rows * nnz + 1, nnz, dtype=np.int64)
    indices = rng.integers(0, dim, size=rows * nnz).astype(np.int64)
    return indptr, indices, rng.random(rows * nnz)


def cases():
    rng = np.random.default_rng(0)
    texts = _hash_inputs()
    P = rng.normal(size=(65536, 32))
    indptr, indices, values = _csr(rng, 32, 65536, 150)
    rows, slot = np.unique(indices, return_inverse=True)
    slot = slot.astype(np.int64)
    dE = rng.normal(size=(32, 32))
    G = rng.normal(size=(rows.size, 32))
    steps = 400
    bc1 = 1.0 - 0.9 ** np.arange(steps + 1.0)
    bc2 = 1.0 - 0.999 ** np.arange(steps + 1.0)

    def adam_state():
        return (P.copy(), np.zeros_like(P), np.zeros_like(P), np.zeros(P.shape[0], dtype=np.int64))

    def hashes(fn):
        return lambda: [fn(b, c, t, 1, 4) for b, c, t in texts]

    def adam(rows_fn, flush_fn):
        def go():
            p, m, v, last = adam_state()
            for t in range(1, 21):
                rows_fn(p, m, v, last, rows, G, t * 10, 1e-3, 0.9, 0.999, 1e-8, bc1, bc2)
            flush_fn(p, m, v, last, steps, 1e-3, 0.9, 0.999, 1e-8, bc1, bc2)
        return go

    return {
        "ngram_hashes (200 texts)": (hashes(kernels.ngram_hashes_nb),
                                     hashes(kernels.ngram_hashes_np)),
        "sparse_embed (32 x 150 nnz)": (
            lambda: kernels.sparse_embed_nb(indptr, indices, values, P),
            lambda: kernels.sparse_embed_np(indptr, indices, values, P)),
        "sparse_row_grad": (
            lambda: kernels.sparse_row_grad_nb(indptr, slot, values, dE, rows.size),
            lambda: kernels.sparse_row_grad_np(indptr, slot, values, dE, rows.size)),
        "adam rows x20 + flush (65536 x 32)": (
            adam(kernels.adam_rows_nb, kernels.adam_flush_nb),
            adam(kernels.adam_rows_np, kernels.adam_flush_np)),
    }


def bench_training():
    for disabled in ("0", "1"):
        env = dict(os.environ, CMIFL_DISABLE_NUMBA=disabled)
        out = subprocess.run([sys.executable, "-c", TRAIN_SNIPPET], env=env,
                             capture_output=True, text=True, check=True).stdout.split()
        print(f"  train 800 x 10 epochs      {out[0]:>6s}  {float(out[1]):8.3f} s")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--train", action="store_true")
    args = ap.parse_args()
    if not HAVE_NUMBA:
        sys.exit("numba is not installed")

    print(f"{'kernel':36s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}")
    for name, (nb, np_) in cases().items():
        nb()  # compile / load from cache
        t_nb = min(timeit.repeat(nb, number=1, repeat=args.repeat)) * 1e3
        t_np = min(timeit.repeat(np_, number=1, repeat=args.repeat)) * 1e3
        print(f"{name:36s} {t_nb:10.3f} {t_np:10.3f} {t_np / t_nb:8.1f}x")
    if args.train:
        bench_training()


if __name__ == "__main__":
    main()
