import dataclasses

import numpy as np
import pytest

from cmifl.dataio import model_to_bytes
from cmifl.errors import EmptyDataset, ShapeMismatch, UnknownLabel
from cmifl.loss import LossConfig
from cmifl.model import FeatureConfig, ModelParams, ParamGrads, featurize, predict_batch
from cmifl.rng import SplitMix64
from cmifl.synthetic import class_names, keyword_corpus
from cmifl.train import (
    AdamState,
    ConfigError,
    TrainConfig,
    adam_step,
    apply_overrides,
    load_config_file,
    parse_config_lines,
    pseudo_label,
    train,
    train_with_pseudo,
)

from conftest import make_params
from oracles import DenseAdam

FEATS = FeatureConfig(1, 3, 1024)
LABELS = class_names(4)


def small_cfg(**kw):
    base = dict(epochs=5, emb_dim=16, features=FEATS, labels=LABELS, learning_rate=0.02)
    base.update(kw)
    return TrainConfig(**base)


@pytest.fixture(scope="module")
def corpus():
    return keyword_corpus(per_class=40, seed=3)


@pytest.fixture(scope="module")
def trained(corpus, english):
    return train(corpus, small_cfg(), english)


def _zero_grads(params):
    return ParamGrads(
        P_rows=np.empty(0, dtype=np.int64),
        P=np.empty((0, params.emb_dim)),
        W=np.zeros_like(params.W),
        b=None if params.b is None else np.zeros_like(params.b),
    )


def test_train_config_validation():
    for bad in (dict(epochs=0), dict(batch_size=0), dict(learning_rate=-1.0),
                dict(head="mlp"), dict(pseudo_threshold=1.5), dict(dropout=1.0)):
        with pytest.raises(ValueError):
            TrainConfig(**bad)
    cfg = TrainConfig()
    assert (cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.seed) == (30, 32, 1e-3, 42)
    assert (cfg.beta1, cfg.beta2, cfg.epsilon, cfg.pseudo_threshold) == (0.9, 0.999, 1e-8, 0.0)


@pytest.mark.parametrize("head", ["dot", "cosine"])
def test_adam_zero_grads_leave_params(head):
    params = make_params(head)
    before = params.copy()
    state = AdamState(params, lr=0.1)
    adam_step(params, _zero_grads(params), state)
    assert state.t == 1
    state.flush(params)
    np.testing.assert_array_equal(params.P, before.P)
    np.testing.assert_array_equal(params.W, before.W)


def test_adam_first_step_moves_by_lr():
    params = make_params("dot")
    w0 = params.W.copy()
    state = AdamState(params, lr=1e-3)
    g = _zero_grads(params)
    g.W[...] = 1.0
    adam_step(params, g, state)
    # m_hat / sqrt(v_hat) = 1, so each entry moves by lr / (1 + eps)
    np.testing.assert_allclose(params.W - w0, -1e-3 / (1 + 1e-8), rtol=1e-12)


def test_adam_shape_mismatch():
    params = make_params("cosine")
    g = _zero_grads(params)
    with pytest.raises(ShapeMismatch):
        adam_step(params, dataclasses.replace(g, W=np.zeros((3, 8))), AdamState(params))
    with pytest.raises(ShapeMismatch):
        adam_step(params, dataclasses.replace(g, b=np.zeros(4)), AdamState(params))


@pytest.mark.parametrize("head", ["dot", "cosine"])
def test_lazy_adam_matches_dense_trace(head):
    rng = np.random.default_rng(7)
    params = make_params(head, seed=2)
    ref = [params.P.copy(), params.W.copy()] + ([params.b.copy()] if head == "dot" else [])
    dense = DenseAdam([a.shape for a in ref], lr=0.01)
    state = AdamState(params, lr=0.01)
    for _ in range(10):
        rows = np.unique(rng.choice(params.P.shape[0], size=12))
        g = ParamGrads(rows, rng.normal(size=(rows.size, params.emb_dim)),
                       rng.normal(size=params.W.shape),
                       None if head == "cosine" else rng.normal(size=4))
        adam_step(params, g, state)
        full = [g.dense_P(params.P.shape), g.W] + ([g.b] if head == "dot" else [])
        dense.step(ref, full)
    state.flush(params)
    assert np.max(np.abs(params.P - ref[0])) <= 1e-9
    assert np.max(np.abs(params.W - ref[1])) <= 1e-9
    if head == "dot":
        assert np.max(np.abs(params.b - ref[2])) <= 1e-9


def test_zero_learning_rate_keeps_initialisation(english):
    cfg = small_cfg(epochs=1, learning_rate=0.0)
    params, history = train([("vera level padam", "class_0")], cfg, english)
    root = SplitMix64(cfg.seed)
    init = ModelParams.initialize(LABELS, head=cfg.head, emb_dim=cfg.emb_dim,
                                  features=cfg.features, scale=cfg.scale, rng=root.spawn())
    np.testing.assert_array_equal(params.P, init.P)
    np.testing.assert_array_equal(params.W, init.W)
    assert len(history.loss) == 1


def test_train_errors(english):
    with pytest.raises(EmptyDataset):
        train([], small_cfg(), english)
    with pytest.raises(UnknownLabel):
        train([("x", "class_9")], small_cfg(), english)


def test_history_has_one_entry_per_epoch(trained):
    _, history = trained
    assert len(history.loss) == len(history.accuracy) == 5
    assert history.phase_sizes == [160]
    assert history.seconds > 0


def test_determinism(corpus, english, trained):
    params, history = trained
    again, history2 = train(corpus, small_cfg(), english)
    assert model_to_bytes(params) == model_to_bytes(again)
    assert history == history2


def test_seed_changes_result(corpus, english, trained):
    other, _ = train(corpus, small_cfg(seed=7), english)
    assert model_to_bytes(other) != model_to_bytes(trained[0])


def test_training_reduces_loss(trained, corpus):
    params, history = trained
    assert history.loss[-1] < history.loss[0]
    assert history.accuracy[-1] > history.accuracy[0]
    vecs = [featurize(t, params.features) for t, _ in corpus]
    pred, _ = predict_batch(params, vecs)
    gold = [LABELS.index(y) for _, y in corpus]
    assert np.mean(pred == np.array(gold)) >= 0.95


def test_loss_non_increasing_after_epoch_three(english):
    data = keyword_corpus(per_class=50, seed=11)
    ok = 0
    for seed in range(5):
        _, h = train(data, small_cfg(epochs=12, seed=seed), english)
        tail = h.loss[2:]
        ok += all(b <= a for a, b in zip(tail, tail[1:]))
    assert ok >= 4


@pytest.mark.parametrize("loss", ["ce", "focal", "cmi-fl"])
@pytest.mark.parametrize("head", ["dot", "cosine"])
def test_all_losses_and_heads_train(corpus, english, loss, head):
    cfg = small_cfg(epochs=3, head=head, loss=LossConfig(kind=loss))
    params, history = train(corpus, cfg, english)
    assert all(np.isfinite(history.loss))
    assert np.all(np.isfinite(params.P)) and np.all(np.isfinite(params.W))


def test_dropout_is_deterministic(corpus, english):
    cfg = small_cfg(epochs=2, dropout=0.3)
    a, _ = train(corpus, cfg, english)
    b, _ = train(corpus, cfg, english)
    assert model_to_bytes(a) == model_to_bytes(b)


# -- pseudo-labelling ------------------------------------------------------------


def test_pseudo_label_threshold_zero_keeps_all(trained):
    params, _ = trained
    texts = ["vera level", "", "mokka padam", "super"]
    out = pseudo_label(params, texts, 0.0)
    assert [t for t, _ in out] == texts
    assert all(label in LABELS for _, label in out)


def test_pseudo_label_uniform_dropped():
    params = make_params("cosine")
    assert pseudo_label(params, ["", "   "], 0.3) == []
    assert len(pseudo_label(params, ["", "   "], 0.25)) == 2


def test_pseudo_label_above_max_is_empty(trained):
    params, _ = trained
    texts = [t for t, _ in keyword_corpus(per_class=10, seed=99)]
    _, probs = predict_batch(params, [featurize(t, params.features) for t in texts])
    top = float(probs.max())
    assert pseudo_label(params, texts, np.nextafter(top, 2.0)) == []


def test_pseudo_label_monotone(trained):
    params, _ = trained
    texts = [t for t, _ in keyword_corpus(per_class=25, seed=5)]
    sizes = [len(pseudo_label(params, texts, th)) for th in np.linspace(0, 1, 21)]
    assert all(b <= a for a, b in zip(sizes, sizes[1:]))
    assert sizes[0] == len(texts)


def test_pseudo_label_errors(trained):
    with pytest.raises(ValueError):
        pseudo_label(trained[0], ["x"], 1.2)
    assert pseudo_label(trained[0], [], 0.5) == []


def test_train_with_pseudo_sizes(english):
    labeled = keyword_corpus(per_class=200, seed=1)
    unlabeled = [t for t, _ in keyword_corpus(per_class=50, seed=2)]
    cfg = small_cfg(epochs=1)
    _, history = train_with_pseudo(labeled, unlabeled, cfg, english)
    assert history.phase_sizes == [800, 1000]
    assert len(history.loss) == 2


def test_train_with_pseudo_counts_accepted(english):
    labeled = keyword_corpus(per_class=30, seed=1)
    unlabeled = [t for t, _ in keyword_corpus(per_class=20, seed=2)]
    phase1, _ = train(labeled, small_cfg(epochs=2), english)
    _, probs = predict_batch(phase1, [featurize(t, phase1.features) for t in unlabeled])
    threshold = float(np.median(probs.max(axis=1)))
    cfg = small_cfg(epochs=2, pseudo_threshold=threshold)
    k = len(pseudo_label(phase1, unlabeled, threshold))
    assert 0 < k < len(unlabeled)
    _, history = train_with_pseudo(labeled, unlabeled, cfg, english)
    assert history.phase_sizes == [120, 120 + k]


def test_train_with_pseudo_empty_pool_equals_train(corpus, english, trained):
    params, history = train_with_pseudo(corpus, [], small_cfg(), english)
    assert model_to_bytes(params) == model_to_bytes(trained[0])
    assert history.loss[5:] == trained[1].loss


# -- config ----------------------------------------------------------------------------


def test_parse_config_lines():
    raw = parse_config_lines(["# comment", "", "epochs = 3", "loss.kind=focal",
                              "features.dim = 512", "lr = 0.01", "labels = a, b"])
    cfg = apply_overrides(TrainConfig(), raw)
    assert cfg.epochs == 3 and cfg.learning_rate == 0.01
    assert cfg.loss.kind.value == "focal"
    assert cfg.features.feature_dim == 512
    assert cfg.labels == ("a", "b")


@pytest.mark.parametrize("lines", [["nonsense"], ["colour = red"], ["epochs = many"],
                                   ["epochs = 0"], ["loss.use_class_weights = maybe"]])
def test_config_errors(lines):
    with pytest.raises(ConfigError):
        apply_overrides(TrainConfig(), parse_config_lines(lines))


def test_load_config_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("﻿head = dot\nloss.use_class_weights = false\n", encoding="utf-8")
    cfg = apply_overrides(TrainConfig(), load_config_file(path))
    assert cfg.head == "dot" and not cfg.loss.use_class_weights
