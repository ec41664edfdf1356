import numpy as np
import pytest

from cmifl.model import FeatureConfig, ModelParams
from cmifl.rng import SplitMix64
from cmifl.textlang import Dictionary


@pytest.fixture(scope="session")
def english():
    return Dictionary.default()


@pytest.fixture
def small_features():
    return FeatureConfig(n_min=1, n_max=3, feature_dim=256)


def make_params(head, seed=0, emb_dim=8, n_classes=4, feature_dim=256, scale=1.0):
    rng = SplitMix64(seed)
    feats = FeatureConfig(n_min=1, n_max=3, feature_dim=feature_dim)
    params = ModelParams.initialize(
        [f"c{i}" for i in range(n_classes)], head=head, emb_dim=emb_dim,
        features=feats, scale=scale, rng=rng,
    )
    if head == "dot":
        params.b[:] = np.random.default_rng(seed).normal(0, 0.1, n_classes)
    return params


@pytest.fixture
def params_factory():
    return make_params


def pytest_terminal_summary(terminalreporter):
    from acceptance_report import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
