import pytest

from segmark.corpus import split_corpus
from segmark.model import ModelConfig, TrainConfig, train_model
from segmark.synth import generate_corpus


@pytest.fixture(scope="session")
def tiny_corpus():
    return generate_corpus(60, seed=5)


@pytest.fixture(scope="session")
def tiny_trained(tiny_corpus):
    """A small trained bundle shared across service/export/CLI tests."""
    tr, va, te = split_corpus(tiny_corpus, ratios=(0.7, 0.15, 0.15), seed=5)
    cfg = TrainConfig(epochs=1, batch_size=8, lr_ladder=(3e-4, 1e-3, 1e-3, 1e-2))
    trained, _ = train_model(tr, va, cfg, ModelConfig(gate_internal=True), seed=0)
    return trained


@pytest.fixture(scope="session")
def tiny_split(tiny_corpus):
    return split_corpus(tiny_corpus, ratios=(0.7, 0.15, 0.15), seed=5)
