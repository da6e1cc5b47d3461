import pytest

from tenk.pipeline import load_config, run_stage
from tenk.synthetic import build_corpus

PIPELINE_STAGES = ("parse", "summarize", "label", "dataset",
                   "train", "predict", "evaluate", "report")


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return build_corpus(root, seed=7)


@pytest.fixture(scope="session")
def ran_pipeline(corpus):
    """Config after one full offline pipeline run over the corpus."""
    config = load_config(corpus.config_path)
    for stage in PIPELINE_STAGES:
        run_stage(stage, config)
    return config
