import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from brailletk import kb as kb_mod, pipeline
from brailletk.data import default_paths


@pytest.fixture(scope="session")
def paths():
    return default_paths()


@pytest.fixture(scope="session")
def kc(paths):
    kb = kb_mod.load(paths["zh_prior"], "zh")
    kb.load_attributes(paths["attributes"])
    kb.load_words(paths["words"])
    return kb


@pytest.fixture(scope="session")
def ke(paths):
    return kb_mod.load(paths["en_prior"], "en")


@pytest.fixture(scope="session")
def rules(paths):
    return pipeline.RuleSet.load(paths["math_rules"])


@pytest.fixture(scope="session")
def golden_corpus(paths):
    return pipeline.load_corpus(paths["golden_corpus"])
