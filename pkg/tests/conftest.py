import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ukcm.family import CORPUS, corpus_family  # noqa: E402


@pytest.fixture(scope="session")
def families():
    return {name: corpus_family(name) for name in CORPUS}


@pytest.fixture(scope="session")
def iso(families):
    return families["fig1g"]
