import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import demoplan
from demoplan.learning import build_library
from demoplan.planner import derive_costs, ground
from demoplan.segmentation import DEFAULT_RULES
from demoplan.synth import corpus, planning_objects

FIXTURE_PATH = Path(demoplan.__file__).parent / "data" / "put_fixture.json"


@pytest.fixture(scope="session")
def corpus_demos():
    return corpus()


@pytest.fixture(scope="session")
def corpus_library(corpus_demos):
    # Session-scoped and therefore shared: tests must not merge into it.
    return build_library([d.trace for d in corpus_demos], DEFAULT_RULES)


@pytest.fixture(scope="session")
def corpus_actions(corpus_library):
    return ground(corpus_library, planning_objects(), derive_costs(corpus_library))


@pytest.fixture
def fixture_path():
    assert FIXTURE_PATH.is_file()
    return FIXTURE_PATH
