# conftest.py
import sys
from pathlib import Path

import pytest

# Add the project root to sys.path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from src.coordinator.coordinator import initialize  # noqa: E402
from src.model_domain.model import GlobalModel, ModelConfig  # noqa: E402
from src.permutation_engine.permutations import PermutationBundle  # noqa: E402

# Worked examples: P=15, B=3, N=8 for Case1 and P=12, B=3, N=10 for Case2.
CASE1_WITHIN = ((2, 1, 4, 5, 3), (3, 5, 2, 4, 1), (5, 2, 3, 1, 4))
CASE2_WITHIN = ((2, 4, 3, 1), (1, 3, 2, 4), (3, 1, 4, 2))
CASE2_SEGMENTWISE = (2, 3, 1)


@pytest.fixture
def case1_config() -> ModelConfig:
    return ModelConfig.from_counts(P=15, B=3, N=8, upload_count=4, download_count=4, case="case1")


@pytest.fixture
def case1_bundle() -> PermutationBundle:
    return PermutationBundle(within=CASE1_WITHIN)


@pytest.fixture
def case2_config() -> ModelConfig:
    return ModelConfig.from_counts(P=12, B=3, N=10, upload_count=3, download_count=3, case="case2")


@pytest.fixture
def case2_bundle() -> PermutationBundle:
    return PermutationBundle(within=CASE2_WITHIN, segmentwise=CASE2_SEGMENTWISE)


@pytest.fixture
def tiny_config() -> ModelConfig:
    """P=4, B=2, ell=1 over F_31."""
    return ModelConfig.from_counts(P=4, B=2, N=4, upload_count=2, download_count=2, case="case1", q=31)


@pytest.fixture
def case1_setup(case1_config, case1_bundle):
    model = GlobalModel.random(case1_config, seed=7)
    return model, initialize(case1_config, model, seed=11, bundle=case1_bundle)


@pytest.fixture
def case2_setup(case2_config, case2_bundle):
    model = GlobalModel.random(case2_config, seed=7)
    return model, initialize(case2_config, model, seed=11, bundle=case2_bundle)
