"""
Pytest fixtures and configuration.
"""
import logging

import numpy as np
import pytest

from cspcr.core import dependencies
from cspcr.core.config import Settings
from cspcr.models.enums import Population
from cspcr.schemas.dataset import SourceDataset, UnlabeledPool
from cspcr.schemas.simulation import DgpParams
from cspcr.services.simulation_service import SimulationService


@pytest.fixture
def settings() -> Settings:
    """Settings without .env lookups; short lambda grid keeps fits fast."""
    return Settings(_env_file=None, enet_n_lambdas=20)


@pytest.fixture(autouse=True)
def reset_logging():
    """Drop handlers the CLI attached so later tests see a clean `cspcr` logger."""
    yield
    logger = logging.getLogger("cspcr")
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)


# ============== Services ==============


@pytest.fixture
def dataset_service():
    return dependencies.get_dataset_service()


@pytest.fixture
def gchisq_service(settings):
    return dependencies.get_gchisq_service(settings)


@pytest.fixture
def elastic_net_service(settings):
    return dependencies.get_elastic_net_service(settings)


@pytest.fixture
def classifier_service(settings):
    return dependencies.get_classifier_service(settings)


@pytest.fixture
def weighting_service(settings):
    return dependencies.get_weighting_service(settings)


@pytest.fixture
def ratio_service(settings):
    return dependencies.get_ratio_service(settings)


@pytest.fixture
def engine(settings):
    return dependencies.get_engine(settings)


@pytest.fixture
def simulation_service(settings):
    return dependencies.get_simulation_service(settings)


@pytest.fixture
def file_service():
    return dependencies.get_file_service()


@pytest.fixture
def preset_service():
    return dependencies.get_preset_service()


# ============== Data ==============


@pytest.fixture
def small_params() -> DgpParams:
    """Low-dimensional simulation design: 3 relevant and 2 null confounders."""
    return DgpParams(p=3, q=2, n_labeled=80, n_pool=300)


@pytest.fixture
def source_dataset(small_params) -> SourceDataset:
    return SimulationService.gen_samples(
        small_params, Population.SOURCE, small_params.n_labeled, np.random.default_rng(1)
    )


@pytest.fixture
def source_pool(small_params) -> UnlabeledPool:
    return SimulationService.gen_samples(
        small_params, Population.SOURCE, small_params.n_pool, np.random.default_rng(2), labeled=False
    )


@pytest.fixture
def target_pool(small_params) -> UnlabeledPool:
    return SimulationService.gen_samples(
        small_params, Population.TARGET, small_params.n_pool, np.random.default_rng(3), labeled=False
    )


@pytest.fixture
def sampler(small_params):
    return SimulationService.dgp_sampler(small_params)


@pytest.fixture
def make_dataset():
    """Build a dataset from plain lists."""

    def _make(y, x, z=None, v=None) -> SourceDataset:
        n = len(y)
        return SourceDataset(
            y=y,
            x=x,
            z=np.zeros((n, 1)) if z is None else z,
            v=np.zeros((n, 1)) if v is None else v,
        )

    return _make
