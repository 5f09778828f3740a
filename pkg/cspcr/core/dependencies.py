"""
Service factories wiring the package from Settings.
"""
from cspcr.core.config import Settings, get_settings
from cspcr.services.classifier_service import ClassifierService
from cspcr.services.dataset_service import DatasetService
from cspcr.services.elastic_net_service import ElasticNetService
from cspcr.services.engine_service import IndependenceTestEngine
from cspcr.services.file_service import FileService
from cspcr.services.gchisq_service import GChiSqService
from cspcr.services.preset_service import PresetService
from cspcr.services.randomization_service import RandomizationService
from cspcr.services.ratio_service import RatioService
from cspcr.services.simulation_service import SimulationService
from cspcr.services.weighting_service import WeightingService

# ============== Leaf Services ==============


def get_dataset_service() -> DatasetService:
    return DatasetService()


def get_gchisq_service(settings: Settings | None = None) -> GChiSqService:
    return GChiSqService(settings or get_settings())


def get_elastic_net_service(settings: Settings | None = None) -> ElasticNetService:
    return ElasticNetService(settings or get_settings())


def get_classifier_service(settings: Settings | None = None) -> ClassifierService:
    return ClassifierService(settings or get_settings())


def get_weighting_service(settings: Settings | None = None) -> WeightingService:
    return WeightingService(settings or get_settings())


def get_file_service() -> FileService:
    return FileService(get_dataset_service())


def get_preset_service() -> PresetService:
    return PresetService()


# ============== Composite Services ==============


def get_ratio_service(settings: Settings | None = None) -> RatioService:
    settings = settings or get_settings()
    return RatioService(
        settings,
        get_elastic_net_service(settings),
        get_classifier_service(settings),
    )


def get_engine(settings: Settings | None = None) -> IndependenceTestEngine:
    settings = settings or get_settings()
    return IndependenceTestEngine(
        settings,
        get_dataset_service(),
        RandomizationService(),
        get_weighting_service(settings),
        get_gchisq_service(settings),
    )


def get_simulation_service(settings: Settings | None = None) -> SimulationService:
    settings = settings or get_settings()
    return SimulationService(settings, get_ratio_service(settings), get_engine(settings))
