"""
Application configuration using pydantic-settings.
"""
from functools import lru_cache

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Library and CLI settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="CSPCR_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
    )

    # Application
    app_name: str = "cspcr"
    app_version: str = "0.1.0"
    debug: bool = False
    log_level: str = "WARNING"

    # Test defaults
    default_k: int = 50
    default_l: int = 3
    default_alpha: float = 0.05
    default_seed: int = 0

    # Density ratios
    ratio_clamp_min: float = 1e-12
    ratio_clamp_max: float = 1e12

    # Generalized chi-squared
    eigen_clip_rel: float = 1e-10
    quantile_tol: float = 1e-8
    quantile_span_sds: float = 20.0
    mc_draws: int = 1_000_000
    mc_chunk: int = 100_000

    # Elastic net
    enet_mixing: float = 0.5
    enet_n_lambdas: int = 100
    enet_lambda_min_ratio: float = 1e-4
    enet_folds: int = 5
    enet_tol: float = 1e-7
    enet_max_sweeps: int = 100_000
    enet_variance_floor: float = 1e-8

    # Logistic classifier
    logistic_jitter: float = 1e-8
    logistic_tol: float = 1e-9
    logistic_max_iter: int = 200

    # Test engine
    gamma_variance_floor: float = 1e-12
    is_resample_fraction: float = 0.2

    # Simulation
    threads: int = 1
    mc_reps: int = 1000


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()
