from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    RUN_LOG_NAME: str = "run.log"

    # Reproducibility
    DEFAULT_SEED: int = 0
    DEFAULT_THREADS: int = 1

    # Artifacts
    TENSOR_SUFFIX: str = ".ndt"
    MODEL_SUFFIX: str = ".ndpm"
    MANIFEST_NAME: str = "manifest.csv"

    # Numerics
    GEOMETRY_TOLERANCE: float = 1e-9
    ASPECT_TOLERANCE: float = 1e-6
    BOUND_FLOOR: float = 1e-6  # smallest layer bound A_l used by degree reduction

    class Config:
        env_file = ".env"
        env_prefix = "VOTCSW_"
        case_sensitive = True
        extra = "ignore"


settings = Settings()
