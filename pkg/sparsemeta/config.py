from pydantic_settings import BaseSettings, SettingsConfigDict
from functools import lru_cache
import logging


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        env_prefix="SPARSEMETA_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "sparsemeta"
    app_version: str = "1.0.0"

    # Logging
    log_level: str = "INFO"
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Runs
    default_output_dir: str = "runs"
    workers: int = 1  # threads for inner adaptations and evaluation episodes

    @property
    def log_level_value(self) -> int:
        return getattr(logging, self.log_level.upper(), logging.INFO)


@lru_cache()
def get_settings() -> Settings:
    return Settings()


settings = get_settings()
