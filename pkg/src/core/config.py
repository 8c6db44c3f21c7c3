"""
Configuration management for rankprover
"""

from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field
from typing import Optional


class Settings(BaseSettings):
    """Application settings with environment variable support"""

    model_config = SettingsConfigDict(
        env_prefix="RANKPROVER_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "rankprover"
    app_version: str = "1.0.0"

    # Statement limits
    max_points: int = Field(default=25, ge=1, le=30, description="Largest accepted point universe")
    default_dimension: int = Field(default=3, ge=2, description="Dimension when neither file nor flag sets one")

    # Saturation settings
    strategy: str = Field(default="worklist", pattern="^(full|worklist)$")
    max_passes: Optional[int] = Field(default=None, gt=0)
    max_seconds: Optional[float] = Field(default=None, gt=0)
    chunk_size: int = Field(default=1 << 18, gt=0, description="Pair block size of vectorised rule sweeps")

    # Countermodel search
    refute_budget: int = Field(default=1_000_000, gt=0)
    refute_seed: int = Field(default=0)
    refute_workers: int = Field(default=1, ge=1)

    # Certificates
    certificate_format_version: int = 1

    # Monitoring settings
    log_level: str = Field(default="WARNING")
    log_json: bool = Field(default=False)
    enable_metrics: bool = Field(default=True)


# Global settings instance
settings = Settings()
