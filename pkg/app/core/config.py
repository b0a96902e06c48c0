"""
Configuration settings for the curvature gluing toolkit.
"""

import json
from typing import List

from pydantic import field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    PROJECT_NAME: str = "Curvature Gluing Toolkit"
    VERSION: str = "1.0.0"

    ENVIRONMENT: str = "development"  # development, ci, production
    LOG_LEVEL: str = "INFO"

    # Sweep execution
    SWEEP_THREADS: int = 0  # 0 = one worker per CPU
    DEFAULT_SEED: int = 42
    SCENARIO_DIRS: str = '["config/scenarios"]'

    # Finite differences
    FD_STEP: float = 1e-4
    FD_RICHARDSON: bool = False

    # Frame minimisation (isotropic and flag curvature)
    FRAME_RESTARTS: int = 512
    FRAME_REFINE: int = 4
    FRAME_ITERATIONS: int = 60

    # Certification sampling
    SAMPLE_TANGENTIAL: int = 2
    SAMPLE_NORMAL: int = 16
    C_MARGIN: float = 1.0
    PSD_SLACK: float = 1e-10
    TREND_TOLERANCE: float = 1e-6
    BLEND_WIDTH: float = 0.05

    model_config = SettingsConfigDict(
        case_sensitive=True, env_file=".env", extra="allow"
    )

    @field_validator("ENVIRONMENT")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        allowed_environments = {"development", "ci", "production"}
        if v not in allowed_environments:
            raise ValueError(f"ENVIRONMENT must be one of: {allowed_environments}")
        return v

    @field_validator("SWEEP_THREADS")
    @classmethod
    def validate_threads(cls, v: int) -> int:
        if v < 0:
            raise ValueError("SWEEP_THREADS must be 0 (auto) or a positive integer")
        return v

    @field_validator("FD_STEP", "C_MARGIN", "TREND_TOLERANCE")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("value must be positive")
        return v

    @field_validator("BLEND_WIDTH")
    @classmethod
    def validate_blend(cls, v: float) -> float:
        if not 0 < v < 0.5:
            raise ValueError("BLEND_WIDTH must lie in (0, 0.5)")
        return v

    def scenario_dirs(self) -> List[str]:
        """Decode SCENARIO_DIRS (JSON list or a single path)."""
        try:
            dirs = json.loads(self.SCENARIO_DIRS)
        except (json.JSONDecodeError, TypeError):
            return [self.SCENARIO_DIRS]
        if isinstance(dirs, str):
            return [dirs]
        return list(dirs)

    def is_production(self) -> bool:
        return self.ENVIRONMENT == "production"


settings = Settings()
