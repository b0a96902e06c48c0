from typing import List, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from app.models.functional import FUNCTIONAL_KINDS

AUTO = "auto"


def _strictly_decreasing(values: List[float], name: str) -> List[float]:
    if not values:
        raise ValueError(f"{name} ladder must not be empty")
    if any(v <= 0.0 for v in values):
        raise ValueError(f"{name} ladder must be positive")
    if any(b >= a for a, b in zip(values, values[1:])):
        raise ValueError(f"{name} ladder must be strictly decreasing")
    return values


# Run schemas
class RunSpec(BaseModel):
    """One certification run as requested on the command line."""

    scenario: Optional[str] = None
    config_path: Optional[str] = None
    functional: str = "operator"
    kappa: Optional[float] = None
    deltas: List[float] = Field(default_factory=lambda: [0.4, 0.2, 0.1])
    hs: Union[str, List[float]] = AUTO
    C: Union[str, float] = AUTO
    output: Optional[str] = None
    seed: int = 42
    phi_slope: Optional[float] = None
    phi_width: Optional[float] = None
    mollifier_mode: str = "normal-only"
    timings: bool = False

    @field_validator("functional")
    @classmethod
    def validate_functional(cls, v: str) -> str:
        if v not in FUNCTIONAL_KINDS:
            raise ValueError(f"functional must be one of {FUNCTIONAL_KINDS}")
        return v

    @field_validator("deltas")
    @classmethod
    def validate_deltas(cls, v: List[float]) -> List[float]:
        return _strictly_decreasing(v, "delta")

    @field_validator("hs")
    @classmethod
    def validate_hs(cls, v: Union[str, List[float]]) -> Union[str, List[float]]:
        if isinstance(v, str):
            if v != AUTO:
                raise ValueError("hs must be 'auto' or a list of radii")
            return v
        return _strictly_decreasing(v, "h")

    @field_validator("C")
    @classmethod
    def validate_C(cls, v: Union[str, float]) -> Union[str, float]:
        if isinstance(v, str):
            if v != AUTO:
                raise ValueError("C must be 'auto' or a non-negative number")
            return v
        if v < 0.0:
            raise ValueError("C must be non-negative")
        return v

    @field_validator("phi_slope")
    @classmethod
    def validate_phi_slope(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and v > 0.0:
            raise ValueError("phi slope must be non-positive")
        return v

    @field_validator("mollifier_mode")
    @classmethod
    def validate_mode(cls, v: str) -> str:
        if v not in ("normal-only", "full"):
            raise ValueError("mollifier mode must be 'normal-only' or 'full'")
        return v

    @model_validator(mode="after")
    def validate_source(self) -> "RunSpec":
        if (self.scenario is None) == (self.config_path is None):
            raise ValueError("give exactly one of a scenario name or a config path")
        return self

    def h_ladder(self) -> List[Union[str, float]]:
        """One auto radius per delta (delta/8), or the explicit radii for every delta."""
        return [AUTO] if self.hs == AUTO else list(self.hs)
