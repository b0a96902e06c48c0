from typing import Any, Dict, List, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.functional import FUNCTIONAL_KINDS


# Config document schemas
class ScenarioDocument(BaseModel):
    """A parsed scenario config; coefficient entries hold expression trees keyed by 1-based (i, j), i <= j."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    name: str
    n: int
    width: float = 0.5
    box: List[Tuple[float, float]]
    kappa: Dict[str, float] = Field(default_factory=dict)
    L_spectrum: List[float] = Field(default_factory=list)
    smooth: bool = False
    g0: Dict[Tuple[int, int], Any] = Field(default_factory=dict)
    g1: Dict[Tuple[int, int], Any] = Field(default_factory=dict)
    source: str = "config"

    @field_validator("n")
    @classmethod
    def validate_n(cls, v: int) -> int:
        if v < 2:
            raise ValueError("n must be at least 2")
        return v

    @field_validator("width")
    @classmethod
    def validate_width(cls, v: float) -> float:
        if v <= 0.0:
            raise ValueError("width must be positive")
        return v

    @field_validator("kappa")
    @classmethod
    def validate_kappa(cls, v: Dict[str, float]) -> Dict[str, float]:
        unknown = sorted(set(v) - set(FUNCTIONAL_KINDS))
        if unknown:
            raise ValueError(f"unknown functional kinds {unknown}")
        return v

    @model_validator(mode="after")
    def validate_shape(self) -> "ScenarioDocument":
        if len(self.box) != self.n:
            raise ValueError(f"box has {len(self.box)} intervals for n = {self.n}")
        if any(hi <= lo for lo, hi in self.box):
            raise ValueError("every box interval needs lo < hi")
        for side in (self.g0, self.g1):
            for i, j in side:
                if not 1 <= i <= j <= self.n:
                    raise ValueError(f"entry [{i}][{j}] is outside a {self.n} x {self.n} metric")
        return self
