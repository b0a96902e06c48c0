from dataclasses import dataclass

from app.models.gluing import GluedMetric
from app.models.metric import MetricField

MODES = ("normal-only", "full")


@dataclass(frozen=True)
class MollifierConfig:
    h: float
    mode: str = "normal-only"
    nodes: int = 12  # Gauss-Legendre nodes per smooth piece
    tangential_nodes: int = 6

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError(f"smoothing radius must be positive, got {self.h}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mollifier mode {self.mode!r}")


@dataclass(frozen=True, eq=False)
class SmoothedMetric:
    field: MetricField
    glued: GluedMetric
    config: MollifierConfig
    inner_radius: float
    outer_radius: float

    @property
    def delta(self) -> float:
        return self.glued.delta

    @property
    def h(self) -> float:
        return self.config.h
