from typing import Dict, List, Optional

from pydantic import BaseModel, Field


# Profile schemas
class ProfileCertificate(BaseModel):
    delta: float
    blend_width: float
    amplitude: float
    violations: Dict[str, float]
    sup_F: float
    F_at_ramp_end: float
    F_peak: float
    sup_FF: float
    amplitude_below_delta_cubed: bool
    tolerance: float = 1e-10

    @property
    def passed(self) -> bool:
        return all(value <= self.tolerance for value in self.violations.values())


# Gluing schemas
class RegularityReport(BaseModel):
    delta: float
    metric_jump: float
    normal_derivative_jump: float
    samples: int


class BoundarySlack(BaseModel):
    point: List[float]
    min_slack: float
    identity_residual: float


class BoundaryReport(BaseModel):
    kappa: float
    min_slack: float
    identity_residual: float
    samples: List[BoundarySlack] = Field(default_factory=list)


class ConnectionDefects(BaseModel):
    point: List[float]
    normal_geodesic: float  # |nabla_N N| of the modified metric
    shape_operator: float  # |nabla^delta_X N - (nabla_X N + f L X)|


class PerturbationReport(BaseModel):
    slope: float
    width: float
    trace_before: float
    trace_after: float
    observed_increment: float
    predicted_full_trace: float  # -(n/2) slope
    predicted_tangential_trace: float  # -((n-1)/2) slope
    scalar_deviation: float


# Smoothing schemas
class SmoothingReport(BaseModel):
    delta: float
    h: float
    kappa: float
    worst_slack: float
    argmin: List[float]
    sup_distance: float


# Certification schemas
class SweepRow(BaseModel):
    scenario: str
    functional: str
    kappa: float
    delta: float
    h: float  # 0 marks the unsmoothed (almost everywhere) row
    C: float
    eps_observed: float
    sup_dist: float
    decomp_residual: Optional[float] = None
    wall_ms: float = 0.0


class SweepResult(BaseModel):
    scenario: str
    functional: str
    kappa: float
    side_floor: float  # sampled minimum over the unmodified g0 and g1
    rows: List[SweepRow]
    m1_minimum: float
    passed: bool
    reasons: List[str] = Field(default_factory=list)


# Scenario schemas
class ScenarioSummary(BaseModel):
    name: str
    n: int
    width: float
    kappa: Dict[str, float]
    L_spectrum: List[float]
    smooth: bool
    source: str = "builtin"
