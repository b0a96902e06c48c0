from app.schemas.report import (
    BoundaryReport, ConnectionDefects, PerturbationReport, ProfileCertificate,
    RegularityReport, ScenarioSummary, SmoothingReport, SweepResult, SweepRow
)
from app.schemas.run import RunSpec
from app.schemas.scenario import ScenarioDocument
