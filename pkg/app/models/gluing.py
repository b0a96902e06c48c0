from dataclasses import dataclass

import numpy as np

from app.models.collar import CollarData, SecondFF
from app.models.lambda2 import Lambda2Form
from app.models.metric import MetricField
from app.models.profile import BumpProfile


@dataclass(frozen=True, eq=False)
class ModifiedMetric:
    """
    g_delta = g0 + 2 F(x^n) L - 2 C FF(x^n) P^T on the g0 side of the collar.

    `field` carries the analytic jet; beyond x^n = delta only the frozen
    -2 C FF(delta) P^T term differs from g0.
    """

    collar: CollarData
    profile: BumpProfile
    C: float
    forms: SecondFF
    field: MetricField

    @property
    def delta(self) -> float:
        return self.profile.delta


@dataclass(frozen=True, eq=False)
class GluedMetric:
    """Two-sided metric: g_delta for x^n >= 0, g1 for x^n < 0."""

    modified: ModifiedMetric
    field: MetricField

    @property
    def collar(self) -> CollarData:
        return self.modified.collar

    @property
    def delta(self) -> float:
        return self.modified.delta

    def side(self, x) -> str:
        return "M0" if float(np.asarray(x, dtype=float)[-1]) >= 0.0 else "M1"


@dataclass(frozen=True, eq=False)
class DecompositionTerms:
    """Curvature pieces of g_delta at one point, all against the gram of g0."""

    R: Lambda2Form
    A: Lambda2Form
    B: Lambda2Form
    Lcal: Lambda2Form
    L2: Lambda2Form
    Ihat: Lambda2Form
    f: float
    df: float

    def combine(self, C: float) -> Lambda2Form:
        f, df = self.f, self.df
        return (
            self.R
            - self.A * (f * f)
            + self.B * f
            - self.Lcal * (2.0 * df)
            + self.L2 * (2.0 * f * f)
            + self.Ihat * (2.0 * C * f)
        )
