from dataclasses import dataclass
from typing import Callable, Protocol, Tuple

import numpy as np

from app.core.exceptions import DimensionError
from app.models.metric import ChartDomain, MetricField

BoundaryField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class CollarData:
    """Two Fermi charts sharing the slice x^n = 0: g0 on x^n >= 0, g1 on x^n <= 0."""

    g0: MetricField
    g1: MetricField
    width: float

    def __post_init__(self):
        if self.g0.n != self.g1.n:
            raise DimensionError("both sides of the collar need the same dimension")
        if self.width <= 0.0:
            raise ValueError(f"collar width must be positive, got {self.width}")

    @property
    def n(self) -> int:
        return self.g0.n

    @property
    def domain(self) -> ChartDomain:
        return self.g0.domain

    def boundary_point(self, tangential) -> np.ndarray:
        return self.domain.point(tangential, 0.0)

    def boundary_samples(self, count: int) -> np.ndarray:
        return self.domain.tangential_samples(count)

    def replace(self, g0: MetricField = None, g1: MetricField = None, width: float = None) -> "CollarData":
        return CollarData(
            g0=self.g0 if g0 is None else g0,
            g1=self.g1 if g1 is None else g1,
            width=self.width if width is None else width,
        )


class ExtendedOperator(Protocol):
    def operator(self, x: np.ndarray) -> np.ndarray: ...

    def operator_jet(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]: ...

    def form_jet(self, x: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]: ...


@dataclass(frozen=True, eq=False)
class SecondFF:
    """
    Second fundamental forms of the interface as n x n forms whose last row and
    column vanish. `extended` is the normal-parallel extension of the combined
    shape operator into the g0 side.
    """

    L0: BoundaryField
    L1: BoundaryField
    extended: ExtendedOperator

    def L(self, tangential: np.ndarray) -> np.ndarray:
        return self.L0(tangential) + self.L1(tangential)


@dataclass(frozen=True, eq=False)
class FermiChart:
    metric: MetricField
    width: float
    requested_width: float
    min_jacobian_ratio: float

    @property
    def shrunk(self) -> bool:
        return self.width < self.requested_width
