"""
Metric coefficient fields on a coordinate box.

The last axis is the signed distance x^n to the interface. Derivatives are
supplied either by analytic callbacks or by central finite differences:

    first(x)[k, i, j]     = d_k g_ij
    second(x)[k, l, i, j] = d_k d_l g_ij
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import DimensionError, FermiFormError, StencilClearanceError

Coefficients = Callable[[np.ndarray], np.ndarray]
Jet = Tuple[np.ndarray, np.ndarray, np.ndarray]


@dataclass(frozen=True)
class ChartDomain:
    n: int
    box: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        if self.n < 2:
            raise DimensionError(f"chart dimension must be at least 2, got {self.n}")
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if len(box) != self.n:
            raise DimensionError(f"box has {len(box)} axes for a chart of dimension {self.n}")
        if any(hi <= lo for lo, hi in box):
            raise DimensionError(f"empty box {box}")
        object.__setattr__(self, "box", box)

    @property
    def tangential_box(self) -> Tuple[Tuple[float, float], ...]:
        return self.box[:-1]

    @property
    def normal_range(self) -> Tuple[float, float]:
        return self.box[-1]

    def contains(self, x: Sequence[float], reach: float = 0.0) -> bool:
        return all(lo + reach <= xi <= hi - reach for xi, (lo, hi) in zip(x, self.box))

    def tangential_samples(self, count: int) -> np.ndarray:
        """Tensor grid of interior points at fractions (k+1)/(count+1) of each tangential axis."""
        axes = [
            lo + (hi - lo) * (np.arange(count) + 1.0) / (count + 1.0)
            for lo, hi in self.tangential_box
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def point(self, tangential: Sequence[float], t: float) -> np.ndarray:
        return np.append(np.asarray(tangential, dtype=float), float(t))


@dataclass(frozen=True)
class FiniteDifferenceConfig:
    step: float = 1e-4
    richardson: bool = False

    @property
    def reach(self) -> float:
        return self.step


@dataclass(frozen=True)
class DifferentiationReport:
    step: float
    first_error: float
    second_error: float


@dataclass(frozen=True, eq=False)
class MetricField:
    domain: ChartDomain
    coeff: Coefficients
    d1: Optional[Coefficients] = None
    d2: Optional[Coefficients] = None
    fd: FiniteDifferenceConfig = field(default_factory=FiniteDifferenceConfig)
    fermi: bool = False
    label: str = "g"
    jet_cb: Optional[Callable[[np.ndarray], Jet]] = None

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def analytic(self) -> bool:
        return self.d1 is not None and self.d2 is not None

    def value(self, x: Sequence[float]) -> np.ndarray:
        return np.asarray(self.coeff(np.asarray(x, dtype=float)), dtype=float)

    def first(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.d1 is not None:
            return np.asarray(self.d1(x), dtype=float)
        self._check_clearance(x)
        if not self.fd.richardson:
            return self._fd_first(x, self.fd.step)
        coarse = self._fd_first(x, self.fd.step)
        fine = self._fd_first(x, 0.5 * self.fd.step)
        return (4.0 * fine - coarse) / 3.0

    def second(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.d2 is not None:
            return np.asarray(self.d2(x), dtype=float)
        self._check_clearance(x)
        if not self.fd.richardson:
            return self._fd_second(x, self.fd.step)
        coarse = self._fd_second(x, self.fd.step)
        fine = self._fd_second(x, 0.5 * self.fd.step)
        return (4.0 * fine - coarse) / 3.0

    def jet(self, x: Sequence[float]) -> Jet:
        if self.jet_cb is not None:
            return self.jet_cb(np.asarray(x, dtype=float))
        return self.value(x), self.first(x), self.second(x)

    def differentiation_report(self, x: Sequence[float]) -> DifferentiationReport:
        """Estimate truncation error by comparing steps h and h/2."""
        x = np.asarray(x, dtype=float)
        self._check_clearance(x)
        h = self.fd.step
        first_error = np.max(np.abs(self._fd_first(x, h) - self._fd_first(x, 0.5 * h)))
        second_error = np.max(np.abs(self._fd_second(x, h) - self._fd_second(x, 0.5 * h)))
        return DifferentiationReport(step=h, first_error=float(first_error), second_error=float(second_error))

    def fermi_defect(self, x: Sequence[float]) -> float:
        g = self.value(x)
        return float(np.max(np.abs(g[-1, :] - np.eye(self.n)[-1])))

    def check_fermi(self, x: Sequence[float], tolerance: float = 1e-12) -> None:
        defect = self.fermi_defect(x)
        if defect > tolerance:
            raise FermiFormError(
                f"{self.label} is not in Fermi form at {list(x)}: g_in defect {defect:.3e}"
            )

    @classmethod
    def from_jet(
        cls,
        domain: ChartDomain,
        coeff: Coefficients,
        jet_cb: Callable[[np.ndarray], Jet],
        fermi: bool = True,
        label: str = "g",
    ) -> "MetricField":
        """Field whose derivatives all come from one jet callback."""
        return cls(
            domain,
            coeff,
            d1=lambda x: jet_cb(x)[1],
            d2=lambda x: jet_cb(x)[2],
            fermi=fermi,
            label=label,
            jet_cb=jet_cb,
        )

    def with_supply(self, fd: FiniteDifferenceConfig) -> "MetricField":
        return MetricField(self.domain, self.coeff, None, None, fd, self.fermi, self.label)

    def _check_clearance(self, x: np.ndarray) -> None:
        reach = self.fd.reach
        if not self.domain.contains(x, reach):
            raise StencilClearanceError(x, reach)

    def _fd_first(self, x: np.ndarray, h: float) -> np.ndarray:
        n = self.n
        out = np.empty((n, n, n))
        for k in range(n):
            e = np.zeros(n)
            e[k] = h
            out[k] = (self.value(x + e) - self.value(x - e)) / (2.0 * h)
        return out

    def _fd_second(self, x: np.ndarray, h: float) -> np.ndarray:
        n = self.n
        out = np.empty((n, n, n, n))
        center = self.value(x)
        for k in range(n):
            ek = np.zeros(n)
            ek[k] = h
            out[k, k] = (self.value(x + ek) - 2.0 * center + self.value(x - ek)) / (h * h)
            for l in range(k + 1, n):
                el = np.zeros(n)
                el[l] = h
                mixed = (
                    self.value(x + ek + el)
                    - self.value(x + ek - el)
                    - self.value(x - ek + el)
                    + self.value(x - ek - el)
                ) / (4.0 * h * h)
                out[k, l] = mixed
                out[l, k] = mixed
        return out


@dataclass(frozen=True)
class AxisFactor:
    """A univariate factor f(x_axis) with its first two derivatives."""

    axis: int
    f: Callable[[float], float]
    df: Callable[[float], float]
    ddf: Callable[[float], float]


def diagonal_metric(
    domain: ChartDomain,
    entries: Sequence[Sequence[AxisFactor]],
    fermi: bool = True,
    label: str = "g",
) -> MetricField:
    """Diagonal metric whose entries are products of univariate factors (empty = 1)."""
    n = domain.n
    if len(entries) != n:
        raise DimensionError(f"expected {n} diagonal entries, got {len(entries)}")

    def jet_entry(factors: Sequence[AxisFactor], x: np.ndarray):
        values = [fac.f(x[fac.axis]) for fac in factors]
        firsts = [fac.df(x[fac.axis]) for fac in factors]
        seconds = [fac.ddf(x[fac.axis]) for fac in factors]

        def product(skip=()):
            out = 1.0
            for idx, v in enumerate(values):
                if idx not in skip:
                    out *= v
            return out

        value = product()
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        for a, fa in enumerate(factors):
            grad[fa.axis] += firsts[a] * product((a,))
            hess[fa.axis, fa.axis] += seconds[a] * product((a,))
            for b, fb in enumerate(factors):
                if b != a:
                    hess[fa.axis, fb.axis] += firsts[a] * firsts[b] * product((a, b))
        return value, grad, hess

    def coeff(x):
        return np.diag([jet_entry(factors, x)[0] for factors in entries])

    def d1(x):
        out = np.zeros((n, n, n))
        for i, factors in enumerate(entries):
            out[:, i, i] = jet_entry(factors, x)[1]
        return out

    def d2(x):
        out = np.zeros((n, n, n, n))
        for i, factors in enumerate(entries):
            out[:, :, i, i] = jet_entry(factors, x)[2]
        return out

    return MetricField(domain, coeff, d1, d2, fermi=fermi, label=label)
