"""
Fermi-coordinate machinery near the interface.

The combined shape operator is extended into the g0 side by parallel transport
along the normal lines, i.e. by solving d/dt L = L Gamma_n - Gamma_n L with
(Gamma_n)^k_j = Gamma^k_{nj}. Each normal line is integrated once (RK4 on a
fixed grid), cached, and interpolated with a cubic Hermite spline.
"""

import logging
import threading
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from app.core.exceptions import (
    BoundaryIsometryError,
    FocalPointError,
    NotPositiveDefiniteError,
    TransportError,
)
from app.models.collar import CollarData, FermiChart, SecondFF
from app.models.metric import ChartDomain, FiniteDifferenceConfig, MetricField
from app.services.curvature import (
    CurvatureService,
    christoffel_derivative,
    christoffels_from_jet,
)

logger = logging.getLogger(__name__)

ISOMETRY_TOLERANCE = 1e-10
FERMI_TOLERANCE = 1e-12
FOCAL_RATIO = 0.05


def strip_normal(matrix: np.ndarray) -> np.ndarray:
    out = np.array(matrix, dtype=float)
    out[..., -1, :] = 0.0
    out[..., :, -1] = 0.0
    return out


def symmetrize(array: np.ndarray) -> np.ndarray:
    return 0.5 * (array + np.swapaxes(array, -1, -2))


class TransportedOperator:
    """Normal-parallel extension of a shape operator on the g0 side."""

    def __init__(
        self,
        g0: MetricField,
        initial: Callable[[np.ndarray], np.ndarray],
        t_max: float,
        step: float,
        tangential_step: float,
    ):
        self._g0 = g0
        self._initial = initial
        self._t_max = t_max
        self._step = step
        self._h = tangential_step
        self._lines: Dict[Tuple[float, ...], CubicHermiteSpline] = {}
        self._lock = threading.Lock()

    @property
    def t_max(self) -> float:
        return self._t_max

    def _gamma_n(self, x: np.ndarray) -> np.ndarray:
        gamma = christoffels_from_jet(self._g0.value(x), self._g0.first(x))
        return gamma[:, -1, :]

    def _rhs(self, y: np.ndarray, t: float, operator: np.ndarray) -> np.ndarray:
        gamma_n = self._gamma_n(np.append(y, t))
        return operator @ gamma_n - gamma_n @ operator

    def _line(self, y: np.ndarray) -> CubicHermiteSpline:
        key = tuple(np.round(y, 12))
        with self._lock:
            line = self._lines.get(key)
        if line is not None:
            return line
        if not self._g0.domain.contains(np.append(y, 0.0)):
            raise TransportError(f"normal line through {list(y)} leaves the chart box")

        steps = max(1, int(np.ceil(self._t_max / self._step)))
        ts = np.linspace(0.0, self._t_max, steps + 1)
        h = ts[1] - ts[0]
        value = np.asarray(self._initial(y), dtype=float)
        values = [value]
        slopes = [self._rhs(y, 0.0, value)]
        for t in ts[:-1]:
            k1 = slopes[-1]
            k2 = self._rhs(y, t + 0.5 * h, value + 0.5 * h * k1)
            k3 = self._rhs(y, t + 0.5 * h, value + 0.5 * h * k2)
            k4 = self._rhs(y, t + h, value + h * k3)
            value = value + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            values.append(value)
            slopes.append(self._rhs(y, t + h, value))
        line = CubicHermiteSpline(ts, np.array(values), np.array(slopes), axis=0)
        with self._lock:
            self._lines.setdefault(key, line)
        return line

    def _split(self, x) -> Tuple[np.ndarray, float]:
        x = np.asarray(x, dtype=float)
        t = float(x[-1])
        if t < -1e-14 or t > self._t_max + 1e-14:
            raise TransportError(f"x^n = {t} lies outside the transported range [0, {self._t_max}]")
        return x[:-1], min(max(t, 0.0), self._t_max)

    def operator(self, x) -> np.ndarray:
        y, t = self._split(x)
        return strip_normal(self._line(y)(t))

    def operator_jet(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(L, d_k L, d_k d_l L) of the extended endomorphism at x."""
        y, t = self._split(x)
        x = np.append(y, t)
        n = x.size
        jet = self._g0.jet(x)
        gamma_n = christoffels_from_jet(jet[0], jet[1])[:, -1, :]
        d_gamma_n = christoffel_derivative(jet, n - 1)[:, -1, :]

        value = self._line(y)(t)
        first = np.zeros((n, n, n))
        second = np.zeros((n, n, n, n))
        normal = value @ gamma_n - gamma_n @ value
        first[-1] = normal
        second[-1, -1] = normal @ gamma_n + value @ d_gamma_n - d_gamma_n @ value - gamma_n @ normal

        h = self._h
        for a in range(n - 1):
            ea = np.zeros(n - 1)
            ea[a] = h
            plus, minus = self._line(y + ea), self._line(y - ea)
            first[a] = (plus(t) - minus(t)) / (2.0 * h)
            mixed = (plus(t, 1) - minus(t, 1)) / (2.0 * h)
            second[a, -1] = mixed
            second[-1, a] = mixed
            second[a, a] = (plus(t) - 2.0 * value + minus(t)) / (h * h)
            for b in range(a + 1, n - 1):
                eb = np.zeros(n - 1)
                eb[b] = h
                cross = (
                    self._line(y + ea + eb)(t)
                    - self._line(y + ea - eb)(t)
                    - self._line(y - ea + eb)(t)
                    + self._line(y - ea - eb)(t)
                ) / (4.0 * h * h)
                second[a, b] = cross
                second[b, a] = cross
        return strip_normal(value), strip_normal(first), strip_normal(second)

    def form_jet(self, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(0,2)-form g0 L and its first two derivatives."""
        y, t = self._split(x)
        x = np.append(y, t)
        g, dg, ddg = self._g0.jet(x)
        op, d_op, dd_op = self.operator_jet(x)
        form = g @ op
        d_form = np.einsum("kij,jm->kim", dg, op) + np.einsum("ij,kjm->kim", g, d_op)
        dd_form = (
            np.einsum("klij,jm->klim", ddg, op)
            + np.einsum("kij,ljm->klim", dg, d_op)
            + np.einsum("lij,kjm->klim", dg, d_op)
            + np.einsum("ij,kljm->klim", g, dd_op)
        )
        return symmetrize(form), symmetrize(d_form), symmetrize(dd_form)


class CollarService:
    def __init__(
        self,
        curvature_service: CurvatureService,
        fd: FiniteDifferenceConfig = FiniteDifferenceConfig(),
        sample_count: int = 2,
        transport_resolution: int = 64,
        tangential_step: float = 1e-3,
        taylor_step: float = 1e-3,
    ):
        self._curvature = curvature_service
        self._fd = fd
        self._sample_count = sample_count
        self._resolution = transport_resolution
        self._tangential_step = tangential_step
        self._taylor_step = taylor_step

    @property
    def fd(self) -> FiniteDifferenceConfig:
        return self._fd

    def validate(self, collar: CollarData, sample_count: Optional[int] = None) -> None:
        """Check Fermi form, positivity and the boundary isometry on sample points."""
        count = sample_count or self._sample_count
        lo, hi = collar.domain.normal_range
        for y in collar.boundary_samples(count):
            for side, metric, ts in (
                ("g0", collar.g0, (0.0, 0.5 * min(collar.width, hi))),
                ("g1", collar.g1, (0.0, 0.5 * max(-collar.width, lo))),
            ):
                for t in ts:
                    x = collar.domain.point(y, t)
                    value = metric.value(x)
                    metric.check_fermi(x, FERMI_TOLERANCE)
                    smallest = float(np.linalg.eigvalsh(value)[0])
                    if smallest <= 0.0:
                        raise NotPositiveDefiniteError(f"{side} at {x.tolist()}", smallest)
            x = collar.boundary_point(y)
            jump = float(np.max(np.abs(collar.g0.value(x) - collar.g1.value(x))))
            if jump > ISOMETRY_TOLERANCE:
                raise BoundaryIsometryError(
                    f"boundary metrics differ by {jump:.3e} at {x.tolist()}"
                )

    def second_ff(self, side: str, collar: CollarData) -> Callable[[np.ndarray], np.ndarray]:
        """L0 = -1/2 d_n g0 or L1 = +1/2 d_n g1 on the slice x^n = 0."""
        if side not in ("M0", "M1"):
            raise ValueError(f"side must be 'M0' or 'M1', got {side!r}")
        metric, sign = (collar.g0, -0.5) if side == "M0" else (collar.g1, 0.5)

        def form(tangential: np.ndarray) -> np.ndarray:
            x = collar.boundary_point(tangential)
            metric.check_fermi(x, FERMI_TOLERANCE)
            return symmetrize(strip_normal(sign * metric.first(x)[-1]))

        return form

    def shape_operator(self, collar: CollarData, form: Callable, tangential: np.ndarray) -> np.ndarray:
        g = collar.g0.value(collar.boundary_point(tangential))
        return strip_normal(np.linalg.solve(g, form(tangential)))

    def spectrum(self, collar: CollarData, form: Callable, tangential: np.ndarray) -> np.ndarray:
        """Eigenvalues of a boundary form against the induced boundary metric."""
        g = collar.g0.value(collar.boundary_point(tangential))[:-1, :-1]
        block = form(tangential)[:-1, :-1]
        return np.sort(np.linalg.eigvals(np.linalg.solve(g, block)).real)

    def transport_range(self, collar: CollarData) -> float:
        hi = collar.domain.normal_range[1]
        reach = 0.0 if collar.g0.analytic else 2.0 * collar.g0.fd.reach
        t_max = min(1.25 * collar.width, hi - reach)
        if t_max < collar.width:
            raise TransportError(
                f"collar width {collar.width} reaches past the chart box (x^n <= {hi})"
            )
        return t_max

    def extend_L(self, collar: CollarData, form: Callable) -> TransportedOperator:
        t_max = self.transport_range(collar)
        return TransportedOperator(
            collar.g0,
            lambda y: self.shape_operator(collar, form, y),
            t_max=t_max,
            step=collar.width / self._resolution,
            tangential_step=self._tangential_step,
        )

    def second_fundamental_forms(self, collar: CollarData) -> SecondFF:
        L0 = self.second_ff("M0", collar)
        L1 = self.second_ff("M1", collar)
        return SecondFF(
            L0=L0,
            L1=L1,
            extended=self.extend_L(collar, lambda y: L0(y) + L1(y)),
        )

    def normal_geodesic_defect(self, metric: MetricField, x) -> float:
        """max |Gamma^k_nn|; vanishes in a Fermi chart."""
        return float(np.max(np.abs(self._curvature.christoffels(metric, x)[:, -1, -1])))

    def taylor_coefficients(self, g1: MetricField, tangential: np.ndarray) -> List[np.ndarray]:
        """
        Normal derivatives of order 0..4 of g1 at x^n = 0.

        Orders 3 and 4 come from second-order backward stencils on d_n^2 g1, so
        g1 is only ever evaluated on its own side x^n <= 0.
        """
        s = self._taylor_step
        value, first, second = g1.jet(np.append(tangential, 0.0))
        S0 = second[-1, -1]
        S1, S2, S3 = (g1.second(np.append(tangential, -k * s))[-1, -1] for k in (1, 2, 3))
        third = (3.0 * S0 - 4.0 * S1 + S2) / (2.0 * s)
        fourth = (2.0 * S0 - 5.0 * S1 + 4.0 * S2 - S3) / (s * s)
        return [value, first[-1], S0, third, fourth]

    def extend_g1_prime(self, collar: CollarData) -> MetricField:
        """Order-4 Taylor continuation of g1 into x^n >= 0; g1 itself for x^n <= 0."""
        g1 = collar.g1
        cache: Dict[Tuple[float, ...], List[np.ndarray]] = {}
        lock = threading.Lock()
        factorials = (1.0, 1.0, 2.0, 6.0, 24.0)

        def coeff(x: np.ndarray) -> np.ndarray:
            t = float(x[-1])
            if t <= 0.0:
                return g1.value(x)
            key = tuple(np.round(x[:-1], 12))
            with lock:
                coefficients = cache.get(key)
            if coefficients is None:
                coefficients = self.taylor_coefficients(g1, x[:-1])
                with lock:
                    cache[key] = coefficients
            value = sum(c * t ** m / factorials[m] for m, c in enumerate(coefficients))
            value = strip_normal(symmetrize(value))
            value[-1, -1] = 1.0
            return value

        return MetricField(collar.domain, coeff, fd=self._fd, fermi=True, label="g1'")

    def fermi_from_general(
        self,
        metric: MetricField,
        width: float,
        straighten: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        straighten_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        domain: Optional[ChartDomain] = None,
        max_halvings: int = 6,
    ) -> FermiChart:
        """
        Pull a metric back through the normal-geodesic flow of the slice x^n = 0.

        `straighten` maps chart coordinates u (with the boundary at u_n = 0) to the
        coordinates of `metric`; without it the boundary is already x^n = 0.
        Normal geodesics are integrated with RK4 and the Jacobian of the flow is
        monitored; the width is halved while it degenerates.
        """
        base = self._straightened(metric, straighten, straighten_jacobian, domain)
        n = base.n
        requested = width

        for _ in range(max_halvings + 1):
            flow = _NormalFlow(base, step=width / self._resolution)
            ratio = self._jacobian_ratio(flow, base.domain, width)
            if ratio > FOCAL_RATIO:
                break
            logger.warning(
                "Normal geodesics degenerate within width %.4g (Jacobian ratio %.3e); halving",
                width,
                ratio,
            )
            width *= 0.5
        else:
            raise FocalPointError(f"no focal-free collar found down to width {width:.3e}")

        if width < requested:
            logger.info("Fermi chart width shrunk from %.4g to %.4g", requested, width)

        def coeff(x: np.ndarray) -> np.ndarray:
            point, jacobian = flow.map_with_jacobian(x[:-1], float(x[-1]))
            return symmetrize(jacobian.T @ base.value(point) @ jacobian)

        chart_domain = ChartDomain(n, base.domain.tangential_box + ((-width, width),))
        fermi = MetricField(chart_domain, coeff, fd=self._fd, fermi=True, label="fermi")
        return FermiChart(metric=fermi, width=width, requested_width=requested, min_jacobian_ratio=ratio)

    def _straightened(self, metric, straighten, straighten_jacobian, domain) -> MetricField:
        if straighten is None:
            return metric
        if domain is None:
            raise ValueError("a straightening map needs the chart domain of its source coordinates")

        def jacobian(u: np.ndarray) -> np.ndarray:
            if straighten_jacobian is not None:
                return np.asarray(straighten_jacobian(u), dtype=float)
            h = 1e-6
            columns = []
            for k in range(u.size):
                e = np.zeros(u.size)
                e[k] = h
                columns.append((np.asarray(straighten(u + e)) - np.asarray(straighten(u - e))) / (2.0 * h))
            return np.stack(columns, axis=1)

        def coeff(u: np.ndarray) -> np.ndarray:
            j = jacobian(u)
            return symmetrize(j.T @ metric.value(np.asarray(straighten(u), dtype=float)) @ j)

        return MetricField(domain, coeff, fd=self._fd, label=f"{metric.label}*")

    def _jacobian_ratio(self, flow: "_NormalFlow", domain: ChartDomain, width: float) -> float:
        ratio = np.inf
        for y in domain.tangential_samples(self._sample_count):
            reference = np.linalg.det(flow.map_with_jacobian(y, 0.0)[1])
            for t in np.linspace(-width, width, 9):
                current = np.linalg.det(flow.map_with_jacobian(y, t)[1])
                ratio = min(ratio, current / reference)
        return float(ratio)


class _NormalFlow:
    """Geodesic flow along the unit normal of the slice x^n = 0."""

    def __init__(self, metric: MetricField, step: float, jacobian_step: float = 1e-5):
        self._metric = metric
        self._step = step
        self._jacobian_step = jacobian_step

    def _normal(self, y: np.ndarray) -> np.ndarray:
        inverse = np.linalg.inv(self._metric.value(np.append(y, 0.0)))
        return inverse[:, -1] / np.sqrt(inverse[-1, -1])

    def _acceleration(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        gamma = christoffels_from_jet(self._metric.value(p), self._metric.first(p))
        return -np.einsum("kij,i,j->k", gamma, v, v)

    def geodesic(self, y: np.ndarray, t: float) -> Tuple[np.ndarray, np.ndarray]:
        p = np.append(y, 0.0)
        v = self._normal(y)
        if t == 0.0:
            return p, v
        steps = max(1, int(np.ceil(abs(t) / self._step)))
        h = t / steps
        for _ in range(steps):
            k1p, k1v = v, self._acceleration(p, v)
            k2p, k2v = v + 0.5 * h * k1v, self._acceleration(p + 0.5 * h * k1p, v + 0.5 * h * k1v)
            k3p, k3v = v + 0.5 * h * k2v, self._acceleration(p + 0.5 * h * k2p, v + 0.5 * h * k2v)
            k4p, k4v = v + h * k3v, self._acceleration(p + h * k3p, v + h * k3v)
            p = p + (h / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
            v = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        return p, v

    def map_with_jacobian(self, y: np.ndarray, t: float) -> Tuple[np.ndarray, np.ndarray]:
        y = np.asarray(y, dtype=float)
        point, velocity = self.geodesic(y, t)
        h = self._jacobian_step
        columns = []
        for a in range(y.size):
            e = np.zeros(y.size)
            e[a] = h
            columns.append((self.geodesic(y + e, t)[0] - self.geodesic(y - e, t)[0]) / (2.0 * h))
        columns.append(velocity)
        return point, np.stack(columns, axis=1)
