"""
Mollification of the glued metric across the interface.

The glued metric is convolved with the triweight kernel rho(s) = 35/32 (1 - s^2)^3
in x^n (and, in "full" mode, in every tangential direction as a product
kernel). Derivatives of the smoothed field are the convolved derivatives of the
glued field. A partition of unity with fixed radii blends the convolution back
into the glued metric, so both agree exactly for |x^n| >= 1.2 width.
"""

import itertools
import logging
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from app.core.exceptions import MollifierError
from app.models.gluing import GluedMetric
from app.models.metric import MetricField
from app.models.smoothing import MollifierConfig, SmoothedMetric
from app.schemas.report import SmoothingReport
from app.services.curvature import CurvatureService
from app.services.profile import SMOOTHERSTEP

logger = logging.getLogger(__name__)

KERNEL_SCALE = 35.0 / 32.0
# partition of unity radii, as multiples of the collar width
INNER_SHARE = 0.8
OUTER_SHARE = 1.2


def triweight(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, KERNEL_SCALE * (1.0 - s * s) ** 3, 0.0)


def _combine(weights: Sequence[float], samples: List):
    if isinstance(samples[0], tuple):
        return tuple(
            sum(w * np.asarray(part[k], dtype=float) for w, part in zip(weights, samples))
            for k in range(len(samples[0]))
        )
    return sum(w * np.asarray(v, dtype=float) for w, v in zip(weights, samples))


def normal_rule(t: float, h: float, breaks: Iterable[float] = (), nodes: int = 12) -> Tuple[np.ndarray, np.ndarray]:
    """Kernel-weighted Gauss points s in [-1, 1], split where t - h s crosses a break."""
    cuts = {-1.0, 1.0}
    for b in breaks:
        s = (t - b) / h
        if -1.0 < s < 1.0:
            cuts.add(s)
    cuts = sorted(cuts)
    base_points, base_weights = leggauss(nodes)
    points, weights = [], []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        half, mid = 0.5 * (hi - lo), 0.5 * (hi + lo)
        s = mid + half * base_points
        points.append(s)
        weights.append(half * base_weights * triweight(s))
    return np.concatenate(points), np.concatenate(weights)


def convolve_normal(
    fn: Callable[[float], object],
    t: float,
    h: float,
    breaks: Iterable[float] = (),
    nodes: int = 12,
):
    """(rho_h * fn)(t) for a function of x^n returning an array or a tuple of arrays."""
    points, weights = normal_rule(t, h, breaks, nodes)
    return _combine(weights, [fn(t - h * s) for s in points])


def partition(t: float, inner: float, outer: float) -> Tuple[float, float, float]:
    """
    (eta, eta', eta'') of the near-interface cutoff: 1 on |t| <= inner, 0 on |t| >= outer.

    The radii are fixed fractions of the collar width, not multiples of h. The
    smoothed metric therefore equals the glued one exactly only for |x^n| >= outer;
    inside the cutoff the convolution also moves smooth parts of the metric by O(h^2).
    """
    r = abs(t)
    if r <= inner:
        return 1.0, 0.0, 0.0
    if r >= outer:
        return 0.0, 0.0, 0.0
    span = outer - inner
    u = (r - inner) / span
    sign = 1.0 if t > 0 else -1.0
    return (
        1.0 - float(SMOOTHERSTEP(u)),
        -sign * float(SMOOTHERSTEP.deriv(1)(u)) / span,
        -float(SMOOTHERSTEP.deriv(2)(u)) / span ** 2,
    )


class SmoothingService:
    def __init__(self, curvature_service: CurvatureService, sample_count: int = 2, normal_samples: int = 16):
        self._curvature = curvature_service
        self._sample_count = sample_count
        self._normal_samples = normal_samples

    def mollify(self, glued: GluedMetric, cfg: MollifierConfig) -> SmoothedMetric:
        delta, width, h = glued.delta, glued.collar.width, cfg.h
        if h >= 0.25 * delta:
            raise MollifierError(f"h = {h} must stay below delta/4 = {0.25 * delta}")
        if h >= 0.25 * width:
            raise MollifierError(f"h = {h} must stay below width/4 = {0.25 * width}")

        base = glued.field
        n = base.n
        inner, outer = INNER_SHARE * width, OUTER_SHARE * width
        collar = glued.collar
        reach = 0.0 if collar.g0.analytic and collar.g1.analytic else 2.0 * collar.g0.fd.reach
        lo, hi = base.domain.normal_range
        if outer + h > min(hi, -lo) - reach:
            raise MollifierError(
                f"smoothing reaches x^n = {outer + h:.4g}, outside the chart box [{lo}, {hi}]"
            )
        breaks = sorted({0.0, *glued.modified.profile.knots})
        tangential = self._tangential_rule(n, cfg)

        def smoothed(x: np.ndarray, evaluate: Callable):
            y = x[:-1]

            def along(t: float):
                if tangential is None:
                    return evaluate(np.append(y, t))
                offsets, weights = tangential
                return _combine(weights, [evaluate(np.append(y - h * o, t)) for o in offsets])

            return convolve_normal(along, float(x[-1]), h, breaks, cfg.nodes)

        def coeff(x: np.ndarray) -> np.ndarray:
            eta = partition(float(x[-1]), inner, outer)[0]
            if eta == 0.0:
                return base.value(x)
            near = smoothed(x, base.value)
            if eta == 1.0:
                return near
            far = base.value(x)
            return far + eta * (near - far)

        def jet(x: np.ndarray):
            eta, d_eta, dd_eta = partition(float(x[-1]), inner, outer)
            if eta == 0.0:
                return base.jet(x)
            near = smoothed(x, base.jet)
            if eta == 1.0:
                return near
            far = base.jet(x)
            diff = [a - b for a, b in zip(near, far)]
            value = far[0] + eta * diff[0]
            first = far[1] + eta * diff[1]
            second = far[2] + eta * diff[2]
            first[-1] += d_eta * diff[0]
            second[-1, :] += d_eta * diff[1]
            second[:, -1] += d_eta * diff[1]
            second[-1, -1] += dd_eta * diff[0]
            return value, first, second

        field = MetricField.from_jet(base.domain, coeff, jet, fermi=True, label=f"g_h[{h:g}]")
        result = SmoothedMetric(
            field=field, glued=glued, config=cfg, inner_radius=inner, outer_radius=outer
        )
        self._check_positive(result)
        return result

    def _tangential_rule(self, n: int, cfg: MollifierConfig) -> Optional[Tuple[List[np.ndarray], List[float]]]:
        if cfg.mode == "normal-only":
            return None
        points, weights = leggauss(cfg.tangential_nodes)
        weights = weights * triweight(points)
        offsets, products = [], []
        for combo in itertools.product(range(cfg.tangential_nodes), repeat=n - 1):
            offsets.append(points[list(combo)])
            products.append(float(np.prod(weights[list(combo)])))
        return offsets, products

    def _check_positive(self, smoothed: SmoothedMetric) -> None:
        collar = smoothed.glued.collar
        for y in collar.boundary_samples(self._sample_count):
            for t in np.linspace(-smoothed.outer_radius, smoothed.outer_radius, 9):
                x = collar.domain.point(y, t)
                smallest = float(np.linalg.eigvalsh(smoothed.field.value(x))[0])
                if smallest <= 0.0:
                    raise MollifierError(
                        f"smoothed metric loses positivity at {x.tolist()} (eigenvalue {smallest:.3e})"
                    )

    def normal_samples(self, delta: float, h: float) -> np.ndarray:
        """Normal coordinates probing the smoothing band and the profile ramp."""
        band = np.linspace(-2.0 * h, 2.0 * h, 9)
        ramp = 0.5 * delta ** 4 * np.ones(1)
        interior = delta * np.linspace(0.0, 1.0, self._normal_samples + 1)[1:]
        return np.unique(np.concatenate([band, ramp, interior]))

    def sup_distance(self, smoothed: SmoothedMetric, points: Iterable[np.ndarray]) -> float:
        base = smoothed.glued.field
        return max(
            float(np.max(np.abs(smoothed.field.value(x) - base.value(x)))) for x in points
        )

    def curvature_perturbation(self, glued: GluedMetric, cfg: MollifierConfig, kappa: float) -> SmoothingReport:
        smoothed = self.mollify(glued, cfg)
        lam = self._curvature.lambda2
        collar = glued.collar
        points = [
            collar.domain.point(y, t)
            for y in collar.boundary_samples(self._sample_count)
            for t in self.normal_samples(glued.delta, cfg.h)
        ]
        worst, argmin = np.inf, points[0]
        for x in points:
            slack = lam.min_eig(self._curvature.curvature_operator(smoothed.field, x)) - kappa
            if slack < worst:
                worst, argmin = slack, x
        report = SmoothingReport(
            delta=glued.delta,
            h=cfg.h,
            kappa=kappa,
            worst_slack=float(worst),
            argmin=argmin.tolist(),
            sup_distance=self.sup_distance(smoothed, points),
        )
        logger.info(
            "Smoothing delta=%s h=%s: worst slack %.3e at %s, sup distance %.3e",
            glued.delta,
            cfg.h,
            report.worst_slack,
            report.argmin,
            report.sup_distance,
        )
        return report
