"""
Certification sweeps.

For every delta of the ladder the glued metric is built and the chosen
curvature functional is sampled on both sides of the interface (never on the
interface itself, where second derivatives jump). Each smoothing radius then
adds a row for the mollified metric. A sweep passes when the observed
deficit and the distance to the unmodified metric both shrink down the ladder
and the untouched M1 side stays above kappa. A kappa that the unmodified
metrics themselves violate is refused before any gluing.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.exceptions import HypothesisRefusedError, MollifierError
from app.models.collar import CollarData, SecondFF
from app.models.functional import Functional
from app.models.gluing import GluedMetric
from app.models.lambda2 import SymmetricOperator2
from app.models.metric import Jet, MetricField
from app.models.scenario import Scenario
from app.models.smoothing import MollifierConfig
from app.schemas.report import SweepResult, SweepRow
from app.services.collar import CollarService
from app.services.curvature import CurvatureService
from app.services.gluing import GluingService
from app.services.profile import ProfileService
from app.services.smoothing import SmoothingService

logger = logging.getLogger(__name__)

AUTO = "auto"
AUTO_H_SHARE = 1.0 / 8.0
RAMP_SHARES = (0.25, 0.5, 0.75)
KAPPA_TOLERANCE = 1e-8
FD_KAPPA_TOLERANCE = 1e-5

HValue = Union[str, float]


class BoundsService:
    def __init__(
        self,
        curvature_service: CurvatureService,
        collar_service: CollarService,
        profile_service: ProfileService,
        gluing_service: GluingService,
        smoothing_service: SmoothingService,
        threads: int = 0,
        trend_tolerance: float = 1e-6,
        sample_count: int = 2,
        normal_samples: int = 16,
        mollifier_mode: str = "normal-only",
    ):
        self._curvature = curvature_service
        self._collar = collar_service
        self._profile = profile_service
        self._gluing = gluing_service
        self._smoothing = smoothing_service
        self._threads = threads
        self._trend_tolerance = trend_tolerance
        self._sample_count = sample_count
        self._normal_samples = normal_samples
        self._mollifier_mode = mollifier_mode

    # Functionals
    def evaluate_from_jet(self, kind: str, jet: Jet) -> float:
        if kind in ("isotropic", "isotropic1", "isotropic2"):
            variant = {"isotropic": "plain", "isotropic1": "plus_R", "isotropic2": "plus_R2"}[kind]
            return self._curvature.isotropic_min_from_jet(jet, variant)
        if kind == "flag":
            return self._curvature.flag_min_from_jet(jet)

        lam = self._curvature.lambda2
        form = self._curvature.operator_from_jet(jet)
        if kind == "operator":
            return lam.min_eig(form)
        if kind == "bi":
            return lam.two_smallest_sum(form)
        metric = SymmetricOperator2.symmetrized(jet[0])
        if kind == "ricci":
            return float(lam.ricci_eigenvalues(form, metric)[0])
        if kind == "scalar":
            return lam.scalar_trace(form, metric)
        raise ValueError(f"unknown functional {kind!r}")

    def evaluate_functional(self, fnl: Union[Functional, str], g: MetricField, x: Sequence[float]) -> float:
        kind = fnl.kind if isinstance(fnl, Functional) else fnl
        return self.evaluate_from_jet(kind, g.jet(np.asarray(x, dtype=float)))

    # Hypotheses
    def resolve_kappa(self, scenario: Scenario, kind: str, override: Optional[float] = None) -> Functional:
        if override is not None:
            return Functional(kind, float(override))
        if kind not in scenario.kappa:
            raise HypothesisRefusedError(
                f"scenario {scenario.name} declares no lower bound for {kind}; pass an explicit kappa"
            )
        return Functional(kind, float(scenario.kappa[kind]))

    @staticmethod
    def kappa_tolerance(collar: CollarData) -> float:
        """Slack allowed below kappa when the curvature comes from finite differences."""
        return KAPPA_TOLERANCE if collar.g0.analytic and collar.g1.analytic else FD_KAPPA_TOLERANCE

    def check_hypothesis(self, collar: CollarData, fnl: Functional) -> float:
        """
        Refuse unless L = L0 + L1 is positive semidefinite on the interface, or,
        for scalar curvature, has non-negative trace. Returns the worst value seen.
        """
        fnl.check_dimension(collar.n)
        L0 = self._collar.second_ff("M0", collar)
        L1 = self._collar.second_ff("M1", collar)
        slack = self._curvature.lambda2.psd_slack
        worst = np.inf
        for y in collar.boundary_samples(self._sample_count):
            spectrum = self._collar.spectrum(collar, lambda z: L0(z) + L1(z), y)
            value = float(np.sum(spectrum)) if fnl.needs_trace_only else float(spectrum[0])
            worst = min(worst, value)
            if value < -slack:
                what = "trace of L" if fnl.needs_trace_only else "smallest eigenvalue of L"
                raise HypothesisRefusedError(
                    f"{fnl.kind} gluing needs {'tr L >= 0' if fnl.needs_trace_only else 'L >= 0'}; "
                    f"{what} is {value:.6g} at {collar.boundary_point(y).tolist()}",
                    offending_value=value,
                )
        return worst

    # Sampling
    def m0_normals(self, delta: float, hi: float) -> np.ndarray:
        ramp = delta ** 4 * np.asarray(RAMP_SHARES)
        interior = delta * np.linspace(0.0, 1.0, self._normal_samples + 1)[1:]
        beyond = np.array([delta + 0.25 * (hi - delta)]) if hi > delta else np.empty(0)
        return np.unique(np.concatenate([ramp, interior, beyond]))

    def m1_normals(self, delta: float) -> np.ndarray:
        return -delta * np.linspace(0.0, 1.0, self._normal_samples + 1)[1:][::-1]

    def _points(self, collar: CollarData, normals: Iterable[float]) -> List[np.ndarray]:
        return [
            collar.domain.point(y, t)
            for y in collar.boundary_samples(self._sample_count)
            for t in normals
        ]

    def _map(self, fn: Callable[[np.ndarray], float], points: List[np.ndarray]) -> List[float]:
        if self._threads == 1 or len(points) < 2:
            return [fn(x) for x in points]
        with ThreadPoolExecutor(max_workers=self._threads or None) as pool:
            return list(pool.map(fn, points))

    def _side_minimum(self, kind: str, collar: CollarData, points: List[np.ndarray]) -> float:
        """Minimum of the functional over the unmodified metric, g0 for x^n >= 0 and g1 below."""

        def value(x: np.ndarray) -> float:
            metric = collar.g0 if x[-1] >= 0.0 else collar.g1
            return self.evaluate_from_jet(kind, metric.jet(x))

        return min(self._map(value, points), default=np.inf)

    def _field_minimum(self, kind: str, field: MetricField, points: List[np.ndarray]) -> float:
        return min(self._map(lambda x: self.evaluate_from_jet(kind, field.jet(x)), points))

    @staticmethod
    def _sup_distance(field: MetricField, collar: CollarData, points: List[np.ndarray]) -> float:
        worst = 0.0
        for x in points:
            reference = collar.g0.value(x) if x[-1] >= 0.0 else collar.g1.value(x)
            worst = max(worst, float(np.max(np.abs(field.value(x) - reference))))
        return worst

    def _decomposition_residual(self, glued: GluedMetric) -> float:
        collar = glued.collar
        return max(
            self._gluing.assemble_decomposition(glued.modified, collar.domain.point(y, 0.5 * glued.delta))[2]
            for y in collar.boundary_samples(self._sample_count)
        )

    def _h_values(self, delta: float, width: float, hs: Sequence[HValue]) -> List[Tuple[int, float]]:
        out = []
        for rank, h in enumerate(hs, start=1):
            value = AUTO_H_SHARE * delta if h == AUTO else float(h)
            if value >= 0.25 * min(delta, width):
                logger.warning("Skipping h=%s at delta=%s: needs h < %s", value, delta, 0.25 * min(delta, width))
                continue
            out.append((rank, value))
        return out

    # Sweep
    def certify(
        self,
        scenario: Scenario,
        kind: str,
        deltas: Sequence[float],
        hs: Sequence[HValue] = (AUTO,),
        C: Union[str, float] = AUTO,
        kappa: Optional[float] = None,
        phi_slope: Optional[float] = None,
        phi_width: Optional[float] = None,
        timings: bool = False,
    ) -> SweepResult:
        fnl = self.resolve_kappa(scenario, kind, kappa)
        collar = scenario.collar
        if phi_slope is not None:
            d0 = collar.width if phi_width is None else phi_width
            perturbed = self._gluing.perturb_mean_curvature(collar, d0, phi_slope)
            self._gluing.perturbation_report(collar, perturbed, d0, phi_slope)
            collar = perturbed
        self.check_hypothesis(collar, fnl)

        lo, hi = collar.domain.normal_range
        reach = 0.0 if collar.g0.analytic and collar.g1.analytic else 2.0 * collar.g0.fd.reach
        hi, lo = hi - reach, lo + reach
        plan = {delta: self._h_values(delta, collar.width, hs) for delta in deltas}
        normals = set()
        for delta, h_values in plan.items():
            normals.update(self.m0_normals(delta, hi))
            normals.update(self.m1_normals(delta))
            for _, h in h_values:
                normals.update(self._smoothing.normal_samples(delta, h))
        floor = self._side_minimum(fnl.kind, collar, self._points(collar, sorted(t for t in normals if t != 0.0)))
        tolerance = self.kappa_tolerance(collar)
        if floor < fnl.kappa - tolerance:
            raise HypothesisRefusedError(
                f"{fnl.kind} of the unmodified metrics drops to {floor:.6g}, below kappa = {fnl.kappa}",
                offending_value=floor,
            )

        forms: SecondFF = self._collar.second_fundamental_forms(collar)
        constant = self._gluing.choose_C(collar, forms) if C == AUTO else float(C)

        rows: List[Tuple[int, SweepRow]] = []
        m1_minimum = np.inf
        for delta in deltas:
            started = time.perf_counter()
            profile = self._profile.build_bump(delta)
            glued = self._gluing.glue(self._gluing.build_g_delta(collar, profile, constant, forms))
            m1_points = self._points(collar, self.m1_normals(delta))
            points = self._points(collar, self.m0_normals(delta, hi)) + m1_points
            m1_minimum = min(m1_minimum, self._field_minimum(fnl.kind, glued.field, m1_points))
            row = SweepRow(
                scenario=scenario.name,
                functional=fnl.kind,
                kappa=fnl.kappa,
                delta=delta,
                h=0.0,
                C=constant,
                eps_observed=fnl.kappa - self._field_minimum(fnl.kind, glued.field, points),
                sup_dist=self._sup_distance(glued.field, collar, points),
                decomp_residual=self._decomposition_residual(glued),
                wall_ms=1000.0 * (time.perf_counter() - started) if timings else 0.0,
            )
            rows.append((0, row))
            logger.info("delta=%s: eps %.4e, sup distance %.4e", delta, row.eps_observed, row.sup_dist)

            for rank, h in plan[delta]:
                started = time.perf_counter()
                try:
                    smoothed = self._smoothing.mollify(glued, MollifierConfig(h=h, mode=self._mollifier_mode))
                except MollifierError as exc:
                    logger.warning("Skipping h=%s at delta=%s: %s", h, delta, exc.message)
                    continue
                points = self._points(collar, self._smoothing.normal_samples(delta, h)) + m1_points
                row = SweepRow(
                    scenario=scenario.name,
                    functional=fnl.kind,
                    kappa=fnl.kappa,
                    delta=delta,
                    h=h,
                    C=constant,
                    eps_observed=fnl.kappa - self._field_minimum(fnl.kind, smoothed.field, points),
                    sup_dist=self._sup_distance(smoothed.field, collar, points),
                    wall_ms=1000.0 * (time.perf_counter() - started) if timings else 0.0,
                )
                rows.append((rank, row))
                logger.info("delta=%s h=%s: eps %.4e, sup distance %.4e", delta, h, row.eps_observed, row.sup_dist)

        reasons = self._trend_failures(rows)
        if m1_minimum < fnl.kappa - tolerance:
            reasons.append(f"{fnl.kind} on the M1 side drops to {m1_minimum:.6g}, below kappa = {fnl.kappa}")
        result = SweepResult(
            scenario=scenario.name,
            functional=fnl.kind,
            kappa=fnl.kappa,
            side_floor=floor,
            rows=[row for _, row in rows],
            m1_minimum=float(m1_minimum),
            passed=not reasons,
            reasons=reasons,
        )
        logger.info(
            "Certification of %s on %s: %s", fnl.kind, scenario.name, "PASS" if result.passed else "FAIL"
        )
        for reason in reasons:
            logger.warning("%s", reason)
        return result

    def _trend_failures(self, rows: List[Tuple[int, SweepRow]]) -> List[str]:
        """Per smoothing rank, eps and sup distance must shrink down the delta ladder."""
        ranks: Dict[int, List[SweepRow]] = {}
        for rank, row in rows:
            ranks.setdefault(rank, []).append(row)
        tolerance = self._trend_tolerance
        reasons = []
        for rank in sorted(ranks):
            ladder = ranks[rank]
            label = "unsmoothed" if rank == 0 else f"smoothing rank {rank}"
            for previous, current in zip(ladder, ladder[1:]):
                if not (current.eps_observed < previous.eps_observed or current.eps_observed <= tolerance):
                    reasons.append(
                        f"{label}: eps {current.eps_observed:.4e} at delta={current.delta} "
                        f"does not improve on {previous.eps_observed:.4e} at delta={previous.delta}"
                    )
                if not (current.sup_dist < previous.sup_dist or current.sup_dist <= tolerance):
                    reasons.append(
                        f"{label}: sup distance {current.sup_dist:.4e} at delta={current.delta} "
                        f"does not improve on {previous.sup_dist:.4e} at delta={previous.delta}"
                    )
        return reasons
