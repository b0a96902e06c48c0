"""
Modified metric g_delta, the glued metric and the curvature decomposition.

The decomposition compares the curvature of g_delta with

    R - f^2 A + f B - 2 f' Lcal + 2 f^2 L2 + 2 C f Ihat

where A = L^L, Lcal = L^P_N, L2 = L.L^P_N, Ihat = P_T^P_N (half-weight
Kulkarni-Nomizu products) and B collects the first-order terms in the
covariant derivatives of the extended L and of the unit normal.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from app.core.exceptions import PerturbationError
from app.models.collar import CollarData, SecondFF
from app.models.gluing import DecompositionTerms, GluedMetric, ModifiedMetric
from app.models.lambda2 import Lambda2Form, SymmetricOperator2
from app.models.metric import MetricField
from app.models.profile import BumpProfile
from app.schemas.report import (
    BoundaryReport,
    BoundarySlack,
    ConnectionDefects,
    PerturbationReport,
    RegularityReport,
)
from app.services.collar import CollarService, strip_normal, symmetrize
from app.services.curvature import (
    CurvatureService,
    christoffel_derivative,
    christoffels_from_jet,
    project_curvature_symmetries,
)

logger = logging.getLogger(__name__)


def _normal_projection(n: int) -> np.ndarray:
    out = np.zeros((n, n))
    out[-1, -1] = 1.0
    return out


def _normal_terms(dl: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Terms of B linear in grad L; dl[b, a, c] = (nabla_b L)_ac."""
    return (
        np.einsum("j,kil->ijkl", normal, dl)
        + np.einsum("k,jil->ijkl", normal, dl)
        + np.einsum("i,ljk->ijkl", normal, dl)
        + np.einsum("l,ijk->ijkl", normal, dl)
        - np.einsum("j,lik->ijkl", normal, dl)
        - np.einsum("l,jik->ijkl", normal, dl)
        - np.einsum("i,kjl->ijkl", normal, dl)
        - np.einsum("k,ijl->ijkl", normal, dl)
    )


class GluingService:
    def __init__(
        self,
        curvature_service: CurvatureService,
        collar_service: CollarService,
        c_margin: float = 1.0,
        sample_count: int = 2,
    ):
        self._curvature = curvature_service
        self._collar = collar_service
        self._c_margin = c_margin
        self._sample_count = sample_count

    def build_g_delta(
        self,
        collar: CollarData,
        profile: BumpProfile,
        C: float,
        forms: Optional[SecondFF] = None,
    ) -> ModifiedMetric:
        if C < 0.0:
            raise ValueError(f"C must be non-negative, got {C}")
        forms = forms or self._collar.second_fundamental_forms(collar)
        g0 = collar.g0
        extended = forms.extended
        delta = profile.delta
        two_c = 2.0 * C

        def coeff(x: np.ndarray) -> np.ndarray:
            t = float(x[-1])
            g = g0.value(x)
            out = g - two_c * float(profile.FF(t)) * strip_normal(g)
            if t < delta:
                out = out + 2.0 * float(profile.F(t)) * symmetrize(g @ extended.operator(x))
            return out

        def jet(x: np.ndarray):
            t = float(x[-1])
            g, dg, ddg = g0.jet(x)
            FF, F, f, df, _ = profile.jet(t)
            P, dP, ddP = strip_normal(g), strip_normal(dg), strip_normal(ddg)

            value = g - two_c * FF * P
            first = dg - two_c * FF * dP
            second = ddg - two_c * FF * ddP
            first[-1] -= two_c * F * P
            second[-1, :] -= two_c * F * dP
            second[:, -1] -= two_c * F * dP
            second[-1, -1] -= two_c * f * P

            if t < delta:
                L, dL, ddL = extended.form_jet(x)
                value += 2.0 * F * L
                first += 2.0 * F * dL
                first[-1] += 2.0 * f * L
                second += 2.0 * F * ddL
                second[-1, :] += 2.0 * f * dL
                second[:, -1] += 2.0 * f * dL
                second[-1, -1] += 2.0 * df * L
            return value, first, second

        field = MetricField.from_jet(collar.domain, coeff, jet, fermi=True, label="g_delta")
        logger.debug("Built g_delta with delta=%s C=%s", delta, C)
        return ModifiedMetric(collar=collar, profile=profile, C=float(C), forms=forms, field=field)

    def glue(self, modified: ModifiedMetric) -> GluedMetric:
        g1 = modified.collar.g1
        g_delta = modified.field

        def coeff(x: np.ndarray) -> np.ndarray:
            return g_delta.value(x) if x[-1] >= 0.0 else g1.value(x)

        def jet(x: np.ndarray):
            return g_delta.jet(x) if x[-1] >= 0.0 else g1.jet(x)

        field = MetricField.from_jet(modified.collar.domain, coeff, jet, fermi=True, label="g_glued")
        return GluedMetric(modified=modified, field=field)

    # Constant C
    def nabla_normal_squared_G(self, collar: CollarData, tangential: np.ndarray) -> np.ndarray:
        """
        Second covariant normal derivative of G1 = g0^-1 g1 on the slice, as an
        endomorphism. g1 and its continuation g1' share this jet on the slice.
        """
        x = collar.boundary_point(tangential)
        n = collar.n
        jet0 = collar.g0.jet(x)
        g0, dg0, ddg0 = jet0
        g1, dg1, ddg1 = collar.g1.jet(x)

        inverse = np.linalg.inv(g0)
        d_inverse = -inverse @ dg0[-1] @ inverse
        dd_inverse = (
            -d_inverse @ dg0[-1] @ inverse
            - inverse @ ddg0[-1, -1] @ inverse
            - inverse @ dg0[-1] @ d_inverse
        )
        G = inverse @ g1
        dG = d_inverse @ g1 + inverse @ dg1[-1]
        ddG = dd_inverse @ g1 + 2.0 * d_inverse @ dg1[-1] + inverse @ ddg1[-1, -1]

        gamma_n = christoffels_from_jet(g0, dg0)[:, -1, :]
        d_gamma_n = christoffel_derivative(jet0, n - 1)[:, -1, :]
        H = dG + gamma_n @ G - G @ gamma_n
        dH = ddG + d_gamma_n @ G - G @ d_gamma_n + gamma_n @ dG - dG @ gamma_n
        return dH + gamma_n @ H - H @ gamma_n

    def c_lower_bound(self, collar: CollarData, forms: SecondFF, tangential: np.ndarray) -> float:
        """Largest eigenvalue of L^2 - 1/2 nabla_N^2 G1 on the tangent space of the slice."""
        x = collar.boundary_point(tangential)
        g = collar.g0.value(x)
        shape = self._collar.shape_operator(collar, forms.L, tangential)
        endo = shape @ shape - 0.5 * self.nabla_normal_squared_G(collar, tangential)
        block = symmetrize(g @ endo)[:-1, :-1]
        return float(linalg.eigh(block, g[:-1, :-1], eigvals_only=True)[-1])

    def choose_C(self, collar: CollarData, forms: Optional[SecondFF] = None) -> float:
        """max(0, largest eigenvalue of L^2 - 1/2 nabla_N^2 G1) plus the margin; never below the margin."""
        forms = forms or self._collar.second_fundamental_forms(collar)
        worst = max(
            self.c_lower_bound(collar, forms, y) for y in collar.boundary_samples(self._sample_count)
        )
        C = max(worst, 0.0) + self._c_margin
        logger.info("Chose C = %.6g (largest tangential eigenvalue %.6g)", C, worst)
        return C

    # Decomposition
    def _collar_terms(self, collar: CollarData, forms: SecondFF, x: np.ndarray) -> Dict[str, Lambda2Form]:
        lam = self._curvature.lambda2
        n = collar.n
        jet = collar.g0.jet(x)
        g, dg, _ = jet
        metric = SymmetricOperator2.symmetrized(g)

        shape, d_shape, _ = forms.extended.operator_jet(x)
        gamma = christoffels_from_jet(g, dg)
        L = symmetrize(g @ shape)
        L2 = symmetrize(L @ shape)
        P_T = strip_normal(g)
        P_N = _normal_projection(n)
        grad_normal = symmetrize(g @ gamma[:, :, -1])

        nabla_shape = (
            d_shape
            + np.einsum("kjm,ml->jkl", gamma, shape)
            - np.einsum("km,mjl->jkl", shape, gamma)
        )
        dl = np.einsum("ik,jkl->jil", g, nabla_shape)
        B = -2.0 * lam.kn_tensor(L, grad_normal) + _normal_terms(dl, g[:, -1])

        def kn(a: np.ndarray, b: np.ndarray) -> Lambda2Form:
            return lam.kn_product(
                SymmetricOperator2.symmetrized(a), SymmetricOperator2.symmetrized(b), metric
            )

        return {
            "R": self._curvature.operator_from_jet(jet),
            "A": kn(L, L),
            "B": lam.form_from_tensor(project_curvature_symmetries(B), metric),
            "Lcal": kn(L, P_N),
            "L2": kn(L2, P_N),
            "Ihat": kn(P_T, P_N),
        }

    def decomposition_terms(self, modified: ModifiedMetric, x) -> DecompositionTerms:
        x = np.asarray(x, dtype=float)
        terms = self._collar_terms(modified.collar, modified.forms, x)
        _, _, f, df, _ = modified.profile.jet(float(x[-1]))
        return DecompositionTerms(f=f, df=df, **terms)

    def assemble_decomposition(
        self, modified: ModifiedMetric, x
    ) -> Tuple[Lambda2Form, Lambda2Form, float]:
        """(curvature of g_delta, assembled right side, max |eigenvalue| of the difference)."""
        x = np.asarray(x, dtype=float)
        lam = self._curvature.lambda2
        lhs = self._curvature.operator_from_jet(modified.field.jet(x))
        rhs = self.decomposition_terms(modified, x).combine(modified.C)
        metric = SymmetricOperator2.symmetrized(modified.collar.g0.value(x))
        against_g0 = lam.form_from_tensor(lam.tensor_from_form(lhs), metric)
        residual = lam.max_abs_eig(against_g0 - rhs)
        return lhs, rhs, residual

    # Boundary inequality
    def check_boundary_inequality(
        self, collar: CollarData, kappa: float, forms: Optional[SecondFF] = None
    ) -> BoundaryReport:
        forms = forms or self._collar.second_fundamental_forms(collar)
        lam = self._curvature.lambda2
        continued = self._collar.extend_g1_prime(collar)
        P_N = _normal_projection(collar.n)
        samples = []
        for y in collar.boundary_samples(self._sample_count):
            x = collar.boundary_point(y)
            g = collar.g0.value(x)
            metric = SymmetricOperator2.symmetrized(g)
            terms = self._collar_terms(collar, forms, x)
            hessian = strip_normal(symmetrize(g @ self.nabla_normal_squared_G(collar, y)))
            G = lam.kn_product(SymmetricOperator2.symmetrized(hessian), SymmetricOperator2(P_N), metric)

            assembled = terms["R"] - terms["A"] + terms["B"] + terms["L2"] * 2.0 - G
            shifted = assembled.with_entries(assembled.entries - kappa * assembled.gram)
            reference = self._curvature.curvature_operator(continued, x)
            samples.append(
                BoundarySlack(
                    point=x.tolist(),
                    min_slack=lam.min_eig(shifted),
                    identity_residual=lam.max_abs_eig(assembled - reference),
                )
            )
        report = BoundaryReport(
            kappa=kappa,
            min_slack=min(s.min_slack for s in samples),
            identity_residual=max(s.identity_residual for s in samples),
            samples=samples,
        )
        logger.info(
            "Boundary inequality kappa=%s: min slack %.3e, identity residual %.3e",
            kappa,
            report.min_slack,
            report.identity_residual,
        )
        return report

    # Diagnostics
    def regularity(self, glued: GluedMetric) -> RegularityReport:
        collar = glued.collar
        metric_jump = 0.0
        derivative_jump = 0.0
        samples = collar.boundary_samples(self._sample_count)
        for y in samples:
            x = collar.boundary_point(y)
            inner = glued.modified.field.jet(x)
            outer = collar.g1.jet(x)
            metric_jump = max(metric_jump, float(np.max(np.abs(inner[0] - outer[0]))))
            derivative_jump = max(
                derivative_jump, float(np.max(np.abs(inner[1][-1] - outer[1][-1])))
            )
        return RegularityReport(
            delta=glued.delta,
            metric_jump=metric_jump,
            normal_derivative_jump=derivative_jump,
            samples=len(samples),
        )

    def connection_defects(self, modified: ModifiedMetric, x) -> ConnectionDefects:
        x = np.asarray(x, dtype=float)
        value, first, _ = modified.field.jet(x)
        gamma_delta = christoffels_from_jet(value, first)
        gamma = self._curvature.christoffels(modified.collar.g0, x)
        f = float(modified.profile.f(float(x[-1])))
        expected = gamma[:, :, -1]
        if f != 0.0:
            expected = expected + f * modified.forms.extended.operator(x)
        defect = np.abs(gamma_delta[:, :-1, -1] - expected[:, :-1])
        return ConnectionDefects(
            point=x.tolist(),
            normal_geodesic=float(np.max(np.abs(gamma_delta[:, -1, -1]))),
            shape_operator=float(np.max(defect)),
        )

    # Mean-curvature perturbation
    def perturb_mean_curvature(self, collar: CollarData, d0: float, phi_slope: float) -> CollarData:
        """Scale the tangential block of g0 by phi(x^n) = 1 + s t (1 - t/d0)^3 on [0, d0]."""
        if phi_slope > 0.0:
            raise PerturbationError(f"phi slope must be non-positive, got {phi_slope}")
        if not 0.0 < d0 <= collar.width:
            raise PerturbationError(f"perturbation width must lie in (0, {collar.width}], got {d0}")
        if phi_slope == 0.0:
            return collar

        g0 = collar.g0

        def phi(t: float) -> Tuple[float, float, float]:
            if t >= d0:
                return 1.0, 0.0, 0.0
            q = 1.0 - t / d0
            return (
                1.0 + phi_slope * t * q ** 3,
                phi_slope * (q ** 3 - 3.0 * t * q ** 2 / d0),
                phi_slope * (-6.0 * q ** 2 / d0 + 6.0 * t * q / d0 ** 2),
            )

        def coeff(x: np.ndarray) -> np.ndarray:
            g = g0.value(x)
            P = strip_normal(g)
            return g + (phi(float(x[-1]))[0] - 1.0) * P

        def jet(x: np.ndarray):
            g, dg, ddg = g0.jet(x)
            p, dp, ddp = phi(float(x[-1]))
            P, dP, ddP = strip_normal(g), strip_normal(dg), strip_normal(ddg)
            value = g + (p - 1.0) * P
            first = dg + (p - 1.0) * dP
            second = ddg + (p - 1.0) * ddP
            first[-1] += dp * P
            second[-1, :] += dp * dP
            second[:, -1] += dp * dP
            second[-1, -1] += ddp * P
            return value, first, second

        perturbed = MetricField.from_jet(g0.domain, coeff, jet, fermi=True, label="g0~")
        return collar.replace(g0=perturbed)

    def perturbation_report(
        self, collar: CollarData, perturbed: CollarData, d0: float, phi_slope: float
    ) -> PerturbationReport:
        n = collar.n
        before_form = self._collar.second_ff("M0", collar)
        after_form = self._collar.second_ff("M0", perturbed)
        before, after = [], []
        for y in collar.boundary_samples(self._sample_count):
            g = collar.g0.value(collar.boundary_point(y))
            before.append(float(np.trace(np.linalg.solve(g, before_form(y)))))
            after.append(float(np.trace(np.linalg.solve(g, after_form(y)))))
        trace_before, trace_after = float(np.mean(before)), float(np.mean(after))

        deviation = 0.0
        for y in collar.boundary_samples(self._sample_count):
            for t in np.linspace(0.0, d0, 5):
                x = collar.domain.point(y, t)
                deviation = max(
                    deviation,
                    abs(self._curvature.scalar(perturbed.g0, x) - self._curvature.scalar(collar.g0, x)),
                )

        report = PerturbationReport(
            slope=phi_slope,
            width=d0,
            trace_before=trace_before,
            trace_after=trace_after,
            observed_increment=trace_after - trace_before,
            predicted_full_trace=-0.5 * n * phi_slope,
            predicted_tangential_trace=-0.5 * (n - 1) * phi_slope,
            scalar_deviation=deviation,
        )
        if phi_slope != 0.0:
            logger.warning(
                "Mean-curvature trace increment %.6g; full-trace prediction %.6g, tangential %.6g",
                report.observed_increment,
                report.predicted_full_trace,
                report.predicted_tangential_trace,
            )
        return report
