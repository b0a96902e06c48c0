import logging
from typing import Sequence

import numpy as np
from scipy import linalg

from app.core.exceptions import DimensionError
from app.models.lambda2 import Lambda2Form, SymmetricOperator2
from app.models.metric import Jet, MetricField
from app.services.frames import FrameService, pad_flat
from app.services.lambda2 import Lambda2Service

logger = logging.getLogger(__name__)

ISOTROPIC_VARIANTS = {"plain": 0, "plus_R": 1, "plus_R2": 2}


def christoffels_first_kind(dg: np.ndarray) -> np.ndarray:
    """Gamma_{l,ij} = 1/2 (d_i g_jl + d_j g_il - d_l g_ij), indexed [l, i, j]."""
    return 0.5 * (dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg)


def christoffels_from_jet(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gamma^k_ij indexed [k, i, j]."""
    return np.einsum("kl,lij->kij", np.linalg.inv(g), christoffels_first_kind(dg))


def christoffel_derivative(jet: Jet, axis: int) -> np.ndarray:
    """d_axis Gamma^k_ij from the second-order jet."""
    g, dg, ddg = jet
    inverse = np.linalg.inv(g)
    first_kind = christoffels_first_kind(dg)
    d_inverse = -inverse @ dg[axis] @ inverse
    dd = ddg[axis]
    d_first_kind = 0.5 * (dd.transpose(2, 0, 1) + dd.transpose(2, 1, 0) - dd)
    return np.einsum("kl,lij->kij", d_inverse, first_kind) + np.einsum(
        "kl,lij->kij", inverse, d_first_kind
    )


def project_curvature_symmetries(tensor: np.ndarray) -> np.ndarray:
    tensor = 0.5 * (tensor - tensor.transpose(1, 0, 2, 3))
    tensor = 0.5 * (tensor - tensor.transpose(0, 1, 3, 2))
    return 0.5 * (tensor + tensor.transpose(2, 3, 0, 1))


def riemann_from_jet(jet: Jet) -> np.ndarray:
    """R_ijkl with R_ijij the sectional curvature of an orthonormal pair."""
    g, dg, ddg = jet
    first_kind = christoffels_first_kind(dg)
    second_kind = np.einsum("kl,lij->kij", np.linalg.inv(g), first_kind)
    linear = 0.5 * (
        np.einsum("jkil->ijkl", ddg)
        + np.einsum("iljk->ijkl", ddg)
        - np.einsum("jlik->ijkl", ddg)
        - np.einsum("ikjl->ijkl", ddg)
    )
    quadratic = np.einsum("qjk,qil->ijkl", first_kind, second_kind) - np.einsum(
        "qjl,qik->ijkl", first_kind, second_kind
    )
    return project_curvature_symmetries(linear + quadratic)


def orthonormal_pullback(tensor: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Components of a (0,4)-tensor in a g-orthonormal frame."""
    factor = linalg.cholesky(g, lower=True)
    frame = linalg.solve_triangular(factor, np.eye(g.shape[0]), lower=True).T
    return np.einsum("ijkl,ia,jb,kc,ld->abcd", tensor, frame, frame, frame, frame, optimize=True)


class CurvatureService:
    def __init__(self, lambda2_service: Lambda2Service, frame_service: FrameService):
        self._lambda2 = lambda2_service
        self._frames = frame_service

    @property
    def lambda2(self) -> Lambda2Service:
        return self._lambda2

    def christoffels(self, g: MetricField, x: Sequence[float]) -> np.ndarray:
        return christoffels_from_jet(g.value(x), g.first(x))

    def compatibility_residual(self, g: MetricField, x: Sequence[float]) -> float:
        """max |d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|."""
        value, first = g.value(x), g.first(x)
        gamma = christoffels_from_jet(value, first)
        lowered = np.einsum("lki,lj->kij", gamma, value)
        return float(np.max(np.abs(first - lowered - lowered.transpose(0, 2, 1))))

    def riemann_tensor(self, g: MetricField, x: Sequence[float]) -> np.ndarray:
        return riemann_from_jet(g.jet(x))

    def bianchi_residual(self, tensor: np.ndarray) -> float:
        cyclic = tensor + tensor.transpose(1, 2, 0, 3) + tensor.transpose(2, 0, 1, 3)
        return float(np.max(np.abs(cyclic)))

    def operator_from_jet(self, jet: Jet) -> Lambda2Form:
        return self._lambda2.form_from_tensor(
            riemann_from_jet(jet), SymmetricOperator2.symmetrized(jet[0])
        )

    def curvature_operator(self, g: MetricField, x: Sequence[float]) -> Lambda2Form:
        return self.operator_from_jet(g.jet(x))

    def sectional_curvature(self, g: MetricField, x: Sequence[float], i: int, j: int) -> float:
        value = g.value(x)
        tensor = self.riemann_tensor(g, x)
        area = value[i, i] * value[j, j] - value[i, j] ** 2
        return float(tensor[i, j, i, j] / area)

    def ricci(self, g: MetricField, x: Sequence[float]) -> SymmetricOperator2:
        return self._lambda2.ricci_trace(
            self.curvature_operator(g, x), SymmetricOperator2.symmetrized(g.value(x))
        )

    def scalar(self, g: MetricField, x: Sequence[float]) -> float:
        return self._lambda2.scalar_trace(
            self.curvature_operator(g, x), SymmetricOperator2.symmetrized(g.value(x))
        )

    def isotropic_min_from_jet(self, jet: Jet, variant: str = "plain") -> float:
        if variant not in ISOTROPIC_VARIANTS:
            raise ValueError(f"unknown isotropic variant {variant!r}")
        n = jet[0].shape[0]
        extra = ISOTROPIC_VARIANTS[variant]
        if n + extra < 4:
            raise DimensionError(
                f"isotropic curvature ({variant}) needs effective dimension >= 4, got {n + extra}"
            )
        tensor = orthonormal_pullback(riemann_from_jet(jet), jet[0])
        return self._frames.isotropic_min(pad_flat(tensor, extra))

    def isotropic_min(self, g: MetricField, x: Sequence[float], variant: str = "plain") -> float:
        return self.isotropic_min_from_jet(g.jet(x), variant)

    def flag_min_from_jet(self, jet: Jet) -> float:
        n = jet[0].shape[0]
        if n < 3:
            raise DimensionError(f"flag curvature needs n >= 3, got {n}")
        tensor = orthonormal_pullback(riemann_from_jet(jet), jet[0])
        return self._frames.flag_min(tensor)

    def flag_min(self, g: MetricField, x: Sequence[float]) -> float:
        return self.flag_min_from_jet(g.jet(x))
