"""
Minimisation of frame functionals of a curvature tensor over orthonormal frames.

Frames are points of the Stiefel set {Q : Q^T Q = I}. The search evaluates a
batch of seeded random frames and refines the best few by projected gradient
descent with a QR retraction and Armijo backtracking.
"""

import logging
from typing import Callable, Optional

import numpy as np

from app.core.exceptions import DimensionError

logger = logging.getLogger(__name__)

FrameObjective = Callable[[np.ndarray, np.ndarray], float]


def isotropic_value(tensor: np.ndarray, frame: np.ndarray) -> float:
    """R(X,U,X,U) + R(X,V,X,V) + R(Y,U,Y,U) + R(Y,V,Y,V) - 2 R(X,Y,U,V)."""
    x, y, u, v = frame.T
    r = lambda a, b, c, d: np.einsum("ijkl,i,j,k,l->", tensor, a, b, c, d)
    return float(r(x, u, x, u) + r(x, v, x, v) + r(y, u, y, u) + r(y, v, y, v) - 2.0 * r(x, y, u, v))


def flag_value(tensor: np.ndarray, frame: np.ndarray) -> float:
    """R(e1,e3,e1,e3) + R(e2,e3,e2,e3)."""
    e1, e2, e3 = frame.T
    r = lambda a, b: np.einsum("ijkl,i,j,k,l->", tensor, a, b, a, b)
    return float(r(e1, e3) + r(e2, e3))


def _batch_isotropic(tensor: np.ndarray, frames: np.ndarray) -> np.ndarray:
    x, y, u, v = (frames[:, :, a] for a in range(4))
    r = lambda a, b, c, d: np.einsum("ijkl,mi,mj,mk,ml->m", tensor, a, b, c, d, optimize=True)
    return r(x, u, x, u) + r(x, v, x, v) + r(y, u, y, u) + r(y, v, y, v) - 2.0 * r(x, y, u, v)


def _batch_flag(tensor: np.ndarray, frames: np.ndarray) -> np.ndarray:
    e1, e2, e3 = (frames[:, :, a] for a in range(3))
    r = lambda a, b: np.einsum("ijkl,mi,mj,mk,ml->m", tensor, a, b, a, b, optimize=True)
    return r(e1, e3) + r(e2, e3)


def pad_flat(tensor: np.ndarray, extra: int) -> np.ndarray:
    """Curvature tensor of the product with a flat factor of dimension `extra`."""
    if extra == 0:
        return tensor
    n = tensor.shape[0]
    padded = np.zeros((n + extra,) * 4)
    padded[:n, :n, :n, :n] = tensor
    return padded


def retract(frame: np.ndarray) -> np.ndarray:
    q, r = np.linalg.qr(frame)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


class FrameService:
    def __init__(
        self,
        restarts: int = 512,
        refine: int = 4,
        iterations: int = 60,
        seed: int = 42,
        gradient_step: float = 1e-6,
    ):
        self._restarts = restarts
        self._refine = refine
        self._iterations = iterations
        self._seed = seed
        self._gradient_step = gradient_step

    def isotropic_min(self, tensor: np.ndarray, seed: Optional[int] = None) -> float:
        """Minimum isotropic curvature of an orthonormal-frame curvature tensor."""
        if tensor.shape[0] < 4:
            raise DimensionError(f"isotropic curvature needs dimension >= 4, got {tensor.shape[0]}")
        return self._minimise(tensor, 4, isotropic_value, _batch_isotropic, seed)

    def flag_min(self, tensor: np.ndarray, seed: Optional[int] = None) -> float:
        if tensor.shape[0] < 3:
            raise DimensionError(f"flag curvature needs dimension >= 3, got {tensor.shape[0]}")
        return self._minimise(tensor, 3, flag_value, _batch_flag, seed)

    def random_frames(self, n: int, k: int, count: int, seed: Optional[int] = None) -> np.ndarray:
        rng = np.random.default_rng(self._seed if seed is None else seed)
        gaussian = rng.standard_normal((count, n, k))
        return np.stack([retract(m) for m in gaussian])

    def _minimise(self, tensor, k, objective, batch, seed) -> float:
        if not np.any(tensor):
            return 0.0
        frames = self.random_frames(tensor.shape[0], k, self._restarts, seed)
        values = batch(tensor, frames)
        order = np.argsort(values, kind="stable")[: self._refine]
        best = float(values[order[0]])
        for index in order:
            best = min(best, self._refine_frame(tensor, frames[index], objective))
        return best

    def _refine_frame(self, tensor, frame, objective) -> float:
        value = objective(tensor, frame)
        step = 1.0
        for _ in range(self._iterations):
            gradient = self._gradient(tensor, frame, objective)
            sym = frame.T @ gradient
            tangent = gradient - frame @ (0.5 * (sym + sym.T))
            slope = float(np.sum(tangent * tangent))
            if slope < 1e-20:
                break
            accepted = False
            trial_step = min(1.0, 2.0 * step)
            for _ in range(30):
                candidate = retract(frame - trial_step * tangent)
                candidate_value = objective(tensor, candidate)
                if candidate_value <= value - 1e-4 * trial_step * slope:
                    accepted = True
                    break
                trial_step *= 0.5
            if not accepted:
                break
            frame, value, step = candidate, candidate_value, trial_step
        return value

    def _gradient(self, tensor, frame, objective) -> np.ndarray:
        h = self._gradient_step
        gradient = np.empty_like(frame)
        for index in np.ndindex(*frame.shape):
            plus = frame.copy()
            minus = frame.copy()
            plus[index] += h
            minus[index] -= h
            gradient[index] = (objective(tensor, plus) - objective(tensor, minus)) / (2.0 * h)
        return gradient
