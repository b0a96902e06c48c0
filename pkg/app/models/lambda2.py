"""
Value types for bilinear forms on the second exterior power.

A form is stored against the canonical basis e_i^e_j (i < j) together with the
Gram matrix of the inner product induced by the metric. Full antisymmetric
2-vectors alpha^{ij} pair with a form through 1/4 T_ijkl alpha^ij beta^kl.
"""

from dataclasses import dataclass, field
from itertools import combinations
from typing import Dict, Tuple

import numpy as np

from app.core.exceptions import DimensionError, SymmetryError

SYMMETRY_TOLERANCE = 1e-14


def _check_symmetric(name: str, matrix: np.ndarray, tolerance: float) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {matrix.shape}")
    scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
    defect = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
    if defect > tolerance * scale:
        raise SymmetryError(f"{name} is not symmetric (defect {defect:.3e})")
    return 0.5 * (matrix + matrix.T)


@dataclass(frozen=True)
class Lambda2Basis:
    n: int
    pairs: Tuple[Tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        if self.n < 2:
            raise DimensionError(f"ambient dimension must be at least 2, got {self.n}")
        if not self.pairs:
            object.__setattr__(self, "pairs", tuple(combinations(range(self.n), 2)))

    @property
    def size(self) -> int:
        return len(self.pairs)

    @property
    def lookup(self) -> Dict[Tuple[int, int], int]:
        return {pair: index for index, pair in enumerate(self.pairs)}

    def index_arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        """First and second indices of every basis pair."""
        first = np.array([i for i, _ in self.pairs], dtype=int)
        second = np.array([j for _, j in self.pairs], dtype=int)
        return first, second


@dataclass(frozen=True, eq=False)
class SymmetricOperator2:
    """A (0,2)-tensor; its endomorphism is taken through the active metric."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "entries", _check_symmetric("operator", self.entries, SYMMETRY_TOLERANCE)
        )

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "SymmetricOperator2":
        return cls(np.eye(n))

    @classmethod
    def symmetrized(cls, matrix: np.ndarray) -> "SymmetricOperator2":
        matrix = np.asarray(matrix, dtype=float)
        return cls(0.5 * (matrix + matrix.T))

    def endomorphism(self, metric: "SymmetricOperator2") -> np.ndarray:
        return np.linalg.solve(metric.entries, self.entries)


@dataclass(frozen=True, eq=False)
class Lambda2Form:
    basis: Lambda2Basis
    entries: np.ndarray
    gram: np.ndarray

    def __post_init__(self):
        entries = _check_symmetric("form entries", self.entries, SYMMETRY_TOLERANCE)
        gram = _check_symmetric("gram", self.gram, SYMMETRY_TOLERANCE)
        if entries.shape != (self.basis.size, self.basis.size) or gram.shape != entries.shape:
            raise DimensionError(
                f"form of size {entries.shape} does not fit a basis of size {self.basis.size}"
            )
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "gram", gram)

    @property
    def n(self) -> int:
        return self.basis.n

    def coordinates(self, bivector: np.ndarray) -> np.ndarray:
        """Components of a full antisymmetric n x n 2-vector in the pair basis."""
        first, second = self.basis.index_arrays()
        return np.asarray(bivector, dtype=float)[first, second]

    def evaluate(self, alpha: np.ndarray, beta: np.ndarray) -> float:
        """1/4 T_ijkl alpha^ij beta^kl for full antisymmetric 2-vectors."""
        return float(self.coordinates(alpha) @ self.entries @ self.coordinates(beta))

    @staticmethod
    def wedge(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        return np.outer(u, v) - np.outer(v, u)

    def with_entries(self, entries: np.ndarray) -> "Lambda2Form":
        return Lambda2Form(self.basis, entries, self.gram)

    def _check_compatible(self, other: "Lambda2Form") -> None:
        if other.basis.n != self.basis.n:
            raise DimensionError(f"cannot combine forms in dimension {self.n} and {other.n}")

    def __add__(self, other: "Lambda2Form") -> "Lambda2Form":
        self._check_compatible(other)
        return self.with_entries(self.entries + other.entries)

    def __sub__(self, other: "Lambda2Form") -> "Lambda2Form":
        self._check_compatible(other)
        return self.with_entries(self.entries - other.entries)

    def __mul__(self, factor: float) -> "Lambda2Form":
        return self.with_entries(float(factor) * self.entries)

    __rmul__ = __mul__

    def __neg__(self) -> "Lambda2Form":
        return self.with_entries(-self.entries)
