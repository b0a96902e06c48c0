import logging
from typing import Optional

import numpy as np
from scipy import linalg

from app.core.exceptions import DimensionError, NotPositiveDefiniteError, SymmetryError
from app.models.lambda2 import Lambda2Basis, Lambda2Form, SymmetricOperator2

logger = logging.getLogger(__name__)


class Lambda2Service:
    """Algebra of symmetric forms on the second exterior power."""

    def __init__(self, psd_slack: float = 1e-10, antisymmetry_tolerance: float = 1e-12):
        self._psd_slack = psd_slack
        self._antisymmetry_tolerance = antisymmetry_tolerance

    @property
    def psd_slack(self) -> float:
        return self._psd_slack

    def induced_gram(self, g: SymmetricOperator2) -> np.ndarray:
        """g_ik g_jl - g_jk g_il over the pair basis."""
        self._require_spd(g.entries, "metric")
        basis = Lambda2Basis(g.n)
        first, second = basis.index_arrays()
        m = g.entries
        gram = (
            m[np.ix_(first, first)] * m[np.ix_(second, second)]
            - m[np.ix_(second, first)] * m[np.ix_(first, second)]
        )
        return 0.5 * (gram + gram.T)

    def kn_product(
        self,
        a: SymmetricOperator2,
        b: SymmetricOperator2,
        metric: Optional[SymmetricOperator2] = None,
    ) -> Lambda2Form:
        if a.n != b.n:
            raise DimensionError(f"Kulkarni-Nomizu factors differ in size: {a.n} vs {b.n}")
        metric = metric or SymmetricOperator2.identity(a.n)
        if metric.n != a.n:
            raise DimensionError("metric does not match the factors")
        basis = Lambda2Basis(a.n)
        first, second = basis.index_arrays()
        A, B = a.entries, b.entries
        i, j = first[:, None], second[:, None]
        k, l = first[None, :], second[None, :]
        entries = 0.5 * (
            A[i, k] * B[j, l] - A[j, k] * B[i, l] + B[i, k] * A[j, l] - B[j, k] * A[i, l]
        )
        return Lambda2Form(basis, 0.5 * (entries + entries.T), self.induced_gram(metric))

    def kn_tensor(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Full (0,4) array of kn_product(a, b), same half-weight convention."""
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if a.shape != b.shape:
            raise DimensionError(f"Kulkarni-Nomizu factors differ in shape: {a.shape} vs {b.shape}")
        return 0.5 * (
            np.einsum("ik,jl->ijkl", a, b)
            - np.einsum("jk,il->ijkl", a, b)
            + np.einsum("ik,jl->ijkl", b, a)
            - np.einsum("jk,il->ijkl", b, a)
        )

    def form_from_tensor(self, tensor: np.ndarray, g: SymmetricOperator2) -> Lambda2Form:
        tensor = np.asarray(tensor, dtype=float)
        n = g.n
        if tensor.shape != (n, n, n, n):
            raise DimensionError(f"expected a ({n},{n},{n},{n}) array, got {tensor.shape}")
        scale = max(1.0, float(np.max(np.abs(tensor))))
        tolerance = self._antisymmetry_tolerance * scale
        first_pair = np.max(np.abs(tensor + tensor.transpose(1, 0, 2, 3)))
        second_pair = np.max(np.abs(tensor + tensor.transpose(0, 1, 3, 2)))
        if first_pair > tolerance or second_pair > tolerance:
            raise SymmetryError(
                f"tensor is not antisymmetric in its index pairs "
                f"(defects {first_pair:.3e}, {second_pair:.3e})"
            )
        exchange = np.max(np.abs(tensor - tensor.transpose(2, 3, 0, 1)))
        if exchange > tolerance:
            raise SymmetryError(f"tensor violates pair exchange symmetry (defect {exchange:.3e})")
        basis = Lambda2Basis(n)
        first, second = basis.index_arrays()
        entries = tensor[first[:, None], second[:, None], first[None, :], second[None, :]]
        return Lambda2Form(basis, 0.5 * (entries + entries.T), self.induced_gram(g))

    def tensor_from_form(self, form: Lambda2Form) -> np.ndarray:
        n = form.n
        tensor = np.zeros((n, n, n, n))
        for p, (i, j) in enumerate(form.basis.pairs):
            for q, (k, l) in enumerate(form.basis.pairs):
                value = form.entries[p, q]
                tensor[i, j, k, l] = value
                tensor[j, i, k, l] = -value
                tensor[i, j, l, k] = -value
                tensor[j, i, l, k] = value
        return tensor

    def ricci_trace(
        self, form: Lambda2Form, g: SymmetricOperator2, pair: str = "24"
    ) -> SymmetricOperator2:
        """Contract the form against g^{-1} over slots (2,4) or (1,3)."""
        if form.n != g.n:
            raise DimensionError("form and metric dimensions differ")
        self._require_spd(g.entries, "metric")
        inverse = np.linalg.inv(g.entries)
        tensor = self.tensor_from_form(form)
        if pair == "24":
            ricci = np.einsum("jl,ijkl->ik", inverse, tensor)
        elif pair == "13":
            ricci = np.einsum("ik,ijkl->jl", inverse, tensor)
        else:
            raise ValueError(f"unknown trace pair {pair!r}")
        return SymmetricOperator2.symmetrized(ricci)

    def scalar_trace(self, form: Lambda2Form, g: SymmetricOperator2) -> float:
        ricci = self.ricci_trace(form, g)
        return float(np.einsum("ik,ik->", np.linalg.inv(g.entries), ricci.entries))

    def ricci_eigenvalues(self, form: Lambda2Form, g: SymmetricOperator2) -> np.ndarray:
        """Ricci eigenvalues against g (generalized problem)."""
        ricci = self.ricci_trace(form, g)
        return self._generalized_eigenvalues(ricci.entries, g.entries)

    def eigenvalues(self, form: Lambda2Form) -> np.ndarray:
        return self._generalized_eigenvalues(form.entries, form.gram)

    def min_eig(self, form: Lambda2Form) -> float:
        return float(self.eigenvalues(form)[0])

    def max_abs_eig(self, form: Lambda2Form) -> float:
        return float(np.max(np.abs(self.eigenvalues(form))))

    def two_smallest_sum(self, form: Lambda2Form) -> float:
        if form.basis.size < 2:
            raise DimensionError("the two smallest eigenvalues need dim Lambda^2 >= 2 (n >= 3)")
        values = self.eigenvalues(form)
        return float(values[0] + values[1])

    def is_psd(self, form: Lambda2Form) -> bool:
        return self.min_eig(form) >= -self._psd_slack

    def _generalized_eigenvalues(self, matrix: np.ndarray, gram: np.ndarray) -> np.ndarray:
        factor = self._cholesky(gram)
        half = linalg.solve_triangular(factor, matrix, lower=True)
        reduced = linalg.solve_triangular(factor, half.T, lower=True)
        return linalg.eigvalsh(0.5 * (reduced + reduced.T))

    def _cholesky(self, matrix: np.ndarray) -> np.ndarray:
        try:
            return linalg.cholesky(matrix, lower=True)
        except linalg.LinAlgError:
            smallest = float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0])
            raise NotPositiveDefiniteError("inner product is not positive definite", smallest)

    def _require_spd(self, matrix: np.ndarray, name: str) -> None:
        smallest = float(np.linalg.eigvalsh(matrix)[0])
        if smallest <= 0.0:
            logger.debug("rejecting %s with eigenvalue %.3e", name, smallest)
            raise NotPositiveDefiniteError(f"{name} is not positive definite", smallest)
