import numpy as np
import pytest

from app.core.exceptions import DimensionError, NotPositiveDefiniteError
from app.models.lambda2 import Lambda2Form, SymmetricOperator2
from app.services.lambda2 import Lambda2Service


def _random_psd(rng, n: int) -> SymmetricOperator2:
    m = rng.standard_normal((n, n))
    return SymmetricOperator2.symmetrized(m @ m.T)


def _random_spd(rng, n: int) -> SymmetricOperator2:
    m = rng.standard_normal((n, n))
    return SymmetricOperator2.symmetrized(m @ m.T + n * np.eye(n))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_kn_product_of_identity_is_identity(lambda2_service: Lambda2Service, n):
    identity = SymmetricOperator2.identity(n)
    form = lambda2_service.kn_product(identity, identity)

    assert np.array_equal(form.entries, np.eye(form.basis.size))
    assert np.allclose(lambda2_service.eigenvalues(form), 1.0)


def test_induced_gram_of_identity(lambda2_service: Lambda2Service):
    gram = lambda2_service.induced_gram(SymmetricOperator2.identity(4))
    assert np.allclose(gram, np.eye(6))


@pytest.mark.parametrize("n", [2, 3, 4])
def test_kn_product_of_psd_pair_is_psd(lambda2_service: Lambda2Service, rng, n):
    worst = np.inf
    for _ in range(300):
        metric = _random_spd(rng, n)
        form = lambda2_service.kn_product(_random_psd(rng, n), _random_psd(rng, n), metric)
        scale = max(1.0, float(np.max(np.abs(form.entries))))
        worst = min(worst, lambda2_service.min_eig(form) / scale)
    assert worst >= -1e-10


@pytest.mark.parametrize("pair", ["24", "13"])
def test_trace_of_psd_form_is_psd(lambda2_service: Lambda2Service, rng, pair):
    for _ in range(200):
        metric = _random_spd(rng, 4)
        form = lambda2_service.kn_product(_random_psd(rng, 4), _random_psd(rng, 4), metric)
        ricci = lambda2_service.ricci_trace(form, metric, pair=pair)
        scale = max(1.0, float(np.max(np.abs(ricci.entries))))
        assert np.linalg.eigvalsh(ricci.entries)[0] >= -1e-10 * scale


def test_kn_tensor_matches_form(lambda2_service: Lambda2Service, rng):
    a = _random_psd(rng, 3)
    b = _random_psd(rng, 3)
    form = lambda2_service.kn_product(a, b)
    tensor = lambda2_service.kn_tensor(a.entries, b.entries)

    assert np.allclose(lambda2_service.tensor_from_form(form), tensor)


def test_kn_tensor_shape_mismatch(lambda2_service: Lambda2Service):
    with pytest.raises(DimensionError):
        lambda2_service.kn_tensor(np.eye(2), np.eye(3))


def test_form_round_trip_through_tensor(lambda2_service: Lambda2Service, rng):
    metric = _random_spd(rng, 4)
    form = lambda2_service.kn_product(_random_psd(rng, 4), metric, metric)
    again = lambda2_service.form_from_tensor(lambda2_service.tensor_from_form(form), metric)

    assert np.allclose(again.entries, form.entries)
    assert np.allclose(again.gram, form.gram)


def test_scalar_trace_of_unit_sphere_form(lambda2_service: Lambda2Service):
    metric = SymmetricOperator2.identity(3)
    form = lambda2_service.kn_product(metric, metric)

    assert lambda2_service.scalar_trace(form, metric) == pytest.approx(6.0)
    assert np.allclose(lambda2_service.ricci_eigenvalues(form, metric), 2.0)


def test_bi_curvature_needs_three_dimensions(lambda2_service: Lambda2Service):
    identity = SymmetricOperator2.identity(2)
    form = lambda2_service.kn_product(identity, identity)
    with pytest.raises(DimensionError):
        lambda2_service.two_smallest_sum(form)


def test_bi_curvature_bounds_operator(lambda2_service: Lambda2Service, rng):
    for _ in range(50):
        metric = _random_spd(rng, 4)
        form = lambda2_service.kn_product(_random_spd(rng, 4), _random_psd(rng, 4), metric)
        assert lambda2_service.min_eig(form) <= 0.5 * lambda2_service.two_smallest_sum(form) + 1e-9


def test_indefinite_metric_rejected(lambda2_service: Lambda2Service):
    metric = SymmetricOperator2.symmetrized(np.diag([1.0, -1.0, 2.0]))
    with pytest.raises(NotPositiveDefiniteError) as exc:
        lambda2_service.induced_gram(metric)
    assert exc.value.smallest_eigenvalue == pytest.approx(-1.0)


def test_evaluate_on_basis_bivectors(lambda2_service: Lambda2Service):
    identity = SymmetricOperator2.identity(3)
    form = lambda2_service.kn_product(identity, identity)
    e = np.eye(3)

    assert form.evaluate(Lambda2Form.wedge(e[0], e[1]), Lambda2Form.wedge(e[0], e[1])) == pytest.approx(1.0)
    assert form.evaluate(Lambda2Form.wedge(e[0], e[1]), Lambda2Form.wedge(e[0], e[2])) == pytest.approx(0.0)
