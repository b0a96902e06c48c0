import math

import numpy as np
import pytest

from app.core.exceptions import BoundaryIsometryError, DimensionError, FermiFormError
from app.models.collar import CollarData
from app.models.metric import ChartDomain, MetricField
from app.services.collar import CollarService


def test_doubled_disk_second_fundamental_forms(collar_service: CollarService, doubled_disk):
    collar = doubled_disk.collar
    y = collar.boundary_samples(1)[0]
    L0 = collar_service.second_ff("M0", collar)
    L1 = collar_service.second_ff("M1", collar)

    assert collar_service.spectrum(collar, L0, y).tolist() == pytest.approx([1.0])
    assert collar_service.spectrum(collar, L1, y).tolist() == pytest.approx([1.0])
    assert collar_service.spectrum(collar, lambda z: L0(z) + L1(z), y).tolist() == pytest.approx([2.0])


def test_hemisphere_equator_is_totally_geodesic(collar_service: CollarService, scenario_service):
    collar = scenario_service.get("doubled-hemisphere-3d").collar
    for y in collar.boundary_samples(2):
        assert np.allclose(collar_service.second_ff("M0", collar)(y), 0.0, atol=1e-14)
        assert np.allclose(collar_service.second_ff("M1", collar)(y), 0.0, atol=1e-14)


def test_second_ff_rejects_unknown_side(collar_service: CollarService, doubled_disk):
    with pytest.raises(ValueError):
        collar_service.second_ff("M2", doubled_disk.collar)


def test_boundary_isometry_violation(collar_service: CollarService, doubled_disk):
    collar = doubled_disk.collar
    stretched = MetricField(
        collar.domain, lambda x: np.diag([(2.0 + x[-1]) ** 2, 1.0]), fd=collar_service.fd, fermi=True
    )
    with pytest.raises(BoundaryIsometryError):
        collar_service.validate(collar.replace(g1=stretched))


def test_fermi_form_violation(collar_service: CollarService, doubled_disk):
    collar = doubled_disk.collar
    sheared = MetricField(
        collar.domain,
        lambda x: np.array([[(1.0 + x[-1]) ** 2, 0.1], [0.1, 1.0]]),
        fd=collar_service.fd,
    )
    with pytest.raises(FermiFormError):
        collar_service.validate(collar.replace(g1=sheared))


def test_extended_shape_operator_is_parallel_on_disk(collar_service: CollarService, doubled_disk):
    collar = doubled_disk.collar
    forms = collar_service.second_fundamental_forms(collar)
    y = collar.boundary_samples(1)[0]
    for t in (0.0, 0.1, 0.3):
        operator = forms.extended.operator(collar.domain.point(y, t))
        assert operator[0, 0] == pytest.approx(2.0, abs=1e-8)
        assert abs(operator[-1, -1]) <= 1e-14


def test_normal_lines_are_geodesics(collar_service: CollarService, doubled_disk):
    collar = doubled_disk.collar
    x = collar.domain.point(collar.boundary_samples(1)[0], 0.2)
    assert collar_service.normal_geodesic_defect(collar.g0, x) <= 1e-14


def test_g1_continuation_reproduces_polynomial_metric(collar_service: CollarService, doubled_disk):
    collar = doubled_disk.collar
    continued = collar_service.extend_g1_prime(collar)
    x = collar.domain.point(collar.boundary_samples(1)[0], 0.3)

    assert continued.value(x)[0, 0] == pytest.approx(1.69, abs=1e-8)
    assert continued.value(x)[1, 1] == 1.0


def test_fermi_chart_from_polar_straightening(collar_service: CollarService):
    euclidean_domain = ChartDomain(2, ((-3.0, 3.0), (-3.0, 3.0)))
    euclidean = MetricField(euclidean_domain, lambda p: np.eye(2), fd=collar_service.fd)
    source_domain = ChartDomain(2, ((-1.0, 1.0), (-0.5, 0.5)))

    def straighten(u):
        return np.array([(1.0 + u[1]) * math.cos(u[0]), (1.0 + u[1]) * math.sin(u[0])])

    def jacobian(u):
        r = 1.0 + u[1]
        return np.array(
            [[-r * math.sin(u[0]), math.cos(u[0])], [r * math.cos(u[0]), math.sin(u[0])]]
        )

    chart = collar_service.fermi_from_general(
        euclidean, 0.3, straighten=straighten, straighten_jacobian=jacobian, domain=source_domain
    )

    assert chart.width == 0.3
    assert not chart.shrunk
    assert chart.min_jacobian_ratio > 0.05
    assert np.allclose(chart.metric.value([0.2, 0.25]), np.diag([1.5625, 1.0]), atol=1e-6)


def test_collar_data_requires_matching_dimensions(doubled_disk, scenario_service):
    ball = scenario_service.get("doubled-ball-3d").collar
    with pytest.raises(DimensionError):
        CollarData(doubled_disk.collar.g0, ball.g1, 0.5)


def _exp_until_interface(domain: ChartDomain) -> MetricField:
    """diag(e^t, 1) on x^n <= 0; undefined (nan) past the interface."""

    def entry(x):
        return math.exp(x[-1]) if x[-1] <= 0.0 else math.nan

    def coeff(x):
        return np.diag([entry(x), 1.0])

    def d1(x):
        out = np.zeros((2, 2, 2))
        out[1, 0, 0] = entry(x)
        return out

    def d2(x):
        out = np.zeros((2, 2, 2, 2))
        out[1, 1, 0, 0] = entry(x)
        return out

    return MetricField(domain, coeff, d1, d2, fermi=True, label="g1")


def test_taylor_data_reads_g1_only_on_its_side(collar_service: CollarService, doubled_disk):
    collar = doubled_disk.collar
    g1 = _exp_until_interface(collar.domain)
    coefficients = collar_service.taylor_coefficients(g1, collar.boundary_samples(1)[0])

    assert [float(c[0, 0]) for c in coefficients] == pytest.approx([1.0] * 5, abs=1e-5)


def test_g1_continuation_is_quartic_taylor_polynomial(collar_service: CollarService, doubled_disk):
    collar = doubled_disk.collar
    continued = collar_service.extend_g1_prime(collar.replace(g1=_exp_until_interface(collar.domain)))
    y = collar.boundary_samples(1)[0]
    t = 0.3

    taylor = sum(t ** m / math.factorial(m) for m in range(5))
    assert continued.value(collar.domain.point(y, t))[0, 0] == pytest.approx(taylor, abs=1e-6)
    assert continued.value(collar.domain.point(y, -t))[0, 0] == pytest.approx(math.exp(-t))


@pytest.mark.parametrize("name", ["doubled-disk-2d", "doubled-ball-3d", "cap-on-disk-2d"])
def test_extended_operator_keeps_interface_spectrum(collar_service: CollarService, scenario_service, name):
    scenario = scenario_service.get(name)
    collar = scenario.collar
    extended = collar_service.second_fundamental_forms(collar).extended
    y = collar.boundary_samples(1)[0]
    for t in (0.0, 0.2, 0.45):
        operator = extended.operator(collar.domain.point(y, t))
        spectrum = np.sort(np.linalg.eigvals(operator[:-1, :-1]).real)
        assert spectrum.min() >= -1e-10
        assert spectrum.tolist() == pytest.approx(sorted(scenario.L_spectrum), abs=1e-6)
