import numpy as np
import pytest

from app.core.exceptions import PerturbationError
from app.services.gluing import GluingService
from app.services.scenario import BUILTINS

DELTAS = (0.4, 0.2, 0.1)
FLAT_SLAB = """
name = flat-slab-2d
n = 2
box = [-1, 1], [-0.9, 0.9]
L_spectrum = 0
"""


@pytest.fixture(scope="module")
def disk_forms(collar_service, doubled_disk):
    return collar_service.second_fundamental_forms(doubled_disk.collar)


def test_nabla_normal_squared_G_on_doubled_disk(gluing_service: GluingService, doubled_disk):
    collar = doubled_disk.collar
    value = gluing_service.nabla_normal_squared_G(collar, collar.boundary_samples(1)[0])
    assert value[0, 0] == pytest.approx(16.0, abs=1e-10)


def test_choose_C_keeps_margin_when_collar_already_curves_enough(gluing_service, doubled_disk, disk_forms):
    collar = doubled_disk.collar
    assert gluing_service.c_lower_bound(collar, disk_forms, collar.boundary_samples(1)[0]) == pytest.approx(-4.0)
    assert gluing_service.choose_C(collar, disk_forms) == pytest.approx(1.0)


def test_choose_C_is_the_margin_for_product_flat_slab(gluing_service, scenario_service):
    slab = scenario_service.from_config(FLAT_SLAB, "flat-slab")
    assert gluing_service.choose_C(slab.collar) == pytest.approx(1.0, abs=1e-9)


def test_choose_C_is_the_margin_for_hemisphere(gluing_service, doubled_hemisphere):
    assert gluing_service.choose_C(doubled_hemisphere.collar) == pytest.approx(1.0, abs=1e-9)


def test_choose_C_on_cap_on_cylinder(gluing_service, scenario_service):
    # L = 0 and G1 = cos^2(x^n), so L^2 - 1/2 nabla_N^2 G1 = 1
    assert gluing_service.choose_C(scenario_service.get("cap-on-cylinder-2d").collar) == pytest.approx(2.0, abs=1e-9)


def test_choose_C_adds_margin_to_positive_bound(curvature_service, collar_service, doubled_disk, disk_forms, mocker):
    service = GluingService(curvature_service, collar_service, c_margin=0.5)
    mocker.patch.object(service, "c_lower_bound", return_value=3.0)
    assert service.choose_C(doubled_disk.collar, disk_forms) == pytest.approx(3.5)


def test_build_g_delta_rejects_negative_C(gluing_service, profile_service, doubled_disk, disk_forms):
    with pytest.raises(ValueError):
        gluing_service.build_g_delta(doubled_disk.collar, profile_service.build_bump(0.2), -1.0, disk_forms)


@pytest.mark.parametrize("name", list(BUILTINS))
def test_glued_metric_is_c1_across_interface(gluing_service, collar_service, profile_service, scenario_service, name):
    scenario = scenario_service.get(name)
    forms = collar_service.second_fundamental_forms(scenario.collar)
    for delta in DELTAS:
        modified = gluing_service.build_g_delta(scenario.collar, profile_service.build_bump(delta), 0.5, forms)
        report = gluing_service.regularity(gluing_service.glue(modified))

        assert report.metric_jump <= 1e-10
        assert report.normal_derivative_jump <= 1e-8


def test_glue_dispatches_on_side(gluing_service, profile_service, doubled_disk, disk_forms):
    collar = doubled_disk.collar
    glued = gluing_service.glue(gluing_service.build_g_delta(collar, profile_service.build_bump(0.2), 0.0, disk_forms))
    y = collar.boundary_samples(1)[0]
    below = collar.domain.point(y, -0.1)
    above = collar.domain.point(y, 0.1)

    assert glued.side(below) == "M1"
    assert glued.side(above) == "M0"
    assert np.array_equal(glued.field.value(below), collar.g1.value(below))
    assert np.array_equal(glued.field.value(above), glued.modified.field.value(above))


def test_g_delta_matches_g0_beyond_delta_without_C(gluing_service, profile_service, doubled_disk, disk_forms):
    collar = doubled_disk.collar
    modified = gluing_service.build_g_delta(collar, profile_service.build_bump(0.2), 0.0, disk_forms)
    x = collar.domain.point(collar.boundary_samples(1)[0], 0.3)
    assert np.allclose(modified.field.value(x), collar.g0.value(x), atol=1e-14)


@pytest.mark.parametrize("delta", DELTAS)
def test_decomposition_exact_on_interface(gluing_service, profile_service, doubled_disk, disk_forms, delta):
    collar = doubled_disk.collar
    modified = gluing_service.build_g_delta(collar, profile_service.build_bump(delta), 0.0, disk_forms)
    lhs, rhs, residual = gluing_service.assemble_decomposition(modified, collar.boundary_point(collar.boundary_samples(1)[0]))

    assert lhs.entries[0, 0] == pytest.approx(8.0 + 2.0 / delta ** 4, rel=1e-8)
    assert residual <= 1e-4


def test_decomposition_residual_shrinks_with_delta(gluing_service, profile_service, doubled_disk, disk_forms):
    collar = doubled_disk.collar
    y = collar.boundary_samples(1)[0]
    residuals = []
    for delta in DELTAS:
        modified = gluing_service.build_g_delta(collar, profile_service.build_bump(delta), 0.0, disk_forms)
        residuals.append(gluing_service.assemble_decomposition(modified, collar.domain.point(y, 0.5 * delta))[2])
    assert residuals[0] > residuals[1] > residuals[2]


def test_boundary_identity_on_doubled_disk(gluing_service, doubled_disk):
    report = gluing_service.check_boundary_inequality(doubled_disk.collar, kappa=0.0)
    assert report.identity_residual <= 1e-4
    assert report.min_slack >= -1e-6


def test_boundary_identity_on_doubled_hemisphere(gluing_service, doubled_hemisphere):
    report = gluing_service.check_boundary_inequality(doubled_hemisphere.collar, kappa=1.0)
    assert report.identity_residual <= 1e-4
    assert report.min_slack >= -1e-4


def test_modified_metric_keeps_normal_lines_geodesic(gluing_service, profile_service, doubled_disk, disk_forms):
    collar = doubled_disk.collar
    modified = gluing_service.build_g_delta(collar, profile_service.build_bump(0.2), 0.0, disk_forms)
    defects = gluing_service.connection_defects(modified, collar.domain.point(collar.boundary_samples(1)[0], 0.1))
    assert defects.normal_geodesic <= 1e-12


def test_perturbation_rejects_positive_slope(gluing_service, doubled_disk):
    with pytest.raises(PerturbationError):
        gluing_service.perturb_mean_curvature(doubled_disk.collar, 0.25, 0.5)


def test_perturbation_rejects_width_beyond_collar(gluing_service, doubled_disk):
    with pytest.raises(PerturbationError):
        gluing_service.perturb_mean_curvature(doubled_disk.collar, 0.9, -0.5)


def test_zero_slope_keeps_collar(gluing_service, doubled_disk):
    assert gluing_service.perturb_mean_curvature(doubled_disk.collar, 0.25, 0.0) is doubled_disk.collar


def test_perturbation_raises_tangential_mean_curvature(gluing_service, doubled_disk, mocker):
    collar = doubled_disk.collar
    warning = mocker.patch("app.services.gluing.logger.warning")
    perturbed = gluing_service.perturb_mean_curvature(collar, 0.25, -0.5)
    report = gluing_service.perturbation_report(collar, perturbed, 0.25, -0.5)

    assert report.observed_increment == pytest.approx(report.predicted_tangential_trace, abs=1e-12)
    assert report.predicted_full_trace == pytest.approx(0.5)
    assert report.predicted_tangential_trace == pytest.approx(0.25)
    warning.assert_called_once()
    x = collar.boundary_point(collar.boundary_samples(1)[0])
    assert np.allclose(perturbed.g0.value(x), collar.g0.value(x))


@pytest.mark.parametrize("name", list(BUILTINS))
def test_decomposition_residual_for_every_builtin(gluing_service, collar_service, profile_service, scenario_service, name):
    collar = scenario_service.get(name).collar
    forms = collar_service.second_fundamental_forms(collar)
    y = collar.boundary_samples(1)[0]
    halfway = []
    for delta in DELTAS:
        modified = gluing_service.build_g_delta(collar, profile_service.build_bump(delta), 0.5, forms)
        assert gluing_service.assemble_decomposition(modified, collar.boundary_point(y))[2] <= 1e-4
        halfway.append(gluing_service.assemble_decomposition(modified, collar.domain.point(y, 0.5 * delta))[2])
    assert halfway[0] > halfway[1] > halfway[2]
