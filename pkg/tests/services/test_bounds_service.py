from pathlib import Path

import numpy as np
import pytest

from app.core.exceptions import DimensionError, HypothesisRefusedError
from app.models.functional import Functional
from app.services.bounds import BoundsService
from tests.metrics import round_sphere

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config" / "scenarios"
S3_POINT = np.array([1.1, 0.9, 1.3])


@pytest.fixture(scope="module")
def indefinite(scenario_service):
    text = (CONFIG_DIR / "indefinite-l.cfg").read_text(encoding="utf-8")
    return scenario_service.from_config(text, "indefinite-l.cfg")


@pytest.mark.parametrize(
    "kind, expected",
    [("operator", 1.0), ("bi", 2.0), ("ricci", 2.0), ("scalar", 6.0), ("flag", 2.0)],
)
def test_functionals_on_round_s3(bounds_service: BoundsService, kind, expected):
    value = bounds_service.evaluate_functional(kind, round_sphere(3), S3_POINT)
    assert value == pytest.approx(expected, abs=1e-4)


def test_functional_object_is_accepted(bounds_service: BoundsService):
    value = bounds_service.evaluate_functional(Functional("operator", 1.0), round_sphere(3), S3_POINT)
    assert value == pytest.approx(1.0, abs=1e-4)


def test_unknown_functional_is_rejected(bounds_service: BoundsService):
    with pytest.raises(ValueError):
        bounds_service.evaluate_functional("holonomy", round_sphere(3), S3_POINT)


def test_resolve_kappa_uses_declared_bound(bounds_service: BoundsService, doubled_hemisphere):
    assert bounds_service.resolve_kappa(doubled_hemisphere, "operator") == Functional("operator", 1.0)
    assert bounds_service.resolve_kappa(doubled_hemisphere, "operator", 0.5).kappa == 0.5


def test_resolve_kappa_refuses_without_bound(bounds_service: BoundsService, doubled_disk):
    with pytest.raises(HypothesisRefusedError) as exc:
        bounds_service.resolve_kappa(doubled_disk, "flag")
    assert exc.value.exit_code == 3


def test_dimension_is_checked_before_sweeping(bounds_service: BoundsService, doubled_disk):
    with pytest.raises(DimensionError):
        bounds_service.certify(doubled_disk, "flag", [0.2], kappa=0.0)


def test_indefinite_interface_is_refused_for_operator(bounds_service: BoundsService, indefinite):
    with pytest.raises(HypothesisRefusedError) as exc:
        bounds_service.check_hypothesis(indefinite.collar, Functional("operator", 0.0))
    assert exc.value.offending_value == pytest.approx(-0.7, abs=1e-5)


def test_indefinite_interface_is_accepted_for_scalar(bounds_service: BoundsService, indefinite):
    worst = bounds_service.check_hypothesis(indefinite.collar, Functional("scalar", 0.0))
    assert worst == pytest.approx(1.3, abs=1e-5)


def test_m0_normals_sample_ramp_and_beyond(bounds_service: BoundsService):
    normals = bounds_service.m0_normals(0.2, 0.75)
    assert normals[0] == pytest.approx(0.25 * 0.2 ** 4)
    assert 0.2 in normals
    assert normals[-1] == pytest.approx(0.2 + 0.25 * 0.55)
    assert np.all(normals > 0.0)

    m1 = bounds_service.m1_normals(0.2)
    assert m1[0] == pytest.approx(-0.2)
    assert np.all(m1 < 0.0)


def test_doubled_disk_certifies(bounds_service: BoundsService, doubled_disk):
    deltas = [0.4, 0.2, 0.1]
    result = bounds_service.certify(doubled_disk, "operator", deltas)

    assert result.passed, result.reasons
    assert result.kappa == 0.0
    assert [row.h for row in result.rows] == [0.0, 0.05, 0.0, 0.025, 0.0, 0.0125]
    assert all(row.C == pytest.approx(1.0) for row in result.rows)
    assert all(row.wall_ms == 0.0 for row in result.rows)

    unsmoothed = [row for row in result.rows if row.h == 0.0]
    residuals = [row.decomp_residual for row in unsmoothed]
    assert residuals[0] > residuals[1] > residuals[2]
    assert unsmoothed[0].sup_dist > unsmoothed[1].sup_dist > unsmoothed[2].sup_dist
    assert all(row.decomp_residual is None for row in result.rows if row.h > 0.0)


def test_doubled_hemisphere_needs_no_correction(bounds_service: BoundsService, doubled_hemisphere):
    # L = 0 and G1 = id, so with C = 0 the glued metric is the smooth one
    result = bounds_service.certify(doubled_hemisphere, "operator", [0.4, 0.2, 0.1], C=0.0, timings=True)

    assert result.passed, result.reasons
    assert result.side_floor == pytest.approx(1.0, abs=1e-9)
    assert result.m1_minimum == pytest.approx(1.0, abs=1e-9)
    for row in result.rows:
        assert row.eps_observed <= 5e-3
        assert row.wall_ms > 0.0
    assert all(row.sup_dist <= 1e-12 for row in result.rows if row.h == 0.0)


def test_oversized_smoothing_radius_is_skipped(bounds_service: BoundsService, doubled_hemisphere, mocker):
    warning = mocker.patch("app.services.bounds.logger.warning")
    result = bounds_service.certify(doubled_hemisphere, "operator", [0.2], hs=[0.1, 0.01])

    assert [row.h for row in result.rows] == [0.0, 0.01]
    warning.assert_called_once()


def test_overstated_kappa_is_refused(bounds_service: BoundsService, doubled_disk):
    with pytest.raises(HypothesisRefusedError) as exc:
        bounds_service.certify(doubled_disk, "operator", [0.4, 0.2, 0.1], kappa=10.0)
    assert exc.value.exit_code == 3
    assert exc.value.offending_value == pytest.approx(0.0, abs=1e-9)


def test_kappa_within_tolerance_of_floor_is_accepted(quick_bounds_service: BoundsService, doubled_hemisphere):
    result = quick_bounds_service.certify(doubled_hemisphere, "operator", [0.2], hs=(), C=0.0, kappa=1.0 + 1e-10)
    assert result.passed, result.reasons


def test_eps_is_measured_against_requested_kappa(quick_bounds_service: BoundsService, doubled_hemisphere):
    lowered = quick_bounds_service.certify(doubled_hemisphere, "operator", [0.2], hs=(), C=0.0, kappa=0.5)
    assert lowered.side_floor == pytest.approx(1.0, abs=1e-9)
    assert lowered.rows[0].eps_observed == pytest.approx(-0.5, abs=1e-9)


def test_m1_side_below_kappa_fails(quick_bounds_service: BoundsService, doubled_disk, mocker):
    mocker.patch.object(quick_bounds_service, "_side_minimum", return_value=0.5)
    result = quick_bounds_service.certify(doubled_disk, "operator", [0.2], hs=(), kappa=0.5)

    assert not result.passed
    assert result.m1_minimum == pytest.approx(0.0, abs=1e-9)
    assert any("M1 side" in reason for reason in result.reasons)


def test_kappa_tolerance_depends_on_derivative_supply(bounds_service: BoundsService, doubled_disk, indefinite):
    assert bounds_service.kappa_tolerance(doubled_disk.collar) < bounds_service.kappa_tolerance(indefinite.collar)


@pytest.mark.parametrize(
    "name, kappa",
    [("doubled-disk-2d", 0.0), ("doubled-ball-3d", 0.0), ("doubled-hemisphere-3d", 1.0), ("cap-on-disk-2d", 0.0)],
)
def test_builtin_gluing_certifies(quick_bounds_service: BoundsService, scenario_service, name, kappa):
    result = quick_bounds_service.certify(scenario_service.get(name), "operator", [0.4, 0.2, 0.1])

    assert result.passed, result.reasons
    assert result.kappa == kappa
    unsmoothed = [row for row in result.rows if row.h == 0.0]
    smoothed = [row for row in result.rows if row.h > 0.0]
    assert [row.h for row in smoothed] == pytest.approx([0.05, 0.025, 0.0125])
    for ladder in (unsmoothed, smoothed):
        assert ladder[0].sup_dist > ladder[1].sup_dist > ladder[2].sup_dist


def test_smooth_control_stays_close_to_bound(quick_bounds_service: BoundsService, scenario_service):
    result = quick_bounds_service.certify(scenario_service.get("doubled-hemisphere-3d"), "operator", [0.4, 0.2, 0.1], C=0.0)

    assert result.passed, result.reasons
    assert all(row.eps_observed <= 5e-3 for row in result.rows)


@pytest.mark.parametrize(
    "name, kind",
    [
        ("doubled-ball-3d", "ricci"),
        ("doubled-ball-3d", "scalar"),
        ("doubled-ball-3d", "bi"),
        ("doubled-ball-3d", "flag"),
        ("doubled-disk-2d", "isotropic2"),
    ],
)
def test_variant_functionals_certify(quick_bounds_service: BoundsService, scenario_service, name, kind):
    result = quick_bounds_service.certify(scenario_service.get(name), kind, [0.4, 0.2, 0.1])

    assert result.passed, result.reasons
    assert result.functional == kind
    assert result.side_floor == pytest.approx(0.0, abs=1e-8)


def test_indefinite_interface_certifies_scalar_after_perturbation(quick_bounds_service: BoundsService, indefinite):
    result = quick_bounds_service.certify(indefinite, "scalar", [0.4, 0.2, 0.1], phi_slope=-0.02)

    assert result.passed, result.reasons
    assert result.kappa == 0.0
    assert result.side_floor > 0.0


def test_indefinite_interface_refuses_operator_sweep(quick_bounds_service: BoundsService, indefinite):
    with pytest.raises(HypothesisRefusedError) as exc:
        quick_bounds_service.certify(indefinite, "operator", [0.4, 0.2, 0.1])
    assert exc.value.exit_code == 3
