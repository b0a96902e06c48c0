import numpy as np
import pytest

from app.repositories.scenario import ScenarioRepository
from app.services.bounds import BoundsService
from app.services.collar import CollarService
from app.services.curvature import CurvatureService
from app.services.frames import FrameService
from app.services.gluing import GluingService
from app.services.lambda2 import Lambda2Service
from app.services.profile import ProfileService
from app.services.scenario import ScenarioService
from app.services.smoothing import SmoothingService


@pytest.fixture(scope="session")
def lambda2_service():
    return Lambda2Service()


@pytest.fixture(scope="session")
def frame_service():
    return FrameService(restarts=256, refine=4, iterations=60, seed=42)


@pytest.fixture(scope="session")
def curvature_service(lambda2_service, frame_service):
    return CurvatureService(lambda2_service, frame_service)


@pytest.fixture(scope="session")
def collar_service(curvature_service):
    return CollarService(curvature_service)


@pytest.fixture(scope="session")
def profile_service():
    return ProfileService()


@pytest.fixture(scope="session")
def gluing_service(curvature_service, collar_service):
    return GluingService(curvature_service, collar_service)


@pytest.fixture(scope="session")
def smoothing_service(curvature_service):
    return SmoothingService(curvature_service)


@pytest.fixture(scope="session")
def bounds_service(curvature_service, collar_service, profile_service, gluing_service, smoothing_service):
    return BoundsService(
        curvature_service, collar_service, profile_service, gluing_service, smoothing_service, threads=1
    )


@pytest.fixture(scope="session")
def quick_bounds_service(lambda2_service, collar_service, profile_service, gluing_service, smoothing_service):
    """Coarse sampling and a short frame search for whole-ladder sweeps."""
    frames = FrameService(restarts=64, refine=2, iterations=30, seed=42)
    return BoundsService(
        CurvatureService(lambda2_service, frames),
        collar_service,
        profile_service,
        gluing_service,
        smoothing_service,
        threads=1,
        sample_count=1,
        normal_samples=4,
    )


@pytest.fixture(scope="session")
def scenario_service(collar_service):
    return ScenarioService(ScenarioRepository(), collar_service)


@pytest.fixture(scope="session")
def doubled_disk(scenario_service):
    return scenario_service.get("doubled-disk-2d")


@pytest.fixture(scope="session")
def doubled_hemisphere(scenario_service):
    return scenario_service.get("doubled-hemisphere-2d")


@pytest.fixture
def rng():
    return np.random.default_rng(42)
