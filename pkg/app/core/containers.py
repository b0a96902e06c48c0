"""Dependency injection container for the toolkit."""

from dependency_injector import containers, providers

from app.core.config import settings
from app.models.metric import FiniteDifferenceConfig
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


class Container(containers.DeclarativeContainer):
    """Wires every service; sweep and sampling knobs come from `config`."""

    # Configuration
    config = providers.Configuration()

    # Repositories
    scenario_repository = providers.Singleton(ScenarioRepository)

    # Algebra and curvature
    lambda2_service = providers.Factory(Lambda2Service, psd_slack=config.psd_slack)

    frame_service = providers.Factory(
        FrameService,
        restarts=config.frame_restarts,
        refine=config.frame_refine,
        iterations=config.frame_iterations,
        seed=config.seed,
    )

    curvature_service = providers.Factory(
        CurvatureService,
        lambda2_service=lambda2_service,
        frame_service=frame_service,
    )

    # Collar and construction
    fd_config = providers.Factory(
        FiniteDifferenceConfig,
        step=config.fd_step,
        richardson=config.fd_richardson,
    )

    collar_service = providers.Factory(
        CollarService,
        curvature_service=curvature_service,
        fd=fd_config,
        sample_count=config.sample_tangential,
    )

    profile_service = providers.Factory(ProfileService, blend_width=config.blend_width)

    gluing_service = providers.Factory(
        GluingService,
        curvature_service=curvature_service,
        collar_service=collar_service,
        c_margin=config.c_margin,
        sample_count=config.sample_tangential,
    )

    smoothing_service = providers.Factory(
        SmoothingService,
        curvature_service=curvature_service,
        sample_count=config.sample_tangential,
        normal_samples=config.sample_normal,
    )

    bounds_service = providers.Factory(
        BoundsService,
        curvature_service=curvature_service,
        collar_service=collar_service,
        profile_service=profile_service,
        gluing_service=gluing_service,
        smoothing_service=smoothing_service,
        threads=config.threads,
        trend_tolerance=config.trend_tolerance,
        sample_count=config.sample_tangential,
        normal_samples=config.sample_normal,
        mollifier_mode=config.mollifier_mode,
    )

    # Scenarios
    scenario_service = providers.Singleton(
        ScenarioService,
        repository=scenario_repository,
        collar_service=collar_service,
        scenario_dirs=config.scenario_dirs,
        sample_count=config.sample_tangential,
    )


def settings_dict() -> dict:
    return {
        "psd_slack": settings.PSD_SLACK,
        "frame_restarts": settings.FRAME_RESTARTS,
        "frame_refine": settings.FRAME_REFINE,
        "frame_iterations": settings.FRAME_ITERATIONS,
        "seed": settings.DEFAULT_SEED,
        "fd_step": settings.FD_STEP,
        "fd_richardson": settings.FD_RICHARDSON,
        "sample_tangential": settings.SAMPLE_TANGENTIAL,
        "sample_normal": settings.SAMPLE_NORMAL,
        "blend_width": settings.BLEND_WIDTH,
        "c_margin": settings.C_MARGIN,
        "threads": settings.SWEEP_THREADS,
        "trend_tolerance": settings.TREND_TOLERANCE,
        "mollifier_mode": "normal-only",
        "scenario_dirs": settings.scenario_dirs(),
    }


# Global container instance
container = Container()

# Configure the container
container.config.from_dict(settings_dict())
