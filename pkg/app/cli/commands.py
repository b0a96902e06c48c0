import logging
from pathlib import Path
from typing import Optional

from app.cli.report import render_profile, render_scenarios, render_sweep
from app.core.containers import Container
from app.core.exceptions import UnknownScenarioError
from app.models.scenario import Scenario
from app.schemas.run import RunSpec

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_FAIL = 2


def _emit(text: str, output: Optional[str]) -> None:
    if output is None:
        print(text, end="")
        return
    path = Path(output)
    if path.parent != Path(""):
        path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", path)


def cmd_list(container: Container) -> str:
    """Scenario table: builtins in registration order, then config scenarios by name."""
    return render_scenarios(container.scenario_service().list())


def load_scenario(spec: RunSpec, container: Container) -> Scenario:
    scenarios = container.scenario_service()
    if spec.config_path is None:
        return scenarios.get(spec.scenario)
    path = Path(spec.config_path)
    if not path.is_file():
        raise UnknownScenarioError(f"config file {path} not found")
    return scenarios.from_config(path.read_text(encoding="utf-8"), source=str(path))


def cmd_certify(spec: RunSpec, container: Container) -> int:
    scenario = load_scenario(spec, container)
    result = container.bounds_service().certify(
        scenario,
        spec.functional,
        spec.deltas,
        hs=spec.h_ladder(),
        C=spec.C,
        kappa=spec.kappa,
        phi_slope=spec.phi_slope,
        phi_width=spec.phi_width,
        timings=spec.timings,
    )
    _emit(render_sweep(result.rows), spec.output)
    return EXIT_PASS if result.passed else EXIT_FAIL


def cmd_profile(delta: float, output: Optional[str], container: Container, points: int = 2001) -> int:
    profiles = container.profile_service()
    profile = profiles.build_bump(delta)
    certificate = profiles.certify(profile)
    _emit(render_profile(profiles.table(profile, points), certificate), output)
    if not certificate.passed:
        logger.warning("Profile for delta=%s violates %s", delta, certificate.violations)
    return EXIT_PASS if certificate.passed else EXIT_FAIL
