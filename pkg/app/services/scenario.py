"""
Builtin gluing scenarios with closed-form Fermi charts, and config scenarios.

Every builtin lives on the box tangential x [-0.75, 0.75] with collar width
0.5; x^n >= 0 is the g0 side and x^n <= 0 the g1 side.
"""

import logging
import math
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np

from app.core.exceptions import ScenarioMetadataError, UnknownScenarioError
from app.models.collar import CollarData
from app.models.metric import AxisFactor, ChartDomain, MetricField, diagonal_metric
from app.models.scenario import Scenario
from app.parsers.expression import compile_expression
from app.parsers.scenario_config import parse_scenario_config
from app.repositories.scenario import ScenarioRepository
from app.schemas.report import ScenarioSummary
from app.schemas.scenario import ScenarioDocument
from app.services.collar import CollarService

logger = logging.getLogger(__name__)

WIDTH = 0.5
NORMAL_RANGE = (-0.75, 0.75)
ANGLE = (-math.pi, math.pi)
POLAR = (0.1, math.pi - 0.1)
CAP_ANGLE = math.pi / 3.0
SPECTRUM_TOLERANCE = 1e-8
FD_SPECTRUM_TOLERANCE = 1e-6


# Univariate factors
def _square_linear(axis: int, c0: float, c1: float) -> AxisFactor:
    """(c0 + c1 t)^2"""
    return AxisFactor(
        axis,
        lambda t: (c0 + c1 * t) ** 2,
        lambda t: 2.0 * c1 * (c0 + c1 * t),
        lambda t: 2.0 * c1 * c1,
    )


def _sin_squared(axis: int, shift: float = 0.0, scale: float = 1.0) -> AxisFactor:
    """sin^2(shift + scale t)"""
    return AxisFactor(
        axis,
        lambda t: math.sin(shift + scale * t) ** 2,
        lambda t: scale * math.sin(2.0 * (shift + scale * t)),
        lambda t: 2.0 * scale * scale * math.cos(2.0 * (shift + scale * t)),
    )


def _cos_squared(axis: int) -> AxisFactor:
    return AxisFactor(
        axis,
        lambda t: math.cos(t) ** 2,
        lambda t: -math.sin(2.0 * t),
        lambda t: -2.0 * math.cos(2.0 * t),
    )


def constant_curvature_kappas(k: float, n: int, product_flat: bool = False) -> Dict[str, float]:
    """Lower bounds every functional inherits from sectional curvature == k."""
    kappa = {"operator": k, "ricci": (n - 1) * k, "scalar": n * (n - 1) * k}
    if n >= 3:
        kappa.update(bi=2.0 * k, flag=2.0 * k)
    if n >= 4:
        kappa["isotropic"] = 4.0 * k
    if product_flat:
        if n + 1 >= 4:
            kappa["isotropic1"] = 0.0
        kappa["isotropic2"] = 0.0
    return kappa


# Builtin scenarios
def _doubled_disk() -> Scenario:
    domain = ChartDomain(2, (ANGLE, NORMAL_RANGE))
    g0 = diagonal_metric(domain, [[_square_linear(1, 1.0, -1.0)], []], label="g0")
    g1 = diagonal_metric(domain, [[_square_linear(1, 1.0, 1.0)], []], label="g1")
    return Scenario(
        "doubled-disk-2d", CollarData(g0, g1, WIDTH), constant_curvature_kappas(0.0, 2, True), (2.0,)
    )


def _doubled_ball() -> Scenario:
    domain = ChartDomain(3, (POLAR, ANGLE, NORMAL_RANGE))

    def side(sign: float, label: str) -> MetricField:
        radial = _square_linear(2, 1.0, sign)
        return diagonal_metric(domain, [[radial], [radial, _sin_squared(0)], []], label=label)

    return Scenario(
        "doubled-ball-3d",
        CollarData(side(-1.0, "g0"), side(1.0, "g1"), WIDTH),
        constant_curvature_kappas(0.0, 3, True),
        (2.0, 2.0),
    )


def _doubled_hemisphere_2d() -> Scenario:
    domain = ChartDomain(2, (ANGLE, NORMAL_RANGE))
    g0 = diagonal_metric(domain, [[_cos_squared(1)], []], label="g0")
    g1 = diagonal_metric(domain, [[_cos_squared(1)], []], label="g1")
    return Scenario(
        "doubled-hemisphere-2d", CollarData(g0, g1, WIDTH), constant_curvature_kappas(1.0, 2), (0.0,), smooth=True
    )


def _doubled_hemisphere_3d() -> Scenario:
    domain = ChartDomain(3, (POLAR, ANGLE, NORMAL_RANGE))

    def side(label: str) -> MetricField:
        return diagonal_metric(
            domain, [[_cos_squared(2)], [_cos_squared(2), _sin_squared(0)], []], label=label
        )

    return Scenario(
        "doubled-hemisphere-3d",
        CollarData(side("g0"), side("g1"), WIDTH),
        constant_curvature_kappas(1.0, 3),
        (0.0, 0.0),
        smooth=True,
    )


def _cap_on_cylinder() -> Scenario:
    domain = ChartDomain(2, (ANGLE, NORMAL_RANGE))
    g0 = diagonal_metric(domain, [[], []], label="g0")
    g1 = diagonal_metric(domain, [[_cos_squared(1)], []], label="g1")
    return Scenario(
        "cap-on-cylinder-2d", CollarData(g0, g1, WIDTH), constant_curvature_kappas(0.0, 2, True), (0.0,)
    )


def _cap_on_disk() -> Scenario:
    domain = ChartDomain(2, (ANGLE, NORMAL_RANGE))
    radius = math.sin(CAP_ANGLE)
    g0 = diagonal_metric(domain, [[_square_linear(1, radius, -1.0)], []], label="g0")
    g1 = diagonal_metric(domain, [[_sin_squared(1, CAP_ANGLE)], []], label="g1")
    return Scenario(
        "cap-on-disk-2d",
        CollarData(g0, g1, WIDTH),
        constant_curvature_kappas(0.0, 2, True),
        ((1.0 + math.cos(CAP_ANGLE)) / radius,),
    )


BUILTINS: Dict[str, Callable] = {
    "doubled-disk-2d": _doubled_disk,
    "doubled-ball-3d": _doubled_ball,
    "doubled-hemisphere-2d": _doubled_hemisphere_2d,
    "doubled-hemisphere-3d": _doubled_hemisphere_3d,
    "cap-on-cylinder-2d": _cap_on_cylinder,
    "cap-on-disk-2d": _cap_on_disk,
}


class ScenarioService:
    def __init__(
        self,
        repository: ScenarioRepository,
        collar_service: CollarService,
        scenario_dirs: Sequence[str] = (),
        sample_count: int = 2,
    ):
        self._repository = repository
        self._collar = collar_service
        self._sample_count = sample_count
        for name, builder in BUILTINS.items():
            self._repository.create_builtin(name, builder)
        self.load_dirs(scenario_dirs)

    def load_dirs(self, directories: Iterable[str]) -> int:
        count = 0
        for directory in directories:
            for path in self._repository.config_files(Path(directory)):
                text = path.read_text(encoding="utf-8")
                document = parse_scenario_config(text, source=str(path))
                self._repository.create_from_file(
                    document.name, path, lambda text=text, path=path: self.from_config(text, str(path))
                )
                count += 1
        if count:
            logger.info("Loaded %d config scenarios", count)
        return count

    def builtin(self, name: str) -> Scenario:
        if name not in BUILTINS:
            raise UnknownScenarioError(f"unknown builtin scenario {name!r}; known: {', '.join(BUILTINS)}")
        return self._checked(BUILTINS[name]())

    def get(self, name: str) -> Scenario:
        scenario = self._repository.get(name)
        if scenario is None:
            known = ", ".join(n for n, _ in self._repository.names())
            raise UnknownScenarioError(f"unknown scenario {name!r}; known: {known}")
        return self._checked(scenario)

    def from_config(self, text: str, source: str = "config") -> Scenario:
        document = parse_scenario_config(text, source)
        domain = ChartDomain(document.n, tuple(document.box))
        collar = CollarData(
            self._config_metric(document, domain, document.g0, "g0"),
            self._config_metric(document, domain, document.g1, "g1"),
            document.width,
        )
        scenario = Scenario(
            name=document.name,
            collar=collar,
            kappa=dict(document.kappa),
            L_spectrum=tuple(document.L_spectrum),
            smooth=document.smooth,
            source=source,
        )
        return self._checked(scenario)

    def list(self) -> List[ScenarioSummary]:
        rows = []
        for name, source in self._repository.names():
            scenario = self._repository.get(name)
            rows.append(
                ScenarioSummary(
                    name=name,
                    n=scenario.n,
                    width=scenario.collar.width,
                    kappa=scenario.kappa,
                    L_spectrum=list(scenario.L_spectrum),
                    smooth=scenario.smooth,
                    source=source,
                )
            )
        return rows

    def L_spectrum(self, scenario: Scenario, tangential: Optional[np.ndarray] = None) -> np.ndarray:
        collar = scenario.collar
        if tangential is None:
            tangential = collar.boundary_samples(1)[0]
        L0 = self._collar.second_ff("M0", collar)
        L1 = self._collar.second_ff("M1", collar)
        return self._collar.spectrum(collar, lambda y: L0(y) + L1(y), tangential)

    def _config_metric(self, document: ScenarioDocument, domain: ChartDomain, entries: Dict, label: str) -> MetricField:
        n = document.n
        compiled = {
            (i - 1, j - 1): compile_expression(node, n) for (i, j), node in sorted(entries.items())
        }

        def coeff(x: np.ndarray) -> np.ndarray:
            g = np.eye(n)
            for (i, j), fn in compiled.items():
                g[i, j] = g[j, i] = fn(x)
            return g

        return MetricField(domain, coeff, fd=self._collar.fd, fermi=True, label=label)

    def _checked(self, scenario: Scenario) -> Scenario:
        self._collar.validate(scenario.collar)
        if scenario.L_spectrum:
            declared = np.sort(np.asarray(scenario.L_spectrum, dtype=float))
            computed = self.L_spectrum(scenario)
            tolerance = SPECTRUM_TOLERANCE if scenario.collar.g0.analytic else FD_SPECTRUM_TOLERANCE
            if declared.shape != computed.shape or np.max(np.abs(declared - computed)) > tolerance:
                raise ScenarioMetadataError(
                    f"scenario {scenario.name} declares L spectrum {declared.tolist()} "
                    f"but the collar gives {computed.tolist()}"
                )
        self._log_truncation(scenario)
        return scenario

    def _log_truncation(self, scenario: Scenario) -> None:
        collar = scenario.collar
        x = collar.boundary_point(collar.boundary_samples(1)[0])
        for metric in (collar.g0, collar.g1):
            if metric.analytic:
                continue
            report = metric.differentiation_report(x)
            logger.info(
                "Scenario %s: %s finite-difference truncation at step %.1e: first %.2e, second %.2e",
                scenario.name,
                metric.label,
                report.step,
                report.first_error,
                report.second_error,
            )
