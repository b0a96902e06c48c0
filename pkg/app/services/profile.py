import logging
from typing import List, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import PPoly
from scipy.optimize import brentq

from app.core.exceptions import InfeasibleProfileError
from app.models.profile import BumpProfile
from app.schemas.report import ProfileCertificate

logger = logging.getLogger(__name__)

DEGREE = 5
MAX_DELTA = 0.5
# share of the well spent on the fast descent, and edge width of the slow rise
DESCENT_SHARE = 0.05
RISE_EDGE = 0.15

SMOOTHERSTEP = Polynomial([0.0, 0.0, 0.0, 10.0, -15.0, 6.0])
BLEND = Polynomial([1.0, -2.0, 0.0, 2.0, -1.0])


def _local_coefficients(poly: Polynomial, scale: float) -> np.ndarray:
    """Coefficients in (x - x_k), highest first, of poly((x - x_k) / scale)."""
    coef = np.zeros(DEGREE + 1)
    raw = poly.coef
    coef[: len(raw)] = raw / scale ** np.arange(len(raw))
    return coef[::-1]


def _rise_pieces(edge: float) -> List[Polynomial]:
    """Unit rise R on [0, 1] whose derivative is a C^1 trapezoid, split at edge and 1 - edge."""
    height = 1.0 / (1.0 - edge)
    ramp = Polynomial([0.0, 0.0, 0.0, 1.0, -0.5])  # integral of 3z^2 - 2z^3
    first = height * edge * ramp(Polynomial([0.0, 1.0 / edge]))
    middle = Polynomial([0.5 * height * edge, height])
    last = 1.0 - height * edge * ramp(Polynomial([1.0, -1.0 / edge]))
    return [first, middle, last]


class ProfileService:
    def __init__(self, blend_width: float = 0.05, samples: int = 10_000):
        self._blend_width = blend_width
        self._samples = samples

    def build_bump(self, delta: float, blend_width: float = None) -> BumpProfile:
        b = self._blend_width if blend_width is None else blend_width
        if not 0.0 < delta <= MAX_DELTA:
            raise InfeasibleProfileError(
                f"delta must satisfy 0 < delta <= {MAX_DELTA}, got {delta}"
            )
        if not 0.0 < b < 0.5:
            raise InfeasibleProfileError(f"blend width must lie in (0, 0.5), got {b}")

        d4 = delta ** 4
        ramp_end, well_start = (1.0 - b) * d4, (1.0 + b) * d4
        well = delta - well_start
        descent = DESCENT_SHARE * well
        rise = well - descent
        knots = np.array([
            0.0,
            ramp_end,
            well_start,
            well_start + descent,
            well_start + descent + RISE_EDGE * rise,
            well_start + descent + (1.0 - RISE_EDGE) * rise,
            delta,
            delta + 1.0,
        ])

        head = np.zeros((DEGREE + 1, len(knots) - 1))
        head[:, 0] = _local_coefficients(Polynomial([1.0, -1.0 / d4]), 1.0)
        head[:, 1] = _local_coefficients(b * BLEND, 2.0 * b * d4)

        unit_well = np.zeros_like(head)
        unit_well[:, 2] = _local_coefficients(-SMOOTHERSTEP, descent)
        for column, piece in enumerate(_rise_pieces(RISE_EDGE), start=3):
            unit_well[:, column] = _local_coefficients(piece - 1.0, rise)

        head_area = PPoly(head, knots).integrate(0.0, well_start)
        unit_area = PPoly(unit_well, knots).integrate(well_start, delta)

        def balance(amplitude: float) -> float:
            return head_area + amplitude * unit_area

        ceiling = delta ** 2
        if balance(ceiling) > 0.0:
            raise InfeasibleProfileError(
                f"negative reservoir too small: delta^2 * {-unit_area:.3e} < {head_area:.3e}"
            )
        amplitude = brentq(balance, 0.0, ceiling, xtol=1e-300, rtol=4 * np.finfo(float).eps)

        f = PPoly(head + amplitude * unit_well, knots, extrapolate=True)
        F = f.antiderivative()
        FF = F.antiderivative()
        profile = BumpProfile(
            delta=delta,
            blend_width=b,
            amplitude=float(amplitude),
            knots=tuple(float(k) for k in knots),
            f=f,
            F=F,
            FF=FF,
        )

        integral = abs(float(F(delta)))
        if integral > 1e-12:
            raise InfeasibleProfileError(f"profile integral {integral:.3e} does not vanish")
        grid = np.linspace(well_start, delta, 4001)
        steepest = float(np.max(f(grid, 1)))
        if steepest > delta:
            raise InfeasibleProfileError(
                f"well slope {steepest:.4f} exceeds delta = {delta}"
            )
        if amplitude > delta ** 3:
            logger.info(
                "Profile amplitude %.4e exceeds delta^3 = %.4e (still below delta^2)",
                amplitude,
                delta ** 3,
            )
        logger.debug("Built profile delta=%s amplitude=%.6e", delta, amplitude)
        return profile

    def certify(self, profile: BumpProfile) -> ProfileCertificate:
        delta = profile.delta
        d4 = delta ** 4
        x = np.union1d(np.linspace(0.0, delta, self._samples), np.array(profile.knots[:-1]))
        f, slope, F, FF = profile.f(x), profile.f(x, 1), profile.F(x), profile.FF(x)

        ramp = x <= profile.ramp_end
        well = x >= profile.well_start
        tail = np.linspace(delta, 2.0 * delta, 101)

        violations = {
            "integral": abs(float(profile.F(delta))),
            "ramp_formula": float(np.max(np.abs(f[ramp] - (1.0 - x[ramp] / d4)))),
            "lower_bound": max(0.0, float(np.max(-delta ** 2 - f))),
            "upper_bound": max(0.0, float(np.max(f - 1.0))),
            "well_sign": max(0.0, float(np.max(f[well]))),
            "well_slope": max(0.0, float(np.max(slope[well] - delta))),
            "tail": float(np.max(np.abs(profile.f(tail)))),
            "F_nonnegative": max(0.0, float(-np.min(F))),
            "sup_F": max(0.0, float(np.max(np.abs(F)) - d4)),
            "sup_FF": max(0.0, float(np.max(np.abs(FF)) - 0.5 * d4 * delta)),
            "FF_monotone": max(0.0, float(-np.min(np.diff(FF)))),
        }
        F_peak = float(profile.F(profile.well_start))
        blend_correction = 0.1 * profile.blend_width ** 2 * d4
        violations["F_peak"] = max(0.0, abs(F_peak - 0.5 * d4) - blend_correction - 1e-15)

        return ProfileCertificate(
            delta=delta,
            blend_width=profile.blend_width,
            amplitude=profile.amplitude,
            violations=violations,
            sup_F=float(np.max(np.abs(F))),
            F_at_ramp_end=float(profile.F(d4)),
            F_peak=F_peak,
            sup_FF=float(np.max(np.abs(FF))),
            amplitude_below_delta_cubed=profile.amplitude <= delta ** 3,
        )

    def table(self, profile: BumpProfile, points: int = 2001) -> List[Tuple[float, float, float, float]]:
        """Rows (x, f, F, FF) on [0, delta]."""
        x = np.linspace(0.0, profile.delta, points)
        return list(zip(x.tolist(), profile.f(x).tolist(), profile.F(x).tolist(), profile.FF(x).tolist()))
