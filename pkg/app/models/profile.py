from dataclasses import dataclass
from typing import Tuple

from scipy.interpolate import PPoly


@dataclass(frozen=True, eq=False)
class BumpProfile:
    """
    The profile f with its antiderivatives F (F' = f) and FF (FF' = F).

    All three are piecewise polynomials sharing the breakpoints in `knots`;
    beyond the last knot f vanishes and F, FF are extended exactly.
    """

    delta: float
    blend_width: float
    amplitude: float
    knots: Tuple[float, ...]
    f: PPoly
    F: PPoly
    FF: PPoly

    @property
    def ramp_end(self) -> float:
        return (1.0 - self.blend_width) * self.delta ** 4

    @property
    def well_start(self) -> float:
        return (1.0 + self.blend_width) * self.delta ** 4

    def jet(self, x: float) -> Tuple[float, float, float, float, float]:
        """(FF, F, f, f', f'') at x."""
        return (
            float(self.FF(x)),
            float(self.F(x)),
            float(self.f(x)),
            float(self.f(x, 1)),
            float(self.f(x, 2)),
        )
