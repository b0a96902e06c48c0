from dataclasses import dataclass, field
from typing import Dict, Tuple

from app.models.collar import CollarData


@dataclass(frozen=True, eq=False)
class Scenario:
    """A collar with the curvature bounds both sides are known to satisfy."""

    name: str
    collar: CollarData
    kappa: Dict[str, float] = field(default_factory=dict)
    L_spectrum: Tuple[float, ...] = ()
    smooth: bool = False
    source: str = "builtin"

    @property
    def n(self) -> int:
        return self.collar.n
