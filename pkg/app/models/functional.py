from dataclasses import dataclass

from app.core.exceptions import DimensionError

FUNCTIONAL_KINDS = ("operator", "ricci", "scalar", "bi", "isotropic", "isotropic1", "isotropic2", "flag")

# smallest chart dimension each functional is defined for
MIN_DIMENSION = {
    "operator": 2,
    "ricci": 2,
    "scalar": 2,
    "bi": 3,
    "isotropic": 4,
    "isotropic1": 3,
    "isotropic2": 2,
    "flag": 3,
}


@dataclass(frozen=True)
class Functional:
    """A curvature functional together with the lower bound it is certified against."""

    kind: str
    kappa: float

    def __post_init__(self):
        if self.kind not in FUNCTIONAL_KINDS:
            raise ValueError(f"unknown functional {self.kind!r}; known: {', '.join(FUNCTIONAL_KINDS)}")

    @property
    def needs_trace_only(self) -> bool:
        return self.kind == "scalar"

    def check_dimension(self, n: int) -> None:
        if n < MIN_DIMENSION[self.kind]:
            raise DimensionError(
                f"functional {self.kind} needs n >= {MIN_DIMENSION[self.kind]}, got n = {n}"
            )
