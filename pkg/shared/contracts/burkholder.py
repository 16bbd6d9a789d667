"""Report contracts for the Burkholder-function checks."""

from pydantic import BaseModel, Field

from shared.types import Params


class ZigzagScanReport(BaseModel):
    """Result of a coordinate-direction concavity scan in the y-chart."""

    params: Params
    box: float = Field(..., description="Half-width of the scanned square")
    n: int
    h: float
    worst: float = Field(
        ..., description="Largest centered second difference off the kink set"
    )
    worst_at: tuple[float, float] = Field(..., description="(y1, y2) of the worst")
    worst_axis: int = Field(..., description="1 for e_y1, 2 for e_y2")
    tube_points: int = Field(..., description="Points within h of the kink set")
    tube_worst: float = Field(
        ..., description="Largest unnormalized second difference in the tube"
    )
    threshold: float
    asserted: bool = Field(..., description="Whether (p, tau) lies in T")
    passed: bool


class MajorantReport(BaseModel):
    """Result of the U >= v check on a grid and on the touching lines."""

    params: Params
    box: float
    n: int
    min_gap: float = Field(..., description="min over the grid of U - v")
    min_gap_at: tuple[float, float]
    scale: float = Field(..., description="max |v| over the grid")
    line_max_error: float | None = Field(
        ..., description="max |U - v| / (1 + |v|) on L_k and L_1/k; None at p = 2"
    )
    passed: bool


class UPropertiesReport(BaseModel):
    """The four structural properties of U in the y-chart."""

    params: Params
    v_nonnegative_on_cones: bool
    vanishes_at_origin: bool
    equals_v_on_lines: bool
    linear_in_cones: bool
    worst_line_error: float
    worst_cone_curvature: float

    @property
    def passed(self) -> bool:
        return (
            self.v_nonnegative_on_cones
            and self.vanishes_at_origin
            and self.equals_v_on_lines
            and self.linear_in_cones
        )


class HessianIdentityReport(BaseModel):
    """Constancy of the ratio between the quadratic form of u and A + B + C."""

    params: Params
    ratios: list[float]
    constant: float | None = Field(..., description="Median of the sample ratios")
    max_relative_spread: float | None
    skipped: int = Field(..., description="Samples with a vanishing A + B + C")
    asserted: bool = Field(..., description="Whether p >= 2")
    passed: bool


class ThresholdSearchReport(BaseModel):
    """Exploratory search for the smallest tau with a concavity violation."""

    p: float
    taus: list[float]
    worst: list[float]
    first_violation: float | None
