"""Report contracts and documents for matrix measures and prelaminates."""

from typing import Literal

from pydantic import BaseModel, Field

from shared.types import Measure, Params, PrelaminateTree


class MeasureDocument(BaseModel):
    """Serialized measure: variant, p, tau, N and atoms travel inside ``measure``."""

    scheme: Literal["riesz-bounds/measure"] = "riesz-bounds/measure"
    measure: Measure


class TreeDocument(BaseModel):
    """Serialized prelaminate tree as a flat node table."""

    scheme: Literal["riesz-bounds/prelaminate"] = "riesz-bounds/prelaminate"
    params: Params | None = Field(
        default=None, description="Parameters the tree was built for, if any"
    )
    tree: PrelaminateTree


class BiconvexReport(BaseModel):
    """Both sides of the biconvexity inequality at one (k, N)."""

    k: float
    N: float
    lhs: float = Field(..., description="f(1, 1)")
    rhs: float = Field(..., description="Laminate integral of f")
    slack: float = Field(..., description="rhs - lhs")
    mode: Literal["closed_form", "adaptive"]


class SplittingReport(BaseModel):
    """The two elementary splitting inequalities at one (k, t, eps)."""

    lam: float = Field(..., description="Weight kept at (t, t + eps)")
    mu: float = Field(..., description="Weight kept at (t + eps, t + eps)")
    first_holds: bool
    second_holds: bool
    first_barycentric_error: float
    second_barycentric_error: float


class LaminateRatioRow(BaseModel):
    """One row of the sharp-constant convergence table."""

    N: float
    log_N: float
    ratio: float
    c_B: float
    error_log_N: float = Field(..., description="|ratio - c_B| * log N")


class MomentErrorReport(BaseModel):
    """Moment errors of staircase prelaminates against the continuous laminate."""

    params: Params
    N: float
    variant: Literal["standard", "flipped"]
    Ms: list[int]
    errors: dict[str, list[float]] = Field(
        ..., description="Per integrand, |staircase moment - laminate moment| per M"
    )
    halving_ratios: dict[str, list[float]] = Field(
        ..., description="Per integrand, error(M) / error(2M) for consecutive Ms"
    )


class SupportReport(BaseModel):
    """Whether every atom lies in the support box of the continuous laminate."""

    lo: float
    hi: float
    inside: bool
    worst_excursion: float = Field(..., description="Largest distance outside the box")
