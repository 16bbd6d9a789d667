"""Contracts of the per-run JSON summaries and the pipeline certificate."""

from typing import Any

from pydantic import BaseModel, Field, field_validator

from shared.contracts.realization import RealizationReport, SandwichReport
from shared.contracts.spectral import NormRatioReport
from shared.types import Params
from shared.validation import validate_digest


class RunSummary(BaseModel):
    """One command run: resolved configuration, outcome and results."""

    command: str
    passed: bool = Field(..., description="Outcome of every asserted check")
    config: dict[str, Any] = Field(..., description="Resolved options of the run")
    digest: str = Field(..., description="SHA-256 of the canonical config")
    results: dict[str, Any] = Field(default_factory=dict)
    artifacts: dict[str, str] = Field(
        default_factory=dict, description="Output file name -> SHA-256"
    )

    @field_validator("digest")
    @classmethod
    def validate_digest(cls, v: str) -> str:
        return validate_digest(v)


class PipelineCertificate(BaseModel):
    """
    Lower-bound certificate of the laminate -> function -> ratio chain.

    The certified quantity is the realized ratio of the phi moments; its
    distance to the measure-level ratio of the realized target is bounded
    by the sandwich budget. A run passes when the sandwich holds and the
    realized ratio reaches required_share of ratio(nu_N); pruned splits
    count against that share.
    """

    params: Params
    N: float
    M: int
    n: int
    r: float
    c_B: float = Field(..., description="Sharp constant the chain approaches")
    measure_ratio_nu: float = Field(..., description="ratio(nu_N) in closed form")
    realization: RealizationReport
    sandwich: SandwichReport
    achieved_share: float = Field(
        ..., description="Realized ratio over the measure-level ratio of nu_N"
    )
    cross_check: float | None = Field(
        default=None, description="Relative gap of the Fourier vs FD identity"
    )
    spectral: NormRatioReport | None = Field(
        default=None, description="Norm ratio of the realized source field"
    )
    spectral_ratio_p: float | None = Field(
        default=None, description="Spectral norm ratio raised to the power p"
    )
    required_share: float = Field(
        default=0.8, description="Least achieved_share a passing run needs"
    )
    caveats: list[str] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.sandwich.holds and self.achieved_share >= self.required_share
