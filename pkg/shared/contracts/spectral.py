"""Report contracts of the spectral stage."""

from typing import Literal

from pydantic import BaseModel, Field


class NormRatioReport(BaseModel):
    """The norm ratio of one field with both denominators and caveats."""

    kind: Literal["difference", "mixed"]
    p: float
    tau: float
    ratio: float = Field(..., description="Denominator ||(R1^2 + R2^2) phi||_p")
    ratio_phi: float = Field(..., description="Denominator ||phi - mean||_p")
    denominator_gap: float = Field(
        ..., description="Relative gap between the two denominators"
    )
    mean_correction: float = Field(..., description="Mean removed from the input")
    guard_frame_energy: float = Field(
        ..., description="Share of the L2 energy in the guard frame"
    )
