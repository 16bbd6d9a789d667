"""Report contracts of the realization stage."""

from typing import Literal

from pydantic import BaseModel, Field

from shared.types import AtomicMeasure, SymMat2


class PrunedNode(BaseModel):
    """A split left unrealized; its mass stays on the node's own matrix."""

    node: int
    mass: float = Field(..., description="Product of path weights down to the node")
    reason: str


class RealizationReport(BaseModel):
    """What the strip construction achieved on the grid."""

    n: int
    half_width: float
    r: float
    delta: float | None = Field(default=None, description="Requested C1 budget")
    layer_fraction: float
    period_fraction: float = Field(
        default=0.2, description="Laminate period as a fraction of the block width"
    )
    mollified: bool
    on_unresolved: Literal["error", "prune"]
    target: AtomicMeasure = Field(
        ..., description="Leaf measure of the tree after pruning"
    )
    pruned: list[PrunedNode] = Field(default_factory=list)
    pruned_mass: float = 0.0
    blocks: int = Field(..., description="Number of splits painted on the grid")
    c1_norm: float = Field(..., description="max|u| + max|grad u| on the grid")
    min_r: float = Field(..., description="Finite-difference roundoff floor for r")


class AtomFraction(BaseModel):
    matrix: SymMat2
    target_weight: float
    fraction: float = Field(..., description="Area fraction of |D2u - A| < r")


class MomentComparison(BaseModel):
    name: str
    realized: float = Field(..., description="Area mean of f(D2u)")
    target: float = Field(..., description="Integral of f against the target")
    abs_error: float


class DistributionReport(BaseModel):
    """Empirical Hessian distribution against an atomic target."""

    r: float
    atoms: list[AtomFraction]
    exceptional: float = Field(..., description="Fraction outside every r-ball")
    moments: list[MomentComparison]

    def worst_fraction_error(self) -> float:
        return max(abs(a.fraction - a.target_weight) for a in self.atoms)


class PushforwardMoments(BaseModel):
    phi1: float = Field(..., description="Grid sum of phi1(D2u) h^2")
    phi2: float = Field(..., description="Grid sum of phi2(D2u) h^2")
    ratio: float


class SandwichReport(BaseModel):
    """Realized ratio against the measure-level ratio of the realized target."""

    realized_ratio: float
    measure_ratio: float
    exceptional: float
    exceptional_phi1: float = Field(..., description="Area mean of phi1 off the balls")
    exceptional_phi2: float = Field(..., description="Area mean of phi2 off the balls")
    budget: float = Field(..., description="Provable bound on |realized - measure|")

    @property
    def holds(self) -> bool:
        return abs(self.realized_ratio - self.measure_ratio) <= self.budget
