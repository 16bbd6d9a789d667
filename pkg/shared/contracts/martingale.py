"""Contracts of the martingale simulation and its statistics."""

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class PathTerminals(BaseModel):
    """
    Terminal state of every simulated path.

    X and Y carry one row per path and two columns: the contributions of
    the real and imaginary parts of the field. Escaped paths keep the
    values they had when they left the reliable region.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    X: np.ndarray
    Y: np.ndarray
    z0: np.ndarray
    zT: np.ndarray
    qvX: np.ndarray
    qvY: np.ndarray
    escaped: np.ndarray = Field(..., description="Bool mask of excluded paths")
    start_index: np.ndarray
    weights: np.ndarray = Field(
        ..., description="Start-grid weight per path; escaped paths included"
    )
    start_area: float = 1.0

    @property
    def n_paths(self) -> int:
        return int(self.X.shape[0])

    @property
    def survivors(self) -> int:
        return int(self.n_paths - np.count_nonzero(self.escaped))

    def survivor_weights(self) -> np.ndarray:
        """Weights renormalized over the surviving paths; 0 on escaped ones."""
        w = np.where(self.escaped, 0.0, self.weights)
        total = float(np.sum(w))
        return w / total if total > 0.0 else w


class InequalityReport(BaseModel):
    """Both sides of the Burkholder-type inequality, estimated over paths."""

    p: float
    tau: float
    lhs: float = Field(..., description="||(tau^2 |X|^2 + |Y|^2)^(1/2)||_p")
    rhs: float = Field(..., description="((p*-1)^2 + tau^2)^(1/2) ||X||_p")
    norm_x: float
    standard_error: float = Field(..., description="Batch-means SE of lhs - rhs")
    margin: float = Field(..., description="(rhs - lhs) in standard errors")
    asserted: bool = Field(..., description="Whether (p, tau) lies in T")
    holds: bool
    paths: int
    escaped: int


class VMeanReport(BaseModel):
    """Mean of v(X_T, Y_T) over paths."""

    p: float
    tau: float
    mean: float
    standard_error: float
    asserted: bool
    holds: bool
    paths: int


class BinnedExpectation(BaseModel):
    """Per-bin means of X_T and Y_T given the terminal position."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    centers: np.ndarray = Field(..., description="Bin centers along each axis")
    counts: np.ndarray
    mean_x: np.ndarray = Field(..., description="Shape (bins, bins, 2); 0 where sparse")
    mean_y: np.ndarray
    min_count: int
    empty_bins: int
    sparse_bins: int = Field(..., description="Non-empty bins below min_count")


class PairingReport(BaseModel):
    """Weak-form comparison of the conditional expectations with a test weight."""

    estimate_x: float
    oracle_x: float
    se_x: float
    estimate_y: float
    oracle_y: float
    se_y: float

    @property
    def within_x(self) -> bool:
        return abs(self.estimate_x - self.oracle_x) <= 3.0 * self.se_x

    @property
    def within_y(self) -> bool:
        return abs(self.estimate_y - self.oracle_y) <= 3.0 * self.se_y
