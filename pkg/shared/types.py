"""Domain types shared by the engine and the CLI."""

import math
from typing import Annotated, Literal

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    computed_field,
    field_validator,
    model_validator,
)

from shared.config import get_quad_tol
from shared.validation import (
    normalize_tau,
    validate_cutoff,
    validate_exponent,
    validate_square_grid,
    validate_weight_sum,
    validate_zero_frame,
)

# ============================================================================
# Parameters and points
# ============================================================================


class Params(BaseModel):
    """The pair (p, tau) with every constant derived from it."""

    model_config = ConfigDict(frozen=True)

    p: float = Field(..., description="Integrability exponent, p > 1")
    tau: float = Field(
        default=0.0, description="Perturbation parameter; stored as |tau|"
    )

    @field_validator("p")
    @classmethod
    def validate_p(cls, v: float) -> float:
        return validate_exponent(v)

    @field_validator("tau")
    @classmethod
    def validate_tau(cls, v: float) -> float:
        return normalize_tau(v)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def p_star_minus_1(self) -> float:
        """max(p - 1, 1/(p - 1))."""
        return max(self.p - 1.0, 1.0 / (self.p - 1.0))

    @computed_field  # type: ignore[prop-decorator]
    @property
    def k_lam(self) -> float:
        """Laminate slope 1 - 2/p, so that p = 2/(1 - k)."""
        return 1.0 - 2.0 / self.p

    @computed_field  # type: ignore[prop-decorator]
    @property
    def k_cone(self) -> float | None:
        """Cone slope p/|p - 2|; undefined (None) at p = 2."""
        if self.p == 2.0:
            return None
        return self.p / abs(self.p - 2.0)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def c_B(self) -> float:
        """((p*-1)^2 + tau^2)^(p/2)."""
        return (self.p_star_minus_1**2 + self.tau**2) ** (self.p / 2.0)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def alpha_p(self) -> float:
        """Leading factor of the function u."""
        q = self.p_star_minus_1
        p_star = q + 1.0
        return (
            self.p
            * (1.0 - 1.0 / p_star) ** (self.p - 1.0)
            * (1.0 + self.tau**2 / q**2) ** ((self.p - 2.0) / 2.0)
        )

    @computed_field  # type: ignore[prop-decorator]
    @property
    def in_T(self) -> bool:
        """Whether (p, tau) lies in the range where the constant is sharp."""
        if self.p >= 2.0:
            return True
        return self.tau**2 <= self.p_star_minus_1

    @computed_field  # type: ignore[prop-decorator]
    @property
    def operator_norm_target(self) -> float:
        """((p*-1)^2 + tau^2)^(1/2)."""
        return math.sqrt(self.p_star_minus_1**2 + self.tau**2)


class PlanePoint(BaseModel):
    """A point of the plane with x-coordinates and the rotated y-chart.

    y1 = (x1 + x2)/2 and y2 = (x1 - x2)/2, inverted by x1 = y1 + y2 and
    x2 = y1 - y2.
    """

    model_config = ConfigDict(frozen=True)

    x1: float
    x2: float

    @classmethod
    def from_y(cls, y1: float, y2: float) -> "PlanePoint":
        return cls(x1=y1 + y2, x2=y1 - y2)

    @property
    def y1(self) -> float:
        return (self.x1 + self.x2) / 2.0

    @property
    def y2(self) -> float:
        return (self.x1 - self.x2) / 2.0


# ============================================================================
# Matrices and measures
# ============================================================================


class SymMat2(BaseModel):
    """A real symmetric 2x2 matrix ((a11, a12), (a12, a22))."""

    model_config = ConfigDict(frozen=True)

    a11: float
    a12: float = 0.0
    a22: float

    @classmethod
    def diag(cls, x: float, y: float) -> "SymMat2":
        return cls(a11=x, a12=0.0, a22=y)

    @classmethod
    def zero(cls) -> "SymMat2":
        return cls(a11=0.0, a12=0.0, a22=0.0)

    def det(self) -> float:
        return self.a11 * self.a22 - self.a12 * self.a12

    def trace(self) -> float:
        return self.a11 + self.a22

    def norm(self) -> float:
        """Frobenius norm."""
        return math.sqrt(self.a11**2 + 2.0 * self.a12**2 + self.a22**2)

    def minus(self, other: "SymMat2") -> "SymMat2":
        return SymMat2(
            a11=self.a11 - other.a11,
            a12=self.a12 - other.a12,
            a22=self.a22 - other.a22,
        )

    def mix(self, weight: float, other: "SymMat2") -> "SymMat2":
        """weight * self + (1 - weight) * other."""
        rest = 1.0 - weight
        return SymMat2(
            a11=weight * self.a11 + rest * other.a11,
            a12=weight * self.a12 + rest * other.a12,
            a22=weight * self.a22 + rest * other.a22,
        )

    def is_diagonal(self) -> bool:
        return self.a12 == 0.0

    def as_array(self) -> np.ndarray:
        return np.array([[self.a11, self.a12], [self.a12, self.a22]])


def rank_one_diff(a: SymMat2, b: SymMat2, tol: float = 1e-9) -> bool:
    """Whether a - b has rank at most one (det(a - b) = 0 within tolerance)."""
    d = a.minus(b)
    return abs(d.det()) <= tol * (1.0 + d.norm() ** 2)


class Atom(BaseModel):
    """A point mass of a measure on symmetric matrices."""

    model_config = ConfigDict(frozen=True)

    weight: float = Field(..., gt=0.0, le=1.0, description="Mass of the atom")
    matrix: SymMat2


class AtomicMeasure(BaseModel):
    """A finitely supported probability measure on symmetric matrices."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["atomic"] = "atomic"
    atoms: list[Atom] = Field(..., min_length=1)

    @field_validator("atoms")
    @classmethod
    def validate_atoms(cls, v: list[Atom]) -> list[Atom]:
        validate_weight_sum([a.weight for a in v])
        return v

    @classmethod
    def dirac(cls, matrix: SymMat2) -> "AtomicMeasure":
        return cls(atoms=[Atom(weight=1.0, matrix=matrix)])


class ContinuousLaminate(BaseModel):
    """The continuous laminate on the two diagonal curves plus a terminal atom.

    Density (1/(1-k)) t^(-p-1) dt on t -> diag(kt, t) and t -> diag(t, kt)
    for t in [1, N], and mass N^(-p) at diag(N, N). The flipped variant
    negates every first entry.
    """

    model_config = ConfigDict(frozen=True)

    kind: Literal["continuous"] = "continuous"
    params: Params
    N: float = Field(..., description="Truncation level, N > 1")
    variant: Literal["standard", "flipped"] = "standard"

    @field_validator("N")
    @classmethod
    def validate_N(cls, v: float) -> float:
        return validate_cutoff(v)

    @property
    def sign(self) -> float:
        return -1.0 if self.variant == "flipped" else 1.0


class Piece(BaseModel):
    """One weighted component of a composite laminate."""

    model_config = ConfigDict(frozen=True)

    weight: float = Field(..., ge=0.0, le=1.0)
    measure: ContinuousLaminate | AtomicMeasure = Field(..., discriminator="kind")


class CompositeLaminate(BaseModel):
    """A finite mixture of continuous laminates and atomic measures."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["composite"] = "composite"
    pieces: list[Piece] = Field(..., min_length=1)

    @field_validator("pieces")
    @classmethod
    def validate_pieces(cls, v: list[Piece]) -> list[Piece]:
        validate_weight_sum([piece.weight for piece in v])
        return v


Measure = Annotated[
    ContinuousLaminate | AtomicMeasure | CompositeLaminate,
    Field(discriminator="kind"),
]


# ============================================================================
# Prelaminate trees
# ============================================================================

# Relative tolerance of the barycentric and rank-one node checks.
TREE_TOL = 1e-9


class Split(BaseModel):
    """A barycentric rank-one split of a node into two children."""

    model_config = ConfigDict(frozen=True)

    weight: float = Field(..., gt=0.0, lt=1.0, description="Weight of the first child")
    first: int = Field(..., ge=1, description="Node index of the first child")
    second: int = Field(..., ge=1, description="Node index of the second child")


class TreeNode(BaseModel):
    """A node of a prelaminate tree; leaves have no split."""

    model_config = ConfigDict(frozen=True)

    matrix: SymMat2
    split: Split | None = None


class PrelaminateTree(BaseModel):
    """An ordered binary splitting tree stored as a flat node table.

    ``nodes[0]`` is the root. Children are referenced by index, so deep trees
    never recurse through Python or pydantic.
    """

    model_config = ConfigDict(frozen=True)

    nodes: list[TreeNode] = Field(..., min_length=1)

    @model_validator(mode="after")
    def validate_structure(self) -> "PrelaminateTree":
        nodes = self.nodes
        seen = [False] * len(nodes)
        seen[0] = True
        stack = [0]
        while stack:
            index = stack.pop()
            node = nodes[index]
            if node.split is None:
                continue
            split = node.split
            for child in (split.first, split.second):
                if child >= len(nodes):
                    raise ValueError(f"node {index} references missing node {child}")
                if seen[child]:
                    raise ValueError(f"node {child} is referenced twice")
                seen[child] = True
                stack.append(child)
            b = nodes[split.first].matrix
            c = nodes[split.second].matrix
            scale = 1.0 + max(node.matrix.norm(), b.norm(), c.norm())
            if b.mix(split.weight, c).minus(node.matrix).norm() > TREE_TOL * scale:
                raise ValueError(f"split at node {index} is not barycentric")
            if not rank_one_diff(b, c, TREE_TOL):
                raise ValueError(f"split at node {index} is not rank-one")
        if not all(seen):
            raise ValueError("tree contains unreachable nodes")
        return self

    @property
    def root(self) -> SymMat2:
        return self.nodes[0].matrix

    def depth(self) -> int:
        """Order of the prelaminate: the longest chain of splittings."""
        best = 0
        stack = [(0, 0)]
        while stack:
            index, level = stack.pop()
            split = self.nodes[index].split
            if split is None:
                best = max(best, level)
                continue
            stack.append((split.first, level + 1))
            stack.append((split.second, level + 1))
        return best


# ============================================================================
# Grid and spectral fields
# ============================================================================


class GridFunction2D(BaseModel):
    """A scalar function sampled on the uniform grid over [-L, L]^2.

    ``values[i, j]`` is the sample at (x1, x2) = (x[i], x[j]) with
    x = linspace(-L, L, n).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    half_width: float = Field(default=1.0, gt=0.0, description="L of [-L, L]^2")
    boundary_flag: bool = Field(
        default=False, description="Whether a zero frame of width 2h is asserted"
    )

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: np.ndarray) -> np.ndarray:
        return validate_square_grid(np.asarray(v, dtype=float))

    @model_validator(mode="after")
    def validate_frame(self) -> "GridFunction2D":
        if self.boundary_flag:
            validate_zero_frame(self.values, 2)
        return self

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n - 1)

    def coordinates(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.n)


class HessianSample(BaseModel):
    """Centered second differences at the interior points of a grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    h11: np.ndarray
    h12: np.ndarray
    h22: np.ndarray
    h: float = Field(..., gt=0.0, description="Grid spacing")

    @property
    def count(self) -> int:
        return int(self.h11.size)

    @property
    def area(self) -> float:
        return self.count * self.h * self.h


class SpectralField(BaseModel):
    """Samples on the periodic grid x_j = j*h, h = 2L/n, over [0, 2L)^2."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    half_period: float = Field(default=math.pi, gt=0.0, description="L")

    @field_validator("values")
    @classmethod
    def validate_values(cls, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError(f"spectral field must be square, got shape {v.shape}")
        return v

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def h(self) -> float:
        return 2.0 * self.half_period / self.n

    def coordinates(self) -> np.ndarray:
        return np.arange(self.n) * self.h


# ============================================================================
# Run configuration records
# ============================================================================


class QuadratureSpec(BaseModel):
    """How integrals along the laminate curves are evaluated."""

    model_config = ConfigDict(frozen=True)

    mode: Literal["closed_form", "adaptive"] = "closed_form"
    abs_tol: float = Field(default_factory=get_quad_tol, gt=0.0)
    rel_tol: float = Field(default_factory=get_quad_tol, gt=0.0)
    limit: int = Field(default=200, ge=10, description="Maximum subdivisions")


class SimConfig(BaseModel):
    """Monte Carlo settings of the martingale simulation."""

    model_config = ConfigDict(frozen=True)

    T: float = Field(..., gt=0.0, description="Horizon")
    dt: float = Field(..., gt=0.0, description="Euler-Maruyama step")
    n_paths: int = Field(..., ge=1)
    seed: int = Field(..., ge=0, lt=2**64)
    start_points: list[tuple[float, float]] = Field(..., min_length=1)
    start_weights: list[float] = Field(..., min_length=1)
    start_area: float = Field(
        default=1.0, gt=0.0, description="Lebesgue area the start grid stands for"
    )
    batches: int = Field(default=32, ge=2, description="Batches for standard errors")
    ladder_levels: int = Field(default=32, ge=2, description="Heat time ladder size")
    guard_fraction: float = Field(default=0.1, gt=0.0, lt=0.5)

    @field_validator("start_weights")
    @classmethod
    def validate_start_weights(cls, v: list[float]) -> list[float]:
        return validate_weight_sum(v, tol=1e-9)

    @model_validator(mode="after")
    def validate_steps(self) -> "SimConfig":
        if self.dt > self.T / 100.0 * (1.0 + 1e-12):
            raise ValueError(f"dt must be at most T/100, got dt={self.dt}, T={self.T}")
        if len(self.start_points) != len(self.start_weights):
            raise ValueError("start_points and start_weights differ in length")
        return self

    @property
    def steps(self) -> int:
        return int(round(self.T / self.dt))
