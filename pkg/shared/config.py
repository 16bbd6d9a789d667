"""Shared configuration for the engine and the CLI."""

import os
from pathlib import Path

# ============================================================================
# Output locations
# ============================================================================


def get_out_dir() -> Path:
    """Get the output directory path (dynamically reads from env)."""
    return Path(os.getenv("RIESZ_BOUNDS_OUT", ".riesz-bounds"))


def get_reports_dir(out: Path | None = None) -> Path:
    """Get the directory for CSV tables and JSON summaries."""
    return (out or get_out_dir()) / "reports"


def get_fields_dir(out: Path | None = None) -> Path:
    """Get the directory for GRID2D binaries and path dumps."""
    return (out or get_out_dir()) / "fields"


def get_documents_dir(out: Path | None = None) -> Path:
    """Get the directory for serialized measures and trees."""
    return (out or get_out_dir()) / "documents"


def ensure_directories(out: Path | None = None):
    """Create necessary directories if they don't exist."""
    paths = [
        get_reports_dir(out),
        get_fields_dir(out),
        get_documents_dir(out),
    ]
    for p in paths:
        p.mkdir(parents=True, exist_ok=True)


# ============================================================================
# Numerics
# ============================================================================


def get_threads() -> int:
    """Worker count for batch-parallel stages (martingale path batches)."""
    return max(1, int(os.getenv("RIESZ_BOUNDS_THREADS", os.cpu_count() or 1)))


def get_abs_tol() -> float:
    """Default absolute tolerance of the Burkholder-function checks."""
    return float(os.getenv("RIESZ_BOUNDS_ABS_TOL", "1e-9"))


def get_rel_tol() -> float:
    """Default tolerance relative to the local function scale."""
    return float(os.getenv("RIESZ_BOUNDS_REL_TOL", "1e-9"))


def get_quad_tol() -> float:
    """Default tolerance of adaptive quadrature."""
    return float(os.getenv("RIESZ_BOUNDS_QUAD_TOL", "1e-10"))


def get_seed() -> int:
    """Default seed of every randomized stage."""
    return int(os.getenv("RIESZ_BOUNDS_SEED", "20240601"))


# Centered second differences of the zigzag scan are compared against this
# multiple of (1 + function scale).
ZIGZAG_REL_TOL = 1e-6

# Randomized midpoint tests per axis for the biconvexity gate.
BICONVEX_GATE_SAMPLES = 200

# Minimum strip width, in grid cells, of a block that is split further.
MIN_STRIP_CELLS = 8

# Width, in grid cells, of the zero frame around a realized function.
FRAME_CELLS = 2

# Batches used for batch-means standard errors.
SE_BATCHES = 32
