"""The laminate -> function -> ratio chain behind the pipeline command."""

from collections.abc import Callable
from typing import TypeVar

from engine.matrix_measures import nu_measure, ratio
from engine.realization import (
    default_radius,
    hessian,
    pushforward_moments,
    ratio_sandwich,
    realize_with_report,
)
from engine.spectral import (
    cross_check_identity,
    laplacian_source,
    norm_ratio_report,
    zero_padded,
)
from engine.staircase import nu_prelaminate
from shared.contracts.runs import PipelineCertificate
from shared.errors import RieszBoundsError, StageError
from shared.logs import get_logger, log_duration
from shared.types import GridFunction2D, Params

logger = get_logger(__name__)

T = TypeVar("T")

# Least share of ratio(nu_N) the realized ratio must reach.
REQUIRED_SHARE = 0.8


def _stage(name: str, fn: Callable[..., T], *args, **kwargs) -> T:
    """Run one stage; invalid input propagates, other failures name the stage."""
    logger.info(f"pipeline stage: {name}")
    try:
        with log_duration(logger, f"stage {name}"):
            return fn(*args, **kwargs)
    except ValueError:
        raise
    except RieszBoundsError as e:
        raise StageError(name, e) from e


def run_pipeline(
    params: Params,
    N: float,
    M: int,
    n: int,
    r: float | None = None,
    layer_fraction: float = 0.2,
    spectral: bool = True,
) -> tuple[PipelineCertificate, GridFunction2D]:
    """
    Build nu_N as a tree, realize it, and certify the achieved ratio.

    Splits the grid cannot resolve are pruned; their mass stays on the
    internal node and the sandwich compares against that realized target.
    The certificate passes only when the realized ratio also reaches
    REQUIRED_SHARE of ratio(nu_N), so heavy pruning fails the run.

    Args:
        params: The (p, tau) pair
        N: Truncation level of the staircase
        M: Staircase stages
        n: Grid points per axis
        r: Ball radius; a share of the leaf separation when omitted
        layer_fraction: Cutoff collar width as a fraction of the strip width
        spectral: Also run the Fourier cross-check and the spectral ratio

    Returns:
        The certificate and the realized grid function

    Raises:
        InvalidParamsError: If an input is outside a stage's domain
        StageError: If a stage fails on valid input
    """
    tree = _stage("staircase", nu_prelaminate, params, N, M)
    radius = default_radius(tree) if r is None else r
    u, realization = _stage(
        "realize",
        realize_with_report,
        tree,
        n,
        radius,
        layer_fraction=layer_fraction,
        on_unresolved="prune",
    )
    hs = hessian(u)
    moments = _stage("pushforward", pushforward_moments, hs, params)
    sandwich = _stage("sandwich", ratio_sandwich, realization, params, hs)
    measure_ratio_nu = _stage("measure ratio", ratio, params, nu_measure(params, N))
    share = moments.ratio / measure_ratio_nu

    caveats = [
        f"Hessians are centered second differences at h={u.h:.4g}",
        f"exceptional area {sandwich.exceptional:.3g} of the grid lies outside "
        f"every r-ball (r={radius:.4g})",
    ]
    if realization.pruned:
        caveats.append(
            f"{len(realization.pruned)} splits pruned; {realization.pruned_mass:.3g} "
            f"of the mass stays on internal nodes"
        )
    if share < REQUIRED_SHARE:
        caveats.append(f"realized ratio reaches {share:.1%} of ratio(nu_N)")

    cross_check = None
    spectral_report = None
    spectral_ratio_p = None
    if spectral:
        padded = zero_padded(u)
        cross_check = _stage("cross-check", cross_check_identity, padded)
        spectral_report = _stage(
            "spectral ratio", norm_ratio_report, params, laplacian_source(padded)
        )
        spectral_ratio_p = spectral_report.ratio**params.p
        caveats.append(
            "the spectral ratio uses the finite-difference Laplacian as its source"
        )

    certificate = PipelineCertificate(
        params=params,
        N=N,
        M=M,
        n=n,
        r=radius,
        c_B=params.c_B,
        measure_ratio_nu=measure_ratio_nu,
        realization=realization,
        sandwich=sandwich,
        achieved_share=share,
        cross_check=cross_check,
        spectral=spectral_report,
        spectral_ratio_p=spectral_ratio_p,
        required_share=REQUIRED_SHARE,
        caveats=caveats,
    )
    logger.info(
        f"pipeline: realized ratio {moments.ratio:.6g}, measure ratio "
        f"{sandwich.measure_ratio:.6g}, budget {sandwich.budget:.3g}"
    )
    return certificate, u
