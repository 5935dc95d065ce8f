from typing import Literal, Optional

import numpy as np
import scipy.linalg as la

from idslab.exceptions import ArgumentError, InternalError, ResourceLimitError
from idslab.models.hamiltonian import DiscreteHamiltonian
from idslab.models.spectral import (
    HeatFunction,
    HeatOperator,
    Inertia,
    ProjectionFunction,
    SpectralFunction,
    SpectralSummary,
)
from idslab.spectral.inertia import DEFAULT_DENSE_CEILING, inertia
from idslab.utils import logger

RESIDUAL_RTOL = 1e-10
CLAMP_ATOL = 1e-14


def _check_ceiling(hamiltonian: DiscreteHamiltonian, dense_ceiling: int, hint: str) -> None:
    if hamiltonian.dimension > dense_ceiling:
        raise ResourceLimitError(
            f"dimension {hamiltonian.dimension} exceeds the dense ceiling {dense_ceiling}; {hint}",
            ceiling="dense_ceiling",
            limit=dense_ceiling,
        )


def eigendecompose(
    hamiltonian: DiscreteHamiltonian,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
    vectors: bool = True,
) -> SpectralSummary:
    """
    Full symmetric eigendecomposition of H^.

    Args:
        hamiltonian (DiscreteHamiltonian): The operator.
        dense_ceiling (int): Largest admissible dimension.
        vectors (bool): Also compute orthonormal eigenvectors and their residuals.

    Returns:
        SpectralSummary: Sorted eigenvalues, optional eigenvectors, and vol_omega(D).
    """
    _check_ceiling(hamiltonian, dense_ceiling, "use count_below for counting")
    dense = hamiltonian.dense()
    if not vectors:
        return SpectralSummary(eigenvalues=la.eigvalsh(dense), volume=hamiltonian.volume)

    eigenvalues, eigenvectors = la.eigh(dense)
    residual = 0.0
    if eigenvalues.size:
        residual = float(np.max(np.linalg.norm(dense @ eigenvectors - eigenvectors * eigenvalues, axis=0)))
    if residual > RESIDUAL_RTOL * max(hamiltonian.norm(), 1.0):
        raise InternalError(f"eigenpair residual {residual:.3e} above tolerance")
    return SpectralSummary(
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        volume=hamiltonian.volume,
        max_residual=residual,
    )


def inertia_report(
    hamiltonian: DiscreteHamiltonian, energy: float, dense_ceiling: int = DEFAULT_DENSE_CEILING
) -> Inertia:
    """:func:`inertia` with a logged warning when ``energy`` sits on the spectrum."""
    result = inertia(hamiltonian, energy, dense_ceiling)
    if result.near_boundary:
        logger.warning(
            f"count_below: energy {energy!r} within {result.boundary_tolerance:.3e} of an "
            f"eigenvalue (min pivot {result.min_pivot:.3e}); count may be off by its multiplicity"
        )
    return result


def count_below(
    hamiltonian: DiscreteHamiltonian, energy: float, dense_ceiling: int = DEFAULT_DENSE_CEILING
) -> int:
    """Number of eigenvalues of H^ strictly below ``energy``, from the inertia of H^ - energy I."""
    return inertia_report(hamiltonian, energy, dense_ceiling).negative


def lowest_eigenvalue(
    hamiltonian: DiscreteHamiltonian, dense_ceiling: int = DEFAULT_DENSE_CEILING
) -> float:
    """Bottom of the spectrum; by bisection on inertia counts above the dense ceiling."""
    if hamiltonian.dimension <= dense_ceiling:
        return float(la.eigvalsh(hamiltonian.dense(), subset_by_index=[0, 0])[0])
    norm = hamiltonian.norm()
    lo, hi = -norm, norm
    tolerance = 1e-9 * max(norm, 1.0)
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if inertia(hamiltonian, mid, dense_ceiling).negative > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def heat_operator(
    hamiltonian: DiscreteHamiltonian,
    t: float,
    summary: Optional[SpectralSummary] = None,
    method: Literal["auto", "eigh", "expm"] = "auto",
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> HeatOperator:
    """
    Dense heat semigroup e^{-t H^}.

    The eigendecomposition in ``summary`` is used when it carries eigenvectors
    (or ``method="eigh"`` forces one); otherwise ``scipy.linalg.expm``
    (scaling and squaring). The result is symmetrized, entries with magnitude
    below 1e-14 are set to zero and the most negative raw entry is recorded.
    """
    if t < 0:
        raise ArgumentError(f"heat time must be nonnegative, got {t}")
    _check_ceiling(hamiltonian, dense_ceiling, "the heat semigroup is dense")
    n = hamiltonian.dimension
    if t == 0:
        return HeatOperator(time=0.0, matrix=np.eye(n), worst_negative=0.0, clamped_entries=0, method="identity")

    use_eigh = method == "eigh" or (
        method == "auto" and summary is not None and summary.eigenvectors is not None
    )
    if use_eigh:
        if summary is None or summary.eigenvectors is None:
            summary = eigendecompose(hamiltonian, dense_ceiling)
        v = summary.eigenvectors
        raw = (v * np.exp(-t * summary.eigenvalues)) @ v.T
        used = "eigh"
    else:
        raw = la.expm(-t * hamiltonian.dense())
        used = "expm"

    raw = 0.5 * (raw + raw.T)
    worst = min(float(raw.min()), 0.0) if raw.size else 0.0
    tiny = np.abs(raw) < CLAMP_ATOL
    clamped = int(np.count_nonzero(tiny & (raw != 0.0)))
    raw[tiny] = 0.0
    return HeatOperator(time=t, matrix=raw, worst_negative=worst, clamped_entries=clamped, method=used)


def _region_mask(hamiltonian: DiscreteHamiltonian, region) -> np.ndarray:
    """Boolean vertex mask from a mask, an index array or an array of coordinates."""
    n = hamiltonian.dimension
    region = np.asarray(region)
    if region.dtype == bool:
        if region.shape != (n,):
            raise ArgumentError("region mask must have one entry per vertex")
        return region
    if region.size == 0:
        return np.zeros(n, dtype=bool)
    if region.ndim == 2:
        try:
            region = hamiltonian.index_of(region)
        except IndexError as e:
            raise ArgumentError(f"region is not a subset of the domain: {e}") from e
    region = region.astype(np.int64).ravel()
    if np.any(region < 0) or np.any(region >= n):
        raise ArgumentError("region is not a subset of the domain")
    mask = np.zeros(n, dtype=bool)
    mask[region] = True
    return mask


def region_weights(summary: SpectralSummary, mask: np.ndarray) -> np.ndarray:
    """w_k = sum_{x in region} |v_k(x)|^2, one weight per eigenpair."""
    if summary.eigenvectors is None:
        raise ArgumentError("restricted traces need eigenvectors")
    return np.sum(summary.eigenvectors[mask, :] ** 2, axis=0)


def restricted_trace(
    hamiltonian: DiscreteHamiltonian,
    region,
    f: SpectralFunction,
    summary: Optional[SpectralSummary] = None,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> float:
    """
    tr(chi_region f(H^)) = sum_{x in region} f(H^)_xx.

    Args:
        hamiltonian (DiscreteHamiltonian): The operator.
        region: Vertex subset as a boolean mask, row indices or vertex coordinates.
        f (SpectralFunction): ``heat(t)`` or ``projection(lambda)``; the projection
            keeps eigenvalues strictly below lambda.
        summary (SpectralSummary): Reuse an existing eigendecomposition.

    Returns:
        float: The restricted trace.
    """
    if not isinstance(f, (HeatFunction, ProjectionFunction)):
        raise ArgumentError(f"unknown spectral function {f!r}")
    mask = _region_mask(hamiltonian, region)
    if not mask.any():
        return 0.0
    if summary is None or (summary.eigenvectors is None and not mask.all()):
        summary = eigendecompose(hamiltonian, dense_ceiling, vectors=not mask.all())
    values = f(summary.eigenvalues)
    if mask.all():
        return float(np.sum(values))
    return float(np.sum(values * region_weights(summary, mask)))


def heat_trace_hilbert_schmidt(
    hamiltonian: DiscreteHamiltonian,
    t: float,
    region=None,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> float:
    """
    tr(chi_D e^{-tH}) through the kernel at t/2.

    sum_{x in D} sum_y K(t/2, x, y)^2 mu(x) mu(y) equals the sum of squared entries
    of the rows of e^{-(t/2) H^} in D; the semigroup is taken from ``expm`` so this
    path shares nothing with the eigenvalue sum.
    """
    mask = (
        np.ones(hamiltonian.dimension, dtype=bool)
        if region is None
        else _region_mask(hamiltonian, region)
    )
    half = heat_operator(hamiltonian, 0.5 * t, method="expm", dense_ceiling=dense_ceiling)
    return float(np.sum(half.matrix[mask, :] ** 2))
