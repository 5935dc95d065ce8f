"""Eigenvalue counting through Sylvester's law of inertia.

Up to the dense ceiling, H^ - lambda I is factored with the Bunch-Kaufman
symmetric-indefinite LDL^T of ``scipy.linalg.ldl``; D has 1x1 and 2x2 blocks and
its inertia equals the inertia of the shifted operator. Above the ceiling the
operator is reordered by reverse Cuthill-McKee and factored by SuperLU in
symmetric mode without row pivoting, so P A P^T = L U with U = D L^T and the
signs of diag(U) give the inertia. Elimination without pivoting is unstable near a
zero pivot, so a sparse factorization whose smallest pivot is within
``PIVOT_RTOL |H^|`` of zero (or that SuperLU refuses) is redone with the dense
Bunch-Kaufman factorization, whatever the ceiling.
"""

from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
from scipy.sparse.csgraph import reverse_cuthill_mckee
from scipy.sparse.linalg import splu

from idslab.exceptions import ArgumentError
from idslab.models.hamiltonian import DiscreteHamiltonian
from idslab.models.spectral import Inertia

BOUNDARY_RTOL = 1e-9
PIVOT_RTOL = 1e-6
DEFAULT_DENSE_CEILING = 4096


def _block_inertia(d: np.ndarray) -> Tuple[int, int, int, float]:
    """Inertia and smallest |eigenvalue| of a block-diagonal D from ``scipy.linalg.ldl``."""
    n = d.shape[0]
    negative = zero = positive = 0
    min_pivot = np.inf
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            block = d[i : i + 2, i : i + 2]
            values = np.linalg.eigvalsh(block)
            det = block[0, 0] * block[1, 1] - block[1, 0] * block[0, 1]
            if det < 0:
                negative += 1
                positive += 1
            elif det > 0:
                if block[0, 0] + block[1, 1] > 0:
                    positive += 2
                else:
                    negative += 2
            else:
                trace = block[0, 0] + block[1, 1]
                zero += 1
                negative += int(trace < 0)
                positive += int(trace > 0)
                zero += int(trace == 0)
            min_pivot = min(min_pivot, float(np.min(np.abs(values))))
            i += 2
        else:
            pivot = d[i, i]
            negative += int(pivot < 0)
            positive += int(pivot > 0)
            zero += int(pivot == 0)
            min_pivot = min(min_pivot, abs(float(pivot)))
            i += 1
    return negative, zero, positive, float(min_pivot)


def dense_inertia(matrix: np.ndarray) -> Tuple[int, int, int, float]:
    _, d, _ = la.ldl(matrix, lower=True, hermitian=True)
    return _block_inertia(d)


def sparse_inertia(matrix: sp.spmatrix) -> Optional[Tuple[int, int, int, float]]:
    """
    Inertia from an unpivoted SuperLU factorization in symmetric mode.

    ``diag_pivot_thresh=0`` keeps the pivots on the diagonal, so P A P^T = L U with
    U = D L^T. This is Gaussian elimination without pivoting: it is only reliable
    while every pivot stays away from zero, and SuperLU leaves the diagonal when it
    meets an exactly zero pivot. Returns None in that case and when the matrix is
    declared singular; :func:`inertia` then refactors with Bunch-Kaufman.
    """
    order = reverse_cuthill_mckee(sp.csr_matrix(matrix), symmetric_mode=True)
    banded = sp.csc_matrix(matrix)[order][:, order]
    try:
        lu = splu(
            sp.csc_matrix(banded),
            permc_spec="NATURAL",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError:
        return None
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    pivots = lu.U.diagonal()
    return (
        int(np.sum(pivots < 0)),
        int(np.sum(pivots == 0)),
        int(np.sum(pivots > 0)),
        float(np.min(np.abs(pivots))) if pivots.size else np.inf,
    )


def inertia(
    hamiltonian: DiscreteHamiltonian,
    energy: float,
    dense_ceiling: int = DEFAULT_DENSE_CEILING,
) -> Inertia:
    """
    Inertia of H^ - energy I.

    Args:
        hamiltonian (DiscreteHamiltonian): The operator.
        energy (float): Shift lambda; must be finite.
        dense_ceiling (int): Largest dimension factored densely.

    Returns:
        Inertia: Counts of negative, zero and positive pivots with the boundary flag;
        ``method`` is ``dense-fallback`` when the sparse factorization was discarded.
    """
    if not np.isfinite(energy):
        raise ArgumentError(f"energy must be finite, got {energy}")
    n = hamiltonian.dimension
    tolerance = BOUNDARY_RTOL * max(hamiltonian.norm(), 1.0)
    if n == 0:
        return Inertia(
            energy=energy, negative=0, zero=0, positive=0, min_pivot=np.inf,
            boundary_tolerance=tolerance, near_boundary=False, method="dense-ldl",
        )

    shifted = hamiltonian.matrix - energy * sp.identity(n, format="csr")
    factored = sparse_inertia(shifted) if n > dense_ceiling else None
    if factored is not None and factored[3] > PIVOT_RTOL * max(hamiltonian.norm(), 1.0):
        negative, zero, positive, min_pivot = factored
        method = "sparse-lu"
    else:
        negative, zero, positive, min_pivot = dense_inertia(shifted.toarray())
        method = "dense-ldl" if n <= dense_ceiling else "dense-fallback"

    return Inertia(
        energy=energy,
        negative=negative,
        zero=zero,
        positive=positive,
        min_pivot=min_pivot,
        boundary_tolerance=tolerance,
        near_boundary=min_pivot <= tolerance,
        method=method,
    )
