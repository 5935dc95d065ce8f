import math
from typing import Optional, Sequence

import numpy as np

from idslab.exceptions import ArgumentError
from idslab.models.config import ModelConfig
from idslab.models.geometry import CellWindow, FolnerBox
from idslab.models.hamiltonian import DiscreteHamiltonian, EquivarianceReport, FormReport
from idslab.operators.assembly import assemble_dirichlet, check_box
from idslab.random_model.sampling import sample_metric, sample_potential, shift_realization


def _bounding_window(a: CellWindow, b: CellWindow) -> CellWindow:
    return CellWindow(
        lo=tuple(min(x, y) for x, y in zip(a.lo, b.lo)),
        hi=tuple(max(x, y) for x, y in zip(a.hi, b.hi)),
    )


def _mismatches(left: DiscreteHamiltonian, right: DiscreteHamiltonian) -> int:
    a, b = left.matrix, right.matrix
    if a.shape != b.shape:
        return max(a.shape[0], b.shape[0]) ** 2
    structure = int(
        not (np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices))
    )
    if structure:
        return structure + int((a != b).nnz)
    return (
        int(np.count_nonzero(a.data != b.data))
        + int(np.count_nonzero(left.mu != right.mu))
        + int(np.count_nonzero(left.potential != right.potential))
    )


def equivariance_check(
    cfg: ModelConfig, seed: int, gamma: Sequence[int], box: FolnerBox
) -> EquivarianceReport:
    """
    Compare H on D for T_gamma(omega) with H on D + gamma for omega, bit for bit.

    Row k of the first operator is the vertex x of D, row k of the second is
    x + gamma, so the permutation conjugating the two is the identity in C order
    and the matrices must agree exactly. The translated operator is sampled on
    its own window; the other is read off a shifted realization of a window
    covering both boxes, so the check also exercises window independence of the
    cell hash. A third operator samples T_gamma(omega) directly through the
    ``shift`` argument of the samplers; all three must coincide.
    """
    check_box(cfg, box)
    gamma = tuple(int(g) for g in gamma)
    target = box.translated(gamma)

    metric = sample_metric(cfg, target.window.enlarged(1), seed)
    potential = sample_potential(cfg, target.window, seed)
    translated = assemble_dirichlet(metric, potential, target)

    cover = _bounding_window(box.window, target.window).enlarged(1)
    shifted_metric = shift_realization(sample_metric(cfg, cover, seed), gamma)
    shifted_potential = shift_realization(sample_potential(cfg, cover, seed), gamma)
    # the shifted cover lives on cover - gamma, which contains the enlarged box
    pulled_back = assemble_dirichlet(shifted_metric, shifted_potential, box)

    sampled = assemble_dirichlet(
        sample_metric(cfg, box.window.enlarged(1), seed, shift=gamma),
        sample_potential(cfg, box.window, seed, shift=gamma),
        box,
    )

    relabelled = _mismatches(pulled_back, translated)
    direct = _mismatches(sampled, translated)
    return EquivarianceReport(
        gamma=gamma,
        seed=seed,
        mismatched_entries=relabelled + direct,
        sampled_shift_mismatches=direct,
        passed=relabelled == 0 and direct == 0,
    )


def comparability_constant(cfg: ModelConfig) -> float:
    """C_A for the symmetrized forms on the mesh, from C_rho and the amplitude bound.

    Writing f_x / sqrt(mu_x) through sqrt(rho) and splitting each edge difference
    gives Q_omega + |f|^2 <= max(K1, 1 + K2) (Q_0 + |f|^2) and the reverse with K2';
    the constant is the larger of the two.
    """
    d = cfg.dimension
    a = cfg.metric_amplitude * cfg.overlap_sup
    spread = math.exp((d + abs(d - 2)) * a)
    k1 = 2.0 * spread
    k2 = d * cfg.c_rho**2 * spread
    k2_reverse = d * cfg.c_rho**2 * math.exp(2 * d * a)
    return max(k1, 1.0 + max(k2, k2_reverse))


def form_comparability(
    h_flat: DiscreteHamiltonian,
    h_omega: DiscreteHamiltonian,
    trials: int,
    cfg: ModelConfig,
    seed: int = 0,
    vectors: Optional[np.ndarray] = None,
) -> FormReport:
    """
    Rayleigh-quotient sweep of (<f, H^_omega f> + |f|^2) / (<f, H^_0 f> + |f|^2).

    Args:
        h_flat (DiscreteHamiltonian): Operator of the flat metric (same potential).
        h_omega (DiscreteHamiltonian): Operator of the disordered metric.
        trials (int): Number of Gaussian test vectors drawn from ``seed``.
        cfg (ModelConfig): Source of C_g and C_rho for C_A.
        seed (int): Seed of the test-vector generator.
        vectors (np.ndarray): Extra test vectors, one per row, checked in addition.

    Returns:
        FormReport: C_A and the observed ratio range.
    """
    if h_flat.dimension != h_omega.dimension or h_flat.boundary != h_omega.boundary:
        raise ArgumentError(
            f"operators differ in dimension ({h_flat.dimension} vs {h_omega.dimension}) "
            "or boundary condition"
        )
    if not np.array_equal(h_flat.vertices, h_omega.vertices):
        raise ArgumentError("operators live on different domains")

    rng = np.random.default_rng(seed)
    samples = rng.standard_normal((trials, h_flat.dimension))
    if vectors is not None:
        samples = np.vstack([samples, np.atleast_2d(vectors)])

    ratios = []
    for f in samples:
        norm = float(f @ f)
        ratios.append((float(f @ (h_omega.matrix @ f)) + norm) / (float(f @ (h_flat.matrix @ f)) + norm))
    c_a = comparability_constant(cfg)
    ratio_min = min(ratios, default=1.0)
    ratio_max = max(ratios, default=1.0)
    return FormReport(
        c_a=c_a,
        ratio_min=ratio_min,
        ratio_max=ratio_max,
        trials=len(ratios),
        passed=ratio_min >= 1.0 / c_a and ratio_max <= c_a,
    )
