import math
from typing import Literal, Optional, Sequence

import networkx as nx
import numpy as np
from scipy.optimize import linprog

from idslab.exceptions import ArgumentError, InternalError
from idslab.geometry.folner import boundary_layers, thicken
from idslab.models.config import ModelConfig
from idslab.models.fields import MetricField
from idslab.models.geometry import FolnerBox
from idslab.models.hamiltonian import BoundaryCondition, DiscreteHamiltonian
from idslab.models.heat import (
    DecayFit,
    KernelMatrix,
    MarginReport,
    MonotonicityReport,
    NftbReport,
    NftbRow,
)
from idslab.models.spectral import SpectralSummary
from idslab.operators.assembly import build_dirichlet
from idslab.spectral.engine import heat_operator
from idslab.utils import logger

KERNEL_ATOL = 1e-12
MARGIN_ATOL = 1e-10
DEFAULT_MIN_FIT_TIME = 0.5
MIN_FIT_DIAMETER = 8
FIT_FLOOR = 1e-12
MAX_FIT_BINS = 4096


def kernel(
    hamiltonian: DiscreteHamiltonian,
    t: float,
    summary: Optional[SpectralSummary] = None,
    method: Literal["auto", "eigh", "expm"] = "auto",
) -> KernelMatrix:
    """
    mu-weighted heat kernel of ``hamiltonian`` at time ``t``.

    Args:
        hamiltonian (DiscreteHamiltonian): The operator.
        t (float): Time, t >= 0.
        summary (SpectralSummary): Eigendecomposition to reuse.
        method (str): Forwarded to :func:`heat_operator`.

    Returns:
        KernelMatrix: K(t, x, y) with its sup entry and sup row integral.
    """
    semigroup = heat_operator(hamiltonian, t, summary=summary, method=method)
    root = np.sqrt(hamiltonian.mu)
    entries = semigroup.matrix / np.outer(root, root)
    row_integrals = entries @ hamiltonian.mu
    return KernelMatrix(
        time=t,
        hamiltonian=hamiltonian,
        entries=entries,
        sup_entry=float(entries.max()) if entries.size else 0.0,
        row_integral_sup=float(row_integrals.max()) if row_integrals.size else 0.0,
        worst_negative=semigroup.worst_negative,
    )


def kernel_moments(kernel_matrix: KernelMatrix, a: float) -> float:
    """B_{t,a} = max_x sum_y K(t, x, y)^a mu(y)."""
    if a <= 0:
        raise ArgumentError(f"moment exponent must be positive, got {a}")
    entries = np.clip(kernel_matrix.entries, 0.0, None)
    return float(np.max((entries**a) @ kernel_matrix.mu))


def _compare(small: np.ndarray, large: np.ndarray, t: float) -> MonotonicityReport:
    excess = small - large
    return MonotonicityReport(
        time=t,
        compared_entries=int(excess.size),
        max_excess=float(excess.max()) if excess.size else 0.0,
        max_gap=float((-excess).max()) if excess.size else 0.0,
        tolerance=KERNEL_ATOL,
        passed=bool(excess.size == 0 or excess.max() <= KERNEL_ATOL),
    )


def _shared_rows(small: DiscreteHamiltonian, large: DiscreteHamiltonian) -> np.ndarray:
    try:
        rows = large.index_of(small.vertices)
    except IndexError as e:
        raise ArgumentError(f"domains are not nested: {e}") from e
    if large.boundary == BoundaryCondition.PERIODIC_SUPERCELL and small.dimension > 0:
        if np.unique(rows).size != rows.size:
            raise ArgumentError("domains are not nested: the small domain wraps the torus")
    return rows


def check_domain_monotonicity(
    h_small: DiscreteHamiltonian, h_large: DiscreteHamiltonian, t: float
) -> MonotonicityReport:
    """
    Domain monotonicity K_{H^D}(t, x, y) <= K_{H^D'}(t, x, y) on D x D for D in D'.

    Both operators must come from the same realization: the vertex measures are
    required to agree on D.
    """
    if h_small.boundary != BoundaryCondition.DIRICHLET:
        raise ArgumentError("the inner operator must carry Dirichlet conditions")
    rows = _shared_rows(h_small, h_large)
    if not np.array_equal(h_small.mu, h_large.mu[rows]):
        raise ArgumentError("operators come from different realizations")
    k_small = kernel(h_small, t).entries
    k_large = kernel(h_large, t).entries[np.ix_(rows, rows)]
    return _compare(k_small, k_large, t)


def check_potential_monotonicity(
    h_high: DiscreteHamiltonian, h_low: DiscreteHamiltonian, t: float
) -> MonotonicityReport:
    """
    Potential monotonicity K_{Delta+V}(t) <= K_{Delta+V'}(t) entrywise for V >= V' >= 0.
    """
    if not np.array_equal(h_high.vertices, h_low.vertices) or not np.array_equal(h_high.mu, h_low.mu):
        raise ArgumentError("operators must share domain and metric")
    if not (
        np.array_equal(h_high.edges, h_low.edges)
        and np.array_equal(h_high.edge_weights, h_low.edge_weights)
        and np.array_equal(h_high.boundary_weights, h_low.boundary_weights)
    ):
        raise ArgumentError("operators must share the Laplacian part")
    if np.any(h_high.potential < h_low.potential) or np.any(h_low.potential < 0):
        raise ArgumentError("potentials must satisfy V >= V' >= 0 pointwise")
    return _compare(kernel(h_high, t).entries, kernel(h_low, t).entries, t)


def diffusive_range(t: float) -> float:
    """Three standard deviations sqrt(2t) of the walk per coordinate, in cells."""
    return 3.0 * math.sqrt(2.0 * t)


def required_margin(t: float, thicknesses: Sequence[float]) -> int:
    return math.ceil(max(thicknesses)) + math.ceil(diffusive_range(t))


def default_margin(t: float, thicknesses: Sequence[float]) -> int:
    return math.ceil(max(thicknesses)) + math.ceil(7.0 * math.sqrt(2.0 * t))


def _ambient_core_kernels(cfg: ModelConfig, seed: int, box: FolnerBox, t: float, margin: int):
    ambient = box.enlarged(margin)
    h_ambient = build_dirichlet(cfg, seed, ambient)
    h_box = build_dirichlet(cfg, seed, box)
    rows = h_ambient.index_of(h_box.vertices)
    k_ambient = kernel(h_ambient, t, method="expm").entries[np.ix_(rows, rows)]
    k_box = kernel(h_box, t, method="expm").entries
    return k_ambient, k_box


def nftb_experiment(
    cfg: ModelConfig,
    seed: int,
    box: FolnerBox,
    t: float,
    thicknesses: Sequence[float],
    margin: Optional[int] = None,
) -> NftbReport:
    """
    Not feeling the boundary: sup over the core D_h of K_X(t) - K_{H^D}(t).

    X is proxied by the Dirichlet box enlarged by ``margin`` cells, which must be
    at least the largest thickness plus three diffusive standard deviations.
    Empty cores report 0 with ``empty_core`` set.
    """
    if not thicknesses:
        raise ArgumentError("thickness grid is empty")
    if t <= 0:
        raise ArgumentError(f"time must be positive, got {t}")
    needed = required_margin(t, thicknesses)
    margin = default_margin(t, thicknesses) if margin is None else margin
    if margin < needed:
        raise ArgumentError(f"ambient margin {margin} below the required {needed} cells")

    k_ambient, k_box = _ambient_core_kernels(cfg, seed, box, t, margin)
    difference = k_ambient - k_box
    rows = []
    for thickness in thicknesses:
        core = thicken(box, thickness).core_mask.ravel()
        if not core.any():
            rows.append(
                NftbRow(
                    thickness=thickness,
                    layers=boundary_layers(thickness, box.resolution),
                    core_size=0,
                    sup_difference=0.0,
                    min_difference=0.0,
                    empty_core=True,
                )
            )
            continue
        block = difference[np.ix_(core, core)]
        rows.append(
            NftbRow(
                thickness=thickness,
                layers=boundary_layers(thickness, box.resolution),
                core_size=int(core.sum()),
                sup_difference=float(block.max()),
                min_difference=float(block.min()),
                empty_core=False,
            )
        )
    logger.debug(f"nftb seed={seed} L={box.radius} t={t} margin={margin}: {[r.sup_difference for r in rows]}")
    return NftbReport(time=t, radius=box.radius, margin=margin, rows=rows)


def margin_self_consistency(
    cfg: ModelConfig, seed: int, box: FolnerBox, t: float, margin: int
) -> MarginReport:
    """Doubling the ambient margin must move the kernel on D by less than 1e-10."""
    if margin < 1:
        raise ArgumentError(f"margin must be positive, got {margin}")
    k_single, _ = _ambient_core_kernels(cfg, seed, box, t, margin)
    k_double, _ = _ambient_core_kernels(cfg, seed, box, t, 2 * margin)
    change = float(np.max(np.abs(k_double - k_single)))
    return MarginReport(
        margin=margin,
        doubled_margin=2 * margin,
        max_change=change,
        tolerance=MARGIN_ATOL,
        passed=change < MARGIN_ATOL,
    )


def metric_graph(hamiltonian: DiscreteHamiltonian, metric: MetricField) -> nx.Graph:
    """Mesh graph of the operator's domain with edge lengths h e^{phi(midpoint)}."""
    h = hamiltonian.mesh_width
    periodic = hamiltonian.boundary == BoundaryCondition.PERIODIC_SUPERCELL
    shape = np.asarray(hamiltonian.vertex_shape)
    graph = nx.Graph()
    graph.add_nodes_from(range(hamiltonian.dimension))
    origins = hamiltonian.vertices
    try:
        field_index = metric.local_index(origins)
    except IndexError as e:
        raise ArgumentError(f"metric does not cover the domain: {e}") from e
    local = origins - np.asarray(hamiltonian.vertex_lo)
    for axis, edge_phi in enumerate(metric.edge_phi):
        heads = local.copy()
        heads[:, axis] += 1
        if periodic:
            heads[:, axis] %= shape[axis]
            keep = np.ones(len(heads), dtype=bool)
        else:
            keep = heads[:, axis] < shape[axis]
        tails = np.flatnonzero(keep)
        targets = np.ravel_multi_index(tuple(heads[keep].T), hamiltonian.vertex_shape)
        lengths = h * np.exp(edge_phi[field_index][keep])
        for u, v, length in zip(tails, targets, lengths):
            if u == v:
                continue
            if graph.has_edge(u, v):
                length = min(length, graph[u][v]["weight"])
            graph.add_edge(int(u), int(v), weight=float(length))
    return graph


def metric_distances(hamiltonian: DiscreteHamiltonian, metric: MetricField) -> np.ndarray:
    """All-pairs d_omega as a dense matrix."""
    graph = metric_graph(hamiltonian, metric)
    n = hamiltonian.dimension
    distances = np.full((n, n), np.inf)
    for source, lengths in nx.all_pairs_dijkstra_path_length(graph, weight="weight"):
        targets = np.fromiter(lengths.keys(), dtype=np.int64)
        distances[source, targets] = np.fromiter(lengths.values(), dtype=float)
    return distances


def _envelope_points(squared: np.ndarray, logs: np.ndarray):
    """Conservative reduction of (d^2, log K) pairs: per bin, the largest d^2 with the largest log K."""
    order = np.argsort(squared, kind="stable")
    squared, logs = squared[order], logs[order]
    bins = min(MAX_FIT_BINS, squared.size)
    edges = np.linspace(0, squared.size, bins + 1).astype(np.int64)
    xs, ys = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if b > a:
            xs.append(squared[b - 1])
            ys.append(logs[a:b].max())
    return np.asarray(xs), np.asarray(ys)


def fit_decay(
    kernel_matrix: KernelMatrix,
    metric: MetricField,
    min_time: float = DEFAULT_MIN_FIT_TIME,
) -> DecayFit:
    """
    Fit the Gaussian upper envelope log K(t, x, y) <= log C_t - alpha_t d_omega(x, y)^2.

    The envelope is the line in (d^2, log K) lying above every entry with the
    least total gap, found as a two-variable linear program. Entries below 1e-12
    of the largest are left out (their logarithms are rounding noise).
    """
    if kernel_matrix.time < min_time:
        raise ArgumentError(f"decay fits need t >= {min_time}, got {kernel_matrix.time}")
    hamiltonian = kernel_matrix.hamiltonian
    if max(hamiltonian.vertex_shape) - 1 < MIN_FIT_DIAMETER:
        raise ArgumentError(f"domain diameter below {MIN_FIT_DIAMETER} mesh steps")

    distances = metric_distances(hamiltonian, metric)
    entries = kernel_matrix.entries
    used = (entries > FIT_FLOOR * entries.max()) & np.isfinite(distances)
    squared = distances[used] ** 2
    logs = np.log(entries[used])
    if squared.size < 2 or np.ptp(squared) == 0:
        raise ArgumentError("degenerate decay fit: all distances are equal")

    xs, ys = _envelope_points(squared, logs)
    # variables (c, alpha): minimise sum(c - alpha x_i) s.t. c - alpha x_i >= y_i
    result = linprog(
        c=[xs.size, -xs.sum()],
        A_ub=np.column_stack([-np.ones_like(xs), xs]),
        b_ub=-ys,
        bounds=[(None, None), (0, None)],
        method="highs",
    )
    if not result.success:
        raise InternalError(f"decay envelope fit failed: {result.message}")
    log_c, alpha = float(result.x[0]), float(result.x[1])
    gaps = log_c - alpha * squared - logs
    return DecayFit(
        time=kernel_matrix.time,
        c_hat=math.exp(log_c),
        alpha_hat=alpha,
        points=int(squared.size),
        mean_gap=float(gaps.mean()),
        min_gap=float(gaps.min()),
        passed=bool(alpha > 0 and gaps.min() >= -1e-9),
    )


def required_thickness(fit: DecayFit, c_g: float, epsilon: float) -> float:
    """Smallest h with C_t exp(-alpha_t C_g^{-2} (h/2)^2) <= epsilon."""
    if epsilon <= 0:
        raise ArgumentError(f"epsilon must be positive, got {epsilon}")
    if fit.alpha_hat <= 0:
        raise ArgumentError("a thickness needs a positive decay rate")
    if fit.c_hat <= epsilon:
        return 0.0
    return 2.0 * c_g * math.sqrt(math.log(fit.c_hat / epsilon) / fit.alpha_hat)
