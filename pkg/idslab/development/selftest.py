"""Known closed-form values, grouped by module, checked by ``ids-lab selftest``."""

import math
import traceback
from fractions import Fraction
from typing import Callable, List, Tuple

import numpy as np
from pydantic import BaseModel

from idslab.geometry.folner import (
    folner_defect,
    isoperimetric_ratio,
    make_admissible_sequence,
    thicken,
)
from idslab.heat.lab import check_domain_monotonicity, kernel, nftb_experiment
from idslab.ids.experiments import ergodic_average, exhaustion_experiment, trace_gap_control
from idslab.ids.lab import abstract_ids, counting_ids, free_ids, laplace_transform, trace_gap
from idslab.models.config import BumpProfile, ModelConfig
from idslab.models.geometry import CellWindow, FolnerBox
from idslab.models.spectral import heat, projection
from idslab.operators.assembly import build_dirichlet, build_supercell
from idslab.operators.checks import equivariance_check
from idslab.random_model.sampling import (
    cell_amplitudes,
    cell_potentials,
    sample_metric,
    sample_potential,
    shift_realization,
    verify_model_bounds,
)
from idslab.spectral.engine import (
    count_below,
    eigendecompose,
    heat_operator,
    heat_trace_hilbert_schmidt,
    restricted_trace,
)

CheckFunction = Callable[[], Tuple[bool, str]]

FLAT_LINE = ModelConfig(dimension=1, resolution=1, metric_amplitude=0.0, potential_amplitude=0.0)
DISORDERED_PLANE = ModelConfig(dimension=2, resolution=2, metric_amplitude=0.3, potential_amplitude=1.0)
PATH_EIGENVALUES = np.array([2 - math.sqrt(2), 2.0, 2 + math.sqrt(2)])


class SelfTestResult(BaseModel):
    module: str
    name: str
    passed: bool
    detail: str = ""


_CHECKS: List[Tuple[str, str, CheckFunction]] = []


def _check(module: str, name: str):
    def register(func: CheckFunction) -> CheckFunction:
        _CHECKS.append((module, name, func))
        return func

    return register


def _path(radius: int = 1):
    box = FolnerBox(dimension=1, radius=radius, resolution=1)
    return box, build_dirichlet(FLAT_LINE, 0, box)


@_check("random-model", "flat metric is the lattice")
def _flat_metric():
    cfg = FLAT_LINE.model_copy(update={"dimension": 2, "resolution": 2})
    field = sample_metric(cfg, CellWindow(lo=(-1, -1), hi=(1, 1)), seed=11)
    ok = (
        np.all(field.rho == 1.0)
        and np.all(field.mu == 0.25)
        and all(np.all(w == 1.0) for w in field.conductance)
    )
    return bool(ok), "rho = 1, mu = h^d, w = h^{d-2}"


@_check("random-model", "sampling is deterministic")
def _deterministic():
    window = CellWindow(lo=(-2, -2), hi=(2, 2))
    a = sample_metric(DISORDERED_PLANE, window, seed=5)
    b = sample_metric(DISORDERED_PLANE, window, seed=5)
    return bool(np.array_equal(a.rho, b.rho) and np.array_equal(a.mu, b.mu)), "bit-identical resample"


@_check("random-model", "single-cell indicator density")
def _indicator_cell():
    cfg = ModelConfig(dimension=2, resolution=1, metric_amplitude=0.3, bump=BumpProfile.INDICATOR)
    field = sample_metric(cfg, CellWindow(lo=(0, 0), hi=(0, 0)), seed=3)
    a0 = float(cell_amplitudes(cfg, 3, np.zeros((1, 2), dtype=np.int64))[0])
    rho = float(field.rho[0, 0])
    ok = math.isclose(rho, math.exp(-2 * a0), rel_tol=1e-14) and math.exp(-0.6) <= rho <= math.exp(0.6)
    return ok, f"rho = {rho:.6f} for a_0 = {a0:.6f}"


@_check("random-model", "single-cell indicator potential")
def _indicator_potential():
    cfg = ModelConfig(dimension=1, resolution=1, potential_amplitude=1.0, bump=BumpProfile.INDICATOR)
    field = sample_potential(cfg, CellWindow(lo=(0,), hi=(0,)), seed=3)
    q0 = float(cell_potentials(cfg, 3, np.zeros((1, 1), dtype=np.int64))[0])
    return bool(field.values[0] == q0), f"V = {float(field.values[0]):.6f}"


@_check("random-model", "shift then unshift")
def _shift_roundtrip():
    field = sample_metric(DISORDERED_PLANE, CellWindow(lo=(-1, -1), hi=(1, 1)), seed=9)
    back = shift_realization(shift_realization(field, (3, -2)), (-3, 2))
    same = shift_realization(field, (0, 0))
    ok = np.array_equal(back.rho, field.rho) and back.window == field.window and np.array_equal(same.mu, field.mu)
    return bool(ok), "T_g T_g^{-1} = id"


@_check("random-model", "bounds scan")
def _bounds():
    window = CellWindow(lo=(-3, -3), hi=(3, 3))
    field = sample_metric(DISORDERED_PLANE, window, seed=1)
    clean = verify_model_bounds(field)
    rho = field.rho.copy()
    rho[0, 0] = 2.0 * DISORDERED_PLANE.c_g
    corrupt = verify_model_bounds(field.model_copy(update={"rho": rho}))
    ok = clean.passed and clean.c_g_observed <= math.exp(0.6) and not corrupt.passed
    return ok, f"C_g observed {clean.c_g_observed:.4f}"


@_check("folner-geometry", "sumset ratio 7/5")
def _sumset():
    sequence = make_admissible_sequence(1, [1, 2])
    return sequence.temperedness_ratios[0] == Fraction(7, 5), f"{sequence.temperedness_ratios[0]}"


@_check("folner-geometry", "one-step defect 2/21")
def _defect():
    box = FolnerBox(dimension=1, radius=10)
    value = folner_defect(box.index_set(), (1,))
    return value == Fraction(2, 21) and folner_defect(box.index_set(), (0,)) == 0, f"{value}"


@_check("folner-geometry", "boundary ring 80/441")
def _ring():
    value = isoperimetric_ratio(FolnerBox(dimension=2, radius=10), 1.0)
    return value == Fraction(80, 441), f"{value}"


@_check("folner-geometry", "core of [-3, 3]")
def _core():
    layer = thicken(FolnerBox(dimension=1, radius=3), 1.0)
    core = layer.core_coordinates().ravel().tolist()
    return core == [-2, -1, 0, 1, 2], f"{core}"


@_check("folner-geometry", "boundary ratio decreases along the sequence")
def _ratio_decreases():
    sequence = make_admissible_sequence(1, [2, 4, 8])
    ratios = [isoperimetric_ratio(box, 1.0) for box in sequence.boxes]
    return ratios == [Fraction(2, 5), Fraction(2, 9), Fraction(2, 17)], " ".join(str(r) for r in ratios)


@_check("operator-assembly", "path graph spectrum")
def _path_spectrum():
    _, hamiltonian = _path()
    values = eigendecompose(hamiltonian).eigenvalues
    return bool(np.allclose(values, PATH_EIGENVALUES, atol=1e-12)), f"{values}"


@_check("operator-assembly", "four-vertex torus spectrum")
def _torus_spectrum():
    values = eigendecompose(build_supercell(FLAT_LINE, 0, period=4)).eigenvalues
    return bool(np.allclose(values, [0.0, 2.0, 2.0, 4.0], atol=1e-12)), f"{values}"


@_check("operator-assembly", "translation equivariance")
def _equivariance():
    box = FolnerBox(dimension=2, radius=2, resolution=2)
    reports = [equivariance_check(DISORDERED_PLANE, seed, (seed, 1 - seed), box) for seed in range(4)]
    return all(r.passed for r in reports), f"{sum(r.mismatched_entries for r in reports)} mismatches"


@_check("spectral-engine", "counts on the path graph")
def _counts():
    _, hamiltonian = _path()
    counts = [count_below(hamiltonian, e) for e in (-1.0, 1.0, 10.0)]
    return counts == [0, 1, 3], f"{counts}"


@_check("spectral-engine", "scalar heat semigroup")
def _scalar_heat():
    _, hamiltonian = _path(radius=0)
    value = float(heat_operator(hamiltonian, 1.0).matrix[0, 0])
    identity = heat_operator(hamiltonian, 0.0).matrix
    return math.isclose(value, math.exp(-2.0), rel_tol=1e-12) and identity[0, 0] == 1.0, f"{value:.6f}"


@_check("spectral-engine", "middle-vertex heat trace")
def _restricted():
    _, hamiltonian = _path()
    value = restricted_trace(hamiltonian, np.array([False, True, False]), heat(1.0))
    full = restricted_trace(hamiltonian, np.ones(3, dtype=bool), projection(2.5))
    return abs(value - 0.2948) < 1e-4 and full == 2.0, f"{value:.5f}"


@_check("spectral-engine", "heat-trace identity")
def _heat_trace_identity():
    _, hamiltonian = _path()
    kernel_trace = heat_trace_hilbert_schmidt(hamiltonian, 1.0)
    eigen_trace = eigendecompose(hamiltonian, vectors=False).heat_trace(1.0)
    expected = float(np.sum(np.exp(-PATH_EIGENVALUES)))
    ok = math.isclose(kernel_trace, eigen_trace, rel_tol=1e-10) and math.isclose(eigen_trace, expected, rel_tol=1e-12)
    return ok, f"{kernel_trace:.12f} vs {eigen_trace:.12f}"


@_check("heat-lab", "path graph domain monotonicity")
def _domain():
    _, small = _path(1)
    _, large = _path(2)
    report = check_domain_monotonicity(small, large, 1.0)
    return report.passed and report.max_gap > 0, f"max gap {report.max_gap:.3e}"


@_check("heat-lab", "one-vertex kernel")
def _one_vertex_kernel():
    _, hamiltonian = _path(radius=0)
    value = float(kernel(hamiltonian, 0.7).entries[0, 0])
    return math.isclose(value, math.exp(-1.4), rel_tol=1e-12), f"{value:.6f}"


@_check("heat-lab", "core gap shrinks with the thickness")
def _nftb():
    box, _ = _path(radius=3)
    report = nftb_experiment(FLAT_LINE, 0, box, 1.0, [1.0, 2.0])
    ok = report.strictly_decreasing and all(r.min_difference >= -1e-12 for r in report.rows)
    return ok, " ".join(f"{r.sup_difference:.3e}" for r in report.rows)


@_check("ids-lab", "counting function on three vertices")
def _counting():
    box, _ = _path()
    estimate = counting_ids(FLAT_LINE, 0, box, [0.0, 1.0, 10.0])
    return bool(np.allclose(estimate.values, [0.0, 1 / 3, 1.0])), f"{estimate.values}"


@_check("ids-lab", "free count without margin")
def _free_identity():
    box, _ = _path()
    free = free_ids(FLAT_LINE, 0, box, [1.0, 3.0], 0)
    dirichlet = counting_ids(FLAT_LINE, 0, box, [1.0, 3.0])
    return bool(np.array_equal(free.values, dirichlet.values)) and trace_gap(FLAT_LINE, 0, box, 1.0, 0) == 0.0, ""


@_check("ids-lab", "single-vertex Laplace transform")
def _laplace():
    box = FolnerBox(dimension=1, radius=0)
    table = laplace_transform(FLAT_LINE, 0, box, [0.0, 1.0])
    ok = math.isclose(table.values[1], math.exp(-2.0), rel_tol=1e-12) and table.values[0] == 1.0
    return ok, f"{table.values[1]:.6f}"


@_check("ids-lab", "abstract quotient on the 4-torus")
def _abstract():
    estimate = abstract_ids(FLAT_LINE, [0], [1.0], kind="time", period=4)
    expected = 0.25 * (1 + 2 * math.exp(-2.0) + math.exp(-4.0))
    return math.isclose(float(estimate.values[0]), expected, rel_tol=1e-10), f"{float(estimate.values[0]):.4f}"


@_check("ids-lab", "trace gap shrinks along the sequence")
def _trace_gap_control():
    (fit,) = trace_gap_control(FLAT_LINE, [0], make_admissible_sequence(1, [1, 2, 4]), [1.0], 4)
    return fit.shrinking and fit.controlled, f"kappa {fit.kappa:.4f}, gaps {fit.mean_gaps}"


@_check("ids-lab", "exhaustion of the flat line")
def _exhaustion():
    sequence = make_admissible_sequence(1, [2, 4])
    report = exhaustion_experiment(FLAT_LINE, [0, 1], sequence, np.linspace(0.0, 4.0, 21), [1.0])
    # Dirichlet path and 9-cycle differ by a rank-2 perturbation
    ok = report.std_median == [0.0, 0.0] and report.support_consistent and report.abstract_distance <= 2 / 9
    return ok, f"distance {report.abstract_distance:.4f}"


@_check("ids-lab", "ergodic averages")
def _ergodic():
    sequence = make_admissible_sequence(2, [2, 4, 8], resolution=2)
    constant = ergodic_average(DISORDERED_PLANE, 0, "constant", sequence, constant=2.5)
    amplitude = ergodic_average(DISORDERED_PLANE, 0, "amplitude", sequence)
    ok = all(r.deviation == 0.0 for r in constant.rows) and amplitude.passed
    return ok, f"amplitude deviation {amplitude.rows[-1].deviation:.2e} <= {amplitude.rows[-1].envelope:.2e}"


def run_selftest() -> List[SelfTestResult]:
    results = []
    for module, name, func in _CHECKS:
        try:
            passed, detail = func()
        except Exception as e:
            passed, detail = False, f"{type(e).__name__}: {e}\n{traceback.format_exc(limit=2)}"
        results.append(SelfTestResult(module=module, name=name, passed=bool(passed), detail=detail))
    return results
