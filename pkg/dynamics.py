"""
Pauli master-equation model of a cycle machine loaded by an external qubit.

Joint states are (machine level, system level) pairs indexed 2 * level + s,
with s = 0 the system ground state.  Three channels act on them:

* every machine transition thermalizes with its bath at total rate 1/tau_beta,
  split by detailed balance, identically in both system sectors;
* the system relaxes toward its environment's Gibbs state at total rate
  1/tau_s, identically on every machine level;
* |first level, 1_s> and |last level, 0_s> exchange at rate 1/tau_swap.

A timescale of math.inf switches its channel off.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.special import expit

import config
from cycle import CycleSpec, require_valid
from design import DesignParams, optimal_cycle
from errors import ReducibleGeneratorError, SolverError, UsageError, ValidationError

logger = logging.getLogger(__name__)

# populations below -NEGATIVE_LIMIT are a failed solve, not round-off
NEGATIVE_LIMIT = 1e-8
RESIDUAL_LIMIT = 1e-10


def _check_timescale(name: str, value: float) -> None:
    if math.isnan(value) or not value > 0:
        raise ValidationError(f"{name} must be positive (or inf to disable), got {value}", field=name)


@dataclass(frozen=True)
class DynamicsConfig:
    """
    Timescales and system environment of a dynamics run.

    beta_env and e_s default to the coldest coupled bath and the machine's
    virtual gap when left as None; see resolved().
    """

    tau_beta: float = config.DEFAULT_TAU_BETA
    tau_s: float = config.DEFAULT_TAU_S
    tau_swap: float = config.DEFAULT_TAU_SWAP
    beta_env: Optional[float] = None
    e_s: Optional[float] = None

    def __post_init__(self):
        for name in ("tau_beta", "tau_s", "tau_swap"):
            _check_timescale(name, getattr(self, name))
        if self.beta_env is not None and not math.isfinite(self.beta_env):
            raise ValidationError(f"beta_env must be finite, got {self.beta_env}", field="beta_env")
        if self.e_s is not None and not (math.isfinite(self.e_s) and self.e_s > 0):
            raise ValidationError(f"E_s must be positive, got {self.e_s}", field="e_s")

    def resolved(self, params: DesignParams) -> "DynamicsConfig":
        return replace(
            self,
            beta_env=params.beta_c if self.beta_env is None else self.beta_env,
            e_s=params.e_v if self.e_s is None else self.e_s,
        )

    def with_tau_s(self, tau_s: float) -> "DynamicsConfig":
        return replace(self, tau_s=tau_s)

    def with_tau_swap(self, tau_swap: float) -> "DynamicsConfig":
        return replace(self, tau_swap=tau_swap)


@dataclass(frozen=True)
class RateMatrix:
    """Generator dp/dt = G p: off-diagonals >= 0, columns summing to 0."""

    generator: np.ndarray
    labels: Tuple = ()

    @property
    def size(self) -> int:
        return self.generator.shape[0]


@dataclass(frozen=True)
class JointState:
    """Populations over the 2n (machine level, system level) pairs."""

    populations: np.ndarray

    def __post_init__(self):
        pops = np.array(self.populations, dtype=float)
        pops.setflags(write=False)
        object.__setattr__(self, "populations", pops)

    @property
    def machine_marginal(self) -> np.ndarray:
        return self.populations.reshape(-1, 2).sum(axis=1)

    @property
    def system_marginal(self) -> np.ndarray:
        return self.populations.reshape(-1, 2).sum(axis=0)


def thermal_rates(gap: float, beta: float, tau: float) -> Tuple[float, float]:
    """
    (upward, downward) rates across a transition of energy `gap` (upward means
    toward the higher-energy level for gap > 0).  They sum to 1/tau and their
    ratio is exp(-beta * gap).
    """
    if math.isinf(tau):
        return 0.0, 0.0
    x = beta * gap
    return float(expit(-x)) / tau, float(expit(x)) / tau


def _rate(tau: float) -> float:
    return 0.0 if math.isinf(tau) else 1.0 / tau


def build_rates(spec: CycleSpec, dyn: DynamicsConfig) -> RateMatrix:
    """
    Generator of the joint machine + system dynamics.

    Args:
        spec: a valid cycle; its virtual qubit is (first level, last level)
        dyn: timescales; unset beta_env / e_s default to the coldest coupled
            bath and E_n - E_1

    Raises:
        ValidationError: invalid cycle or a system gap off resonance
    """
    require_valid(spec)
    n = spec.n
    e_s = spec.e_v if dyn.e_s is None else dyn.e_s
    beta_env = float(spec.betas.max()) if dyn.beta_env is None else dyn.beta_env
    if not math.isclose(e_s, spec.e_v, rel_tol=1e-12):
        raise ValidationError(f"system gap {e_s} is not resonant with E_v = {spec.e_v}", field="e_s")

    size = 2 * n
    generator = np.zeros((size, size))

    def add(src: int, dst: int, rate: float) -> None:
        generator[dst, src] += rate
        generator[src, src] -= rate

    for j, (gap, beta) in enumerate(zip(spec.gaps, spec.betas)):
        up, down = thermal_rates(gap, beta, dyn.tau_beta)
        for s in (0, 1):
            add(2 * j + s, 2 * (j + 1) + s, up)
            add(2 * (j + 1) + s, 2 * j + s, down)

    z_env = math.tanh(beta_env * e_s / 2.0)
    relax = _rate(dyn.tau_s)
    for level in range(n):
        add(2 * level + 1, 2 * level, relax * (1.0 + z_env) / 2.0)
        add(2 * level, 2 * level + 1, relax * (1.0 - z_env) / 2.0)

    exchange = _rate(dyn.tau_swap)
    add(1, 2 * (n - 1), exchange)
    add(2 * (n - 1), 1, exchange)

    labels = tuple((level, s) for level in range(n) for s in (0, 1))
    return RateMatrix(generator=generator, labels=labels)


def check_irreducible(rates: RateMatrix) -> None:
    """
    Require exactly one closed communicating class.

    Raises:
        ReducibleGeneratorError: zero or several closed classes
    """
    generator = rates.generator
    adjacency = (generator.T > 0).astype(int)
    np.fill_diagonal(adjacency, 0)
    count, labels = connected_components(csr_matrix(adjacency), directed=True, connection="strong")
    leaves = np.ones(count, dtype=bool)
    sources, targets = np.nonzero(adjacency)
    for src, dst in zip(sources, targets):
        if labels[src] != labels[dst]:
            leaves[labels[src]] = False
    closed = int(leaves.sum())
    if closed != 1:
        raise ReducibleGeneratorError(
            f"rate matrix has {closed} closed classes; the steady state is not unique"
        )


def steady(rates: RateMatrix) -> JointState:
    """
    Unique stationary distribution of an irreducible generator.

    One balance row is replaced by the normalization sum p = 1 and the system
    solved densely.  Small negative populations from round-off are clamped and
    the vector renormalized.

    Raises:
        ReducibleGeneratorError: more than one closed class
        SolverError: singular system, residual above tolerance, or populations
            below -1e-8
    """
    check_irreducible(rates)
    generator = rates.generator
    size = rates.size
    matrix = generator.copy()
    matrix[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    try:
        p = np.linalg.solve(matrix, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"steady-state solve failed: {exc}") from exc

    scale = max(1.0, float(np.abs(generator).max()))
    residual = float(np.abs(generator @ p).max())
    if residual > RESIDUAL_LIMIT * scale:
        raise SolverError(f"steady-state residual {residual:.3g} exceeds {RESIDUAL_LIMIT * scale:.3g}")

    lowest = float(p.min())
    if lowest < -NEGATIVE_LIMIT:
        raise SolverError(f"steady state has population {lowest:.3g} below tolerance")
    if lowest < 0:
        logger.warning(f"clamped negative populations of magnitude {-lowest:.3g}")
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
    return JointState(p)


def evolve(rates: RateMatrix, initial, t: float) -> JointState:
    """Populations after time t from `initial`, via the matrix exponential."""
    p0 = np.asarray(initial, dtype=float)
    if p0.shape != (rates.size,):
        raise ValidationError(f"initial state needs {rates.size} entries, got shape {p0.shape}")
    if t < 0:
        raise ValidationError(f"time must be non-negative, got {t}", field="t")
    return JointState(expm(rates.generator * t) @ p0)


def system_beta(state: JointState, e_s: float) -> float:
    """
    Inverse temperature of the system qubit, ln(p_0 / p_1) / E_s.

    Raises:
        ValidationError: a vanishing system population
    """
    p0, p1 = state.system_marginal
    if p0 <= 0 or p1 <= 0:
        raise ValidationError("system marginal has a zero population; temperature undefined")
    return math.log(p0 / p1) / e_s


def loaded_virtual_beta(state: JointState, spec: CycleSpec) -> float:
    """Inverse temperature of the machine's virtual qubit while it is loaded by the system."""
    machine = state.machine_marginal
    first, last = machine[0], machine[-1]
    if first <= 0 or last <= 0:
        raise ValidationError("virtual qubit has a zero population; temperature undefined")
    return math.log(first / last) / spec.e_v


@dataclass(frozen=True)
class ScanRow:
    n: int
    tau_s: float
    beta_s: float
    beta_loaded: float


def _scan_point(params: DesignParams, base: DynamicsConfig, n: int, tau_s: float) -> ScanRow:
    spec = optimal_cycle(params.with_n(n))
    dyn = base.resolved(params).with_tau_s(tau_s)
    try:
        state = steady(build_rates(spec, dyn))
    except SolverError as exc:
        raise type(exc)(f"{exc} (n={n}, tau_s={tau_s})") from exc
    return ScanRow(
        n=n,
        tau_s=tau_s,
        beta_s=system_beta(state, dyn.e_s),
        beta_loaded=loaded_virtual_beta(state, spec),
    )


def scan_cycle_length(params: DesignParams, n_values: Sequence[int], tau_s_values: Sequence[float],
                      dyn: Optional[DynamicsConfig] = None, workers: Optional[int] = None) -> List[ScanRow]:
    """
    System temperature of optimal n-level cycles across system timescales.

    Args:
        params: design parameters (n is replaced by every entry of n_values)
        n_values: cycle lengths to scan
        tau_s_values: system-environment timescales
        dyn: remaining timescales (default DynamicsConfig())
        workers: thread count (default: config.get_sweep_workers())

    Returns:
        list of ScanRow sorted by (n, tau_s)
    """
    if not n_values or not tau_s_values:
        raise UsageError("scan needs at least one cycle length and one tau_s")
    base = DynamicsConfig() if dyn is None else dyn
    points = sorted({(int(n), float(tau)) for n in n_values for tau in tau_s_values})
    workers = workers or config.get_sweep_workers()
    logger.info(f"Dynamics scan: {len(points)} points over {workers} workers")

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_scan_point, params, base, n, tau) for n, tau in points]
        rows = [future.result() for future in futures]
    return sorted(rows, key=lambda row: (row.n, row.tau_s))


def optimal_length(dyn: DynamicsConfig, params: DesignParams, n_max: int, n_min: int = 3) -> int:
    """
    Cycle length in n_min..n_max maximizing the system's inverse temperature.

    Ties go to the shorter cycle.
    """
    if n_max < 4:
        raise UsageError(f"n_max must be at least 4, got {n_max}")
    if n_min < 3 or n_min > n_max:
        raise UsageError(f"need 3 <= n_min <= n_max, got n_min={n_min}, n_max={n_max}")
    rows = scan_cycle_length(params, range(n_min, n_max + 1), [dyn.tau_s], dyn)
    best = rows[0]
    for row in rows[1:]:
        if round(row.beta_s, 12) > round(best.beta_s, 12):
            best = row
    logger.info(f"Optimal cycle length at tau_s={dyn.tau_s}: n={best.n} (beta_s={best.beta_s:.6g})")
    return best.n
