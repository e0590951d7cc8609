"""
Optimal single-cycle machine design.

Given the number of levels n, the virtual gap E_v, the largest bath-coupled gap
E_max and the two baths, the optimal fridge climbs at +E_max on the cold bath,
crosses over with one +E_v (n even) or -(E_max - E_v) (n odd) transition and
descends at -E_max on the hot bath.  The optimal engine has the same energies
with the baths exchanged.

This module builds that cycle, evaluates its closed-form virtual temperature,
norm and efficiency, and checks optimality against exhaustive enumeration.
"""
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

import config
from cycle import Bath, CycleSpec, TOLERANCE
from errors import DegenerateMachineError, UsageError, ValidationError

logger = logging.getLogger(__name__)


class Mode(str, Enum):
    FRIDGE = "fridge"
    ENGINE = "engine"

    @property
    def sign(self) -> int:
        return 1 if self is Mode.FRIDGE else -1


@dataclass(frozen=True)
class DesignParams:
    """Resource constraints for an optimal design."""

    n: int
    e_v: float
    e_max: float
    beta_c: float
    beta_h: float
    mode: Mode = Mode.FRIDGE

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", Mode(self.mode))
        except ValueError:
            raise UsageError(f"mode must be 'fridge' or 'engine', got {self.mode!r}")

    def validate(self) -> Tuple[bool, Optional[str]]:
        """
        Validate the parameter set.

        Returns:
            tuple: (is_valid, error_message)
        """
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)):
            return False, f"n must be an integer, got {self.n!r}"
        if self.n < 3:
            return False, f"n must be at least 3, got {self.n}"
        for name in ("e_v", "e_max", "beta_c", "beta_h"):
            if not math.isfinite(getattr(self, name)):
                return False, f"{name} must be finite"
        if self.e_v <= 0:
            return False, f"E_v must be positive, got {self.e_v}"
        if self.e_v > self.e_max:
            return False, f"E_v ({self.e_v}) must not exceed E_max ({self.e_max})"
        if self.beta_h <= 0:
            return False, f"beta_h must be positive, got {self.beta_h}"
        if not self.beta_h < self.beta_c:
            return False, f"beta_h ({self.beta_h}) must be below beta_c ({self.beta_c})"
        return True, None

    def check(self) -> None:
        """Raise UsageError for a bad level count, ValidationError for other constraints."""
        ok, message = self.validate()
        if ok:
            return
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 3:
            raise UsageError(message)
        raise ValidationError(message)

    def with_n(self, n: int) -> "DesignParams":
        return replace(self, n=n)

    def with_mode(self, mode) -> "DesignParams":
        return replace(self, mode=Mode(mode))

    @property
    def delta_beta(self) -> float:
        return self.beta_c - self.beta_h

    @property
    def cold(self) -> Bath:
        return Bath(self.beta_c, "cold")

    @property
    def hot(self) -> Bath:
        return Bath(self.beta_h, "hot")


# transition labels of the optimal cycle
PLUS_MAX = "+E_max"
PLUS_EV = "+E_v"
MINUS_PARTIAL = "-(E_max-E_v)"
MINUS_MAX = "-E_max"
TRANSITION_KINDS = (PLUS_MAX, PLUS_EV, MINUS_PARTIAL, MINUS_MAX)


def _optimal_transitions(params: DesignParams) -> List[Tuple[str, float, Bath]]:
    params.check()
    n = params.n
    if params.mode is Mode.FRIDGE:
        rising, falling = params.cold, params.hot
    else:
        rising, falling = params.hot, params.cold

    transitions: List[Tuple[str, float, Bath]] = []
    if n % 2 == 0:
        climbs = n // 2 - 1
        transitions += [(PLUS_MAX, params.e_max, rising)] * climbs
        transitions.append((PLUS_EV, params.e_v, rising))
        transitions += [(MINUS_MAX, -params.e_max, falling)] * climbs
    else:
        transitions += [(PLUS_MAX, params.e_max, rising)] * ((n - 1) // 2)
        transitions.append((MINUS_PARTIAL, -(params.e_max - params.e_v), falling))
        transitions += [(MINUS_MAX, -params.e_max, falling)] * ((n - 3) // 2)
    return transitions


def optimal_cycle(params: DesignParams) -> CycleSpec:
    """
    Build the optimal n-level cycle for the given resources.

    Args:
        params: design parameters (E_v <= E_max)

    Returns:
        CycleSpec: levels in cycle order starting at energy 0
    """
    transitions = _optimal_transitions(params)
    spec = CycleSpec.from_gaps([gap for _, gap, _ in transitions], [bath for _, _, bath in transitions])
    logger.debug(
        f"Optimal {params.mode.value} cycle built: n={params.n}, "
        f"gaps={[round(g, 12) for g in spec.gaps]}"
    )
    return spec


def _half_span(params: DesignParams) -> float:
    """Energy climbed on the rising bath beyond E_v (equals Q_h of the optimal fridge)."""
    n = params.n
    if n % 2 == 0:
        return (n / 2 - 1) * params.e_max
    return ((n - 1) / 2) * params.e_max - params.e_v


def closed_beta_v(params: DesignParams) -> float:
    """Closed-form virtual inverse temperature of the optimal cycle."""
    params.check()
    span = params.delta_beta * _half_span(params)
    if params.mode is Mode.FRIDGE:
        return (params.beta_c * params.e_v + span) / params.e_v
    return (params.beta_h * params.e_v - span) / params.e_v


def _geometric(k: float, x: float) -> float:
    """sum_{i<k} exp(-i x) = (1 - e^{-k x}) / (1 - e^{-x}), k at x = 0."""
    if x == 0:
        return float(k)
    return math.expm1(-k * x) / math.expm1(-x)


def closed_norm(params: DesignParams) -> float:
    """Closed-form norm of the optimal cycle's virtual qubit."""
    params.check()
    n = params.n
    x = closed_beta_v(params) * params.e_v
    cold = params.beta_c * params.e_max
    hot = params.beta_h * params.e_max
    if params.mode is Mode.FRIDGE:
        weight = math.exp(-x)
        if n % 2 == 0:
            k_cold, k_hot = n / 2, n / 2
        else:
            k_cold, k_hot = (n + 1) / 2, (n - 1) / 2
    else:
        weight = math.exp(x)
        if n % 2 == 0:
            k_cold, k_hot = n / 2, n / 2
        else:
            k_cold, k_hot = (n - 1) / 2, (n + 1) / 2
    return (1.0 + weight) / (_geometric(k_cold, cold) + weight * _geometric(k_hot, hot))


def asymptotic_norm(params: DesignParams) -> float:
    """Large-n limit of closed_norm, 1 - exp(-beta_c E_max) in both modes."""
    params.check()
    return -math.expm1(-params.beta_c * params.e_max)


def closed_efficiency(params: DesignParams) -> float:
    """E_v / Q_h of the optimal cycle."""
    params.check()
    span = _half_span(params)
    if params.mode is Mode.FRIDGE:
        if span <= TOLERANCE:
            raise DegenerateMachineError("beta_v equals beta_c for this design; efficiency diverges")
        return params.e_v / span
    return params.e_v / (params.e_v + span)


def marginal_gain(params: DesignParams) -> float:
    """(beta_v^(n+2) - beta_v^(n)) * E_v; equals +-(beta_c - beta_h) E_max."""
    return (closed_beta_v(params.with_n(params.n + 2)) - closed_beta_v(params)) * params.e_v


@dataclass(frozen=True)
class GapBreakdown:
    """
    Transition counts reaching level j from level 1 with the largest Q_+.

    delta_e = m * E_max + delta_j with 0 <= delta_j < E_max.
    """

    j: int
    m: int
    delta_j: float
    n_plus_max: int
    n_plus_delta: int
    n_minus_partial: int
    n_minus_max: int
    q_plus: float
    q_minus: float

    @property
    def transitions(self) -> int:
        return self.n_plus_max + self.n_plus_delta + self.n_minus_partial + self.n_minus_max


def gap_breakdown(delta_e: float, j: int, e_max: float) -> GapBreakdown:
    """
    Split the energy between level 1 and level j into bounded transitions
    maximizing the positive part Q_+ (the sum of positive gaps).

    Args:
        delta_e: E_j - E_1
        j: level index (>= 2), so j - 1 transitions are available
        e_max: bound on every |gap|

    Returns:
        GapBreakdown

    Raises:
        ValidationError: when |delta_e| > (j - 1) * E_max
    """
    if j < 2:
        raise UsageError(f"level index must be at least 2, got {j}")
    if e_max <= 0:
        raise ValidationError(f"E_max must be positive, got {e_max}", field="e_max")
    if abs(delta_e) > (j - 1) * e_max + TOLERANCE:
        raise ValidationError(
            f"energy {delta_e} cannot be reached with {j - 1} transitions bounded by {e_max}",
            field="delta_e",
        )

    m = math.floor(delta_e / e_max + 1e-12)
    delta_j = delta_e - m * e_max
    if abs(delta_j) <= TOLERANCE:
        delta_j = 0.0

    if (j - m) % 2 == 0:
        n_plus_max = (j + m) // 2 - 1
        n_plus_delta, n_minus_partial = 1, 0
        n_minus_max = (j - m) // 2 - 1
        q_plus = n_plus_max * e_max + delta_j
        q_minus = -n_minus_max * e_max
    else:
        n_plus_max = (j + m - 1) // 2
        n_plus_delta, n_minus_partial = 0, 1
        # counts must total j - 1, which fixes this at (j - m - 3) / 2
        n_minus_max = (j - m - 3) // 2
        q_plus = n_plus_max * e_max
        q_minus = -((j - m - 1) // 2) * e_max + delta_j
        if delta_j == 0.0:
            # -(E_max - 0) is one more -E_max transition
            n_minus_max += n_minus_partial
            n_minus_partial = 0

    if min(n_plus_max, n_minus_max) < 0:
        raise ValidationError(f"no bounded decomposition of {delta_e} over {j - 1} transitions")

    return GapBreakdown(
        j=j, m=m, delta_j=delta_j,
        n_plus_max=n_plus_max, n_plus_delta=n_plus_delta,
        n_minus_partial=n_minus_partial, n_minus_max=n_minus_max,
        q_plus=q_plus, q_minus=q_minus,
    )


@dataclass(frozen=True)
class LevelHeat:
    """Transitions between level 1 and level j of the optimal cycle."""

    j: int
    counts: Dict[str, int]
    q_plus: float
    q_minus: float
    delta_e: float


def level_heat_table(params: DesignParams) -> List[LevelHeat]:
    """Per-level transition counts and heats of the optimal cycle, j = 1..n."""
    transitions = _optimal_transitions(params)
    rows: List[LevelHeat] = []
    for j in range(1, params.n + 1):
        prefix = transitions[: j - 1]
        counts = {kind: sum(1 for label, _, _ in prefix if label == kind) for kind in TRANSITION_KINDS}
        gaps = [gap for _, gap, _ in prefix]
        rows.append(LevelHeat(
            j=j,
            counts=counts,
            q_plus=float(sum(g for g in gaps if g > 0)),
            q_minus=float(sum(g for g in gaps if g < 0)),
            delta_e=float(sum(gaps)),
        ))
    return rows


class Objective(str, Enum):
    MAX_BIAS = "max-bias"
    MAX_NZ = "max-NZ"
    MAX_SWAP_GAIN = "max-swap-gain"


@dataclass(frozen=True)
class SearchGrid:
    """Discretization for exhaustive search: an energy quantum and a temperature set."""

    energy_step: float
    betas: Tuple[float, ...]

    @classmethod
    def for_params(cls, params: DesignParams, energy_step: Optional[float] = None,
                   intermediates: Iterable[float] = ()) -> "SearchGrid":
        step = params.e_v / 2 if energy_step is None else energy_step
        betas = sorted({params.beta_h, params.beta_c, *(float(b) for b in intermediates)})
        return cls(energy_step=step, betas=tuple(betas))

    def units(self, energy: float, name: str) -> int:
        """Express `energy` as an integer number of steps, rejecting non-multiples."""
        if not self.energy_step > 0:
            raise ValidationError(f"energy step must be positive, got {self.energy_step}", field="energy_step")
        ratio = energy / self.energy_step
        count = round(ratio)
        if count < 1 or abs(ratio - count) > 1e-9 * max(1.0, abs(ratio)):
            raise ValidationError(
                f"energy step {self.energy_step} does not divide {name} = {energy}", field="energy_step",
            )
        return int(count)


@dataclass(frozen=True)
class SearchResult:
    spec: CycleSpec
    score: float
    evaluated: int


def _scores(log_w: np.ndarray, objective: Objective, z_s: float, sign: int) -> np.ndarray:
    log_z = logsumexp(log_w, axis=1)
    p_first = np.exp(log_w[:, 0] - log_z)
    p_last = np.exp(log_w[:, -1] - log_z)
    norm = p_first + p_last
    bias = np.tanh(-log_w[:, -1] / 2.0)
    if objective is Objective.MAX_BIAS:
        metric = bias
    elif objective is Objective.MAX_NZ:
        metric = norm * bias
    else:
        metric = norm * (bias - z_s)
    return sign * metric


def _search_chunk(first_gap: int, rest: List[Tuple[int, ...]], ev_units: int, k_units: int,
                  step: float, betas: np.ndarray, bath_index: np.ndarray,
                  objective: Objective, z_s: float, sign: int):
    best = None
    evaluated = 0
    for tail in rest:
        last = ev_units - first_gap - sum(tail)
        if abs(last) > k_units:
            continue
        gaps_units = (first_gap, *tail, last)
        gaps = np.asarray(gaps_units, dtype=float) * step
        beta_matrix = betas[bath_index]
        log_w = np.zeros((len(bath_index), len(gaps) + 1))
        log_w[:, 1:] = -np.cumsum(beta_matrix * gaps, axis=1)
        scores = np.round(_scores(log_w, objective, z_s, sign), 12)
        evaluated += len(scores)
        idx = int(np.argmax(scores))
        key = (-float(scores[idx]), gaps_units, tuple(int(b) for b in bath_index[idx]))
        if best is None or key < best:
            best = key
    return best, evaluated


def brute_force_search(params: DesignParams, grid: SearchGrid,
                       objective: Objective = Objective.MAX_SWAP_GAIN, z_s: float = 0.0,
                       workers: Optional[int] = None) -> SearchResult:
    """
    Exhaustively enumerate n-level cycles on a grid and keep the best one.

    Every gap sequence of grid multiples within +-E_max summing to E_v is paired
    with every assignment of grid temperatures.  For engines the objective is
    mirrored (most negative bias, largest p_n - p_1, largest bias decrease).
    Ties are broken by the lexicographically smallest gap sequence, then bath
    assignment, so the result does not depend on evaluation order.

    Args:
        params: design parameters (n <= BRUTE_FORCE_MAX_LEVELS)
        grid: energy step and temperature set
        objective: quantity to maximize
        z_s: system bias for the swap-gain objective
        workers: thread count (default: config.get_sweep_workers())

    Returns:
        SearchResult: best spec, its score and the number of configurations scored
    """
    params.check()
    objective = Objective(objective)
    n = params.n
    if n > config.BRUTE_FORCE_MAX_LEVELS:
        raise UsageError(f"exhaustive search supports n <= {config.BRUTE_FORCE_MAX_LEVELS}, got {n}")
    if not -1.0 < z_s < 1.0:
        raise ValidationError(f"system bias must lie in (-1, 1), got {z_s}", field="z_s")
    for beta in grid.betas:
        if beta < params.beta_h - TOLERANCE or beta > params.beta_c + TOLERANCE:
            raise ValidationError(f"grid temperature {beta} outside the bath range", field="betas")

    ev_units = grid.units(params.e_v, "E_v")
    k_units = grid.units(params.e_max, "E_max")
    values = range(-k_units, k_units + 1)
    betas = np.asarray(grid.betas, dtype=float)
    bath_index = np.array(list(itertools.product(range(len(betas)), repeat=n - 1)), dtype=int)

    bound = len(values) ** (n - 2) * len(bath_index)
    if bound > config.BRUTE_FORCE_MAX_CONFIGS:
        raise UsageError(
            f"search space of up to {bound} configurations exceeds the limit {config.BRUTE_FORCE_MAX_CONFIGS}"
        )

    tails = list(itertools.product(values, repeat=n - 3)) if n > 3 else [()]
    workers = workers or config.get_sweep_workers()
    logger.info(
        f"Exhaustive search: n={n}, mode={params.mode.value}, objective={objective.value}, "
        f"step={grid.energy_step}, betas={grid.betas}, workers={workers}"
    )
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_search_chunk, first, tails, ev_units, k_units, grid.energy_step,
                        betas, bath_index, objective, z_s, params.mode.sign)
            for first in values
        ]
        results = [future.result() for future in futures]

    evaluated = sum(count for _, count in results)
    candidates = [key for key, _ in results if key is not None]
    if not candidates:
        raise ValidationError("no grid configuration satisfies the gap constraints")
    neg_score, gaps_units, bath_choice = min(candidates)
    spec = CycleSpec.from_gaps(
        [g * grid.energy_step for g in gaps_units],
        [Bath(float(betas[b])) for b in bath_choice],
    )
    logger.info(f"Exhaustive search done: {evaluated} configurations, best score {-neg_score:.12g}")
    return SearchResult(spec=spec, score=-neg_score, evaluated=evaluated)


def brute_force_best(params: DesignParams, grid: SearchGrid,
                     objective: Objective = Objective.MAX_SWAP_GAIN, z_s: float = 0.0,
                     workers: Optional[int] = None) -> CycleSpec:
    """Best cycle found by brute_force_search."""
    return brute_force_search(params, grid, objective, z_s, workers).spec


def score_cycle(spec: CycleSpec, objective: Objective, z_s: float = 0.0, mode: Mode = Mode.FRIDGE) -> float:
    """Objective value of a single cycle, on the same scale as brute_force_search."""
    log_w = np.zeros((1, spec.n))
    log_w[0, 1:] = -np.cumsum(spec.betas * spec.gaps)
    return float(_scores(log_w, Objective(objective), z_s, Mode(mode).sign)[0])


@dataclass(frozen=True)
class ThirdLawRow:
    n_prime: int
    beta_v: float
    t_s: float
    t_s_times_n: float


def third_law_limit(params: DesignParams) -> float:
    """Limit of T_s * n' for multi-cycle fridges: 4 E_v / ((beta_c - beta_h) E_max)."""
    params.check()
    return 4.0 * params.e_v / (params.delta_beta * params.e_max)


def third_law_scaling(params: DesignParams, n_list: Sequence[int]) -> List[ThirdLawRow]:
    """
    Achievable system temperature of multi-cycle fridges against their dimension.

    Args:
        params: fridge parameters (n is ignored)
        n_list: multi-cycle level counts n'

    Returns:
        list of ThirdLawRow, in the order of n_list
    """
    from amplify import multi_beta

    if params.mode is not Mode.FRIDGE:
        raise ValidationError("third-law scaling is defined for refrigerators", field="mode")
    rows = []
    for n_prime in n_list:
        beta_v = multi_beta(n_prime, params)
        t_s = 1.0 / beta_v
        rows.append(ThirdLawRow(n_prime=n_prime, beta_v=beta_v, t_s=t_s, t_s_times_n=t_s * n_prime))
    logger.info(f"Third-law scaling evaluated for {len(rows)} dimensions, limit {third_law_limit(params):.6g}")
    return rows
