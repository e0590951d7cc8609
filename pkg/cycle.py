"""
Single thermal-cycle machines.

A cycle stores its levels in cycle order (not sorted by energy): transition j
connects level j to level j+1 and is coupled to one bath.  The virtual qubit is
always the pair (first level, last level), so its gap is the telescoped sum of
all transition gaps.

Steady states follow from the Gibbs-ratio chain p_{j+1}/p_j = exp(-beta_j dE_j)
and are computed in log-space.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from errors import DegenerateMachineError, ValidationError
from vqubit import VirtualQubit

if TYPE_CHECKING:
    from design import DesignParams

logger = logging.getLogger(__name__)

# absolute slack on energy and temperature comparisons
TOLERANCE = 1e-12


@dataclass(frozen=True)
class Bath:
    """A thermal bath at inverse temperature `beta`; `name` is only a label."""

    beta: float
    name: Optional[str] = None


@dataclass(frozen=True)
class CycleSpec:
    """Levels E_1..E_n in cycle order and one bath per transition."""

    energies: Tuple[float, ...]
    couplings: Tuple[Bath, ...]

    def __post_init__(self):
        object.__setattr__(self, "energies", tuple(float(e) for e in self.energies))
        object.__setattr__(self, "couplings", tuple(self.couplings))

    @classmethod
    def from_gaps(cls, gaps: Sequence[float], baths: Sequence[Bath],
                  e_start: float = 0.0) -> "CycleSpec":
        energies = [float(e_start)]
        for gap in gaps:
            energies.append(energies[-1] + float(gap))
        return cls(energies=tuple(energies), couplings=tuple(baths))

    @property
    def n(self) -> int:
        return len(self.energies)

    @property
    def gaps(self) -> np.ndarray:
        return np.diff(np.asarray(self.energies, dtype=float))

    @property
    def betas(self) -> np.ndarray:
        return np.array([bath.beta for bath in self.couplings], dtype=float)

    @property
    def e_v(self) -> float:
        return self.energies[-1] - self.energies[0]


@dataclass(frozen=True)
class SteadyState:
    """Normalized populations over machine levels."""

    populations: np.ndarray

    def __post_init__(self):
        pops = np.array(self.populations, dtype=float)
        pops.setflags(write=False)
        object.__setattr__(self, "populations", pops)

    def __len__(self) -> int:
        return len(self.populations)


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass(frozen=True)
class EfficiencyReport:
    """
    Per-cycle energy accounting of a machine.

    heat_hot / heat_cold are magnitudes: for a fridge heat_cold is drawn from
    the cold side and heat_hot dumped into the hot bath, for an engine heat_hot
    is drawn from the hot bath and heat_cold dumped into the cold one.
    """

    eta: float
    heat_hot: float
    heat_cold: float
    work_or_cool: float
    mode: str
    eta_from_heat: float
    heat_by_beta: Dict[float, float] = field(default_factory=dict)


def validate(spec: CycleSpec, params: Optional["DesignParams"] = None) -> Tuple[bool, List[Violation]]:
    """
    Check a cycle against structural and resource constraints.

    Args:
        spec: the cycle to check
        params: optional resource bounds (E_max and the bath range)

    Returns:
        tuple: (ok, list of violations); never raises
    """
    problems: List[Violation] = []

    if spec.n < 3:
        problems.append(Violation("too_few_levels", f"a cycle needs at least 3 levels, got {spec.n}"))
    if len(spec.couplings) != max(spec.n - 1, 0):
        problems.append(Violation(
            "coupling_count",
            f"{spec.n} levels need {spec.n - 1} couplings, got {len(spec.couplings)}",
        ))
    if not all(math.isfinite(e) for e in spec.energies):
        problems.append(Violation("non_finite", "energies must be finite"))
        return False, problems
    for j, bath in enumerate(spec.couplings):
        if not math.isfinite(bath.beta) or bath.beta < 0:
            problems.append(Violation(
                "bath_bound", f"coupling {j + 1}: inverse temperature must be finite and >= 0, got {bath.beta}",
            ))

    if spec.n >= 2:
        gaps = spec.gaps
        telescoped = float(np.sum(gaps))
        if abs(telescoped - spec.e_v) > TOLERANCE * max(1.0, abs(spec.e_v)) * spec.n:
            problems.append(Violation(
                "gap_sum", f"sum of gaps {telescoped} differs from E_n - E_1 = {spec.e_v}",
            ))
        if abs(spec.e_v) <= TOLERANCE:
            problems.append(Violation("zero_gap", "virtual qubit E_n - E_1 must be nonzero"))

        if params is not None:
            for j, gap in enumerate(gaps):
                if abs(gap) > params.e_max + TOLERANCE:
                    problems.append(Violation(
                        "gap_bound", f"transition {j + 1}: |gap| = {abs(gap)} exceeds E_max = {params.e_max}",
                    ))
            for j, bath in enumerate(spec.couplings):
                if bath.beta < params.beta_h - TOLERANCE or bath.beta > params.beta_c + TOLERANCE:
                    problems.append(Violation(
                        "bath_bound",
                        f"coupling {j + 1}: beta = {bath.beta} outside [{params.beta_h}, {params.beta_c}]",
                    ))
            if abs(spec.e_v - params.e_v) > TOLERANCE * max(1.0, abs(params.e_v)) * spec.n:
                problems.append(Violation(
                    "virtual_gap", f"E_n - E_1 = {spec.e_v} differs from E_v = {params.e_v}",
                ))

    return not problems, problems


def require_valid(spec: CycleSpec, params: Optional["DesignParams"] = None) -> None:
    """Raise ValidationError listing every violation of `spec`."""
    ok, problems = validate(spec, params)
    if not ok:
        messages = [p.message for p in problems]
        raise ValidationError("invalid cycle: " + "; ".join(messages), violations=messages)


def chain_log_weights(gaps: np.ndarray, betas: np.ndarray) -> np.ndarray:
    """Unnormalized log populations along a detailed-balance chain, log p_1 = 0."""
    log_w = np.zeros(len(gaps) + 1)
    log_w[1:] = -np.cumsum(betas * gaps)
    return log_w


def normalize_log_weights(log_w: np.ndarray) -> np.ndarray:
    return np.exp(log_w - logsumexp(log_w))


def steady_state(spec: CycleSpec) -> SteadyState:
    """Steady state of a valid cycle from the Gibbs-ratio chain, in log-space."""
    require_valid(spec)
    log_w = chain_log_weights(spec.gaps, spec.betas)
    return SteadyState(normalize_log_weights(log_w))


def steady_state_dense(spec: CycleSpec) -> SteadyState:
    """
    Same steady state from a dense linear solve of
    {p_{j+1} - exp(-beta_j dE_j) p_j = 0, sum p = 1}.

    The unknowns are q_j = p_j / s_j, with s_j the max-shifted chain scale, and
    row j is divided by s_{j+1}; populations far below the largest one keep
    their relative accuracy.
    """
    require_valid(spec)
    n = spec.n
    log_ratios = -spec.betas * spec.gaps
    log_scale = np.concatenate(([0.0], np.cumsum(log_ratios)))
    log_scale -= log_scale.max()
    matrix = np.zeros((n, n))
    rhs = np.zeros(n)
    for j in range(n - 1):
        matrix[j, j] = -np.exp(log_ratios[j] + log_scale[j] - log_scale[j + 1])
        matrix[j, j + 1] = 1.0
    matrix[n - 1, :] = np.exp(log_scale)
    rhs[n - 1] = 1.0
    scaled = np.linalg.solve(matrix, rhs)
    return SteadyState(scaled * np.exp(log_scale))


def virtual_beta(spec: CycleSpec) -> float:
    """beta_v = sum_j beta_j dE_j / E_v."""
    e_v = spec.e_v
    if abs(e_v) <= TOLERANCE:
        raise DegenerateMachineError("virtual qubit has zero gap (E_n == E_1)", field="energies")
    return float(np.dot(spec.betas, spec.gaps)) / e_v


def virtual_qubit_of(spec: CycleSpec) -> VirtualQubit:
    """
    The virtual qubit (first level, last level) of a valid cycle.

    Raises:
        DegenerateMachineError: when E_n == E_1
    """
    if abs(spec.e_v) <= TOLERANCE:
        raise DegenerateMachineError("virtual qubit has zero gap (E_n == E_1)", field="energies")
    state = steady_state(spec)
    beta_v = virtual_beta(spec)
    norm = float(state.populations[0] + state.populations[-1])
    # a negative E_v puts the lower level of the pair at the end of the cycle;
    # beta_v * E_v is unchanged by relabelling, the qubit gap is |E_v|
    gap = abs(spec.e_v)
    vq = VirtualQubit.from_beta(gap=gap, norm=norm, beta=beta_v)
    logger.debug(f"virtual qubit of {spec.n}-level cycle: beta_v={beta_v:.6g}, N_v={norm:.6g}")
    return vq


def norm_from_ratios(spec: CycleSpec) -> float:
    """N_v = (1 + p_n/p_1) / sum_j p_j/p_1, evaluated from the ratio chain."""
    log_w = chain_log_weights(spec.gaps, spec.betas)
    return float(np.exp(np.logaddexp(0.0, log_w[-1]) - logsumexp(log_w)))


def _infer_mode(beta_v: float, beta_c: float, beta_h: float) -> str:
    if beta_v >= beta_c:
        return "fridge"
    if beta_v <= beta_h:
        return "engine"
    raise DegenerateMachineError(
        f"beta_v = {beta_v} lies strictly between the baths [{beta_h}, {beta_c}]; "
        "the machine neither cools below the cold bath nor inverts"
    )


def efficiency(spec: CycleSpec, mode: Optional[str] = None) -> EfficiencyReport:
    """
    Efficiency and per-cycle heat accounting.

    The coldest and hottest coupled baths play beta_c and beta_h.  Heat absorbed
    from a bath over one traversal 1 -> n is the sum of the gaps coupled to it.

    Args:
        spec: a valid cycle coupled to at least two distinct temperatures
        mode: "fridge" or "engine"; inferred from beta_v when omitted

    Returns:
        EfficiencyReport

    Raises:
        DegenerateMachineError: single temperature, or beta_v == beta_c
    """
    require_valid(spec)
    betas = spec.betas
    beta_c = float(betas.max())
    beta_h = float(betas.min())
    if beta_c - beta_h <= TOLERANCE:
        raise DegenerateMachineError("all couplings share one temperature; no heat engine or fridge")

    beta_v = virtual_beta(spec)
    if mode is None:
        mode = _infer_mode(beta_v, beta_c, beta_h)
    if mode not in ("fridge", "engine"):
        raise ValidationError(f"mode must be 'fridge' or 'engine', got {mode!r}", field="mode")

    heat_by_beta: Dict[float, float] = {}
    for beta, gap in zip(betas, spec.gaps):
        heat_by_beta[float(beta)] = heat_by_beta.get(float(beta), 0.0) + float(gap)
    intermediate = {b: q for b, q in heat_by_beta.items() if b not in (beta_c, beta_h)}
    if intermediate:
        logger.warning(f"heat exchanged with intermediate baths is not in Q_h/Q_c: {intermediate}")

    e_v = spec.e_v
    q_cold = heat_by_beta.get(beta_c, 0.0)
    q_hot = heat_by_beta.get(beta_h, 0.0)

    if mode == "fridge":
        denominator = beta_v - beta_c
        heat_cold, heat_hot = q_cold, -q_hot
    else:
        denominator = beta_c - beta_v
        heat_cold, heat_hot = -q_cold, q_hot
    if abs(denominator) <= TOLERANCE * max(1.0, abs(beta_c)):
        raise DegenerateMachineError(
            f"beta_v = {beta_v} equals beta_c = {beta_c}; efficiency diverges", field="couplings",
        )
    eta = (beta_c - beta_h) / denominator
    eta_from_heat = e_v / heat_hot if abs(heat_hot) > TOLERANCE else math.inf

    return EfficiencyReport(
        eta=eta,
        heat_hot=heat_hot,
        heat_cold=heat_cold,
        work_or_cool=e_v,
        mode=mode,
        eta_from_heat=eta_from_heat,
        heat_by_beta=heat_by_beta,
    )
