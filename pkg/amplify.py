"""
Multi-cycle virtual-qubit amplification and virtual-qubit coupling transforms.

Amplifying an n-level cycle adds n - 2 levels E_j + E_v (j = 2..n-1, 1-based)
and copies the first n - 2 couplings onto a mirror chain that starts at the
base's last level.  The resulting 2(n - 1) levels split into n - 1 disjoint
pairs (1 + j, n + j), all at the base virtual temperature, so their summed
norm is 1.
"""
import logging
import math
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional, Tuple

import numpy as np

from cycle import Bath, CycleSpec, SteadyState, TOLERANCE, normalize_log_weights, require_valid, virtual_beta
from errors import DegenerateMachineError, ValidationError
from vqubit import VirtualQubit

if TYPE_CHECKING:
    from design import DesignParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MultiCycleSpec:
    """
    An amplified machine.

    Levels are 0-based: 0..n-1 are the base cycle, n-1+i (i = 1..n-2) is the
    added copy of base level i shifted up by E_v.  `edges` are the bath-coupled
    transitions (i, j, bath); `parallel_vqs` pairs level j with level n-1+j.
    """

    base: CycleSpec
    energies: Tuple[float, ...]
    edges: Tuple[Tuple[int, int, Bath], ...]
    parallel_vqs: Tuple[Tuple[int, int], ...]

    @property
    def n_prime(self) -> int:
        return len(self.energies)


def amplify(base: CycleSpec) -> MultiCycleSpec:
    """
    Build the multi-cycle machine of a valid base cycle.

    Raises:
        ValidationError: for an invalid base (including n < 3)
    """
    require_valid(base)
    n = base.n
    e_v = base.e_v
    energies = list(base.energies)
    energies += [base.energies[i] + e_v for i in range(1, n - 1)]

    edges = [(j, j + 1, bath) for j, bath in enumerate(base.couplings)]
    # mirror chain n-1 -> n -> ... -> 2n-3 repeats couplings 1..n-2
    edges += [(n - 1 + i, n + i, base.couplings[i]) for i in range(n - 2)]

    pairs = tuple((j, n - 1 + j) for j in range(n - 1))
    multi = MultiCycleSpec(base=base, energies=tuple(energies), edges=tuple(edges), parallel_vqs=pairs)
    logger.debug(f"amplified {n}-level cycle into {multi.n_prime} levels")
    return multi


def amplify_optimal(params: "DesignParams") -> MultiCycleSpec:
    from design import optimal_cycle

    return amplify(optimal_cycle(params))


def multi_log_weights(multi: MultiCycleSpec) -> np.ndarray:
    """
    Unnormalized log populations by breadth-first propagation of the Gibbs
    ratios along the coupling graph, level 0 at log-weight 0.

    Raises:
        ValidationError: when the coupling graph is disconnected
    """
    size = multi.n_prime
    neighbours: Dict[int, List[Tuple[int, float]]] = {i: [] for i in range(size)}
    for i, j, bath in multi.edges:
        neighbours[i].append((j, bath.beta))
        neighbours[j].append((i, bath.beta))

    log_w = np.full(size, np.nan)
    log_w[0] = 0.0
    queue = deque([0])
    while queue:
        i = queue.popleft()
        for j, beta in neighbours[i]:
            if np.isnan(log_w[j]):
                log_w[j] = log_w[i] - beta * (multi.energies[j] - multi.energies[i])
                queue.append(j)

    unreached = np.flatnonzero(np.isnan(log_w))
    if unreached.size:
        raise ValidationError(
            f"coupling graph is disconnected: levels {unreached.tolist()} unreachable", field="couplings",
        )
    return log_w


def multi_steady_state(multi: MultiCycleSpec) -> SteadyState:
    return SteadyState(normalize_log_weights(multi_log_weights(multi)))


def _ordered(multi: MultiCycleSpec, pair: Tuple[int, int]) -> Tuple[int, int]:
    a, b = pair
    return (a, b) if multi.energies[a] <= multi.energies[b] else (b, a)


def parallel_virtual_qubits(multi: MultiCycleSpec, state: Optional[SteadyState] = None) -> List[VirtualQubit]:
    """The n - 1 parallel virtual qubits, each with its own norm and bias."""
    if state is None:
        state = multi_steady_state(multi)
    log_p = np.log(state.populations)
    qubits = []
    for pair in multi.parallel_vqs:
        lower, upper = _ordered(multi, pair)
        gap = multi.energies[upper] - multi.energies[lower]
        beta = float(log_p[lower] - log_p[upper]) / gap
        norm = float(state.populations[lower] + state.populations[upper])
        qubits.append(VirtualQubit.from_beta(gap=gap, norm=norm, beta=beta))
    return qubits


def effective_virtual_qubit(multi: MultiCycleSpec, state: Optional[SteadyState] = None) -> VirtualQubit:
    """
    Combine the parallel virtual qubits into one.

    Raises:
        DegenerateMachineError: when the parallel qubits disagree on temperature
    """
    qubits = parallel_virtual_qubits(multi, state)
    betas = np.array([q.beta_v for q in qubits])
    spread = float(betas.max() - betas.min())
    if spread > 1e-10 * max(1.0, float(np.abs(betas).max())):
        raise DegenerateMachineError(f"parallel virtual qubits differ in temperature (spread {spread:.3g})")
    base_beta = virtual_beta(multi.base)
    norm = math.fsum(q.norm for q in qubits)
    return VirtualQubit.from_beta(gap=qubits[0].gap, norm=min(norm, 1.0), beta=base_beta)


@dataclass(frozen=True)
class Factorization:
    """Cycle marginal over the n - 1 pairs, the qubit marginal, and the product residual."""

    cycle: np.ndarray
    qubit: np.ndarray
    residual: float


def factorize(multi: MultiCycleSpec, state: Optional[SteadyState] = None) -> Factorization:
    """
    Split the amplified steady state as (n-1)-level cycle (x) virtual qubit.

    Pair a contributes q(a) = p(lower_a) + p(upper_a); the qubit marginal sums
    lower and upper members over all pairs.
    """
    if state is None:
        state = multi_steady_state(multi)
    p = state.populations
    ordered = [_ordered(multi, pair) for pair in multi.parallel_vqs]
    lowers = np.array([pair[0] for pair in ordered])
    uppers = np.array([pair[1] for pair in ordered])
    cycle_marginal = p[lowers] + p[uppers]
    qubit_marginal = np.array([p[lowers].sum(), p[uppers].sum()])
    product = np.outer(cycle_marginal, qubit_marginal)
    joint = np.stack([p[lowers], p[uppers]], axis=1)
    residual = float(np.abs(product - joint).max())
    return Factorization(cycle=cycle_marginal, qubit=qubit_marginal, residual=residual)


def _check_even_dimension(n_prime: int) -> None:
    if isinstance(n_prime, bool) or not isinstance(n_prime, (int, np.integer)):
        raise ValidationError(f"multi-cycle dimension must be an integer, got {n_prime!r}", field="n_prime")
    if n_prime % 2 or n_prime < 4:
        raise ValidationError(
            f"multi-cycle machines have an even number of levels >= 4, got {n_prime}", field="n_prime",
        )


def multi_beta(n_prime: int, params: "DesignParams") -> float:
    """
    Closed-form virtual temperature of the multi-cycle machine of dimension n'.

    beta_c + (beta_c - beta_h) (n'/4 - 1/2) E_max / E_v for fridges; engines
    start from beta_h and subtract the same term.

    Raises:
        ValidationError: odd n'
    """
    _check_even_dimension(n_prime)
    from design import Mode

    params.check()
    span = params.delta_beta * (n_prime / 4 - 0.5) * params.e_max / params.e_v
    if params.mode is Mode.FRIDGE:
        return params.beta_c + span
    return params.beta_h - span


def multi_beta_numeric(n_prime: int, params: "DesignParams") -> float:
    """Virtual temperature of the amplified optimal cycle with n = n'/2 + 1 levels, any parity."""
    _check_even_dimension(n_prime)
    multi = amplify_optimal(params.with_n(n_prime // 2 + 1))
    return effective_virtual_qubit(multi).beta_v


class TransformKind(str, Enum):
    PRESERVE = "preserve"
    SHIFT = "shift"
    FLIP = "flip"


@dataclass(frozen=True)
class CouplingTransform:
    kind: TransformKind
    beta_bath: float
    gap_out: float

    def __post_init__(self):
        object.__setattr__(self, "kind", TransformKind(self.kind))


def transform_coupling(vq: VirtualQubit, t: CouplingTransform,
                       params: Optional["DesignParams"] = None) -> VirtualQubit:
    """
    Temperature of a real qubit of gap `t.gap_out` driven through a virtual qubit.

    preserve: beta' E' = beta_v E_v (requires E' = E_v)
    shift:    beta' E' = beta_v E_v + beta_bath (E' - E_v)
    flip:     beta' E' = -beta_v E_v + beta_bath (E_v + E')

    The output qubit is real, so its norm is 1.

    Raises:
        ValidationError: gap_out <= 0, preserve with E' != E_v, or beta_bath
            outside [beta_h, beta_c] when `params` are given
    """
    if not math.isfinite(t.gap_out) or t.gap_out <= 0:
        raise ValidationError(f"output gap must be positive, got {t.gap_out}", field="gap_out")
    if not math.isfinite(t.beta_bath):
        raise ValidationError(f"bath inverse temperature must be finite, got {t.beta_bath}", field="beta_bath")
    if params is not None and t.kind is not TransformKind.PRESERVE:
        if t.beta_bath < params.beta_h - TOLERANCE or t.beta_bath > params.beta_c + TOLERANCE:
            raise ValidationError(
                f"beta_bath = {t.beta_bath} outside [{params.beta_h}, {params.beta_c}]", field="beta_bath",
            )

    weight = vq.beta_v * vq.gap
    if t.kind is TransformKind.PRESERVE:
        if not math.isclose(t.gap_out, vq.gap, rel_tol=1e-12):
            raise ValidationError(
                f"preserve keeps the gap: output {t.gap_out} != virtual gap {vq.gap}", field="gap_out",
            )
        beta_out = vq.beta_v
    elif t.kind is TransformKind.SHIFT:
        beta_out = (weight + t.beta_bath * (t.gap_out - vq.gap)) / t.gap_out
    else:
        beta_out = (-weight + t.beta_bath * (vq.gap + t.gap_out)) / t.gap_out

    logger.debug(f"{t.kind.value} transform: beta {vq.beta_v:.6g} @ {vq.gap} -> {beta_out:.6g} @ {t.gap_out}")
    return VirtualQubit.from_beta(gap=t.gap_out, norm=1.0, beta=beta_out)
