"""
Concatenated qutrit machines.

Qutrit i has its outer transition (1,3) of gap E_max on bath b_i, a virtual
transition of gap W_i and a remainder transition of gap R_i = E_max - W_i.
The remainder of qutrit i is linked to the virtual transition of qutrit i+1 by
a degenerate exchange, so W_{i+1} = R_i; the last remainder sits on the bath
opposite to b_k.  Baths alternate b_1 = beta_c, b_2 = beta_h, ... for fridges
and the reverse for engines.

The placement selects which transition of every qutrit is virtual: the lower
pair (1,2) or the upper pair (2,3).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.special import logsumexp

from cycle import Bath, CycleSpec
from design import DesignParams, Mode
from errors import UsageError, ValidationError
from vqubit import VirtualQubit

logger = logging.getLogger(__name__)

LINK = Bath(0.0, "link")


class Placement(str, Enum):
    LOWER = "lower"
    UPPER = "upper"


def recommended_placement(mode) -> Placement:
    """Upper pair for fridges, lower pair for engines; both reach norm 1 as k grows."""
    return Placement.UPPER if Mode(mode) is Mode.FRIDGE else Placement.LOWER


@dataclass(frozen=True)
class ConcatSpec:
    k: int
    e_v: float
    e_max: float
    beta_c: float
    beta_h: float
    mode: Mode = Mode.FRIDGE
    placement: Optional[Placement] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "mode", Mode(self.mode))
            placement = recommended_placement(self.mode) if self.placement is None else Placement(self.placement)
        except ValueError as exc:
            raise UsageError(str(exc))
        object.__setattr__(self, "placement", placement)

    @classmethod
    def from_params(cls, params: DesignParams, k: int, placement=None) -> "ConcatSpec":
        return cls(k=k, e_v=params.e_v, e_max=params.e_max, beta_c=params.beta_c,
                   beta_h=params.beta_h, mode=params.mode, placement=placement)

    def as_params(self) -> DesignParams:
        """Design parameters of the equivalent (k + 2)-level cycle."""
        return DesignParams(n=self.k + 2, e_v=self.e_v, e_max=self.e_max,
                            beta_c=self.beta_c, beta_h=self.beta_h, mode=self.mode)

    def check(self) -> None:
        if isinstance(self.k, bool) or not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise UsageError(f"k must be a positive integer, got {self.k!r}")
        self.as_params().check()

    def with_k(self, k: int) -> "ConcatSpec":
        return replace(self, k=k)

    def outer_bath(self, i: int) -> Bath:
        """Bath on the (1,3) transition of qutrit i (1-based)."""
        first_cold = (self.mode is Mode.FRIDGE) == (i % 2 == 1)
        return Bath(self.beta_c, "cold") if first_cold else Bath(self.beta_h, "hot")

    def remainder_bath(self) -> Bath:
        """Bath on the last qutrit's remainder transition."""
        outer = self.outer_bath(self.k)
        return Bath(self.beta_h, "hot") if outer.beta == self.beta_c else Bath(self.beta_c, "cold")

    def virtual_gap(self, i: int) -> float:
        """W_i: E_v for odd i, E_max - E_v for even i."""
        return self.e_v if i % 2 == 1 else self.e_max - self.e_v

    def remainder_gap(self, i: int) -> float:
        return self.e_max - self.virtual_gap(i)

    def qutrit_energies(self, i: int) -> Tuple[float, float, float]:
        w = self.virtual_gap(i)
        if self.placement is Placement.LOWER:
            return 0.0, w, self.e_max
        return 0.0, self.e_max - w, self.e_max

    def virtual_levels(self) -> Tuple[int, int]:
        return (0, 1) if self.placement is Placement.LOWER else (1, 2)

    def remainder_levels(self) -> Tuple[int, int]:
        return (1, 2) if self.placement is Placement.LOWER else (0, 1)


@dataclass(frozen=True)
class QutritChainState:
    """Per-qutrit population triples over (|1>, |2>, |3>) in energy order."""

    triples: Tuple[np.ndarray, ...]
    log_ratios: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        frozen = []
        for triple in self.triples:
            arr = np.array(triple, dtype=float)
            arr.setflags(write=False)
            frozen.append(arr)
        object.__setattr__(self, "triples", tuple(frozen))

    @property
    def k(self) -> int:
        return len(self.triples)

    @property
    def first(self) -> np.ndarray:
        return self.triples[0]

    def product(self) -> np.ndarray:
        """Joint populations of the full chain as a k-dimensional array of shape (3,)*k."""
        joint = self.triples[0]
        for triple in self.triples[1:]:
            joint = np.multiply.outer(joint, triple)
        return joint


def concat_beta(spec: ConcatSpec) -> float:
    """
    Closed-form virtual temperature of k concatenated qutrits.

    Raises:
        UsageError: k < 1
    """
    spec.check()
    k = spec.k
    ratio = spec.e_max / spec.e_v
    if k % 2 == 0:
        span = (k / 2) * ratio
    else:
        span = (k + 1) / 2 * ratio - 1.0
    delta = spec.beta_c - spec.beta_h
    if spec.mode is Mode.FRIDGE:
        return spec.beta_c + delta * span
    return spec.beta_h - delta * span


def _virtual_log_ratios(spec: ConcatSpec) -> List[float]:
    """x_i = ln(p_lower / p_upper) of every qutrit's virtual pair, from the last qutrit back."""
    k = spec.k
    ratios = [0.0] * k
    inherited = spec.remainder_bath().beta * spec.remainder_gap(k)
    for i in range(k, 0, -1):
        ratios[i - 1] = spec.outer_bath(i).beta * spec.e_max - inherited
        inherited = ratios[i - 1]
    return ratios


def _qutrit_log_weights(spec: ConcatSpec, i: int, remainder_ratio: float) -> np.ndarray:
    b = spec.outer_bath(i).beta * spec.e_max
    if spec.placement is Placement.LOWER:
        return np.array([0.0, -b + remainder_ratio, -b])
    return np.array([0.0, -remainder_ratio, -b])


def concat_steady(spec: ConcatSpec) -> QutritChainState:
    """
    Steady state by backward induction.

    The last qutrit is fixed by its two bath couplings.  Each earlier qutrit
    inherits the Gibbs ratio of its successor's virtual pair on its remainder,
    which together with its own outer coupling fixes its triple.
    """
    spec.check()
    ratios = _virtual_log_ratios(spec)
    inherited = ratios[1:] + [spec.remainder_bath().beta * spec.remainder_gap(spec.k)]
    triples = []
    for i in range(1, spec.k + 1):
        log_w = _qutrit_log_weights(spec, i, inherited[i - 1])
        triples.append(np.exp(log_w - logsumexp(log_w)))
    logger.debug(f"concatenated chain of {spec.k} qutrits solved, x_1 = {ratios[0]:.6g}")
    return QutritChainState(triples=tuple(triples), log_ratios=tuple(ratios))


def concat_virtual_qubit(spec: ConcatSpec, state: Optional[QutritChainState] = None) -> VirtualQubit:
    """The first qutrit's virtual pair as a VirtualQubit (numeric, from the induction)."""
    if state is None:
        state = concat_steady(spec)
    lower, upper = spec.virtual_levels()
    norm = float(state.first[lower] + state.first[upper])
    beta = state.log_ratios[0] / spec.e_v
    return VirtualQubit.from_beta(gap=spec.e_v, norm=norm, beta=beta)


def concat_norm(spec: ConcatSpec) -> float:
    """
    Closed-form norm of the first qutrit's virtual pair.

    With x = beta_v E_v and b the first qutrit's outer bath,
    upper: (1 + e^{-x}) / (1 + e^{-x} + e^{-x} e^{b E_max})
    lower: (1 + e^{-x}) / (1 + e^{-x} + e^{-b E_max})
    """
    x = concat_beta(spec) * spec.e_v
    b = spec.outer_bath(1).beta * spec.e_max
    # for x < 0 both forms are multiplied through by e^{x}
    if spec.placement is Placement.UPPER:
        if x < 0:
            return (math.exp(x) + 1.0) / (math.exp(x) + 1.0 + math.exp(b))
        return (1.0 + math.exp(-x)) / (1.0 + math.exp(-x) + math.exp(b - x))
    if x < 0:
        return (math.exp(x) + 1.0) / (math.exp(x) + 1.0 + math.exp(x - b))
    return (1.0 + math.exp(-x)) / (1.0 + math.exp(-x) + math.exp(-b))


def concat_norm_limit(spec: ConcatSpec) -> float:
    """Norm as k -> infinity (beta_v -> +inf for fridges, -inf for engines)."""
    spec.check()
    b = spec.outer_bath(1).beta * spec.e_max
    if spec.mode is Mode.FRIDGE:
        return 1.0 if spec.placement is Placement.UPPER else 1.0 / (1.0 + math.exp(-b))
    return 1.0 if spec.placement is Placement.LOWER else 1.0 / (1.0 + math.exp(b))


class LogDimension(NamedTuple):
    n: int
    beta_v: float

    @property
    def log3_n(self) -> float:
        return math.log(self.n) / math.log(3)


def concat_log_dimension(spec: ConcatSpec) -> LogDimension:
    """
    Hilbert-space dimension 3^k and the virtual temperature written through it,
    beta_c + (beta_c - beta_h) (log_3 n / 2) E_max / E_v.

    Raises:
        ValidationError: odd k
    """
    spec.check()
    if spec.k % 2:
        raise ValidationError(f"the logarithmic form holds for even k, got {spec.k}", field="k")
    n = 3 ** spec.k
    span = (spec.beta_c - spec.beta_h) * (spec.k / 2) * spec.e_max / spec.e_v
    beta_v = spec.beta_c + span if spec.mode is Mode.FRIDGE else spec.beta_h - span
    return LogDimension(n=n, beta_v=beta_v)


def effective_cycle(spec: ConcatSpec) -> CycleSpec:
    """
    Working cycle of the first qutrit's virtual pair through the whole chain.

    Each link to the next qutrit is a zero-gap step coupled to LINK; the thermal
    steps are the outer transitions and the last remainder.
    """
    spec.check()
    k = spec.k

    def climb(i: int) -> List[Tuple[float, Bath]]:
        steps = [(spec.e_max, spec.outer_bath(i))]
        if i == k:
            return steps + [(-spec.remainder_gap(k), spec.remainder_bath())]
        return steps + [(0.0, LINK)] + descend(i + 1)

    def descend(j: int) -> List[Tuple[float, Bath]]:
        if j == k:
            steps = [(spec.remainder_gap(k), spec.remainder_bath())]
        else:
            steps = climb(j + 1) + [(0.0, LINK)]
        return steps + [(-spec.e_max, spec.outer_bath(j))]

    steps = climb(1)
    return CycleSpec.from_gaps([gap for gap, _ in steps], [bath for _, bath in steps])


def _joint_index(levels: Tuple[int, ...]) -> int:
    index = 0
    for level in levels:
        index = 3 * index + level
    return index


def joint_rates(spec: ConcatSpec, tau: float = 1.0):
    """
    Rate matrix over the 3^k joint states of the chain.

    Thermal moves act on each outer transition and the last remainder; every
    link exchanges |rem_lower, vq_upper> and |rem_upper, vq_lower> of
    neighbouring qutrits at rate 1/tau.
    """
    from dynamics import RateMatrix, thermal_rates

    spec.check()
    k = spec.k
    size = 3 ** k
    generator = np.zeros((size, size))

    def add(src: int, dst: int, rate: float) -> None:
        generator[dst, src] += rate
        generator[src, src] -= rate

    rem_lo, rem_hi = spec.remainder_levels()
    vq_lo, vq_hi = spec.virtual_levels()
    for state in np.ndindex(*(3,) * k):
        src = _joint_index(state)
        for i in range(k):
            if state[i] == 0:
                up, _ = thermal_rates(spec.e_max, spec.outer_bath(i + 1).beta, tau)
                add(src, _joint_index(state[:i] + (2,) + state[i + 1:]), up)
            elif state[i] == 2:
                _, down = thermal_rates(spec.e_max, spec.outer_bath(i + 1).beta, tau)
                add(src, _joint_index(state[:i] + (0,) + state[i + 1:]), down)
        last = state[-1]
        if last in (rem_lo, rem_hi):
            up, down = thermal_rates(spec.remainder_gap(k), spec.remainder_bath().beta, tau)
            target = rem_hi if last == rem_lo else rem_lo
            add(src, _joint_index(state[:-1] + (target,)), up if last == rem_lo else down)
        for i in range(k - 1):
            pair = (state[i], state[i + 1])
            if pair == (rem_lo, vq_hi):
                swapped = (rem_hi, vq_lo)
            elif pair == (rem_hi, vq_lo):
                swapped = (rem_lo, vq_hi)
            else:
                continue
            add(src, _joint_index(state[:i] + swapped + state[i + 2:]), 1.0 / tau)
    return RateMatrix(generator=generator, labels=tuple(np.ndindex(*(3,) * k)))


def joint_steady_state(spec: ConcatSpec) -> np.ndarray:
    """
    Stationary populations of the full 3^k chain, shape (3,)*k.

    Used to check concat_steady; the state space grows as 3^k so keep k small.
    """
    from dynamics import steady

    if spec.k > 6:
        raise UsageError(f"joint chain solve supports k <= 6, got {spec.k}")
    state = steady(joint_rates(spec))
    return state.populations.reshape((3,) * spec.k)
