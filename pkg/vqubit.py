"""
Virtual-qubit algebra.

A virtual qubit is a pair of machine levels described by its energy gap, its
norm (summed population of the pair) and its bias (normalized population
difference).  Temperatures and biases are related through the Gibbs relation
Z = tanh(beta * E / 2), in units where k_B = hbar = 1.

The swap with a resonant system qubit is the primitive every machine in this
project is judged by: it moves the system bias toward Z_v with weight N_v.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from errors import ValidationError

logger = logging.getLogger(__name__)

# slack allowed on norms/biases assembled from floating-point populations
_RANGE_SLACK = 1e-12


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite, got {value}", field=name)


def _require_positive_gap(gap: float) -> None:
    _require_finite(gap=gap)
    if gap <= 0:
        raise ValidationError(f"gap must be positive, got {gap}", field="gap")


def _clip_unit(value: float, low: float, high: float, name: str) -> float:
    if value < low - _RANGE_SLACK or value > high + _RANGE_SLACK:
        raise ValidationError(f"{name} must lie in [{low}, {high}], got {value}", field=name)
    return min(max(value, low), high)


def bias_from_beta(beta: float, gap: float) -> float:
    """Bias of a two-level transition of energy `gap` at inverse temperature `beta`."""
    _require_finite(beta=beta)
    _require_positive_gap(gap)
    return math.tanh(beta * gap / 2.0)


def beta_from_bias(bias: float, gap: float) -> float:
    """
    Inverse temperature of a transition with the given bias.

    Args:
        bias: normalized population difference, strictly inside (-1, 1)
        gap: transition energy (> 0)

    Returns:
        float: (2 / gap) * artanh(bias)

    Raises:
        ValidationError: for |bias| >= 1 (zero temperature or perfect inversion)
    """
    _require_finite(bias=bias)
    _require_positive_gap(gap)
    if abs(bias) >= 1.0:
        raise ValidationError(
            f"bias {bias} corresponds to zero temperature or perfect inversion; "
            "no finite inverse temperature exists",
            field="bias",
        )
    return 2.0 * math.atanh(bias) / gap


@dataclass(frozen=True)
class VirtualQubit:
    """
    A designated two-level transition inside a machine.

    `beta` is optional; when given it is the exact inverse temperature the bias
    was derived from, kept because tanh saturates to +-1 long before beta is
    large in the sense of the machines built here.
    """

    gap: float
    norm: float
    bias: float
    beta: Optional[float] = None

    def __post_init__(self):
        _require_positive_gap(self.gap)
        _require_finite(norm=self.norm, bias=self.bias)
        object.__setattr__(self, "norm", _clip_unit(self.norm, 0.0, 1.0, "norm"))
        object.__setattr__(self, "bias", _clip_unit(self.bias, -1.0, 1.0, "bias"))
        if self.beta is not None:
            _require_finite(beta=self.beta)
            expected = math.tanh(self.beta * self.gap / 2.0)
            if abs(expected - self.bias) > 1e-10:
                raise ValidationError(
                    f"bias {self.bias} inconsistent with beta {self.beta} at gap {self.gap}",
                    field="bias",
                )

    @classmethod
    def from_beta(cls, gap: float, norm: float, beta: float) -> "VirtualQubit":
        return cls(gap=gap, norm=norm, bias=bias_from_beta(beta, gap), beta=beta)

    @property
    def beta_v(self) -> float:
        if self.beta is not None:
            return self.beta
        return beta_from_bias(self.bias, self.gap)

    @property
    def populations(self) -> Tuple[float, float]:
        """(p_lower, p_upper); they sum to the norm."""
        return (
            self.norm * (1.0 + self.bias) / 2.0,
            self.norm * (1.0 - self.bias) / 2.0,
        )


@dataclass(frozen=True)
class SystemQubit:
    """A real qubit acted on by the machine; its norm is identically 1."""

    gap: float
    bias: float

    def __post_init__(self):
        _require_positive_gap(self.gap)
        _require_finite(bias=self.bias)
        object.__setattr__(self, "bias", _clip_unit(self.bias, -1.0, 1.0, "bias"))

    @classmethod
    def from_beta(cls, gap: float, beta: float) -> "SystemQubit":
        return cls(gap=gap, bias=bias_from_beta(beta, gap))

    @property
    def norm(self) -> float:
        return 1.0

    @property
    def beta(self) -> float:
        return beta_from_bias(self.bias, self.gap)

    @property
    def populations(self) -> Tuple[float, float]:
        """(p_0, p_1) of ground and excited state."""
        return (1.0 + self.bias) / 2.0, (1.0 - self.bias) / 2.0


def _check_resonance(system: SystemQubit, vq: VirtualQubit) -> None:
    if not math.isclose(system.gap, vq.gap, rel_tol=1e-12, abs_tol=1e-15):
        raise ValidationError(
            f"non-energy-conserving swap: system gap {system.gap} != virtual gap {vq.gap}",
            field="gap",
        )


def swap(system: SystemQubit, vq: VirtualQubit) -> Tuple[SystemQubit, VirtualQubit]:
    """
    Apply the resonant swap between a system qubit and a virtual qubit.

    The system bias becomes N_v * Z_v + (1 - N_v) * Z_s.  The virtual qubit's
    two-level block takes the old system bias and keeps its norm; the rest of
    the machine is untouched.

    Raises:
        ValidationError: when the two gaps differ
    """
    _check_resonance(system, vq)
    new_bias = system.bias + vq.norm * (vq.bias - system.bias)
    logger.debug(
        f"swap: Z_s {system.bias:.6g} -> {new_bias:.6g} (N_v={vq.norm:.6g}, Z_v={vq.bias:.6g})"
    )
    return (
        SystemQubit(gap=system.gap, bias=new_bias),
        VirtualQubit(gap=vq.gap, norm=vq.norm, bias=system.bias),
    )


def delta_bias(system: SystemQubit, vq: VirtualQubit) -> float:
    """Change of the system bias under one swap, N_v * (Z_v - Z_s)."""
    _check_resonance(system, vq)
    return vq.norm * (vq.bias - system.bias)


# joint outcome order: |0_s,lower>, |0_s,upper>, |1_s,lower>, |1_s,upper>,
# then the system populations carried by the untouched (1 - N_v) block
_SWAP_PERMUTATION = np.array([0, 2, 1, 3])


def swap_joint_populations(system: SystemQubit, vq: VirtualQubit) -> np.ndarray:
    """
    Explicit joint population map of the swap.

    Returns six populations: the four outcomes of system x virtual-qubit block
    after the unitary exchanges |0_s, upper> and |1_s, lower>, followed by the
    two system populations weighted by the untouched (1 - N_v) remainder of the
    machine.  They sum to 1.
    """
    _check_resonance(system, vq)
    p_s = np.array(system.populations)
    p_v = np.array([(1.0 + vq.bias) / 2.0, (1.0 - vq.bias) / 2.0])
    before = vq.norm * np.outer(p_s, p_v).ravel()
    after = before[_SWAP_PERMUTATION]
    rest = (1.0 - vq.norm) * p_s
    return np.concatenate([after, rest])


def system_bias_from_joint(joint: np.ndarray) -> float:
    """Read the system bias off a six-entry joint population vector."""
    joint = np.asarray(joint, dtype=float)
    if joint.shape != (6,):
        raise ValidationError(f"expected 6 joint populations, got shape {joint.shape}")
    p0 = joint[0] + joint[1] + joint[4]
    p1 = joint[2] + joint[3] + joint[5]
    return float(p0 - p1)
