"""
Tests for the virtual-qubit algebra and the swap primitive.
"""
import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from errors import ValidationError
from vqubit import (
    SystemQubit, VirtualQubit, beta_from_bias, bias_from_beta, delta_bias, swap,
    swap_joint_populations, system_bias_from_joint,
)


class TestBias:
    def test_bias_of_qutrit_virtual_temperature(self):
        np.testing.assert_allclose(bias_from_beta(0.35, 1.0), math.tanh(0.175), rtol=1e-15)

    def test_zero_temperature_limit(self):
        assert bias_from_beta(1e4, 1.0) == pytest.approx(1.0)

    def test_negative_temperature_gives_negative_bias(self):
        assert bias_from_beta(-0.25, 1.0) < 0

    @given(st.floats(-5.0, 5.0), st.floats(0.1, 10.0))
    def test_beta_bias_inverse(self, beta, gap):
        # float64 tanh saturates past |beta E| ~ 10; VirtualQubit.beta_v keeps the exact value there
        assume(abs(beta * gap) <= 10.0)
        bias = bias_from_beta(beta, gap)
        np.testing.assert_allclose(beta_from_bias(bias, gap), beta, rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("bias,gap,beta", [
        (0.0, 1.0, 0.0),
        (math.tanh(0.25), 1.0, 0.5),
        (0.9, 2.0, math.atanh(0.9)),
    ])
    def test_beta_from_bias_examples(self, bias, gap, beta):
        np.testing.assert_allclose(beta_from_bias(bias, gap), beta, rtol=1e-12, atol=1e-15)

    @pytest.mark.parametrize("bias", [1.0, -1.0, 1.5])
    def test_saturated_bias_has_no_temperature(self, bias):
        with pytest.raises(ValidationError):
            beta_from_bias(bias, 1.0)

    @pytest.mark.parametrize("gap", [0.0, -1.0, math.nan])
    def test_gap_must_be_positive(self, gap):
        with pytest.raises(ValidationError):
            bias_from_beta(0.2, gap)


class TestVirtualQubit:
    def test_populations_sum_to_norm(self):
        vq = VirtualQubit(gap=1.0, norm=0.7, bias=0.2)
        lower, upper = vq.populations
        np.testing.assert_allclose(lower + upper, 0.7, rtol=1e-15)
        np.testing.assert_allclose((lower - upper) / 0.7, 0.2, rtol=1e-14)

    def test_from_beta_keeps_exact_temperature(self):
        vq = VirtualQubit.from_beta(gap=1.0, norm=0.5, beta=80.0)
        assert vq.bias == 1.0
        assert vq.beta_v == 80.0

    def test_rejects_norm_outside_unit_interval(self):
        with pytest.raises(ValidationError):
            VirtualQubit(gap=1.0, norm=1.2, bias=0.0)

    def test_rejects_inconsistent_beta(self):
        with pytest.raises(ValidationError):
            VirtualQubit(gap=1.0, norm=0.5, bias=0.1, beta=2.0)

    def test_round_off_is_clipped(self):
        vq = VirtualQubit(gap=1.0, norm=1.0 + 1e-14, bias=0.0)
        assert vq.norm == 1.0


class TestSwap:
    def test_swap_moves_bias_toward_virtual_qubit(self):
        system = SystemQubit(gap=1.0, bias=0.0)
        vq = VirtualQubit.from_beta(gap=1.0, norm=0.717761, beta=0.35)
        new_system, new_vq = swap(system, vq)
        np.testing.assert_allclose(new_system.bias, 0.717761 * math.tanh(0.175), rtol=1e-14)
        assert new_vq.bias == 0.0
        assert new_vq.norm == vq.norm

    def test_full_norm_swap_copies_bias(self):
        system = SystemQubit(gap=2.0, bias=-0.3)
        vq = VirtualQubit(gap=2.0, norm=1.0, bias=0.6)
        new_system, _ = swap(system, vq)
        np.testing.assert_allclose(new_system.bias, 0.6, rtol=1e-15)

    def test_delta_bias(self):
        system = SystemQubit(gap=1.0, bias=0.1)
        vq = VirtualQubit(gap=1.0, norm=0.5, bias=0.3)
        np.testing.assert_allclose(delta_bias(system, vq), 0.1, rtol=1e-14)

    def test_half_norm_swap(self):
        system = SystemQubit(gap=1.0, bias=0.2)
        vq = VirtualQubit(gap=1.0, norm=0.5, bias=0.8)
        np.testing.assert_allclose(swap(system, vq)[0].bias, 0.5, rtol=1e-14)
        np.testing.assert_allclose(delta_bias(system, vq), 0.3, rtol=1e-14)

    def test_absent_virtual_qubit_leaves_system(self):
        system = SystemQubit(gap=1.0, bias=0.3)
        assert swap(system, VirtualQubit(gap=1.0, norm=0.0, bias=-0.7))[0].bias == 0.3

    def test_delta_bias_of_qutrit_fridge(self):
        system = SystemQubit(gap=1.0, bias=0.0)
        vq = VirtualQubit(gap=1.0, norm=0.7178, bias=math.tanh(0.175))
        gain = delta_bias(system, vq)
        np.testing.assert_allclose(gain, 0.7178 * math.tanh(0.175), rtol=1e-14)
        assert gain == pytest.approx(0.1248, abs=1e-3)

    @given(st.floats(-1.0, 1.0), st.floats(0.0, 1.0))
    def test_equal_biases_are_a_fixed_point(self, bias, norm):
        system = SystemQubit(gap=1.0, bias=bias)
        vq = VirtualQubit(gap=1.0, norm=norm, bias=bias)
        assert swap(system, vq)[0].bias == bias
        assert delta_bias(system, vq) == 0.0

    @given(st.floats(-1.0, 1.0), st.floats(1e-3, 1.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
    def test_system_bias_increases_with_virtual_bias(self, z_s, norm, z_low, z_high):
        assume(z_high - z_low > 1e-6)
        system = SystemQubit(gap=1.0, bias=z_s)
        low = swap(system, VirtualQubit(gap=1.0, norm=norm, bias=z_low))[0].bias
        high = swap(system, VirtualQubit(gap=1.0, norm=norm, bias=z_high))[0].bias
        assert high > low

    @given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_system_bias_increases_with_norm(self, z_s, z_v, n_low, n_high):
        assume(z_v - z_s > 1e-3)
        assume(n_high - n_low > 1e-6)
        system = SystemQubit(gap=1.0, bias=z_s)
        low = swap(system, VirtualQubit(gap=1.0, norm=n_low, bias=z_v))[0].bias
        high = swap(system, VirtualQubit(gap=1.0, norm=n_high, bias=z_v))[0].bias
        assert high > low

    def test_non_resonant_swap_rejected(self):
        with pytest.raises(ValidationError):
            swap(SystemQubit(gap=1.0, bias=0.0), VirtualQubit(gap=1.1, norm=0.5, bias=0.2))

    def test_system_norm_is_one(self):
        assert SystemQubit(gap=1.0, bias=0.4).norm == 1.0

    def test_joint_map_sums_to_one(self):
        joint = swap_joint_populations(SystemQubit(1.0, 0.3), VirtualQubit(1.0, 0.6, -0.2))
        np.testing.assert_allclose(joint.sum(), 1.0, rtol=1e-15)
        assert joint.shape == (6,)

    def test_joint_map_agrees_with_swap_on_grid(self):
        grid = np.linspace(-1.0, 1.0, 21)
        norms = np.linspace(0.0, 1.0, 21)
        worst = 0.0
        for z_s in grid:
            for n_v in norms:
                for z_v in grid:
                    system = SystemQubit(gap=1.0, bias=float(z_s))
                    vq = VirtualQubit(gap=1.0, norm=float(n_v), bias=float(z_v))
                    expected = swap(system, vq)[0].bias
                    joint = system_bias_from_joint(swap_joint_populations(system, vq))
                    worst = max(worst, abs(expected - joint))
        assert worst <= 1e-14

    def test_joint_readout_rejects_wrong_shape(self):
        with pytest.raises(ValidationError):
            system_bias_from_joint(np.ones(4) / 4)
