"""
Tests for the optimal single-cycle design, its closed forms and the
exhaustive-search oracle.
"""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import make_params
from cycle import efficiency, validate, virtual_beta, virtual_qubit_of
from design import (
    MINUS_MAX, MINUS_PARTIAL, PLUS_EV, PLUS_MAX, DesignParams, Mode, Objective, SearchGrid,
    asymptotic_norm, brute_force_best, brute_force_search, closed_beta_v, closed_efficiency,
    closed_norm, gap_breakdown, level_heat_table, marginal_gain, optimal_cycle, score_cycle,
    third_law_limit, third_law_scaling,
)
from errors import DegenerateMachineError, UsageError, ValidationError


class TestDesignParams:
    def test_valid(self, params):
        assert params.validate() == (True, None)

    def test_too_few_levels_is_usage_error(self):
        with pytest.raises(UsageError):
            make_params(n=2).check()

    def test_virtual_gap_above_e_max(self):
        with pytest.raises(ValidationError):
            make_params(e_v=3.0).check()

    def test_bath_order(self):
        ok, message = make_params(beta_h=0.3).validate()
        assert not ok
        assert "beta_h" in message

    def test_unknown_mode(self):
        with pytest.raises(UsageError):
            make_params(mode="heater")

    def test_mode_from_string(self):
        assert make_params(mode="engine").mode is Mode.ENGINE

    def test_with_n_and_mode(self, params):
        other = params.with_n(7).with_mode("engine")
        assert (other.n, other.mode) == (7, Mode.ENGINE)
        assert params.n == 4


class TestOptimalCycle:
    def test_four_level_fridge(self, params):
        spec = optimal_cycle(params)
        np.testing.assert_allclose(spec.gaps, [2.0, 1.0, -2.0])
        np.testing.assert_allclose(spec.betas, [0.2, 0.2, 0.05])

    def test_qutrit_fridge(self, qutrit_params):
        spec = optimal_cycle(qutrit_params)
        np.testing.assert_allclose(spec.gaps, [2.0, -1.0])
        np.testing.assert_allclose(spec.betas, [0.2, 0.05])

    def test_five_level_fridge(self):
        spec = optimal_cycle(make_params(n=5))
        np.testing.assert_allclose(spec.gaps, [2.0, 2.0, -1.0, -2.0])
        np.testing.assert_allclose(spec.betas, [0.2, 0.2, 0.05, 0.05])
        np.testing.assert_allclose(spec.e_v, 1.0)

    @pytest.mark.parametrize("n", range(3, 15))
    def test_engine_swaps_the_baths(self, n):
        fridge = optimal_cycle(make_params(n=n))
        engine = optimal_cycle(make_params(n=n, mode=Mode.ENGINE))
        np.testing.assert_allclose(engine.gaps, fridge.gaps)
        swapped = np.where(fridge.betas == 0.2, 0.05, 0.2)
        np.testing.assert_allclose(engine.betas, swapped)

    @pytest.mark.parametrize("n", range(3, 21))
    @pytest.mark.parametrize("mode", list(Mode))
    def test_respects_resources(self, n, mode):
        params = make_params(n=n, mode=mode)
        ok, problems = validate(optimal_cycle(params), params)
        assert ok, problems

    def test_rejects_virtual_gap_above_e_max(self):
        with pytest.raises(ValidationError):
            optimal_cycle(make_params(e_v=2.5))


class TestClosedForms:
    @pytest.mark.parametrize("n, mode, expected", [
        (4, Mode.FRIDGE, 0.5),
        (3, Mode.FRIDGE, 0.35),
        (4, Mode.ENGINE, -0.25),
        (3, Mode.ENGINE, -0.1),
    ])
    def test_beta_v_anchors(self, n, mode, expected):
        np.testing.assert_allclose(closed_beta_v(make_params(n=n, mode=mode)), expected, rtol=1e-12)

    @pytest.mark.parametrize("n, expected", [(4, 0.568551), (3, 0.717761)])
    def test_norm_anchors(self, n, expected):
        np.testing.assert_allclose(closed_norm(make_params(n=n)), expected, atol=1e-6)

    def test_asymptotic_norm(self, params):
        np.testing.assert_allclose(asymptotic_norm(params), 1 - math.exp(-0.4), rtol=1e-12)
        np.testing.assert_allclose(asymptotic_norm(params), 0.329680, atol=1e-6)
        np.testing.assert_allclose(closed_norm(make_params(n=400)), asymptotic_norm(params), rtol=1e-9)
        np.testing.assert_allclose(closed_norm(make_params(n=400, mode=Mode.ENGINE)),
                                   asymptotic_norm(params), rtol=1e-9)

    @pytest.mark.parametrize("mode", list(Mode))
    def test_closed_forms_match_steady_state(self, mode):
        for n in range(3, 41):
            params = make_params(n=n, mode=mode)
            vq = virtual_qubit_of(optimal_cycle(params))
            np.testing.assert_allclose(vq.beta_v, closed_beta_v(params), rtol=1e-10)
            np.testing.assert_allclose(vq.norm, closed_norm(params), rtol=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(
        n=st.integers(3, 16),
        mode=st.sampled_from(list(Mode)),
        e_v=st.floats(0.1, 2.0),
        extra=st.floats(0.0, 3.0),
        beta_h=st.floats(0.01, 0.5),
        spread=st.floats(0.01, 0.5),
    )
    def test_closed_forms_match_steady_state_everywhere(self, n, mode, e_v, extra, beta_h, spread):
        params = DesignParams(n=n, e_v=e_v, e_max=e_v + extra, beta_c=beta_h + spread,
                              beta_h=beta_h, mode=mode)
        vq = virtual_qubit_of(optimal_cycle(params))
        np.testing.assert_allclose(vq.beta_v, closed_beta_v(params), rtol=1e-9, atol=1e-12)
        np.testing.assert_allclose(vq.norm, closed_norm(params), rtol=1e-9)

    @pytest.mark.parametrize("n", [3, 4, 5, 10])
    def test_marginal_gain(self, n):
        np.testing.assert_allclose(marginal_gain(make_params(n=n)), 0.3, rtol=1e-12)
        np.testing.assert_allclose(marginal_gain(make_params(n=n, mode=Mode.ENGINE)), -0.3, rtol=1e-12)
        np.testing.assert_allclose(marginal_gain(make_params(n=n, e_v=0.5)), 0.3, rtol=1e-12)

    def test_beta_v_increases_with_resources(self):
        betas = [closed_beta_v(make_params(n=n)) for n in range(3, 30)]
        assert np.all(np.diff(betas) > 0)
        by_e_max = [closed_beta_v(make_params(n=6, e_max=e)) for e in (1.0, 1.5, 2.0, 3.0)]
        assert np.all(np.diff(by_e_max) > 0)
        by_spread = [closed_beta_v(make_params(n=6, beta_h=b)) for b in (0.15, 0.1, 0.05, 0.01)]
        assert np.all(np.diff(by_spread) > 0)


class TestEfficiency:
    def test_both_forms_agree(self):
        for n in range(4, 41, 2):
            params = make_params(n=n)
            report = efficiency(optimal_cycle(params), "fridge")
            np.testing.assert_allclose(report.eta, report.eta_from_heat, rtol=1e-12)
            np.testing.assert_allclose(report.eta, closed_efficiency(params), rtol=1e-12)

    def test_efficiency_falls_as_one_over_n(self):
        for n in range(4, 41, 2):
            report = efficiency(optimal_cycle(make_params(n=n)), "fridge")
            np.testing.assert_allclose(report.eta * (n / 2 - 1), 0.5, rtol=1e-12)

    def test_engine_efficiency(self):
        params = make_params(n=6, mode=Mode.ENGINE)
        report = efficiency(optimal_cycle(params), "engine")
        np.testing.assert_allclose(report.eta, closed_efficiency(params), rtol=1e-12)
        assert 0 < report.eta < 1 - 0.05 / 0.2

    def test_degenerate_fridge(self):
        with pytest.raises(DegenerateMachineError):
            closed_efficiency(make_params(n=3, e_v=2.0))


def _max_positive_heat(delta_e: float, j: int, e_max: float, step: float) -> float:
    units = int(round(e_max / step))
    target = int(round(delta_e / step))
    best = None
    for gaps in itertools.product(range(-units, units + 1), repeat=j - 1):
        if sum(gaps) == target:
            q_plus = sum(g for g in gaps if g > 0) * step
            best = q_plus if best is None else max(best, q_plus)
    return best


class TestGapBreakdown:
    @pytest.mark.parametrize("delta_e, j, counts", [
        (1.0, 4, (1, 1, 0, 1)),
        (1.0, 5, (2, 0, 1, 1)),
        (3.0, 3, (1, 1, 0, 0)),
        (4.0, 3, (2, 0, 0, 0)),
        (-2.0, 2, (0, 0, 0, 1)),
    ])
    def test_counts(self, delta_e, j, counts):
        row = gap_breakdown(delta_e, j, 2.0)
        assert (row.n_plus_max, row.n_plus_delta, row.n_minus_partial, row.n_minus_max) == counts
        assert row.transitions == j - 1

    @pytest.mark.parametrize("j", [2, 3, 4, 5])
    def test_largest_positive_heat_by_enumeration(self, j):
        e_max, step = 2.0, 0.5
        for delta_e in np.arange(-(j - 1) * e_max, (j - 1) * e_max + step / 2, step):
            row = gap_breakdown(float(delta_e), j, e_max)
            assert row.transitions == j - 1
            np.testing.assert_allclose(row.m * e_max + row.delta_j, delta_e, atol=1e-12)
            assert 0.0 <= row.delta_j < e_max
            np.testing.assert_allclose(row.q_plus + row.q_minus, delta_e, atol=1e-12)
            np.testing.assert_allclose(row.q_plus, _max_positive_heat(delta_e, j, e_max, step), atol=1e-12)

    def test_unreachable_energy(self):
        with pytest.raises(ValidationError):
            gap_breakdown(5.0, 3, 2.0)

    def test_level_index(self):
        with pytest.raises(UsageError):
            gap_breakdown(1.0, 1, 2.0)


class TestLevelHeatTable:
    def test_four_level_rows(self, params):
        rows = level_heat_table(params)
        assert [r.counts[PLUS_MAX] for r in rows] == [0, 1, 1, 1]
        assert [r.counts[PLUS_EV] for r in rows] == [0, 0, 1, 1]
        assert [r.counts[MINUS_MAX] for r in rows] == [0, 0, 0, 1]
        np.testing.assert_allclose([r.delta_e for r in rows], [0.0, 2.0, 3.0, 1.0])

    @pytest.mark.parametrize("n", range(3, 13))
    def test_rows_beyond_the_turn(self, n):
        for row in level_heat_table(make_params(n=n)):
            assert sum(row.counts.values()) == row.j - 1
            turn = n // 2 if n % 2 == 0 else (n + 1) // 2
            if row.j > turn:
                np.testing.assert_allclose(row.delta_e, (n - row.j) * 2.0 + 1.0, atol=1e-12)
                if n % 2:
                    assert row.counts[MINUS_PARTIAL] == 1
                    assert row.counts[MINUS_MAX] == row.j - (n + 3) // 2
                else:
                    assert row.counts[MINUS_MAX] == row.j - n // 2 - 1

    @pytest.mark.parametrize("n", range(3, 13))
    def test_optimal_cycle_maximizes_positive_heat_at_every_level(self, n):
        for row in level_heat_table(make_params(n=n))[1:]:
            best = gap_breakdown(row.delta_e, row.j, 2.0)
            np.testing.assert_allclose(row.q_plus, best.q_plus, atol=1e-12)
            np.testing.assert_allclose(row.q_minus, best.q_minus, atol=1e-12)


class TestBruteForce:
    def test_grid_must_divide_energies(self, params):
        with pytest.raises(ValidationError):
            brute_force_best(params, SearchGrid(energy_step=0.3, betas=(0.05, 0.2)))

    def test_size_limit(self):
        with pytest.raises(UsageError):
            brute_force_best(make_params(n=7), SearchGrid.for_params(make_params(n=7)))

    def test_grid_defaults(self, params):
        grid = SearchGrid.for_params(params, intermediates=[0.1])
        assert grid.energy_step == 0.5
        assert grid.betas == (0.05, 0.1, 0.2)

    def test_max_bias_reaches_closed_form(self, params):
        best = brute_force_best(params, SearchGrid.for_params(params), Objective.MAX_BIAS)
        np.testing.assert_allclose(virtual_beta(best), closed_beta_v(params), rtol=1e-12)

    def test_qutrit_is_the_best_swap(self, qutrit_params):
        best = brute_force_best(qutrit_params, SearchGrid.for_params(qutrit_params), Objective.MAX_SWAP_GAIN, 0.0)
        np.testing.assert_allclose(best.gaps, [2.0, -1.0])
        np.testing.assert_allclose(best.betas, [0.2, 0.05])

    def test_deterministic_under_worker_count(self, params):
        grid = SearchGrid.for_params(params)
        one = brute_force_search(params, grid, Objective.MAX_NZ, workers=1)
        many = brute_force_search(params, grid, Objective.MAX_NZ, workers=4)
        assert one.spec == many.spec
        assert one.evaluated == many.evaluated

    def test_intermediate_temperatures_never_win(self):
        params = make_params(n=4)
        grid = SearchGrid.for_params(params, intermediates=[0.1])
        best = brute_force_best(params, grid, Objective.MAX_BIAS)
        assert set(best.betas) <= {0.05, 0.2}

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [3, 4, 5])
    @pytest.mark.parametrize("mode", list(Mode))
    def test_optimal_cycle_is_never_beaten(self, n, mode):
        params = make_params(n=n, mode=mode)
        grid = SearchGrid.for_params(params)
        optimal = optimal_cycle(params)
        cases = [(Objective.MAX_BIAS, 0.0), (Objective.MAX_NZ, 0.0),
                 (Objective.MAX_SWAP_GAIN, -0.5), (Objective.MAX_SWAP_GAIN, 0.0)]
        for objective, z_s in cases:
            z_s = z_s * mode.sign
            found = brute_force_search(params, grid, objective, z_s)
            assert found.score <= score_cycle(optimal, objective, z_s, mode) + 1e-12

    @pytest.mark.slow
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_no_fridge_heats_a_colder_qubit(self, n):
        params = make_params(n=n)
        found = brute_force_search(params, SearchGrid.for_params(params), Objective.MAX_SWAP_GAIN, 0.5)
        assert found.score < 0


class TestThirdLaw:
    def test_limit(self, params):
        np.testing.assert_allclose(third_law_limit(params), 4 / 0.3, rtol=1e-12)

    def test_small_dimension(self, params):
        (row,) = third_law_scaling(params, [6])
        np.testing.assert_allclose(row.t_s, 2.0, rtol=1e-12)

    @pytest.mark.parametrize("n_prime, tolerance", [(100, 0.05), (1000, 0.005), (10000, 0.0005)])
    def test_convergence(self, params, n_prime, tolerance):
        (row,) = third_law_scaling(params, [n_prime])
        limit = third_law_limit(params)
        assert abs(row.t_s_times_n - limit) / limit < tolerance
        assert row.t_s > 0

    def test_fridge_only(self, engine_params):
        with pytest.raises(ValidationError):
            third_law_scaling(engine_params, [6])
