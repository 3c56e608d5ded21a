"""Tests for optimize module."""

import math

import numpy as np
import pytest

from ftcarnot.cycle import CycleSpec, run_ideal_cold_cycle
from ftcarnot.dynamics import BathContact, Ramp, integrate_stroke, stroke_affine_map
from ftcarnot.lowdiss import asymptotic_coefficients, ld_optimal_times
from ftcarnot.optimize import (
    NoEngineRegimeError,
    ScanGrid,
    _joint_seed,
    emp_sweep,
    golden_section_max,
    maximize_power_1d,
    maximize_power_2d,
    maximize_power_fixed_cold,
    scan_power_1d,
)
from ftcarnot.params import INFINITE, EngineParams, ParameterError, derive


T_R = 0.05


def small_grid(lo: float = 0.05, hi: float = 50.0, n: int = 24) -> ScanGrid:
    return ScanGrid.in_relaxation_times(T_R, lo, hi, n)


class TestGoldenSection:
    """Tests for golden_section_max."""

    def test_log_parabola(self):
        """Finds the peak of -(ln tau - ln 3)^2."""
        tau, value = golden_section_max(lambda t: -(math.log(t) - math.log(3.0)) ** 2, 0.1, 100.0,
                                        1e-6)
        assert tau == pytest.approx(3.0, rel=1e-5)
        assert value == pytest.approx(0.0, abs=1e-10)

    def test_tau_exp(self):
        """tau e^{-tau} peaks at 1."""
        tau, _ = golden_section_max(lambda t: t * math.exp(-t), 0.01, 50.0, 1e-6)
        assert tau == pytest.approx(1.0, rel=1e-4)

    def test_rejects_bad_bracket(self):
        """The bracket must be positive and ordered."""
        with pytest.raises(ParameterError):
            golden_section_max(lambda t: t, 2.0, 1.0)


class TestScanGrid:
    """Tests for ScanGrid."""

    def test_points(self):
        """Points are log-spaced between the ends."""
        points = ScanGrid(0.1, 10.0, 9).points()
        assert len(points) == 9
        assert points[0] == pytest.approx(0.1)
        assert points[-1] == pytest.approx(10.0)
        assert points[4] == pytest.approx(1.0)

    def test_in_relaxation_times(self):
        """Bounds are scaled by t_r."""
        grid = ScanGrid.in_relaxation_times(0.05, 2.0, 10.0, 8)
        assert grid.lo == pytest.approx(0.1)
        assert grid.hi == pytest.approx(0.5)

    @pytest.mark.parametrize("lo, hi, n", [(1.0, 1.0, 10), (0.0, 1.0, 10), (0.1, 1.0, 7)])
    def test_rejects(self, lo, hi, n):
        """Degenerate ranges and tiny grids are rejected."""
        with pytest.raises(ParameterError):
            ScanGrid(lo, hi, n)


class TestMaximizePower1D:
    """Tests for the ideal-cold-bath power maximum."""

    def test_default_engine(self, engine_params):
        """The optimum sits a few relaxation times long, below Carnot."""
        optimum = maximize_power_1d(engine_params, small_grid())
        assert 1.0 < optimum.tau_h_star_over_tr < 5.0
        assert 0.0 < optimum.eta_MP < 0.1
        assert optimum.cycle.is_engine

    def test_beats_every_grid_point(self, engine_params):
        """P_max is at least every scanned power."""
        grid = small_grid()
        optimum = maximize_power_1d(engine_params, grid)
        powers = [cycle.P for cycle in scan_power_1d(engine_params, grid.points())]
        assert optimum.P_max >= max(powers)

    def test_stationary(self, engine_params):
        """The log-derivative of P vanishes at the optimum."""
        optimum = maximize_power_1d(engine_params, small_grid())
        eps = 1e-3

        def power(tau):
            return run_ideal_cold_cycle(CycleSpec(engine_params, tau)).P

        slope = (power(optimum.tau_h_star * (1 + eps))
                 - power(optimum.tau_h_star * (1 - eps))) / (2 * eps)
        assert abs(slope) / optimum.P_max <= 1e-2

    def test_optimum_shortens_with_carnot_efficiency(self, engine_params):
        """tau_h* falls as eta_C grows from 0.10 to 0.15 and stays a few t_r long."""
        optima = [
            maximize_power_1d(engine_params.with_carnot_efficiency(eta), small_grid())
            for eta in (0.10, 0.12, 0.15)
        ]
        taus = [optimum.tau_h_star for optimum in optima]
        assert taus[0] > taus[1] > taus[2]
        assert 1.5 <= optima[1].tau_h_star_over_tr <= 3.2
        assert 1.2 <= optima[2].tau_h_star_over_tr <= 2.7

    def test_denser_grid_gives_same_optimum(self, engine_params):
        """Doubling grid density leaves tau_h* unchanged."""
        coarse = maximize_power_1d(engine_params, small_grid(n=16))
        fine = maximize_power_1d(engine_params, small_grid(n=32))
        assert fine.tau_h_star == pytest.approx(coarse.tau_h_star, rel=1e-3)

    def test_keeps_scanned_cycles(self, engine_params):
        """The grid cycles come back in grid order with the optimum."""
        grid = small_grid(n=16)
        optimum = maximize_power_1d(engine_params, grid)
        assert [cycle.spec.tau_h for cycle in optimum.scan] == pytest.approx(list(grid.points()))
        assert optimum.P_max >= max(cycle.P for cycle in optimum.scan)

    def test_no_engine_regime(self, engine_params):
        """Durations far below t_r give no positive work."""
        with pytest.raises(NoEngineRegimeError):
            maximize_power_1d(engine_params, small_grid(1e-4, 1e-3, 8))

    def test_rejects_finite_cold_bath(self, finite_engine_params):
        """The 1-D search needs gamma_c = inf."""
        with pytest.raises(ParameterError):
            maximize_power_1d(finite_engine_params, small_grid())


class TestMaximizePower2D:
    """Tests for the finite-coupling power maximum."""

    def test_strong_coupling_close_to_ideal(self, make_params):
        """gamma_c = 1e4 loses a few percent of power against the ideal cold bath."""
        params = make_params(gamma_c=1e4)
        t_rc = 1.0 / derive(params).gamma_tilde_c
        ideal = maximize_power_1d(make_params(), small_grid())
        optimum = maximize_power_2d(
            params,
            grid_h=small_grid(0.5, 10.0, 12),
            grid_c=ScanGrid.in_relaxation_times(t_rc, 20.0, 1000.0, 12),
            tol=1e-3,
        )
        assert 0.9 <= optimum.P_max / ideal.P_max <= 1.02
        assert optimum.tau_h_star == pytest.approx(ideal.tau_h_star, rel=0.15)
        assert optimum.tau_c_star < 0.1 * optimum.tau_h_star
        assert optimum.cycle.is_engine

    @pytest.fixture(scope="class")
    def near_equal_engine(self):
        """T_c = 0.99 T_h with gamma_c = gamma_h, searched over the default ranges."""
        params = EngineParams(T_h=10.0, T_c=9.9, gamma_h=1.0, gamma_c=1.0,
                              omega_h_i=1.0, omega_h_f=0.9)
        derived = derive(params)
        optimum = maximize_power_2d(
            params,
            grid_h=ScanGrid.in_relaxation_times(derived.t_r, n=16),
            grid_c=ScanGrid.in_relaxation_times(1.0 / derived.gamma_tilde_c, n=16),
            tol=1e-3,
        )
        return params, optimum

    def test_near_equal_temperatures_finds_engine(self, near_equal_engine):
        """A narrow positive-power window far from the grid centres is still found."""
        _, optimum = near_equal_engine
        assert optimum.P_max > 0
        assert optimum.cycle.is_engine

    def test_near_equal_matches_long_time_coefficients(self, near_equal_engine):
        """The optimum sits at the closed-form times for the exact long-time Sigmas."""
        params, optimum = near_equal_engine
        tau_h, tau_c = ld_optimal_times(asymptotic_coefficients(params))
        assert tau_h == pytest.approx(1.99, rel=0.02)
        assert optimum.tau_h_star == pytest.approx(tau_h, rel=0.15)
        assert optimum.tau_c_star == pytest.approx(tau_c, rel=0.15)

    def test_power_independent_of_starting_stroke(self, near_equal_engine):
        """The limit cycle entered at the cold stroke gives the same P_max."""
        params, optimum = near_equal_engine
        derived = derive(params)
        hot_ramp = Ramp(params.omega_h_i, params.omega_h_f, optimum.tau_h_star)
        hot_contact = BathContact(params.T_h, params.gamma_h)
        cold_ramp = Ramp(derived.omega_c_i, derived.omega_c_f, optimum.tau_c_star)
        cold_contact = BathContact(params.T_c, params.gamma_c)
        hot_map = stroke_affine_map(hot_ramp, hot_contact)
        cold_map = stroke_affine_map(cold_ramp, cold_contact)

        p_start = (hot_map.G * cold_map.H + hot_map.H) / (1.0 - hot_map.G * cold_map.G)
        cold = integrate_stroke(p_start, cold_ramp, cold_contact)
        hot = integrate_stroke(cold.p_end, hot_ramp, hot_contact)
        assert hot.p_end == pytest.approx(p_start, abs=1e-10)
        power = (hot.Q + cold.Q) / (optimum.tau_h_star + optimum.tau_c_star)
        assert power == pytest.approx(optimum.P_max, rel=1e-6)

    def test_joint_seed_picks_best_pair(self):
        """The seed is the scanned pair closest to the peak."""
        grid = ScanGrid(0.01, 100.0, 9)

        def power(tau_h, tau_c):
            return 1.0 - math.log(tau_h / 1.0) ** 2 - math.log(tau_c / 10.0) ** 2

        tau_h, tau_c = _joint_seed(power, grid, grid)
        assert tau_h == pytest.approx(1.0)
        assert tau_c == pytest.approx(10.0)

    def test_joint_seed_without_engine(self):
        """No positive pair raises NoEngineRegimeError."""
        grid = ScanGrid(0.01, 100.0, 9)
        with pytest.raises(NoEngineRegimeError):
            _joint_seed(lambda tau_h, tau_c: -1.0, grid, grid)

    def test_rejects_ideal_cold_bath(self, engine_params):
        """The 2-D search needs a finite gamma_c."""
        with pytest.raises(ParameterError):
            maximize_power_2d(engine_params)


class TestMaximizePowerFixedCold:
    """Tests for the hot-duration search with the cold stroke held fixed."""

    def test_short_strong_cold_stroke_matches_ideal(self, make_params):
        """gamma_c = 1e6 with a 1e-4 cold stroke reproduces the 1-D optimum."""
        ideal = maximize_power_1d(make_params(), small_grid())
        optimum = maximize_power_fixed_cold(make_params(gamma_c=1e6), 1e-4, small_grid())
        assert optimum.P_max == pytest.approx(ideal.P_max, rel=0.02)
        assert optimum.tau_h_star == pytest.approx(ideal.tau_h_star, rel=0.05)
        assert optimum.cycle.spec.tau_c == 1e-4
        assert optimum.t_r == pytest.approx(T_R, rel=1e-3)

    def test_rejects_ideal_cold_bath(self, engine_params):
        """Holding tau_c fixed needs a finite gamma_c."""
        with pytest.raises(ParameterError):
            maximize_power_fixed_cold(engine_params, 0.1)


class TestEmpSweep:
    """Tests for EMP sweeps."""

    ETAS = (0.02, 0.05, 0.1, 0.2, 0.4, 0.6)

    @pytest.fixture(scope="class")
    def narrow_sweep(self):
        """delta = 0.9 sweep."""
        base = EngineParams(T_h=10.0, T_c=9.0, gamma_h=1.0, gamma_c=INFINITE,
                            omega_h_i=1.0, omega_h_f=0.9)
        grid = ScanGrid.in_relaxation_times(T_R, 0.01, 200.0, 24)
        return emp_sweep(base, self.ETAS, grid)

    @pytest.fixture(scope="class")
    def wide_sweep(self):
        """delta = 0.6 sweep."""
        base = EngineParams(T_h=10.0, T_c=9.0, gamma_h=1.0, gamma_c=INFINITE,
                            omega_h_i=1.0, omega_h_f=0.6)
        grid = ScanGrid.in_relaxation_times(T_R, 0.01, 200.0, 24)
        return emp_sweep(base, self.ETAS, grid)

    def test_sorted_engine_points(self, narrow_sweep):
        """Points come back sorted by eta_C and all run as engines."""
        assert [point.eta_C for point in narrow_sweep] == list(self.ETAS)
        assert all(point.engine for point in narrow_sweep)

    def test_efficiency_between_lower_bound_and_carnot(self, narrow_sweep):
        """eta_C/2 <= eta_MP < eta_C everywhere."""
        for point in narrow_sweep:
            assert point.eta_minus <= point.eta_MP < point.eta_C

    def test_exceeds_upper_bound(self, narrow_sweep):
        """The exact engine beats eta_C/(2 - eta_C) somewhere."""
        assert any(point.exceeded_upper_bound for point in narrow_sweep)

    def test_optimum_shortens_with_carnot_efficiency(self, narrow_sweep, wide_sweep):
        """tau_h* strictly decreases along the sweep."""
        for sweep in (narrow_sweep, wide_sweep):
            taus = [point.tau_h_star for point in sweep]
            assert all(a > b for a, b in zip(taus, taus[1:]))

    def test_narrow_ramp_runs_shorter(self, narrow_sweep, wide_sweep):
        """The delta = 0.9 optimum lies below the delta = 0.6 one."""
        for narrow, wide in zip(narrow_sweep, wide_sweep):
            assert narrow.tau_h_star_over_tr < wide.tau_h_star_over_tr

    def test_narrow_ramp_never_in_regime(self, narrow_sweep):
        """With delta = 0.9 the regime cutoff is below every swept eta_C."""
        assert not any(point.in_regime for point in narrow_sweep)

    def test_wide_ramp_in_regime_points_exceed_upper_bound(self, wide_sweep):
        """Even in regime the exact engine sits slightly above eta_C/(2 - eta_C)."""
        in_regime = [point for point in wide_sweep if point.in_regime]
        assert [point.eta_C for point in in_regime][:1] == [0.02]
        for point in in_regime:
            assert point.eta_minus <= point.eta_MP
            assert point.exceeded_upper_bound
        excess = in_regime[0].eta_MP / in_regime[0].eta_plus - 1.0
        assert 0.0 < excess < 0.01

    def test_excess_over_upper_bound_shrinks(self, narrow_sweep):
        """eta_MP / eta_plus approaches 1 as eta_C -> 0."""
        ratios = [point.eta_MP / point.eta_plus for point in narrow_sweep]
        assert ratios[0] < ratios[1] < ratios[2]

    def test_rejects_bad_efficiency(self, engine_params):
        """eta_C must lie strictly inside (0, 1)."""
        with pytest.raises(ParameterError):
            emp_sweep(engine_params, [0.1, 1.0])
        with pytest.raises(ParameterError):
            emp_sweep(engine_params, [])

    def test_rejects_finite_cold_bath(self, finite_engine_params):
        """Sweeps run the ideal-cold-bath engine."""
        with pytest.raises(ParameterError):
            emp_sweep(finite_engine_params, [0.1])

    def test_to_dict(self, narrow_sweep):
        """Rows serialize with every column."""
        row = narrow_sweep[0].to_dict()
        assert set(row) >= {"eta_C", "tau_h_star_over_tr", "eta_MP", "in_regime", "engine"}
        assert not np.isnan(row["P_max"])
