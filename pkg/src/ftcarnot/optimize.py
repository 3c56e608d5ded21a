"""Power maximization over stroke durations and EMP sweeps across Carnot efficiency."""

import logging
import math
import os
from collections.abc import Callable
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from dotenv import load_dotenv

from .cycle import CycleResult, CycleSpec, run_finite_cycle, run_ideal_cold_cycle
from .dynamics import SolverError
from .lowdiss import DEFAULT_MARGIN, emp_bounds, regime_check
from .params import EngineParams, ParameterError, derive, require_engine_orientation

load_dotenv()

logger = logging.getLogger(__name__)

# Golden-section relative duration tolerance (configurable via FTCARNOT_OPT_TOL)
DEFAULT_OPT_TOL = float(os.getenv("FTCARNOT_OPT_TOL", "1e-4"))

# Points in the coarse log-spaced scan (configurable via FTCARNOT_SCAN_POINTS)
DEFAULT_SCAN_POINTS = int(os.getenv("FTCARNOT_SCAN_POINTS", "48"))

# Worker processes for sweeps (configurable via FTCARNOT_WORKERS)
DEFAULT_WORKERS = int(os.getenv("FTCARNOT_WORKERS", "1"))

# Default scan range in units of the relaxation time
SCAN_LO_TR = 0.05
SCAN_HI_TR = 400.0

MAX_PASSES = 100

# Points per axis in the joint scan that seeds the 2-D search
SEED_POINTS = 12

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


class NoEngineRegimeError(SolverError):
    """Raised when no scanned duration gives positive work."""
    pass


@dataclass(frozen=True)
class ScanGrid:
    """n log-spaced durations in [lo, hi]."""
    lo: float
    hi: float
    n: int = DEFAULT_SCAN_POINTS

    def __post_init__(self):
        if not (0 < self.lo < self.hi and math.isfinite(self.hi)):
            raise ParameterError(f"Scan grid needs 0 < lo < hi, got lo={self.lo}, hi={self.hi}")
        if self.n < 8:
            raise ParameterError(f"Scan grid needs at least 8 points, got {self.n}")

    @classmethod
    def in_relaxation_times(
        cls,
        t_r: float,
        lo: float = SCAN_LO_TR,
        hi: float = SCAN_HI_TR,
        n: int = DEFAULT_SCAN_POINTS,
    ) -> "ScanGrid":
        """Grid given in multiples of the relaxation time t_r."""
        return cls(lo=lo * t_r, hi=hi * t_r, n=n)

    def points(self) -> np.ndarray:
        return np.geomspace(self.lo, self.hi, self.n)


@dataclass
class PowerOptimum:
    """Optimal hot-stroke duration. scan holds the grid cycles in grid order."""
    tau_h_star: float
    P_max: float
    eta_MP: float
    t_r: float
    cycle: CycleResult
    scan: list[CycleResult] = field(default_factory=list)

    @property
    def tau_h_star_over_tr(self) -> float:
        return self.tau_h_star / self.t_r


@dataclass
class PowerOptimum2D:
    tau_h_star: float
    tau_c_star: float
    P_max: float
    eta_MP: float
    passes: int
    converged: bool
    cycle: CycleResult


@dataclass(frozen=True)
class EmpPoint:
    """One row of an EMP sweep. Non-engine points carry NaN metrics and engine=False."""
    eta_C: float
    T_c: float
    tau_h_star: float
    tau_h_star_over_tr: float
    P_max: float
    eta_MP: float
    eta_minus: float
    eta_plus: float
    in_regime: bool
    exceeded_upper_bound: bool
    engine: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


def golden_section_max(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    rel_tol: float = DEFAULT_OPT_TOL,
) -> tuple[float, float]:
    """Maximize f over durations in [lo, hi] by golden-section search on ln(tau).

    Stops once the bracket is narrower than rel_tol in relative duration.
    Returns the better of the two final interior points as (tau, f(tau)).
    """
    if not 0 < lo < hi:
        raise ParameterError(f"Golden-section bracket needs 0 < lo < hi, got [{lo}, {hi}]")
    a, b = math.log(lo), math.log(hi)
    h = b - a
    tol = math.log1p(rel_tol)
    if h <= tol:
        x = math.exp(0.5 * (a + b))
        return x, f(x)

    # Required steps to achieve tolerance
    n = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))

    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(math.exp(c))
    yd = f(math.exp(d))
    for _ in range(n - 1):
        if yc > yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(math.exp(c))
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(math.exp(d))

    if yc > yd:
        return math.exp(c), yc
    return math.exp(d), yd


def _refine(
    power: Callable[[float], float],
    taus: np.ndarray,
    powers: np.ndarray,
    rel_tol: float,
) -> tuple[float, float]:
    """Bracket around the best scanned point and refine by golden section.

    The refined point only replaces the grid best when it is at least as good.
    """
    if not np.any(powers > 0):
        raise NoEngineRegimeError(
            f"No positive power on [{taus[0]:.4g}, {taus[-1]:.4g}] ({len(taus)} points)"
        )
    best = int(np.argmax(powers))
    lo = taus[max(best - 1, 0)]
    hi = taus[min(best + 1, len(taus) - 1)]
    tau, value = golden_section_max(power, lo, hi, rel_tol)
    if value < powers[best]:
        tau, value = float(taus[best]), float(powers[best])
    return float(tau), float(value)


def _scan_and_refine(
    power: Callable[[float], float],
    taus: np.ndarray,
    rel_tol: float,
) -> tuple[float, float]:
    """Coarse scan followed by golden refinement; returns (tau, P)."""
    powers = np.array([power(tau) for tau in taus])
    return _refine(power, taus, powers, rel_tol)


def scan_power_1d(params: EngineParams, taus, tol: float | None = None) -> list[CycleResult]:
    """Ideal-cold-bath cycles at each hot-stroke duration."""
    return [run_ideal_cold_cycle(CycleSpec(params, float(tau)), tol) for tau in taus]


def maximize_power_1d(
    params: EngineParams,
    grid: ScanGrid | None = None,
    tol: float | None = None,
    integrator_tol: float | None = None,
) -> PowerOptimum:
    """Maximize the ideal-cold-bath power over tau_h.

    Raises:
        ParameterError: If gamma_c is finite or the orientation is reversed.
        NoEngineRegimeError: If no grid point gives positive work.
    """
    if not params.ideal_cold_bath:
        raise ParameterError("maximize_power_1d needs gamma_c = inf")
    require_engine_orientation(params)
    t_r = derive(params).t_r
    if grid is None:
        grid = ScanGrid.in_relaxation_times(t_r)
    if tol is None:
        tol = DEFAULT_OPT_TOL

    def power(tau: float) -> float:
        return run_ideal_cold_cycle(CycleSpec(params, tau), integrator_tol).P

    taus = grid.points()
    scan = scan_power_1d(params, taus, integrator_tol)
    tau_star, _ = _refine(power, taus, np.array([cycle.P for cycle in scan]), tol)
    cycle = run_ideal_cold_cycle(CycleSpec(params, tau_star), integrator_tol)
    logger.info(
        f"Maximum power at tau_h = {tau_star / t_r:.4g} t_r: "
        f"P = {cycle.P:.6g}, eta = {cycle.eta:.6g}"
    )
    return PowerOptimum(
        tau_h_star=tau_star, P_max=cycle.P, eta_MP=cycle.eta, t_r=t_r, cycle=cycle, scan=scan
    )


def _finite_power(params: EngineParams, integrator_tol: float | None):
    """P(tau_h, tau_c) of the limit cycle; a failing cycle scores -inf."""
    def power(tau_h: float, tau_c: float) -> float:
        try:
            return run_finite_cycle(CycleSpec(params, tau_h, tau_c), tol=integrator_tol).P
        except SolverError as e:
            logger.warning(f"Cycle failed at tau_h={tau_h:.4g}, tau_c={tau_c:.4g}: {e}")
            return -math.inf
    return power


def maximize_power_fixed_cold(
    params: EngineParams,
    tau_c: float,
    grid: ScanGrid | None = None,
    tol: float | None = None,
    integrator_tol: float | None = None,
) -> PowerOptimum:
    """Maximize the limit-cycle power over tau_h with the cold stroke held at tau_c.

    Raises:
        ParameterError: If gamma_c is infinite or the orientation is reversed.
        NoEngineRegimeError: If no grid point gives positive work.
    """
    if params.ideal_cold_bath:
        raise ParameterError("maximize_power_fixed_cold needs a finite gamma_c")
    require_engine_orientation(params)
    t_r = derive(params).t_r
    if grid is None:
        grid = ScanGrid.in_relaxation_times(t_r)
    if tol is None:
        tol = DEFAULT_OPT_TOL
    power = _finite_power(params, integrator_tol)

    tau_star, _ = _scan_and_refine(lambda t: power(t, tau_c), grid.points(), tol)
    cycle = run_finite_cycle(CycleSpec(params, tau_star, tau_c), tol=integrator_tol)
    logger.info(
        f"Maximum power at tau_h = {tau_star / t_r:.4g} t_r with tau_c = {tau_c:.4g}: "
        f"P = {cycle.P:.6g}"
    )
    return PowerOptimum(
        tau_h_star=tau_star, P_max=cycle.P, eta_MP=cycle.eta, t_r=t_r, cycle=cycle
    )


def _seed_points(grid: ScanGrid) -> np.ndarray:
    """At most SEED_POINTS durations taken from the grid, ends included."""
    points = grid.points()
    index = np.unique(np.round(np.linspace(0, len(points) - 1, SEED_POINTS)).astype(int))
    return points[index]


def _joint_seed(power, grid_h: ScanGrid, grid_c: ScanGrid) -> tuple[float, float]:
    """Best (tau_h, tau_c) on a coarse joint grid.

    Raises:
        NoEngineRegimeError: If no pair gives positive power.
    """
    taus_h, taus_c = _seed_points(grid_h), _seed_points(grid_c)
    powers = np.array([[power(tau_h, tau_c) for tau_c in taus_c] for tau_h in taus_h])
    if not np.any(powers > 0):
        raise NoEngineRegimeError(
            f"No positive power on tau_h in [{grid_h.lo:.4g}, {grid_h.hi:.4g}], "
            f"tau_c in [{grid_c.lo:.4g}, {grid_c.hi:.4g}] ({powers.size} pairs)"
        )
    i, j = np.unravel_index(int(np.argmax(powers)), powers.shape)
    logger.debug(f"Seed at tau_h={taus_h[i]:.4g}, tau_c={taus_c[j]:.4g}: P = {powers[i, j]:.6g}")
    return float(taus_h[i]), float(taus_c[j])


def _local_bracket(tau: float, grid: ScanGrid, width: float) -> tuple[float, float]:
    return max(tau / width, grid.lo), min(tau * width, grid.hi)


def maximize_power_2d(
    params: EngineParams,
    grid_h: ScanGrid | None = None,
    grid_c: ScanGrid | None = None,
    tol: float | None = None,
    max_passes: int = MAX_PASSES,
    integrator_tol: float | None = None,
) -> PowerOptimum2D:
    """Maximize the limit-cycle power over (tau_h, tau_c) by alternating coordinate passes.

    A coarse joint scan picks the starting pair. The first pass scans each
    full grid through that pair; later passes refine each coordinate by
    golden-section search in a local bracket. Stops once neither duration
    moves by more than tol relative in a pass, or after max_passes, in which
    case the last iterate is returned with converged=False.

    Raises:
        ParameterError: If gamma_c is infinite or the orientation is reversed.
        NoEngineRegimeError: If no pair on the joint scan gives positive work.
    """
    if params.ideal_cold_bath:
        raise ParameterError("maximize_power_2d needs a finite gamma_c")
    require_engine_orientation(params)
    derived = derive(params)
    if grid_h is None:
        grid_h = ScanGrid.in_relaxation_times(derived.t_r)
    if grid_c is None:
        grid_c = ScanGrid.in_relaxation_times(1.0 / derived.gamma_tilde_c)
    if tol is None:
        tol = DEFAULT_OPT_TOL
    inner_tol = tol / 10.0
    step = (grid_h.hi / grid_h.lo) ** (2.0 / (grid_h.n - 1))
    width = max(step, 4.0)
    power = _finite_power(params, integrator_tol)

    tau_h, tau_c = _joint_seed(power, grid_h, grid_c)
    tau_h, _ = _scan_and_refine(lambda t: power(t, tau_c), grid_h.points(), inner_tol)
    tau_c, _ = _scan_and_refine(lambda t: power(tau_h, t), grid_c.points(), inner_tol)

    converged = False
    passes = 1
    while passes < max_passes:
        passes += 1
        lo, hi = _local_bracket(tau_h, grid_h, width)
        new_h, _ = golden_section_max(lambda t: power(t, tau_c), lo, hi, inner_tol)
        lo, hi = _local_bracket(tau_c, grid_c, width)
        new_c, _ = golden_section_max(lambda t: power(new_h, t), lo, hi, inner_tol)
        moved = max(abs(new_h - tau_h) / tau_h, abs(new_c - tau_c) / tau_c)
        tau_h, tau_c = new_h, new_c
        logger.debug(f"Pass {passes}: tau_h={tau_h:.6g}, tau_c={tau_c:.6g}, moved {moved:.2e}")
        if moved < tol:
            converged = True
            break
    if not converged:
        logger.warning(f"2-D maximization did not converge in {max_passes} passes")

    cycle = run_finite_cycle(CycleSpec(params, tau_h, tau_c), tol=integrator_tol)
    logger.info(
        f"Maximum power at tau_h={tau_h:.6g}, tau_c={tau_c:.6g}: P = {cycle.P:.6g} "
        f"after {passes} passes"
    )
    return PowerOptimum2D(
        tau_h_star=tau_h,
        tau_c_star=tau_c,
        P_max=cycle.P,
        eta_MP=cycle.eta,
        passes=passes,
        converged=converged,
        cycle=cycle,
    )


def _emp_point(job: tuple) -> EmpPoint:
    """One sweep point; module-level so process pools can pickle it."""
    base, eta_C, grid, margin, tol, integrator_tol = job
    params = base.with_carnot_efficiency(eta_C)
    eta_minus, eta_plus = emp_bounds(eta_C)
    _, in_regime = regime_check(params, margin)
    try:
        optimum = maximize_power_1d(params, grid, tol, integrator_tol)
    except NoEngineRegimeError as e:
        logger.warning(f"Skipping eta_C={eta_C:.6g}: {e}")
        return EmpPoint(
            eta_C=eta_C,
            T_c=params.T_c,
            tau_h_star=math.nan,
            tau_h_star_over_tr=math.nan,
            P_max=math.nan,
            eta_MP=math.nan,
            eta_minus=eta_minus,
            eta_plus=eta_plus,
            in_regime=in_regime,
            exceeded_upper_bound=False,
            engine=False,
        )
    return EmpPoint(
        eta_C=eta_C,
        T_c=params.T_c,
        tau_h_star=optimum.tau_h_star,
        tau_h_star_over_tr=optimum.tau_h_star_over_tr,
        P_max=optimum.P_max,
        eta_MP=optimum.eta_MP,
        eta_minus=eta_minus,
        eta_plus=eta_plus,
        in_regime=in_regime,
        exceeded_upper_bound=optimum.eta_MP > eta_plus,
    )


def emp_sweep(
    base: EngineParams,
    eta_C_values,
    grid: ScanGrid | None = None,
    margin: float | None = None,
    tol: float | None = None,
    workers: int | None = None,
    integrator_tol: float | None = None,
) -> list[EmpPoint]:
    """EMP of the ideal-cold-bath engine at each Carnot efficiency.

    T_c is set to T_h (1 - eta_C) for every point. Points are independent;
    with workers > 1 they run in a process pool. Results are sorted by eta_C.
    """
    if margin is None:
        margin = DEFAULT_MARGIN
    if workers is None:
        workers = DEFAULT_WORKERS
    values = sorted(float(v) for v in eta_C_values)
    if not values:
        raise ParameterError("EMP sweep needs at least one Carnot efficiency")
    for value in values:
        if not 0 < value < 1:
            raise ParameterError(f"Carnot efficiency must lie in (0, 1), got {value}")
    if not base.ideal_cold_bath:
        raise ParameterError("EMP sweep runs the ideal-cold-bath engine (gamma_c = inf)")
    require_engine_orientation(base)
    if grid is None:
        grid = ScanGrid.in_relaxation_times(derive(base.with_carnot_efficiency(values[0])).t_r)

    jobs = [(base, value, grid, margin, tol, integrator_tol) for value in values]
    logger.info(f"EMP sweep over {len(jobs)} Carnot efficiencies with {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_emp_point, jobs))
    else:
        points = [_emp_point(job) for job in jobs]
    return sorted(points, key=lambda point: point.eta_C)
