"""Four-stroke finite-time Carnot-like cycle.

Hot quasi-isotherm, adiabat, cold quasi-isotherm, adiabat. The adiabats take
zero time and freeze the population while the spacing jumps by the ratio
T_c/T_h. Heat is positive when it flows into the two-level system.
"""

import logging
import math
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from .dynamics import (
    DEFAULT_TOL,
    TRAJECTORY_SAMPLES,
    BathContact,
    Ramp,
    SolverError,
    StrokeResult,
    equilibrium_population,
    integrate_stroke,
    stroke_affine_map,
)
from .params import DerivedParams, EngineParams, ParameterError, derive, two_level_entropy

load_dotenv()

logger = logging.getLogger(__name__)

# Closure check for the limit cycle (configurable via FTCARNOT_CLOSURE_TOL)
DEFAULT_CLOSURE_TOL = float(os.getenv("FTCARNOT_CLOSURE_TOL", "1e-9"))

# Below this |1 - G_c G_h| the cycle map has no usable fixed point
CONTRACTION_FLOOR = 1e-12


class CycleError(SolverError):
    """Raised when the periodic cycle cannot be constructed or does not close."""
    pass


class CycleStatus(str, Enum):
    ENGINE = "engine"
    NO_WORK = "no_work"
    NO_HEAT_INTAKE = "no_heat_intake"


@dataclass(frozen=True)
class CycleSpec:
    """Parameters plus stroke durations. tau_c is None for the ideal cold bath."""
    params: EngineParams
    tau_h: float
    tau_c: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.tau_h) and self.tau_h > 0):
            raise ParameterError(f"tau_h must be positive, got {self.tau_h!r}")
        if self.params.ideal_cold_bath:
            if self.tau_c is not None:
                raise ParameterError("tau_c cannot be set with an ideal cold bath (gamma_c = inf)")
        else:
            if self.tau_c is None:
                raise ParameterError("tau_c is required when gamma_c is finite")
            if not (math.isfinite(self.tau_c) and self.tau_c > 0):
                raise ParameterError(f"tau_c must be positive, got {self.tau_c!r}")

    @property
    def derived(self) -> DerivedParams:
        return derive(self.params, allow_degenerate=True)

    @property
    def period(self) -> float:
        return self.tau_h + (self.tau_c or 0.0)


@dataclass
class IdealColdStroke:
    """Cold stroke in the gamma_c -> infinity limit.

    An instantaneous relaxation at omega_c_i followed by an isotherm that
    follows equilibrium from omega_c_i to omega_c_f. Both heats go to the
    cold bath.
    """
    Q_relax: float
    Q_isotherm: float
    dS: float
    S_ir: float
    p_start: float
    p_end: float
    omega_start: float
    omega_end: float
    temperature: float
    t: np.ndarray
    omega: np.ndarray
    p_e: np.ndarray

    @property
    def Q(self) -> float:
        return self.Q_relax + self.Q_isotherm

    def to_frame(self, label: str, t_offset: float = 0.0) -> pd.DataFrame:
        return pd.DataFrame({
            "stroke": label,
            "t": self.t + t_offset,
            "omega": self.omega,
            "p_e": self.p_e,
        })

    def to_dict(self) -> dict:
        return {
            "Q": self.Q,
            "Q_relax": self.Q_relax,
            "Q_isotherm": self.Q_isotherm,
            "dS": self.dS,
            "S_ir": self.S_ir,
            "p_start": self.p_start,
            "p_end": self.p_end,
        }


@dataclass
class CycleResult:
    """Per-cycle totals. W = Q_h + Q_c is the output work."""
    spec: CycleSpec
    Q_h: float
    Q_c: float
    W: float
    P: float
    eta: float
    hot: StrokeResult
    cold: StrokeResult | IdealColdStroke
    S_ir_h: float
    S_ir_c: float
    p_start: float
    closure_error: float
    status: CycleStatus

    @property
    def is_engine(self) -> bool:
        return self.status is CycleStatus.ENGINE

    def loop_frame(self) -> pd.DataFrame:
        """(omega, p_e) loop as stroke,t,omega,p_e rows, hot stroke first."""
        return pd.concat(
            [self.hot.to_frame("hot"), self.cold.to_frame("cold", t_offset=self.spec.tau_h)],
            ignore_index=True,
        )

    def to_dict(self) -> dict:
        """Summary block for JSON output."""
        return {
            "tau_h": self.spec.tau_h,
            "tau_c": self.spec.tau_c,
            "Q_h": self.Q_h,
            "Q_c": self.Q_c,
            "W": self.W,
            "P": self.P,
            "eta": self.eta,
            "S_ir_h": self.S_ir_h,
            "S_ir_c": self.S_ir_c,
            "closure_error": self.closure_error,
            "status": self.status.value,
            "hot": self.hot.to_dict(),
            "cold": self.cold.to_dict(),
        }


def _status(Q_h: float, W: float) -> CycleStatus:
    if Q_h <= 0:
        return CycleStatus.NO_HEAT_INTAKE
    if W <= 0:
        return CycleStatus.NO_WORK
    return CycleStatus.ENGINE


def _hot_ramp(spec: CycleSpec) -> tuple[Ramp, BathContact]:
    params = spec.params
    return (
        Ramp(params.omega_h_i, params.omega_h_f, spec.tau_h),
        BathContact(params.T_h, params.gamma_h),
    )


def _assemble(spec, hot, cold, p_start, closure_error) -> CycleResult:
    Q_h, Q_c = hot.Q, cold.Q
    W = Q_h + Q_c
    status = _status(Q_h, W)
    if status is not CycleStatus.ENGINE:
        logger.debug(f"Cycle at tau_h={spec.tau_h:g} is not an engine ({status.value})")
    return CycleResult(
        spec=spec,
        Q_h=Q_h,
        Q_c=Q_c,
        W=W,
        P=W / spec.period,
        eta=W / Q_h if Q_h != 0 else math.nan,
        hot=hot,
        cold=cold,
        S_ir_h=hot.S_ir,
        S_ir_c=cold.S_ir,
        p_start=p_start,
        closure_error=closure_error,
        status=status,
    )


def ideal_cold_stroke(p_start: float, derived: DerivedParams, T_c: float) -> IdealColdStroke:
    """Cold stroke against an infinitely strongly coupled bath."""
    p_relaxed = equilibrium_population(derived.omega_c_i, T_c)
    p_end = equilibrium_population(derived.omega_c_f, T_c)
    Q_relax = derived.omega_c_i * (p_relaxed - p_start)
    Q_isotherm = T_c * (two_level_entropy(p_end) - two_level_entropy(p_relaxed))
    dS = two_level_entropy(p_end) - two_level_entropy(p_start)

    omega = np.linspace(derived.omega_c_i, derived.omega_c_f, TRAJECTORY_SAMPLES)
    return IdealColdStroke(
        Q_relax=Q_relax,
        Q_isotherm=Q_isotherm,
        dS=dS,
        S_ir=dS - (Q_relax + Q_isotherm) / T_c,
        p_start=p_start,
        p_end=p_end,
        omega_start=derived.omega_c_i,
        omega_end=derived.omega_c_f,
        temperature=T_c,
        t=np.zeros(TRAJECTORY_SAMPLES),
        omega=omega,
        p_e=np.array([equilibrium_population(w, T_c) for w in omega]),
    )


def run_ideal_cold_cycle(spec: CycleSpec, tol: float | None = None) -> CycleResult:
    """Cycle with gamma_c -> infinity; the cold stroke takes no time, so P = W / tau_h."""
    params = spec.params
    if not params.ideal_cold_bath:
        raise ParameterError("run_ideal_cold_cycle needs gamma_c = inf")
    derived = spec.derived
    p_start = equilibrium_population(params.omega_h_i, params.T_h)

    ramp, contact = _hot_ramp(spec)
    hot = integrate_stroke(p_start, ramp, contact, tol)
    cold = ideal_cold_stroke(hot.p_end, derived, params.T_c)
    return _assemble(spec, hot, cold, p_start, abs(cold.p_end - p_start))


def run_finite_cycle(
    spec: CycleSpec,
    closure_tol: float | None = None,
    tol: float | None = None,
) -> CycleResult:
    """Periodic steady cycle with a finitely coupled cold bath.

    Each stroke maps p_end = G p0 + H and the adiabats leave p unchanged,
    so the steady population at the start of the hot stroke is
    p* = (G_c H_h + H_c) / (1 - G_c G_h). One full pass from p* gives the
    reported totals; its closure must be within closure_tol.

    Raises:
        CycleError: If the cycle map does not contract or the pass from
            p* does not close.
    """
    params = spec.params
    if params.ideal_cold_bath:
        raise ParameterError("run_finite_cycle needs a finite gamma_c")
    if tol is None:
        tol = DEFAULT_TOL
    if closure_tol is None:
        closure_tol = max(DEFAULT_CLOSURE_TOL, 10.0 * tol)
    derived = spec.derived

    hot_ramp, hot_contact = _hot_ramp(spec)
    cold_ramp = Ramp(derived.omega_c_i, derived.omega_c_f, spec.tau_c)
    cold_contact = BathContact(params.T_c, params.gamma_c)

    hot_map = stroke_affine_map(hot_ramp, hot_contact, tol)
    cold_map = stroke_affine_map(cold_ramp, cold_contact, tol)
    denominator = 1.0 - cold_map.G * hot_map.G
    if abs(denominator) < CONTRACTION_FLOOR:
        raise CycleError(
            f"Cycle map does not contract (G_h={hot_map.G:.6g}, G_c={cold_map.G:.6g})"
        )
    p_star = (cold_map.G * hot_map.H + cold_map.H) / denominator

    hot = integrate_stroke(p_star, hot_ramp, hot_contact, tol)
    cold = integrate_stroke(hot.p_end, cold_ramp, cold_contact, tol)
    closure_error = abs(cold.p_end - p_star)
    if closure_error > closure_tol:
        raise CycleError(
            f"Limit cycle does not close: |p_end - p*| = {closure_error:.3e} > {closure_tol:.1e}"
        )
    return _assemble(spec, hot, cold, p_star, closure_error)


def run_cycle(spec: CycleSpec, tol: float | None = None) -> CycleResult:
    """Run the ideal or finite cycle according to the cold coupling."""
    if spec.params.ideal_cold_bath:
        return run_ideal_cold_cycle(spec, tol)
    return run_finite_cycle(spec, tol=tol)
