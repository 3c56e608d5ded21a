"""Analytic low-dissipation model of the engine.

Each isotherm produces irreversible entropy Sigma/tau, so the heats are
Q_h = T_h (dS - Sigma_h/tau_h) and Q_c = T_c (-dS - Sigma_c/tau_c). This
module holds the closed-form optimal times, the EMP bounds, the
high-temperature coefficients of the two-level system and the test of
whether the model is self-consistent at its own optimum.
"""

import logging
import math
import os
from dataclasses import asdict, dataclass

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from .dynamics import BathContact, Ramp, equilibrium_population, integrate_stroke
from .params import (
    EngineParams,
    ParameterError,
    derive,
    require_engine_orientation,
    two_level_entropy,
)

load_dotenv()

logger = logging.getLogger(__name__)

# Margin that turns "much less than" in the regime condition into a cutoff
DEFAULT_MARGIN = float(os.getenv("FTCARNOT_MARGIN", "0.1"))

# omega_h_i / T_h above which the high-temperature expansion is doubtful
HIGH_T_LIMIT = 0.3


@dataclass(frozen=True)
class LowDissInputs:
    """Reversible entropy change and dissipation coefficients of one cycle."""
    dS: float
    Sigma_h: float
    Sigma_c: float
    T_h: float
    T_c: float
    high_T_suspect: bool = False

    def __post_init__(self):
        if not self.dS > 0:
            raise ParameterError(f"Reversible entropy change must be positive, got {self.dS!r}")
        if self.Sigma_h < 0 or self.Sigma_c < 0:
            raise ParameterError(
                f"Dissipation coefficients must be non-negative "
                f"(Sigma_h={self.Sigma_h}, Sigma_c={self.Sigma_c})"
            )
        if not 0 < self.T_c < self.T_h:
            raise ParameterError(f"Need 0 < T_c < T_h, got T_c={self.T_c}, T_h={self.T_h}")

    @property
    def eta_C(self) -> float:
        return 1.0 - self.T_c / self.T_h

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LowDissPrediction:
    dS: float
    Sigma_h: float
    Sigma_c: float
    tau_h_star: float
    tau_c_star: float
    P_max: float
    eta_star: float
    eta_minus: float
    eta_plus: float
    tau_tilde_h_star: float | None = None
    tau_tilde_c_star: float | None = None
    regime_threshold: float | None = None
    in_regime: bool | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _dissipated(Sigma: float, tau: float, name: str) -> float:
    if Sigma == 0:
        if tau < 0:
            raise ParameterError(f"{name} must be non-negative, got {tau!r}")
        return 0.0
    if not tau > 0:
        raise ParameterError(f"{name} must be positive, got {tau!r}")
    return Sigma / tau


def ld_heats(inputs: LowDissInputs, tau_h: float, tau_c: float) -> tuple[float, float]:
    """Heats (Q_h, Q_c) absorbed from each bath.

    A zero duration is accepted on a side whose Sigma is zero.
    """
    Q_h = inputs.T_h * (inputs.dS - _dissipated(inputs.Sigma_h, tau_h, "tau_h"))
    Q_c = inputs.T_c * (-inputs.dS - _dissipated(inputs.Sigma_c, tau_c, "tau_c"))
    return Q_h, Q_c


def ld_power(inputs: LowDissInputs, tau_h: float, tau_c: float) -> float:
    """Output power (Q_h + Q_c) / (tau_h + tau_c)."""
    Q_h, Q_c = ld_heats(inputs, tau_h, tau_c)
    return (Q_h + Q_c) / (tau_h + tau_c)


def ld_optimal_times(inputs: LowDissInputs) -> tuple[float, float]:
    """Durations (tau_h*, tau_c*) that maximize the power.

    Sigma_c = 0 is the exact ideal-cold-bath limit with tau_c* = 0.
    """
    if inputs.Sigma_h == 0 and inputs.Sigma_c == 0:
        raise ParameterError("At least one dissipation coefficient must be positive")
    hot = inputs.T_h * inputs.Sigma_h
    cold = inputs.T_c * inputs.Sigma_c
    cross = math.sqrt(hot * cold)
    scale = 2.0 / ((inputs.T_h - inputs.T_c) * inputs.dS)
    return scale * (hot + cross), scale * (cold + cross)


def emp_bounds(eta_C: float) -> tuple[float, float]:
    """Lower and upper EMP bounds eta_C/2 and eta_C/(2 - eta_C)."""
    if not 0 < eta_C <= 1:
        raise ParameterError(f"Carnot efficiency must lie in (0, 1], got {eta_C!r}")
    return eta_C / 2.0, eta_C / (2.0 - eta_C)


def ld_emp(inputs: LowDissInputs) -> LowDissPrediction:
    """Power and efficiency at the closed-form optimal times."""
    tau_h, tau_c = ld_optimal_times(inputs)
    Q_h, Q_c = ld_heats(inputs, tau_h, tau_c)
    eta_minus, eta_plus = emp_bounds(inputs.eta_C)
    return LowDissPrediction(
        dS=inputs.dS,
        Sigma_h=inputs.Sigma_h,
        Sigma_c=inputs.Sigma_c,
        tau_h_star=tau_h,
        tau_c_star=tau_c,
        P_max=(Q_h + Q_c) / (tau_h + tau_c),
        eta_star=(Q_h + Q_c) / Q_h,
        eta_minus=eta_minus,
        eta_plus=eta_plus,
    )


def high_T_entropy_change(omega_i: float, omega_f: float, T: float) -> float:
    """(omega_i^2 - omega_f^2) / (8 T^2), the high-temperature entropy change of an isotherm."""
    if not T > 0:
        raise ParameterError(f"Temperature must be positive, got {T!r}")
    return (omega_i**2 - omega_f**2) / (8.0 * T**2)


def high_T_dissipation(dS: float, gamma_tilde: float) -> float:
    """Sigma = 2 dS / gamma_tilde; an infinite gamma_tilde gives zero."""
    if not gamma_tilde > 0:
        raise ParameterError(f"gamma_tilde must be positive, got {gamma_tilde!r}")
    if math.isinf(gamma_tilde):
        return 0.0
    return 2.0 * dS / gamma_tilde


def high_T_coefficients(params: EngineParams) -> LowDissInputs:
    """Low-dissipation inputs from the high-temperature expansion.

    The entropy change is taken on the hot stroke; adiabatic matching makes
    the cold-stroke value identical.
    """
    require_engine_orientation(params)
    derived = derive(params)
    ratio = params.omega_h_i / params.T_h
    suspect = ratio > HIGH_T_LIMIT
    if suspect:
        logger.warning(
            f"omega_h_i/T_h = {ratio:.3g} exceeds {HIGH_T_LIMIT}; "
            "high-temperature coefficients are unreliable"
        )
    dS = high_T_entropy_change(params.omega_h_i, params.omega_h_f, params.T_h)
    return LowDissInputs(
        dS=dS,
        Sigma_h=high_T_dissipation(dS, derived.gamma_tilde_h),
        Sigma_c=high_T_dissipation(dS, derived.gamma_tilde_c),
        T_h=params.T_h,
        T_c=params.T_c,
        high_T_suspect=suspect,
    )


def _coupling_ratio(params: EngineParams) -> float:
    """gamma_h / gamma_c, zero for an ideal cold bath."""
    return 0.0 if params.ideal_cold_bath else params.gamma_h / params.gamma_c


def ld_dimensionless_times(params: EngineParams) -> tuple[float, float]:
    """Dimensionless optimal times in closed form of eta_C, the spacings and gamma_h/gamma_c.

    tau_tilde_c* is infinite for an ideal cold bath.
    """
    require_engine_orientation(params)
    derived = derive(params)
    eta_C = derived.eta_C
    prefactor = (2.0 / eta_C) * (params.omega_h_i - params.omega_h_f) / (
        params.omega_h_i + params.omega_h_f
    )
    ratio = _coupling_ratio(params)
    tau_tilde_h = prefactor * (1.0 + math.sqrt((1.0 - eta_C) * ratio))
    if params.ideal_cold_bath:
        tau_tilde_c = math.inf
    else:
        tau_tilde_c = prefactor * (math.sqrt((1.0 - eta_C) / ratio) + 1.0 - eta_C)
    return tau_tilde_h, tau_tilde_c


def composed_dimensionless_times(params: EngineParams) -> tuple[float, float]:
    """Optimal times from high_T_coefficients fed into ld_optimal_times, scaled by gamma_tilde.

    Closed form with rho = (1 - eta_C) delta gamma_h / gamma_c:
    tau_tilde_h* = (4/eta_C)(1 + sqrt(rho)),
    tau_tilde_c* = (4(1 - eta_C)/eta_C)(1 + 1/sqrt(rho)).
    """
    require_engine_orientation(params)
    derived = derive(params)
    eta_C = derived.eta_C
    root = math.sqrt((1.0 - eta_C) * derived.delta * _coupling_ratio(params))
    tau_tilde_h = (4.0 / eta_C) * (1.0 + root)
    tau_tilde_c = math.inf if root == 0 else (4.0 * (1.0 - eta_C) / eta_C) * (1.0 + 1.0 / root)
    return tau_tilde_h, tau_tilde_c


def regime_check(params: EngineParams, margin: float | None = None) -> tuple[float, bool]:
    """Return (threshold, in_regime) for the model's self-consistency condition.

    threshold = 2(1 - delta)/(1 + delta) and in_regime means
    eta_C <= margin * threshold.
    """
    if margin is None:
        margin = DEFAULT_MARGIN
    if not 0 < margin <= 1:
        raise ParameterError(f"Margin must lie in (0, 1], got {margin!r}")
    derived = derive(params)
    threshold = 2.0 * (1.0 - derived.delta) / (1.0 + derived.delta)
    return threshold, derived.eta_C <= margin * threshold


def asymptotic_dissipation(ramp: Ramp, contact: BathContact) -> float:
    """Exact long-time limit of S_ir * tau for a linear ramp under the master equation.

    |omega_f - omega_i| |tanh^2(omega_i/2T) - tanh^2(omega_f/2T)| / (4 gamma T)
    """
    T = contact.T
    start = math.tanh(ramp.omega_start / (2.0 * T))
    end = math.tanh(ramp.omega_end / (2.0 * T))
    squeeze = start**2 - end**2
    return abs(ramp.omega_end - ramp.omega_start) * abs(squeeze) / (4.0 * contact.gamma * T)


def asymptotic_coefficients(params: EngineParams) -> LowDissInputs:
    """Low-dissipation inputs the exact dynamics converges to at long stroke times.

    dS is the exact equilibrium entropy change of the hot isotherm and each
    Sigma is asymptotic_dissipation of its stroke. An ideal cold bath has
    Sigma_c = 0.
    """
    require_engine_orientation(params)
    derived = derive(params)
    dS = float(
        two_level_entropy(equilibrium_population(params.omega_h_f, params.T_h))
        - two_level_entropy(equilibrium_population(params.omega_h_i, params.T_h))
    )
    hot = asymptotic_dissipation(
        Ramp(params.omega_h_i, params.omega_h_f, 1.0), BathContact(params.T_h, params.gamma_h)
    )
    if params.ideal_cold_bath:
        cold = 0.0
    else:
        cold = asymptotic_dissipation(
            Ramp(derived.omega_c_i, derived.omega_c_f, 1.0),
            BathContact(params.T_c, params.gamma_c),
        )
    return LowDissInputs(dS=dS, Sigma_h=hot, Sigma_c=cold, T_h=params.T_h, T_c=params.T_c)


def predict(params: EngineParams, margin: float | None = None) -> LowDissPrediction:
    """Full low-dissipation prediction for an engine."""
    prediction = ld_emp(high_T_coefficients(params))
    tau_tilde_h, tau_tilde_c = ld_dimensionless_times(params)
    threshold, in_regime = regime_check(params, margin)
    return LowDissPrediction(
        **{
            **prediction.to_dict(),
            "tau_tilde_h_star": tau_tilde_h,
            "tau_tilde_c_star": tau_tilde_c,
            "regime_threshold": threshold,
            "in_regime": in_regime,
        }
    )


def entropy_scaling(params: EngineParams, taus, tol: float | None = None) -> pd.DataFrame:
    """Irreversible entropy of the hot stroke against its duration.

    Each stroke starts in equilibrium at omega_h_i. Columns are tau,
    tau_over_tr, S_ir and S_ir_times_tau.
    """
    t_r = derive(params).t_r
    contact = BathContact(params.T_h, params.gamma_h)
    p0 = equilibrium_population(params.omega_h_i, params.T_h)
    rows = []
    for tau in taus:
        stroke = integrate_stroke(p0, Ramp(params.omega_h_i, params.omega_h_f, float(tau)),
                                  contact, tol)
        rows.append({
            "tau": float(tau),
            "tau_over_tr": float(tau) / t_r,
            "S_ir": stroke.S_ir,
            "S_ir_times_tau": stroke.S_ir * float(tau),
        })
    return pd.DataFrame(rows, columns=["tau", "tau_over_tr", "S_ir", "S_ir_times_tau"])


def plateau_fit(scan: pd.DataFrame) -> float:
    """Mean of S_ir * tau over the top decade of tau in an entropy_scaling table."""
    if scan.empty:
        raise ParameterError("Cannot fit an empty scaling scan")
    tail = scan[scan["tau"] >= scan["tau"].max() / 10.0]
    return float(np.mean(tail["S_ir_times_tau"]))
