"""Engine parameters, derived quantities and unit conventions.

Reduced units throughout: hbar = k_B = 1. Temperatures and level spacings
are energies, couplings are inverse times, entropies are dimensionless.
"""

import math
from dataclasses import dataclass, replace
from typing import Any

import numpy as np


class ParameterError(ValueError):
    """Raised when physical parameters or user inputs fail validation."""
    pass


@dataclass(frozen=True)
class InfiniteCoupling:
    """Marker for an ideal cold bath (gamma_c -> infinity)."""

    def __str__(self) -> str:
        return "inf"

    def __repr__(self) -> str:
        return "INFINITE"


INFINITE = InfiniteCoupling()

Coupling = float | InfiniteCoupling

# Entropy logarithms are evaluated on a clamped copy of the population.
ENTROPY_CLAMP = 1e-15


def parse_coupling(value: Any) -> Coupling:
    """Parse a coupling from a number or the string "inf"."""
    if isinstance(value, InfiniteCoupling):
        return value
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "infinity", "+inf"):
            return INFINITE
        try:
            value = float(text)
        except ValueError:
            raise ParameterError(f"Coupling must be a positive number or 'inf', got {value!r}")
    value = float(value)
    if math.isinf(value) and value > 0:
        return INFINITE
    if not value > 0:
        raise ParameterError(f"Coupling must be positive, got {value}")
    return value


def format_coupling(value: Coupling) -> float | str:
    """JSON form of a coupling: the float itself or "inf"."""
    return "inf" if isinstance(value, InfiniteCoupling) else float(value)


def _require_positive(name: str, value: float) -> None:
    if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class EngineParams:
    """Full physical configuration of the two-level engine."""
    T_h: float
    T_c: float
    gamma_h: float
    gamma_c: Coupling
    omega_h_i: float
    omega_h_f: float

    def __post_init__(self):
        for name in ("T_h", "T_c", "gamma_h", "omega_h_i", "omega_h_f"):
            _require_positive(name, getattr(self, name))
        if not isinstance(self.gamma_c, InfiniteCoupling):
            _require_positive("gamma_c", self.gamma_c)
        if self.T_c > self.T_h:
            raise ParameterError(
                f"Cold bath must not be hotter than the hot bath (T_c={self.T_c}, T_h={self.T_h})"
            )
        if self.omega_h_f == self.omega_h_i:
            raise ParameterError("omega_h_f must differ from omega_h_i (the hot stroke is empty)")

    @property
    def ideal_cold_bath(self) -> bool:
        return isinstance(self.gamma_c, InfiniteCoupling)

    @property
    def is_engine_orientation(self) -> bool:
        """True when the hot stroke expands the gap downward (omega_h_f < omega_h_i)."""
        return self.omega_h_f < self.omega_h_i

    def with_carnot_efficiency(self, eta_C: float) -> "EngineParams":
        """Copy with T_c set so that 1 - T_c/T_h equals eta_C."""
        if not 0.0 < eta_C < 1.0:
            raise ParameterError(f"Carnot efficiency must lie in (0, 1), got {eta_C}")
        return replace(self, T_c=self.T_h * (1.0 - eta_C))

    def to_dict(self) -> dict:
        """JSON parameter block."""
        return {
            "T_h": float(self.T_h),
            "T_c": float(self.T_c),
            "gamma_h": float(self.gamma_h),
            "gamma_c": format_coupling(self.gamma_c),
            "omega_h_i": float(self.omega_h_i),
            "omega_h_f": float(self.omega_h_f),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EngineParams":
        """Build from the JSON parameter block; gamma_c accepts "inf"."""
        required = ("T_h", "T_c", "gamma_h", "gamma_c", "omega_h_i", "omega_h_f")
        missing = [key for key in required if key not in data]
        if missing:
            raise ParameterError(f"Parameter block is missing: {', '.join(missing)}")
        try:
            return cls(
                T_h=float(data["T_h"]),
                T_c=float(data["T_c"]),
                gamma_h=float(data["gamma_h"]),
                gamma_c=parse_coupling(data["gamma_c"]),
                omega_h_i=float(data["omega_h_i"]),
                omega_h_f=float(data["omega_h_f"]),
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ParameterError):
                raise
            raise ParameterError(f"Invalid parameter block: {e}")


def require_engine_orientation(params: EngineParams) -> None:
    """Reject the reverse orientation (omega_h_f > omega_h_i)."""
    if not params.is_engine_orientation:
        raise ParameterError(
            f"Engine mode needs omega_h_f < omega_h_i, got omega_h_i={params.omega_h_i}, "
            f"omega_h_f={params.omega_h_f}"
        )


@dataclass(frozen=True)
class DerivedParams:
    """Quantities fixed by EngineParams and the adiabatic matching relations."""
    eta_C: float
    delta: float
    omega_c_i: float
    omega_c_f: float
    t_r: float
    gamma_tilde_h: float
    gamma_tilde_c: float  # math.inf for the ideal cold bath


def derive(params: EngineParams, *, allow_degenerate: bool = False) -> DerivedParams:
    """Compute Carnot efficiency, compression ratio, cold spacings and t_r.

    The cold-stroke spacings follow from quantum-adiabatic matching,
    omega_c / T_c == omega_h / T_h at both ends of each adiabat.

    Args:
        params: Engine parameters.
        allow_degenerate: Accept T_c == T_h (eta_C = 0). The cycle module
            uses this to run the symmetric, workless engine.

    Raises:
        ParameterError: If T_c >= T_h and allow_degenerate is False.
    """
    if params.T_c >= params.T_h and not allow_degenerate:
        raise ParameterError(
            f"Need T_c < T_h for a heat engine (T_c={params.T_c}, T_h={params.T_h})"
        )
    ratio = params.T_c / params.T_h
    omega_c_i = params.omega_h_f * ratio
    omega_c_f = params.omega_h_i * ratio
    if params.ideal_cold_bath:
        gamma_tilde_c = math.inf
    else:
        gamma_tilde_c = 2.0 * params.gamma_c * params.T_c / omega_c_i
    return DerivedParams(
        eta_C=1.0 - ratio,
        delta=params.omega_h_f / params.omega_h_i,
        omega_c_i=omega_c_i,
        omega_c_f=omega_c_f,
        t_r=params.omega_h_i / (2.0 * params.gamma_h * params.T_h),
        gamma_tilde_h=2.0 * params.gamma_h * params.T_h / params.omega_h_i,
        gamma_tilde_c=gamma_tilde_c,
    )


def two_level_entropy(p):
    """Shannon entropy -p ln p - (1-p) ln(1-p) of a two-level population.

    Only the arguments of the logarithms are clamped to
    [ENTROPY_CLAMP, 1 - ENTROPY_CLAMP]; accepts floats or numpy arrays.
    """
    p_arr = np.asarray(p, dtype=float)
    clamped = np.clip(p_arr, ENTROPY_CLAMP, 1.0 - ENTROPY_CLAMP)
    entropy = -p_arr * np.log(clamped) - (1.0 - p_arr) * np.log1p(-clamped)
    if entropy.ndim == 0:
        return float(entropy)
    return entropy
