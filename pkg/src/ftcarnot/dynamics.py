"""Exact stroke dynamics of the two-level population.

A stroke is a linear ramp of the level spacing while the system touches a
single bath. The excited population obeys

    dp/dt = -kappa(t) p + C(t),  kappa = gamma (2n + 1),  C = gamma n,

with n the Bose occupation at the instantaneous spacing. The equation is
linear in p, so every step is an affine map p -> a p + b and the whole
stroke can be advanced with numpy instead of a Python loop.

Steps use classical RK4 while kappa h stays small. Stiff steps (a strongly
coupled bath over a long stroke) switch to the exact solution with kappa
frozen at the step midpoint and the equilibrium population interpolated
linearly, which stays accurate for any kappa h.
"""

import logging
import math
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd
from dotenv import load_dotenv
from scipy.special import expit

from .params import ParameterError, two_level_entropy

load_dotenv()

logger = logging.getLogger(__name__)

# Relative tolerance on the final population (configurable via FTCARNOT_TOL)
DEFAULT_TOL = float(os.getenv("FTCARNOT_TOL", "1e-9"))

# Step budget for a single run; step halving stops here
DEFAULT_MAX_STEPS = 2**22

# Output samples per stroke, independent of the internal step
TRAJECTORY_SAMPLES = 512

MIN_STEPS = 2000
STEPS_PER_RELAXATION = 200

# Cap on the initial step count; longer strokes take exponential steps
MAX_INITIAL_STEPS = (TRAJECTORY_SAMPLES - 1) * 128

# kappa h above which a step uses the exponential form
STIFF_STEP = 0.1

# Absolute floor for the halving test, a few ulps of a population
HALVING_FLOOR = 1e-14

_BLOCK = 256

# Decay of the cumulative product allowed inside one propagation block
_BLOCK_DECAY = 200.0
_MIN_FACTOR = 1e-80


class SolverError(RuntimeError):
    """Base class for numerical failures."""
    pass


class IntegratorError(SolverError):
    """Raised when step halving does not converge inside the step budget."""
    pass


@dataclass(frozen=True)
class Ramp:
    """Linear spacing ramp omega(t) = omega_start + (omega_end - omega_start) t / duration."""
    omega_start: float
    omega_end: float
    duration: float

    def __post_init__(self):
        for name in ("omega_start", "omega_end", "duration"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"Ramp {name} must be positive and finite, got {value!r}")

    @property
    def rate(self) -> float:
        """d omega / dt."""
        return (self.omega_end - self.omega_start) / self.duration

    def omega_at(self, t):
        return self.omega_start + self.rate * np.asarray(t, dtype=float)


@dataclass(frozen=True)
class BathContact:
    T: float
    gamma: float

    def __post_init__(self):
        for name in ("T", "gamma"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"Bath {name} must be positive and finite, got {value!r}")


@dataclass
class StrokeResult:
    """Trajectory and thermodynamic accounting of one stroke.

    Q is the heat absorbed by the two-level system from the bath, W_on the
    work done on it. S_ir = dS - Q/T.
    """
    t: np.ndarray
    omega: np.ndarray
    p_e: np.ndarray
    Q: float
    W_on: float
    dS: float
    S_ir: float
    p_start: float
    p_end: float
    omega_start: float
    omega_end: float
    temperature: float
    steps: int
    error: float

    @property
    def energy_change(self) -> float:
        return self.omega_end * self.p_end - self.omega_start * self.p_start

    def to_frame(self, label: str, t_offset: float = 0.0) -> pd.DataFrame:
        """Trajectory table with columns stroke, t, omega, p_e."""
        return pd.DataFrame({
            "stroke": label,
            "t": self.t + t_offset,
            "omega": self.omega,
            "p_e": self.p_e,
        })

    def to_dict(self) -> dict:
        return {
            "Q": self.Q,
            "W_on": self.W_on,
            "dS": self.dS,
            "S_ir": self.S_ir,
            "p_start": self.p_start,
            "p_end": self.p_end,
            "steps": self.steps,
            "error": self.error,
        }


@dataclass(frozen=True)
class AffineMap:
    """p_end = G * p0 + H for one stroke."""
    G: float
    H: float

    def __call__(self, p0: float) -> float:
        return self.G * p0 + self.H


def _check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise ParameterError(f"{name} must be positive, got {value!r}")


def _occupation(omega: np.ndarray, T: float) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / np.expm1(omega / T)


def _rates(omega: np.ndarray, T: float, gamma: float) -> tuple[np.ndarray, np.ndarray]:
    with np.errstate(over="ignore"):
        kappa = gamma / np.tanh(omega / (2.0 * T))
    return kappa, gamma * _occupation(omega, T)


def bose_occupation(omega: float, T: float) -> float:
    """Mean occupation 1/(exp(omega/T) - 1) of the bath mode at omega."""
    _check_positive("omega", omega)
    _check_positive("T", T)
    return float(_occupation(np.float64(omega), T))


def equilibrium_population(omega: float, T: float) -> float:
    """Thermal excited population 1/(exp(omega/T) + 1), strictly in (0, 1/2)."""
    _check_positive("omega", omega)
    _check_positive("T", T)
    return float(expit(-omega / T))


def rates(omega: float, contact: BathContact) -> tuple[float, float]:
    """Return (kappa, C) of the master equation at spacing omega."""
    _check_positive("omega", omega)
    kappa, C = _rates(np.float64(omega), contact.T, contact.gamma)
    return float(kappa), float(C)


def relaxation_time(ramp: Ramp, contact: BathContact) -> float:
    """Shortest 1/kappa along the ramp; kappa falls with omega, so it sits at the smaller end."""
    kappa, _ = rates(min(ramp.omega_start, ramp.omega_end), contact)
    return 1.0 / kappa


def default_steps(ramp: Ramp, contact: BathContact) -> int:
    """Initial step count: 200 steps per relaxation time within [2000, MAX_INITIAL_STEPS].

    Always a multiple of 511 so the trajectory samples fall on step nodes.
    """
    wanted = max(MIN_STEPS, math.ceil(STEPS_PER_RELAXATION * ramp.duration
                                      / relaxation_time(ramp, contact)))
    unit = TRAJECTORY_SAMPLES - 1
    return min(unit * math.ceil(wanted / unit), MAX_INITIAL_STEPS)


def _rk4_coefficients(h, k0, km, k1, c0, cm, c1, w0, wm, w1):
    # Each stage value is (coefficient of y, constant)
    k1a, k1b = -k0, c0
    y2a, y2b = 1.0 + 0.5 * h * k1a, 0.5 * h * k1b
    k2a, k2b = -km * y2a, -km * y2b + cm
    y3a, y3b = 1.0 + 0.5 * h * k2a, 0.5 * h * k2b
    k3a, k3b = -km * y3a, -km * y3b + cm
    y4a, y4b = 1.0 + h * k3a, h * k3b
    k4a, k4b = -k1 * y4a, -k1 * y4b + c1

    sixth = h / 6.0
    a = 1.0 + sixth * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
    b = sixth * (k1b + 2.0 * k2b + 2.0 * k3b + k4b)
    qa = sixth * (w0 * k1a + 2.0 * wm * (k2a + k3a) + w1 * k4a)
    qb = sixth * (w0 * k1b + 2.0 * wm * (k2b + k3b) + w1 * k4b)
    ia = sixth * (1.0 + 2.0 * y2a + 2.0 * y3a + y4a)
    ib = sixth * (2.0 * y2b + 2.0 * y3b + y4b)
    return a, b, qa, qb, ia, ib


def _exponential_coefficients(h, rate, k0, km, k1, c0, c1, w0, w1):
    """Exact step for u = p - p_eq with kappa frozen at the midpoint.

    u' = -kappa u - dp_eq/dt, with dp_eq/dt taken as the secant over the step.
    The heat increment is the energy change minus the work, so the discrete
    first law holds exactly here as well.
    """
    x = km * h
    decay = np.exp(-x)
    # Integrals of exp(-kappa s) and of (1 - exp(-kappa s)) / kappa over the step
    memory = -np.expm1(-x) / km
    lag = (x + np.expm1(-x)) / km**2
    pe0, pe1 = c0 / k0, c1 / k1
    drift = (pe1 - pe0) / h

    a = decay
    b = pe1 - decay * pe0 - drift * memory
    ia = memory
    ib = 0.5 * h * (pe0 + pe1) - memory * pe0 - drift * lag
    qa = w1 * a - w0 - rate * ia
    qb = w1 * b - rate * ib
    return a, b, qa, qb, ia, ib


def _step_coefficients(ramp: Ramp, contact: BathContact, n_steps: int):
    """Affine step coefficients for population, heat and integral of p.

    Returns arrays (a, b, qa, qb, ia, ib), each of length n_steps, such that
    one step from y gives y' = a y + b, heat increment qa y + qb and
    integral-of-p increment ia y + ib.
    """
    h = ramp.duration / n_steps
    omega = ramp.omega_start + (ramp.omega_end - ramp.omega_start) * (
        np.arange(2 * n_steps + 1) / (2 * n_steps)
    )
    kappa, C = _rates(omega, contact.T, contact.gamma)
    k0, km, k1 = kappa[0:-1:2], kappa[1::2], kappa[2::2]
    c0, cm, c1 = C[0:-1:2], C[1::2], C[2::2]
    w0, wm, w1 = omega[0:-1:2], omega[1::2], omega[2::2]

    coefficients = _rk4_coefficients(h, k0, km, k1, c0, cm, c1, w0, wm, w1)
    stiff = km * h > STIFF_STEP
    if not stiff.any():
        return coefficients
    logger.debug(f"{int(stiff.sum())} of {n_steps} steps use the exponential form")
    exponential = _exponential_coefficients(h, ramp.rate, k0, km, k1, c0, c1, w0, w1)
    return tuple(np.where(stiff, e, r) for e, r in zip(exponential, coefficients))


def _block_bounds(a: np.ndarray):
    """Blocks of at most _BLOCK steps whose cumulative product stays far from underflow."""
    decay = np.cumsum(-np.log(a))
    n = len(a)
    start = 0
    while start < n:
        base = decay[start - 1] if start else 0.0
        limit = int(np.searchsorted(decay, base + _BLOCK_DECAY, side="right"))
        stop = min(start + _BLOCK, n, max(limit, start + 1))
        yield start, stop
        start = stop


def _propagate(a: np.ndarray, b: np.ndarray, y0: float) -> np.ndarray:
    """Evaluate y[n+1] = a[n] y[n] + b[n] blockwise with cumulative products."""
    a = np.maximum(a, _MIN_FACTOR)
    y = np.empty(len(a) + 1)
    y[0] = y0
    for start, stop in _block_bounds(a):
        prod = np.cumprod(a[start:stop])
        y[start + 1:stop + 1] = prod * (y[start] + np.cumsum(b[start:stop] / prod))
    return y


def _run(p0: float, ramp: Ramp, contact: BathContact, n_steps: int):
    a, b, qa, qb, ia, ib = _step_coefficients(ramp, contact, n_steps)
    y = _propagate(a, b, p0)
    heat = float(np.sum(qa * y[:-1] + qb))
    work = ramp.rate * float(np.sum(ia * y[:-1] + ib))
    return y, heat, work


def integrate_stroke(
    p0: float,
    ramp: Ramp,
    contact: BathContact,
    tol: float | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> StrokeResult:
    """Integrate one stroke from excited population p0.

    The run at N steps is compared with a run at 2N steps; the finer run is
    accepted once the final populations agree to tol relative. Otherwise N
    doubles until max_steps.

    Raises:
        ParameterError: If p0 lies outside [0, 1] or tol is not positive.
        IntegratorError: If halving does not converge within max_steps.
    """
    if tol is None:
        tol = DEFAULT_TOL
    if not 0.0 <= p0 <= 1.0:
        raise ParameterError(f"Initial population must lie in [0, 1], got {p0!r}")
    if not tol > 0:
        raise ParameterError(f"Integrator tolerance must be positive, got {tol!r}")

    n_steps = default_steps(ramp, contact)
    coarse, _, _ = _run(p0, ramp, contact, n_steps)
    while True:
        fine_steps = 2 * n_steps
        if fine_steps > max_steps:
            raise IntegratorError(
                f"Step halving did not reach tol={tol:g} within {max_steps} steps "
                f"(ramp {ramp.omega_start}->{ramp.omega_end}, duration {ramp.duration:g})"
            )
        y, heat, work = _run(p0, ramp, contact, fine_steps)
        error = abs(y[-1] - coarse[-1])
        if error <= tol * abs(y[-1]) + HALVING_FLOOR:
            break
        logger.debug(f"Halving rejected at {n_steps} steps (error {error:.3e}), doubling")
        n_steps, coarse = fine_steps, y

    if not np.all((y > 0.0) & (y < 1.0)) and 0.0 < p0 < 1.0:
        logger.warning(
            f"Population left (0, 1) during stroke: min {y.min():.3e}, max {y.max():.3e}"
        )

    stride = fine_steps // (TRAJECTORY_SAMPLES - 1)
    samples = y[::stride]
    t = np.linspace(0.0, ramp.duration, TRAJECTORY_SAMPLES)
    p_end = float(y[-1])
    dS = two_level_entropy(p_end) - two_level_entropy(p0)
    logger.debug(
        f"Stroke {ramp.omega_start:g}->{ramp.omega_end:g} over {ramp.duration:g}: "
        f"{fine_steps} steps, halving error {error:.2e}"
    )
    return StrokeResult(
        t=t,
        omega=ramp.omega_at(t),
        p_e=samples,
        Q=heat,
        W_on=work,
        dS=dS,
        S_ir=dS - heat / contact.T,
        p_start=float(p0),
        p_end=p_end,
        omega_start=ramp.omega_start,
        omega_end=ramp.omega_end,
        temperature=contact.T,
        steps=fine_steps,
        error=float(error),
    )


def stroke_affine_map(ramp: Ramp, contact: BathContact, tol: float | None = None) -> AffineMap:
    """Coefficients of p_end = G p0 + H from the runs at p0 = 0 and p0 = 1.

    The p0 = 1 run reuses the step count validated for p0 = 0, so G and H
    describe one and the same discrete map.
    """
    empty = integrate_stroke(0.0, ramp, contact, tol)
    full, _, _ = _run(1.0, ramp, contact, empty.steps)
    return AffineMap(G=float(full[-1]) - empty.p_end, H=empty.p_end)
