"""Shared pytest fixtures and configuration."""

import pytest

from ftcarnot.params import INFINITE, EngineParams


# --- Engine parameters ---

@pytest.fixture
def engine_params():
    """T_h=10, T_c=9, omega 1 -> 0.9, gamma_h=1, ideal cold bath (t_r = 0.05)."""
    return EngineParams(
        T_h=10.0, T_c=9.0, gamma_h=1.0, gamma_c=INFINITE, omega_h_i=1.0, omega_h_f=0.9
    )


@pytest.fixture
def finite_engine_params():
    """Same engine with gamma_c = gamma_h = 1."""
    return EngineParams(
        T_h=10.0, T_c=9.0, gamma_h=1.0, gamma_c=1.0, omega_h_i=1.0, omega_h_f=0.9
    )


@pytest.fixture
def make_params():
    """Factory for engine parameters around the default engine."""
    def _create(**overrides):
        values = {
            "T_h": 10.0,
            "T_c": 9.0,
            "gamma_h": 1.0,
            "gamma_c": INFINITE,
            "omega_h_i": 1.0,
            "omega_h_f": 0.9,
        }
        values.update(overrides)
        return EngineParams(**values)
    return _create


@pytest.fixture
def t_r():
    """Relaxation time of the default engine."""
    return 0.05
