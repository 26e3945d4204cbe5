"""Floquet-Markov master equations with thermodynamically consistent heat bookkeeping."""
from .baths import BathSpec, eval_rate, make_flat_bath, make_ohmic_bath, make_tabulated_bath
from .cli import run_scenario
from .config import ScenarioConfig, build_scenario, config_from_dict, parse_config
from .dynamics import Trajectory, evolve, limit_cycle, steady_state
from .errors import (
    AccuracyError, ConfigError, DimensionMismatch, FloquetThermoError, InvariantViolation,
    NonUniqueSteadyState, NumericalFailure, TruncationError, UnsupportedChannelError,
)
from .floquet import (
    FloquetDecomposition, Monodromy, PeriodicHamiltonian, constant_hamiltonian,
    diagonal_modulated, harmonic_decompose, monodromy, piecewise_constant, propagate,
    smooth_hamiltonian,
)
from .generators import ChannelGenerator, GeneratorBundle, build_floquet, build_static
from .qubit import (
    ModulationProfile, QubitModel, averaged_rates, build_qubit_bundle, effective_temperature,
    pq, single_harmonic_current, t_eff, xi,
)
from .thermo import ThermoReport, bath_currents, entropy_production, steady_report

__version__ = "0.1.0"
