"""Equilibrium reduced states and master-equation dynamics of weakly and strongly coupled open quantum systems."""

from .bath import (
    BathCoefficientTable,
    DiscreteBath,
    DrudeLorentzBath,
    c_hat,
    g_coeff,
    gamma_half_fourier,
    reorg_moments,
    s_function,
)
from .errors import (
    ConvergenceError,
    DegeneracyError,
    MeanForceError,
    NotHermitianError,
    NotPositiveError,
    ResonanceError,
    ValidityGateError,
)
from .exact import SingleOscillatorModel, exact_equilibrium, exact_hmf, exact_mean_force_state
from .heom import build_hierarchy, converge_depth, propagate_heom
from .master_eq import Trajectory, build_redfield, propagate, reference_hamiltonian, secularize, steady_state
from .mean_force import (
    hmf_exponential,
    hmf_from_reduced_numerator,
    hmf_high_temperature,
    hmf_weak,
    mfg_numerator,
    mfg_weak,
    state_from_hmf,
)
from .operators import (
    bohr_decompose,
    gibbs_state,
    partial_trace_bath,
    spectral_decompose,
    trace_distance,
)

__version__ = "0.1.0"
