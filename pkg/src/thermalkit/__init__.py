"""Exact state-vector toolkit for thermalization timescales in the kicked
mixed-field Ising chain.

The package measures how fast a disordered Floquet chain loses memory at
two levels: operator spreading, through out-of-time-ordered correlators of
arbitrary order, and the emergence of Haar-distributed conditional states
on a subsystem, through moments of the projected ensemble.  Both families
of diagnostics decay exponentially toward ensemble plateaus; robust L1
line fits on the log-scale transients extract the decay rates.
"""

from .errors import (DegenerateInputError, InsufficientDataError,
                     InvalidParameterError, SizeRefusalError, ThermalkitError)
from .experiment import (ExperimentConfig, ResultBundle, parse_config,
                         run_experiment, run_rates, run_saturation,
                         sample_disorder)
from .observables import (LocalObservable, example_observable,
                          gell_mann_basis, gue_observable,
                          pauli_string_basis, tensor_power)
from .otoc import OtocRequest, f_k_batch, f_k_infinite_temperature, f_k_pure
from .projected import (MomentMatrix, conditional_decomposition, d_k,
                        d_k_haar, delta_k, delta_k_frobenius,
                        delta_k_frobenius_via_purity, delta_k_generic,
                        frame_potential, haar_frame_potential, rho_k,
                        rho_k_haar)
from .rates import (RateFit, default_window, extract_rate, lad_line_fit,
                    plateau_value, saturation_scaling_fit)
from .series import TimeSeries, mean_over_realizations
from .statevector import (ChainParams, Direction, StateVector, basis_state,
                          evolve, floquet_step, inner, norm,
                          orthogonal_family, product_state, x_polarized_state)

__version__ = "0.1.0"

__all__ = [
    "ChainParams", "DegenerateInputError", "Direction", "ExperimentConfig",
    "InsufficientDataError", "InvalidParameterError", "LocalObservable",
    "MomentMatrix", "OtocRequest", "RateFit", "ResultBundle",
    "SizeRefusalError", "StateVector", "ThermalkitError", "TimeSeries",
    "basis_state", "conditional_decomposition", "d_k", "d_k_haar",
    "default_window", "delta_k", "delta_k_frobenius",
    "delta_k_frobenius_via_purity", "delta_k_generic", "evolve",
    "example_observable", "extract_rate", "f_k_batch",
    "f_k_infinite_temperature", "f_k_pure", "floquet_step",
    "frame_potential", "gell_mann_basis", "gue_observable",
    "haar_frame_potential", "inner", "lad_line_fit",
    "mean_over_realizations", "norm", "orthogonal_family", "parse_config",
    "pauli_string_basis", "plateau_value", "product_state", "rho_k",
    "rho_k_haar", "run_experiment", "run_rates", "run_saturation",
    "sample_disorder", "saturation_scaling_fit", "tensor_power",
    "x_polarized_state",
]
