"""Conditional cat-like state preparation on a beam splitter.

Simulation of heralded non-Gaussian states in a truncated Fock basis,
realistic photocounting models, homodyne Monte Carlo sampling, and
loss-inversion reconstruction of the heralded pure states.
"""

from .errors import (
    ConfigError,
    ImpossibleEventError,
    NumericalError,
    TruncationError,
)
from .fock import (
    FockVector,
    SqueezeParams,
    apply_annihilation,
    apply_creation,
    basis_state,
    binomial,
    hermite,
    jacobi_poly,
    legendre,
    log_factorial,
    mean_photon_number,
    squeezed_vacuum,
)
from .prepare import (
    BeamSplitterParams,
    PreparationConfig,
    TwoModeArray,
    beam_splitter_output,
    conditional_state,
    fix_global_phase,
    heralded_state,
    heralded_state_operator_form,
    normalization_constant,
    photon_count_prior,
    preparation_probability,
    vacuum_count_probability,
    vacuum_heralded_state,
    vacuum_norm_legendre,
    vacuum_norm_log,
)

__version__ = "0.1.0"
