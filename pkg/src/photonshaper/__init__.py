"""Shaped single-photon emission from driven atom-cavity systems.

Design the classical drive that makes a one-sided cavity, coupled to
Lorentzian (finite-memory) output channels, emit single-photon
wavepackets of prescribed temporal shape; verify the designs by forward
simulation against independent references; and chain driven nodes into
a cascaded network.
"""

from .baths import BathKind, BathModel, EnvironmentSpec, markovian_limits, memory_F, response_k, spectral_density
from .core import ComplexSignal, SystemParams, TimeGrid, convolve_exponential, differentiate, quadrature
from .design import (
    DesignError,
    DesignResult,
    design_drive_general,
    design_drive_markovian,
    design_drive_real_target,
    design_drive_resonant,
    population_rho_c,
    reconstruct_beta_a,
    reconstruct_beta_b,
)
from .multienv import (
    MultiEnvPlan,
    WidthSolveReport,
    beta_b_chain_check,
    equality_conditions,
    gamma_from_weights_markovian,
    gamma_from_weights_nonmarkovian_sin3,
    markovian_siblings,
    series_expansion,
    sibling_closed_form_sin3,
    sibling_wavepacket,
    solve_widths,
    width_constraint_residual,
)
from .network import (
    NetworkSpec,
    NodeSpec,
    NodeTrajectory,
    network_norm_audit,
    simulate_cascade,
    simulate_receiving_node,
    simulate_sending_node,
)
from .simulate import (
    AmplitudeTrajectory,
    ChannelFields,
    DiscretizedBathConfig,
    IntegrationError,
    norm_audit,
    output_fields,
    simulate_discretized_bath,
    simulate_markovian,
    simulate_nonmarkovian,
)
from .wavepackets import (
    AdmissibilityReport,
    NormalizationConstants,
    WavepacketSpec,
    check_admissible,
    evaluate,
    normalization_constant,
    paper_constants,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
