"""Sample-by-sample uncertainty mode decomposition of real-valued time series.

The information potential field of past samples is given a quantum
description; its wave-function is projected through even Hermite
polynomials and each projection yields a non-negative potential per sample.
"""

from .errors import ConfigError, DomainError, IntegrationError, NumericalError
from .kernel import (
    KernelConfig,
    Signal,
    gaussian_kernel,
    information_potential,
    ipf,
    parzen_scale,
    renyi_quadratic_entropy,
)
from .wavefunction import (
    ModeSpec,
    PsiEval,
    hermite_normalized,
    hermite_sequence,
    mode_wavefunction,
    psi_eval,
)
from .engine import (
    DecompositionTrace,
    EngineConfig,
    ModeState,
    causal_field,
    decompose_stream,
    eigen_update,
    ground_state_energy,
    mode_average,
    spatial_qipf,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "IntegrationError",
    "NumericalError",
    "KernelConfig",
    "Signal",
    "gaussian_kernel",
    "information_potential",
    "ipf",
    "parzen_scale",
    "renyi_quadratic_entropy",
    "ModeSpec",
    "PsiEval",
    "hermite_normalized",
    "hermite_sequence",
    "mode_wavefunction",
    "psi_eval",
    "DecompositionTrace",
    "EngineConfig",
    "ModeState",
    "causal_field",
    "decompose_stream",
    "eigen_update",
    "ground_state_energy",
    "mode_average",
    "spatial_qipf",
]
