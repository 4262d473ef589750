"""Excitation transport along a two-level chain gated by a driven vibrational mode.

The package propagates the reduced master equation of an N-site chain whose
site energies are modulated by one damped, resonantly driven mechanical mode:
the drive shifts the energies coherently while the residual mode fluctuations
act as collective dephasing. A sink on the last site turns trace loss into a
transfer efficiency, sideband analysis predicts the drive amplitudes that
suppress transport, and a truncated chain + oscillator model cross-validates
the reduction.
"""

from .chain import ChainConfig, dephasing_weights, site_modulation
from .dynamics import (
    CustomState,
    DonorSuperposition,
    PositivityWarning,
    SingleExcitation,
    Trajectory,
    coherence_magnitude,
    integrate,
    master_rhs,
    transfer_efficiency,
)
from .experiments import (
    Beta0Grid,
    DisorderSpec,
    PhysicalParams,
    SweepResult,
    coherence_experiment,
    disorder_ensemble,
    sweep_beta0,
    unit_bridge,
)
from .fullmodel import (
    AdiabaticRegimeWarning,
    AdiabaticReport,
    FullModelConfig,
    adiabatic_check,
    displaced_rhs,
    integrate_full,
    superoperator_oracle_rhs,
)
from .resonance import ResonanceReport, analyze, bessel_j, bessel_zero
from ._rk import IntegratorError

__version__ = "0.1.0"

__all__ = [
    "AdiabaticRegimeWarning",
    "AdiabaticReport",
    "Beta0Grid",
    "ChainConfig",
    "CustomState",
    "DisorderSpec",
    "DonorSuperposition",
    "FullModelConfig",
    "IntegratorError",
    "PhysicalParams",
    "PositivityWarning",
    "ResonanceReport",
    "SingleExcitation",
    "SweepResult",
    "Trajectory",
    "adiabatic_check",
    "analyze",
    "bessel_j",
    "bessel_zero",
    "coherence_experiment",
    "coherence_magnitude",
    "dephasing_weights",
    "disorder_ensemble",
    "displaced_rhs",
    "integrate",
    "integrate_full",
    "master_rhs",
    "site_modulation",
    "superoperator_oracle_rhs",
    "sweep_beta0",
    "transfer_efficiency",
    "unit_bridge",
    "__version__",
]
