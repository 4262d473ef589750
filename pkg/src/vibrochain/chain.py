"""Model parameters and closed-form coefficients of the driven-chain model.

The system is a linear chain of N two-level sites with nearest-neighbor
exchange, all coupled to a single damped vibrational mode that is driven at
its own frequency. Everything downstream works in the single-excitation basis
{|0>, |1>, ..., |N>}: index 0 is the shared ground state, index j >= 1 the
state with only site j excited. All quantities are dimensionless, expressed
in units of the vibrational frequency (the ``m = hbar = nu = 1`` convention,
under which the zero-point length is 1/sqrt(2)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

Array = np.ndarray

ROOT_HALF = 1.0 / math.sqrt(2.0)


def _frozen_vector(values, n: int, name: str) -> Array:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size != n:
        raise ValueError(f"{name} must be a vector of length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ChainConfig:
    """Validated parameter set for one chain + resonator instance.

    Parameters
    ----------
    n_sites : number of two-level sites (at least 2).
    omega : per-site excitation frequencies, length ``n_sites``.
    g : per-site couplings to the vibrational mode, length ``n_sites``.
    hopping : nearest-neighbor exchange rate (> 0; the transport channel).
    sink_rate : irreversible absorption rate at the last site (>= 0).
    nu : vibrational frequency (> 0; 1 in the dimensionless convention).
    q0 : zero-point length of the mode (> 0; 1/sqrt(2) by convention).
    beta0 : steady-state drive amplitude, 2 * drive / gamma (>= 0).
    gamma : vibrational damping rate (> 0).
    nbar : thermal occupation of the vibrational bath (>= 0).

    The effective dephasing rate inherited from resonator fluctuations,
    ``q0**2 * (2 * nbar + 1) / gamma``, is computed once at validation time
    and cached in ``dephasing_rate``.
    """

    n_sites: int
    omega: Array
    g: Array
    hopping: float
    sink_rate: float
    nu: float = 1.0
    q0: float = ROOT_HALF
    beta0: float = 0.0
    gamma: float = 1.0
    nbar: float = 0.0
    dephasing_rate: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = int(self.n_sites)
        if n < 2:
            raise ValueError(f"n_sites must be >= 2, got {n}")
        object.__setattr__(self, "n_sites", n)
        object.__setattr__(self, "omega", _frozen_vector(self.omega, n, "omega"))
        object.__setattr__(self, "g", _frozen_vector(self.g, n, "g"))
        for name in ("hopping", "nu", "q0", "gamma"):
            value = float(getattr(self, name))
            if not (value > 0.0) or not math.isfinite(value):
                raise ValueError(f"{name} must be strictly positive, got {value}")
            object.__setattr__(self, name, value)
        for name in ("sink_rate", "beta0", "nbar"):
            value = float(getattr(self, name))
            if value < 0.0 or not math.isfinite(value):
                raise ValueError(f"{name} must be non-negative, got {value}")
            object.__setattr__(self, name, value)
        rate = self.q0**2 * (2.0 * self.nbar + 1.0) / self.gamma
        if not math.isfinite(rate):
            raise ValueError("derived dephasing rate is not finite")
        object.__setattr__(self, "dephasing_rate", rate)

    @property
    def dim(self) -> int:
        """Dimension of the single-excitation basis, n_sites + 1."""
        return self.n_sites + 1

    def drive_amplitudes(self) -> Array:
        """Per-index modulation amplitudes 2 * g_j * beta0 * q0, with 0 at index 0."""
        amps = np.zeros(self.dim)
        amps[1:] = 2.0 * self.g * self.beta0 * self.q0
        return amps


def site_modulation(cfg: ChainConfig, site: int, t) -> float:
    """Instantaneous half-splitting of one site under the resonator drive.

    Returns omega_j / 2 - 2 * g_j * beta0 * q0 * sin(nu * t) for ``site`` j
    (1-based). Periodic in t with period 2*pi/nu; reduces to omega_j / 2
    when the drive is off.
    """
    if not 1 <= site <= cfg.n_sites:
        raise IndexError(f"site must be in 1..{cfg.n_sites}, got {site}")
    j = site - 1
    return cfg.omega[j] / 2.0 - 2.0 * cfg.g[j] * cfg.beta0 * cfg.q0 * np.sin(cfg.nu * t)


def modulation_vector(cfg: ChainConfig, t: float) -> Array:
    """Half-splittings for all basis indices 0..N at time t (0 for index 0)."""
    x = np.zeros(cfg.dim)
    x[1:] = cfg.omega / 2.0 - cfg.drive_amplitudes()[1:] * math.sin(cfg.nu * t)
    return x


def dephasing_weights(cfg: ChainConfig) -> Array:
    """Collective-dephasing weight matrix over the basis {0..N}.

    Entry (i, j) is -2 * (g_i - g_j)**2, with the ground-state coupling
    g_0 = 0. Symmetric, zero diagonal, and non-positive; for indices i, j >= 1
    only coupling differences enter, so a uniform shift of all g_j leaves
    that block unchanged.
    """
    ext = np.zeros(cfg.dim)
    ext[1:] = cfg.g
    diff = ext[:, None] - ext[None, :]
    return -2.0 * diff**2
