"""Drive-amplitude sweeps, disorder ensembles, coherence runs, unit bridge.

All randomness is owned here and is reproducible by construction: each
disorder realization draws its Gaussian site values from a child generator
seeded by (master_seed, realization_index), with sites filled in order
1..N. Results are reduced in realization order, so the worker count changes
wall-clock time only, never the output.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import hbar as HBAR

from .chain import ChainConfig
from .dynamics import InitialState, SingleExcitation, integrate

Array = np.ndarray

SWEEP_SAMPLING = 32  # sweeps only need the final absorbed weight

DISORDER_TARGETS = ("frequencies", "couplings")


@dataclass(frozen=True)
class DisorderSpec:
    """Gaussian site disorder: which vector is randomized and how."""

    target: str                 # "frequencies" or "couplings"
    means: Array
    std: float
    n_realizations: int
    master_seed: int

    def __post_init__(self):
        if self.target not in DISORDER_TARGETS:
            raise ValueError(f"target must be one of {DISORDER_TARGETS}, got {self.target!r}")
        means = np.asarray(self.means, dtype=float).copy()
        if means.ndim != 1:
            raise ValueError("means must be a vector")
        means.flags.writeable = False
        object.__setattr__(self, "means", means)
        if self.std < 0:
            raise ValueError("std must be non-negative")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        object.__setattr__(self, "master_seed", int(self.master_seed))


def realization_values(spec: DisorderSpec, index: int) -> Array:
    """Per-site draws for one realization; bit-reproducible from the seeds."""
    seq = np.random.SeedSequence(entropy=spec.master_seed, spawn_key=(index,))
    rng = np.random.default_rng(seq)
    return rng.normal(loc=spec.means, scale=spec.std)


def realization_config(cfg: ChainConfig, spec: DisorderSpec, index: int) -> ChainConfig:
    """Chain with the disordered vector of one realization substituted in."""
    if spec.means.size != cfg.n_sites:
        raise ValueError(f"means must have length {cfg.n_sites}")
    values = realization_values(spec, index)
    if spec.target == "frequencies":
        return replace(cfg, omega=values)
    return replace(cfg, g=values)


@dataclass
class SweepResult:
    """Efficiency versus drive amplitude, with the no-oscillator reference."""

    beta0: Array
    efficiency: Array
    stderr: Array | None
    baseline: float
    meta: dict


@dataclass(frozen=True)
class Beta0Grid:
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.steps < 2:
            raise ValueError("grid needs at least 2 steps")
        if not self.stop > self.start:
            raise ValueError("grid stop must exceed start")

    def values(self) -> Array:
        return np.linspace(self.start, self.stop, self.steps)


FIG1_GRID = Beta0Grid(0.0, 3.0, 121)      # resolves dips of width ~0.1
WIDE_GRID = Beta0Grid(0.0, 100.0, 201)    # weak-coupling regime, dips ~3 wide


def _run_map(fn, items, workers: int):
    """Order-preserving map, threaded when workers > 1.

    The integrator core releases the GIL, so threads scale; results are
    collected in submission order regardless of completion order.
    """
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def no_oscillator_baseline(
    cfg: ChainConfig,
    init: InitialState = SingleExcitation(1),
    horizon: float = 300.0,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> float:
    """Efficiency of the same chain with every site decoupled from the mode."""
    bare = replace(cfg, g=np.zeros(cfg.n_sites), beta0=0.0)
    traj = integrate(init, bare, horizon, sampling=SWEEP_SAMPLING,
                     rtol=rtol, atol=atol, check_psd=0)
    return float(traj.efficiency[-1])


def sweep_beta0(
    cfg: ChainConfig,
    grid: Beta0Grid = FIG1_GRID,
    init: InitialState = SingleExcitation(1),
    horizon: float = 300.0,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    workers: int = 1,
) -> SweepResult:
    """One integration per grid amplitude plus the decoupled reference."""
    values = grid.values()

    def one(beta0: float) -> float:
        traj = integrate(init, replace(cfg, beta0=float(beta0)), horizon,
                         sampling=SWEEP_SAMPLING, rtol=rtol, atol=atol, check_psd=0)
        return float(traj.efficiency[-1])

    eff = np.array(_run_map(one, values, workers))
    baseline = no_oscillator_baseline(cfg, init, horizon, rtol, atol)
    return SweepResult(
        beta0=values,
        efficiency=eff,
        stderr=None,
        baseline=baseline,
        meta={"horizon": horizon, "rtol": rtol, "atol": atol, "workers": workers},
    )


def disorder_ensemble(
    cfg: ChainConfig,
    spec: DisorderSpec,
    grid: Beta0Grid = FIG1_GRID,
    init: InitialState = SingleExcitation(1),
    horizon: float = 300.0,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    workers: int = 1,
) -> SweepResult:
    """Mean efficiency curve over seeded disorder realizations.

    Every (realization, amplitude) pair is an independent integration; a
    failure in any of them aborts the whole run rather than averaging a
    partial ensemble. The standard error is the sample one, zero when a
    single realization is requested.
    """
    values = grid.values()
    n_r = spec.n_realizations
    configs = [realization_config(cfg, spec, r) for r in range(n_r)]
    tasks = [(r, b) for r in range(n_r) for b in range(values.size)]

    def one(task) -> float:
        r, b = task
        traj = integrate(init, replace(configs[r], beta0=float(values[b])), horizon,
                         sampling=SWEEP_SAMPLING, rtol=rtol, atol=atol, check_psd=0)
        return float(traj.efficiency[-1])

    flat = np.array(_run_map(one, tasks, workers)).reshape(n_r, values.size)
    mean = flat.mean(axis=0)
    if n_r > 1:
        stderr = flat.std(axis=0, ddof=1) / math.sqrt(n_r)
    else:
        stderr = np.zeros(values.size)
    baseline = no_oscillator_baseline(cfg, init, horizon, rtol, atol)
    return SweepResult(
        beta0=values,
        efficiency=mean,
        stderr=stderr,
        baseline=baseline,
        meta={
            "horizon": horizon, "rtol": rtol, "atol": atol, "workers": workers,
            "target": spec.target, "std": spec.std,
            "n_realizations": n_r, "master_seed": spec.master_seed,
        },
    )


def coherence_experiment(
    cfg_vibration: ChainConfig,
    cfg_reference: ChainConfig | None = None,
    horizon: float = 50.0,
    sampling: int = 2000,
    rtol: float = 1e-8,
    atol: float = 1e-10,
):
    """Donor-superposition coherence |sigma_0N(t)| with and without the mode.

    The reference defaults to the same chain with all couplings zeroed; an
    explicit reference must share the chain geometry (N, omega, hopping,
    sink), otherwise the comparison is meaningless and is rejected.
    Returns (times, with_vibration, without_vibration).
    """
    from .dynamics import DonorSuperposition, coherence_magnitude

    if cfg_reference is None:
        cfg_reference = replace(cfg_vibration, g=np.zeros(cfg_vibration.n_sites), beta0=0.0)
    same = (
        cfg_reference.n_sites == cfg_vibration.n_sites
        and np.array_equal(cfg_reference.omega, cfg_vibration.omega)
        and cfg_reference.hopping == cfg_vibration.hopping
        and cfg_reference.sink_rate == cfg_vibration.sink_rate
    )
    if not same:
        raise ValueError("reference chain must share N, omega, hopping and sink_rate")
    init = DonorSuperposition()
    on = integrate(init, cfg_vibration, horizon, sampling, rtol=rtol, atol=atol, check_psd=0)
    off = integrate(init, cfg_reference, horizon, sampling, rtol=rtol, atol=atol, check_psd=0)
    return on.times, coherence_magnitude(on), coherence_magnitude(off)


# ---------------------------------------------------------------------------
# physical-units bridge


@dataclass(frozen=True)
class PhysicalParams:
    """Device-level numbers for a beam-resonator realization."""

    eta: float                 # dimensionless strain coupling per site
    mass_kg: float
    frequency: float           # vibrational angular frequency, s^-1
    quality_factor: float
    length_m: float | None = None
    width_m: float | None = None
    depth_m: float | None = None
    site_energy_ev: float | None = None
    hopping_ratio: float | None = None   # hopping / site energy

    def __post_init__(self):
        for name in ("eta", "mass_kg", "frequency", "quality_factor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("length_m", "width_m", "depth_m", "site_energy_ev", "hopping_ratio"):
            value = getattr(self, name)
            if value is not None and not value > 0:
                raise ValueError(f"{name} must be positive when given")


@dataclass(frozen=True)
class UnitBridgeResult:
    """Model-unit fragment derived from device parameters.

    ``g_model`` is the site-resonator coupling in units of the mode frequency
    (eta/2 under the dimensionless convention), ``coupling_rate`` the same
    energy scale in s^-1, ``q0_m`` the zero-point length, and ``gamma_si``
    the damping implied by the quality factor. ``adiabaticity`` is the
    coupling-to-damping ratio; at or below order one the oscillator is damped
    fast compared to the coherent coupling (the weak-coupling regime in which
    the mode can be eliminated).
    """

    q0_m: float
    coupling_rate: float       # s^-1
    g_model: float             # units of nu
    gamma_si: float            # s^-1
    gamma_model: float         # units of nu
    nu: float                  # s^-1, echoed input
    adiabaticity: float
    weak_coupling: bool


def unit_bridge(phys: PhysicalParams) -> UnitBridgeResult:
    """Convert device parameters to the dimensionless model fragment.

    q0 = sqrt(hbar / (2 m nu)), coupling energy hbar*nu*eta/2 (so eta/2 in
    mode-frequency units), damping nu/Q. The adiabaticity figure is the
    coupling rate over the damping rate.
    """
    q0_m = math.sqrt(HBAR / (2.0 * phys.mass_kg * phys.frequency))
    coupling_rate = phys.frequency * phys.eta / 2.0
    gamma_si = phys.frequency / phys.quality_factor
    adiabaticity = coupling_rate / gamma_si
    return UnitBridgeResult(
        q0_m=q0_m,
        coupling_rate=coupling_rate,
        g_model=phys.eta / 2.0,
        gamma_si=gamma_si,
        gamma_model=1.0 / phys.quality_factor,
        nu=phys.frequency,
        adiabaticity=adiabaticity,
        weak_coupling=adiabaticity <= 10.0,
    )
