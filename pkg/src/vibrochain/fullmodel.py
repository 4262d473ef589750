"""Validation against the pre-elimination chain + oscillator model.

Two independent cross-checks of the reduced dynamics live here:

* ``superoperator_oracle_rhs`` rebuilds the reduced master equation from
  generic operator products (effective Hamiltonian with the non-Hermitian
  sink, plus the collective dephasing dissipator applied by matrix
  multiplication). It shares no index bookkeeping with the element-wise
  transcription in :mod:`vibrochain.dynamics`, which makes it the guard
  against transcription errors.

* The displaced-frame model evolves the joint chain + oscillator density
  matrix on a truncated number basis, with the drive removed by the
  steady-state displacement. Tracing out the oscillator and comparing with
  the reduced propagation validates the adiabatic elimination in its regime
  (damping fast compared to hopping and to the coupling energy).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _rk
from .chain import ChainConfig, modulation_vector
from .dynamics import InitialState, Trajectory, initial_matrix, integrate

Array = np.ndarray

THERMAL_TAIL_LIMIT = 1e-6


# ---------------------------------------------------------------------------
# electronic operators restricted to the single-excitation basis


def site_sz(n_sites: int, site: int) -> Array:
    """sigma_z of one site in the basis {|0>, |1>, ..., |N>}: +1 where that
    site is excited, -1 everywhere else (including the ground state)."""
    diag = -np.ones(n_sites + 1)
    diag[site] = 1.0
    return np.diag(diag)


def collective_sz(cfg: ChainConfig) -> Array:
    """Coupling-weighted sum of all site sigma_z operators."""
    total = np.zeros((cfg.dim, cfg.dim))
    for j in range(1, cfg.n_sites + 1):
        total += cfg.g[j - 1] * site_sz(cfg.n_sites, j)
    return total


def hop_operator(n_sites: int) -> Array:
    """Nearest-neighbor exchange restricted to the basis: |j><j+1| + h.c."""
    dim = n_sites + 1
    op = np.zeros((dim, dim))
    for j in range(1, n_sites):
        op[j, j + 1] = 1.0
        op[j + 1, j] = 1.0
    return op


def effective_hamiltonian(cfg: ChainConfig, t: float) -> Array:
    """Modulated chain Hamiltonian at time t (Hermitian part, no sink)."""
    x = modulation_vector(cfg, t)
    h = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for j in range(1, cfg.n_sites + 1):
        h += x[j] * site_sz(cfg.n_sites, j)
    h += cfg.hopping * hop_operator(cfg.n_sites)
    return h


def superoperator_oracle_rhs(cfg: ChainConfig, t: float, sigma: Array) -> Array:
    """Reduced-equation derivative assembled from operator products only."""
    sigma = np.asarray(sigma, dtype=complex)
    dim = cfg.dim
    if sigma.shape != (dim, dim):
        raise ValueError(f"sigma must be {dim}x{dim}")
    sink = np.zeros((dim, dim), dtype=complex)
    sink[dim - 1, dim - 1] = cfg.sink_rate
    h_nh = effective_hamiltonian(cfg, t) - 1j * sink
    sz = collective_sz(cfg).astype(complex)
    sz2 = sz @ sz
    out = -1j * (h_nh @ sigma - sigma @ h_nh.conj().T)
    out += 4.0 * cfg.dephasing_rate * (sz @ sigma @ sz - 0.5 * (sz2 @ sigma + sigma @ sz2))
    return out


# ---------------------------------------------------------------------------
# joint model configuration


def thermal_tail_mass(nbar: float, n_fock: int) -> float:
    """Thermal weight left above the truncation, (nbar/(nbar+1))**n_fock."""
    if nbar == 0.0:
        return 0.0
    return (nbar / (nbar + 1.0)) ** n_fock


def minimal_fock_dim(nbar: float, tail: float = THERMAL_TAIL_LIMIT) -> int:
    """Smallest truncation whose thermal tail mass is below ``tail``."""
    if nbar == 0.0:
        return 1
    return int(math.ceil(math.log(tail) / math.log(nbar / (nbar + 1.0))))


@dataclass(frozen=True)
class FullModelConfig:
    """Chain parameters plus drive amplitude and oscillator truncation.

    The displaced frame assumes the steady-state amplitude beta0 = 2*epsilon/gamma,
    so the two fields must agree; the Fock-space truncation must leave less
    than 1e-6 of the thermal occupation above it.
    """

    chain: ChainConfig
    epsilon: float
    n_fock: int

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.n_fock < 1:
            raise ValueError("n_fock must be at least 1")
        implied = 2.0 * self.epsilon / self.chain.gamma
        if abs(self.chain.beta0 - implied) > 1e-12:
            raise ValueError(
                f"beta0={self.chain.beta0} inconsistent with 2*epsilon/gamma={implied}")
        tail = thermal_tail_mass(self.chain.nbar, self.n_fock)
        if tail >= THERMAL_TAIL_LIMIT:
            raise ValueError(
                f"thermal tail mass {tail:.3g} at n_fock={self.n_fock} exceeds "
                f"{THERMAL_TAIL_LIMIT:g}; need n_fock >= "
                f"{minimal_fock_dim(self.chain.nbar)}")

    @property
    def joint_dim(self) -> int:
        return self.chain.dim * self.n_fock


def lowering_operator(n_fock: int) -> Array:
    return np.diag(np.sqrt(np.arange(1, n_fock)), k=1)


def thermal_occupations(nbar: float, n_fock: int) -> Array:
    """Truncated, renormalized thermal number distribution."""
    if nbar == 0.0:
        p = np.zeros(n_fock)
        p[0] = 1.0
        return p
    n = np.arange(n_fock)
    p = (nbar / (nbar + 1.0)) ** n / (nbar + 1.0)
    return p / p.sum()


def joint_initial_state(fcfg: FullModelConfig, init: InitialState | Array) -> Array:
    """Electronic initial state times the thermal oscillator state."""
    sigma = init if isinstance(init, np.ndarray) else initial_matrix(init, fcfg.chain.n_sites)
    rho_b = np.diag(thermal_occupations(fcfg.chain.nbar, fcfg.n_fock)).astype(complex)
    return np.kron(np.asarray(sigma, dtype=complex), rho_b)


# ---------------------------------------------------------------------------
# displaced-frame right-hand side (readable, dense reference form)


def _joint_hamiltonian_parts(fcfg: FullModelConfig):
    cfg = fcfg.chain
    nf = fcfg.n_fock
    eye_b = np.eye(nf)
    a = lowering_operator(nf)
    x_b = a + a.T          # a + a^dagger
    p_b = 1j * (a.T - a)   # i (a^dagger - a)
    sz = collective_sz(cfg)

    # static electronic part: bare splittings + hopping (no drive)
    h_el = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for j in range(1, cfg.n_sites + 1):
        h_el += (cfg.omega[j - 1] / 2.0) * site_sz(cfg.n_sites, j)
    h_el += cfg.hopping * hop_operator(cfg.n_sites)
    h_static = np.kron(h_el, eye_b)

    h_cos = cfg.q0 * np.kron(sz, x_b)
    h_sin = cfg.q0 * np.kron(sz, p_b) - 2.0 * cfg.q0 * cfg.beta0 * np.kron(sz, eye_b)
    return h_static, h_sin, h_cos


def displaced_rhs(fcfg: FullModelConfig, t: float, rho: Array) -> Array:
    """Joint-state derivative in the displaced frame at time t.

    Sum of the modulated chain Hamiltonian (the displacement turns the drive
    into a sin(nu t) shift of the collective sigma_z), the residual
    chain-oscillator coupling rotating at the mode frequency, the thermal
    damping of the oscillator, and the conditional sink on the last site.
    """
    rho = np.asarray(rho, dtype=complex)
    d = fcfg.joint_dim
    if rho.shape != (d, d):
        raise ValueError(f"joint state must be {d}x{d}, got {rho.shape}")
    cfg = fcfg.chain
    nf = fcfg.n_fock

    h_static, h_sin, h_cos = _joint_hamiltonian_parts(fcfg)
    h = h_static + math.sin(cfg.nu * t) * h_sin + math.cos(cfg.nu * t) * h_cos
    out = -1j * (h @ rho - rho @ h)

    proj = np.zeros((cfg.dim, cfg.dim))
    proj[cfg.dim - 1, cfg.dim - 1] = 1.0
    p_joint = np.kron(proj, np.eye(nf))
    out -= cfg.sink_rate * (p_joint @ rho + rho @ p_joint)

    a_j = np.kron(np.eye(cfg.dim), lowering_operator(nf)).astype(complex)
    ad_j = a_j.conj().T
    down = cfg.gamma * (cfg.nbar + 1.0)
    up = cfg.gamma * cfg.nbar
    out += down * (a_j @ rho @ ad_j - 0.5 * (ad_j @ a_j @ rho + rho @ ad_j @ a_j))
    if up > 0.0:
        out += up * (ad_j @ rho @ a_j - 0.5 * (a_j @ ad_j @ rho + rho @ a_j @ ad_j))
    return out


# ---------------------------------------------------------------------------
# sparse superoperator assembly for integration


def _spre(op) -> sp.csr_matrix:
    op = sp.csr_matrix(op, dtype=np.complex128)
    return sp.kron(op, sp.identity(op.shape[0], format="csr"), format="csr")


def _spost(op) -> sp.csr_matrix:
    op = sp.csr_matrix(op, dtype=np.complex128)
    return sp.kron(sp.identity(op.shape[0], format="csr"), op.T, format="csr")


def _sandwich(left, right) -> sp.csr_matrix:
    """Superoperator of rho -> left @ rho @ right (row-major flattening)."""
    left = sp.csr_matrix(left, dtype=np.complex128)
    right = sp.csr_matrix(right, dtype=np.complex128)
    return sp.kron(left, right.T, format="csr")


def _dissipator(op) -> sp.csr_matrix:
    op = sp.csr_matrix(op, dtype=np.complex128)
    opd = op.conj().T.tocsr()
    opdop = (opd @ op).tocsr()
    return _sandwich(op, opd) - 0.5 * (_spre(opdop) + _spost(opdop))


def build_full_generator(fcfg: FullModelConfig) -> _rk.LinearGenerator:
    """Augmented superoperator form of :func:`displaced_rhs` plus absorption."""
    cfg = fcfg.chain
    nf = fcfg.n_fock
    d = fcfg.joint_dim

    h_static, h_sin, h_cos = _joint_hamiltonian_parts(fcfg)

    def commutator(h):
        return -1j * (_spre(h) - _spost(h))

    a_mat = commutator(h_static)
    proj = np.zeros((cfg.dim, cfg.dim))
    proj[cfg.dim - 1, cfg.dim - 1] = 1.0
    p_joint = np.kron(proj, np.eye(nf))
    a_mat = a_mat - cfg.sink_rate * (_spre(p_joint) + _spost(p_joint))
    a_j = np.kron(np.eye(cfg.dim), lowering_operator(nf))
    a_mat = a_mat + cfg.gamma * (cfg.nbar + 1.0) * _dissipator(a_j)
    if cfg.nbar > 0.0:
        a_mat = a_mat + cfg.gamma * cfg.nbar * _dissipator(a_j.T)

    b_mat = commutator(h_sin)
    c_mat = commutator(h_cos)

    # absorption accumulator: 2*kappa * sum_b rho[(N,b),(N,b)]
    n2 = d * d
    aug_a = sp.lil_matrix((n2 + 1, n2 + 1), dtype=np.complex128)
    aug_a[:n2, :n2] = a_mat
    for b in range(nf):
        k = (cfg.dim - 1) * nf + b
        aug_a[n2, k * d + k] = 2.0 * cfg.sink_rate
    pad = sp.csr_matrix((n2 + 1, n2 + 1), dtype=np.complex128)

    def padded(mat):
        out = sp.lil_matrix((n2 + 1, n2 + 1), dtype=np.complex128)
        out[:n2, :n2] = mat
        return out.tocsr()

    return _rk.LinearGenerator(
        a=aug_a.tocsr(),
        b=padded(b_mat),
        c=padded(c_mat),
        nu=cfg.nu,
        matrix_dim=d,
    )


# ---------------------------------------------------------------------------
# joint trajectories and the adiabatic cross-check


@dataclass
class FullTrajectory:
    """Boson-traced record of a displaced-frame evolution."""

    times: Array
    electronic: Array         # boson-traced matrices, shape (samples, N+1, N+1)
    populations: Array        # electronic populations, shape (samples, N+1)
    coherence_0n: Array
    trace: Array
    efficiency: Array
    boson_occupation: Array
    conservation_defect: float


class AdiabaticRegimeWarning(UserWarning):
    """Damping is not fast enough for a clean adiabatic elimination."""


def regime_threshold(cfg: ChainConfig) -> float:
    return 10.0 * max(cfg.hopping, float(np.max(np.abs(cfg.g))) * cfg.q0)


def integrate_full(
    fcfg: FullModelConfig,
    init: InitialState | Array,
    horizon: float,
    sampling: int = 201,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    backend: str = "auto",
) -> FullTrajectory:
    """Propagate the joint state and return boson-traced observables."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    cfg = fcfg.chain
    nf = fcfg.n_fock
    d = fcfg.joint_dim
    rho0 = joint_initial_state(fcfg, init)
    gen = build_full_generator(fcfg)
    y0 = np.concatenate([rho0.ravel(), [0.0 + 0.0j]])
    times = np.linspace(0.0, float(horizon), int(sampling))
    samples = _rk.integrate_linear(gen, y0, times, rtol=rtol, atol=atol, backend=backend)

    mats = samples[:, : d * d].reshape(-1, cfg.dim, nf, cfg.dim, nf)
    electronic = np.einsum("sibjb->sij", mats)
    populations = np.real(np.einsum("sibib->si", mats))
    occupation = np.real(np.einsum("sibib,b->s", mats, np.arange(nf, dtype=float)))
    trace = populations.sum(axis=1)
    efficiency = samples[:, d * d].real.copy()
    coherence = electronic[:, 0, cfg.dim - 1].copy()

    defect = float(np.max(np.abs(efficiency + trace - trace[0])))
    return FullTrajectory(
        times=times,
        electronic=electronic,
        populations=populations,
        coherence_0n=coherence,
        trace=trace,
        efficiency=efficiency,
        boson_occupation=occupation,
        conservation_defect=defect,
    )


@dataclass
class AdiabaticReport:
    """Deviation metrics between the joint model and the reduced dynamics."""

    rms_population_deviation: float
    max_coherence_deviation: float
    regime_ok: bool
    damping: float
    damping_threshold: float
    times: Array
    populations_full: Array
    populations_reduced: Array
    coherence_full: Array
    coherence_reduced: Array

    def within(self, rms_tol: float = 0.05) -> bool:
        return self.rms_population_deviation <= rms_tol


def adiabatic_check(
    fcfg: FullModelConfig,
    init: InitialState | Array = None,
    horizon: float = 100.0,
    sampling: int = 201,
    rtol: float = 1e-8,
    atol: float = 1e-10,
) -> AdiabaticReport:
    """Integrate both models on a shared grid and report their deviation."""
    from .dynamics import SingleExcitation

    if init is None:
        init = SingleExcitation(1)
    cfg = fcfg.chain
    threshold = regime_threshold(cfg)
    regime_ok = cfg.gamma >= threshold
    if not regime_ok:
        warnings.warn(
            f"damping {cfg.gamma:g} below adiabatic threshold {threshold:g}; "
            "the elimination is not expected to hold",
            AdiabaticRegimeWarning,
            stacklevel=2,
        )

    full = integrate_full(fcfg, init, horizon, sampling, rtol=rtol, atol=atol)
    reduced: Trajectory = integrate(init, cfg, horizon, sampling, rtol=rtol, atol=atol,
                                    check_psd=0)
    dev = full.populations - reduced.populations
    rms = float(np.sqrt(np.mean(dev**2)))
    max_coh = float(np.max(np.abs(np.abs(full.coherence_0n) - np.abs(reduced.coherence_0n))))
    return AdiabaticReport(
        rms_population_deviation=rms,
        max_coherence_deviation=max_coh,
        regime_ok=regime_ok,
        damping=cfg.gamma,
        damping_threshold=threshold,
        times=full.times,
        populations_full=full.populations,
        populations_reduced=reduced.populations,
        coherence_full=np.abs(full.coherence_0n),
        coherence_reduced=np.abs(reduced.coherence_0n),
    )


def fit_decay_rate(times: Array, values: Array, t_min: float = 0.0) -> float:
    """Least-squares exponential decay rate of |values| on [t_min, end]."""
    mask = (times >= t_min) & (np.abs(values) > 0)
    if mask.sum() < 4:
        raise ValueError("not enough points to fit a decay rate")
    slope = np.polyfit(times[mask], np.log(np.abs(values[mask])), 1)[0]
    return -float(slope)
