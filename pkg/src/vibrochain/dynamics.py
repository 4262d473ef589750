"""Time evolution of the reduced chain master equation.

The propagated object is the (N+1) x (N+1) density matrix over the
single-excitation basis, evolved under the explicit element equations:

  d sigma_ij/dt = [-2i(chi_i - chi_j) + 4 Gamma G_ij - kappa (d_iN + d_jN)] sigma_ij
                  - i lam [sigma_{i-1,j} + sigma_{i+1,j} - sigma_{i,j-1} - sigma_{i,j+1}]

for i, j >= 1, where the hopping shifts only run within 1..N (the ground
index 0 never hops), and chi_0 = 0 extends the same expression to row and
column 0. G is the collective-dephasing weight matrix, chi the modulated
half-splittings, and the sink term is the non-Hermitian absorber at site N.
sigma_00 is dynamically inert, and a state with empty row/column 0 stays in
the excited block for all times.

The sink removes weight instead of renormalizing: the accumulated absorption
2*kappa*integral(sigma_NN) is carried as one extra real ODE component, so
efficiency + trace is conserved exactly by construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _rk
from .chain import ChainConfig, dephasing_weights, modulation_vector

Array = np.ndarray

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
DEFAULT_SAMPLES = 2000


class PositivityWarning(UserWarning):
    """Emitted when a sampled density matrix drifts below PSD tolerance."""


# ---------------------------------------------------------------------------
# initial states


@dataclass(frozen=True)
class SingleExcitation:
    """One excitation localized on a single site (1-based index)."""

    site: int = 1


@dataclass(frozen=True)
class DonorSuperposition:
    """Equal superposition of the ground state and site-1 excitation."""


@dataclass(frozen=True)
class CustomState:
    """Arbitrary Hermitian, positive-semidefinite matrix with trace <= 1."""

    matrix: Array


InitialState = SingleExcitation | DonorSuperposition | CustomState


def initial_matrix(init: InitialState, n_sites: int) -> Array:
    dim = n_sites + 1
    if isinstance(init, SingleExcitation):
        if not 1 <= init.site <= n_sites:
            raise ValueError(f"site must be in 1..{n_sites}, got {init.site}")
        sigma = np.zeros((dim, dim), dtype=complex)
        sigma[init.site, init.site] = 1.0
        return sigma
    if isinstance(init, DonorSuperposition):
        phi = np.zeros(dim, dtype=complex)
        phi[0] = phi[1] = 1.0 / math.sqrt(2.0)
        return np.outer(phi, phi.conj())
    if isinstance(init, CustomState):
        sigma = np.asarray(init.matrix, dtype=complex)
        if sigma.shape != (dim, dim):
            raise ValueError(f"custom state must be {dim}x{dim}, got {sigma.shape}")
        if np.max(np.abs(sigma - sigma.conj().T)) > 1e-10:
            raise ValueError("custom state is not Hermitian")
        evals = np.linalg.eigvalsh(sigma)
        if evals.min() < -1e-10:
            raise ValueError(f"custom state is not PSD (min eigenvalue {evals.min():.3g})")
        if sigma.trace().real > 1.0 + 1e-12:
            raise ValueError("custom state has trace > 1")
        return sigma.copy()
    raise TypeError(f"unsupported initial state {init!r}")


# ---------------------------------------------------------------------------
# right-hand side (hand transcription of the element equations)


def master_rhs(cfg: ChainConfig, t: float, sigma: Array) -> Array:
    """Element-wise derivative of the density matrix at time t.

    Accepts stacked input of shape (..., N+1, N+1) and broadcasts. Linear in
    sigma with no conjugations, so it extends complex-linearly to arbitrary
    (non-Hermitian) matrices; on Hermitian input the output is Hermitian.
    """
    sigma = np.asarray(sigma, dtype=complex)
    dim = cfg.dim
    if sigma.shape[-2:] != (dim, dim):
        raise ValueError(f"sigma must have trailing shape ({dim}, {dim}), got {sigma.shape}")

    x = modulation_vector(cfg, t)
    coef = -2j * (x[:, None] - x[None, :])
    coef = coef + 4.0 * cfg.dephasing_rate * dephasing_weights(cfg)
    sink = np.zeros(dim)
    sink[dim - 1] = cfg.sink_rate
    coef = coef - (sink[:, None] + sink[None, :])

    out = coef * sigma
    ilam = 1j * cfg.hopping
    # hopping shifts act only within indices 1..N; index 0 does not hop
    out[..., 2:, :] -= ilam * sigma[..., 1:-1, :]
    out[..., 1:-1, :] -= ilam * sigma[..., 2:, :]
    out[..., :, 2:] += ilam * sigma[..., :, 1:-1]
    out[..., :, 1:-1] += ilam * sigma[..., :, 2:]
    return out


def absorption_rate(cfg: ChainConfig, sigma: Array) -> float:
    """Instantaneous flow into the sink, 2 * kappa * sigma_NN."""
    return 2.0 * cfg.sink_rate * sigma[-1, -1].real


# ---------------------------------------------------------------------------
# linear generator for the integrator core


def build_generator(cfg: ChainConfig) -> _rk.LinearGenerator:
    """Assemble the augmented linear generator y' = (A + sin(nu t) B) y.

    The state is the flattened density matrix plus one trailing absorption
    component. Columns are probed from :func:`master_rhs` directly: the
    equations are linear with all time dependence through sin(nu*t), so two
    evaluations per basis element determine the generator exactly.
    """
    dim = cfg.dim
    d = dim * dim
    basis = np.zeros((d, dim, dim), dtype=complex)
    basis.reshape(d, d)[np.arange(d), np.arange(d)] = 1.0

    t_zero = 0.0                            # sin(nu t) = 0
    t_quarter = 0.5 * math.pi / cfg.nu      # sin(nu t) = 1
    a_mat = master_rhs(cfg, t_zero, basis).reshape(d, d).T
    b_mat = master_rhs(cfg, t_quarter, basis).reshape(d, d).T - a_mat

    aug = np.zeros((d + 1, d + 1), dtype=complex)
    aug[:d, :d] = a_mat
    aug[d, (dim - 1) * dim + (dim - 1)] = 2.0 * cfg.sink_rate
    b_aug = np.zeros((d + 1, d + 1), dtype=complex)
    b_aug[:d, :d] = b_mat

    return _rk.LinearGenerator(
        a=sp.csr_matrix(aug),
        b=sp.csr_matrix(b_aug),
        c=_rk.empty_csr(d + 1),
        nu=cfg.nu,
        matrix_dim=dim,
    )


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Sampled record of one conditional evolution.

    populations[k, j] is sigma_jj at times[k] (index 0 = ground state), and
    coherence_0N the complex off-diagonal element between the ground state
    and the last site. ``efficiency`` accumulates the absorbed weight; its
    final entry is the transfer efficiency for the run.
    """

    times: Array
    populations: Array
    coherence_0n: Array
    trace: Array
    efficiency: Array
    final_matrix: Array
    conservation_defect: float
    min_eigenvalue: float | None
    meta: dict

    @property
    def initial_trace(self) -> float:
        return float(self.trace[0])


def integrate(
    init: InitialState | Array,
    cfg: ChainConfig,
    horizon: float,
    sampling: int = DEFAULT_SAMPLES,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    check_psd: int = 16,
    backend: str = "auto",
) -> Trajectory:
    """Propagate an initial state to time ``horizon`` and sample uniformly.

    ``sampling`` counts the uniformly spaced snapshots including both ends.
    The density matrix is re-symmetrized at every snapshot. ``check_psd``
    spot-checks positivity on that many snapshots (0 disables); violations
    beyond -1e-10 raise a PositivityWarning but do not abort the run.
    """
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    if sampling < 2:
        raise ValueError("sampling must be at least 2")
    sigma0 = init if isinstance(init, np.ndarray) else initial_matrix(init, cfg.n_sites)
    sigma0 = np.asarray(sigma0, dtype=complex)
    dim = cfg.dim
    if sigma0.shape != (dim, dim):
        raise ValueError(f"initial matrix must be {dim}x{dim}")

    gen = build_generator(cfg)
    y0 = np.concatenate([sigma0.ravel(), [0.0 + 0.0j]])
    times = np.linspace(0.0, float(horizon), int(sampling))
    samples = _rk.integrate_linear(gen, y0, times, rtol=rtol, atol=atol, backend=backend)

    mats = samples[:, : dim * dim].reshape(-1, dim, dim)
    populations = np.real(np.diagonal(mats, axis1=1, axis2=2)).copy()
    coherence = mats[:, 0, dim - 1].copy()
    trace = populations.sum(axis=1)
    efficiency = samples[:, dim * dim].real.copy()

    defect = float(np.max(np.abs(efficiency + trace - trace[0])))

    min_eig = None
    if check_psd > 0:
        idx = np.unique(np.linspace(0, len(times) - 1, min(check_psd, len(times))).astype(int))
        eigs = [np.linalg.eigvalsh(mats[k]).min() for k in idx]
        min_eig = float(min(eigs))
        # rank-deficient states pick up eigenvalue noise of order rtol, so the
        # warning floor follows the requested accuracy
        if min_eig < -max(1e-10, 20.0 * rtol):
            warnings.warn(
                f"density matrix lost positivity (min eigenvalue {min_eig:.3e})",
                PositivityWarning,
                stacklevel=2,
            )

    return Trajectory(
        times=times,
        populations=populations,
        coherence_0n=coherence,
        trace=trace,
        efficiency=efficiency,
        final_matrix=mats[-1].copy(),
        conservation_defect=defect,
        min_eigenvalue=min_eig,
        meta={"rtol": rtol, "atol": atol, "horizon": float(horizon), "sampling": int(sampling)},
    )


def transfer_efficiency(traj: Trajectory) -> float:
    """Total weight absorbed by the sink up to the end of the run."""
    return float(traj.efficiency[-1])


def coherence_magnitude(traj: Trajectory) -> Array:
    """|sigma_0N(t)| on the trajectory's sample grid."""
    return np.abs(traj.coherence_0n)
