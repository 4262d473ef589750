"""Sideband-resonance analysis of the driven chain.

Phase modulation of the site energies writes sidebands onto each bond: when
the frequency difference across bond j is an integer multiple n of the mode
frequency, hopping is restored resonantly with weight J_n(4 * dg_j * beta0 *
q0 / nu). Zeros of that Bessel factor therefore pin drive amplitudes at which
transport across the bond is suppressed; this module computes the detunings,
the matching orders, and those suppression amplitudes.

Bessel functions of the first kind are evaluated with the ascending power
series at small argument and Miller's backward recurrence with the even-order
normalization sum elsewhere; zeros are bracketed by a forward scan seeded
with the McMahon asymptotic estimate and polished by bisection/secant steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .chain import ChainConfig

SERIES_CUTOFF = 10.0
ZERO_TOL = 1e-12


def _bessel_series(n: int, x: float) -> float:
    # ascending series sum_k (-1)^k (x/2)^(n+2k) / (k! (n+k)!)
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    half = 0.5 * x
    log_t0 = n * math.log(half) - math.lgamma(n + 1.0)
    if log_t0 < -745.0:  # below double underflow
        return 0.0
    term = math.exp(log_t0)
    total = term
    q = half * half
    for k in range(1, 400):
        term *= -q / (k * (n + k))
        total += term
        if abs(term) < 1e-18 * max(1.0, abs(total)):
            break
    return total


def _bessel_miller(n: int, x: float) -> float:
    # backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalized with
    # J_0 + 2 sum_k J_{2k} = 1; the start order trades accuracy for work
    m_start = int(max(n, x) + 1.5 * x ** 0.5 + 40)
    if m_start % 2 == 1:
        m_start += 1
    jp = 0.0
    jc = 1e-30
    norm = 0.0
    result = 0.0
    for k in range(m_start, 0, -1):
        jm = (2.0 * k / x) * jc - jp
        jp = jc
        jc = jm
        if abs(jc) > 1e250:  # rescale to avoid overflow
            jc *= 1e-250
            jp *= 1e-250
            norm *= 1e-250
            result *= 1e-250
        if k % 2 == 1:  # jp now holds J_{k}, odd k skipped in the sum
            pass
        else:
            norm += 2.0 * jp
        if k - 1 == n:
            result = jc
    norm += jc  # jc is J_0
    if n == 0:
        result = jc
    return result / norm


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind, |error| <= 1e-12 for |x| <= 200.

    Negative orders use J_{-n} = (-1)^n J_n, negative arguments
    J_n(-x) = (-1)^n J_n(x).
    """
    n = int(order)
    sign = 1.0
    if n < 0:
        n = -n
        if n % 2 == 1:
            sign = -sign
    if x < 0.0:
        x = -x
        if n % 2 == 1:
            sign = -sign
    if x <= SERIES_CUTOFF:
        return sign * _bessel_series(n, x)
    return sign * _bessel_miller(n, x)


def _mcmahon_estimate(n: int, k: int) -> float:
    # large-k asymptotics of the k-th positive zero of J_n
    beta = (k + 0.5 * n - 0.25) * math.pi
    mu = 4.0 * n * n
    return (
        beta
        - (mu - 1.0) / (8.0 * beta)
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * (8.0 * beta) ** 3)
    )


@lru_cache(maxsize=None)
def bessel_zero(order: int, k: int) -> float:
    """k-th positive zero of J_order (k >= 1), accurate to 1e-9 or better."""
    n = abs(int(order))
    if k < 1:
        raise ValueError("zero index k must be >= 1")
    if k > 1:
        lo = bessel_zero(n, k - 1) + 0.05
    else:
        # J_n > 0 on (0, j_{n,1}); start past the turning point for large n
        lo = max(n + 0.1, 0.1)
    f_lo = bessel_j(n, lo)
    est = _mcmahon_estimate(n, k)
    step = 0.25 if est <= lo else min(0.25, max(0.05, (est - lo) / 8.0))
    hi = lo + step
    while bessel_j(n, hi) * f_lo > 0.0:
        lo = hi
        f_lo = bessel_j(n, lo)
        hi += step
        if hi > 1e6:
            raise RuntimeError(f"failed to bracket zero ({n}, {k})")
    # bisection to a tight bracket, then secant polish
    f_hi = bessel_j(n, hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        f_mid = bessel_j(n, mid)
        if f_lo * f_mid <= 0.0:
            hi, f_hi = mid, f_mid
        else:
            lo, f_lo = mid, f_mid
        if hi - lo < ZERO_TOL:
            break
    root = 0.5 * (lo + hi)
    for _ in range(3):
        f0 = bessel_j(n, root)
        df = 0.5 * (bessel_j(n - 1, root) - bessel_j(n + 1, root)) if n > 0 else -bessel_j(1, root)
        if df == 0.0:
            break
        root -= f0 / df
    return root


# ---------------------------------------------------------------------------
# per-bond report


@dataclass(frozen=True)
class BondResonance:
    """Sideband data for the bond between sites ``bond`` and ``bond + 1``."""

    bond: int
    delta_omega: float
    delta_g: float
    order: int | None
    argument_per_beta0: float          # d(bessel argument)/d(beta0) = 4 dg q0 / nu
    suppression_beta0: tuple[float, ...]
    enhancement_windows: tuple[tuple[float, float], ...]  # heuristic

    def bessel_argument(self, beta0: float) -> float:
        return self.argument_per_beta0 * beta0


@dataclass(frozen=True)
class ResonanceReport:
    """All modulated bonds of a configuration with their suppression points."""

    bonds: tuple[BondResonance, ...]
    detuning_tol: float
    max_order: int
    n_zeros: int
    enhancement_floor: float

    def suppression_points(self) -> list[float]:
        """Sorted, de-duplicated suppression amplitudes over all bonds."""
        pts = sorted(b for bond in self.bonds for b in bond.suppression_beta0)
        out: list[float] = []
        for p in pts:
            if not out or abs(p - out[-1]) > 1e-9 * max(1.0, abs(p)):
                out.append(p)
        return out


def _enhancement_windows(order: int, zeros: tuple[float, ...], scale: float,
                         floor: float) -> tuple[tuple[float, float], ...]:
    """Intervals between consecutive suppression points where |J_n| >= floor.

    Heuristic only: the analysis identifies suppressions; between them the
    Bessel weight is taken as a proxy for how much of the resonant hopping
    survives. ``scale`` converts argument x to beta0.
    """
    n = abs(order)
    windows = []
    bounds = (0.0,) + zeros
    for left, right in zip(bounds[:-1], bounds[1:]):
        xs = np.linspace(left, right, 201)
        good = np.abs([bessel_j(n, x) for x in xs]) >= floor
        if not good.any():
            continue
        idx = np.nonzero(good)[0]
        windows.append((xs[idx[0]] / scale, xs[idx[-1]] / scale))
    return tuple(windows)


def analyze(
    cfg: ChainConfig,
    max_order: int = 6,
    n_zeros: int = 5,
    detuning_tol: float | None = None,
    enhancement_floor: float = 0.1,
) -> ResonanceReport:
    """Per-bond detunings, matched sideband orders, and suppression amplitudes.

    A bond enters the report only when its coupling difference is nonzero
    (otherwise the drive does not modulate it). The order is the integer n
    with |delta_omega - n*nu| <= detuning_tol and |n| <= max_order, if any;
    suppression amplitudes map the first ``n_zeros`` zeros of J_|n| through
    beta0 = x * nu / (4 |delta_g| q0).
    """
    if detuning_tol is None:
        detuning_tol = 1e-6 * cfg.nu
    bonds = []
    for j in range(1, cfg.n_sites):
        d_omega = float(cfg.omega[j - 1] - cfg.omega[j])
        d_g = float(cfg.g[j - 1] - cfg.g[j])
        if d_g == 0.0:
            continue
        n_round = int(round(d_omega / cfg.nu))
        order: int | None = None
        if abs(d_omega - n_round * cfg.nu) <= detuning_tol and abs(n_round) <= max_order:
            order = n_round
        scale = 4.0 * abs(d_g) * cfg.q0 / cfg.nu
        suppression: tuple[float, ...] = ()
        windows: tuple[tuple[float, float], ...] = ()
        if order is not None:
            zeros = tuple(bessel_zero(abs(order), k) for k in range(1, n_zeros + 1))
            suppression = tuple(z / scale for z in zeros)
            windows = _enhancement_windows(order, zeros, scale, enhancement_floor)
        bonds.append(BondResonance(
            bond=j,
            delta_omega=d_omega,
            delta_g=d_g,
            order=order,
            argument_per_beta0=scale,
            suppression_beta0=suppression,
            enhancement_windows=windows,
        ))
    return ResonanceReport(
        bonds=tuple(bonds),
        detuning_tol=detuning_tol,
        max_order=max_order,
        n_zeros=n_zeros,
        enhancement_floor=enhancement_floor,
    )


def render_report(report: ResonanceReport) -> str:
    """Human-readable rendering of a resonance report."""
    lines = []
    if not report.bonds:
        lines.append("no modulated bonds: all coupling differences vanish, "
                     "so the drive cannot gate any bond")
    for b in report.bonds:
        lines.append(f"bond {b.bond}-{b.bond + 1}: delta_omega={b.delta_omega:g}, "
                     f"delta_g={b.delta_g:g}")
        if b.order is None:
            lines.append(f"  no integer sideband within tol={report.detuning_tol:g} "
                         f"(orders up to {report.max_order})")
            continue
        lines.append(f"  sideband order n={b.order}, bessel argument "
                     f"{b.argument_per_beta0:g} * beta0")
        sup = ", ".join(f"{x:.4f}" for x in b.suppression_beta0)
        lines.append(f"  suppression at beta0 = {sup}")
        if b.enhancement_windows:
            win = ", ".join(f"[{lo:.3f}, {hi:.3f}]" for lo, hi in b.enhancement_windows)
            lines.append(f"  enhancement windows (heuristic, |J| >= "
                         f"{report.enhancement_floor:g}): {win}")
    return "\n".join(lines)
