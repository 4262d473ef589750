"""Adaptive Dormand-Prince 8(5,3) integration of periodically driven linear ODEs.

Solves y'(t) = (A + sin(nu t) B + cos(nu t) C) y for complex state vectors,
with A, B, C in CSR form. This covers both the reduced chain master equation
(B diagonal, C absent) and the displaced-frame oscillator model (all three
present). The driver steps exactly onto the requested sample times; when the
leading m*m block of the state holds a density matrix, that block is
re-symmetrized at every sample before being recorded.

Step control follows the standard DOP853 scheme: combined 5th/3rd order error
estimate, error exponent -1/8, safety factor 0.9, step factor clipped to
[0.2, 10]. The time-dependent coefficients are evaluated exactly at the stage
times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._dop853_coefficients import A as _A, B as _B, C as _C, E3 as _E3, E5 as _E5

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 10.0
ERROR_EXPONENT = -1.0 / 8.0

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


class IntegratorError(RuntimeError):
    """Raised when the step size underflows or the step budget is exhausted."""

    def __init__(self, message: str, t: float):
        super().__init__(message)
        self.t = t


@dataclass(frozen=True)
class LinearGenerator:
    """CSR pieces of the generator L(t) = A + sin(nu t) B + cos(nu t) C."""

    a: sp.csr_matrix
    b: sp.csr_matrix
    c: sp.csr_matrix
    nu: float
    matrix_dim: int  # m when the first m*m entries form a density matrix, else 0

    @property
    def dim(self) -> int:
        return self.a.shape[0]


def empty_csr(dim: int) -> sp.csr_matrix:
    return sp.csr_matrix((dim, dim), dtype=np.complex128)


def _csr_parts(mat: sp.csr_matrix):
    m = mat.tocsr().astype(np.complex128)
    return (
        np.asarray(m.indptr, dtype=np.int64),
        np.asarray(m.indices, dtype=np.int64),
        np.ascontiguousarray(m.data),
    )


@njit(cache=True, nogil=True, inline="always")
def _apply_generator(ap, ai, ad, bp, bi, bd, cp, ci, cd, s, c, y, out):
    n = out.size
    for r in range(n):
        acc = 0.0 + 0.0j
        for k in range(ap[r], ap[r + 1]):
            acc += ad[k] * y[ai[k]]
        if bd.size > 0:
            tmp = 0.0 + 0.0j
            for k in range(bp[r], bp[r + 1]):
                tmp += bd[k] * y[bi[k]]
            acc += s * tmp
        if cd.size > 0:
            tmp = 0.0 + 0.0j
            for k in range(cp[r], cp[r + 1]):
                tmp += cd[k] * y[ci[k]]
            acc += c * tmp
        out[r] = acc


@njit(cache=True, nogil=True, inline="always")
def _resym(y, m):
    # leading m*m block <- (block + block^dagger)/2
    for i in range(m):
        ii = i * m + i
        y[ii] = complex(y[ii].real, 0.0)
        for j in range(i + 1, m):
            ij = i * m + j
            ji = j * m + i
            avg = 0.5 * (y[ij] + np.conj(y[ji]))
            y[ij] = avg
            y[ji] = np.conj(avg)


@njit(cache=True, nogil=True)
def _integrate_core(
    ap, ai, ad, bp, bi, bd, cp, ci, cd,
    nu, y0, sample_ts, rtol, atol, m, max_steps,
    tab_a, tab_b, tab_c, tab_e3, tab_e5,
):
    dim = y0.size
    nsmp = sample_ts.size
    samples = np.empty((nsmp, dim), dtype=np.complex128)

    y = y0.copy()
    t = sample_ts[0]
    t_end = sample_ts[-1]

    if m > 0:
        _resym(y, m)
    samples[0, :] = y
    next_sample = 1

    k = np.empty((13, dim), dtype=np.complex128)
    ys = np.empty(dim, dtype=np.complex128)
    y_new = np.empty(dim, dtype=np.complex128)
    err5 = np.empty(dim, dtype=np.complex128)
    err3 = np.empty(dim, dtype=np.complex128)

    n_accepted = 0
    n_rejected = 0

    if t >= t_end:
        return STATUS_OK, t, samples, n_accepted, n_rejected

    # initial step size (Hairer's heuristic, RMS norms over the error scale)
    _apply_generator(ap, ai, ad, bp, bi, bd, cp, ci, cd,
                     math.sin(nu * t), math.cos(nu * t), y, k[0])
    d0 = 0.0
    d1 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d0 += (abs(y[i]) / sc) ** 2
        d1 += (abs(k[0, i]) / sc) ** 2
    d0 = math.sqrt(d0 / dim)
    d1 = math.sqrt(d1 / dim)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, t_end - t)
    for i in range(dim):
        ys[i] = y[i] + h0 * k[0, i]
    _apply_generator(ap, ai, ad, bp, bi, bd, cp, ci, cd,
                     math.sin(nu * (t + h0)), math.cos(nu * (t + h0)), ys, k[1])
    d2 = 0.0
    for i in range(dim):
        sc = atol + rtol * abs(y[i])
        d2 += (abs(k[1, i] - k[0, i]) / sc) ** 2
    d2 = math.sqrt(d2 / dim) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / 8.0)
    h_abs = min(100.0 * h0, h1, t_end - t)

    fsal_valid = True  # k[0] currently holds f(t, y)

    steps = 0
    while t < t_end:
        steps += 1
        if steps > max_steps:
            return STATUS_MAX_STEPS, t, samples, n_accepted, n_rejected

        min_step = 10.0 * 2.220446049250313e-16 * max(abs(t), 1.0)
        if h_abs < min_step:
            return STATUS_STEP_UNDERFLOW, t, samples, n_accepted, n_rejected

        # never step past the next sample time
        t_stop = sample_ts[next_sample]
        h = h_abs
        capped = False
        if t + h >= t_stop:
            h = t_stop - t
            capped = True
        if h < min_step and capped:
            # snap: the remaining gap is below resolution
            t = t_stop
            if m > 0:
                _resym(y, m)
                fsal_valid = False
            samples[next_sample, :] = y
            next_sample += 1
            if next_sample >= nsmp:
                break
            continue

        if not fsal_valid:
            _apply_generator(ap, ai, ad, bp, bi, bd, cp, ci, cd,
                             math.sin(nu * t), math.cos(nu * t), y, k[0])
            fsal_valid = True

        # stages 1..11
        for st in range(1, 12):
            for i in range(dim):
                ys[i] = y[i]
            for j in range(st):
                coef = tab_a[st, j]
                if coef != 0.0:
                    hc = h * coef
                    for i in range(dim):
                        ys[i] += hc * k[j, i]
            t_st = t + tab_c[st] * h
            _apply_generator(ap, ai, ad, bp, bi, bd, cp, ci, cd,
                             math.sin(nu * t_st), math.cos(nu * t_st), ys, k[st])

        for i in range(dim):
            y_new[i] = y[i]
        for j in range(12):
            coef = tab_b[j]
            if coef != 0.0:
                hc = h * coef
                for i in range(dim):
                    y_new[i] += hc * k[j, i]
        t_new = t + h
        _apply_generator(ap, ai, ad, bp, bi, bd, cp, ci, cd,
                         math.sin(nu * t_new), math.cos(nu * t_new), y_new, k[12])

        for i in range(dim):
            err5[i] = 0.0 + 0.0j
            err3[i] = 0.0 + 0.0j
        for j in range(13):
            c5 = tab_e5[j]
            c3 = tab_e3[j]
            if c5 != 0.0:
                for i in range(dim):
                    err5[i] += c5 * k[j, i]
            if c3 != 0.0:
                for i in range(dim):
                    err3[i] += c3 * k[j, i]

        err5n2 = 0.0
        err3n2 = 0.0
        for i in range(dim):
            sc = atol + rtol * max(abs(y[i]), abs(y_new[i]))
            err5n2 += (abs(err5[i]) / sc) ** 2
            err3n2 += (abs(err3[i]) / sc) ** 2
        if err5n2 == 0.0 and err3n2 == 0.0:
            err_norm = 0.0
        else:
            denom = err5n2 + 0.01 * err3n2
            err_norm = abs(h) * err5n2 / math.sqrt(denom * dim)

        if err_norm < 1.0:
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = min(MAX_FACTOR, SAFETY * err_norm ** ERROR_EXPONENT)
            t = t_new
            for i in range(dim):
                y[i] = y_new[i]
                k[0, i] = k[12, i]  # first-same-as-last
            n_accepted += 1
            if capped:
                h_abs = max(h_abs, h * factor)
            else:
                h_abs = h * factor

            if t >= sample_ts[next_sample]:
                if m > 0:
                    _resym(y, m)
                    fsal_valid = False  # state was adjusted; recompute f
                samples[next_sample, :] = y
                next_sample += 1
                if next_sample >= nsmp:
                    break
        else:
            h_abs = h * max(MIN_FACTOR, SAFETY * err_norm ** ERROR_EXPONENT)
            n_rejected += 1

    return STATUS_OK, t, samples, n_accepted, n_rejected


def _integrate_py(gen: LinearGenerator, y0, sample_ts, rtol, atol, max_steps):
    """Pure numpy/scipy mirror of the jitted core (fallback and cross-check)."""
    a, b, c = gen.a, gen.b, gen.c
    nu = gen.nu
    m = gen.matrix_dim
    dim = y0.size
    nsmp = sample_ts.size
    samples = np.empty((nsmp, dim), dtype=np.complex128)

    def f(t, y):
        out = a @ y
        if b.nnz:
            out = out + math.sin(nu * t) * (b @ y)
        if c.nnz:
            out = out + math.cos(nu * t) * (c @ y)
        return out

    def resym(y):
        if m > 0:
            block = y[: m * m].reshape(m, m)
            block[:] = 0.5 * (block + block.conj().T)
        return y

    y = resym(y0.copy())
    t = float(sample_ts[0])
    t_end = float(sample_ts[-1])
    samples[0] = y
    next_sample = 1
    n_accepted = 0
    n_rejected = 0
    if t >= t_end:
        return STATUS_OK, t, samples, n_accepted, n_rejected

    k = np.empty((13, dim), dtype=np.complex128)
    k[0] = f(t, y)
    scale = atol + rtol * np.abs(y)
    d0 = np.linalg.norm(y / scale) / math.sqrt(dim)
    d1 = np.linalg.norm(k[0] / scale) / math.sqrt(dim)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_end - t)
    f1 = f(t + h0, y + h0 * k[0])
    d2 = np.linalg.norm((f1 - k[0]) / scale) / math.sqrt(dim) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.125
    h_abs = min(100.0 * h0, h1, t_end - t)
    fsal_valid = True

    steps = 0
    while t < t_end:
        steps += 1
        if steps > max_steps:
            return STATUS_MAX_STEPS, t, samples, n_accepted, n_rejected
        min_step = 10.0 * 2.220446049250313e-16 * max(abs(t), 1.0)
        if h_abs < min_step:
            return STATUS_STEP_UNDERFLOW, t, samples, n_accepted, n_rejected
        t_stop = float(sample_ts[next_sample])
        h = h_abs
        capped = False
        if t + h >= t_stop:
            h = t_stop - t
            capped = True
        if h < min_step and capped:
            t = t_stop
            if m > 0:
                resym(y)
                fsal_valid = False
            samples[next_sample] = y
            next_sample += 1
            if next_sample >= nsmp:
                break
            continue
        if not fsal_valid:
            k[0] = f(t, y)
            fsal_valid = True
        for st in range(1, 12):
            ys = y + h * (_A[st, :st] @ k[:st])
            k[st] = f(t + _C[st] * h, ys)
        y_new = y + h * (_B @ k[:12])
        t_new = t + h
        k[12] = f(t_new, y_new)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        err5 = (_E5 @ k) / scale
        err3 = (_E3 @ k) / scale
        err5n2 = float(np.vdot(err5, err5).real)
        err3n2 = float(np.vdot(err3, err3).real)
        if err5n2 == 0.0 and err3n2 == 0.0:
            err_norm = 0.0
        else:
            err_norm = abs(h) * err5n2 / math.sqrt((err5n2 + 0.01 * err3n2) * dim)
        if err_norm < 1.0:
            factor = MAX_FACTOR if err_norm == 0.0 else min(
                MAX_FACTOR, SAFETY * err_norm ** ERROR_EXPONENT)
            t = t_new
            y = y_new
            k[0] = k[12]
            n_accepted += 1
            h_abs = max(h_abs, h * factor) if capped else h * factor
            if t >= sample_ts[next_sample]:
                if m > 0:
                    resym(y)
                    fsal_valid = False
                samples[next_sample] = y
                next_sample += 1
                if next_sample >= nsmp:
                    break
        else:
            h_abs = h * max(MIN_FACTOR, SAFETY * err_norm ** ERROR_EXPONENT)
            n_rejected += 1
    return STATUS_OK, t, samples, n_accepted, n_rejected


def integrate_linear(
    gen: LinearGenerator,
    y0: np.ndarray,
    sample_ts: np.ndarray,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    max_steps: int = 50_000_000,
    backend: str = "auto",
) -> np.ndarray:
    """Integrate the generator from sample_ts[0] to sample_ts[-1].

    Returns the state at every sample time, shape (len(sample_ts), dim).
    Raises IntegratorError on step-size underflow, annotated with the time
    at which it occurred.
    """
    y0 = np.ascontiguousarray(y0, dtype=np.complex128)
    sample_ts = np.ascontiguousarray(sample_ts, dtype=np.float64)
    if sample_ts.size < 2:
        raise ValueError("need at least two sample times")
    if np.any(np.diff(sample_ts) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")

    use_numba = HAVE_NUMBA if backend == "auto" else backend == "numba"
    if use_numba:
        ap, ai, ad = _csr_parts(gen.a)
        bp, bi, bd = _csr_parts(gen.b)
        cp, ci, cd = _csr_parts(gen.c)
        status, t_last, samples, n_acc, n_rej = _integrate_core(
            ap, ai, ad, bp, bi, bd, cp, ci, cd,
            float(gen.nu), y0, sample_ts, float(rtol), float(atol),
            int(gen.matrix_dim), int(max_steps),
            _A, _B, _C, _E3, _E5,
        )
    else:
        status, t_last, samples, n_acc, n_rej = _integrate_py(
            gen, y0, sample_ts, rtol, atol, max_steps)

    if status == STATUS_STEP_UNDERFLOW:
        raise IntegratorError(
            f"step size underflow at t={t_last:.6g}", t_last)
    if status == STATUS_MAX_STEPS:
        raise IntegratorError(
            f"step budget exhausted at t={t_last:.6g}", t_last)
    return samples
