"""Hot inner loops for time-dependent propagation.

The laser-ion Hamiltonians all have the shape

    H(t) = sum_k [ c_k(t) * (M_k o exp(i PHI_k t)) + H.c. ]
         + sum_j d_j(t) * S_j

where every elementwise frequency matrix factorizes through a diagonal,
PHI_k[r, c] = phi_k[r] - phi_k[c] - omega_k.  The rotating action then needs
only a phase vector u_k(t) = exp(i phi_k t):

    (M_k o e^{i PHI_k t}) psi = e^{-i omega_k t} * u_k o (M_k @ (conj(u_k) o psi))

so each right-hand side is plain BLAS gemv work on the static M_k (and its
adjoint), plus O(D) vector phases; the scalar e^{-i omega_k t} is folded into
the amplitude samples.  The propagator is fixed-step classical RK4 on
dpsi/dt = -i H(t) psi with the phase vectors advanced exactly by half-step
rotators, so no trig runs inside the loop.

Kernels are compiled with numba when available; set Z2FORGE_DISABLE_NUMBA=1
to force the pure-numpy path (same math, same results to rounding).
``benchmarks/bench_propagation.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via the env flag instead
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return wrap


def numba_enabled() -> bool:
    flag = os.environ.get("Z2FORGE_DISABLE_NUMBA", "0").lower()
    return _HAVE_NUMBA and flag not in ("1", "true", "yes")


# ----------------------------------------------------------------------
# numba path
# ----------------------------------------------------------------------

@njit(cache=True, fastmath=True)
def _rhs_nb(out, psi, M, Md, U, S, c, d, v):  # pragma: no cover - jitted
    dim = psi.shape[0]
    for i in range(dim):
        out[i] = 0.0 + 0.0j
    for k in range(M.shape[0]):
        uk = U[k]
        for i in range(dim):
            v[i] = np.conj(uk[i]) * psi[i]
        w = np.dot(M[k], v)
        wd = np.dot(Md[k], v)
        ck = c[k]
        cck = np.conj(ck)
        for i in range(dim):
            out[i] += uk[i] * (ck * w[i] + cck * wd[i])
    for j in range(S.shape[0]):
        ys = np.dot(S[j], psi)
        dj = d[j]
        for i in range(dim):
            out[i] += dj * ys[i]
    for i in range(dim):
        out[i] *= -1j


@njit(cache=True, fastmath=True)
def _rk4_nb(psi, dt, n_steps, stride, M, Md, U, RU, S, amps, damps, out):
    # pragma: no cover - jitted
    dim = psi.shape[0]
    K = M.shape[0]
    k1 = np.empty(dim, np.complex128)
    k2 = np.empty(dim, np.complex128)
    k3 = np.empty(dim, np.complex128)
    k4 = np.empty(dim, np.complex128)
    tmp = np.empty(dim, np.complex128)
    v = np.empty(dim, np.complex128)
    out[0] = psi
    rec = 1
    max_drift = 0.0
    for m in range(n_steps):
        _rhs_nb(k1, psi, M, Md, U, S, amps[:, 2 * m], damps[:, 2 * m], v)
        for i in range(dim):
            tmp[i] = psi[i] + 0.5 * dt * k1[i]
        for k in range(K):
            for i in range(dim):
                U[k, i] *= RU[k, i]
        _rhs_nb(k2, tmp, M, Md, U, S, amps[:, 2 * m + 1], damps[:, 2 * m + 1], v)
        for i in range(dim):
            tmp[i] = psi[i] + 0.5 * dt * k2[i]
        _rhs_nb(k3, tmp, M, Md, U, S, amps[:, 2 * m + 1], damps[:, 2 * m + 1], v)
        for i in range(dim):
            tmp[i] = psi[i] + dt * k3[i]
        for k in range(K):
            for i in range(dim):
                U[k, i] *= RU[k, i]
        _rhs_nb(k4, tmp, M, Md, U, S, amps[:, 2 * m + 2], damps[:, 2 * m + 2], v)
        for i in range(dim):
            psi[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if (m + 1) % stride == 0:
            nrm = 0.0
            for i in range(dim):
                nrm += psi[i].real ** 2 + psi[i].imag ** 2
            nrm = np.sqrt(nrm)
            drift = abs(nrm - 1.0)
            if drift > max_drift:
                max_drift = drift
            for i in range(dim):
                psi[i] /= nrm
            out[rec] = psi
            rec += 1
    return max_drift


# ----------------------------------------------------------------------
# numpy fallback (same math, vectorized)
# ----------------------------------------------------------------------

def _rhs_np(psi, M, Md, U, S, c, d):
    y = np.zeros_like(psi)
    if M.shape[0]:
        v = np.conj(U) * psi            # (K, D)
        w = np.einsum("kij,kj->ki", M, v)
        wd = np.einsum("kij,kj->ki", Md, v)
        y += np.einsum("k,ki->i", c, U * w)
        y += np.einsum("k,ki->i", np.conj(c), U * wd)
    if S.shape[0]:
        y += np.einsum("j,ji->i", d, S @ psi)
    return -1j * y


def _rk4_np(psi, dt, n_steps, stride, M, Md, U, RU, S, amps, damps, out):
    out[0] = psi
    rec = 1
    max_drift = 0.0
    for m in range(n_steps):
        k1 = _rhs_np(psi, M, Md, U, S, amps[:, 2 * m], damps[:, 2 * m])
        U *= RU
        k2 = _rhs_np(psi + 0.5 * dt * k1, M, Md, U, S,
                     amps[:, 2 * m + 1], damps[:, 2 * m + 1])
        k3 = _rhs_np(psi + 0.5 * dt * k2, M, Md, U, S,
                     amps[:, 2 * m + 1], damps[:, 2 * m + 1])
        U *= RU
        k4 = _rhs_np(psi + dt * k3, M, Md, U, S,
                     amps[:, 2 * m + 2], damps[:, 2 * m + 2])
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if (m + 1) % stride == 0:
            nrm = np.linalg.norm(psi)
            max_drift = max(max_drift, abs(nrm - 1.0))
            psi = psi / nrm
            out[rec] = psi
            rec += 1
    return max_drift


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def propagate_phase_modulated(psi0, t0, dt, n_steps, stride,
                              M, PDIAG, S, amps, damps, use_numba=None):
    """Propagate psi0 with fixed-step RK4, recording every ``stride`` steps.

    Parameters
    ----------
    M : (K, D, D) complex static coefficient matrices.
    PDIAG : (K, D) float diagonal phase frequencies phi_k (rad/s); the
        scalar offsets omega_k must already be folded into ``amps``.
    S : (J, D, D) complex Hermitian static terms.
    amps : (K, 2*n_steps+1) complex amplitudes c_k(t) e^{-i omega_k t} on
        the half-step grid t0 + dt/2 * [0 .. 2 n_steps].
    damps : (J, 2*n_steps+1) real amplitudes on the same grid.

    Returns (states, max_norm_drift) with states of shape
    (n_steps//stride + 1, D), renormalized at every record point.
    """
    if n_steps % stride != 0:
        raise ValueError("n_steps must be a multiple of the record stride")
    K = M.shape[0]
    J = S.shape[0]
    if amps.shape != (K, 2 * n_steps + 1):
        raise ValueError(f"amps must have shape ({K}, {2 * n_steps + 1})")
    if damps.shape != (J, 2 * n_steps + 1):
        raise ValueError(f"damps must have shape ({J}, {2 * n_steps + 1})")

    M = np.ascontiguousarray(M.astype(np.complex128))
    Md = np.ascontiguousarray(np.conj(np.transpose(M, (0, 2, 1))))
    U = np.ascontiguousarray(np.exp(1j * PDIAG * t0))
    RU = np.ascontiguousarray(np.exp(1j * PDIAG * (dt / 2.0)))
    S = np.ascontiguousarray(S.astype(np.complex128))
    amps = np.ascontiguousarray(amps.astype(np.complex128))
    damps = np.ascontiguousarray(damps.astype(np.float64))
    out = np.empty((n_steps // stride + 1, psi0.shape[0]), dtype=np.complex128)
    psi = np.ascontiguousarray(psi0.astype(np.complex128)).copy()

    if use_numba is None:
        use_numba = numba_enabled()
    if use_numba:
        drift = _rk4_nb(psi, float(dt), int(n_steps), int(stride),
                        M, Md, U, RU, S, amps, damps, out)
    else:
        drift = _rk4_np(psi, float(dt), int(n_steps), int(stride),
                        M, Md, U, RU, S, amps, damps, out)
    return out, float(drift)
