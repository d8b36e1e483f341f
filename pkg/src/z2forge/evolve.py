"""State-vector propagation and the figure-level metrics built on it.

Static Hamiltonians are propagated by dense eigendecomposition up to a
configurable dimension cap and by a Lanczos (Krylov) stepper above it.
Time-dependent laser-ion Hamiltonians go through the fixed-step RK4 kernel
in ``_kernels`` (numba-accelerated, numpy fallback).

Observables are recorded on the fly into named channels so large systems
never need the full set of states in memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .hilbert import LinearOperator, StateVector, fidelity as state_fidelity

DEFAULT_EIG_CAP = 4096


class NonHermitianError(ValueError):
    pass


class NormDriftError(RuntimeError):
    """Propagation aborted because the norm drifted past tolerance."""


@dataclass
class PropagationConfig:
    method: str = "auto"            # auto | eigh | krylov | rk4
    dt: Optional[float] = None      # integrator step; None = auto from fastest freq
    norm_tolerance: float = 1e-6
    eig_cap: int = DEFAULT_EIG_CAP
    krylov_tol: float = 1e-12
    krylov_max_dim: int = 40
    steps_per_fastest_period: int = 20


@dataclass
class TimeSeries:
    """Sampled observables: one time axis, named channels of equal length."""

    times: np.ndarray
    channels: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, arr in self.channels.items():
            if len(arr) != len(self.times):
                raise ValueError(f"channel {name!r} length != times length")

    def channel(self, name: str) -> np.ndarray:
        return self.channels[name]


@dataclass
class Trajectory:
    times: np.ndarray
    channels: dict
    states: Optional[np.ndarray] = None     # (n_times, dim) if stored
    norm_drift: float = 0.0
    meta: dict = field(default_factory=dict)

    def series(self) -> TimeSeries:
        return TimeSeries(self.times, dict(self.channels), dict(self.meta))


Observable = Union[LinearOperator, StateVector, Callable]


def _eval_observable(obs: Observable, psi: np.ndarray) -> complex:
    if isinstance(obs, LinearOperator):
        m = obs.matrix
        return complex(np.vdot(psi, m @ psi))
    if isinstance(obs, StateVector):
        return complex(abs(np.vdot(obs.amplitudes, psi)) ** 2)
    return complex(obs(psi))


def _record_channels(states, observables: Optional[Mapping[str, Observable]]):
    if not observables:
        return {}
    out = {name: np.empty(states.shape[0], dtype=complex) for name in observables}
    for k in range(states.shape[0]):
        for name, obs in observables.items():
            out[name][k] = _eval_observable(obs, states[k])
    # collapse to real where the imaginary part is numerical noise
    for name in out:
        arr = out[name]
        if np.max(np.abs(arr.imag), initial=0.0) < 1e-9 * max(1.0, np.max(np.abs(arr.real), initial=0.0)):
            out[name] = arr.real.copy()
    return out


def _check_hermitian(H: LinearOperator):
    if H.hermitian:
        return
    m = H.matrix
    d = m - m.conj().T
    dev = abs(d).max() if not sp.issparse(d) else (abs(d).max() if d.nnz else 0.0)
    scale = abs(m).max() if not sp.issparse(m) else (abs(m).max() if m.nnz else 1.0)
    if dev > 1e-12 * max(1.0, scale):
        raise NonHermitianError(f"|H - H^dag| = {dev:.3e}")


# ----------------------------------------------------------------------
# Static propagation
# ----------------------------------------------------------------------

def _lanczos_expm_step(matvec, v, dt, m_max=40, tol=1e-12):
    """One Krylov step exp(-i dt H) v for Hermitian H.

    Returns the propagated vector; adaptively chooses the Krylov dimension
    and falls back to substepping if m_max is hit without convergence.
    """
    nrm0 = np.linalg.norm(v)
    if nrm0 == 0.0:
        return v
    V = [v / nrm0]
    alphas, betas = [], []
    w = matvec(V[0])
    a = np.vdot(V[0], w).real
    alphas.append(a)
    w = w - a * V[0]
    prev_phi = None
    for m in range(1, m_max + 1):
        b = np.linalg.norm(w)
        if b < 1e-14:  # happy breakdown: Krylov space is invariant
            break
        betas.append(b)
        V.append(w / b)
        w = matvec(V[m])
        a = np.vdot(V[m], w).real
        alphas.append(a)
        w = w - a * V[m] - b * V[m - 1]
        if m >= 2:
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            evals, evecs = np.linalg.eigh(T)
            phi = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
            if prev_phi is not None:
                err = np.linalg.norm(phi[:prev_phi.shape[0]] - prev_phi) + abs(phi[-1])
                if err < tol:
                    prev_phi = phi
                    break
            prev_phi = phi
    else:
        # not converged: halve the step
        half = _lanczos_expm_step(matvec, v, dt / 2, m_max, tol)
        return _lanczos_expm_step(matvec, half, dt / 2, m_max, tol)
    if prev_phi is None:  # tiny invariant subspace
        T = np.diag(alphas) + (np.diag(betas, 1) + np.diag(betas, -1)
                               if betas else 0.0)
        T = np.atleast_2d(T)
        evals, evecs = np.linalg.eigh(T)
        prev_phi = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
    out = np.zeros_like(v)
    for c, vk in zip(prev_phi, V):
        out += c * vk
    return out * nrm0


def evolve_static(H: LinearOperator, psi0: StateVector, t_grid,
                  observables: Optional[Mapping[str, Observable]] = None,
                  store_states: Optional[bool] = None,
                  config: Optional[PropagationConfig] = None) -> Trajectory:
    """psi(t) = exp(-i H t) psi0 sampled on ``t_grid``.

    Dense eigendecomposition when dim <= config.eig_cap, Lanczos stepping
    above.  Channels are recorded from the stored states (dense path) or on
    the fly (Krylov path).
    """
    config = config or PropagationConfig()
    _check_hermitian(H)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) < 1:
        raise ValueError("t_grid must be a 1d array of sample times")
    if np.any(np.diff(t_grid) <= 0) and len(t_grid) > 1:
        raise ValueError("sample times must be strictly increasing")
    dim = H.dim
    method = config.method
    if method == "auto":
        method = "eigh" if dim <= config.eig_cap else "krylov"
    psi = psi0.amplitudes.astype(np.complex128)

    if method == "eigh":
        evals, vecs = np.linalg.eigh(H.to_dense())
        coef = vecs.conj().T @ psi
        phases = np.exp(-1j * np.outer(t_grid, evals))
        states = (vecs @ (phases * coef).T).T  # (T, D)
        norms = np.linalg.norm(states, axis=1)
        drift = float(np.max(np.abs(norms - 1.0)))
        states = states / norms[:, None]
    elif method == "krylov":
        m = H.matrix
        matvec = (lambda x: m @ x)
        states = np.empty((len(t_grid), dim), dtype=np.complex128)
        drift = 0.0
        t_prev = 0.0
        cur = psi.copy()
        for k, t in enumerate(t_grid):
            dt = t - t_prev
            if dt > 0:
                cur = _lanczos_expm_step(matvec, cur, dt,
                                         config.krylov_max_dim, config.krylov_tol)
            nrm = np.linalg.norm(cur)
            drift = max(drift, abs(nrm - 1.0))
            cur = cur / nrm
            states[k] = cur
            t_prev = t
    else:
        raise ValueError(f"unknown static method {method!r}")

    if drift > config.norm_tolerance:
        raise NormDriftError(f"norm drifted by {drift:.2e} (tol {config.norm_tolerance:.0e})")
    channels = _record_channels(states, observables)
    keep = store_states if store_states is not None else (dim <= config.eig_cap)
    return Trajectory(times=t_grid, channels=channels,
                      states=states if keep else None, norm_drift=drift)


# ----------------------------------------------------------------------
# Time-dependent propagation
# ----------------------------------------------------------------------

def evolve_time_dependent(hgen, psi0: StateVector, t_grid,
                          observables: Optional[Mapping[str, Observable]] = None,
                          store_states: Optional[bool] = None,
                          config: Optional[PropagationConfig] = None) -> Trajectory:
    """Fixed-step RK4 propagation under a phase-modulated generator.

    ``hgen`` provides ``kernel_arrays()``, ``amplitudes(t_half)`` and
    ``fastest_frequency()`` (see ``hardware.PhaseModulatedHamiltonian``).
    ``t_grid`` must be uniform; the integrator substeps each grid interval
    with step <= period(fastest frequency)/steps_per_fastest_period.
    """
    config = config or PropagationConfig()
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 2:
        raise ValueError("need at least two sample times")
    spacings = np.diff(t_grid)
    if np.any(spacings <= 0):
        raise ValueError("sample times must be strictly increasing")
    if np.max(np.abs(spacings - spacings[0])) > 1e-9 * spacings[0]:
        raise ValueError("t_grid must be uniform for the fixed-step kernel")
    spacing = float(spacings[0])

    if config.dt is not None:
        dt_target = config.dt
    else:
        f_fast = hgen.fastest_frequency() / (2.0 * np.pi)
        dt_target = 1.0 / (config.steps_per_fastest_period * f_fast) if f_fast > 0 \
            else spacing
    n_sub = max(1, int(np.ceil(spacing / dt_target - 1e-12)))
    dt = spacing / n_sub
    n_steps = n_sub * (len(t_grid) - 1)

    M, PHI, S = hgen.kernel_arrays()
    t_half = t_grid[0] + dt * 0.5 * np.arange(2 * n_steps + 1)
    amps, damps = hgen.amplitudes(t_half)
    states, drift = _kernels.propagate_phase_modulated(
        psi0.amplitudes, t_grid[0], dt, n_steps, n_sub, M, PHI, S, amps, damps)
    if drift > config.norm_tolerance:
        raise NormDriftError(
            f"norm drifted by {drift:.2e} during RK4 (tol {config.norm_tolerance:.0e}); "
            f"step dt={dt:.3e} is too coarse for this generator")
    channels = _record_channels(states, observables)
    keep = store_states if store_states is not None else (states.shape[1] <= 512)
    return Trajectory(times=t_grid, channels=channels,
                      states=states if keep else None, norm_drift=drift,
                      meta={"dt": dt, "n_sub": n_sub})


# ----------------------------------------------------------------------
# Figure-level metrics
# ----------------------------------------------------------------------

def find_exchange_duration(times, fidelities) -> tuple:
    """(Delta t_ex, F_max): grid argmax refined by quadratic interpolation."""
    times = np.asarray(times, dtype=float)
    f = np.asarray(fidelities, dtype=float)
    if len(times) == 0:
        raise ValueError("empty trajectory")
    k = int(np.argmax(f))
    if 0 < k < len(f) - 1:
        y0, y1, y2 = f[k - 1], f[k], f[k + 1]
        denom = (y0 - 2 * y1 + y2)
        if abs(denom) > 1e-30:
            shift = float(np.clip(0.5 * (y0 - y2) / denom, -1.0, 1.0))
            step = times[k + 1] - times[k] if shift >= 0 else times[k] - times[k - 1]
            t_ex = times[k] + shift * step
            f_max = y1 - 0.25 * (y0 - y2) * shift
            return float(t_ex), float(min(f_max, 1.0))
    return float(times[k]), float(f[k])


def find_exchange_from_trajectory(traj: Trajectory, target: StateVector) -> tuple:
    if traj.states is None:
        raise ValueError("trajectory has no stored states; record a fidelity channel")
    f = np.abs(traj.states @ target.amplitudes.conj()) ** 2
    return find_exchange_duration(traj.times, f)


def contrast(sx_series) -> float:
    """C = (max_t sx(t) - sx(0)) / 2; equals t^2/(t^2+h^2) for the ideal link."""
    sx = np.asarray(sx_series, dtype=float)
    if sx.size == 0:
        raise ValueError("empty channel")
    return float((np.max(sx) - sx[0]) / 2.0)
