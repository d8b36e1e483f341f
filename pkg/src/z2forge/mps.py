"""Matrix-product states and one-site TDVP for the gauge chain.

The MPS sites follow the dense layout: boson, link qubit, boson, ...,
boson (2N-1 tensors of alternating physical dimension).  The chain
Hamiltonian becomes a bond-dimension-4 MPO through a finite-state-machine
construction; the gauge-invariant hop is a three-site string
(a at a boson site, the conditioning Pauli on the qubit between, a^dag on
the next boson), so the automaton forbids identity pass-through of open
strings at boson sites.

One-site TDVP keeps bond dimensions fixed, so product initial states are
padded to the bond cap with zero blocks before evolving (the padded
directions enter the tangent space and are filled by the dynamics).  Sweeps
are symmetrized left-right-left with dt/2 each, one-site updates integrated
by a Lanczos exponential and bond matrices back-evolved in between.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import hilbert as hb
from .evolve import _lanczos_expm_step
from .gauge import ChainParams, X_COND, Z_COND

MAGIC = b"Z2MPSCK1"


# ----------------------------------------------------------------------
# MPO
# ----------------------------------------------------------------------

@dataclass
class MPO:
    """Site operator tensors with index order (wl, wr, s_out, s_in)."""

    tensors: list

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    def to_dense(self) -> np.ndarray:
        """Contract to a dense matrix (small chains only)."""
        full = None
        for w in self.tensors:
            if full is None:
                full = w  # (1, wr, s, s')
                continue
            # combine: (1, w, S, S') x (w, w2, d, d') -> (1, w2, S*d, S'*d')
            full = np.einsum("awst,wbuv->absutv", full, w)
            a, b, s, u, t, v = full.shape
            full = full.reshape(a, b, s * u, t * v)
        return full[0, 0]

    def dims(self) -> list:
        return [w.shape[2] for w in self.tensors]


def chain_to_mpo(p: ChainParams) -> MPO:
    """Exact MPO of the gauge chain (bond dimension 4).

    Automaton states: 0 ready, 1 open hop carrying t_i a_i, 2 open hop
    carrying conj(t_i) a_i^dag, 3 finished.
    """
    n = p.n_sites
    d_b = p.n_max + 1
    a_op = hb.destroy_local(p.n_max)
    num = hb.number_local(p.n_max)
    ident_b = np.eye(d_b, dtype=complex)
    ident_q = np.eye(2, dtype=complex)
    cond = hb.PAULI[p.basis_convention]
    field_axis = "x" if p.basis_convention == Z_COND else "z"
    fld = hb.PAULI[field_axis]

    tensors = []
    for i in range(1, n + 1):  # boson site i
        mu_term = p.mu * ((-1.0) ** i) * num
        if i == 1:
            w = np.zeros((1, 4, d_b, d_b), dtype=complex)
            w[0, 0] = ident_b
            w[0, 1] = p.t_links[0] * a_op
            w[0, 2] = np.conj(p.t_links[0]) * a_op.conj().T
            w[0, 3] = mu_term
        elif i == n:
            w = np.zeros((4, 1, d_b, d_b), dtype=complex)
            w[0, 0] = mu_term
            w[1, 0] = a_op.conj().T
            w[2, 0] = a_op
            w[3, 0] = ident_b
        else:
            w = np.zeros((4, 4, d_b, d_b), dtype=complex)
            w[0, 0] = ident_b
            w[0, 1] = p.t_links[i - 1] * a_op
            w[0, 2] = np.conj(p.t_links[i - 1]) * a_op.conj().T
            w[0, 3] = mu_term
            w[1, 3] = a_op.conj().T
            w[2, 3] = a_op
            w[3, 3] = ident_b
        tensors.append(w)
        if i < n:  # link qubit i
            wq = np.zeros((4, 4, 2, 2), dtype=complex)
            wq[0, 0] = ident_q
            wq[0, 3] = p.h * fld
            wq[1, 1] = cond
            wq[2, 2] = cond
            wq[3, 3] = ident_q
            tensors.append(wq)
    return MPO(tensors)


# ----------------------------------------------------------------------
# MPS
# ----------------------------------------------------------------------

class MPSState:
    """Tensor train with site tensors of shape (Dl, d, Dr).

    ``center`` is the orthogonality center: tensors left of it are
    left-canonical, right of it right-canonical.
    """

    def __init__(self, tensors, center=0, chi=None):
        self.tensors = [np.asarray(t, dtype=complex) for t in tensors]
        self.center = center
        self.chi = chi or max(max(t.shape[0], t.shape[2]) for t in self.tensors)

    @property
    def n_sites(self):
        return len(self.tensors)

    def dims(self):
        return [t.shape[1] for t in self.tensors]

    def bond_dims(self):
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self):
        out = MPSState([t.copy() for t in self.tensors], self.center, self.chi)
        return out

    def norm(self):
        c = self.tensors[self.center]
        return float(np.linalg.norm(c))

    def to_dense(self) -> np.ndarray:
        v = self.tensors[0]
        for t in self.tensors[1:]:
            v = np.tensordot(v, t, axes=([v.ndim - 1], [0]))
        return v.reshape(-1)


def product_mps(kets, dims, chi=1) -> MPSState:
    """Bond-dimension-1 MPS from per-site local kets (arrays of length d)."""
    tensors = []
    for ket, d in zip(kets, dims):
        ket = np.asarray(ket, dtype=complex).reshape(1, d, 1)
        tensors.append(ket)
    return MPSState(tensors, center=0, chi=chi)


def product_mps_from_state(kind: str, p: ChainParams, chi: int,
                           basis_convention=None, **kwargs) -> MPSState:
    """Product-state entries of the make_state catalog as a chi=1 MPS."""
    conv = basis_convention or p.basis_convention
    lo, hi = ("-", "+") if conv == Z_COND else ("down", "up")
    n = p.n_sites
    d_b = p.n_max + 1

    def boson(occ):
        v = np.zeros(d_b)
        v[occ] = 1.0
        return v

    def qubit(which):
        return hb.QUBIT_KETS[which]

    if kind == "chain_single":
        site = kwargs["site"]
        occ = [1 if i == site else 0 for i in range(1, n + 1)]
        plus = set(range(1, site))
    elif kind == "chain_pair":
        i0, j0 = kwargs["sites"]
        occ = [0] * n
        occ[i0 - 1] += 1
        occ[j0 - 1] += 1
        plus = set(range(i0, j0))
    elif kind == "chain_vacuum_halffilled":
        occ = [1 if i % 2 == 1 else 0 for i in range(1, n + 1)]
        plus = set()
    elif kind in ("chain_meson", "chain_string"):
        if kind == "chain_meson":
            i0 = kwargs["site"]
            j0 = i0 + 1
        else:
            i0, j0 = kwargs["sites"]
        if i0 % 2 != 0 or j0 % 2 != 1:
            raise ValueError("particle site must be even, hole site odd")
        occ = [1 if i % 2 == 1 else 0 for i in range(1, n + 1)]
        occ[i0 - 1] += 1
        occ[j0 - 1] -= 1
        plus = set(range(i0, j0))
    else:
        raise ValueError(f"not a product-state kind: {kind!r}")

    kets, dims = [], []
    for i in range(1, n + 1):
        kets.append(boson(occ[i - 1]))
        dims.append(d_b)
        if i < n:
            kets.append(qubit(hi if i in plus else lo))
            dims.append(2)
    return product_mps(kets, dims, chi=chi)


# ----------------------------------------------------------------------
# Canonical form and padding
# ----------------------------------------------------------------------

def right_canonicalize(psi: MPSState):
    """Bring all tensors except the first to right-canonical form in place."""
    for i in range(psi.n_sites - 1, 0, -1):
        t = psi.tensors[i]
        dl, d, dr = t.shape
        mat = t.reshape(dl, d * dr)
        q, r = np.linalg.qr(mat.conj().T)
        q = q.conj().T  # (k, d*dr) with orthonormal rows
        k = q.shape[0]
        psi.tensors[i] = q.reshape(k, d, dr)
        psi.tensors[i - 1] = np.tensordot(psi.tensors[i - 1], r.conj().T,
                                          axes=([2], [0]))
    psi.center = 0


def max_bond_profile(dims, chi):
    """min(chi, product of dims from either side) at each internal bond."""
    n = len(dims)
    left = np.cumprod(dims)
    right = np.cumprod(dims[::-1])[::-1]
    out = []
    for k in range(n - 1):
        out.append(int(min(chi, left[k], right[k + 1])))
    return out


def pad_to_chi(psi: MPSState, chi: int):
    """Zero-pad bonds up to min(chi, physically possible rank), in place.

    One-site TDVP cannot grow bonds, so the padding reserves the rank the
    dynamics will fill; padded directions are exact zeros and do not change
    the state.
    """
    dims = psi.dims()
    target = max_bond_profile(dims, chi)
    for k in range(psi.n_sites - 1):
        dl, d, dr = psi.tensors[k].shape
        grow = target[k] - dr
        if grow <= 0:
            continue
        t = psi.tensors[k]
        psi.tensors[k] = np.concatenate(
            [t, np.zeros((dl, d, grow), dtype=complex)], axis=2)
        t2 = psi.tensors[k + 1]
        psi.tensors[k + 1] = np.concatenate(
            [t2, np.zeros((grow,) + t2.shape[1:], dtype=complex)], axis=0)
    psi.chi = chi


# ----------------------------------------------------------------------
# Environments and effective Hamiltonians
# ----------------------------------------------------------------------

def _update_left_env(L, a_ket, w):
    # L[a,wl,b]; a_bra = conj(a_ket); -> L'[a',wr,b']
    tmp = np.tensordot(L, a_ket, axes=([2], [0]))          # a, wl, s', b'
    tmp = np.tensordot(tmp, w, axes=([1, 2], [0, 3]))      # a, b', wr, s
    out = np.tensordot(np.conj(a_ket), tmp, axes=([0, 1], [0, 3]))  # a', b', wr
    return out.transpose(0, 2, 1)


def _update_right_env(R, b_ket, w):
    # R[abra,wr,aket] right of a site -> R'[bbra,wl,bket] left of it
    tmp = np.tensordot(b_ket, R, axes=([2], [2]))          # bket, s', abra, wr
    tmp = np.tensordot(w, tmp, axes=([1, 3], [3, 1]))      # wl, s, bket, abra
    out = np.tensordot(tmp, np.conj(b_ket), axes=([1, 3], [1, 2]))  # wl, bket, bbra
    return out.transpose(2, 0, 1)


def _h_eff_site(L, w, R, v):
    # v[a', s', b'] -> (H_eff v)[a, s, b]
    tmp = np.tensordot(L, v, axes=([2], [0]))              # a, wl, s', b'
    tmp = np.tensordot(tmp, w, axes=([1, 2], [0, 3]))      # a, b', wr, s
    out = np.tensordot(tmp, R, axes=([1, 2], [2, 1]))      # a, s, b
    return out


def _h_eff_bond(L, R, v):
    # v[a', b'] -> (K_eff v)[a, b]
    tmp = np.tensordot(L, v, axes=([2], [0]))              # a, w, b'
    out = np.tensordot(tmp, R, axes=([1, 2], [1, 2]))      # a, b
    return out


# ----------------------------------------------------------------------
# Measurements
# ----------------------------------------------------------------------

def measure_local(psi: MPSState, ops: dict) -> dict:
    """Expectation of single-site operators {site_index: matrix or list}.

    ``ops`` maps MPS site index to a local operator (or list of operators);
    returns {site: value or list}.  The state must be canonical with
    center 0 (call right_canonicalize first if unsure).
    """
    work = psi if psi.center == 0 else None
    if work is None:
        work = psi.copy()
        right_canonicalize(work)
    env = np.ones((1, 1), dtype=complex)
    nrm = None
    out = {}
    for i, t in enumerate(work.tensors):
        if nrm is None:
            nrm = float(np.linalg.norm(t))
        if i in ops:
            o = ops[i]
            many = isinstance(o, (list, tuple))
            locs = o if many else [o]
            vals = []
            for op in locs:
                tmp = np.tensordot(env, t, axes=([1], [0]))       # a, s', b
                tmp = np.tensordot(np.asarray(op, dtype=complex), tmp,
                                   axes=([1], [1]))               # s, a, b
                val = np.tensordot(np.conj(t), tmp, axes=([0, 1, 2], [1, 0, 2]))
                vals.append(complex(val) / nrm ** 2)
            out[i] = vals if many else vals[0]
        env = np.tensordot(env, t, axes=([1], [0]))               # a, s, b
        env = np.tensordot(np.conj(t), env, axes=([0, 1], [0, 1]))
    return out


def entropy_profile(psi: MPSState) -> np.ndarray:
    """Von Neumann entropy (nats) at every internal bond."""
    work = psi.copy()
    right_canonicalize(work)
    ents = []
    carry = work.tensors[0]
    for i in range(work.n_sites - 1):
        dl, d, dr = carry.shape
        u, s, vh = np.linalg.svd(carry.reshape(dl * d, dr), full_matrices=False)
        s = s / np.linalg.norm(s)
        p = s ** 2
        p = p[p > 1e-16]
        ents.append(float(-np.sum(p * np.log(p))))
        nxt = np.tensordot(np.diag(s) @ vh, work.tensors[i + 1], axes=([1], [0]))
        carry = nxt
    return np.asarray(ents)


def overlap(psi: MPSState, phi: MPSState) -> complex:
    """<phi|psi> by transfer contraction."""
    env = np.ones((1, 1), dtype=complex)
    for a, b in zip(psi.tensors, phi.tensors):
        tmp = np.tensordot(env, a, axes=([0], [0]))      # bphi, s, bpsi_r
        env = np.tensordot(np.conj(b), tmp, axes=([0, 1], [0, 1]))
    na = np.sqrt(abs(_self_overlap(psi)))
    nb = np.sqrt(abs(_self_overlap(phi)))
    return complex(env[0, 0] / (na * nb))


def _self_overlap(psi):
    env = np.ones((1, 1), dtype=complex)
    for a in psi.tensors:
        tmp = np.tensordot(env, a, axes=([0], [0]))
        env = np.tensordot(np.conj(a), tmp, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


def fidelity_to(psi: MPSState, phi: MPSState) -> float:
    return float(abs(overlap(psi, phi)) ** 2)


def measure(psi: MPSState, what, p: Optional[ChainParams] = None, **kwargs):
    """Named measurements: 'n' (all boson sites), 'sx'/'sz' (all links),
    'entropy' (all cuts), 'fidelity_to' (kwargs: other=MPSState)."""
    n_sites = (psi.n_sites + 1) // 2
    if what == "n":
        d = psi.dims()[0]
        ops = {2 * (i - 1): hb.number_local(d - 1) for i in range(1, n_sites + 1)}
        vals = measure_local(psi, ops)
        return np.array([vals[2 * (i - 1)].real for i in range(1, n_sites + 1)])
    if what in ("sx", "sz"):
        pauli = hb.PAULI[what[1]]
        ops = {2 * i - 1: pauli for i in range(1, n_sites)}
        vals = measure_local(psi, ops)
        return np.array([vals[2 * i - 1].real for i in range(1, n_sites)])
    if what == "entropy":
        return entropy_profile(psi)
    if what == "fidelity_to":
        return fidelity_to(psi, kwargs["other"])
    raise ValueError(f"unknown measurement {what!r}")


# ----------------------------------------------------------------------
# TDVP
# ----------------------------------------------------------------------

@dataclass
class TDVPConfig:
    dt: float = 0.05
    n_steps: int = 100
    chi: int = 100
    krylov_tol: float = 1e-10
    krylov_max_dim: int = 25
    measure_every: int = 1
    checkpoint_path: Optional[str] = None
    checkpoint_every: int = 0
    norm_tolerance: float = 1e-8


class TDVPEngine:
    """One-site TDVP with symmetrized (second-order) sweeps."""

    def __init__(self, psi: MPSState, mpo: MPO, config: TDVPConfig):
        if psi.n_sites != mpo.n_sites:
            raise ValueError("MPS and MPO site counts differ")
        self.psi = psi.copy()
        pad_to_chi(self.psi, config.chi)
        right_canonicalize(self.psi)
        nrm = np.linalg.norm(self.psi.tensors[0])
        self.psi.tensors[0] = self.psi.tensors[0] / nrm
        self.mpo = mpo
        self.cfg = config
        self.norm_drift = 0.0
        n = self.psi.n_sites
        self.Lenv = [None] * (n + 1)
        self.Renv = [None] * (n + 1)
        self.Lenv[0] = np.ones((1, 1, 1), dtype=complex)
        self.Renv[n] = np.ones((1, 1, 1), dtype=complex)
        for i in range(n - 1, 0, -1):
            self.Renv[i] = _update_right_env(self.Renv[i + 1],
                                             self.psi.tensors[i],
                                             self.mpo.tensors[i])

    def _evolve_site(self, i, tau):
        t = self.psi.tensors[i]
        shape = t.shape
        matvec = lambda v: _h_eff_site(self.Lenv[i], self.mpo.tensors[i],
                                       self.Renv[i + 1],
                                       v.reshape(shape)).reshape(-1)
        out = _lanczos_expm_step(matvec, t.reshape(-1), tau,
                                 self.cfg.krylov_max_dim, self.cfg.krylov_tol)
        self.psi.tensors[i] = out.reshape(shape)

    def _evolve_bond(self, L, R, c, tau):
        shape = c.shape
        matvec = lambda v: _h_eff_bond(L, R, v.reshape(shape)).reshape(-1)
        out = _lanczos_expm_step(matvec, c.reshape(-1), -tau,
                                 self.cfg.krylov_max_dim, self.cfg.krylov_tol)
        return out.reshape(shape)

    def _sweep_right(self, tau):
        n = self.psi.n_sites
        for i in range(n - 1):
            self._evolve_site(i, tau)
            t = self.psi.tensors[i]
            dl, d, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl * d, dr))
            self.psi.tensors[i] = q.reshape(dl, d, q.shape[1])
            self.Lenv[i + 1] = _update_left_env(self.Lenv[i],
                                                self.psi.tensors[i],
                                                self.mpo.tensors[i])
            r = self._evolve_bond(self.Lenv[i + 1], self.Renv[i + 1], r, tau)
            self.psi.tensors[i + 1] = np.tensordot(r, self.psi.tensors[i + 1],
                                                   axes=([1], [0]))
        self._evolve_site(n - 1, tau)
        self.psi.center = n - 1

    def _sweep_left(self, tau):
        n = self.psi.n_sites
        for i in range(n - 1, 0, -1):
            self._evolve_site(i, tau)
            t = self.psi.tensors[i]
            dl, d, dr = t.shape
            q, r = np.linalg.qr(t.reshape(dl, d * dr).conj().T)
            k = q.shape[1]
            self.psi.tensors[i] = q.conj().T.reshape(k, d, dr)
            self.Renv[i] = _update_right_env(self.Renv[i + 1],
                                             self.psi.tensors[i],
                                             self.mpo.tensors[i])
            c = r.conj().T  # (dl, k)
            c = self._evolve_bond(self.Lenv[i], self.Renv[i], c, tau)
            self.psi.tensors[i - 1] = np.tensordot(self.psi.tensors[i - 1], c,
                                                   axes=([2], [0]))
        self._evolve_site(0, tau)
        self.psi.center = 0

    def step(self):
        tau = 0.5 * self.cfg.dt
        self._sweep_right(tau)
        self._sweep_left(tau)
        c = self.psi.tensors[0]
        nrm = np.linalg.norm(c)
        self.norm_drift = max(self.norm_drift, abs(nrm - 1.0))
        if abs(nrm - 1.0) > self.cfg.norm_tolerance:
            raise RuntimeError(f"TDVP norm drifted by {abs(nrm-1.0):.2e}")
        self.psi.tensors[0] = c / nrm


def tdvp_evolve(psi: MPSState, mpo: MPO, config: TDVPConfig,
                measure_fn: Optional[Callable] = None):
    """Evolve an MPS under the MPO, measuring every ``measure_every`` steps.

    ``measure_fn(mps, time)`` returns a dict of channel values.  Returns
    (times, records, final_mps, norm_drift); records is a dict of arrays.
    """
    eng = TDVPEngine(psi, mpo, config)
    times = [0.0]
    records = []
    if measure_fn is not None:
        records.append(measure_fn(eng.psi, 0.0))
    ckpt = 0
    for step in range(1, config.n_steps + 1):
        eng.step()
        t_now = step * config.dt
        if measure_fn is not None and step % config.measure_every == 0:
            times.append(t_now)
            records.append(measure_fn(eng.psi, t_now))
        if (config.checkpoint_path and config.checkpoint_every
                and step % config.checkpoint_every == 0):
            write_checkpoint(f"{config.checkpoint_path}.step{step:06d}", eng.psi)
            ckpt += 1
    channels = {}
    if records:
        for key in records[0]:
            channels[key] = np.array([r[key] for r in records])
    return np.asarray(times), channels, eng.psi, eng.norm_drift


# ----------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------

def write_checkpoint(path: str, psi: MPSState):
    """Binary checkpoint: magic, site count, per-site shapes and raw data."""
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<qq", psi.n_sites, psi.center))
        for t in psi.tensors:
            f.write(struct.pack("<qqq", *t.shape))
            f.write(np.ascontiguousarray(t, dtype=np.complex128).tobytes())


def read_checkpoint(path: str) -> MPSState:
    with open(path, "rb") as f:
        magic = f.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"not a checkpoint file (magic {magic!r})")
        n, center = struct.unpack("<qq", f.read(16))
        tensors = []
        for _ in range(n):
            dl, d, dr = struct.unpack("<qqq", f.read(24))
            buf = f.read(dl * d * dr * 16)
            tensors.append(np.frombuffer(buf, dtype=np.complex128).reshape(dl, d, dr).copy())
    return MPSState(tensors, center=center)
