"""Realistic laser-ion Hamiltonians for one trapped ion and two motional
modes, in the interaction picture with respect to the qubit and secular
frequencies and with no Lamb-Dicke truncation: displacement exponentials are
evaluated exactly on the truncated Fock space.

Three drive schemes produce the gauge link:

* light-shift (LS): a far-detuned two-beam potential whose differential
  cross term gives H = Omega12 sigma_z cos(K(t) - omega_d t), conditioning
  the parametric mode conversion on sigma_z.
* Molmer-Sorensen (MS): a bichromatic field symmetric about the qubit,
  H = Omega cos(delta t)(sigma_+ e^{iK(t)} + H.c.) + (delta_s/2) sigma_z,
  conditioning on sigma_x.
* orthogonal state-dependent forces (SDF): two bichromats detuned by delta
  from different sidebands; their second-order interference gives the
  sigma_z-conditioned tunneling i Omega^2 eta_x eta_z/(2 delta), with
  spurious carriers rotating about the axes orthogonal to each force.

All Hamiltonians share one kernel-friendly structure (see ``_kernels``):
rotating terms M_k o exp(i PHI_k t) with scalar amplitudes, plus static
Hermitian terms with real amplitudes.

Angular frequencies (rad/s) everywhere; preset data files carry f = w/2pi
in Hz for readability and are converted on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from typing import Callable, Optional, Sequence

import numpy as np

from . import hilbert as hb
from .gauge import LinkParams, PlaquetteParams, X_COND, Z_COND
from .hilbert import LinearOperator, ModeSpec, QubitSpec, SpaceLayout, compose_space

HBAR = 1.054571817e-34  # J s

TWO_PI = 2.0 * np.pi


def lamb_dicke_parameter(k_along_mode: float, mass: float, omega: float) -> float:
    """eta = k_e * sqrt(hbar / 2 m omega); valid inputs give eta << 1."""
    return float(k_along_mode * np.sqrt(HBAR / (2.0 * mass * omega)))


# ----------------------------------------------------------------------
# Presets
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TrapPreset:
    """Trap and beam numbers for one ion; frequencies in rad/s."""

    name: str
    species: str
    qubit_kind: str              # "raman_ground" | "optical_quadrupole"
    omega_z: float
    omega_x: float
    eta_z: float
    eta_x: float
    omega_rabi_max: float        # largest drive amplitude considered
    notes: str = ""

    def __post_init__(self):
        if not (0.0 < self.eta_z < 1.0 and 0.0 < self.eta_x < 1.0):
            raise ValueError("Lamb-Dicke parameters must lie in (0, 1)")
        if self.omega_z <= 0 or self.omega_x <= 0:
            raise ValueError("secular frequencies must be positive")

    @property
    def mode_splitting(self) -> float:
        return self.omega_x - self.omega_z


def load_preset(name: str) -> TrapPreset:
    """Load a shipped preset (sr88_raman, sr88_quadrupole, sr88_quadrupole_ls)."""
    path = resources.files("z2forge").joinpath(f"presets/{name}.json")
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise KeyError(f"no preset named {name!r}") from None
    return TrapPreset(
        name=data["name"], species=data["species"], qubit_kind=data["qubit_kind"],
        omega_z=TWO_PI * data["f_z_hz"], omega_x=TWO_PI * data["f_x_hz"],
        eta_z=data["eta_z"], eta_x=data["eta_x"],
        omega_rabi_max=TWO_PI * data["f_rabi_max_hz"], notes=data.get("notes", ""),
    )


PRESET_NAMES = ("sr88_raman", "sr88_quadrupole", "sr88_quadrupole_ls")


# ----------------------------------------------------------------------
# Pulse envelopes and schedules
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PulseEnvelope:
    """sin^2-ramped pulse: rise, flat plateau, symmetric fall.

    Total duration is ``plateau + 2 rise``; the full width at half maximum
    is ``plateau + rise``.  ``area_power(p)`` integrates (f(t))^p, the
    equivalent square-pulse duration of a process scaling like Omega^p.
    """

    rise: float
    plateau: float

    def __post_init__(self):
        if self.rise < 0:
            raise ValueError("rise time must be >= 0")
        if self.duration <= 0:
            raise ValueError("pulse must have positive duration")

    @property
    def duration(self) -> float:
        return self.plateau + 2.0 * self.rise

    @property
    def fwhm(self) -> float:
        return self.plateau + self.rise

    def amplitude(self, t):
        """Envelope in [0, 1]; continuous, zero at both ends."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if self.rise > 0:
            up = (t >= 0) & (t < self.rise)
            out[up] = np.sin(0.5 * np.pi * t[up] / self.rise) ** 2
            down = (t > self.rise + self.plateau) & (t <= self.duration)
            out[down] = np.sin(0.5 * np.pi * (self.duration - t[down]) / self.rise) ** 2
        flat = (t >= self.rise) & (t <= self.rise + self.plateau)
        out[flat] = 1.0
        return out

    def area_power(self, p: int = 1) -> float:
        if self.rise == 0:
            return self.plateau
        # int sin^2p over one ramp: rise/2 for p=1, 3 rise/8 for p=2
        ramp = {1: 0.5, 2: 0.375}[p] * self.rise
        return self.plateau + 2.0 * ramp


CONSTANT_ENVELOPE = None  # sentinel: amplitude identically 1


@dataclass(frozen=True)
class PulseSegment:
    kind: str                    # "sdf" | "carrier" | "ls" | "ms"
    envelope: PulseEnvelope
    tones: dict
    duration: float


@dataclass(frozen=True)
class PulseSchedule:
    """Ordered pulse segments; SDF plateaus must close phase-space loops."""

    segments: tuple
    delta: float = 0.0
    trotter_error: float = 0.0

    def __post_init__(self):
        for seg in self.segments:
            if seg.duration <= 0:
                raise ValueError("segment durations must be positive")
            if seg.kind == "sdf" and self.delta > 0:
                loop = TWO_PI / self.delta
                ratio = seg.envelope.fwhm / loop
                if abs(ratio - round(ratio)) > 1e-9:
                    raise ValueError("SDF pulse FWHM (plateau + rise) must be "
                                     "an integer multiple of 2 pi/delta to "
                                     "close the phase-space loops")

    @property
    def duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))


def make_trotter_schedule(n_steps: int, delta: float, h: float,
                          carrier_pulse_area: Optional[float] = None,
                          rise: float = 3.6e-6, loops_per_segment: int = 1,
                          carrier_duration: float = 2.0e-6,
                          sdf_tones: Optional[dict] = None) -> PulseSchedule:
    """Alternating SDF and carrier segments realizing tunneling plus h sigma_x.

    Each SDF segment has plateau ``loops_per_segment * 2 pi/delta`` with
    sin^2 ramps; each carrier segment realizes exp(-i h T_seg sigma_x) via a
    pulse of area 2 h T_seg (T_seg = SDF segment duration).  The reported
    Trotter error is h * t_link * (2 pi/delta)^2 = h t / delta^2 when the
    tones carry the effective tunneling, else h/delta^2-scaled by the given
    area.  h = 0 gives pure SDF segments.
    """
    if n_steps < 1:
        raise ValueError("need at least one Trotter step")
    if delta <= 0:
        raise ValueError("delta must be positive")
    plateau = loops_per_segment * TWO_PI / delta - rise
    if plateau < 2.0 * rise:
        raise ValueError("SDF plateau shorter than twice the ramp time; "
                         "increase loops_per_segment or shorten the ramps")
    env = PulseEnvelope(rise=rise, plateau=plateau)
    t_seg = env.duration
    area = carrier_pulse_area if carrier_pulse_area is not None else 2.0 * h * t_seg
    segments = []
    tones = dict(sdf_tones or {})
    t_link = tones.get("t_link", 0.0)
    for _ in range(n_steps):
        segments.append(PulseSegment("sdf", env, tones, env.duration))
        if h != 0.0:
            c_env = PulseEnvelope(rise=0.0, plateau=carrier_duration)
            c_tones = {"axis": "x", "omega_rabi": area / carrier_duration, "area": area}
            segments.append(PulseSegment("carrier", c_env, c_tones, carrier_duration))
    err = abs(h) * abs(t_link) / delta ** 2 if t_link else abs(h) * (TWO_PI / delta) ** 2 / TWO_PI ** 2
    return PulseSchedule(tuple(segments), delta=delta, trotter_error=float(err))


# ----------------------------------------------------------------------
# Phase-modulated Hamiltonian container
# ----------------------------------------------------------------------

class PhaseModulatedHamiltonian:
    """H(t) = sum_k c_k(t) (M_k o e^{i PHI_k t}) + H.c. + sum_j d_j(t) S_j
    with PHI_k[r, c] = phi_k[r] - phi_k[c] - omega_k.

    Terms are stored as (M, phi_diag, omega, amp_fn); the scalar e^{-i omega t}
    factor is folded into the sampled amplitudes handed to the RK4 kernel.
    ``matrix(t)`` assembles the dense operator for verification (Hermitian
    by construction at every t).
    """

    def __init__(self, layout: SpaceLayout, terms, herm_terms, fastest: float):
        self.layout = layout
        dim = layout.dim
        self._M = np.array([m for m, _, _, _ in terms], dtype=np.complex128) \
            if terms else np.zeros((0, dim, dim), dtype=np.complex128)
        self._pdiag = np.array([p for _, p, _, _ in terms], dtype=float) \
            if terms else np.zeros((0, dim))
        self._omegas = np.array([w for _, _, w, _ in terms], dtype=float) \
            if terms else np.zeros(0)
        self._amp_fns = [fn for _, _, _, fn in terms]
        self._S = np.array([s for s, _ in herm_terms], dtype=np.complex128) \
            if herm_terms else np.zeros((0, dim, dim), dtype=np.complex128)
        self._damp_fns = [fn for _, fn in herm_terms]
        self._fastest = float(fastest)

    def kernel_arrays(self):
        return self._M, self._pdiag, self._S

    def amplitudes(self, t):
        t = np.asarray(t, dtype=float)
        amps = np.zeros((len(self._amp_fns), t.size), dtype=np.complex128)
        for k, fn in enumerate(self._amp_fns):
            amps[k] = np.broadcast_to(fn(t), t.shape) * np.exp(-1j * self._omegas[k] * t)
        damps = np.zeros((len(self._damp_fns), t.size), dtype=float)
        for j, fn in enumerate(self._damp_fns):
            damps[j] = np.broadcast_to(fn(t), t.shape)
        return amps, damps

    def fastest_frequency(self) -> float:
        return self._fastest

    def matrix(self, t: float) -> LinearOperator:
        h = np.zeros((self.layout.dim, self.layout.dim), dtype=np.complex128)
        for k, fn in enumerate(self._amp_fns):
            a = complex(np.asarray(fn(np.array([t])), dtype=complex).ravel()[0])
            a *= np.exp(-1j * self._omegas[k] * t)
            u = np.exp(1j * self._pdiag[k] * t)
            block = a * (u[:, None] * self._M[k] * np.conj(u)[None, :])
            h += block + block.conj().T
        for j, fn in enumerate(self._damp_fns):
            d = float(np.asarray(fn(np.array([t])), dtype=float).ravel()[0])
            h += d * self._S[j]
        return LinearOperator(self.layout, h, hermitian=True)


def hardware_link_layout(n_max: int) -> SpaceLayout:
    """[mode_z, qubit, mode_x]: axial mode is gauge site 1, radial site 2."""
    return compose_space([ModeSpec(n_max, "mode_z"), QubitSpec("ion"),
                          ModeSpec(n_max, "mode_x")])


def _displacement_base(layout: SpaceLayout, eta_z: float, eta_x: float) -> np.ndarray:
    """exp[i(eta_z X_z + eta_x X_x)] at t = 0, exact on the truncated space."""
    def expx(n_max, eta):
        x = hb.destroy_local(n_max)
        x = x + x.conj().T
        evals, vecs = np.linalg.eigh(x)
        return (vecs * np.exp(1j * eta * evals)) @ vecs.conj().T

    ez = expx(layout.factors[0].n_max, eta_z)
    ex = expx(layout.factors[2].n_max, eta_x)
    return hb.embed(layout, {0: ez, 2: ex}).to_dense()


def _mode_phase_diag(layout: SpaceLayout, omega_z: float, omega_x: float) -> np.ndarray:
    phi = omega_z * hb._diag_embed(layout, 0, np.arange(layout.factors[0].dim, dtype=float))
    phi += omega_x * hb._diag_embed(layout, 2, np.arange(layout.factors[2].dim, dtype=float))
    return phi


def _envelope_fn(envelope: Optional[PulseEnvelope], scale=1.0,
                 origin: float = 0.0) -> Callable:
    if envelope is None:
        return lambda t: scale * np.ones_like(np.asarray(t, dtype=float))
    return lambda t: scale * envelope.amplitude(np.asarray(t, dtype=float) - origin)


def _const_fn(value):
    return lambda t: value * np.ones_like(np.asarray(t, dtype=float))


# ----------------------------------------------------------------------
# Scheme generators
# ----------------------------------------------------------------------

def ls_generator(preset: TrapPreset, omega12: float, omega_d: Optional[float] = None,
                 phi_d: float = 0.0, n_max: int = 7,
                 envelope: Optional[PulseEnvelope] = None,
                 h_field: float = 0.0, field_envelope: Optional[PulseEnvelope] = None,
                 ac_stark: float = 0.0,
                 envelope_origin: float = 0.0) -> PhaseModulatedHamiltonian:
    """Light-shift drive H = Omega12(t) sigma_z cos(K(t) - omega_d t + phi_d)
    plus the resonant carrier h sigma_x and an optional uncompensated
    ac-Stark diagonal.  Beat note defaults to omega_x - omega_z."""
    layout = hardware_link_layout(n_max)
    if omega_d is None:
        omega_d = preset.mode_splitting
    base = _displacement_base(layout, preset.eta_z, preset.eta_x)
    sz = hb.embed(layout, {1: hb.PAULI["z"]}).to_dense()
    m = 0.5 * omega12 * np.exp(1j * phi_d) * (sz @ base)
    phi_diag = _mode_phase_diag(layout, preset.omega_z, preset.omega_x)
    terms = [(m, phi_diag, omega_d, _envelope_fn(envelope, origin=envelope_origin))]
    herm = []
    if h_field != 0.0:
        sx = hb.embed(layout, {1: hb.PAULI["x"]}).to_dense()
        herm.append((sx, _envelope_fn(field_envelope if field_envelope is not None
                                      else envelope, scale=h_field,
                                      origin=envelope_origin)))
    if ac_stark != 0.0:
        herm.append((sz, _const_fn(ac_stark)))
    fastest = 2.0 * (preset.omega_z + preset.omega_x) + abs(omega_d)
    return PhaseModulatedHamiltonian(layout, terms, herm, fastest)


def ms_generator(preset: TrapPreset, omega: float, delta: Optional[float] = None,
                 delta_s: float = 0.0, n_max: int = 7,
                 envelope: Optional[PulseEnvelope] = None,
                 envelope_origin: float = 0.0) -> PhaseModulatedHamiltonian:
    """Molmer-Sorensen drive H = Omega(t) cos(delta t)(sigma_+ e^{iK(t)} + H.c.)
    + (delta_s/2) sigma_z.  The bichromat detuning defaults to the mode
    splitting (frequency-conversion resonance)."""
    layout = hardware_link_layout(n_max)
    if delta is None:
        delta = preset.mode_splitting
    base = _displacement_base(layout, preset.eta_z, preset.eta_x)
    sp = hb.embed(layout, {1: hb.SIGMA_PLUS}).to_dense()
    m = omega * (sp @ base)
    phi_diag = _mode_phase_diag(layout, preset.omega_z, preset.omega_x)
    env = _envelope_fn(envelope, origin=envelope_origin)
    terms = [(m, phi_diag, 0.0,
              lambda t: env(t) * np.cos(delta * np.asarray(t, dtype=float)))]
    herm = []
    if delta_s != 0.0:
        sz = hb.embed(layout, {1: hb.PAULI["z"]}).to_dense()
        herm.append((sz, _const_fn(0.5 * delta_s)))
    fastest = 2.0 * (preset.omega_z + preset.omega_x) + abs(delta)
    return PhaseModulatedHamiltonian(layout, terms, herm, fastest)


def sdf_generator(preset: TrapPreset, omega: float, delta: float, n_max: int = 5,
                  envelope: Optional[PulseEnvelope] = None,
                  include_carrier: bool = True,
                  carrier_phases: Sequence[float] = (0.0, 0.0),
                  envelope_origin: float = 0.0) -> PhaseModulatedHamiltonian:
    """Two orthogonal state-dependent forces detuned by delta:
    (eta_x Omega/2) sigma_x (a_x e^{-i delta t} + H.c.)
    + (eta_z Omega/2) sigma_y (a_z e^{-i delta t} + H.c.),
    with optional spurious carriers Omega cos((omega_alpha + delta) t) about
    the axis orthogonal to each force."""
    layout = hardware_link_layout(n_max)
    ax = hb.embed(layout, {1: hb.PAULI["x"], 2: hb.destroy_local(n_max)}).to_dense()
    az = hb.embed(layout, {1: hb.PAULI["y"], 0: hb.destroy_local(n_max)}).to_dense()
    dim = layout.dim
    zero_diag = np.zeros(dim)
    env = _envelope_fn(envelope, origin=envelope_origin)
    terms = [(0.5 * preset.eta_x * omega * ax, zero_diag, delta, env),
             (0.5 * preset.eta_z * omega * az, zero_diag, delta, env)]
    herm = []
    if include_carrier:
        sy = hb.embed(layout, {1: hb.PAULI["y"]}).to_dense()
        sx = hb.embed(layout, {1: hb.PAULI["x"]}).to_dense()
        wx, wz = preset.omega_x + delta, preset.omega_z + delta
        px, pz = carrier_phases

        def carr(freq, phase):
            return lambda t: omega * env(t) * np.cos(freq * np.asarray(t, dtype=float) + phase)

        herm.append((sy, carr(wx, px)))   # orthogonal to the sigma_x force
        herm.append((sx, carr(wz, pz)))   # orthogonal to the sigma_y force
    fastest = preset.omega_x + delta
    return PhaseModulatedHamiltonian(layout, terms, herm, fastest)


def carrier_drive(omega_rabi: float, axis: str, layout: SpaceLayout,
                  ac_stark_mismatch: float = 0.0) -> LinearOperator:
    """(Omega/2) sigma_axis, the resonant field term h = Omega/2.

    A nonzero ``ac_stark_mismatch`` models a tone that was not retuned to
    the light-shifted qubit and adds the residual sigma_z detuning.
    """
    if axis not in ("x", "y", "z"):
        raise ValueError(f"unknown axis {axis!r}")
    qubits = layout.qubit_indices()
    if not qubits:
        raise hb.LayoutError("carrier drive needs a qubit in the layout")
    m = 0.5 * omega_rabi * hb.embed(layout, {qubits[0]: hb.PAULI[axis]}).to_dense()
    if ac_stark_mismatch != 0.0:
        m = m + ac_stark_mismatch * hb.embed(layout, {qubits[0]: hb.PAULI["z"]}).to_dense()
    return LinearOperator(layout, m, hermitian=True)


# time-slice views matching the one-operator-per-time signature
def ls_hamiltonian(preset, omega12, omega_d, phi_d, t, **kw) -> LinearOperator:
    return ls_generator(preset, omega12, omega_d, phi_d, **kw).matrix(t)


def ms_hamiltonian(preset, omega, delta, delta_s, t, **kw) -> LinearOperator:
    return ms_generator(preset, omega, delta, delta_s, **kw).matrix(t)


def sdf_pair_hamiltonian(preset, omega, delta, phases, t, include_carrier=True,
                         **kw) -> LinearOperator:
    return sdf_generator(preset, omega, delta, include_carrier=include_carrier,
                         carrier_phases=phases, **kw).matrix(t)


# ----------------------------------------------------------------------
# Effective parameters
# ----------------------------------------------------------------------

def effective_link_params(scheme: str, preset: TrapPreset, tones: dict) -> LinkParams:
    """Predicted (t_link, h, convention) for a scheme.

    LS: t = |Omega12| eta_x eta_z / 2, h = Omega_carrier/2, z-conditioned.
    MS: t = |Omega| eta_x eta_z / 2, h = delta_s/2, x-conditioned.
    SDF: t = Omega^2 eta_x eta_z / (2 delta) (pre-ramp), h from the Trotter
         carrier area over a cycle, z-conditioned.
    """
    ee = preset.eta_x * preset.eta_z
    if scheme == "LS":
        t = abs(tones["omega12"]) * ee / 2.0
        h = 0.5 * tones.get("omega_carrier", 0.0)
        return LinkParams(t_link=t, h=h, basis_convention=Z_COND)
    if scheme == "MS":
        t = abs(tones["omega"]) * ee / 2.0
        h = 0.5 * tones.get("delta_s", 0.0)
        return LinkParams(t_link=t, h=h, basis_convention=X_COND)
    if scheme == "SDF":
        t = tones["omega"] ** 2 * ee / (2.0 * tones["delta"])
        if "h" in tones:
            h = tones["h"]
        elif "carrier_area" in tones and "cycle_duration" in tones:
            h = 0.5 * tones["carrier_area"] / tones["cycle_duration"]
        else:
            h = 0.0
        return LinkParams(t_link=t, h=h, basis_convention=Z_COND)
    raise ValueError(f"unknown scheme {scheme!r}")


def plaquette_effective(preset: TrapPreset, omega12: float,
                        omega_carrier: float = 0.0) -> PlaquetteParams:
    """Center-of-mass-mode plaquette couplings: the tunnelings halve with
    respect to the single-ion link, t_n = Omega12 eta_x eta_z / 4."""
    t = omega12 * preset.eta_x * preset.eta_z / 4.0
    return PlaquetteParams(t1=t, t2=t, h=0.5 * omega_carrier)


def chain_effective_tunneling(preset: TrapPreset, omega12: float) -> float:
    """Dimer center-of-mass tunneling Omega12 eta_x eta_z / 4 per link."""
    return omega12 * preset.eta_x * preset.eta_z / 4.0


# ----------------------------------------------------------------------
# Spectator-mode detuning requirement
# ----------------------------------------------------------------------

def spectator_error(t_link: float, t_spectator: float, detuning: float,
                    n_t: int = 400) -> float:
    """Peak population leaked into an equally-coupled spectator mode over one
    exchange of the effective link (dimensionless envelope error)."""
    from . import evolve  # local import to avoid a cycle
    lay = compose_space([ModeSpec(1, "site1"), QubitSpec("link"),
                         ModeSpec(1, "site2"), ModeSpec(1, "spect")])
    a1 = hb.annihilation(lay, 0)
    sz = hb.pauli(lay, 1, "z")
    hop = t_link * (hb.creation(lay, 2) @ sz @ a1) \
        + t_spectator * (hb.creation(lay, 3) @ sz @ a1)
    m = hop.matrix + hop.matrix.conj().T + detuning * hb.number(lay, 3).matrix
    H = LinearOperator(lay, m, hermitian=True)
    psi0 = hb.product_state(lay, (1, "-", 0, 0))
    t_ex = np.pi / (2.0 * abs(t_link))
    grid = np.linspace(0.0, 1.2 * t_ex, n_t)
    traj = evolve.evolve_static(H, psi0, grid,
                                observables={"n_s": hb.number(lay, 3)})
    return float(np.max(traj.channels["n_s"].real))


def spectator_min_detuning(omega: float, eta: float, eps: float,
                           scheme: str = "LS", delta: Optional[float] = None,
                           detuning_max: Optional[float] = None) -> float:
    """Smallest spectator detuning keeping the leakage error <= eps.

    The spectator couples with the same strength as the gauge tunneling
    (worst case); the error is the peak leaked population over an exchange,
    found by bisection.  Units follow the inputs (rad/s in, rad/s out).
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("eps must lie in (0, 1)")
    if omega == 0.0:
        return 0.0
    if scheme in ("LS", "MS"):
        t = abs(omega) * eta * eta / 2.0
    elif scheme == "SDF":
        if delta is None:
            raise ValueError("SDF needs the sideband detuning delta")
        t = omega ** 2 * eta * eta / (2.0 * delta)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    lo = 0.0
    hi = detuning_max if detuning_max is not None else 64.0 * t
    if spectator_error(t, t, hi) > eps:
        raise RuntimeError("no solution within the scan range; widen detuning_max")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if spectator_error(t, t, mid) > eps:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6 * max(hi, 1.0):
            break
    return float(hi)


# ----------------------------------------------------------------------
# Regime validation
# ----------------------------------------------------------------------

def validate_regime(scheme: str, preset: TrapPreset, tones: dict) -> list:
    """Parametric-regime warnings (never errors): the drive should sit well
    below the mode splitting, and resolved-sideband conditions should hold.
    Returns a list of warning strings."""
    warnings_ = []
    split = abs(preset.mode_splitting)
    if scheme == "LS":
        om = abs(tones.get("omega12", 0.0))
        if om > 0.25 * split:
            warnings_.append(
                f"LS drive Omega12/2pi = {om / TWO_PI:.3g} Hz violates the "
                f"parametric condition Omega << mode splitting "
                f"({split / TWO_PI:.3g} Hz); expect off-resonant carrier effects")
    elif scheme == "MS":
        om = abs(tones.get("omega", 0.0))
        if om > 0.25 * split:
            warnings_.append(
                f"MS tone Omega/2pi = {om / TWO_PI:.3g} Hz is not small against "
                f"the mode splitting ({split / TWO_PI:.3g} Hz); the "
                f"non-commuting carrier will limit the tunneling")
    elif scheme == "SDF":
        om = abs(tones.get("omega", 0.0))
        delta = abs(tones.get("delta", 0.0))
        eta = max(preset.eta_x, preset.eta_z)
        if delta > 0 and eta * om / delta > 0.3:
            warnings_.append(
                f"SDF expansion parameter eta*Omega/delta = {eta * om / delta:.2f} "
                f"is large; higher-order Magnus errors will renormalize the rate")
        if delta > 0.5 * split:
            warnings_.append("SDF detuning approaches the mode splitting; "
                             "sidebands are no longer resolved")
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return warnings_
