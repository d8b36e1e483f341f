"""Builders for the ideal gauge-invariant models: the single link, the
two-link plaquette, the N-site chain (with optional staggered mass), and the
synthetic two-leg Peierls ladder, plus the Gauss-law machinery and the
canonical physical states.

Two bases are in use depending on which laser scheme realizes the model:

* ``"z"`` (light-shift style): tunneling conditioned on sigma_z, electric
  field along sigma_x, Gauss generators built from sigma_x.
* ``"x"`` (Molmer-Sorensen style): tunneling on sigma_x, field along
  sigma_z, generators from sigma_z.

``make_state`` returns the state together with the sector charges it
satisfies, computed directly from the generators, so downstream code never
hand-enters a charge pattern.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from . import hilbert as hb
from .hilbert import (LayoutError, LinearOperator, ModeSpec, QubitSpec,
                      SpaceLayout, StateVector, compose_space)

Z_COND = "z"
X_COND = "x"

_FIELD_AXIS = {Z_COND: "x", X_COND: "z"}   # electric-field Pauli per convention


class GaussLawError(ValueError):
    """Raised when a state is not a Gauss-law eigenstate or charges clash."""


# ----------------------------------------------------------------------
# Parameter records
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LinkParams:
    """Single-link couplings: complex tunneling, real field, basis."""

    t_link: complex = 1.0
    h: float = 0.0
    basis_convention: str = Z_COND

    def __post_init__(self):
        if self.basis_convention not in (Z_COND, X_COND):
            raise ValueError(f"unknown basis convention {self.basis_convention!r}")


@dataclass(frozen=True)
class PlaquetteParams:
    """Two-link plaquette couplings plus on-site detunings."""

    t1: complex = 1.0
    t2: complex = 1.0
    h: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    basis_convention: str = Z_COND
    drive_phases: Tuple[float, float] = (0.0, 0.0)

    @property
    def tunnelings(self):
        p1, p2 = self.drive_phases
        return (self.t1 * np.exp(1j * p1), self.t2 * np.exp(1j * p2))


@dataclass(frozen=True)
class ChainParams:
    """Gauge chain: N matter sites, N-1 links, optional staggered mass."""

    n_sites: int
    t_links: tuple = ()          # length N-1; scalar broadcast via make()
    h: float = 0.0
    mu: float = 0.0
    n_max: int = 1               # n_max = 1 is the hardcore case
    basis_convention: str = Z_COND

    def __post_init__(self):
        if self.n_sites < 2:
            raise ValueError("chain needs at least 2 sites")
        if len(self.t_links) != self.n_sites - 1:
            raise ValueError(f"need {self.n_sites - 1} link tunnelings, "
                             f"got {len(self.t_links)}")

    @staticmethod
    def make(n_sites, t_link=1.0, h=0.0, mu=0.0, n_max=1, basis_convention=Z_COND):
        """Homogeneous-tunneling convenience constructor."""
        return ChainParams(n_sites, (complex(t_link),) * (n_sites - 1),
                           h, mu, n_max, basis_convention)


@dataclass(frozen=True)
class SectorCharges:
    """Background Z2 charges q_i in {0,1}, one per matter site."""

    q: tuple

    def __post_init__(self):
        if any(qi not in (0, 1) for qi in self.q):
            raise ValueError("charges must be 0 or 1")


@dataclass(frozen=True)
class PeierlsLadderParams:
    """Synthetic two-leg ladder of 2N local modes.

    Intra-leg tunnelings follow the dipolar law coeff/|r_i - r_j|^3 from the
    Coulomb expansion; inter-leg rungs are (omega_drive/2) e^{+-i phi_i}.
    Either per-site drive phases or a uniform plaquette flux can be given
    (phases then default to phi_i = i * flux).
    """

    n_ions: int
    positions: tuple
    omega_drive: float = 1.0
    dipole_coeff: float = 0.1
    phases: Optional[tuple] = None
    flux: Optional[float] = None
    nearest_neighbor_only: bool = False

    def __post_init__(self):
        if len(self.positions) != self.n_ions:
            raise ValueError("one equilibrium position per ion")
        if any(b <= a for a, b in zip(self.positions, self.positions[1:])):
            raise ValueError("equilibrium positions must be strictly ordered")
        if self.phases is not None and len(self.phases) != self.n_ions:
            raise ValueError("one drive phase per ion")

    def drive_phases(self) -> np.ndarray:
        if self.phases is not None:
            return np.asarray(self.phases, dtype=float)
        flux = 0.0 if self.flux is None else self.flux
        return flux * np.arange(self.n_ions, dtype=float)


# ----------------------------------------------------------------------
# Layout helpers
# ----------------------------------------------------------------------

def link_layout(n_max: int = 3, labels=("site1", "link", "site2")) -> SpaceLayout:
    return compose_space([ModeSpec(n_max, labels[0]), QubitSpec(labels[1]),
                          ModeSpec(n_max, labels[2])])


def plaquette_layout(n_max: int = 2) -> SpaceLayout:
    return compose_space([ModeSpec(n_max, "site1"), QubitSpec("link_e1"),
                          QubitSpec("link_e2"), ModeSpec(n_max, "site2")])


def chain_layout(n_sites: int, n_max: int = 1) -> SpaceLayout:
    """Alternating mode, qubit, ..., mode: N modes and N-1 link qubits."""
    factors = []
    for i in range(n_sites):
        factors.append(ModeSpec(n_max, f"site{i + 1}"))
        if i < n_sites - 1:
            factors.append(QubitSpec(f"link{i + 1}"))
    return compose_space(factors)


def ladder_layout(n_ions: int, n_max: int = 1) -> SpaceLayout:
    """2N modes: leg x first (ions 1..N), then leg y."""
    factors = [ModeSpec(n_max, f"x{i + 1}") for i in range(n_ions)]
    factors += [ModeSpec(n_max, f"y{i + 1}") for i in range(n_ions)]
    return compose_space(factors)


def _require_link_layout(layout: SpaceLayout):
    if (layout.n_factors != 3 or not layout.is_mode(0) or not layout.is_qubit(1)
            or not layout.is_mode(2)):
        raise LayoutError("expected layout [mode, qubit, mode]")


def _require_plaquette_layout(layout: SpaceLayout):
    ok = (layout.n_factors == 4 and layout.is_mode(0) and layout.is_qubit(1)
          and layout.is_qubit(2) and layout.is_mode(3))
    if not ok:
        raise LayoutError("expected layout [mode, qubit, qubit, mode]")


def _require_chain_layout(layout: SpaceLayout, n_sites: int):
    if layout.n_factors != 2 * n_sites - 1:
        raise LayoutError(f"chain of {n_sites} sites needs {2 * n_sites - 1} factors")
    for k in range(layout.n_factors):
        if k % 2 == 0 and not layout.is_mode(k):
            raise LayoutError(f"factor {k} should be a mode")
        if k % 2 == 1 and not layout.is_qubit(k):
            raise LayoutError(f"factor {k} should be a qubit")


def chain_site_factor(i: int) -> int:
    """Factor index of matter site i (1-indexed)."""
    return 2 * (i - 1)


def chain_link_factor(i: int) -> int:
    """Factor index of the link between sites i and i+1 (1-indexed)."""
    return 2 * i - 1


# ----------------------------------------------------------------------
# Hamiltonians
# ----------------------------------------------------------------------

def build_link_hamiltonian(p: LinkParams, layout: SpaceLayout) -> LinearOperator:
    """H = (t a2^dag sigma a1 + H.c.) + h sigma', with (sigma, sigma') =
    (z, x) in the "z" convention and (x, z) in the "x" convention."""
    _require_link_layout(layout)
    a1 = hb.annihilation(layout, 0)
    a2dag = hb.creation(layout, 2)
    sig = hb.pauli(layout, 1, p.basis_convention)
    hop = complex(p.t_link) * (a2dag @ sig @ a1)
    field = hb.pauli(layout, 1, _FIELD_AXIS[p.basis_convention])
    h_mat = hop.matrix + hop.matrix.conj().T + p.h * field.matrix
    return LinearOperator(layout, h_mat, hermitian=True)


def build_plaquette_hamiltonian(p: PlaquetteParams, layout: SpaceLayout) -> LinearOperator:
    """Two gauge links in parallel between two sites, plus field and
    on-site detunings delta_i a_i^dag a_i."""
    _require_plaquette_layout(layout)
    a1 = hb.annihilation(layout, 0)
    a2dag = hb.creation(layout, 3)
    t1, t2 = p.tunnelings
    conv = p.basis_convention
    hop = (complex(t1) * (a2dag @ hb.pauli(layout, 1, conv) @ a1)
           + complex(t2) * (a2dag @ hb.pauli(layout, 2, conv) @ a1))
    field_axis = _FIELD_AXIS[conv]
    h_mat = hop.matrix + hop.matrix.conj().T
    h_mat = h_mat + p.h * (hb.pauli(layout, 1, field_axis).matrix
                           + hb.pauli(layout, 2, field_axis).matrix)
    h_mat = h_mat + p.delta1 * hb.number(layout, 0).matrix \
                  + p.delta2 * hb.number(layout, 3).matrix
    return LinearOperator(layout, h_mat, hermitian=True)


def build_chain_hamiltonian(p: ChainParams, layout: SpaceLayout) -> LinearOperator:
    """H = sum_i (t_i a_{i+1}^dag sigma_i a_i + H.c.) + h sum_i sigma'_i
    + mu sum_i (-1)^i n_i   (sites 1-indexed in the staggered sign)."""
    _require_chain_layout(layout, p.n_sites)
    for i in range(p.n_sites):
        if layout.factors[chain_site_factor(i + 1)].n_max != p.n_max:
            raise LayoutError("layout mode cutoff disagrees with ChainParams.n_max")
    conv = p.basis_convention
    field_axis = _FIELD_AXIS[conv]
    h_mat = None
    for i in range(1, p.n_sites):  # link between sites i, i+1
        ai = hb.annihilation(layout, chain_site_factor(i))
        adag = hb.creation(layout, chain_site_factor(i + 1))
        sig = hb.pauli(layout, chain_link_factor(i), conv)
        hop = complex(p.t_links[i - 1]) * (adag @ sig @ ai)
        term = hop.matrix + hop.matrix.conj().T
        h_mat = term if h_mat is None else h_mat + term
    if p.h != 0.0:
        for i in range(1, p.n_sites):
            h_mat = h_mat + p.h * hb.pauli(layout, chain_link_factor(i), field_axis).matrix
    if p.mu != 0.0:
        for i in range(1, p.n_sites + 1):
            sign = (-1.0) ** i
            h_mat = h_mat + p.mu * sign * hb.number(layout, chain_site_factor(i)).matrix
    return LinearOperator(layout, h_mat, hermitian=True)


def build_peierls_ladder(p: PeierlsLadderParams, layout: SpaceLayout) -> LinearOperator:
    """Number-conserving ladder: dipolar intra-leg hops plus complex rungs
    (omega_drive/2) e^{+i phi_i} from leg x into leg y."""
    n = p.n_ions
    if layout.n_factors != 2 * n or layout.mode_indices() != list(range(2 * n)):
        raise LayoutError(f"expected a layout of {2 * n} modes (legs x then y)")
    phases = p.drive_phases()
    pos = np.asarray(p.positions, dtype=float)
    h_mat = None

    def add(term):
        nonlocal h_mat
        m = term.matrix
        m = m + m.conj().T
        h_mat = m if h_mat is None else h_mat + m

    for i in range(n):
        for j in range(i + 1, n):
            if p.nearest_neighbor_only and j != i + 1:
                continue
            t_dip = p.dipole_coeff / abs(pos[j] - pos[i]) ** 3
            add(t_dip * (hb.creation(layout, j) @ hb.annihilation(layout, i)))
            add(t_dip * (hb.creation(layout, n + j) @ hb.annihilation(layout, n + i)))
    for i in range(n):
        rung = 0.5 * p.omega_drive * np.exp(1j * phases[i])
        add(rung * (hb.creation(layout, n + i) @ hb.annihilation(layout, i)))
    return LinearOperator(layout, h_mat, hermitian=True)


# ----------------------------------------------------------------------
# Gauss law
# ----------------------------------------------------------------------

def gauss_generators(layout: SpaceLayout, basis_convention: str = Z_COND) -> list:
    """Gauss-law generators for link, plaquette, or chain layouts.

    Each G_i is the parity of matter site i times the link Paulis on every
    link touching that site (one link at the boundaries).  The Pauli axis is
    sigma_x in the "z" convention and sigma_z in the "x" convention.
    """
    axis = _FIELD_AXIS[basis_convention]
    n_f = layout.n_factors
    if n_f == 4 and layout.is_qubit(1) and layout.is_qubit(2):
        # plaquette: both links touch both sites
        g1 = hb.embed(layout, {0: hb.parity_local(layout.factors[0].n_max),
                               1: hb.PAULI[axis], 2: hb.PAULI[axis]})
        g2 = hb.embed(layout, {3: hb.parity_local(layout.factors[3].n_max),
                               1: hb.PAULI[axis], 2: hb.PAULI[axis]})
        return [LinearOperator(layout, g1.matrix, hermitian=True),
                LinearOperator(layout, g2.matrix, hermitian=True)]
    # link or chain: modes on even factors, qubits on odd factors
    n_sites = (n_f + 1) // 2
    _require_chain_layout(layout, n_sites)
    gens = []
    for i in range(1, n_sites + 1):
        local = {chain_site_factor(i):
                 hb.parity_local(layout.factors[chain_site_factor(i)].n_max)}
        if i > 1:
            local[chain_link_factor(i - 1)] = hb.PAULI[axis]
        if i < n_sites:
            local[chain_link_factor(i)] = hb.PAULI[axis]
        g = hb.embed(layout, local)
        gens.append(LinearOperator(layout, g.matrix, hermitian=True))
    return gens


def gauss_generators_link(layout: SpaceLayout, basis_convention: str = Z_COND):
    """(G1, G2) for the single link."""
    _require_link_layout(layout)
    g1, g2 = gauss_generators(layout, basis_convention)
    return g1, g2


def sector_projector(generators: Sequence[LinearOperator],
                     charges: SectorCharges) -> LinearOperator:
    """P = prod_j (1 + e^{i pi q_j} G_j)/2 onto one super-selection sector.

    The generators must mutually commute (checked to 1e-12).
    """
    if len(generators) != len(charges.q):
        raise ValueError("one charge per generator")
    for a in range(len(generators)):
        for b in range(a + 1, len(generators)):
            dev = hb.commutator_norm(generators[a], generators[b])
            if dev > 1e-12 * max(1.0, generators[a].norm()):
                raise GaussLawError(f"generators {a} and {b} do not commute "
                                    f"(|[G,G]| = {dev:.2e})")
    layout = generators[0].layout
    proj = hb.identity(layout).matrix
    for g, q in zip(generators, charges.q):
        sign = np.exp(1j * np.pi * q).real  # +1 or -1
        proj = proj @ ((hb.identity(layout).matrix + sign * g.matrix) * 0.5)
    return LinearOperator(layout, proj, hermitian=True)


def sector_charges_of(psi: StateVector,
                      generators: Sequence[LinearOperator],
                      tol: float = 1e-9) -> SectorCharges:
    """Read the background charges off a Gauss-law eigenstate."""
    qs = []
    for g in generators:
        val = hb.expectation(psi, g)
        if abs(val.imag) > tol or abs(abs(val.real) - 1.0) > tol:
            raise GaussLawError(f"state is not a Gauss eigenstate: <G> = {val}")
        # verify it is an eigenstate, not merely +-1 on average
        gpsi = g.apply(psi)
        if np.linalg.norm(gpsi - val.real * psi.amplitudes) > 1e-8:
            raise GaussLawError("state is not a Gauss-law eigenstate")
        qs.append(0 if val.real > 0 else 1)
    return SectorCharges(tuple(qs))


# ----------------------------------------------------------------------
# Canonical states
# ----------------------------------------------------------------------

def _link_kets(which: str, n_max: int):
    table = {
        "link_L": (1, "-", 0),
        "link_R": (0, "+", 1),
        "link_C": (1, "+", 1),
    }
    if which in table:
        return table[which]
    raise ValueError(f"unknown link state {which!r}")


def _state_with_charges(layout, vec, basis_convention):
    psi = StateVector(layout, vec)
    gens = gauss_generators(layout, basis_convention)
    return psi, sector_charges_of(psi, gens)


def make_state(kind: str, layout: SpaceLayout, basis_convention: str = Z_COND,
               site: Optional[int] = None, sites: Optional[Tuple[int, int]] = None):
    """Canonical physical states; returns (StateVector, SectorCharges).

    Kinds: link_L / link_R / link_C, plaquette_L1/L2/R1/R2, bell_target,
    noon_target, chain_single (site), chain_pair (sites), chain_meson (site,
    even), chain_string (sites = (even, odd)), chain_vacuum_halffilled.
    In the "x" convention the link qubits use the sigma_z eigenbasis
    (down/up) instead of the Hadamard pair, mirroring the rotated scheme.
    """
    lo, hi = ("-", "+") if basis_convention == Z_COND else ("down", "up")

    if kind.startswith("link_"):
        _require_link_layout(layout)
        n1, q, n2 = _link_kets(kind, layout.factors[0].n_max)
        psi = hb.product_state(layout, (n1, lo if q == "-" else hi, n2))
        return psi, sector_charges_of(psi, gauss_generators(layout, basis_convention))

    if kind == "noon_target":
        _require_link_layout(layout)
        if layout.factors[0].n_max < 2:
            raise ValueError("NOON target needs n_max >= 2")
        v1 = hb.product_state(layout, (2, lo, 0)).amplitudes
        v2 = hb.product_state(layout, (0, lo, 2)).amplitudes
        return _state_with_charges(layout, (v1 + v2) / np.sqrt(2), basis_convention)

    if kind.startswith("plaquette_"):
        _require_plaquette_layout(layout)
        table = {
            "plaquette_L1": (1, lo, lo, 0),
            "plaquette_L2": (1, hi, hi, 0),
            "plaquette_R1": (0, hi, lo, 1),
            "plaquette_R2": (0, lo, hi, 1),
        }
        if kind not in table:
            raise ValueError(f"unknown plaquette state {kind!r}")
        psi = hb.product_state(layout, table[kind])
        return psi, sector_charges_of(psi, gauss_generators(layout, basis_convention))

    if kind == "bell_target":
        # boson back on site 1, gauge qubits in (|--> - i|++>)/sqrt(2)
        _require_plaquette_layout(layout)
        v1 = hb.product_state(layout, (1, lo, lo, 0)).amplitudes
        v2 = hb.product_state(layout, (1, hi, hi, 0)).amplitudes
        return _state_with_charges(layout, (v1 - 1j * v2) / np.sqrt(2),
                                   basis_convention)

    # chain states
    n_sites = (layout.n_factors + 1) // 2
    _require_chain_layout(layout, n_sites)

    def kets_from_occupation(occ, plus_links):
        kets = []
        for i in range(1, n_sites + 1):
            kets.append(occ[i - 1])
            if i < n_sites:
                kets.append(hi if (i in plus_links) else lo)
        return kets

    if kind == "chain_single":
        if site is None or not 1 <= site <= n_sites:
            raise ValueError("chain_single needs a site in 1..N")
        occ = [0] * n_sites
        occ[site - 1] = 1
        psi = hb.product_state(layout, kets_from_occupation(occ, set(range(1, site))))
        return psi, sector_charges_of(psi, gauss_generators(layout, basis_convention))

    if kind == "chain_pair":
        if sites is None:
            raise ValueError("chain_pair needs sites=(i, j)")
        i, j = sites
        if not (1 <= i <= j <= n_sites):
            raise ValueError("need 1 <= i <= j <= N")
        occ = [0] * n_sites
        if i == j:
            if layout.factors[0].n_max < 2:
                raise ValueError("doubly occupied site needs n_max >= 2")
            occ[i - 1] = 2
        else:
            occ[i - 1] = 1
            occ[j - 1] = 1
        psi = hb.product_state(layout, kets_from_occupation(occ, set(range(i, j))))
        return psi, sector_charges_of(psi, gauss_generators(layout, basis_convention))

    if kind == "chain_vacuum_halffilled":
        occ = [1 if i % 2 == 1 else 0 for i in range(1, n_sites + 1)]
        psi = hb.product_state(layout, kets_from_occupation(occ, set()))
        return psi, sector_charges_of(psi, gauss_generators(layout, basis_convention))

    if kind in ("chain_meson", "chain_string"):
        if kind == "chain_meson":
            if site is None:
                raise ValueError("chain_meson needs the even destination site")
            i, j = site, site + 1
        else:
            if sites is None:
                raise ValueError("chain_string needs sites=(even, odd)")
            i, j = sites
        if i % 2 != 0 or j % 2 != 1:
            raise GaussLawError("particle site must be even and hole site odd "
                                "to respect the staggered vacuum")
        if not (1 <= i < j <= n_sites):
            raise ValueError("need 1 <= even < odd <= N")
        occ = [1 if k % 2 == 1 else 0 for k in range(1, n_sites + 1)]
        occ[i - 1] += 1
        occ[j - 1] -= 1
        psi = hb.product_state(layout, kets_from_occupation(occ, set(range(i, j))))
        return psi, sector_charges_of(psi, gauss_generators(layout, basis_convention))

    raise ValueError(f"unknown state kind {kind!r}")
