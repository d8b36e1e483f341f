"""Closed-form reference dynamics for every analytically solvable regime:
detuned Rabi flopping on the gauge link, the two-boson Lambda scheme and
NOON generation, plaquette spin-1 precession and the perturbative Bell time,
and the Wannier-Stark breathing solutions on the chain.

Time arguments are dimensionless (physical time times t_link); couplings are
in the same unit so only ratios like gamma = t_link/h enter.

Integer-order Bessel functions are computed locally by Miller's downward
recurrence with an ascending-series fallback at small argument, so the chain
oracles carry their own primitive.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

BESSEL_MAX_ORDER = 1000
BESSEL_MAX_ARG = 1000.0


# ----------------------------------------------------------------------
# Integer-order Bessel J
# ----------------------------------------------------------------------

def _bessel_series(n: int, x: float) -> float:
    # ascending series; converges to full precision for |x| <= 2
    half = 0.5 * x
    term = 1.0
    for k in range(1, n + 1):
        term *= half / k
    total = term
    xx = -half * half
    for k in range(1, 60):
        term *= xx / (k * (n + k))
        total += term
        if abs(term) < 1e-18 * max(abs(total), 1e-300):
            break
    return total


def _bessel_miller_all(n_top: int, x: float) -> np.ndarray:
    """J_0(x)..J_{n_top}(x) for x > 2 by downward recurrence.

    The start order sits well above the turning point, suppressing the
    admixture of the growing solution far below 1e-12; normalization uses
    J_0 + 2 sum_k J_{2k} = 1.
    """
    start = max(n_top, int(np.ceil(x))) + 60 + int(8.0 * x ** (1.0 / 3.0))
    # extended precision: the long recurrence plus the normalization sum
    # otherwise lose ~3 digits by |x| ~ 1000
    xl = np.longdouble(x)
    out = np.zeros(n_top + 1, dtype=np.longdouble)
    jp = np.longdouble(0.0)   # J_{start+1}
    j = np.longdouble(1e-300)  # seed for J_{start}
    even_sum = j if start % 2 == 0 else np.longdouble(0.0)
    for k in range(start, 0, -1):
        jm = (2.0 * k / xl) * j - jp    # J_{k-1}
        jp = j
        j = jm
        if abs(j) > 1e250:
            scale = np.longdouble(1e-250)
            j *= scale
            jp *= scale
            even_sum *= scale
            out *= scale
        kk = k - 1
        if kk <= n_top:
            out[kk] = j
        if kk > 0 and kk % 2 == 0:
            even_sum += j
    norm = j + 2.0 * even_sum           # j is now the unnormalized J_0
    return (out / norm).astype(float)


def bessel_j_array(n_top: int, x: float) -> np.ndarray:
    """J_0(x) .. J_{n_top}(x); n_top <= 1000 and |x| <= 1000."""
    if n_top < 0:
        raise ValueError("n_top must be >= 0")
    if n_top > BESSEL_MAX_ORDER or abs(x) > BESSEL_MAX_ARG:
        raise ValueError(f"order/argument out of supported range "
                         f"(n <= {BESSEL_MAX_ORDER}, |x| <= {BESSEL_MAX_ARG})")
    ax = abs(x)
    if ax <= 2.0:
        vals = np.array([_bessel_series(n, ax) for n in range(n_top + 1)])
    else:
        vals = _bessel_miller_all(n_top, ax)
    if x < 0:  # J_n(-x) = (-1)^n J_n(x)
        vals = vals * ((-1.0) ** np.arange(n_top + 1))
    return vals


def bessel_j(n: int, x: float) -> float:
    """First-kind Bessel function of integer order, |n| <= 1000, |x| <= 1000.

    Better than 1e-12 absolute accuracy over the supported range.
    """
    n = int(n)
    sign = 1.0
    if n < 0:  # J_{-n}(x) = (-1)^n J_n(x)
        n = -n
        sign = (-1.0) ** n
    return sign * float(bessel_j_array(n, float(x))[n])


def _signed_j(r: int, x: float, table: np.ndarray) -> float:
    """J_r(x) from a table of J_{|r|}(|x|), applying both reflection signs."""
    v = table[abs(r)]
    if abs(r) % 2 == 1 and ((r < 0) != (x < 0)):
        v = -v
    return v


# ----------------------------------------------------------------------
# Gauge link: one and two bosons
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LinkOracleParams:
    """Couplings of the link model.  The Rabi frequencies are
    Omega0 = sqrt(t^2 + h^2) for one boson and
    sqrt(4 t^2 + h^2) for two bosons (bright-state enhancement)."""

    t_link: float = 1.0
    h: float = 0.0

    @property
    def omega0(self) -> float:
        return float(np.hypot(self.t_link, self.h))

    @property
    def omega0_two_boson(self) -> float:
        return float(np.hypot(2.0 * self.t_link, self.h))


def rabi_link(t, p: LinkOracleParams):
    """(n1, n2, sx) for |L> evolving on the link:
    n2 = (t^2/Omega0^2) sin^2(Omega0 t), n1 = 1 - n2, sx = 2 n2 - 1."""
    t = np.asarray(t, dtype=float)
    om = p.omega0
    if om == 0.0:
        n2 = np.zeros_like(t)
    else:
        n2 = (p.t_link ** 2 / om ** 2) * np.sin(om * t) ** 2
    return 1.0 - n2, n2, 2.0 * n2 - 1.0


def link_contrast(p: LinkOracleParams) -> float:
    """Maximum contrast of the sx oscillations, t^2/(t^2 + h^2)."""
    om = p.omega0
    return 0.0 if om == 0.0 else p.t_link ** 2 / om ** 2


def lambda_two_boson(t, p: LinkOracleParams):
    """sx for the two-boson initial state |C> = |1,+,1>:
    sx = 1 - (8 t^2/W^2) sin^2(W t) with W = sqrt(4t^2 + h^2);
    n1 = n2 = 1 throughout."""
    t = np.asarray(t, dtype=float)
    om = p.omega0_two_boson
    if om == 0.0:
        return np.ones_like(t)
    return 1.0 - (8.0 * p.t_link ** 2 / om ** 2) * np.sin(om * t) ** 2


def noon_exchange_time(p: LinkOracleParams) -> float:
    """Exchange time pi/(2 sqrt(4t^2+h^2)); fidelity to the NOON target is
    exactly 1 there when h = 0 (giving pi/(4 t))."""
    return float(np.pi / (2.0 * p.omega0_two_boson))


# ----------------------------------------------------------------------
# Plaquette
# ----------------------------------------------------------------------

# Spin-1 matrices in the basis (L1, B, L2); the dark state decouples.
_S_Z = np.diag([-1.0, 0.0, 1.0]).astype(complex)
_S_X = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / np.sqrt(2)


def plaquette_spin1(t, t_link: float, h: float, c0=None):
    """Populations (L1, B, L2, D) precessing under B0 = (2 t_link, 0, 2 h).

    Valid for zero on-site detunings.  ``c0`` gives initial amplitudes
    (c_L1, c_B, c_L2, d); the dark amplitude only rotates, so its
    population is constant.  Default starts in L1.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if c0 is None:
        c0 = np.array([1.0, 0.0, 0.0, 0.0], dtype=complex)
    c0 = np.asarray(c0, dtype=complex)
    gen = 2.0 * t_link * _S_X + 2.0 * h * _S_Z
    evals, vecs = np.linalg.eigh(gen)
    coeff = vecs.conj().T @ c0[:3]
    amps = (vecs @ (np.exp(-1j * np.outer(evals, t)) * coeff[:, None])).T
    pops = np.abs(amps) ** 2
    dark = np.full((t.size, 1), abs(c0[3]) ** 2)
    out = np.hstack([pops, dark])
    return out if t.size > 1 else out[0]


def plaquette_bell_time(t_link: float, delta2: float) -> float:
    """Second-order Bell time pi*Delta2/(4 t^2), valid for Delta2 >> t.

    ``t_link`` is the bright-path coupling <B|H|L1> of the Diamond scheme;
    for equal per-link tunnelings t1 = t2 it equals sqrt(2) t1.
    """
    if t_link == 0.0:
        raise ValueError("t_link must be nonzero")
    return float(np.pi * delta2 / (4.0 * t_link ** 2))


# ----------------------------------------------------------------------
# Wannier-Stark chain
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class WSParams:
    """Chain parameters for the Wannier-Stark solutions.

    gamma = t_link/h sets the breathing radius 2*gamma; ``r0`` is the
    initial separation of the two-boson release; ``momentum`` is the
    conserved total momentum P entering the dressed tunneling 2t cos(P/2).
    Sites are 1-indexed and the release point is site n_sites//2.
    """

    n_sites: int
    t_link: float = 1.0
    h: float = 0.4
    r0: int = 0
    momentum: float = 0.0

    @property
    def gamma(self) -> float:
        if self.h == 0.0:
            raise ValueError("gamma undefined at h = 0 (ballistic limit)")
        return self.t_link / self.h

    @property
    def center(self) -> int:
        return self.n_sites // 2


FINITE_SIZE_TAIL = 1e-6


def ws_breathing_argument(t, p: WSParams) -> np.ndarray:
    """The argument 2*gamma*sin(h t) of the Bessel envelopes."""
    return 2.0 * p.gamma * np.sin(p.h * np.asarray(t, dtype=float))


def ws_finite_size_ok(t, p: WSParams, threshold: float = FINITE_SIZE_TAIL) -> np.ndarray:
    """True where the infinite-chain formula is finite-size safe: the Bessel
    weight that would spill past the nearer chain edge stays below
    ``threshold``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    edge = min(p.center - 1, p.n_sites - p.center)
    if p.r0:
        edge = max(edge - p.r0 // 2, 1)
    top = min(edge + 60, BESSEL_MAX_ORDER)
    ok = np.empty(t.shape, dtype=bool)
    for i, ti in enumerate(t):
        x = abs(2.0 * p.gamma * np.sin(p.h * ti))
        vals = bessel_j_array(top, x)
        ok[i] = 2.0 * float(np.sum(vals[edge + 1:] ** 2)) < threshold
    return ok


def ws_single(t, site: int, p: WSParams, check_finite_size: bool = True):
    """(n_i, <sx_{i-1} sx_i>, sigma) for one boson released at site N/2.

    n_i(t) = J_{i-N/2}^2(2 gamma sin h t); the domain-wall correlator is
    1 - 2 n_i; the dispersion is sqrt(2)(t_link/h)|sin h t|.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not 1 <= site <= p.n_sites:
        raise ValueError(f"site {site} outside 1..{p.n_sites}")
    if p.h == 0.0:
        raise ValueError("h = 0 has no Wannier-Stark form; see ws_dispersion "
                         "for the ballistic limit")
    order = abs(site - p.center)
    n_i = np.empty(t.shape)
    for k, ti in enumerate(t):
        x = abs(2.0 * p.gamma * np.sin(p.h * ti))
        n_i[k] = bessel_j_array(order, x)[order] ** 2
    if check_finite_size and not np.all(ws_finite_size_ok(t, p)):
        warnings.warn("Wannier-Stark envelope reaches the chain edge; the "
                      "thermodynamic-limit formula is unreliable at some of "
                      "these times", stacklevel=2)
    corr = 1.0 - 2.0 * n_i
    sigma = ws_dispersion(t, p)
    if t.size == 1:
        return float(n_i[0]), float(corr[0]), float(sigma[0])
    return n_i, corr, sigma


def ws_dispersion(t, p: WSParams) -> np.ndarray:
    """Position standard deviation; breathing for h != 0, ballistic at h = 0."""
    t = np.asarray(t, dtype=float)
    if p.h == 0.0:
        return np.sqrt(2.0) * p.t_link * t
    return np.sqrt(2.0) * (p.t_link / p.h) * np.abs(np.sin(p.h * t))


def ws_eigenstate(m: int, gamma: float, sites) -> np.ndarray:
    """Normalized amplitudes c_i = (-1)^(i-m) J_{i-m}(gamma) of the ladder
    eigenstate with energy 2 h m, over the given site indices."""
    sites = np.asarray(sites, dtype=int)
    top = int(np.max(np.abs(sites - m))) if sites.size else 0
    table = bessel_j_array(top, abs(gamma))
    amps = np.array([(-1.0) ** (i - m) * _signed_j(i - m, gamma, table)
                     for i in sites])
    nrm = np.linalg.norm(amps)
    return amps / nrm if nrm > 0 else amps


def ws_two_boson(t, site: int, p: WSParams, check_finite_size: bool = True):
    """n_i for two bosons released at N/2 -+ r0/2 with total momentum 0:
    n_i = |J_{i-N/2-r0/2}(2 gamma sin h t) + J_{i-N/2+r0/2}(...)|^2."""
    if p.r0 % 2 != 0:
        raise ValueError("odd r0 puts the release points on half-integer sites; "
                         "this center-symmetric formula needs even r0")
    t = np.atleast_1d(np.asarray(t, dtype=float))
    o1 = site - p.center - p.r0 // 2
    o2 = site - p.center + p.r0 // 2
    top = max(abs(o1), abs(o2))
    n_i = np.empty(t.shape)
    for k, ti in enumerate(t):
        x = 2.0 * p.gamma * np.sin(p.h * ti)
        table = bessel_j_array(top, abs(x))
        n_i[k] = abs(_signed_j(o1, x, table) + _signed_j(o2, x, table)) ** 2
    if check_finite_size and not np.all(ws_finite_size_ok(t, p)):
        warnings.warn("two-boson envelope reaches the chain edge; the "
                      "thermodynamic-limit formula is unreliable at some of "
                      "these times", stacklevel=2)
    return n_i if t.size > 1 else float(n_i[0])


def two_body_bound_state(m: int, p: WSParams, r_grid) -> np.ndarray:
    """Relative-coordinate amplitudes c(r) of the confined two-boson states:
    Wannier-Stark ladder with gamma_P = 2 t cos(P/2)/h, c(r) = (-1)^(r-m) J_{r-m}.
    """
    gamma_p = dressed_tunneling(p) / p.h
    return ws_eigenstate(m, gamma_p, np.asarray(r_grid, dtype=int))


def dressed_tunneling(p: WSParams) -> float:
    """t_P = 2 t cos(P/2), the center-of-mass-dressed relative tunneling."""
    return 2.0 * p.t_link * np.cos(p.momentum / 2.0)
