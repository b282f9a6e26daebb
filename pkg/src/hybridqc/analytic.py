"""Exact solutions of the two dephasing-correlated random walks and their
diffusive limits, Gaussian propagators, positivity thresholds and the
two-sided exponential jump kernel.

Example 1 is the walk with hopping rate ``phi`` and dephasing-correlated
hopping rate ``gamma``. Example 2 adds coherent couplings ``lambda_up``
(jump to the right) and ``lambda_dn`` (jump to the left) through ``sigma_z``.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import factorial

from .bessel import bessel_i_scaled
from .errors import CPViolationError, DomainError

PURE_PLUS_X = 0.5 * np.ones((2, 2), dtype=complex)


def _rho0(rho0):
    return PURE_PLUS_X.copy() if rho0 is None else np.asarray(rho0, dtype=complex)


@dataclass(frozen=True, eq=False)
class DephasingWalk:
    phi: float
    gamma: float
    n0: int = 0
    rho0: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.phi < 0 or self.gamma < 0:
            raise ValueError("rates must be nonnegative")
        object.__setattr__(self, "rho0", _rho0(self.rho0))


@dataclass(frozen=True, eq=False)
class CoherentDephasingWalk:
    phi: float
    gamma: float
    lambda_up: complex
    lambda_dn: complex
    n0: int = 0
    rho0: np.ndarray = field(default=None)
    tol: float = 1e-12

    def __post_init__(self):
        if self.phi < 0 or self.gamma < 0:
            raise ValueError("rates must be nonnegative")
        object.__setattr__(self, "rho0", _rho0(self.rho0))
        bound = self.gamma * self.phi
        for name, lam, pair in (("up", self.lambda_up, (1, 0)), ("dn", self.lambda_dn, (-1, 0))):
            excess = abs(lam) ** 2 - bound
            if excess > self.tol * max(bound, 1.0):
                raise CPViolationError(
                    f"|lambda_{name}|^2 = {abs(lam) ** 2:.6g} exceeds gamma*phi = {bound:.6g}",
                    pair=pair, slack=-excess)

    @property
    def lam(self):
        return complex(self.lambda_up + self.lambda_dn)

    @property
    def dlam(self):
        return complex(self.lambda_up - self.lambda_dn)

    @property
    def omega(self):
        """Frequency ``i (lambda - lambda^*)``, equal to ``-2 Im lambda``."""
        return -2 * self.lam.imag

    @property
    def ellipse_ratios(self):
        bound = self.gamma * self.phi
        return abs(self.lambda_up) ** 2 / bound, abs(self.lambda_dn) ** 2 / bound

    def population_rates(self, s):
        """``(alpha, beta)`` left/right hopping rates of population ``s = +-1``."""
        a1 = 2 * s * self.dlam.real
        a2 = self.gamma + self.phi + s * self.lam.real
        return a2 - a1 / 2, a2 + a1 / 2

    def coherence_rates(self):
        b1 = 2 * self.dlam.imag
        b2 = self.phi - self.gamma + 1j * self.lam.imag
        return b2 - 0.5j * b1, b2 + 0.5j * b1


@dataclass(frozen=True)
class DiffusionParams:
    r0: float
    D_phi: float
    D_gamma: float
    F: complex = 0j
    D_lambda: complex = 0j
    sigma0: float = 0.0
    q0: float = 0.0

    @classmethod
    def from_params(cls, params, r0=1.0, sigma0=0.0, q0=None):
        if q0 is None:
            q0 = params.n0 * r0
        F = D_lam = 0j
        if isinstance(params, CoherentDephasingWalk):
            F = 2 * params.dlam * r0
            D_lam = 2 * params.lam * r0 ** 2
        return cls(r0, 2 * params.phi * r0 ** 2, 2 * params.gamma * r0 ** 2,
                   F, D_lam, float(sigma0), float(q0))


def gaussian_propagator(q, t, q0, sigma0, D, v=0.0):
    """``(2 pi s)^(-1/2) exp(-(q - q0 - v t)^2 / 2 s)`` with ``s = sigma0^2 + D t``.

    ``D`` and ``v`` may be complex; the principal square root is used.
    """
    var = sigma0 ** 2 + complex(D) * t
    if var.real <= 0:
        raise DomainError(
            f"variance sigma0^2 + D t = {var:.4g} has nonpositive real part; "
            "the diffusive solution diverges")
    x = np.asarray(q) - q0 - complex(v) * t
    return np.exp(-x * x / (2 * var)) / np.sqrt(2 * np.pi * var)


def _scaled_factor(x):
    """Exponent correction turning ``bessel_i_scaled`` back into ``I_n``."""
    return abs(np.real(x))


def example1_discrete_solution(params, n, t):
    """Populations ``p+``, ``p-`` and coherence ``c`` of the lattice walk at sites ``n``."""
    k = np.abs(np.asarray(n) - params.n0)
    rho0 = params.rho0
    if t == 0:
        delta = (k == 0).astype(float)
        return delta * rho0[0, 0].real, delta * rho0[1, 1].real, delta * rho0[0, 1]
    phi, gam = params.phi, params.gamma
    xp = 2 * (phi + gam) * t
    pop = np.real(bessel_i_scaled(k, xp))
    xc = 2 * (phi - gam) * t
    coh = np.exp(-4 * gam * t - xc + _scaled_factor(xc)) * bessel_i_scaled(k, xc)
    return pop * rho0[0, 0].real, pop * rho0[1, 1].real, np.real(coh) * rho0[0, 1]


def asym_rw_solution(n, t, alpha, beta, n0=0):
    """Walk ``df_n/dt = alpha f_{n+1} + beta f_{n-1} - (alpha + beta) f_n``, ``f_n(0) = delta``.

    Uses ``I_k(2 t s) (s / alpha)^k`` with ``s = sqrt(alpha beta)`` for ``k >= 0`` and
    ``(s / beta)^|k|`` for ``k < 0``, which does not depend on the sign chosen for ``s``.
    """
    k = np.asarray(n) - n0
    alpha, beta = complex(alpha), complex(beta)
    if t == 0 or (alpha == 0 and beta == 0):
        return (k == 0).astype(complex)
    if alpha == 0 or beta == 0:
        rate, side = (beta, k) if alpha == 0 else (alpha, -k)
        m = np.where(side >= 0, side, 0)
        out = np.exp(-rate * t) * (rate * t) ** m / factorial(m)
        return np.where(side >= 0, out, 0).astype(complex)
    s = np.sqrt(alpha * beta)
    w = 2 * t * s
    bes = bessel_i_scaled(np.abs(k), w)
    ratio = np.where(k >= 0, s / alpha, s / beta)
    return np.exp(-(alpha + beta) * t + _scaled_factor(w)) * bes * ratio ** np.abs(k)


def example2_discrete_solution(params, n, t):
    rho0 = params.rho0
    out = []
    for s, amp in ((1, rho0[0, 0].real), (-1, rho0[1, 1].real)):
        a, b = params.population_rates(s)
        out.append(np.real(asym_rw_solution(n, t, a, b, params.n0)) * amp)
    a, b = params.coherence_rates()
    pref = np.exp(-(1j * params.omega + 4 * params.gamma) * t)
    out.append(pref * asym_rw_solution(n, t, a, b, params.n0) * rho0[0, 1])
    return tuple(out)


def discrete_solution(params, n, t):
    if isinstance(params, CoherentDephasingWalk):
        return example2_discrete_solution(params, n, t)
    return example1_discrete_solution(params, n, t)


def continuum_coefficients(params, diff, flavor="diffusive"):
    """Drift and diffusion of ``P+``, ``P-`` and ``C``, plus the coherence prefactor rate.

    Returns ``[(v, D) for P+, P-, C]`` and the complex decay rate of ``C``.
    ``flavor='qfp'`` drops ``D_gamma`` and ``D_lambda``.
    """
    if flavor not in ("diffusive", "qfp"):
        raise ValueError(f"unknown continuum flavor {flavor!r}")
    dg = 0.0 if flavor == "qfp" else diff.D_gamma
    dl = 0j if flavor == "qfp" else diff.D_lambda
    if isinstance(params, CoherentDephasingWalk):
        pops = [(s * diff.F.real, diff.D_phi + dg + s * dl.real) for s in (1, -1)]
        coh = (1j * diff.F.imag, diff.D_phi - dg + 1j * dl.imag)
        decay = 1j * params.omega + 4 * params.gamma
    else:
        pops = [(0.0, diff.D_phi + dg)] * 2
        coh = (0.0, diff.D_phi - dg)
        decay = 4 * params.gamma
    return pops + [coh], decay


def example_continuum_solution(params, diff, q, t, flavor="diffusive"):
    """Densities ``P+(q)``, ``P-(q)``, ``C(q)`` of the diffusive or QFP limit."""
    if (isinstance(params, DephasingWalk) and flavor == "diffusive"
            and diff.D_phi <= diff.D_gamma):
        raise DomainError(
            f"D_phi = {diff.D_phi:.4g} <= D_gamma = {diff.D_gamma:.4g}: the diffusive "
            "coherence diverges in time")
    coeffs, decay = continuum_coefficients(params, diff, flavor)
    rho0 = params.rho0
    (vp, dp), (vm, dm), (vc, dc) = coeffs
    pp = np.real(gaussian_propagator(q, t, diff.q0, diff.sigma0, dp, vp)) * rho0[0, 0].real
    pm = np.real(gaussian_propagator(q, t, diff.q0, diff.sigma0, dm, vm)) * rho0[1, 1].real
    c = np.exp(-decay * t) * gaussian_propagator(q, t, diff.q0, diff.sigma0, dc, vc) * rho0[0, 1]
    if isinstance(params, DephasingWalk):
        c = np.real(c) + 0j
    return pp, pm, c


def continuum_determinant(params, diff, q, t, flavor="diffusive"):
    pp, pm, c = example_continuum_solution(params, diff, q, t, flavor)
    return pp * pm - np.abs(c) ** 2


@dataclass
class PositivityThreshold:
    phi_t_star: float
    t_star: float
    sigma0_min_sq: float
    valid: bool
    A: float = None
    B: float = None


def positivity_thresholds(params, r0=1.0):
    """Time after which ``Det`` at the origin turns nonnegative (pure state, ``sigma0 = 0``)
    and the initial variance that removes the negative transient."""
    phi, gam = params.phi, params.gamma
    if gam <= 0:
        raise DomainError("the positivity threshold needs gamma > 0")
    if phi <= 0:
        raise DomainError("the positivity threshold needs phi > 0")
    diff = DiffusionParams.from_params(params, r0)
    sigma_sq = diff.D_gamma / (4 * gam)
    if isinstance(params, CoherentDephasingWalk):
        dsum = diff.D_phi + diff.D_gamma
        ddif = diff.D_phi - diff.D_gamma
        num = dsum ** 2 - diff.D_lambda.real ** 2
        den = ddif ** 2 + diff.D_lambda.imag ** 2
        if num <= 0 or den <= 0:
            raise DomainError("the threshold formula needs positive variance combinations")
        A = (diff.F.real ** 2 * dsum / num + diff.F.imag ** 2 * ddif / den) / (8 * gam)
        B = np.sqrt(num / den)
        if A == 1:
            raise DomainError("A = 1: the threshold time is unbounded")
        phi_t = phi / (8 * gam) / (1 - A) * np.log(B)
        return PositivityThreshold(phi_t, phi_t / phi, sigma_sq, bool(0 <= phi_t < 1), A, B)
    if phi <= gam:
        raise DomainError(f"phi = {phi} <= gamma = {gam}: the diffusive coherence diverges")
    phi_t = phi / (8 * gam) * np.log((phi + gam) / (phi - gam))
    return PositivityThreshold(phi_t, phi_t / phi, sigma_sq, bool(0 <= phi_t < 1))


def example_rate_kernel(tau0, delta_tau0, r0):
    """Two-sided exponential jump density with a sign-dependent bias.

    ``delta_tau0 = inf`` gives the symmetric kernel. A warning is issued
    when the bias makes the density negative for one jump direction.
    """
    if tau0 <= 0 or r0 <= 0:
        raise ValueError("need tau0 > 0 and r0 > 0")
    bias = 0.0 if np.isinf(delta_tau0) else 1.0 / delta_tau0
    if 1.0 / tau0 - abs(bias) < 0:
        warnings.warn(
            f"jump density is negative for one direction (1/tau0 = {1 / tau0:.4g} < "
            f"|1/delta_tau0| = {abs(bias):.4g})", RuntimeWarning, stacklevel=2)

    def kernel(r):
        r = np.asarray(r, dtype=float)
        return (1.0 / tau0 + bias * np.sign(r)) * np.exp(-np.abs(r) / r0) / (2 * r0)
    return kernel


def example_rate_moments(tau0, delta_tau0, r0, m, method="closed"):
    """Jump moment ``int dr phi(r) r^m`` of :func:`example_rate_kernel`."""
    if method == "closed":
        if m == 0:
            return 1.0 / tau0
        if m == 1:
            return 0.0 if np.isinf(delta_tau0) else r0 / delta_tau0
        if m == 2:
            return 2 * r0 ** 2 / tau0
        raise ValueError("closed forms exist for m <= 2; use method='quad'")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        kernel = example_rate_kernel(tau0, delta_tau0, r0)
    f = lambda r: float(kernel(r)) * r ** m
    lo = quad(f, -np.inf, 0, epsabs=1e-14, epsrel=1e-12)[0]
    hi = quad(f, 0, np.inf, epsabs=1e-14, epsrel=1e-12)[0]
    return lo + hi
