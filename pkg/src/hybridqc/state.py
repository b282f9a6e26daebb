"""Hybrid states: conditional density matrices on a finite classical lattice."""
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .errors import (BoundsError, InvalidStateError, ShapeError,
                     TruncationError, UnsupportedDimensionError)
from .superops import dagger

DEFAULT_TOL = 1e-10
TRUNCATION_TOL = 1e-8


@dataclass(frozen=True)
class Lattice:
    """Finite window ``n_min..n_max`` of classical sites with spacing ``r0``.

    Site ``n`` sits at coordinate ``q = n * r0``.
    """

    n_min: int
    n_max: int
    r0: float = 1.0

    def __post_init__(self):
        if int(self.n_min) != self.n_min or int(self.n_max) != self.n_max:
            raise ValueError("lattice bounds must be integers")
        if not self.n_min < self.n_max:
            raise ValueError(f"need n_min < n_max, got {self.n_min}, {self.n_max}")
        if not self.r0 > 0:
            raise ValueError(f"site spacing must be positive, got {self.r0}")

    @classmethod
    def symmetric(cls, half_width, r0=1.0):
        return cls(-int(half_width), int(half_width), float(r0))

    @property
    def size(self):
        return self.n_max - self.n_min + 1

    @property
    def sites(self):
        return np.arange(self.n_min, self.n_max + 1)

    @property
    def coords(self):
        return self.sites * self.r0

    def contains(self, n):
        return self.n_min <= n <= self.n_max

    def index(self, n):
        if not self.contains(n):
            raise BoundsError(f"site {n} outside lattice [{self.n_min}, {self.n_max}]")
        return int(n - self.n_min)

    def nearest_site(self, q):
        return int(np.floor(q / self.r0 + 0.5))


@dataclass(frozen=True, eq=False)
class HybridState:
    """Unnormalised conditional states ``rho[i]`` for site ``lattice.n_min + i``.

    The array is copied and frozen on construction; build a new state to
    change it.
    """

    lattice: Lattice
    rho: np.ndarray
    time: float = 0.0
    d: int = field(init=False)

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.ndim != 3 or rho.shape[1] != rho.shape[2]:
            raise ShapeError(f"expected (sites, d, d) array, got shape {rho.shape}")
        if rho.shape[0] != self.lattice.size:
            raise ShapeError(
                f"state has {rho.shape[0]} sites, lattice has {self.lattice.size}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "d", rho.shape[1])

    def site(self, n):
        return self.rho[self.lattice.index(n)]

    def evolved(self, rho, time):
        return HybridState(self.lattice, rho, time)

    @property
    def probabilities(self):
        return np.real(np.trace(self.rho, axis1=1, axis2=2))

    @property
    def total_trace(self):
        return float(np.sum(self.probabilities))

    def density(self):
        """Continuum density ``rho_n / r0`` at ``q = n r0``."""
        return self.rho / self.lattice.r0


def check_density_matrix(rho0, tol=DEFAULT_TOL):
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.ndim != 2 or rho0.shape[0] != rho0.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got shape {rho0.shape}")
    if np.max(np.abs(rho0 - dagger(rho0))) > tol:
        raise InvalidStateError("density matrix is not Hermitian")
    evals = np.linalg.eigvalsh(0.5 * (rho0 + dagger(rho0)))
    if evals[0] < -tol:
        raise InvalidStateError(f"density matrix has negative eigenvalue {evals[0]:.3g}")
    if abs(np.trace(rho0).real - 1) > tol:
        raise InvalidStateError(f"density matrix trace is {np.trace(rho0).real}, not 1")
    return rho0


def make_localized_state(rho0, n0, lattice, tol=DEFAULT_TOL):
    """All classical weight on site ``n0``; quantum state ``rho0`` there."""
    rho0 = check_density_matrix(rho0, tol)
    i0 = lattice.index(n0)
    rho = np.zeros((lattice.size,) + rho0.shape, dtype=complex)
    rho[i0] = rho0
    return HybridState(lattice, rho)


def make_gaussian_state(rho0, q0, sigma0, lattice, tol=DEFAULT_TOL):
    """Discretised Gaussian classical weights ``w_n ~ exp(-(n r0 - q0)^2 / 2 sigma0^2)``.

    ``sigma0 == 0`` puts everything on the site nearest ``q0``. Raises
    :class:`TruncationError` when more than ``1e-8`` of the Gaussian mass
    lies outside the window.
    """
    if sigma0 < 0:
        raise ValueError("sigma0 must be nonnegative")
    if sigma0 == 0:
        return make_localized_state(rho0, lattice.nearest_site(q0), lattice, tol)
    rho0 = check_density_matrix(rho0, tol)
    lo = (lattice.n_min - 0.5) * lattice.r0
    hi = (lattice.n_max + 0.5) * lattice.r0
    outside = ndtr((lo - q0) / sigma0) + ndtr((q0 - hi) / sigma0)
    if outside > TRUNCATION_TOL:
        raise TruncationError(
            f"Gaussian mass {outside:.3g} outside lattice window; enlarge the lattice")
    z = -((lattice.coords - q0) ** 2) / (2 * sigma0 ** 2)
    w = np.exp(z - z.max())
    w /= w.sum()
    return HybridState(lattice, w[:, None, None] * rho0[None])


def marginals(state):
    """Quantum marginal ``sum_n rho_n`` and classical probabilities ``Tr rho_n``."""
    return state.rho.sum(axis=0), state.probabilities


def determinant_field(state):
    """Per-site ``p+ p- - |c|^2`` of two-level conditional states."""
    if state.d != 2:
        raise UnsupportedDimensionError(
            f"determinant criterion needs d=2, got d={state.d}; use validate_state")
    return determinants(state.rho)


def determinants(rho):
    rho = np.asarray(rho)
    return (rho[..., 0, 0].real * rho[..., 1, 1].real
            - np.abs(0.5 * (rho[..., 0, 1] + np.conj(rho[..., 1, 0]))) ** 2)


@dataclass
class StateReport:
    hermiticity_defect: np.ndarray
    min_eigenvalue: np.ndarray
    traces: np.ndarray
    total_trace: float
    tol: float

    @property
    def non_hermitian_sites(self):
        return np.flatnonzero(self.hermiticity_defect > self.tol)

    @property
    def negative_sites(self):
        return np.flatnonzero(self.min_eigenvalue < -self.tol)

    @property
    def trace_ok(self):
        return abs(self.total_trace - 1) <= self.tol

    @property
    def ok(self):
        return (self.trace_ok and self.non_hermitian_sites.size == 0
                and self.negative_sites.size == 0)


def validate_state(state, tol=DEFAULT_TOL):
    rho = state.rho
    defect = np.max(np.abs(rho - dagger(rho)), axis=(1, 2))
    herm = 0.5 * (rho + dagger(rho))
    min_eig = np.linalg.eigvalsh(herm)[:, 0]
    traces = np.real(np.trace(rho, axis1=1, axis2=2))
    return StateReport(defect, min_eig, traces, float(traces.sum()), tol)
