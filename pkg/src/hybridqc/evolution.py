"""Fixed-step RK4 integration of hybrid generators with leak and trace monitoring."""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (BoundaryLeakError, InstabilityError, NumericalError,
                     ShapeError)
from .state import HybridState, determinants

COURANT = 0.05
EDGE_SITES = 3


def dt_for(gen, courant=COURANT):
    """Largest step satisfying ``dt * max_outflow <= courant``."""
    rate = gen.max_outflow()
    return np.inf if rate == 0 else courant / rate


@dataclass(frozen=True)
class IntegrationPlan:
    dt: float
    t_end: float
    snapshot_stride: int = 1
    leak_tol: float = 1e-8
    trace_tol: float = 1e-10

    def __post_init__(self):
        if not self.dt > 0 or not self.t_end >= 0:
            raise ValueError("need dt > 0 and t_end >= 0")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be a positive integer")

    @property
    def n_steps(self):
        return int(np.ceil(self.t_end / self.dt - 1e-9))

    @property
    def step(self):
        """Step actually used: ``t_end`` split into ``n_steps`` equal pieces."""
        return self.t_end / self.n_steps if self.n_steps else 0.0


class Trajectory:
    """Snapshots ``rho[k]`` at ``times[k]`` on a fixed lattice; observables are lazy."""

    def __init__(self, lattice, times, rho, label=""):
        self.lattice = lattice
        self.times = np.asarray(times, dtype=float)
        self.rho = np.asarray(rho, dtype=complex)
        self.label = label
        if self.rho.ndim != 4 or self.rho.shape[:2] != (len(self.times), lattice.size):
            raise ShapeError(f"trajectory array has shape {self.rho.shape}")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def d(self):
        return self.rho.shape[-1]

    def state(self, k):
        return HybridState(self.lattice, self.rho[k], float(self.times[k]))

    def index_at(self, t, tol=1e-9):
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return k

    def at(self, t):
        return self.state(self.index_at(t))

    def select(self, times):
        idx = [self.index_at(t) for t in times]
        return Trajectory(self.lattice, self.times[idx], self.rho[idx], self.label)

    @cached_property
    def populations(self):
        """``(snapshots, sites, d)`` diagonal elements."""
        return np.real(np.diagonal(self.rho, axis1=2, axis2=3))

    @cached_property
    def coherences(self):
        """Upper off-diagonal element ``rho[0, 1]`` per snapshot and site."""
        return self.rho[..., 0, 1]

    @cached_property
    def determinants(self):
        if self.d != 2:
            raise ShapeError("determinant field needs two-level conditional states")
        return determinants(self.rho)

    @cached_property
    def min_eigenvalues(self):
        herm = 0.5 * (self.rho + np.conj(np.swapaxes(self.rho, -1, -2)))
        return np.linalg.eigvalsh(herm)[..., 0]

    @cached_property
    def total_trace(self):
        return np.real(np.trace(self.rho, axis1=2, axis2=3)).sum(axis=1)

    @cached_property
    def quantum_marginals(self):
        return self.rho.sum(axis=1)

    @cached_property
    def classical_probs(self):
        return np.real(np.trace(self.rho, axis1=2, axis2=3))

    def hermiticity_defect(self):
        return float(np.max(np.abs(self.rho - np.conj(np.swapaxes(self.rho, -1, -2)))))


def apply_generator(gen, state):
    """Time derivative ``G(state)`` as a ``(sites, d, d)`` array."""
    return gen(state)


def _edge_mass(x, dd, d):
    tr = np.real(x.reshape(-1, d, d).trace(axis1=1, axis2=2))
    k = min(EDGE_SITES, len(tr) // 2)
    return float(np.abs(tr[:k]).sum() + np.abs(tr[-k:]).sum())


def integrate(gen, state0, plan, subdivide=True):
    """Classical fourth-order Runge-Kutta with fixed step.

    When ``plan.dt`` violates ``dt * max_outflow <= 0.05`` each step is split
    into equal substeps that satisfy it; with ``subdivide=False`` the plan's
    step is used as given.

    Raises :class:`BoundaryLeakError` when more than ``plan.leak_tol`` of the
    probability reaches the three outermost sites on either side and
    :class:`InstabilityError` when non-finite values appear.
    """
    if state0.lattice != gen.lattice or state0.d != gen.d:
        raise ShapeError("initial state does not match the generator")
    h = plan.step
    sub = 1
    if subdivide:
        sub = max(1, int(np.ceil(h * gen.max_outflow() / COURANT - 1e-9)))
    hs = h / sub
    d = gen.d
    dd = d * d
    x = np.array(state0.rho, dtype=complex).reshape(-1, dd)
    trace0 = state0.total_trace
    t0 = state0.time
    times, snaps = [t0], [x.copy()]
    f = gen.apply_vec
    if _edge_mass(x, dd, d) > plan.leak_tol:
        raise BoundaryLeakError("initial state already has weight near the lattice edges")
    for step in range(1, plan.n_steps + 1):
        for _ in range(sub):
            k1 = f(x)
            k2 = f(x + 0.5 * hs * k1)
            k3 = f(x + 0.5 * hs * k2)
            k4 = f(x + hs * k3)
            x = x + (hs / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        last = step == plan.n_steps
        if step % plan.snapshot_stride == 0 or last:
            t = t0 + step * h
            if not np.all(np.isfinite(x)):
                raise InstabilityError(f"non-finite values at t={t:.6g}; reduce the time step")
            leak = _edge_mass(x, dd, d)
            if leak > plan.leak_tol:
                raise BoundaryLeakError(
                    f"probability {leak:.3g} near the lattice edges at t={t:.6g}; "
                    "enlarge the lattice window")
            drift = abs(np.real(x.reshape(-1, d, d).trace(axis1=1, axis2=2)).sum() - trace0)
            if drift > plan.trace_tol:
                raise NumericalError(f"total trace drifted by {drift:.3g} at t={t:.6g}")
            times.append(t)
            snaps.append(x.copy())
    rho = np.array(snaps).reshape(len(snaps), -1, d, d)
    return Trajectory(state0.lattice, times, rho)
