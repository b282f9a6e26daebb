"""Compiled hybrid generators in per-site stencil form.

A generator is stored as ``blocks[r][i]``: the ``d^2 x d^2`` superoperator
that maps the conditional state at source site ``i`` to its contribution at
site ``i + r``. Jumps leaving the lattice window are dropped together with
their loss terms, so every generator built here is exactly trace-free.
"""
import numpy as np

from .errors import ShapeError
from .state import HybridState


class HybridGenerator:
    """Linear map from a hybrid state to its time derivative."""

    def __init__(self, lattice, d, blocks, variants=()):
        self.lattice = lattice
        self.d = d
        n, dd = lattice.size, d * d
        self.blocks = {}
        for r, b in blocks.items():
            b = np.asarray(b, dtype=complex)
            if b.shape != (n, dd, dd):
                raise ShapeError(f"block {r} has shape {b.shape}, expected {(n, dd, dd)}")
            b.setflags(write=False)
            self.blocks[int(r)] = b
        self.variants = tuple(variants)

    @classmethod
    def zero(cls, lattice, d):
        return cls(lattice, d, {})

    def __repr__(self):
        return (f"HybridGenerator(d={self.d}, sites={self.lattice.size}, "
                f"displacements={sorted(self.blocks)}, variants={self.variants})")

    def __add__(self, other):
        if other.lattice != self.lattice or other.d != self.d:
            raise ShapeError("cannot add generators on different lattices or dimensions")
        blocks = {r: b.copy() for r, b in self.blocks.items()}
        for r, b in other.blocks.items():
            blocks[r] = blocks[r] + b if r in blocks else b.copy()
        return HybridGenerator(self.lattice, self.d, blocks, self.variants + other.variants)

    def __mul__(self, scale):
        return HybridGenerator(self.lattice, self.d,
                               {r: scale * b for r, b in self.blocks.items()}, self.variants)

    __rmul__ = __mul__

    def apply_vec(self, x):
        """Derivative of a vectorised field ``x`` of shape ``(sites, d*d)``."""
        out = np.zeros_like(x, dtype=complex)
        n = self.lattice.size
        for r, b in self.blocks.items():
            if r >= 0:
                src, dst = slice(0, n - r), slice(r, n)
            else:
                src, dst = slice(-r, n), slice(0, n + r)
            out[dst] += np.einsum("nij,nj->ni", b[src], x[src])
        return out

    def apply(self, rho):
        """Derivative of a stack of conditional states ``(sites, d, d)``."""
        rho = np.asarray(rho)
        if rho.shape != (self.lattice.size, self.d, self.d):
            raise ShapeError(
                f"state shape {rho.shape} does not match generator "
                f"{(self.lattice.size, self.d, self.d)}")
        d = self.d
        return self.apply_vec(rho.reshape(-1, d * d)).reshape(rho.shape)

    def __call__(self, state):
        if isinstance(state, HybridState):
            if state.lattice != self.lattice:
                raise ShapeError("state and generator live on different lattices")
            return self.apply(state.rho)
        return self.apply(state)

    def max_outflow(self):
        """Largest spectral norm of the on-site block over all sites."""
        local = self.blocks.get(0)
        if local is None:
            return 0.0
        return float(np.max(np.linalg.norm(local, ord=2, axis=(1, 2))))

    def dense(self):
        n, dd = self.lattice.size, self.d * self.d
        m = np.zeros((n * dd, n * dd), dtype=complex)
        for r, b in self.blocks.items():
            for i in range(n):
                j = i + r
                if 0 <= j < n:
                    m[j * dd:(j + 1) * dd, i * dd:(i + 1) * dd] += b[i]
        return m


class GeneratorBuilder:
    """Accumulates stencil blocks before freezing them into a generator."""

    def __init__(self, lattice, d, variant=None):
        self.lattice = lattice
        self.d = d
        self.variants = [variant] if variant else []
        self._blocks = {}

    def _block(self, r):
        if r not in self._blocks:
            dd = self.d * self.d
            self._blocks[r] = np.zeros((self.lattice.size, dd, dd), dtype=complex)
        return self._blocks[r]

    def _inside(self, r):
        n = self.lattice.size
        idx = np.arange(n)
        return (idx + r >= 0) & (idx + r < n)

    def add_local(self, superop):
        """On-site term; ``superop`` is one matrix or one per site."""
        self._block(0)[:] += superop
        return self

    def add_jump(self, r, gain, loss):
        """Jump by ``r`` sites: ``gain`` lands on the destination, ``loss`` stays
        on the source. Both are one matrix or one per source site, already
        multiplied by the rate. Sources whose destination is off-lattice are
        skipped entirely.
        """
        r = int(r)
        n, dd = self.lattice.size, self.d * self.d
        inside = self._inside(r)[:, None, None]
        gain = np.broadcast_to(np.asarray(gain, dtype=complex), (n, dd, dd))
        loss = np.broadcast_to(np.asarray(loss, dtype=complex), (n, dd, dd))
        if r == 0:
            self._block(0)[:] += gain + loss
        else:
            self._block(r)[:] += np.where(inside, gain, 0)
            self._block(0)[:] += np.where(inside, loss, 0)
        return self

    def build(self):
        return HybridGenerator(self.lattice, self.d, self._blocks, self.variants)
