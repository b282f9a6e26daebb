"""The four quantum-classical coupling mechanisms and the general rate matrix.

Jump rates are given per displacement ``r = destination - source`` as a
mapping ``{r: value}``. A value is either one array used at every source
site or a callable ``value(n)`` returning the array for source site ``n``.

Extended rate matrices order the operator basis as ``V_1 .. V_m`` followed
by the identity, so ``lam[-1, -1]`` is the classical-only rate,
``lam[:-1, -1]`` holds the ``mu I`` coefficients and ``lam[-1, :-1]`` the
``I nu`` ones.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .errors import (CPViolationError, PreconditionError, ResourceError,
                     ShapeError)
from .generator import GeneratorBuilder
from .superops import (anticommutator, commutator, dagger, gell_mann_basis,
                       left, right, sandwich)

CP_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Traceless operators ``V_mu`` spanning the quantum side of the couplings."""

    ops: tuple
    tol: float = 1e-10

    def __post_init__(self):
        ops = tuple(np.array(v, dtype=complex) for v in self.ops)
        if not ops:
            raise ShapeError("operator basis needs at least one operator")
        d = ops[0].shape[0]
        for v in ops:
            if v.shape != (d, d):
                raise ShapeError(f"basis operators must all be {d}x{d}, got {v.shape}")
            if abs(np.trace(v)) > self.tol:
                raise ShapeError("basis operators must be traceless")
        if len(ops) > d * d - 1:
            raise ShapeError(f"at most {d * d - 1} traceless operators for d={d}")
        for v in ops:
            v.setflags(write=False)
        object.__setattr__(self, "ops", ops)

    @classmethod
    def of(cls, *ops):
        return cls(tuple(ops))

    @classmethod
    def complete(cls, d):
        return cls(tuple(gell_mann_basis(d)))

    @property
    def d(self):
        return self.ops[0].shape[0]

    @property
    def m(self):
        return len(self.ops)

    @cached_property
    def extended(self):
        """``V_1 .. V_m, I`` as an ``(m+1, d, d)`` array."""
        return np.stack(self.ops + (np.eye(self.d, dtype=complex),))

    @cached_property
    def _superops(self):
        w = self.extended
        n = len(w)
        sand = np.array([[sandwich(w[j], dagger(w[k])) for k in range(n)] for j in range(n)])
        anti = np.array([[anticommutator(dagger(w[k]) @ w[j]) for k in range(n)]
                         for j in range(n)])
        lefts = np.array([left(v) for v in w])
        rights = np.array([right(dagger(v)) for v in w])
        comm = np.array([commutator(v) for v in w])
        comm_dag = np.array([commutator(dagger(v)) for v in w])
        return sand, anti, lefts, rights, comm, comm_dag


def _site_values(value, sites, shape):
    """Evaluate a uniform or callable rate description on every site."""
    def coerce(v):
        v = np.asarray(v, dtype=complex)
        if len(shape) == 2 and v.ndim == 1 and v.shape[0] == shape[0]:
            v = np.diag(v)
        if v.size == 1 and np.prod(shape, dtype=int) == 1:
            v = v.reshape(shape)
        if v.shape != shape:
            raise ShapeError(f"rate entry has shape {v.shape}, expected {shape}")
        return v
    if callable(value):
        return np.array([coerce(value(int(n))) for n in sites])
    return np.broadcast_to(coerce(value), (len(sites),) + shape).copy()


def _psd_tol(mat, tol):
    if tol is not None:
        return tol
    return CP_RTOL * max(np.linalg.norm(mat, 2), 1.0)


def _check_displacements(rates):
    for r in rates:
        if int(r) != r or r == 0:
            raise ValueError(f"jump displacements must be nonzero integers, got {r}")


@dataclass(frozen=True, eq=False)
class ConditionalLindblad:
    """Site-dependent Lindblad dynamics with no classical jumps."""

    eta: object
    hamiltonian: object = None
    variant = "M1"


@dataclass(frozen=True, eq=False)
class ClassicalHopping:
    """Classical jumps that leave the quantum state untouched."""

    rates: dict
    variant = "M2"

    def __post_init__(self):
        _check_displacements(self.rates)

    def extended_table(self, basis, sites):
        m = basis.m
        out = {}
        for r, value in self.rates.items():
            phi = _site_values(value, sites, (1, 1))[:, 0, 0]
            lam = np.zeros((len(sites), m + 1, m + 1), dtype=complex)
            lam[:, m, m] = phi
            out[r] = lam
        return out


@dataclass(frozen=True, eq=False)
class LindbladRateHopping:
    """Classical jumps that apply ``V_mu . V_nu^+`` to the quantum state."""

    rates: dict
    variant = "M3"

    def __post_init__(self):
        _check_displacements(self.rates)

    def gamma_table(self, basis, sites):
        return {r: _site_values(v, sites, (basis.m, basis.m)) for r, v in self.rates.items()}

    def extended_table(self, basis, sites):
        m = basis.m
        out = {}
        for r, g in self.gamma_table(basis, sites).items():
            lam = np.zeros((len(sites), m + 1, m + 1), dtype=complex)
            lam[:, :m, :m] = g
            out[r] = lam
        return out


def coherent_rate_matrix(a, b, gamma):
    """Extended matrix ``B gamma B^+`` of the coherent-superposition mechanism."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    gamma = np.asarray(gamma, dtype=complex)
    if gamma.ndim < 2:
        gamma = np.diag(np.atleast_1d(gamma))
    m = len(b)
    bmat = np.zeros((m + 1, m), dtype=complex)
    bmat[np.arange(m), np.arange(m)] = b
    bmat[m] = a
    return bmat @ gamma @ dagger(bmat)


@dataclass(frozen=True, eq=False)
class CoherentHopping:
    """Jumps carrying the operator ``a_mu I + b_mu V_mu`` (coherent superposition)."""

    a: object
    b: object
    rates: dict
    variant = "M4"

    def __post_init__(self):
        _check_displacements(self.rates)

    def gamma_table(self, basis, sites):
        return {r: _site_values(v, sites, (basis.m, basis.m)) for r, v in self.rates.items()}

    def extended_table(self, basis, sites):
        a = np.broadcast_to(np.asarray(self.a, dtype=complex), (basis.m,))
        b = np.broadcast_to(np.asarray(self.b, dtype=complex), (basis.m,))
        return {r: np.array([coherent_rate_matrix(a, b, gi) for gi in g])
                for r, g in self.gamma_table(basis, sites).items()}


@dataclass(frozen=True, eq=False)
class GeneralHopping:
    """Arbitrary positive semidefinite extended rate matrix per jump."""

    rates: dict
    variant = "General"

    def __post_init__(self):
        _check_displacements(self.rates)

    def extended_table(self, basis, sites):
        k = basis.m + 1
        return {r: _site_values(v, sites, (k, k)) for r, v in self.rates.items()}


@dataclass
class RateMatrixReport:
    eigenvalues: np.ndarray
    minors: np.ndarray
    schur_slack: float
    ellipse_ratio: float
    cp_ok: bool
    fourth_case_boundary: bool
    tol: float

    @property
    def min_eigenvalue(self):
        return float(self.eigenvalues[0])


def _schur_parts(lam):
    blk, col, row, ii = lam[:-1, :-1], lam[:-1, -1], lam[-1, :-1], lam[-1, -1].real
    inv = np.linalg.pinv(blk, hermitian=True)
    quad = float(np.real(row @ inv @ col))
    invertible = np.linalg.matrix_rank(blk) == blk.shape[0] if blk.size else True
    return quad, ii, invertible


def validate_rate_matrix(lam, tol=None):
    """Complete-positivity report for one extended rate matrix."""
    lam = np.atleast_2d(np.asarray(lam, dtype=complex))
    if lam.ndim != 2 or lam.shape[0] != lam.shape[1] or lam.shape[0] < 2:
        raise ShapeError(f"extended rate matrix must be square and at least 2x2, got {lam.shape}")
    tol = _psd_tol(lam, tol)
    if np.max(np.abs(lam - dagger(lam))) > tol:
        raise ShapeError("extended rate matrix is not Hermitian")
    herm = 0.5 * (lam + dagger(lam))
    evals = np.linalg.eigvalsh(herm)
    minors = np.array([np.linalg.det(herm[:k, :k]).real for k in range(1, len(herm) + 1)])
    quad, ii, invertible = _schur_parts(herm)
    slack = ii - quad
    ratio = quad / ii if ii > 0 else (0.0 if quad == 0 else np.inf)
    return RateMatrixReport(
        eigenvalues=evals,
        minors=minors,
        schur_slack=slack,
        ellipse_ratio=ratio,
        cp_ok=bool(evals[0] >= -tol),
        fourth_case_boundary=bool(abs(slack) <= tol and invertible),
        tol=tol,
    )


def fourth_case_split(lam):
    """Split ``lam`` into a zero-slack coherent part plus a classical-only residual.

    The residual only carries ``s`` in its identity-identity entry, so it is
    positive semidefinite exactly when the Schur slack ``s`` is nonnegative.
    """
    lam = np.asarray(lam, dtype=complex)
    quad, ii, _ = _schur_parts(lam)
    boundary = lam.copy()
    boundary[-1, -1] = quad
    residual = np.zeros_like(lam)
    residual[-1, -1] = ii - quad
    return boundary, residual


def induced_hamiltonian(lam_out, basis):
    """``H = (i/2) sum_mu (lam^{mu I} V_mu - lam^{I mu} V_mu^+)`` for summed outgoing rates."""
    h = np.zeros((basis.d, basis.d), dtype=complex)
    for mu, v in enumerate(basis.ops):
        h += 0.5j * (lam_out[mu, -1] * v - lam_out[-1, mu] * dagger(v))
    return h


def _check_tables(tables, sites):
    for r, lam in tables.items():
        for i, n in enumerate(sites):
            rep = validate_rate_matrix(lam[i])
            if not rep.cp_ok:
                pair = (int(n + r), int(n))
                raise CPViolationError(
                    f"rate matrix for jump {pair[1]} -> {pair[0]} is not positive "
                    f"semidefinite (min eigenvalue {rep.min_eigenvalue:.3g})",
                    pair=pair, slack=rep.schur_slack)


def _local_lindblad(eta, h, basis):
    sand, anti, *_ = basis._superops
    m = basis.m
    out = np.einsum("nab,abij->nij", eta, sand[:m, :m]) \
        - 0.5 * np.einsum("nab,abij->nij", eta, anti[:m, :m])
    if h is not None:
        out = out + np.array([commutator(hn) for hn in h])
    return out


def _build_m1(spec, basis, lattice, builder):
    sites = lattice.sites
    eta = _site_values(spec.eta, sites, (basis.m, basis.m))
    for i, n in enumerate(sites):
        if np.max(np.abs(eta[i] - dagger(eta[i]))) > _psd_tol(eta[i], None):
            raise ShapeError(f"rate matrix at site {n} is not Hermitian")
        if np.linalg.eigvalsh(eta[i])[0] < -_psd_tol(eta[i], None):
            raise CPViolationError(f"local rate matrix at site {n} is not positive semidefinite",
                                   pair=(int(n), int(n)))
    h = None
    if spec.hamiltonian is not None:
        h = _site_values(spec.hamiltonian, sites, (basis.d, basis.d))
        if np.max(np.abs(h - dagger(h))) > 1e-10:
            raise PreconditionError("conditional Hamiltonians must be Hermitian")
    builder.add_local(_local_lindblad(eta, h, basis))


def _build_m2(spec, basis, lattice, builder):
    dd = basis.d ** 2
    eye = np.eye(dd)
    for r, value in spec.rates.items():
        phi = _site_values(value, lattice.sites, (1, 1))[:, 0, 0]
        if np.any(np.abs(phi.imag) > 0) or np.any(phi.real < 0):
            i = int(np.flatnonzero((phi.real < 0) | (phi.imag != 0))[0])
            n = int(lattice.sites[i])
            raise CPViolationError(f"hopping rate {phi[i]} for jump {n} -> {n + r} is negative",
                                   pair=(n + r, n), slack=float(phi[i].real))
        phi = phi.real[:, None, None]
        builder.add_jump(r, phi * eye, -phi * eye)


def _build_m3(spec, basis, lattice, builder):
    sand, anti, *_ = basis._superops
    m = basis.m
    _check_tables(spec.extended_table(basis, lattice.sites), lattice.sites)
    for r, g in spec.gamma_table(basis, lattice.sites).items():
        gain = np.einsum("nab,abij->nij", g, sand[:m, :m])
        loss = -0.5 * np.einsum("nab,abij->nij", g, anti[:m, :m])
        builder.add_jump(r, gain, loss)


def _build_cuatro(tables, basis, builder):
    """Gain/loss/Hamiltonian/one-sided terms written out term by term."""
    sand, anti, lefts, rights, comm, _ = basis._superops
    m = basis.m
    eye = np.eye(basis.d ** 2)
    for r, lam in tables.items():
        blk, col, row, ii = lam[:, :m, :m], lam[:, :m, m], lam[:, m, :m], lam[:, m, m]
        gain = (np.einsum("nab,abij->nij", blk, sand[:m, :m])
                + ii[:, None, None] * eye
                + np.einsum("na,aij->nij", col, lefts[:m])
                + np.einsum("nb,bij->nij", row, rights[:m]))
        loss = (-0.5 * np.einsum("nab,abij->nij", blk, anti[:m, :m])
                - ii[:, None, None] * eye
                - np.einsum("na,aij->nij", col, lefts[:m])
                - np.einsum("nb,bij->nij", row, rights[:m]))
        ham = np.array([commutator(induced_hamiltonian(l, basis)) for l in lam])
        builder.add_jump(r, gain, loss + ham)


def build_generator(specs, basis, lattice):
    """Sum of the generators of ``specs`` on ``lattice``.

    Every extended rate matrix is checked for positive semidefiniteness and a
    :class:`CPViolationError` names the first failing ``(destination, source)``.
    """
    if not isinstance(specs, (list, tuple)):
        specs = [specs]
    builder = GeneratorBuilder(lattice, basis.d)
    for spec in specs:
        builder.variants.append(spec.variant)
        if isinstance(spec, ConditionalLindblad):
            _build_m1(spec, basis, lattice, builder)
        elif isinstance(spec, ClassicalHopping):
            _build_m2(spec, basis, lattice, builder)
        elif isinstance(spec, LindbladRateHopping):
            _build_m3(spec, basis, lattice, builder)
        elif isinstance(spec, (CoherentHopping, GeneralHopping)):
            tables = spec.extended_table(basis, lattice.sites)
            _check_tables(tables, lattice.sites)
            _build_cuatro(tables, basis, builder)
        else:
            raise TypeError(f"unknown mechanism spec {type(spec).__name__}")
    return builder.build()


@dataclass
class ReducedLindblad:
    """Closed quantum dynamics ``-i[H, .] + sum rates^{mu nu} L_{mu nu}``."""

    rates: np.ndarray
    hamiltonian: np.ndarray
    basis: OperatorBasis

    def superop(self):
        sand, anti, *_ = self.basis._superops
        m = self.basis.m
        out = np.einsum("ab,abij->ij", self.rates, sand[:m, :m]) \
            - 0.5 * np.einsum("ab,abij->ij", self.rates, anti[:m, :m])
        return out + commutator(self.hamiltonian)

    def __call__(self, rho):
        d = self.basis.d
        return (self.superop() @ np.asarray(rho).reshape(-1)).reshape(d, d)


def _outgoing_totals(spec, basis, lattice):
    tables = spec.extended_table(basis, lattice.sites)
    k = basis.m + 1
    total = np.zeros((lattice.size, k, k), dtype=complex)
    for lam in tables.values():
        total += lam
    return total


def reduced_quantum_lindblad(spec, basis, lattice, tol=1e-12):
    """Closed Lindblad generator of the quantum marginal, or ``None``.

    The quantum marginal closes when the total outgoing rate matrix
    ``sum_r lam(r | n)`` is the same for every source ``n``. Totals are taken
    over the full rate table, so the answer refers to the unbounded lattice.
    """
    if not isinstance(spec, (LindbladRateHopping, CoherentHopping, GeneralHopping)):
        raise TypeError("closed quantum dynamics is defined for jump mechanisms with operators")
    total = _outgoing_totals(spec, basis, lattice)
    scale = max(np.max(np.abs(total)), 1.0)
    if np.max(np.abs(total - total[0])) > tol * scale:
        return None
    lam0 = total[0]
    m = basis.m
    return ReducedLindblad(lam0[:m, :m].copy(), induced_hamiltonian(lam0, basis), basis)


def reduced_classical_master(spec, basis, lattice, tol=1e-12):
    """Classical rates ``gamma0(r | n)`` when every jump has ``sum gamma V^+V`` proportional
    to the identity, else ``None``."""
    if not isinstance(spec, LindbladRateHopping):
        raise TypeError("closed classical dynamics is defined for Lindblad rate hopping")
    d = basis.d
    w = basis.extended[:-1]
    out = {}
    for r, g in spec.gamma_table(basis, lattice.sites).items():
        kmat = np.einsum("nab,bij,ajk->nik", g, dagger(w), w)
        rate = np.trace(kmat, axis1=1, axis2=2) / d
        resid = kmat - rate[:, None, None] * np.eye(d)
        if np.max(np.abs(resid)) > tol * max(np.max(np.abs(kmat)), 1.0):
            return None
        out[r] = rate.real
    return out


@dataclass
class BipartiteReport:
    hybrid_form_defect: float
    block_mismatch: float
    choi_min_eigenvalue: float
    tol: float

    @property
    def ok(self):
        return (self.hybrid_form_defect <= self.tol and self.block_mismatch <= self.tol
                and self.choi_min_eigenvalue >= -1e-8)


class BipartiteLindblad:
    """Lindblad generator on the product space ``quantum (x) classical``.

    Channels are ``(ops, coeffs)`` pairs contributing
    ``sum_ij coeffs[i, j] (A_i X A_j^+ - {A_j^+ A_i, X} / 2)``.
    """

    def __init__(self, d, d_c, hamiltonian, channels):
        self.d, self.d_c = d, d_c
        self.dim = d * d_c
        self.hamiltonian = hamiltonian
        self.channels = channels
        k = np.zeros((self.dim, self.dim), dtype=complex)
        for ops, coeffs in channels:
            for i, ai in enumerate(ops):
                for j, aj in enumerate(ops):
                    if coeffs[i, j] != 0:
                        k += coeffs[i, j] * dagger(aj) @ ai
        self._k = k

    def __call__(self, xi):
        out = -1j * (self.hamiltonian @ xi - xi @ self.hamiltonian)
        out -= 0.5 * (self._k @ xi + xi @ self._k)
        for ops, coeffs in self.channels:
            for i, ai in enumerate(ops):
                for j, aj in enumerate(ops):
                    if coeffs[i, j] != 0:
                        out += coeffs[i, j] * ai @ xi @ dagger(aj)
        return out

    def matrix(self):
        n = self.dim
        cols = []
        for k in range(n * n):
            e = np.zeros(n * n, dtype=complex)
            e[k] = 1
            cols.append(self(e.reshape(n, n)).reshape(-1))
        return np.array(cols).T

    def hybrid(self, rho):
        """``sum_c rho_c (x) |c><c|`` for a stack of conditional states."""
        xi = np.zeros((self.dim, self.dim), dtype=complex)
        for c, rc in enumerate(rho):
            proj = np.zeros((self.d_c, self.d_c))
            proj[c, c] = 1
            xi += np.kron(rc, proj)
        return xi

    def blocks(self, xi):
        """Classical blocks ``xi[c, c']`` as a ``(d_c, d_c, d, d)`` array."""
        x = xi.reshape(self.d, self.d_c, self.d, self.d_c)
        return np.transpose(x, (1, 3, 0, 2))

    def choi_min_eigenvalue(self, dt):
        n = self.dim
        prop = expm(self.matrix() * dt)
        choi = np.zeros((n * n, n * n), dtype=complex)
        for k in range(n * n):
            i, j = divmod(k, n)
            out = (prop[:, k]).reshape(n, n)
            eij = np.zeros((n, n))
            eij[i, j] = 1
            choi += np.kron(out, eij)
        return float(np.linalg.eigvalsh(0.5 * (choi + dagger(choi)))[0])


def _ket_bra(d_c, c, cp):
    e = np.zeros((d_c, d_c), dtype=complex)
    e[c, cp] = 1
    return e


def embed_bipartite(specs, basis, d_c, samples=20, dt=0.05, tol=1e-12, seed=0):
    """Bipartite Lindblad generator of ``specs`` on ``d_c`` classical states.

    Returns the generator and a report comparing it with
    :func:`build_generator` on random hybrid states.
    """
    from .state import Lattice

    if not isinstance(specs, (list, tuple)):
        specs = [specs]
    d = basis.d
    if d * d_c > 64:
        raise ResourceError(f"bipartite dimension {d * d_c} exceeds 64")
    lattice = Lattice(0, d_c - 1)
    sites = lattice.sites
    eye_s = np.eye(d, dtype=complex)
    ham = np.zeros((d * d_c, d * d_c), dtype=complex)
    channels = []
    for spec in specs:
        if isinstance(spec, ConditionalLindblad):
            eta = _site_values(spec.eta, sites, (basis.m, basis.m))
            h = None
            if spec.hamiltonian is not None:
                h = _site_values(spec.hamiltonian, sites, (d, d))
            for c in sites:
                proj = _ket_bra(d_c, c, c)
                channels.append(([np.kron(v, proj) for v in basis.ops], eta[c]))
                if h is not None:
                    ham += np.kron(h[c], proj)
            continue
        if isinstance(spec, ClassicalHopping):
            table = {r: _site_values(v, sites, (1, 1))[:, 0, 0] for r, v in spec.rates.items()}
            for r, phi in table.items():
                for c in sites:
                    if 0 <= c + r < d_c:
                        channels.append(([np.kron(eye_s, _ket_bra(d_c, c + r, c))],
                                         np.array([[phi[c]]])))
            continue
        if isinstance(spec, LindbladRateHopping):
            for r, g in spec.gamma_table(basis, sites).items():
                for c in sites:
                    if 0 <= c + r < d_c:
                        e = _ket_bra(d_c, c + r, c)
                        channels.append(([np.kron(v, e) for v in basis.ops], g[c]))
            continue
        if isinstance(spec, CoherentHopping):
            a = np.broadcast_to(np.asarray(spec.a, dtype=complex), (basis.m,))
            b = np.broadcast_to(np.asarray(spec.b, dtype=complex), (basis.m,))
            for r, g in spec.gamma_table(basis, sites).items():
                for c in sites:
                    if 0 <= c + r < d_c:
                        e = _ket_bra(d_c, c + r, c)
                        ops = [np.kron(a[mu] * eye_s + b[mu] * v, e)
                               for mu, v in enumerate(basis.ops)]
                        channels.append((ops, g[c]))
            continue
        if isinstance(spec, GeneralHopping):
            for r, lam in spec.extended_table(basis, sites).items():
                for c in sites:
                    if 0 <= c + r < d_c:
                        e = _ket_bra(d_c, c + r, c)
                        ops = [np.kron(v, e) for v in basis.extended]
                        channels.append((ops, lam[c]))
            continue
        raise TypeError(f"unknown mechanism spec {type(spec).__name__}")
    bip = BipartiteLindblad(d, d_c, ham, channels)

    gen = build_generator(specs, basis, lattice)
    rng = np.random.default_rng(seed)
    form_defect = mismatch = 0.0
    for _ in range(samples):
        rho = random_hybrid_rho(rng, d_c, d)
        out = bip.blocks(bip(bip.hybrid(rho)))
        diag = out[np.arange(d_c), np.arange(d_c)]
        off = out.copy()
        off[np.arange(d_c), np.arange(d_c)] = 0
        form_defect = max(form_defect, float(np.max(np.abs(off))))
        mismatch = max(mismatch, float(np.max(np.abs(diag - gen.apply(rho)))))
    report = BipartiteReport(form_defect, mismatch, bip.choi_min_eigenvalue(dt), tol)
    return bip, report


def random_hybrid_rho(rng, n_sites, d):
    """Random positive conditional states with total trace one."""
    g = rng.normal(size=(n_sites, d, d)) + 1j * rng.normal(size=(n_sites, d, d))
    rho = g @ dagger(g)
    return rho / np.trace(rho, axis1=1, axis2=2).real.sum()
