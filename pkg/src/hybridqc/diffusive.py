"""Diffusive and quantum Fokker-Planck generators on a coordinate grid.

Every transport term ``-d/dq[A1 S(rho)] + 1/2 d^2/dq^2[A2 S(rho)]`` is
discretised in conserving jump form: a source site ``i`` sends
``w_+-(i) = +-A1(i)/(2h) + A2(i)/(2h^2)`` times ``S(rho_i)`` to ``i +- 1`` and
loses the same amount. In the interior this is the central-difference
stencil ``L1/h`` and ``L2/h^2`` applied to the product ``A S(rho)``, and the
telescoping makes every generator exactly trace-free.

Moment channels follow the extended basis of the rate matrix: ``II`` is the
classical channel, ``mu`` the diagonal operator channels and ``muI``/``Imu``
the coherent cross channels.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import (BoundsError, CPViolationError, DomainError,
                     PreconditionError, ShapeError)
from .generator import GeneratorBuilder
from .mechanisms import OperatorBasis
from .superops import commutator, dagger, dissipator, left, right, sandwich

CHANNELS = ("II", "mu", "muI", "Imu")
FLAVORS = ("case2", "case2+3", "case2+3-limit", "case4", "qfp")


@dataclass(frozen=True, eq=False)
class JumpKernel:
    """Jump rate density ``lambda(r | q)`` for one channel.

    Either a ``table`` ``{k: weight}`` of jumps ``r = k * spacing`` (weights may
    be callables of ``q``) or a continuous ``density(r, q)`` supported on
    ``|r| <= support``.
    """

    channel: str
    table: dict = None
    spacing: float = 1.0
    density: object = None
    support: float = np.inf

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if (self.table is None) == (self.density is None):
            raise ValueError("give exactly one of table or density")

    def weights(self, q):
        """Table weights evaluated at coordinate ``q``."""
        out = {}
        for k, w in self.table.items():
            w = w(q) if callable(w) else w
            if self.channel in ("II", "mu") and (np.imag(w) != 0 or np.real(w) < 0):
                raise ValueError(f"{self.channel} channel rates must be real and nonnegative")
            out[int(k)] = complex(w)
        return out

    def conjugate(self):
        """Kernel of the Hermitian-conjugate channel (``muI`` <-> ``Imu``)."""
        other = {"muI": "Imu", "Imu": "muI"}.get(self.channel, self.channel)
        if self.table is not None:
            table = {k: (lambda q, w=w: np.conj(w(q))) if callable(w) else np.conj(w)
                     for k, w in self.table.items()}
            return JumpKernel(other, table, self.spacing)
        return JumpKernel(other, density=lambda r, q: np.conj(self.density(r, q)),
                          support=self.support)


def jump_moments(kernel, m, q=0.0):
    """``int dr lambda(r | q) r^m``: exact sum for tables, adaptive quadrature otherwise."""
    if kernel.table is not None:
        total = sum(w * (k * kernel.spacing) ** m for k, w in kernel.weights(q).items())
        return total.real if kernel.channel in ("II", "mu") else total
    lim = kernel.support

    def part(f, a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                val, _ = quad(f, a, b, epsabs=1e-13, epsrel=1e-11, limit=200)
            except IntegrationWarning as exc:
                raise DomainError(f"moment integral of order {m} does not converge: {exc}")
        if not np.isfinite(val):
            raise DomainError(f"moment integral of order {m} diverges")
        return val

    re = lambda r: np.real(kernel.density(r, q)) * r ** m
    im = lambda r: np.imag(kernel.density(r, q)) * r ** m
    val = part(re, -lim, 0) + part(re, 0, lim)
    if kernel.channel in ("muI", "Imu"):
        val = val + 1j * (part(im, -lim, 0) + part(im, 0, lim))
    return val


@dataclass(eq=False)
class JumpMoments:
    """Moments ``m = 0, 1, 2`` per channel on the coordinate grid ``q``.

    ``II`` has shape ``(3, N)``; ``mu``, ``muI`` and ``Imu`` have shape
    ``(M, 3, N)`` with one row per basis operator.
    """

    q: np.ndarray
    II: np.ndarray
    mu: np.ndarray
    muI: np.ndarray
    Imu: np.ndarray = None

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        n = len(self.q)
        self.II = np.broadcast_to(np.asarray(self.II, dtype=float).reshape(3, -1), (3, n)).copy()
        self.mu = self._ops(self.mu, float)
        self.muI = self._ops(self.muI, complex)
        if self.Imu is None:
            self.Imu = np.conj(self.muI)
        else:
            self.Imu = self._ops(self.Imu, complex)
        if len(self.muI) and len(self.mu) != len(self.muI):
            raise ShapeError("mu and muI channels need the same number of operators")

    def _ops(self, arr, dtype):
        arr = np.asarray(arr, dtype=dtype)
        if arr.size == 0:
            return np.zeros((0, 3, len(self.q)), dtype=dtype)
        arr = arr.reshape(arr.shape[0], 3, -1)
        return np.broadcast_to(arr, (arr.shape[0], 3, len(self.q))).copy()

    @classmethod
    def from_kernels(cls, q, II=None, mu=(), muI=(), Imu=None):
        q = np.asarray(q, dtype=float)

        def table(kern, dtype):
            return np.array([[jump_moments(kern, m, qi) for qi in q] for m in range(3)], dtype=dtype)

        ii = table(II, float) if II is not None else np.zeros((3, len(q)))
        mus = [table(k, float) for k in mu]
        mui = [table(k, complex) for k in muI]
        imu = None if Imu is None else [table(k, complex) for k in Imu]
        return cls(q, ii, mus, mui, imu)

    @property
    def n_ops(self):
        return max(len(self.mu), len(self.muI))

    def hamiltonian(self, basis):
        """``H0(q) = (i/2) sum_mu (Lambda0^{mu I} V_mu - Lambda0^{I mu} V_mu^+)`` per site."""
        h = np.zeros((len(self.q), basis.d, basis.d), dtype=complex)
        for mu in range(len(self.muI)):
            v = basis.ops[mu]
            h += 0.5j * (self.muI[mu, 0][:, None, None] * v
                         - self.Imu[mu, 0][:, None, None] * dagger(v))
        return h


@dataclass(eq=False)
class DiffusiveSpec:
    flavor: str
    moments: JumpMoments
    basis: OperatorBasis
    hamiltonian: np.ndarray = None
    override: bool = False
    thresholds: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise ValueError(f"flavor must be one of {FLAVORS}, got {self.flavor!r}")


def _check_grid(moments, lattice):
    if len(moments.q) != lattice.size or not np.allclose(moments.q, lattice.coords):
        raise ShapeError("moments must be tabulated on the lattice coordinates")


def _transport(builder, a1, a2, superop, h, per_site=False):
    """Add ``-d/dq[a1 S] + 1/2 d^2/dq^2[a2 S]`` in conserving jump form."""
    a1 = np.asarray(a1)
    a2 = np.asarray(a2)
    s = superop if per_site else superop[None]
    for sign in (1, -1):
        w = sign * a1 / (2 * h) + a2 / (2 * h * h)
        if np.all(w == 0):
            continue
        gain = w[:, None, None] * s
        builder.add_jump(sign, gain, -gain)


def _lindblad_block(rates, basis):
    """``sum_mu rates_mu(q) L_{V_mu}`` per site."""
    n = rates.shape[1]
    dd = basis.d ** 2
    out = np.zeros((n, dd, dd), dtype=complex)
    for mu, v in enumerate(basis.ops[:len(rates)]):
        out += rates[mu][:, None, None] * dissipator(v)
    return out


def _hamiltonian(spec):
    if spec.hamiltonian is not None:
        h = np.asarray(spec.hamiltonian, dtype=complex)
        return np.broadcast_to(h, (len(spec.moments.q),) + h.shape[-2:])
    return spec.moments.hamiltonian(spec.basis)


def build_diffusive_generator(spec, lattice):
    """Lattice generator for one diffusive flavor (``case2`` .. ``case4``)."""
    if spec.flavor == "qfp":
        return build_qfp_generator(spec, lattice)
    mom, basis = spec.moments, spec.basis
    _check_grid(mom, lattice)
    h = lattice.r0
    dd = basis.d ** 2
    eye = np.eye(dd)
    builder = GeneratorBuilder(lattice, basis.d, f"diffusive:{spec.flavor}")
    if np.any(mom.II[0] <= 0) and not spec.override:
        raise PreconditionError(
            f"flavor {spec.flavor} needs the classical channel to dominate: "
            "Lambda_0^II must be positive on every site")
    report = check_validity(mom, spec.flavor, **spec.thresholds)
    if not report.ok and not spec.override:
        warnings.warn(f"validity conditions fail for flavor {spec.flavor}: "
                      f"{'; '.join(report.failures)}", RuntimeWarning, stacklevel=2)
    ii1, ii2 = mom.II[1], mom.II[2]
    _transport(builder, ii1, ii2, eye, h)
    if spec.flavor == "case2":
        return builder.build()
    builder.add_local(_lindblad_block(mom.mu[:, 0], basis))
    if spec.flavor in ("case2+3", "case4"):
        for mu, v in enumerate(basis.ops[:len(mom.mu)]):
            _transport(builder, mom.mu[mu, 1], mom.mu[mu, 2], sandwich(v, dagger(v)), h)
    if spec.flavor == "case4":
        ham = _hamiltonian(spec)
        builder.add_local(np.array([commutator(x) for x in ham]))
        for mu, v in enumerate(basis.ops[:len(mom.muI)]):
            _transport(builder, mom.muI[mu, 1], mom.muI[mu, 2], left(v), h)
            _transport(builder, mom.Imu[mu, 1], mom.Imu[mu, 2], right(dagger(v)), h)
    return builder.build()


def qfp_slack(moments):
    """Per-site ``Lambda_2^II - sum_mu |Lambda_1^{mu I}|^2 / Lambda_0^mu``."""
    quad_v = np.zeros(len(moments.q))
    for mu in range(len(moments.muI)):
        l0 = moments.mu[mu, 0]
        l1 = moments.muI[mu, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(l1 == 0, 0.0, np.abs(l1) ** 2 / l0)
        quad_v += term
    return moments.II[2] - quad_v


def build_qfp_generator(spec, lattice, cp_stencil=True, tol=1e-12):
    """Quantum Fokker-Planck generator: Lindblad block, classical drift-diffusion,
    ``H0(q)`` commutator and the single-derivative couplings.

    With ``cp_stencil`` the grid version is itself a completely positive jump
    process: each nearest-neighbour jump of weight ``a`` carrying the coupling
    ``c`` gets the minimal sandwich rate ``|c|^2 / a`` (Schur boundary), taken
    from the on-site Lindblad rate. The correction is ``O(h^2)``. Without it the
    plain central difference is used, which can make conditional states
    slightly negative near a sharp initial condition.
    """
    mom, basis = spec.moments, spec.basis
    _check_grid(mom, lattice)
    m = len(mom.muI)
    for mu in range(m):
        bad = (mom.mu[mu, 0] == 0) & (mom.muI[mu, 1] != 0)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            raise CPViolationError(f"Lambda_0 vanishes at q={mom.q[i]:.4g} with a nonzero coupling",
                                   site=float(mom.q[i]), slack=-np.inf)
    slack = qfp_slack(mom)
    scale = np.maximum(np.abs(mom.II[2]), 1.0)
    if np.any(slack < -tol * scale):
        i = int(np.argmin(slack / scale))
        raise CPViolationError(
            f"quadratic velocity inequality fails at q={mom.q[i]:.4g} (slack {slack[i]:.4g})",
            site=float(mom.q[i]), slack=float(slack[i]))

    h = lattice.r0
    n = lattice.size
    dd = basis.d ** 2
    eye = np.eye(dd)
    builder = GeneratorBuilder(lattice, basis.d, "qfp")
    lind = mom.mu[:, 0].copy()
    ham = _hamiltonian(spec)
    builder.add_local(np.array([commutator(x) for x in ham]))
    a_pm = {s: s * mom.II[1] / (2 * h) + mom.II[2] / (2 * h * h) for s in (1, -1)}
    for s in (1, -1):
        gain = a_pm[s][:, None, None] * eye
        builder.add_jump(s, gain, -gain)
    for mu, v in enumerate(basis.ops[:m]):
        for s in (1, -1):
            c = s * mom.muI[mu, 1] / (2 * h)
            cd = s * mom.Imu[mu, 1] / (2 * h)
            gain = c[:, None, None] * left(v) + cd[:, None, None] * right(dagger(v))
            builder.add_jump(s, gain, -gain)
    if cp_stencil and m:
        total_c = {s: sum(np.abs(mom.muI[mu, 1]) for mu in range(m)) / (2 * h) for s in (1, -1)}
        for mu, v in enumerate(basis.ops[:m]):
            cmu = np.abs(mom.muI[mu, 1]) / (2 * h)
            for s in (1, -1):
                with np.errstate(divide="ignore", invalid="ignore"):
                    g = np.where(cmu == 0, 0.0, cmu * total_c[s] / a_pm[s])
                lind[mu] -= g
                sw = g[:, None, None] * sandwich(v, dagger(v))
                loss = -0.5 * g[:, None, None] * (left(dagger(v) @ v) + right(dagger(v) @ v))
                builder.add_jump(s, sw, loss)
        if np.any(lind < -tol * np.maximum(mom.mu[:, 0], 1.0)):
            warnings.warn("grid too coarse for a completely positive stencil; "
                          "refine the lattice spacing", RuntimeWarning, stacklevel=2)
    builder.add_local(_lindblad_block(lind, basis))
    return builder.build()


def _table_kernel(kern, lattice):
    if kern.table is None:
        raise ShapeError("the exact generator needs tabulated kernels")
    if not np.isclose(kern.spacing, lattice.r0):
        raise ShapeError(f"kernel spacing {kern.spacing} differs from lattice spacing {lattice.r0}")
    reach = max(abs(int(k)) for k in kern.table) if kern.table else 0
    if reach >= lattice.size:
        raise BoundsError(f"kernel reaches {reach} sites, lattice has only {lattice.size}")
    sites = lattice.coords
    return {k: np.array([kern.weights(q)[k] for q in sites]) for k in kern.table}


def build_fourth_exact_generator(kernels, basis, lattice):
    """Exact convolution form of the coherent-superposition mechanism.

    ``kernels`` maps ``'II'`` to one kernel and ``'mu'``, ``'muI'`` (and
    optionally ``'Imu'``) to one kernel per basis operator. Zeroth moments
    count only jumps that land inside the window, matching the truncation
    used by every other generator.
    """
    n = lattice.size
    idx = np.arange(n)
    builder = GeneratorBuilder(lattice, basis.d, "fourth-exact")
    dd = basis.d ** 2
    eye = np.eye(dd)

    def inside(k):
        return ((idx + k >= 0) & (idx + k < n)).astype(float)

    def zeroth(table):
        return sum(w * inside(k) for k, w in table.items()) if table else np.zeros(n)

    ops = basis.ops
    mu_tabs = [_table_kernel(k, lattice) for k in kernels.get("mu", ())]
    mui_tabs = [_table_kernel(k, lattice) for k in kernels.get("muI", ())]
    imu_src = kernels.get("Imu") or [k.conjugate() for k in kernels.get("muI", ())]
    imu_tabs = [_table_kernel(k, lattice) for k in imu_src]
    ii_tab = _table_kernel(kernels["II"], lattice) if "II" in kernels else {}

    # Lindblad block with Lambda_0^mu(q)
    lam0 = np.array([zeroth(t).real for t in mu_tabs]) if mu_tabs else np.zeros((0, n))
    builder.add_local(_lindblad_block(lam0, basis) if len(lam0) else np.zeros((n, dd, dd)))
    # F_mu: V {sum lambda(r|q-r) rho(q-r) - Lambda_0 rho(q)} V^+
    for mu, tab in enumerate(mu_tabs):
        s = sandwich(ops[mu], dagger(ops[mu]))
        for k, w in tab.items():
            builder.add_jump(k, w[:, None, None] * s, 0)
        builder.add_local(-lam0[mu][:, None, None] * s)
    # F_I
    for k, w in ii_tab.items():
        builder.add_jump(k, w[:, None, None] * eye, 0)
    builder.add_local(-zeroth(ii_tab)[:, None, None] * eye)
    # H0(q)
    ham = np.zeros((n, basis.d, basis.d), dtype=complex)
    for mu in range(len(mui_tabs)):
        ham += 0.5j * (zeroth(mui_tabs[mu])[:, None, None] * ops[mu]
                       - zeroth(imu_tabs[mu])[:, None, None] * dagger(ops[mu]))
    builder.add_local(np.array([commutator(x) for x in ham]))
    # F_muI and F_Imu
    for mu in range(len(mui_tabs)):
        lv, rv = left(ops[mu]), right(dagger(ops[mu]))
        for k, w in mui_tabs[mu].items():
            builder.add_jump(k, w[:, None, None] * lv, 0)
        for k, w in imu_tabs[mu].items():
            builder.add_jump(k, w[:, None, None] * rv, 0)
        builder.add_local(-zeroth(mui_tabs[mu])[:, None, None] * lv
                          - zeroth(imu_tabs[mu])[:, None, None] * rv)
    return builder.build()


@dataclass
class ValidityReport:
    flavor: str
    coarse_time: np.ndarray
    coarse_length: np.ndarray
    gamma_ratios: np.ndarray
    ratio_threshold: float
    phi_dominates: bool
    d_phi_gt_d_gamma: bool
    small_quantum: bool
    qfp_slack: np.ndarray
    sigma0_min_sq: float
    t_min: float
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


def check_validity(moments, flavor, ratio=0.1, a=None, b=None, time_factor=10.0):
    """Report the scale and dominance conditions behind each diffusive flavor.

    ``a`` and ``b`` are the coherent-superposition coefficients, needed only
    for the small-quantum condition ``|b| << |a|``.
    """
    if flavor not in FLAVORS:
        raise ValueError(f"flavor must be one of {FLAVORS}, got {flavor!r}")
    phi0, phi1, phi2 = moments.II
    with np.errstate(divide="ignore", invalid="ignore"):
        dt_c = np.where(phi0 > 0, 1.0 / phi0, np.inf)
        dq_c = np.where(phi0 > 0, np.sqrt(np.abs(phi2) / (2 * phi0)), np.inf)
        ratios = np.zeros((len(moments.mu), 3))
        for mu in range(len(moments.mu)):
            for m in range(3):
                num = np.abs(moments.mu[mu, m])
                den = np.abs(moments.II[m])
                r = np.where(num == 0, 0.0, num / den)
                ratios[mu, m] = np.max(r)
    dominant = bool(np.all(ratios <= ratio))
    d_gamma = moments.mu[:, 2].sum(axis=0) if len(moments.mu) else np.zeros_like(phi2)
    phi_gt = bool(np.all(phi2 > d_gamma))
    small = True
    if a is not None and b is not None:
        small = bool(np.all(np.abs(np.atleast_1d(b)) <= ratio * np.abs(np.atleast_1d(a))))
    slack = qfp_slack(moments)
    sig = 0.0
    if len(moments.mu) and np.any(moments.mu[:, 0] > 0):
        g0 = moments.mu[:, 0].sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            sig = float(np.nanmax(np.where(g0 > 0, d_gamma / (2 * g0), 0.0)))
    failures = []
    if flavor == "case2+3" and not dominant:
        failures.append("operator moments are not small against the classical ones")
    if flavor in ("case2+3", "case2+3-limit", "case4") and not phi_gt:
        failures.append("D_phi > D_gamma fails: the coherence diverges")
    if flavor == "qfp":
        if not small:
            failures.append("|b| << |a| fails")
        if np.any(slack < -1e-12 * np.maximum(np.abs(phi2), 1.0)):
            failures.append("quadratic velocity inequality fails")
    return ValidityReport(
        flavor=flavor, coarse_time=dt_c, coarse_length=dq_c, gamma_ratios=ratios,
        ratio_threshold=ratio, phi_dominates=dominant, d_phi_gt_d_gamma=phi_gt,
        small_quantum=small, qfp_slack=slack, sigma0_min_sq=sig,
        t_min=float(time_factor * np.max(dt_c)), failures=failures)
