"""Positivity-onset detection, discrete-versus-continuum comparison and figure scenarios."""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .analytic import (CoherentDephasingWalk, DephasingWalk, DiffusionParams,
                       example_continuum_solution, positivity_thresholds)
from .config import RunConfig, scenario_defaults, set_value, validate_config
from .diffusive import check_validity
from .errors import ConfigError, DomainError, ShapeError
from .evolution import IntegrationPlan, Trajectory, integrate
from .mechanisms import build_generator
from .models import example_mechanisms, example_moments
from .state import Lattice, make_localized_state

OBSERVABLES = ("p_plus", "p_minus", "re_c", "im_c", "det")


class ResolutionWarning(UserWarning):
    """Too few snapshots before a detected crossing for a reliable interpolation."""


@dataclass
class PositivityReport:
    t_star_numeric: float
    t_star_origin: float
    min_det_over_time: np.ndarray
    analytic_t_star: float = None
    relative_gap: float = None
    tolerance: float = 0.0

    @property
    def ever_negative(self):
        return bool(np.any(self.min_det_over_time[:, 1] < -self.tolerance))


def _crossing(times, values, eps):
    """Per column of ``values``: first time after which ``values >= -eps`` for good.

    The last negative snapshot and the next one are joined linearly. Returns
    the crossing times (``nan`` where the column never recovers) and the
    index of the first snapshot after the crossing.
    """
    values = np.asarray(values).reshape(len(times), -1)
    neg = values < -eps
    n_t = len(times)
    last = np.where(neg.any(axis=0), n_t - 1 - np.argmax(neg[::-1], axis=0), -1)
    out = np.full(values.shape[1], np.nan)
    out[last < 0] = times[0]
    ok = (last >= 0) & (last < n_t - 1)
    cols = np.flatnonzero(ok)
    k = last[cols]
    v0 = values[k, cols] + eps
    v1 = values[k + 1, cols] + eps
    frac = np.where(v0 != v1, v0 / (v0 - v1), 1.0)
    out[cols] = times[k] + frac * (times[k + 1] - times[k])
    return out, last + 1


def detect_positivity_time(traj, analytic_t_star=None, q_origin=0.0, rel_eps=1e-12):
    """Positivity onset over the whole lattice and, separately, at ``q_origin``.

    Every site gets its own interpolated crossing; the global onset is the
    latest of them, or ``None`` when some site is still negative at the final
    snapshot. The tolerance is ``rel_eps`` times the largest ``p+ p-`` seen.
    The relative gap compares the origin crossing with ``analytic_t_star``.
    """
    if traj.d != 2:
        raise ShapeError("positivity detection needs two-level conditional states")
    det = traj.determinants
    pops = traj.populations
    scale = float(np.max(pops[..., 0] * pops[..., 1]))
    eps = rel_eps * max(scale, np.finfo(float).tiny)
    k_min = np.argmin(det, axis=1)
    series = np.column_stack([traj.times, det[np.arange(len(det)), k_min],
                              traj.lattice.coords[k_min]])
    site_t, after = _crossing(traj.times, det, eps)
    t_glob = None if np.isnan(site_t).any() else float(site_t.max())
    i0 = traj.lattice.index(traj.lattice.nearest_site(q_origin))
    t_orig = None if np.isnan(site_t[i0]) else float(site_t[i0])
    if t_glob is not None:
        before = int(after.max())
        if 0 < before < 3:
            warnings.warn(f"only {before} snapshots before the positivity crossing; "
                          "refine the snapshot spacing", ResolutionWarning, stacklevel=2)
    gap = None
    if analytic_t_star and t_orig is not None:
        gap = abs(t_orig - analytic_t_star) / abs(analytic_t_star)
    return PositivityReport(t_glob, t_orig, series, analytic_t_star, gap, eps)


def _observables(traj):
    pops = traj.populations
    c = traj.coherences
    return {"p_plus": pops[..., 0], "p_minus": pops[..., 1], "re_c": c.real,
            "im_c": c.imag, "det": traj.determinants}


@dataclass
class ComparisonReport:
    times: np.ndarray
    sup: dict
    l1: dict
    peak: dict

    @property
    def relative(self):
        """Sup error over the peak of the discrete observable, per time."""
        out = {}
        for k in self.sup:
            with np.errstate(divide="ignore", invalid="ignore"):
                out[k] = np.where(self.peak[k] > 0, self.sup[k] / self.peak[k],
                                  np.where(self.sup[k] > 0, np.inf, 0.0))
        return out

    def at(self, t):
        k = int(np.argmin(np.abs(self.times - t)))
        rel = self.relative
        return {name: {"sup": float(self.sup[name][k]), "l1": float(self.l1[name][k]),
                       "relative": float(rel[name][k])} for name in self.sup}


def compare_discrete_continuum(discrete, continuum):
    """Element-wise errors between ``rho_n`` and the stored ``r0 * varrho(n r0)``."""
    if discrete.lattice != continuum.lattice:
        raise ShapeError("trajectories live on different lattices")
    if discrete.times.shape != continuum.times.shape or \
            not np.allclose(discrete.times, continuum.times, rtol=1e-12, atol=1e-12):
        raise ShapeError("trajectories have different snapshot times")
    a, b = _observables(discrete), _observables(continuum)
    sup, l1, peak = {}, {}, {}
    for k in OBSERVABLES:
        err = np.abs(a[k] - b[k])
        sup[k] = err.max(axis=1)
        l1[k] = err.sum(axis=1)
        peak[k] = np.abs(a[k]).max(axis=1)
    return ComparisonReport(discrete.times.copy(), sup, l1, peak)


def symmetry_defect(traj, n_center=0, rate=0j):
    """Largest ``|Re C(-q) - Re C(q)|`` and ``|Im C(-q) + Im C(q)|`` about ``n_center``.

    ``C`` is taken in the interaction picture ``exp(rate * t) * c``; pass
    ``rate = i omega + 4 gamma`` to strip the uniform rotation and decay.
    """
    lat = traj.lattice
    i0 = lat.index(n_center)
    k = min(i0, lat.size - 1 - i0)
    c = traj.coherences * np.exp(rate * traj.times)[:, None]
    right = c[:, i0:i0 + k + 1]
    left = c[:, i0 - k:i0 + 1][:, ::-1]
    return float(max(np.abs(right.real - left.real).max(), np.abs(right.imag + left.imag).max()))


def model_params(cfg):
    """Example parameters of a config; coherent couplings select example 2."""
    r, i = cfg.rates, cfg.initial
    rho0 = i.rho0_matrix
    if r.coherent:
        return CoherentDephasingWalk(r.phi, r.gamma, r.lambda_up, r.lambda_dn, i.n0, rho0)
    return DephasingWalk(r.phi, r.gamma, i.n0, rho0)


def continuum_trajectory(params, lattice, times, sigma0=0.0, flavor="diffusive", r0=None,
                         label=None):
    """Closed-form continuum solution sampled as ``rho_n = r0 * varrho(n r0)``.

    With ``sigma0 = 0`` the snapshot at ``t = 0`` is the localized initial state.
    """
    r0 = lattice.r0 if r0 is None else r0
    diff = DiffusionParams.from_params(params, r0, sigma0)
    q = lattice.coords
    rho = np.zeros((len(times), lattice.size, 2, 2), dtype=complex)
    for k, t in enumerate(times):
        if t == 0 and sigma0 == 0:
            rho[k, lattice.index(params.n0)] = params.rho0
            continue
        pp, pm, c = example_continuum_solution(params, diff, q, t, flavor)
        rho[k, :, 0, 0] = pp * r0
        rho[k, :, 1, 1] = pm * r0
        rho[k, :, 0, 1] = c * r0
        rho[k, :, 1, 0] = np.conj(c) * r0
    return Trajectory(lattice, times, rho, label or flavor)


def discrete_trajectory(params, lattice, plan):
    specs, basis = example_mechanisms(params)
    gen = build_generator(specs, basis, lattice)
    state0 = make_localized_state(params.rho0, params.n0, lattice)
    traj = integrate(gen, state0, plan)
    traj.label = "discrete"
    return traj


@dataclass
class ScenarioResult:
    config: RunConfig
    params: object
    lattice: Lattice
    trajectories: dict
    positivity: dict
    comparison: dict
    threshold: object
    threshold_error: str
    cp: dict
    validity: object
    symmetry: dict
    panel_times: list = field(default_factory=list)


def _cp_report(params):
    if isinstance(params, CoherentDephasingWalk):
        up, dn = params.ellipse_ratios
        return {"ellipse_ratio_up": up, "ellipse_ratio_dn": dn, "ok": True}
    return {"ellipse_ratio_up": None, "ellipse_ratio_dn": None, "ok": True}


def resolve_config(name_or_config, overrides=()):
    if isinstance(name_or_config, RunConfig):
        cfg = name_or_config
    else:
        cfg = scenario_defaults(name_or_config)
    for item in overrides:
        key, eq, value = item.partition("=")
        if not eq:
            raise ConfigError(f"override {item!r} is not key=value")
        cfg = set_value(cfg, key, value)
    return validate_config(cfg)


def run_scenario(name_or_config, overrides=()):
    """Discrete model, diffusive limit and (for example 2) the QFP limit of one figure.

    ``overrides`` are ``key=value`` strings in the config grammar.
    """
    cfg = resolve_config(name_or_config, overrides)
    params = model_params(cfg)
    g = cfg.grid
    lattice = Lattice.symmetric(g.n_half_width, g.r0)
    plan = IntegrationPlan(cfg.dt, cfg.t_end, g.snapshot_stride)
    discrete = discrete_trajectory(params, lattice, plan)
    times = discrete.times
    trajs = {"discrete": discrete,
             "diffusive": continuum_trajectory(params, lattice, times, cfg.sigma0, "diffusive")}
    if isinstance(params, CoherentDephasingWalk):
        trajs["qfp"] = continuum_trajectory(params, lattice, times, cfg.sigma0, "qfp")
    threshold, threshold_error = None, None
    try:
        threshold = positivity_thresholds(params, g.r0)
    except DomainError as exc:
        threshold_error = str(exc)
    t_star = threshold.t_star if threshold else None
    positivity = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ResolutionWarning)
        for key, traj in trajs.items():
            positivity[key] = detect_positivity_time(
                traj, t_star if key == "diffusive" else None, params.n0 * g.r0)
    comparison = {k: compare_discrete_continuum(discrete, trajs[k])
                  for k in trajs if k != "discrete"}
    validity = check_validity(example_moments(params, lattice.coords, g.r0),
                              "case4" if isinstance(params, CoherentDephasingWalk) else "case2+3")
    symmetry = {}
    if isinstance(params, CoherentDephasingWalk):
        rate = 1j * params.omega + 4 * params.gamma
        symmetry = {k: symmetry_defect(trajs[k], params.n0, rate) for k in ("qfp", "diffusive")}
    panel = [float(times[np.argmin(np.abs(times - t / cfg.rates.phi))]) for t in g.panel_times
             if t <= g.t_end_phi_units]
    return ScenarioResult(cfg, params, lattice, trajs, positivity, comparison, threshold,
                          threshold_error, _cp_report(params), validity, symmetry, panel)
