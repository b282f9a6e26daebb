import math
import warnings

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad

from hybridqc.analytic import (CoherentDephasingWalk, DephasingWalk, DiffusionParams,
                               asym_rw_solution, continuum_determinant,
                               example1_discrete_solution, example2_discrete_solution,
                               example_continuum_solution, example_rate_kernel,
                               example_rate_moments, gaussian_propagator,
                               positivity_thresholds)
from hybridqc.errors import CPViolationError, DomainError


N = np.arange(-40, 41)


def L1(f):
    out = np.zeros_like(f)
    out[1:-1] = 0.5 * (f[2:] - f[:-2])
    return out


def L2(f):
    out = np.zeros_like(f)
    out[1:-1] = f[2:] + f[:-2] - 2 * f[1:-1]
    return out


def test_gaussian_propagator_values():
    assert gaussian_propagator(0.0, 0.0, 0.0, 1.0, 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi))
    ref = float(mpmath.exp(-1) / mpmath.sqrt(4 * mpmath.pi))
    assert gaussian_propagator(2.0, 1.0, 0.0, 0.0, 2.0).real == pytest.approx(ref, rel=1e-14)
    total = quad(lambda q: gaussian_propagator(q, 2.0, 0.5, 0.3, 1.5, 0.2).real, -60, 60)[0]
    assert total == pytest.approx(1.0, abs=1e-10)


def test_gaussian_propagator_complex_and_domain():
    re = quad(lambda q: gaussian_propagator(q, 1.0, 0.0, 1.0, 1 + 0.5j, 0.3j).real, -40, 40)[0]
    im = quad(lambda q: gaussian_propagator(q, 1.0, 0.0, 1.0, 1 + 0.5j, 0.3j).imag, -40, 40)[0]
    assert re == pytest.approx(1.0, abs=1e-10) and abs(im) < 1e-10
    with pytest.raises(DomainError):
        gaussian_propagator(0.0, 1.0, 0.0, 0.5, -1.0)


def test_example1_initial_and_normalization(example1):
    pp, pm, c = example1_discrete_solution(example1, N, 0.0)
    assert pp[40] == 0.5 and pm[40] == 0.5 and c[40] == 0.5
    assert pp.sum() == 0.5
    for t in (0.3, 1.0, 4.0):
        pp, pm, _ = example1_discrete_solution(example1, N, t)
        assert (pp + pm).sum() == pytest.approx(1.0, abs=1e-12)


def test_example1_sign_alternation():
    p = DephasingWalk(phi=1.0, gamma=2.0)
    _, _, c = example1_discrete_solution(p, np.arange(0, 6), 0.7)
    signs = np.sign(c.real)
    assert np.all(signs[1:] == -signs[:-1])


@pytest.mark.parametrize("walk", ["ex1", "ex2"])
def test_discrete_solutions_solve_their_odes(walk, example1, example2):
    dt = 1e-4
    t = 0.8
    if walk == "ex1":
        p = example1
        sol = example1_discrete_solution
        g, f = p.gamma, p.phi
        rhs_p = lambda x, s: (f + g) * L2(x)
        rhs_c = lambda x: (f - g) * L2(x) - 4 * g * x
    else:
        p = example2
        sol = example2_discrete_solution
        lam, dlam = p.lambda_up + p.lambda_dn, p.lambda_up - p.lambda_dn
        omega = (1j * (lam - np.conj(lam))).real
        rhs_p = lambda x, s: (-2 * s * dlam.real * L1(x)
                              + (p.gamma + p.phi + s * lam.real) * L2(x))
        rhs_c = lambda x: (-(1j * omega + 4 * p.gamma) * x - 1j * 2 * dlam.imag * L1(x)
                           + (p.phi - p.gamma + 1j * lam.imag) * L2(x))
    now = sol(p, N, t)
    fwd, bwd = sol(p, N, t + dt), sol(p, N, t - dt)
    deriv = [(a - b) / (2 * dt) for a, b in zip(fwd, bwd)]
    inner = slice(1, -1)
    for s, k in ((1, 0), (-1, 1)):
        assert np.max(np.abs(deriv[k] - rhs_p(now[k], s))[inner]) < 1e-6
    assert np.max(np.abs(deriv[2] - rhs_c(now[2]))[inner]) < 1e-6


def test_asym_rw_limits():
    k = np.arange(-30, 31)
    sym = asym_rw_solution(k, 1.3, 0.7, 0.7)
    ex1 = example1_discrete_solution(DephasingWalk(0.7, 0.0, rho0=np.diag([1.0, 0.0])), k, 1.3)[0]
    np.testing.assert_allclose(sym.real, ex1, atol=1e-15)
    np.testing.assert_array_equal(asym_rw_solution(k, 0.0, 1.0, 2.0), (k == 0))
    np.testing.assert_array_equal(asym_rw_solution(k, 2.0, 0.0, 0.0), (k == 0))
    right = asym_rw_solution(k, 1.0, 0.0, 1.5)
    assert right[k < 0].sum() == 0
    assert right.sum().real == pytest.approx(1.0, abs=1e-12)


def test_asym_rw_conserves_probability():
    k = np.arange(-80, 81)
    for a, b in ((0.3, 1.7), (2.0, 0.5), (1.0, 1.0)):
        assert asym_rw_solution(k, 3.0, a, b).sum().real == pytest.approx(1.0, abs=1e-10)


def test_example2_rate_bounds(example2):
    assert example2.ellipse_ratios == pytest.approx((1.0, 1.0), abs=1e-12)
    with pytest.raises(CPViolationError):
        CoherentDephasingWalk(1.0, 0.5, 1.0, 0.0)
    p = CoherentDephasingWalk(1.0, 0.5, 0.0, 0.0)
    for t in (0.4, 2.0):
        a = example2_discrete_solution(p, N, t)
        b = example1_discrete_solution(DephasingWalk(1.0, 0.5), N, t)
        for x, y in zip(a, b):
            np.testing.assert_allclose(x, y, atol=1e-14)


def test_continuum_example1(example1):
    diff = DiffusionParams.from_params(example1, r0=1.0)
    assert (diff.D_phi, diff.D_gamma) == (2.0, 1.0)
    pure = DephasingWalk(1.0, 0.0)
    q = np.linspace(-5, 5, 11)
    det = continuum_determinant(pure, DiffusionParams.from_params(pure), q, 0.7)
    assert np.max(np.abs(det)) < 1e-15
    assert continuum_determinant(example1, diff, 0.0, 0.1) < 0
    with pytest.raises(DomainError):
        bad = DephasingWalk(1.0, 2.0)
        example_continuum_solution(bad, DiffusionParams.from_params(bad), q, 1.0)


def test_continuum_example2_drift_and_width(example2):
    diff = DiffusionParams.from_params(example2, r0=1.0)
    q = np.linspace(-30, 30, 6001)
    pp, pm, _ = example_continuum_solution(example2, diff, q, 1.0)
    mean = [np.sum(q * p) / np.sum(p) for p in (pp, pm)]
    var = [np.sum((q - m) ** 2 * p) / np.sum(p) for p, m in zip((pp, pm), mean)]
    assert mean[0] == pytest.approx(diff.F.real, abs=1e-8)
    assert mean[1] == pytest.approx(-diff.F.real, abs=1e-8)
    assert var[0] == pytest.approx(diff.D_phi + diff.D_gamma + diff.D_lambda.real, rel=1e-8)
    assert var[1] == pytest.approx(diff.D_phi + diff.D_gamma - diff.D_lambda.real, rel=1e-8)


def _pde_residual(p, diff, h, t=1.2, dt=1e-4):
    q = np.arange(-15, 15 + h / 2, h)
    now = example_continuum_solution(p, diff, q, t)
    fwd = example_continuum_solution(p, diff, q, t + dt)
    bwd = example_continuum_solution(p, diff, q, t - dt)
    d1 = lambda f: L1(f) / h
    d2 = lambda f: L2(f) / h ** 2
    Dp, Dg = diff.D_phi, diff.D_gamma
    FR, FI = diff.F.real, diff.F.imag
    DR, DI = diff.D_lambda.real, diff.D_lambda.imag
    lam = getattr(p, "lambda_up", 0) + getattr(p, "lambda_dn", 0)
    omega = -2 * np.imag(lam)
    rhs = [-(s * FR) * d1(now[k]) + 0.5 * (Dp + Dg + s * DR) * d2(now[k])
           for s, k in ((1, 0), (-1, 1))]
    # coherence: -(i omega + 4 gamma) C - i F_I C' + (D_phi - D_gamma + i D_I)/2 C''
    rhs.append(-(1j * omega + 4 * p.gamma) * now[2] - 1j * FI * d1(now[2])
               + 0.5 * (Dp - Dg + 1j * DI) * d2(now[2]))
    return np.array([np.max(np.abs((fwd[k] - bwd[k]) / (2 * dt) - rhs[k])[1:-1])
                     for k in range(3)])


@pytest.mark.parametrize("which", ["ex1", "ex2"])
def test_continuum_solves_pde(which, example1, example2):
    p = example1 if which == "ex1" else example2
    diff = DiffusionParams.from_params(p, r0=1.0, sigma0=0.5)
    coarse, fine = _pde_residual(p, diff, 0.05), _pde_residual(p, diff, 0.025)
    assert np.all(fine < 2e-5)
    # the residual is pure stencil error, so it shrinks like h^2
    np.testing.assert_allclose(coarse / fine, 4.0, rtol=0.02)


def test_positivity_threshold_example1(example1):
    th = positivity_thresholds(example1)
    assert th.phi_t_star == pytest.approx(math.log(3) / 4, rel=1e-14)
    assert abs(th.phi_t_star - 0.274) < 1e-3
    assert th.sigma0_min_sq == pytest.approx(0.5)
    assert th.valid
    assert positivity_thresholds(example1, r0=2.0).sigma0_min_sq == pytest.approx(2.0)
    with pytest.raises(DomainError):
        positivity_thresholds(DephasingWalk(1.0, 2.0))


def test_positivity_threshold_matches_origin_crossing(example1, example2):
    for p in (example1, example2):
        th = positivity_thresholds(p)
        diff = DiffusionParams.from_params(p)
        assert continuum_determinant(p, diff, 0.0, th.t_star * 0.98) < 0
        assert continuum_determinant(p, diff, 0.0, th.t_star * 1.02) > 0


def test_positivity_threshold_example2_parts(example2):
    th = positivity_thresholds(example2)
    diff = DiffusionParams.from_params(example2)
    dsum, ddif = diff.D_phi + diff.D_gamma, diff.D_phi - diff.D_gamma
    A = ((diff.F.real ** 2 * dsum / (dsum ** 2 - diff.D_lambda.real ** 2)
          + diff.F.imag ** 2 * ddif / (ddif ** 2 + diff.D_lambda.imag ** 2)) / (8 * 0.5))
    assert th.A == pytest.approx(A, rel=1e-14)
    assert th.sigma0_min_sq == pytest.approx(0.5)


def test_rate_kernel_moments():
    tau0, dtau0, r0 = 2.0, 5.0, 0.7
    for m in (0, 1, 2):
        closed = example_rate_moments(tau0, dtau0, r0, m)
        assert example_rate_moments(tau0, dtau0, r0, m, "quad") == pytest.approx(closed, abs=1e-10)
    assert example_rate_moments(tau0, dtau0, r0, 0) == 1 / tau0
    assert example_rate_moments(tau0, np.inf, r0, 1) == 0
    assert example_rate_moments(tau0, dtau0, r0, 2) == pytest.approx(2 * r0 ** 2 / tau0)
    with pytest.raises(ValueError):
        example_rate_moments(tau0, dtau0, r0, 3)
    assert example_rate_moments(tau0, dtau0, r0, 3, "quad") == pytest.approx(6 * r0 ** 3 / dtau0)


def test_rate_kernel_negative_warning():
    with pytest.warns(RuntimeWarning):
        example_rate_kernel(2.0, 1.0, 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        k = example_rate_kernel(1.0, 2.0, 1.0)
    assert np.all(k(np.linspace(-5, 5, 21)) >= 0)
