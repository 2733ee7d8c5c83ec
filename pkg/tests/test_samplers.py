import json
import time

import numpy as np
import pytest
from scipy import integrate

from carlasso.distributions import rng_stream
from carlasso.errors import DimensionMismatch, NumericalBreakdown
from carlasso.geweke import run_geweke
from carlasso.ingest import DesignMatrices
from carlasso.model import ChainState, Hyperparams, init_state
from carlasso.samplers import (
    gaussian_from_precision,
    robust_cholesky,
    sweep,
    sweep_bglasso,
    sweep_caralasso,
    sweep_carlasso,
)

from conftest import make_design, make_state, random_spd


def _run(design, adaptive, seed, sweeps=20, **kw):
    state, hyper = make_state(design, adaptive=adaptive, **kw)
    rng = rng_stream(seed)
    for _ in range(sweeps):
        sweep(state, design, hyper, rng)
    return state


@pytest.mark.parametrize("adaptive", [False, True])
def test_sweep_is_deterministic(adaptive):
    design = make_design(n=30, k=3, p=2)
    a = _run(design, adaptive, 11)
    b = _run(design, adaptive, 11)
    assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())
    c = _run(design, adaptive, 12)
    assert not np.array_equal(a.Omega, c.Omega)


@pytest.mark.parametrize("adaptive", [False, True])
def test_serialize_then_sweep_matches_in_memory(adaptive):
    design = make_design(n=25, k=3, p=2)
    state = _run(design, adaptive, 3, sweeps=5)
    hyper = Hyperparams(adaptive=adaptive)
    clone = ChainState.from_dict(json.loads(json.dumps(state.to_dict())))
    r1, r2 = rng_stream(9), rng_stream(9)
    sweep(state, design, hyper, r1)
    sweep(clone, design, hyper, r2)
    for name in ("Omega", "B", "mu", "tau2_B", "tau2_Omega", "lambda_beta", "lambda_omega"):
        assert np.array_equal(np.asarray(getattr(state, name)), np.asarray(getattr(clone, name)))


def test_kernel_flag_mismatch():
    design = make_design()
    state, hyper = make_state(design, adaptive=False)
    with pytest.raises(ValueError):
        sweep_caralasso(state, design, hyper, rng_stream(0))
    state, hyper = make_state(design, adaptive=True)
    with pytest.raises(ValueError):
        sweep_carlasso(state, design, hyper, rng_stream(0))


def test_dimension_mismatch():
    design = make_design(k=3, p=2)
    state, hyper = make_state(make_design(k=2, p=2))
    with pytest.raises(DimensionMismatch):
        sweep(state, design, hyper, rng_stream(0))


def test_sweep_leaves_latent_untouched():
    design = make_design(n=10, k=2, p=1, link="log")
    state, hyper = make_state(design)
    Z = state.Z.copy()
    sweep(state, design, hyper, rng_stream(1))
    assert np.array_equal(state.Z, Z)


def test_omega11_matches_quadrature():
    # k=1, p=0, flat mu: integrating mu and lambda out leaves
    # p(w | y) ~ w^((n+1)/2) exp(-w S / 2) (delta + w / 2)^-(r + 1), S = centred sum of squares
    y = rng_stream(21).normal(0.3, 1.2, size=20)
    design = DesignMatrices(Y=y[:, None], X=np.zeros((20, 0)), link="identity")
    hyper = Hyperparams()
    n, S = y.size, float(((y - y.mean()) ** 2).sum())

    def dens(w):
        return w ** ((n + 1) / 2) * np.exp(-w * S / 2) * (hyper.delta_omega + w / 2) ** -(hyper.r_omega + 1)

    Z0 = integrate.quad(dens, 0, 50, limit=200)[0]
    oracle = integrate.quad(lambda w: w * dens(w), 0, 50, limit=200)[0] / Z0

    state = init_state(design, hyper)
    rng = rng_stream(22)
    t0 = time.perf_counter()
    for _ in range(1000):
        sweep(state, design, hyper, rng)
    total, m = 0.0, 50_000
    for _ in range(m):
        sweep(state, design, hyper, rng)
        total += state.Omega[0, 0]
    elapsed = time.perf_counter() - t0
    assert abs(total / m - oracle) / oracle < 0.02
    assert elapsed < 60


@pytest.mark.parametrize("adaptive", [False, True])
def test_no_data_chain_recovers_prior(adaptive):
    fns = {
        "omega[1,2]": lambda s: s.Omega[0, 1],
        "b[1,1]": lambda s: s.B[0, 0],
    }
    if adaptive:
        fns["lambda_beta[1,1]"] = lambda s: s.lambda_beta[0, 0]
        fns["lambda_omega[1,2]"] = lambda s: s.lambda_omega[0, 1]
    else:
        fns["lambda_beta"] = lambda s: s.lambda_beta
    r = run_geweke("carlasso", "identity", adaptive, k=3, p=2, n=0, n_draws=4000, seed=5, test_functions=fns)
    assert r.max_abs_z() < 3, r.report()


@pytest.mark.parametrize("adaptive", [False, True])
def test_bglasso_no_data_recovers_prior(adaptive):
    r = run_geweke("bglasso", "identity", adaptive, k=3, n=0, n_draws=4000, seed=6)
    assert r.max_abs_z() < 3, r.report()


def test_bglasso_recovers_partial_correlation():
    Om = np.array([[1.0, -0.5], [-0.5, 1.0]])
    cov = np.linalg.inv(Om)
    hyper = Hyperparams()
    estimates = []
    for rep in range(20):
        rng = rng_stream(100 + rep)
        Y = rng.multivariate_normal(np.zeros(2), cov, size=500)
        state = ChainState(Omega=np.eye(2), B=np.zeros((0, 2)), mu=Y.mean(axis=0), tau2_B=np.ones((0, 2)),
                           tau2_Omega=np.ones(1), lambda_beta=1.0, lambda_omega=1.0)
        pcs = []
        for t in range(1000):
            sweep_bglasso(state, Y, hyper, rng)
            if t >= 300:
                pcs.append(-state.Omega[0, 1] / np.sqrt(state.Omega[0, 0] * state.Omega[1, 1]))
        estimates.append(np.mean(pcs))
    assert abs(np.median(estimates) - 0.5) <= 0.1


@pytest.mark.parametrize("adaptive", [False, True])
def test_bglasso_stays_spd(adaptive):
    rng = rng_stream(31)
    Y = rng.standard_normal((15, 4)) @ rng.standard_normal((4, 4))
    state = ChainState(Omega=np.eye(4), B=np.zeros((0, 4)), mu=np.zeros(4), tau2_B=np.ones((0, 4)),
                       tau2_Omega=np.ones(6), lambda_beta=1.0,
                       lambda_omega=np.ones((4, 4)) if adaptive else 1.0)
    hyper = Hyperparams(adaptive=adaptive)
    for _ in range(5000):
        sweep_bglasso(state, Y, hyper, rng)
        np.linalg.cholesky(state.Omega)
        assert np.max(np.abs(state.Omega - state.Omega.T)) <= 1e-12
    state.check()


def test_flat_intercept_without_rows_is_rejected():
    state = ChainState(Omega=np.eye(2), B=np.zeros((0, 2)), mu=np.zeros(2), tau2_B=np.ones((0, 2)),
                       tau2_Omega=np.ones(1), lambda_beta=1.0, lambda_omega=1.0)
    with pytest.raises(DimensionMismatch):
        sweep_bglasso(state, np.zeros((0, 2)), Hyperparams(), rng_stream(0))


def test_robust_cholesky_jitter_and_breakdown():
    M = np.array([[1.0, 1.0], [1.0, 1.0]])  # singular, rescued by jitter
    L = robust_cholesky(M)
    assert np.allclose(L @ L.T, M, atol=1e-8)
    with pytest.raises(NumericalBreakdown):
        robust_cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_gaussian_from_precision_moments():
    rng = rng_stream(41)
    P = random_spd(3, rng)
    b = np.array([1.0, -2.0, 0.5])
    x = np.array([gaussian_from_precision(P, b, rng) for _ in range(40_000)])
    assert np.allclose(x.mean(axis=0), np.linalg.solve(P, b), atol=0.05)
    assert np.allclose(np.cov(x.T), np.linalg.inv(P), atol=0.05)


@pytest.mark.parametrize("link", ["identity", "probit", "log", "logit"])
def test_parameters_stay_valid_under_every_link(link):
    from carlasso.links import update_latent

    design = make_design(n=15, k=3, p=2, link=link)
    state, hyper = make_state(design, adaptive=True, mu_prior_precision=0.1)
    rng = rng_stream(51)
    for _ in range(300):
        if link != "identity":
            update_latent(state, design, rng, adapt=True, hyper=hyper)
        sweep(state, design, hyper, rng)
        state.check()
        assert np.all(np.isfinite(state.B)) and np.all(np.isfinite(state.mu))
