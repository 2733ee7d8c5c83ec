"""One-sweep Gibbs kernels: CAR-LASSO, adaptive CAR-LASSO, Bayesian graphical lasso.

A sweep updates, in this order::

    tau2_B | B, lambda_beta            (inverse Gaussian on 1/tau2)
    B[:, l] | rest, for each column l  (Gaussian)
    mu | rest                          (Gaussian)
    tau2_Omega | Omega, lambda_omega   (inverse Gaussian on 1/tau2)
    Omega, column by column            (Gaussian off-diagonal, GIG Schur complement)
    lambda_beta | B, lambda_omega | Omega   (Gamma, auxiliary scales integrated out)

Each lambda is drawn with its auxiliary scales integrated out, and those
scales are redrawn from the new lambda before anything else reads them, so
the input ``tau2`` values never influence the output.

For column ``j`` of ``Omega`` write ``w`` for the off-diagonal vector,
``O`` for the remaining block and ``g = Omega[j, j] - w' O^{-1} w``. With
``S = Z'Z`` and ``E`` the natural-parameter rows ``mu + B' x_i``, the full
conditional is ``g**(n/2) exp(-(psi g + q(w)/g)/2)`` times a Gaussian in
``w``, where ``psi = S[j, j] + rate_jj`` and
``q(w) = sum_i (E[i, j] - E[i, -j] O^{-1} w)**2``. So ``w | g`` is Gaussian
and ``g | w`` is GIG(n/2 + 1, psi, q); both substeps keep Omega positive
definite because ``g > 0``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .distributions import sample_gig, sample_inverse_gaussian
from .errors import DimensionMismatch, NumericalBreakdown
from .model import ChainState, Hyperparams

JITTER_REL = 1e-10
JITTER_RETRIES = 3
_TINY = 1e-150


def robust_cholesky(M: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor, retrying with a small diagonal jitter.

    Adds ``1e-10 * trace(M) / dim`` up to three times, then raises
    NumericalBreakdown.
    """
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        pass
    d = M.shape[0]
    jitter = JITTER_REL * max(np.trace(M), 0.0) / max(d, 1)
    Mj = M.copy()
    for _ in range(JITTER_RETRIES):
        Mj[np.diag_indices(d)] += jitter
        try:
            return np.linalg.cholesky(Mj)
        except np.linalg.LinAlgError:
            continue
    raise NumericalBreakdown(f"Cholesky failed after {JITTER_RETRIES} jitter retries")


def gaussian_from_precision(P: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw from N(P^{-1} b, P^{-1})."""
    L = robust_cholesky(P)
    mean = cho_solve((L, True), b)
    return mean + solve_triangular(L.T, rng.standard_normal(b.shape[0]), lower=False)


def _covariance(Omega: np.ndarray) -> np.ndarray:
    L = robust_cholesky(Omega)
    return cho_solve((L, True), np.eye(Omega.shape[0]))


def update_tau2_B(state: ChainState, rng: np.random.Generator) -> None:
    if state.B.size == 0:
        return
    lam = np.broadcast_to(np.asarray(state.lambda_beta, dtype=float), state.B.shape)
    absb = np.maximum(np.abs(state.B), _TINY)
    state.tau2_B = 1.0 / sample_inverse_gaussian(lam / absb, lam * lam, rng, size=state.B.shape)


def update_B(state: ChainState, Yr, XtX, x_colsum, X, Sigma, rng) -> None:
    p, k = state.B.shape
    if p == 0:
        return
    B = state.B
    base = X.T @ Yr - np.outer(x_colsum, Sigma @ state.mu)
    for l in range(k):
        # sum over m != l of Sigma[l, m] XtX B[:, m]
        cross = XtX @ (B @ Sigma[:, l] - B[:, l] * Sigma[l, l])
        P = Sigma[l, l] * XtX
        P[np.diag_indices(p)] += 1.0 / state.tau2_B[:, l]
        B[:, l] = gaussian_from_precision(P, base[:, l] - cross, rng)


def update_mu(state: ChainState, Yr, x_colsum, Sigma, hyper: Hyperparams, rng) -> None:
    n = Yr.shape[0]
    k = state.k
    if n == 0 and hyper.mu_prior_precision == 0:
        raise DimensionMismatch("no rows and a flat intercept prior: intercept posterior is improper")
    P = n * Sigma
    P[np.diag_indices(k)] += hyper.mu_prior_precision
    b = Yr.sum(axis=0) - Sigma @ (state.B.T @ x_colsum)
    state.mu = gaussian_from_precision(P, b, rng)


def update_tau2_Omega(state: ChainState, rng) -> None:
    k = state.k
    if k < 2:
        return
    iu = np.triu_indices(k, 1)
    lam = np.broadcast_to(np.asarray(state.lambda_omega, dtype=float), (k, k))[iu]
    absw = np.maximum(np.abs(state.Omega[iu]), _TINY)
    state.tau2_Omega = 1.0 / sample_inverse_gaussian(lam / absw, lam * lam, rng, size=absw.shape)


def update_Omega(state: ChainState, Yr, eta, rng) -> None:
    """Column-partition block update of the precision matrix."""
    Om = state.Omega
    k = state.k
    n = Yr.shape[0]
    S = Yr.T @ Yr
    lam = np.broadcast_to(np.asarray(state.lambda_omega, dtype=float), (k, k))
    tau = np.ones((k, k))
    if k > 1:
        iu = np.triu_indices(k, 1)
        tau[iu] = state.tau2_Omega
        tau.T[iu] = state.tau2_Omega
    shape = n / 2.0 + 1.0
    for j in range(k):
        psi = S[j, j] + lam[j, j]
        if k == 1:
            chi = float(eta[:, 0] @ eta[:, 0])
            Om[0, 0] = sample_gig(shape, psi, chi, rng)
            continue
        o = np.r_[0:j, j + 1 : k]
        L11 = robust_cholesky(Om[np.ix_(o, o)])
        O11inv = cho_solve((L11, True), np.eye(k - 1))
        w = Om[o, j]
        gamma = Om[j, j] - w @ (O11inv @ w)
        if not gamma > 0:
            raise NumericalBreakdown(f"non-positive Schur complement in column {j}")
        E1 = eta[:, o] @ O11inv
        P = psi * O11inv + E1.T @ E1 / gamma
        P[np.diag_indices(k - 1)] += 1.0 / tau[o, j]
        b = -S[o, j] + E1.T @ eta[:, j] / gamma
        w = gaussian_from_precision(0.5 * (P + P.T), b, rng)
        u = O11inv @ w
        resid = eta[:, j] - eta[:, o] @ u
        chi = float(resid @ resid)
        gamma = sample_gig(shape, psi, chi, rng)
        Om[o, j] = w
        Om[j, o] = w
        Om[j, j] = gamma + w @ u


def update_lambdas(state: ChainState, hyper: Hyperparams, rng, with_B: bool = True) -> None:
    k = state.k
    iu = np.triu_indices(k, 1)
    if hyper.adaptive:
        if with_B and state.B.size:
            state.lambda_beta = rng.gamma(hyper.r_beta + 1.0, 1.0 / (hyper.delta_beta + np.abs(state.B)))
        rate = np.empty((k, k))
        rate[iu] = hyper.delta_omega + np.abs(state.Omega[iu])
        rate[np.diag_indices(k)] = hyper.delta_omega + 0.5 * np.diag(state.Omega)
        g = rng.gamma(hyper.r_omega + 1.0, 1.0 / rate[np.triu_indices(k)])
        lam = np.empty((k, k))
        lam[np.triu_indices(k)] = g
        lam.T[iu] = lam[iu]
        state.lambda_omega = lam
    else:
        if with_B:
            m = state.B.size
            state.lambda_beta = float(
                rng.gamma(hyper.r_beta + m, 1.0 / (hyper.delta_beta + np.abs(state.B).sum()))
            )
        l1 = np.abs(state.Omega[iu]).sum() + 0.5 * np.trace(state.Omega)
        state.lambda_omega = float(rng.gamma(hyper.r_omega + k * (k + 1) / 2.0, 1.0 / (hyper.delta_omega + l1)))


def _response(state: ChainState, design) -> np.ndarray:
    return design.Y if state.Z is None else state.Z


def _sweep(state: ChainState, design, hyper: Hyperparams, rng) -> ChainState:
    Yr = _response(state, design)
    if Yr.shape[1] != state.k:
        raise DimensionMismatch(f"response block has {Yr.shape[1]} columns, state has k={state.k}")
    if design.X.shape[1] != state.p:
        raise DimensionMismatch(f"design has {design.X.shape[1]} predictors, state has p={state.p}")
    Sigma = _covariance(state.Omega)
    update_tau2_B(state, rng)
    update_B(state, Yr, design.XtX, design.x_colsum, design.X, Sigma, rng)
    update_mu(state, Yr, design.x_colsum, Sigma, hyper, rng)
    update_tau2_Omega(state, rng)
    eta = state.mu[None, :] + design.X @ state.B
    update_Omega(state, Yr, eta, rng)
    update_lambdas(state, hyper, rng)
    return state


def sweep_carlasso(state: ChainState, design, hyper: Hyperparams, rng) -> ChainState:
    """One Gibbs sweep of the CAR-LASSO chain with shared shrinkage rates.

    Mutates and returns ``state``. The latent ``Z`` is read, never written.
    """
    if hyper.adaptive:
        raise ValueError("sweep_carlasso needs hyper.adaptive == False; use sweep_caralasso")
    return _sweep(state, design, hyper, rng)


def sweep_caralasso(state: ChainState, design, hyper: Hyperparams, rng) -> ChainState:
    """Adaptive variant: one Gamma-distributed rate per coefficient and per Omega entry."""
    if not hyper.adaptive:
        raise ValueError("sweep_caralasso needs hyper.adaptive == True")
    if np.ndim(state.lambda_omega) != 2:
        raise DimensionMismatch("adaptive sweep needs matrix-valued lambda fields")
    return _sweep(state, design, hyper, rng)


def sweep_bglasso(state: ChainState, Y: np.ndarray, hyper: Hyperparams, rng) -> ChainState:
    """Bayesian graphical lasso sweep: mu, then Omega and its rate(s).

    Shares the CAR mean form ``E[y] = Omega^{-1} mu``; any B in ``state`` is
    ignored and left untouched. ``hyper.adaptive`` selects per-entry rates.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.shape[1] != state.k:
        raise DimensionMismatch(f"Y has {Y.shape[1]} columns, state has k={state.k}")
    Sigma = _covariance(state.Omega)
    n = Y.shape[0]
    P = n * Sigma
    P[np.diag_indices(state.k)] += hyper.mu_prior_precision
    if n == 0 and hyper.mu_prior_precision == 0:
        raise DimensionMismatch("no rows and a flat intercept prior: intercept posterior is improper")
    state.mu = gaussian_from_precision(P, Y.sum(axis=0), rng)
    update_tau2_Omega(state, rng)
    eta = np.broadcast_to(state.mu, (n, state.k))
    update_Omega(state, Y, eta, rng)
    update_lambdas(state, hyper, rng, with_B=False)
    return state


def sweep(state: ChainState, design, hyper: Hyperparams, rng) -> ChainState:
    return sweep_caralasso(state, design, hyper, rng) if hyper.adaptive else sweep_carlasso(state, design, hyper, rng)
