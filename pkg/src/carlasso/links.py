"""Latent Gaussian augmentation for binary, count and compositional responses.

Given the parameters, rows of ``Z`` are independent and each coordinate's
full conditional is univariate normal::

    Z[i, j] | Z[i, -j] ~ N((E[i, j] - sum_{m != j} Omega[j, m] Z[i, m]) / Omega[j, j], 1 / Omega[j, j])

with ``E = mu + X B``. Columns are updated in turn, all rows at once.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .distributions import truncnorm_lower
from .model import ChainState

MH_TARGET = 0.44
MH_BATCH = 50
_POS_TINY = np.nextafter(0.0, 1.0)


class LinkCode(str, Enum):
    IDENTITY = "identity"
    PROBIT = "probit"
    LOG = "log"
    LOGIT = "logit"


def _natural(state: ChainState, design) -> np.ndarray:
    return state.mu[None, :] + design.X @ state.B


def _conditional_mean(state: ChainState, E: np.ndarray, j: int) -> np.ndarray:
    Z = state.Z
    w = state.Omega[:, j]
    return (E[:, j] - Z @ w + w[j] * Z[:, j]) / w[j]


def softmax_with_reference(Z: np.ndarray) -> np.ndarray:
    """Category probabilities for latent logits, last category fixed at logit 0."""
    ext = np.column_stack([Z, np.zeros(Z.shape[0])])
    ext = ext - ext.max(axis=1, keepdims=True)
    e = np.exp(ext)
    return e / e.sum(axis=1, keepdims=True)


def probit_scale_exponent(hyper, k: int, p: int) -> float:
    """Power ``A`` of ``c`` in the posterior density along the probit scale orbit.

    Binary data are unchanged by ``Z -> cZ, mu -> mu/c, B -> B/c,
    Omega -> Omega/c^2, lambda_beta -> c lambda_beta, lambda_Omega -> c^2
    lambda_Omega``. With the auxiliary variances integrated out the posterior
    along that orbit is, in ``u = log c``,
    ``A u - a e^u - b e^{2u} - m e^{-2u}`` (see :func:`rescale_probit`), so
    with a flat intercept prior (``m = 0``) it is proper only when ``A > 0``.
    """
    if hyper.adaptive:
        return (p * k * hyper.r_beta if p else 0.0) + k * (k + 1) * hyper.r_omega - k
    return (hyper.r_beta if p else 0.0) + 2.0 * hyper.r_omega - k


def rescale_probit(state: ChainState, hyper, rng, steps: int = 5) -> int:
    """Metropolis moves along the scale direction binary data cannot identify.

    The move acts on the marginal of everything but the auxiliary variances
    (they are redrawn before their next use in the sweep). Returns the number
    of accepted steps.
    """
    k, p = state.k, state.p
    A = probit_scale_exponent(hyper, k, p)
    iu = np.triu_indices(k)
    a = hyper.delta_beta * float(np.sum(state.lambda_beta)) if p else 0.0
    b = hyper.delta_omega * (float(np.sum(state.lambda_omega[iu])) if hyper.adaptive else state.lambda_omega)
    m = 0.5 * hyper.mu_prior_precision * float(state.mu @ state.mu)

    def log_target(u):
        return A * u - a * np.expm1(u) - b * np.expm1(2.0 * u) - m * np.expm1(-2.0 * u)

    sd = 2.4 / np.sqrt(2.0 * max(A, 1.0))
    u = 0.0
    lt = 0.0
    accepted = 0
    for _ in range(steps):
        prop = u + sd * rng.standard_normal()
        lp = log_target(prop)
        if np.log(rng.random()) < lp - lt:
            u, lt = prop, lp
            accepted += 1
    if u != 0.0:
        c = np.exp(u)
        state.Z *= c
        state.mu = state.mu / c
        state.Omega = state.Omega / (c * c)
        state.lambda_omega = state.lambda_omega * (c * c)
        if p:
            state.B = state.B / c
            state.lambda_beta = state.lambda_beta * c
    return accepted


def update_latent_probit(state: ChainState, design, rng, adapt: bool = False, hyper=None) -> ChainState:
    """Exact truncated-normal redraw of every latent coordinate.

    With ``hyper`` given, a scale move (:func:`rescale_probit`) follows.
    """
    E = _natural(state, design)
    Y = design.Y
    for j in range(state.k):
        m = _conditional_mean(state, E, j)
        sd = 1.0 / np.sqrt(state.Omega[j, j])
        pos = Y[:, j] > 0.5
        x = truncnorm_lower(np.where(pos, -m / sd, m / sd), rng)
        z = np.where(pos, m + sd * x, m - sd * x)
        # rounding at the boundary must not flip the sign
        state.Z[:, j] = np.where(pos, np.maximum(z, _POS_TINY), np.minimum(z, 0.0))
    if hyper is not None:
        rescale_probit(state, hyper, rng)
    return state


def _mh_column(state, j, m, log_lik, info, rng):
    w = state.Omega[j, j]
    z = state.Z[:, j]
    sd = state.mh_step[:, j] / np.sqrt(w + info)
    prop = z + sd * rng.standard_normal(z.shape[0])
    log_u = np.log(rng.random(z.shape[0]))
    with np.errstate(over="ignore", invalid="ignore"):
        delta = -0.5 * w * ((prop - m) ** 2 - (z - m) ** 2) + log_lik(prop) - log_lik(z)
    acc = log_u < delta
    state.Z[:, j] = np.where(acc, prop, z)
    state.mh_accepts[:, j] += acc
    return acc


def _finish_mh(state: ChainState, adapt: bool) -> None:
    state.mh_count += 1
    if adapt and state.mh_count >= MH_BATCH:
        state.mh_batch += 1
        rate = state.mh_accepts / state.mh_count
        # Robbins-Monro on the log scale, gain 1/sqrt(batch)
        state.mh_step = state.mh_step * np.exp((rate - MH_TARGET) / np.sqrt(state.mh_batch))
        state.mh_accepts[:] = 0
        state.mh_count = 0


def update_latent_log(state: ChainState, design, rng, adapt: bool = False, hyper=None) -> ChainState:
    """One random-walk MH step per coordinate, ``Y ~ Poisson(exp(Z))``.

    Proposal sd is ``mh_step / sqrt(Omega[j, j] + y)``; ``mh_step`` is tuned
    toward 0.44 acceptance in batches of 50 sweeps while ``adapt`` is true.
    """
    E = _natural(state, design)
    Y = design.Y
    for j in range(state.k):
        m = _conditional_mean(state, E, j)
        y = Y[:, j]
        _mh_column(state, j, m, lambda z: y * z - np.exp(z), y, rng)
    _finish_mh(state, adapt)
    return state


def _logsumexp_rows(A: np.ndarray) -> np.ndarray:
    mx = A.max(axis=1)
    return mx + np.log(np.exp(A - mx[:, None]).sum(axis=1))


def update_latent_logit(state: ChainState, design, rng, adapt: bool = False, hyper=None) -> ChainState:
    """One MH step per coordinate under the multinomial-logit row likelihood.

    The last response is the reference category with logit 0.
    """
    E = _natural(state, design)
    Y = design.Y
    N = design.row_totals
    k = state.k
    for j in range(k):
        m = _conditional_mean(state, E, j)
        others = np.column_stack([np.delete(state.Z, j, axis=1), np.zeros(state.Z.shape[0])])
        c = _logsumexp_rows(others)
        y = Y[:, j]

        def log_lik(z, y=y, c=c):
            return y * z - N * np.logaddexp(c, z)

        info = y * (N - y) / N
        _mh_column(state, j, m, log_lik, info, rng)
    _finish_mh(state, adapt)
    return state


_UPDATES = {
    "probit": update_latent_probit,
    "log": update_latent_log,
    "logit": update_latent_logit,
}


def update_latent(state: ChainState, design, rng, adapt: bool = False, hyper=None) -> ChainState:
    """Dispatch on ``design.link``; identity is a no-op.

    ``hyper`` enables moves that need the prior (the probit scale move).
    """
    if design.link == "identity":
        return state
    return _UPDATES[design.link](state, design, rng, adapt=adapt, hyper=hyper)
