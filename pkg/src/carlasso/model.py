"""Hyperparameters, chain state, stored draws and the joint prior.

Observation model for one row (``z`` is the response row, or its latent
Gaussian under a non-identity link)::

    z | x ~ N(Omega^{-1} (mu + B^T x), Omega^{-1})

so ``B`` holds response-predictor conditional effects and the off-diagonal
of ``Omega`` the response-response ones. Priors:

* ``B[j, l] ~ Laplace(lambda_beta)`` via ``N(0, tau2_B)``, ``tau2_B ~ Exp(lambda_beta**2 / 2)``
* ``Omega`` graphical lasso: ``Laplace(lambda_omega)`` off-diagonal,
  ``Exp(lambda_omega / 2)`` diagonal, restricted to positive definite
* ``lambda ~ Gamma(r, delta)`` (shape, rate), one per block or one per entry
  when adaptive
* ``mu`` flat, or ``N(0, 1 / mu_prior_precision)`` when that is positive
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .distributions import sample_inverse_gaussian
from .errors import DimensionMismatch, DomainError, NotSPD
from .ingest import DesignMatrices

LINKS = ("identity", "probit", "log", "logit")
PROBIT_INIT = 0.674
MH_INIT_STEP = 2.4


@dataclass
class Hyperparams:
    link: str = "identity"
    adaptive: bool = False
    r_beta: float = 1.0
    delta_beta: float = 0.01
    r_omega: float = 1.0
    delta_omega: float = 0.01
    n_iter: int = 5000
    n_burn_in: int = 1000
    thin_by: int = 10
    seed: int = 0
    mu_prior_precision: float = 0.0

    def __post_init__(self):
        if self.link not in LINKS:
            raise ValueError(f"link must be one of {LINKS}, got {self.link!r}")
        for name in ("r_beta", "delta_beta", "r_omega", "delta_omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.n_iter <= 0:
            raise ValueError("n_iter must be > 0")
        if self.thin_by < 1:
            raise ValueError("thin_by must be >= 1")
        if self.n_burn_in < 0:
            raise ValueError("n_burn_in must be >= 0")
        if self.mu_prior_precision < 0:
            raise ValueError("mu_prior_precision must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def k_eff(link: str, k: int) -> int:
    return k - 1 if link == "logit" else k


@dataclass
class ChainState:
    Omega: np.ndarray
    B: np.ndarray
    mu: np.ndarray
    tau2_B: np.ndarray
    tau2_Omega: np.ndarray  # upper-triangle order, length k(k-1)/2
    lambda_beta: float | np.ndarray
    lambda_omega: float | np.ndarray  # adaptive: symmetric k x k incl. diagonal rates
    Z: np.ndarray | None = None
    mh_step: np.ndarray | None = None
    mh_accepts: np.ndarray | None = None
    mh_batch: int = 0
    mh_count: int = 0

    @property
    def k(self) -> int:
        return self.Omega.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[0]

    def copy(self) -> "ChainState":
        return copy.deepcopy(self)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, np.ndarray):
                return {"shape": list(v.shape), "data": v.ravel().tolist()}
            return v

        return {name: enc(getattr(self, name)) for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d: dict) -> "ChainState":
        def dec(v):
            if isinstance(v, dict) and "shape" in v:
                return np.asarray(v["data"], dtype=float).reshape(v["shape"])
            return v

        kw = {name: dec(v) for name, v in d.items()}
        if kw.get("mh_accepts") is not None:
            kw["mh_accepts"] = kw["mh_accepts"].astype(np.int64)
        return cls(**kw)

    def check(self, tol: float = 1e-12) -> None:
        """Assert the state invariants (symmetry, SPD, positivity)."""
        if np.max(np.abs(self.Omega - self.Omega.T), initial=0.0) > tol:
            raise NotSPD("Omega is not symmetric")
        try:
            np.linalg.cholesky(self.Omega)
        except np.linalg.LinAlgError:
            raise NotSPD("Omega is not positive definite") from None
        for name in ("tau2_B", "tau2_Omega", "lambda_beta", "lambda_omega"):
            v = np.asarray(getattr(self, name))
            if not np.all(v > 0):
                raise ValueError(f"{name} has non-positive entries")


def init_latent(design: DesignMatrices) -> np.ndarray | None:
    Y = design.Y
    if design.link == "identity":
        return None
    if design.link == "probit":
        return np.where(Y > 0.5, PROBIT_INIT, -PROBIT_INIT)
    if design.link == "log":
        return np.log(Y + 0.5)
    # additive log-ratio against the last (reference) column
    return np.log(Y[:, :-1] + 0.5) - np.log(Y[:, -1:] + 0.5)


def init_state(design: DesignMatrices, hyper: Hyperparams) -> ChainState:
    """Deterministic starting point (no RNG use)."""
    if design.link != hyper.link:
        raise DimensionMismatch(f"design built for link {design.link!r}, hyperparameters say {hyper.link!r}")
    if hyper.link == "logit" and design.k < 2:
        raise DimensionMismatch("logit link needs at least two responses")
    k = design.k_eff
    p = design.p
    Z = init_latent(design)
    resp = design.Y if Z is None else Z
    mu = resp.mean(axis=0) if design.n else np.zeros(k)
    state = ChainState(
        Omega=np.eye(k),
        B=np.zeros((p, k)),
        mu=np.asarray(mu, dtype=float),
        tau2_B=np.ones((p, k)),
        tau2_Omega=np.ones(k * (k - 1) // 2),
        lambda_beta=np.ones((p, k)) if hyper.adaptive else 1.0,
        lambda_omega=np.ones((k, k)) if hyper.adaptive else 1.0,
        Z=Z,
    )
    if hyper.link in ("log", "logit"):
        state.mh_step = np.full((design.n, k), MH_INIT_STEP)
        state.mh_accepts = np.zeros((design.n, k), dtype=np.int64)
    return state


@dataclass
class PosteriorDraws:
    omegas: np.ndarray  # (D, k, k)
    bs: np.ndarray  # (D, p, k)
    mus: np.ndarray  # (D, k)
    lambda_beta: np.ndarray  # (D,) or (D, p, k)
    lambda_omega: np.ndarray  # (D,) or (D, k, k)
    response_labels: list = field(default_factory=list)
    predictor_labels: list = field(default_factory=list)

    @property
    def draw_count(self) -> int:
        return self.omegas.shape[0]

    @classmethod
    def allocate(cls, n_draws: int, k: int, p: int, adaptive: bool, response_labels, predictor_labels):
        return cls(
            omegas=np.empty((n_draws, k, k)),
            bs=np.empty((n_draws, p, k)),
            mus=np.empty((n_draws, k)),
            lambda_beta=np.empty((n_draws, p, k)) if adaptive else np.empty(n_draws),
            lambda_omega=np.empty((n_draws, k, k)) if adaptive else np.empty(n_draws),
            response_labels=list(response_labels),
            predictor_labels=list(predictor_labels),
        )

    def store(self, i: int, state: ChainState) -> None:
        self.omegas[i] = state.Omega
        self.bs[i] = state.B
        self.mus[i] = state.mu
        self.lambda_beta[i] = state.lambda_beta
        self.lambda_omega[i] = state.lambda_omega

    @property
    def adaptive(self) -> bool:
        return self.lambda_omega.ndim == 3

    @staticmethod
    def concatenate(parts: list["PosteriorDraws"]) -> "PosteriorDraws":
        first = parts[0]
        return PosteriorDraws(
            omegas=np.concatenate([d.omegas for d in parts]),
            bs=np.concatenate([d.bs for d in parts]),
            mus=np.concatenate([d.mus for d in parts]),
            lambda_beta=np.concatenate([d.lambda_beta for d in parts]),
            lambda_omega=np.concatenate([d.lambda_omega for d in parts]),
            response_labels=first.response_labels,
            predictor_labels=first.predictor_labels,
        )


@dataclass
class CarlassoOut:
    """Posterior summaries of one fit.

    ``ci`` maps block name (``omega``, ``b``, ``mu``, ``partial_correlation``)
    to ``(lower, upper)`` arrays at ``ci_level``; ``ess`` maps block name to an
    array of effective sample sizes with the block's shape.
    """

    posterior_mean_Omega: np.ndarray
    posterior_mean_B: np.ndarray
    posterior_mean_mu: np.ndarray
    posterior_mean_partial_correlation: np.ndarray
    ci_level: float
    ci: dict
    ess: dict
    draws: PosteriorDraws
    metadata: dict = field(default_factory=dict)

    @property
    def response_labels(self):
        return self.draws.response_labels

    @property
    def predictor_labels(self):
        return self.draws.predictor_labels


# ---------------------------------------------------------------------------
# joint prior


def sample_omega_prior(k: int, lam, rng: np.random.Generator, max_tries: int = 100000) -> np.ndarray:
    """Graphical-lasso prior draw by rejection from the unconstrained product.

    ``lam`` is a scalar or a symmetric k x k matrix of per-entry rates
    (diagonal entries are the rates of the diagonal exponential laws).
    """
    lam_m = np.broadcast_to(np.asarray(lam, dtype=float), (k, k))
    iu = np.triu_indices(k, 1)
    for _ in range(max_tries):
        Om = np.diag(rng.exponential(2.0 / np.diag(lam_m)))
        off = rng.laplace(0.0, 1.0 / lam_m[iu])
        Om[iu] = off
        Om.T[iu] = off
        try:
            np.linalg.cholesky(Om)
            return Om
        except np.linalg.LinAlgError:
            continue
    raise RuntimeError("prior rejection sampler for Omega did not accept")


def sample_prior(k: int, p: int, hyper: Hyperparams, rng: np.random.Generator) -> ChainState:
    """Independent draw of every parameter from the joint prior.

    Requires ``mu_prior_precision > 0`` (the flat intercept prior is improper).
    """
    if not hyper.mu_prior_precision > 0:
        raise ValueError("prior simulation needs a proper intercept prior (mu_prior_precision > 0)")
    iu = np.triu_indices(k, 1)
    if hyper.adaptive:
        lam_b = rng.gamma(hyper.r_beta, 1.0 / hyper.delta_beta, (p, k))
        # per-entry rates change the PD acceptance, so rates and Omega are
        # accepted or rejected together
        while True:
            lam_o = np.triu(rng.gamma(hyper.r_omega, 1.0 / hyper.delta_omega, (k, k)))
            lam_o.T[iu] = lam_o[iu]
            try:
                Om = sample_omega_prior(k, lam_o, rng, max_tries=1)
                break
            except RuntimeError:
                continue
    else:
        lam_b = float(rng.gamma(hyper.r_beta, 1.0 / hyper.delta_beta))
        lam_o = float(rng.gamma(hyper.r_omega, 1.0 / hyper.delta_omega))
        # PD acceptance is scale invariant: the shared rate keeps its Gamma law
        Om = sample_omega_prior(k, lam_o, rng)
    lam_b_arr = np.broadcast_to(lam_b, (p, k))
    tau2_B = rng.exponential(2.0 / lam_b_arr ** 2)
    B = rng.standard_normal((p, k)) * np.sqrt(tau2_B)
    lam_o_off = np.broadcast_to(np.asarray(lam_o), (k, k))[iu]
    absw = np.maximum(np.abs(Om[iu]), 1e-150)
    tau2_O = 1.0 / sample_inverse_gaussian(lam_o_off / absw, lam_o_off ** 2, rng, size=absw.shape) if absw.size else np.ones(0)
    mu = rng.standard_normal(k) / np.sqrt(hyper.mu_prior_precision)
    return ChainState(
        Omega=Om,
        B=B,
        mu=mu,
        tau2_B=tau2_B,
        tau2_Omega=np.atleast_1d(tau2_O),
        lambda_beta=lam_b,
        lambda_omega=lam_o,
    )


def sample_latent_given_params(state: ChainState, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Rows ``z_i ~ N(Omega^{-1}(mu + B^T x_i), Omega^{-1})``."""
    n = X.shape[0]
    L = np.linalg.cholesky(state.Omega)
    eta = state.mu[None, :] + X @ state.B
    mean = cho_solve((L, True), eta.T).T
    eps = rng.standard_normal((n, state.k))
    # L^{-T} eps has covariance Omega^{-1}
    return mean + solve_triangular(L.T, eps.T, lower=False).T


# numpy's Poisson sampler rejects rates beyond roughly 9e18
POISSON_MAX_LOG_RATE = 43.0


def sample_observations(Z: np.ndarray, link: str, rng: np.random.Generator, totals=None) -> np.ndarray:
    """Observed responses given latent Gaussians."""
    if link == "identity":
        return Z.copy()
    if link == "probit":
        return (Z > 0).astype(float)
    if link == "log":
        if np.max(Z, initial=-np.inf) > POISSON_MAX_LOG_RATE:
            raise DomainError(f"latent log-rate {np.max(Z):.4g} exceeds {POISSON_MAX_LOG_RATE}; Poisson draw overflows")
        return rng.poisson(np.exp(Z)).astype(float)
    if link == "logit":
        ext = np.column_stack([Z, np.zeros(Z.shape[0])])
        ext -= ext.max(axis=1, keepdims=True)
        prob = np.exp(ext)
        prob /= prob.sum(axis=1, keepdims=True)
        totals = np.asarray(totals, dtype=np.int64)
        return np.vstack([rng.multinomial(int(t), pr) for t, pr in zip(totals, prob)]).astype(float)
    raise ValueError(link)
