"""Synthetic data with a known chain graph, for recovery benchmarks.

The true precision is the AR(1)-style band matrix (unit diagonal, 0.4 on the
first off-diagonals); a chosen fraction of B entries is set to +1 or -1.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distributions import rng_stream
from .errors import DomainError
from .model import LINKS
from .samplers import robust_cholesky

AR1_OFFDIAG = 0.4
LOG_BASELINE = np.log(20.0)


@dataclass
class SimulatedData:
    Y: np.ndarray
    X: np.ndarray
    Omega: np.ndarray
    B: np.ndarray
    mu: np.ndarray
    link: str
    seed: int
    response_names: list
    predictor_names: list

    @property
    def formula(self) -> str:
        return " + ".join(self.response_names) + " ~ " + " + ".join(self.predictor_names)

    def truth_dict(self) -> dict:
        return {
            "link": self.link,
            "seed": self.seed,
            "k": len(self.response_names),
            "p": len(self.predictor_names),
            "n": int(self.Y.shape[0]),
            "formula": self.formula,
            "response_names": self.response_names,
            "predictor_names": self.predictor_names,
            "latent_response_names": self.response_names[: self.Omega.shape[0]],
            "Omega": self.Omega.tolist(),
            "B": self.B.tolist(),
            "mu": self.mu.tolist(),
        }


def ar1_precision(k: int, offdiag: float = AR1_OFFDIAG) -> np.ndarray:
    return np.eye(k) + offdiag * (np.eye(k, k=1) + np.eye(k, k=-1))


def sparse_signed_B(p: int, k: int, frac: float, rng: np.random.Generator) -> np.ndarray:
    """``round(frac * p * k)`` entries at random positions, each +1 or -1."""
    B = np.zeros((p, k))
    m = int(round(frac * p * k))
    if m:
        idx = rng.choice(p * k, size=m, replace=False)
        B.flat[idx] = rng.choice([-1.0, 1.0], size=m)
    return B


def simulate(k: int, p: int, n: int, link: str = "identity", seed: int = 0, frac_nonzero: float = 0.3,
             row_total: int = 1000) -> SimulatedData:
    """Draw ``n`` rows from the CAR model with known parameters.

    ``k`` counts observed responses; under the logit link the latent dimension
    is ``k - 1`` with the last response as reference category.
    """
    if link not in LINKS:
        raise DomainError(f"link must be one of {LINKS}, got {link!r}")
    if k < 1 or p < 0 or n < 1:
        raise DomainError(f"need k >= 1, p >= 0, n >= 1 (got k={k}, p={p}, n={n})")
    if link == "logit" and k < 2:
        raise DomainError("the logit link needs at least 2 responses")
    if not 0 <= frac_nonzero <= 1:
        raise DomainError("frac_nonzero must lie in [0, 1]")
    if row_total < 1:
        raise DomainError("row_total must be positive")
    rng = rng_stream(seed, 0)
    kk = k - 1 if link == "logit" else k
    Omega = ar1_precision(kk)
    B = sparse_signed_B(p, kk, frac_nonzero, rng)
    # mu chosen so that the marginal latent mean is 0 (log(20) for counts)
    mu = Omega @ np.full(kk, LOG_BASELINE) if link == "log" else np.zeros(kk)
    X = rng.standard_normal((n, p))
    L = robust_cholesky(Omega)
    eta = mu[None, :] + X @ B
    mean = np.linalg.solve(Omega, eta.T).T
    # L^{-T} e has covariance Omega^{-1}
    noise = np.linalg.solve(L.T, rng.standard_normal((kk, n))).T
    Z = mean + noise
    if link == "identity":
        Y = Z
    elif link == "probit":
        Y = (Z > 0).astype(float)
    elif link == "log":
        Y = rng.poisson(np.exp(Z)).astype(float)
    else:
        ext = np.column_stack([Z, np.zeros(n)])
        prob = np.exp(ext - ext.max(axis=1, keepdims=True))
        prob /= prob.sum(axis=1, keepdims=True)
        Y = np.vstack([rng.multinomial(row_total, pr) for pr in prob]).astype(float)
    return SimulatedData(
        Y=Y, X=X, Omega=Omega, B=B, mu=mu, link=link, seed=seed,
        response_names=[f"y{j + 1}" for j in range(k)],
        predictor_names=[f"x{r + 1}" for r in range(p)],
    )


def _cell(v: float, integral: bool) -> str:
    return str(int(v)) if integral else repr(float(v))


def write_simulation(sim: SimulatedData, data_path, truth_path) -> None:
    integral = sim.link != "identity"
    with open(data_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(sim.response_names + sim.predictor_names)
        for y, x in zip(sim.Y, sim.X):
            w.writerow([_cell(v, integral) for v in y] + [repr(float(v)) for v in x])
    Path(truth_path).write_text(json.dumps(sim.truth_dict(), indent=2) + "\n", encoding="utf-8")
