"""Fit driver, effective sample size and posterior summaries."""

from __future__ import annotations

import hashlib
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .distributions import rng_stream
from .errors import DomainError, InsufficientData, InsufficientDraws, TooFewDraws
from .formula import parse_formula, validate_against_table
from .ingest import DataTable, DesignMatrices, build_design, read_csv
from .links import probit_scale_exponent, update_latent
from .model import CarlassoOut, Hyperparams, PosteriorDraws, init_state
from .samplers import sweep

MIN_DRAWS = 10


def effective_sample_size(chain) -> float:
    """ESS by Geyer's initial positive sequence.

    Autocorrelations are summed in successive pairs until the first pair with
    a negative sum. A constant chain has ESS equal to its length.
    """
    x = np.asarray(chain, dtype=float).ravel()
    N = x.size
    if N < MIN_DRAWS:
        raise TooFewDraws(f"ESS needs at least {MIN_DRAWS} draws, got {N}")
    if np.all(x == x[0]):
        return float(N)
    x = x - x.mean()
    f = np.fft.rfft(x, 2 * N)
    acov = np.fft.irfft(f * np.conj(f), 2 * N)[:N] / N
    if not acov[0] > 0:
        return float(N)
    rho = acov / acov[0]
    m = N // 2
    pairs = rho[: 2 * m : 2] + rho[1 : 2 * m : 2]
    neg = np.flatnonzero(pairs < 0)
    stop = neg[0] if neg.size else m
    tau = 2.0 * pairs[:stop].sum() - 1.0
    if not tau > 0:
        return float(N)
    return float(min(N, N / tau))


def _ess_block(draws: np.ndarray, lengths: list[int]) -> np.ndarray:
    """ESS for every scalar in a (D, ...) block, summed over pooled chains."""
    D = draws.shape[0]
    flat = draws.reshape(D, -1)
    out = np.zeros(flat.shape[1])
    start = 0
    for L in lengths:
        part = flat[start : start + L]
        out += [effective_sample_size(part[:, i]) for i in range(part.shape[1])]
        start += L
    return out.reshape(draws.shape[1:])


def partial_correlations(Omega: np.ndarray) -> np.ndarray:
    """``-omega_ij / sqrt(omega_ii omega_jj)`` off the diagonal, 1 on it. Works on stacks."""
    d = np.sqrt(np.diagonal(Omega, axis1=-2, axis2=-1))
    pc = -Omega / (d[..., :, None] * d[..., None, :])
    k = Omega.shape[-1]
    pc[..., np.arange(k), np.arange(k)] = 1.0
    return pc


def credible_interval(draws: np.ndarray, level: float) -> tuple[np.ndarray, np.ndarray]:
    """Equal-tailed interval by linearly interpolated order statistics."""
    lo, hi = np.quantile(draws, [(1 - level) / 2, (1 + level) / 2], axis=0)
    return lo, hi


def summarize(draws: PosteriorDraws, level: float = 0.90, chain_lengths: list[int] | None = None,
              metadata: dict | None = None) -> CarlassoOut:
    if not 0 < level < 1:
        raise ValueError("CI level must lie in (0, 1)")
    D = draws.draw_count
    lengths = chain_lengths or [D]
    pcs = partial_correlations(draws.omegas)
    blocks = {
        "omega": draws.omegas,
        "b": draws.bs,
        "mu": draws.mus,
        "partial_correlation": pcs,
        "lambda_beta": draws.lambda_beta,
        "lambda_omega": draws.lambda_omega,
    }
    ci = {name: credible_interval(v, level) for name, v in blocks.items()}
    if min(lengths) >= MIN_DRAWS:
        ess = {name: _ess_block(v, lengths) for name, v in blocks.items() if name != "partial_correlation"}
    else:
        ess = {}
    return CarlassoOut(
        posterior_mean_Omega=draws.omegas.mean(axis=0),
        posterior_mean_B=draws.bs.mean(axis=0),
        posterior_mean_mu=draws.mus.mean(axis=0),
        posterior_mean_partial_correlation=pcs.mean(axis=0),
        ci_level=level,
        ci=ci,
        ess=ess,
        draws=draws,
        metadata=dict(metadata or {}),
    )


@dataclass
class FitRequest:
    formula: str
    data: object  # path or DataTable
    hyper: Hyperparams = field(default_factory=Hyperparams)
    ci_level: float = 0.90
    chains: int = 1

    def __post_init__(self):
        if not 0 < self.ci_level < 1:
            raise ValueError("ci_level must lie in (0, 1)")
        if self.chains < 1:
            raise ValueError("chains must be >= 1")


@dataclass
class ChainResult:
    draws: PosteriorDraws
    diagnostics: dict


def _digest(a) -> str | None:
    if a is None:
        return None
    return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()


def run_chain(design: DesignMatrices, hyper: Hyperparams, chain_id: int = 0,
              progress: Callable[[int], None] | None = None) -> ChainResult:
    """Burn-in, then ``n_iter`` sweeps keeping every ``thin_by``-th state."""
    rng = rng_stream(hyper.seed, chain_id)
    state = init_state(design, hyper)
    latent = design.link != "identity"
    n_draws = hyper.n_iter // hyper.thin_by
    draws = PosteriorDraws.allocate(
        n_draws, design.k_eff, design.p, hyper.adaptive, _state_labels(design), design.predictor_labels
    )
    done = 0
    for _ in range(hyper.n_burn_in):
        if latent:
            update_latent(state, design, rng, adapt=True, hyper=hyper)
        sweep(state, design, hyper, rng)
        done += 1
        if progress:
            progress(done)
    diag = {"mh_step_sha256_burn_in_end": _digest(state.mh_step)}
    if state.mh_accepts is not None:
        state.mh_accepts[:] = 0
        state.mh_count = 0
    stored = 0
    for t in range(hyper.n_iter):
        if latent:
            update_latent(state, design, rng, adapt=False, hyper=hyper)
        sweep(state, design, hyper, rng)
        if (t + 1) % hyper.thin_by == 0:
            draws.store(stored, state)
            stored += 1
        done += 1
        if progress:
            progress(done)
    diag["mh_step_sha256_end"] = _digest(state.mh_step)
    if state.mh_accepts is not None and state.mh_count:
        diag["mh_acceptance_rate"] = float(state.mh_accepts.sum() / (state.mh_count * state.mh_accepts.size))
    return ChainResult(draws, diag)


def _state_labels(design: DesignMatrices) -> list[str]:
    return list(design.response_labels[: design.k_eff])


def _chain_worker(args):
    design, hyper, chain_id = args
    return run_chain(design, hyper, chain_id)


def prepare_design(formula: str, data, link: str) -> tuple[DesignMatrices, object]:
    spec = parse_formula(formula)
    table = data if isinstance(data, DataTable) else read_csv(data)
    if table.n_rows < 2:
        raise InsufficientData(f"need at least 2 rows, got {table.n_rows}")
    binding = validate_against_table(spec, table)
    design = build_design(table, binding, link)
    return design, spec


def fit(request: FitRequest, progress: Callable[[int, int], None] | None = None) -> tuple[CarlassoOut, list[ChainResult]]:
    """Run the full pipeline and return the pooled summary plus per-chain results.

    ``progress(done, total)`` is called after every sweep of a sequential run.
    """
    hyper = request.hyper
    design, spec = prepare_design(request.formula, request.data, hyper.link)
    if design.n < 2:
        raise InsufficientData(f"need at least 2 rows, got {design.n}")
    if hyper.n_iter // hyper.thin_by < MIN_DRAWS:
        raise InsufficientDraws(
            f"floor(n_iter / thin_by) = {hyper.n_iter // hyper.thin_by} stored draws; need at least {MIN_DRAWS}"
        )
    check_probit_scale(hyper, design.k, design.p)
    t0 = time.perf_counter()
    per_chain = hyper.n_burn_in + hyper.n_iter
    total = per_chain * request.chains
    workers = _worker_count(request.chains)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_chain_worker, [(design, hyper, c) for c in range(request.chains)]))
        if progress:
            progress(total, total)
    else:
        results = []
        for c in range(request.chains):
            cb = None
            if progress:
                cb = lambda done, c=c: progress(c * per_chain + done, total)  # noqa: E731
            results.append(run_chain(design, hyper, c, cb))
    pooled = PosteriorDraws.concatenate([r.draws for r in results])
    meta = fit_metadata(spec, design, hyper, request)
    out = summarize(pooled, request.ci_level, [r.draws.draw_count for r in results], meta)
    out.metadata["runtime_seconds"] = time.perf_counter() - t0
    return out, results


def check_probit_scale(hyper: Hyperparams, k: int, p: int) -> None:
    """Reject probit settings whose posterior is improper along the latent scale.

    Binary data do not fix the scale of ``(Z, mu, B, Omega)``; only the rate
    hyperpriors and the intercept prior do (:func:`probit_scale_exponent`).
    """
    if hyper.link != "probit" or hyper.mu_prior_precision > 0:
        return
    A = probit_scale_exponent(hyper, k, p)
    if A <= 0:
        need = "r_beta + 2 * r_omega" if p else "2 * r_omega"
        raise DomainError(
            f"probit posterior is improper with a flat intercept prior: {need} = {A + k:g} must exceed "
            f"k = {k}; raise the Gamma shapes, set an intercept prior precision, or use the adaptive model"
        )


def _worker_count(chains: int) -> int:
    cap = os.environ.get("CARLASSO_THREADS")
    limit = int(cap) if cap and cap.isdigit() and int(cap) > 0 else (os.cpu_count() or 1)
    return max(1, min(chains, limit))


def fit_metadata(spec, design: DesignMatrices, hyper: Hyperparams, request: FitRequest) -> dict:
    return {
        "formula": spec.raw_text,
        "link": hyper.link,
        "adaptive": hyper.adaptive,
        "seed": hyper.seed,
        "chains": request.chains,
        "hyperparameters": hyper.to_dict(),
        "ci_level": request.ci_level,
        "n_rows": design.n,
        "response_labels": list(design.response_labels),
        "state_response_labels": _state_labels(design),
        "reference_response": design.response_labels[-1] if hyper.link == "logit" else None,
        "predictor_labels": list(design.predictor_labels),
        "predictor_sources": list(design.predictor_sources),
        "x_means": design.x_means.tolist(),
        "x_scales": design.x_scales.tolist(),
        "y_centering": design.y_centering.tolist(),
        "n_iter_semantics": "n_iter sweeps after n_burn_in; every thin_by-th state stored",
        "coefficient_scale": "per standard deviation of numeric predictors; per unit of centered dummies",
        "edge_selection": "equal-tailed credible interval excludes 0 (extension; only posterior means are classical output)",
    }
