"""Fit directories: per-chain parameter CSVs, JSON sidecars and the summary.

Layout written by :func:`write_fit`::

    out/
      summary.json          pooled posterior summary (deterministic given seed)
      timing.json           wall-clock runtime (kept out of summary.json)
      chain_1/
        omega.csv  b.csv  mu.csv  lambda.csv
        meta.json

CSV columns carry 1-based labels such as ``omega[1,2]`` or ``b[3,1]``; rows
are stored draws. Floats use the shortest round-trip representation.
"""

from __future__ import annotations

import csv
import json
import math
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .errors import FitDirectoryError
from .inference import ChainResult, summarize
from .model import CarlassoOut, PosteriorDraws

SUMMARY = "summary.json"


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_csv(path: Path, header: list[str], rows: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _read_csv(path: Path, expected: list[str]) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise FitDirectoryError(f"cannot read chain file {path}: {e}", location=str(path)) from e
    if not rows or rows[0] != expected:
        raise FitDirectoryError(f"chain file {path} has an unexpected header", location=str(path))
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as e:
        raise FitDirectoryError(f"chain file {path} holds a non-numeric value: {e}", location=str(path)) from e
    if any(len(r) != len(expected) for r in rows[1:]) or (data.size and not np.all(np.isfinite(data))):
        raise FitDirectoryError(f"chain file {path} is malformed", location=str(path))
    return data.reshape(len(rows) - 1, len(expected))


def omega_labels(k: int) -> list[tuple[str, int, int]]:
    return [(f"omega[{i + 1},{j + 1}]", i, j) for i in range(k) for j in range(i, k)]


def matrix_labels(prefix: str, rows: int, cols: int) -> list[str]:
    return [f"{prefix}[{r + 1},{c + 1}]" for r in range(rows) for c in range(cols)]


def write_chain(directory: Path, draws: PosteriorDraws, meta: dict) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    D, k = draws.mus.shape
    p = draws.bs.shape[1]
    ol = omega_labels(k)
    iu = (np.array([i for _, i, _ in ol], dtype=int), np.array([j for _, _, j in ol], dtype=int))
    _write_csv(directory / "omega.csv", [lab for lab, _, _ in ol], draws.omegas[:, iu[0], iu[1]])
    _write_csv(directory / "b.csv", matrix_labels("b", p, k), draws.bs.reshape(D, -1))
    _write_csv(directory / "mu.csv", [f"mu[{j + 1}]" for j in range(k)], draws.mus)
    if draws.adaptive:
        lb = matrix_labels("lambda_beta", p, k)
        lo = [lab.replace("omega", "lambda_omega") for lab, _, _ in ol]
        cols = np.hstack([draws.lambda_beta.reshape(D, -1), draws.lambda_omega[:, iu[0], iu[1]]])
    else:
        lb, lo = ["lambda_beta"], ["lambda_omega"]
        cols = np.column_stack([draws.lambda_beta, draws.lambda_omega])
    _write_csv(directory / "lambda.csv", lb + lo, cols)
    with open(directory / "meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_chain(directory: Path) -> tuple[PosteriorDraws, dict]:
    try:
        with open(directory / "meta.json", encoding="utf-8") as fh:
            meta = json.load(fh)
    except (OSError, ValueError) as e:
        raise FitDirectoryError(f"cannot read {directory / 'meta.json'}: {e}", location=str(directory)) from e
    try:
        k, p, adaptive = int(meta["k"]), int(meta["p"]), bool(meta["adaptive"])
    except (KeyError, TypeError, ValueError) as e:
        raise FitDirectoryError(f"{directory / 'meta.json'} lacks k, p or adaptive", location=str(directory)) from e
    ol = omega_labels(k)
    om_flat = _read_csv(directory / "omega.csv", [lab for lab, _, _ in ol])
    D = om_flat.shape[0]
    omegas = np.empty((D, k, k))
    for c, (_, i, j) in enumerate(ol):
        omegas[:, i, j] = om_flat[:, c]
        omegas[:, j, i] = om_flat[:, c]
    def read_block(name: str, labels: list[str]) -> np.ndarray:
        arr = _read_csv(directory / name, labels)
        if arr.shape[0] != D:
            raise FitDirectoryError(f"{directory / name} has {arr.shape[0]} draws, omega.csv has {D}",
                                    location=str(directory / name))
        return arr

    bs = read_block("b.csv", matrix_labels("b", p, k)).reshape(D, p, k)
    mus = read_block("mu.csv", [f"mu[{j + 1}]" for j in range(k)])
    if adaptive:
        lb = matrix_labels("lambda_beta", p, k)
        lo = [lab.replace("omega", "lambda_omega") for lab, _, _ in ol]
        lam = read_block("lambda.csv", lb + lo)
        lambda_beta = lam[:, : len(lb)].reshape(D, p, k)
        lambda_omega = np.empty((D, k, k))
        for c, (_, i, j) in enumerate(ol):
            lambda_omega[:, i, j] = lam[:, len(lb) + c]
            lambda_omega[:, j, i] = lam[:, len(lb) + c]
    else:
        lam = read_block("lambda.csv", ["lambda_beta", "lambda_omega"])
        lambda_beta, lambda_omega = lam[:, 0], lam[:, 1]
    draws = PosteriorDraws(omegas, bs, mus, lambda_beta, lambda_omega,
                           meta.get("response_labels", []), meta.get("predictor_labels", []))
    return draws, meta


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if not math.isfinite(x):
            return None
        return x
    if isinstance(x, np.integer):
        return int(x)
    return x


def summary_dict(out: CarlassoOut) -> dict:
    meta = {k: v for k, v in out.metadata.items() if k != "runtime_seconds"}
    meta["draw_count"] = out.draws.draw_count
    d = {
        "metadata": meta,
        "labels": {
            "omega": out.response_labels,
            "b_rows": out.predictor_labels,
            "b_cols": out.response_labels,
        },
        "omega_mean": out.posterior_mean_Omega,
        "b_mean": out.posterior_mean_B,
        "mu_mean": out.posterior_mean_mu,
        "partial_correlation_mean": out.posterior_mean_partial_correlation,
        "lambda_beta_mean": np.mean(out.draws.lambda_beta, axis=0),
        "lambda_omega_mean": np.mean(out.draws.lambda_omega, axis=0),
        "ci": {
            "level": out.ci_level,
            **{name: {"lower": lo, "upper": hi} for name, (lo, hi) in out.ci.items()},
        },
        "ess": out.ess,
    }
    return _jsonable(d)


def write_fit(out_dir, out: CarlassoOut, chains: list[ChainResult], overwrite: bool = False) -> Path:
    """Stage every file in a temporary sibling directory, then rename into place."""
    out_dir = Path(out_dir)
    if out_dir.exists() and any(out_dir.iterdir()) and not overwrite:
        raise FitDirectoryError(f"output directory {out_dir} exists and is not empty", location=str(out_dir))
    out_dir.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}.", dir=out_dir.parent))
    try:
        k = out.posterior_mean_Omega.shape[0]
        p = out.posterior_mean_B.shape[0]
        for c, res in enumerate(chains, start=1):
            meta = {
                "chain": c,
                "stream_id": c - 1,
                "seed": out.metadata.get("seed"),
                "k": k,
                "p": p,
                "adaptive": res.draws.adaptive,
                "draw_count": res.draws.draw_count,
                "response_labels": res.draws.response_labels,
                "predictor_labels": res.draws.predictor_labels,
                "diagnostics": res.diagnostics,
            }
            write_chain(stage / f"chain_{c}", res.draws, meta)
        with open(stage / SUMMARY, "w", encoding="utf-8") as fh:
            json.dump(summary_dict(out), fh, indent=2)
            fh.write("\n")
        with open(stage / "timing.json", "w", encoding="utf-8") as fh:
            json.dump({"runtime_seconds": out.metadata.get("runtime_seconds")}, fh)
            fh.write("\n")
        if out_dir.exists():
            shutil.rmtree(out_dir)
        os.replace(stage, out_dir)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    return out_dir


def load_fit(fit_dir, ci_level: float | None = None) -> CarlassoOut:
    """Rebuild a :class:`CarlassoOut` from a fit directory, re-summarizing at ``ci_level``."""
    fit_dir = Path(fit_dir)
    try:
        with open(fit_dir / SUMMARY, encoding="utf-8") as fh:
            summary = json.load(fh)
    except (OSError, ValueError) as e:
        raise FitDirectoryError(f"cannot read {fit_dir / SUMMARY}: {e}", location=str(fit_dir / SUMMARY)) from e
    meta = summary["metadata"]
    chain_dirs = sorted(
        (d for d in fit_dir.iterdir() if d.is_dir() and d.name.startswith("chain_")),
        key=lambda d: int(d.name.split("_")[1]),
    )
    if not chain_dirs:
        raise FitDirectoryError(f"no chain_* directories in {fit_dir}", location=str(fit_dir))
    parts = [read_chain(d)[0] for d in chain_dirs]
    pooled = PosteriorDraws.concatenate(parts)
    level = meta.get("ci_level", 0.9) if ci_level is None else ci_level
    return summarize(pooled, level, [d.draw_count for d in parts], meta)
