import json

import numpy as np
import pytest

from carlasso.errors import DomainError
from carlasso.simulate import AR1_OFFDIAG, ar1_precision, simulate, sparse_signed_B, write_simulation
from carlasso.distributions import rng_stream


def test_ar1_precision_band():
    Om = ar1_precision(4)
    assert np.array_equal(np.diag(Om), np.ones(4))
    assert np.array_equal(np.diag(Om, 1), np.full(3, AR1_OFFDIAG))
    assert np.count_nonzero(np.triu(Om, 2)) == 0
    np.linalg.cholesky(Om)


@pytest.mark.parametrize("p, k, frac", [(4, 6, 0.3), (2, 3, 0.0), (3, 3, 1.0)])
def test_sparse_signed_B(p, k, frac):
    B = sparse_signed_B(p, k, frac, rng_stream(1))
    assert np.count_nonzero(B) == round(frac * p * k)
    assert set(np.unique(B)) <= {-1.0, 0.0, 1.0}


@pytest.mark.parametrize("link", ["identity", "probit", "log", "logit"])
def test_shapes_and_types(link):
    sim = simulate(4, 2, 50, link, seed=3)
    assert sim.Y.shape == (50, 4) and sim.X.shape == (50, 2)
    kk = 3 if link == "logit" else 4
    assert sim.Omega.shape == (kk, kk) and sim.B.shape == (2, kk)
    if link == "probit":
        assert set(np.unique(sim.Y)) <= {0.0, 1.0}
    if link in ("log", "logit"):
        assert np.all(sim.Y == np.round(sim.Y)) and np.all(sim.Y >= 0)
    if link == "logit":
        assert np.all(sim.Y.sum(axis=1) == 1000)


def test_identity_moments_match_truth():
    sim = simulate(3, 2, 200_000, "identity", seed=4, frac_nonzero=0.5)
    resid = sim.Y - np.linalg.solve(sim.Omega, (sim.mu + sim.X @ sim.B).T).T
    assert np.allclose(np.cov(resid.T), np.linalg.inv(sim.Omega), atol=0.01)


def test_same_seed_same_files(tmp_path):
    for d in ("a", "b"):
        (tmp_path / d).mkdir()
        write_simulation(simulate(6, 4, 300, "identity", seed=7), tmp_path / d / "data.csv", tmp_path / d / "truth.json")
    assert (tmp_path / "a" / "data.csv").read_bytes() == (tmp_path / "b" / "data.csv").read_bytes()
    truth = json.loads((tmp_path / "a" / "truth.json").read_text())
    assert truth["formula"] == "y1 + y2 + y3 + y4 + y5 + y6 ~ x1 + x2 + x3 + x4"
    assert np.array_equal(np.array(truth["Omega"]), ar1_precision(6))
    header = (tmp_path / "a" / "data.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 10


@pytest.mark.parametrize("args", [
    dict(k=1, p=1, n=10, link="logit"),
    dict(k=0, p=1, n=10),
    dict(k=2, p=1, n=0),
    dict(k=2, p=1, n=10, frac_nonzero=1.5),
    dict(k=2, p=1, n=10, link="cloglog"),
])
def test_invalid_arguments(args):
    with pytest.raises(DomainError):
        simulate(**args)
