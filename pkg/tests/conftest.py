import numpy as np
import pytest

from carlasso.ingest import DataTable, DesignMatrices
from carlasso.model import Hyperparams, init_state


def write_text(path, text):
    path.write_text(text, encoding="utf-8")
    return path


@pytest.fixture
def tiny_csv(tmp_path):
    return write_text(tmp_path / "d.csv", "y1,y2,x1,g\n1.0,2.0,1,a\n2.0,1.5,2,b\n0.5,0.1,3,a\n")


def random_spd(k, rng, ridge=0.5):
    A = rng.standard_normal((k, k))
    return A @ A.T / k + ridge * np.eye(k)


def make_design(n=20, k=3, p=2, link="identity", seed=0, row_total=30):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    if link == "identity":
        Y = rng.standard_normal((n, k))
    elif link == "probit":
        Y = (rng.random((n, k)) < 0.5).astype(float)
    elif link == "log":
        Y = rng.poisson(3.0, (n, k)).astype(float)
    else:
        Y = np.vstack([rng.multinomial(row_total, np.full(k, 1.0 / k)) for _ in range(n)]).astype(float)
    return DesignMatrices(Y=Y, X=X, link=link)


def make_state(design, adaptive=False, **hyper_kw):
    hyper = Hyperparams(link=design.link, adaptive=adaptive, **hyper_kw)
    return init_state(design, hyper), hyper


def table_from_arrays(Y, X, ynames=None, xnames=None):
    ynames = ynames or [f"y{j + 1}" for j in range(Y.shape[1])]
    xnames = xnames or [f"x{j + 1}" for j in range(X.shape[1])]
    cols = {n: Y[:, j] for j, n in enumerate(ynames)}
    cols.update({n: X[:, j] for j, n in enumerate(xnames)})
    return DataTable.from_columns(cols), " + ".join(ynames) + " ~ " + " + ".join(xnames)
