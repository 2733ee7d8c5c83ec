import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from carlasso.distributions import rng_stream
from carlasso.errors import NotSPD
from carlasso.graph import (
    BLUE,
    RED,
    ChainGraph,
    Edge,
    Node,
    alpha_centrality,
    build_graph,
    export_graph,
    partial_correlations,
    read_json_graph,
    to_dot,
)
from carlasso.inference import FitRequest, fit, summarize
from carlasso.model import Hyperparams, PosteriorDraws
from carlasso.simulate import simulate

from conftest import random_spd, table_from_arrays


def test_partial_correlations_identity():
    assert np.array_equal(partial_correlations(np.eye(4)), np.eye(4))


def test_partial_correlations_two_by_two():
    pc = partial_correlations(np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert pc[0, 1] == pytest.approx(-0.5) and pc[1, 0] == pytest.approx(-0.5)


def test_partial_correlations_random_spd():
    rng = rng_stream(1)
    for _ in range(1000):
        pc = partial_correlations(random_spd(5, rng, ridge=0.01))
        assert np.all(np.abs(pc) <= 1.0)
        assert np.array_equal(pc, pc.T)


def test_partial_correlations_rejects_non_spd():
    with pytest.raises(NotSPD):
        partial_correlations(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_alpha_centrality_zero_adjacency():
    e = np.array([1.0, 2.0, 0.5])
    assert np.array_equal(alpha_centrality(np.zeros((3, 3)), 0.5, e), e)


def test_alpha_centrality_two_node_symmetric():
    x = alpha_centrality(np.array([[0.0, 0.7], [0.7, 0.0]]))
    assert x[0] == pytest.approx(x[1])


def test_alpha_centrality_star():
    A = np.array([[0.0, 1.0, 1.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    # spectral radius sqrt(2); hub h = 1 + 2 a l, leaf l = 1 + a h
    a = 0.5 / np.sqrt(2.0)
    leaf = (1 + a) / (1 - 2 * a * a)
    hub = 1 + 2 * a * leaf
    x = alpha_centrality(A, 0.5)
    assert x[0] == pytest.approx(hub, rel=1e-12)
    assert x[1:] == pytest.approx([leaf, leaf], rel=1e-12)
    assert hub > leaf


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (4, 4), elements=st.floats(0, 5)), st.floats(0.01, 0.99),
       arrays(np.float64, 4, elements=st.floats(0.1, 3)))
def test_alpha_centrality_at_least_min_e(A, frac, e):
    x = alpha_centrality(A, frac, e)
    assert np.all(x >= e.min() - 1e-9)


def _out_from_draws(omegas, bs, level=0.9, resp=None, preds=None):
    D, k = omegas.shape[0], omegas.shape[1]
    p = bs.shape[1]
    draws = PosteriorDraws(omegas, bs, np.zeros((D, k)), np.ones(D), np.ones(D),
                           resp or [f"y{j + 1}" for j in range(k)], preds or [f"x{r + 1}" for r in range(p)])
    return summarize(draws, level)


def _noisy_draws(seed, D=200, signal=0.0):
    rng = rng_stream(seed)
    om = np.empty((D, 3, 3))
    for d in range(D):
        off = signal + 0.2 * rng.standard_normal(3)
        om[d] = np.eye(3) * 2.0
        om[d][np.triu_indices(3, 1)] = off
        om[d][np.tril_indices(3, -1)] = off
    bs = signal + rng.standard_normal((D, 2, 3))
    return om, bs


def test_all_intervals_straddle_zero():
    om, bs = _noisy_draws(2)
    om -= np.mean(om, axis=0) - 2.0 * np.eye(3)  # centre off-diagonals on 0
    bs -= bs.mean(axis=0)
    g = build_graph(_out_from_draws(om, bs))
    assert g.included_edges == []
    sizes = [n.size for n in g.nodes if n.kind == "response"]
    assert np.allclose(sizes, sizes[0])
    assert [n.kind for n in g.nodes] == ["response"] * 3 + ["predictor"] * 2


def test_edges_and_weights():
    om, bs = _noisy_draws(3, signal=-0.8)
    g = build_graph(_out_from_draws(om, bs))
    rr = [e for e in g.edges if e.kind == "resp_resp"]
    pr = [e for e in g.edges if e.kind == "pred_resp"]
    assert len(rr) == 3 and len(pr) == 6
    assert all(-1 <= e.weight <= 1 for e in rr)
    # negative omega is a positive partial correlation
    assert all(e.included and e.weight > 0 and e.color == RED for e in rr)
    assert all(n.size > 0 for n in g.nodes)


def test_min_abs_weight_rule():
    om, bs = _noisy_draws(4, signal=-0.8)
    out = _out_from_draws(om, bs)
    g = build_graph(out, min_abs_weight=10.0)
    assert g.included_edges == []
    g = build_graph(out, min_abs_weight=0.0)
    assert all(e.included for e in g.edges if e.weight != 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 0.95))
def test_ci_nesting(seed, level):
    om, bs = _noisy_draws(seed, D=60, signal=0.15)
    out = _out_from_draws(om, bs)
    wide = {(e.source, e.target) for e in build_graph(out, ci_level=0.999).included_edges}
    narrow = {(e.source, e.target) for e in build_graph(out, ci_level=level).included_edges}
    assert wide <= narrow


def _tiny_graph(weights):
    nodes = [Node("a", "response", 1.5), Node("b", "response", 1.0), Node("x", "predictor")]
    edges = [Edge("a", "b", "resp_resp", weights[0], weights[0] != 0),
             Edge("x", "a", "pred_resp", weights[1], weights[1] != 0)]
    return ChainGraph(nodes, edges)


def test_dot_encoding():
    dot = to_dot(_tiny_graph([0.4, -0.2]))
    assert f'color="{RED}"' in dot and f'color="{BLUE}"' in dot
    assert '"a" [shape=circle' in dot and '"x" [shape=triangle' in dot
    assert "penwidth=5.0000" in dot and "penwidth=3.0000" in dot
    assert "width=1.5000" in dot and "width=0.5000" in dot


def test_dot_empty_edges_is_valid():
    dot = to_dot(_tiny_graph([0.0, 0.0]))
    assert dot.startswith("digraph") and dot.rstrip().endswith("}")
    assert "->" not in dot and dot.count("shape=") == 3


def test_zero_weight_never_included():
    om = np.tile(np.eye(2), (20, 1, 1))
    bs = np.zeros((20, 1, 2))
    g = build_graph(_out_from_draws(om, bs), min_abs_weight=0.0)
    assert g.included_edges == []


def test_json_round_trip(tmp_path):
    g = _tiny_graph([0.4, -0.2])
    export_graph(g, "json", tmp_path / "g.json")
    assert read_json_graph(tmp_path / "g.json") == g


def test_graphml_attributes(tmp_path):
    export_graph(_tiny_graph([0.4, -0.2]), "graphml", tmp_path / "g.graphml")
    root = ET.parse(tmp_path / "g.graphml").getroot()
    ns = {"g": "http://graphml.graphdrawing.org/xmlns"}
    names = {k.get("attr.name") for k in root.findall("g:key", ns)}
    assert {"kind", "weight", "sign", "size"} <= names
    assert len(root.findall(".//g:edge", ns)) == 2


def test_graphml_readable_by_networkx(tmp_path):
    nx = pytest.importorskip("networkx")
    export_graph(_tiny_graph([0.4, -0.2]), "graphml", tmp_path / "g.graphml")
    G = nx.read_graphml(tmp_path / "g.graphml")
    assert G.nodes["x"]["kind"] == "predictor"
    assert G.edges["a", "b"]["sign"] == "positive"


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        export_graph(_tiny_graph([0.1, 0.1]), "svg", tmp_path / "g.svg")


def test_ar1_fit_recovers_chain():
    hits = 0
    for rep in range(20):
        sim = simulate(4, 1, 300, "identity", seed=200 + rep, frac_nonzero=0.0)
        table, formula = table_from_arrays(sim.Y, sim.X)
        out, _ = fit(FitRequest(formula, table, Hyperparams(n_iter=1000, thin_by=5, n_burn_in=200, seed=rep)))
        g = build_graph(out)
        found = {(e.source, e.target) for e in g.included_edges if e.kind == "resp_resp"}
        hits += found == {("y1", "y2"), ("y2", "y3"), ("y3", "y4")}
    assert hits > 10
