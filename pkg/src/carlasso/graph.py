"""Chain graph construction and export (DOT, GraphML, JSON).

Response nodes are circles, predictor nodes triangles. Response-response
edges are weighted by partial correlation, predictor-response edges by the
coefficient. Red (#D62728) marks positive weights, blue (#1F77B4) negative.
"""

from __future__ import annotations

import json
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataIOError, NotSPD, SingularSystem
from .inference import credible_interval, partial_correlations as _pc_stack
from .model import CarlassoOut

RED = "#D62728"
BLUE = "#1F77B4"
SHAPES = {"response": "circle", "predictor": "triangle"}


@dataclass
class Node:
    name: str
    kind: str  # response | predictor
    size: float = 1.0


@dataclass
class Edge:
    source: str
    target: str
    kind: str  # resp_resp | pred_resp
    weight: float
    included: bool

    @property
    def sign(self) -> str:
        if self.weight > 0:
            return "positive"
        if self.weight < 0:
            return "negative"
        return "zero"

    @property
    def color(self) -> str:
        return RED if self.weight > 0 else BLUE


@dataclass
class ChainGraph:
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)

    @property
    def included_edges(self) -> list[Edge]:
        return [e for e in self.edges if e.included]

    def to_dict(self) -> dict:
        return {
            "nodes": [dict(asdict(n), shape=SHAPES[n.kind]) for n in self.nodes],
            "edges": [
                {"from": e.source, "to": e.target, "kind": e.kind, "weight": e.weight,
                 "sign": e.sign, "included": e.included}
                for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ChainGraph":
        return cls(
            nodes=[Node(n["name"], n["kind"], float(n["size"])) for n in d["nodes"]],
            edges=[Edge(e["from"], e["to"], e["kind"], float(e["weight"]), bool(e["included"])) for e in d["edges"]],
        )


def partial_correlations(Omega: np.ndarray) -> np.ndarray:
    Omega = np.asarray(Omega, dtype=float)
    try:
        np.linalg.cholesky(Omega)
    except np.linalg.LinAlgError:
        raise NotSPD("partial correlations need a positive definite matrix") from None
    if not np.allclose(Omega, Omega.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Omega).max())):
        raise NotSPD("matrix is not symmetric")
    return _pc_stack(Omega)


def alpha_centrality(adjacency, alpha_frac: float = 0.5, e=None) -> np.ndarray:
    """Solve ``(I - a A^T) x = e`` with ``a = alpha_frac / spectral_radius(A)``."""
    A = np.asarray(adjacency, dtype=float)
    k = A.shape[0]
    e = np.ones(k) if e is None else np.asarray(e, dtype=float)
    if k == 0:
        return np.zeros(0)
    if np.any(A < 0):
        raise ValueError("adjacency must be nonnegative")
    if not 0 < alpha_frac < 1:
        raise ValueError("alpha_frac must lie in (0, 1)")
    rho = float(np.max(np.abs(np.linalg.eigvals(A))))
    a = alpha_frac / rho if rho > 0 else 0.0
    M = np.eye(k) - a * A.T
    try:
        x = np.linalg.solve(M, e)
    except np.linalg.LinAlgError:
        raise SingularSystem("alpha-centrality system is singular") from None
    return x


def _excludes_zero(lo, hi):
    return (lo > 0) | (hi < 0)


def build_graph(out: CarlassoOut, ci_level: float | None = None, min_abs_weight: float | None = None,
                alpha_frac: float = 0.5) -> ChainGraph:
    """Typed nodes and signed edges from posterior summaries.

    An edge is included when its equal-tailed credible interval at
    ``ci_level`` excludes zero, or, if ``min_abs_weight`` is given, when its
    posterior-mean weight reaches that magnitude instead. Excluded edges are
    kept with ``included=False``.
    """
    level = out.ci_level if ci_level is None else ci_level
    draws = out.draws
    state_labels = list(draws.response_labels) or [f"y{j + 1}" for j in range(draws.mus.shape[1])]
    all_resp = list(out.metadata.get("response_labels") or state_labels)
    preds = list(draws.predictor_labels) or [f"x{r + 1}" for r in range(draws.bs.shape[1])]
    k = len(state_labels)

    pc_mean = out.posterior_mean_partial_correlation
    if ci_level is None or ci_level == out.ci_level:
        pc_lo, pc_hi = out.ci["partial_correlation"]
        b_lo, b_hi = out.ci["b"]
    else:
        pc_lo, pc_hi = credible_interval(_pc_stack(draws.omegas), level)
        b_lo, b_hi = credible_interval(draws.bs, level)
    b_mean = out.posterior_mean_B

    def keep(w, lo, hi):
        if w == 0:
            return False
        if min_abs_weight is not None:
            return abs(w) >= min_abs_weight
        return bool(_excludes_zero(lo, hi))

    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            w = float(pc_mean[i, j])
            edges.append(Edge(state_labels[i], state_labels[j], "resp_resp", w, keep(w, pc_lo[i, j], pc_hi[i, j])))
    for r, pname in enumerate(preds):
        for j in range(k):
            w = float(b_mean[r, j])
            edges.append(Edge(pname, state_labels[j], "pred_resp", w, keep(w, b_lo[r, j], b_hi[r, j])))

    A = np.zeros((k, k))
    pos = {name: i for i, name in enumerate(state_labels)}
    for e in edges:
        if e.kind == "resp_resp" and e.included:
            A[pos[e.source], pos[e.target]] = A[pos[e.target], pos[e.source]] = abs(e.weight)
    cent = alpha_centrality(A, alpha_frac)
    nodes = [Node(name, "response", float(cent[pos[name]]) if name in pos else 1.0) for name in all_resp]
    nodes += [Node(name, "predictor", 1.0) for name in preds]
    return ChainGraph(nodes, edges)


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _widths(nodes: list[Node]) -> list[float]:
    sizes = np.array([n.size for n in nodes], dtype=float)
    if sizes.size == 0:
        return []
    lo, hi = sizes.min(), sizes.max()
    if hi - lo <= 1e-12 * max(1.0, hi):
        return [1.0] * len(nodes)
    return list(0.5 + (sizes - lo) / (hi - lo))


def to_dot(graph: ChainGraph) -> str:
    inc = graph.included_edges
    wmax = max((abs(e.weight) for e in inc), default=0.0)
    lines = ["digraph chain_graph {", "  node [fixedsize=true, fontsize=10];"]
    for n, w in zip(graph.nodes, _widths(graph.nodes)):
        lines.append(
            f"  {_dot_id(n.name)} [shape={SHAPES[n.kind]}, width={w:.4f}, kind=\"{n.kind}\", size={n.size!r}];"
        )
    for e in inc:
        pen = 1.0 + 4.0 * abs(e.weight) / wmax if wmax > 0 else 1.0
        extra = ", dir=none" if e.kind == "resp_resp" else ""
        lines.append(
            f"  {_dot_id(e.source)} -> {_dot_id(e.target)} [color=\"{e.color}\", penwidth={pen:.4f}, "
            f"kind=\"{e.kind}\", signed_weight={e.weight!r}, sign=\"{e.sign}\"{extra}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_graphml(graph: ChainGraph) -> str:
    ns = "http://graphml.graphdrawing.org/xmlns"
    root = ET.Element("graphml", xmlns=ns)
    keys = [
        ("n_kind", "node", "kind", "string"),
        ("n_size", "node", "size", "double"),
        ("n_shape", "node", "shape", "string"),
        ("e_kind", "edge", "kind", "string"),
        ("e_weight", "edge", "weight", "double"),
        ("e_sign", "edge", "sign", "string"),
        ("e_color", "edge", "color", "string"),
    ]
    for kid, target, name, typ in keys:
        ET.SubElement(root, "key", {"id": kid, "for": target, "attr.name": name, "attr.type": typ})
    g = ET.SubElement(root, "graph", id="chain_graph", edgedefault="directed")
    for n in graph.nodes:
        el = ET.SubElement(g, "node", id=n.name)
        for kid, val in (("n_kind", n.kind), ("n_size", repr(n.size)), ("n_shape", SHAPES[n.kind])):
            ET.SubElement(el, "data", key=kid).text = val
    for i, e in enumerate(graph.included_edges):
        el = ET.SubElement(g, "edge", id=f"e{i}", source=e.source, target=e.target)
        for kid, val in (("e_kind", e.kind), ("e_weight", repr(e.weight)), ("e_sign", e.sign), ("e_color", e.color)):
            ET.SubElement(el, "data", key=kid).text = val
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def to_json(graph: ChainGraph) -> str:
    return json.dumps(graph.to_dict(), indent=2) + "\n"


def export_graph(graph: ChainGraph, fmt: str, path) -> Path:
    writers = {"dot": to_dot, "graphml": to_graphml, "json": to_json}
    if fmt not in writers:
        raise ValueError(f"format must be one of {sorted(writers)}")
    path = Path(path)
    try:
        path.write_text(writers[fmt](graph), encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"cannot write {path}: {e}", location=str(path)) from e
    return path


def read_json_graph(path) -> ChainGraph:
    return ChainGraph.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
