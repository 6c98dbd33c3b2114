"""Surface graphs with terminal (t-link) and neighbor (n-link) weights."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..volgrid.mesh import SurfaceMesh

UNSET = -1.0
PROB_CLAMP = 1e-6
DEFAULT_LAMBDA = 0.4


@dataclass(frozen=True)
class SurfaceGraph:
    """Graph over surface vertices for a binary Potts energy.

    Attributes:
        n_nodes: Number of nodes; node ``i`` is mesh vertex ``i``.
        edges: ``(E, 2)`` sorted node pairs, one per unique mesh edge.
        tlink: ``(n_nodes, 2)`` costs. Column 0 is paid when a node is
            labeled 1 (scar), column 1 when it is labeled 0 (normal wall).
        nlink: ``(E,)`` weights paid (times ``lam``) when an edge's two
            labels differ.
        lam: Balancing weight of the pairwise term.

    Weights equal to ``UNSET`` (-1) mark a graph whose providers have not
    run yet.
    """

    n_nodes: int
    edges: np.ndarray
    tlink: np.ndarray
    nlink: np.ndarray
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        tlink = np.asarray(self.tlink, dtype=np.float64)
        nlink = np.asarray(self.nlink, dtype=np.float64).ravel()
        if self.n_nodes < 1:
            raise ValueError("graph needs at least one node")
        if edges.size and (edges.min() < 0 or edges.max() >= self.n_nodes):
            raise ValueError("edge references a missing node")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        if tlink.shape != (self.n_nodes, 2) or nlink.shape != (len(edges),):
            raise ValueError("weight arrays do not match the node/edge counts")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("lambda must be finite and >= 0")
        for arr in (tlink, nlink):
            if not np.all(np.isfinite(arr)):
                raise ValueError("weights must be finite")
            if np.any((arr < 0) & (arr != UNSET)):
                raise ValueError("weights must be >= 0")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "tlink", tlink)
        object.__setattr__(self, "nlink", nlink)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes)

    @property
    def is_weighted(self) -> bool:
        return not (np.any(self.tlink == UNSET) or np.any(self.nlink == UNSET))

    def components(self) -> tuple[int, np.ndarray]:
        """Number of connected components and the component id of each node."""
        e = self.edges
        adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(self.n_nodes,) * 2)
        return connected_components(adj, directed=False)

    def with_lambda(self, lam: float) -> "SurfaceGraph":
        return replace(self, lam=float(lam))

    def scaled(self, factor: float) -> "SurfaceGraph":
        """All t-link and n-link weights multiplied by ``factor``."""
        self.require_weights()
        return replace(self, tlink=self.tlink * factor, nlink=self.nlink * factor)

    def require_weights(self) -> None:
        if not self.is_weighted:
            raise ValueError("graph weights are unset; run the t-link and n-link providers first")


def from_arrays(tlink, edges=(), nlink=(), lam: float = DEFAULT_LAMBDA) -> SurfaceGraph:
    """Graph with explicit weights, independent of any mesh."""
    tlink = np.asarray(tlink, dtype=np.float64).reshape(-1, 2)
    edges = np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, 2), axis=1)
    return SurfaceGraph(len(tlink), edges, tlink, np.asarray(nlink, dtype=np.float64), float(lam))


def build_graph(mesh: SurfaceMesh, lam: float = DEFAULT_LAMBDA) -> SurfaceGraph:
    """One node per mesh vertex and one n-link per unique mesh edge, weights unset."""
    if mesh.n_vertices == 0 or len(mesh.triangles) == 0:
        raise ValueError("cannot build a graph from an empty mesh")
    edges = mesh.edges()
    return SurfaceGraph(
        mesh.n_vertices,
        edges,
        np.full((mesh.n_vertices, 2), UNSET),
        np.full(len(edges), UNSET),
        float(lam),
    )


def tlinks_from_probs(g: SurfaceGraph, p_scar) -> SurfaceGraph:
    """Negative log-likelihood t-links from per-node scar probabilities.

    Probabilities are clamped to ``[1e-6, 1 - 1e-6]``; a node pays
    ``-log p`` for the scar label and ``-log(1 - p)`` for normal wall.
    """
    p = np.asarray(p_scar, dtype=np.float64).ravel()
    if p.shape != (g.n_nodes,):
        raise ValueError(f"expected {g.n_nodes} probabilities, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise ValueError("probabilities must be finite")
    p = np.clip(p, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return replace(g, tlink=np.column_stack([-np.log(p), -np.log1p(-p)]))


def nlinks_from_similarity(g: SurfaceGraph, node_features, sigma: float, mesh: SurfaceMesh) -> SurfaceGraph:
    """Gaussian feature similarity divided by vertex distance (mm)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    f = np.asarray(node_features, dtype=np.float64).reshape(g.n_nodes, -1)
    if mesh.n_vertices != g.n_nodes:
        raise ValueError("mesh and graph disagree on the number of nodes")
    i, j = g.edges[:, 0], g.edges[:, 1]
    dist = np.linalg.norm(mesh.vertices[i] - mesh.vertices[j], axis=1)
    if np.any(dist == 0):
        raise ValueError("coincident vertices on a graph edge")
    diff2 = np.sum((f[i] - f[j]) ** 2, axis=1)
    return replace(g, nlink=np.exp(-diff2 / (2.0 * sigma * sigma)) / dist)


def _labels(g: SurfaceGraph, labels) -> np.ndarray:
    lab = np.asarray(labels).ravel()
    if lab.shape != (g.n_nodes,):
        raise ValueError(f"labeling has {lab.size} entries, graph has {g.n_nodes} nodes")
    if not np.all((lab == 0) | (lab == 1)):
        raise ValueError("labels must be 0 or 1")
    return lab.astype(np.int64)


def cut_weight(g: SurfaceGraph, labels) -> float:
    """Sum of n-link weights across label boundaries (lambda not applied)."""
    lab = _labels(g, labels)
    cut = lab[g.edges[:, 0]] != lab[g.edges[:, 1]]
    return float(np.sum(g.nlink[cut]))


def energy(g: SurfaceGraph, labels) -> float:
    """Potts energy: chosen t-link costs plus lambda times the cut n-links."""
    g.require_weights()
    lab = _labels(g, labels)
    unary = np.where(lab == 1, g.tlink[:, 0], g.tlink[:, 1])
    return float(np.sum(unary)) + g.lam * cut_weight(g, lab)


def write_labeling_csv(path, labels) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_index", "label"])
        for i, lab in enumerate(np.asarray(labels).ravel()):
            w.writerow([i, int(lab)])


def _read_node_csv(path, column: str, n_nodes: int | None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["node_index", column]:
        raise ValueError(f"{path}: header must be 'node_index,{column}'")
    idx, val = [], []
    for k, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise ValueError(f"{path}:{k}: expected 2 columns")
        try:
            idx.append(int(row[0]))
            val.append(float(row[1]))
        except ValueError as exc:
            raise ValueError(f"{path}:{k}: {exc}") from None
    n = len(idx) if n_nodes is None else n_nodes
    if sorted(idx) != list(range(n)):
        raise ValueError(f"{path}: node indices must cover 0..{n - 1} exactly once")
    out = np.empty(n)
    out[idx] = val
    return out


def read_labeling_csv(path, n_nodes: int | None = None) -> np.ndarray:
    lab = _read_node_csv(path, "label", n_nodes)
    if not np.all((lab == 0) | (lab == 1)):
        raise ValueError(f"{path}: labels must be 0 or 1")
    return lab.astype(np.uint8)


def read_probability_csv(path, n_nodes: int | None = None) -> np.ndarray:
    """Per-node scar probabilities from an external provider file."""
    p = _read_node_csv(path, "p_scar", n_nodes)
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise ValueError(f"{path}: p_scar must lie in [0, 1]")
    return p
