"""Spatial graphs: nodes in physical coordinates joined by polyline edges.

This is the interchange structure shared by tracing, registration, metrics
and the ground-truth converters.  The on-disk form is JSON::

    {"nodes": [{"id", "pos", "radius", "score", "orient"}, ...],
     "edges": [{"src", "dst", "polyline", "radii", "cost"}, ...],
     "pairs": [{"e", "f", "p"}, ...],          # optional, pathgraph scores
     "roots": [ids...]}

Serialization is deterministic (sorted keys, repr floats) so identical graphs
produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, ValidationError


@dataclass
class GraphEdge:
    """Directed edge with a dense polyline and (optional) per-point radii."""

    src: int
    dst: int
    polyline: np.ndarray
    radii: np.ndarray | None = None
    cost: float = 0.0

    def __post_init__(self):
        self.polyline = np.atleast_2d(np.asarray(self.polyline, dtype=np.float64))
        if self.polyline.shape[1] != 3:
            raise ValidationError("edge polylines must be (m, 3)")
        if self.radii is not None:
            self.radii = np.asarray(self.radii, dtype=np.float64)
            if self.radii.shape[0] != self.polyline.shape[0]:
                raise ValidationError("per-point radii must match polyline length")

    @property
    def arc_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.polyline, axis=0), axis=1)))


@dataclass
class SpatialGraph:
    """Directed graph of 3D points; node metadata fields are optional."""

    nodes: np.ndarray
    edges: list = field(default_factory=list)
    node_radii: np.ndarray | None = None
    node_scores: np.ndarray | None = None
    node_orients: np.ndarray | None = None
    roots: tuple = ()

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=np.float64))
        if self.nodes.size == 0:
            self.nodes = np.zeros((0, 3))
        if self.nodes.shape[1] != 3:
            raise ValidationError("nodes must be (n, 3)")
        n = self.n_nodes
        for e in self.edges:
            if not (0 <= e.src < n and 0 <= e.dst < n):
                raise ValidationError(f"edge ({e.src}, {e.dst}) references missing node")
            if e.src == e.dst:
                raise ValidationError("self-edges are not allowed")
        self.roots = tuple(int(r) for r in self.roots)
        for r in self.roots:
            if not 0 <= r < n:
                raise ValidationError(f"root {r} references missing node")

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def out_edges(self):
        """node id -> list of edge indices leaving it."""
        index = {i: [] for i in range(self.n_nodes)}
        for k, e in enumerate(self.edges):
            index[e.src].append(k)
        return index

    def in_edges(self):
        index = {i: [] for i in range(self.n_nodes)}
        for k, e in enumerate(self.edges):
            index[e.dst].append(k)
        return index

    def total_cable(self) -> float:
        return sum(e.arc_length for e in self.edges)

    def undirected_components(self) -> np.ndarray:
        """Per-node component labels ignoring edge direction."""
        parent = list(range(self.n_nodes))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for e in self.edges:
            ra, rb = find(e.src), find(e.dst)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        comp = [find(i) for i in range(self.n_nodes)]
        remap = {}
        out = np.empty(self.n_nodes, dtype=np.int32)
        for i, c in enumerate(comp):
            if c not in remap:
                remap[c] = len(remap)
            out[i] = remap[c]
        return out

    def reachable_from(self, sources, directed=True):
        """Set of node ids reachable from ``sources`` along (directed) edges."""
        adj = {i: [] for i in range(self.n_nodes)}
        for e in self.edges:
            adj[e.src].append(e.dst)
            if not directed:
                adj[e.dst].append(e.src)
        seen = set()
        stack = [int(s) for s in sources]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            stack.extend(v for v in adj[u] if v not in seen)
        return seen

    def to_json_dict(self) -> dict:
        nodes = []
        for i in range(self.n_nodes):
            item = {"id": i, "pos": [float(c) for c in self.nodes[i]]}
            if self.node_radii is not None:
                item["radius"] = float(self.node_radii[i])
            if self.node_scores is not None:
                item["score"] = float(self.node_scores[i])
            if self.node_orients is not None:
                item["orient"] = [float(c) for c in self.node_orients[i]]
            nodes.append(item)
        edges = []
        for e in self.edges:
            item = {
                "src": int(e.src),
                "dst": int(e.dst),
                "polyline": [[float(c) for c in p] for p in e.polyline],
                "cost": float(e.cost),
            }
            if e.radii is not None:
                item["radii"] = [float(r) for r in e.radii]
            edges.append(item)
        return {"nodes": nodes, "edges": edges, "roots": list(self.roots)}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "SpatialGraph":
        try:
            raw_nodes = doc["nodes"]
            ids = [int(n["id"]) for n in raw_nodes]
            if sorted(ids) != list(range(len(ids))):
                raise FormatError("node ids must be dense 0..n-1")
            order = np.argsort(ids)
            raw_nodes = [raw_nodes[int(i)] for i in order]
            nodes = np.array([n["pos"] for n in raw_nodes], dtype=np.float64).reshape(-1, 3)
            radii = scores = orients = None
            if raw_nodes and "radius" in raw_nodes[0]:
                radii = np.array([n["radius"] for n in raw_nodes])
            if raw_nodes and "score" in raw_nodes[0]:
                scores = np.array([n["score"] for n in raw_nodes])
            if raw_nodes and "orient" in raw_nodes[0]:
                orients = np.array([n["orient"] for n in raw_nodes])
            edges = [
                GraphEdge(
                    src=int(e["src"]),
                    dst=int(e["dst"]),
                    polyline=np.array(e["polyline"], dtype=np.float64),
                    radii=np.array(e["radii"]) if "radii" in e else None,
                    cost=float(e.get("cost", 0.0)),
                )
                for e in doc.get("edges", [])
            ]
            roots = tuple(int(r) for r in doc.get("roots", []))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed graph document: {exc}") from None
        return cls(nodes=nodes, edges=edges, node_radii=radii, node_scores=scores,
                   node_orients=orients, roots=roots)

    def save(self, path, extra: dict | None = None):
        doc = self.to_json_dict()
        if extra:
            doc.update(extra)
        with open(path, "w", encoding="ascii") as fh:
            json.dump(doc, fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SpatialGraph":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_json_dict(json.load(fh))


def load_graph_document(path) -> dict:
    """Raw JSON document (graph plus any extra sections such as pairs)."""
    with open(path, "r", encoding="ascii") as fh:
        return json.load(fh)


def resample_polyline(points: np.ndarray, step: float) -> np.ndarray:
    """Points at fixed arc-length intervals, endpoints always included."""
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if step <= 0:
        raise ValidationError("resampling step must be > 0")
    if len(points) == 1:
        return points.copy()
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(cum[-1])
    if total == 0.0:
        return points[:1].copy()
    n_steps = max(int(np.floor(total / step)), 1)
    targets = np.arange(n_steps + 1) * (total / n_steps)
    out = np.empty((len(targets), 3))
    idx = np.searchsorted(cum, targets, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    denom = np.where(seg[idx] > 0, seg[idx], 1.0)
    t = (targets - cum[idx]) / denom
    out = points[idx] + (points[idx + 1] - points[idx]) * t[:, None]
    out[-1] = points[-1]
    return out
