"""Deterministic synthetic phantoms with exact ground truth.

Four kinds are supported:

* ``straight-tube``   — a polyline tube through the control points,
* ``Y-tree``          — a branching tube (default topology: point 0 is the
                        junction, every other point is a tip),
* ``loopy-network``   — the control polyline closed into a cycle,
* ``nested-blob``     — solid spheres at the control points; the ground-truth
                        label map marks a one-voxel membrane shell around each
                        interior.

Geometry lives in voxel-index space (control points and radii in voxels);
intensities are ``foreground`` inside the structure and ``background``
elsewhere, plus additive Gaussian noise drawn from a PCG64 generator
(numpy ``Generator.standard_normal``) seeded from the spec.  Identical
(spec, dims, spacing) therefore produce bit-identical volumes.

An explicit ``segments`` topology (pairs of control-point indices) overrides
the kind's default, which is how multi-component scenes such as two disjoint
crossing tubes are built.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BoundsError, ValidationError
from .graphs import GraphEdge, SpatialGraph
from .volume import Volume3D

KINDS = ("straight-tube", "Y-tree", "loopy-network", "nested-blob")

LABEL_OUTSIDE = 0
LABEL_INSIDE = 1
LABEL_MEMBRANE = 2


@dataclass(frozen=True)
class PhantomSpec:
    """Recipe for one synthetic scene; hashable and JSON-friendly."""

    kind: str
    control_points: tuple
    radii: tuple
    foreground: float = 1.0
    background: float = 0.0
    noise_sigma: float = 0.0
    seed: int = 0
    segments: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown phantom kind {self.kind!r}; expected one of {KINDS}")
        points = tuple(tuple(float(c) for c in p) for p in self.control_points)
        radii = tuple(float(r) for r in self.radii)
        if len(points) == 0:
            raise ValidationError("at least one control point is required")
        if any(len(p) != 3 for p in points):
            raise ValidationError("control points must be 3D")
        if len(radii) != len(points):
            raise ValidationError(
                f"radius profile length {len(radii)} != control point count {len(points)}"
            )
        if any(r <= 0 for r in radii):
            raise ValidationError("radii must be strictly positive")
        if self.noise_sigma < 0:
            raise ValidationError("noise sigma must be >= 0")
        object.__setattr__(self, "control_points", points)
        object.__setattr__(self, "radii", radii)
        segments = self.segments
        if segments is not None:
            segments = tuple((int(a), int(b)) for a, b in segments)
            n = len(points)
            for a, b in segments:
                if not (0 <= a < n and 0 <= b < n) or a == b:
                    raise ValidationError(f"bad segment ({a}, {b}) for {n} control points")
        object.__setattr__(self, "segments", segments)

    def topology(self) -> tuple:
        """Segment list actually used, after kind defaults."""
        if self.kind == "nested-blob":
            return ()
        if self.segments is not None:
            return self.segments
        n = len(self.control_points)
        if self.kind == "straight-tube":
            return tuple((i, i + 1) for i in range(n - 1))
        if self.kind == "Y-tree":
            if n < 3:
                raise ValidationError("Y-tree needs at least 3 control points")
            return tuple((0, i) for i in range(1, n))
        # loopy-network: chain plus the closing segment
        if n < 3:
            raise ValidationError("loopy-network needs at least 3 control points")
        return tuple((i, i + 1) for i in range(n - 1)) + ((n - 1, 0),)


@dataclass(frozen=True)
class GroundTruth:
    """Exact answer key for a generated phantom.

    ``points``/``segments`` are the input control polyline in voxel units;
    ``label_map`` holds {outside, inside, membrane} classes; ``components``
    maps each control point to its connected component.
    """

    points: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    segments: tuple
    label_map: np.ndarray = field(repr=False)
    roots: tuple
    components: np.ndarray = field(repr=False)
    spacing: tuple

    @property
    def cable_length(self) -> float:
        """Total centerline length in voxel units (straight-segment sum)."""
        total = 0.0
        for a, b in self.segments:
            total += float(np.linalg.norm(self.points[a] - self.points[b]))
        return total

    def to_graph(self) -> SpatialGraph:
        """Centerline as a physical-coordinate graph (roots preserved)."""
        spacing = np.asarray(self.spacing, dtype=float)
        nodes = self.points * spacing
        edges = []
        for a, b in self.segments:
            poly = np.vstack([nodes[a], nodes[b]])
            rad = np.array([self.radii[a], self.radii[b]]) * float(min(self.spacing))
            edges.append(GraphEdge(src=a, dst=b, polyline=poly, radii=rad))
        return SpatialGraph(
            nodes=nodes,
            edges=edges,
            node_radii=self.radii * float(min(self.spacing)),
            roots=self.roots,
        )


def _component_labels(n_points, segments):
    parent = list(range(n_points))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in segments:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    comp = np.array([find(i) for i in range(n_points)])
    # densify ids in first-seen order
    remap = {}
    for c in comp:
        if c not in remap:
            remap[c] = len(remap)
    return np.array([remap[c] for c in comp], dtype=np.int32)


def _segment_distance_field(dims, p0, p1, r0, r1):
    """Per-voxel (distance to segment, interpolated radius) on a local box."""
    rmax = max(r0, r1)
    lo = np.maximum(np.floor(np.minimum(p0, p1) - rmax - 1).astype(int), 0)
    hi = np.minimum(np.ceil(np.maximum(p0, p1) + rmax + 1).astype(int) + 1, dims)
    if np.any(lo >= hi):
        return None
    grids = np.meshgrid(*(np.arange(lo[i], hi[i]) for i in range(3)), indexing="ij")
    pts = np.stack([g.astype(np.float64) for g in grids], axis=-1)
    d = p1 - p0
    seg_len2 = float(np.dot(d, d))
    if seg_len2 == 0.0:
        t = np.zeros(pts.shape[:-1])
    else:
        t = np.clip(((pts - p0) @ d) / seg_len2, 0.0, 1.0)
    closest = p0 + t[..., None] * d
    dist = np.linalg.norm(pts - closest, axis=-1)
    radius = r0 + t * (r1 - r0)
    return (slice(lo[0], hi[0]), slice(lo[1], hi[1]), slice(lo[2], hi[2])), dist, radius


def _structure_mask(spec: PhantomSpec, dims) -> np.ndarray:
    mask = np.zeros(dims, dtype=bool)
    points = np.asarray(spec.control_points, dtype=np.float64)
    radii = np.asarray(spec.radii, dtype=np.float64)
    if spec.kind == "nested-blob":
        for p, r in zip(points, radii):
            local = _segment_distance_field(np.asarray(dims), p, p, r, r)
            if local is None:
                continue
            sl, dist, radius = local
            mask[sl] |= dist <= radius
        return mask
    for a, b in spec.topology():
        local = _segment_distance_field(np.asarray(dims), points[a], points[b], radii[a], radii[b])
        if local is None:
            continue
        sl, dist, radius = local
        mask[sl] |= dist <= radius
    return mask


def _boundary_shell(mask: np.ndarray) -> np.ndarray:
    """Voxels of ``mask`` with at least one 6-neighbour outside it."""
    shell = np.zeros_like(mask)
    for axis in range(3):
        for shift in (1, -1):
            rolled = np.ones_like(mask)
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            if shift == 1:
                src[axis] = slice(1, None)
                dst[axis] = slice(None, -1)
            else:
                src[axis] = slice(None, -1)
                dst[axis] = slice(1, None)
            rolled[tuple(dst)] = mask[tuple(src)]
            # faces at the volume border count as outside
            edge = [slice(None)] * 3
            edge[axis] = slice(-1, None) if shift == 1 else slice(0, 1)
            rolled[tuple(edge)] = False
            shell |= mask & ~rolled
    return shell


def generate_phantom(spec: PhantomSpec, dims, spacing=(1.0, 1.0, 1.0)):
    """Render a phantom volume and its ground truth.

    Returns ``(Volume3D, GroundTruth)``.  Intensity is ``foreground`` on the
    structure (distance to centerline <= local radius, or inside a blob) and
    ``background`` elsewhere, plus N(0, sigma^2) noise from the seeded
    generator.
    """
    dims = tuple(int(n) for n in dims)
    if len(dims) != 3 or any(n <= 0 for n in dims):
        raise ValidationError(f"bad dims {dims}")
    points = np.asarray(spec.control_points, dtype=np.float64)
    upper = np.asarray(dims, dtype=np.float64) - 1.0
    if np.any(points < 0.0) or np.any(points > upper):
        bad = points[np.any((points < 0.0) | (points > upper), axis=1)][0]
        raise BoundsError(f"control point {tuple(bad)} outside volume bounds {dims}")

    mask = _structure_mask(spec, dims)
    base = np.where(mask, np.float32(spec.foreground), np.float32(spec.background))
    if spec.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
        noise = rng.standard_normal(size=dims).astype(np.float32)
        base = base + np.float32(spec.noise_sigma) * noise

    label_map = np.zeros(dims, dtype=np.uint8)
    label_map[mask] = LABEL_INSIDE
    if spec.kind == "nested-blob":
        shell = _boundary_shell(mask)
        label_map[shell] = LABEL_MEMBRANE

    segments = spec.topology()
    components = _component_labels(len(points), segments)
    roots = tuple(
        int(np.flatnonzero(components == c)[0]) for c in range(components.max() + 1)
    )
    gt = GroundTruth(
        points=points,
        radii=np.asarray(spec.radii, dtype=np.float64),
        segments=segments,
        label_map=label_map,
        roots=roots,
        components=components,
        spacing=tuple(float(s) for s in spacing),
    )
    volume = Volume3D(dims=dims, spacing=spacing, data=base)
    return volume, gt
