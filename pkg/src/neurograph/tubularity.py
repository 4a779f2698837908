"""Multiscale tubularity (vesselness) fields and seed extraction.

For every voxel and every scale the volume is Gaussian-smoothed (separable
kernel, truncated at 4 sigma, reflective boundaries), the 3x3 Hessian of the
smoothed intensity is formed in physical coordinates and scale-normalized by
sigma^2, and its eigenvalues (ordered |l1| <= |l2| <= |l3|) are combined into
the Frangi vesselness

    V = (1 - exp(-Ra^2 / 2a^2)) * exp(-Rb^2 / 2b^2) * (1 - exp(-S^2 / 2c^2))

with a = b = 0.5, Ra = |l2|/|l3|, Rb = |l1|/sqrt(|l2 l3|), S the Frobenius
norm, c = half the maximum S at that scale, and V = 0 wherever l2 > 0 or
l3 > 0 (bright structures on dark background).  The principal orientation is
the eigenvector of the smallest-|.| eigenvalue at the best scale.

Scales (``radii``) are expressed in voxels of the finest axis; on anisotropic
volumes the per-axis smoothing sigma in voxels is radius * min(spacing) /
spacing_axis, i.e. constant physical width.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ValidationError
from .volume import Volume3D, read_array, save_array

FRANGI_ALPHA = 0.5
FRANGI_BETA = 0.5
_CANONICAL_AXIS = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class SeedPoint:
    """High-tubularity sample: physical position, scale, score, orientation."""

    position: tuple
    radius: float
    score: float
    orientation: tuple
    index: tuple  # voxel index the seed was taken from


@dataclass
class TubularityField:
    """4D (x, y, z, scale) tubularity plus per-voxel best-scale orientation."""

    dims: tuple
    spacing: tuple
    radii: tuple
    values: np.ndarray = field(repr=False)
    orientation: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.radii = tuple(float(r) for r in self.radii)
        if len(self.radii) == 0:
            raise ValidationError("at least one radius is required")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValidationError("radii must be strictly increasing")
        if self.values.shape != tuple(self.dims) + (len(self.radii),):
            raise ValidationError("values must be shaped dims + (n_radii,)")
        if self.orientation.shape != tuple(self.dims) + (3,):
            raise ValidationError("orientation must be shaped dims + (3,)")

    def best_scores(self) -> np.ndarray:
        """Per-voxel maximum over scales."""
        return self.values.max(axis=3)

    def best_scale_index(self) -> np.ndarray:
        return self.values.argmax(axis=3)

    def best_radii(self) -> np.ndarray:
        return np.asarray(self.radii)[self.best_scale_index()]


def symmetric_eigvals_3x3(a, b, c, d, e, f):
    """Eigenvalues of [[a, d, e], [d, b, f], [e, f, c]] in |.|-ascending order.

    All inputs are broadcastable arrays; the closed-form trigonometric method
    is used, so the call is vectorized and allocation-bound.
    """
    a, b, c, d, e, f = np.broadcast_arrays(
        *(np.asarray(v, dtype=np.float64) for v in (a, b, c, d, e, f))
    )
    p1 = d * d + e * e + f * f
    q = (a + b + c) / 3.0
    p2 = (a - q) ** 2 + (b - q) ** 2 + (c - q) ** 2 + 2.0 * p1
    p = np.sqrt(np.maximum(p2, 0.0) / 6.0)
    safe_p = np.where(p > 0, p, 1.0)
    B00, B11, B22 = (a - q) / safe_p, (b - q) / safe_p, (c - q) / safe_p
    Bd, Be, Bf = d / safe_p, e / safe_p, f / safe_p
    detB = (
        B00 * (B11 * B22 - Bf * Bf)
        - Bd * (Bd * B22 - Bf * Be)
        + Be * (Bd * Bf - B11 * Be)
    )
    r = np.clip(detB / 2.0, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    big = q + 2.0 * p * np.cos(phi)
    small = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
    mid = 3.0 * q - big - small
    lam = np.stack([big, mid, small], axis=-1)
    lam = np.where(p[..., None] > 0, lam, np.stack([q, q, q], axis=-1))
    order = np.argsort(np.abs(lam), axis=-1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=-1)
    return lam[..., 0], lam[..., 1], lam[..., 2]


def _null_eigenvector(a, b, c, d, e, f, lam):
    """Unit eigenvector for eigenvalue ``lam`` of the symmetric matrices.

    Uses the largest cross product of rows of (H - lam I); degenerate voxels
    (near-isotropic Hessian) fall back to the canonical +z axis.  The sign is
    canonicalized so the largest-magnitude component is positive.
    """
    r0 = np.stack([a - lam, d, e], axis=-1)
    r1 = np.stack([d, b - lam, f], axis=-1)
    r2 = np.stack([e, f, c - lam], axis=-1)
    c0 = np.cross(r0, r1)
    c1 = np.cross(r0, r2)
    c2 = np.cross(r1, r2)
    cands = np.stack([c0, c1, c2], axis=-2)  # (..., 3 candidates, 3)
    norms = np.linalg.norm(cands, axis=-1)
    best = np.argmax(norms, axis=-1)
    vec = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
    norm = np.linalg.norm(vec, axis=-1, keepdims=True)
    scale = np.linalg.norm(np.stack([a, b, c, d, e, f], axis=-1), axis=-1, keepdims=True)
    degenerate = norm[..., 0] <= 1e-12 * np.maximum(scale[..., 0] ** 2, 1e-300)
    vec = np.where(degenerate[..., None], _CANONICAL_AXIS, vec / np.where(norm > 0, norm, 1.0))
    # deterministic sign: largest-|.| component made positive
    lead = np.take_along_axis(vec, np.argmax(np.abs(vec), axis=-1)[..., None], axis=-1)
    vec = vec * np.where(lead < 0, -1.0, 1.0)
    return vec


def hessian_at_scale(volume: Volume3D, radius: float):
    """Scale-normalized physical Hessian components (xx, yy, zz, xy, xz, yz)."""
    spacing = np.asarray(volume.spacing)
    s_ref = float(spacing.min())
    sigma_phys = radius * s_ref
    sigma_vox = sigma_phys / spacing
    support = 2 * np.ceil(4.0 * sigma_vox).astype(int) + 1
    if np.any(support > np.asarray(volume.dims)):
        raise ValidationError(
            f"volume dims {volume.dims} smaller than kernel support {tuple(support)} "
            f"at radius {radius}"
        )
    data = volume.data.astype(np.float64)
    pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]
    out = []
    gamma = sigma_phys * sigma_phys
    for ax_a, ax_b in pairs:
        order = [0, 0, 0]
        order[ax_a] += 1
        order[ax_b] += 1
        h = gaussian_filter(data, sigma=sigma_vox, order=order, mode="reflect", truncate=4.0)
        h /= spacing[ax_a] * spacing[ax_b]
        out.append(h * gamma)
    return out


def frangi_response(hxx, hyy, hzz, hxy, hxz, hyz):
    """Frangi vesselness in [0, 1] for one scale, plus the l1 eigenvalue array."""
    l1, l2, l3 = symmetric_eigvals_3x3(hxx, hyy, hzz, hxy, hxz, hyz)
    S2 = l1 * l1 + l2 * l2 + l3 * l3
    s_max = float(np.sqrt(S2.max())) if S2.size else 0.0
    if s_max <= 0.0:
        return np.zeros_like(l1), l1
    c = 0.5 * s_max
    a2, b2 = 2.0 * FRANGI_ALPHA ** 2, 2.0 * FRANGI_BETA ** 2
    abs2, abs3 = np.abs(l2), np.abs(l3)
    safe3 = np.where(abs3 > 0, abs3, 1.0)
    ra2 = (abs2 / safe3) ** 2
    safe23 = np.where(abs2 * abs3 > 0, abs2 * abs3, 1.0)
    rb2 = (l1 * l1) / safe23
    v = (1.0 - np.exp(-ra2 / a2)) * np.exp(-rb2 / b2) * (1.0 - np.exp(-S2 / (2.0 * c * c)))
    v = np.where((l2 < 0) & (l3 < 0), v, 0.0)
    return np.clip(v, 0.0, 1.0), l1


def compute_tubularity(volume: Volume3D, radii) -> TubularityField:
    """4D scale-space tubularity of ``volume`` over the given radii (voxels)."""
    radii = tuple(float(r) for r in radii)
    if len(radii) == 0:
        raise ValidationError("radii must be nonempty")
    if any(r < 0.5 for r in radii):
        raise ValidationError("radii must be >= 0.5 voxel")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValidationError("radii must be strictly increasing")

    dims = volume.dims
    values = np.zeros(dims + (len(radii),), dtype=np.float32)
    best = np.full(dims, -1.0, dtype=np.float64)
    orient = np.broadcast_to(
        _CANONICAL_AXIS.astype(np.float32), dims + (3,)
    ).copy()
    for k, radius in enumerate(radii):
        hxx, hyy, hzz, hxy, hxz, hyz = hessian_at_scale(volume, radius)
        v, l1 = frangi_response(hxx, hyy, hzz, hxy, hxz, hyz)
        values[..., k] = v.astype(np.float32)
        improved = v > best
        if np.any(improved):
            vec = _null_eigenvector(
                hxx[improved], hyy[improved], hzz[improved],
                hxy[improved], hxz[improved], hyz[improved],
                l1[improved],
            )
            orient[improved] = vec.astype(np.float32)
            best[improved] = v[improved]
    return TubularityField(
        dims=dims, spacing=volume.spacing, radii=radii, values=values, orientation=orient
    )


def select_seeds(fieldobj: TubularityField, spacing: float, threshold: float):
    """Greedy non-maximum suppression of high-tubularity voxels.

    Candidates with score >= threshold are visited in (score desc, linear
    index asc) order; a candidate is accepted iff no previously accepted seed
    lies within physical distance ``spacing``.
    """
    if spacing <= 0:
        raise ValidationError("seed spacing must be > 0")
    if not (0.0 < threshold < 1.0):
        raise ValidationError("seed threshold must lie in (0, 1)")
    scores = fieldobj.best_scores()
    nx, ny, nz = fieldobj.dims
    mask = scores >= threshold
    if not np.any(mask):
        return []
    idx = np.argwhere(mask)
    sc = scores[mask]
    linear = idx[:, 0] + nx * (idx[:, 1] + ny * idx[:, 2])
    order = np.lexsort((linear, -sc))
    idx = idx[order]
    sc = sc[order]

    vox_spacing = np.asarray(fieldobj.spacing)
    pos = idx * vox_spacing
    cell = spacing
    grid = {}
    accepted = []
    best_radii = fieldobj.best_radii()
    s_ref = float(vox_spacing.min())
    for k in range(len(idx)):
        p = pos[k]
        key = tuple((p // cell).astype(np.int64))
        ok = True
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                for dz in (-1, 0, 1):
                    for q in grid.get((key[0] + dx, key[1] + dy, key[2] + dz), ()):
                        if np.linalg.norm(p - q) < spacing:
                            ok = False
                            break
                    if not ok:
                        break
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            continue
        grid.setdefault(key, []).append(p)
        i, j, l = (int(v) for v in idx[k])
        accepted.append(
            SeedPoint(
                position=tuple(float(v) for v in p),
                radius=float(best_radii[i, j, l] * s_ref),
                score=float(sc[k]),
                orientation=tuple(float(v) for v in fieldobj.orientation[i, j, l]),
                index=(i, j, l),
            )
        )
    return accepted


def save_field(fieldobj: TubularityField, header_path) -> str:
    """Persist values (+radii header key) and orientation as raw volumes."""
    import os

    stem, ext = os.path.splitext(os.fspath(header_path))
    radii_txt = " ".join(repr(r) for r in fieldobj.radii)
    save_array(
        header_path, fieldobj.values, fieldobj.spacing,
        dtype="f32le", extra_header={"radii": radii_txt},
    )
    save_array(stem + ".orient" + (ext or ".hdr"), fieldobj.orientation,
               fieldobj.spacing, dtype="f32le")
    return os.fspath(header_path)


def load_field(header_path) -> TubularityField:
    import os

    values, spacing, header = read_array(header_path)
    if "radii" not in header:
        raise ValidationError("field header is missing its radii key")
    radii = tuple(float(tok) for tok in header["radii"].split())
    stem, ext = os.path.splitext(os.fspath(header_path))
    orient, _, _ = read_array(stem + ".orient" + (ext or ".hdr"))
    return TubularityField(
        dims=values.shape[:3], spacing=spacing, radii=radii,
        values=values, orientation=orient,
    )
