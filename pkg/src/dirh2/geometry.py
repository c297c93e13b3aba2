"""Unit-sphere triangle meshes and Helmholtz layer-potential kernels.

The dense matrix built here is the reference object every approximation in
this package is measured against.  It uses a one-point midpoint rule per
triangle, so entries are cheap and fully reproducible; the diagonal uses an
equivalent-disk rule for the single layer and a flat-panel limit for the
double layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "SurfaceMesh",
    "KernelSpec",
    "build_sphere_mesh",
    "kernel_value",
    "directional_kernel_value",
    "assemble_dense_matrix",
    "dense_block",
    "mesh_to_off",
    "write_off",
]

_OCTAHEDRON_VERTICES = np.array(
    [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
)

# Faces of {|x|+|y|+|z|=1}, ordered counter-clockwise seen from outside.
_OCTAHEDRON_FACES = [
    (0, 2, 4),
    (2, 1, 4),
    (1, 3, 4),
    (3, 0, 4),
    (2, 0, 5),
    (1, 2, 5),
    (3, 1, 5),
    (0, 3, 5),
]


@dataclass
class SurfaceMesh:
    vertices: np.ndarray  # (nv, 3), all on the unit sphere
    triangles: np.ndarray  # (nt, 3) vertex indices
    midpoints: np.ndarray = field(init=False)
    areas: np.ndarray = field(init=False)
    normals: np.ndarray = field(init=False)
    support_radii: np.ndarray = field(init=False)  # max midpoint-to-vertex distance

    def __post_init__(self):
        corners = self.vertices[self.triangles]  # (nt, 3, 3)
        self.midpoints = corners.mean(axis=1)
        cross = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        norms = np.linalg.norm(cross, axis=1)
        self.areas = 0.5 * norms
        self.normals = cross / norms[:, None]
        self.support_radii = np.linalg.norm(
            corners - self.midpoints[:, None, :], axis=2
        ).max(axis=1)

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]


@dataclass(frozen=True)
class KernelSpec:
    """kind is 'slp' or 'dlp'; 'dlp' means the combined operator M/2 + DLP."""

    kind: str
    kappa: float

    def __post_init__(self):
        if self.kind not in ("slp", "dlp"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not np.isfinite(self.kappa) or self.kappa < 0.0:
            raise ValueError("wave number must be finite and >= 0")


def build_sphere_mesh(level: int) -> SurfaceMesh:
    """Octahedron refined ``level`` times by midpoint subdivision, vertices
    shifted to the unit sphere.  Yields 8 * 4**level triangles.

    Faces are refined depth-first with children ordered
    (corner0, corner1, corner2, center), which fixes the triangle indexing.
    """
    if level < 0 or level > 8:
        raise ValueError("level must be in 0..8")

    vertex_index: dict[tuple, int] = {}
    vertices: list[tuple] = []
    triangles: list[tuple[int, int, int]] = []

    def intern(p) -> int:
        key = (p[0], p[1], p[2])
        idx = vertex_index.get(key)
        if idx is None:
            idx = len(vertices)
            vertex_index[key] = idx
            vertices.append(key)
        return idx

    def refine(a, b, c, depth):
        if depth == 0:
            triangles.append((intern(a), intern(b), intern(c)))
            return
        ab = (a + b) / 2.0
        bc = (b + c) / 2.0
        ac = (a + c) / 2.0
        refine(a, ab, ac, depth - 1)
        refine(ab, b, bc, depth - 1)
        refine(ac, bc, c, depth - 1)
        refine(ab, bc, ac, depth - 1)

    for i, j, k in _OCTAHEDRON_FACES:
        refine(
            _OCTAHEDRON_VERTICES[i],
            _OCTAHEDRON_VERTICES[j],
            _OCTAHEDRON_VERTICES[k],
            level,
        )

    verts = np.array(vertices)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    return SurfaceMesh(vertices=verts, triangles=np.array(triangles, dtype=np.int64))


def kernel_value(spec: KernelSpec, x, y, normal_y=None) -> complex:
    """Point evaluation of the kernel.  Raises on the singular point x == y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise ValueError("kernel is singular at x == y")
    kappa = spec.kappa
    slp = np.exp(1j * kappa * r) / (4.0 * np.pi * r)
    if spec.kind == "slp":
        return complex(slp)
    if normal_y is None:
        raise ValueError("dlp kernel needs the normal at y")
    return complex((1.0 - 1j * kappa * r) * slp / r**2 * float(d @ np.asarray(normal_y)))


def directional_kernel_value(spec: KernelSpec, c, x, y) -> complex:
    """Plane-wave-modulated kernel exp(i kappa (r - <x-y, c>)) / (4 pi r).

    For c = 0 this coincides with the single-layer kernel value.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = float(np.linalg.norm(d))
    if r == 0.0:
        raise ValueError("kernel is singular at x == y")
    phase = spec.kappa * (r - float(d @ np.asarray(c, dtype=float)))
    return complex(np.exp(1j * phase) / (4.0 * np.pi * r))


def _slp_diagonal(areas: np.ndarray) -> np.ndarray:
    # Equivalent-disk self term of the weak singularity.
    return areas**1.5 / (2.0 * np.sqrt(np.pi))


def dense_block(mesh: SurfaceMesh, spec: KernelSpec, rows, cols) -> np.ndarray:
    """Galerkin-surrogate entries for the index sets rows x cols.

    Off-diagonal: kernel(midpoint_i, midpoint_j) * area_i * area_j.
    Diagonal: the fixed self-term rules (slp) / flat-panel zero plus the
    lumped mass term (dlp).
    """
    rows = np.asarray(rows, dtype=np.intp)
    cols = np.asarray(cols, dtype=np.intp)
    xm = mesh.midpoints[rows]
    ym = mesh.midpoints[cols]
    d = xm[:, None, :] - ym[None, :, :]
    r = np.linalg.norm(d, axis=2)
    same = rows[:, None] == cols[None, :]
    r_safe = np.where(same, 1.0, r)
    kappa = spec.kappa
    g = np.exp(1j * kappa * r_safe) / (4.0 * np.pi * r_safe)
    if spec.kind == "dlp":
        dn = np.einsum("ijk,jk->ij", d, mesh.normals[cols])
        g = (1.0 - 1j * kappa * r_safe) * g / r_safe**2 * dn
    block = g * mesh.areas[rows][:, None] * mesh.areas[cols][None, :]
    if same.any():
        if spec.kind == "slp":
            diag = _slp_diagonal(mesh.areas[rows])
        else:
            diag = 0.5 * mesh.areas[rows]  # G_dlp self term is 0, M/2 remains
        block[same] = np.broadcast_to(diag[:, None], block.shape)[same]
    return block


def assemble_dense_matrix(mesh: SurfaceMesh, spec: KernelSpec, chunk: int = 512) -> np.ndarray:
    """Full n-by-n surrogate matrix, assembled in row chunks."""
    n = mesh.n_triangles
    out = np.empty((n, n), dtype=np.complex128)
    cols = np.arange(n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        out[start:stop] = dense_block(mesh, spec, np.arange(start, stop), cols)
    return out


def mesh_to_off(mesh: SurfaceMesh) -> str:
    """Plain-text dump: counts, vertex coordinates, triangle index triples."""
    lines = [f"{len(mesh.vertices)} {mesh.n_triangles}"]
    for v in mesh.vertices:
        lines.append(f"{v[0]!r} {v[1]!r} {v[2]!r}")
    for t in mesh.triangles:
        lines.append(f"{t[0]} {t[1]} {t[2]}")
    return "\n".join(lines) + "\n"


def write_off(mesh: SurfaceMesh, path: str | Path) -> None:
    Path(path).write_text(mesh_to_off(mesh))
