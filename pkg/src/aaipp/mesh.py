"""Triangulations of the unit square."""

import enum
from dataclasses import dataclass, field, replace

import numpy as np


class BoundaryTag(enum.IntEnum):
    NONE = 0
    WALL = 1
    LID = 2


@dataclass(frozen=True)
class TriMesh:
    """Conforming triangle mesh.

    Attributes
    ----------
    points : (V, 2) float array
    triangles : (F, 3) int array, counterclockwise
    boundary_edges : (B, 2) int array of vertex pairs
    boundary_tags : (B,) int array of :class:`BoundaryTag` values
    """

    points: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.boundary_tags is None:
            object.__setattr__(
                self, "boundary_tags", np.full(len(self.boundary_edges), BoundaryTag.NONE, dtype=np.int64)
            )

    @property
    def n_vertices(self):
        return len(self.points)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def signed_areas(self):
        p = self.points[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self):
        """Unique edges as sorted vertex pairs, lexicographically ordered."""
        return np.unique(np.sort(self._local_edges().reshape(-1, 2), axis=1), axis=0)

    def _local_edges(self):
        # local edge i joins local vertices (i, i+1 mod 3)
        t = self.triangles
        return np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1)

    def edge_multiplicity(self):
        """Map each unique edge to the number of triangles containing it."""
        e = np.sort(self._local_edges().reshape(-1, 2), axis=1)
        edges, counts = np.unique(e, axis=0, return_counts=True)
        return edges, counts

    def mesh_width(self):
        """Longest edge length (sqrt(2)/n on the structured mesh)."""
        p = self.points[self._local_edges()]
        return float(np.max(np.linalg.norm(p[:, :, 1] - p[:, :, 0], axis=-1)))


def structured_unit_square(n):
    """Uniform ``n x n`` grid of the unit square, each cell cut along its
    bottom-left to top-right diagonal."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(x, x)
    points = np.column_stack([X.ravel(), Y.ravel()])

    i, j = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (j * (n + 1) + i).ravel()
    v10, v01 = v00 + 1, v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)

    k = np.arange(n)
    bottom = np.column_stack([k, k + 1])
    top = np.column_stack([n * (n + 1) + k, n * (n + 1) + k + 1])
    left = np.column_stack([k * (n + 1), (k + 1) * (n + 1)])
    right = left + n
    boundary = np.vstack([bottom, right, top, left])
    return TriMesh(points, triangles.astype(np.int64), boundary.astype(np.int64))


def barycentric_refine(mesh):
    """Split every triangle into three around its barycenter.

    Barycenters are appended after the existing vertices, in triangle order.
    """
    t = mesh.triangles
    nv = mesh.n_vertices
    centers = mesh.points[t].mean(axis=1)
    g = nv + np.arange(len(t))
    new = np.stack(
        [
            np.column_stack([t[:, 0], t[:, 1], g]),
            np.column_stack([t[:, 1], t[:, 2], g]),
            np.column_stack([t[:, 2], t[:, 0], g]),
        ],
        axis=1,
    ).reshape(-1, 3)
    return TriMesh(
        np.vstack([mesh.points, centers]),
        new,
        mesh.boundary_edges.copy(),
        mesh.boundary_tags.copy(),
    )


def tag_cavity_boundary(mesh, atol=1e-12):
    """Tag top edges (y = 1) as LID and the remaining boundary as WALL."""
    p = mesh.points[mesh.boundary_edges]
    on_frame = (
        (np.abs(p[..., 0]) < atol)
        | (np.abs(p[..., 0] - 1.0) < atol)
        | (np.abs(p[..., 1]) < atol)
        | (np.abs(p[..., 1] - 1.0) < atol)
    )
    if not np.all(on_frame):
        raise ValueError("boundary vertex off the unit-square frame")
    lid = np.all(np.abs(p[..., 1] - 1.0) < atol, axis=1)
    tags = np.where(lid, BoundaryTag.LID, BoundaryTag.WALL).astype(np.int64)
    return replace(mesh, boundary_tags=tags)


def cavity_mesh(n, barycentric=True):
    mesh = structured_unit_square(n)
    if barycentric:
        mesh = barycentric_refine(mesh)
    return tag_cavity_boundary(mesh)
