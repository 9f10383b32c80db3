"""ASCII legacy VTK output of P1/P2 fields on a triangle mesh."""

import numpy as np

_TRIANGLE = 5


def write_vtk(path, mesh, point_vectors=None, point_scalars=None, title="aaipp fields"):
    """Write an UNSTRUCTURED_GRID file with per-vertex data.

    ``point_vectors`` and ``point_scalars`` map names to arrays of shape
    ``(n_vertices, 2)`` and ``(n_vertices,)``.  Values are written with
    ``repr`` so they read back exactly.
    """
    point_vectors = point_vectors or {}
    point_scalars = point_scalars or {}
    V = mesh.n_vertices
    for name, v in point_vectors.items():
        if np.shape(v) != (V, 2):
            raise ValueError(f"vector field {name!r} must have shape ({V}, 2)")
    for name, s in point_scalars.items():
        if np.shape(s) != (V,):
            raise ValueError(f"scalar field {name!r} must have shape ({V},)")

    lines = ["# vtk DataFile Version 2.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {V} double")
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.points.tolist()]
    F = mesh.n_triangles
    lines.append(f"CELLS {F} {4 * F}")
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles.tolist()]
    lines.append(f"CELL_TYPES {F}")
    lines += [str(_TRIANGLE)] * F
    if point_vectors or point_scalars:
        lines.append(f"POINT_DATA {V}")
    for name, v in point_vectors.items():
        lines.append(f"VECTORS {name} double")
        lines += [f"{a!r} {b!r} 0.0" for a, b in np.asarray(v, dtype=float).tolist()]
    for name, s in point_scalars.items():
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [repr(x) for x in np.asarray(s, dtype=float).tolist()]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_vtk(path):
    """Parse a file written by :func:`write_vtk`.

    Returns ``(points, triangles, vectors, scalars)``.
    """
    with open(path) as fh:
        tokens = fh.read().split("\n")
    it = iter(tokens[4:])
    points = triangles = None
    vectors, scalars = {}, {}
    for line in it:
        head = line.split()
        if not head:
            continue
        if head[0] == "POINTS":
            n = int(head[1])
            points = np.array([[float(t) for t in next(it).split()[:2]] for _ in range(n)])
        elif head[0] == "CELLS":
            n = int(head[1])
            triangles = np.array([[int(t) for t in next(it).split()[1:]] for _ in range(n)])
        elif head[0] == "CELL_TYPES":
            for _ in range(int(head[1])):
                next(it)
        elif head[0] == "VECTORS":
            vectors[head[1]] = np.array([[float(t) for t in next(it).split()[:2]] for _ in range(len(points))])
        elif head[0] == "SCALARS":
            next(it)
            scalars[head[1]] = np.array([float(next(it)) for _ in range(len(points))])
    return points, triangles, vectors, scalars


def vertex_velocity(space, u):
    """P2 velocity coefficients restricted to the mesh vertices, shape (V, 2)."""
    return np.asarray(u, dtype=float).reshape(-1, 2)[: space.n_vertices]


__all__ = ["read_vtk", "vertex_velocity", "write_vtk"]
