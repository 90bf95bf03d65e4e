"""Polygonal meshes of the unit square.

A :class:`PolyMesh` stores vertex coordinates, counterclockwise element
loops and the derived edge connectivity.  Three structured families are
provided (randomised quadrilaterals, remapped hexagonal duals and non-convex
octagons), together with element geometry, a regularity audit and a plain
text exchange format.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

BOUNDARY = -1

FAMILIES = ("m1", "m2", "m3")


class MeshError(ValueError):
    """Raised for inconsistent or degenerate mesh input."""


@dataclass(frozen=True)
class ElementGeometry:
    """Geometric data of a single polygon.

    Edge arrays follow the element loop: edge ``i`` joins local vertex ``i``
    to local vertex ``i + 1``.
    """

    centroid: np.ndarray
    diameter: float
    area: float
    edge_lengths: np.ndarray
    edge_midpoints: np.ndarray
    normals: np.ndarray


@dataclass(frozen=True)
class MeshQualityReport:
    min_edge_ratio: float
    star_shaped: np.ndarray
    h: float
    star_ratio: np.ndarray = field(repr=False)

    @property
    def all_star_shaped(self) -> bool:
        return bool(np.all(self.star_shaped))


def polygon_geometry(coords) -> ElementGeometry:
    """Area, centroid, diameter and edge data of a polygon.

    Parameters
    ----------
    coords : (n, 2) array_like
        Vertices in counterclockwise order.

    Raises
    ------
    MeshError
        If the signed area is not positive.
    """
    p = np.asarray(coords, dtype=float)
    q = np.roll(p, -1, axis=0)
    cross = p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]
    area = 0.5 * cross.sum()
    if not area > 0.0:
        raise MeshError(f"polygon has non-positive signed area {area:.3e}")
    cx = ((p[:, 0] + q[:, 0]) * cross).sum() / (6.0 * area)
    cy = ((p[:, 1] + q[:, 1]) * cross).sum() / (6.0 * area)
    diff = p[:, None, :] - p[None, :, :]
    diameter = float(np.sqrt((diff**2).sum(axis=-1)).max())
    t = q - p
    lengths = np.hypot(t[:, 0], t[:, 1])
    normals = np.column_stack([t[:, 1], -t[:, 0]]) / lengths[:, None]
    return ElementGeometry(
        centroid=np.array([cx, cy]),
        diameter=diameter,
        area=float(area),
        edge_lengths=lengths,
        edge_midpoints=0.5 * (p + q),
        normals=normals,
    )


def _segments_cross(a, b, c, d) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1, d2 = orient(c, d, a), orient(c, d, b)
    d3, d4 = orient(a, b, c), orient(a, b, d)
    return d1 * d2 < 0 and d3 * d4 < 0


def is_simple(coords) -> bool:
    """True if no two non-adjacent edges of the polygon intersect."""
    p = np.asarray(coords, dtype=float)
    n = len(p)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]):
                return False
    return True


class PolyMesh:
    """Conforming polygonal mesh.

    Parameters
    ----------
    vertices : (nv, 2) array_like
    elements : sequence of integer sequences
        Counterclockwise vertex loops.
    edges : (ne, 2) array_like, optional
        Edge list to adopt (and validate) instead of deriving one.  Derived
        edges are numbered in order of first appearance while traversing the
        element loops; each edge is stored as ``(low, high)`` vertex index.

    Attributes
    ----------
    edge_elements : (ne, 2) int array
        Left and right element of every edge; the second column holds
        ``BOUNDARY`` for boundary edges.
    element_edges : list of int arrays
        Global edge index of every local edge of every element.
    """

    def __init__(self, vertices, elements, edges=None):
        self.vertices = np.array(vertices, dtype=float)
        self.elements = [np.array(e, dtype=np.int64) for e in elements]
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (nv, 2) array")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("vertex coordinates must be finite")
        self._build_edges(edges)
        self.vertices.setflags(write=False)
        self.edges.setflags(write=False)

    def _build_edges(self, edges):
        nv = len(self.vertices)
        lookup = {}
        edge_list = []
        if edges is not None:
            for i, (a, b) in enumerate(np.asarray(edges, dtype=np.int64)):
                key = (min(a, b), max(a, b))
                if key in lookup:
                    raise MeshError(f"duplicate edge {key}")
                lookup[key] = i
                edge_list.append(key)
        owners: list[list[int]] = [[] for _ in edge_list]
        element_edges = []
        for ie, loop in enumerate(self.elements):
            if len(loop) < 3 or loop.min() < 0 or loop.max() >= nv:
                raise MeshError(f"element {ie} has an invalid vertex loop")
            local = np.empty(len(loop), dtype=np.int64)
            for i, a in enumerate(loop):
                b = loop[(i + 1) % len(loop)]
                key = (min(a, b), max(a, b))
                if key not in lookup:
                    if edges is not None:
                        raise MeshError(f"element {ie} uses unlisted edge {key}")
                    lookup[key] = len(edge_list)
                    edge_list.append(key)
                    owners.append([])
                owners[lookup[key]].append(ie)
                local[i] = lookup[key]
            element_edges.append(local)
        edge_elements = np.full((len(edge_list), 2), BOUNDARY, dtype=np.int64)
        for i, own in enumerate(owners):
            if not 1 <= len(own) <= 2:
                raise MeshError(f"edge {edge_list[i]} is shared by {len(own)} elements")
            edge_elements[i, : len(own)] = own
        self.edges = np.array(edge_list, dtype=np.int64).reshape(-1, 2)
        self.edge_elements = edge_elements
        self.element_edges = element_edges
        self.boundary_edge = edge_elements[:, 1] == BOUNDARY
        self.boundary_vertex = np.zeros(nv, dtype=bool)
        self.boundary_vertex[self.edges[self.boundary_edge].ravel()] = True

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    @property
    def counts(self) -> tuple[int, int, int]:
        """(elements, edges, vertices), the order used in mesh tables."""
        return self.n_elements, self.n_edges, self.n_vertices

    def element_coords(self, e: int) -> np.ndarray:
        return self.vertices[self.elements[e]]

    def geometry(self, e: int) -> ElementGeometry:
        return element_geometry(self, e)

    @property
    def h(self) -> float:
        return max(element_geometry(self, e).diameter for e in range(self.n_elements))

    def __repr__(self):
        return (f"PolyMesh(n_elements={self.n_elements}, n_edges={self.n_edges}, "
                f"n_vertices={self.n_vertices})")


def element_geometry(mesh: PolyMesh, e: int) -> ElementGeometry:
    """Geometry of element ``e``; see :func:`polygon_geometry`."""
    if not 0 <= e < mesh.n_elements:
        raise IndexError(f"element index {e} out of range")
    return polygon_geometry(mesh.element_coords(e))


def audit_quality(mesh: PolyMesh) -> MeshQualityReport:
    """Regularity indicators of a mesh.

    The smallest edge-to-diameter ratio over all elements, the global mesh
    size and, per element, whether the polygon is star-shaped with respect
    to its centroid.  The star ratio is the distance from the centroid to
    the nearest edge line divided by the diameter (zero or negative when
    the centroid test fails).  Nothing here raises on a poor mesh.
    """
    ratios = []
    star = np.zeros(mesh.n_elements, dtype=bool)
    star_ratio = np.zeros(mesh.n_elements)
    h = 0.0
    for e in range(mesh.n_elements):
        g = element_geometry(mesh, e)
        p = mesh.element_coords(e)
        ratios.append(g.edge_lengths.min() / g.diameter)
        dist = ((g.centroid - p) * g.normals).sum(axis=1)
        # signed distance from the centroid to each edge line, positive inside
        dist = -dist
        star[e] = bool(np.all(dist > 0.0))
        star_ratio[e] = dist.min() / g.diameter
        h = max(h, g.diameter)
    return MeshQualityReport(
        min_edge_ratio=float(min(ratios)), star_shaped=star, h=h, star_ratio=star_ratio
    )


# -- generators ------------------------------------------------------------


def _grid_index(n):
    return lambda i, j: j * (n + 1) + i


def generate_m1(n: int, perturbation_fraction: float = 0.8, seed: int = 0) -> PolyMesh:
    """Randomised quadrilaterals.

    An ``n x n`` square grid whose interior nodes are moved to a uniformly
    random point of an axis-aligned box of side ``perturbation_fraction / n``
    centred at the node.  Random numbers come from numpy's PCG64 generator
    seeded with ``seed``, so the mesh is a pure function of the arguments.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    idx = _grid_index(n)
    g = np.arange(n + 1) / n
    xx, yy = np.meshgrid(g, g)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    interior = (xx.ravel() > 0) & (xx.ravel() < 1) & (yy.ravel() > 0) & (yy.ravel() < 1)
    rng = np.random.default_rng(seed)
    half = 0.5 * perturbation_fraction / n
    shift = rng.uniform(-half, half, size=(int(interior.sum()), 2))
    pts[interior] += shift
    elements = [
        [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]
        for j in range(n)
        for i in range(n)
    ]
    return PolyMesh(pts, elements)


def remap(x, y, amplitude: float = 0.1):
    """Smooth distortion of the unit square fixing its boundary."""
    s = amplitude * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
    return x + s, y + s


def generate_m2(n: int, diagonal: str = "ll-ur") -> PolyMesh:
    """Mainly hexagonal meshes dual to a remapped triangulation.

    The nodes of a uniform grid are remapped by :func:`remap`, each cell is
    split along its lower-left to upper-right diagonal (``"ll-ur"``) or the
    other one (``"lr-ul"``), and one polygon is formed around every primal
    node from the barycentres of the triangles touching it.  Near the
    boundary the polygon is closed with boundary-edge midpoints and the
    boundary node itself.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if diagonal not in ("ll-ur", "lr-ul"):
        raise ValueError(f"unknown diagonal {diagonal!r}")
    idx = _grid_index(n)
    g = np.arange(n + 1) / n
    xx, yy = np.meshgrid(g, g)
    px, py = remap(xx.ravel(), yy.ravel())
    primal = np.column_stack([px, py])
    n_nodes = (n + 1) ** 2

    triangles = []
    for j in range(n):
        for i in range(n):
            a, b, c, d = idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)
            if diagonal == "ll-ur":
                triangles += [(a, b, c), (a, c, d)]
            else:
                triangles += [(a, b, d), (b, c, d)]
    triangles = np.array(triangles)
    bary = primal[triangles].mean(axis=1)

    bedges = []
    for i in range(n):
        bedges += [(idx(i, 0), idx(i + 1, 0)), (idx(i, n), idx(i + 1, n))]
        bedges += [(idx(0, i), idx(0, i + 1)), (idx(n, i), idx(n, i + 1))]
    bedges = np.array(bedges)
    mids = primal[bedges].mean(axis=1)

    on_boundary = np.zeros(n_nodes, dtype=bool)
    on_boundary[bedges.ravel()] = True
    bnodes = np.flatnonzero(on_boundary)

    # dual vertex numbering: barycentres, boundary midpoints, boundary nodes
    n_tri, n_mid = len(triangles), len(bedges)
    node_slot = np.full(n_nodes, -1)
    node_slot[bnodes] = n_tri + n_mid + np.arange(len(bnodes))
    vertices = np.vstack([bary, mids, primal[bnodes]])

    incident: list[list[int]] = [[] for _ in range(n_nodes)]
    for t, tri in enumerate(triangles):
        for v in tri:
            incident[v].append(t)
    for s, (a, b) in enumerate(bedges):
        incident[a].append(n_tri + s)
        incident[b].append(n_tri + s)

    elements = []
    for v in range(n_nodes):
        ids = np.array(incident[v])
        d = vertices[ids] - primal[v]
        if on_boundary[v]:
            ix, iy = v % (n + 1), v // (n + 1)
            inward = np.array([
                (ix == 0) - (ix == n),
                (iy == 0) - (iy == n),
            ], dtype=float)
            inward /= np.linalg.norm(inward)
            ang = np.arctan2(inward[0] * d[:, 1] - inward[1] * d[:, 0], d @ inward)
            loop = list(ids[np.argsort(ang)]) + [node_slot[v]]
        else:
            loop = list(ids[np.argsort(np.arctan2(d[:, 1], d[:, 0]))])
        elements.append(loop)
    return PolyMesh(vertices, elements)


def generate_m3(n: int, indent_fraction: float = 0.366) -> PolyMesh:
    """Non-convex octagons.

    Every square cell of an ``n x n`` grid gets its four edge midpoints as
    extra vertices.  Interior midpoints of horizontal edges move by
    ``indent_fraction / n`` towards ``+y`` and those of vertical edges
    towards ``+x``, so each one dents one cell and bulges its neighbour.
    Midpoints on the boundary of the square stay put.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0.0 < indent_fraction < 0.5:
        raise ValueError("indent_fraction must lie in (0, 0.5)")
    delta = indent_fraction / n
    nn = (n + 1) ** 2
    g = np.arange(n + 1) / n
    xx, yy = np.meshgrid(g, g)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    # horizontal-edge midpoints (i + 1/2, j): n per row, n + 1 rows
    hi, hj = np.meshgrid(np.arange(n), np.arange(n + 1))
    hmid = np.column_stack([(hi.ravel() + 0.5) / n, hj.ravel() / n])
    hmid[(hj.ravel() > 0) & (hj.ravel() < n), 1] += delta
    # vertical-edge midpoints (i, j + 1/2): n + 1 per row, n rows
    vi, vj = np.meshgrid(np.arange(n + 1), np.arange(n))
    vmid = np.column_stack([vi.ravel() / n, (vj.ravel() + 0.5) / n])
    vmid[(vi.ravel() > 0) & (vi.ravel() < n), 0] += delta

    node = _grid_index(n)

    def h(i, j):
        return nn + j * n + i

    def v(i, j):
        return nn + n * (n + 1) + j * (n + 1) + i

    vertices = np.vstack([nodes, hmid, vmid])
    elements = []
    for j in range(n):
        for i in range(n):
            elements.append([
                node(i, j), h(i, j), node(i + 1, j), v(i + 1, j),
                node(i + 1, j + 1), h(i, j + 1), node(i, j + 1), v(i, j),
            ])
    mesh = PolyMesh(vertices, elements)
    for e in range(mesh.n_elements):
        coords = mesh.element_coords(e)
        if not is_simple(coords):
            raise MeshError(f"indent_fraction={indent_fraction} makes element {e} self-intersect")
        polygon_geometry(coords)
    return mesh


def level_resolution(level: int) -> int:
    """Grid resolution of a refinement level: 5, 10, 20, 40, 80 for levels 1..5."""
    if level < 1:
        raise ValueError("levels start at 1")
    return 5 * 2 ** (level - 1)


def mesh_family(family: str, level: int, seed: int = 0, **kwargs) -> PolyMesh:
    """Mesh of ``family`` ("m1", "m2" or "m3") at refinement ``level``."""
    n = level_resolution(level)
    family = family.lower()
    if family == "m1":
        return generate_m1(n, seed=seed, **kwargs)
    if family == "m2":
        return generate_m2(n, **kwargs)
    if family == "m3":
        return generate_m3(n, **kwargs)
    raise ValueError(f"unknown mesh family {family!r}; expected one of {FAMILIES}")


# -- text format -------------------------------------------------------------


def write_mesh(mesh: PolyMesh, path) -> None:
    """Write ``mesh`` in the plain text format.

    Header ``nv ne nel``, then one ``x y`` line per vertex (17 significant
    digits), one ``v0 v1`` line per edge and one ``count v0 ... v(count-1)``
    line per element.  Indices are 0-based.
    """
    lines = [f"{mesh.n_vertices} {mesh.n_edges} {mesh.n_elements}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{a} {b}" for a, b in mesh.edges]
    lines += [" ".join(map(str, [len(el), *el])) for el in mesh.elements]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> PolyMesh:
    """Inverse of :func:`write_mesh`."""
    tokens = Path(path).read_text().split()
    try:
        nv, ne, nel = (int(t) for t in tokens[:3])
        pos = 3
        vertices = np.array(tokens[pos:pos + 2 * nv], dtype=float).reshape(nv, 2)
        pos += 2 * nv
        edges = np.array(tokens[pos:pos + 2 * ne], dtype=np.int64).reshape(ne, 2)
        pos += 2 * ne
        elements = []
        for _ in range(nel):
            count = int(tokens[pos])
            elements.append([int(t) for t in tokens[pos + 1:pos + 1 + count]])
            pos += 1 + count
    except (ValueError, IndexError) as exc:
        raise MeshError(f"malformed mesh file {path}: {exc}") from exc
    if pos != len(tokens):
        raise MeshError(f"trailing data in mesh file {path}")
    mesh = PolyMesh(vertices, elements, edges=edges)
    if mesh.n_edges != ne:
        raise MeshError(f"mesh file lists {ne} edges but elements use {mesh.n_edges}")
    return mesh
