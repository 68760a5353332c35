"""Biperiodic planar lattices, rectangle regions, boundaries, sides, duals.

The square lattice is the reference implementation; ``Lattice`` is a
data-driven unit cell so that other biperiodic graphs can be described
without touching downstream modules. A region is the subgraph induced by
the edges with at least one endpoint in a rectangle; its boundary consists
of the vertices with a lattice neighbor outside the region's vertex set.

Side sets use a slab of thickness L (the maximal edge length, Chebyshev):
on the square lattice L = 1 and the slab degenerates to the exact side
line of the rectangle.
"""

from dataclasses import dataclass, field

import numpy as np

MAX_REGION_EDGES = 1 << 26

SIDE_TOP = "T"
SIDE_LEFT = "L"
SIDE_BOTTOM = "B"
SIDE_RIGHT = "R"


@dataclass(frozen=True)
class Lattice:
    """Unit-cell description of a biperiodic planar lattice.

    ``sites`` are vertex offsets inside the cell, ``bonds`` are edge
    templates ((site), (endpoint)) where the endpoint may live in a
    neighboring cell. Translations by multiples of ``cell`` map edges to
    edges by construction.
    """

    name: str
    cell: tuple = (1, 1)
    sites: tuple = (((0, 0)),)
    bonds: tuple = ()
    max_edge_length: int = 1
    rot90: bool = True
    reflect_x: bool = True
    reflect_y: bool = True

    def __post_init__(self):
        w, h = self.cell
        if w < 1 or h < 1:
            raise ValueError("cell periods must be positive")
        site_set = set(self.sites)
        if len(site_set) != len(self.sites):
            raise ValueError("duplicate sites in unit cell")
        for (u, v) in self.bonds:
            if (u[0] % w, u[1] % h) not in site_set and u not in site_set:
                raise ValueError(f"bond origin {u} is not a cell site")
            if not self.is_vertex(*v):
                raise ValueError(f"bond endpoint {v} is not a lattice vertex")
            if max(abs(v[0] - u[0]), abs(v[1] - u[1])) > self.max_edge_length:
                raise ValueError("bond longer than declared max_edge_length")
        if not self.is_vertex(0, 0):
            raise ValueError("0 must be a vertex of the lattice")

    def is_vertex(self, x, y):
        w, h = self.cell
        return (x % w, y % h) in set(self.sites)

    def neighbors(self, x, y):
        """All lattice neighbors of vertex (x, y), via bond templates."""
        w, h = self.cell
        out = []
        for (u, v) in self.bonds:
            # bond translated so its origin lands on (x, y)
            if (x - u[0]) % w == 0 and (y - u[1]) % h == 0:
                out.append((x + v[0] - u[0], y + v[1] - u[1]))
            # bond translated so its far endpoint lands on (x, y)
            if (x - v[0]) % w == 0 and (y - v[1]) % h == 0:
                out.append((x + u[0] - v[0], y + u[1] - v[1]))
        return out

    @property
    def degree(self):
        return len(self.neighbors(0, 0))

    def symmetries(self):
        out = []
        if self.rot90:
            out.append("rot90")
        if self.reflect_x:
            out.append("reflect_x")
        if self.reflect_y:
            out.append("reflect_y")
        return out


SQUARE = Lattice(
    name="square",
    cell=(1, 1),
    sites=(((0, 0)),),
    bonds=(((0, 0), (1, 0)), ((0, 0), (0, 1))),
    max_edge_length=1,
)

LATTICES = {"square": SQUARE}


class Graph:
    """Finite subgraph of a lattice: coordinates, edges with dense ids,
    boundary vertex set. Immutable after construction."""

    def __init__(self, lattice, coords, edges, boundary_idx):
        self.lattice = lattice
        self.coords = np.ascontiguousarray(coords, dtype=np.int32)
        self.edges = np.ascontiguousarray(edges, dtype=np.int32)
        self.boundary_idx = np.ascontiguousarray(np.sort(boundary_idx), dtype=np.int32)
        self._vertex_index = None
        self._csr = None

    @property
    def n_vertices(self):
        return len(self.coords)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def vertex_index(self):
        if self._vertex_index is None:
            self._vertex_index = {(int(x), int(y)): i for i, (x, y) in enumerate(self.coords)}
        return self._vertex_index

    def adjacency(self):
        """CSR adjacency: (indptr, neighbor vertex ids, incident edge ids)."""
        if self._csr is None:
            nv, ne = self.n_vertices, self.n_edges
            ends = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
            other = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
            eids = np.concatenate([np.arange(ne), np.arange(ne)])
            order = np.argsort(ends, kind="stable")
            indptr = np.zeros(nv + 1, dtype=np.int64)
            np.add.at(indptr, ends + 1, 1)
            np.cumsum(indptr, out=indptr)
            self._csr = (
                indptr,
                np.ascontiguousarray(other[order], dtype=np.int32),
                np.ascontiguousarray(eids[order], dtype=np.int32),
            )
        return self._csr

    def edge_lookup(self):
        """Map (canonical coord pair) -> edge id."""
        return {
            (tuple(self.coords[u]), tuple(self.coords[v])): e
            for e, (u, v) in enumerate(self.edges)
        }

    def boundary_by_complement(self):
        """Alternative boundary computation: vertices whose region degree is
        below their full lattice degree (interior-complement scan)."""
        deg_here = np.zeros(self.n_vertices, dtype=np.int64)
        np.add.at(deg_here, self.edges[:, 0], 1)
        np.add.at(deg_here, self.edges[:, 1], 1)
        out = []
        vset = self.vertex_index
        for i, (x, y) in enumerate(self.coords):
            nbrs = self.lattice.neighbors(int(x), int(y))
            present = sum(1 for nb in nbrs if nb in vset)
            if present < len(nbrs) or deg_here[i] < len(nbrs):
                out.append(i)
        return np.array(sorted(out), dtype=np.int32)


def _canonical_edge_order(u_coords, v_coords):
    """Sort edges by (u, v) coordinate lexicographic order; u < v per edge."""
    swap = (u_coords[:, 0] > v_coords[:, 0]) | (
        (u_coords[:, 0] == v_coords[:, 0]) & (u_coords[:, 1] > v_coords[:, 1])
    )
    u = np.where(swap[:, None], v_coords, u_coords)
    v = np.where(swap[:, None], u_coords, v_coords)
    order = np.lexsort((v[:, 1], v[:, 0], u[:, 1], u[:, 0]))
    return u[order], v[order]


_COORD_OFF = 1 << 25


def _coord_keys(pts):
    """Injective int64 key per coordinate pair (|x|,|y| < 2**25)."""
    x = pts[..., 0].astype(np.int64)
    y = pts[..., 1].astype(np.int64)
    if np.any(np.abs(x) >= _COORD_OFF) or np.any(np.abs(y) >= _COORD_OFF):
        raise ValueError("coordinates out of supported range")
    return (x + _COORD_OFF) * (2 * _COORD_OFF) + (y + _COORD_OFF)


def _index_points(points):
    """Deduplicate points into lex-sorted coords; return (coords, indexer)
    where indexer maps point arrays to coord indices."""
    keys = _coord_keys(points)
    ukeys, first = np.unique(keys, return_index=True)
    coords = points[first].astype(np.int32)

    def indexer(pts):
        return np.searchsorted(ukeys, _coord_keys(pts)).astype(np.int32)

    return coords, indexer


class Region(Graph):
    """Rectangle-induced subgraph [a,b] x [c,d] with named sides."""

    def __init__(self, lattice, rect, coords, edges, boundary_idx):
        super().__init__(lattice, coords, edges, boundary_idx)
        self.rect = tuple(int(t) for t in rect)

    def side_vertices(self, side):
        """Vertices in the L-thick slab of the named side (T/L/B/R),
        restricted to the rectangle."""
        a, b, c, d = self.rect
        L = self.lattice.max_edge_length
        x, y = self.coords[:, 0], self.coords[:, 1]
        inside = (x >= a) & (x <= b) & (y >= c) & (y <= d)
        if side == SIDE_LEFT:
            m = inside & (x < a + L)
        elif side == SIDE_RIGHT:
            m = inside & (x > b - L)
        elif side == SIDE_BOTTOM:
            m = inside & (y < c + L)
        elif side == SIDE_TOP:
            m = inside & (y > d - L)
        else:
            raise ValueError(f"unknown side {side!r}")
        idx = np.nonzero(m)[0].astype(np.int32)
        if len(idx) == 0:
            raise ValueError(f"side {side} of rect {self.rect} has no vertices")
        return idx

    def boundary_side(self, side):
        """Boundary vertices lying beyond the named side of the rectangle
        (on the square lattice: the pendant row/column outside that side)."""
        a, b, c, d = self.rect
        x = self.coords[self.boundary_idx, 0]
        y = self.coords[self.boundary_idx, 1]
        if side == SIDE_LEFT:
            m = x < a
        elif side == SIDE_RIGHT:
            m = x > b
        elif side == SIDE_BOTTOM:
            m = y < c
        elif side == SIDE_TOP:
            m = y > d
        else:
            raise ValueError(f"unknown side {side!r}")
        return self.boundary_idx[m]

    def vertices_in_rect(self, rect):
        a, b, c, d = rect
        x, y = self.coords[:, 0], self.coords[:, 1]
        return np.nonzero((x >= a) & (x <= b) & (y >= c) & (y <= d))[0].astype(np.int32)

    def edges_in_rect(self, rect, mode="both"):
        """Edge ids with both (or at least one) endpoint(s) in rect."""
        a, b, c, d = rect
        u = self.coords[self.edges[:, 0]]
        v = self.coords[self.edges[:, 1]]
        mu = (u[:, 0] >= a) & (u[:, 0] <= b) & (u[:, 1] >= c) & (u[:, 1] <= d)
        mv = (v[:, 0] >= a) & (v[:, 0] <= b) & (v[:, 1] >= c) & (v[:, 1] <= d)
        m = (mu & mv) if mode == "both" else (mu | mv)
        return np.nonzero(m)[0].astype(np.int32)

    def to_json(self):
        a, b, c, d = self.rect
        return {"lattice": self.lattice.name, "a": a, "b": b, "c": c, "d": d}

    @staticmethod
    def from_json(obj):
        lattice = LATTICES[obj["lattice"]]
        return build_region(lattice, (obj["a"], obj["b"], obj["c"], obj["d"]))


def _build_square_region(rect):
    a, b, c, d = rect
    # horizontal edges (x,y)-(x+1,y): at least one endpoint in rect
    hx, hy = np.meshgrid(np.arange(a - 1, b + 1), np.arange(c, d + 1), indexing="ij")
    hu = np.stack([hx.ravel(), hy.ravel()], axis=1)
    hv = hu + np.array([1, 0])
    # vertical edges (x,y)-(x,y+1)
    vx, vy = np.meshgrid(np.arange(a, b + 1), np.arange(c - 1, d + 1), indexing="ij")
    vu = np.stack([vx.ravel(), vy.ravel()], axis=1)
    vv = vu + np.array([0, 1])
    ucoord = np.concatenate([hu, vu])
    vcoord = np.concatenate([hv, vv])
    ucoord, vcoord = _canonical_edge_order(ucoord, vcoord)

    coords, indexer = _index_points(np.concatenate([ucoord, vcoord]))
    edges = np.stack([indexer(ucoord), indexer(vcoord)], axis=1)
    inside = (
        (coords[:, 0] >= a) & (coords[:, 0] <= b) & (coords[:, 1] >= c) & (coords[:, 1] <= d)
    )
    boundary = np.nonzero(~inside)[0]
    return coords, edges, boundary


def _build_generic_region(lattice, rect):
    a, b, c, d = rect
    L = lattice.max_edge_length
    w, h = lattice.cell
    raw = set()
    for cx in range(a - L - w, b + L + w + 1):
        for cy in range(c - L - h, d + L + h + 1):
            if cx % w or cy % h:
                continue
            for (u, v) in lattice.bonds:
                p = (cx + u[0], cy + u[1])
                q = (cx + v[0], cy + v[1])
                pin = a <= p[0] <= b and c <= p[1] <= d
                qin = a <= q[0] <= b and c <= q[1] <= d
                if pin or qin:
                    raw.add((min(p, q), max(p, q)))
    pairs = sorted(raw)
    verts = sorted({p for pq in pairs for p in pq})
    idx = {p: i for i, p in enumerate(verts)}
    coords = np.array(verts, dtype=np.int32)
    edges = np.array([(idx[p], idx[q]) for p, q in pairs], dtype=np.int32)
    vset = set(verts)
    boundary = [i for i, p in enumerate(verts)
                if any(nb not in vset for nb in lattice.neighbors(*p))]
    return coords, edges, np.array(boundary, dtype=np.int64)


def build_region(lattice, rect):
    """Region induced by the edges with at least one endpoint in
    [a,b] x [c,d]. Edge ids are dense and stable (coordinate-lexicographic)."""
    a, b, c, d = (int(t) for t in rect)
    if a > b or c > d:
        raise ValueError(f"malformed rectangle {rect}: need a <= b and c <= d")
    est_edges = (b - a + 2) * (d - c + 1) + (b - a + 1) * (d - c + 2)
    if est_edges > MAX_REGION_EDGES:
        raise ValueError(f"region would exceed {MAX_REGION_EDGES} edges")
    if lattice.name == "square":
        coords, edges, boundary = _build_square_region((a, b, c, d))
    else:
        coords, edges, boundary = _build_generic_region(lattice, (a, b, c, d))
    return Region(lattice, (a, b, c, d), coords, edges, boundary)


def custom_graph(lattice, edge_coords):
    """Graph from an explicit list of lattice edges ((x1,y1),(x2,y2)).
    Boundary = vertices with a lattice neighbor outside the vertex set."""
    pairs = sorted({(min(map(tuple, e)), max(map(tuple, e))) for e in edge_coords})
    verts = sorted({p for pq in pairs for p in pq})
    for p, q in pairs:
        if not (lattice.is_vertex(*p) and lattice.is_vertex(*q)):
            raise ValueError(f"edge {(p, q)} not on the lattice")
    idx = {p: i for i, p in enumerate(verts)}
    coords = np.array(verts, dtype=np.int32)
    edges = np.array([(idx[p], idx[q]) for p, q in pairs], dtype=np.int32)
    vset = set(verts)
    boundary = [i for i, p in enumerate(verts)
                if any(nb not in vset for nb in lattice.neighbors(*p))]
    return Graph(lattice, coords, edges, np.array(boundary, dtype=np.int64))


def side_vertices(region, side):
    return region.side_vertices(side)


class DualMap:
    """Planar dual of a graph. Dual vertex (x, y) stands for the face
    centered at (x + 1/2, y + 1/2); dual edge ids coincide with primal edge
    ids, so the edge <-> dual-edge bijection is the identity permutation and
    applying it twice is trivially the identity."""

    def __init__(self, primal, dual_coords, dual_edges, dual_boundary):
        self.primal = primal
        self.dual_coords = dual_coords
        self.dual_edges = dual_edges
        self.dual_boundary = dual_boundary
        self.edge_bijection = np.arange(primal.n_edges, dtype=np.int64)
        self._graph = None

    def graph(self):
        """The dual graph as a Graph (for cluster counting / enumeration)."""
        if self._graph is None:
            self._graph = Graph(self.primal.lattice, self.dual_coords,
                                self.dual_edges, self.dual_boundary)
        return self._graph

    def dual_edge_of(self, eid):
        return int(self.edge_bijection[eid])

    def primal_edge_of(self, dual_eid):
        return int(self.edge_bijection[dual_eid])


def dual_of(graph):
    """DualMap of a graph on the square lattice.

    For each primal edge the dual edge joins the two incident faces:
    horizontal (x,y)-(x+1,y) -> faces (x,y-1)*,(x,y)*; vertical
    (x,y)-(x,y+1) -> faces (x-1,y)*,(x,y)*.
    """
    if graph.lattice.name != "square":
        raise NotImplementedError("dual map implemented for the square lattice")
    u = graph.coords[graph.edges[:, 0]]
    v = graph.coords[graph.edges[:, 1]]
    horiz = (v[:, 0] - u[:, 0]) != 0
    da = np.where(horiz[:, None], u + np.array([0, -1]), u + np.array([-1, 0]))
    db = u.copy()
    dcoords, indexer = _index_points(np.concatenate([da, db]))
    ia, ib = indexer(da), indexer(db)
    lo = np.minimum(ia, ib)
    hi = np.maximum(ia, ib)
    dedges = np.stack([lo, hi], axis=1)
    dset = {(int(x), int(y)) for x, y in dcoords}
    dboundary = [i for i, (x, y) in enumerate(dcoords)
                 if any(nb not in dset for nb in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)))]
    return DualMap(graph, dcoords, dedges.astype(np.int32),
                   np.array(dboundary, dtype=np.int64))


def _transform(coords, sym):
    x, y = coords[..., 0], coords[..., 1]
    if sym == "rot90":
        return np.stack([-y, x], axis=-1)
    if sym == "reflect_x":  # x -> -x (reflection across the y axis)
        return np.stack([-x, y], axis=-1)
    if sym == "reflect_y":  # y -> -y
        return np.stack([x, -y], axis=-1)
    if isinstance(sym, tuple) and sym[0] == "translate":
        dx, dy = sym[1]
        return np.stack([x + dx, y + dy], axis=-1)
    raise ValueError(f"unknown symmetry {sym!r}")


def transform_rect(rect, sym):
    a, b, c, d = rect
    corners = np.array([[a, c], [b, d]])
    t = _transform(corners, sym)
    return (int(t[:, 0].min()), int(t[:, 0].max()), int(t[:, 1].min()), int(t[:, 1].max()))


@dataclass
class SymmetryMap:
    source: Region
    image: Region
    sym: object
    vertex_map: np.ndarray  # source vertex id -> image vertex id
    edge_map: np.ndarray    # source edge id -> image edge id


def apply_symmetry(region, sym):
    """Image region under a declared lattice symmetry, with edge/vertex id
    maps so that events can be transported."""
    lat = region.lattice
    if sym == "rot90" and not lat.rot90:
        raise ValueError("rot90 not declared for this lattice")
    if sym == "reflect_x" and not lat.reflect_x:
        raise ValueError("reflect_x not declared for this lattice")
    if sym == "reflect_y" and not lat.reflect_y:
        raise ValueError("reflect_y not declared for this lattice")
    image = build_region(lat, transform_rect(region.rect, sym))
    tcoords = _transform(region.coords, sym)
    vmap = np.array([image.vertex_index[(int(x), int(y))] for x, y in tcoords],
                    dtype=np.int64)
    lookup = image.edge_lookup()
    emap = np.empty(region.n_edges, dtype=np.int64)
    for e in range(region.n_edges):
        p = tuple(int(t) for t in tcoords[region.edges[e, 0]])
        q = tuple(int(t) for t in tcoords[region.edges[e, 1]])
        emap[e] = lookup[(min(p, q), max(p, q))]
    return SymmetryMap(region, image, sym, vmap, emap)
