"""
Mesher Module
Watertight triangle meshes for the tableware: solids of revolution,
perforated cup walls, tilted plane cuts and pie-chart segments
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import shapely
from scipy.spatial import cKDTree
from shapely.geometry import LinearRing, Polygon

from src.errors import MeshError

logger = logging.getLogger(__name__)

# Hole clearance squares and grid lines closer than this are merged (mm)
LINE_MERGE_TOLERANCE = 0.05


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Indexed triangles in mm, counter-clockwise seen from outside"""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        tris = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if tris.size and (tris.min() < 0 or tris.max() >= len(verts)):
            raise MeshError("triangle index out of range")
        verts.setflags(write=False)
        tris.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)

    @classmethod
    def empty(cls) -> "TriangleMesh":
        return cls(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))

    def __len__(self):
        return len(self.triangles)

    def translated(self, offset: Sequence[float]) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64),
                            self.triangles)

    def compacted(self) -> "TriangleMesh":
        """Drop vertices no triangle references"""
        used, inverse = np.unique(self.triangles.reshape(-1), return_inverse=True)
        return TriangleMesh(self.vertices[used], inverse.reshape(-1, 3))

    @property
    def signed_volume(self) -> float:
        """Divergence-theorem volume; positive for outward winding"""
        if not len(self.triangles):
            return 0.0
        v = self.vertices[self.triangles]
        return float(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])).sum() / 6.0)


@dataclass(frozen=True, eq=False)
class Profile2D:
    """Closed (r, z) cross-section revolved about the z axis"""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        pts = pts[keep]
        if len(pts) > 1 and np.array_equal(pts[0], pts[-1]):
            pts = pts[:-1]
        if len(pts) < 3:
            raise MeshError("profile needs at least 3 distinct points")
        if np.any(pts[:, 0] < 0):
            raise MeshError("profile has r < 0")
        ring = LinearRing(pts)
        if not ring.is_simple:
            raise MeshError("self-intersecting profile")
        if Polygon(ring).area == 0:
            raise MeshError("profile has zero area")
        if not shapely.is_ccw(ring):
            pts = pts[::-1]

        on_axis = np.flatnonzero(pts[:, 0] == 0)
        n = len(pts)
        if len(on_axis) != 2 or (on_axis[1] - on_axis[0]) % n not in (1, n - 1):
            raise MeshError("profile must touch the axis along exactly one edge")
        # rotate so the chain runs axis -> off-axis points -> axis
        first, second = on_axis
        start = second if (second - first) == 1 else first
        pts = np.roll(pts, -start, axis=0)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)


def _ring(radius: float, z: float, angles: np.ndarray) -> np.ndarray:
    return np.column_stack([radius * np.cos(angles), radius * np.sin(angles),
                            np.full(len(angles), z)])


def _quads(a, b, c, d) -> np.ndarray:
    """Split quads (a, b, c, d) into triangles (a, b, c), (a, c, d)"""
    a, b, c, d = (np.asarray(x).reshape(-1) for x in (a, b, c, d))
    return np.concatenate([np.column_stack([a, b, c]), np.column_stack([a, c, d])])


def revolve(profile: Profile2D, segments: int = 128) -> TriangleMesh:
    """Solid of revolution; profile points on the axis collapse to one vertex"""
    if segments < 3:
        raise MeshError("revolve needs at least 3 segments")
    pts = profile.points
    angles = 2 * np.pi * np.arange(segments) / segments
    j = np.arange(segments)
    jn = (j + 1) % segments

    # chain: pts[0] on axis, pts[1:-1] rings, pts[-1] on axis
    n_rings = len(pts) - 2
    vertices = [np.array([[0.0, 0.0, pts[0, 1]]])]
    vertices += [_ring(r, z, angles) for r, z in pts[1:-1]]
    vertices.append(np.array([[0.0, 0.0, pts[-1, 1]]]))
    bottom_axis = 0
    top_axis = 1 + n_rings * segments

    def ring_index(k):
        return 1 + k * segments

    faces = [np.column_stack([np.full(segments, bottom_axis),
                              ring_index(0) + jn, ring_index(0) + j])]
    for k in range(n_rings - 1):
        lo, hi = ring_index(k), ring_index(k + 1)
        faces.append(_quads(lo + j, lo + jn, hi + jn, hi + j))
    last = ring_index(n_rings - 1)
    faces.append(np.column_stack([last + j, last + jn, np.full(segments, top_axis)]))

    return TriangleMesh(np.vstack(vertices), np.vstack(faces))


# ---------------------------------------------------------------------------
# Hollow cups and perforation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HelixGroove:
    """
    Rounded groove pressed into the outer wall along a helix

    The helix starts at angle 0 on the +x axis at height `start` and climbs
    `pitch` per counter-clockwise turn for `turns` turns. Across the groove
    the depth follows a raised cosine of full width `width`.
    """

    pitch: float
    turns: float
    start: float
    depth: float
    width: float

    def __post_init__(self):
        if self.pitch <= 0 or self.turns < 0:
            raise MeshError("groove needs pitch > 0 and turns >= 0")
        if self.depth <= 0 or not 0 < self.width <= self.pitch:
            raise MeshError("groove needs depth > 0 and 0 < width <= pitch")

    def depth_at(self, u: np.ndarray, z: np.ndarray, outer_radius: float) -> np.ndarray:
        """Inward offset at unrolled wall positions (u = arc length on the outer surface)"""
        u = np.asarray(u, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        turn = (u % (2 * math.pi * outer_radius)) / (2 * math.pi * outer_radius)
        nearest = np.full(np.broadcast(u, z).shape, np.inf)
        base = np.floor((z - self.start) / self.pitch - turn)
        for k in (base, base + 1):
            along = turn + k
            gap = np.abs(z - (self.start + self.pitch * along))
            on_helix = (along >= 0) & (along <= self.turns)
            nearest = np.where(on_helix, np.minimum(nearest, gap), nearest)
        half = self.width / 2
        profile = 0.5 * (1 + np.cos(np.pi * np.minimum(nearest, half) / half))
        return np.where(nearest < half, self.depth * profile, 0.0)


@dataclass(frozen=True)
class CupBody:
    """Hollow cylinder: wall from z=0 to height, base below z=0"""

    outer_radius: float
    wall: float
    height: float
    base: float
    segments: int = 128
    groove: Optional[HelixGroove] = None

    def __post_init__(self):
        if self.wall <= 0 or self.wall >= self.outer_radius:
            raise MeshError("wall thickness must lie in (0, outer radius)")
        if self.height <= 0 or self.base <= 0:
            raise MeshError("cup height and base must be > 0")
        if self.segments < 3:
            raise MeshError("cup needs at least 3 segments")
        if self.groove is not None and self.groove.depth >= self.wall:
            raise MeshError("groove must be shallower than the wall")

    def outer_surface(self, u: np.ndarray, z: np.ndarray) -> np.ndarray:
        """Outer wall points at unrolled positions, grooved where the helix runs"""
        u = np.asarray(u, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        r = np.full(np.broadcast(u, z).shape, float(self.outer_radius))
        if self.groove is not None:
            r = r - self.groove.depth_at(u, z, self.outer_radius)
        theta = u / self.outer_radius
        return np.column_stack([np.ravel(r * np.cos(theta)), np.ravel(r * np.sin(theta)),
                                np.ravel(np.broadcast_to(z, r.shape))])

    @property
    def inner_radius(self) -> float:
        return self.outer_radius - self.wall

    def profile(self) -> Profile2D:
        ro, ri = self.outer_radius, self.inner_radius
        return Profile2D([(0, -self.base), (ro, -self.base), (ro, self.height),
                          (ri, self.height), (ri, 0), (0, 0)])

    def cavity_volume(self) -> float:
        """Volume of the polygonal cavity prism, mm^3"""
        n = self.segments
        return 0.5 * n * self.inner_radius ** 2 * math.sin(2 * math.pi / n) * self.height

    def mesh(self) -> TriangleMesh:
        return _build_cup(self, [], 0.0, 0.0)


def _merge_lines(candidates: List[Tuple[int, float]], period: Optional[float]) -> np.ndarray:
    """Keep candidate lines by priority, dropping any within tolerance of a kept one"""
    kept: List[float] = []
    for _, pos in sorted(candidates):
        if kept:
            gaps = np.abs(np.asarray(kept) - pos)
            if period is not None:
                gaps = np.minimum(gaps, period - gaps)
            if gaps.min() <= LINE_MERGE_TOLERANCE:
                continue
        kept.append(pos)
    return np.sort(np.asarray(kept))


def _nearest(lines: np.ndarray, pos: float, period: Optional[float] = None) -> int:
    gaps = np.abs(lines - pos)
    if period is not None:
        gaps = np.minimum(gaps, period - gaps)
    return int(np.argmin(gaps))


def _build_cup(body: CupBody, holes: List[Tuple[float, float]],
               radius: float, clearance: float) -> TriangleMesh:
    """
    Structured cup mesh with optional through-wall tunnels

    The wall is a tensor grid in (u, z), u = arc length on the outer
    surface. Each hole replaces the grid cells of its clearance square with
    an annulus from the square's boundary loop to a circle of `radius`, on
    the outer and inner surfaces, joined by a tunnel of quads.
    """
    ro, ri, h = body.outer_radius, body.inner_radius, body.height
    period = 2 * math.pi * ro
    step = period / body.segments

    u_candidates = [(2, j * step) for j in range(body.segments)]
    # rows fine enough to resolve the groove cross-section
    row_step = step if body.groove is None else min(step, body.groove.width / 4)
    n_rows = max(1, math.ceil(h / row_step))
    z_candidates = [(-1, 0.0), (-1, h)]
    z_candidates += [(2, z) for z in np.linspace(0, h, n_rows + 1)[1:-1]]
    for cu, cz in holes:
        for t, priority in ((-1.0, 0), (1.0, 0), (-0.5, 1), (0.0, 1), (0.5, 1)):
            u_candidates.append((priority, (cu + t * clearance) % period))
            z_candidates.append((priority, cz + t * clearance))

    us = _merge_lines(u_candidates, period)
    zs = _merge_lines(z_candidates, None)
    nu, nz = len(us), len(zs) - 1

    blocks = []
    for cu, cz in holes:
        blocks.append((_nearest(us, (cu - clearance) % period, period),
                       _nearest(us, (cu + clearance) % period, period),
                       _nearest(zs, cz - clearance), _nearest(zs, cz + clearance)))

    removed = np.zeros((nz, nu), dtype=bool)
    for index, (ja, jb, ka, kb) in enumerate(blocks):
        cols = [(ja + s) % nu for s in range((jb - ja) % nu)]
        for other in range(index):
            oa, ob, oka, okb = blocks[other]
            rows_meet = ka <= okb and oka <= kb
            ocols = {(oa + s) % nu for s in range((ob - oa) % nu + 1)}
            if rows_meet and ocols & set(cols + [jb]):
                raise MeshError(f"overlapping holes {other} and {index}")
        removed[ka:kb, cols] = True

    theta = us / ro
    grid_u, grid_z = np.meshgrid(us, zs)
    outer = body.outer_surface(grid_u.ravel(), grid_z.ravel())
    inner = np.vstack([_ring(ri, z, theta) for z in zs])
    n_grid = len(outer)
    inner_off = n_grid
    skirt_off = 2 * n_grid
    bottom_center = skirt_off + nu
    floor_center = bottom_center + 1
    vertices = [outer, inner, _ring(ro, -body.base, theta),
                np.array([[0.0, 0.0, -body.base], [0.0, 0.0, 0.0]])]
    next_index = floor_center + 1

    def gv(k, j):
        return np.asarray(k) * nu + np.asarray(j) % nu

    k, j = np.nonzero(~removed)
    a, b, c, d = gv(k, j), gv(k, j + 1), gv(k + 1, j + 1), gv(k + 1, j)
    faces = [_quads(a, b, c, d), _quads(a, d, c, b) + inner_off]

    jj = np.arange(nu)
    top_o, top_i = gv(nz, jj), gv(nz, jj) + inner_off
    faces.append(_quads(top_o, gv(nz, jj + 1), gv(nz, jj + 1) + inner_off, top_i))
    skirt = skirt_off + jj
    skirt_next = skirt_off + (jj + 1) % nu
    faces.append(_quads(skirt, skirt_next, gv(0, jj + 1), gv(0, jj)))
    faces.append(np.column_stack([np.full(nu, bottom_center), skirt_next, skirt]))
    faces.append(np.column_stack([np.full(nu, floor_center), gv(0, jj) + inner_off,
                                  gv(0, jj + 1) + inner_off]))

    for (cu, cz), (ja, jb, ka, kb) in zip(holes, blocks):
        span = (jb - ja) % nu
        loop = [(ka, ja + s) for s in range(span)]
        loop += [(kk, jb) for kk in range(ka, kb)]
        loop += [(kb, jb - s) for s in range(span)]
        loop += [(kk, ja) for kk in range(kb, ka, -1)]
        ks = np.array([p[0] for p in loop])
        js = np.array([p[1] for p in loop]) % nu

        du = (us[js] - cu + period / 2) % period - period / 2
        dz = zs[ks] - cz
        rho = np.hypot(du, dz)
        circle_u = cu + radius * du / rho
        circle_z = cz + radius * dz / rho
        m = len(loop)
        ring_o = next_index + np.arange(m)
        ring_i = ring_o + m
        next_index += 2 * m
        ct = circle_u / ro
        vertices.append(body.outer_surface(circle_u, circle_z))
        vertices.append(np.column_stack([ri * np.cos(ct), ri * np.sin(ct), circle_z]))

        q = gv(ks, js)
        nxt = np.roll(np.arange(m), -1)
        faces.append(_quads(q, q[nxt], ring_o[nxt], ring_o))
        faces.append(_quads(q + inner_off, ring_i, ring_i[nxt], q[nxt] + inner_off))
        faces.append(_quads(ring_o, ring_o[nxt], ring_i[nxt], ring_i))

    return TriangleMesh(np.vstack(vertices), np.vstack(faces)).compacted()


def perforate(body: CupBody, centers: np.ndarray, radius: float,
              pitch: Optional[float] = None) -> TriangleMesh:
    """
    Cup mesh with one round through-wall tunnel per centre

    Holes are stitched into square clearances of half-size
    (radius + pitch/2)/2 on the unrolled wall (1.125 x radius without a
    pitch). Where neighbouring holes sit closer, the clearance shrinks to
    fit between them, keeping 0.1 mm around each hole, so neighbours need
    a centre gap of 2 x radius + 0.3 mm along one wall axis. Overlapping
    holes are rejected.
    """
    centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
    if not len(centers):
        return body.mesh()
    if radius <= 0:
        raise MeshError("perforation radius must be > 0")
    if pitch is not None:
        if radius >= pitch / 2:
            raise MeshError("perforation radius must be < pitch / 2")
        clearance = (radius + pitch / 2) / 2
    else:
        clearance = 1.125 * radius

    margin = 2 * LINE_MERGE_TOLERANCE
    holes = []
    for index, (x, y, z) in enumerate(centers):
        rho = math.hypot(x, y)
        if not (body.inner_radius - 1e-9 <= rho <= body.outer_radius + 1e-9):
            raise MeshError(f"hole {index} centered off the wall")
        u = (math.atan2(y, x) % (2 * math.pi)) * body.outer_radius
        holes.append((u, float(z)))

    period = 2 * math.pi * body.outer_radius
    for i in range(len(holes)):
        for k in range(i):
            du = abs(holes[i][0] - holes[k][0])
            du = min(du, period - du)
            dz = abs(holes[i][1] - holes[k][1])
            if math.hypot(du, dz) < 2 * radius + margin:
                raise MeshError(f"overlapping holes {k} and {i}")
            fit = (max(du, dz) - margin) / 2
            if fit < clearance:
                if fit - radius < margin:
                    raise MeshError(f"holes {k} and {i} too close to stitch")
                clearance = fit

    for index, (_, z) in enumerate(holes):
        if z - clearance < margin or z + clearance > body.height - margin:
            raise MeshError(f"hole {index} centered off the wall")

    mesh = _build_cup(body, holes, radius, clearance)
    logger.debug("Perforated cup with %d hole(s): %d triangles", len(holes), len(mesh))
    return mesh


def spiral_points(spec) -> np.ndarray:
    """
    Perforation centres on the mug helix

    Radius D/2, pitch p, starting at z = p/2; the k-th centre sits at arc
    length k x spacing from the start.
    """
    count = spec.perforation_count
    if count == 0:
        return np.zeros((0, 3))
    spacing = spec.perforation_spacing_along_spiral
    if count * spacing > spec.spiral_length * (1 + 1e-12):
        raise MeshError("perforations exceed the spiral length")
    radius = spec.diameter / 2
    rise = spec.pitch / (2 * math.pi)
    arc = np.arange(1, count + 1) * spacing
    theta = arc / math.hypot(radius, rise)
    return np.column_stack([radius * np.cos(theta), radius * np.sin(theta),
                            spec.pitch / 2 + rise * theta])


# ---------------------------------------------------------------------------
# Plane cut
# ---------------------------------------------------------------------------

def _cap_loops(kept: np.ndarray) -> List[List[int]]:
    """Chain the reversed open edges of the kept surface into cap loops"""
    directed = np.concatenate([kept[:, [0, 1]], kept[:, [1, 2]], kept[:, [2, 0]]])
    present = {tuple(e) for e in directed.tolist()}
    successor: Dict[int, int] = {}
    for a, b in directed.tolist():
        if (b, a) not in present:
            if b in successor:
                raise MeshError("cut section touches itself; move the pivot")
            successor[b] = a
    loops = []
    while successor:
        start = min(successor)
        loop = [start]
        nxt = successor.pop(start)
        while nxt != start:
            loop.append(nxt)
            if nxt not in successor:
                raise MeshError("cut section is not closed")
            nxt = successor.pop(nxt)
        loops.append(loop)
    return loops


def _triangulate_cap(loops: List[List[int]], coords: np.ndarray) -> List[Tuple[int, int, int]]:
    """
    Constrained Delaunay cap over the section loops, in 2D plane coordinates

    Collinear loop vertices are withheld from the triangulation and fanned
    back into the triangles whose edges they split.
    """
    simplified = []
    between: Dict[Tuple[int, int], List[int]] = {}
    for loop in loops:
        pts = coords[loop]
        prev, nxt = np.roll(pts, 1, axis=0), np.roll(pts, -1, axis=0)
        e1, e2 = pts - prev, nxt - pts
        cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        scale = np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1)
        straight = (np.abs(cross) <= 1e-10 * scale) & (np.einsum("ij,ij->i", e1, e2) > 0)
        corners = [v for v, flat in zip(loop, straight) if not flat]
        if len(corners) < 3:
            continue
        position = {v: i for i, v in enumerate(loop)}
        for a, b in zip(corners, corners[1:] + corners[:1]):
            i, k = position[a], position[b]
            run = []
            i = (i + 1) % len(loop)
            while i != k:
                run.append(loop[i])
                i = (i + 1) % len(loop)
            if run:
                between[(a, b)] = run
        simplified.append(corners)

    polygons = [Polygon(coords[c]) for c in simplified]
    depth = [sum(other.contains(poly) for other in polygons if other is not poly)
             for poly in polygons]
    triangles: List[Tuple[int, int, int]] = []
    for index, poly in enumerate(polygons):
        if depth[index] % 2:
            continue
        holes = [h for h, p in enumerate(polygons)
                 if depth[h] == depth[index] + 1 and poly.contains(p)]
        members = [index] + holes
        region = Polygon(coords[simplified[index]],
                         [coords[simplified[h]] for h in holes])
        ids = np.concatenate([simplified[m] for m in members])
        tree = cKDTree(coords[ids])
        for tri in shapely.constrained_delaunay_triangles(region).geoms:
            corner_xy = np.asarray(tri.exterior.coords)[:3]
            dist, found = tree.query(corner_xy)
            if dist.max() > 1e-9 * (1 + np.abs(coords).max()):
                raise MeshError("cap triangulation inserted a vertex")
            a, b, c = (int(ids[f]) for f in found)
            triangles.append((a, b, c))

    def signed(t):
        (ax, ay), (bx, by), (cx, cy) = coords[list(t)]
        return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)

    out = []
    work = [t if signed(t) > 0 else (t[0], t[2], t[1]) for t in triangles]
    while work:
        t = work.pop()
        for e in range(3):
            a, b, c = t[e], t[(e + 1) % 3], t[(e + 2) % 3]
            run = between.get((a, b))
            if run is None and (b, a) in between:
                run = between[(b, a)][::-1]
            if run:
                chain = [a] + run + [b]
                work.extend((chain[i], chain[i + 1], c) for i in range(len(chain) - 1))
                break
        else:
            if signed(t) > 0:
                out.append(t)
    return out


def tilt_cut(mesh: TriangleMesh, tilt_angle: float, pivot_height: float,
             pivot_x: float = 0.0) -> TriangleMesh:
    """
    Keep the part of a closed mesh below a tilted plane and cap the cut

    The plane contains the horizontal line (x = pivot_x, z = pivot_height)
    parallel to y and descends toward +x at `tilt_angle` degrees. pivot_x
    defaults to the revolution axis. With the pivot at or above the top of
    the mesh the x <= pivot_x half is always kept whole and the kept solids
    are nested as the tilt grows.
    """
    verts = mesh.vertices
    if not len(mesh.triangles):
        raise MeshError("cannot cut an empty mesh")
    extent = float(np.ptp(verts, axis=0).max())

    tau = math.radians(tilt_angle)
    normal = np.array([math.sin(tau), 0.0, math.cos(tau)])
    origin = np.array([pivot_x, 0.0, pivot_height])
    dist = (verts - origin) @ normal
    eps = 1e-9 * max(extent, 1.0)
    side = np.zeros(len(verts), dtype=np.int8)
    side[dist > eps] = 1
    side[dist < -eps] = -1

    if not np.any(side > 0):
        return mesh
    if not np.any(side < 0):
        raise MeshError("cutting plane misses the mesh: nothing left below it")

    tris = mesh.triangles
    s = side[tris]
    below = np.all(s <= 0, axis=1)
    flat = np.all(s == 0, axis=1)
    if flat.any():
        v = verts[tris[flat]]
        up = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]) @ normal > 0
        below[np.flatnonzero(flat)[~up]] = False
    crossing = np.any(s > 0, axis=1) & np.any(s < 0, axis=1)

    new_vertices: List[np.ndarray] = []
    split_index: Dict[Tuple[int, int], int] = {}

    def split(a, b):
        key = (min(a, b), max(a, b))
        if key not in split_index:
            t = dist[a] / (dist[a] - dist[b])
            new_vertices.append(verts[a] + t * (verts[b] - verts[a]))
            split_index[key] = len(verts) + len(new_vertices) - 1
        return split_index[key]

    clipped = []
    for tri in tris[crossing].tolist():
        poly = []
        for i in range(3):
            a, b = tri[i], tri[(i + 1) % 3]
            if side[a] <= 0:
                poly.append(a)
            if side[a] * side[b] < 0:
                poly.append(split(a, b))
        clipped.extend((poly[0], poly[i], poly[i + 1]) for i in range(1, len(poly) - 1))

    all_vertices = np.vstack([verts] + ([np.array(new_vertices)] if new_vertices else []))
    kept = np.vstack([tris[below], np.array(clipped, dtype=np.int64).reshape(-1, 3)])

    loops = _cap_loops(kept)
    cap = []
    if loops:
        e1 = np.array([math.cos(tau), 0.0, -math.sin(tau)])
        e2 = np.array([0.0, 1.0, 0.0])
        rel = all_vertices - origin
        coords = np.column_stack([rel @ e1, rel @ e2])
        cap = _triangulate_cap(loops, coords)

    faces = np.vstack([kept, np.array(cap, dtype=np.int64).reshape(-1, 3)])
    result = TriangleMesh(all_vertices, faces).compacted()
    logger.debug("Tilt cut at %.3f deg: %d loop(s), %d cap triangles",
                 tilt_angle, len(loops), len(cap))
    return result


# ---------------------------------------------------------------------------
# Pie segments
# ---------------------------------------------------------------------------

def disc(radius: float, thickness: float, segments: int = 128) -> TriangleMesh:
    return revolve(Profile2D([(0, 0), (radius, 0), (radius, thickness), (0, thickness)]),
                   segments)


def pie_segment(outer_radius: float, thickness: float, angle: float,
                segments: int = 128) -> TriangleMesh:
    """
    Sector solid from 0 to `angle` degrees, counter-clockwise from +x

    Arc vertices sit on the corners of the `segments`-gon that `revolve`
    and `CupBody` produce at the same radius, and a partial last step ends
    on that polygon's chord, so the sector never leaves the polygon. 360
    degrees gives a seamless disc.
    """
    if not angle > 0:
        raise MeshError("pie segment angle must be > 0")
    if angle > 360 + 1e-9:
        raise MeshError("pie segment angle must be <= 360")
    if outer_radius <= 0 or thickness <= 0:
        raise MeshError("pie segment radius and thickness must be > 0")
    if angle >= 360 - 1e-9:
        return disc(outer_radius, thickness, segments)

    step = 2 * math.pi / segments
    sweep = math.radians(angle)
    full = math.floor(sweep / step + 1e-9)
    arc = step * np.arange(full + 1)
    radii = np.full(full + 1, float(outer_radius))
    if full == 0 or sweep - full * step > 1e-9 * step:
        chord = outer_radius * math.cos(step / 2) / math.cos(sweep - (full + 0.5) * step)
        arc = np.append(arc, sweep)
        radii = np.append(radii, chord)
    n = len(arc) - 1
    bottom = _ring(radii, 0.0, arc)
    top = _ring(radii, thickness, arc)
    cb, ct = 0, 1
    b0, t0 = 2, 3 + n
    vertices = np.vstack([[[0, 0, 0], [0, 0, thickness]], bottom, top])

    i = np.arange(n)
    faces = [
        np.column_stack([np.full(n, cb), b0 + i + 1, b0 + i]),
        np.column_stack([np.full(n, ct), t0 + i, t0 + i + 1]),
        _quads(b0 + i, b0 + i + 1, t0 + i + 1, t0 + i),
        np.array([[cb, b0, t0], [cb, t0, ct],
                  [cb, ct, t0 + n], [cb, t0 + n, b0 + n]]),
    ]
    return TriangleMesh(vertices, np.vstack(faces))
