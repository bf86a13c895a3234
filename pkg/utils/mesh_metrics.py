"""
Mesh Metrics
Topology and volume diagnostics for generated tableware meshes
"""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from src.mesher import TriangleMesh


@dataclass(frozen=True)
class MeshStats:
    V: int
    E: int
    F: int
    euler: int
    components: int
    genus: Optional[int]
    watertight: bool
    signed_volume_mm3: float
    min_wall_estimate: Optional[float]
    degenerate: int

    def to_dict(self) -> dict:
        return asdict(self)


class MeshMetrics:
    """Calculate topology and volume metrics for triangle meshes"""

    @staticmethod
    def directed_edges(triangles):
        """Every half-edge (a, b) of every triangle"""
        return np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])

    @staticmethod
    def undirected_edges(triangles):
        """Unique undirected edges and how many triangles use each"""
        if not len(triangles):
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
        edges = np.sort(MeshMetrics.directed_edges(triangles), axis=1)
        return np.unique(edges, axis=0, return_counts=True)

    @staticmethod
    def is_watertight(triangles) -> bool:
        """Every edge shared by exactly two triangles with opposite orientation"""
        if not len(triangles):
            return False
        _, counts = MeshMetrics.undirected_edges(triangles)
        if np.any(counts != 2):
            return False
        directed = MeshMetrics.directed_edges(triangles)
        # a repeated half-edge means two neighbours wound the same way
        return len(np.unique(directed, axis=0)) == len(directed)

    @staticmethod
    def component_count(triangles) -> int:
        if not len(triangles):
            return 0
        used, inverse = np.unique(triangles.reshape(-1), return_inverse=True)
        local = inverse.reshape(-1, 3)
        edges = MeshMetrics.directed_edges(local)
        graph = sparse.coo_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])),
                                  shape=(len(used), len(used)))
        count, _ = connected_components(graph, directed=False)
        return int(count)

    @staticmethod
    def degenerate_count(mesh: TriangleMesh) -> int:
        """Triangles with a repeated index or (numerically) zero area"""
        tris = mesh.triangles
        if not len(tris):
            return 0
        v = mesh.vertices[tris]
        area2 = np.linalg.norm(np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]), axis=1)
        extent = float(np.ptp(mesh.vertices, axis=0).max()) or 1.0
        repeated = (tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2])
        return int(np.count_nonzero(repeated | (area2 <= 1e-12 * extent ** 2)))

    @staticmethod
    def vertex_normals(mesh: TriangleMesh) -> np.ndarray:
        """Area-weighted vertex normals (unit length where defined)"""
        v = mesh.vertices[mesh.triangles]
        face = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
        normals = np.zeros_like(mesh.vertices)
        for corner in range(3):
            np.add.at(normals, mesh.triangles[:, corner], face)
        length = np.linalg.norm(normals, axis=1)
        length[length == 0] = 1.0
        return normals / length[:, None]

    @staticmethod
    def min_wall_estimate(mesh: TriangleMesh, neighbours: int = 16) -> Optional[float]:
        """
        Smallest distance between a vertex and a nearby vertex facing the
        other way; None when no opposing pair is found
        """
        if not len(mesh.triangles):
            return None
        compact = mesh.compacted()
        points = compact.vertices
        normals = MeshMetrics.vertex_normals(compact)
        k = min(neighbours + 1, len(points))
        if k < 2:
            return None
        dist, idx = cKDTree(points).query(points, k=k)
        dist, idx = dist[:, 1:], idx[:, 1:]
        facing = np.einsum("ij,ikj->ik", normals, normals[idx])
        opposed = (facing < -0.5) & (dist > 0)
        if not opposed.any():
            return None
        return float(dist[opposed].min())

    @staticmethod
    def stats(mesh: TriangleMesh) -> MeshStats:
        tris = mesh.triangles
        edges, _ = MeshMetrics.undirected_edges(tris)
        V = int(len(np.unique(tris))) if len(tris) else 0
        E = int(len(edges))
        F = int(len(tris))
        euler = V - E + F
        components = MeshMetrics.component_count(tris)
        watertight = MeshMetrics.is_watertight(tris)
        genus = (2 * components - euler) // 2 if watertight else None
        return MeshStats(V=V, E=E, F=F, euler=euler, components=components, genus=genus,
                         watertight=watertight, signed_volume_mm3=mesh.signed_volume,
                         min_wall_estimate=MeshMetrics.min_wall_estimate(mesh),
                         degenerate=MeshMetrics.degenerate_count(mesh))


def mesh_stats(mesh: TriangleMesh) -> MeshStats:
    return MeshMetrics.stats(mesh)
