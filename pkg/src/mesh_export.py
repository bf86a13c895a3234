"""
Mesh Export Module
Binary STL, SVG cutting outlines and ASCII OBJ, with readers used by validation
"""

import logging
import re
from typing import Optional, Sequence

import numpy as np

from src.errors import InputError, MeshError
from src.geodata import Polyline2D
from src.mesher import TriangleMesh

logger = logging.getLogger(__name__)

STL_HEADER = b"balaton-tableware binary STL; units mm".ljust(80, b" ")
STL_RECORD = np.dtype([
    ("normal", "<f4", (3,)),
    ("vertices", "<f4", (3, 3)),
    ("attributes", "<u2"),
])
_MAX_TRIANGLES = 0xFFFFFFFF


# ---------------------------------------------------------------------------
# STL
# ---------------------------------------------------------------------------

def _facet_normals(corners: np.ndarray) -> np.ndarray:
    """Unit normals from the winding of float32 corners; zero for slivers"""
    c = corners.astype(np.float64)
    normals = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    length = np.linalg.norm(normals, axis=1)
    nonzero = length > 0
    normals[nonzero] /= length[nonzero, None]
    normals[~nonzero] = 0.0
    return normals.astype("<f4") + np.float32(0.0)


def export_stl(mesh: TriangleMesh) -> bytes:
    """Serialise to binary STL; coordinates are rounded to float32"""
    count = len(mesh.triangles)
    if count > _MAX_TRIANGLES:
        raise MeshError(f"{count} triangles exceed the STL 32-bit count")

    # +0.0 turns -0.0 into 0.0 so a read/write cycle is byte-stable
    corners = mesh.vertices[mesh.triangles].astype("<f4") + np.float32(0.0)
    records = np.zeros(count, dtype=STL_RECORD)
    records["vertices"] = corners
    records["normal"] = _facet_normals(corners)
    return STL_HEADER + np.array([count], dtype="<u4").tobytes() + records.tobytes()


def read_stl(data: bytes, source: Optional[str] = None) -> TriangleMesh:
    """Parse binary STL, merging bit-identical corner coordinates into shared vertices"""
    name = source or "<stl>"
    if len(data) < 84:
        raise InputError(f"{name}: truncated STL header ({len(data)} bytes)")
    count = int(np.frombuffer(data, dtype="<u4", count=1, offset=80)[0])
    expected = 84 + STL_RECORD.itemsize * count
    if len(data) != expected:
        raise InputError(f"{name}: size mismatch, header declares {count} triangles "
                         f"({expected} bytes) but file has {len(data)} bytes")
    if count == 0:
        return TriangleMesh.empty()

    records = np.frombuffer(data, dtype=STL_RECORD, count=count, offset=84)
    corners = records["vertices"].reshape(-1, 3)
    unique, inverse = np.unique(corners, axis=0, return_inverse=True)
    return TriangleMesh(unique.astype(np.float64), inverse.reshape(-1, 3))


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_VIEWBOX = re.compile(r'viewBox="([^"]+)"')
_PATH_DATA = re.compile(r'<path[^>]*\sd="([^"]+)"')
_COMMAND = re.compile(r"([ML])\s*(-?[\d.]+(?:[eE][-+]?\d+)?)[ ,]\s*(-?[\d.]+(?:[eE][-+]?\d+)?)")


def export_svg_outline(outline: Polyline2D, frame: Sequence[float]) -> str:
    """
    SVG 1.1 document with one path in millimetre user units

    Outline coordinates have y up; the path flips them into SVG's y-down
    frame so the template is not mirrored.
    """
    width, height = (float(v) for v in frame)
    commands = []
    for index, (x, y) in enumerate(outline.vertices):
        letter = "M" if index == 0 else "L"
        commands.append(f"{letter} {x:.4f},{height - y:.4f}")
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width:g}mm" height="{height:g}mm" viewBox="0 0 {width:g} {height:g}">\n'
        f'  <path d="{" ".join(commands)}" fill="none" stroke="black" stroke-width="0.2"/>\n'
        "</svg>\n"
    )


def parse_svg_path(text: str) -> Polyline2D:
    """Read back the outline written by export_svg_outline, y up again"""
    box = _VIEWBOX.search(text)
    path = _PATH_DATA.search(text)
    if box is None or path is None:
        raise InputError("SVG has no viewBox or path element")
    height = float(box.group(1).split()[3])
    points = [(float(x), height - float(y)) for _, x, y in _COMMAND.findall(path.group(1))]
    return Polyline2D(points)


# ---------------------------------------------------------------------------
# OBJ
# ---------------------------------------------------------------------------

def export_obj(mesh: TriangleMesh, comment: str = "") -> str:
    """ASCII OBJ, vertices then 1-based faces"""
    lines = [f"# {comment}"] if comment else []
    lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    return "\n".join(lines) + "\n"
