"""Triangle meshes with certified mass/bounding-box metadata, plus OBJ I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import MetadataError, ParseError

# Bounding boxes thinner than this cannot be used for depth normalization.
MIN_DIAGONAL_M = 1e-3


@dataclass
class TriangleMesh:
    vertices: np.ndarray  # (V, 3) float64, meters
    faces: np.ndarray  # (F, 3) int64 vertex indices
    mass: float  # kg
    bbox_min: np.ndarray  # (3,)
    bbox_max: np.ndarray  # (3,)
    id: str = ""
    albedo: tuple | None = None  # optional base color from metadata

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        self.bbox_min = np.asarray(self.bbox_min, dtype=np.float64).reshape(3)
        self.bbox_max = np.asarray(self.bbox_max, dtype=np.float64).reshape(3)
        if self.faces.size and (
            self.faces.min() < 0 or self.faces.max() >= len(self.vertices)
        ):
            raise ParseError(f"face index out of range in mesh '{self.id}'")
        if not np.all(self.bbox_min <= self.bbox_max):
            raise MetadataError(f"bbox_min > bbox_max in mesh '{self.id}'")
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise MetadataError(f"non-positive mass for mesh '{self.id}'")
        if self.diagonal < MIN_DIAGONAL_M:
            raise MetadataError(
                f"degenerate bounding box (diagonal {self.diagonal:.2e} m) for mesh '{self.id}'"
            )

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.bbox_max - self.bbox_min))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.bbox_min + self.bbox_max)


def parse_obj(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Parse OBJ text into (vertices, faces). Polygons are fan-triangulated."""
    vertices: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            if len(parts) < 4:
                raise ParseError(f"line {lineno}: vertex needs 3 coordinates")
            try:
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError as exc:
                raise ParseError(f"line {lineno}: bad vertex coordinate") from exc
        elif parts[0] == "f":
            idx = []
            for token in parts[1:]:
                head = token.split("/")[0]
                try:
                    i = int(head)
                except ValueError as exc:
                    raise ParseError(f"line {lineno}: bad face index '{token}'") from exc
                # OBJ is 1-based; negative indices count from the end
                idx.append(i - 1 if i > 0 else len(vertices) + i)
            if len(idx) < 3:
                raise ParseError(f"line {lineno}: face needs at least 3 vertices")
            for a, b in zip(idx[1:-1], idx[2:]):
                faces.append([idx[0], a, b])
    if not vertices or not faces:
        raise ParseError("OBJ file contains no triangles")
    return np.array(vertices, dtype=np.float64), np.array(faces, dtype=np.int64)


def load_mesh(path: str | Path, metadata: dict) -> TriangleMesh:
    """Load an OBJ mesh and attach certified metadata.

    `metadata` must provide a positive "mass" (kg) and the bounding box,
    either as explicit "bbox_min"/"bbox_max" corners or as "dims" extents
    (the box is then centered on the vertex bounds).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read mesh file {path}: {exc}") from exc
    vertices, faces = parse_obj(text)

    if "mass" not in metadata or metadata["mass"] is None:
        raise MetadataError(f"missing mass for mesh {path.stem}")
    mass = float(metadata["mass"])

    if "bbox_min" in metadata and "bbox_max" in metadata:
        bbox_min = np.asarray(metadata["bbox_min"], dtype=np.float64)
        bbox_max = np.asarray(metadata["bbox_max"], dtype=np.float64)
    elif "dims" in metadata:
        dims = np.asarray(metadata["dims"], dtype=np.float64)
        if dims.shape != (3,) or not np.all(dims > 0):
            raise MetadataError(f"invalid dims for mesh {path.stem}")
        mid = 0.5 * (vertices.min(axis=0) + vertices.max(axis=0))
        bbox_min, bbox_max = mid - dims / 2, mid + dims / 2
    else:
        raise MetadataError(f"missing bounding box for mesh {path.stem}")

    color = metadata.get("color")
    return TriangleMesh(
        vertices=vertices,
        faces=faces,
        mass=mass,
        bbox_min=bbox_min,
        bbox_max=bbox_max,
        id=metadata.get("id", path.stem),
        albedo=tuple(color) if color is not None else None,
    )


def load_mesh_with_sidecar(obj_path: str | Path) -> TriangleMesh:
    """Load `<stem>.obj` with its `<stem>.json` metadata sidecar."""
    obj_path = Path(obj_path)
    sidecar = obj_path.with_suffix(".json")
    if not sidecar.exists():
        raise MetadataError(f"missing metadata sidecar {sidecar}")
    try:
        metadata = json.loads(sidecar.read_text())
    except json.JSONDecodeError as exc:
        raise MetadataError(f"malformed metadata sidecar {sidecar}: {exc}") from exc
    return load_mesh(obj_path, metadata)


def write_obj(path: str | Path, vertices: np.ndarray, faces: np.ndarray) -> None:
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in np.asarray(vertices)]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in np.asarray(faces)]
    Path(path).write_text("\n".join(lines) + "\n")


def mesh_volume(vertices: np.ndarray, faces: np.ndarray) -> float:
    """Enclosed volume of a closed mesh via the signed-tetrahedron sum."""
    tri = np.asarray(vertices)[np.asarray(faces)]
    signed = np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2]))
    return float(abs(signed.sum()) / 6.0)


# ---------------------------------------------------------------------------
# Procedural primitives (desk-scale corpora and test fixtures)
# ---------------------------------------------------------------------------


def box_mesh(extents) -> tuple[np.ndarray, np.ndarray]:
    ex, ey, ez = [float(e) / 2 for e in extents]
    v = np.array(
        [
            [-ex, -ey, -ez], [ex, -ey, -ez], [ex, ey, -ez], [-ex, ey, -ez],
            [-ex, -ey, ez], [ex, -ey, ez], [ex, ey, ez], [-ex, ey, ez],
        ]
    )
    quads = [
        (0, 3, 2, 1),  # bottom (-z)
        (4, 5, 6, 7),  # top (+z)
        (0, 1, 5, 4),  # -y
        (2, 3, 7, 6),  # +y
        (1, 2, 6, 5),  # +x
        (3, 0, 4, 7),  # -x
    ]
    f = []
    for a, b, c, d in quads:
        f += [[a, b, c], [a, c, d]]
    return v, np.array(f, dtype=np.int64)


def cylinder_mesh(radius: float, height: float, segments: int = 24):
    angles = 2 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=1)
    bottom = np.column_stack([ring, np.full(segments, -height / 2)])
    top = np.column_stack([ring, np.full(segments, height / 2)])
    v = np.vstack([bottom, top, [[0, 0, -height / 2]], [[0, 0, height / 2]]])
    cb, ct = 2 * segments, 2 * segments + 1
    f = []
    for i in range(segments):
        j = (i + 1) % segments
        f += [[i, j, segments + j], [i, segments + j, segments + i]]  # wall
        f += [[cb, j, i], [ct, segments + i, segments + j]]  # caps
    return v, np.array(f, dtype=np.int64)


def pyramid_mesh(base_x: float, base_y: float, height: float):
    bx, by = base_x / 2, base_y / 2
    v = np.array(
        [
            [-bx, -by, -height / 2], [bx, -by, -height / 2],
            [bx, by, -height / 2], [-bx, by, -height / 2],
            [0, 0, height / 2],
        ]
    )
    f = np.array(
        [[0, 2, 1], [0, 3, 2], [0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]],
        dtype=np.int64,
    )
    return v, f


def wedge_mesh(extents):
    """Right triangular prism filling half of the given box."""
    ex, ey, ez = [float(e) / 2 for e in extents]
    v = np.array(
        [
            [-ex, -ey, -ez], [ex, -ey, -ez], [ex, ey, -ez], [-ex, ey, -ez],
            [-ex, -ey, ez], [-ex, ey, ez],
        ]
    )
    f = np.array(
        [
            [0, 3, 2], [0, 2, 1],  # bottom
            [0, 1, 4], [2, 3, 5],  # triangular ends
            [1, 2, 5], [1, 5, 4],  # slanted face
            [0, 4, 5], [0, 5, 3],  # -x face
        ],
        dtype=np.int64,
    )
    return v, f


def icosphere_mesh(radius: float, subdivisions: int = 2):
    phi = (1 + 5**0.5) / 2
    v = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}
        verts = list(v)

        def midpoint(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in cache:
                cache[key] = len(verts)
                verts.append((verts[a] + verts[b]) / 2)
            return cache[key]

        new_f = []
        for a, b, c in f:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_f += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        v, f = np.array(verts), np.array(new_f, dtype=np.int64)
    v = v / np.linalg.norm(v, axis=1, keepdims=True) * radius
    return v, f


def rotate_z(vertices: np.ndarray, angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
    return vertices @ rot.T
