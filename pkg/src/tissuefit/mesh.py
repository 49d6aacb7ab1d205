"""Hexahedral mesh container, structured box generation, quality, file I/O.

Node ordering convention for an 8-node hex (fixed; the parser rejects
left-handed input rather than reordering):

    bottom face counterclockwise viewed from +z, then the top face:

        0:(-1,-1,-1) 1:(+1,-1,-1) 2:(+1,+1,-1) 3:(-1,+1,-1)
        4:(-1,-1,+1) 5:(+1,-1,+1) 6:(+1,+1,+1) 7:(-1,+1,+1)

All coordinates are SI meters.  A HexMesh is immutable after
construction (arrays are frozen), so it is safe to share across threads.

Mesh file format (text, line-oriented, meters, 1-based contiguous
indices, '#' starts a comment):

    *NODES
    <index> <x> <y> <z>
    *ELEMENTS
    <index> <n1> ... <n8>
    *NSET <name>
    <indices ...>            # may wrap over several lines
    *ELSET <name>
    <indices ...>
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, MeshParseError

__all__ = [
    "HexMesh",
    "QualityReport",
    "generate_box_mesh",
    "element_scaled_jacobian",
    "mesh_quality",
    "parse_mesh",
    "serialize_mesh",
    "nodes_on_plane",
]

# Natural (xi, eta, zeta) corner signs in the ordering documented above.
HEX_CORNER_SIGNS = np.array(
    [
        [-1, -1, -1],
        [+1, -1, -1],
        [+1, +1, -1],
        [-1, +1, -1],
        [-1, -1, +1],
        [+1, -1, +1],
        [+1, +1, +1],
        [-1, +1, +1],
    ],
    dtype=float,
)

# Corner reached by flipping one natural coordinate: edge partners per axis.
_NEIGHBOR = np.array(
    [
        [1, 3, 4],
        [0, 2, 5],
        [3, 1, 6],
        [2, 0, 7],
        [5, 7, 0],
        [4, 6, 1],
        [7, 5, 2],
        [6, 4, 3],
    ],
    dtype=int,
)

# Orientation factor -xi*eta*zeta so a right-handed corner scores +1.
_CORNER_SIGN = -np.prod(HEX_CORNER_SIGNS, axis=1)


def _corner_jacobians(nodes, elements):
    """Scaled corner Jacobians for all elements, shape (E, 8).

    Degenerate corners (a zero-length edge) score exactly 0.
    """
    coords = nodes[elements]                     # (E, 8, 3)
    edges = coords[:, _NEIGHBOR, :] - coords[:, :, None, :]   # (E, 8, 3, 3)
    norms = np.linalg.norm(edges, axis=-1)       # (E, 8, 3)
    degenerate = (norms == 0.0).any(axis=-1)     # (E, 8)
    safe = np.where(norms[..., None] == 0.0, 1.0, norms[..., None])
    unit = edges / safe
    dets = np.linalg.det(unit) * _CORNER_SIGN    # (E, 8)
    dets = np.clip(dets, -1.0, 1.0)
    dets[degenerate] = 0.0
    return dets


@dataclass(eq=False)
class HexMesh:
    """Nodes (N,3) in meters, elements (E,8) 0-based indices, named sets."""

    nodes: np.ndarray
    elements: np.ndarray
    node_sets: dict[str, np.ndarray] = field(default_factory=dict)
    element_sets: dict[str, np.ndarray] = field(default_factory=dict)
    validate: bool = True

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        self.elements = np.ascontiguousarray(np.asarray(self.elements, dtype=np.int64))
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 3:
            raise InvalidArgumentError(f"nodes must be (N, 3), got {self.nodes.shape}")
        if self.elements.ndim != 2 or self.elements.shape[1] != 8:
            raise InvalidArgumentError(
                f"elements must be (E, 8), got {self.elements.shape}"
            )
        self.node_sets = {
            k: np.ascontiguousarray(np.asarray(v, dtype=np.int64))
            for k, v in self.node_sets.items()
        }
        self.element_sets = {
            k: np.ascontiguousarray(np.asarray(v, dtype=np.int64))
            for k, v in self.element_sets.items()
        }
        if self.validate:
            self._validate()
        for arr in (self.nodes, self.elements, *self.node_sets.values(),
                    *self.element_sets.values()):
            arr.setflags(write=False)

    def _validate(self):
        n, e = len(self.nodes), len(self.elements)
        if not np.isfinite(self.nodes).all():
            raise InvalidArgumentError("node coordinates contain non-finite values")
        if e:
            if self.elements.min() < 0 or self.elements.max() >= n:
                bad = int(
                    np.flatnonzero(
                        (self.elements < 0).any(axis=1)
                        | (self.elements >= n).any(axis=1)
                    )[0]
                )
                raise InvalidArgumentError(
                    f"element {bad} references a node index outside 0..{n - 1}"
                )
            sorted_conn = np.sort(self.elements, axis=1)
            dup = (sorted_conn[:, 1:] == sorted_conn[:, :-1]).any(axis=1)
            if dup.any():
                raise InvalidArgumentError(
                    f"element {int(np.flatnonzero(dup)[0])} repeats a node index"
                )
            corners = _corner_jacobians(self.nodes, self.elements)
            bad = np.flatnonzero(corners.min(axis=1) <= 0.0)
            if bad.size:
                raise InvalidArgumentError(
                    f"element {int(bad[0])} is not right-handed "
                    f"(min corner scaled Jacobian = {corners[bad[0]].min():.3e})"
                )
        for name, idx in self.node_sets.items():
            self._check_set(name, idx, n, "node")
        for name, idx in self.element_sets.items():
            self._check_set(name, idx, e, "element")

    @staticmethod
    def _check_set(name, idx, count, kind):
        if idx.size and (idx.min() < 0 or idx.max() >= count):
            raise InvalidArgumentError(
                f"{kind} set '{name}' references index outside 0..{count - 1}"
            )
        if len(np.unique(idx)) != len(idx):
            raise InvalidArgumentError(f"{kind} set '{name}' contains duplicates")

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def element_count(self) -> int:
        return len(self.elements)

    def with_node_set(self, name: str, indices) -> "HexMesh":
        """New mesh sharing geometry, with one node set added/replaced."""
        sets = dict(self.node_sets)
        sets[name] = np.asarray(indices, dtype=np.int64)
        return HexMesh(self.nodes, self.elements, sets, dict(self.element_sets))

    def __eq__(self, other):
        if not isinstance(other, HexMesh):
            return NotImplemented
        return (
            np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.elements, other.elements)
            and self.node_sets.keys() == other.node_sets.keys()
            and self.element_sets.keys() == other.element_sets.keys()
            and all(np.array_equal(v, other.node_sets[k]) for k, v in self.node_sets.items())
            and all(np.array_equal(v, other.element_sets[k]) for k, v in self.element_sets.items())
        )


@dataclass(frozen=True)
class QualityReport:
    per_element_mean_jacobian: np.ndarray   # (E,), dimensionless
    mesh_mean_jacobian: float
    min_corner_jacobian: float
    node_count: int
    element_count: int
    inverted_elements: np.ndarray           # indices with any corner <= 0


def generate_box_mesh(lengths, divisions) -> HexMesh:
    """Axis-aligned structured grid with node sets 'bottom' and 'top'.

    lengths: three positive extents in meters; divisions: elements per axis.
    """
    lengths = tuple(float(v) for v in lengths)
    divisions = tuple(int(v) for v in divisions)
    if len(lengths) != 3 or len(divisions) != 3:
        raise InvalidArgumentError("lengths and divisions must each have 3 entries")
    if any(v <= 0 for v in lengths):
        raise InvalidArgumentError(f"lengths must be positive, got {lengths}")
    if any(d < 1 for d in divisions):
        raise InvalidArgumentError(f"divisions must be >= 1, got {divisions}")

    nx, ny, nz = divisions
    xs = np.linspace(0.0, lengths[0], nx + 1)
    ys = np.linspace(0.0, lengths[1], ny + 1)
    zs = np.linspace(0.0, lengths[2], nz + 1)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    # node id = i + j*(nx+1) + k*(nx+1)*(ny+1)
    nodes = np.stack(
        [X.transpose(2, 1, 0).ravel(), Y.transpose(2, 1, 0).ravel(),
         Z.transpose(2, 1, 0).ravel()],
        axis=1,
    )

    def nid(i, j, k):
        return i + j * (nx + 1) + k * (nx + 1) * (ny + 1)

    i, j, k = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    i, j, k = i.ravel(), j.ravel(), k.ravel()
    elements = np.stack(
        [
            nid(i, j, k), nid(i + 1, j, k), nid(i + 1, j + 1, k), nid(i, j + 1, k),
            nid(i, j, k + 1), nid(i + 1, j, k + 1), nid(i + 1, j + 1, k + 1),
            nid(i, j + 1, k + 1),
        ],
        axis=1,
    )
    # keep element id = i + j*nx + k*nx*ny
    order = np.lexsort((i, j, k))
    elements = elements[order]

    plane = np.arange((nx + 1) * (ny + 1), dtype=np.int64)
    node_sets = {
        "bottom": plane.copy(),
        "top": plane + nz * (nx + 1) * (ny + 1),
    }
    return HexMesh(nodes, elements, node_sets)


def element_scaled_jacobian(mesh: HexMesh, element_index: int):
    """Per-corner scaled Jacobians (8,) and their mean for one element."""
    if not 0 <= element_index < mesh.element_count:
        raise InvalidArgumentError(
            f"element index {element_index} outside 0..{mesh.element_count - 1}"
        )
    corners = _corner_jacobians(mesh.nodes, mesh.elements[element_index : element_index + 1])[0]
    return corners, float(corners.mean())


def mesh_quality(mesh: HexMesh) -> QualityReport:
    """Aggregate scaled-Jacobian quality over all elements."""
    if mesh.element_count == 0:
        raise InvalidArgumentError("mesh has no elements")
    corners = _corner_jacobians(mesh.nodes, mesh.elements)
    per_element = corners.mean(axis=1)
    return QualityReport(
        per_element_mean_jacobian=per_element,
        mesh_mean_jacobian=float(per_element.mean()),
        min_corner_jacobian=float(corners.min()),
        node_count=mesh.node_count,
        element_count=mesh.element_count,
        inverted_elements=np.flatnonzero(corners.min(axis=1) <= 0.0),
    )


def nodes_on_plane(mesh: HexMesh, axis: int, value: float, tol: float = 1e-9):
    """Indices of nodes whose `axis` coordinate equals `value` within tol."""
    return np.flatnonzero(np.abs(mesh.nodes[:, axis] - value) <= tol)


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def serialize_mesh(mesh: HexMesh) -> str:
    """Text form of the mesh; floats use repr so round-trips are exact."""
    out = io.StringIO()
    out.write("# hexahedral mesh, coordinates in meters\n")
    out.write("*NODES\n")
    for i, (x, y, z) in enumerate(mesh.nodes, start=1):
        out.write(f"{i} {float(x)!r} {float(y)!r} {float(z)!r}\n")
    out.write("*ELEMENTS\n")
    for i, conn in enumerate(mesh.elements, start=1):
        out.write(f"{i} " + " ".join(str(int(n) + 1) for n in conn) + "\n")
    for name, idx in mesh.node_sets.items():
        out.write(f"*NSET {name}\n")
        _write_indices(out, idx)
    for name, idx in mesh.element_sets.items():
        out.write(f"*ELSET {name}\n")
        _write_indices(out, idx)
    return out.getvalue()


def _write_indices(out, idx):
    idx = [str(int(v) + 1) for v in idx]
    for start in range(0, len(idx), 16):
        out.write(" ".join(idx[start : start + 16]) + "\n")
    if not idx:
        out.write("\n")


def parse_mesh(source) -> HexMesh:
    """Parse the text mesh format; validates all invariants.

    `source` may be a string or a readable text stream.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source

    nodes: list[tuple] = []
    elements: list[tuple] = []
    element_lines: list[int] = []
    node_sets: dict[str, list[int]] = {}
    element_sets: dict[str, list[int]] = {}
    set_lines: dict[tuple, int] = {}
    section = None
    current_set = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("*"):
            parts = line.split()
            keyword = parts[0].upper()
            if keyword == "*NODES":
                section = "nodes"
            elif keyword == "*ELEMENTS":
                section = "elements"
            elif keyword in ("*NSET", "*ELSET"):
                if len(parts) != 2:
                    raise MeshParseError(f"{keyword} requires a name", lineno)
                name = parts[1]
                target = node_sets if keyword == "*NSET" else element_sets
                if name in target:
                    raise MeshParseError(
                        f"duplicate set name '{name}'", lineno
                    )
                target[name] = []
                current_set = target[name]
                set_lines[(keyword, name)] = lineno
                section = "set"
            else:
                raise MeshParseError(f"unknown section '{parts[0]}'", lineno)
            continue

        if section == "nodes":
            parts = line.split()
            if len(parts) != 4:
                raise MeshParseError(
                    f"node line needs 'index x y z', got {len(parts)} fields", lineno
                )
            idx = _parse_index(parts[0], lineno, "node")
            if idx != len(nodes) + 1:
                raise MeshParseError(
                    f"node index {idx} out of order (expected {len(nodes) + 1})",
                    lineno,
                )
            try:
                nodes.append(tuple(float(v) for v in parts[1:]))
            except ValueError:
                raise MeshParseError(f"bad coordinate in '{line}'", lineno) from None
        elif section == "elements":
            parts = line.split()
            if len(parts) != 9:
                raise MeshParseError(
                    f"element line needs 'index n1..n8', got {len(parts)} fields",
                    lineno,
                )
            idx = _parse_index(parts[0], lineno, "element")
            if idx != len(elements) + 1:
                raise MeshParseError(
                    f"element index {idx} out of order (expected {len(elements) + 1})",
                    lineno,
                )
            conn = tuple(_parse_index(v, lineno, "element node") - 1 for v in parts[1:])
            for n in conn:
                if n < 0 or n >= len(nodes):
                    raise MeshParseError(
                        f"element {idx} references node {n + 1}, "
                        f"but only {len(nodes)} nodes are defined",
                        lineno,
                    )
            elements.append(conn)
            element_lines.append(lineno)
        elif section == "set":
            current_set.extend(_parse_index(v, lineno, "set member") - 1 for v in line.split())
        else:
            raise MeshParseError(f"data before any section: '{line}'", lineno)

    try:
        return HexMesh(
            np.asarray(nodes, dtype=float).reshape(len(nodes), 3),
            np.asarray(elements, dtype=np.int64).reshape(len(elements), 8),
            {k: np.asarray(v, dtype=np.int64) for k, v in node_sets.items()},
            {k: np.asarray(v, dtype=np.int64) for k, v in element_sets.items()},
        )
    except InvalidArgumentError as exc:
        raise MeshParseError(str(exc)) from exc


def _parse_index(token, lineno, what):
    try:
        value = int(token)
    except ValueError:
        raise MeshParseError(f"bad {what} index '{token}'", lineno) from None
    if value < 1:
        raise MeshParseError(f"{what} index must be >= 1, got {value}", lineno)
    return value
