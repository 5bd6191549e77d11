"""Two-region tetrahedral meshes with derived interface topology.

The mesh splits into a conducting region and an insulating region.  All
face and edge classification is derived from the volume regions:

    CONDUCTOR_INTERIOR  face between two conducting cells
    INSULATOR_INTERIOR  face between two insulating cells
    INTERFACE           face between the regions (conductor side owns it)
    OUTER_INSULATOR     boundary face of an insulating cell
    OUTER_CONDUCTOR     boundary face of a conducting cell; rejected by
                        default since the conductor must not touch the
                        domain boundary (``strict=False`` downgrades this
                        to a warning and such faces join no form set)

Interface edges are the edges shared by exactly two interface faces;
they carry the induced tangents of both faces, which are exactly
opposite on a consistently oriented closed interface.
"""

import warnings
from enum import IntEnum

import numpy as np

__all__ = [
    "FaceKind",
    "Mesh",
    "MeshError",
    "MeshWarning",
    "REGION_CONDUCTOR",
    "REGION_INSULATOR",
    "load_msh",
    "write_msh",
]

REGION_CONDUCTOR = 0
REGION_INSULATOR = 1

#: local face i is opposite local vertex i
_LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))


class FaceKind(IntEnum):
    CONDUCTOR_INTERIOR = 0
    INSULATOR_INTERIOR = 1
    INTERFACE = 2
    OUTER_INSULATOR = 3
    OUTER_CONDUCTOR = 4


class MeshError(Exception):
    """Invalid mesh geometry, topology or file contents."""


class MeshWarning(UserWarning):
    """Non-fatal mesh irregularity."""


class Mesh:
    """Tetrahedral mesh of a conductor embedded in an insulator.

    Parameters
    ----------
    vertices : ndarray, shape (nv, 3)
    cells : ndarray, shape (nc, 4)
        Vertex indices per tetrahedron (orientation free).
    cell_region : ndarray, shape (nc,)
        REGION_CONDUCTOR or REGION_INSULATOR per cell.
    cell_material : sequence of str
        Material key per cell, used to look up coefficients.
    strict : bool
        If True (default), a conducting cell touching the domain
        boundary is a topology error.
    """

    def __init__(self, vertices, cells, cell_region, cell_material, *, strict=True):
        self.vertices = np.asarray(vertices, dtype=np.float64)
        self.cells = np.asarray(cells, dtype=np.int32)
        self.cell_region = np.asarray(cell_region, dtype=np.int8)
        self.cell_material = np.asarray(list(cell_material), dtype=object)
        self.strict = bool(strict)
        self.notes = []
        self._validate_input()
        self._build_cell_geometry()
        self._build_faces()
        self._build_interface_edges()

    # -- construction -------------------------------------------------

    def _validate_input(self):
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must have shape (nv, 3)")
        if self.cells.ndim != 2 or self.cells.shape[1] != 4:
            raise MeshError("cells must have shape (nc, 4)")
        nc = len(self.cells)
        if len(self.cell_region) != nc or len(self.cell_material) != nc:
            raise MeshError("per-cell arrays must match the cell count")
        if self.cells.min(initial=0) < 0 or self.cells.max(initial=-1) >= len(self.vertices):
            raise MeshError("cell vertex index out of range")
        if np.any((np.sort(self.cells, axis=1)[:, 1:] == np.sort(self.cells, axis=1)[:, :-1])):
            raise MeshError("cell with repeated vertex")
        if not np.all(np.isin(self.cell_region, (REGION_CONDUCTOR, REGION_INSULATOR))):
            raise MeshError("unknown cell region value")

    def _build_cell_geometry(self):
        v = self.vertices[self.cells]  # (nc, 4, 3)
        edges = v[:, (0, 0, 0, 1, 1, 2), :] - v[:, (1, 2, 3, 2, 3, 3), :]
        self.cell_h = np.linalg.norm(edges, axis=2).max(axis=1)
        det = np.linalg.det(v[:, 1:] - v[:, :1])
        self.cell_volume = np.abs(det) / 6.0
        bad = self.cell_volume <= 1e-12 * self.cell_h**3
        if np.any(bad):
            raise MeshError(f"degenerate cell(s): {np.nonzero(bad)[0][:5].tolist()}")
        self.cell_centroid = v.mean(axis=1)

    def _build_faces(self):
        face_map = {}
        for c in range(len(self.cells)):
            cv = self.cells[c]
            for lf, (i, j, k) in enumerate(_LOCAL_FACES):
                tri = tuple(sorted((int(cv[i]), int(cv[j]), int(cv[k]))))
                face_map.setdefault(tri, []).append((c, lf))
        for tri, sides in face_map.items():
            if len(sides) > 2:
                raise MeshError(f"face {tri} shared by more than two cells")

        tris = sorted(face_map)
        nf = len(tris)
        self.faces = np.array(tris, dtype=np.int32).reshape(nf, 3)
        self.face_cells = np.full((nf, 2), -1, dtype=np.int32)
        self.face_local = np.full((nf, 2), -1, dtype=np.int8)
        self.face_kind = np.empty(nf, dtype=np.int8)

        outer_conductor = []
        for f, tri in enumerate(tris):
            sides = face_map[tri]
            if len(sides) == 1:
                (c, lf), = sides
                self.face_cells[f, 0] = c
                self.face_local[f, 0] = lf
                if self.cell_region[c] == REGION_INSULATOR:
                    self.face_kind[f] = FaceKind.OUTER_INSULATOR
                else:
                    self.face_kind[f] = FaceKind.OUTER_CONDUCTOR
                    outer_conductor.append(f)
                continue
            (c0, l0), (c1, l1) = sides
            r0, r1 = self.cell_region[c0], self.cell_region[c1]
            if r0 != r1:
                # conductor side owns the interface; its outward normal is n_Gamma
                if r0 != REGION_CONDUCTOR:
                    (c0, l0), (c1, l1) = (c1, l1), (c0, l0)
                self.face_kind[f] = FaceKind.INTERFACE
            else:
                if c1 < c0:
                    (c0, l0), (c1, l1) = (c1, l1), (c0, l0)
                self.face_kind[f] = (
                    FaceKind.CONDUCTOR_INTERIOR
                    if r0 == REGION_CONDUCTOR
                    else FaceKind.INSULATOR_INTERIOR
                )
            self.face_cells[f] = (c0, c1)
            self.face_local[f] = (l0, l1)

        if outer_conductor:
            msg = (
                f"{len(outer_conductor)} conducting face(s) on the domain boundary; "
                "the conductor must be strictly inside the insulator"
            )
            if self.strict:
                raise MeshError(msg)
            warnings.warn(msg, MeshWarning, stacklevel=3)
            self.notes.append(msg)

        fv = self.vertices[self.faces]  # (nf, 3, 3)
        e01 = fv[:, 1] - fv[:, 0]
        e02 = fv[:, 2] - fv[:, 0]
        raw = np.cross(e01, e02)
        norms = np.linalg.norm(raw, axis=1)
        if np.any(norms <= 0):
            raise MeshError("degenerate face")
        self.face_area = norms / 2.0
        normal = raw / norms[:, None]
        # orient outward from the owner cell
        toward = fv.mean(axis=1) - self.cell_centroid[self.face_cells[:, 0]]
        sign = np.sign(np.einsum("fi,fi->f", normal, toward))
        if np.any(sign == 0):
            raise MeshError("face normal orthogonal to owner offset")
        self.face_normal = normal * sign[:, None]
        self.face_h = np.maximum(
            np.linalg.norm(e01, axis=1),
            np.maximum(np.linalg.norm(e02, axis=1), np.linalg.norm(fv[:, 2] - fv[:, 1], axis=1)),
        )

        # orientation invariant: the normal points from owner to neighbour
        interior = self.face_cells[:, 1] >= 0
        offs = self.cell_centroid[self.face_cells[interior, 1]] - self.cell_centroid[
            self.face_cells[interior, 0]
        ]
        if np.any(np.einsum("fi,fi->f", self.face_normal[interior], offs) <= 0):
            raise MeshError("inconsistent face orientation")

    def _build_interface_edges(self):
        edge_map = {}
        for f in np.nonzero(self.face_kind == FaceKind.INTERFACE)[0]:
            a, b, c = (int(x) for x in self.faces[f])
            for e in ((a, b), (a, c), (b, c)):
                edge_map.setdefault(e, []).append(int(f))

        dangling = 0
        entries = []
        for e in sorted(edge_map):
            fs = edge_map[e]
            if len(fs) == 1:
                dangling += 1
                continue
            if len(fs) > 2:
                raise MeshError(f"interface edge {e} shared by {len(fs)} interface faces")
            entries.append((e, sorted(fs)))
        if dangling:
            msg = f"{dangling} interface edge(s) belong to a single interface face; skipped"
            warnings.warn(msg, MeshWarning, stacklevel=3)
            self.notes.append(msg)

        ne = len(entries)
        self.edge_vertices = np.zeros((ne, 2), dtype=np.int32)
        self.edge_faces = np.zeros((ne, 2), dtype=np.int32)
        self.edge_tangents = np.zeros((ne, 2, 3), dtype=np.float64)
        self.edge_h = np.zeros(ne, dtype=np.float64)
        for i, ((a, b), (f1, f2)) in enumerate(entries):
            self.edge_vertices[i] = (a, b)
            self.edge_faces[i] = (f1, f2)
            d = self.vertices[b] - self.vertices[a]
            self.edge_h[i] = np.linalg.norm(d)
            d = d / self.edge_h[i]
            mid = (self.vertices[a] + self.vertices[b]) / 2.0
            for s, f in enumerate((f1, f2)):
                n = self.face_normal[f]
                (w,) = [v for v in self.faces[f] if v != a and v != b]
                nu = np.cross(d, n)
                if np.dot(nu, mid - self.vertices[w]) < 0:
                    nu = -nu
                self.edge_tangents[i, s] = np.cross(n, nu)
            if not np.allclose(
                self.edge_tangents[i, 0], -self.edge_tangents[i, 1], atol=1e-12
            ):
                raise MeshError(f"interface tangents at edge {(a, b)} are not opposite")

    # -- queries -------------------------------------------------------

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def num_cells(self):
        return len(self.cells)

    @property
    def num_faces(self):
        return len(self.faces)

    @property
    def conductor_cells(self):
        return np.nonzero(self.cell_region == REGION_CONDUCTOR)[0]

    @property
    def insulator_cells(self):
        return np.nonzero(self.cell_region == REGION_INSULATOR)[0]

    def faces_of_kind(self, *kinds):
        mask = np.isin(self.face_kind, [int(k) for k in kinds])
        return np.nonzero(mask)[0]

    @property
    def interface_faces(self):
        return self.faces_of_kind(FaceKind.INTERFACE)

    def cell_local_face_vertices(self, local_face):
        """Local vertex indices of a local face (opposite-vertex rule)."""
        return _LOCAL_FACES[local_face]

    def metrics(self):
        """Geometric and classification summary."""
        kinds = {k: int(np.count_nonzero(self.face_kind == k)) for k in FaceKind}
        cond = self.cell_region == REGION_CONDUCTOR
        return {
            "num_vertices": self.num_vertices,
            "num_cells": self.num_cells,
            "num_faces": self.num_faces,
            "num_interface_edges": len(self.edge_vertices),
            "h_max": float(self.cell_h.max()),
            "h_min": float(self.cell_h.min()),
            "volume_conductor": float(self.cell_volume[cond].sum()),
            "volume_insulator": float(self.cell_volume[~cond].sum()),
            "area_interface": float(self.face_area[self.face_kind == FaceKind.INTERFACE].sum()),
            "area_outer": float(self.face_area[self.face_kind == FaceKind.OUTER_INSULATOR].sum()),
            "face_counts": {k.name: kinds[k] for k in FaceKind},
        }


# -- MSH 2.2 input/output ---------------------------------------------

_TET = 4
_TRIANGLE = 2
#: nodes per element for the element types we may encounter
_MSH_NNODES = {1: 2, 2: 3, 3: 4, 4: 4, 5: 8, 6: 6, 7: 5, 15: 1}


def _region_of_name(name):
    low = name.lower()
    if low.startswith("conductor"):
        return REGION_CONDUCTOR
    if low.startswith("insulator"):
        return REGION_INSULATOR
    return None


def load_msh(path, *, strict=True, region_tags=None):
    """Read an ASCII MSH 2.2 file into a Mesh.

    Volume regions come from physical names: names starting with
    ``conductor``/``insulator`` map to the regions, the full name is the
    material key.  ``region_tags`` maps physical tags to names for files
    without a $PhysicalNames section.  Tagged ``gamma``/``sigma``
    triangles, when present, are cross-checked against the derived
    classification.
    """
    region_tags = dict(region_tags or {})
    sections = _read_sections(path)

    fmt = sections.get("MeshFormat")
    if not fmt:
        raise MeshError(f"{path}: missing $MeshFormat")
    version, file_type = fmt[0].split()[:2]
    if not version.startswith("2.2") or file_type != "0":
        raise MeshError(f"{path}: need ASCII MSH 2.2, got version {version}")

    names = {}
    for line in sections.get("PhysicalNames", [])[1:]:
        parts = line.split(maxsplit=2)
        names[int(parts[1])] = parts[2].strip().strip('"')
    names.update(region_tags)

    node_lines = sections.get("Nodes")
    if not node_lines:
        raise MeshError(f"{path}: missing $Nodes")
    ids, coords = [], []
    for line in node_lines[1 : 1 + int(node_lines[0])]:
        parts = line.split()
        ids.append(int(parts[0]))
        coords.append([float(x) for x in parts[1:4]])
    renumber = {i: k for k, i in enumerate(ids)}
    vertices = np.array(coords, dtype=np.float64)

    elem_lines = sections.get("Elements")
    if not elem_lines:
        raise MeshError(f"{path}: missing $Elements")
    cells, regions, materials, tagged_tris = [], [], [], []
    for line in elem_lines[1 : 1 + int(elem_lines[0])]:
        parts = [int(x) for x in line.split()]
        etype, ntags = parts[1], parts[2]
        tags = parts[3 : 3 + ntags]
        nodes = parts[3 + ntags :]
        if etype not in _MSH_NNODES or len(nodes) != _MSH_NNODES[etype]:
            raise MeshError(f"{path}: malformed element line {parts[0]}")
        phys = tags[0] if tags else 0
        if etype == _TET:
            name = names.get(phys)
            if name is None:
                raise MeshError(f"{path}: volume element with unknown physical tag {phys}")
            region = _region_of_name(name)
            if region is None:
                raise MeshError(
                    f"{path}: physical name {name!r} is neither conductor nor insulator"
                )
            cells.append([renumber[n] for n in nodes])
            regions.append(region)
            materials.append(name)
        elif etype == _TRIANGLE:
            name = names.get(phys, "")
            tagged_tris.append((name.lower(), tuple(sorted(renumber[n] for n in nodes))))

    if not cells:
        raise MeshError(f"{path}: no tetrahedra")
    mesh = Mesh(vertices, cells, regions, materials, strict=strict)

    expected = {"gamma": FaceKind.INTERFACE, "sigma": FaceKind.OUTER_INSULATOR}
    face_index = {tuple(tri): f for f, tri in enumerate(mesh.faces.tolist())}
    for name, tri in tagged_tris:
        for prefix, kind in expected.items():
            if name.startswith(prefix):
                f = face_index.get(tri)
                if f is None or mesh.face_kind[f] != kind:
                    raise MeshError(
                        f"{path}: triangle {tri} tagged {name!r} is not a {kind.name} face"
                    )
    return mesh


def _read_sections(path):
    sections = {}
    current = None
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("$End"):
                current = None
            elif line.startswith("$"):
                current = line[1:]
                sections[current] = []
            elif current is not None:
                sections[current].append(line)
    return sections


def write_msh(mesh, path):
    """Write a Mesh as ASCII MSH 2.2 with named physical groups.

    Volume groups carry the material keys; interface and outer-boundary
    triangles are emitted as ``gamma`` / ``sigma`` surface groups.
    """
    mat_names = sorted(set(mesh.cell_material.tolist()))
    vol_tag = {name: i + 1 for i, name in enumerate(mat_names)}
    gamma_tag = len(mat_names) + 1
    sigma_tag = len(mat_names) + 2

    lines = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$PhysicalNames",
             str(len(mat_names) + 2)]
    for name in mat_names:
        lines.append(f'3 {vol_tag[name]} "{name}"')
    lines.append(f'2 {gamma_tag} "gamma"')
    lines.append(f'2 {sigma_tag} "sigma"')
    lines.append("$EndPhysicalNames")

    lines += ["$Nodes", str(mesh.num_vertices)]
    for i, (x, y, z) in enumerate(mesh.vertices, start=1):
        lines.append(f"{i} {float(x)!r} {float(y)!r} {float(z)!r}")
    lines.append("$EndNodes")

    surf = [
        (int(f), gamma_tag if mesh.face_kind[f] == FaceKind.INTERFACE else sigma_tag)
        for f in mesh.faces_of_kind(FaceKind.INTERFACE, FaceKind.OUTER_INSULATOR)
    ]
    lines += ["$Elements", str(mesh.num_cells + len(surf))]
    eid = 1
    for f, tag in surf:
        a, b, c = (int(v) + 1 for v in mesh.faces[f])
        lines.append(f"{eid} 2 2 {tag} {tag} {a} {b} {c}")
        eid += 1
    for c in range(mesh.num_cells):
        tag = vol_tag[mesh.cell_material[c]]
        a, b, d, e = (int(v) + 1 for v in mesh.cells[c])
        lines.append(f"{eid} 4 2 {tag} {tag} {a} {b} {d} {e}")
        eid += 1
    lines.append("$EndElements")

    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
