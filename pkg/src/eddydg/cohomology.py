"""Cohomology of the insulating region.

When the conductor is a (topological) torus, the insulator has one
independent loop and the scalar potential alone cannot represent every
curl-free field.  The missing dimension is spanned by the elementwise
gradient of a multivalued piecewise-affine potential theta that jumps
by one across a cut surface:

1.  Find a loop on the interface that bounds inside the insulator
    (tree-cotree homology basis of the closed interface surface, then a
    residual test picks the bounding integer combination).
2.  Fill the loop with an integer 2-chain of interior insulating faces
    (minimum total weight LP, rounded and verified exactly).
3.  Build theta per (cell, vertex) wedge with a unit jump across the
    cut by merging wedges over all uncut faces (union-find carrying the
    jump offsets); rho is the constant per-cell gradient.

Everything is deterministic; a genus above one and inconsistent cuts
raise honest errors.  A user-supplied cut file bypasses the search.
"""

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import coo_matrix, hstack
from scipy.sparse.linalg import lsqr

from .mesh import FaceKind, MeshError, REGION_INSULATOR

__all__ = [
    "CutSurface",
    "HarmonicField",
    "build_cut",
    "build_harmonic",
    "harmonic_field",
    "read_cut",
    "validate_harmonic_field",
    "write_cut",
]


@dataclass
class CutSurface:
    """Oriented cut: interior insulating faces with signs.

    Crossing a face along its stored normal raises theta by ``sign``.
    """

    faces: np.ndarray
    signs: np.ndarray

    @property
    def empty(self):
        return len(self.faces) == 0


@dataclass
class HarmonicField:
    """Multivalued potential theta and its elementwise gradient rho."""

    cut: CutSurface
    theta: np.ndarray  # (num_cells, 4) vertex values, zero on conductor cells
    rho: np.ndarray  # (num_cells, 3) constant gradient per cell


# -- interface surface homology ----------------------------------------

class _UnionFind:
    def __init__(self, n):
        self.parent = np.arange(n)
        self.offset = np.zeros(n)  # value(i) = value(root) + offset(i)

    def find(self, i):
        path = []
        while self.parent[i] != i:
            path.append(i)
            i = self.parent[i]
        total = 0.0
        for j in reversed(path):
            total += self.offset[j]
            self.parent[j] = i
            self.offset[j] = total
        return i, self.offset[path[0]] if path else 0.0

    def union(self, a, b, diff):
        """Impose value(a) = value(b) + diff; returns False on conflict."""
        ra, oa = self.find(a)
        rb, ob = self.find(b)
        if ra == rb:
            return abs(oa - (ob + diff)) < 1e-9
        self.parent[ra] = rb
        self.offset[ra] = ob + diff - oa
        return True


def _interface_loops(mesh):
    """Tree-cotree fundamental loops of the closed interface surface.

    Returns a list of oriented edge chains (dict edge -> coefficient);
    its length is twice the total genus.
    """
    faces = mesh.interface_faces
    if len(faces) == 0:
        return []
    edges = [tuple(e) for e in mesh.edge_vertices.tolist()]
    edge_ids = {e: i for i, e in enumerate(edges)}
    verts = sorted({v for e in edges for v in e})

    # vertex spanning forest (BFS from the smallest vertex per component)
    adjacency = {v: [] for v in verts}
    for a, b in edges:
        adjacency[a].append(b)
        adjacency[b].append(a)
    parent, depth = {}, {}
    tree_edges = set()
    for start in verts:
        if start in parent:
            continue
        parent[start], depth[start] = None, 0
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w in sorted(adjacency[v]):
                if w not in parent:
                    parent[w], depth[w] = v, depth[v] + 1
                    tree_edges.add((min(v, w), max(v, w)))
                    queue.append(w)

    # dual spanning forest over faces through the remaining edges;
    # edges closing a dual cycle generate the surface homology
    face_pos = {int(f): i for i, f in enumerate(faces)}
    uf = _UnionFind(len(faces))
    leftovers = []
    for e in edges:
        if e in tree_edges:
            continue
        f1, f2 = (face_pos[int(f)] for f in mesh.edge_faces[edge_ids[e]])
        r1, _ = uf.find(f1)
        r2, _ = uf.find(f2)
        if r1 == r2:
            leftovers.append(e)
        else:
            uf.union(f1, f2, 0.0)

    loops = []
    for a, b in leftovers:
        chain = {}

        def _add(u, v, chain=chain):
            key = (min(u, v), max(u, v))
            chain[key] = chain.get(key, 0) + (1 if u < v else -1)

        # walk a -> b through the tree, then close with edge b -> a
        pa, pb = a, b
        rise_a, rise_b = [], []
        while depth[pa] > depth[pb]:
            rise_a.append((pa, parent[pa]))
            pa = parent[pa]
        while depth[pb] > depth[pa]:
            rise_b.append((parent[pb], pb))
            pb = parent[pb]
        while pa != pb:
            rise_a.append((pa, parent[pa]))
            rise_b.append((parent[pb], pb))
            pa, pb = parent[pa], parent[pb]
        for u, v in rise_a + rise_b[::-1]:
            _add(u, v)
        _add(b, a)
        chain = {e: c for e, c in chain.items() if c}
        loops.append(chain)
    return loops


# -- filling a loop with an interior 2-chain ----------------------------

def _oriented_boundary_entries(mesh, faces, edge_ids):
    """COO entries of the face-to-edge boundary map, normals as orientation."""
    rows, cols, vals = [], [], []
    for col, f in enumerate(faces):
        a, b, c = (int(v) for v in mesh.faces[f])
        # cycle (a,b,c) oriented along the stored face normal
        va, vb, vc = mesh.vertices[[a, b, c]]
        if np.dot(np.cross(vb - va, vc - va), mesh.face_normal[f]) < 0:
            b, c = c, b
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            row = edge_ids.setdefault(key, len(edge_ids))
            rows.append(row)
            cols.append(col)
            vals.append(1 if u < v else -1)
    return rows, cols, vals


def _insulator_chain_complex(mesh):
    """Boundary matrices of interior insulating faces and interface faces.

    Both act into the same edge index space, so a relative fill can
    trade boundary segments against chains of interface faces.
    """
    fill_faces = mesh.faces_of_kind(FaceKind.INSULATOR_INTERIOR)
    gamma_faces = mesh.interface_faces
    edge_ids = {}
    fill_entries = _oriented_boundary_entries(mesh, fill_faces, edge_ids)
    gamma_entries = _oriented_boundary_entries(mesh, gamma_faces, edge_ids)
    ne = len(edge_ids)
    b_fill = coo_matrix(
        (fill_entries[2], (fill_entries[0], fill_entries[1])),
        shape=(ne, len(fill_faces)),
    ).tocsc()
    b_gamma = coo_matrix(
        (gamma_entries[2], (gamma_entries[0], gamma_entries[1])),
        shape=(ne, len(gamma_faces)),
    ).tocsc()
    return fill_faces, edge_ids, b_fill, b_gamma


def _chain_vector(chain, edge_ids, size):
    g = np.zeros(size)
    for e, c in chain.items():
        if e not in edge_ids:
            raise MeshError(f"loop edge {e} unknown to the insulator complex")
        g[edge_ids[e]] = c
    return g


def _bounding_combination(boundary, g1, g2):
    """Primitive integer (a, b) with a*g1 + b*g2 in the range of boundary."""
    res = []
    for g in (g1, g2):
        fill = lsqr(boundary, g, atol=1e-12, btol=1e-12, iter_lim=20000)[0]
        res.append(g - boundary @ fill)
    r = np.column_stack(res)
    norms = np.linalg.norm(r, axis=0)
    scale = max(norms.max(), 1.0)
    _, s, vt = np.linalg.svd(r, full_matrices=False)
    if s[-1] > 1e-6 * scale:
        return None
    a, b = vt[-1]
    small = min(abs(x) for x in (a, b) if abs(x) > 1e-6)
    a, b = round(a / small), round(b / small)
    if a == 0 and b == 0:
        return None
    g = math.gcd(abs(a), abs(b))
    a, b = a // g, b // g
    if a < 0 or (a == 0 and b < 0):
        a, b = -a, -b
    if np.linalg.norm(a * res[0] + b * res[1]) > 1e-5 * scale * max(abs(a), abs(b)):
        return None
    return a, b


def _integer_fill(b_fill, b_gamma, rhs, face_cost):
    """Minimum-weight integer chain with relative boundary.

    Solves min <face_cost, |x|> + eps |w| subject to
    b_fill x - b_gamma w = rhs, so the chain boundary may slide along
    the interface.  Total unimodularity of simplicial boundary maps
    makes the LP optimum integral; it is rounded and verified exactly.
    Returns x or None when the right-hand side is not null-homologous.
    """
    nf, ng = b_fill.shape[1], b_gamma.shape[1]
    a_eq = hstack([b_fill, -b_fill, -b_gamma, b_gamma], format="csc")
    cost = np.concatenate([face_cost, face_cost, np.full(2 * ng, 1e-3)])
    out = linprog(cost, A_eq=a_eq, b_eq=rhs, bounds=(0, None), method="highs")
    if not out.success:
        return None
    x = np.round(out.x[:nf] - out.x[nf : 2 * nf]).astype(np.int64)
    w = np.round(out.x[2 * nf : 2 * nf + ng] - out.x[2 * nf + ng :]).astype(np.int64)
    if np.abs(x).max(initial=0) > 1:
        return None
    if np.any(np.abs(b_fill @ x - b_gamma @ w - rhs) > 1e-9):
        return None
    return x


def build_cut(mesh, hint=None):
    """Find an oriented cut surface for a genus-one interface.

    Returns an empty cut for trivial topology.  ``hint`` may be a closed
    vertex loop on the interface to use instead of the search.
    """
    loops = _interface_loops(mesh)
    if not loops and hint is None:
        return CutSurface(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int8))
    if len(loops) > 2:
        raise MeshError(
            f"interface has {len(loops) // 2} handles; only genus one is supported"
        )

    fill_faces, edge_ids, b_fill, b_gamma = _insulator_chain_complex(mesh)
    # keep the cut away from the outer boundary so theta stays constant there
    sigma_verts = set(
        int(v)
        for f in mesh.faces_of_kind(FaceKind.OUTER_INSULATOR)
        for v in mesh.faces[f]
    )
    face_cost = np.array(
        [
            1.0 + 1e3 * any(int(v) in sigma_verts for v in mesh.faces[f])
            for f in fill_faces
        ]
    )

    candidates = []
    if hint is not None:
        loop = [int(v) for v in hint]
        if loop[0] != loop[-1]:
            loop.append(loop[0])
        chain = {}
        for u, v in zip(loop[:-1], loop[1:]):
            key = (min(u, v), max(u, v))
            chain[key] = chain.get(key, 0) + (1 if u < v else -1)
        candidates.append({e: c for e, c in chain.items() if c})
    if len(loops) == 2:
        g1 = _chain_vector(loops[0], edge_ids, len(edge_ids))
        g2 = _chain_vector(loops[1], edge_ids, len(edge_ids))
        combo = _bounding_combination(hstack([b_fill, b_gamma], format="csc"), g1, g2)
        if combo is not None:
            a, b = combo
            merged = {}
            for chain, mult in ((loops[0], a), (loops[1], b)):
                for e, c in chain.items():
                    merged[e] = merged.get(e, 0) + mult * c
            candidates.append({e: c for e, c in merged.items() if c})
        # fallback: small integer combinations in a fixed order
        for span in (1, 2):
            for a in range(0, span + 1):
                for b in range(-span, span + 1):
                    if math.gcd(a, abs(b)) != 1 or (a, b) <= (0, 0):
                        continue
                    if max(a, abs(b)) != span:
                        continue
                    merged = {}
                    for chain, mult in ((loops[0], a), (loops[1], b)):
                        for e, c in chain.items():
                            merged[e] = merged.get(e, 0) + mult * c
                    candidates.append({e: c for e, c in merged.items() if c})

    for chain in candidates:
        rhs = _chain_vector(chain, edge_ids, len(edge_ids))
        x = _integer_fill(b_fill, b_gamma, rhs, face_cost)
        if x is None:
            continue
        used = np.nonzero(x)[0]
        faces = fill_faces[used]
        order = np.argsort(faces)
        return CutSurface(faces[order].astype(np.int64), x[used][order].astype(np.int8))
    raise MeshError(
        "no cut surface found for the interface loop; supply one via a cut file or hint"
    )


# -- multivalued potential ----------------------------------------------

def harmonic_field(mesh, cut):
    """Build theta (unit jump across the cut) and rho = grad theta."""
    nc = mesh.num_cells
    uf = _UnionFind(4 * nc)
    cut_sign = {int(f): int(s) for f, s in zip(cut.faces, cut.signs)}
    for f in mesh.faces_of_kind(FaceKind.INSULATOR_INTERIOR):
        own, nb = (int(c) for c in mesh.face_cells[f])
        jump = cut_sign.get(int(f), 0)
        for v in mesh.faces[f]:
            lo = list(mesh.cells[own]).index(v)
            ln = list(mesh.cells[nb]).index(v)
            # crossing along the normal (owner -> neighbour) raises theta
            if not uf.union(4 * nb + ln, 4 * own + lo, float(jump)):
                raise MeshError("inconsistent cut: potential jump conflict")

    theta = np.zeros((nc, 4))
    for c in np.nonzero(mesh.cell_region == REGION_INSULATOR)[0]:
        for lv in range(4):
            _, off = uf.find(4 * int(c) + lv)
            theta[c, lv] = off

    # normalize each vertex class set so untouched vertices sit at zero:
    # offsets are relative to arbitrary roots, so shift per global vertex
    # by the minimum over its insulating wedges
    shift = {}
    for c in np.nonzero(mesh.cell_region == REGION_INSULATOR)[0]:
        for lv in range(4):
            v = int(mesh.cells[c, lv])
            shift[v] = min(shift.get(v, np.inf), theta[c, lv])
    for c in np.nonzero(mesh.cell_region == REGION_INSULATOR)[0]:
        for lv in range(4):
            theta[c, lv] -= shift[int(mesh.cells[c, lv])]

    rho = np.zeros((nc, 3))
    for c in np.nonzero(mesh.cell_region == REGION_INSULATOR)[0]:
        verts = mesh.vertices[mesh.cells[c]]
        jac = (verts[1:] - verts[0]).T
        jinv = np.linalg.inv(jac)
        grads = np.vstack([-jinv.sum(axis=0), jinv])  # rows: grad lambda_v
        rho[c] = theta[c] @ grads
    return HarmonicField(cut=cut, theta=theta, rho=rho)


def build_harmonic(mesh, hint=None):
    """Cut search plus potential; None when the topology is trivial.

    The produced field is verified: unit circulation around the cut and
    no tangential trace on the outer boundary.
    """
    cut = build_cut(mesh, hint=hint)
    if cut.empty:
        return None
    field = harmonic_field(mesh, cut)
    report = validate_harmonic_field(mesh, field)
    if abs(abs(report["circulation"]) - 1.0) > 1e-9:
        raise MeshError(f"cut circulation {report['circulation']} is not unit")
    if report["sigma_tangential_max"] > 1e-9:
        raise MeshError("harmonic field has a tangential trace on the outer boundary")
    return field


def validate_harmonic_field(mesh, field):
    """Check the defining properties of rho; returns a report dict."""
    report = {
        "curl_max": 0.0,  # rho is a constant per cell, curl vanishes identically
        "tangential_jump_max": 0.0,
        "sigma_tangential_max": 0.0,
        "circulation": 0.0,
    }
    for f in mesh.faces_of_kind(FaceKind.INSULATOR_INTERIOR):
        own, nb = mesh.face_cells[f]
        jump = np.cross(field.rho[own] - field.rho[nb], mesh.face_normal[f])
        report["tangential_jump_max"] = max(
            report["tangential_jump_max"], float(np.abs(jump).max())
        )
    for f in mesh.faces_of_kind(FaceKind.OUTER_INSULATOR):
        own = mesh.face_cells[f, 0]
        tang = np.cross(field.rho[own], mesh.face_normal[f])
        report["sigma_tangential_max"] = max(
            report["sigma_tangential_max"], float(np.abs(tang).max())
        )
    if not field.cut.empty:
        report["circulation"] = _circulation(mesh, field)
    return report


def _circulation(mesh, field):
    """Line integral of rho along a cell-centroid loop crossing the cut once."""
    f0 = int(field.cut.faces[0])
    start, goal = (int(c) for c in mesh.face_cells[f0])  # owner, neighbour
    cut_faces = set(int(f) for f in field.cut.faces)
    adjacency = {}
    for f in mesh.faces_of_kind(FaceKind.INSULATOR_INTERIOR):
        if int(f) in cut_faces:
            continue
        own, nb = (int(c) for c in mesh.face_cells[f])
        adjacency.setdefault(own, []).append((nb, int(f)))
        adjacency.setdefault(nb, []).append((own, int(f)))
    # BFS from the neighbour side back to the owner side avoiding the cut
    parent = {goal: None}
    queue = deque([goal])
    while queue and start not in parent:
        c = queue.popleft()
        for nxt, f in sorted(adjacency.get(c, [])):
            if nxt not in parent:
                parent[nxt] = (c, f)
                queue.append(nxt)
    if start not in parent:
        raise MeshError("cut disconnects the insulator; cannot measure circulation")
    path = [start]
    faces = []
    c = start
    while parent[c] is not None:
        c, f = parent[c]
        path.append(c)
        faces.append(f)
    # theta evaluated cellwise along centroid -> face centroid -> centroid,
    # closed by crossing the cut face f0
    def theta_at(cell, point):
        verts = mesh.vertices[mesh.cells[cell]]
        jac = (verts[1:] - verts[0]).T
        lam = np.linalg.solve(jac, point - verts[0])
        bary = np.concatenate([[1 - lam.sum()], lam])
        return float(field.theta[cell] @ bary)

    def face_centroid(f):
        return mesh.vertices[mesh.faces[f]].mean(axis=0)

    total = 0.0
    loop_faces = [f0] + faces + [f0]
    loop_cells = path + [path[0]]
    # segments: enter cell at previous face centroid, leave at next
    enter = face_centroid(f0)
    for cell, f_out in zip(loop_cells[:-1], loop_faces[1:]):
        leave = face_centroid(f_out)
        total += theta_at(cell, leave) - theta_at(cell, enter)
        enter = leave
    return total


# -- cut files -----------------------------------------------------------

def write_cut(mesh, cut, path):
    """Store a cut as vertex triples with signs (mesh-numbering stable)."""
    lines = ["# cut surface: three vertex ids and a sign per face"]
    for f, s in zip(cut.faces, cut.signs):
        a, b, c = (int(v) for v in mesh.faces[f])
        lines.append(f"{a} {b} {c} {int(s)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_cut(mesh, path):
    face_index = {tuple(tri): f for f, tri in enumerate(mesh.faces.tolist())}
    faces, signs = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            a, b, c, s = (int(x) for x in line.split())
            f = face_index.get(tuple(sorted((a, b, c))))
            if f is None or mesh.face_kind[f] != FaceKind.INSULATOR_INTERIOR:
                raise MeshError(f"cut file entry {(a, b, c)} is not an interior insulating face")
            faces.append(f)
            signs.append(s)
    order = np.argsort(faces)
    return CutSurface(
        np.asarray(faces, dtype=np.int64)[order], np.asarray(signs, dtype=np.int8)[order]
    )
