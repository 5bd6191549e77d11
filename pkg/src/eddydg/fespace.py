"""Broken polynomial spaces on the two regions.

Conducting cells carry vector-valued P_m (three components per scalar
Lagrange function).  Insulating cells carry scalar P_m, enriched on
cells owning interface faces so that the basis traces span the full
P_{m+1} of each interface face: the enrichment functions are
degree-(m+1) Lagrange functions of interface-face lattice nodes,
greedily accepted while they extend the face trace space.  One global
cohomology amplitude is appended as the last degree of freedom when the
insulator has a nontrivial loop.

All elements live on the reference tetrahedron conv{0, e1, e2, e3};
cells map affinely.
"""

import itertools
from functools import lru_cache

import numpy as np

from .mesh import FaceKind, REGION_CONDUCTOR

__all__ = ["DgSpace", "ScalarElement", "elementwise_interpolate", "potential_interpolant"]

_REF_VERTS = np.vstack([np.zeros(3), np.eye(3)])
#: local face i is opposite local vertex i (keep in sync with mesh._LOCAL_FACES)
_LOCAL_FACES = ((1, 2, 3), (0, 2, 3), (0, 1, 3), (0, 1, 2))
_RANK_TOL = 1e-8


def _exponents(dim, degree):
    """Monomial exponents with total degree <= degree, deterministic order."""
    exps = [
        e
        for e in itertools.product(range(degree + 1), repeat=dim)
        if sum(e) <= degree
    ]
    return np.array(sorted(exps, key=lambda e: (sum(e), e)), dtype=np.int64)


def _eval_monomials(exps, points):
    return np.prod(points[:, None, :] ** exps[None, :, :], axis=2)


def _grad_monomials(exps, points):
    npts, nm = len(points), len(exps)
    grads = np.zeros((npts, nm, exps.shape[1]))
    for k in range(exps.shape[1]):
        lowered = exps.copy()
        lowered[:, k] = np.maximum(lowered[:, k] - 1, 0)
        vals = np.prod(points[:, None, :] ** lowered[None, :, :], axis=2)
        grads[:, :, k] = exps[:, k] * vals
    return grads


def _lattice_multi(dim, degree):
    """Integer lattice multi-indices (cartesian part), fixed order."""
    return [
        e
        for e in itertools.product(range(degree + 1), repeat=dim)
        if sum(e) <= degree
    ]


def _face_lattice_multi(face, degree):
    """3D integer multi-indices of the degree-lattice nodes on a local face."""
    p, q, r = _LOCAL_FACES[face]
    units = np.vstack([np.zeros(3, dtype=np.int64), np.eye(3, dtype=np.int64)])
    nodes = []
    for b in itertools.product(range(degree + 1), repeat=2):
        if sum(b) > degree:
            continue
        bp = degree - sum(b)
        nodes.append(tuple(bp * units[p] + b[0] * units[q] + b[1] * units[r]))
    return nodes


class ScalarElement:
    """Scalar Lagrange element, optionally enriched on interface faces.

    Attributes
    ----------
    degree : int
    enriched_faces : tuple of int
        Local faces whose trace space is completed to P_{m+1}.
    ndof : int
    coeffs : ndarray, shape (ndof, nm)
        Monomial coefficients of the basis functions.
    """

    def __init__(self, degree, enriched_faces=()):
        if degree < 1:
            raise ValueError("polynomial degree must be at least 1")
        self.degree = degree
        self.enriched_faces = tuple(sorted(enriched_faces))

        base = degree + 1 if self.enriched_faces else degree
        self.exps = _exponents(3, base)
        lattice = _lattice_multi(3, degree)
        self.nodes = np.array(lattice, dtype=np.float64) / degree
        vander = _eval_monomials(_exponents(3, degree), self.nodes)
        pm_coeffs = np.linalg.inv(vander).T  # row d: coefficients of L_d

        # embed the P_m Lagrange basis into the (possibly larger) monomial set
        self.coeffs = np.zeros((len(lattice), len(self.exps)))
        index = {tuple(e): i for i, e in enumerate(self.exps)}
        small = _exponents(3, degree)
        cols = [index[tuple(e)] for e in small]
        self.coeffs[:, cols] = pm_coeffs
        self.num_base = len(lattice)

        if self.enriched_faces:
            self._enrich()
        self.ndof = len(self.coeffs)
        self._build_interpolation()

    def _enrich(self):
        m = self.degree
        big_lattice = _lattice_multi(3, m + 1)
        big_nodes = np.array(big_lattice, dtype=np.float64) / (m + 1)
        big_coeffs = np.linalg.inv(_eval_monomials(self.exps, big_nodes)).T
        node_index = {n: i for i, n in enumerate(big_lattice)}

        rows = [self.coeffs]
        for face in self.enriched_faces:
            # unisolvent point set for P_{m+1} of the face
            check_multi = _face_lattice_multi(face, m + 1)
            check_pts = np.array(check_multi, dtype=np.float64) / (m + 1)
            current = np.vstack(rows)
            traces = _eval_monomials(self.exps, check_pts) @ current.T
            q = _orthonormal_rows(traces.T)
            target = len(check_multi)  # dim P_{m+1} on the face
            for multi in check_multi:
                if q.shape[0] >= target:
                    break
                cand = big_coeffs[node_index[multi]]
                t = _eval_monomials(self.exps, check_pts) @ cand
                q, accepted = _extend_orthonormal(q, t)
                if accepted:
                    rows.append(cand[None, :])
            if q.shape[0] != target:
                raise RuntimeError("interface enrichment failed to span the face trace")
        self.coeffs = np.vstack(rows)

    def _build_interpolation(self):
        m = self.degree
        if not self.enriched_faces:
            self.interp_points = self.nodes
            self._interp_matrix = None  # nodal values are the coefficients
            return
        seen, pts = set(), []
        for face in self.enriched_faces:
            for multi in _face_lattice_multi(face, m + 1):
                key = ("f", multi)
                if key not in seen:
                    seen.add(key)
                    pts.append(np.array(multi, dtype=np.float64) / (m + 1))
        on_faces = {
            0: lambda ijk: sum(ijk) == m,
            1: lambda ijk: ijk[0] == 0,
            2: lambda ijk: ijk[1] == 0,
            3: lambda ijk: ijk[2] == 0,
        }
        for multi in _lattice_multi(3, m):
            if any(on_faces[f](multi) for f in self.enriched_faces):
                continue
            pts.append(np.array(multi, dtype=np.float64) / m)
        self.interp_points = np.vstack(pts)
        self._interp_matrix = self.eval(self.interp_points)

    def eval(self, points):
        """Basis values, shape (npts, ndof)."""
        return _eval_monomials(self.exps, np.atleast_2d(points)) @ self.coeffs.T

    def grad(self, points):
        """Reference-coordinate gradients, shape (npts, ndof, 3)."""
        g = _grad_monomials(self.exps, np.atleast_2d(points))
        return np.einsum("pmk,dm->pdk", g, self.coeffs)

    def interpolate(self, values):
        """Coefficients of the interpolant from values at interp_points."""
        if self._interp_matrix is None:
            return np.asarray(values)
        sol, *_ = np.linalg.lstsq(self._interp_matrix, np.asarray(values), rcond=None)
        return sol


def _orthonormal_rows(mat):
    q = np.zeros((0, mat.shape[1]))
    for row in mat:
        q, _ = _extend_orthonormal(q, row)
    return q


def _extend_orthonormal(q, vec):
    r = vec - q.T @ (q @ vec)
    norm = np.linalg.norm(r)
    if norm > _RANK_TOL * max(np.linalg.norm(vec), 1.0):
        return np.vstack([q, r / norm]), True
    return q, False


class DgSpace:
    """Degree-of-freedom layout and reference tabulations.

    Parameters
    ----------
    mesh : Mesh
    degree : int
        Polynomial degree m >= 1 of both regions.
    harmonic : HarmonicField, optional
        Cohomology data of the insulator; when given, its constant
        per-cell field enters the insulator ansatz and one amplitude dof
        is appended at the end.
    """

    def __init__(self, mesh, degree, harmonic=None):
        self.mesh = mesh
        self.degree = int(degree)
        self.harmonic = harmonic
        self.scalar = ScalarElement(self.degree)

        enriched = {}
        for f in mesh.interface_faces:
            cell = int(mesh.face_cells[f, 1])  # insulator neighbour
            enriched.setdefault(cell, []).append(int(mesh.face_local[f, 1]))
        self._elements = {(): self.scalar}
        self.cell_elem_key = np.empty(mesh.num_cells, dtype=object)
        for c in range(mesh.num_cells):
            if mesh.cell_region[c] == REGION_CONDUCTOR:
                self.cell_elem_key[c] = "vec"
            else:
                key = tuple(sorted(enriched.get(c, ())))
                self.cell_elem_key[c] = key
                if key not in self._elements:
                    self._elements[key] = ScalarElement(self.degree, key)

        self.cell_dof_start = np.zeros(mesh.num_cells, dtype=np.int64)
        self.cell_ndof = np.zeros(mesh.num_cells, dtype=np.int64)
        offset = 0
        for c in range(mesh.num_cells):
            nd = (
                3 * self.scalar.ndof
                if mesh.cell_region[c] == REGION_CONDUCTOR
                else self._elements[self.cell_elem_key[c]].ndof
            )
            self.cell_dof_start[c] = offset
            self.cell_ndof[c] = nd
            offset += nd
        self.k_index = offset if harmonic is not None else None
        self.ndofs = offset + (1 if harmonic is not None else 0)

        v = mesh.vertices[mesh.cells]
        jac = np.transpose(v[:, 1:] - v[:, :1], (0, 2, 1))  # columns are edges
        self.cell_jac = jac
        self.cell_jinv = np.linalg.inv(jac)
        self.cell_detabs = np.abs(np.linalg.det(jac))
        self._table_cache = {}

    # -- structure queries ----------------------------------------------

    def element(self, cell):
        key = self.cell_elem_key[cell]
        return self.scalar if key == "vec" else self._elements[key]

    def cell_dofs(self, cell):
        start = self.cell_dof_start[cell]
        return np.arange(start, start + self.cell_ndof[cell])

    @property
    def rho(self):
        """Constant per-cell cohomology field, zeros without harmonic data."""
        if self.harmonic is None:
            return np.zeros((self.mesh.num_cells, 3))
        return self.harmonic.rho

    def to_reference(self, cell, points):
        """Map physical points into the cell's reference coordinates."""
        v0 = self.mesh.vertices[self.mesh.cells[cell, 0]]
        return (np.atleast_2d(points) - v0) @ self.cell_jinv[cell].T

    def from_reference(self, cell, ref_points):
        v0 = self.mesh.vertices[self.mesh.cells[cell, 0]]
        return v0 + np.atleast_2d(ref_points) @ self.cell_jac[cell].T

    # -- reference tabulations (cached) -----------------------------------

    def volume_tables(self, elem_key, rule):
        """(values, reference gradients) at the volume rule points."""
        cache_key = ("vol", elem_key, rule.degree)
        if cache_key not in self._table_cache:
            elem = self.scalar if elem_key == "vec" else self._elements[elem_key]
            self._table_cache[cache_key] = (elem.eval(rule.points), elem.grad(rule.points))
        return self._table_cache[cache_key]

    def face_tables(self, elem_key, local_verts, rule):
        """Tabulation at a face rule mapped through given local vertices.

        ``local_verts`` are the cell-local indices of the face's three
        vertices in the globally agreed (sorted) order, so both sides of
        a face tabulate the same physical points.
        """
        cache_key = ("face", elem_key, local_verts, rule.degree)
        if cache_key not in self._table_cache:
            elem = self.scalar if elem_key == "vec" else self._elements[elem_key]
            pts = rule.barycentric @ _REF_VERTS[list(local_verts)]
            self._table_cache[cache_key] = (elem.eval(pts), elem.grad(pts))
        return self._table_cache[cache_key]

    def edge_tables(self, elem_key, local_verts, rule):
        """Tabulation along an edge given by two cell-local vertices."""
        cache_key = ("edge", elem_key, local_verts, rule.degree)
        if cache_key not in self._table_cache:
            elem = self.scalar if elem_key == "vec" else self._elements[elem_key]
            a, b = _REF_VERTS[list(local_verts)]
            pts = np.outer(1.0 - rule.points[:, 0], a) + np.outer(rule.points[:, 0], b)
            self._table_cache[cache_key] = (elem.eval(pts), elem.grad(pts))
        return self._table_cache[cache_key]

    def local_vertex_indices(self, cell, global_verts):
        """Cell-local indices of the given global vertex ids."""
        cv = self.mesh.cells[cell].tolist()
        return tuple(cv.index(int(g)) for g in global_verts)


def elementwise_interpolate(space, conductor=None, insulator=None, k=0.0):
    """Per-component nodal interpolation into the broken space.

    Parameters
    ----------
    space : DgSpace
    conductor : callable (cell, points) -> (npts, 3), optional
    insulator : callable (cell, points) -> (npts,), optional
    k : complex
        Cohomology amplitude (used only when the space carries one).
    """
    x = np.zeros(space.ndofs, dtype=np.complex128)
    mesh = space.mesh
    for cell in range(mesh.num_cells):
        dofs = space.cell_dofs(cell)
        if mesh.cell_region[cell] == REGION_CONDUCTOR:
            if conductor is None:
                continue
            pts = space.from_reference(cell, space.scalar.nodes)
            vals = np.asarray(conductor(cell, pts))
            x[dofs] = vals.reshape(-1)  # dof order (node, component)
        else:
            if insulator is None:
                continue
            elem = space.element(cell)
            pts = space.from_reference(cell, elem.interp_points)
            x[dofs] = elem.interpolate(np.asarray(insulator(cell, pts)))
    if space.k_index is not None:
        x[space.k_index] = k
    return x


def potential_interpolant(space, conductor_potential, insulator_scalar, k=0.0):
    """Interpolant driven by a scalar potential.

    The conducting field is the exact gradient of the cellwise P_m
    interpolant of ``conductor_potential`` and the insulating scalar is
    the plain P_m interpolant of ``insulator_scalar`` (no enrichment).
    Both traces of a matching potential then coincide exactly on every
    face, so all jump seminorms of the result vanish.
    """
    x = np.zeros(space.ndofs, dtype=np.complex128)
    mesh = space.mesh
    elem = space.scalar
    grad_at_nodes = elem.grad(elem.nodes)  # (nn, nd, 3) reference gradients
    for cell in range(mesh.num_cells):
        dofs = space.cell_dofs(cell)
        pts = space.from_reference(cell, elem.nodes)
        if mesh.cell_region[cell] == REGION_CONDUCTOR:
            coeff = np.asarray(conductor_potential(cell, pts))
            gphys = np.einsum("pdk,kl->pdl", grad_at_nodes, space.cell_jinv[cell])
            vals = np.einsum("d,pdl->pl", coeff, gphys)
            x[dofs] = vals.reshape(-1)
        else:
            values = np.asarray(insulator_scalar(cell, pts))
            x[dofs[: elem.ndof]] = values  # enrichment coefficients stay zero
    if space.k_index is not None:
        x[space.k_index] = k
    return x
