"""Assembly of the hybrid interior-penalty forms.

The bilinear form couples the conducting field u with the insulating
scalar/amplitude pair (phi, c) through twelve ingredients:

conducting cells     i*omega*(mu u, v) + (sigma^-1 curl u, curl v)
conducting faces     +({sigma^-1 curl u}, [(v, phi, m)])
(interior + Gamma)   +({sigma^-1 curl v}, [(u, psi, c)])
                     + a_C (s_F^-1 h_F^-1 [(u, psi, c)], [(v, phi, m)])
insulating cells     i*omega*mu0*(grad psi + c rho, grad phi + m rho)
insulating faces     + a_I/(omega mu0) (h_F^-1 [psi n], [phi n])
(interior + Sigma)   - i*omega*mu0*({grad psi + c rho}, [phi n])
                     - i*omega*mu0*({grad phi + m rho}, [psi n])
interface edges      -({sigma^-1 curl u}_E, [phi t])
                     -({sigma^-1 curl v}_E, [psi t])
                     + alpha (s_E^-1 h_E^-2 [psi t], [phi t])

The mixed interface jump is
    [(v, phi, m)]_Gamma = v x n - (grad phi + m rho) x n
with n pointing from the conductor into the insulator; interface
averages are one-sided (conductor trace).  Penalty weights are
s_F = min of the adjacent conductivities (one-sided on Gamma) and
s_E = min over the conducting cells meeting the edge.

Every consumer (system matrix, right-hand sides, norm matrices, error
measures) walks the same batched entity tables produced here.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix

from .kernels import weighted_gram_vec
from .mesh import FaceKind
from .quadrature import rule_segment, rule_tet, rule_triangle

__all__ = [
    "AssembledSystem",
    "assemble_exact_load",
    "assemble_system",
    "cell_coefficients",
    "norm_component_matrices",
    "penalty_data",
]

_CHUNK = 2048


@dataclass
class AssembledSystem:
    """Sparse complex system A x = b with its build context."""

    matrix: object
    rhs: np.ndarray
    space: object
    materials: object
    penalties: object

    @property
    def ndofs(self):
        return self.matrix.shape[0]


def cell_coefficients(space, materials):
    """Per-cell mu and sigma; insulating cells carry mu0 and sigma 0."""
    mesh = space.mesh
    mu = np.full(mesh.num_cells, float(materials.mu0))
    sigma = np.zeros(mesh.num_cells)
    for c in map(int, mesh.conductor_cells):
        key = mesh.cell_material[c]
        mu[c] = materials.mu_of(key)
        sigma[c] = materials.sigma_of(key)
    return mu, sigma


def penalty_data(space, materials):
    """Penalty conductivity scales s_F (per face) and s_E (per edge)."""
    mesh = space.mesh
    _, sigma = cell_coefficients(space, materials)
    face_s = np.zeros(mesh.num_faces)
    for f in mesh.faces_of_kind(FaceKind.CONDUCTOR_INTERIOR):
        own, nb = mesh.face_cells[f]
        face_s[f] = min(sigma[own], sigma[nb])
    for f in mesh.faces_of_kind(FaceKind.INTERFACE):
        face_s[f] = sigma[mesh.face_cells[f, 0]]
    edge_s = np.zeros(len(mesh.edge_vertices))
    for e in range(len(mesh.edge_vertices)):
        cells = [int(mesh.face_cells[f, 0]) for f in mesh.edge_faces[e]]
        edge_s[e] = min(sigma[c] for c in cells)
    return face_s, edge_s


# -- shared table construction ------------------------------------------

def _vector_tables(vals):
    """Scalar values (..., nq, ns) -> vector basis tables (..., nq, 3 ns, 3).

    Degree of freedom order is (node, component).
    """
    ns = vals.shape[-1]
    out = np.zeros(vals.shape[:-1] + (3 * ns, 3))
    idx = 3 * np.arange(ns)
    for comp in range(3):
        out[..., idx + comp, comp] = vals
    return out


def _curl_tables(gphys):
    """Physical scalar gradients (..., ns, 3) -> curls (..., 3 ns, 3).

    curl(L e_x) = (0, L_z, -L_y), curl(L e_y) = (-L_z, 0, L_x),
    curl(L e_z) = (L_y, -L_x, 0).
    """
    lead = gphys.shape[:-2]
    ns = gphys.shape[-2]
    out = np.zeros(lead + (3 * ns, 3))
    gx, gy, gz = gphys[..., 0], gphys[..., 1], gphys[..., 2]
    idx = 3 * np.arange(ns)
    out[..., idx + 0, 1] = gz
    out[..., idx + 0, 2] = -gy
    out[..., idx + 1, 0] = -gz
    out[..., idx + 1, 2] = gx
    out[..., idx + 2, 0] = gy
    out[..., idx + 2, 1] = -gx
    return out


def _chunks(array, size=_CHUNK):
    for i in range(0, len(array), size):
        yield array[i : i + size]


def _group_faces(space, faces, sides):
    """Split faces so the element key is uniform on each requested side."""
    mesh = space.mesh
    table = {}
    for f in faces:
        key = tuple(space.cell_elem_key[mesh.face_cells[f, s]] for s in sides)
        table.setdefault(key, []).append(int(f))
    for key in sorted(table, key=repr):
        yield np.asarray(table[key], dtype=np.int64)


def _group_edges(space, edges):
    mesh = space.mesh
    table = {}
    for e in edges:
        key = tuple(
            space.cell_elem_key[mesh.face_cells[mesh.edge_faces[e, s], 1]]
            for s in (0, 1)
        )
        table.setdefault(key, []).append(int(e))
    for key in sorted(table, key=repr):
        yield np.asarray(table[key], dtype=np.int64)


def _face_side_tables(space, faces, side, rule):
    """(cells, values, physical gradients) of one face side.

    All cells on the given side must share the element key; tables are
    evaluated at the face rule points mapped through the canonical
    (sorted) vertex order, hence identical physical points per side.
    """
    mesh = space.mesh
    cells = mesh.face_cells[faces, side]
    elem_key = space.cell_elem_key[cells[0]]
    groups = {}
    for i, (f, c) in enumerate(zip(faces, cells)):
        lv = space.local_vertex_indices(int(c), mesh.faces[f])
        groups.setdefault(lv, []).append(i)
    nq = len(rule.weights)
    probe = space.face_tables(elem_key, next(iter(groups)), rule)
    nd = probe[0].shape[1]
    vals = np.empty((len(faces), nq, nd))
    gphys = np.empty((len(faces), nq, nd, 3))
    for lv in sorted(groups):
        idx = np.asarray(groups[lv])
        v, g = space.face_tables(elem_key, lv, rule)
        vals[idx] = v
        gphys[idx] = np.einsum("qdk,fkl->fqdl", g, space.cell_jinv[cells[idx]])
    return cells, vals, gphys


def _edge_side_tables(space, edges, side_cells, rule):
    """Values and physical gradients of cells along interface edges."""
    mesh = space.mesh
    elem_key = space.cell_elem_key[side_cells[0]]
    groups = {}
    for i, (e, c) in enumerate(zip(edges, side_cells)):
        lv = space.local_vertex_indices(int(c), mesh.edge_vertices[e])
        groups.setdefault(lv, []).append(i)
    nq = len(rule.weights)
    probe = space.edge_tables(elem_key, next(iter(groups)), rule)
    nd = probe[0].shape[1]
    vals = np.empty((len(edges), nq, nd))
    gphys = np.empty((len(edges), nq, nd, 3))
    for lv in sorted(groups):
        idx = np.asarray(groups[lv])
        v, g = space.edge_tables(elem_key, lv, rule)
        vals[idx] = v
        gphys[idx] = np.einsum("qdk,fkl->fqdl", g, space.cell_jinv[side_cells[idx]])
    return vals, gphys


def _dof_block(space, cells):
    """Dof index matrix (n, nd) for cells sharing one element size."""
    nd = int(space.cell_ndof[cells[0]])
    return space.cell_dof_start[cells][:, None] + np.arange(nd)[None, :]


def _cell_qpts(space, cells, rule):
    """Physical volume rule points per cell, shape (nc, nq, 3)."""
    v0 = space.mesh.vertices[space.mesh.cells[cells, 0]]
    return v0[:, None, :] + np.einsum("ckl,ql->cqk", space.cell_jac[cells], rule.points)


def entity_tables(space, materials, degree):
    """Yield batched tables for every entity family of the forms.

    Each yielded item is ``(family, data)`` with family one of
    ``cond_vol``, ``ins_vol``, ``cond_face``, ``ins_face``, ``edge``.
    Geometric weights carry the measure only; material and penalty
    factors are applied by the consumers.
    """
    mesh = space.mesh
    mu, sigma = cell_coefficients(space, materials)
    face_s, edge_s = penalty_data(space, materials)
    has_k = space.k_index is not None
    rho = space.rho

    rule3 = rule_tet(degree)
    rule2 = rule_triangle(degree)
    rule1 = rule_segment(degree)

    # conducting cells
    cond = mesh.conductor_cells
    if len(cond):
        vals, grads = space.volume_tables("vec", rule3)
        vec = _vector_tables(vals)
        for cells in _chunks(cond):
            w = rule3.weights[None, :] * space.cell_detabs[cells][:, None]
            gphys = np.einsum("qdk,ckl->cqdl", grads, space.cell_jinv[cells])
            yield "cond_vol", {
                "cells": cells,
                "dofs": _dof_block(space, cells),
                "w": w,
                "qpts": _cell_qpts(space, cells, rule3),
                "vec": vec,
                "curls": _curl_tables(gphys),
                "mu": mu[cells],
                "sigma": sigma[cells],
            }

    # insulating cells (grouped by enrichment)
    ins = mesh.insulator_cells
    keys = {}
    for c in ins:
        keys.setdefault(space.cell_elem_key[c], []).append(int(c))
    for key in sorted(keys, key=repr):
        for cells in _chunks(np.asarray(keys[key], dtype=np.int64)):
            vals, grads = space.volume_tables(key, rule3)
            w = rule3.weights[None, :] * space.cell_detabs[cells][:, None]
            gphys = np.einsum("qdk,ckl->cqdl", grads, space.cell_jinv[cells])
            dofs = _dof_block(space, cells)
            if has_k:
                col = np.broadcast_to(
                    rho[cells][:, None, None, :], gphys.shape[:2] + (1, 3)
                )
                gphys = np.concatenate([gphys, col], axis=2)
                dofs = np.concatenate(
                    [dofs, np.full((len(cells), 1), space.k_index)], axis=1
                )
            yield "ins_vol", {
                "cells": cells,
                "dofs": dofs,
                "w": w,
                "qpts": _cell_qpts(space, cells, rule3),
                "vals": vals,
                "gradk": gphys,
                "has_k": has_k,
            }

    # conducting interior faces
    for faces in _group_faces(space, mesh.faces_of_kind(FaceKind.CONDUCTOR_INTERIOR), (0, 1)):
        for fch in _chunks(faces, _CHUNK):
            w = rule2.weights[None, :] * (2.0 * mesh.face_area[fch])[:, None]
            n = mesh.face_normal[fch]
            cells0, vals0, g0 = _face_side_tables(space, fch, 0, rule2)
            cells1, vals1, g1 = _face_side_tables(space, fch, 1, rule2)
            vecx0 = np.cross(_vector_tables(vals0), n[:, None, None, :])
            vecx1 = np.cross(_vector_tables(vals1), n[:, None, None, :])
            jump = np.concatenate([vecx0, -vecx1], axis=2)
            c0 = _curl_tables(g0) * (0.5 / sigma[cells0])[:, None, None, None]
            c1 = _curl_tables(g1) * (0.5 / sigma[cells1])[:, None, None, None]
            avg = np.concatenate([c0, c1], axis=2)
            dofs = np.concatenate(
                [_dof_block(space, cells0), _dof_block(space, cells1)], axis=1
            )
            yield "cond_face", {
                "faces": fch,
                "w": w,
                "qpts": _face_qpts(mesh, fch, rule2),
                "n": n,
                "jump": jump,
                "avg": avg,
                "dofs": dofs,
                "s": face_s[fch],
                "h": mesh.face_h[fch],
                "inv_sigma_avg": 0.5 / sigma[cells0] + 0.5 / sigma[cells1],
                "interface": False,
                "cells_own": cells0,
                "cells_nb": cells1,
                "sigma_own": sigma[cells0],
                "sigma_nb": sigma[cells1],
            }

    # interface faces (conductor owner, insulating neighbour)
    for faces in _group_faces(space, mesh.faces_of_kind(FaceKind.INTERFACE), (1,)):
        for fch in _chunks(faces, _CHUNK):
            w = rule2.weights[None, :] * (2.0 * mesh.face_area[fch])[:, None]
            n = mesh.face_normal[fch]
            cells0, vals0, g0 = _face_side_tables(space, fch, 0, rule2)
            cells1, vals1, g1 = _face_side_tables(space, fch, 1, rule2)
            vecx0 = np.cross(_vector_tables(vals0), n[:, None, None, :])
            gradx1 = np.cross(g1, n[:, None, None, :])
            parts = [vecx0, -gradx1]
            dofs = [_dof_block(space, cells0), _dof_block(space, cells1)]
            if has_k:
                rx = np.cross(rho[cells1], n)  # (nf, 3)
                col = np.broadcast_to(
                    rx[:, None, None, :], (len(fch), w.shape[1], 1, 3)
                )
                parts.append(-col)
                dofs.append(np.full((len(fch), 1), space.k_index))
            jump = np.concatenate(parts, axis=2)
            curls0 = _curl_tables(g0) / sigma[cells0][:, None, None, None]
            pad = jump.shape[2] - curls0.shape[2]
            avg = np.concatenate(
                [curls0, np.zeros(curls0.shape[:2] + (pad, 3))], axis=2
            )
            yield "cond_face", {
                "faces": fch,
                "w": w,
                "qpts": _face_qpts(mesh, fch, rule2),
                "n": n,
                "jump": jump,
                "avg": avg,
                "dofs": np.concatenate(dofs, axis=1),
                "s": face_s[fch],
                "h": mesh.face_h[fch],
                "inv_sigma_avg": 1.0 / sigma[cells0],
                "interface": True,
                "cells_own": cells0,
                "cells_nb": cells1,
                "sigma_own": sigma[cells0],
                "sigma_nb": sigma[cells1],
                "vals_nb": vals1,
            }

    # insulating faces: interior then outer boundary
    for kind in (FaceKind.INSULATOR_INTERIOR, FaceKind.OUTER_INSULATOR):
        interior = kind == FaceKind.INSULATOR_INTERIOR
        sides = (0, 1) if interior else (0,)
        for faces in _group_faces(space, mesh.faces_of_kind(kind), sides):
            for fch in _chunks(faces, _CHUNK):
                w = rule2.weights[None, :] * (2.0 * mesh.face_area[fch])[:, None]
                n = mesh.face_normal[fch]
                cells0, vals0, g0 = _face_side_tables(space, fch, 0, rule2)
                if interior:
                    cells1, vals1, g1 = _face_side_tables(space, fch, 1, rule2)
                    jump_val = [vals0, -vals1]
                    avg_grad = [0.5 * g0, 0.5 * g1]
                    avg_val = [0.5 * vals0, 0.5 * vals1]
                    rho_avg = 0.5 * (rho[cells0] + rho[cells1]) if has_k else None
                    dofs = [_dof_block(space, cells0), _dof_block(space, cells1)]
                else:
                    cells1, vals1 = None, None
                    jump_val = [vals0]
                    avg_grad = [g0]
                    avg_val = [vals0]
                    rho_avg = rho[cells0] if has_k else None
                    dofs = [_dof_block(space, cells0)]
                jv = np.concatenate(jump_val, axis=2)
                jumpn = jv[:, :, :, None] * n[:, None, None, :]
                av = np.concatenate(avg_val, axis=2)
                ag = np.concatenate(avg_grad, axis=2)
                if has_k:
                    col = np.broadcast_to(
                        rho_avg[:, None, None, :], ag.shape[:2] + (1, 3)
                    )
                    ag = np.concatenate([ag, col], axis=2)
                    av = np.concatenate([av, np.zeros(av.shape[:2] + (1,))], axis=2)
                    jumpn = np.concatenate(
                        [jumpn, np.zeros(jumpn.shape[:2] + (1, 3))], axis=2
                    )
                    dofs.append(np.full((len(fch), 1), space.k_index))
                yield "ins_face", {
                    "faces": fch,
                    "w": w,
                    "qpts": _face_qpts(mesh, fch, rule2),
                    "n": n,
                    "jumpn": jumpn,
                    "avg": ag,
                    "avg_val": av,
                    "dofs": np.concatenate(dofs, axis=1),
                    "h": mesh.face_h[fch],
                    "interior": interior,
                    "cells_own": cells0,
                    "cells_nb": cells1,
                }

    # interface edges
    edges = np.arange(len(mesh.edge_vertices))
    if len(edges):
        for ech_keys in _group_edges(space, edges):
            for ech in _chunks(ech_keys, _CHUNK):
                w = rule1.weights[None, :] * mesh.edge_h[ech][:, None]
                f1 = mesh.edge_faces[ech, 0]
                f2 = mesh.edge_faces[ech, 1]
                kc1 = mesh.face_cells[f1, 0]
                kc2 = mesh.face_cells[f2, 0]
                ki1 = mesh.face_cells[f1, 1]
                ki2 = mesh.face_cells[f2, 1]
                t1 = mesh.edge_tangents[ech, 0]
                t2 = mesh.edge_tangents[ech, 1]
                _, gc1 = _edge_side_tables(space, ech, kc1, rule1)
                _, gc2 = _edge_side_tables(space, ech, kc2, rule1)
                vi1, _ = _edge_side_tables(space, ech, ki1, rule1)
                vi2, _ = _edge_side_tables(space, ech, ki2, rule1)
                curl1 = _curl_tables(gc1) * (0.5 / sigma[kc1])[:, None, None, None]
                curl2 = _curl_tables(gc2) * (0.5 / sigma[kc2])[:, None, None, None]
                nd_c = curl1.shape[2]
                nd_i1, nd_i2 = vi1.shape[2], vi2.shape[2]
                nq = w.shape[1]
                ne = len(ech)
                ndtot = 2 * nd_c + nd_i1 + nd_i2
                avg = np.zeros((ne, nq, ndtot, 3))
                avg[:, :, :nd_c] = curl1
                avg[:, :, nd_c : 2 * nd_c] = curl2
                jumpt = np.zeros((ne, nq, ndtot, 3))
                jumpt[:, :, 2 * nd_c : 2 * nd_c + nd_i1] = (
                    vi1[:, :, :, None] * t1[:, None, None, :]
                )
                jumpt[:, :, 2 * nd_c + nd_i1 :] = (
                    vi2[:, :, :, None] * t2[:, None, None, :]
                )
                dofs = np.concatenate(
                    [
                        _dof_block(space, kc1),
                        _dof_block(space, kc2),
                        _dof_block(space, ki1),
                        _dof_block(space, ki2),
                    ],
                    axis=1,
                )
                a = mesh.vertices[mesh.edge_vertices[ech, 0]]
                b = mesh.vertices[mesh.edge_vertices[ech, 1]]
                qpts = (
                    a[:, None, :] * (1.0 - rule1.points[:, 0])[None, :, None]
                    + b[:, None, :] * rule1.points[:, 0][None, :, None]
                )
                yield "edge", {
                    "edges": ech,
                    "w": w,
                    "qpts": qpts,
                    "jumpt": jumpt,
                    "avg": avg,
                    "dofs": dofs,
                    "s": edge_s[ech],
                    "h": mesh.edge_h[ech],
                    "t1": t1,
                    "t2": t2,
                    "cells_cond": np.stack([kc1, kc2], axis=1),
                    "cells_ins": np.stack([ki1, ki2], axis=1),
                    "inv_sigma_avg": 0.5 / sigma[kc1] + 0.5 / sigma[kc2],
                }


def _face_qpts(mesh, faces, rule):
    verts = mesh.vertices[mesh.faces[faces]]  # (nf, 3, 3) canonical order
    return np.einsum("qv,fvx->fqx", rule.barycentric, verts)


# -- system assembly -----------------------------------------------------

class _Triplets:
    def __init__(self):
        self.rows, self.cols, self.vals = [], [], []

    def add(self, dofs, local):
        shape = local.shape
        self.rows.append(np.broadcast_to(dofs[:, :, None], shape).ravel())
        self.cols.append(np.broadcast_to(dofs[:, None, :], shape).ravel())
        self.vals.append(local.ravel())

    def matrix(self, n, dtype):
        if not self.vals:
            return coo_matrix((n, n), dtype=dtype).tocsc()
        rows = np.concatenate(self.rows)
        cols = np.concatenate(self.cols)
        vals = np.concatenate(self.vals).astype(dtype)
        return coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsc()


def assemble_system(space, materials, penalties, source=None):
    """Assemble the sesquilinear-free (bilinear) system and load.

    Parameters
    ----------
    space : DgSpace
    materials : MaterialConfig
    penalties : PenaltyConfig
    source : callable (cell, points) -> (n, 3) complex, optional
        Impressed current density in the conductor.
    """
    omega, mu0 = materials.omega, materials.mu0
    trip = _Triplets()
    b = np.zeros(space.ndofs, dtype=np.complex128)
    degree = 2 * space.degree + 2

    for family, d in entity_tables(space, materials, degree):
        w, dofs = d["w"], d["dofs"]
        if family == "cond_vol":
            vec = np.ascontiguousarray(
                np.broadcast_to(d["vec"][None], (len(w),) + d["vec"].shape)
            )
            mass = weighted_gram_vec(w * d["mu"][:, None], vec, vec)
            stiff = weighted_gram_vec(w / d["sigma"][:, None], d["curls"], d["curls"])
            trip.add(dofs, 1j * omega * mass + stiff)
            if source is not None:
                js = _eval_cellwise(source, d["cells"], d["qpts"])
                b_loc = np.einsum(
                    "cq,cqv,cqdv->cd", w / d["sigma"][:, None], js, d["curls"]
                )
                np.add.at(b, dofs, b_loc)
        elif family == "ins_vol":
            g = weighted_gram_vec(w, d["gradk"], d["gradk"])
            trip.add(dofs, 1j * omega * mu0 * g)
        elif family == "cond_face":
            g3 = weighted_gram_vec(w, d["jump"], d["avg"])
            g5 = weighted_gram_vec(w, d["jump"], d["jump"])
            pen = (penalties.a_conductor / (d["s"] * d["h"]))[:, None, None]
            trip.add(dofs, g3 + g3.transpose(0, 2, 1) + pen * g5)
            if source is not None:
                js = _eval_cellwise(source, d["cells_own"], d["qpts"])
                b_loc = np.einsum(
                    "cq,cqv,cqdv->cd", w * d["inv_sigma_avg"][:, None], js, d["jump"]
                )
                np.add.at(b, dofs, b_loc)
        elif family == "ins_face":
            g7 = weighted_gram_vec(w, d["jumpn"], d["jumpn"])
            g8 = weighted_gram_vec(w, d["jumpn"], d["avg"])
            pen = (penalties.a_insulator / (omega * mu0) / d["h"])[:, None, None]
            local = pen * g7 - 1j * omega * mu0 * (g8 + g8.transpose(0, 2, 1))
            trip.add(dofs, local)
        elif family == "edge":
            g10 = weighted_gram_vec(w, d["jumpt"], d["avg"])
            g12 = weighted_gram_vec(w, d["jumpt"], d["jumpt"])
            pen = (penalties.alpha / (d["s"] * d["h"] ** 2))[:, None, None]
            trip.add(dofs, -(g10 + g10.transpose(0, 2, 1)) + pen * g12)
            if source is not None:
                js = _eval_cellwise(source, d["cells_cond"][:, 0], d["qpts"])
                b_loc = np.einsum(
                    "cq,cqv,cqdv->cd", w * d["inv_sigma_avg"][:, None], js, d["jumpt"]
                )
                np.add.at(b, dofs, -b_loc)
    matrix = trip.matrix(space.ndofs, np.complex128)
    return AssembledSystem(matrix, b, space, materials, penalties)


def _eval_cellwise(fn, cells, qpts):
    out = None
    for i, c in enumerate(cells):
        v = np.asarray(fn(int(c), qpts[i]))
        if out is None:
            out = np.zeros((len(cells),) + v.shape, dtype=np.complex128)
        out[i] = v
    return out


# -- manufactured right-hand side ----------------------------------------

def assemble_exact_load(space, materials, penalties, exact):
    """Right-hand side that makes the exact triple solve the system.

    ``exact`` provides cell-aware callbacks (see mms.ExactSolution):
    volume residuals f_c and f_i, the scaled electric field e_field,
    the insulating flux w_field = grad psi + k rho, the scalar psi and
    optionally an impressed current j.  All interface, boundary, cut
    and edge data terms are assembled from these callbacks; terms whose
    data vanish (smooth single-valued solutions) contribute nothing.
    """
    omega, mu0 = materials.omega, materials.mu0
    b = np.zeros(space.ndofs, dtype=np.complex128)
    degree = 2 * space.degree + 4
    k_row = 0.0 + 0.0j

    for family, d in entity_tables(space, materials, degree):
        w, dofs = d["w"], d["dofs"]
        if family == "cond_vol":
            fc = _eval_cellwise(exact.f_c, d["cells"], d["qpts"])
            b_loc = np.einsum("cq,cqv,qdv->cd", w, fc, d["vec"])
            if exact.j is not None:
                js = _eval_cellwise(exact.j, d["cells"], d["qpts"])
                b_loc += np.einsum(
                    "cq,cqv,cqdv->cd", w / d["sigma"][:, None], js, d["curls"]
                )
            np.add.at(b, dofs, b_loc)
        elif family == "ins_vol":
            fi = _eval_cellwise(exact.f_i, d["cells"], d["qpts"])
            nd = d["vals"].shape[1]
            b_loc = np.einsum("cq,cq,qd->cd", w, fi, d["vals"])
            np.add.at(b, dofs[:, :nd], b_loc)
            if d["has_k"]:
                wf = _eval_cellwise(exact.w_field, d["cells"], d["qpts"])
                rho = space.rho[d["cells"]]
                k_row += 1j * omega * mu0 * np.einsum("cq,cqv,cv->", w, wf, rho)
        elif family == "cond_face":
            if exact.j is not None:
                js = _eval_cellwise(exact.j, d["cells_own"], d["qpts"])
                b_loc = np.einsum(
                    "cq,cqv,cqdv->cd", w * d["inv_sigma_avg"][:, None], js, d["jump"]
                )
                np.add.at(b, dofs, b_loc)
            if d["interface"]:
                fc = _eval_cellwise(exact.f_c, d["cells_own"], d["qpts"])
                fcn = np.einsum("cqv,cv->cq", fc, d["n"])
                nd_c = 3 * space.scalar.ndof
                nd_i = d["vals_nb"].shape[2]
                b_loc = -np.einsum("cq,cq,cqd->cd", w, fcn, d["vals_nb"])
                np.add.at(b, dofs[:, nd_c : nd_c + nd_i], b_loc)
                if space.k_index is not None:
                    ef = _eval_cellwise(exact.e_field, d["cells_own"], d["qpts"])
                    rx = np.cross(space.rho[d["cells_nb"]], d["n"])
                    k_row -= np.einsum("cq,cqv,cv->", w, ef, rx)
        elif family == "ins_face":
            psi0 = _eval_scalar_cellwise(exact.psi, d["cells_own"], d["qpts"])
            if d["interior"]:
                psi1 = _eval_scalar_cellwise(exact.psi, d["cells_nb"], d["qpts"])
                jump_psi = psi0 - psi1
                w0 = _eval_cellwise(exact.w_field, d["cells_own"], d["qpts"])
                w1 = _eval_cellwise(exact.w_field, d["cells_nb"], d["qpts"])
                wn_jump = np.einsum("cqv,cv->cq", w0 - w1, d["n"])
                b_loc = 1j * omega * mu0 * np.einsum(
                    "cq,cq,cqd->cd", w, wn_jump, d["avg_val"]
                )
                np.add.at(b, dofs, b_loc)
            else:
                jump_psi = psi0
            pen = penalties.a_insulator / (omega * mu0) / d["h"]
            b_loc = np.einsum(
                "c,cq,cq,cqdv,cv->cd", pen, w, jump_psi, d["jumpn"], d["n"]
            )
            b_loc -= 1j * omega * mu0 * np.einsum(
                "cq,cq,cqdv,cv->cd", w, jump_psi, d["avg"], d["n"]
            )
            np.add.at(b, dofs, b_loc)
        elif family == "edge":
            psi1 = _eval_scalar_cellwise(exact.psi, d["cells_ins"][:, 0], d["qpts"])
            psi2 = _eval_scalar_cellwise(exact.psi, d["cells_ins"][:, 1], d["qpts"])
            data = (
                psi1[:, :, None] * d["t1"][:, None, :]
                + psi2[:, :, None] * d["t2"][:, None, :]
            )
            pen = penalties.alpha / (d["s"] * d["h"] ** 2)
            b_loc = np.einsum("c,cq,cqdv,cqv->cd", pen, w, d["jumpt"], data)
            b_loc -= np.einsum("cq,cqdv,cqv->cd", w, d["avg"], data)
            np.add.at(b, dofs, b_loc)
            if exact.j is not None:
                js = _eval_cellwise(exact.j, d["cells_cond"][:, 0], d["qpts"])
                b_loc = np.einsum(
                    "cq,cqv,cqdv->cd", w * d["inv_sigma_avg"][:, None], js, d["jumpt"]
                )
                np.add.at(b, dofs, -b_loc)
    if space.k_index is not None:
        b[space.k_index] += k_row
    return b


def _eval_scalar_cellwise(fn, cells, qpts):
    out = np.zeros(qpts.shape[:2], dtype=np.complex128)
    for i, c in enumerate(cells):
        out[i] = np.asarray(fn(int(c), qpts[i]))
    return out


# -- norm component matrices ----------------------------------------------

def norm_component_matrices(space, materials):
    """Real PSD matrices of the DG norm and the three star components.

    DG norm parts: l2C, curlC, gradI, jumpC, jumpI, jumpE.
    Star additions: avgC, avgI, avgE.
    """
    omega, mu0 = materials.omega, materials.mu0
    trips = {
        name: _Triplets()
        for name in (
            "l2C",
            "curlC",
            "gradI",
            "jumpC",
            "jumpI",
            "jumpE",
            "avgC",
            "avgI",
            "avgE",
        )
    }
    degree = 2 * space.degree + 2
    for family, d in entity_tables(space, materials, degree):
        w, dofs = d["w"], d["dofs"]
        if family == "cond_vol":
            vec = np.ascontiguousarray(
                np.broadcast_to(d["vec"][None], (len(w),) + d["vec"].shape)
            )
            trips["l2C"].add(
                dofs, omega * weighted_gram_vec(w * d["mu"][:, None], vec, vec)
            )
            trips["curlC"].add(
                dofs, weighted_gram_vec(w / d["sigma"][:, None], d["curls"], d["curls"])
            )
        elif family == "ins_vol":
            trips["gradI"].add(
                dofs, omega * mu0 * weighted_gram_vec(w, d["gradk"], d["gradk"])
            )
        elif family == "cond_face":
            g = weighted_gram_vec(w, d["jump"], d["jump"])
            trips["jumpC"].add(dofs, g / (d["s"] * d["h"])[:, None, None])
            ga = weighted_gram_vec(w, d["avg"], d["avg"])
            trips["avgC"].add(dofs, ga * (d["s"] * d["h"])[:, None, None])
        elif family == "ins_face":
            g = weighted_gram_vec(w, d["jumpn"], d["jumpn"])
            trips["jumpI"].add(dofs, omega * mu0 * g / d["h"][:, None, None])
            ga = weighted_gram_vec(w, d["avg"], d["avg"])
            trips["avgI"].add(dofs, omega * mu0 * ga * d["h"][:, None, None])
        elif family == "edge":
            g = weighted_gram_vec(w, d["jumpt"], d["jumpt"])
            trips["jumpE"].add(dofs, g / (d["s"] * d["h"] ** 2)[:, None, None])
            ga = weighted_gram_vec(w, d["avg"], d["avg"])
            trips["avgE"].add(dofs, ga * (d["s"] * d["h"] ** 2)[:, None, None])
    return {
        name: t.matrix(space.ndofs, np.float64) for name, t in trips.items()
    }
