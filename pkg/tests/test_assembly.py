"""Assembled forms against independent direct-quadrature evaluation."""

import numpy as np
import pytest

from eddydg.assembly import (
    assemble_exact_load,
    assemble_system,
    cell_coefficients,
    norm_component_matrices,
    penalty_data,
)
from eddydg.config import MaterialConfig, PenaltyConfig
from eddydg.fespace import DgSpace
from eddydg.fixtures import two_tet
from eddydg.mesh import FaceKind
from eddydg.mms import manufactured_solution

from oracles import (
    direct_bilinear,
    direct_exact_load,
    direct_source_load,
    eval_scalar_field,
    eval_scalar_grad,
    eval_vec_curl,
    eval_vec_field,
)


def _random_pair(space, seed):
    rng = np.random.default_rng(seed)
    n = space.ndofs
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return x, y


def _relerr(got, want):
    return abs(got - want) / max(abs(want), 1e-300)


# -- matrix vs direct evaluation ----------------------------------------

def test_matrix_matches_direct_two_tet(unit_materials):
    space = DgSpace(two_tet(), 1)
    pen = PenaltyConfig.default(1)
    system = assemble_system(space, unit_materials, pen)
    x, y = _random_pair(space, 11)
    want = direct_bilinear(space, unit_materials, pen, x, y)
    got = y @ (system.matrix @ x)
    assert _relerr(got, want) < 1e-12


def test_matrix_matches_direct_two_tet_degree2(unit_materials):
    space = DgSpace(two_tet(), 2)
    pen = PenaltyConfig.default(2)
    system = assemble_system(space, unit_materials, pen)
    x, y = _random_pair(space, 12)
    want = direct_bilinear(space, unit_materials, pen, x, y)
    got = y @ (system.matrix @ x)
    assert _relerr(got, want) < 1e-12


def test_matrix_matches_direct_nonunit_materials():
    mat = MaterialConfig(omega=3.0, mu0=2.0, mu={"conductor": 5.0}, sigma={"conductor": 0.25})
    space = DgSpace(two_tet(), 1)
    pen = PenaltyConfig(a_conductor=7.0, a_insulator=11.0, alpha=13.0)
    system = assemble_system(space, mat, pen)
    x, y = _random_pair(space, 13)
    want = direct_bilinear(space, mat, pen, x, y)
    got = y @ (system.matrix @ x)
    assert _relerr(got, want) < 1e-12


def test_matrix_matches_direct_torus5(torus5_space, torus5_system, unit_materials):
    pen = torus5_system.penalties
    x, y = _random_pair(torus5_space, 14)
    want = direct_bilinear(torus5_space, unit_materials, pen, x, y)
    got = y @ (torus5_system.matrix @ x)
    assert _relerr(got, want) < 1e-11


def test_matrix_matches_direct_cube3_degree2(cube3_space_p2, unit_materials):
    pen = PenaltyConfig.default(2)
    system = assemble_system(cube3_space_p2, unit_materials, pen)
    x, y = _random_pair(cube3_space_p2, 15)
    want = direct_bilinear(cube3_space_p2, unit_materials, pen, x, y)
    got = y @ (system.matrix @ x)
    assert _relerr(got, want) < 1e-11


def test_matrix_structurally_symmetric(torus5_system):
    A = torus5_system.matrix
    diff = (A - A.T).tocoo()
    scale = np.abs(A.data).max()
    worst = np.abs(diff.data).max() / scale if diff.nnz else 0.0
    assert worst < 1e-13


# -- right-hand sides -----------------------------------------------------

def test_source_load_matches_direct(torus5_space, unit_materials):
    pen = PenaltyConfig.default(1)

    def source(cell, pts):
        p = np.atleast_2d(pts)
        return np.stack(
            [np.sin(p[:, 1]), np.cos(p[:, 2]), p[:, 0] * p[:, 1]], axis=1
        ).astype(complex)

    system = assemble_system(torus5_space, unit_materials, pen, source=source)
    _, y = _random_pair(torus5_space, 16)
    want = direct_source_load(torus5_space, unit_materials, pen, source, y)
    got = y @ system.rhs
    assert _relerr(got, want) < 1e-11


def test_no_source_means_zero_rhs(torus5_system):
    assert not np.any(torus5_system.rhs)


def test_exact_load_matches_direct_cohomology(torus5_space, unit_materials):
    pen = PenaltyConfig.default(1)
    exact = manufactured_solution("cohomology_pair", torus5_space, unit_materials)
    b = assemble_exact_load(torus5_space, unit_materials, pen, exact)
    _, y = _random_pair(torus5_space, 17)
    want = direct_exact_load(torus5_space, unit_materials, pen, exact, y)
    got = y @ b
    assert _relerr(got, want) < 1e-11


def test_exact_load_matches_direct_polynomial(cube3_space_p2, unit_materials):
    pen = PenaltyConfig.default(2)
    exact = manufactured_solution("polynomial_pair", cube3_space_p2, unit_materials)
    b = assemble_exact_load(cube3_space_p2, unit_materials, pen, exact)
    _, y = _random_pair(cube3_space_p2, 18)
    want = direct_exact_load(cube3_space_p2, unit_materials, pen, exact, y)
    got = y @ b
    assert _relerr(got, want) < 1e-11


# -- coefficient and penalty fields ---------------------------------------

def test_cell_coefficients_lookup():
    mat = MaterialConfig(omega=2.0, mu0=1.5, mu={"conductor": 4.0}, sigma={"conductor": 0.5})
    space = DgSpace(two_tet(), 1)
    mu, sigma = cell_coefficients(space, mat)
    assert mu[1] == 4.0 and sigma[1] == 0.5  # conducting cell
    assert mu[0] == 1.5 and sigma[0] == 0.0  # insulating cell


def test_penalty_fields_take_minimum(torus5_space, unit_materials):
    mesh = torus5_space.mesh
    face_s, edge_s = penalty_data(torus5_space, unit_materials)
    assert np.all(face_s[mesh.faces_of_kind(FaceKind.INTERFACE)] == 1.0)
    assert np.all(edge_s == 1.0)
    # insulating-only faces carry no penalty scale
    assert np.all(face_s[mesh.faces_of_kind(FaceKind.INSULATOR_INTERIOR)] == 0.0)


# -- norm component matrices ----------------------------------------------

def test_norm_components_psd_and_real(torus5_space, unit_materials):
    comps = norm_component_matrices(torus5_space, unit_materials)
    rng = np.random.default_rng(19)
    n = torus5_space.ndofs
    for name, m in comps.items():
        assert m.dtype == np.float64, name
        for _ in range(5):
            x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            q = np.real(np.vdot(x, m @ x))
            assert q >= -1e-9 * max(abs(q), 1.0), name


def test_norm_component_values_match_direct(torus5_space, unit_materials):
    """Each norm part equals its direct per-entity quadrature value."""
    from eddydg.quadrature import rule_segment, rule_tet, rule_triangle

    space = torus5_space
    mesh = space.mesh
    comps = norm_component_matrices(space, unit_materials)
    face_s, edge_s = penalty_data(space, unit_materials)
    omega, mu0 = unit_materials.omega, unit_materials.mu0
    _, sigma = cell_coefficients(space, unit_materials)
    rng = np.random.default_rng(20)
    x = rng.standard_normal(space.ndofs) + 1j * rng.standard_normal(space.ndofs)
    kx = x[space.k_index]
    rho = space.rho
    deg = 2 * space.degree + 2
    r3, r2, r1 = rule_tet(deg), rule_triangle(deg), rule_segment(deg)

    def q(name):
        return float(np.real(np.vdot(x, comps[name] @ x)))

    acc = 0.0
    for c in map(int, mesh.conductor_cells):
        pts = space.from_reference(c, r3.points)
        w = r3.weights * space.cell_detabs[c]
        u = eval_vec_field(space, x, c, pts)
        acc += omega * np.sum(w * np.sum(np.abs(u) ** 2, axis=1))
    assert abs(acc - q("l2C")) < 1e-10 * acc

    acc = 0.0
    for c in map(int, mesh.insulator_cells):
        pts = space.from_reference(c, r3.points)
        w = r3.weights * space.cell_detabs[c]
        wu = eval_scalar_grad(space, x, c, pts) + kx * rho[c]
        acc += omega * mu0 * np.sum(w * np.sum(np.abs(wu) ** 2, axis=1))
    assert abs(acc - q("gradI")) < 1e-10 * acc

    acc = 0.0
    for e in range(len(mesh.edge_vertices)):
        a, b = mesh.edge_vertices[e]
        t = r1.points[:, 0]
        pts = np.outer(1 - t, mesh.vertices[a]) + np.outer(t, mesh.vertices[b])
        w = r1.weights * mesh.edge_h[e]
        f1, f2 = map(int, mesh.edge_faces[e])
        t1, t2 = mesh.edge_tangents[e]
        ki1, ki2 = int(mesh.face_cells[f1, 1]), int(mesh.face_cells[f2, 1])
        jt = (
            eval_scalar_field(space, x, ki1, pts)[:, None] * t1
            + eval_scalar_field(space, x, ki2, pts)[:, None] * t2
        )
        acc += (
            1.0
            / (edge_s[e] * mesh.edge_h[e] ** 2)
            * np.sum(w * np.sum(np.abs(jt) ** 2, axis=1))
        )
    assert abs(acc - q("jumpE")) < 1e-10 * max(acc, 1e-12)


def test_interface_jump_includes_amplitude_column(torus5_space, unit_materials):
    """The Gamma jump of (0, 0, 1) is -rho x n, reflected by the k column."""
    space = torus5_space
    mesh = space.mesh
    comps = norm_component_matrices(space, unit_materials)
    x = np.zeros(space.ndofs, dtype=complex)
    x[space.k_index] = 1.0
    got = float(np.real(np.vdot(x, comps["jumpC"] @ x)))

    from eddydg.quadrature import rule_triangle

    face_s, _ = penalty_data(space, unit_materials)
    r2 = rule_triangle(2 * space.degree + 2)
    acc = 0.0
    for f in mesh.faces_of_kind(FaceKind.INTERFACE):
        f = int(f)
        n = mesh.face_normal[f]
        nb = int(mesh.face_cells[f, 1])
        w = r2.weights * 2.0 * mesh.face_area[f]
        jump = -np.cross(space.rho[nb], n)
        acc += (
            np.sum(w) * np.sum(jump**2) / (face_s[f] * mesh.face_h[f])
        )
    assert got == pytest.approx(acc, rel=1e-12)
    # jumps in the insulator ignore the amplitude
    assert float(np.real(np.vdot(x, comps["jumpI"] @ x))) == pytest.approx(0.0, abs=1e-14)
    assert float(np.real(np.vdot(x, comps["jumpE"] @ x))) == pytest.approx(0.0, abs=1e-14)
