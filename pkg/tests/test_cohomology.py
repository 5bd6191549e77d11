import numpy as np
import pytest

from eddydg.cohomology import (
    build_cut,
    build_harmonic,
    harmonic_field,
    read_cut,
    validate_harmonic_field,
    write_cut,
)
from eddydg.fixtures import boxed_cube, boxed_torus, insulator_cube
from eddydg.mesh import FaceKind, MeshError


@pytest.fixture(scope="module")
def torus():
    return boxed_torus(5)


@pytest.fixture(scope="module")
def torus_field(torus):
    return build_harmonic(torus)


def test_trivial_topology_has_empty_cut():
    assert build_cut(boxed_cube(3)).empty
    assert build_harmonic(boxed_cube(3)) is None
    assert build_harmonic(insulator_cube()) is None


def test_torus_cut_is_interior_and_oriented(torus):
    cut = build_cut(torus)
    assert len(cut.faces) > 0
    assert set(np.abs(cut.signs).tolist()) == {1}
    for f in cut.faces:
        assert torus.face_kind[f] == FaceKind.INSULATOR_INTERIOR


def test_cut_boundary_lies_on_interface(torus):
    cut = build_cut(torus)
    # edges used an odd number of times must be interface edges
    counts = {}
    for f in cut.faces:
        a, b, c = (int(v) for v in torus.faces[f])
        for e in ((a, b), (a, c), (b, c)):
            counts[e] = counts.get(e, 0) + 1
    interface_edges = {tuple(e) for e in torus.edge_vertices.tolist()}
    boundary = [e for e, c in counts.items() if c % 2]
    assert boundary, "cut should have a boundary loop"
    for e in boundary:
        assert e in interface_edges


def test_harmonic_field_properties(torus, torus_field):
    report = validate_harmonic_field(torus, torus_field)
    assert report["curl_max"] == 0.0
    assert report["tangential_jump_max"] < 1e-12
    assert report["sigma_tangential_max"] <= 1e-12
    assert abs(report["circulation"]) == pytest.approx(1.0, abs=1e-10)


def test_theta_jump_and_support(torus, torus_field):
    hf = torus_field
    cut_signs = {int(f): int(s) for f, s in zip(hf.cut.faces, hf.cut.signs)}
    jumps = 0
    for f in torus.faces_of_kind(FaceKind.INSULATOR_INTERIOR):
        own, nb = (int(c) for c in torus.face_cells[f])
        for v in torus.faces[f]:
            lo = list(torus.cells[own]).index(v)
            ln = list(torus.cells[nb]).index(v)
            diff = hf.theta[nb, ln] - hf.theta[own, lo]
            assert diff == pytest.approx(cut_signs.get(int(f), 0), abs=1e-12)
            jumps += abs(cut_signs.get(int(f), 0))
    assert jumps > 0
    # conductor cells carry no potential
    assert np.all(hf.theta[torus.cell_region == 0] == 0.0)
    # support is local to the cut
    support = np.abs(hf.rho).max(axis=1) > 1e-14
    assert 0 < support.sum() < torus.num_cells / 4


def test_harmonic_determinism(torus):
    a = build_harmonic(torus)
    b = build_harmonic(torus)
    assert np.array_equal(a.cut.faces, b.cut.faces)
    assert np.array_equal(a.cut.signs, b.cut.signs)
    assert np.array_equal(a.theta, b.theta)


def test_cut_file_round_trip(tmp_path, torus, torus_field):
    path = tmp_path / "cut.txt"
    write_cut(torus, torus_field.cut, path)
    loaded = read_cut(torus, path)
    assert np.array_equal(loaded.faces, torus_field.cut.faces)
    assert np.array_equal(loaded.signs, torus_field.cut.signs)
    field = harmonic_field(torus, loaded)
    assert np.array_equal(field.theta, torus_field.theta)


def test_cut_file_rejects_non_interior_faces(tmp_path, torus):
    f = int(torus.interface_faces[0])
    a, b, c = (int(v) for v in torus.faces[f])
    path = tmp_path / "bad_cut.txt"
    path.write_text(f"{a} {b} {c} 1\n")
    with pytest.raises(MeshError, match="not an interior insulating face"):
        read_cut(torus, path)


def test_hint_loop(torus):
    # the rim of the found cut is a valid hint and reproduces a cut
    cut = build_cut(torus)
    counts = {}
    for f in cut.faces:
        a, b, c = (int(v) for v in torus.faces[f])
        for e in ((a, b), (a, c), (b, c)):
            counts[e] = counts.get(e, 0) + 1
    boundary = [e for e, c in counts.items() if c % 2]
    # chain the boundary edges into a vertex loop
    succ = {}
    for a, b in boundary:
        succ.setdefault(a, []).append(b)
        succ.setdefault(b, []).append(a)
    start = boundary[0][0]
    loop, prev, cur = [start], None, start
    while True:
        nxt = [v for v in succ[cur] if v != prev][0]
        loop.append(nxt)
        prev, cur = cur, nxt
        if cur == start:
            break
    hinted = build_cut(torus, hint=loop)
    field = harmonic_field(torus, hinted)
    report = validate_harmonic_field(torus, field)
    assert abs(report["circulation"]) == pytest.approx(1.0, abs=1e-10)
