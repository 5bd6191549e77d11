import numpy as np
import pytest

from eddydg.fixtures import boxed_cube, boxed_torus, fixture, insulator_cube, two_tet
from eddydg.mesh import FaceKind, Mesh, MeshError, MeshWarning, load_msh, write_msh


@pytest.fixture
def two_tet_mesh():
    with pytest.warns(MeshWarning):
        return two_tet()


def test_two_tet_hand_counts(two_tet_mesh):
    m = two_tet_mesh
    metrics = m.metrics()
    assert metrics["num_vertices"] == 5
    assert metrics["num_cells"] == 2
    assert metrics["num_faces"] == 7
    assert metrics["face_counts"] == {
        "CONDUCTOR_INTERIOR": 0,
        "INSULATOR_INTERIOR": 0,
        "INTERFACE": 1,
        "OUTER_INSULATOR": 3,
        "OUTER_CONDUCTOR": 3,
    }
    # the three rim edges belong to a single interface face each
    assert metrics["num_interface_edges"] == 0
    assert metrics["volume_insulator"] == pytest.approx(1 / 6)
    assert metrics["area_interface"] == pytest.approx(0.5)


def test_two_tet_interface_normal_points_into_insulator(two_tet_mesh):
    m = two_tet_mesh
    (f,) = m.interface_faces
    assert m.cell_region[m.face_cells[f, 0]] == 0  # conductor owns it
    assert np.allclose(m.face_normal[f], [0, 0, 1])


def test_conductor_on_boundary_is_strict_error():
    m = None
    with pytest.warns(MeshWarning):
        m = two_tet()
    with pytest.raises(MeshError, match="domain boundary"):
        Mesh(m.vertices, m.cells, m.cell_region, m.cell_material, strict=True)


def test_degenerate_and_invalid_cells_rejected():
    verts = np.eye(4, 3)
    with pytest.raises(MeshError, match="repeated vertex"):
        Mesh(verts, [(0, 1, 2, 2)], [1], ["insulator"])
    flat = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (1.0, 1.0, 0.0)]
    with pytest.raises(MeshError, match="degenerate"):
        Mesh(flat, [(0, 1, 2, 3)], [1], ["insulator"])
    with pytest.raises(MeshError, match="out of range"):
        Mesh(verts, [(0, 1, 2, 7)], [1], ["insulator"])


def test_insulator_cube_counts():
    m = insulator_cube()
    assert m.num_cells == 6
    assert m.num_faces == 18
    assert len(m.interface_faces) == 0
    assert m.metrics()["face_counts"]["OUTER_INSULATOR"] == 12
    assert m.metrics()["volume_insulator"] == pytest.approx(1.0)


def test_boxed_cube_geometry():
    m = boxed_cube(3)
    assert m.num_cells == 162
    assert m.metrics()["volume_conductor"] == pytest.approx(1 / 27)
    assert m.metrics()["volume_insulator"] == pytest.approx(26 / 27)
    assert m.metrics()["area_interface"] == pytest.approx(6 / 9)
    assert m.metrics()["num_interface_edges"] == 18
    assert not m.notes  # closed interface, no boundary contact


def test_boxed_torus_geometry():
    m = boxed_torus(5)
    assert len(m.conductor_cells) == 48
    assert m.metrics()["volume_conductor"] == pytest.approx(0.064)
    assert not m.notes


def test_interface_normals_and_tangents():
    m = boxed_cube(3)
    for f in m.interface_faces:
        own, nb = m.face_cells[f]
        assert m.cell_region[own] == 0 and m.cell_region[nb] == 1
        n = m.face_normal[f]
        assert np.linalg.norm(n) == pytest.approx(1.0)
        off = m.cell_centroid[nb] - m.cell_centroid[own]
        assert np.dot(n, off) > 0
    for i in range(len(m.edge_vertices)):
        a, b = m.edge_vertices[i]
        d = m.vertices[b] - m.vertices[a]
        d = d / np.linalg.norm(d)
        t1, t2 = m.edge_tangents[i]
        assert np.allclose(t1, -t2, atol=1e-14)
        assert abs(np.dot(t1, d)) == pytest.approx(1.0)
        for s, f in enumerate(m.edge_faces[i]):
            assert abs(np.dot(m.edge_tangents[i, s], m.face_normal[f])) < 1e-14


def test_interior_face_owner_rule():
    m = boxed_cube(3)
    interior = m.faces_of_kind(FaceKind.CONDUCTOR_INTERIOR, FaceKind.INSULATOR_INTERIOR)
    assert len(interior) > 0
    assert np.all(m.face_cells[interior, 0] < m.face_cells[interior, 1])


def test_fixture_dispatch():
    assert fixture("boxed_cube:3").num_cells == 162
    assert fixture("cube6").num_cells == 6
    with pytest.raises(ValueError, match="unknown fixture"):
        fixture("nope")
    with pytest.raises(ValueError, match="grid size"):
        fixture("boxed_cube")
    with pytest.raises(ValueError, match="multiple of 5"):
        fixture("boxed_torus:7")


# -- MSH input/output ---------------------------------------------------

def test_msh_round_trip(tmp_path, two_tet_mesh):
    path = tmp_path / "two_tet.msh"
    write_msh(two_tet_mesh, path)
    with pytest.warns(MeshWarning):
        loaded = load_msh(path, strict=False)
    assert np.array_equal(loaded.vertices, two_tet_mesh.vertices)
    assert np.array_equal(loaded.cells, two_tet_mesh.cells)
    assert np.array_equal(loaded.cell_region, two_tet_mesh.cell_region)
    assert list(loaded.cell_material) == list(two_tet_mesh.cell_material)
    assert np.array_equal(loaded.face_kind, two_tet_mesh.face_kind)
    with pytest.raises(MeshError, match="domain boundary"):
        load_msh(path)  # strict by default


def test_msh_loader_is_deterministic(tmp_path):
    path = tmp_path / "cube.msh"
    write_msh(boxed_cube(3), path)
    a = load_msh(path)
    b = load_msh(path)
    assert np.array_equal(a.vertices, b.vertices)
    assert np.array_equal(a.cells, b.cells)
    assert np.array_equal(a.faces, b.faces)
    assert np.array_equal(a.face_kind, b.face_kind)
    assert np.array_equal(a.edge_vertices, b.edge_vertices)


def test_msh_surface_tags_cross_checked(tmp_path, two_tet_mesh):
    path = tmp_path / "bad.msh"
    write_msh(two_tet_mesh, path)
    text = path.read_text().splitlines()
    # retarget the gamma triangle at an outer insulator face (1,2,4 in file ids)
    gamma_tag = [ln.split()[1] for ln in text if '"gamma"' in ln][0]
    for i, line in enumerate(text):
        parts = line.split()
        if len(parts) == 8 and parts[1] == "2" and parts[3] == gamma_tag:
            text[i] = " ".join(parts[:5]) + " 1 2 4"
            break
    path.write_text("\n".join(text) + "\n")
    with pytest.raises(MeshError, match="gamma"):
        load_msh(path, strict=False)


def test_msh_region_tag_fallback(tmp_path):
    path = tmp_path / "plain.msh"
    # one insulating tet, no $PhysicalNames section
    path.write_text(
        "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"
        "$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 0 1 0\n4 0 0 1\n$EndNodes\n"
        "$Elements\n1\n1 4 2 11 11 1 2 3 4\n$EndElements\n"
    )
    with pytest.raises(MeshError, match="unknown physical tag"):
        load_msh(path)
    m = load_msh(path, region_tags={11: "insulator_air"})
    assert m.num_cells == 1
    assert m.cell_material[0] == "insulator_air"
    with pytest.raises(MeshError, match="neither conductor nor insulator"):
        load_msh(path, region_tags={11: "steel"})


def test_msh_version_check(tmp_path):
    path = tmp_path / "v4.msh"
    path.write_text("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n")
    with pytest.raises(MeshError, match="2.2"):
        load_msh(path)


def test_shipped_fixture_files():
    import pathlib

    data = pathlib.Path(__file__).parent / "data"
    with pytest.warns(MeshWarning):
        m = load_msh(data / "two_tet.msh", strict=False)
    assert m.num_cells == 2
    t = load_msh(data / "torus5.msh")
    assert len(t.conductor_cells) == 48
    assert t.metrics()["volume_conductor"] == pytest.approx(0.064)
