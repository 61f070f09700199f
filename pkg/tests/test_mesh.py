import math

import numpy as np
import pytest

from mogibem.errors import CavityTouchesSurface, MeshDegenerateFace, MeshInvalid, MeshInverted, MeshOpen
from mogibem.mesh import (TriangleMesh, contains, icosphere, mesh_validate, place_cavity,
                          point_triangle_distance, read_off, write_off)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_icosphere_counts_and_geometry(k):
    m = icosphere(k)
    assert m.n_faces == 20 * 4 ** k
    assert len(m.vertices) == 10 * 4 ** k + 2
    assert np.allclose(np.linalg.norm(m.vertices, axis=1), 1.0)
    rep = mesh_validate(m)
    assert rep.closed and rep.consistently_oriented
    assert rep.normal_sum < 1e-12
    assert 0 < m.volume < 4 * math.pi / 3


def test_volume_converges_to_ball():
    errs = [abs(icosphere(k).volume - 4 * math.pi / 3) for k in range(1, 5)]
    assert all(b < a / 3 for a, b in zip(errs, errs[1:]))


def test_inverted_and_open_meshes():
    m = icosphere(1)
    with pytest.raises(MeshInverted):
        mesh_validate(m.flipped())
    with pytest.raises(MeshOpen):
        mesh_validate(TriangleMesh(m.vertices, m.faces[1:]))


def test_degenerate_face():
    m = icosphere(0)
    v = m.vertices.copy()
    f = m.faces.copy()
    v[f[0, 2]] = 0.5 * (v[f[0, 0]] + v[f[0, 1]])
    with pytest.raises(MeshDegenerateFace):
        mesh_validate(TriangleMesh(v, f))


def test_place_cavity():
    m = place_cavity(icosphere(1), 0.2, (1.0, 2.0, -1.0))
    assert np.allclose(m.vertices.mean(axis=0), [1.0, 2.0, -1.0])
    assert m.volume == pytest.approx(0.008 * icosphere(1).volume)
    with pytest.raises(CavityTouchesSurface):
        place_cavity(icosphere(1), 1.0, (0.0, 0.0, -0.5))
    with pytest.raises(ValueError):
        place_cavity(icosphere(1), 0.0, (0.0, 0.0, -1.0))


def test_off_roundtrip(tmp_path):
    m = icosphere(2)
    write_off(m, tmp_path / "s.off")
    back = read_off(tmp_path / "s.off")
    assert np.array_equal(back.faces, m.faces)
    assert np.array_equal(back.vertices, m.vertices)


@pytest.mark.parametrize("text", ["", "NOFF\n", "OFF\n3 1 0\n0 0 0\n1 0 0\n", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n"])
def test_off_malformed(tmp_path, text):
    p = tmp_path / "bad.off"
    p.write_text(text)
    with pytest.raises(MeshInvalid):
        read_off(p)


def test_contains():
    m = icosphere(2)
    inside = contains(m, [[0, 0, 0], [0.5, 0.2, -0.3], [1.5, 0, 0], [0, 0, 3]])
    assert inside.tolist() == [True, True, False, False]


def test_point_triangle_distance(rng):
    tri = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert point_triangle_distance([0.2, 0.2, 0.5], tri) == pytest.approx(0.5)
    assert point_triangle_distance([2.0, 0, 0], tri) == pytest.approx(1.0)
    # brute force against a dense sample of the triangle
    s = rng.uniform(size=(20000, 2))
    s = s[s.sum(axis=1) <= 1]
    cloud = s[:, :1] * tri[1] + s[:, 1:] * tri[2]
    for p in rng.normal(size=(5, 3)):
        brute = np.linalg.norm(cloud - p, axis=1).min()
        assert point_triangle_distance(p, tri) == pytest.approx(brute, abs=2e-2)
        assert point_triangle_distance(p, tri) <= brute + 1e-12


def test_unit_radius_and_area():
    m = icosphere(3)
    assert np.abs(np.linalg.norm(m.vertices, axis=1) - 1).max() < 1e-12
    assert abs(m.total_area - 4 * math.pi) / (4 * math.pi) < 1e-2
    # the inscribed polyhedron loses volume like h^2: about 3.4% at level 2 and 0.9% at level 3
    ball = 4 * math.pi / 3
    assert abs(mesh_validate(icosphere(2)).signed_volume - ball) / ball < 4e-2
    assert abs(mesh_validate(icosphere(3)).signed_volume - ball) / ball < 1e-2


@pytest.mark.parametrize("k", [1, 3])
def test_divergence_identities(k):
    m = place_cavity(icosphere(k), 0.3, (0.2, -0.1, -2.0))
    assert np.linalg.norm(m.areas @ m.normals) <= 1e-12 * m.total_area
    # sum a n (x) c is exactly |polyhedron| I (linear integrand, exact centroid rule)
    assert np.allclose(np.einsum("p,pi,pj->ij", m.areas, m.normals, m.centroids), m.volume * np.eye(3),
                       atol=1e-14)


def test_ball_moment_converges():
    errs = [np.abs(np.einsum("p,pi,pj->ij", m.areas, m.normals, m.centroids) / (4 * math.pi / 3)
                   - np.eye(3)).max() for m in map(icosphere, (1, 2, 3))]
    assert errs[1] < errs[0] / 3 and errs[2] < errs[1] / 3


def test_place_cavity_bounds_and_volume():
    m = place_cavity(icosphere(2), 0.1, (0.0, 0.0, -1.0))
    assert m.vertices[:, 2].min() >= -1.1 - 1e-15 and m.vertices[:, 2].max() <= -0.9 + 1e-15
    assert m.volume == pytest.approx(1e-3 * icosphere(2).volume, rel=1e-12)
    assert np.array_equal(m.faces, icosphere(2).faces)
    with pytest.raises(CavityTouchesSurface):
        place_cavity(icosphere(0), 1.0, (0.0, 0.0, -1e-300))
