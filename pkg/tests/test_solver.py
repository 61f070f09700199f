import numpy as np
import pytest

from mogibem import asymptotics as asy
from mogibem.errors import CavityTouchesSurface, MeshOpen, PointInsideCavity, SingularSystem
from mogibem.mesh import TriangleMesh, icosphere, place_cavity
from mogibem.solver import (BoundaryField, convergence_report, factorize, solve_trace,
                            surface_displacement, surface_grid)


def test_trace_residual(cavity2):
    _, _, f = cavity2
    assert f.info["residual"] < 1e-10


def test_trace_is_radial_expansion(cavity2, rock):
    # a small pressurised sphere deforms like the full-space solution -p eps^3 r / (4 mu |r|^3)
    cav, _, f = cavity2
    r = cav.centroids - [0.0, 0.0, -1.0]
    exact = -0.1 ** 3 * r / (4 * rock.mu * np.linalg.norm(r, axis=1, keepdims=True) ** 3)
    fn = np.einsum("ij,ij->i", f.values, cav.normals)
    assert np.allclose(fn, np.einsum("ij,ij->i", exact, cav.normals), rtol=3e-2)
    tangential = f.values - fn[:, None] * cav.normals
    assert np.abs(tangential).max() < 5e-2 * np.abs(fn).max()


def test_linear_in_pressure(cavity2, rock):
    cav, rule, f = cavity2
    f3 = solve_trace(cav, rock, -3.0, rule)
    assert np.allclose(f3.values, -3.0 * f.values, rtol=1e-13, atol=0)


def test_surface_field_vs_mogi(cavity2, rock):
    cav, rule, f = cavity2
    pts = surface_grid((0.0, 0.0), 5.0, 11, 11)
    u = surface_displacement(cav, rock, 1.0, f, pts, rule)
    ref = asy.mogi((0, 0, -1.0), 0.1, 1.0, rock, pts)
    assert np.abs(u - ref).max() < 5e-2 * np.abs(ref).max()


def test_epicentre_symmetry(cavity2, rock):
    cav, rule, f = cavity2
    u = surface_displacement(cav, rock, 1.0, f, [[0.0, 0.0], [0.7, 0.0], [0.0, 0.7], [-0.7, 0.0]], rule)
    assert np.abs(u[0, :2]).max() < 1e-3 * abs(u[0, 2])
    assert u[1, 2] == pytest.approx(u[2, 2], rel=1e-2)
    assert u[1, 0] == pytest.approx(-u[3, 0], rel=1e-2)


def test_interior_points(cavity2, rock):
    cav, rule, f = cavity2
    u = surface_displacement(cav, rock, 1.0, f, [[0.0, 0.0, -0.5], [0.3, 0.0, -1.0]], rule)
    assert np.all(np.isfinite(u))
    with pytest.raises(PointInsideCavity):
        surface_displacement(cav, rock, 1.0, f, [[0.0, 0.0, -1.0]], rule)


def test_bad_meshes(rock):
    with pytest.raises(CavityTouchesSurface):
        solve_trace(icosphere(1), rock, 1.0)
    cav = place_cavity(icosphere(1), 0.2, (0, 0, -1.0))
    with pytest.raises(MeshOpen):
        solve_trace(TriangleMesh(cav.vertices, cav.faces[2:]), rock, 1.0)


def test_factorize_singular():
    with pytest.raises(SingularSystem):
        factorize(np.zeros((6, 6)))
    with pytest.raises(SingularSystem):
        factorize(np.diag([1.0, 1.0, 1e-20]))


def test_boundary_field_validates():
    m = icosphere(0)
    with pytest.raises(ValueError):
        BoundaryField(np.zeros((3, 3)), m)
    with pytest.raises(ValueError):
        BoundaryField(np.full((20, 3), np.nan), m)


def test_surface_grid_ordering():
    g = surface_grid((1.0, 2.0), 1.0, 3, 2)
    assert g.shape == (6, 2)
    assert g[0].tolist() == [0.0, 1.0] and g[1].tolist() == [0.0, 3.0] and g[-1].tolist() == [2.0, 3.0]


def test_convergence_report_small(rock):
    rep = convergence_report(icosphere(1), (0.2, 0.1), rock, leading="sphere",
                             points=surface_grid((0, 0), 3.0, 5, 5))
    assert len(rep.rows) == 2 and np.isnan(rep.rows[0].ratio)
    assert rep.rows[1].consistent_gap < rep.rows[0].consistent_gap / 8
    assert "Mogi" in rep.lines()[0]
    with pytest.raises(ValueError):
        convergence_report(icosphere(1), (0.1, 0.2), rock)


def test_zero_pressure(cavity2, rock):
    cav, rule, _ = cavity2
    assert np.all(solve_trace(cav, rock, 0.0, rule).values == 0.0)


def test_small_deep_sphere_trace(rock):
    cav = place_cavity(icosphere(3), 0.05, (0.0, 0.0, -1.0))
    f = solve_trace(cav, rock, 1.0)
    zeta = (cav.centroids - [0.0, 0.0, -1.0]) / 0.05
    zeta /= np.linalg.norm(zeta, axis=1, keepdims=True)
    radial = np.einsum("ij,ij->i", f.values, zeta)
    assert np.abs(f.values - radial[:, None] * zeta).max() <= 3e-2 * np.abs(radial).max()
    assert np.allclose(radial, -0.05 / (4 * rock.mu), rtol=5e-2)


def test_horizontal_translation_covariance(rock):
    shape = icosphere(1)
    pts = np.array([[0.5, 0.2], [1.0, -1.0], [3.0, 2.0]])
    shift = np.array([0.7, -1.3])
    out = []
    for centre, p in (((0.0, 0.0, -1.0), pts), ((0.7, -1.3, -1.0), pts + shift)):
        cav = place_cavity(shape, 0.1, centre)
        out.append(surface_displacement(cav, rock, 1.0, solve_trace(cav, rock, 1.0), p))
    assert np.abs(out[1] - out[0]).max() <= 1e-10 * np.abs(out[0]).max()


def test_far_field_decay(cavity2, rock):
    cav, rule, f = cavity2
    r = np.geomspace(20, 2000, 6)
    u = surface_displacement(cav, rock, 1.0, f, np.column_stack([r, 0 * r]), rule)
    assert np.polyfit(np.log(r), np.log(np.linalg.norm(u, axis=1)), 1)[0] == pytest.approx(-2, abs=0.1)


@pytest.fixture(scope="module")
def level2_report():
    from mogibem.moduli import moduli_from_poisson
    return convergence_report(icosphere(2), (0.2, 0.1, 0.05), moduli_from_poisson(0.25, 1.0))


def test_convergence_report_sphere(level2_report):
    rows = level2_report.rows
    assert level2_report.monotone()
    assert rows[-1].relative_gap <= 0.05
    # against the trace-consistent source the remainder falls by at least 8x per halving
    assert all(r.consistent_ratio >= 8 for r in rows[1:])


def test_convergence_report_deterministic(level2_report):
    from mogibem.moduli import moduli_from_poisson
    again = convergence_report(icosphere(2), (0.2, 0.1, 0.05), moduli_from_poisson(0.25, 1.0))
    assert again.lines() == level2_report.lines()
