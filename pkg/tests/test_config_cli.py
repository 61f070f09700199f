import numpy as np
import pytest
from click.testing import CliRunner
from hypothesis import given, settings, strategies as st

from mogibem import cli
from mogibem.config import KEYS, RunConfig, SurfacePointSet, load_config, parse_config
from mogibem.errors import ConfigError, SingularSystem
from mogibem.mesh import icosphere, write_off

BASE = """# test run
nu = 0.25
mu = 1
cavity = sphere
subdiv = {subdiv}
z = {z}
epsilon = {eps}
pressure = 1
grid_nx = {n}
grid_ny = {n}
grid_extent = 5
"""


def write_cfg(tmp_path, subdiv=1, z="0, 0, -1", eps=0.05, n=5, extra=""):
    p = tmp_path / "run.cfg"
    p.write_text(BASE.format(subdiv=subdiv, z=z, eps=eps, n=n) + extra)
    return p


def read_csv(text):
    lines = text.split("\n")
    assert lines[0] == "y1,y2,u1,u2,u3" and lines[-1] == ""
    return np.array([[float(v) for v in l.split(",")] for l in lines[1:-1]])


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=100, deadline=None)
@given(mu=st.floats(1e-3, 1e6), nu=st.floats(-0.9, 0.49), z1=finite, z2=finite, d=st.floats(1e-3, 1e5),
       eps=st.floats(1e-4, 0.5), p=finite, nx=st.integers(1, 50), ext=st.floats(0, 100),
       lame=st.booleans())
def test_roundtrip(mu, nu, z1, z2, d, eps, p, nx, ext, lame):
    kw = dict(mu=mu, z=(z1, z2, -d), epsilon=eps, pressure=p, grid_nx=nx, grid_extent=ext)
    cfg = RunConfig(lam=1.5, **kw) if lame else RunConfig(nu=nu, **kw)
    once = parse_config(cfg.serialize())
    assert once == cfg
    assert parse_config(once.serialize()) == once


def test_parse_comments_and_defaults():
    cfg = parse_config("mu = 2  # shear\n\n  lambda=3\nz = 1 2 -4\noutput = out.csv\n")
    assert cfg.lam == 3.0 and cfg.nu is None and cfg.z == (1.0, 2.0, -4.0)
    assert cfg.output == "out.csv" and cfg.cavity == "sphere" and cfg.grid_nx == 21
    assert set(KEYS) >= {"lambda", "points_file"}


@pytest.mark.parametrize("text", [
    "mu = 1\nnu = 0.25\nfoo = 3\n",             # unknown key
    "mu = 1\nnu = 0.25\nnu = 0.3\n",            # duplicate
    "mu = 1\n",                                 # neither lambda nor nu
    "mu = 1\nnu = 0.2\nlambda = 1\n",           # both
    "nu = 0.25\n",                              # missing mu
    "mu = 1\nnu = 0.25\nz = 0 0 1\n",           # source above the surface
    "mu = 1\nnu = 0.25\nz = 0 0\n",             # wrong arity
    "mu = 1\nnu = 0.25\nepsilon = 0\n",
    "mu = 1\nnu = 0.25\nepsilon = nan\n",
    "mu = 1\nnu = 0.25\ngrid_nx = 0\n",
    "mu = 1\nnu = 0.25\ngrid_nx = 2.5\n",
    "mu = 1\nnu = 0.7\n",                       # moduli out of range
    "mu = 1\nnu = 0.25\ncavity = cube\n",
    "mu = 1\nnu = 0.25\ncavity = mesh\n",
    "mu = 1\nnu = 0.25\nthis line has no equals\n",
    "mu = 1\nnu = \n",
])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_point_sets(tmp_path):
    g = SurfacePointSet.grid((1.0, -1.0), 2.0, 3, 4)
    assert len(g) == 12 and g.points[0].tolist() == [-1.0, -3.0]
    p = tmp_path / "pts.txt"
    p.write_text("# y1 y2\n0.5, 1\n2 3\n")
    assert SurfacePointSet.read(p).points.tolist() == [[0.5, 1.0], [2.0, 3.0]]
    p.write_text("1 2 3\n")
    with pytest.raises(ConfigError):
        SurfacePointSet.read(p)
    with pytest.raises(ConfigError):
        SurfacePointSet(np.empty((0, 2)))


def test_relative_paths_resolved(tmp_path):
    (tmp_path / "pts.txt").write_text("0 0\n")
    cfg = load_config(write_cfg(tmp_path, extra="points_file = pts.txt\n"))
    assert SurfacePointSet.from_config(cfg).points.tolist() == [[0.0, 0.0]]


def test_grid_follows_source(tmp_path):
    cfg = load_config(write_cfg(tmp_path, z="3, -1, -2", n=3))
    pts = SurfacePointSet.from_config(cfg).points
    assert pts.min(axis=0).tolist() == [-7.0, -11.0] and pts.max(axis=0).tolist() == [13.0, 9.0]


def test_mogi_csv_format(tmp_path):
    res = CliRunner().invoke(cli.main, ["mogi", str(write_cfg(tmp_path))])
    assert res.exit_code == 0, res.output
    data = read_csv(res.output)
    assert data.shape == (25, 5)
    centre = data[12]
    assert centre[4] == pytest.approx(-0.75 * 0.05 ** 3, rel=1e-14)
    # 17 significant digits round-trip every value exactly
    assert "\r" not in res.output
    assert all(float("%.17g" % v) == v for v in data.ravel())


def test_pointsource_analytic_equals_mogi_and_is_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, z="1, 2, -3")
    r = CliRunner()
    a = r.invoke(cli.main, ["pointsource", "--moment", "analytic-sphere", str(cfg)]).output
    b = r.invoke(cli.main, ["mogi", str(cfg)]).output
    assert a == r.invoke(cli.main, ["pointsource", "--moment", "analytic-sphere", str(cfg)]).output
    da, db = read_csv(a), read_csv(b)
    assert np.abs(da - db).max() <= 1e-10 * np.abs(db[:, 2:]).max()


def test_output_file(tmp_path):
    out = tmp_path / "u.csv"
    res = CliRunner().invoke(cli.main, ["mogi", "-o", str(out), str(write_cfg(tmp_path))])
    assert res.exit_code == 0 and res.output == ""
    assert out.read_bytes().count(b"\n") == 26


def test_forward_units_scale_with_depth(tmp_path):
    # the same geometry at twice the depth gives the field at twice the distance, times two
    r = CliRunner()
    a = read_csv(r.invoke(cli.main, ["forward", str(write_cfg(tmp_path, z="0, 0, -1", eps=0.1, n=3))]).output)
    b = read_csv(r.invoke(cli.main, ["forward", str(write_cfg(tmp_path, z="0, 0, -2", eps=0.1, n=3))]).output)
    assert np.allclose(b[:, :2], 2 * a[:, :2])
    assert np.allclose(b[:, 2:], 2 * a[:, 2:], rtol=1e-10, atol=1e-12 * np.abs(a).max())


def test_forward_close_to_mogi(tmp_path):
    cfg = str(write_cfg(tmp_path, subdiv=2, z="0.5, -0.5, -1.5", eps=0.1, n=5))
    u = read_csv(CliRunner().invoke(cli.main, ["forward", cfg]).output)
    m = read_csv(CliRunner().invoke(cli.main, ["mogi", cfg]).output)
    assert np.abs(u - m).max() < 5e-2 * np.abs(m[:, 2:]).max()


def test_moment_command(tmp_path):
    res = CliRunner().invoke(cli.main, ["moment", str(write_cfg(tmp_path, subdiv=1))])
    assert res.exit_code == 0
    assert "M I =" in res.output and "minor symmetry defect" in res.output


def test_mesh_file_cavity(tmp_path):
    write_off(icosphere(1), tmp_path / "shape.off")
    cfg = tmp_path / "m.cfg"
    cfg.write_text("mu = 1\nnu = 0.25\nmesh_file = shape.off\ngrid_nx = 2\ngrid_ny = 2\n")
    res = CliRunner().invoke(cli.main, ["pointsource", str(cfg)])
    assert res.exit_code == 0 and len(read_csv(res.output)) == 4


def test_exit_codes(tmp_path, monkeypatch):
    r = CliRunner()
    bad = tmp_path / "bad.cfg"
    bad.write_text("mu = 1\n")
    res = r.invoke(cli.main, ["forward", str(bad)])
    assert res.exit_code == 2 and "error:" in res.output
    assert r.invoke(cli.main, ["mogi", str(tmp_path / "missing.cfg")]).exit_code == 2
    # mesh errors: missing file, open mesh, cavity reaching the surface
    nomesh = tmp_path / "nomesh.cfg"
    nomesh.write_text("mu = 1\nnu = 0.25\nmesh_file = nope.off\n")
    assert r.invoke(cli.main, ["forward", str(nomesh)]).exit_code == 3
    m = icosphere(1)
    from mogibem.mesh import TriangleMesh
    write_off(TriangleMesh(m.vertices, m.faces[1:]), tmp_path / "open.off")
    openm = tmp_path / "open.cfg"
    openm.write_text("mu = 1\nnu = 0.25\nmesh_file = open.off\n")
    assert r.invoke(cli.main, ["forward", str(openm)]).exit_code == 3
    assert r.invoke(cli.main, ["forward", str(write_cfg(tmp_path, eps=1.5))]).exit_code == 3

    def boom(*a, **k):
        raise SingularSystem("pivot too small")
    monkeypatch.setattr(cli, "forward_field", boom)
    res = r.invoke(cli.main, ["forward", str(write_cfg(tmp_path))])
    assert res.exit_code == 4 and "pivot" in res.output


def test_validate_detects_injected_fault():
    res = CliRunner().invoke(cli.main, ["validate", "--level", "1", "--jump-level", "1", "--no-convergence",
                                        "--inject-fault", "r2-sign"])
    assert res.exit_code != 0
    assert "[FAIL] traction-free surface" in res.output


def test_validate_default_passes():
    res = CliRunner().invoke(cli.main, ["validate"])
    assert res.exit_code == 0, res.output
    assert "all checks passed" in res.output
    assert "convergence" in res.output and "0.05" in res.output


def test_inject_fault_hidden():
    assert "inject-fault" not in CliRunner().invoke(cli.main, ["validate", "--help"]).output
