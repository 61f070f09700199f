"""Command-line interface: ``mogibem forward | pointsource | mogi | moment | validate``.

Every field command reads a run configuration (see :mod:`mogibem.config`)
and writes CSV ``y1,y2,u1,u2,u3``. Lengths are rescaled by the source depth
``d = |z3|`` before solving and the displacement is scaled back by ``d``, so
output is in the units of the input. Exit codes: 2 configuration error,
3 mesh error, 4 solver error.
"""
from __future__ import annotations

import functools
import sys

import click
import numpy as np

from . import __version__
from . import asymptotics as asy
from .config import RunConfig, SurfacePointSet, load_config
from .errors import ConfigError, MeshInvalid, MogiBemError
from .mesh import TriangleMesh, icosphere, place_cavity, read_off

EXIT_CONFIG, EXIT_MESH, EXIT_SOLVER = 2, 3, 4


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            _fail(EXIT_CONFIG, str(exc))
        except MeshInvalid as exc:
            _fail(EXIT_MESH, str(exc))
        except MogiBemError as exc:
            _fail(EXIT_SOLVER, str(exc))
    return wrapper


def shape_mesh(cfg: RunConfig) -> TriangleMesh:
    """The unscaled shape Omega: built-in icosphere or the OFF file."""
    if cfg.cavity == "sphere":
        return icosphere(cfg.subdiv)
    try:
        return read_off(cfg.mesh_file)
    except OSError as exc:
        raise MeshInvalid(f"cannot read mesh {cfg.mesh_file}: {exc.strerror}") from None


def normalized(cfg: RunConfig, points: SurfacePointSet):
    """Source position and surface points divided by the depth."""
    d = cfg.depth
    return np.asarray(cfg.z) / d, points.points / d


def format_csv(points: np.ndarray, u: np.ndarray) -> str:
    """CSV text with 17 significant digits and LF line endings."""
    rows = ["y1,y2,u1,u2,u3"]
    rows += [",".join("%.17g" % v for v in row) for row in np.column_stack([points, u])]
    return "\n".join(rows) + "\n"


def _write(text: str, output: str):
    if output in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        with open(output, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {output}: {exc.strerror}") from None


def forward_field(cfg: RunConfig, points: SurfacePointSet) -> np.ndarray:
    """Full boundary-element surface field in input units."""
    from .layers import PanelRule
    from .solver import solve_trace, surface_displacement

    moduli = cfg.moduli()
    z, y = normalized(cfg, points)
    cav = place_cavity(shape_mesh(cfg), cfg.epsilon, z)
    rule = PanelRule(cav)
    f = solve_trace(cav, moduli, cfg.pressure, rule)
    return cfg.depth * surface_displacement(cav, moduli, cfg.pressure, f, y, rule)


def pointsource_field(cfg: RunConfig, points: SurfacePointSet, moment: str = "bem") -> np.ndarray:
    moduli = cfg.moduli()
    z, y = normalized(cfg, points)
    if moment == "analytic-sphere":
        src = (asy.sphere_MI(moduli), asy.SPHERE_VOLUME)
        diam = 2.0
    else:
        shape = shape_mesh(cfg)
        src, diam = asy.moment_tensor(shape, moduli), shape.scale
    u = asy.point_source_displacement(z, cfg.epsilon, cfg.pressure, src, moduli, y, shape_diameter=diam)
    return cfg.depth * u


def mogi_field(cfg: RunConfig, points: SurfacePointSet) -> np.ndarray:
    z, y = normalized(cfg, points)
    return cfg.depth * asy.mogi(z, cfg.epsilon, cfg.pressure, cfg.moduli(), y)


def _load(config_path, output):
    cfg = load_config(config_path)
    return cfg, SurfacePointSet.from_config(cfg), output or cfg.output


_config_arg = click.argument("config", type=click.Path(dir_okay=False))
_output_opt = click.option("-o", "--output", default=None, help="CSV path ('-' for stdout); overrides the config.")


@click.group()
@click.version_option(version=__version__, prog_name="mogibem")
def main():
    """Surface deformation from a pressurised cavity in an elastic half-space."""


@main.command()
@_config_arg
@_output_opt
@_guarded
def forward(config, output):
    """Full boundary-element solve; writes the surface displacement CSV."""
    cfg, pts, out = _load(config, output)
    _write(format_csv(pts.points, forward_field(cfg, pts)), out)


@main.command()
@_config_arg
@_output_opt
@click.option("--moment", type=click.Choice(["analytic-sphere", "bem"]), default="bem", show_default=True,
              help="Moment tensor source: closed-form sphere or computed for the configured shape.")
@_guarded
def pointsource(config, output, moment):
    """Leading-order point-source field of the configured cavity."""
    cfg, pts, out = _load(config, output)
    _write(format_csv(pts.points, pointsource_field(cfg, pts, moment)), out)


@main.command()
@_config_arg
@_output_opt
@_guarded
def mogi(config, output):
    """Closed-form Mogi field (spherical cavity)."""
    cfg, pts, out = _load(config, output)
    _write(format_csv(pts.points, mogi_field(cfg, pts)), out)


@main.command()
@_config_arg
@_guarded
def moment(config):
    """Print M I and the full moment tensor of the configured shape."""
    cfg = load_config(config)
    shape = shape_mesh(cfg)
    mt = asy.moment_tensor(shape, cfg.moduli())
    click.echo(f"shape: {cfg.cavity} ({shape.n_faces} faces), volume {mt.volume:.10f}")
    click.echo(f"lambda {cfg.moduli().lam:.10g}, mu {cfg.moduli().mu:.10g}, nu {cfg.moduli().nu:.10g}")
    for line in mt.lines():
        click.echo(line)


@main.command()
@click.option("--level", default=3, show_default=True, help="Icosphere level for the Mogi and moment checks.")
@click.option("--jump-level", default=2, show_default=True, help="Icosphere level for the jump-relation probe.")
@click.option("--no-convergence", is_flag=True, help="Skip the convergence table.")
@click.option("--inject-fault", type=click.Choice(["r2-sign"]), default=None, hidden=True)
def validate(level, jump_level, no_convergence, inject_fault):
    """Run the self-checks; exits 1 if any fails."""
    from .validation import run_all

    rep = run_all(fault=inject_fault, level=level, jump_level=jump_level,
                  epsilons=() if no_convergence else (0.2, 0.1, 0.05))
    for line in rep.lines():
        click.echo(line)
    sys.exit(0 if rep.passed else 1)


if __name__ == "__main__":  # pragma: no cover
    main()
