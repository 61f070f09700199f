"""Compare the compiled and pure-Python kernel backends.

Times dense operator assembly (single layer, double layer, regular parts)
and one off-boundary potential evaluation on icospheres, and checks that
both backends give the same numbers.

    python3 benchmarks/bench_backends.py [--levels 1 2 3] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mogibem import backend, layers
from mogibem.mesh import icosphere, place_cavity
from mogibem.moduli import moduli_from_poisson


def _time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def run(levels, repeat):
    moduli = moduli_from_poisson(0.25, 1.0)
    try:
        compiled = backend.load("compiled")
    except ImportError:
        compiled = None
        print("compiled backend not built; timing the numpy backend only")
    python = backend.load("python")
    print(f"{'level':>5} {'panels':>7} {'operator':>10} {'python s':>10} {'compiled s':>11} {'speed-up':>9} {'max diff':>10}")
    for level in levels:
        mesh = place_cavity(icosphere(level), 0.2, (0.0, 0.0, -1.0))
        rule = layers.PanelRule(mesh)
        pts = np.column_stack([np.linspace(-2, 2, 200), np.zeros(200), np.zeros(200)])
        jobs = {
            "S": lambda: layers.assemble_single_layer(mesh, moduli, rule),
            "K": lambda: layers.assemble_K(mesh, moduli, rule),
            "SR+DR": lambda: np.hstack(layers.assemble_regular_ops(mesh, moduli, rule)),
            "D[f] 200": lambda: layers.eval_potential("DΓ", pts, mesh, mesh.normals, moduli, rule),
        }
        for name, job in jobs.items():
            backend.core = python
            tp, ref = _time(job, repeat)
            if compiled is None:
                print(f"{level:>5} {mesh.n_faces:>7} {name:>10} {tp:>10.3f} {'-':>11} {'-':>9} {'-':>10}")
                continue
            backend.core = compiled
            tc, got = _time(job, repeat)
            diff = np.abs(got - ref).max() / np.abs(ref).max()
            print(f"{level:>5} {mesh.n_faces:>7} {name:>10} {tp:>10.3f} {tc:>11.3f} {tp / tc:>9.1f} {diff:>10.1e}")
    backend.core = compiled or python


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--repeat", type=int, default=1)
    args = ap.parse_args()
    run(args.levels, args.repeat)
