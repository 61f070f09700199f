import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mogibem.quadrature import W7, duffy_rule, refine_near, refine_pairs, triangle_rule

TRI = np.array([[0.0, 0, 0], [2, 0, 0], [0.5, 1.5, 0.3]])


def _monomial_exact(p, q):
    # integral over the reference triangle of s^p t^q
    from math import factorial
    return factorial(p) * factorial(q) / factorial(p + q + 2)


@pytest.mark.parametrize("p, q", [(a, b) for a in range(6) for b in range(6) if a + b <= 5])
def test_seven_point_degree_five(p, q):
    ref = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]])
    pts, w = triangle_rule(ref)
    assert np.dot(w, pts[:, 0] ** p * pts[:, 1] ** q) == pytest.approx(_monomial_exact(p, q), rel=1e-12)


def test_weights_sum_to_area():
    pts, w = triangle_rule(TRI)
    area = 0.5 * np.linalg.norm(np.cross(TRI[1] - TRI[0], TRI[2] - TRI[0]))
    assert w.sum() == pytest.approx(area)
    assert W7.sum() == pytest.approx(1.0)


def _inverse_distance_exact(tri, c):
    # in-plane 1/r from c: each sub-triangle (c, a, b) contributes h [ln(sec + tan)] over its angles
    total = 0.0
    for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
        e = (b - a) / np.linalg.norm(b - a)
        foot = a + np.dot(c - a, e) * e
        h = np.linalg.norm(c - foot)
        ta, tb = np.dot(a - foot, e) / h, np.dot(b - foot, e) / h
        total += h * (np.arcsinh(tb) - np.arcsinh(ta))
    return total


@pytest.mark.parametrize("order, tol", [(8, 1e-3), (12, 1e-5), (24, 1e-9)])
def test_duffy_integrates_inverse_distance(order, tol):
    c = TRI.mean(axis=0)
    p, w = duffy_rule(TRI, order=order)
    val = np.dot(w, 1 / np.linalg.norm(p - c, axis=1))
    assert val == pytest.approx(_inverse_distance_exact(TRI, c), rel=tol)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.01, 1.0))
def test_refinement_near_singular_point(h):
    target = TRI.mean(axis=0) + h * np.array([0.0, 0.0, 1.0]) / np.linalg.norm([0.0, 0.0, 1.0])
    p, w = refine_near(TRI, target, max_depth=7)
    ref_p, ref_w = refine_near(TRI, target, ratio=12, max_depth=9)
    f = lambda x: 1 / np.linalg.norm(x - target, axis=1)
    assert np.dot(w, f(p)) == pytest.approx(np.dot(ref_w, f(ref_p)), rel=1e-4)


def test_refine_pairs_layout():
    tris = np.stack([TRI, TRI + 5.0])
    targets = np.array([TRI.mean(axis=0) + [0, 0, 0.05], [100.0, 0, 0]])
    pts, wts, offs = refine_pairs(tris, targets)
    assert offs[0] == 0 and offs[-1] == len(pts) == len(wts)
    assert offs[2] - offs[1] == 7           # far pair keeps the plain rule
    assert offs[1] > 7                       # near pair was split
    assert wts[:offs[1]].sum() == pytest.approx(triangle_rule(TRI)[1].sum())
