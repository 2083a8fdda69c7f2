import math

import numpy as np
import pytest

from mtlz import family_builder as fb
from mtlz import form_algebra as fa
from mtlz import graph_core as gc
from mtlz.form_algebra import NoSolution, TransformKind


def test_wedge_is_antisymmetric_bivector():
    u, v = np.array([1.0, 2.0, -1.0]), np.array([0.5, 0.0, 3.0])
    w = fa.wedge(u, v)
    assert np.allclose(w, -w.T)
    assert np.allclose(w, -fa.wedge(v, u))
    assert w[0, 1] == pytest.approx(u[0] * v[1] - u[1] * v[0])


def test_wedge_dimension_mismatch():
    with pytest.raises(fa.FormError):
        fa.wedge([1.0, 0.0], [1.0, 0.0, 0.0])


def test_as_form_rejects_bad_input():
    with pytest.raises(fa.FormError):
        fa.as_form([[1.0, 0.0]])
    with pytest.raises(fa.FormError):
        fa.as_form([1.0, float("nan")])


def test_rescale_roundtrip_and_positive_gamma():
    A = np.array([0.3, -1.2])
    assert np.allclose(fa.unrescale(fa.rescale(A, 0.07), 0.07), A)
    with pytest.raises(fa.FormError):
        fa.rescale(A, 0.0)


def test_cs_from_tau_hyperbolic_identity():
    c, s = fa.cs_from_tau(0.6, p=-1)
    assert c * c - s * s == pytest.approx(1.0)
    assert s / c == pytest.approx(0.6)
    assert c < 0
    with pytest.raises(fa.FormError):
        fa.cs_from_tau(1.0)


def test_boost_preserves_minkowski_form():
    eta = np.diag([1.0, -1.0])
    B = fa.boost(0.8)
    assert np.allclose(B.T @ eta @ B, eta)


@pytest.mark.parametrize("r, p, swapped, det", [
    (1, 1, False, 1.0), (-1, 1, False, -1.0), (1, -1, False, 1.0), (1, 1, True, -1.0),
])
def test_pseudo_orthogonal_determinant(r, p, swapped, det):
    t = fa.LoopTransform(TransformKind.PSEUDO_ORTHOGONAL, 0.4, r, p, swapped)
    assert t.determinant() == pytest.approx(det)
    assert t.tau == pytest.approx(math.tanh(0.4))


def test_cycle_and_vertex_residuals_vanish_on_built_square():
    fam = fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4, gamma12=0.3, gamma14=0.8)
    forms = fam.rescaled()
    for cyc in gc.cycle_basis(fam.graph, fam.orientation):
        assert fa.is_zero(fa.cycle_residual(cyc, forms))
    gam = {e: abs(g) for e, g in fam.gamma.items()}
    for a, b in ((0, 2), (1, 3)):
        assert fa.is_zero(fa.vertex_residual(fam.graph, a, b, forms, gam))


def test_residuals_detect_broken_forms():
    fam = fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4)
    forms = dict(fam.rescaled())
    forms[(1, 2)] = forms[(1, 2)] * 1.01
    cyc = gc.cycle_basis(fam.graph, fam.orientation)[0]
    assert not fa.is_zero(fa.cycle_residual(cyc, forms))


def test_solve_square_transform_bipartite_and_invalid():
    g = gc.square()
    loop = gc.enumerate_four_loops(g)[0]
    res = fa.solve_square_transform(loop, gc.bipartite_square_orientation(g))
    assert isinstance(res, NoSolution) and not res
    inside = fa.solve_square_transform(loop, gc.bipartite_square_orientation(g), 0.3,
                                       entire_graph=False)
    assert inside.swapped
    bad = gc.Orientation(g, {(0, 1): 1, (1, 2): 1, (2, 3): 1, (0, 3): 1})
    with pytest.raises(fa.FormError):
        fa.solve_square_transform(loop, bad)


def test_orthogonal_equivalent_maps_intermediate_pairs():
    theta = 0.55
    fam = fb.build_square((1.0, 0.3), (0.2, 1.0), theta=theta)
    forms = fam.rescaled()
    g = fam.graph
    loop = gc.enumerate_four_loops(g)[0]
    t = fa.solve_square_transform(loop, fam.orientation, theta)
    a, b, c, d = t.loop
    o = fa.orthogonal_equivalent(t)
    m = o.matrix
    assert np.allclose(m @ m.T, np.eye(2))

    def f(x, y):
        return forms[gc.edge_key(x, y)]

    ad, dc = o.apply(f(a, b), f(b, c))
    assert np.allclose(ad, f(a, d))
    assert np.allclose(dc, f(d, c))
