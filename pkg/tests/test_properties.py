"""Property-based checks over random parameters."""
import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

import oracles
from mtlz import family_builder as fb
from mtlz import form_algebra as fa
from mtlz import graph_core as gc
from mtlz import hamiltonian_engine as he
from mtlz import scattering_analytic as sa
from mtlz.scattering_analytic import Monomial

finite = st.floats(-3.0, 3.0, allow_nan=False, allow_infinity=False)
vec2 = st.tuples(finite, finite)
vec3 = st.tuples(finite, finite, finite)
tangent = st.floats(-0.6, 0.6)
positive = st.floats(0.05, 2.0)


def _independent(a, b):
    return abs(a[0] * b[1] - a[1] * b[0]) > 0.05


@given(vec3, vec3, vec3, finite)
def test_wedge_bilinear_antisymmetric(u, v, w, c):
    u, v, w = map(np.array, (u, v, w))
    assert np.allclose(fa.wedge(u, v), -fa.wedge(v, u))
    assert np.allclose(fa.wedge(u + c * w, v), fa.wedge(u, v) + c * fa.wedge(w, v), atol=1e-9)
    assert np.allclose(fa.wedge(u, u), 0.0)


@given(st.floats(-2, 2), st.floats(-2, 2))
def test_boosts_compose_additively(a, b):
    assert np.allclose(fa.boost(a) @ fa.boost(b), fa.boost(a + b), rtol=1e-9, atol=1e-9)


@given(st.permutations([3, 7, 1, 5]), st.booleans())
def test_canonical_loop_invariant_under_dihedral_moves(quad, reflect):
    q = list(quad)
    moved = q[::-1] if reflect else q[1:] + q[:1]
    assert gc.canonical_loop(q) == gc.canonical_loop(moved)


@settings(max_examples=40, deadline=None)
@given(vec2, vec2, st.floats(-1.5, 1.5), st.sampled_from([1, -1]), positive, positive)
def test_random_square_is_integrable(a, b, theta, p, g12, g14):
    assume(_independent(a, b))
    fam = fb.build_square(a, b, theta, p, g12, g14)
    rep = fb.validate_family(fam, tol=1e-10)
    assert rep.cycle_residual < 1e-10 and rep.edge_residual < 1e-10
    hf = he.assemble(fam)
    comm, curl = oracles.commutator_and_curl(hf.H, 2, np.array([0.7, -1.3]))
    scale = max(np.linalg.norm(hf.H(j, (0.7, -1.3)), 2) for j in range(2))
    assert comm <= 1e-11 * scale ** 2 and curl <= 1e-11 * scale


@settings(max_examples=40, deadline=None)
@given(tangent, tangent, tangent)
def test_random_cube_tangents_match_oracle(t1, t2, t3):
    try:
        fam = fb.build_cube((t1, t2, t3))
    except fb.DomainError:
        assume(False)
    forms = fam.rescaled()
    faces = [(0, 0, 1), (0, 0, 2), (0, 1, 2), (1, 1, 2), (2, 0, 2), (4, 0, 1)]
    got = [oracles.face_tangent(forms, *f) for f in faces]
    assert np.allclose(got, fam.meta["tau"], atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.6), st.floats(0.05, 0.6), st.floats(0.05, 0.6))
def test_random_cube_arrangement_euler(t1, t2, t3):
    try:
        fam = fb.build_cube((t1, t2, t3))
        cx = sa.enumerate_cells(sa.build_arrangement(fam))
    except (fb.DomainError, sa.DegenerateArrangementError):
        assume(False)
    normals = oracles.distinct_great_circles(fam.rescaled().values())
    assert cx.euler() == oracles.sphere_arrangement_counts(normals)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_two_spin_magnet_identification(b1, b2, g1, g2):
    assume(abs(b1 - b2) > 0.05 and abs(g1) > 0.01 and abs(g2) > 0.01)
    sq, perm = fb.gamma_magnet2_as_square((b1, b2), (g1, g2))
    hm = he.assemble(fb.build_gamma_magnet(2, (b1, b2), (g1, g2)))
    hs = he.assemble(sq)
    idx = np.ix_(perm, perm)
    for x in ((0.3, -1.1), (2.0, 0.5)):
        for j in range(2):
            scale = max(1.0, np.max(np.abs(hm.H(j, x))))
            assert np.max(np.abs(hs.H(j, x) - hm.H(j, x)[idx])) <= 1e-12 * scale * 100


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=4))
def test_lz_direct_product_doubly_stochastic(ps):
    P = oracles.kron_lz(ps)
    assert np.allclose(P.sum(axis=0), 1.0) and np.allclose(P.sum(axis=1), 1.0)
    assert np.allclose(P, P.T)


@given(st.floats(0.001, 5.0), st.booleans())
def test_connecting_block_is_unitary(gamma, reverse):
    U = sa.connecting_block(gamma, reverse)
    assert np.allclose(U.conj().T @ U, np.eye(2), atol=1e-12)
    assert math.isclose(abs(U[0, 0]) ** 2, math.exp(-2 * math.pi * gamma), rel_tol=1e-12)


@given(st.lists(st.integers(0, 2), min_size=6, max_size=6).filter(lambda e: sum(e) <= 3),
       st.permutations([0, 1, 2]))
def test_monomial_text_roundtrip_and_relabel(exps, perm):
    m = Monomial(tuple(exps))
    if m.degree == 0:
        return
    assert Monomial.parse(str(m)) == m
    # index i moves to perm[i], so the values must move with it
    ps = (0.2, 0.5, 0.7)
    moved_ps = [0.0] * 3
    for i, j in enumerate(perm):
        moved_ps[j] = ps[i]
    assert math.isclose(m.permuted(perm).evaluate(moved_ps), m.evaluate(ps))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.sampled_from([1, -1]), min_size=4, max_size=4))
def test_square_loop_class_matches_sign_count(signs):
    g = gc.square()
    edges = [(0, 1), (1, 2), (2, 3), (3, 0)]
    o = gc.Orientation(g, dict(zip(edges, signs)))
    cls = gc.enumerate_four_loops(g)[0].classify(o)
    if sum(signs) != 0:
        assert cls is gc.LoopClass.INVALID
    else:
        assert cls in (gc.LoopClass.BIPARTITE, gc.LoopClass.NON_BIPARTITE)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.2, 3.0), min_size=2, max_size=3, unique=True),
       st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3))
def test_separable_crossings_match_zero_coupling_count(betas, eps):
    # vanishing couplings turn every pair into an exact crossing
    n = len(betas)
    A, B = fb.separable_spins(betas, [0.0] * n, eps[:n])
    scan = he.scan_spectrum(he.LinearHamiltonian(A, B), grid=3000)
    assume(he.diabatic_clearance(he.LinearHamiltonian(A, B)) > 1e-3)
    pairs = 2 ** n * (2 ** n - 1) // 2
    slopes = np.diag(B)
    parallel = sum(1 for i in range(2 ** n) for j in range(i + 1, 2 ** n) if slopes[i] == slopes[j])
    assert scan.exact_count == pairs - parallel
