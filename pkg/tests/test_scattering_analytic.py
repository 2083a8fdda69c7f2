import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import oracles
from mtlz import family_builder as fb
from mtlz import scattering_analytic as sa
from mtlz.scattering_analytic import Monomial


def test_cell_count_matches_vertex_multiplicity_oracle(cube_family, cube_complex):
    normals = oracles.distinct_great_circles(cube_family.rescaled().values())
    assert cube_complex.euler() == oracles.sphere_arrangement_counts(normals)
    assert cube_complex.euler_characteristic() == 2


def test_cells_come_in_antipodal_pairs(cube_complex):
    for c in cube_complex.cells:
        a = cube_complex.antipode(c.id)
        assert a != c.id
        assert cube_complex.antipode(a) == c.id
        assert cube_complex.locate(-c.rep) == a


def test_dual_graph_neighbours_differ_in_one_circle(cube_dual, cube_complex):
    for c in cube_complex.cells:
        for nb, k in cube_dual.neighbors(c.id):
            s1, s2 = c.signs, cube_complex.cells[nb].signs
            diff = [i for i in range(len(s1)) if s1[i] != s2[i]]
            assert diff == [k]


def test_non_three_dimensional_family_rejected():
    with pytest.raises(sa.UnsupportedDimension):
        sa.build_arrangement(fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4))


@pytest.mark.parametrize("gamma", [0.01, 0.1, 0.5, 2.0])
def test_connecting_block_unitary_with_lz_weights(gamma):
    for reverse in (False, True):
        U = sa.connecting_block(gamma, reverse)
        assert np.allclose(U.conj().T @ U, np.eye(2))
        p = oracles.lz_probability(gamma)
        assert np.allclose(np.abs(U) ** 2, [[p, 1 - p], [1 - p, p]])


def test_stokes_phase_small_gamma_limit():
    # the phase tends to pi/4 as gamma -> 0
    assert sa.stokes_phase(1e-9) == pytest.approx(math.pi / 4, abs=1e-6)


def test_every_cell_path_independent(cube_dual, cube_family, cube_complex):
    setup = sa.setup_from_family(cube_family, cube_complex.arrangement)
    for c in cube_complex.cells[::7]:
        S, P = sa.scattering_product(cube_dual, c.id, setup, check_paths=True)
        assert np.allclose(S.conj().T @ S, np.eye(8), atol=1e-12)


def test_reference_matrices_found_in_census(cube_census):
    six = cube_census.representatives[2].symbolic
    eight = cube_census.representatives[3].symbolic
    assert sa.equivalent(six, sa.REFERENCE_SIX_ZERO) is not None
    assert sa.equivalent(eight, sa.REFERENCE_EIGHT_ZERO) is not None
    assert sa.equivalent(six, sa.REFERENCE_EIGHT_ZERO) is None


def test_type_three_is_lz_times_two_spin_magnet(cube_census):
    # after swapping levels 1<->2 and 5<->6, P_8zeros is (4x4 block) (x) (2x2 LZ in index 2)
    ps = (0.3, 0.55, 0.8)
    P = np.array([[0.0 if e is None else e.evaluate(ps) for e in row] for row in sa.REFERENCE_EIGHT_ZERO])
    perm = [0, 2, 1, 3, 4, 6, 5, 7]
    Q = P[np.ix_(perm, perm)]
    lz = np.array([[ps[1], 1 - ps[1]], [1 - ps[1], ps[1]]])
    inner = Q[::2, ::2] / ps[1]
    assert np.allclose(np.kron(inner, lz), Q)
    # the 4x4 block has the two zero pairs of a two-spin magnet and is itself stochastic
    assert np.sum(np.isclose(inner, 0.0)) == 4
    assert np.allclose(inner.sum(axis=0), 1.0)
    assert cube_census.counts[3] > 0


def test_monomial_roundtrip_and_evaluation():
    m = Monomial.parse("p1 q2 q3")
    assert str(m) == "p1 q2 q3"
    assert m.degree == 3
    assert m.evaluate((0.5, 0.2, 0.1)) == pytest.approx(0.5 * 0.8 * 0.9)
    assert Monomial.parse("0") is None
    assert str(m.permuted((1, 0, 2))) == "q1 p2 q3"


def test_fit_monomials_recovers_direct_product():
    sym = sa.fit_monomials(sa.direct_product_cube)
    assert str(sym[0][0]) == "p1 p2 p3"
    assert str(sym[0][7]) == "q1 q2 q3"
    assert sa.symbolic_sum_is_one(sym[3])


def test_symbolic_sum_detects_non_partition():
    row = [Monomial.parse(t) for t in ("p1 p2", "q1 p2", "q2 p1")]
    assert not sa.symbolic_sum_is_one(row)
    assert sa.symbolic_sum_is_one([Monomial.parse(t) for t in ("p1 p2", "q1 p2", "q2")])


def test_equivalent_finds_relabelling():
    a = sa.REFERENCE_SIX_ZERO
    sigma = [3, 1, 0, 2, 7, 6, 5, 4]
    b = [[a[sigma[i]][sigma[j]] for j in range(8)] for i in range(8)]
    assert sa.equivalent(a, b) is not None


def test_tau_zero_needs_merged_circles():
    fam = fb.build_cube((0.0, 0.0, 0.0), gammas=(0.1, 0.07, 0.05))
    with pytest.raises(sa.DegenerateArrangementError):
        sa.build_arrangement(fam)
    arr = sa.build_arrangement(fam, merge=True)
    assert arr.n_circles == 3
    assert all(len(arr.circle_members(k)) == 4 for k in range(3))


def test_tau_zero_is_direct_product():
    gammas = (0.1, 0.07, 0.05)
    fam = fb.build_cube((0.0, 0.0, 0.0), gammas=gammas)
    cx = sa.enumerate_cells(sa.build_arrangement(fam, merge=True))
    assert cx.n_cells == 8
    dual = sa.dual_graph(cx)
    setup = sa.setup_from_family(fam, cx.arrangement)
    ps = [oracles.lz_probability(g) for g in gammas]
    # level bit k belongs to gamma class k, so spin 1 of the oracle is the highest bit
    expected = oracles.kron_lz(ps[::-1])
    for c in cx.cells:
        _, P = sa.scattering_product(dual, c.id, setup)
        assert np.max(np.abs(P - expected)) < 1e-12


def test_shared_level_on_coincident_circles_is_degenerate():
    normals = [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
    with pytest.raises(sa.DegenerateArrangementError):
        sa.arrangement_from_normals([(0, 1), (1, 2), (0, 3)], normals, merge=True)


def test_stereographic_scene_preserves_cells(cube_complex, tmp_path):
    scene = sa.stereographic_project(cube_complex.arrangement)
    assert sa.planar_cell_count(scene, cube_complex) == cube_complex.n_cells
    # inside/outside of each projected circle is a fixed relabelling of the normal sign
    flips = {tuple(np.multiply(scene.planar_signs(scene.project(c.rep)), c.signs))
             for c in cube_complex.cells}
    assert len(flips) == 1
    sa.scene_svg(scene, tmp_path / "cells.svg")
    sa.scene_csv(scene, tmp_path / "cells.csv")
    assert ET.parse(tmp_path / "cells.svg").getroot().tag.endswith("svg")
    assert len((tmp_path / "cells.csv").read_text().splitlines()) == len(scene.curves) + 1


def test_tau_sign_case():
    assert sa.tau_sign_case([0.5, 0.3, 0.4, 0.6, 0.6, 0.7]) == 1
    assert sa.tau_sign_case([-0.1, 0.5, 0.3, 0.6, 0.2, 0.3]) == 2
    assert sa.tau_sign_case([-0.1, 0.5, 0.3, -0.6, 0.2, 0.3]) == 3
