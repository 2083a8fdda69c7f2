import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import oracles
from mtlz import family_builder as fb
from mtlz import hamiltonian_engine as he


@pytest.fixture(scope="module")
def square_hf():
    return he.assemble(fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4, gamma12=0.3, gamma14=0.8))


def test_assemble_shapes(square_hf):
    assert square_hf.B.shape == (2, 2, 4)
    assert square_hf.A.shape == (2, 4, 4)
    assert np.allclose(square_hf.A, square_hf.A.transpose(0, 2, 1))


def test_residuals_agree_with_difference_oracle(cube_family):
    hf = he.assemble(cube_family)
    rng = np.random.default_rng(11)
    for _ in range(5):
        x = rng.normal(size=3)
        r = he.integrability_residuals(hf, x)
        comm, curl = oracles.commutator_and_curl(hf.H, 3, x)
        scale = r.scale
        assert r.max_commutator / scale ** 2 < 1e-12
        assert comm / scale ** 2 < 1e-12
        assert r.max_curl == 0.0 and curl / scale < 1e-12
        assert r.max_structural < 1e-12 * scale ** 2


def test_residuals_detect_non_commuting_family():
    B = np.zeros((2, 2, 3))
    B[0, 0] = [1.0, 0.0, -1.0]
    B[1, 1] = [0.5, 2.0, -1.0]
    A = np.zeros((2, 3, 3))
    A[0, 0, 1] = A[0, 1, 0] = 0.3
    A[1, 1, 2] = A[1, 2, 1] = 0.4
    r = he.integrability_residuals(he.HamiltonianFamily(B, A), (0.2, 0.7))
    assert r.max_commutator > 1e-3


def test_from_matrices_requires_diagonal_slopes():
    B = np.zeros((1, 1, 2, 2))
    B[0, 0] = [[1.0, 0.1], [0.1, -1.0]]
    with pytest.raises(ValueError):
        he.from_matrices(B, np.zeros((1, 2, 2)))


def test_restrict_matches_direct_contraction(square_hf):
    path = he.TimePath((0.6, 0.8), (0.1, -0.4))
    H = he.restrict(square_hf, path)
    t = 1.7
    x = path.x(t)
    # v^j H_j(x) is the Hamiltonian along the path
    direct = sum(v * square_hf.H(j, x) for j, v in enumerate(path.v))
    assert np.allclose(H(t), direct)


def test_time_path_validation():
    with pytest.raises(ValueError):
        he.TimePath((0.0, 0.0), (1.0, 1.0))
    with pytest.raises(ValueError):
        he.TimePath((1.0,), (1.0, 2.0))


def test_as_linear_rejects_nonlinear_callable():
    with pytest.raises(ValueError, match="not linear"):
        he.as_linear(lambda t: np.diag([t * t, -t]))
    with pytest.raises(ValueError, match="diagonal"):
        he.as_linear(lambda t: np.array([[0.0, t], [t, 1.0]]))


@pytest.mark.parametrize("build", [
    lambda: fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4),
    lambda: fb.build_cube((0.5, 0.3, 0.4)),
    lambda: fb.build_gamma_magnet(4, [0.5, 1.7, 4.1, 7.1], [0.14, 0.15, 0.17, 0.15]),
])
def test_zero_coupling_count_matches_brute_force(build):
    hf = he.assemble(build())
    assert he.zero_coupling_count(hf) == oracles.count_uncoupled_pairs(hf.A)


def test_scan_two_uncoupled_levels_cross_once():
    H = he.LinearHamiltonian(np.diag([0.5, -0.5]), np.diag([1.0, -1.0]))
    scan = he.scan_spectrum(H)
    assert scan.exact_count == 1
    assert scan.exact[0].t == pytest.approx(-0.5, abs=1e-9)


def test_scan_lz_is_avoided():
    H = he.LinearHamiltonian(np.array([[0.0, 0.2], [0.2, 0.0]]), np.diag([1.0, -1.0]))
    scan = he.scan_spectrum(H)
    assert scan.exact_count == 0
    assert len(scan.avoided) == 1
    assert scan.avoided[0].gap == pytest.approx(0.4, rel=1e-6)


def test_scan_triple_point_counts_three_pairs():
    # three uncoupled lines through the origin
    H = he.LinearHamiltonian(np.zeros((3, 3)), np.diag([1.0, 0.0, -1.0]))
    scan = he.scan_spectrum(H, t_range=(-1.0, 1.0))
    assert scan.exact_count == 3
    assert len(scan.exact) == 1 and scan.exact[0].levels == (0, 1, 2)


def test_generic_path_is_seeded(cube_family):
    hf = he.assemble(cube_family)
    assert he.choose_generic_path(hf, trials=20, seed=3) == he.choose_generic_path(hf, trials=20, seed=3)


def test_scaled_couplings_keeps_diagonal():
    H = he.LinearHamiltonian(np.array([[1.0, 0.2], [0.2, -1.0]]), np.diag([1.0, -1.0]))
    S = H.scaled_couplings(10.0)
    assert np.allclose(np.diag(S.A), [1.0, -1.0])
    assert S.A[0, 1] == pytest.approx(2.0)


def test_spectrum_artifacts(tmp_path):
    H = he.LinearHamiltonian(np.diag([0.5, -0.5, 0.0]), np.diag([1.0, -1.0, 0.2]))
    scan = he.scan_spectrum(H, grid=500)
    he.write_spectrum_csv(scan, tmp_path / "s.csv")
    he.write_spectrum_svg(scan, tmp_path / "s.svg")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "t,lambda_1,lambda_2,lambda_3"
    assert len(rows) == 501
    root = ET.parse(tmp_path / "s.svg").getroot()
    assert root.tag.endswith("svg")
    data = json.loads(scan.crossings_json())
    assert sum(e["pairs"] for e in data["exact"]) == scan.exact_count == 3


def test_hypercube_crossings_annihilate_in_pairs_at_finite_coupling():
    # on this path two exact crossings of adiabatic levels 9 and 10 sit near
    # t = -6.5; growing couplings push them together until they cancel
    tau = {(1, 2): 0.2, (1, 3): 0.1, (1, 4): -0.15, (2, 3): 0.05, (2, 4): 0.1, (3, 4): 0.2}
    hf = he.assemble(fb.build_hypercube4(tau, gammas=(0.1, 0.07, 0.05, 0.08)))
    base = he.restrict(hf, he.choose_generic_path(hf, seed=0))
    assert he.zero_coupling_count(base) == 88

    def near(scan):
        return sorted(e.t for e in scan.exact if e.levels == (9, 10) and -7 < e.t < -6)

    weak, mid, strong = (he.scan_spectrum(base.scaled_couplings(s)) for s in (0.03, 0.07, 0.1))
    assert weak.exact_count == mid.exact_count == 88
    assert strong.exact_count == 86
    (w0, w1), (m0, m1) = near(weak), near(mid)
    assert m1 - m0 < w1 - w0
    assert near(strong) == []
    # another generic path keeps all 88 at the stronger scale
    other = he.restrict(hf, he.choose_generic_path(hf, seed=1))
    assert he.scan_spectrum(other.scaled_couplings(0.1)).exact_count == 88


def test_scan_finds_crossing_hidden_in_neighbouring_gap():
    # (0, 6) crosses 0.014 after (0, 3), inside one coarse step and one gap index over
    A, B = fb.separable_spins([1.4375, 1.46875, 1.5], [0.0] * 3, [0.0, 1.0, 0.0625])
    H = he.LinearHamiltonian(A, B)
    assert he.scan_spectrum(H, grid=3000).exact_count == 28
