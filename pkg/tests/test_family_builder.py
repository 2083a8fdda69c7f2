import math

import numpy as np
import pytest

import oracles
from mtlz import family_builder as fb
from mtlz import hamiltonian_engine as he

# face (base vertex, bit i, bit j) for the six cube loops in tangent order
CUBE_FACES = [(0, 0, 1), (0, 0, 2), (0, 1, 2), (1, 1, 2), (2, 0, 2), (4, 0, 1)]


def test_square_validates_and_respects_gamma_pairs():
    fam = fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4, gamma12=0.3, gamma14=0.8)
    assert fb.validate_family(fam).passed
    assert fam.gamma[(0, 1)] == fam.gamma[(2, 3)] * fam.orientation.sign(0, 1) * fam.orientation.sign(2, 3)
    assert abs(fam.gamma[(0, 3)]) == abs(fam.gamma[(1, 2)]) == 0.8


def test_square_rejects_dependent_base_forms():
    with pytest.raises(fb.BuildError):
        fb.build_square((1.0, 2.0), (2.0, 4.0), theta=0.1)
    with pytest.raises(fb.BuildError):
        fb.build_square((1.0, 0.0), (0.0, 1.0), theta=0.1, p=2)


def test_cube_tangents_match_face_oracle():
    fam = fb.build_cube((0.5, 0.3, 0.4))
    forms = fam.rescaled()
    got = [oracles.face_tangent(forms, *f) for f in CUBE_FACES]
    assert np.allclose(got, fam.meta["tau"], atol=1e-12)


def test_cube_far_face_tangent_frozen():
    # value frozen from the least-squares face oracle
    t4, t5, t6 = fb.cube_tangents(0.5, 0.3, 0.4)
    assert t4 == pytest.approx(0.66575, abs=5e-6)
    assert t5 == pytest.approx(0.629941, abs=5e-6)
    assert t6 == pytest.approx(0.709139, abs=5e-6)


def test_cube_out_of_range_tangent():
    with pytest.raises(fb.DomainError, match="tau4"):
        fb.build_cube((0.8, 0.7, 0.6))


def test_cube_sign_factor_consistency():
    assert fb.cube_sign_factors(1, -1, 1, -1) == (1, -1, 1, -1, 1, -1)
    with pytest.raises(fb.ConstraintError):
        fb.build_cube((0.2, 0.3, 0.4), p=(1, 1, 1, 1, -1, 1))


@pytest.mark.parametrize("p", [(1, 1, 1, 1), (-1, 1, 1, 1), (1, 1, -1, -1)])
def test_cube_with_sign_factors_validates(p):
    fam = fb.build_cube((0.2, 0.3, 0.4), p=p)
    assert fb.validate_family(fam).passed


def test_cube_gamma_classes():
    fam = fb.build_cube((0.2, 0.3, 0.4), gammas=(0.1, 0.2, 0.3))
    for (a, b), g in fam.gamma.items():
        assert g == pytest.approx({1: 0.1, 2: 0.2, 4: 0.3}[a ^ b])


def test_hypercube4_validates():
    tau = {(1, 2): 0.2, (1, 3): 0.1, (1, 4): -0.15, (2, 3): 0.05, (2, 4): 0.1, (3, 4): 0.2}
    fam = fb.build_hypercube4(tau, gammas=(0.1, 0.2, 0.15, 0.05))
    rep = fb.validate_family(fam)
    assert rep.passed and rep.good_family
    assert fam.n_states == 16 and fam.dim == 4


def test_hypercube4_rejects_bad_q_factor():
    tau = {(1, 2): 0.7, (1, 3): 0.7, (1, 4): 0.0, (2, 3): 0.7, (2, 4): 0.0, (3, 4): 0.0}
    with pytest.raises(fb.DomainError):
        fb.build_hypercube4(tau)


@pytest.mark.parametrize("m, l, gammas", [
    (4, 2, [0.2, 0.1, 0.15, 0.15]),
    (3, 2, [0.1, 0.2, 0.3]),
    (5, 3, [0.1, 0.1, 0.2, 0.2, 0.2]),
    (2, 1, [0.3, 0.3]),
])
def test_fan_type_two_validates(m, l, gammas):
    fam = fb.build_fan(m, l, [[1.0, 0.2], [0.3, 1.0]], [0.3] * (m - 1), gammas)
    assert fb.validate_family(fam).passed


def test_fan_requires_balanced_gammas():
    with pytest.raises(fb.ConstraintError, match="sum"):
        fb.build_fan(4, 2, [[1.0, 0.2], [0.3, 1.0]], [0.3] * 3, [0.2, 0.1, 0.1, 0.1])


@pytest.mark.parametrize("m", [3, 4])
def test_fan_type_one_has_no_solution(m):
    with pytest.raises(fb.ConstraintError):
        fb.build_fan(m, 0, [[1.0, 0.0], [0.0, 1.0]], [0.1] * (m - 1), [1.0] * m,
                     orientation_type="I")


def test_fan_l_range():
    with pytest.raises(fb.ConstraintError):
        fb.build_fan(4, 4, [[1.0, 0.0], [0.0, 1.0]], [0.1] * 3, [1.0] * 4)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_gamma_magnet_validates(n):
    betas = [0.5, 1.7, 4.1, 7.1][:n]
    gs = [0.14, 0.15, 0.17, 0.15][:n]
    fam = fb.build_gamma_magnet(n, betas, gs)
    assert fam.n_states == 2 ** n
    assert fam.graph.n_edges == n * 2 ** (n - 1)
    assert fb.validate_family(fam).passed


def test_gamma_magnet_h1_matches_pauli_construction():
    # H1 = eps prod(sz) + sum_j (beta_j t sz_j + g_j sx_j prod_{k<j} sz_k), built from 2x2 matrices
    betas, gs = [0.5, 1.7, 4.1], [0.14, 0.15, 0.17]
    sx = np.array([[0.0, 1.0], [1.0, 0.0]])
    sz = np.diag([1.0, -1.0])
    one = np.eye(2)

    def op(mats):
        out = np.ones((1, 1))
        for m in mats:
            out = np.kron(out, m)
        return out

    t, eps = 0.37, -1.3
    H1 = eps * op([sz, sz, sz])
    for j in range(3):
        H1 += betas[j] * t * op([sz if k == j else one for k in range(3)])
        H1 += gs[j] * op([sz if k < j else sx if k == j else one for k in range(3)])
    hf = he.assemble(fb.build_gamma_magnet(3, betas, gs))
    assert np.allclose(hf.H(0, (t, eps)), H1, atol=1e-14)


def test_separable_spins_is_kronecker_sum():
    betas, gs, eps = [0.5, 1.7], [0.14, 0.15], [-1.0, 1.0]
    A, B = fb.separable_spins(betas, gs, eps)
    t = 0.8
    h = [np.array([[b * t + e, g], [g, -(b * t + e)]]) for b, g, e in zip(betas, gs, eps)]
    expected = np.kron(h[0], np.eye(2)) + np.kron(np.eye(2), h[1])
    assert np.allclose(A + B * t, expected)


def test_gauge_shift_keeps_validity_and_couplings():
    fam = fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4)
    shifted = fb.apply_gauge(fam, fb.gauge_matrix(2, beta=0.7, e=-0.2))
    assert fb.validate_family(shifted).passed
    h0, h1 = he.assemble(fam), he.assemble(shifted)
    x = np.array([0.3, -1.1])
    d = h1.H(0, x) - h0.H(0, x)
    assert np.allclose(d, (0.7 * x[0] - 0.2 * x[1]) * np.eye(4))


def test_validate_family_flags_parallel_forms():
    fam = fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4)
    fam.coupling[(0, 3)] = fam.coupling[(0, 1)].copy()
    rep = fb.validate_family(fam)
    assert not rep.passed
    assert not rep.good_family
    assert any("parallel" in f for f in rep.failures)


def test_reconstruct_lambdas_detects_inconsistent_cycle():
    fam = fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4)
    forms = dict(fam.rescaled())
    forms[(1, 2)] = forms[(1, 2)] * 1.1
    with pytest.raises(fb.IntegrabilityError):
        fb.reconstruct_lambdas(fam.graph, fam.orientation, forms)


def test_gamma_magnet2_identification_rejects_degenerate_betas():
    with pytest.raises(fb.DomainError):
        fb.gamma_magnet2_as_square([1.0, 1.0], [0.2, 0.3])
    with pytest.raises(fb.DomainError):
        fb.gamma_magnet2_as_square([-1.0, 2.0], [0.2, 0.3])


def test_lz_parameter_matches_slope_difference():
    # gamma = g^2 / |slope difference| for each magnet edge
    betas, gs = [0.5, 1.7], [0.14, 0.15]
    fam = fb.build_gamma_magnet(2, betas, gs)
    for (a, b), g in fam.gamma.items():
        j = 0 if a ^ b == 2 else 1
        assert abs(g) == pytest.approx(gs[j] ** 2 / (2 * betas[j]))
    assert math.isclose(sum(abs(g) for g in fam.gamma.values()),
                        2 * sum(x * x / (2 * b) for x, b in zip(gs, betas)))
