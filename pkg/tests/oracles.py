"""Independent reference computations used to freeze expected values.

Nothing here calls into the routines it checks: each oracle works from raw
matrices or forms with plain numpy.
"""
from __future__ import annotations

import itertools
import math

import numpy as np


def count_uncoupled_pairs(A_stack) -> int:
    """Pairs (a, b), a < b, whose coupling vanishes in every direction."""
    A = np.asarray(A_stack)
    if A.ndim == 2:
        A = A[None]
    n = A.shape[1]
    return sum(1 for a, b in itertools.combinations(range(n), 2) if np.all(A[:, a, b] == 0))


def commutator_and_curl(H, dim: int, x, h: float = 1.0) -> tuple[float, float]:
    """max |[H_i, H_j]| and max |d_i H_j - d_j H_i| via central differences.

    ``H(j, x)`` is the j-th Hamiltonian; being linear in x, the difference
    quotient is exact up to rounding for any step.
    """
    x = np.asarray(x, float)
    comm = curl = 0.0
    for i, j in itertools.combinations(range(dim), 2):
        Hi, Hj = H(i, x), H(j, x)
        comm = max(comm, float(np.max(np.abs(Hi @ Hj - Hj @ Hi))))
        ei, ej = np.eye(dim)[i] * h, np.eye(dim)[j] * h
        dHj = (H(j, x + ei) - H(j, x - ei)) / (2 * h)
        dHi = (H(i, x + ej) - H(i, x - ej)) / (2 * h)
        curl = max(curl, float(np.max(np.abs(dHj - dHi))))
    return comm, curl


def distinct_great_circles(forms, tol: float = 1e-9) -> np.ndarray:
    """Unit normals of the planes {form . x = 0}, one per direction up to sign."""
    out: list[np.ndarray] = []
    for f in forms:
        u = np.asarray(f, float)
        u = u / np.linalg.norm(u)
        if not any(np.linalg.norm(np.cross(u, w)) < tol for w in out):
            out.append(u)
    return np.array(out)


def sphere_arrangement_counts(normals, tol: float = 1e-9) -> tuple[int, int, int]:
    """(V, E, F) of a great-circle arrangement on S^2 from its crossing points.

    Every vertex lying on m circles contributes m to the edge count, and the
    face count follows from F = 2 + sum_v (m_v - 1).
    """
    normals = np.asarray(normals, float)
    pts: list[np.ndarray] = []
    for i, j in itertools.combinations(range(len(normals)), 2):
        d = np.cross(normals[i], normals[j])
        d /= np.linalg.norm(d)
        for q in (d, -d):
            if not any(np.linalg.norm(q - w) < 1e-7 for w in pts):
                pts.append(q)
    mult = [int(np.sum(np.abs(normals @ q) < tol)) for q in pts]
    V = len(pts)
    E = sum(mult)
    F = 2 + sum(m - 1 for m in mult)
    return V, E, F


def separable_crossings(betas, gs, eps, window=(-60.0, 60.0), grid=400_001) -> int:
    """Exact pairwise crossings of sum_i [(beta_i t + eps_i) sz_i + g_i sx_i].

    The levels are sum_i s_i r_i(t), r_i = sqrt((beta_i t + eps_i)^2 + g_i^2),
    so two branches cross where their difference changes sign.
    """
    t = np.linspace(*window, grid)
    r = np.sqrt((np.outer(t, betas) + eps) ** 2 + np.asarray(gs) ** 2)
    signs = list(itertools.product((1, -1), repeat=len(betas)))
    total = 0
    for s1, s2 in itertools.combinations(signs, 2):
        diff = r @ (np.array(s1) - np.array(s2))
        total += int(np.sum(np.signbit(diff[1:]) != np.signbit(diff[:-1])))
    return total


def face_tangent(forms: dict, base: int, i: int, j: int) -> float:
    """tanh of the rapidity on the cube face spanned by bits i, j above ``base``.

    Solves Abar(base+e_j, +e_i) = c X + s Y by least squares, with
    X = Abar(base, +e_i) and Y = Abar(base, +e_j); the ratio s/c is the tangent.
    """
    def form(v, bit):
        w = v | (1 << bit)
        return np.asarray(forms[(min(v, w), max(v, w))], float)

    X, Y = form(base, i), form(base, j)
    Z = form(base | (1 << j), i)
    (c, s), *_ = np.linalg.lstsq(np.column_stack([X, Y]), Z, rcond=None)
    return float(s / c)


def lz_probability(gamma: float) -> float:
    return math.exp(-2 * math.pi * gamma)


def kron_lz(ps) -> np.ndarray:
    """P_1 (x) P_2 (x) ... with P_i = [[p, 1-p], [1-p, p]], spin 1 the leading factor."""
    out = np.ones((1, 1))
    for p in ps:
        out = np.kron(out, np.array([[p, 1 - p], [1 - p, p]]))
    return out


def is_kronecker_sum(M, tol: float = 1e-12) -> bool:
    """True when the 4x4 matrix M equals X (x) 1 + 1 (x) Y for some 2x2 X, Y."""
    M = np.asarray(M, float)
    blocks = [[M[2 * i:2 * i + 2, 2 * j:2 * j + 2] for j in range(2)] for i in range(2)]
    # off-diagonal blocks must be multiples of the identity
    for i, j in ((0, 1), (1, 0)):
        b = blocks[i][j]
        if abs(b[0, 1]) > tol or abs(b[1, 0]) > tol or abs(b[0, 0] - b[1, 1]) > tol:
            return False
    # diagonal blocks must differ by a multiple of the identity
    d = blocks[0][0] - blocks[1][1]
    return abs(d[0, 1]) <= tol and abs(d[1, 0]) <= tol and abs(d[0, 0] - d[1, 1]) <= tol
