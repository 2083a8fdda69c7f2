"""Builders for explicit MTLZ families on the solved graph geometries.

A family is stored through its edge couplings A^{ab} (1-forms), signed LZ
parameters gamma^{ab} = s^{ab} |gamma| and vertex quadratic forms Lambda^a, tied
together by gamma^{ab} (Lambda^a - Lambda^b) = A^{ab} (x) A^{ab}.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import graph_core as gc
from .form_algebra import (SIGMA_X, boost, cs_from_tau, cycle_residual, tensor_square,
                           vertex_residual, wedge)
from .graph_core import ConnectivityGraph, Edge, Orientation, edge_key


class BuildError(ValueError):
    pass


class DomainError(BuildError):
    """A derived rapidity tangent left (-1, 1)."""


class ConstraintError(BuildError):
    pass


class IntegrabilityError(BuildError):
    pass


@dataclass
class MTLZFamily:
    graph: ConnectivityGraph
    orientation: Orientation
    dim: int
    lam: dict[int, np.ndarray]
    coupling: dict[Edge, np.ndarray]
    gamma: dict[Edge, float]
    meta: dict = field(default_factory=dict)

    @property
    def n_states(self) -> int:
        return self.graph.n_vertices

    def gamma_abs(self, e: Edge) -> float:
        return abs(self.gamma[e])

    def signed_gamma(self, a: int, b: int) -> float:
        """gamma^{ab} with the orientation of the ordered pair."""
        g = self.gamma[edge_key(a, b)]
        return g if a < b else -g

    def rescaled(self) -> dict[Edge, np.ndarray]:
        return {e: A / math.sqrt(abs(self.gamma[e])) for e, A in self.coupling.items()}


def _family_from_forms(graph: ConnectivityGraph, orient: Orientation,
                       forms: Mapping[Edge, np.ndarray], gamma_abs: Mapping[Edge, float],
                       seed: np.ndarray | None = None, meta: dict | None = None,
                       check: bool = True) -> MTLZFamily:
    dim = len(next(iter(forms.values())))
    for e, g in gamma_abs.items():
        if not g > 0:
            raise ConstraintError(f"gamma on {e} must be positive, got {g}")
    lam = reconstruct_lambdas(graph, orient, forms, seed=seed, check=check)
    coupling = {e: np.asarray(forms[e], float) * math.sqrt(gamma_abs[e]) for e in graph.edges}
    gamma = {e: orient.sign(*e) * float(gamma_abs[e]) for e in graph.edges}
    return MTLZFamily(graph, orient, dim, lam, coupling, gamma, dict(meta or {}))


def reconstruct_lambdas(graph: ConnectivityGraph, orient: Orientation,
                        forms: Mapping[Edge, np.ndarray], seed: np.ndarray | None = None,
                        check: bool = True, tol: float = 1e-10) -> dict[int, np.ndarray]:
    """Solve Lambda^a - Lambda^b = s^{ab} Abar (x) Abar along a BFS tree from vertex 0."""
    if not graph.is_connected():
        raise gc.GraphError("disconnected graph")
    dim = len(next(iter(forms.values())))
    lam = {0: np.zeros((dim, dim)) if seed is None else np.array(seed, dtype=float)}
    for v, w in gc.bfs_tree(graph, 0):
        lam[w] = lam[v] - orient.sign(v, w) * tensor_square(forms[edge_key(v, w)])
    if check:
        scale = max(float(np.max(np.abs(tensor_square(f)))) for f in forms.values())
        for a, b in graph.edges:
            diff = lam[a] - lam[b] - orient.sign(a, b) * tensor_square(forms[(a, b)])
            if np.max(np.abs(diff)) > tol * max(scale, 1.0):
                raise IntegrabilityError(f"edge {(a, b)} closes the tree inconsistently "
                                         f"(residual {np.max(np.abs(diff)):.3e})")
    return lam


def apply_gauge(family: MTLZFamily, shift) -> MTLZFamily:
    """Add the same symmetric matrix to every Lambda^a: H_j -> H_j + (shift_{jk} x^k) * 1."""
    shift = np.asarray(shift, dtype=float)
    lam = {a: L + shift for a, L in family.lam.items()}
    return MTLZFamily(family.graph, family.orientation, family.dim, lam, dict(family.coupling),
                      dict(family.gamma), dict(family.meta))


def gauge_matrix(dim: int, beta: float = 0.0, e: float = 0.0) -> np.ndarray:
    """Seed for the (beta t + e) shift of H_1 in a two-time (t, eps) family."""
    g = np.zeros((dim, dim))
    g[0, 0] = beta
    if dim > 1:
        g[0, 1] = g[1, 0] = e
    return g


# -------------------------------------------------------------------- square

def build_square(a: Sequence[float], b: Sequence[float], theta: float, p: int = 1,
                 gamma12: float = 1.0, gamma14: float = 1.0,
                 seed: np.ndarray | None = None) -> MTLZFamily:
    """Four-state family on the non-bipartite square (states labelled 1..4 in the usual drawing become 0..3).

    Abar^{12} = a, Abar^{14} = b and (Abar^{34}, Abar^{23}) = p U(theta) (a, b).
    """
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.shape != b.shape or a.ndim != 1:
        raise BuildError("a and b must be 1-forms of equal dimension")
    if np.linalg.matrix_rank(np.vstack([a, b]), tol=1e-12) < 2:
        raise BuildError("base forms a, b are linearly dependent")
    if p not in (1, -1):
        raise BuildError("p must be +-1")
    u = boost(theta, p)
    graph = gc.square()
    orient = gc.square_orientation(graph)
    forms = {
        (0, 1): a,
        (0, 3): b,
        (2, 3): u[0, 0] * a + u[0, 1] * b,
        (1, 2): u[1, 0] * a + u[1, 1] * b,
    }
    gam = {(0, 1): gamma12, (2, 3): gamma12, (0, 3): gamma14, (1, 2): gamma14}
    meta = {"family": "square", "theta": theta, "p": p, "a": a.tolist(), "b": b.tolist(),
            "gamma12": gamma12, "gamma14": gamma14}
    return _family_from_forms(graph, orient, forms, gam, seed=seed, meta=meta)


# ---------------------------------------------------------- hypercube faces

Face = tuple[int, int, int]  # (base vertex, direction i, direction j), i < j, bits i,j unset in base


def far_face_tau(t_ij: float, t_ik: float, t_jk: float, p_ik: int = 1, p_jk: int = 1) -> float:
    """Tangent of the face opposite to (i, j) inside the cube spanned by i, j, k."""
    return p_ik * p_jk * (t_ij + t_ik * t_jk) / math.sqrt((1 - t_ik ** 2) * (1 - t_jk ** 2))


def cube_tangents(t1: float, t2: float, t3: float, p: Sequence[int] = (1, 1, 1)) -> tuple[float, float, float]:
    """Derived (tau4, tau5, tau6) of the cube from (tau1, tau2, tau3)."""
    p1, p2, p3 = p[:3]
    for t in (t1, t2, t3):
        if not -1 < t < 1:
            raise DomainError(f"seed tangent {t} outside (-1, 1)")
    t4 = far_face_tau(t3, t1, t2, p1, p2)
    t5 = far_face_tau(t2, t1, t3, p1, p3)
    t6 = far_face_tau(t1, t2, t3, p2, p3)
    return t4, t5, t6


def propagate_face_forms(dim: int, base_forms: Sequence[np.ndarray],
                         face_cs: Mapping[Face, tuple[float, float]],
                         tol: float = 1e-10) -> dict[Edge, np.ndarray]:
    """Edge forms of the dim-cube from the forms at vertex 0 and one boost per face.

    Face (v; i, j) with (c, s) gives Abar(v+e_j, i) = c Abar(v, i) + s Abar(v, j) and
    Abar(v+e_i, j) = s Abar(v, i) + c Abar(v, j).  Edges reached through several
    faces are checked for agreement.
    """
    edge_form: dict[tuple[int, int], np.ndarray] = {}
    for i in range(dim):
        edge_form[(0, i)] = np.asarray(base_forms[i], float)
    n = 1 << dim
    for v in sorted(range(n), key=lambda x: (bin(x).count("1"), x)):
        for i, j in itertools.combinations(range(dim), 2):
            if v & (1 << i) or v & (1 << j):
                continue
            c, s = face_cs[(v, i, j)]
            X, Y = edge_form[(v, i)], edge_form[(v, j)]
            for key, val in (((v | (1 << j), i), c * X + s * Y), ((v | (1 << i), j), s * X + c * Y)):
                if key in edge_form:
                    err = np.max(np.abs(edge_form[key] - val))
                    if err > tol * max(1.0, float(np.max(np.abs(val)))):
                        raise IntegrabilityError(
                            f"face {(v, i, j)} disagrees on edge {key} by {err:.3e}")
                else:
                    edge_form[key] = val
    forms = {}
    for (v, i), f in edge_form.items():
        forms[edge_key(v, v | (1 << i))] = f
    return forms


# ---------------------------------------------------------------------- cube

CUBE_LOOPS = {
    1: (0, 0, 1),  # 0132
    2: (0, 0, 2),  # 0154
    3: (0, 1, 2),  # 0264
    4: (1, 1, 2),  # 1375
    5: (2, 0, 2),  # 2376
    6: (4, 0, 1),  # 4576
}
CUBE_LOOP_LABELS = {1: "0132", 2: "0154", 3: "0264", 4: "1375", 5: "2376", 6: "4576"}


def cube_sign_factors(p1: int = 1, p2: int = 1, p3: int = 1, p4: int = 1) -> tuple[int, ...]:
    """Complete (p1..p4) with p5, p6 from p2 p4 = p3 p5 and p1 p4 = p3 p6."""
    return (p1, p2, p3, p4, p2 * p3 * p4, p1 * p3 * p4)


def build_cube(tau: Sequence[float], p: Sequence[int] = (1, 1, 1, 1, 1, 1),
               gammas: Sequence[float] = (1.0, 1.0, 1.0),
               base_forms: Sequence[Sequence[float]] | None = None,
               seed: np.ndarray | None = None) -> MTLZFamily:
    """Eight-state, three-time family on the cube with sink 0 and source 7."""
    t1, t2, t3 = (float(x) for x in tau)
    p = tuple(int(x) for x in p)
    if len(p) == 4:
        p = cube_sign_factors(*p)
    if len(p) != 6 or any(x not in (1, -1) for x in p):
        raise BuildError("need six sign factors +-1")
    if p[1] * p[3] != p[2] * p[4] or p[0] * p[3] != p[2] * p[5]:
        raise ConstraintError(f"inconsistent sign factors {p}")
    derived = cube_tangents(t1, t2, t3, p)
    taus = (t1, t2, t3) + derived
    for k, t in enumerate(derived, start=4):
        if not -1 < t < 1:
            raise DomainError(f"loop {CUBE_LOOP_LABELS[k]} (tau{k}) has tangent {t:.6g} outside (-1, 1)")
    if base_forms is None:
        base_forms = np.eye(3)
    base = [np.asarray(f, float) for f in base_forms]
    if np.linalg.matrix_rank(np.vstack(base), tol=1e-12) < 3:
        raise BuildError("base forms Abar^01, Abar^02, Abar^04 must be independent")
    face_cs = {face: cs_from_tau(taus[k - 1], p[k - 1]) for k, face in CUBE_LOOPS.items()}
    forms = propagate_face_forms(3, base, face_cs)
    graph = gc.cube()
    orient = gc.hypercube_orientation(graph)
    g = {1: gammas[0], 2: gammas[1], 4: gammas[2]}
    gam = {(a, b): g[a ^ b] for a, b in graph.edges}
    meta = {"family": "cube", "tau": list(taus), "p": list(p), "gammas": list(gammas)}
    return _family_from_forms(graph, orient, forms, gam, seed=seed, meta=meta)


# ----------------------------------------------------------------- hypercube

def q_factor(t_ij: float, t_ik: float, t_jk: float) -> float:
    val = 1 - t_ij ** 2 - t_ik ** 2 - t_jk ** 2 - 2 * t_ij * t_ik * t_jk
    if val <= 0:
        raise DomainError(f"q factor is not real positive ({val:.3g})")
    return math.sqrt(val)


def opposite_face_tau(tau: Mapping[tuple[int, int], float]) -> float:
    """Closed form for the face spanned by directions 1, 2 at vertex e3 + e4 (1-based)."""
    t = lambda i, j: tau[(i, j)]
    num = (t(1, 2) + t(1, 3) * t(2, 3) + t(1, 4) * t(2, 4)
           + t(3, 4) * (t(1, 4) * t(2, 3) + t(1, 3) * t(2, 4) - t(1, 2) * t(3, 4)))
    return num / (q_factor(t(1, 3), t(1, 4), t(3, 4)) * q_factor(t(2, 3), t(2, 4), t(3, 4)))


def hypercube_face_tangents(dim: int, seed_tau: Mapping[tuple[int, int], float],
                            tol: float = 1e-12) -> dict[Face, float]:
    """All face tangents from those at vertex 0, every face reached by each available cube route.

    seed_tau is keyed by 0-based direction pairs (i, j), i < j.
    """
    faces: dict[Face, float] = {}
    for i, j in itertools.combinations(range(dim), 2):
        t = float(seed_tau[(i, j)])
        if not -1 < t < 1:
            raise DomainError(f"seed tangent tau_{i + 1}{j + 1}={t} outside (-1, 1)")
        faces[(0, i, j)] = t
    n = 1 << dim
    for v in sorted(range(1, n), key=lambda x: (bin(x).count("1"), x)):
        for i, j in itertools.combinations(range(dim), 2):
            if v & (1 << i) or v & (1 << j):
                continue
            values = []
            for k in range(dim):
                if not v & (1 << k):
                    continue
                u = v ^ (1 << k)
                key = lambda a, b: (u, min(a, b), max(a, b))
                values.append(far_face_tau(faces[key(i, j)], faces[key(i, k)], faces[key(j, k)]))
            t = values[0]
            for other in values[1:]:
                if abs(other - t) > tol * max(1.0, abs(t)):
                    raise IntegrabilityError(f"cube routes to face {(v, i, j)} disagree: {values}")
            if not -1 < t < 1:
                raise DomainError(f"face {(v, i, j)} tangent {t:.6g} outside (-1, 1)")
            faces[(v, i, j)] = t
    return faces


def build_hypercube4(tau: Mapping[tuple[int, int], float], gammas: Sequence[float] = (1.0,) * 4,
                     base_forms: Sequence[Sequence[float]] | None = None,
                     seed: np.ndarray | None = None) -> MTLZFamily:
    """Sixteen-state, four-time family; ``tau`` keyed by 1-based pairs (1,2) .. (3,4)."""
    seed_tau = {(i - 1, j - 1): float(v) for (i, j), v in tau.items()}
    for i, j, k in itertools.combinations(range(4), 3):
        q_factor(seed_tau[(i, j)], seed_tau[(i, k)], seed_tau[(j, k)])
    faces = hypercube_face_tangents(4, seed_tau)
    if base_forms is None:
        base_forms = np.eye(4)
    base = [np.asarray(f, float) for f in base_forms]
    if np.linalg.matrix_rank(np.vstack(base), tol=1e-12) < 4:
        raise BuildError("base forms must be independent")
    face_cs = {f: cs_from_tau(t) for f, t in faces.items()}
    forms = propagate_face_forms(4, base, face_cs)
    graph = gc.hypercube4()
    orient = gc.hypercube_orientation(graph)
    gam = {(a, b): float(gammas[(a ^ b).bit_length() - 1]) for a, b in graph.edges}
    meta = {"family": "hypercube4", "tau": {f"{i}{j}": v for (i, j), v in tau.items()},
            "gammas": list(gammas), "faces": {str(k): v for k, v in faces.items()}}
    return _family_from_forms(graph, orient, forms, gam, seed=seed, meta=meta)


# ----------------------------------------------------------------------- fan

def fan_transforms(thetas: Sequence[float], ps: Sequence[int], l: int) -> list[np.ndarray]:
    """M_j with Abar^j = M_j Abar^1 (j = 1..m); sigma_x applied beyond the sink region."""
    m = len(thetas) + 1
    out = [np.eye(2)]
    theta, p = 0.0, 1
    for j in range(2, m + 1):
        theta += thetas[j - 2]
        p *= ps[j - 2]
        u = p * boost(theta)
        out.append(u if j <= l else SIGMA_X @ u)
    return out


def build_fan(m: int, l: int, A1: Sequence[Sequence[float]], thetas: Sequence[float],
              gammas: Sequence[float], ps: Sequence[int] | None = None,
              orientation_type: str = "II", seed: np.ndarray | None = None,
              tol: float = 1e-12) -> MTLZFamily:
    """(m+2)-state, two-time family on the fan; b-vertices 0, 1 and a_j = j + 1."""
    if orientation_type.upper() == "I":
        if m >= 3:
            raise ConstraintError("type-I fan with m >= 3: wedge relations force "
                                  "Abar^{a1}^Abar^{b1} = -Abar^{a2}^Abar^{b2} = -Abar^{a3}^Abar^{b3} "
                                  "and Abar^{a2}^Abar^{b2} = -Abar^{a3}^Abar^{b3}; no solution")
        raise ConstraintError("type-I fan is only the square; use build_square")
    if m < 2:
        raise ConstraintError("fan needs m >= 2")
    if not (1 < l < m or (m == 2 and l == 1)):
        raise ConstraintError(f"type-II fan needs 1 < l < m (got l={l}, m={m})")
    if len(thetas) != m - 1 or len(gammas) != m:
        raise BuildError("need m-1 rapidities and m LZ parameters")
    ps = list(ps) if ps is not None else [1] * (m - 1)
    if any(x not in (1, -1) for x in ps) or len(ps) != m - 1:
        raise BuildError("need m-1 sign factors +-1")
    gammas = [float(g) for g in gammas]
    if any(g <= 0 for g in gammas):
        raise ConstraintError("fan LZ parameters must be positive")
    balance = sum(gammas[:l]) - sum(gammas[l:])
    if abs(balance) > tol * max(1.0, sum(gammas)):
        raise ConstraintError(f"sum of sink-side gammas != sum of source-side gammas "
                              f"(difference {balance:.3g})")
    A1 = np.asarray(A1, float)
    if A1.shape[0] != 2 or np.linalg.matrix_rank(A1, tol=1e-12) < 2:
        raise BuildError("Abar^1 must be a pair of independent 2-forms")
    graph = gc.fan(m)
    orient = gc.fan_orientation(graph, m, l)
    forms, gam = {}, {}
    for j, M in enumerate(fan_transforms(thetas, ps, l), start=1):
        pair = M @ A1
        a = 1 + j
        forms[(0, a)], forms[(1, a)] = pair[0], pair[1]
        gam[(0, a)] = gam[(1, a)] = gammas[j - 1]
    meta = {"family": "fan", "m": m, "l": l, "thetas": list(thetas), "ps": ps, "gammas": gammas}
    return _family_from_forms(graph, orient, forms, gam, seed=seed, meta=meta)


# ------------------------------------------------------------------- gamma magnet

def pauli_z_signs(n_spins: int) -> np.ndarray:
    """z[a, j] = +-1 eigenvalue of sigma^z_j on basis state a (spin 1 is the leading bit)."""
    n = 1 << n_spins
    z = np.empty((n, n_spins))
    for a in range(n):
        for j in range(n_spins):
            bit = (a >> (n_spins - 1 - j)) & 1
            z[a, j] = 1 - 2 * bit
    return z


def flip(a: int, j: int, n_spins: int) -> int:
    return a ^ (1 << (n_spins - 1 - j))


def build_gamma_magnet(n_spins: int, betas: Sequence[float], gs: Sequence[float],
                       eps: float = 1.0, seed: np.ndarray | None = None) -> MTLZFamily:
    """Two-time family x = (t, eps) of the gamma-magnet.

    H1 = eps prod(sz) + sum_j (beta_j t sz_j + g_j gamma_j)
    H2 = t prod(sz) + sum_j (eps/beta_j sz_j + g_j/beta_j gamma~_j)
    gamma_j = sx_j prod_{k<j} sz_k, gamma~_j = sx_j prod_{k>j} sz_k.
    ``eps`` only records the point used by callers; the family itself is eps-independent.
    """
    if n_spins < 1:
        raise BuildError("need at least one spin")
    betas = np.asarray(betas, float)
    gs = np.asarray(gs, float)
    if len(betas) != n_spins or len(gs) != n_spins:
        raise BuildError("need one beta and one g per spin")
    if np.any(betas == 0):
        raise BuildError("beta_j must be nonzero")
    z = pauli_z_signs(n_spins)
    n = 1 << n_spins
    lam = {}
    for a in range(n):
        prod = float(np.prod(z[a]))
        lam[a] = np.array([[float(z[a] @ betas), prod], [prod, float(z[a] @ (1 / betas))]])
    if seed is not None:
        lam = {a: L + np.asarray(seed, float) for a, L in lam.items()}
    edges, coupling, gamma = [], {}, {}
    for a in range(n):
        for j in range(n_spins):
            b = flip(a, j, n_spins)
            if b < a:
                continue
            # string signs evaluated on the unflipped spins (same on a and b)
            left = float(np.prod(z[a, :j]))
            right = float(np.prod(z[a, j + 1:]))
            A = np.array([gs[j] * left, gs[j] / betas[j] * right])
            dlam = lam[a] - lam[b]
            slope = dlam[0, 0]
            g = A[0] ** 2 / slope if A[0] != 0 else A[1] ** 2 / dlam[1, 1]
            edges.append((a, b))
            coupling[(a, b)] = A
            gamma[(a, b)] = g
    graph = gc.ConnectivityGraph.from_edges(edges, n, f"gamma_magnet({n_spins})")
    orient = Orientation(graph, {e: (1 if gamma[e] > 0 else -1) for e in graph.edges})
    meta = {"family": "gamma_magnet", "n_spins": n_spins, "betas": betas.tolist(),
            "gs": gs.tolist(), "eps": eps}
    return MTLZFamily(graph, orient, 2, lam, coupling, gamma, meta)


# square vertex k corresponds to magnet state GAMMA2_SQUARE_MAP[k]
GAMMA2_SQUARE_MAP = (0, 2, 3, 1)


def gamma_magnet2_as_square(betas: Sequence[float], gs: Sequence[float]) -> tuple[MTLZFamily, tuple]:
    """Square family equal to the two-spin gamma-magnet after relabeling.

    For positive, distinct betas the magnet is the square instance with
    a = sgn(g1) sqrt(2 b1) (1, 1/b1), b = sgn(g2) sqrt(2 b2) (1, 1/b2),
    p = sgn(b1 - b2), sinh(theta) = -sgn(g1 g2) 2 sqrt(b1 b2)/|b1 - b2|,
    gamma12 = g1^2/(2 b1) and gamma14 = g2^2/(2 b2).  Returns the square and the
    vertex map; H_square[k, l] = H_magnet[map[k], map[l]].
    """
    b1, b2 = (float(x) for x in betas)
    g1, g2 = (float(x) for x in gs)
    if not (b1 > 0 and b2 > 0) or b1 == b2:
        raise DomainError("identification needs distinct positive betas")
    if g1 == 0 or g2 == 0:
        raise DomainError("identification needs nonzero couplings")
    s1, s2 = math.copysign(1.0, g1), math.copysign(1.0, g2)
    a = s1 * math.sqrt(2 * b1) * np.array([1.0, 1.0 / b1])
    b = s2 * math.sqrt(2 * b2) * np.array([1.0, 1.0 / b2])
    theta = -s1 * s2 * math.asinh(2 * math.sqrt(b1 * b2) / abs(b1 - b2))
    p = 1 if b1 > b2 else -1
    seed = build_gamma_magnet(2, [b1, b2], [g1, g2]).lam[GAMMA2_SQUARE_MAP[0]]
    sq = build_square(a, b, theta, p=p, gamma12=g1 * g1 / (2 * b1), gamma14=g2 * g2 / (2 * b2),
                      seed=seed)
    sq.meta["identified_with"] = {"gamma_magnet": 2, "betas": [b1, b2], "gs": [g1, g2],
                                  "vertex_map": list(GAMMA2_SQUARE_MAP)}
    return sq, GAMMA2_SQUARE_MAP


def separable_spins(betas: Sequence[float], gs: Sequence[float], eps: Sequence[float]):
    """(A, B) of H(t) = sum_i [(beta_i t + eps_i) sz_i + g_i sx_i]; spin 1 is the leading bit."""
    n_spins = len(betas)
    z = pauli_z_signs(n_spins)
    n = 1 << n_spins
    B = np.diag(z @ np.asarray(betas, float))
    A = np.diag(z @ np.asarray(eps, float))
    for a in range(n):
        for j in range(n_spins):
            b = flip(a, j, n_spins)
            A[a, b] = gs[j]
    return A, B


# ------------------------------------------------------------------ validation

@dataclass
class ValidationReport:
    passed: bool
    cycle_residual: float
    vertex_residual: float
    edge_residual: float
    good_family: bool
    min_adjacent_sine: float
    scale: float
    failures: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "cycle_residual": self.cycle_residual,
            "vertex_residual": self.vertex_residual,
            "edge_residual": self.edge_residual,
            "good_family": self.good_family,
            "min_adjacent_sine": self.min_adjacent_sine,
            "scale": self.scale,
            "failures": list(self.failures),
        }


def _sine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    w = wedge(u, v)
    return float(np.linalg.norm(w) / math.sqrt(2) / (nu * nv))


def validate_family(f: MTLZFamily, tol: float = 1e-12) -> ValidationReport:
    graph, orient = f.graph, f.orientation
    forms = f.rescaled()
    gabs = {e: abs(g) for e, g in f.gamma.items()}
    failures = []
    if not forms:
        return ValidationReport(True, 0.0, 0.0, 0.0, True, 1.0, 1.0, [])
    form_scale = max(float(np.max(np.abs(tensor_square(x)))) for x in forms.values())
    g_scale = max(gabs.values())
    scale = max(form_scale, 1e-300)
    cyc = 0.0
    if graph.is_connected():
        for cycle in gc.cycle_basis(graph, orient):
            cyc = max(cyc, float(np.max(np.abs(cycle_residual(cycle, forms)))))
    vert = 0.0
    for a, b in itertools.combinations(range(graph.n_vertices), 2):
        if graph.common_neighbors(a, b):
            r = vertex_residual(graph, a, b, forms, gabs)
            vert = max(vert, float(np.max(np.abs(r))))
    edge = 0.0
    for (a, b), A in f.coupling.items():
        lhs = f.gamma[(a, b)] * (f.lam[a] - f.lam[b])
        edge = max(edge, float(np.max(np.abs(lhs - np.outer(A, A)))))
    min_sine = 1.0
    for v in range(graph.n_vertices):
        for x, y in itertools.combinations(graph.neighbors(v), 2):
            s = _sine(forms[edge_key(v, x)], forms[edge_key(v, y)])
            min_sine = min(min_sine, s)
            if s < 1e-9:
                failures.append(f"forms on {edge_key(v, x)} and {edge_key(v, y)} are parallel")
    for e, A in f.coupling.items():
        if not np.any(A):
            failures.append(f"zero coupling form on {e}")
    good = not failures
    rel_c = cyc / scale
    rel_v = vert / (scale * g_scale)
    rel_e = edge / (scale * g_scale)
    if rel_c > tol:
        failures.append(f"cycle residual {rel_c:.3e}")
    if rel_v > tol:
        failures.append(f"vertex-pair residual {rel_v:.3e}")
    if rel_e > tol:
        failures.append(f"edge relation residual {rel_e:.3e}")
    return ValidationReport(not failures, rel_c, rel_v, rel_e, good, min_sine, scale, failures)
