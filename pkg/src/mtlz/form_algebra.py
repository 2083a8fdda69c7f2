"""Algebra of edge 1-forms, vertex quadratic forms and their wedge products.

Forms are plain numpy arrays: a 1-form is a length-M vector of coefficients of
dx^j, a quadratic form an M x M symmetric matrix, a bivector an M x M
antisymmetric matrix.  Rescaled forms carry a bar in the docs: Abar = A/sqrt(gamma).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .graph_core import (ConnectivityGraph, Cycle, Edge, FourLoop, LoopClass, Orientation,
                         edge_key)

DEFAULT_TOL = 1e-12


class FormError(ValueError):
    pass


def as_form(u) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if arr.ndim != 1:
        raise FormError("a 1-form is a 1-d coefficient vector")
    if not np.all(np.isfinite(arr)):
        raise FormError("non-finite form coefficients")
    return arr


def wedge(u, v) -> np.ndarray:
    """Bivector u^v with entries u_i v_j - u_j v_i."""
    u, v = as_form(u), as_form(v)
    if u.shape != v.shape:
        raise FormError(f"dimension mismatch {u.shape} vs {v.shape}")
    return np.outer(u, v) - np.outer(v, u)


def tensor_square(u) -> np.ndarray:
    u = as_form(u)
    return np.outer(u, u)


def rescale(A, gamma: float) -> np.ndarray:
    if not gamma > 0:
        raise FormError(f"gamma must be positive, got {gamma}")
    return as_form(A) / math.sqrt(gamma)


def unrescale(Abar, gamma: float) -> np.ndarray:
    if not gamma > 0:
        raise FormError(f"gamma must be positive, got {gamma}")
    return as_form(Abar) * math.sqrt(gamma)


def cycle_residual(cycle: Cycle, forms: Mapping[Edge, np.ndarray]) -> np.ndarray:
    """Sum of n_alpha Abar^alpha (x) Abar^alpha over the cycle (zero when the cycle condition holds)."""
    out = None
    for edge, n in cycle.chain:
        if edge not in forms:
            raise FormError(f"no form on edge {edge}")
        term = n * tensor_square(forms[edge])
        out = term if out is None else out + term
    if out is None:
        raise FormError("empty cycle")
    return out


def vertex_residual(graph: ConnectivityGraph, a: int, b: int, forms: Mapping[Edge, np.ndarray],
                    gammas: Mapping[Edge, float]) -> np.ndarray:
    """Sum over common neighbours c of sqrt(g^{ac} g^{bc}) Abar^{ac} ^ Abar^{bc}."""
    if a == b:
        raise FormError("vertex pair must be distinct")
    dim = len(next(iter(forms.values())))
    out = np.zeros((dim, dim))
    for c in graph.common_neighbors(a, b):
        ea, eb = edge_key(a, c), edge_key(b, c)
        for e in (ea, eb):
            if e not in forms or e not in gammas:
                raise FormError(f"missing data on edge {e}")
        weight = math.sqrt(abs(gammas[ea]) * abs(gammas[eb]))
        out += weight * wedge(forms[ea], forms[eb])
    return out


def is_zero(x: np.ndarray, scale: float = 1.0, tol: float = DEFAULT_TOL) -> bool:
    return float(np.max(np.abs(x), initial=0.0)) <= tol * max(scale, 1.0)


# ------------------------------------------------------------ loop transforms

class TransformKind(enum.Enum):
    ORTHOGONAL = "orthogonal"
    PSEUDO_ORTHOGONAL = "pseudo-orthogonal"


def cs_from_tau(tau: float, p: int = 1) -> tuple[float, float]:
    """(c, s) = (p cosh, p sinh) of the rapidity with tanh = tau."""
    if not -1.0 < tau < 1.0:
        raise FormError(f"rapidity tangent {tau} outside (-1, 1)")
    c = 1.0 / math.sqrt(1.0 - tau * tau)
    return p * c, p * tau * c


def boost(theta: float, p: int = 1) -> np.ndarray:
    """p * [[cosh, sinh], [sinh, cosh]]."""
    c, s = math.cosh(theta), math.sinh(theta)
    return p * np.array([[c, s], [s, c]])


SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class LoopTransform:
    """Relation between the two forms at a reference vertex and the opposite pair.

    For a loop (v0, v1, v2, v3) with reference vertex v0, let X = Abar^{v0 v1}
    and Y = Abar^{v0 v3}.  The opposite edges are {v2, v3} (opposite X) and
    {v1, v2} (opposite Y).  The transform states

        (Abar^{v2 v3}, Abar^{v1 v2}) = matrix @ (X, Y).

    PSEUDO_ORTHOGONAL: matrix = p * diag(1, r) @ boost(theta), times sigma_x on the
    left when ``swapped`` (bipartite loops).  ORTHOGONAL stores the angle phi of
    the equivalent O(2) form for the pair at the intermediate vertices.
    """
    kind: TransformKind
    value: float
    r_sign: int = 1
    p_sign: int = 1
    swapped: bool = False
    loop: tuple[int, int, int, int] | None = None

    @property
    def tau(self) -> float:
        return math.tanh(self.value)

    @property
    def c(self) -> float:
        return self.p_sign * math.cosh(self.value)

    @property
    def s(self) -> float:
        return self.p_sign * math.sinh(self.value)

    @property
    def matrix(self) -> np.ndarray:
        if self.kind is TransformKind.ORTHOGONAL:
            c, s, r = math.cos(self.value), math.sin(self.value), self.r_sign
            return np.array([[c, r * s], [-s, r * c]])
        m = np.diag([1.0, float(self.r_sign)]) @ boost(self.value, self.p_sign)
        return SIGMA_X @ m if self.swapped else m

    def apply(self, X, Y) -> tuple[np.ndarray, np.ndarray]:
        m = self.matrix
        X, Y = as_form(X), as_form(Y)
        return m[0, 0] * X + m[0, 1] * Y, m[1, 0] * X + m[1, 1] * Y

    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))


@dataclass(frozen=True)
class NoSolution:
    reason: str

    def __bool__(self):
        return False


def reference_vertex_order(loop: FourLoop, orient: Orientation) -> tuple[int, int, int, int]:
    """Rotate the loop so it starts at a sink of the loop (a vertex with both loop edges incoming)."""
    q = list(loop.vertices)
    for k in range(4):
        v0, v1, v3 = q[k], q[(k + 1) % 4], q[(k + 3) % 4]
        if orient.sign(v0, v1) == 1 and orient.sign(v0, v3) == 1:
            return tuple(q[k:] + q[:k])
    raise FormError(f"loop {loop.vertices} has no sink under this orientation")


def solve_square_transform(loop: FourLoop, orient: Orientation, theta: float = 0.0, p: int = 1,
                           entire_graph: bool = True) -> LoopTransform | NoSolution:
    """Solution template of the cycle condition on a 4-loop.

    Non-bipartite loops give a boost with r = 1 (the sign fixed by the
    vertex-pair conditions of a stand-alone square).  Bipartite loops are
    consistent only inside a larger graph, where they give a swapped boost.
    """
    if p not in (1, -1):
        raise FormError("p must be +-1")
    cls = loop.classify(orient)
    if cls is LoopClass.INVALID:
        raise FormError(f"loop {loop.vertices}: orientation admits no nonzero forms")
    if cls is LoopClass.BIPARTITE and entire_graph:
        return NoSolution("bipartite square as entire graph: loop relations contradict "
                          "the vertex-pair conditions")
    order = reference_vertex_order(loop, orient)
    return LoopTransform(TransformKind.PSEUDO_ORTHOGONAL, float(theta), 1, p,
                         swapped=cls is LoopClass.BIPARTITE, loop=order)


def orthogonal_equivalent(t: LoopTransform) -> LoopTransform:
    """O(2) form between the edge pairs at the two intermediate vertices of a non-bipartite loop.

    With the loop written (a, b, c, d) from its sink a, the pair (Abar^{ab}, Abar^{bc})
    at b maps to (Abar^{ad}, Abar^{dc}) at d by a rotation-reflection.
    """
    if t.kind is not TransformKind.PSEUDO_ORTHOGONAL or t.swapped:
        raise FormError("only non-bipartite pseudo-orthogonal transforms have an O(2) form")
    # X=ab, Y=ad, cd = c X + s Y, bc = s X + c Y  (c,s include p)
    # solve ad, dc in terms of ab, bc: Y = (bc - s X)/c ; dc = c X + s Y
    c, s = t.c, t.s
    # ad = -(s/c) ab + (1/c) bc ; dc = (1/c) ab + (s/c) bc
    m = np.array([[-s / c, 1.0 / c], [1.0 / c, s / c]])
    phi = math.atan2(m[1, 0] * -1.0, m[0, 0])
    r = int(round(np.linalg.det(m)))
    return LoopTransform(TransformKind.ORTHOGONAL, phi, r, 1, loop=t.loop)

