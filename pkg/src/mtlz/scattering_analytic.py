"""Analytic scattering on three-dimensional families through the great-circle cell decomposition.

Every edge form Abar^{ab} defines a plane Abar^{ab}_j x^j = 0 and hence a great circle
on S^2.  The circles cut S^2 into cells (adiabatic regions).  Evolution from a cell to
its antipode is the ordered product of 2x2 connecting blocks along any dual-graph path.
Transition probabilities are then matched to monomials in p_i = exp(-2 pi gamma_i) and
q_i = 1 - p_i.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.special import loggamma

from .family_builder import MTLZFamily
from .graph_core import Edge


class AnalyticError(ValueError):
    pass


class UnsupportedDimension(AnalyticError):
    pass


class DegenerateArrangementError(AnalyticError):
    def __init__(self, message, groups=()):
        super().__init__(message)
        self.groups = list(groups)


class PathDependenceError(AnalyticError):
    pass


# ----------------------------------------------------------------- arrangement

@dataclass
class GreatCircleArrangement:
    labels: list                # edge (a, b) per circle
    normals: np.ndarray         # (K, 3) unit normals used for the geometry
    forms: np.ndarray           # (K, 3) unperturbed rescaled forms
    jitter: float = 0.0
    members: list | None = None  # per circle [(edge, +-1)] when coincident circles are merged

    @property
    def n_circles(self) -> int:
        return len(self.labels)

    def circle_members(self, k: int) -> list:
        """Edges whose crossing circle is circle k, with the sign of their normal."""
        return self.members[k] if self.members is not None else [(self.labels[k], 1)]

    def label(self, k: int) -> str:
        a, b = self.labels[k]
        return f"{a}{b}"

    def signs(self, x) -> tuple:
        vals = self.normals @ np.asarray(x, float)
        return tuple(1 if v > 0 else -1 for v in vals)


def parallel_groups(normals: np.ndarray, tol: float = 1e-9) -> list[list[int]]:
    k = len(normals)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(k), 2):
        if np.linalg.norm(np.cross(normals[i], normals[j])) < tol:
            parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(k):
        groups.setdefault(find(i), []).append(i)
    return [g for g in groups.values() if len(g) > 1]


def arrangement_from_normals(labels: Sequence, normals, jitter: float = 0.0,
                             seed: int = 0, merge: bool = False) -> GreatCircleArrangement:
    """Arrangement of the circles n.x = 0.

    With ``merge`` coincident circles become one circle, allowed only when their level
    pairs are disjoint: their connecting blocks then commute and a crossing applies all
    of them (the direct-product situation).
    """
    forms = np.asarray(normals, float)
    if forms.ndim != 2 or forms.shape[1] != 3:
        raise UnsupportedDimension("great-circle arrangements need three-component forms")
    norms = np.linalg.norm(forms, axis=1)
    if np.any(norms == 0):
        raise AnalyticError("zero form has no circle")
    unit = forms / norms[:, None]
    if jitter > 0:
        rng = np.random.default_rng(seed)
        unit = unit + jitter * rng.normal(size=unit.shape)
        unit /= np.linalg.norm(unit, axis=1)[:, None]
    groups = parallel_groups(unit)
    if groups and not merge:
        names = [[f"{labels[i][0]}{labels[i][1]}" for i in g] for g in groups]
        raise DegenerateArrangementError(f"coincident circles {names}; use jitter or the "
                                         f"direct-product route", names)
    if not groups:
        return GreatCircleArrangement(list(labels), unit, forms, jitter)
    lead = {i: g[0] for g in groups for i in g}
    keep, members = [], []
    for i in range(len(labels)):
        r = lead.get(i, i)
        if r != i:
            continue
        grp = [j for j in range(len(labels)) if lead.get(j, j) == i]
        levels = [x for j in grp for x in labels[j]]
        if len(set(levels)) != len(levels):
            names = [f"{labels[j][0]}{labels[j][1]}" for j in grp]
            raise DegenerateArrangementError(f"coincident circles {names} share a level", [names])
        keep.append(i)
        members.append([(tuple(labels[j]), 1 if unit[j] @ unit[i] > 0 else -1) for j in grp])
    return GreatCircleArrangement([tuple(labels[i]) for i in keep], unit[keep], forms[keep],
                                  jitter, members)


def build_arrangement(family: MTLZFamily, jitter: float = 0.0, seed: int = 0,
                      merge: bool = False) -> GreatCircleArrangement:
    if family.dim != 3:
        raise UnsupportedDimension(f"cell decomposition needs M = 3 (got M = {family.dim})")
    forms = family.rescaled()
    labels = sorted(forms)
    return arrangement_from_normals(labels, [forms[e] for e in labels], jitter, seed, merge)


# ----------------------------------------------------------------------- cells

@dataclass
class Cell:
    id: int
    signs: tuple
    rep: np.ndarray


@dataclass
class CellComplex:
    arrangement: GreatCircleArrangement
    vertices: np.ndarray
    circles_at: list
    cells: list
    adjacency: dict
    index: dict

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def euler(self) -> tuple[int, int, int]:
        V = len(self.vertices)
        E = sum(len(c) for c in self.circles_at_circle())
        return V, E, len(self.cells)

    def euler_characteristic(self) -> int:
        V, E, F = self.euler()
        return V - E + F

    def circles_at_circle(self) -> list[list[int]]:
        per = [[] for _ in range(self.arrangement.n_circles)]
        for v, ks in enumerate(self.circles_at):
            for k in ks:
                per[k].append(v)
        return per

    def antipode(self, cid: int) -> int:
        return self.index[tuple(-s for s in self.cells[cid].signs)]

    def locate(self, x) -> int:
        key = self.arrangement.signs(x)
        if key not in self.index:
            raise AnalyticError("point lies on a circle or outside every enumerated cell")
        return self.index[key]


def enumerate_cells(arr: GreatCircleArrangement, tol: float = 1e-10) -> CellComplex:
    """All cells with sign vectors, witnesses and adjacency across single circles."""
    n = arr.normals
    K = len(n)
    if K == 0:
        raise AnalyticError("empty arrangement")
    if K == 1:
        # one circle: two hemispheres, no vertices
        cells = [Cell(0, (1,), n[0].copy()), Cell(1, (-1,), -n[0])]
        return CellComplex(arr, np.zeros((0, 3)), [], cells, {0: [(1, 0)], 1: [(0, 0)]},
                           {(1,): 0, (-1,): 1})
    pts: list[np.ndarray] = []
    for i, j in itertools.combinations(range(K), 2):
        c = np.cross(n[i], n[j])
        c /= np.linalg.norm(c)
        for p in (c, -c):
            if not any(np.linalg.norm(p - q) < 1e-8 for q in pts):
                pts.append(p)
    verts = np.array(pts)
    circles_at = [[k for k in range(K) if abs(n[k] @ p) < 1e-8] for p in verts]
    samples: dict[tuple, list[np.ndarray]] = {}
    for p, ks in zip(verts, circles_at):
        # tangent frame at p
        e1 = np.cross(n[ks[0]], p)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(p, e1)
        angles = []
        for k in ks:
            t = np.cross(n[k], p)
            a = math.atan2(t @ e2, t @ e1)
            angles.extend([a % (2 * math.pi), (a + math.pi) % (2 * math.pi)])
        angles.sort()
        others = [abs(n[k] @ p) for k in range(K) if k not in ks]
        far = min(others) if others else 1.0
        gaps = [q for q in (np.linalg.norm(p - v) for v in verts) if q > 1e-8]
        delta = 0.25 * min(far, min(gaps) if gaps else 1.0, 0.5)
        for a0, a1 in zip(angles, angles[1:] + [angles[0] + 2 * math.pi]):
            mid = 0.5 * (a0 + a1)
            d = math.cos(mid) * e1 + math.sin(mid) * e2
            q = math.cos(delta) * p + math.sin(delta) * d
            key = arr.signs(q)
            if np.min(np.abs(n @ q)) < tol:
                raise AnalyticError("sample point landed on a circle; arrangement too degenerate")
            samples.setdefault(key, []).append(q)
    cells = []
    index = {}
    for cid, key in enumerate(sorted(samples)):
        rep = np.mean(samples[key], axis=0)
        rep /= np.linalg.norm(rep)
        if arr.signs(rep) != key:
            rep = samples[key][0]
        cells.append(Cell(cid, key, rep))
        index[key] = cid
    adjacency: dict[int, list] = {c.id: [] for c in cells}
    for c in cells:
        for k in range(K):
            flipped = c.signs[:k] + (-c.signs[k],) + c.signs[k + 1:]
            if flipped in index:
                adjacency[c.id].append((index[flipped], k))
    cx = CellComplex(arr, verts, circles_at, cells, adjacency, index)
    V, E, F = cx.euler()
    if V - E + F != 2:
        raise AnalyticError(f"Euler check failed: V={V}, E={E}, F={F}")
    return cx


# ------------------------------------------------------------------ dual graph

@dataclass
class DualGraph:
    complex: CellComplex
    edges: list                   # (source, target, circle): arrow from the + side to the - side

    @property
    def n_vertices(self) -> int:
        return self.complex.n_cells

    def neighbors(self, cid: int):
        return self.complex.adjacency[cid]

    def arrow(self, c1: int, c2: int, k: int) -> int:
        """+1 when moving c1 -> c2 follows the arrow (crossing from positive to negative side)."""
        return 1 if self.complex.cells[c1].signs[k] > 0 else -1


def dual_graph(cx: CellComplex) -> DualGraph:
    edges = []
    for c in cx.cells:
        for d, k in cx.adjacency[c.id]:
            if c.signs[k] > 0:
                edges.append((c.id, d, k))
    return DualGraph(cx, edges)


def bfs_path(dual: DualGraph, start: int, end: int, reverse: bool = False,
             avoid: set | None = None) -> list[tuple[int, int, int]]:
    """Shortest dual path as a list of (from, to, circle) steps."""
    prev = {start: None}
    q = deque([start])
    while q:
        c = q.popleft()
        if c == end:
            break
        nbrs = dual.neighbors(c)
        nbrs = sorted(nbrs, reverse=reverse)
        # avoided steps are tried last, not forbidden
        if avoid:
            nbrs = sorted(nbrs, key=lambda x: (c, x[0]) in avoid)
        for d, k in nbrs:
            if d not in prev:
                prev[d] = (c, k)
                q.append(d)
    if end not in prev:
        raise AnalyticError("cells are not connected in the dual graph")
    steps = []
    c = end
    while prev[c] is not None:
        p, k = prev[c]
        steps.append((p, c, k))
        c = p
    return steps[::-1]


# -------------------------------------------------------------- connecting blocks

def stokes_phase(gamma: float) -> float:
    """arg Gamma(1 - i gamma) + gamma (ln gamma - 1) + pi/4."""
    if gamma <= 0:
        return math.pi / 4
    return float(np.imag(loggamma(1 - 1j * gamma))) + gamma * (math.log(gamma) - 1) + math.pi / 4


def connecting_block(gamma: float, reverse: bool = False) -> np.ndarray:
    p = math.exp(-math.pi * gamma)
    q = math.sqrt(max(0.0, 1 - p * p))
    chi = stokes_phase(gamma)
    S = np.array([[p, -q * np.exp(1j * chi)], [q * np.exp(-1j * chi), p]])
    return S.conj().T if reverse else S


def embed(block: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    M = np.eye(n, dtype=complex)
    M[np.ix_([a, b], [a, b])] = block
    return M


@dataclass
class ScatteringSetup:
    """Level pair and |gamma| per circle; the first level of a pair is the steeper one.

    ``members`` lists (pair, gamma, sign) per circle when merged circles carry several
    edges; sign -1 marks an edge whose normal is opposite to the circle's.
    """
    pairs: list
    gammas: list
    n_levels: int
    members: list | None = None

    def blocks(self, k: int) -> list:
        if self.members is not None:
            return self.members[k]
        return [(self.pairs[k], self.gammas[k], 1)]


def setup_from_family(family: MTLZFamily, arr: GreatCircleArrangement,
                      gamma_override: Mapping | Callable | None = None) -> ScatteringSetup:
    def one(a, b):
        g = family.gamma[(a, b)]
        # gamma^{ab} > 0  <=>  level a has the larger slope on every path
        pair = (a, b) if g > 0 else (b, a)
        if gamma_override is None:
            return pair, abs(g)
        if callable(gamma_override):
            return pair, float(gamma_override((a, b)))
        return pair, float(gamma_override[(a, b)])

    members = []
    for k in range(arr.n_circles):
        members.append([(*one(*e), sgn) for e, sgn in arr.circle_members(k)])
    pairs = [m[0][0] for m in members]
    gammas = [m[0][1] for m in members]
    return ScatteringSetup(pairs, gammas, family.n_states,
                           members if arr.members is not None else None)


def path_product(steps, dual: DualGraph, setup: ScatteringSetup) -> np.ndarray:
    S = np.eye(setup.n_levels, dtype=complex)
    for c1, c2, k in steps:
        forward = dual.arrow(c1, c2, k) > 0
        for (a, b), g, sgn in setup.blocks(k):
            blk = connecting_block(g, reverse=(forward != (sgn > 0)))
            S = embed(blk, a, b, setup.n_levels) @ S
    return S


def scattering_product(dual: DualGraph, start: int, setup: ScatteringSetup,
                       check_paths: bool = True, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """(S, P) from ``start`` to its antipodal cell; P[b, a] = prob(a -> b)."""
    end = dual.complex.antipode(start)
    path1 = bfs_path(dual, start, end)
    S = path_product(path1, dual, setup)
    P = np.abs(S) ** 2
    if check_paths and path1:
        used = {(c1, c2) for c1, c2, _ in path1}
        path2 = bfs_path(dual, start, end, reverse=True, avoid=used)
        P2 = np.abs(path_product(path2, dual, setup)) ** 2
        if np.max(np.abs(P - P2)) > tol:
            raise PathDependenceError(f"two dual paths from cell {start} disagree by "
                                      f"{np.max(np.abs(P - P2)):.3e}")
    return S, P


# ----------------------------------------------------------------- monomials

@dataclass(frozen=True)
class Monomial:
    """prod_i p_i^{e_i} q_i^{f_i}; exps = (e1, f1, e2, f2, e3, f3)."""
    exps: tuple

    @property
    def degree(self) -> int:
        return sum(self.exps)

    def evaluate(self, ps: Sequence[float]) -> float:
        out = 1.0
        for i, p in enumerate(ps):
            out *= p ** self.exps[2 * i] * (1 - p) ** self.exps[2 * i + 1]
        return out

    def permuted(self, perm: Sequence[int]) -> "Monomial":
        """Relabel index i -> perm[i] on both p and q."""
        ex = [0] * len(self.exps)
        for i, j in enumerate(perm):
            ex[2 * j], ex[2 * j + 1] = self.exps[2 * i], self.exps[2 * i + 1]
        return Monomial(tuple(ex))

    def __str__(self) -> str:
        parts = []
        for i in range(len(self.exps) // 2):
            for sym, e in (("p", self.exps[2 * i]), ("q", self.exps[2 * i + 1])):
                if e == 1:
                    parts.append(f"{sym}{i + 1}")
                elif e > 1:
                    parts.append(f"{sym}{i + 1}^{e}")
        return " ".join(parts) or "1"

    @classmethod
    def parse(cls, text: str, n_idx: int = 3) -> "Monomial | None":
        text = text.strip()
        if text == "0":
            return None
        ex = [0] * (2 * n_idx)
        for tok in text.replace("*", " ").split():
            base, _, power = tok.partition("^")
            i = int(base[1:]) - 1
            ex[2 * i + (0 if base[0] == "p" else 1)] += int(power or 1)
        return cls(tuple(ex))


NOFIT = "nofit"


def candidate_monomials(n_idx: int = 3, max_degree: int = 3) -> list[Monomial]:
    out = []
    for ex in itertools.product(range(max_degree + 1), repeat=2 * n_idx):
        if sum(ex) <= max_degree:
            out.append(Monomial(ex))
    return out


def fit_monomials(evaluate: Callable[[Sequence[float]], np.ndarray], n_idx: int = 3,
                  seed: int = 7, n_fit: int = 3, n_check: int = 2, max_degree: int = 3,
                  rtol: float = 1e-9, zero_tol: float = 1e-12) -> list[list]:
    """Match every entry of a probability matrix to a single monomial (or zero).

    ``evaluate(ps)`` returns the numeric matrix at stay probabilities ps.  Entries are
    fitted at ``n_fit`` random points and confirmed at ``n_check`` further points;
    failures are marked NOFIT rather than rounded.
    """
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.15, 0.85, size=(n_fit + n_check, n_idx))
    mats = np.array([evaluate(p) for p in pts])
    cands = candidate_monomials(n_idx, max_degree)
    table = np.array([[m.evaluate(p) for p in pts] for m in cands])  # (C, points)
    n = mats.shape[1]
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            vals = mats[:, i, j]
            if np.all(np.abs(vals) < zero_tol):
                out[i][j] = None
                continue
            err = np.max(np.abs(table[:, :n_fit] - vals[:n_fit]) / np.abs(vals[:n_fit]), axis=1)
            hits = [c for c in np.nonzero(err < rtol)[0]
                    if np.all(np.abs(table[c, n_fit:] - vals[n_fit:]) < rtol * np.abs(vals[n_fit:]))]
            out[i][j] = cands[hits[0]] if len(hits) >= 1 else NOFIT
    return out


# polynomial identity check in p only (q = 1 - p), integer coefficients

def _expand(m: Monomial) -> dict:
    poly = {tuple([0] * (len(m.exps) // 2)): 1}
    for i in range(len(m.exps) // 2):
        e, f = m.exps[2 * i], m.exps[2 * i + 1]
        factor = {e + k: math.comb(f, k) * (-1) ** k for k in range(f + 1)}
        new = {}
        for mono, c in poly.items():
            for power, c2 in factor.items():
                key = mono[:i] + (mono[i] + power,) + mono[i + 1:]
                new[key] = new.get(key, 0) + c * c2
        poly = {k: v for k, v in new.items() if v}
    return poly


def symbolic_sum_is_one(entries: Iterable) -> bool:
    total: dict = {}
    n_idx = None
    for m in entries:
        if m is None:
            continue
        if m == NOFIT:
            return False
        n_idx = len(m.exps) // 2
        for k, v in _expand(m).items():
            total[k] = total.get(k, 0) + v
    total = {k: v for k, v in total.items() if v}
    if n_idx is None:
        return False
    return total == {tuple([0] * n_idx): 1}


# --------------------------------------------------------- probability matrices

ZERO_PATTERN_TYPES = {
    1: (0, "00000000"),
    2: (6, "33111111"),
    3: (8, "22222222"),
    4: (11, "44332222"),
    5: (12, "44333322"),
    6: (12, "33333333"),
    7: (16, "44444444"),
}


@dataclass
class ProbabilityMatrix:
    numeric: np.ndarray
    symbolic: list
    start: int | None = None

    @property
    def n(self) -> int:
        return len(self.symbolic)

    def zero_mask(self) -> np.ndarray:
        return np.array([[e is None for e in row] for row in self.symbolic])

    @property
    def half_zero_count(self) -> int:
        return int(self.zero_mask().sum()) // 2

    @property
    def column_distribution(self) -> str:
        counts = sorted(self.zero_mask().sum(axis=0), reverse=True)
        return "".join(str(int(c)) for c in counts)

    @property
    def descriptor(self) -> tuple[int, str]:
        return self.half_zero_count, self.column_distribution

    def has_nofit(self) -> bool:
        return any(e == NOFIT for row in self.symbolic for e in row)

    def is_symmetric(self) -> bool:
        return all(self.symbolic[i][j] == self.symbolic[j][i] for i in range(self.n) for j in range(self.n))

    def rows_stochastic(self) -> bool:
        return all(symbolic_sum_is_one(row) for row in self.symbolic)

    def columns_stochastic(self) -> bool:
        return all(symbolic_sum_is_one([row[j] for row in self.symbolic]) for j in range(self.n))

    def diagonal_constant(self) -> Monomial | None:
        d = {self.symbolic[i][i] for i in range(self.n)}
        return d.pop() if len(d) == 1 else None

    def max_degree(self) -> int:
        return max((e.degree for row in self.symbolic for e in row if isinstance(e, Monomial)), default=0)

    def render(self) -> list[list[str]]:
        return [["0" if e is None else str(e) for e in row] for row in self.symbolic]


def classify_type(pm: ProbabilityMatrix) -> int | None:
    for t, desc in ZERO_PATTERN_TYPES.items():
        if pm.descriptor == desc:
            return t
    return None


def parse_matrix(rows: Sequence[str], n_idx: int = 3) -> list[list]:
    return [[Monomial.parse(tok, n_idx) for tok in row.split(",")] for row in rows]


REFERENCE_SIX_ZERO = parse_matrix([
    "p1 p2 p3, p2 p3 q1, p3 q2, 0, p2 q3, 0, q2 q3, 0",
    "p2 p3 q1, p1 p2 p3, 0, p3 q2, 0, p2 q3, 0, q2 q3",
    "p3 q2, 0, p1 p2 p3, p2 p3 q1, p1 q2 q3, q1 q2 q3, p1 p2 q3, p2 q1 q3",
    "0, p3 q2, p2 p3 q1, p1 p2 p3, q1 q2 q3, p1 q2 q3, p2 q1 q3, p1 p2 q3",
    "p2 q3, 0, p1 q2 q3, q1 q2 q3, p1 p2 p3, p2 p3 q1, p1 p3 q2, p3 q1 q2",
    "0, p2 q3, q1 q2 q3, p1 q2 q3, p2 p3 q1, p1 p2 p3, p3 q1 q2, p1 p3 q2",
    "q2 q3, 0, p1 p2 q3, p2 q1 q3, p1 p3 q2, p3 q1 q2, p1 p2 p3, p2 p3 q1",
    "0, q2 q3, p2 q1 q3, p1 p2 q3, p3 q1 q2, p1 p3 q2, p2 p3 q1, p1 p2 p3",
])

REFERENCE_EIGHT_ZERO = parse_matrix([
    "p1 p2 p3, p2 p3 q1, p1 p3 q2, p3 q1 q2, p2 q3, 0, q2 q3, 0",
    "p2 p3 q1, p1 p2 p3, p3 q1 q2, p1 p3 q2, 0, p2 q3, 0, q2 q3",
    "p1 p3 q2, p3 q1 q2, p1 p2 p3, p2 p3 q1, q2 q3, 0, p2 q3, 0",
    "p3 q1 q2, p1 p3 q2, p2 p3 q1, p1 p2 p3, 0, q2 q3, 0, p2 q3",
    "p2 q3, 0, q2 q3, 0, p1 p2 p3, p2 p3 q1, p1 p3 q2, p3 q1 q2",
    "0, p2 q3, 0, q2 q3, p2 p3 q1, p1 p2 p3, p3 q1 q2, p1 p3 q2",
    "q2 q3, 0, p2 q3, 0, p1 p3 q2, p3 q1 q2, p1 p2 p3, p2 p3 q1",
    "0, q2 q3, 0, p2 q3, p3 q1 q2, p1 p3 q2, p2 p3 q1, p1 p2 p3",
])


def equivalent(sym_a: list, sym_b: list, n_idx: int = 3) -> tuple | None:
    """Find (level permutation sigma, index permutation pi) with a[s(i)][s(j)] = pi(b[i][j]).

    Returns None when no such pair exists.
    """
    n = len(sym_a)
    if len(sym_b) != n:
        return None

    def relabel(e, pi):
        return e.permuted(pi) if isinstance(e, Monomial) else e

    for pi in itertools.permutations(range(n_idx)):
        target = [[relabel(e, pi) for e in row] for row in sym_b]
        sigma = [None] * n
        used = [False] * n

        def extend(i):
            if i == n:
                return True
            for cand in range(n):
                if used[cand] or sym_a[cand][cand] != target[i][i]:
                    continue
                if all(sym_a[cand][sigma[j]] == target[i][j] and sym_a[sigma[j]][cand] == target[j][i]
                       for j in range(i)):
                    sigma[i] = cand
                    used[cand] = True
                    if extend(i + 1):
                        return True
                    used[cand] = False
            return False

        if extend(0):
            return tuple(sigma), pi
    return None


# -------------------------------------------------------------- cube pipeline

def cube_class_of(edge: Edge) -> int:
    """0, 1, 2 for edges parallel to 01, 02, 04."""
    a, b = edge
    return (a ^ b).bit_length() - 1


def cube_gamma_from_p(ps: Sequence[float]) -> Callable[[Edge], float]:
    gam = [-math.log(p) / (2 * math.pi) for p in ps]
    return lambda e: gam[cube_class_of(e)]


def cell_probability(dual: DualGraph, family: MTLZFamily, start: int,
                     seed: int = 7, check_paths: bool = True) -> ProbabilityMatrix:
    arr = dual.complex.arrangement

    def at(ps):
        setup = setup_from_family(family, arr, cube_gamma_from_p(ps))
        return scattering_product(dual, start, setup, check_paths=check_paths)[1]

    sym = fit_monomials(at, seed=seed)
    setup = setup_from_family(family, arr)
    numeric = scattering_product(dual, start, setup, check_paths=check_paths)[1]
    return ProbabilityMatrix(numeric, sym, start)


@dataclass
class Census:
    counts: dict
    cell_types: dict
    representatives: dict
    anomalies: list
    matrices: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "counts": {str(k): v for k, v in sorted(self.counts.items(), key=lambda kv: str(kv[0]))},
            "cell_types": {str(k): v for k, v in self.cell_types.items()},
            "representatives": {str(t): {"cell": pm.start, "half_zeros": pm.half_zero_count,
                                         "columns": pm.column_distribution, "matrix": pm.render()}
                                for t, pm in self.representatives.items()},
            "anomalies": list(self.anomalies),
        }

    @property
    def types_present(self) -> set:
        return {t for t in self.counts if isinstance(t, int)}


def classify_all_cells(dual: DualGraph, family: MTLZFamily, seed: int = 7) -> Census:
    counts: dict = {}
    cell_types: dict = {}
    reps: dict = {}
    anomalies = []
    mats = {}
    for cell in dual.complex.cells:
        pm = cell_probability(dual, family, cell.id, seed=seed)
        mats[cell.id] = pm
        t = classify_type(pm)
        key = t if t is not None else f"other{pm.descriptor}"
        if t is None:
            anomalies.append({"cell": cell.id, "half_zeros": pm.half_zero_count,
                              "columns": pm.column_distribution})
        if pm.has_nofit():
            anomalies.append({"cell": cell.id, "nofit": True})
        counts[key] = counts.get(key, 0) + 1
        cell_types[cell.id] = key
        reps.setdefault(key, pm)
    return Census(counts, cell_types, reps, anomalies, mats)


def cube_census(taus: Sequence[float], p_signs: Sequence[int] = (1, 1, 1, 1, 1, 1),
                gammas: Sequence[float] = (0.1, 0.07, 0.05), seed: int = 7) -> Census:
    from .family_builder import build_cube
    fam = build_cube(taus, p_signs, gammas)
    cx = enumerate_cells(build_arrangement(fam))
    return classify_all_cells(dual_graph(cx), fam, seed=seed)


def direct_product_cube(ps: Sequence[float]) -> np.ndarray:
    """Probability matrix of three independent spins; level bit k belongs to class k."""
    out = np.ones((1, 1))
    for p in reversed(list(ps)):
        out = np.kron(out, np.array([[p, 1 - p], [1 - p, p]]))
    return out


def tau_sign_case(taus: Sequence[float]) -> int:
    """1: all six tangents positive; 2: one negative; 3: two negative (after pair flips)."""
    neg = sum(1 for t in taus if t < 0)
    return {0: 1, 1: 2, 2: 3}.get(neg, 0)


# -------------------------------------------------------- stereographic scene

@dataclass
class PlanarCurve:
    label: str
    kind: str                 # "circle" or "line"
    center: tuple = (0.0, 0.0)
    radius: float = 0.0
    direction: tuple = (1.0, 0.0)


@dataclass
class PlanarScene:
    pole: np.ndarray
    basis: np.ndarray
    curves: list

    def project(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        x = x / np.linalg.norm(x)
        d = 1 - x @ self.pole
        if d < 1e-14:
            raise AnalyticError("point at the projection pole")
        return np.array([x @ self.basis[0], x @ self.basis[1]]) / d

    def planar_signs(self, u) -> tuple:
        out = []
        for c in self.curves:
            if c.kind == "circle":
                out.append(1 if np.hypot(u[0] - c.center[0], u[1] - c.center[1]) < c.radius else -1)
            else:
                nx, ny = -c.direction[1], c.direction[0]
                out.append(1 if u[0] * nx + u[1] * ny > 0 else -1)
        return tuple(out)


def stereographic_project(arr: GreatCircleArrangement, pole=None, auto_rotate: bool = True,
                          seed: int = 3) -> PlanarScene:
    """Project the circles from ``pole``; a circle through the pole becomes a line."""
    N = np.array([0.0, 0.0, 1.0]) if pole is None else np.asarray(pole, float)
    N = N / np.linalg.norm(N)
    if auto_rotate and np.min(np.abs(arr.normals @ N)) < 1e-6:
        rng = np.random.default_rng(seed)
        while np.min(np.abs(arr.normals @ N)) < 1e-3:
            N = N + 0.1 * rng.normal(size=3)
            N /= np.linalg.norm(N)
    e1 = np.cross(N, [1.0, 0.0, 0.0])
    if np.linalg.norm(e1) < 1e-6:
        e1 = np.cross(N, [0.0, 1.0, 0.0])
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(N, e1)
    curves = []
    for k, n in enumerate(arr.normals):
        nN = float(n @ N)
        nperp = np.array([n @ e1, n @ e2])
        if abs(nN) < 1e-12:
            d = np.array([-nperp[1], nperp[0]])
            d /= np.linalg.norm(d)
            curves.append(PlanarCurve(arr.label(k), "line", direction=tuple(d)))
        else:
            c = -nperp / nN
            curves.append(PlanarCurve(arr.label(k), "circle", tuple(c), 1 / abs(nN)))
    return PlanarScene(N, np.array([e1, e2]), curves)


def planar_cell_count(scene: PlanarScene, cx: CellComplex) -> int:
    """Distinct planar regions hit by the projected cell witnesses."""
    return len({scene.planar_signs(scene.project(c.rep)) for c in cx.cells})


def scene_svg(scene: PlanarScene, path=None, size: int = 600, extent: float = 4.0) -> str:
    s = size / (2 * extent)
    X = lambda u: size / 2 + u * s
    Y = lambda v: size / 2 - v * s
    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
               "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#000000", "#aa3377"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 20 * len(scene.curves) // 4 + 20}">',
             '<rect width="100%" height="100%" fill="white"/>']
    for i, c in enumerate(scene.curves):
        col = palette[i % len(palette)]
        if c.kind == "circle":
            parts.append(f'<circle cx="{X(c.center[0]):.2f}" cy="{Y(c.center[1]):.2f}" r="{c.radius * s:.2f}" '
                         f'fill="none" stroke="{col}" stroke-width="1.2"><title>{c.label}</title></circle>')
        else:
            dx, dy = c.direction
            L = 2 * extent
            parts.append(f'<line x1="{X(-L * dx):.2f}" y1="{Y(-L * dy):.2f}" x2="{X(L * dx):.2f}" '
                         f'y2="{Y(L * dy):.2f}" stroke="{col}" stroke-width="1.2"><title>{c.label}</title></line>')
        parts.append(f'<text x="{10 + 80 * (i % 4)}" y="{size + 15 + 20 * (i // 4)}" fill="{col}" '
                     f'font-size="12">{c.label}</text>')
    parts.append("</svg>")
    text = "\n".join(parts)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def scene_csv(scene: PlanarScene, path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["label", "kind", "cx", "cy", "radius", "dx", "dy"])
        for c in scene.curves:
            w.writerow([c.label, c.kind, c.center[0], c.center[1], c.radius, c.direction[0], c.direction[1]])
