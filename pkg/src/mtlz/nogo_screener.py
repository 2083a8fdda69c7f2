"""Orientation screening by sign propagation over wedge products of edge forms.

Every wedge Abar^e ^ Abar^f of two edges sharing a vertex is nonzero in a good family.
Integrability relates such wedges in two ways:

* a vertex pair joined by exactly two length-2 paths gives
  Abar^{x c1} ^ Abar^{y c1} = -(positive) Abar^{x c2} ^ Abar^{y c2};
* around a 4-loop a-b-c-d with wedges W_v = Abar^{(prev, v)} ^ Abar^{(v, next)}, the
  loop transform gives W_a = t W_c and W_b = t W_d (non-bipartite, a and c the source
  and sink) or W_a = t W_c and W_b = -t W_d (bipartite), with one free sign t per loop.

Related wedges are proportional, so each carries a sign bit relative to its class and
every relation is a linear equation over GF(2).  An inconsistent system means some
wedge must equal minus a positive multiple of itself, which forces it to vanish.
Pairs joined by more than two length-2 paths give a positive-coefficient sum that
vanishes only if both signs occur among its terms; that is checked by enumerating the
free signs it depends on.  Four edges at a vertex whose wedges lie in one plane obey
the Grassmann-Pluecker identity, which enters as another such sum.

Two further layers look at magnitudes and geometry:

* log|wedge| and log(gamma) satisfy homogeneous linear equations (loop relations hold
  with coefficient exactly +-1).  A term standing alone against two or more terms of
  the other sign must exceed each of them, and these strict inequalities are tested
  for joint feasibility by linear programming.
* forms of one plane are directions in R^2, so their wedge signs must come from an
  order of angles together with a sign flip per form; a depth-first search looks for
  such a realization.

Every layer is a necessary condition, so a Contradiction is a proof while Consistent
only means that no obstruction was found.
"""
from __future__ import annotations

import enum
import itertools
import json

import numpy as np
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .graph_core import (ConnectivityGraph, Edge, FourLoop, LoopClass, Orientation,
                         automorphisms, edge_key, enumerate_four_loops, loop_class,
                         named_graph, screen_graph, fan, fan_orientation, fan_type1_orientation,
                         square, bipartite_square_orientation, canonical_loop)

Pair = tuple  # (Edge, Edge)


@dataclass(frozen=True)
class WedgeConstraint:
    """left = sign * [t_loop] * right, where t_loop is a free sign shared within one loop."""
    left: Pair
    right: Pair
    sign: int
    origin: str
    loop: tuple | None = None

    def __post_init__(self):
        for pr in (self.left, self.right):
            if pr[0] == pr[1]:
                raise ValueError("wedge of an edge with itself")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +-1")

    def swapped(self, side: str) -> "WedgeConstraint":
        """Reverse one wedge; antisymmetry flips the sign."""
        if side == "left":
            return WedgeConstraint(self.left[::-1], self.right, -self.sign, self.origin, self.loop)
        return WedgeConstraint(self.left, self.right[::-1], -self.sign, self.origin, self.loop)

    def describe(self) -> str:
        def w(p):
            (a, b), (c, d) = p
            return f"A{a}{b}^A{c}{d}"
        s = "" if self.sign > 0 else "-"
        t = f"t{''.join(map(str, self.loop))}*" if self.loop else ""
        return f"{w(self.left)} = {s}{t}{w(self.right)}   [{self.origin}]"


@dataclass(frozen=True)
class PositiveSum:
    """sum_k c_k prod_{w in term k} w = 0 with every c_k of known sign and every w nonzero.

    ``terms`` holds tuples of wedge pairs; ``signs`` the signs of the coefficients (all +1
    for the length-2 path sums).  Such a sum can vanish only if its terms differ in sign.
    """
    terms: tuple
    origin: str
    signs: tuple = ()
    gamma_weighted: bool = False

    def term_signs(self) -> tuple:
        return self.signs or (1,) * len(self.terms)

    def describe(self) -> str:
        def w(p):
            (a, b), (c, d) = p
            return f"A{a}{b}^A{c}{d}"
        parts = []
        for s, t in zip(self.term_signs(), self.terms):
            parts.append(("- " if s < 0 else "+ ") + " ".join(f"[{w(p)}]" for p in t))
        return " ".join(parts).lstrip("+ ") + f" = 0   [{self.origin}]"


def _wedge_pair(v: int, prev: int, nxt: int) -> Pair:
    return (edge_key(prev, v), edge_key(v, nxt))


def generate_constraints(graph: ConnectivityGraph, orient: Orientation,
                         loops: Sequence[FourLoop] | None = None) -> tuple[list, list]:
    """Binary wedge relations and deferred multi-term sums for one orientation."""
    loops = enumerate_four_loops(graph) if loops is None else loops
    binary: list[WedgeConstraint] = []
    multi: list[PositiveSum] = []
    for lp in loops:
        cls = lp.classify(orient)
        if cls is LoopClass.INVALID:
            raise ValueError(f"orientation invalid on loop {lp.vertices}")
        q = lp.vertices
        W = [_wedge_pair(q[i], q[i - 1], q[(i + 1) % 4]) for i in range(4)]
        roles = [orient.sign(q[i], q[i - 1]) + orient.sign(q[i], q[(i + 1) % 4]) for i in range(4)]
        if cls is LoopClass.NON_BIPARTITE:
            # put the source/sink pair first
            k = 0 if roles[0] != 0 else 1
            a, b, c, d = (k, k + 1, k + 2, (k + 3) % 4)
            binary.append(WedgeConstraint(W[a], W[c], 1, f"loop {q} non-bipartite", q))
            binary.append(WedgeConstraint(W[b], W[d], 1, f"loop {q} non-bipartite", q))
        else:
            binary.append(WedgeConstraint(W[0], W[2], 1, f"loop {q} bipartite", q))
            binary.append(WedgeConstraint(W[1], W[3], -1, f"loop {q} bipartite", q))
    for x, y in itertools.combinations(range(graph.n_vertices), 2):
        if graph.has_edge(x, y):
            continue
        cs = graph.common_neighbors(x, y)
        if len(cs) < 2:
            continue
        terms = [(edge_key(x, c), edge_key(y, c)) for c in cs]
        if len(cs) == 2:
            binary.append(WedgeConstraint(terms[0], terms[1], -1, f"length-2 paths {x}-{y}"))
        else:
            multi.append(PositiveSum(tuple((t,) for t in terms), f"length-2 paths {x}-{y}",
                                     gamma_weighted=True))
    multi.extend(plucker_constraints(graph, loops))
    return binary, multi


def plane_classes(graph: ConnectivityGraph, loops: Sequence[FourLoop]) -> dict:
    """Map each wedge pair to a plane label.

    The forms of a 4-loop span a plane, and two independent forms fix it, so loops that
    share two edges meeting at a vertex share the plane.
    """
    parent = list(range(len(loops)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    owner: dict = {}
    for k, lp in enumerate(loops):
        q = lp.vertices
        for i in range(4):
            key = tuple(sorted(_wedge_pair(q[i], q[i - 1], q[(i + 1) % 4])))
            if key in owner:
                parent[find(k)] = find(owner[key])
            else:
                owner[key] = k
    return {key: find(k) for key, k in owner.items()}


def plucker_constraints(graph: ConnectivityGraph, loops: Sequence[FourLoop]) -> list:
    """Grassmann-Pluecker sums for four coplanar edges at one vertex.

    For u1..u4 in a plane, [12][34] - [13][24] + [14][23] = 0 with [ij] = ui ^ uj; all six
    wedges are nonzero for edges sharing a vertex.
    """
    planes = plane_classes(graph, loops)
    out = []
    for v in range(graph.n_vertices):
        inc = [edge_key(v, w) for w in graph.neighbors(v)]
        for quad in itertools.combinations(sorted(inc), 4):
            labels = {planes.get(tuple(sorted(pr))) for pr in itertools.combinations(quad, 2)}
            if len(labels) != 1 or None in labels:
                continue
            e1, e2, e3, e4 = quad
            out.append(PositiveSum((((e1, e2), (e3, e4)), ((e1, e3), (e2, e4)), ((e1, e4), (e2, e3))),
                                   f"coplanar forms at vertex {v}", (1, -1, 1)))
    return out


# ------------------------------------------------------- planar realizability

def _pair_key(pr: Pair) -> tuple:
    return tuple(sorted(pr))


@dataclass
class _PlanarProblem:
    edges: list
    loops: list        # (wedges, product sign)
    binaries: list     # (left, right, sign)
    sums: list         # (PositiveSum, classes)


def _planar_problems(constraints: Sequence[WedgeConstraint], positive_sums: Sequence[PositiveSum],
                     planes: dict, mag: "MagnitudeSystem | None") -> dict:
    probs: dict = {}

    def label(prs):
        labs = {planes.get(_pair_key(p)) for p in prs}
        return labs.pop() if len(labs) == 1 and None not in labs else None

    def prob(lab):
        return probs.setdefault(lab, _PlanarProblem([], [], [], []))

    by_loop: dict = {}
    for c in constraints:
        if c.loop is not None:
            by_loop.setdefault(c.loop, []).append(c)
            continue
        lab = label((c.left, c.right))
        if lab is not None:
            prob(lab).binaries.append((c.left, c.right, c.sign))
    for cs in by_loop.values():
        # the free loop sign cancels from the product of its two relations
        ws = tuple(w for c in cs for w in (c.left, c.right))
        lab = label(ws)
        if lab is not None:
            prob(lab).loops.append((ws, int(np.prod([c.sign for c in cs]))))
    for ps in positive_sums:
        lab = label([p for t in ps.terms for p in t])
        if lab is not None:
            classes = mag.equal_classes(ps) if mag else [[k] for k in range(len(ps.terms))]
            prob(lab).sums.append((ps, classes))
    for pr, lab in planes.items():
        if lab in probs:
            for e in pr:
                if e not in probs[lab].edges:
                    probs[lab].edges.append(e)
    return probs


def _dominance(sig: list, classes: list) -> list[tuple[int, int]]:
    """(big, small) term pairs forced by sum_k sig_k x_k = 0 with every x_k > 0.

    A term alone on its side of the sum exceeds each term on the other side, as long
    as that side has at least two terms.
    """
    out = []
    for s in (1, -1):
        mine = [k for k, v in enumerate(sig) if v == s]
        other = [k for k, v in enumerate(sig) if v == -s]
        if len(mine) == 1 and len(other) >= 2:
            out += [(mine[0], k) for k in other]
    return out


class _DominanceLP:
    """Feasibility of strict log-magnitude inequalities under the magnitude equalities."""

    def __init__(self, mag: "MagnitudeSystem"):
        self.mag = mag
        self.cache: dict = {}

    def feasible(self, rows: frozenset) -> bool:
        if not rows:
            return True
        if rows not in self.cache:
            from scipy.optimize import linprog
            D = np.array([np.frombuffer(r) for r in rows])
            n = D.shape[1]
            basis = self.mag._basis[:, :n] if self.mag._basis.size else np.zeros((0, n))
            res = linprog(np.zeros(n), A_ub=-D, b_ub=-np.ones(len(D)),
                          A_eq=basis if basis.size else None, b_eq=np.zeros(len(basis)) if basis.size else None,
                          bounds=[(None, None)] * n, method="highs")
            self.cache[rows] = res.status != 2
        return self.cache[rows]


def planar_search(prob: _PlanarProblem, node_limit: int = 2_000_000,
                  mag: "MagnitudeSystem | None" = None) -> tuple[Status, dict | None]:
    """Look for directions in a half-plane, one per edge, plus a sign flip per edge.

    Forms confined to a plane can be flipped into the upper half-plane; the sign of
    u_e ^ u_f is then s_e s_f times the sign of (angle_f - angle_e).  So the sign data is
    realizable exactly when some linear order of the edges and some flips reproduce it.
    Edges are inserted one at a time and a relation is checked as soon as all of its
    edges are placed.  With ``mag`` the sums also contribute strict inequalities between
    log-magnitudes, which must be jointly feasible with the magnitude equalities.
    Returns a witness {edge: (rank, flip)} when one exists.
    """
    items = []          # (edges, check); check(sign_fn) -> None (fail) or dominance rows
    for ws, s in prob.loops:
        items.append(({e for w in ws for e in w},
                      lambda f, ws=ws, s=s: () if int(np.prod([f(w) for w in ws])) == s else None))
    for l, r, s in prob.binaries:
        items.append(({*l, *r}, lambda f, l=l, r=r, s=s: () if f(l) * f(r) == s else None))
    if mag is not None:
        for ps, _ in prob.sums:
            mag.equal_classes(ps)      # registers keys before vectors are taken
        lp = _DominanceLP(mag)
    for ps, classes in prob.sums:
        vecs = [mag._vector(mag._keys(t, ps.gamma_weighted)) for t in ps.terms] if mag else None

        def chk(f, ps=ps, classes=classes, vecs=vecs):
            sig = [c * int(np.prod([f(w) for w in t])) for c, t in zip(ps.term_signs(), ps.terms)]
            tot = [sum(sig[k] for k in cl) for cl in classes]
            if not (all(t == 0 for t in tot) or (any(t > 0 for t in tot) and any(t < 0 for t in tot))):
                return None
            if vecs is None:
                return ()
            return tuple((vecs[i] - vecs[j]).tobytes() for i, j in _dominance(sig, classes))
        items.append(({e for t in ps.terms for w in t for e in w}, chk))
    # placement order: greedily close as many relations as possible
    remaining = list(prob.edges)
    order: list = []
    while remaining:
        placed = set(order)
        best = max(remaining, key=lambda e: (sum(1 for es, _ in items if e in es and es - placed <= {e}),
                                             sum(1 for es, _ in items if e in es)))
        order.append(best)
        remaining.remove(best)
    step = {e: k for k, e in enumerate(order)}
    due: list = [[] for _ in order]
    for es, chk in items:
        due[max(step[e] for e in es)].append(chk)

    seq: list = []
    flip: dict = {}
    nodes = 0

    def sign(w):
        a, b = w
        return flip[a] * flip[b] * (1 if seq.index(a) < seq.index(b) else -1)

    def rec(k, dom: frozenset) -> bool:
        nonlocal nodes
        if k == len(order):
            return True
        e = order[k]
        # the first edge may be rotated to the front, and a global flip changes nothing
        slots = [0] if k == 0 else range(1, len(seq) + 1)
        flips = (1,) if k == 0 else (1, -1)
        for pos in slots:
            seq.insert(pos, e)
            for s in flips:
                flip[e] = s
                nodes += 1
                if nodes > node_limit:
                    raise _SearchLimit
                rows = set(dom)
                for chk in due[k]:
                    r = chk(sign)
                    if r is None:
                        break
                    rows.update(r)
                else:
                    new = frozenset(rows)
                    if (new == dom or lp.feasible(new)) and rec(k + 1, new):
                        return True
            del flip[e]
            seq.pop(pos)
        return False

    if mag is None:
        class _Always:
            @staticmethod
            def feasible(rows):
                return True
        lp = _Always()
    try:
        found = rec(0, frozenset())
    except _SearchLimit:
        return Status.UNRESOLVED, None
    if not found:
        return Status.CONTRADICTION, None
    return Status.CONSISTENT, {e: (seq.index(e), flip[e]) for e in order}


class _SearchLimit(Exception):
    pass


# -------------------------------------------------------------- GF(2) system

class _GF2System:
    """Incremental elimination; each row remembers which input equations it combines."""

    def __init__(self):
        self.var_index: dict = {}
        self.pivots: dict[int, tuple[int, int, int]] = {}   # bit -> (row, rhs, combo)
        self.n_eq = 0

    def var(self, key) -> int:
        if key not in self.var_index:
            self.var_index[key] = len(self.var_index)
        return self.var_index[key]

    def reduce(self, row: int, rhs: int, combo: int = 0) -> tuple[int, int, int]:
        while row:
            bit = row.bit_length() - 1
            if bit not in self.pivots:
                break
            prow, prhs, pcombo = self.pivots[bit]
            row ^= prow
            rhs ^= prhs
            combo ^= pcombo
        return row, rhs, combo

    def reduce_full(self, row: int, rhs: int, combo: int = 0) -> tuple[int, int, int]:
        """Eliminate every pivot bit, leaving only free variables."""
        out = 0
        while row:
            bit = row.bit_length() - 1
            if bit in self.pivots:
                prow, prhs, pcombo = self.pivots[bit]
                row ^= prow
                rhs ^= prhs
                combo ^= pcombo
            else:
                out |= 1 << bit
                row ^= 1 << bit
        return out, rhs, combo

    def add(self, row: int, rhs: int) -> int | None:
        """Add an equation; returns the combination mask of a contradiction, else None."""
        combo = 1 << self.n_eq
        self.n_eq += 1
        row, rhs, combo = self.reduce(row, rhs, combo)
        if row == 0:
            return combo if rhs else None
        self.pivots[row.bit_length() - 1] = (row, rhs, combo)
        return None


def _bit(s: int) -> int:
    return 0 if s > 0 else 1


def _node(sys: _GF2System, pair: Pair) -> tuple[int, int]:
    e, f = pair
    key = (e, f) if e < f else (f, e)
    return sys.var(("w", key)), 0 if (e, f) == key else 1


def _equation(sys: _GF2System, c: WedgeConstraint) -> tuple[int, int]:
    i, oi = _node(sys, c.left)
    j, oj = _node(sys, c.right)
    row = (1 << i) ^ (1 << j)
    if c.loop is not None:
        row ^= 1 << sys.var(("t", c.loop))
    return row, _bit(c.sign) ^ oi ^ oj


class Status(enum.Enum):
    CONSISTENT = "consistent"
    CONTRADICTION = "contradiction"
    UNRESOLVED = "unresolved"


@dataclass
class Certificate:
    kind: str                       # property | loop | linear | positive_sum | planar
    constraints: list = field(default_factory=list)
    positive_sums: list = field(default_factory=list)
    note: str = ""
    planes: dict | None = None

    def transcript(self) -> list[str]:
        lines = [self.note] if self.note else []
        lines += [c.describe() for c in self.constraints]
        lines += [p.describe() for p in self.positive_sums]
        return lines

    def as_dict(self) -> dict:
        return {"kind": self.kind, "transcript": self.transcript()}

    def replay(self) -> bool:
        """Re-derive the contradiction from the listed relations alone."""
        if self.kind == "linear":
            sys = _GF2System()
            acc_row, acc_rhs = 0, 0
            for c in self.constraints:
                r, b = _equation(sys, c)
                acc_row ^= r
                acc_rhs ^= b
            # sum of equations reads 0 = 1, i.e. X = -X
            return acc_row == 0 and acc_rhs == 1
        if self.kind == "positive_sum":
            res = propagate(self.constraints, self.positive_sums, exhaust_limit=24)
            return res.status is Status.CONTRADICTION
        if self.kind == "planar":
            if not self.planes:
                return False
            mag = MagnitudeSystem(self.constraints)
            probs = _planar_problems(self.constraints, self.positive_sums, self.planes, mag)
            return any(planar_search(p, mag=mag)[0] is Status.CONTRADICTION for p in probs.values())
        return self.kind in ("property", "loop")


@dataclass
class PropagationResult:
    status: Status
    certificate: Certificate | None = None
    system: _GF2System | None = None

    def derived_sign(self, left: Pair, right: Pair) -> int | None:
        """Sign s with left = s * (positive) * right if forced, else None."""
        if self.system is None:
            return None
        sys = self.system
        for pr in (left, right):
            key = tuple(sorted(pr))
            if ("w", key) not in sys.var_index:
                return None
        i, oi = _node(sys, left)
        j, oj = _node(sys, right)
        row, rhs, _ = sys.reduce_full((1 << i) ^ (1 << j), 0)
        if row:
            return None
        return 1 if (rhs ^ oi ^ oj) == 0 else -1


def _planar_stage(constraints, positive_sums, planes, sys, mag, node_limit) -> PropagationResult:
    result = PropagationResult(Status.CONSISTENT, None, sys)
    for lab, prob in sorted(_planar_problems(constraints, positive_sums, planes, mag).items(),
                            key=lambda kv: str(kv[0])):
        status, _ = planar_search(prob, node_limit, mag)
        if status is Status.CONTRADICTION:
            edges = set(prob.edges)
            used = [c for c in constraints if {*c.left, *c.right} <= edges]
            sums = [p for p, _ in prob.sums]
            sub = {k: v for k, v in planes.items() if v == lab}
            cert = Certificate("planar", used, sums, note=(
                f"the {len(edges)} forms of one plane admit no directions and flips matching "
                f"the forced wedge signs"), planes=sub)
            return PropagationResult(Status.CONTRADICTION, cert, sys)
        # an exhausted node budget refutes nothing, so it leaves the verdict alone
    return result


def propagate(constraints: Sequence[WedgeConstraint], positive_sums: Sequence[PositiveSum] = (),
              exhaust_limit: int = 20, magnitudes: bool = True, planes: dict | None = None,
              node_limit: int = 200_000) -> PropagationResult:
    """Consistent, or Contradiction with a replayable certificate.

    With ``planes`` (wedge pair -> plane label) the sign data of each plane is also
    tested for realizability by actual directions, see :func:`planar_search`.
    """
    sys = _GF2System()
    for c in constraints:
        row, rhs = _equation(sys, c)
        bad = sys.add(row, rhs)
        if bad is not None:
            used = [constraints[k] for k in range(len(constraints)) if bad >> k & 1]
            cert = Certificate("linear", used, note=f"{len(used)} relations compose to X = -X")
            return PropagationResult(Status.CONTRADICTION, cert, sys)
    mag = MagnitudeSystem(constraints) if magnitudes else None

    def done() -> PropagationResult:
        if planes:
            return _planar_stage(constraints, positive_sums, planes, sys, mag, node_limit)
        return PropagationResult(Status.CONSISTENT, None, sys)

    if not positive_sums:
        return done()

    def term_bits(ps: PositiveSum, k: int) -> tuple[int, int]:
        row, rhs = 0, _bit(ps.term_signs()[k])
        for pr in ps.terms[k]:
            i, oi = _node(sys, pr)
            row ^= 1 << i
            rhs ^= oi
        return row, rhs

    # per sum: sign of each term relative to the first (affine in free bits) and the
    # classes of terms whose magnitudes are forced equal
    plans = []
    for ps in positive_sums:
        r0, b0 = term_bits(ps, 0)
        rows = [(0, 0)]
        for k in range(1, len(ps.terms)):
            rk, bk = term_bits(ps, k)
            row, rhs, _ = sys.reduce_full(r0 ^ rk, b0 ^ bk)
            rows.append((row, rhs))
        plans.append((rows, mag.equal_classes(ps) if mag else [[k] for k in range(len(ps.terms))]))
    free_bits = sorted({b for rows, _ in plans for row, _ in rows for b in range(row.bit_length()) if row >> b & 1})
    if len(free_bits) > exhaust_limit:
        return PropagationResult(Status.UNRESOLVED, Certificate(
            "positive_sum", list(constraints), list(positive_sums),
            note=f"{len(free_bits)} free signs exceed the exhaustive limit"), sys)

    def can_vanish(rows, classes, mask) -> bool:
        sig = [1 - 2 * ((bin(row & mask).count("1") & 1) ^ rhs) for row, rhs in rows]
        totals = [sum(sig[k] for k in cl) for cl in classes]
        # equal-magnitude classes contribute (class total) * (free positive magnitude)
        return all(t == 0 for t in totals) or (any(t > 0 for t in totals) and any(t < 0 for t in totals))

    lp = _DominanceLP(mag) if mag else None
    vecs = [[mag._vector(mag._keys(t, ps.gamma_weighted)) for t in ps.terms] if mag else None
            for ps in positive_sums]

    def dominance_ok(mask) -> bool:
        if lp is None:
            return True
        rows = set()
        for (rows_k, classes), vk in zip(plans, vecs):
            sig = [1 - 2 * ((bin(row & mask).count("1") & 1) ^ rhs) for row, rhs in rows_k]
            rows.update((vk[i] - vk[j]).tobytes() for i, j in _dominance(sig, classes))
        return lp.feasible(frozenset(rows))

    for bits in itertools.product((0, 1), repeat=len(free_bits)):
        mask = sum(1 << b for b, v in zip(free_bits, bits) if v)
        if all(can_vanish(rows, classes, mask) for rows, classes in plans) and dominance_ok(mask):
            return done()
    cert = Certificate("positive_sum", list(constraints), list(positive_sums),
                       note="for every admissible sign choice some sum of nonzero terms cannot vanish")
    return PropagationResult(Status.CONTRADICTION, cert, sys)


class MagnitudeSystem:
    """Linear relations between log|wedge| and log(gamma).

    Loop relations hold with coefficient exactly +-1, and a two-path relation reads
    sqrt(g g) |W| = sqrt(g' g') |W'|.  All equations are homogeneous, so a log-magnitude
    difference fixed by them is zero.
    """

    def __init__(self, constraints: Sequence[WedgeConstraint]):
        self.index: dict = {}
        rows = []
        for c in constraints:
            r = {}
            for side, sgn in ((c.left, 1.0), (c.right, -1.0)):
                key = ("w", tuple(sorted(side)))
                r[key] = r.get(key, 0.0) + sgn
                if c.loop is None:
                    for e in side:
                        r[("g", e)] = r.get(("g", e), 0.0) + 0.5 * sgn
            rows.append(r)
        for r in rows:
            for key in r:
                self.index.setdefault(key, len(self.index))
        self._rows = rows
        self._refresh()

    def _refresh(self):
        n = len(self.index)
        M = np.zeros((len(self._rows), n))
        for i, r in enumerate(self._rows):
            for key, v in r.items():
                M[i, self.index[key]] += v
        if M.size:
            _, sv, vt = np.linalg.svd(M, full_matrices=False)
            rank = int(np.sum(sv > 1e-10 * max(1.0, sv[0] if sv.size else 1.0)))
            self._basis = vt[:rank]
        else:
            self._basis = np.zeros((0, n))

    def _keys(self, term: tuple, weighted: bool) -> list:
        keys = [("w", tuple(sorted(pr))) for pr in term]
        if weighted:
            keys += [("g", e) for pr in term for e in pr]
        return keys

    def _vector(self, keys: list) -> np.ndarray:
        v = np.zeros(len(self.index))
        for k in keys:
            v[self.index[k]] += 0.5 if k[0] == "g" else 1.0
        return v

    def fixed_equal(self, u: np.ndarray, v: np.ndarray) -> bool:
        d = u - v
        if not np.any(d):
            return True
        proj = self._basis.T @ (self._basis @ d)
        return bool(np.linalg.norm(d - proj) < 1e-9 * max(1.0, np.linalg.norm(d)))

    def equal_classes(self, ps: PositiveSum) -> list[list[int]]:
        keys = [self._keys(t, ps.gamma_weighted) for t in ps.terms]
        new = [k for ks in keys for k in ks if k not in self.index]
        if new:
            for k in new:
                self.index.setdefault(k, len(self.index))
            self._refresh()
        vecs = [self._vector(ks) for ks in keys]
        classes: list[list[int]] = []
        for k, v in enumerate(vecs):
            for cl in classes:
                if self.fixed_equal(vecs[cl[0]], v):
                    cl.append(k)
                    break
            else:
                classes.append([k])
        return classes


# ---------------------------------------------------------- orientation search

def valid_orientations(graph: ConnectivityGraph, loops: Sequence[FourLoop] | None = None) -> list[Orientation]:
    """All orientations for which every 4-loop is bipartite or non-bipartite."""
    loops = enumerate_four_loops(graph) if loops is None else loops
    edges = list(graph.edges)
    idx = {e: i for i, e in enumerate(edges)}
    closing: dict[int, list] = {}
    for lp in loops:
        q = lp.vertices
        last = max(idx[e] for e in lp.edges)
        closing.setdefault(last, []).append(q)
    out = []
    signs = [0] * len(edges)

    def sign_of(a, b):
        s = signs[idx[edge_key(a, b)]]
        return s if a < b else -s

    def rec(k):
        if k == len(edges):
            out.append(Orientation(graph, dict(zip(edges, signs))))
            return
        for s in (1, -1):
            signs[k] = s
            if all(sum(sign_of(q[i], q[(i + 1) % 4]) for i in range(4)) == 0 for q in closing.get(k, [])):
                rec(k + 1)
        signs[k] = 0

    rec(0)
    return out


def canonical_orientation(orient: Orientation, autos: Sequence[tuple], with_reversal: bool = True) -> tuple:
    edges = orient.graph.edges
    best = None
    for perm in autos:
        img = {}
        for (a, b) in edges:
            s = orient.sign(a, b)
            pa, pb = perm[a], perm[b]
            img[edge_key(pa, pb)] = s if pa < pb else -s
        t = tuple(img[e] for e in edges)
        for cand in ((t, tuple(-x for x in t)) if with_reversal else (t,)):
            if best is None or cand < best:
                best = cand
    return best


def orientation_classes(graph: ConnectivityGraph, orients: Iterable[Orientation]) -> list[Orientation]:
    """One representative per class under graph automorphisms and global reversal."""
    orients = list(orients)
    if not orients:
        return []
    edges = list(graph.edges)
    E = len(edges)
    idx = {e: i for i, e in enumerate(edges)}
    S = np.array([o.as_tuple() for o in orients], dtype=np.int64)
    if E > 62:
        keys = [canonical_orientation(o, automorphisms(graph)) for o in orients]
    else:
        weights = (1 << np.arange(E - 1, -1, -1, dtype=np.int64))
        best = None
        for perm in automorphisms(graph):
            # orientation image: edge e=(a,b) maps to (pa,pb), sign flips if the order swaps
            src = np.empty(E, dtype=np.int64)
            flip = np.empty(E, dtype=np.int64)
            for (a, b) in edges:
                pa, pb = perm[a], perm[b]
                k = idx[edge_key(pa, pb)]
                src[k] = idx[(a, b)]
                flip[k] = 1 if pa < pb else -1
            img = S[:, src] * flip
            for cand in (img, -img):
                code = ((cand > 0).astype(np.int64) * weights).sum(axis=1)
                best = code if best is None else np.minimum(best, code)
        keys = [tuple(1 if (int(c) >> (E - 1 - k)) & 1 else -1 for k in range(E)) for c in best]
    seen = {}
    for key in keys:
        if key not in seen:
            seen[key] = Orientation(graph, dict(zip(edges, key)))
    return [seen[k] for k in sorted(seen)]


# --------------------------------------------------------------------- verdicts

class Result(enum.Enum):
    NO_SOLUTION = "NoSolution"
    CANDIDATE = "Candidate"
    UNRESOLVED = "Unresolved"


@dataclass
class OrientationVerdict:
    orientation: Orientation
    status: Status
    certificate: Certificate | None = None

    def as_dict(self) -> dict:
        g = self.orientation.graph
        return {"orientation": {f"{a}-{b}": s for (a, b), s in zip(g.edges, self.orientation.as_tuple())},
                "status": self.status.value,
                "certificate": self.certificate.as_dict() if self.certificate else None}


@dataclass
class Verdict:
    graph: str
    result: Result
    orientations: list = field(default_factory=list)
    certificate: Certificate | None = None

    @property
    def candidates(self) -> list[Orientation]:
        return [v.orientation for v in self.orientations if v.status is Status.CONSISTENT]

    def as_dict(self) -> dict:
        return {"graph": self.graph, "result": self.result.value,
                "certificate": self.certificate.as_dict() if self.certificate else None,
                "orientations": [v.as_dict() for v in self.orientations]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)

    def transcript(self) -> str:
        lines = [f"{self.graph}: {self.result.value}"]
        if self.certificate:
            lines += ["  " + t for t in self.certificate.transcript()]
        for k, v in enumerate(self.orientations):
            lines.append(f"  orientation {k}: {v.status.value}")
            if v.certificate:
                lines += ["    " + t for t in v.certificate.transcript()]
        return "\n".join(lines)


def screen_orientation(graph: ConnectivityGraph, orient: Orientation,
                       loops: Sequence[FourLoop] | None = None) -> OrientationVerdict:
    loops = enumerate_four_loops(graph) if loops is None else loops
    bad = [lp.vertices for lp in loops if lp.classify(orient) is LoopClass.INVALID]
    if bad:
        return OrientationVerdict(orient, Status.CONTRADICTION, Certificate(
            "loop", note=f"loop {bad[0]} has three arrows one way round; its cycle condition "
                         f"would equate a rank-1 form with a rank-2 form"))
    binary, multi = generate_constraints(graph, orient, loops)
    res = propagate(binary, multi, planes=plane_classes(graph, loops))
    return OrientationVerdict(orient, res.status, res.certificate)


def screen(graph: ConnectivityGraph, orientations: Sequence[Orientation] | None = None,
           open_problem: bool = False) -> Verdict:
    """Verdict over all orientation classes (or the given ones).

    With ``open_problem`` a consistent orientation is reported as Unresolved rather than
    Candidate, since sign consistency alone does not prove a family exists.
    """
    rep = screen_graph(graph)
    if not rep.passed:
        why = "triangle" if not rep.triangle_free else "edge pair outside every 4-loop"
        return Verdict(graph.name, Result.NO_SOLUTION, [], Certificate(
            "property", note=f"{why}: {rep.offending[0]}"))
    loops = enumerate_four_loops(graph)
    if orientations is None:
        orientations = orientation_classes(graph, valid_orientations(graph, loops))
        if not orientations:
            return Verdict(graph.name, Result.NO_SOLUTION, [], Certificate(
                "loop", note="no orientation makes every 4-loop bipartite or non-bipartite"))
    verdicts = [screen_orientation(graph, o, loops) for o in orientations]
    if open_problem:
        for v in verdicts:
            if v.status is Status.CONSISTENT:
                v.status = Status.UNRESOLVED
    if any(v.status is Status.CONSISTENT for v in verdicts):
        result = Result.CANDIDATE
    elif any(v.status is Status.UNRESOLVED for v in verdicts):
        result = Result.UNRESOLVED
    else:
        result = Result.NO_SOLUTION
    return Verdict(graph.name, result, verdicts)


def _fan_type2_orientations(m: int) -> list[Orientation]:
    g = fan(m)
    return orientation_classes(g, [fan_orientation(g, m, l) for l in range(0, m + 1)])


CATALOG = ("square", "square_bipartite", "cube", "hypercube4", "fan(4)", "fan_type_II(4)",
           "fan_type_I(3)", "fan_type_I(4)", "double_fan", "double_pentagon", "double_hexagon",
           "square_with_ears", "mobius_ladder", "cube_plus_1", "cube_plus_2", "cube_plus_3")


def screen_named(name: str) -> Verdict:
    if name == "square_bipartite":
        g = square()
        v = screen(g, [bipartite_square_orientation(g)])
        v.graph = name
        return v
    if name.startswith("fan_type_I(") and not name.startswith("fan_type_II("):
        m = int(name[len("fan_type_I("):-1])
        g = fan(m)
        v = screen(g, [fan_type1_orientation(g, m)])
        v.graph = name
        return v
    if name.startswith("fan_type_II("):
        m = int(name[len("fan_type_II("):-1])
        v = screen(fan(m), _fan_type2_orientations(m))
        v.graph = name
        return v
    g = named_graph(name)
    return screen(g, open_problem=name in ("cube_plus_2", "cube_plus_3"))


def screen_catalog(names: Sequence[str] = CATALOG) -> dict[str, Verdict]:
    return {n: screen_named(n) for n in names}


def fan_orientation_parameters(orient: Orientation, m: int) -> tuple[str, int]:
    """('II', l) with l sinks among the a-vertices, or ('I', 0) when every a-vertex is intermediate."""
    sinks = 0
    for j in range(m):
        s0, s1 = orient.sign(2 + j, 0), orient.sign(2 + j, 1)
        if s0 != s1:
            return "I", 0
        sinks += s0 > 0
    return "II", sinks


# ------------------------------------------------------- screener -> builder

def template_family(graph: ConnectivityGraph, orient: Orientation):
    """Build the template family whose orientation is equivalent to ``orient``.

    Equivalence allows graph automorphisms and global reversal (t -> -t).  Raises
    ValueError for graphs without a template or orientations the template misses.
    """
    from . import family_builder as fb

    name = graph.name
    if name == "square":
        fam = fb.build_square((1.0, 0.3), (0.2, 1.0), theta=0.4)
    elif name == "cube":
        fam = fb.build_cube((0.2, 0.3, 0.4))
    elif name == "hypercube4":
        tau = {(1, 2): 0.2, (1, 3): 0.1, (1, 4): -0.15, (2, 3): 0.05, (2, 4): 0.1, (3, 4): 0.2}
        fam = fb.build_hypercube4(tau)
    elif name.startswith("fan("):
        m = (graph.n_vertices - 2)
        kind, l = fan_orientation_parameters(orient, m)
        if kind != "II" or l in (0, m):
            raise ValueError(f"no template for fan orientation {kind}, l={l}")
        if l == 1 and m > 2:
            l = m - 1          # same class after reversal
        gammas = [float(m - l)] * l + [float(l)] * (m - l)
        fam = fb.build_fan(m, l, [[1.0, 0.2], [0.3, 1.0]], [0.3] * (m - 1), gammas)
    else:
        raise ValueError(f"no template family for graph {name!r}")
    if tuple(fam.graph.edges) != tuple(graph.edges):
        raise ValueError("template graph labels differ from the screened graph")
    autos = automorphisms(graph)
    if canonical_orientation(fam.orientation, autos) != canonical_orientation(orient, autos):
        raise ValueError("template orientation is not equivalent to the candidate")
    return fam
