"""Concrete Hamiltonian matrices of an MTLZ family, time-path restriction and spectral scans."""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize_scalar

from .family_builder import MTLZFamily


@dataclass
class HamiltonianFamily:
    """H_j(x) = B_{kj} x^k + A_j with diagonal B.

    B[k, j] holds the diagonal of B_{kj}, so B[k, j, a] = Lambda^a_{kj};
    A[j] is the N x N coupling matrix of direction j.
    """
    B: np.ndarray
    A: np.ndarray
    validated: bool = True
    labels: tuple = ()

    @property
    def n_states(self) -> int:
        return self.A.shape[1]

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def H(self, j: int, x) -> np.ndarray:
        x = np.asarray(x, float)
        return np.diag(np.einsum("k,ka->a", x, self.B[:, j])) + self.A[j]

    def all_H(self, x) -> list[np.ndarray]:
        return [self.H(j, x) for j in range(self.dim)]

    def B_matrix(self, k: int, j: int) -> np.ndarray:
        return np.diag(self.B[k, j])


def assemble(family: MTLZFamily, validated: bool = True) -> HamiltonianFamily:
    n, m = family.n_states, family.dim
    B = np.zeros((m, m, n))
    for a, L in family.lam.items():
        B[:, :, a] = L
    A = np.zeros((m, n, n))
    for (a, b), form in family.coupling.items():
        A[:, a, b] = form
        A[:, b, a] = form
    return HamiltonianFamily(B, A, validated)


def from_matrices(B_full: np.ndarray, A: np.ndarray) -> HamiltonianFamily:
    """Wrap explicit matrices; B_full[k, j] must be diagonal N x N."""
    B_full = np.asarray(B_full, float)
    diag = np.einsum("kjaa->kja", B_full)
    off = B_full - np.einsum("kja,ab->kjab", diag, np.eye(B_full.shape[-1]))
    if np.max(np.abs(off), initial=0.0) > 0:
        raise ValueError("B_{kj} must be diagonal in the stored basis")
    return HamiltonianFamily(diag, np.asarray(A, float))


@dataclass
class IntegrabilityResiduals:
    commutator: dict
    curl: dict
    structural: dict
    scale: float

    @property
    def max_commutator(self) -> float:
        return max(self.commutator.values(), default=0.0)

    @property
    def max_curl(self) -> float:
        return max(self.curl.values(), default=0.0)

    @property
    def max_structural(self) -> float:
        return max(self.structural.values(), default=0.0)

    def relative(self) -> tuple[float, float]:
        s = max(self.scale, 1e-300)
        return self.max_commutator / s ** 2, self.max_curl / s


def _comm(X, Y):
    return X @ Y - Y @ X


def integrability_residuals(hf: HamiltonianFamily, x) -> IntegrabilityResiduals:
    """Frobenius norms of [H_i, H_j] and dH_i/dx^j - dH_j/dx^i at x, plus the term-by-term
    matrix relations B_{kj} = B_{jk}, [B_{sj}, A_k] = [B_{sk}, A_j], [A_j, A_k] = 0."""
    Hs = hf.all_H(x)
    scale = max((float(np.linalg.norm(h, 2)) for h in Hs), default=1.0)
    comm, curl, struct = {}, {}, {}
    m = hf.dim
    for i, j in itertools.combinations(range(m), 2):
        comm[(i, j)] = float(np.linalg.norm(_comm(Hs[i], Hs[j])))
        # dH_i/dx^j = B_{ji}
        curl[(i, j)] = float(np.linalg.norm(hf.B[j, i] - hf.B[i, j]))
        struct[("AA", i, j)] = float(np.linalg.norm(_comm(hf.A[i], hf.A[j])))
        for s in range(m):
            d = _comm(hf.B_matrix(s, i), hf.A[j]) - _comm(hf.B_matrix(s, j), hf.A[i])
            struct[("BA", s, i, j)] = float(np.linalg.norm(d))
    return IntegrabilityResiduals(comm, curl, struct, scale)


# ------------------------------------------------------------------ time paths

@dataclass(frozen=True)
class TimePath:
    v: tuple
    eps: tuple

    def __post_init__(self):
        if len(self.v) != len(self.eps):
            raise ValueError("v and eps must have equal length")
        if not any(self.v):
            raise ValueError("velocity vector must be nonzero")

    def x(self, t: float) -> np.ndarray:
        return np.asarray(self.v, float) * t + np.asarray(self.eps, float)


@dataclass
class LinearHamiltonian:
    """H(t) = A + B t with real symmetric A and diagonal B."""
    A: np.ndarray
    B: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        return self.A + self.B * t

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def slopes(self) -> np.ndarray:
        return np.diag(self.B).copy()

    def batch(self, ts: np.ndarray) -> np.ndarray:
        return self.A[None] + np.asarray(ts)[:, None, None] * self.B[None]

    def scaled_couplings(self, factor: float) -> "LinearHamiltonian":
        d = np.diag(np.diag(self.A))
        return LinearHamiltonian(d + factor * (self.A - d), self.B.copy())


def restrict(hf: HamiltonianFamily, path: TimePath) -> LinearHamiltonian:
    v = np.asarray(path.v, float)
    e = np.asarray(path.eps, float)
    if len(v) != hf.dim:
        raise ValueError(f"path dimension {len(v)} != family dimension {hf.dim}")
    b_eff = np.einsum("i,k,kia->a", v, v, hf.B)
    a_diag = np.einsum("i,k,kia->a", v, e, hf.B)
    a_eff = np.einsum("i,iab->ab", v, hf.A) + np.diag(a_diag)
    return LinearHamiltonian(a_eff, np.diag(b_eff))


def as_linear(H: Callable[[float], np.ndarray] | LinearHamiltonian, probe=(0.0, 1.0, -2.7, 3.3),
              tol: float = 1e-10) -> LinearHamiltonian:
    """Recover (A, B) from a callable and check linearity by sampling."""
    if isinstance(H, LinearHamiltonian):
        return H
    A = np.asarray(H(0.0), float)
    B = np.asarray(H(1.0), float) - A
    for t in probe:
        err = np.max(np.abs(np.asarray(H(t)) - A - B * t))
        if err > tol * max(1.0, np.max(np.abs(A)) + abs(t) * np.max(np.abs(B))):
            raise ValueError(f"H(t) is not linear in t (deviation {err:.3g} at t={t})")
    if np.max(np.abs(B - np.diag(np.diag(B)))) > tol * max(1.0, np.max(np.abs(B))):
        raise ValueError("slope matrix is not diagonal")
    return LinearHamiltonian(A, B)


def zero_coupling_count(hf: HamiltonianFamily | LinearHamiltonian) -> int:
    if isinstance(hf, LinearHamiltonian):
        coupled = hf.A != 0
    else:
        coupled = np.any(hf.A != 0, axis=0)
    n = coupled.shape[0]
    iu = np.triu_indices(n, 1)
    return int(np.sum(~coupled[iu]))


# -------------------------------------------------------------- spectrum scans

@dataclass
class CrossingEvent:
    t: float
    levels: tuple          # contiguous sorted-level indices that meet
    gap: float
    exact: bool
    converged: bool = True

    @property
    def pairs(self) -> int:
        n = len(self.levels)
        return n * (n - 1) // 2 if self.exact else 0

    def as_dict(self) -> dict:
        return {"t": self.t, "levels": list(self.levels), "gap": self.gap,
                "exact": self.exact, "pairs": self.pairs, "converged": self.converged}


@dataclass
class SpectrumScan:
    t: np.ndarray
    eigenvalues: np.ndarray
    tracks: np.ndarray
    exact: list
    avoided: list
    unconverged: list = field(default_factory=list)
    scale: float = 1.0
    window: tuple = (0.0, 0.0)

    @property
    def exact_count(self) -> int:
        return sum(ev.pairs for ev in self.exact)

    def summary(self) -> dict:
        return {"window": list(self.window), "exact_pairwise_crossings": self.exact_count,
                "exact_points": len(self.exact), "avoided_crossings": len(self.avoided),
                "unconverged": len(self.unconverged), "scale": self.scale}

    def crossings_json(self) -> str:
        return json.dumps({"exact": [e.as_dict() for e in self.exact],
                           "avoided": [e.as_dict() for e in self.avoided],
                           "unconverged": [e.as_dict() for e in self.unconverged]}, indent=2)


def diabatic_crossing_times(H: LinearHamiltonian) -> np.ndarray:
    a, b = np.diag(H.A), H.slopes
    out = []
    for i, j in itertools.combinations(range(H.n), 2):
        db = b[i] - b[j]
        if db != 0:
            out.append(-(a[i] - a[j]) / db)
    return np.array(out)


def diabatic_clearance(H: LinearHamiltonian) -> float:
    """Smallest energy distance from a diabatic crossing point to any third diabatic level."""
    a, b = np.diag(H.A), H.slopes
    best = math.inf
    for i, j in itertools.combinations(range(H.n), 2):
        db = b[i] - b[j]
        if db == 0:
            continue
        t = -(a[i] - a[j]) / db
        E = a + b * t
        others = np.delete(np.abs(E - E[i]), [i, j])
        if others.size:
            best = min(best, float(others.min()))
    return best


def choose_generic_path(hf: HamiltonianFamily, trials: int = 200, seed: int = 0) -> TimePath:
    """Random path whose diabatic crossings stay furthest from triple points."""
    rng = np.random.default_rng(seed)
    best, best_path = -1.0, None
    for _ in range(trials):
        v = rng.normal(size=hf.dim)
        v /= np.linalg.norm(v)
        e = rng.normal(size=hf.dim)
        path = TimePath(tuple(v), tuple(e))
        H = restrict(hf, path)
        slopes = H.slopes
        spread = float(np.ptp(slopes)) or 1.0
        c = diabatic_clearance(H) / spread
        if c > best:
            best, best_path = c, path
    return best_path


def _auto_window(H: LinearHamiltonian) -> tuple[float, float]:
    ts = diabatic_crossing_times(H)
    if len(ts) == 0:
        return (-1.0, 1.0)
    lo, hi = float(ts.min()), float(ts.max())
    width = max(hi - lo, 1.0)
    return lo - 0.5 * width, hi + 0.5 * width


def _gap_minima(ts: np.ndarray, ev: np.ndarray) -> list[tuple[int, int]]:
    gaps = np.diff(ev, axis=1)
    out = []
    for k in range(gaps.shape[1]):
        g = gaps[:, k]
        idx = np.nonzero((g[1:-1] <= g[:-2]) & (g[1:-1] < g[2:]))[0] + 1
        out.extend((int(i), k) for i in idx)
    return out


def track_levels(H: Callable[[float], np.ndarray], ts: np.ndarray) -> np.ndarray:
    """Eigenvalue tracks ordered by eigenvector overlap with the previous grid point."""
    vals0, vecs0 = np.linalg.eigh(H(ts[0]))
    n = len(vals0)
    out = np.empty((len(ts), n))
    out[0] = vals0
    order = np.arange(n)
    prev = vecs0
    for i in range(1, len(ts)):
        vals, vecs = np.linalg.eigh(H(ts[i]))
        overlap = np.abs(prev.T @ vecs)
        row, col = linear_sum_assignment(-overlap)
        perm = np.empty(n, int)
        perm[row] = col
        prev = vecs[:, perm]
        out[i] = vals[perm]
    return out


def _dedup_events(events, t_tol):
    out = []
    for ev in sorted(events, key=lambda e: (e[1], e[0])):
        if out and out[-1][1] == ev[1] and abs(out[-1][0] - ev[0]) < t_tol:
            if ev[2] < out[-1][2]:
                out[-1] = ev
            continue
        out.append(ev)
    return out


def scan_spectrum(H: Callable[[float], np.ndarray] | LinearHamiltonian, t_range="auto",
                  grid: int = 4000, refine_tol: float = 1e-12, exact_rel: float = 1e-9,
                  max_doublings: int = 6, track: bool = False, fine_grid: int = 401) -> SpectrumScan:
    """Find level crossings of H(t): local minima of adjacent gaps refined by Brent's method.

    A refined gap below exact_rel * (spectral scale) is an exact crossing.
    """
    lin = as_linear(H) if not isinstance(H, LinearHamiltonian) else H
    auto = isinstance(t_range, str)
    lo, hi = _auto_window(lin) if auto else (float(t_range[0]), float(t_range[1]))
    for _ in range(max_doublings + 1):
        ts = np.linspace(lo, hi, grid)
        ev = np.linalg.eigvalsh(lin.batch(ts))
        minima = _gap_minima(ts, ev)
        if not auto:
            break
        quarter = 0.25 * (hi - lo)
        if all(lo + quarter < ts[i] < hi - quarter for i, _ in minima):
            break
        mid, half = 0.5 * (lo + hi), hi - lo
        lo, hi = mid - half, mid + half
    scale = float(np.max(np.abs(ev)))
    dt = ts[1] - ts[0]

    def gap_at(u, t0, k):
        # shifted coordinate: Brent's relative x-tolerance then stays negligible
        e = np.linalg.eigvalsh(lin(t0 + u))
        return e[k + 1] - e[k]

    # a coarse minimum can hide several crossings closer than one grid step, also in
    # the neighbouring gaps whose coarse samples then look monotone: rescan finely
    n_gaps = ev.shape[1] - 1
    candidates = set()
    for i, k in minima:
        fine = np.linspace(ts[i] - 2 * dt, ts[i] + 2 * dt, fine_grid)
        gaps = np.diff(np.linalg.eigvalsh(lin.batch(fine)), axis=1)
        step = fine[1] - fine[0]
        for kk in range(max(0, k - 1), min(n_gaps, k + 2)):
            g = gaps[:, kk]
            idx = np.nonzero((g[1:-1] <= g[:-2]) & (g[1:-1] < g[2:]))[0] + 1
            for j in idx:
                candidates.add((float(fine[j]), kk, float(step)))

    events = []
    for t0, k, step in sorted(candidates):
        res = minimize_scalar(gap_at, bounds=(-step, step), args=(t0, k), method="bounded",
                              options={"xatol": refine_tol * max(1.0, abs(t0)), "maxiter": 2000})
        events.append((t0 + float(res.x), k, float(res.fun), bool(res.success)))
    events = _dedup_events(events, 1e-9 * max(1.0, hi - lo))

    thresh = exact_rel * scale
    exact_raw = [e for e in events if e[2] < thresh]
    avoided = [CrossingEvent(t, (k, k + 1), g, False, ok) for t, k, g, ok in events if g >= thresh]
    # merge adjacent-level exact events at the same time into n-fold points
    exact_raw.sort(key=lambda e: (e[1], e[0]))
    used = [False] * len(exact_raw)
    merged = []
    t_tol = 1e-6 * max(1.0, hi - lo)
    for a, ea in enumerate(exact_raw):
        if used[a]:
            continue
        used[a] = True
        levels = [ea[1], ea[1] + 1]
        ts_ = [ea[0]]
        gmax, ok = ea[2], ea[3]
        grown = True
        while grown:
            grown = False
            for b, eb in enumerate(exact_raw):
                if used[b] or abs(eb[0] - np.mean(ts_)) > t_tol:
                    continue
                if eb[1] == levels[-1] or eb[1] + 1 == levels[0]:
                    used[b] = True
                    levels = sorted(set(levels) | {eb[1], eb[1] + 1})
                    ts_.append(eb[0])
                    gmax, ok = max(gmax, eb[2]), ok and eb[3]
                    grown = True
        merged.append(CrossingEvent(float(np.mean(ts_)), tuple(levels), gmax, True, ok))
    # the same crossing can be hit from two neighbouring grid minima
    dedup: list[CrossingEvent] = []
    for ev_ in sorted(merged, key=lambda e: e.t):
        if any(abs(ev_.t - d.t) < t_tol and set(ev_.levels) <= set(d.levels) for d in dedup):
            continue
        dedup = [d for d in dedup if not (abs(ev_.t - d.t) < t_tol and set(d.levels) < set(ev_.levels))]
        dedup.append(ev_)
    unconverged = [e for e in dedup + avoided if not e.converged]
    tracks = track_levels(lin, ts) if track else ev
    return SpectrumScan(ts, ev, tracks, dedup, avoided, unconverged, scale, (lo, hi))


def write_spectrum_csv(scan: SpectrumScan, path) -> None:
    n = scan.tracks.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"lambda_{i + 1}" for i in range(n)])
        for t, row in zip(scan.t, scan.tracks):
            w.writerow([repr(float(t))] + [repr(float(x)) for x in row])


def write_spectrum_svg(scan: SpectrumScan, path, width: int = 640, height: int = 420,
                       max_points: int = 800) -> None:
    """Plain SVG line plot of the eigenvalue tracks with exact crossings marked."""
    ts, ev = scan.t, scan.tracks
    step = max(1, len(ts) // max_points)
    ts, ev = ts[::step], ev[::step]
    t0, t1 = float(ts[0]), float(ts[-1])
    y0, y1 = float(ev.min()), float(ev.max())
    if y1 == y0:
        y1 = y0 + 1.0
    X = lambda t: 40 + (t - t0) / (t1 - t0) * (width - 60)
    Y = lambda y: height - 30 - (y - y0) / (y1 - y0) * (height - 50)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             '<rect width="100%" height="100%" fill="white"/>']
    for k in range(ev.shape[1]):
        pts = " ".join(f"{X(t):.2f},{Y(y):.2f}" for t, y in zip(ts, ev[:, k]))
        parts.append(f'<polyline fill="none" stroke="black" stroke-width="0.8" points="{pts}"/>')
    for e in scan.exact:
        level = float(np.interp(e.t, scan.t, scan.eigenvalues[:, e.levels[0]]))
        parts.append(f'<circle cx="{X(e.t):.2f}" cy="{Y(level):.2f}" r="2.5" fill="red"/>')
    parts.append(f'<text x="40" y="15" font-size="12">exact pairwise crossings: {scan.exact_count}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts))
