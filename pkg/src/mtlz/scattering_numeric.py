"""Numerical scattering oracle: propagate i dpsi/dt = (A + B t) psi across a large window.

Probabilities use the convention P[b, a] = |S[b, a]|^2, the probability to end in
diabatic state b when starting in a.  The boundary states at +-T are the adiabatic
eigenvectors of H(+-T) matched to diabatic labels, which removes most of the
algebraic finite-window error.
"""
from __future__ import annotations

import enum
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import linear_sum_assignment

from .hamiltonian_engine import LinearHamiltonian, as_linear
from . import _propagate_py

try:
    if os.environ.get("MTLZ_PURE_PYTHON"):
        raise ImportError("pure-python kernel requested")
    from ._propagate import dp45_propagate as _compiled_kernel
    KERNEL = "cython"
except ImportError:  # pragma: no cover - depends on the build
    _compiled_kernel = None
    KERNEL = "python"


def get_kernel(name: str | None = None):
    """Stepper by name ('cython' or 'python'); default is the import-time choice."""
    name = name or KERNEL
    if name == "cython":
        if _compiled_kernel is None:
            raise RuntimeError("compiled kernel unavailable")
        return _compiled_kernel
    if name == "python":
        return _propagate_py.dp45_propagate
    raise ValueError(f"unknown kernel {name!r}")


class ConvergenceError(RuntimeError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class Frame(enum.Enum):
    DIABATIC = "diabatic"
    INTERACTION = "interaction"


@dataclass
class PropagationConfig:
    T: float = 60.0
    rtol: float = 1e-9
    atol: float = 1e-12
    frame: Frame = Frame.INTERACTION
    richardson_levels: int = 0
    error_bound: float | None = None
    kernel: str | None = None
    estimate_error: bool = True

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        for tol in (self.rtol, self.atol):
            if not 0 < tol <= 1e-3:
                raise ValueError("tolerances must lie in (0, 1e-3]")
        if isinstance(self.frame, str):
            self.frame = Frame(self.frame)


@dataclass
class NumericScattering:
    P: np.ndarray
    error_estimate: np.ndarray
    S: np.ndarray
    T: float
    steps: int
    meta: dict = field(default_factory=dict)

    @property
    def max_error(self) -> float:
        return float(np.max(self.error_estimate))

    def unitarity_defect(self) -> float:
        return float(max(np.max(np.abs(self.P.sum(axis=0) - 1)), np.max(np.abs(self.P.sum(axis=1) - 1))))


def _boundary_basis(H: LinearHamiltonian, t: float) -> np.ndarray:
    """Adiabatic eigenvectors of H(t), column a matched to diabatic state a."""
    _, vecs = np.linalg.eigh(H(t))
    row, col = linear_sum_assignment(-np.abs(vecs))
    basis = np.empty_like(vecs)
    basis[:, row] = vecs[:, col]
    return basis


def _phase(H: LinearHamiltonian, t: float) -> np.ndarray:
    a, b = np.diag(H.A), H.slopes
    return np.exp(-1j * (0.5 * b * t * t + a * t))


def _scatter_once(H: LinearHamiltonian, T: float, rtol: float, atol: float,
                  frame: Frame, kernel) -> tuple[np.ndarray, int]:
    Vm = _boundary_basis(H, -T)
    Vp = _boundary_basis(H, T)
    if frame is Frame.INTERACTION:
        a, b = np.diag(H.A).copy(), H.slopes
        cpl = np.ascontiguousarray(H.A - np.diag(np.diag(H.A)))
        U_I, acc, _ = kernel(a, b, cpl, -T, T, rtol, atol)
        U = _phase(H, T)[:, None] * U_I * _phase(H, -T).conj()[None, :]
        steps = acc
    else:
        n = H.n

        def f(t, y):
            return (-1j * (H(t) @ y.reshape(n, n))).ravel()

        sol = solve_ivp(f, (-T, T), np.eye(n, dtype=complex).ravel(), method="DOP853",
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise ConvergenceError(sol.message)
        U = sol.y[:, -1].reshape(n, n)
        steps = int(sol.t.size)
    S = Vp.conj().T @ U @ Vm
    return S, steps


def propagate(H: Callable[[float], np.ndarray] | LinearHamiltonian,
              cfg: PropagationConfig | None = None) -> NumericScattering:
    """Scattering probabilities of H(t) = A + B t between t = -T and T."""
    cfg = cfg or PropagationConfig()
    lin = as_linear(H)
    if lin.n == 1:
        one = np.ones((1, 1))
        return NumericScattering(one, np.zeros((1, 1)), one.astype(complex), cfg.T, 0)
    kernel = get_kernel(cfg.kernel) if cfg.frame is Frame.INTERACTION else None
    S, steps = _scatter_once(lin, cfg.T, cfg.rtol, cfg.atol, cfg.frame, kernel)
    P = np.abs(S) ** 2
    err = np.zeros_like(P)
    meta = {"T": cfg.T, "rtol": cfg.rtol, "atol": cfg.atol, "frame": cfg.frame.value,
            "kernel": KERNEL if kernel is not None and cfg.kernel is None else cfg.kernel}
    if cfg.estimate_error:
        S_tol, s2 = _scatter_once(lin, cfg.T, cfg.rtol / 10, cfg.atol / 10, cfg.frame, kernel)
        S_half, s3 = _scatter_once(lin, cfg.T / 2, cfg.rtol, cfg.atol, cfg.frame, kernel)
        P_tol, P_half = np.abs(S_tol) ** 2, np.abs(S_half) ** 2
        err = np.abs(P - P_tol) + np.abs(P - P_half)
        steps += s2 + s3
        if cfg.richardson_levels > 0:
            # two-point extrapolation in 1/T
            P = 2 * P - P_half
            meta["richardson"] = True
        P = P_tol if cfg.richardson_levels == 0 else P
    if cfg.error_bound is not None and np.max(err) > cfg.error_bound:
        res = NumericScattering(P, err, S, cfg.T, steps, meta)
        raise ConvergenceError(f"error estimate {np.max(err):.3g} above bound {cfg.error_bound:.3g}", res)
    return NumericScattering(P, err, S, cfg.T, steps, meta)


@dataclass
class ConvergenceReport:
    T: list
    P: list
    deltas: list
    decay_exponent: float
    extrapolated: np.ndarray
    confidence: float
    monotone: bool

    def as_dict(self) -> dict:
        return {"T": list(self.T), "deltas": list(self.deltas), "decay_exponent": self.decay_exponent,
                "confidence": self.confidence, "monotone": self.monotone,
                "extrapolated": self.extrapolated.tolist()}


def convergence_study(H, cfg: PropagationConfig | None, T_list: Sequence[float]) -> ConvergenceReport:
    """P(T) over increasing windows; fits the decay of successive differences."""
    cfg = cfg or PropagationConfig()
    T_list = [float(t) for t in T_list]
    if any(b <= a for a, b in zip(T_list, T_list[1:])):
        raise ValueError("T_list must be increasing")
    Ps = []
    for T in T_list:
        c = PropagationConfig(T=T, rtol=cfg.rtol, atol=cfg.atol, frame=cfg.frame,
                              kernel=cfg.kernel, estimate_error=False)
        Ps.append(propagate(H, c).P)
    deltas = [float(np.max(np.abs(b - a))) for a, b in zip(Ps, Ps[1:])]
    monotone = all(d2 <= d1 * 1.05 + 1e-14 for d1, d2 in zip(deltas, deltas[1:]))
    if not monotone:
        warnings.warn("non-monotone convergence in T", RuntimeWarning)
    nz = [(T, d) for T, d in zip(T_list[1:], deltas) if d > 0]
    if len(nz) >= 2:
        x = np.log([T for T, _ in nz])
        y = np.log([d for _, d in nz])
        slope = float(np.polyfit(x, y, 1)[0])
    else:
        slope = float("nan")
    extrap = Ps[-1]
    confidence = deltas[-1] if deltas else 0.0
    return ConvergenceReport(T_list, Ps, deltas, -slope if slope == slope else slope,
                             extrap, confidence, monotone)


def lz_two_state(beta: float, g: float) -> LinearHamiltonian:
    """H = [[beta t, g], [g, -beta t]]."""
    return LinearHamiltonian(np.array([[0.0, g], [g, 0.0]]), np.diag([beta, -beta]))


def lz_stay_probability(gamma: float) -> float:
    return math.exp(-2 * math.pi * gamma)


def direct_product_probability(ps: Sequence[float]) -> np.ndarray:
    """Kronecker product of 2x2 LZ probability matrices [[p, q], [q, p]]."""
    out = np.ones((1, 1))
    for p in ps:
        out = np.kron(out, np.array([[p, 1 - p], [1 - p, p]]))
    return out
