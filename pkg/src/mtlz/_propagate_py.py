"""Pure-numpy twin of the compiled Dormand-Prince stepper (same API, same step control)."""
from __future__ import annotations

import numpy as np

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


def _rhs(t, a, b, cpl, y):
    th = 0.5 * b * t * t + a * t
    e = np.exp(1j * th)
    return -1j * e[:, None] * (cpl @ (e.conj()[:, None] * y))


def dp45_propagate(a, b, cpl, t0, t1, rtol=1e-9, atol=1e-12, h0=0.0, max_steps=50_000_000):
    a = np.ascontiguousarray(a, float)
    b = np.ascontiguousarray(b, float)
    cpl = np.ascontiguousarray(cpl, float)
    n = len(a)
    span = t1 - t0
    if span <= 0:
        raise ValueError("t1 must exceed t0")
    y = np.eye(n, dtype=complex)
    t = t0
    h = h0 if h0 > 0 else min(1e-2, span)
    k = [None] * 7
    k[0] = _rhs(t, a, b, cpl, y)
    accepted = rejected = 0
    while t < t1:
        if accepted + rejected >= max_steps:
            raise RuntimeError(f"step budget exhausted at t={t} (target {t1})")
        if t + h > t1:
            h = t1 - t
        for s in range(1, 6):
            ys = y + h * sum(c * k[j] for j, c in enumerate(_A[s]))
            k[s] = _rhs(t + _C[s] * h, a, b, cpl, ys)
        yn = y + h * sum(_B[j] * k[j] for j in range(6) if _B[j])
        k[6] = _rhs(t + h, a, b, cpl, yn)
        errv = h * sum(_E[j] * k[j] for j in range(7) if _E[j])
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(yn))
        err = float(np.sqrt(np.mean(np.abs(errv / sc) ** 2)))
        if err <= 1.0:
            t += h
            y = yn
            k[0] = k[6]
            accepted += 1
            fac = 5.0 if err == 0 else min(5.0, 0.9 * err ** -0.2)
        else:
            rejected += 1
            fac = max(0.2, 0.9 * err ** -0.2)
        h *= fac
    return y, accepted, rejected
