# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 5(4) stepper for the interaction-picture LZ propagator.

i dphi/dt = V(t) phi,  V_ab = A_ab exp(i(theta_a - theta_b)),  theta_a = b_a t^2/2 + a_a t.
The state is the full N x N propagator; every column is stepped together.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, fabs, fmax, fmin, pow

cnp.import_array()

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784, B6 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40


cdef void rhs(double t, double[::1] a, double[::1] b, double[:, ::1] cpl,
              double complex[:, ::1] y, double complex[:, ::1] out,
              double complex[::1] e, double complex[::1] tmp) noexcept nogil:
    cdef Py_ssize_t n = a.shape[0], i, j, k
    cdef double th
    cdef double complex acc
    for i in range(n):
        th = 0.5 * b[i] * t * t + a[i] * t
        e[i] = cos(th) + 1j * sin(th)
    for k in range(n):
        for j in range(n):
            tmp[j] = e[j].conjugate() * y[j, k]
        for i in range(n):
            acc = 0
            for j in range(n):
                acc = acc + cpl[i, j] * tmp[j]
            out[i, k] = -1j * e[i] * acc


def dp45_propagate(double[::1] a, double[::1] b, double[:, ::1] cpl, double t0, double t1,
                   double rtol=1e-9, double atol=1e-12, double h0=0.0, long max_steps=50_000_000):
    """Propagator U_I(t1, t0) in the interaction picture; returns (U, accepted, rejected)."""
    cdef Py_ssize_t n = a.shape[0], i, k
    y_arr = np.eye(n, dtype=np.complex128)
    cdef double complex[:, ::1] y = y_arr
    cdef double complex[:, ::1] yn = np.empty((n, n), np.complex128)
    cdef double complex[:, ::1] ys = np.empty((n, n), np.complex128)
    cdef double complex[:, ::1] k1 = np.empty((n, n), np.complex128)
    cdef double complex[:, ::1] k2 = np.empty((n, n), np.complex128)
    cdef double complex[:, ::1] k3 = np.empty((n, n), np.complex128)
    cdef double complex[:, ::1] k4 = np.empty((n, n), np.complex128)
    cdef double complex[:, ::1] k5 = np.empty((n, n), np.complex128)
    cdef double complex[:, ::1] k6 = np.empty((n, n), np.complex128)
    cdef double complex[:, ::1] k7 = np.empty((n, n), np.complex128)
    cdef double complex[::1] e = np.empty(n, np.complex128)
    cdef double complex[::1] tmp = np.empty(n, np.complex128)
    cdef double t = t0, h, err, sc, d, fac, span = t1 - t0
    cdef long accepted = 0, rejected = 0
    cdef double complex[:, ::1] swap
    if span <= 0:
        raise ValueError("t1 must exceed t0")
    h = h0 if h0 > 0 else fmin(1e-2, span)
    with nogil:
        rhs(t, a, b, cpl, y, k1, e, tmp)
        while t < t1:
            if accepted + rejected >= max_steps:
                break
            if t + h > t1:
                h = t1 - t
            for i in range(n):
                for k in range(n):
                    ys[i, k] = y[i, k] + h * A21 * k1[i, k]
            rhs(t + C2 * h, a, b, cpl, ys, k2, e, tmp)
            for i in range(n):
                for k in range(n):
                    ys[i, k] = y[i, k] + h * (A31 * k1[i, k] + A32 * k2[i, k])
            rhs(t + C3 * h, a, b, cpl, ys, k3, e, tmp)
            for i in range(n):
                for k in range(n):
                    ys[i, k] = y[i, k] + h * (A41 * k1[i, k] + A42 * k2[i, k] + A43 * k3[i, k])
            rhs(t + C4 * h, a, b, cpl, ys, k4, e, tmp)
            for i in range(n):
                for k in range(n):
                    ys[i, k] = y[i, k] + h * (A51 * k1[i, k] + A52 * k2[i, k] + A53 * k3[i, k]
                                              + A54 * k4[i, k])
            rhs(t + C5 * h, a, b, cpl, ys, k5, e, tmp)
            for i in range(n):
                for k in range(n):
                    ys[i, k] = y[i, k] + h * (A61 * k1[i, k] + A62 * k2[i, k] + A63 * k3[i, k]
                                              + A64 * k4[i, k] + A65 * k5[i, k])
            rhs(t + h, a, b, cpl, ys, k6, e, tmp)
            for i in range(n):
                for k in range(n):
                    yn[i, k] = y[i, k] + h * (B1 * k1[i, k] + B3 * k3[i, k] + B4 * k4[i, k]
                                              + B5 * k5[i, k] + B6 * k6[i, k])
            rhs(t + h, a, b, cpl, yn, k7, e, tmp)
            err = 0.0
            for i in range(n):
                for k in range(n):
                    sc = atol + rtol * fmax(abs(y[i, k]), abs(yn[i, k]))
                    d = abs(h * (E1 * k1[i, k] + E3 * k3[i, k] + E4 * k4[i, k] + E5 * k5[i, k]
                                 + E6 * k6[i, k] + E7 * k7[i, k])) / sc
                    err = err + d * d
            err = sqrt(err / (n * n))
            if err <= 1.0:
                t = t + h
                swap = y
                y = yn
                yn = swap
                swap = k1
                k1 = k7
                k7 = swap
                accepted += 1
                fac = 5.0 if err == 0 else fmin(5.0, 0.9 * pow(err, -0.2))
            else:
                rejected += 1
                fac = fmax(0.2, 0.9 * pow(err, -0.2))
            h = h * fac
    if t < t1:
        raise RuntimeError(f"step budget exhausted at t={t} (target {t1})")
    return np.asarray(y).copy(), accepted, rejected
