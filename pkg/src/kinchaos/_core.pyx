# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot kernels: O(N^2) pairwise mollified drift and grid deposition.

Only the d=1 phase space (the one used for all norm work) is specialized
here; `_core_py` provides the pure-Python twin with identical signatures.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, floor, pow


cdef inline double _smoothstep(double r) noexcept nogil:
    if r <= 1.0:
        return 1.0
    if r >= 2.0:
        return 0.0
    cdef double lo = exp(-1.0 / (r - 1.0))
    cdef double hi = exp(-1.0 / (2.0 - r))
    return hi / (hi + lo)


cdef inline double _force_1d(int kid, double x, double v, double g, double s,
                             double M, double eps, long* capped) noexcept nogil:
    cdef double r
    if kid == 0:
        return 0.0
    if kid == 1:  # smooth bounded, rational profile
        return -g * x / (1.0 + x * x + v * v)
    if kid == 2:  # smooth bounded, gaussian profile
        return -g * x * exp(-0.5 * (x * x + v * v))
    if kid == 3:  # velocity-only rational profile
        return -g * v / (1.0 + v * v)
    # kid == 4: riesz with velocity cutoff, d = 1
    r = fabs(x)
    if r < eps:
        capped[0] += 1
        if r == 0.0:
            return 0.0
        x = eps if x > 0.0 else -eps
        r = eps
    return -g * (s - 1.0) * x * pow(r, s - 3.0) * _smoothstep(fabs(v) / M)


def pairwise_drift_1d(double[::1] xt, double[::1] vt,
                      double[::1] xs, double[::1] vs,
                      double t,
                      double[::1] node_x, double[::1] node_v, double[::1] wq,
                      int kid, double g, double s, double M, double eps,
                      double[::1] out):
    """Mean mollified force on each target from all sources.

    out[i] = (1/Ns) sum_j sum_q wq[q] * b(dx - y_q - t w_q, dv - w_q).
    Returns the number of capped singular evaluations.
    """
    cdef Py_ssize_t nt = xt.shape[0], ns = xs.shape[0], nq = wq.shape[0]
    cdef Py_ssize_t i, j, q
    cdef double dx, dv, acc
    cdef long capped = 0
    cdef double inv_ns = 1.0 / ns
    with nogil:
        for i in range(nt):
            acc = 0.0
            for j in range(ns):
                dx = xt[i] - xs[j]
                dv = vt[i] - vs[j]
                for q in range(nq):
                    acc += wq[q] * _force_1d(
                        kid, dx - node_x[q] - t * node_v[q], dv - node_v[q],
                        g, s, M, eps, &capped)
            out[i] = acc * inv_ns
    return capped


def deposit_1d(double[::1] xs, double[::1] vs, double t,
               double lam, double alpha, double r_x, double r_v,
               double bump_mass,
               double x0, double dx_cell, double v0, double dv_cell,
               double[:, ::1] out):
    """Accumulate sum_i Gamma_t phi_N(Z_i - z) on the grid (caller divides by N).

    Deposition is clipped to the box; returns the number of particles whose
    mollifier support was not fully contained.
    """
    cdef Py_ssize_t n = xs.shape[0], nx = out.shape[0], nv = out.shape[1]
    cdef Py_ssize_t i, jx, jv, jx_lo, jx_hi, jv_lo, jv_hi
    cdef double amp = pow(lam, 2.0 + alpha)
    cdef double rx_n = r_x * pow(lam, -(1.0 + alpha))
    cdef double rv_n = r_v / lam
    cdef double inv_mass = 1.0 / bump_mass
    cdef double vd, xd, ax, av, bx, bv, xc
    cdef long leaked = 0
    cdef bint leak_i
    with nogil:
        for i in range(n):
            leak_i = 0
            jv_lo = <Py_ssize_t>floor((vs[i] - rv_n - v0) / dv_cell) + 1
            jv_hi = <Py_ssize_t>floor((vs[i] + rv_n - v0) / dv_cell)
            if jv_lo < 0:
                jv_lo = 0
                leak_i = 1
            if jv_hi > nv - 1:
                jv_hi = nv - 1
                leak_i = 1
            for jv in range(jv_lo, jv_hi + 1):
                vd = vs[i] - (v0 + jv * dv_cell)
                av = lam * vd / r_v
                if fabs(av) >= 1.0:
                    continue
                bv = exp(-1.0 / (1.0 - av * av)) * inv_mass / r_v
                xc = xs[i] - t * vd
                jx_lo = <Py_ssize_t>floor((xc - rx_n - x0) / dx_cell) + 1
                jx_hi = <Py_ssize_t>floor((xc + rx_n - x0) / dx_cell)
                if jx_lo < 0:
                    jx_lo = 0
                    leak_i = 1
                if jx_hi > nx - 1:
                    jx_hi = nx - 1
                    leak_i = 1
                for jx in range(jx_lo, jx_hi + 1):
                    xd = xc - (x0 + jx * dx_cell)
                    ax = pow(lam, 1.0 + alpha) * xd / r_x
                    if fabs(ax) >= 1.0:
                        continue
                    bx = exp(-1.0 / (1.0 - ax * ax)) * inv_mass / r_x
                    out[jx, jv] += amp * bx * bv
            if leak_i:
                leaked += 1
    return leaked
