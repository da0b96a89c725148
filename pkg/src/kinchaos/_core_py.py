"""Pure-Python (numpy) twin of the compiled core, selected when the compiled
extension is unavailable. Same signatures, same semantics; slower."""

from __future__ import annotations

import numpy as np

HAVE_COMPILED = False

_CHUNK = 256


def _smoothstep(r):
    out = np.empty_like(r)
    lo_mask = r <= 1.0
    hi_mask = r >= 2.0
    mid = ~(lo_mask | hi_mask)
    out[lo_mask] = 1.0
    out[hi_mask] = 0.0
    rm = r[mid]
    lo = np.exp(-1.0 / (rm - 1.0))
    hi = np.exp(-1.0 / (2.0 - rm))
    out[mid] = hi / (hi + lo)
    return out


def _force_1d(kid, x, v, g, s, M, eps):
    """Vectorized 1d force; returns (values, capped_count)."""
    if kid == 0:
        return np.zeros_like(x), 0
    if kid == 1:
        return -g * x / (1.0 + x * x + v * v), 0
    if kid == 2:
        return -g * x * np.exp(-0.5 * (x * x + v * v)), 0
    if kid == 3:
        return -g * v / (1.0 + v * v), 0
    r = np.abs(x)
    small = r < eps
    capped = int(np.count_nonzero(small))
    zero = r == 0.0
    xc = np.where(small, np.where(x > 0.0, eps, -eps), x)
    rc = np.maximum(r, eps)
    val = -g * (s - 1.0) * xc * rc ** (s - 3.0) * _smoothstep(np.abs(v) / M)
    val = np.where(zero, 0.0, val)
    return val, capped


def pairwise_drift_1d(xt, vt, xs, vs, t, node_x, node_v, wq,
                      kid, g, s, M, eps, out):
    ns = len(xs)
    capped = 0
    for lo in range(0, len(xt), _CHUNK):
        hi = min(lo + _CHUNK, len(xt))
        dx = xt[lo:hi, None] - xs[None, :]
        dv = vt[lo:hi, None] - vs[None, :]
        acc = np.zeros_like(dx)
        for q in range(len(wq)):
            val, c = _force_1d(
                kid, dx - node_x[q] - t * node_v[q], dv - node_v[q], g, s, M, eps
            )
            capped += c
            acc += wq[q] * val
        out[lo:hi] = acc.sum(axis=1) / ns
    return capped


def deposit_1d(xs, vs, t, lam, alpha, r_x, r_v, bump_mass,
               x0, dx_cell, v0, dv_cell, out):
    nx, nv = out.shape
    amp = lam ** (2.0 + alpha)
    rx_n = r_x * lam ** -(1.0 + alpha)
    rv_n = r_v / lam
    leaked = 0
    for i in range(len(xs)):
        leak_i = False
        jv_lo = int(np.floor((vs[i] - rv_n - v0) / dv_cell)) + 1
        jv_hi = int(np.floor((vs[i] + rv_n - v0) / dv_cell))
        if jv_lo < 0:
            jv_lo, leak_i = 0, True
        if jv_hi > nv - 1:
            jv_hi, leak_i = nv - 1, True
        if jv_hi < jv_lo:
            leaked += leak_i
            continue
        jv = np.arange(jv_lo, jv_hi + 1)
        vd = vs[i] - (v0 + jv * dv_cell)
        av = lam * vd / r_v
        bv = np.where(
            np.abs(av) < 1.0,
            np.exp(-1.0 / np.maximum(1.0 - av * av, 1e-300)) / (bump_mass * r_v),
            0.0,
        )
        xc = xs[i] - t * vd
        jx_lo = np.floor((xc - rx_n - x0) / dx_cell).astype(int) + 1
        jx_hi = np.floor((xc + rx_n - x0) / dx_cell).astype(int)
        if np.any(jx_lo < 0) or np.any(jx_hi > nx - 1):
            leak_i = True
            jx_lo = np.clip(jx_lo, 0, nx - 1)
            jx_hi = np.clip(jx_hi, -1, nx - 1)
        for r, j in enumerate(jv):
            if jx_hi[r] < jx_lo[r] or bv[r] == 0.0:
                continue
            jx = np.arange(jx_lo[r], jx_hi[r] + 1)
            xd = xc[r] - (x0 + jx * dx_cell)
            ax = lam ** (1.0 + alpha) * xd / r_x
            bx = np.where(
                np.abs(ax) < 1.0,
                np.exp(-1.0 / np.maximum(1.0 - ax * ax, 1e-300)) / (bump_mass * r_x),
                0.0,
            )
            out[jx, j] += amp * bx * bv[r]
        if leak_i:
            leaked += 1
    return leaked
