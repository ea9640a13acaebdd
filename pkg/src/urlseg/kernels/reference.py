"""Pure-numpy GRU sequence kernels.

These implement the sequential part of a batched GRU layer: the per-timestep
recurrence in forward, and backpropagation through time in backward. The
input projections (x @ W.T + b for all three gates) are precomputed by the
caller as one large matmul, so `x_proj` already includes the biases.

Gate packing order along the last axis is (update, reset, candidate).
Update equations, with z = update gate, r = reset gate, c = candidate:

    z = sigmoid(x_proj_z + h_prev @ U_z.T)
    r = sigmoid(x_proj_r + h_prev @ U_r.T)
    c = tanh(x_proj_c + (r * h_prev) @ U_c.T)
    h = (1 - z) * h_prev + z * c

The compiled twin in `_gru_cy.pyx` matches this contract bit-for-bit up to
floating-point reassociation inside BLAS.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

NAME = "numpy"


def gru_forward(
    x_proj: np.ndarray,  # [T, B, 3H], biases already added
    h0: np.ndarray,  # [B, H]
    u_zr: np.ndarray,  # [2H, H], rows 0..H-1 update, H..2H-1 reset
    u_c: np.ndarray,  # [H, H]
    save_cache: bool = True,
):
    """Run the recurrence; returns (h_seq [T,B,H], cache or None).

    The cache holds the gate activations (z, r, c), each [T, B, H], exactly
    what gru_backward needs.
    """
    T, B, H3 = x_proj.shape
    H = H3 // 3
    h_seq = np.empty((T, B, H), dtype=x_proj.dtype)
    if save_cache:
        z_all = np.empty_like(h_seq)
        r_all = np.empty_like(h_seq)
        c_all = np.empty_like(h_seq)

    h = h0
    u_zr_t = u_zr.T  # [H, 2H]
    u_c_t = u_c.T
    for t in range(T):
        hzr = h @ u_zr_t  # [B, 2H]
        z = expit(x_proj[t, :, :H] + hzr[:, :H])
        r = expit(x_proj[t, :, H : 2 * H] + hzr[:, H:])
        c = np.tanh(x_proj[t, :, 2 * H :] + (r * h) @ u_c_t)
        h = (1.0 - z) * h + z * c
        h_seq[t] = h
        if save_cache:
            z_all[t] = z
            r_all[t] = r
            c_all[t] = c

    return h_seq, (z_all, r_all, c_all) if save_cache else None


def gru_backward(
    dh_seq: np.ndarray,  # [T, B, H] gradient flowing into each h_t from outside
    h_seq: np.ndarray,  # [T, B, H] forward outputs
    h0: np.ndarray,  # [B, H]
    cache,  # (z, r, c) from gru_forward
    u_zr: np.ndarray,
    u_c: np.ndarray,
):
    """BPTT through the recurrence.

    Returns (dx_proj [T,B,3H], dh0 [B,H], du_zr [2H,H], du_c [H,H]).
    """
    z_all, r_all, c_all = cache
    T, B, H = dh_seq.shape
    dtype = dh_seq.dtype

    dx_proj = np.empty((T, B, 3 * H), dtype=dtype)
    du_zr = np.zeros_like(u_zr)
    du_c = np.zeros_like(u_c)

    g = dh_seq[T - 1].copy()  # running gradient w.r.t. h_t
    for t in range(T - 1, -1, -1):
        h_prev = h_seq[t - 1] if t > 0 else h0
        z, r, c = z_all[t], r_all[t], c_all[t]

        dpc = (g * z) * (1.0 - c * c)  # pre-activation candidate
        dpz = (g * (c - h_prev)) * (z * (1.0 - z))  # pre-activation update gate
        drh = dpc @ u_c  # gradient w.r.t. (r * h_prev)
        dpr = (drh * h_prev) * (r * (1.0 - r))  # pre-activation reset gate

        dx_proj[t, :, :H] = dpz
        dx_proj[t, :, H : 2 * H] = dpr
        dx_proj[t, :, 2 * H :] = dpc

        du_zr[:H] += dpz.T @ h_prev
        du_zr[H:] += dpr.T @ h_prev
        du_c += dpc.T @ (r * h_prev)

        dh_prev = g * (1.0 - z) + drh * r
        dh_prev += dpz @ u_zr[:H]
        dh_prev += dpr @ u_zr[H:]
        if t > 0:
            g = dh_prev + dh_seq[t - 1]
        else:
            g = dh_prev

    return dx_proj, g, du_zr, du_c
