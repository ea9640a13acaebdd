# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled GRU sequence kernels.

Same contract as `urlseg.kernels.reference`: the caller precomputes the input
projections (biases included) and this module runs the per-timestep
recurrence (forward) and backpropagation through time (backward). Matmuls go
through BLAS; gate math is fused into single C loops.
"""

import numpy as np

from cython cimport floating
from libc.math cimport exp, expf, tanh, tanhf
from scipy.linalg.cython_blas cimport dgemm, sgemm

NAME = "compiled"


cdef inline floating _sigmoid(floating x) noexcept nogil:
    if floating is float:
        return <float>1.0 / (<float>1.0 + expf(-x))
    else:
        return 1.0 / (1.0 + exp(-x))


cdef inline floating _tanh(floating x) noexcept nogil:
    if floating is float:
        return tanhf(x)
    else:
        return tanh(x)


# Row-major matmul helpers over column-major BLAS. The ld* arguments are the
# true row strides (in elements) of the underlying buffers, so gate-sized
# blocks of a wider [B, 3H] array can be addressed in place.

cdef inline void _gemm(char transa, char transb, int m, int n, int k,
                       floating* a, int lda, floating* b, int ldb,
                       floating beta, floating* c, int ldc) noexcept nogil:
    cdef float onef = 1.0, betaf
    cdef double oned = 1.0, betad
    if floating is float:
        betaf = <float>beta
        sgemm(&transa, &transb, &m, &n, &k, &onef, <float*>a, &lda,
              <float*>b, &ldb, &betaf, <float*>c, &ldc)
    else:
        betad = <double>beta
        dgemm(&transa, &transb, &m, &n, &k, &oned, <double*>a, &lda,
              <double*>b, &ldb, &betad, <double*>c, &ldc)


cdef inline void _matmul_nt(int rows, int out_dim, int k,
                            floating* x, int ldx, floating* w,
                            floating* y, int ldy, floating beta) noexcept nogil:
    # Y[rows, out_dim] (+)= X[rows, k] @ W[out_dim, k].T
    _gemm(b'T', b'N', out_dim, rows, k, w, k, x, ldx, beta, y, ldy)


cdef inline void _matmul_nn(int rows, int out_dim, int k,
                            floating* x, int ldx, floating* w,
                            floating* y, int ldy, floating beta) noexcept nogil:
    # Y[rows, out_dim] (+)= X[rows, k] @ W[k, out_dim]
    _gemm(b'N', b'N', out_dim, rows, k, w, out_dim, x, ldx, beta, y, ldy)


cdef inline void _matmul_tn_acc(int rows, int out_dim, int k,
                                floating* d, int ldd, floating* x, int ldx,
                                floating* w) noexcept nogil:
    # W[out_dim, k] += D[rows, out_dim].T @ X[rows, k]
    _gemm(b'N', b'T', k, out_dim, rows, x, ldx, d, ldd, <floating>1.0, w, k)


def gru_forward(floating[:, :, ::1] x_proj, floating[:, ::1] h0,
                floating[:, ::1] u_zr, floating[:, ::1] u_c,
                bint save_cache=True):
    """Run the recurrence; returns (h_seq [T,B,H], (z, r, c) or None)."""
    cdef Py_ssize_t T = x_proj.shape[0]
    cdef Py_ssize_t B = x_proj.shape[1]
    cdef Py_ssize_t H = x_proj.shape[2] // 3

    dtype = np.float32 if floating is float else np.float64
    h_seq_arr = np.empty((T, B, H), dtype=dtype)
    cache_steps = T if save_cache else 1  # scratch row reused when not caching
    z_arr = np.empty((cache_steps, B, H), dtype=dtype)
    r_arr = np.empty((cache_steps, B, H), dtype=dtype)
    c_arr = np.empty((cache_steps, B, H), dtype=dtype)
    hzr_arr = np.empty((B, 2 * H), dtype=dtype)
    rh_arr = np.empty((B, H), dtype=dtype)
    hc_arr = np.empty((B, H), dtype=dtype)

    cdef floating[:, :, ::1] h_seq = h_seq_arr
    cdef floating[:, :, ::1] z_all = z_arr
    cdef floating[:, :, ::1] r_all = r_arr
    cdef floating[:, :, ::1] c_all = c_arr
    cdef floating[:, ::1] hzr = hzr_arr
    cdef floating[:, ::1] rh = rh_arr
    cdef floating[:, ::1] hc = hc_arr

    cdef Py_ssize_t t, tc, b, j
    cdef floating z, r, c, hp
    cdef floating* h_prev
    cdef int iB = <int>B, iH = <int>H, iH2 = <int>(2 * H), iH3 = <int>(3 * H)

    with nogil:
        for t in range(T):
            tc = t if save_cache else 0
            h_prev = &h0[0, 0] if t == 0 else &h_seq[t - 1, 0, 0]
            # hzr = h_prev @ u_zr.T  (update and reset pre-activations)
            _matmul_nt(iB, iH2, iH, h_prev, iH, &u_zr[0, 0], &hzr[0, 0], iH2,
                       <floating>0.0)
            for b in range(B):
                for j in range(H):
                    r = _sigmoid(x_proj[t, b, H + j] + hzr[b, H + j])
                    r_all[tc, b, j] = r
                    rh[b, j] = r * h_prev[b * H + j]
            # hc = (r * h_prev) @ u_c.T  (candidate pre-activation)
            _matmul_nt(iB, iH, iH, &rh[0, 0], iH, &u_c[0, 0], &hc[0, 0], iH,
                       <floating>0.0)
            for b in range(B):
                for j in range(H):
                    hp = h_prev[b * H + j]
                    z = _sigmoid(x_proj[t, b, j] + hzr[b, j])
                    c = _tanh(x_proj[t, b, 2 * H + j] + hc[b, j])
                    z_all[tc, b, j] = z
                    c_all[tc, b, j] = c
                    h_seq[t, b, j] = (<floating>1.0 - z) * hp + z * c

    if save_cache:
        return h_seq_arr, (z_arr, r_arr, c_arr)
    return h_seq_arr, None


def gru_backward(floating[:, :, ::1] dh_seq, floating[:, :, ::1] h_seq,
                 floating[:, ::1] h0, cache,
                 floating[:, ::1] u_zr, floating[:, ::1] u_c):
    """BPTT; returns (dx_proj [T,B,3H], dh0 [B,H], du_zr [2H,H], du_c [H,H])."""
    cdef Py_ssize_t T = dh_seq.shape[0]
    cdef Py_ssize_t B = dh_seq.shape[1]
    cdef Py_ssize_t H = dh_seq.shape[2]

    z_obj, r_obj, c_obj = cache
    cdef floating[:, :, ::1] z_all = z_obj
    cdef floating[:, :, ::1] r_all = r_obj
    cdef floating[:, :, ::1] c_all = c_obj

    dtype = np.float32 if floating is float else np.float64
    dx_proj_arr = np.empty((T, B, 3 * H), dtype=dtype)
    du_zr_arr = np.zeros((2 * H, H), dtype=dtype)
    du_c_arr = np.zeros((H, H), dtype=dtype)
    dh0_arr = np.empty((B, H), dtype=dtype)
    g_arr = np.empty((B, H), dtype=dtype)
    drh_arr = np.empty((B, H), dtype=dtype)
    rh_arr = np.empty((B, H), dtype=dtype)

    cdef floating[:, :, ::1] dx_proj = dx_proj_arr
    cdef floating[:, ::1] du_zr = du_zr_arr
    cdef floating[:, ::1] du_c = du_c_arr
    cdef floating[:, ::1] dh0 = dh0_arr
    cdef floating[:, ::1] g = g_arr
    cdef floating[:, ::1] drh = drh_arr
    cdef floating[:, ::1] rh = rh_arr

    cdef Py_ssize_t t, b, j
    cdef floating z, r, c, hp, gv, dh_acc
    cdef floating* h_prev
    cdef int iB = <int>B, iH = <int>H, iH2 = <int>(2 * H), iH3 = <int>(3 * H)

    with nogil:
        for b in range(B):
            for j in range(H):
                g[b, j] = dh_seq[T - 1, b, j]
        for t in range(T - 1, -1, -1):
            h_prev = &h0[0, 0] if t == 0 else &h_seq[t - 1, 0, 0]
            # pre-activation grads for update gate and candidate; stage rh
            for b in range(B):
                for j in range(H):
                    hp = h_prev[b * H + j]
                    gv = g[b, j]
                    z = z_all[t, b, j]
                    r = r_all[t, b, j]
                    c = c_all[t, b, j]
                    dx_proj[t, b, j] = (gv * (c - hp)) * (z * (<floating>1.0 - z))
                    dx_proj[t, b, 2 * H + j] = (gv * z) * (<floating>1.0 - c * c)
                    rh[b, j] = r * hp
            # drh = dpc @ u_c
            _matmul_nn(iB, iH, iH, &dx_proj[t, 0, 2 * H], iH3, &u_c[0, 0],
                       &drh[0, 0], iH, <floating>0.0)
            # reset-gate pre-activation grad; start dh_prev accumulation in g
            for b in range(B):
                for j in range(H):
                    r = r_all[t, b, j]
                    dx_proj[t, b, H + j] = (drh[b, j] * h_prev[b * H + j]) * (r * (<floating>1.0 - r))
                    g[b, j] = g[b, j] * (<floating>1.0 - z_all[t, b, j]) + drh[b, j] * r
            # dh_prev += [dpz dpr] @ u_zr
            _matmul_nn(iB, iH, iH2, &dx_proj[t, 0, 0], iH3, &u_zr[0, 0],
                       &g[0, 0], iH, <floating>1.0)
            # weight gradients
            _matmul_tn_acc(iB, iH2, iH, &dx_proj[t, 0, 0], iH3, h_prev, iH,
                           &du_zr[0, 0])
            _matmul_tn_acc(iB, iH, iH, &dx_proj[t, 0, 2 * H], iH3, &rh[0, 0], iH,
                           &du_c[0, 0])
            if t > 0:
                for b in range(B):
                    for j in range(H):
                        g[b, j] += dh_seq[t - 1, b, j]
            else:
                for b in range(B):
                    for j in range(H):
                        dh0[b, j] = g[b, j]

    return dx_proj_arr, dh0_arr, du_zr_arr, du_c_arr
