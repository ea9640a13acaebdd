"""GRU cells and the fused sequence layer.

A single cell step exists as a plain function (used by the autoregressive
decoder at inference time); whole-sequence application is one tape node whose
forward/backward run in the selected kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .. import kernels
from .init import glorot_uniform, zeros_param
from .tensor import Function, Tensor, from_op


@dataclass
class GruCellParams:
    """Weights of one GRU cell: input-to-hidden W, hidden-to-hidden U, biases b,
    each split by gate (update z, reset r, candidate c)."""

    W_update: Tensor
    W_reset: Tensor
    W_cand: Tensor
    U_update: Tensor
    U_reset: Tensor
    U_cand: Tensor
    b_update: Tensor
    b_reset: Tensor
    b_cand: Tensor

    @classmethod
    def create(cls, input_size: int, hidden_size: int, rng, dtype=np.float32):
        def w():
            return glorot_uniform(rng, hidden_size, input_size, dtype)

        def u():
            return glorot_uniform(rng, hidden_size, hidden_size, dtype)

        def b():
            return zeros_param(hidden_size, dtype)

        return cls(w(), w(), w(), u(), u(), u(), b(), b(), b())

    @property
    def input_size(self) -> int:
        return self.W_update.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.W_update.shape[0]

    def tensors(self) -> list[Tensor]:
        return [
            self.W_update, self.W_reset, self.W_cand,
            self.U_update, self.U_reset, self.U_cand,
            self.b_update, self.b_reset, self.b_cand,
        ]

    def _packed(self):
        """Fused views used by the sequence kernels: W_all [3H,in] and
        b_all [3H] in gate order (z, r, c), u_zr [2H,H], u_c [H,H]."""
        w_all = np.concatenate(
            [self.W_update.data, self.W_reset.data, self.W_cand.data], axis=0
        )
        b_all = np.concatenate(
            [self.b_update.data, self.b_reset.data, self.b_cand.data]
        )
        u_zr = np.concatenate([self.U_update.data, self.U_reset.data], axis=0)
        return w_all, b_all, u_zr, np.ascontiguousarray(self.U_cand.data)


def gru_cell_forward(x: np.ndarray, h_prev: np.ndarray, p: GruCellParams) -> np.ndarray:
    """One GRU step. Accepts a single vector or a [batch, dim] matrix.

    z = sigmoid(W_update x + U_update h + b_update)
    r = sigmoid(W_reset x + U_reset h + b_reset)
    c = tanh(W_cand x + U_cand (r * h) + b_cand)
    h_new = (1 - z) * h_prev + z * c
    """
    x = np.asarray(x)
    h_prev = np.asarray(h_prev)
    if x.shape[-1] != p.input_size:
        raise ValueError(f"input dim {x.shape[-1]} != cell input size {p.input_size}")
    if h_prev.shape[-1] != p.hidden_size:
        raise ValueError(f"hidden dim {h_prev.shape[-1]} != cell hidden size {p.hidden_size}")

    z = expit(x @ p.W_update.data.T + h_prev @ p.U_update.data.T + p.b_update.data)
    r = expit(x @ p.W_reset.data.T + h_prev @ p.U_reset.data.T + p.b_reset.data)
    c = np.tanh(x @ p.W_cand.data.T + (r * h_prev) @ p.U_cand.data.T + p.b_cand.data)
    h_new = (1.0 - z) * h_prev + z * c
    if not np.all(np.isfinite(h_new)):
        raise FloatingPointError("non-finite GRU cell output")
    return h_new


class _GruSequence(Function):
    """Tape node for a whole GRU layer applied over a [T, B, in] sequence."""

    def backward(self, dh_seq):
        x_data, x_proj_shape, w_all, u_zr, u_c, h_seq, h0, cache = self.saved
        dx_proj, _dh0, du_zr, du_c = kernels.gru_backward(
            np.ascontiguousarray(dh_seq), h_seq, h0, cache, u_zr, u_c
        )
        T, B, H3 = x_proj_shape
        H = H3 // 3
        in_size = x_data.shape[-1]
        flat_dxp = dx_proj.reshape(T * B, H3)
        flat_x = x_data.reshape(T * B, in_size)
        dw_all = flat_dxp.T @ flat_x
        db_all = flat_dxp.sum(axis=0)
        dx = (flat_dxp @ w_all).reshape(x_data.shape)
        return (
            dx,
            dw_all[:H], dw_all[H : 2 * H], dw_all[2 * H :],
            du_zr[:H], du_zr[H:], du_c,
            db_all[:H], db_all[H : 2 * H], db_all[2 * H :],
        )


def gru_layer(x_seq: Tensor, p: GruCellParams) -> Tensor:
    """Run a GRU over the time-major sequence `x_seq` [T, B, in] from a zero
    initial state; returns hidden states [T, B, H]."""
    T, B, in_size = x_seq.shape
    if in_size != p.input_size:
        raise ValueError(f"sequence feature size {in_size} != cell input size {p.input_size}")
    w_all, b_all, u_zr, u_c = p._packed()
    x_proj = (x_seq.data.reshape(T * B, in_size) @ w_all.T + b_all).reshape(T, B, 3 * p.hidden_size)
    h0 = np.zeros((B, p.hidden_size), dtype=x_seq.data.dtype)
    h_seq, cache = kernels.gru_forward(x_proj, h0, u_zr, u_c, save_cache=True)

    fn = _GruSequence(x_seq, *p.tensors())
    fn.save(x_seq.data, x_proj.shape, w_all, u_zr, u_c, h_seq, h0, cache)
    return from_op(h_seq, fn)


def gru_layer_inference(x_seq: np.ndarray, p: GruCellParams) -> np.ndarray:
    """gru_layer without the tape; x_seq is a plain [T, B, in] array."""
    T, B, in_size = x_seq.shape
    w_all, b_all, u_zr, u_c = p._packed()
    x_proj = (x_seq.reshape(T * B, in_size) @ w_all.T + b_all).reshape(T, B, 3 * p.hidden_size)
    h0 = np.zeros((B, p.hidden_size), dtype=x_seq.dtype)
    h_seq, _ = kernels.gru_forward(x_proj, h0, u_zr, u_c, save_cache=False)
    return h_seq
