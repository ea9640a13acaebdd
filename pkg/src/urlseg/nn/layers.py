"""Embedding table, affine projection, softmax, and the masked sequence loss."""

from __future__ import annotations

import numpy as np

from .init import embedding_normal
from .tensor import Function, Tensor, from_op


class Embedding:
    """Lookup table mapping integer ids to dense rows of `weight`."""

    def __init__(self, weight: Tensor):
        self.weight = weight

    @classmethod
    def create(cls, vocab_size: int, dim: int, rng, dtype=np.float32):
        return cls(embedding_normal(rng, vocab_size, dim, dtype))

    @property
    def vocab_size(self) -> int:
        return self.weight.shape[0]

    @property
    def dim(self) -> int:
        return self.weight.shape[1]

    def _check_ids(self, ids: np.ndarray) -> np.ndarray:
        ids = np.asarray(ids)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise IndexError(
                f"embedding ids must lie in [0, {self.vocab_size}), "
                f"got range [{ids.min()}, {ids.max()}]"
            )
        return ids

    def lookup(self, ids) -> Tensor:
        """Differentiable row gather; `ids` may have any shape."""
        ids = self._check_ids(ids)
        fn = _Rows(self.weight)
        fn.save(ids, self.weight.shape)
        return from_op(self.weight.data[ids], fn)

    def rows(self, ids) -> np.ndarray:
        """Plain array gather for inference paths."""
        return self.weight.data[self._check_ids(ids)]


class _Rows(Function):
    def backward(self, dout):
        ids, table_shape = self.saved
        grad = np.zeros(table_shape, dtype=dout.dtype)
        np.add.at(grad, ids.reshape(-1), dout.reshape(-1, table_shape[1]))
        return (grad,)


class _Affine(Function):
    def backward(self, dout):
        x, w = self.saved
        flat_dout = dout.reshape(-1, dout.shape[-1])
        flat_x = x.reshape(-1, x.shape[-1])
        dx = (flat_dout @ w).reshape(x.shape)
        dw = flat_dout.T @ flat_x
        db = flat_dout.sum(axis=0)
        return dx, dw, db


def affine(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x @ weight.T + bias over the last axis."""
    if x.shape[-1] != weight.shape[1]:
        raise ValueError(f"affine: input dim {x.shape[-1]} != weight dim {weight.shape[1]}")
    fn = _Affine(x, weight, bias)
    fn.save(x.data, weight.data)
    out = x.data @ weight.data.T + bias.data
    return from_op(out, fn)


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis of a plain array."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def linear_softmax(h: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """softmax(weight @ h + bias): class probabilities from a hidden vector."""
    h = np.asarray(h)
    weight = np.asarray(weight)
    bias = np.asarray(bias)
    if weight.shape[1] != h.shape[-1] or weight.shape[0] != bias.shape[-1]:
        raise ValueError(
            f"linear_softmax shapes: h {h.shape}, weight {weight.shape}, bias {bias.shape}"
        )
    return softmax(h @ weight.T + bias)


class _MaskedSequenceNLL(Function):
    def backward(self, dout):
        probs, targets, mask, batch_size = self.saved
        dlogits = probs.copy()
        rows = np.arange(targets.size)
        flat = dlogits.reshape(-1, dlogits.shape[-1])
        flat[rows, targets.reshape(-1)] -= 1.0
        dlogits *= mask[..., None]
        dlogits *= dout / batch_size
        return (dlogits,)


def masked_sequence_nll(logits: Tensor, targets: np.ndarray, mask: np.ndarray) -> Tensor:
    """Mean-over-batch of per-sequence summed negative log-likelihood.

    `logits` is [T, B, C]; `targets` [T, B] integer classes; `mask` [T, B]
    with 1.0 at real positions and 0.0 at padding.
    """
    data = logits.data
    T, B, C = data.shape
    shifted = data - data.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    log_probs = shifted - log_norm
    picked = np.take_along_axis(log_probs, targets[..., None], axis=-1)[..., 0]
    loss = -(picked * mask).sum() / B

    fn = _MaskedSequenceNLL(logits)
    fn.save(np.exp(log_probs), targets, mask.astype(data.dtype), B)
    return from_op(np.asarray(loss, dtype=data.dtype), fn)
