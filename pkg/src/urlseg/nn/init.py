"""Seedable parameter initialization."""

from __future__ import annotations

import numpy as np

from .tensor import Tensor


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def glorot_uniform(rng: np.random.Generator, out_size: int, in_size: int, dtype) -> Tensor:
    """Weight matrix of shape (out_size, in_size), uniform in +/- sqrt(6/(fan_in+fan_out))."""
    scale = np.sqrt(6.0 / (in_size + out_size))
    data = rng.uniform(-scale, scale, size=(out_size, in_size))
    return Tensor(data.astype(dtype), requires_grad=True)


def zeros_param(shape, dtype) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


def embedding_normal(rng: np.random.Generator, vocab_size: int, dim: int, dtype) -> Tensor:
    data = rng.normal(0.0, 0.1, size=(vocab_size, dim))
    return Tensor(data.astype(dtype), requires_grad=True)
