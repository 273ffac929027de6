"""Dense real tensors with lexicographic storage.

Entries are stored with the last index varying fastest. Multi-indices in the
public interface are 1-based; ``Tensor.entry((1, 1))`` is the first entry.
"""
from __future__ import annotations

from functools import reduce
from itertools import product
from typing import Callable, Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """Raised when tensor shapes are inconsistent with an operation."""


class Tensor:
    """Immutable dense real tensor of degree ``d >= 1``.

    Parameters
    ----------
    data : array_like
        Entries as an ``d``-dimensional array. A copy is taken and frozen.

    Examples
    --------
    >>> T = Tensor.from_values((2, 2, 2), range(1, 9))
    >>> T.entry((2, 1, 2))
    6.0
    """

    __slots__ = ("_data",)

    def __init__(self, data):
        arr = np.array(data, dtype=np.float64, order="C", copy=True)
        if arr.ndim == 0:
            raise ShapeError("tensors of degree 0 are not supported")
        if any(n < 1 for n in arr.shape):
            raise ShapeError(f"every dimension must be positive, got {arr.shape}")
        arr.flags.writeable = False
        self._data = arr

    @classmethod
    def from_values(cls, shape: Sequence[int], values: Iterable[float]) -> "Tensor":
        """Build from a shape and a flat list of values in lexicographic order."""
        shape = tuple(int(n) for n in shape)
        if not shape or any(n < 1 for n in shape):
            raise ShapeError(f"invalid shape {shape}")
        flat = np.asarray(list(values) if not isinstance(values, np.ndarray) else values,
                          dtype=np.float64).ravel()
        if flat.size != int(np.prod(shape)):
            raise ShapeError(f"{flat.size} values do not fill shape {shape}")
        return cls(flat.reshape(shape))

    @classmethod
    def from_entries(cls, shape: Sequence[int], f: Callable[[tuple], float]) -> "Tensor":
        """Build from a function of the 1-based multi-index."""
        shape = tuple(int(n) for n in shape)
        vals = [f(tuple(i + 1 for i in idx)) for idx in product(*(range(n) for n in shape))]
        return cls.from_values(shape, vals)

    @classmethod
    def zeros(cls, shape: Sequence[int]) -> "Tensor":
        return cls(np.zeros(tuple(shape)))

    @property
    def shape(self) -> tuple:
        return self._data.shape

    @property
    def degree(self) -> int:
        return self._data.ndim

    @property
    def size(self) -> int:
        return self._data.size

    @property
    def values(self) -> np.ndarray:
        """Flat read-only view of the entries in lexicographic order."""
        return self._data.reshape(-1)

    @property
    def array(self) -> np.ndarray:
        """Read-only ``numpy`` view with the tensor's shape."""
        return self._data

    def entry(self, idx: Sequence[int]) -> float:
        """Return the entry at the 1-based multi-index ``idx``."""
        idx = tuple(idx)
        if len(idx) != self.degree:
            raise IndexError(f"index of length {len(idx)} for tensor of degree {self.degree}")
        for i, n in zip(idx, self.shape):
            if not 1 <= i <= n:
                raise IndexError(f"index {idx} out of range for shape {self.shape}")
        return float(self._data[tuple(i - 1 for i in idx)])

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._data
        return self._data.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self._data, other._data))

    def __hash__(self):
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    def __add__(self, other):
        return Tensor(self._data + np.asarray(other))

    def __sub__(self, other):
        return Tensor(self._data - np.asarray(other))

    def __mul__(self, scalar):
        return Tensor(self._data * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return Tensor(-self._data)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ShapeError(f"expected a matrix, got an array of degree {A.ndim}")
    return A


def apply_linear(A, T) -> Tensor:
    """Apply the matrix ``A`` (m x n) along every mode of ``T`` (n x ... x n).

    Computed as ``d`` successive mode products.
    """
    A = _as_matrix(A)
    T = as_tensor(T)
    n = A.shape[1]
    if any(k != n for k in T.shape):
        raise ShapeError(f"matrix with {n} columns cannot act on tensor of shape {T.shape}")
    X = T.array
    for _ in range(T.degree):
        # contract the leading mode and append the new one; after d steps
        # the modes are back in their original order
        X = np.tensordot(X, A, axes=([0], [1]))
    return Tensor(X)


def apply_linear_vec(A, v) -> np.ndarray:
    A = _as_matrix(A)
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != A.shape[1]:
        raise ShapeError(f"cannot multiply {A.shape} matrix with vector of shape {v.shape}")
    return A @ v


def outer_product(*tensors) -> Tensor:
    """Outer product of one or more tensors, folded from the left."""
    if not tensors:
        raise ValueError("outer_product needs at least one argument")
    arrays = [as_tensor(t).array for t in tensors]
    return Tensor(reduce(np.multiply.outer, arrays))


def outer_power(v, d: int) -> Tensor:
    """``v`` tensored with itself ``d`` times."""
    if d < 1:
        raise ValueError("outer_power requires d >= 1")
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError("outer_power expects a vector")
    return outer_product(*([v] * d))


def scalar_product(A, B) -> float:
    A, B = as_tensor(A), as_tensor(B)
    if A.shape != B.shape:
        raise ShapeError(f"shape mismatch {A.shape} vs {B.shape}")
    return float(A.values @ B.values)


def frobenius_norm(T) -> float:
    return float(np.linalg.norm(as_tensor(T).values))
