"""Flattening maps, signatures, and matricization.

A flattening map assigns every source mode (1-based) to a target mode. Source
modes sharing a target are grouped in ascending order and their joint index
is linearized lexicographically, so ``unflatten`` inverts ``flatten`` exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .tensor import ShapeError, Tensor, as_tensor


@dataclass(frozen=True)
class FlatteningMap:
    """Surjective map from ``[d]`` onto ``[d~]``.

    ``assignment[l - 1]`` is the target mode of source mode ``l``.
    """

    assignment: tuple

    def __post_init__(self):
        a = tuple(int(x) for x in self.assignment)
        object.__setattr__(self, "assignment", a)
        if not a:
            raise ValueError("flattening map needs at least one source mode")
        targets = set(a)
        if targets != set(range(1, max(a) + 1)) or min(a) < 1:
            raise ValueError(f"flattening map {a} is not surjective onto [1..{max(a)}]")

    @property
    def source_degree(self) -> int:
        return len(self.assignment)

    @property
    def target_degree(self) -> int:
        return max(self.assignment)

    def preimage(self, k: int) -> tuple:
        """Source modes (1-based, ascending) sent to target mode ``k``."""
        return tuple(l + 1 for l, t in enumerate(self.assignment) if t == k)

    @classmethod
    def identity(cls, d: int) -> "FlatteningMap":
        return cls(tuple(range(1, d + 1)))


@dataclass(frozen=True)
class Signature:
    """Ordered partition ``(S_1, ..., S_k)`` of the modes ``{1, ..., d}``.

    Modes inside a block are kept in ascending order.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(m) for m in b)) for b in self.blocks)
        object.__setattr__(self, "blocks", blocks)
        if not blocks or any(not b for b in blocks):
            raise ValueError("signature blocks must be nonempty")
        modes = [m for b in blocks for m in b]
        if len(set(modes)) != len(modes):
            raise ValueError(f"signature blocks {blocks} are not disjoint")
        if set(modes) != set(range(1, len(modes) + 1)):
            raise ValueError(f"signature blocks {blocks} do not cover 1..{len(modes)}")

    @property
    def degree(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def k(self) -> int:
        return len(self.blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    def block_sizes(self, shape: Sequence[int]) -> tuple:
        """Element counts ``N_j`` of each block for a tensor of the given shape."""
        return tuple(int(np.prod([shape[m - 1] for m in b])) for b in self.blocks)

    def block_shape(self, j: int, shape: Sequence[int]) -> tuple:
        return tuple(shape[m - 1] for m in self.blocks[j])

    @classmethod
    def singletons(cls, d: int) -> "Signature":
        return cls(tuple((m,) for m in range(1, d + 1)))

    @classmethod
    def parse(cls, text: str) -> "Signature":
        """Parse ``"1|2,3"`` into ``({1}, {2, 3})``."""
        try:
            blocks = [tuple(int(m) for m in part.split(",")) for part in text.strip().split("|")]
        except ValueError as exc:
            raise ValueError(f"malformed signature {text!r}") from exc
        return cls(tuple(blocks))

    def format(self) -> str:
        return "|".join(",".join(str(m) for m in b) for b in self.blocks)

    def __str__(self):
        return self.format()


def _grouped_layout(shape: Sequence[int], sigma: FlatteningMap):
    order = [l - 1 for k in range(1, sigma.target_degree + 1) for l in sigma.preimage(k)]
    new_shape = tuple(
        int(np.prod([shape[l - 1] for l in sigma.preimage(k)]))
        for k in range(1, sigma.target_degree + 1)
    )
    return order, new_shape


def flatten(T, sigma: FlatteningMap) -> Tensor:
    """The ``sigma``-flattening of ``T``, a tensor of degree ``sigma.target_degree``."""
    T = as_tensor(T)
    if sigma.source_degree != T.degree:
        raise ShapeError(
            f"flattening map of source degree {sigma.source_degree} on tensor of degree {T.degree}"
        )
    order, new_shape = _grouped_layout(T.shape, sigma)
    return Tensor(np.transpose(T.array, order).reshape(new_shape))


def unflatten(Tf, sigma: FlatteningMap, original_shape: Sequence[int]) -> Tensor:
    """Invert :func:`flatten` given the shape of the tensor that was flattened."""
    Tf = as_tensor(Tf)
    original_shape = tuple(int(n) for n in original_shape)
    if sigma.source_degree != len(original_shape):
        raise ShapeError("flattening map does not match the original degree")
    order, new_shape = _grouped_layout(original_shape, sigma)
    if Tf.shape != new_shape:
        raise ShapeError(f"tensor of shape {Tf.shape} is not a flattening of {original_shape}")
    permuted = Tf.array.reshape([original_shape[l] for l in order])
    return Tensor(np.transpose(permuted, np.argsort(order)))


def is_compatible(sigma: FlatteningMap, sig: Signature) -> bool:
    if sigma.source_degree != sig.degree:
        raise ShapeError("flattening map and signature have different degrees")
    a = sigma.assignment
    return all(len({a[m - 1] for m in b}) == 1 for b in sig.blocks)


def is_strictly_compatible(sigma: FlatteningMap, sig: Signature) -> bool:
    if not is_compatible(sigma, sig):
        return False
    images = [sigma.assignment[b[0] - 1] for b in sig.blocks]
    return len(set(images)) == len(images)


def signature_to_two_flattening(sig: Signature, split: Iterable[int]) -> FlatteningMap:
    """d-to-2 map sending the blocks listed in ``split`` (1-based) to 1, the rest to 2."""
    split = {int(j) for j in split}
    if not split or not split < set(range(1, sig.k + 1)):
        raise ValueError(f"split {sorted(split)} must be a nonempty proper subset of 1..{sig.k}")
    a = [0] * sig.degree
    for j, b in enumerate(sig.blocks, start=1):
        for m in b:
            a[m - 1] = 1 if j in split else 2
    return FlatteningMap(tuple(a))
