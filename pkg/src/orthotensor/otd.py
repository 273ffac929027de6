"""Orthogonal atomic decomposition by iterated flattening and SVD.

A decomposition of ``T`` with signature ``(S_1, ..., S_k)`` writes

    T = sum_i w_i * A_i^(1) (x) ... (x) A_i^(k)

where, for each block ``j``, the factors ``A_i^(j)`` are orthonormal across
summands ``i``. Factor ``A_i^(j)`` has the shape of the modes in ``S_j``
(ascending).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import linalg
from .flatten import (
    FlatteningMap,
    Signature,
    flatten,
    signature_to_two_flattening,
)
from .tensor import ShapeError, Tensor, as_tensor, frobenius_norm, outer_product

class StructureViolation(RuntimeError):
    """The tensor has no orthogonal atomic decomposition at the requested signature.

    ``residual`` is the relative residual of the best-effort (non-strict)
    decomposition when it was computed, else ``None``.
    """

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


@dataclass
class Decomposition:
    signature: Signature
    weights: np.ndarray
    factors: list = field(default_factory=list)

    @property
    def rank(self) -> int:
        return len(self.weights)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        if len(self.factors) != len(self.weights):
            raise ValueError("one factor row per weight is required")
        for row in self.factors:
            if len(row) != self.signature.k:
                raise ValueError("each summand needs one factor per signature block")

    def gram(self, j: int) -> np.ndarray:
        """Gram matrix of the block-``j`` factors across summands."""
        if self.rank == 0:
            return np.zeros((0, 0))
        F = np.stack([row[j].values for row in self.factors])
        return F @ F.T

    def sorted(self) -> "Decomposition":
        order = np.argsort(-np.abs(self.weights), kind="stable")
        return Decomposition(self.signature, self.weights[order], [self.factors[i] for i in order])


@dataclass(frozen=True)
class VerifyReport:
    residual: float
    max_gram_deviation: float
    ok: bool


def otd1(T, signature: Signature | None = None) -> Decomposition:
    T = as_tensor(T)
    sig = signature or Signature((tuple(range(1, T.degree + 1)),))
    norm = frobenius_norm(T)
    if norm == 0.0:
        return Decomposition(sig, [], [])
    return Decomposition(sig, [norm], [[T * (1.0 / norm)]])


def _check_signature(T: Tensor, sig: Signature):
    if sig.degree != T.degree:
        raise ShapeError(f"signature of degree {sig.degree} for tensor of degree {T.degree}")


def otd2(T, sig: Signature, tol: float = linalg.DEFAULT_TOL) -> Decomposition:
    """Two-factor decomposition: flatten to a matrix, take its SVD, unflatten."""
    T = as_tensor(T)
    _check_signature(T, sig)
    if sig.k != 2:
        raise ValueError(f"otd2 needs a signature with 2 blocks, got {sig.k}")
    sigma = signature_to_two_flattening(sig, {1})
    res = linalg.svd(flatten(T, sigma).array, tol)
    shape_a = sig.block_shape(0, T.shape)
    shape_b = sig.block_shape(1, T.shape)
    factors = [
        [Tensor(res.U[:, i].reshape(shape_a)), Tensor(res.V[:, i].reshape(shape_b))]
        for i in range(res.rank)
    ]
    return Decomposition(sig, res.singular_values, factors)


def _sub_signature(sig: Signature, block_ids, modes):
    pos = {m: p for p, m in enumerate(modes, start=1)}
    return Signature(tuple(tuple(pos[m] for m in sig.blocks[j]) for j in block_ids))


def _admissible_splits(k: int):
    # up to complement: every nonempty proper subset containing block 1
    rest = range(2, k + 1)
    for size in range(0, k - 1):
        for extra in combinations(rest, size):
            yield frozenset((1,) + extra)


def _decompose_once(T: Tensor, sig: Signature, tol: float, split, strict: bool,
                    struct_tol: float) -> Decomposition:
    if sig.k == 1:
        return otd1(T, sig)
    if sig.k == 2 and split in (None, frozenset({1})):
        return otd2(T, sig, tol)
    split = frozenset({1}) if split is None else frozenset(split)
    left = [j for j in range(sig.k) if j + 1 in split]
    right = [j for j in range(sig.k) if j + 1 not in split]
    modes_l = tuple(sorted(m for j in left for m in sig.blocks[j]))
    modes_r = tuple(sorted(m for j in right for m in sig.blocks[j]))
    top = otd2(T, Signature((modes_l, modes_r)), tol)

    weights = top.weights.copy()
    factors = []
    for i in range(top.rank):
        row = [None] * sig.k
        for ids, modes, piece in ((left, modes_l, top.factors[i][0]),
                                  (right, modes_r, top.factors[i][1])):
            sub_sig = _sub_signature(sig, ids, modes)
            sub = _decompose_once(piece, sub_sig, struct_tol, None, strict, struct_tol)
            if sub.rank != 1 or abs(sub.weights[0] - 1.0) > struct_tol:
                if strict:
                    w = sub.weights[0] if sub.rank else 0.0
                    raise StructureViolation(
                        f"summand {i + 1}: sub-decomposition has rank {sub.rank} "
                        f"and leading weight {w:.6g}, expected rank 1 with weight 1"
                    )
                sub = sub.sorted()
                weights[i] *= sub.weights[0]
            for j, f in zip(ids, sub.factors[0]):
                row[j] = f
        factors.append(row)
    return Decomposition(sig, weights, factors)


def _polar(F: np.ndarray) -> np.ndarray:
    """Closest matrix with orthonormal columns to ``F`` (N x r)."""
    res = linalg.svd(F, tol=0.0)
    if res.rank < F.shape[1]:
        return F
    return res.U @ res.V.T


def _align_and_average(decs):
    """Average several decompositions of one tensor after matching summands.

    Summands are matched greedily on the product of absolute factor
    correlations with the first decomposition; factors are sign-aligned to
    it, averaged, re-normalized, then each block is re-orthonormalized by
    polar correction.
    """
    ref = decs[0]
    r, k = ref.rank, ref.signature.k
    if any(d.rank != r for d in decs):
        raise StructureViolation("decompositions from different splits disagree on the rank")
    if r == 0:
        return ref
    sums = [[ref.factors[i][j].values.copy() for j in range(k)] for i in range(r)]
    wsum = np.abs(ref.weights).copy()
    for d in decs[1:]:
        score = np.ones((r, r))
        for j in range(k):
            score *= np.abs(np.stack([f[j].values for f in ref.factors])
                            @ np.stack([f[j].values for f in d.factors]).T)
        match = {}
        for flat in np.argsort(-score, axis=None, kind="stable"):
            a, b = divmod(int(flat), r)
            if a not in match and b not in match.values():
                match[a] = b
        for a, b in match.items():
            for j in range(k):
                v = d.factors[b][j].values
                sums[a][j] += np.sign(v @ ref.factors[a][j].values or 1.0) * v
            wsum[a] += abs(d.weights[b])
    shapes = [ref.factors[0][j].shape for j in range(k)]
    mats = []
    for j in range(k):
        F = np.stack([sums[i][j] / np.linalg.norm(sums[i][j]) for i in range(r)], axis=1)
        mats.append(_polar(F))
    factors = [[Tensor(mats[j][:, i].reshape(shapes[j])) for j in range(k)] for i in range(r)]
    # the averaged sign pattern follows ref; restore the sign of each weight from it
    weights = np.sign(ref.weights) * wsum / len(decs)
    return Decomposition(ref.signature, weights, factors)


def otd(T, sig: Signature, tol: float = linalg.DEFAULT_TOL, split_policy="first",
        strict: bool = True, struct_tol: float | None = None) -> Decomposition:
    """Orthogonal atomic decomposition of ``T`` with signature ``sig``.

    Parameters
    ----------
    T : Tensor or array_like
    sig : Signature
    tol : float
        Relative singular value threshold of the top-level SVD.
    split_policy : {"first", "all"} or iterable of int
        Which blocks go to the first side of the top-level two-way split.
        ``"first"`` uses ``{1}``; ``"all"`` runs every split and averages
        the aligned results. An explicit set of 1-based block indices is
        used as given.
    strict : bool
        If true, a sub-decomposition that is not rank one with weight one
        raises :class:`StructureViolation`. If false, its leading term is
        kept and its weight folded into the summand weight.
    struct_tol : float, optional
        Tolerance for the rank-one check, also the rank threshold of the
        sub-SVDs. Defaults to ``100 * tol``.
    """
    T = as_tensor(T)
    _check_signature(T, sig)
    struct_tol = 100 * tol if struct_tol is None else struct_tol
    if sig.k == 1:
        return otd1(T, sig)
    if split_policy == "first":
        return _decompose_once(T, sig, tol, None, strict, struct_tol).sorted()
    if split_policy == "all":
        decs = [_decompose_once(T, sig, tol, s, strict, struct_tol).sorted()
                for s in _admissible_splits(sig.k)]
        if len(decs) == 1:
            return decs[0]
        return _align_and_average(decs).sorted()
    split = frozenset(int(j) for j in split_policy)
    return _decompose_once(T, sig, tol, split, strict, struct_tol).sorted()


def reconstruct(D: Decomposition, shape) -> Tensor:
    """Sum of weighted outer products, with modes put back in original order."""
    shape = tuple(int(n) for n in shape)
    sig = D.signature
    if sig.degree != len(shape):
        raise ShapeError("decomposition signature does not match the shape")
    grouped = [m for b in sig.blocks for m in b]
    grouped_shape = tuple(shape[m - 1] for m in grouped)
    acc = np.zeros(grouped_shape)
    for w, row in zip(D.weights, D.factors):
        for j, f in enumerate(row):
            if f.shape != sig.block_shape(j, shape):
                raise ShapeError(f"factor of shape {f.shape} does not fit block {sig.blocks[j]}")
        acc += w * outer_product(*row).array.reshape(grouped_shape)
    return Tensor(np.transpose(acc, np.argsort([m - 1 for m in grouped])))


def verify(T, D: Decomposition, tol: float = 1e-8) -> VerifyReport:
    T = as_tensor(T)
    diff = frobenius_norm(T.array - reconstruct(D, T.shape).array)
    residual = diff / max(frobenius_norm(T), np.finfo(float).eps)
    dev = 0.0
    for j in range(D.signature.k):
        G = D.gram(j)
        if G.size:
            dev = max(dev, float(np.max(np.abs(G - np.eye(D.rank)))))
    return VerifyReport(residual=float(residual), max_gram_deviation=dev,
                        ok=bool(residual <= tol and dev <= tol))


def flatten_decomposition(D: Decomposition, sigma: FlatteningMap, shape) -> Decomposition:
    """Image of ``D`` under a flattening compatible with its signature.

    The result has one singleton-block factor per target mode of ``sigma``.
    """
    sig = D.signature
    groups = [[j for j, b in enumerate(sig.blocks) if sigma.assignment[b[0] - 1] == t]
              for t in range(1, sigma.target_degree + 1)]
    for j, b in enumerate(sig.blocks):
        if len({sigma.assignment[m - 1] for m in b}) != 1:
            raise ValueError("flattening map is not compatible with the signature")
    new_sig = Signature.singletons(sigma.target_degree)
    factors = []
    for row in D.factors:
        new_row = []
        for js in groups:
            modes = sorted(m for j in js for m in sig.blocks[j])
            piece = reconstruct(
                Decomposition(_sub_signature(sig, js, modes), [1.0], [[row[j] for j in js]]),
                [shape[m - 1] for m in modes],
            )
            new_row.append(Tensor(piece.values.copy()))
        factors.append(new_row)
    return Decomposition(new_sig, D.weights.copy(), factors)
