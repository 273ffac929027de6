"""Moment tensors and the rank-one mixture sample generator.

Moments are raw (uncentered): ``M_d = E[X (x) ... (x) X]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, apply_linear, frobenius_norm, outer_power

# Two-point law with P = 1/2 on each atom and E[Z^2] = E[Z^3] = 1. The atoms
# are the roots of z^2 - s z + q with s = sqrt(3) - 1, q = 1 - sqrt(3).
_S = math.sqrt(3.0) - 1.0
TWO_POINT_ATOMS = ((_S + math.sqrt(2.0 * math.sqrt(3.0))) / 2.0,
                   (_S - math.sqrt(2.0 * math.sqrt(3.0))) / 2.0)

SCALAR_LAWS = ("one", "two-point")


class SamplingError(ValueError):
    pass


@dataclass
class MixtureModel:
    """Weights ``w`` (r,) and unit means ``means`` (r, n) of a rank-one mixture."""

    weights: np.ndarray
    means: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64).reshape(-1)
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        if self.means.shape[0] != self.weights.shape[0]:
            raise ValueError(
                f"{self.weights.shape[0]} weights for {self.means.shape[0]} means"
            )

    @property
    def n(self) -> int:
        return self.means.shape[1]

    @property
    def r(self) -> int:
        return self.weights.shape[0]

    def validate(self, tol: float = 1e-12) -> "MixtureModel":
        """Check the model invariants; returns ``self`` for chaining."""
        if abs(self.weights.sum() - 1.0) > tol:
            raise ValueError(f"weights sum to {self.weights.sum():.17g}, not 1")
        norms = np.linalg.norm(self.means, axis=1)
        if np.any(np.abs(norms - 1.0) > tol):
            raise ValueError("means must have unit norm")
        if self.r > self.n or np.linalg.matrix_rank(self.means) < self.r:
            raise ValueError("means must be linearly independent")
        return self

    @classmethod
    def random(cls, n: int, weights, seed, max_cond: float = 10.0) -> "MixtureModel":
        """Model with the given weights and means from normalized Gaussian columns.

        Draws are repeated until the mean matrix has condition number at most
        ``max_cond``.
        """
        weights = np.asarray(weights, dtype=np.float64)
        rng = np.random.default_rng(seed)
        for _ in range(10_000):
            mu = rng.standard_normal((weights.size, n))
            mu /= np.linalg.norm(mu, axis=1, keepdims=True)
            if np.linalg.cond(mu) <= max_cond:
                return cls(weights, mu)
        raise RuntimeError(f"no mean matrix with condition <= {max_cond} found")


def model_moment(model: MixtureModel, d: int) -> Tensor:
    """``sum_i w_i mu_i^{(x) d}``."""
    if d < 1:
        raise ValueError("moment degree must be >= 1")
    acc = np.zeros((model.n,) * d)
    for w, mu in zip(model.weights, model.means):
        acc += w * outer_power(mu, d).array
    return Tensor(acc)


def empirical_moment(samples, d: int) -> Tensor:
    """Average of ``s^{(x) d}`` over the rows of ``samples``."""
    S = np.asarray(samples, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] == 0:
        raise ValueError("need a nonempty (N, n) sample array")
    if d < 1:
        raise ValueError("moment degree must be >= 1")
    if not np.all(np.isfinite(S)):
        raise ValueError("samples must be finite")
    N, n = S.shape
    if d == 1:
        return Tensor(S.mean(axis=0))
    # rows of P are s^{(x)(d-1)}, flattened; M_d = S^T P / N
    P = S
    for _ in range(d - 2):
        P = (P[:, :, None] * S[:, None, :]).reshape(N, -1)
    return Tensor((S.T @ P).reshape((n,) * d) / N)


def _draw_z(law: str, N: int, rng) -> np.ndarray:
    if law == "one":
        return np.ones(N)
    if law == "two-point":
        return np.where(rng.random(N) < 0.5, *TWO_POINT_ATOMS)
    raise ValueError(f"unknown scalar law {law!r}; expected one of {SCALAR_LAWS}")


def sample_mixture(model: MixtureModel, N: int, seed, law: str = "one") -> np.ndarray:
    """``N`` i.i.d. draws ``mu_c * Z`` with ``c ~ w`` and ``Z`` from ``law``."""
    if np.any(model.weights < 0):
        raise SamplingError("sampling needs nonnegative weights")
    if N < 1:
        raise SamplingError("sample count must be positive")
    rng = np.random.default_rng(seed)
    p = model.weights / model.weights.sum()
    comp = rng.choice(model.r, size=N, p=p)
    z = _draw_z(law, N, rng)
    return model.means[comp] * z[:, None]


def transform_moment_check(A, samples, d: int) -> float:
    """``||M_d(A S) - A o M_d(S)||_F`` for the empirical measure of ``samples``."""
    A = np.asarray(A, dtype=np.float64)
    S = np.asarray(samples, dtype=np.float64)
    lhs = empirical_moment(S @ A.T, d)
    rhs = apply_linear(A, empirical_moment(S, d))
    return frobenius_norm(lhs.array - rhs.array)
