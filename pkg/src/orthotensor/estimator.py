"""Recover mixture weights and means from second and third moments.

The second moment is used to whiten the third; the whitened tensor has an
orthogonal CP decomposition whose weights are ``w_i^{-1/2}`` and whose
factors are the whitened means. One SVD of a flattening recovers both, a
rank-one SVD per summand gives two more estimates of each factor, and the
means are mapped back with the pseudo-inverse of the whitening.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import linalg
from .flatten import FlatteningMap, flatten
from .moments import MixtureModel, empirical_moment
from .tensor import ShapeError, Tensor, apply_linear, as_tensor, frobenius_norm, outer_power

DEFAULT_TOL_RANK = 1e-2
DEFAULT_TOL_RESIDUAL = 0.1
AVERAGING_MODES = ("none", "three")


class ModelViolation(ValueError):
    """Input moments are inconsistent with a rank-one mixture (e.g. M2 not PSD)."""


class DecompositionFailed(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass
class EstimationResult:
    """Estimated model plus diagnostics.

    ``alignment[i]`` holds the cosines between the per-summand rank-one
    estimates and the flattening's left singular vector after sign
    alignment (one pair per averaged run). ``mean_norms`` are the norms of
    the back-transformed means before they were scaled to unit length.
    """

    model: MixtureModel
    rank: int
    m2_singular_values: np.ndarray
    whitened_residual: float
    alignment: np.ndarray
    mean_norms: np.ndarray
    whitened_weights: np.ndarray
    whitened_means: np.ndarray

    @property
    def weight_sum(self) -> float:
        return float(self.model.weights.sum())


def _cubic(T: np.ndarray, u: np.ndarray) -> float:
    return float(np.einsum("ijk,i,j,k->", T, u, u, u))


def _check_m3_symmetric(M3: np.ndarray, tol: float):
    scale = max(float(np.max(np.abs(M3))), np.finfo(float).tiny)
    for perm in permutations(range(3)):
        if np.max(np.abs(M3 - np.transpose(M3, perm))) > tol * scale:
            raise ModelViolation("third moment is not symmetric")


def _decompose_whitened(T: Tensor, lead: int, r: int):
    """Orthogonal CP factors of the whitened tensor, from flattening mode ``lead`` vs the rest.

    Returns ``(weights, estimates, cosines)`` with ``estimates`` of shape
    (r, 3, r): for each summand the left singular vector followed by the
    two sign-aligned rank-one factors of the unflattened right vector.
    """
    assignment = [2, 2, 2]
    assignment[lead - 1] = 1
    res = linalg.svd(flatten(T, FlatteningMap(tuple(assignment))).array, tol=0.0)
    if res.rank < r:
        raise DecompositionFailed(
            f"whitened tensor flattening has rank {res.rank} < {r}", residual=float("nan")
        )
    weights = res.singular_values[:r].copy()
    estimates = np.empty((r, 3, r))
    cosines = np.empty((r, 2))
    for i in range(r):
        u = res.U[:, i].copy()
        v = res.V[:, i].copy()
        # v only encodes mu (x) mu, so the sign of u is fixed by the cubic form
        if _cubic(T.array, u) < 0:
            u, v = -u, -v
        inner = linalg.svd(v.reshape(r, r), tol=0.0)
        a, b = inner.U[:, 0], inner.V[:, 0]
        a = a if a @ u >= 0 else -a
        b = b if b @ u >= 0 else -b
        estimates[i] = (u, a, b)
        cosines[i] = (a @ u, b @ u)
    return weights, estimates, cosines


def _match(ref: np.ndarray, other: np.ndarray):
    """Greedy matching of rows of ``other`` to rows of ``ref`` by |cosine|; returns order and signs."""
    C = ref @ other.T
    r = ref.shape[0]
    order = np.full(r, -1)
    used = set()
    for flat in np.argsort(-np.abs(C), axis=None, kind="stable"):
        a, b = divmod(int(flat), r)
        if order[a] < 0 and b not in used:
            order[a] = b
            used.add(b)
    signs = np.sign(C[np.arange(r), order])
    signs[signs == 0] = 1.0
    return order, signs


def identify(M2, M3, tol_rank: float = DEFAULT_TOL_RANK, averaging: str = "none",
             tol_residual: float | None = DEFAULT_TOL_RESIDUAL,
             sym_tol: float = 1e-8) -> EstimationResult:
    """Estimate ``(w_i, mu_i)`` from ``M2 = sum w_i mu_i mu_i^T`` and ``M3 = sum w_i mu_i^{(x)3}``.

    Parameters
    ----------
    M2, M3 : Tensor or array_like
        Second (n x n) and third (n x n x n) moments, exact or estimated.
    tol_rank : float
        Relative singular value threshold for the rank of ``M2``.
    averaging : {"none", "three"}
        ``"three"`` repeats the factor extraction with each of the three
        modes as the leading one and averages all nine estimates.
    tol_residual : float or None
        Maximum relative residual of the recovered CP decomposition of the
        whitened tensor; ``None`` skips the check. Tied weights make the
        factors non-identifiable by SVD and push the residual up.

    Raises
    ------
    ModelViolation
        ``M2`` is not symmetric PSD, or ``M3`` not symmetric.
    DecompositionFailed
        The whitened tensor did not decompose within ``tol_residual``.
    """
    M2 = np.asarray(as_tensor(M2).array)
    M3 = np.asarray(as_tensor(M3).array)
    if M2.ndim != 2 or M3.ndim != 3:
        raise ShapeError("expected a matrix M2 and a degree-3 tensor M3")
    n = M2.shape[0]
    if M2.shape != (n, n) or M3.shape != (n, n, n):
        raise ShapeError(f"incompatible moment shapes {M2.shape} and {M3.shape}")
    if averaging not in AVERAGING_MODES:
        raise ValueError(f"averaging must be one of {AVERAGING_MODES}")
    _check_m3_symmetric(M3, sym_tol)
    try:
        W, U, S = linalg.whiten(M2, tol_rank, sym_tol=sym_tol)
    except (linalg.NotPSDError, linalg.NotSymmetricError) as exc:
        raise ModelViolation(str(exc)) from exc
    m2_spectrum = linalg.svd(M2, tol=0.0).spectrum
    r = W.shape[1]
    T = apply_linear(W.T, M3)

    leads = (1,) if averaging == "none" else (1, 2, 3)
    runs = [_decompose_whitened(T, lead, r) for lead in leads]
    w_ref, est_ref, cos_ref = runs[0]
    wt_sum = w_ref.copy()
    mu_sum = est_ref.sum(axis=1)
    cosines = [cos_ref]
    for w_run, est, cos in runs[1:]:
        order, signs = _match(est_ref[:, 0], est[:, 0])
        wt_sum += w_run[order]
        mu_sum += signs[:, None] * est[order].sum(axis=1)
        cosines.append(cos[order])
    wt = wt_sum / len(runs)
    mu_w = mu_sum / np.linalg.norm(mu_sum, axis=1, keepdims=True)

    recon = sum(wt[i] * outer_power(mu_w[i], 3).array for i in range(r))
    residual = frobenius_norm(T.array - recon) / max(frobenius_norm(T), np.finfo(float).eps)
    if tol_residual is not None and not residual <= tol_residual:
        raise DecompositionFailed(
            f"whitened tensor residual {residual:.3g} exceeds {tol_residual:.3g}", residual
        )

    # W^T has full row rank r; its pseudo-inverse maps whitened means back
    B = linalg.pseudo_inverse(W.T, tol=1e-12)
    means = (B @ mu_w.T * wt).T
    norms = np.linalg.norm(means, axis=1)
    weights = wt ** -2.0
    order = np.argsort(-weights, kind="stable")
    model = MixtureModel(weights[order], means[order] / norms[order, None])
    return EstimationResult(
        model=model,
        rank=r,
        m2_singular_values=m2_spectrum,
        whitened_residual=float(residual),
        alignment=np.concatenate(cosines, axis=1)[order],
        mean_norms=norms[order],
        whitened_weights=wt[order],
        whitened_means=mu_w[order],
    )


def identify_from_samples(samples, tol_rank: float = DEFAULT_TOL_RANK, averaging: str = "none",
                          tol_residual: float | None = DEFAULT_TOL_RESIDUAL) -> EstimationResult:
    S = np.asarray(samples, dtype=np.float64)
    return identify(empirical_moment(S, 2), empirical_moment(S, 3), tol_rank=tol_rank,
                    averaging=averaging, tol_residual=tol_residual)


def score(estimate: MixtureModel, truth: MixtureModel):
    """Errors of ``estimate`` against ``truth`` after optimal component matching.

    Components are matched by the permutation minimizing the largest mean
    error (exhaustive for r <= 6, greedy beyond). Means are compared with
    their signs as estimated. Returns ``(max_mean_error, max_weight_error)``;
    both are ``inf`` when the component counts differ.
    """
    if estimate.r != truth.r or estimate.n != truth.n:
        return float("inf"), float("inf")
    r = truth.r
    D = np.linalg.norm(truth.means[:, None, :] - estimate.means[None, :, :], axis=2)
    if r <= 6:
        best = min(permutations(range(r)), key=lambda p: max(D[i, p[i]] for i in range(r)))
    else:
        best = [int(np.argmin(D[i])) for i in range(r)]
    mean_err = max(D[i, best[i]] for i in range(r))
    weight_err = max(abs(truth.weights[i] - estimate.weights[best[i]]) for i in range(r))
    return float(mean_err), float(weight_err)
