"""Chart-based Riemannian manifolds: metrics, Christoffel symbols, tangent
norms, covariant differentials and their metric operator norms.

A manifold is a single global chart with an open admissible set.  All
evaluators are pure functions of the chart point; specs marked
``vectorized`` accept stacked points of shape ``(..., n)`` and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, NumericalError

# Relative step for central differences of metrics and vector fields;
# per-coordinate step is FD_STEP * max(1, |coord|).
FD_STEP = 1e-5


def as_point(p, dim: int | None = None) -> np.ndarray:
    """Validate chart coordinates: 1-d, finite, optionally of length dim."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"chart point must be 1-d, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ValueError(f"expected {dim} coordinates, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("chart point has non-finite coordinates")
    return arr


@dataclass(frozen=True, eq=False)
class ManifoldSpec:
    """A Riemannian manifold presented in one chart.

    ``metric_at`` returns the matrix of the metric at a chart point; it must
    be symmetric positive definite on the admissible set described by the
    open predicate ``in_domain``.  ``christoffel_analytic`` and
    ``distance_analytic`` are optional closed forms that short-circuit the
    finite-difference and boundary-value paths.  ``geodesic_hint`` may
    supply an explicit minimizing polyline ``(p, q, k) -> (k, n) array`` for
    manifolds where the minimizer is known in closed form.
    """

    dim: int
    metric_at: Callable[[np.ndarray], np.ndarray]
    in_domain: Callable[[np.ndarray], bool]
    christoffel_analytic: Optional[Callable[[np.ndarray], np.ndarray]] = None
    distance_analytic: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    name: str = "custom"
    vectorized: bool = False
    geodesic_hint: Optional[Callable] = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Components of a tangent vector attached to a chart point."""

    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", as_point(self.base))
        comps = np.asarray(self.components, dtype=float)
        if comps.shape != self.base.shape:
            raise ValueError("components must match base dimension")
        object.__setattr__(self, "components", comps)


@dataclass(frozen=True, eq=False)
class LinearMap:
    """A linear endomorphism of the tangent space at ``base``."""

    base: np.ndarray
    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "base", as_point(self.base))
        ent = np.asarray(self.entries, dtype=float)
        n = self.base.shape[0]
        if ent.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n}")
        if not np.all(np.isfinite(ent)):
            raise ValueError("entries must be finite")
        object.__setattr__(self, "entries", ent)


def in_domain_point(m: ManifoldSpec, p) -> bool:
    return bool(m.in_domain(np.asarray(p, dtype=float)))


def in_domain_many(m: ManifoldSpec, P: np.ndarray) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if m.vectorized:
        return np.asarray(m.in_domain(P), dtype=bool).reshape(P.shape[:-1])
    return np.array([bool(m.in_domain(p)) for p in P])


def _require_domain(m: ManifoldSpec, p: np.ndarray):
    if not in_domain_point(m, p):
        raise DomainError(f"point {p.tolist()} outside domain of {m.name}")


def metric_eval(m: ManifoldSpec, p) -> np.ndarray:
    """Metric matrix at p, symmetrized to absorb evaluator roundoff."""
    p = as_point(p, m.dim)
    _require_domain(m, p)
    g = np.asarray(m.metric_at(p), dtype=float)
    if g.shape != (m.dim, m.dim):
        raise NumericalError(f"metric evaluator returned shape {g.shape}")
    return 0.5 * (g + g.T)


def metric_many(m: ManifoldSpec, P: np.ndarray) -> np.ndarray:
    """Metric matrices along a stack of points, shape (N, n, n). No domain
    check; callers own the validity of the sample set."""
    P = np.asarray(P, dtype=float)
    if m.vectorized:
        g = np.asarray(m.metric_at(P), dtype=float)
    else:
        g = np.stack([np.asarray(m.metric_at(p), dtype=float) for p in P])
    return 0.5 * (g + np.swapaxes(g, -1, -2))


def _fd_steps(P: np.ndarray, h: float | None) -> np.ndarray:
    base = FD_STEP if h is None else float(h)
    return base * np.maximum(1.0, np.abs(P))


def metric_deriv_many(m: ManifoldSpec, P: np.ndarray,
                      h: float | None = None) -> np.ndarray:
    """Partial derivatives of the metric, D[..., k, a, b] = d g_ab / d x_k.

    Uses the compatibility identity with analytic Christoffels when present,
    else central differences of the metric evaluator.
    """
    P = np.asarray(P, dtype=float)
    n = m.dim
    if m.christoffel_analytic is not None:
        G = christoffel_many(m, P)
        g = metric_many(m, P)
        # d_k g_ab = g_cb G^c_ka + g_ac G^c_kb
        return (np.einsum('...cb,...cka->...kab', g, G)
                + np.einsum('...ac,...ckb->...kab', g, G))
    steps = _fd_steps(P, h)
    D = np.empty(P.shape[:-1] + (n, n, n))
    for k in range(n):
        hk = steps[..., k]
        Pp = P.copy()
        Pm = P.copy()
        Pp[..., k] += hk
        Pm[..., k] -= hk
        D[..., k, :, :] = (metric_many(m, Pp) - metric_many(m, Pm)) \
            / (2.0 * hk)[..., None, None]
    return D


def christoffel_many(m: ManifoldSpec, P: np.ndarray,
                     h: float | None = None) -> np.ndarray:
    """Christoffel symbols G[..., k, i, j] = Gamma^k_ij along a point stack."""
    P = np.asarray(P, dtype=float)
    if m.christoffel_analytic is not None:
        if m.vectorized:
            return np.asarray(m.christoffel_analytic(P), dtype=float)
        return np.stack([np.asarray(m.christoffel_analytic(p), dtype=float)
                         for p in P])
    dg = metric_deriv_many(m, P, h)
    g = metric_many(m, P)
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"metric inversion failed on {m.name}") from exc
    T = (dg + np.swapaxes(dg, -3, -2)
         - np.moveaxis(dg, (-3, -2, -1), (-1, -3, -2)))
    return 0.5 * np.einsum('...kl,...ijl->...kij', ginv, T)


def christoffel(m: ManifoldSpec, p, h: float | None = None) -> np.ndarray:
    """Christoffel symbols Gamma^k_ij at p (analytic when available, else
    central differences of the metric with per-coordinate step h)."""
    p = as_point(p, m.dim)
    _require_domain(m, p)
    if m.christoffel_analytic is not None:
        return np.asarray(m.christoffel_analytic(p), dtype=float)
    steps = _fd_steps(p, h)
    for k in range(m.dim):
        for sgn in (+1.0, -1.0):
            q = p.copy()
            q[k] += sgn * steps[k]
            if not in_domain_point(m, q):
                raise DomainError(
                    f"finite-difference stencil leaves domain of {m.name} "
                    f"near {p.tolist()}")
    return christoffel_many(m, p[None], h)[0]


def tangent_norm(m: ManifoldSpec, v: TangentVector) -> float:
    """Metric length of a tangent vector."""
    _require_domain(m, v.base)
    g = metric_eval(m, v.base)
    val = float(v.components @ g @ v.components)
    return float(np.sqrt(max(val, 0.0)))


def _field_jacobian_many(X, P: np.ndarray, h: float | None):
    """Batched Jacobian J[..., i, j] = d X^i / d x_j of a vector field."""
    P = np.asarray(P, dtype=float)
    n = P.shape[-1]
    if getattr(X, "jacobian_analytic", None) is not None:
        if getattr(X, "vectorized", False):
            return np.asarray(X.jacobian_analytic(P), dtype=float)
        return np.stack([np.asarray(X.jacobian_analytic(p), dtype=float)
                         for p in P])
    steps = _fd_steps(P, h)
    J = np.empty(P.shape[:-1] + (n, n))
    for j in range(n):
        hj = steps[..., j]
        Pp = P.copy()
        Pm = P.copy()
        Pp[..., j] += hj
        Pm[..., j] -= hj
        J[..., :, j] = (field_many(X, Pp) - field_many(X, Pm)) \
            / (2.0 * hj)[..., None]
    return J


def field_many(X, P: np.ndarray) -> np.ndarray:
    """Vector-field components along a stack of points."""
    P = np.asarray(P, dtype=float)
    if getattr(X, "vectorized", False):
        return np.asarray(X.components(P), dtype=float)
    return np.stack([np.asarray(X.components(p), dtype=float) for p in P])


def covariant_differential(m: ManifoldSpec, X, p,
                           h: float | None = None) -> LinearMap:
    """The linear map Y -> nabla_Y X at p.

    Entry (i, j) is d_j X^i + Gamma^i_jk X^k; analytic field partials are
    used when provided, else central differences with step h.
    """
    p = as_point(p, m.dim)
    _require_domain(m, p)
    gamma = christoffel(m, p, h)
    J = _field_jacobian_many(X, p[None], h)[0]
    Xp = np.asarray(X.components(p), dtype=float)
    entries = J + np.einsum('ijk,k->ij', gamma, Xp)
    if not np.all(np.isfinite(entries)):
        raise NumericalError(
            f"covariant differential non-finite at {p.tolist()}")
    return LinearMap(base=p, entries=entries)


def _chol_upper_many(g: np.ndarray) -> np.ndarray:
    """Upper factors U with g = U^T U (batched)."""
    try:
        L = np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("metric not positive definite") from exc
    return np.swapaxes(L, -1, -2)


def _sigma_max_many(M: np.ndarray) -> np.ndarray:
    """Largest singular values of a batch of small matrices."""
    if M.shape[-1] == 2:
        a, b = M[..., 0, 0], M[..., 0, 1]
        c, d = M[..., 1, 0], M[..., 1, 1]
        t = a * a + b * b + c * c + d * d
        det = a * d - b * c
        disc = np.sqrt(np.maximum(t * t - 4.0 * det * det, 0.0))
        return np.sqrt(np.maximum(0.5 * (t + disc), 0.0))
    return np.linalg.svd(M, compute_uv=False)[..., 0]


def operator_norm_many(m: ManifoldSpec, P: np.ndarray,
                       A: np.ndarray) -> np.ndarray:
    """Metric operator norms of maps A[..., :, :] based at P[..., :]."""
    g = metric_many(m, P)
    U = _chol_upper_many(g)
    UA = U @ A
    # W = U A U^{-1}, solved as U^T W^T = (U A)^T
    W = np.swapaxes(np.linalg.solve(np.swapaxes(U, -1, -2),
                                    np.swapaxes(UA, -1, -2)), -1, -2)
    return _sigma_max_many(W)


def operator_norm(m: ManifoldSpec, A: LinearMap) -> float:
    """Mapping norm sup ||Av||_g / ||v||_g via Cholesky whitening."""
    _require_domain(m, A.base)
    return float(operator_norm_many(m, A.base[None], A.entries[None])[0])


def grad_norm_many(m: ManifoldSpec, X, P: np.ndarray,
                   h: float | None = None) -> np.ndarray:
    """||nabla X||_g along a stack of points (the tube evaluator).

    Non-finite entries (stencils straddling the domain boundary on custom
    manifolds) yield NaN rather than raising; samplers drop them.
    """
    P = np.asarray(P, dtype=float)
    gamma = christoffel_many(m, P, h)
    J = _field_jacobian_many(X, P, h)
    Xp = field_many(X, P)
    A = J + np.einsum('...ijk,...k->...ij', gamma, Xp)
    bad = ~np.all(np.isfinite(A), axis=(-1, -2))
    if np.any(bad):
        A = np.where(bad[..., None, None], np.eye(m.dim), A)
        out = operator_norm_many(m, P, A)
        out = np.where(bad, np.nan, out)
        return out
    return operator_norm_many(m, P, A)
