"""Geodesic integration, two-point distance, and minimizing segments.

Distance is computed by minimizing the discrete energy of a polyline with
fixed endpoints (robust against conjugate-point shooting failures); shooting
is kept as a consistency check.  Catalog manifolds with closed-form
distances short-circuit the value but still produce a segment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, NoPathFound
from .flow import Trajectory, arclength_resample, curve_length
from .manifolds import (ManifoldSpec, TangentVector, as_point,
                        christoffel_many, in_domain_many, in_domain_point,
                        metric_deriv_many, metric_many)
from .rk import IntegratorConfig, integrate

__all__ = [
    "GeodesicSegment", "BvpConfig", "geodesic_shoot", "distance",
    "distance_value", "slit_plane_distance", "segment_initial_velocity",
]


@dataclass(frozen=True, eq=False)
class GeodesicSegment:
    """A discretized minimizing segment between two query points."""

    points: np.ndarray
    length: float
    converged: bool


@dataclass(frozen=True)
class BvpConfig:
    """Controls of the discrete-energy boundary-value solver."""

    nodes0: int = 129
    max_nodes: int = 1025
    rel_change: float = 1e-8
    maxiter: int = 1000


DEFAULT_BVP = BvpConfig()


def geodesic_shoot(m: ManifoldSpec, p, v, T: float,
                   cfg: IntegratorConfig | None = None,
                   t_eval=None) -> Trajectory:
    """Integrate the geodesic equation from p with initial velocity v.

    The second-order equation is integrated as a first-order system with
    the flow integrator; the returned trajectory carries positions and
    velocities.
    """
    p = as_point(p, m.dim)
    if isinstance(v, TangentVector):
        if not np.array_equal(v.base, p):
            raise ValueError("tangent vector not based at p")
        v = v.components
    v = np.asarray(v, dtype=float)
    if not in_domain_point(m, p):
        raise DomainError(f"shoot origin outside domain of {m.name}")
    n = m.dim
    nan = np.full(2 * n, np.nan)

    def rhs(z):
        x, u = z[:n], z[n:]
        try:
            gamma = christoffel_many(m, x[None])[0]
        except Exception:
            return nan
        acc = -np.einsum('kij,i,j->k', gamma, u, u)
        return np.concatenate([u, acc])

    def dom(z):
        return m.in_domain(z[:n])

    sol = integrate(rhs, np.concatenate([p, v]), float(T), cfg, in_domain=dom)
    if t_eval is None:
        times = sol.ts
    elif np.isscalar(t_eval):
        times = np.linspace(0.0, float(T), int(t_eval))
        times = times[times <= sol.complete_to + 1e-12]
    else:
        times = np.asarray(t_eval, dtype=float)
        times = times[times <= sol.complete_to + 1e-12]
    z = sol.eval(times)
    return Trajectory(times=times, points=z[:, :n], velocities=z[:, n:],
                      complete_to=sol.complete_to, dense=sol)


def _energy_and_grad(m: ManifoldSpec, nodes: np.ndarray):
    """Discrete energy sum_s d_s^T g(mid_s) d_s and its gradient in the
    interior nodes."""
    d = np.diff(nodes, axis=0)
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    G = metric_many(m, mids)
    Gd = np.einsum('sij,sj->si', G, d)
    E = float(np.einsum('si,si->', d, Gd))
    dG = metric_deriv_many(m, mids)
    Q = np.einsum('skab,sa,sb->sk', dG, d, d)
    grad = 2.0 * Gd[:-1] - 2.0 * Gd[1:] + 0.5 * (Q[:-1] + Q[1:])
    return E, grad


def _minimize_polyline(m: ManifoldSpec, nodes: np.ndarray,
                       cfg: BvpConfig) -> tuple[np.ndarray, bool]:
    n = m.dim
    N = nodes.shape[0]
    p, q = nodes[0], nodes[-1]

    def fun(x):
        full = np.empty((N, n))
        full[0], full[-1] = p, q
        full[1:-1] = x.reshape(N - 2, n)
        E, grad = _energy_and_grad(m, full)
        if not np.isfinite(E):
            return 1e300, np.zeros((N - 2) * n)
        return E, grad.ravel()

    res = minimize(fun, nodes[1:-1].ravel(), jac=True, method="L-BFGS-B",
                   options={"maxiter": cfg.maxiter, "ftol": 1e-16,
                            "gtol": 1e-12, "maxcor": 30})
    out = np.empty((N, n))
    out[0], out[-1] = p, q
    out[1:-1] = res.x.reshape(N - 2, n)
    return out, bool(res.success)


def _upsample(nodes: np.ndarray) -> np.ndarray:
    N = nodes.shape[0]
    out = np.empty((2 * N - 1, nodes.shape[1]))
    out[::2] = nodes
    out[1::2] = 0.5 * (nodes[:-1] + nodes[1:])
    return out


def _solve_bvp(m: ManifoldSpec, p: np.ndarray, q: np.ndarray,
               cfg: BvpConfig):
    """Energy-minimizing polyline from the chart-straight initializer.

    Node count doubles until the length settles (relative change below
    ``cfg.rel_change``) or ``max_nodes`` is reached; the returned value is
    Richardson-extrapolated across the last two levels, the polyline is the
    final level's minimizer.
    """
    nodes = np.linspace(0.0, 1.0, cfg.nodes0)[:, None] * (q - p) + p
    try:
        nodes = arclength_resample(m, nodes, cfg.nodes0)
    except DomainError:
        pass
    lengths = []
    ok = False
    while True:
        nodes, ok = _minimize_polyline(m, nodes, cfg)
        lengths.append(curve_length(m, nodes) if
                       np.all(in_domain_many(m, nodes)) else np.nan)
        if not np.isfinite(lengths[-1]):
            raise NoPathFound(
                f"optimizer left the admissible set of {m.name}")
        if len(lengths) >= 2 and abs(lengths[-1] - lengths[-2]) <= \
                cfg.rel_change * max(lengths[-1], 1e-300):
            break
        if nodes.shape[0] * 2 - 1 > cfg.max_nodes:
            break
        nodes = _upsample(nodes)
    if len(lengths) >= 2:
        value = lengths[-1] + (lengths[-1] - lengths[-2]) / 3.0
    else:
        value = lengths[-1]
    return value, nodes, ok


def distance(m: ManifoldSpec, p, q, cfg: BvpConfig | None = None,
             method: str = "auto"):
    """Riemannian distance and a minimizing segment.

    ``method="auto"`` uses the manifold's closed-form distance when present
    (the segment still comes from the hint or the numerical minimizer);
    ``method="numeric"`` forces the boundary-value solver, which is how the
    closed forms are cross-checked.
    """
    cfg = cfg or DEFAULT_BVP
    p = as_point(p, m.dim)
    q = as_point(q, m.dim)
    for x in (p, q):
        if not in_domain_point(m, x):
            raise DomainError(f"query point outside domain of {m.name}")
    if np.array_equal(p, q):
        pts = np.stack([p, q])
        return 0.0, GeodesicSegment(points=pts, length=0.0, converged=True)

    use_analytic = method == "auto" and m.distance_analytic is not None
    if method not in ("auto", "numeric"):
        raise ValueError("method must be 'auto' or 'numeric'")

    hint = m.geodesic_hint if method == "auto" else None
    if hint is not None:
        pts, exact = hint(p, q, cfg.nodes0)
        num_value = curve_length(m, pts)
        converged = exact
    else:
        num_value, pts, converged = _solve_bvp(m, p, q, cfg)
    if not np.all(in_domain_many(m, pts)):
        raise NoPathFound(f"no admissible polyline found on {m.name}")

    value = float(m.distance_analytic(p, q)) if use_analytic else float(num_value)
    seg = GeodesicSegment(points=pts, length=curve_length(m, pts),
                          converged=converged)
    return value, seg


def distance_value(m: ManifoldSpec, p, q,
                   cfg: BvpConfig | None = None) -> float:
    """Distance only; skips segment construction when a closed form exists.
    Used by certification loops that query many point pairs."""
    if m.distance_analytic is not None:
        p = as_point(p, m.dim)
        q = as_point(q, m.dim)
        for x in (p, q):
            if not in_domain_point(m, x):
                raise DomainError(f"query point outside domain of {m.name}")
        return float(m.distance_analytic(p, q))
    return distance(m, p, q, cfg)[0]


def segment_initial_velocity(seg: GeodesicSegment) -> np.ndarray:
    """Initial chart velocity of a segment parametrized on [0, 1].

    One-sided third-order difference through the first four nodes; feeding
    this to :func:`geodesic_shoot` for T=1 should land on the far endpoint
    (the shooting-consistency check).
    """
    c = seg.points
    if c.shape[0] < 4:
        raise ValueError("need at least 4 nodes")
    h = 1.0 / (c.shape[0] - 1)
    return (-11.0 * c[0] + 18.0 * c[1] - 9.0 * c[2] + 2.0 * c[3]) / (6.0 * h)


def _slit_in_domain(p) -> bool:
    # open complement of the closed ray {x = 0, y >= 0}
    return not (p[0] == 0.0 and p[1] >= 0.0)


def slit_plane_distance(p, q) -> float:
    """Exact distance on the plane slit along the nonnegative y-axis.

    Euclidean unless the open segment p-q crosses the slit, in which case
    the shortest route passes the slit tip at the origin and the infimum is
    |p| + |q| (attained only in the closure).  Sign predicates are exact;
    no epsilon tuning.
    """
    p = as_point(p, 2)
    q = as_point(q, 2)
    for x in (p, q):
        if not _slit_in_domain(x):
            raise DomainError(f"point {x.tolist()} lies on the slit")
    crosses = False
    if p[0] * q[0] < 0.0:
        y_c = p[1] + (q[1] - p[1]) * (0.0 - p[0]) / (q[0] - p[0])
        crosses = y_c > 0.0
    if crosses:
        return float(np.hypot(*p) + np.hypot(*q))
    return float(np.hypot(*(p - q)))


def slit_plane_segment(p, q, k: int):
    """Polyline realizing (to within an infinitesimal detour) the slit-plane
    distance.  Crossing pairs route through (0, -delta) just below the tip;
    such a segment is marked unconverged since the infimum is not attained
    in the open manifold."""
    p = as_point(p, 2)
    q = as_point(q, 2)
    crosses = False
    if p[0] * q[0] < 0.0:
        y_c = p[1] + (q[1] - p[1]) * (0.0 - p[0]) / (q[0] - p[0])
        crosses = y_c > 0.0
    if not crosses:
        pts = np.linspace(0.0, 1.0, k)[:, None] * (q - p) + p
        return pts, True
    delta = 1e-8 * max(1.0, float(np.hypot(*p)), float(np.hypot(*q)))
    tip = np.array([0.0, -delta])
    l1, l2 = np.hypot(*(tip - p)), np.hypot(*(q - tip))
    k1 = max(2, int(round(k * l1 / (l1 + l2))))
    k1 = min(k1, k - 2)
    leg1 = np.linspace(0.0, 1.0, k1, endpoint=False)[:, None] * (tip - p) + p
    leg2 = np.linspace(0.0, 1.0, k - k1)[:, None] * (q - tip) + tip
    return np.vstack([leg1, leg2]), False
