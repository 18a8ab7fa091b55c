"""Vector-field flows, curve families, lengths and the mixed-derivative
swap diagnostic.

Flows are integrated with the adaptive RK 4(5) driver from :mod:`.rk`;
curves are polylines in chart coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, IncompleteFlow
from .manifolds import (ManifoldSpec, as_point, christoffel_many,
                        in_domain_many, in_domain_point, metric_many)
from .rk import DenseSolution, IntegratorConfig, integrate

__all__ = [
    "VectorFieldSpec", "Trajectory", "CurveFamily", "IntegratorConfig",
    "flow_point", "flow_curve", "curve_length", "length_evolution",
    "torsion_swap_residual", "arclength_resample",
]

# Gauss-Legendre 2-point nodes on [0, 1]
_GL_S1 = 0.5 - 0.5 / np.sqrt(3.0)
_GL_S2 = 0.5 + 0.5 / np.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class VectorFieldSpec:
    """A smooth vector field given by chart-component functions.

    ``jacobian_analytic`` short-circuits finite differencing of the
    components.  ``operator_norm_sup``, when set, is a known global bound of
    ``||nabla X||_g`` for the manifold the field was built for; the global
    sampler uses it verbatim.
    """

    components: Callable[[np.ndarray], np.ndarray]
    jacobian_analytic: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "custom"
    vectorized: bool = False
    operator_norm_sup: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples of one integral curve.

    ``complete_to`` is the largest admissible flow time: equal to the
    requested horizon when the flow never left the domain, else the exit
    time localized to 1e-9.  ``velocities`` is populated by geodesic
    shooting.  ``dense`` retains the integrator knots for resampling.
    """

    times: np.ndarray
    points: np.ndarray
    complete_to: float
    velocities: Optional[np.ndarray] = None
    dense: Optional[DenseSolution] = field(default=None, repr=False)


@dataclass(frozen=True, eq=False)
class CurveFamily:
    """The two-parameter surface c(t, tau): row i is the flowed curve at
    times[i]; row 0 equals the input curve samples."""

    times: np.ndarray
    params: np.ndarray
    grid: np.ndarray  # (len(times), len(params), n)


def _rhs_of(X: VectorFieldSpec, n: int):
    nan = np.full(n, np.nan)

    def rhs(y):
        try:
            return np.asarray(X.components(y), dtype=float)
        except Exception:
            return nan

    return rhs


def _integrate_field(m: ManifoldSpec, X: VectorFieldSpec, p0: np.ndarray,
                     T: float, cfg: IntegratorConfig | None) -> DenseSolution:
    return integrate(_rhs_of(X, m.dim), p0, T, cfg, in_domain=m.in_domain)


def _sample_times(t_eval, T: float, sol: DenseSolution):
    if t_eval is None:
        return sol.ts
    if np.isscalar(t_eval):
        grid = np.linspace(0.0, T, int(t_eval))
    else:
        grid = np.asarray(t_eval, dtype=float)
    return grid[grid <= sol.complete_to + 1e-12]


def flow_point(m: ManifoldSpec, X: VectorFieldSpec, p0, T: float,
               cfg: IntegratorConfig | None = None,
               t_eval=None) -> Trajectory:
    """Flow a single point for time T.

    ``t_eval`` selects the output grid: None for the accepted integration
    steps, an integer k for k uniform samples on [0, T], or an explicit
    array.  The trajectory stops early (``complete_to`` < T) if the solution
    leaves the admissible set or the step size underflows.
    """
    p0 = as_point(p0, m.dim)
    if not in_domain_point(m, p0):
        raise DomainError(f"initial point outside domain of {m.name}")
    if T <= 0:
        raise ValueError("flow horizon T must be positive")
    sol = _integrate_field(m, X, p0, float(T), cfg)
    times = _sample_times(t_eval, float(T), sol)
    pts = sol.eval(times)
    return Trajectory(times=times, points=pts, complete_to=sol.complete_to,
                      dense=sol)


def flow_curve(m: ManifoldSpec, X: VectorFieldSpec, c0, T: float,
               cfg: IntegratorConfig | None = None,
               t_samples: int = 33, params=None) -> CurveFamily:
    """Flow every sample of a curve independently over a shared time grid.

    Raises :class:`IncompleteFlow` naming the first curve parameter whose
    trajectory leaves the domain before T.
    """
    pts0 = np.asarray(c0, dtype=float)
    if pts0.ndim != 2 or pts0.shape[0] < 2 or pts0.shape[1] != m.dim:
        raise ValueError("initial curve must be a (k>=2, dim) array")
    if not np.all(in_domain_many(m, pts0)):
        raise DomainError("initial curve leaves the admissible set")
    if params is None:
        params = np.linspace(0.0, 1.0, pts0.shape[0])
    else:
        params = np.asarray(params, dtype=float)
    times = np.linspace(0.0, float(T), int(t_samples))
    rows = np.empty((times.shape[0], pts0.shape[0], m.dim))
    for i, p in enumerate(pts0):
        sol = _integrate_field(m, X, p, float(T), cfg)
        if not sol.complete or sol.complete_to < T:
            raise IncompleteFlow(
                f"curve sample {i} (tau={params[i]:.6g}) leaves the domain "
                f"at t={sol.complete_to:.9g} < T={T:.6g}",
                tau=float(params[i]), seed_index=i,
                exit_time=sol.complete_to)
        rows[:, i, :] = sol.eval(times)
    rows[0] = pts0
    return CurveFamily(times=times, params=params, grid=rows)


def _segment_norms(m: ManifoldSpec, pts: np.ndarray) -> np.ndarray:
    """Gauss-2 quadrature of ||c'||_g on each chart-linear segment."""
    delta = np.diff(pts, axis=0)
    q1 = pts[:-1] + _GL_S1 * delta
    q2 = pts[:-1] + _GL_S2 * delta
    g1 = metric_many(m, q1)
    g2 = metric_many(m, q2)
    s1 = np.einsum('ki,kij,kj->k', delta, g1, delta)
    s2 = np.einsum('ki,kij,kj->k', delta, g2, delta)
    return 0.5 * (np.sqrt(np.maximum(s1, 0.0)) + np.sqrt(np.maximum(s2, 0.0)))


def curve_length(m: ManifoldSpec, pts) -> float:
    """Length of a polyline, metric evaluated at two Gauss nodes per
    segment of the chart-linear interpolant."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two points")
    if not np.all(in_domain_many(m, pts)):
        raise DomainError("polyline leaves the admissible set")
    return float(np.sum(_segment_norms(m, pts)))


def cumulative_length(m: ManifoldSpec, pts: np.ndarray) -> np.ndarray:
    """Cumulative polyline length at each vertex (starts at 0)."""
    seg = _segment_norms(m, np.asarray(pts, dtype=float))
    return np.concatenate([[0.0], np.cumsum(seg)])


def arclength_resample(m: ManifoldSpec, pts, k: int) -> np.ndarray:
    """Resample a polyline at k vertices uniform in metric arclength."""
    pts = np.asarray(pts, dtype=float)
    cum = cumulative_length(m, pts)
    total = cum[-1]
    if total <= 0:
        return np.repeat(pts[:1], k, axis=0)
    targets = np.linspace(0.0, total, k)
    out = np.empty((k, pts.shape[1]))
    for d in range(pts.shape[1]):
        out[:, d] = np.interp(targets, cum, pts[:, d])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return out


def length_evolution(m: ManifoldSpec, fam: CurveFamily):
    """times and l(t) of each flowed row of a curve family."""
    lengths = np.array([float(np.sum(_segment_norms(m, row)))
                        for row in fam.grid])
    return fam.times, lengths


def torsion_swap_residual(m: ManifoldSpec, X: VectorFieldSpec,
                          fam: CurveFamily, t_index: int,
                          tau_index: int) -> float:
    """Defect of the covariant-derivative swap on the discrete family.

    Compares nabla_t (d c / d tau) against nabla_tau (d c / d t) with the
    tau-derivatives taken by central differences on the grid and the
    t-derivative of the curve supplied exactly by the field.  Converges at
    second order in both grid spacings; a diagnostic, not ground truth.
    """
    nt, ntau, _ = fam.grid.shape
    i, j = int(t_index), int(tau_index)
    if not (1 <= i <= nt - 2 and 1 <= j <= ntau - 2):
        raise IndexError("interior grid indices required")
    grid, times, params = fam.grid, fam.times, fam.params
    dtau = params[j + 1] - params[j - 1]
    dt = times[i + 1] - times[i - 1]

    def c_tau(ii):
        return (grid[ii, j + 1] - grid[ii, j - 1]) / dtau

    p = grid[i, j]
    ct = np.asarray(X.components(p), dtype=float)
    ctau = c_tau(i)
    gamma = christoffel_many(m, p[None])[0]

    dA = (c_tau(i + 1) - c_tau(i - 1)) / dt
    A = dA + np.einsum('kab,a,b->k', gamma, ct, ctau)
    Xp = np.asarray(X.components(grid[i, j + 1]), dtype=float)
    Xm = np.asarray(X.components(grid[i, j - 1]), dtype=float)
    dB = (Xp - Xm) / dtau
    B = dB + np.einsum('kab,a,b->k', gamma, ctau, ct)

    diff = A - B
    g = metric_many(m, p[None])[0]
    return float(np.sqrt(max(diff @ g @ diff, 0.0)))
