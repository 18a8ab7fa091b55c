"""Separation certificates: estimate the exponent C_T over a flowed tube,
bound d(p(t), q(t)) by d0 * exp(C_T t), and report violations.

C_T suprema are estimated by sampling with grid refinement plus a local
zoom around the running argmax.  Every estimate is a lower bound of the
true supremum (only sampled values are ever reported); certificates carry a
convergence flag and an audit subset of the evaluated points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import GridMismatch, IncompleteFlow
from .flow import (Trajectory, VectorFieldSpec, flow_curve, flow_point,
                   length_evolution)
from .geodesics import BvpConfig, distance, distance_value
from .manifolds import (ManifoldSpec, as_point, grad_norm_many,
                        in_domain_many, in_domain_point)
from .rk import DenseSolution, IntegratorConfig, integrate

__all__ = [
    "RefinementConfig", "SamplerConfig", "CertifyConfig", "CTEstimate",
    "GronwallCertificate", "ViolationReport", "estimate_CT_tube",
    "estimate_CT_global", "certify_pair", "certify_curve", "check_bound",
    "enclosure_radius",
]

_EPS = np.finfo(float).eps
_AUDIT_CAP = 8192


@dataclass(frozen=True)
class RefinementConfig:
    """Grid-refinement schedule for tube suprema."""

    t_samples0: int = 33
    max_rounds: int = 6
    rel_change: float = 1e-4
    zoom_levels: int = 8


@dataclass(frozen=True)
class SamplerConfig:
    """Coordinate box and schedule for the global supremum sampler."""

    box_low: tuple
    box_high: tuple
    grid0: int = 65
    grid_cap: int = 257
    max_rounds: int = 6
    rel_change: float = 1e-4
    zoom_levels: int = 10
    use_analytic: bool = True


@dataclass
class CertifyConfig:
    """Everything a certification run needs beyond the strategy name."""

    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    refine: RefinementConfig = field(default_factory=RefinementConfig)
    bvp: BvpConfig = field(default_factory=BvpConfig)
    sampler: Optional[SamplerConfig] = None
    submanifold_seeds: Optional[np.ndarray] = None
    t_samples: int = 201
    slack: Optional[float] = None
    force_incomplete: bool = False


@dataclass(frozen=True, eq=False)
class CTEstimate:
    """Sampled lower bound of sup ||nabla X||_g over a region.

    Iterates as the (value, samples, converged) triple; ``history`` holds
    the per-round running maxima (nondecreasing by construction) and
    ``argmax`` the best sample point found.
    """

    c_t: float
    samples: np.ndarray
    converged: bool
    history: tuple = ()
    argmax: Optional[np.ndarray] = None

    def __iter__(self):
        return iter((self.c_t, self.samples, self.converged))


@dataclass(frozen=True, eq=False)
class GronwallCertificate:
    """The data backing a bound d(p(t), q(t)) <= d0 * exp(C_T t)."""

    strategy: str
    C_T: float
    d0: float
    horizon: float
    tube_samples: np.ndarray
    refinement_converged: bool


@dataclass(frozen=True, eq=False)
class ViolationReport:
    """Pointwise comparison of measured separation against the bound."""

    times: np.ndarray
    measured: np.ndarray
    bound: np.ndarray
    first_violation: Optional[float]
    slack: float

    @property
    def violated(self) -> bool:
        return self.first_violation is not None


class _SupTracker:
    """Running max over evaluated points with an audit subset."""

    def __init__(self):
        self.best = -math.inf
        self.argmax = None
        self.audit = []
        self._audit_count = 0

    def update(self, pts: np.ndarray, vals: np.ndarray, keep: bool):
        good = np.isfinite(vals)
        if not np.any(good):
            return
        pts, vals = pts[good], vals[good]
        i = int(np.argmax(vals))
        if vals[i] > self.best:
            self.best = float(vals[i])
            self.argmax = pts[i].copy()
        if keep and self._audit_count < _AUDIT_CAP:
            take = min(len(pts), _AUDIT_CAP - self._audit_count)
            stride = max(1, len(pts) // take)
            self.audit.append(pts[::stride][:take])
            self._audit_count += len(self.audit[-1])

    def samples(self, dim: int) -> np.ndarray:
        parts = list(self.audit)
        if self.argmax is not None:
            parts.append(self.argmax[None])
        if not parts:
            return np.empty((0, dim))
        return np.vstack(parts)


def _seed_interpolator(seeds: np.ndarray):
    k = seeds.shape[0]

    def seed_at(s: float) -> np.ndarray:
        if k == 1:
            return seeds[0]
        x = s * (k - 1)
        i = min(int(math.floor(x)), k - 2)
        w = x - i
        return (1.0 - w) * seeds[i] + w * seeds[i + 1]

    return seed_at


def estimate_CT_tube(m: ManifoldSpec, X: VectorFieldSpec, seeds, T: float,
                     refine: RefinementConfig | None = None,
                     cfg: IntegratorConfig | None = None,
                     allow_incomplete: bool = False) -> CTEstimate:
    """Supremum of ||nabla X||_g over the flow tube of a seed curve.

    Seeds are the vertices of a polyline; each refinement round doubles
    both the seed sampling and the time grid, then a zoom stage refines
    locally around the running argmax.  Raises :class:`IncompleteFlow`
    when a seed trajectory leaves the domain before T, unless
    ``allow_incomplete`` asks for the supremum over the partial tube.
    """
    refine = refine or RefinementConfig()
    seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
    if not np.all(in_domain_many(m, seeds)):
        raise IncompleteFlow("a seed lies outside the domain", exit_time=0.0)
    seed_at = _seed_interpolator(seeds)
    T = float(T)
    cache: dict[float, DenseSolution] = {}

    nanvec = np.full(m.dim, np.nan)

    def rhs(y):
        try:
            return np.asarray(X.components(y), dtype=float)
        except Exception:
            return nanvec

    def solve(s: float) -> DenseSolution:
        sol = cache.get(s)
        if sol is None:
            sol = integrate(rhs, seed_at(s), T, cfg, in_domain=m.in_domain)
            cache[s] = sol
            if sol.complete_to < T and not allow_incomplete:
                raise IncompleteFlow(
                    f"tube seed at tau={s:.6g} leaves the domain at "
                    f"t={sol.complete_to:.9g} < T={T:.6g}",
                    tau=s, exit_time=sol.complete_to)
        return sol

    def gather(svals, tgrid) -> np.ndarray:
        chunks = []
        for s in svals:
            sol = solve(float(s))
            ts = tgrid[tgrid <= sol.complete_to + 1e-12]
            if sol.complete_to < T:
                ts = np.append(ts, sol.complete_to)
            if ts.size:
                pts = sol.eval(ts)
                chunks.append(np.column_stack([np.full(ts.size, s), ts, pts]))
        if not chunks:
            return np.empty((0, 2 + m.dim))
        return np.vstack(chunks)

    tracker = _SupTracker()
    best_loc = (0.0, 0.0)
    history = []
    converged = False
    k0 = seeds.shape[0]

    for r in range(refine.max_rounds):
        ns = (k0 - 1) * 2 ** r + 1 if k0 > 1 else 1
        nt = (refine.t_samples0 - 1) * 2 ** r + 1
        svals = np.linspace(0.0, 1.0, ns)
        tgrid = np.linspace(0.0, T, nt)
        rows = gather(svals, tgrid)
        if rows.shape[0]:
            vals = grad_norm_many(m, X, rows[:, 2:])
            tracker.update(rows[:, 2:], vals, keep=(r <= 1))
            good = np.isfinite(vals)
            if np.any(good):
                i = int(np.argmax(np.where(good, vals, -np.inf)))
                if vals[i] >= tracker.best:
                    best_loc = (float(rows[i, 0]), float(rows[i, 1]))
        # zoom around the best (s, t) seen so far
        ws = 1.0 / max(ns - 1, 1)
        wt = T / (nt - 1)
        s_star, t_star = best_loc
        for _ in range(refine.zoom_levels):
            svals = np.clip(np.linspace(s_star - ws, s_star + ws, 9), 0.0, 1.0)
            svals = np.unique(svals)
            tloc = np.linspace(max(0.0, t_star - wt), min(T, t_star + wt), 9)
            rows = gather(svals, tloc)
            if rows.shape[0]:
                vals = grad_norm_many(m, X, rows[:, 2:])
                good = np.isfinite(vals)
                if np.any(good):
                    i = int(np.argmax(np.where(good, vals, -np.inf)))
                    if vals[i] >= tracker.best:
                        s_star, t_star = float(rows[i, 0]), float(rows[i, 1])
                    tracker.update(rows[:, 2:], vals, keep=False)
            ws *= 0.5
            wt *= 0.5
        best_loc = (s_star, t_star)
        history.append(tracker.best)
        if r > 0 and abs(history[-1] - history[-2]) <= \
                refine.rel_change * max(abs(history[-1]), 1e-300):
            converged = True
            break

    c = tracker.best if tracker.best > -math.inf else 0.0
    return CTEstimate(c_t=float(max(c, 0.0)), samples=tracker.samples(m.dim),
                      converged=converged, history=tuple(history),
                      argmax=tracker.argmax)


def estimate_CT_global(m: ManifoldSpec, X: VectorFieldSpec,
                       sampler: SamplerConfig) -> CTEstimate:
    """Sampled lower bound of the global sup of ||nabla X||_g on a box.

    The box grid is refined (doubling, capped) with a zoom stage around the
    argmax each round.  Fields that carry a known analytic supremum are
    taken at their word when ``sampler.use_analytic`` is set.
    """
    if sampler.use_analytic and X.operator_norm_sup is not None:
        val = float(X.operator_norm_sup)
        return CTEstimate(c_t=val, samples=np.empty((0, m.dim)),
                          converged=True, history=(val,), argmax=None)
    lo = np.asarray(sampler.box_low, dtype=float)
    hi = np.asarray(sampler.box_high, dtype=float)
    n = m.dim
    if lo.shape != (n,) or hi.shape != (n,) or np.any(hi <= lo):
        raise ValueError("sampler box must be a nonempty n-dim interval")

    def eval_grid(axes) -> tuple[np.ndarray, np.ndarray]:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=-1)
        mask = in_domain_many(m, pts)
        pts = pts[mask]
        if pts.shape[0] == 0:
            return pts, np.empty(0)
        return pts, grad_norm_many(m, X, pts)

    tracker = _SupTracker()
    history = []
    converged = False
    local_pts = 9 if n <= 2 else 5

    for r in range(sampler.max_rounds):
        k = min((sampler.grid0 - 1) * 2 ** r + 1, sampler.grid_cap)
        axes = [np.linspace(lo[d], hi[d], k) for d in range(n)]
        pts, vals = eval_grid(axes)
        if pts.shape[0]:
            tracker.update(pts, vals, keep=(r == 0))
        if tracker.argmax is None:
            history.append(0.0)
            continue
        w = (hi - lo) / (k - 1)
        center = tracker.argmax.copy()
        for _ in range(sampler.zoom_levels):
            axes = [np.linspace(max(lo[d], center[d] - w[d]),
                                min(hi[d], center[d] + w[d]), local_pts)
                    for d in range(n)]
            pts, vals = eval_grid(axes)
            if pts.shape[0]:
                tracker.update(pts, vals, keep=False)
                center = tracker.argmax.copy()
            w = w * 0.5
        history.append(tracker.best)
        if r > 0 and abs(history[-1] - history[-2]) <= \
                sampler.rel_change * max(abs(history[-1]), 1e-300):
            converged = True
            break

    c = tracker.best if tracker.best > -math.inf else 0.0
    return CTEstimate(c_t=float(max(c, 0.0)), samples=tracker.samples(n),
                      converged=converged, history=tuple(history),
                      argmax=tracker.argmax)


def check_bound(traj_p: Trajectory, traj_q: Trajectory, d_fn: Callable,
                cert: GronwallCertificate,
                slack: float = 1e-6) -> ViolationReport:
    """Compare measured separation along two trajectories to the bound.

    A time t counts as a violation when measured(t) exceeds
    bound(t) * (1 + slack); the earliest such time is reported.
    """
    if traj_p.times.shape != traj_q.times.shape or \
            not np.array_equal(traj_p.times, traj_q.times):
        raise GridMismatch("trajectories do not share a time grid")
    times = traj_p.times
    measured = np.array([float(d_fn(a, b))
                         for a, b in zip(traj_p.points, traj_q.points)])
    bound = cert.d0 * np.exp(cert.C_T * times)
    exceeds = measured > bound * (1.0 + slack)
    first = float(times[np.argmax(exceeds)]) if np.any(exceeds) else None
    return ViolationReport(times=times, measured=measured, bound=bound,
                           first_violation=first, slack=slack)


def _default_box(p0: np.ndarray, q0: np.ndarray) -> SamplerConfig:
    lo = np.minimum(p0, q0)
    hi = np.maximum(p0, q0)
    pad = 1.0 + float(np.max(hi - lo))
    return SamplerConfig(box_low=tuple(lo - pad), box_high=tuple(hi + pad))


def certify_pair(m: ManifoldSpec, X: VectorFieldSpec, p0, q0, T: float,
                 strategy: str, cfg: CertifyConfig | None = None):
    """Build a separation certificate for two initial points and check it.

    Strategies: ``global`` samples a coordinate box (completeness-style
    hypothesis), ``submanifold`` flows a user-supplied seed set N that must
    contain both points (its distance-realization property is recorded, not
    verified), ``geodesic-tube`` flows the minimizing segment between the
    points.  When a tube flow is incomplete the estimate fails by default;
    ``cfg.force_incomplete`` computes C_T on the partial tube so that the
    violation report can expose what goes wrong after the exit.
    """
    cfg = cfg or CertifyConfig()
    p0 = as_point(p0, m.dim)
    q0 = as_point(q0, m.dim)
    d0 = distance_value(m, p0, q0, cfg.bvp)

    if strategy == "global":
        sampler = cfg.sampler or _default_box(p0, q0)
        est = estimate_CT_global(m, X, sampler)
    elif strategy == "submanifold":
        seeds = cfg.submanifold_seeds
        if seeds is None:
            raise ValueError("submanifold strategy needs cfg.submanifold_seeds")
        seeds = np.atleast_2d(np.asarray(seeds, dtype=float))
        for pt in (p0, q0):
            if np.min(np.max(np.abs(seeds - pt), axis=1)) > 1e-9:
                raise ValueError("submanifold seeds must contain p0 and q0")
        est = estimate_CT_tube(m, X, seeds, T, cfg.refine, cfg.integrator,
                               allow_incomplete=cfg.force_incomplete)
    elif strategy == "geodesic-tube":
        _, seg = distance(m, p0, q0, cfg.bvp)
        est = estimate_CT_tube(m, X, seg.points, T, cfg.refine,
                               cfg.integrator,
                               allow_incomplete=cfg.force_incomplete)
    else:
        raise ValueError(f"unknown strategy {strategy!r}")

    grid = np.linspace(0.0, float(T), cfg.t_samples)
    traj_p = flow_point(m, X, p0, T, cfg.integrator, t_eval=grid)
    traj_q = flow_point(m, X, q0, T, cfg.integrator, t_eval=grid)
    for name, traj in (("p0", traj_p), ("q0", traj_q)):
        if traj.complete_to < T:
            raise IncompleteFlow(
                f"trajectory of {name} leaves the domain at "
                f"t={traj.complete_to:.9g} < T={T:.6g}",
                exit_time=traj.complete_to)

    cert = GronwallCertificate(strategy=strategy, C_T=est.c_t, d0=d0,
                               horizon=float(T), tube_samples=est.samples,
                               refinement_converged=est.converged)
    slack = cfg.slack if cfg.slack is not None else \
        1e-6 + 10.0 * cfg.integrator.rel_tol
    report = check_bound(traj_p, traj_q,
                         lambda a, b: distance_value(m, a, b, cfg.bvp),
                         cert, slack)
    return cert, report


def certify_curve(m: ManifoldSpec, X: VectorFieldSpec, curve, T: float,
                  cfg: CertifyConfig | None = None, slack: float = 1e-4):
    """Length-evolution certificate: l(t) <= l(0) * exp(C_T t) for the
    flowed curve, with C_T estimated over its own tube."""
    cfg = cfg or CertifyConfig()
    curve = np.asarray(curve, dtype=float)
    est = estimate_CT_tube(m, X, curve, T, cfg.refine, cfg.integrator)
    fam = flow_curve(m, X, curve, T, cfg.integrator,
                     t_samples=cfg.t_samples)
    times, lengths = length_evolution(m, fam)
    bound = lengths[0] * np.exp(est.c_t * times)
    exceeds = lengths > bound * (1.0 + slack)
    first = float(times[np.argmax(exceeds)]) if np.any(exceeds) else None
    cert = GronwallCertificate(strategy="curve-tube", C_T=est.c_t,
                               d0=float(lengths[0]), horizon=float(T),
                               tube_samples=est.samples,
                               refinement_converged=est.converged)
    report = ViolationReport(times=times, measured=lengths, bound=bound,
                             first_violation=first, slack=slack)
    return cert, report


def enclosure_radius(r0: float, C_T: float, t: float) -> float:
    """Upward-safe r0 * exp(C_T t): never rounded below the true value.

    Used as the enclosure-tube radius in verified-integration settings;
    overflow returns +inf.
    """
    if r0 < 0 or t < 0:
        raise ValueError("r0 and t must be nonnegative")
    ct = C_T * t
    if r0 == 0.0 or ct == 0.0:
        # exp(0) and the product are exact; no guard needed
        return float(r0)
    with np.errstate(over="ignore"):
        val = r0 * math.exp(ct) if ct < 709.0 else math.inf
    if math.isinf(val):
        return math.inf
    return val * (1.0 + 4.0 * _EPS)
