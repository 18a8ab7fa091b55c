"""Adaptive Runge-Kutta driver with cubic-Hermite dense output.

Wraps whichever stepper kernel is active: the compiled extension
(``flowbound._stepper``) when it imported cleanly and ``FLOWBOUND_PURE`` is
unset, else the pure-Python twin.  ``USING_EXTENSION`` reports the choice.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import _stepper_py
from .errors import StepLimitExceeded

if os.environ.get("FLOWBOUND_PURE"):
    _kernel = _stepper_py
    USING_EXTENSION = False
else:
    try:
        from . import _stepper as _kernel  # type: ignore[no-redef]
        USING_EXTENSION = True
    except ImportError:
        _kernel = _stepper_py
        USING_EXTENSION = False

STATUS_COMPLETE = _stepper_py.STATUS_COMPLETE
STATUS_EXIT = _stepper_py.STATUS_EXIT
STATUS_STALL = _stepper_py.STATUS_STALL
STATUS_STEP_LIMIT = _stepper_py.STATUS_STEP_LIMIT


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and limits for the embedded RK 4(5) integrator.

    ``fixed_step`` switches off adaptivity (used by convergence-order
    diagnostics); ``first_step`` overrides the automatic initial step.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = math.inf
    max_steps: int = 200_000
    first_step: float | None = None
    fixed_step: float | None = None

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_step <= 0 or self.max_steps <= 0:
            raise ValueError("max_step and max_steps must be positive")


DEFAULT_CONFIG = IntegratorConfig()

# Domain-exit times are localized to this resolution.
EXIT_TOL = 1e-9


class DenseSolution:
    """Accepted knots of one integration plus Hermite evaluation.

    The sampling grid passed to :meth:`eval` never influences the accepted
    steps, so refining an output grid re-reads the same trajectory.
    """

    def __init__(self, status, ts, ys, fs, t_exit):
        self.status = int(status)
        self.ts = ts
        self.ys = ys
        self.fs = fs
        self.t_exit = float(t_exit)

    @property
    def complete_to(self) -> float:
        return self.t_exit

    @property
    def complete(self) -> bool:
        return self.status == STATUS_COMPLETE

    def eval(self, t) -> np.ndarray:
        """Cubic-Hermite interpolation at times ``t`` (scalar or array)."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        ts, ys, fs = self.ts, self.ys, self.fs
        if ts.shape[0] == 1:
            out = np.repeat(ys[:1], t_arr.shape[0], axis=0)
        else:
            tq = np.clip(t_arr, ts[0], ts[-1])
            idx = np.clip(np.searchsorted(ts, tq, side="right") - 1, 0,
                          ts.shape[0] - 2)
            h = ts[idx + 1] - ts[idx]
            theta = ((tq - ts[idx]) / h)[:, None]
            h = h[:, None]
            y0, y1 = ys[idx], ys[idx + 1]
            f0, f1 = fs[idx], fs[idx + 1]
            t2 = theta * theta
            t3 = t2 * theta
            out = ((2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + theta) * h * f0
                   + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * h * f1)
        if np.ndim(t) == 0:
            return out[0]
        return out


def _rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def select_initial_step(rhs, y0, f0, t_span, rtol, atol, max_step):
    """Automatic first-step heuristic (standard two-probe estimate)."""
    scale = atol + rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, 0.1 * t_span)
    y1 = y0 + h0 * f0
    f1 = np.asarray(rhs(y1), dtype=float)
    if np.all(np.isfinite(f1)):
        d2 = _rms((f1 - f0) / scale) / h0
    else:
        d2 = 1.0 / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, max_step, t_span)


def integrate(rhs, y0, T, cfg: IntegratorConfig | None = None,
              in_domain=None) -> DenseSolution:
    """Integrate the autonomous system y' = rhs(y) on [0, T].

    Early termination (domain exit, step underflow) is reported through the
    returned solution's status, not raised; only the step budget raises
    :class:`StepLimitExceeded`.
    """
    cfg = cfg or DEFAULT_CONFIG
    y0 = np.asarray(y0, dtype=float)
    if cfg.fixed_step is not None:
        first = fixed = float(cfg.fixed_step)
    else:
        fixed = 0.0
        if cfg.first_step is not None:
            first = float(cfg.first_step)
        else:
            f0 = np.asarray(rhs(y0.copy()), dtype=float)
            if np.all(np.isfinite(f0)):
                first = select_initial_step(rhs, y0, f0, T, cfg.rel_tol,
                                            cfg.abs_tol, cfg.max_step)
            else:
                first = 1e-6
    status, ts, ys, fs, t_exit = _kernel.integrate_core(
        rhs, in_domain, y0, 0.0, float(T), cfg.rel_tol, cfg.abs_tol,
        cfg.max_step, cfg.max_steps, first, fixed, EXIT_TOL)
    if status == STATUS_STEP_LIMIT:
        raise StepLimitExceeded(
            f"integrator exceeded {cfg.max_steps} steps at t={t_exit:.6g}")
    return DenseSolution(status, ts, ys, fs, t_exit)
