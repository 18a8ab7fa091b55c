"""Pure-Python Dormand-Prince 5(4) stepper.

Twin of the compiled kernel in ``_stepper.pyx``; selected at import time when
the extension is unavailable or ``FLOWBOUND_PURE=1``.  Both implementations
follow the same control flow so results agree to rounding.

Contract notes shared by both kernels:

* ``rhs`` is autonomous: called as ``rhs(y)``.  Callees must not mutate the
  argument array.
* ``in_domain`` (optional) is a predicate on chart points; it is checked at
  each accepted step's endpoint and cubic-Hermite midpoint.  A violating
  step is bisected until the step size drops below ``exit_tol``, localizing
  the exit time to that tolerance.
* Step-size underflow under accuracy control (blow-up in finite time) ends
  the integration with status ``STATUS_STALL`` rather than raising.
"""

import numpy as np

STATUS_COMPLETE = 0
STATUS_EXIT = 1
STATUS_STALL = 2
STATUS_STEP_LIMIT = 3

# Dormand-Prince 5(4) tableau (FSAL: row 7 of A equals B).
DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
DP_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
])
DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
# 5th-minus-4th order error weights (7 stages).
DP_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
                 -17253 / 339200, 22 / 525, -1 / 40])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


def _error_norm(err, y, ynew, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


def integrate_core(rhs, in_domain, y0, t0, t1, rtol, atol, max_step,
                   max_steps, first_step, fixed_step, exit_tol):
    """Integrate y' = rhs(y) from t0 to t1.

    Returns (status, ts, ys, fs, t_exit) where ts/ys/fs hold the accepted
    knots (including t0) and the right-hand side at each knot, ready for
    cubic Hermite dense output.
    """
    n = y0.shape[0]
    y = np.array(y0, dtype=float)
    scratch = np.empty(n)
    K = np.empty((7, n))

    f = np.asarray(rhs(y.copy()), dtype=float).reshape(n)
    if not np.all(np.isfinite(f)):
        return STATUS_STALL, np.array([t0]), y.reshape(1, n).copy(), \
            np.zeros((1, n)), t0

    ts = [t0]
    ys = [y.copy()]
    fs = [f.copy()]

    t = t0
    tiny = 4.0 * np.finfo(float).eps * max(1.0, abs(t1))
    fixed = fixed_step > 0.0
    h = fixed_step if fixed else min(first_step, max_step, t1 - t0)
    status = STATUS_COMPLETE
    t_exit = t1
    shrink = False
    nsteps = 0

    while t < t1 - tiny:
        nsteps += 1
        if nsteps > max_steps:
            status = STATUS_STEP_LIMIT
            t_exit = t
            break
        if not fixed:
            h = min(h, max_step)
        h = min(h, t1 - t)

        K[0] = f
        bad = False
        for s in range(1, 6):
            np.dot(DP_A[s, :s], K[:s], out=scratch)
            ystage = y + h * scratch
            K[s] = rhs(ystage)
        ynew = y + h * np.dot(DP_B, K[:6])
        K[6] = rhs(ynew.copy())
        if not (np.all(np.isfinite(ynew)) and np.all(np.isfinite(K))):
            bad = True

        if fixed:
            if bad:
                status = STATUS_STALL
                t_exit = t
                break
            err = 0.0
        else:
            if bad:
                err = np.inf
            else:
                errvec = h * np.dot(DP_E, K)
                err = _error_norm(errvec, y, ynew, rtol, atol)
            if err > 1.0:
                fac = max(_MIN_FACTOR,
                          _SAFETY * err ** -0.2 if np.isfinite(err) else _MIN_FACTOR)
                h *= fac
                if h < 1e-13 * max(1.0, abs(t)):
                    status = STATUS_STALL
                    t_exit = t
                    break
                continue

        if in_domain is not None:
            # cubic Hermite midpoint of the accepted step
            ymid = 0.5 * (y + ynew) + (h / 8.0) * (K[0] - K[6])
            ok = bool(in_domain(ynew.copy())) and bool(in_domain(ymid))
            if not ok:
                if fixed:
                    status = STATUS_EXIT
                    t_exit = t
                    break
                shrink = True
                h *= 0.5
                if h < exit_tol:
                    status = STATUS_EXIT
                    t_exit = t
                    break
                continue

        tnew = t + h
        if abs(t1 - tnew) < tiny:
            tnew = t1
        t = tnew
        y = ynew
        f = K[6].copy()
        ts.append(t)
        ys.append(y.copy())
        fs.append(f.copy())

        if not fixed:
            if err == 0.0:
                fac = _MAX_FACTOR
            else:
                fac = min(_MAX_FACTOR, _SAFETY * err ** -0.2)
            if shrink:
                fac = min(fac, 1.0)
                shrink = False
            h *= max(fac, _MIN_FACTOR)

    return status, np.array(ts), np.array(ys), np.array(fs), t_exit
