# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand-Prince 5(4) stepper.

Mirrors ``_stepper_py.integrate_core`` step for step; only the loop
bookkeeping is compiled, the right-hand side and domain predicate remain
Python callbacks.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, isfinite, pow, sqrt

cnp.import_array()

STATUS_COMPLETE = 0
STATUS_EXIT = 1
STATUS_STALL = 2
STATUS_STEP_LIMIT = 3

cdef double SAFETY = 0.9
cdef double MIN_FACTOR = 0.2
cdef double MAX_FACTOR = 5.0

# Dormand-Prince tableau, flattened row-major (6x6 strictly lower part used).
cdef double[6][6] DP_A = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
]
cdef double[6] DP_B = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0,
                       -2187.0 / 6784.0, 11.0 / 84.0]
cdef double[7] DP_E = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
                       -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0]


cdef inline int _fill_stage(object rhs, double[::1] ybuf, double[:, ::1] K,
                            Py_ssize_t row, Py_ssize_t n) except -1:
    """Call rhs on a fresh copy of ybuf, store the result into K[row]."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] arg = np.array(ybuf, dtype=np.float64)
    out = np.asarray(rhs(arg), dtype=np.float64).reshape(n)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(n):
        K[row, i] = ov[i]
    return 0


def integrate_core(object rhs, object in_domain, cnp.ndarray[cnp.float64_t, ndim=1] y0,
                   double t0, double t1, double rtol, double atol, double max_step,
                   long max_steps, double first_step, double fixed_step, double exit_tol):
    """Compiled counterpart of ``_stepper_py.integrate_core``."""
    cdef Py_ssize_t n = y0.shape[0]
    cdef Py_ssize_t i, s, j
    cdef double[::1] y = np.array(y0, dtype=np.float64)
    cdef double[::1] ynew = np.empty(n)
    cdef double[::1] ystage = np.empty(n)
    cdef double[::1] ymid = np.empty(n)
    cdef double[:, ::1] K = np.empty((7, n))

    f0 = np.asarray(rhs(np.array(y0, dtype=np.float64)), dtype=np.float64).reshape(n)
    cdef double[::1] f = np.array(f0, dtype=np.float64)
    cdef bint fok = True
    for i in range(n):
        if not isfinite(f[i]):
            fok = False
    if not fok:
        return (STATUS_STALL, np.array([t0]), np.array(y0, dtype=np.float64).reshape(1, n),
                np.zeros((1, n)), t0)

    ts = [t0]
    ys = [np.array(y, dtype=np.float64)]
    fs = [np.array(f, dtype=np.float64)]

    cdef double t = t0
    cdef double tiny = 4.0 * 2.220446049250313e-16 * max(1.0, fabs(t1))
    cdef bint fixed = fixed_step > 0.0
    cdef double h
    if fixed:
        h = fixed_step
    else:
        h = min(first_step, max_step, t1 - t0)
    cdef int status = STATUS_COMPLETE
    cdef double t_exit = t1
    cdef bint shrink = False
    cdef long nsteps = 0
    cdef double err, fac, acc, scale, tnew
    cdef bint bad, ok

    while t < t1 - tiny:
        nsteps += 1
        if nsteps > max_steps:
            status = STATUS_STEP_LIMIT
            t_exit = t
            break
        if not fixed and h > max_step:
            h = max_step
        if h > t1 - t:
            h = t1 - t

        for i in range(n):
            K[0, i] = f[i]
        bad = False
        for s in range(1, 6):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += DP_A[s][j] * K[j, i]
                ystage[i] = y[i] + h * acc
            _fill_stage(rhs, ystage, K, s, n)
        for i in range(n):
            acc = 0.0
            for j in range(6):
                acc += DP_B[j] * K[j, i]
            ynew[i] = y[i] + h * acc
        _fill_stage(rhs, ynew, K, 6, n)
        for i in range(n):
            if not isfinite(ynew[i]):
                bad = True
        for s in range(7):
            for i in range(n):
                if not isfinite(K[s, i]):
                    bad = True

        if fixed:
            if bad:
                status = STATUS_STALL
                t_exit = t
                break
            err = 0.0
        else:
            if bad:
                err = float("inf")
            else:
                err = 0.0
                for i in range(n):
                    acc = 0.0
                    for j in range(7):
                        acc += DP_E[j] * K[j, i]
                    acc *= h
                    scale = atol + rtol * max(fabs(y[i]), fabs(ynew[i]))
                    err += (acc / scale) * (acc / scale)
                err = sqrt(err / n)
            if err > 1.0:
                if isfinite(err):
                    fac = SAFETY * pow(err, -0.2)
                    if fac < MIN_FACTOR:
                        fac = MIN_FACTOR
                else:
                    fac = MIN_FACTOR
                h *= fac
                if h < 1e-13 * max(1.0, fabs(t)):
                    status = STATUS_STALL
                    t_exit = t
                    break
                continue

        if in_domain is not None:
            for i in range(n):
                ymid[i] = 0.5 * (y[i] + ynew[i]) + (h / 8.0) * (K[0, i] - K[6, i])
            ok = bool(in_domain(np.array(ynew, dtype=np.float64))) and \
                bool(in_domain(np.array(ymid, dtype=np.float64)))
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
        if fabs(t1 - tnew) < tiny:
            tnew = t1
        t = tnew
        for i in range(n):
            y[i] = ynew[i]
            f[i] = K[6, i]
        ts.append(t)
        ys.append(np.array(y, dtype=np.float64))
        fs.append(np.array(f, dtype=np.float64))

        if not fixed:
            if err == 0.0:
                fac = MAX_FACTOR
            else:
                fac = SAFETY * pow(err, -0.2)
                if fac > MAX_FACTOR:
                    fac = MAX_FACTOR
            if shrink:
                if fac > 1.0:
                    fac = 1.0
                shrink = False
            if fac < MIN_FACTOR:
                fac = MIN_FACTOR
            h *= fac

    return status, np.array(ts), np.array(ys), np.array(fs), t_exit
