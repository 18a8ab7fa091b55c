"""Builtin manifolds and vector fields, plus the inline field grammar.

Catalog names are stable CLI identifiers: manifolds ``euclidean(n)``,
``slit-plane``, ``sphere``, ``poincare-disk``; fields ``zero``,
``rotation``, ``vertical-unit``, ``azimuthal``, ``bump-vertical``.  Inline
field expressions ("0, exp(1-1/x^2)") are parsed with sympy and come with
exact jacobians.
"""

from __future__ import annotations

import re

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (convert_xor, parse_expr,
                                        standard_transformations)

from .errors import UnknownField, UnknownManifold
from .flow import VectorFieldSpec
from .geodesics import slit_plane_distance, slit_plane_segment
from .manifolds import ManifoldSpec

__all__ = ["catalog", "field_catalog", "resolve_field", "parse_field",
           "make_linear_field", "MANIFOLD_NAMES", "FIELD_NAMES"]

MANIFOLD_NAMES = ("euclidean(n)", "slit-plane", "sphere", "poincare-disk")
FIELD_NAMES = ("zero", "rotation", "vertical-unit", "azimuthal",
               "bump-vertical")


# -- manifolds ---------------------------------------------------------------

def _finite(P):
    return np.all(np.isfinite(P), axis=-1)


def _euclidean(n: int) -> ManifoldSpec:
    eye = np.eye(n)

    def metric(P):
        return np.broadcast_to(eye, np.shape(P)[:-1] + (n, n)).copy()

    def gamma(P):
        return np.zeros(np.shape(P)[:-1] + (n, n, n))

    def dist(p, q):
        return float(np.linalg.norm(np.asarray(p) - np.asarray(q)))

    def hint(p, q, k):
        pts = np.linspace(0.0, 1.0, k)[:, None] * (q - p) + p
        return pts, True

    return ManifoldSpec(dim=n, metric_at=metric, in_domain=_finite,
                        christoffel_analytic=gamma, distance_analytic=dist,
                        name=f"euclidean({n})", vectorized=True,
                        geodesic_hint=hint)


def _slit_plane() -> ManifoldSpec:
    eye = np.eye(2)

    def metric(P):
        return np.broadcast_to(eye, np.shape(P)[:-1] + (2, 2)).copy()

    def gamma(P):
        return np.zeros(np.shape(P)[:-1] + (2, 2, 2))

    def in_domain(P):
        P = np.asarray(P)
        x, y = P[..., 0], P[..., 1]
        return _finite(P) & ~((x == 0.0) & (y >= 0.0))

    return ManifoldSpec(dim=2, metric_at=metric, in_domain=in_domain,
                        christoffel_analytic=gamma,
                        distance_analytic=slit_plane_distance,
                        name="slit-plane", vectorized=True,
                        geodesic_hint=slit_plane_segment)


def _sphere() -> ManifoldSpec:
    """Unit sphere in colatitude/longitude coordinates (theta, phi);
    the chart excludes the poles where the metric degenerates."""

    def metric(P):
        P = np.asarray(P)
        th = P[..., 0]
        g = np.zeros(P.shape[:-1] + (2, 2))
        g[..., 0, 0] = 1.0
        g[..., 1, 1] = np.sin(th) ** 2
        return g

    def gamma(P):
        P = np.asarray(P)
        th = P[..., 0]
        G = np.zeros(P.shape[:-1] + (2, 2, 2))
        G[..., 0, 1, 1] = -np.sin(th) * np.cos(th)
        cot = np.cos(th) / np.sin(th)
        G[..., 1, 0, 1] = cot
        G[..., 1, 1, 0] = cot
        return G

    def in_domain(P):
        P = np.asarray(P)
        th = P[..., 0]
        return _finite(P) & (th > 0.0) & (th < np.pi)

    return ManifoldSpec(dim=2, metric_at=metric, in_domain=in_domain,
                        christoffel_analytic=gamma, name="sphere",
                        vectorized=True)


def _poincare_disk() -> ManifoldSpec:
    """Unit disk with the conformal hyperbolic metric 4/(1-|x|^2)^2."""

    def metric(P):
        P = np.asarray(P)
        r2 = np.sum(P * P, axis=-1)
        lam = 4.0 / (1.0 - r2) ** 2
        g = np.zeros(P.shape[:-1] + (2, 2))
        g[..., 0, 0] = lam
        g[..., 1, 1] = lam
        return g

    def gamma(P):
        # conformal metric exp(2*phi)*delta with grad phi = 2 x / (1-|x|^2)
        P = np.asarray(P)
        r2 = np.sum(P * P, axis=-1)
        u = 2.0 * P / (1.0 - r2)[..., None]
        eye = np.eye(2)
        return (np.einsum('...i,jk->...kij', u, eye)
                + np.einsum('...j,ik->...kij', u, eye)
                - np.einsum('...k,ij->...kij', u, eye))

    def in_domain(P):
        P = np.asarray(P)
        return _finite(P) & (np.sum(P * P, axis=-1) < 1.0)

    def dist(p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        num = 2.0 * float(np.sum((p - q) ** 2))
        den = (1.0 - float(p @ p)) * (1.0 - float(q @ q))
        return float(np.arccosh(1.0 + num / den))

    return ManifoldSpec(dim=2, metric_at=metric, in_domain=in_domain,
                        christoffel_analytic=gamma, distance_analytic=dist,
                        name="poincare-disk", vectorized=True)


def catalog(name: str) -> ManifoldSpec:
    """Look up a builtin manifold by its CLI name."""
    key = name.strip().lower()
    match = re.fullmatch(r"euclidean(?:\((\d+)\))?", key)
    if match:
        return _euclidean(int(match.group(1) or 2))
    if key == "slit-plane":
        return _slit_plane()
    if key == "sphere":
        return _sphere()
    if key == "poincare-disk":
        return _poincare_disk()
    raise UnknownManifold(
        f"unknown manifold {name!r}; available: {', '.join(MANIFOLD_NAMES)}")


# -- fields ------------------------------------------------------------------

def _bump_scalar(x):
    """exp(1 - 1/x^2) extended by 0 at x = 0 (smooth)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    nz = np.abs(x) > 1e-60
    xs = x[nz]
    out[nz] = np.exp(1.0 - 1.0 / (xs * xs))
    return out


def _bump_scalar_prime(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    nz = np.abs(x) > 1e-60
    xs = x[nz]
    out[nz] = np.exp(1.0 - 1.0 / (xs * xs)) * 2.0 / xs ** 3
    return out


def _zero_field(dim: int) -> VectorFieldSpec:
    def comps(P):
        return np.zeros(np.shape(P))

    def jac(P):
        return np.zeros(np.shape(P)[:-1] + (dim, dim))

    return VectorFieldSpec(components=comps, jacobian_analytic=jac,
                           name="zero", vectorized=True,
                           operator_norm_sup=0.0)


def _rotation_field() -> VectorFieldSpec:
    J = np.array([[0.0, -1.0], [1.0, 0.0]])

    def comps(P):
        P = np.asarray(P)
        return np.stack([-P[..., 1], P[..., 0]], axis=-1)

    def jac(P):
        return np.broadcast_to(J, np.shape(P)[:-1] + (2, 2)).copy()

    return VectorFieldSpec(components=comps, jacobian_analytic=jac,
                           name="rotation", vectorized=True)


def _unit_second_field(name: str) -> VectorFieldSpec:
    def comps(P):
        P = np.asarray(P)
        out = np.zeros(P.shape)
        out[..., 1] = 1.0
        return out

    def jac(P):
        return np.zeros(np.shape(P)[:-1] + (2, 2))

    return VectorFieldSpec(components=comps, jacobian_analytic=jac,
                           name=name, vectorized=True)


def _bump_field() -> VectorFieldSpec:
    def comps(P):
        P = np.asarray(P)
        out = np.zeros(P.shape)
        out[..., 1] = _bump_scalar(P[..., 0])
        return out

    def jac(P):
        P = np.asarray(P)
        J = np.zeros(P.shape[:-1] + (2, 2))
        J[..., 1, 0] = _bump_scalar_prime(P[..., 0])
        return J

    return VectorFieldSpec(components=comps, jacobian_analytic=jac,
                           name="bump-vertical", vectorized=True)


def make_linear_field(A, sup: float | None = None) -> VectorFieldSpec:
    """The field x -> A x; ``sup`` may record its known Euclidean
    ||nabla X|| bound (the largest singular value of A)."""
    A = np.asarray(A, dtype=float)

    def comps(P):
        return np.einsum('ij,...j->...i', A, np.asarray(P, dtype=float))

    def jac(P):
        return np.broadcast_to(A, np.shape(P)[:-1] + A.shape).copy()

    return VectorFieldSpec(components=comps, jacobian_analytic=jac,
                           name="linear", vectorized=True,
                           operator_norm_sup=sup)


def field_catalog(name: str, dim: int = 2) -> VectorFieldSpec:
    key = name.strip().lower()
    if key == "zero":
        return _zero_field(dim)
    if key == "rotation":
        return _rotation_field()
    if key in ("vertical-unit", "azimuthal"):
        # (0, 1) in chart coordinates; on the sphere chart this is the
        # azimuthal rotation generator.
        return _unit_second_field(key)
    if key == "bump-vertical":
        return _bump_field()
    raise UnknownField(
        f"unknown field {name!r}; available: {', '.join(FIELD_NAMES)}")


_TRANSFORMS = standard_transformations + (convert_xor,)


def _component_strings(expr: str):
    """Split on top-level commas only."""
    parts, depth, cur = [], 0, []
    for ch in expr:
        if ch == '(':
            depth += 1
        elif ch == ')':
            depth -= 1
        if ch == ',' and depth == 0:
            parts.append(''.join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append(''.join(cur))
    return [s.strip() for s in parts]


def parse_field(expr: str, dim: int) -> VectorFieldSpec:
    """Build a vector field from comma-separated component expressions.

    Coordinates are x, y, z (up to dim 3) or x1..xn; the usual arithmetic,
    exp/log, trig and powers (both ** and ^) are understood.  Jacobians are
    produced by symbolic differentiation.
    """
    syms = [sp.Symbol(f"x{i + 1}") for i in range(dim)]
    local = {f"x{i + 1}": syms[i] for i in range(dim)}
    for alias, i in (("x", 0), ("y", 1), ("z", 2)):
        if i < dim:
            local[alias] = syms[i]
    parts = _component_strings(expr)
    if len(parts) != dim:
        raise UnknownField(
            f"field expression has {len(parts)} components, expected {dim}")
    try:
        comps_sym = [parse_expr(s, local_dict=local,
                                transformations=_TRANSFORMS) for s in parts]
    except Exception as exc:
        raise UnknownField(f"cannot parse field expression {expr!r}: {exc}")
    jac_sym = [[sp.diff(c, s) for s in syms] for c in comps_sym]
    f_comp = sp.lambdify(syms, comps_sym, modules="numpy")
    f_jac = sp.lambdify(syms, jac_sym, modules="numpy")

    def comps(P):
        P = np.asarray(P, dtype=float)
        coords = [P[..., i] for i in range(dim)]
        with np.errstate(all="ignore"):
            vals = f_comp(*coords)
        base = np.zeros(P.shape[:-1])
        return np.stack([np.asarray(v, dtype=float) + base for v in vals],
                        axis=-1)

    def jac(P):
        P = np.asarray(P, dtype=float)
        coords = [P[..., i] for i in range(dim)]
        with np.errstate(all="ignore"):
            rows = f_jac(*coords)
        base = np.zeros(P.shape[:-1])
        return np.stack(
            [np.stack([np.asarray(v, dtype=float) + base for v in row],
                      axis=-1) for row in rows], axis=-2)

    return VectorFieldSpec(components=comps, jacobian_analytic=jac,
                           name=expr, vectorized=True)


def resolve_field(spec: str, dim: int = 2) -> VectorFieldSpec:
    """A catalog name, or an inline component-expression list."""
    key = spec.strip().lower()
    if key in FIELD_NAMES:
        return field_catalog(key, dim)
    if ',' in spec:
        return parse_field(spec, dim)
    raise UnknownField(
        f"field {spec!r} is neither a catalog name nor an expression list "
        f"(expected {dim} comma-separated components)")
