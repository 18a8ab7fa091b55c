"""Command-line front end.

Subcommands: certify, flow, distance, reproduce.  Exit codes are a stable
contract: 0 success / bound certified, 1 configuration or numerical error,
2 violation found, 3 incomplete flow.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import serialize
from .catalog import catalog, make_linear_field, resolve_field
from .errors import FlowboundError, IncompleteFlow
from .geodesics import BvpConfig, distance
from .flow import flow_point
from .gronwall import (CertifyConfig, RefinementConfig, SamplerConfig,
                       certify_pair)
from .rk import IntegratorConfig

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2
EXIT_INCOMPLETE = 3

SCENARIOS = ("example-i", "example-ii", "euclidean-linear", "sphere-killing")


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(";", ",").split(",") if tok]

def _parse_points(text: str) -> np.ndarray:
    return np.array([[float(tok) for tok in chunk.split(",") if tok]
                     for chunk in text.split(";") if chunk])


def _add_common(sp):
    sp.add_argument("--manifold", help="catalog manifold name")
    sp.add_argument("--field", help="catalog field name or inline "
                                    "comma-separated component expressions")
    sp.add_argument("--T", type=float, help="flow horizon")
    sp.add_argument("--rel-tol", type=float, help="integrator relative tolerance")
    sp.add_argument("--abs-tol", type=float, help="integrator absolute tolerance")
    sp.add_argument("--out", help="output directory")
    sp.add_argument("--config", help="JSON config file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="flowbound",
        description="Certified exponential separation bounds for flows on "
                    "Riemannian manifolds")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("certify", help="certify d(p(t),q(t)) <= d0 e^{Ct}")
    _add_common(c)
    c.add_argument("--p0", help="comma-separated coordinates")
    c.add_argument("--q0", help="comma-separated coordinates")
    c.add_argument("--strategy",
                   choices=["global", "submanifold", "geodesic-tube"])
    c.add_argument("--force-incomplete", action="store_true", default=None,
                   help="estimate C_T on the partial tube when the flow "
                        "leaves the domain early")
    c.add_argument("--t-samples", type=int, help="comparison grid size")
    c.add_argument("--box-low", help="global sampler box lower corner")
    c.add_argument("--box-high", help="global sampler box upper corner")
    c.add_argument("--seeds", help="submanifold seeds 'x,y;x,y;...'")
    c.add_argument("--slack", type=float, help="relative violation slack")

    f = sub.add_parser("flow", help="integrate one trajectory to CSV")
    _add_common(f)
    f.add_argument("--p0", help="comma-separated coordinates")
    f.add_argument("--t-samples", type=int, help="output samples")

    d = sub.add_parser("distance", help="Riemannian distance between points")
    _add_common(d)
    d.add_argument("--p0", help="comma-separated coordinates")
    d.add_argument("--q0", help="comma-separated coordinates")
    d.add_argument("--numeric", action="store_true",
                   help="force the boundary-value solver even when a "
                        "closed form exists")

    r = sub.add_parser("reproduce", help="run a named preset scenario")
    r.add_argument("name", choices=list(SCENARIOS) + ["list"])
    r.add_argument("--out", help="output directory")
    return p


def _merged(args) -> dict:
    """Config-file values overridden by explicitly given flags."""
    merged = {}
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            merged.update(json.load(fh))
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        merged[key] = val
    return merged


def _require(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise FlowboundError(f"missing required option(s): "
                             f"{', '.join('--' + k for k in missing)}")


def _coords(val) -> np.ndarray:
    if isinstance(val, str):
        return np.array(_parse_floats(val))
    return np.asarray(val, dtype=float)


def _integrator(cfg: dict) -> IntegratorConfig:
    return IntegratorConfig(rel_tol=cfg.get("rel_tol", 1e-10),
                            abs_tol=cfg.get("abs_tol", 1e-12))


def _outdir(cfg: dict) -> str:
    out = cfg.get("out", ".")
    os.makedirs(out, exist_ok=True)
    return out


def cmd_certify(args) -> int:
    cfg = _merged(args)
    _require(cfg, "manifold", "field", "p0", "q0", "T", "strategy")
    m = catalog(cfg["manifold"])
    X = resolve_field(cfg["field"], m.dim)
    p0, q0 = _coords(cfg["p0"]), _coords(cfg["q0"])
    run = CertifyConfig(integrator=_integrator(cfg),
                        t_samples=int(cfg.get("t_samples", 201)),
                        force_incomplete=bool(cfg.get("force_incomplete",
                                                      False)))
    if cfg.get("slack") is not None:
        run.slack = float(cfg["slack"])
    if cfg.get("box_low") is not None and cfg.get("box_high") is not None:
        run.sampler = SamplerConfig(
            box_low=tuple(_coords(cfg["box_low"])),
            box_high=tuple(_coords(cfg["box_high"])))
    if cfg.get("seeds") is not None:
        seeds = cfg["seeds"]
        run.submanifold_seeds = _parse_points(seeds) if isinstance(seeds, str) \
            else np.asarray(seeds, dtype=float)

    try:
        cert, report = certify_pair(m, X, p0, q0, float(cfg["T"]),
                                    cfg["strategy"], run)
    except IncompleteFlow as exc:
        print(f"incomplete flow: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE

    out = _outdir(cfg)
    serialize.write_text(os.path.join(out, "certificate.json"),
                         serialize.certificate_json(cert, report))
    serialize.write_text(os.path.join(out, "bound_measured.csv"),
                         serialize.bound_csv(report))
    print(f"strategy={cert.strategy} C_T={cert.C_T:.9g} d0={cert.d0:.9g} "
          f"T={cert.horizon:.9g} converged={cert.refinement_converged}")
    if report.violated:
        print(f"violation: measured exceeds bound from "
              f"t={report.first_violation:.9g}")
        return EXIT_VIOLATION
    print("no violation: bound certified on the sampled grid")
    return EXIT_OK


def cmd_flow(args) -> int:
    cfg = _merged(args)
    _require(cfg, "manifold", "field", "p0", "T")
    m = catalog(cfg["manifold"])
    X = resolve_field(cfg["field"], m.dim)
    traj = flow_point(m, X, _coords(cfg["p0"]), float(cfg["T"]),
                      _integrator(cfg),
                      t_eval=int(cfg.get("t_samples", 101)))
    out = _outdir(cfg)
    path = os.path.join(out, "trajectory.csv")
    serialize.write_text(path, serialize.trajectory_csv(traj))
    print(f"wrote {path} (complete to t={traj.complete_to:.9g})")
    return EXIT_OK


def cmd_distance(args) -> int:
    cfg = _merged(args)
    _require(cfg, "manifold", "p0", "q0")
    m = catalog(cfg["manifold"])
    method = "numeric" if cfg.get("numeric") else "auto"
    value, seg = distance(m, _coords(cfg["p0"]), _coords(cfg["q0"]),
                          method=method)
    print(serialize.fmt(value))
    if cfg.get("out") is not None:
        out = _outdir(cfg)
        serialize.write_text(os.path.join(out, "segment.csv"),
                             serialize.segment_csv(seg))
    return EXIT_OK


# -- reproduce presets -------------------------------------------------------

def _summary(out: str, title: str, checks) -> bool:
    ok = all(c[1] for c in checks)
    lines = [title, "=" * len(title), ""]
    for label, passed, detail in checks:
        lines.append(f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}")
    lines.append("")
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    serialize.write_text(os.path.join(out, "summary.txt"),
                         "\n".join(lines) + "\n")
    print("\n".join(lines))
    return ok


def _write_cert(out, cert, report):
    serialize.write_text(os.path.join(out, "certificate.json"),
                         serialize.certificate_json(cert, report))
    serialize.write_text(os.path.join(out, "bound_measured.csv"),
                         serialize.bound_csv(report))


def _reproduce_example_i(out: str) -> bool:
    """Slit plane, constant upward field: the bound fails as soon as the
    trajectories are separated by the gap."""
    m = catalog("slit-plane")
    X = resolve_field("vertical-unit", 2)
    p0, q0, T = np.array([-1.0, -1.0]), np.array([1.0, -1.0]), 3.0

    exit_time = None
    try:
        certify_pair(m, X, p0, q0, T, "geodesic-tube", CertifyConfig())
    except IncompleteFlow as exc:
        exit_time = exc.exit_time

    run = CertifyConfig(t_samples=601, force_incomplete=True)
    cert, report = certify_pair(m, X, p0, q0, T, "geodesic-tube", run)
    _write_cert(out, cert, report)

    t = report.times
    expected = np.where(t <= 1.0, 2.0, 2.0 * np.sqrt(1.0 + (t - 1.0) ** 2))
    derr = float(np.max(np.abs(report.measured - expected)))
    fv = report.first_violation
    checks = [
        ("tube flow leaves the slit plane near t=1",
         exit_time is not None and abs(exit_time - 1.0) <= 1e-6,
         f"exit_time={exit_time}"),
        ("forced certificate has C_T = 0 (the field is parallel)",
         abs(cert.C_T) <= 1e-12, f"C_T={cert.C_T:.3e}"),
        ("first violation at the separation time",
         fv is not None and 0.99 <= fv <= 1.01, f"first_violation={fv}"),
        ("measured distance matches the piecewise closed form to 1e-6",
         derr <= 1e-6, f"max abs err={derr:.3e}"),
    ]
    return _summary(out, "slit-plane counterexample (gap separation)", checks)


def _reproduce_example_ii(out: str) -> bool:
    """Slit plane, smooth bump field: complete field, bound holds with
    C = 3 sqrt(3/(2e))."""
    m = catalog("slit-plane")
    X = resolve_field("bump-vertical", 2)
    p0, q0, T = np.array([-1.0, 0.0]), np.array([1.0, 0.0]), 5.0
    run = CertifyConfig(t_samples=201,
                        sampler=SamplerConfig(box_low=(-3.0, -3.0),
                                              box_high=(3.0, 3.0)))
    cert, report = certify_pair(m, X, p0, q0, T, "global", run)
    _write_cert(out, cert, report)

    c_true = 3.0 * math.sqrt(3.0 / (2.0 * math.e))
    t = report.times
    expected = 2.0 * np.sqrt(1.0 + t * t)
    derr = float(np.max(np.abs(report.measured - expected)))
    checks = [
        ("estimated C matches 3*sqrt(3/(2e)) to 1e-4",
         abs(cert.C_T - c_true) <= 1e-4,
         f"C={cert.C_T:.9f} vs {c_true:.9f}"),
        ("measured distance matches 2*sqrt(1+t^2) to 1e-6",
         derr <= 1e-6, f"max abs err={derr:.3e}"),
        ("no violation up to T=5", not report.violated,
         f"first_violation={report.first_violation}"),
    ]
    return _summary(out, "complete bump field (bound holds)", checks)


def _reproduce_euclidean_linear(out: str) -> bool:
    """Euclidean linear field: the bound is attained, so the constant
    cannot be improved."""
    m = catalog("euclidean(2)")
    X = make_linear_field(np.diag([2.0, 1.0]), sup=2.0)
    p0, q0, T = np.array([1e-2, 0.0]), np.array([0.0, 0.0]), 2.0
    run = CertifyConfig(t_samples=201)
    cert, report = certify_pair(m, X, p0, q0, T, "geodesic-tube", run)
    _write_cert(out, cert, report)

    ratio = report.measured / report.bound
    dev = float(np.max(np.abs(ratio - 1.0)))
    checks = [
        ("C_T equals the top singular value 2", abs(cert.C_T - 2.0) <= 1e-9,
         f"C_T={cert.C_T:.12f}"),
        ("bound attained: measured/bound = 1 +/- 1e-6", dev <= 1e-6,
         f"max |ratio-1|={dev:.3e}"),
        ("no violation", not report.violated,
         f"first_violation={report.first_violation}"),
    ]
    return _summary(out, "Euclidean linear flow (tight bound)", checks)


def _reproduce_sphere_killing(out: str) -> bool:
    """Sphere with the azimuthal rotation field: the flow is an isometry,
    separation stays constant while the bound grows."""
    m = catalog("sphere")
    X = resolve_field("azimuthal", 2)
    p0, q0 = np.array([0.9, 0.4]), np.array([1.7, 1.9])
    T = 2.0 * math.pi
    run = CertifyConfig(t_samples=25, bvp=BvpConfig(nodes0=65, max_nodes=257))
    cert, report = certify_pair(m, X, p0, q0, T, "geodesic-tube", run)
    _write_cert(out, cert, report)

    rel = float(np.max(np.abs(report.measured - report.measured[0]))
                / report.measured[0])
    checks = [
        ("separation constant to 1e-6 under the isometric flow",
         rel <= 1e-6, f"max rel drift={rel:.3e}"),
        ("no violation (bound grows, distance does not)",
         not report.violated, f"C_T={cert.C_T:.6f}"),
    ]
    return _summary(out, "sphere rotation field (isometric flow)", checks)


_PRESETS = {
    "example-i": _reproduce_example_i,
    "example-ii": _reproduce_example_ii,
    "euclidean-linear": _reproduce_euclidean_linear,
    "sphere-killing": _reproduce_sphere_killing,
}


def cmd_reproduce(args) -> int:
    if args.name == "list":
        print("\n".join(SCENARIOS))
        return EXIT_OK
    out = args.out or f"reproduce-{args.name}"
    os.makedirs(out, exist_ok=True)
    ok = _PRESETS[args.name](out)
    return EXIT_OK if ok else EXIT_ERROR


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"certify": cmd_certify, "flow": cmd_flow,
                "distance": cmd_distance, "reproduce": cmd_reproduce}
    try:
        return handlers[args.command](args)
    except IncompleteFlow as exc:
        print(f"incomplete flow: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except (FlowboundError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
