"""CSV and JSON writers.

All numbers are emitted with 17 significant digits (exact float
round-trips); identical inputs produce byte-identical files.
"""

from __future__ import annotations

import numpy as np


def fmt(x) -> str:
    return f"{float(x):.17g}"


def trajectory_csv(traj) -> str:
    n = traj.points.shape[1]
    header = "t," + ",".join(f"coord_{i + 1}" for i in range(n))
    lines = [header]
    for t, p in zip(traj.times, traj.points):
        lines.append(",".join([fmt(t)] + [fmt(c) for c in p]))
    return "\n".join(lines) + "\n"


def lengths_csv(times, lengths) -> str:
    lines = ["t,length"]
    for t, l in zip(times, lengths):
        lines.append(f"{fmt(t)},{fmt(l)}")
    return "\n".join(lines) + "\n"


def bound_csv(report) -> str:
    lines = ["t,measured,bound"]
    for t, me, bo in zip(report.times, report.measured, report.bound):
        lines.append(f"{fmt(t)},{fmt(me)},{fmt(bo)}")
    return "\n".join(lines) + "\n"


def segment_csv(seg) -> str:
    n = seg.points.shape[1]
    header = "node," + ",".join(f"coord_{i + 1}" for i in range(n))
    lines = [header]
    for i, p in enumerate(seg.points):
        lines.append(",".join([str(i)] + [fmt(c) for c in p]))
    return "\n".join(lines) + "\n"


def _jarray(values) -> str:
    return "[" + ", ".join(fmt(v) for v in np.asarray(values)) + "]"


def certificate_json(cert, report) -> str:
    """Serialize a certificate and its violation report as one document."""
    first = "null" if report.first_violation is None \
        else fmt(report.first_violation)
    converged = "true" if cert.refinement_converged else "false"
    parts = [
        f'  "strategy": "{cert.strategy}"',
        f'  "C_T": {fmt(cert.C_T)}',
        f'  "d0": {fmt(cert.d0)}',
        f'  "T": {fmt(cert.horizon)}',
        f'  "converged": {converged}',
        f'  "first_violation": {first}',
        f'  "times": {_jarray(report.times)}',
        f'  "measured": {_jarray(report.measured)}',
        f'  "bound": {_jarray(report.bound)}',
    ]
    return "{\n" + ",\n".join(parts) + "\n}\n"


def write_text(path, content: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)
