"""Batch driver: field evaluation, verification battery and scans for a job."""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import JobConfig
from .errors import NoConvergence
from .fullspace import traction
from .green import (green_field, pde_residual, reciprocity_residual,
                    traction_free_residual)
from .material import frequency_context
from .spectral import hypothesis_scan

SCHEMA_VERSION = 1
_COMPONENTS = [f"{j}{m}" for j in (1, 2, 3) for m in (1, 2, 3)]


def field_columns(which: str = "displacement") -> list[str]:
    cols = ["x1", "x2", "x3", "omega"]
    tags = {"displacement": ["g"], "traction": ["t"], "both": ["g", "t"]}[which]
    for tag in tags:
        for c in _COMPONENTS:
            cols += [f"re_{tag}{c}", f"im_{tag}{c}"]
    return cols + ["quad_err", "flags"]


def companion_path(field_path: Path, kind: str) -> Path:
    return field_path.with_name(f"{field_path.stem}.{kind}.json")


def _depth_groups(points: np.ndarray) -> list[np.ndarray]:
    """Receiver indices sharing a depth, in order of first appearance."""
    _, first, inverse = np.unique(points[:, 2], return_index=True, return_inverse=True)
    return [np.nonzero(inverse == g)[0] for g in np.argsort(first)]


def _evaluate_frequency(job: JobConfig, omega: float, points: np.ndarray) -> list[list]:
    which = job.outputs.which
    need_stress = which != "displacement"
    ctx = frequency_context(job.material, omega, job.damping)
    normal = np.asarray(job.outputs.normal, dtype=float)
    normal = normal / np.linalg.norm(normal)
    rows: list = [None] * len(points)
    for idx in _depth_groups(points):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NoConvergence)
            res = green_field(points[idx], job.source, ctx, job.material, job.quadrature,
                              stress=need_stress)
        for i, r in zip(idx, res):
            blocks = []
            if which in ("displacement", "both"):
                blocks.append(r.displacement)
            if which in ("traction", "both"):
                blocks.append(traction(r.stress, normal))
            vals = []
            for b in blocks:
                for z in b.reshape(9):
                    vals += [z.real, z.imag]
            rows[i] = [*points[i], omega, *vals, r.quadrature_error, "|".join(sorted(r.flags))]
    return rows


def evaluate_records(job: JobConfig, workers: int = 1) -> list[list]:
    """One record per (frequency, receiver), frequency-major."""
    points = job.receiver_points()
    if workers > 1 and len(job.frequencies) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_evaluate_frequency, [job] * len(job.frequencies),
                                job.frequencies, [points] * len(job.frequencies)))
    else:
        parts = [_evaluate_frequency(job, w, points) for w in job.frequencies]
    return [row for part in parts for row in part]


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def format_csv(records: list[list], which: str) -> str:
    buf = io.StringIO()
    buf.write(f"schema={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(field_columns(which))
    for rec in records:
        w.writerow([_fmt(v) for v in rec])
    return buf.getvalue()


def format_json(records: list[list], which: str) -> str:
    cols = field_columns(which)
    body = {"schema": SCHEMA_VERSION, "columns": cols,
            "records": [[v if isinstance(v, str) else float(v) for v in rec] for rec in records]}
    return json.dumps(body, indent=1) + "\n"


def default_probe_points(source, k2_abs: float) -> np.ndarray:
    """Five interior points around the source, all strictly below it in sum depth."""
    xi = np.asarray(source, dtype=float)
    a = 0.5 / k2_abs
    pts = []
    for i, s in enumerate((-1.0, -0.5, 0.0, 0.5, 1.0)):
        t = 2 * math.pi * i / 5 + 0.3
        pts.append([xi[0] + a * math.cos(t), xi[1] + a * math.sin(t), xi[2] * (1 + 0.3 * s)])
    return np.array(pts)


def run_verification(job: JobConfig, *, which=None) -> dict:
    """Run the enabled checks for every frequency and collect JSON-ready reports."""
    vs = job.verify
    tol = vs.tolerances
    enabled = which or {k for k in ("traction_free", "pde", "reciprocity", "hypothesis_scan")
                        if getattr(vs, k)}
    reports, scans = [], []
    for omega in job.frequencies:
        ctx = frequency_context(job.material, omega, job.damping)
        probes = job.receiver_points()
        if len(probes) == 0:
            probes = default_probe_points(job.source, abs(ctx.k2))
        probes = probes[:5]
        if "traction_free" in enabled:
            reports.append(traction_free_residual(job.source, ctx, job.material, config=job.quadrature,
                                                  verify=tol).to_dict())
        if "pde" in enabled:
            for x in probes:
                reports.append(pde_residual(x, job.source, ctx, job.material, config=job.quadrature,
                                            verify=tol).to_dict())
        if "reciprocity" in enabled:
            for x in probes:
                reports.append(reciprocity_residual(x, job.source, ctx, job.material,
                                                    config=job.quadrature, verify=tol).to_dict())
        if "hypothesis_scan" in enabled:
            rep = hypothesis_scan(job.material, ctx, job.source[2], job.scan.grid,
                                  job.scan.candidate_tol).to_dict()
            rep["omega"] = omega
            scans.append(rep)
    return {"schema": SCHEMA_VERSION, "reports": reports, "scans": scans,
            "all_pass": all(r["pass"] for r in reports)}


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def resolve_output(job: JobConfig, out_dir=None) -> Path:
    p = Path(job.outputs.path)
    return Path(out_dir) / p.name if out_dir is not None else p


def run_job(job: JobConfig, out_dir=None, workers: int = 1) -> dict:
    """Evaluate fields and enabled checks; returns the paths written."""
    field_path = resolve_output(job, out_dir)
    written = {}
    if len(job.receiver_points()):
        records = evaluate_records(job, workers)
        fmt = format_csv if job.outputs.format == "csv" else format_json
        _write(field_path, fmt(records, job.outputs.which))
        written["field"] = str(field_path)
    if job.verify is not None and job.verify.any:
        report = run_verification(job)
        vpath = companion_path(field_path, "verify")
        _write(vpath, json.dumps(report, indent=1, sort_keys=True) + "\n")
        written["verify"] = str(vpath)
    return written
