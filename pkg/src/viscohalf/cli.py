"""Command line: ``viscohalf {eval,verify,scan-delta,weyl-test}``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace

import numpy as np

from .config import VerifySpec, load_config
from .errors import GreenError, ParseError, ValidationError
from .fullspace import WEYL_CONSTANT
from .green import VerificationConfig
from .jobs import companion_path, resolve_output, run_job, run_verification
from .material import frequency_context
from .quadrature import QuadratureConfig, calibrate_weyl_constant, weyl_phi
from .spectral import hypothesis_scan

EXIT_CONFIG = 2
EXIT_IO = 3


def _cmd_eval(args) -> int:
    job = load_config(args.config)
    written = run_job(job, args.out, workers=args.workers)
    for kind, path in written.items():
        print(f"{kind}: {path}")
    return 0


def _cmd_verify(args) -> int:
    job = load_config(args.config)
    if job.verify is None or not job.verify.any:
        # nothing selected: run the residual checks with the configured tolerances
        tol = job.verify.tolerances if job.verify else VerificationConfig()
        job = replace(job, verify=VerifySpec(True, True, True, False, tol))
    report = run_verification(job)
    path = companion_path(resolve_output(job, args.out), "verify")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    for r in report["reports"]:
        status = "PASS" if r["pass"] else "FAIL"
        print(f"{status} {r['metric_name']} value={r['value']:.3e} tol={r['tolerance']:.1e}")
    print(f"report: {path}")
    return 0


def _cmd_scan(args) -> int:
    job = load_config(args.config)
    scans = []
    for omega in job.frequencies:
        ctx = frequency_context(job.material, omega, job.damping)
        rep = hypothesis_scan(job.material, ctx, job.source[2], job.scan.grid, job.scan.candidate_tol)
        d = rep.to_dict()
        d["omega"] = omega
        scans.append(d)
        print(f"omega={omega:g} min|Delta|={rep.min_abs_delta_hat:.6e} scaled={rep.min_scaled:.6e} "
              f"candidates={len(rep.candidate_roots)}")
    path = companion_path(resolve_output(job, args.out), "scan")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps({"schema": 1, "scans": scans}, indent=1, sort_keys=True) + "\n",
                    encoding="utf-8")
    print(f"report: {path}")
    return 0


def _cmd_weyl(args) -> int:
    k = complex(args.k_re, args.k_im)
    if not k.imag > 0:
        raise ValidationError("weyl-test needs k-im > 0")
    cfg = QuadratureConfig(rel_tol=args.rel_tol)
    t0 = time.perf_counter()
    a_star = calibrate_weyl_constant(k, args.depth)
    x = np.array([args.dx1, args.dx2, -args.depth])
    res = weyl_phi(x, [0.0, 0.0, 0.0], k, WEYL_CONSTANT, cfg)
    r = float(np.linalg.norm(x))
    exact = np.exp(1j * k * r) / r
    out = {
        "k": [k.real, k.imag],
        "depth": args.depth,
        "offset": [args.dx1, args.dx2],
        "calibrated_constant": a_star,
        "constant_times_2pi": a_star * 2 * np.pi,
        "relative_error": float(abs(res.value - exact) / abs(exact)),
        "error_estimate": res.abs_error_estimate / abs(exact),
        "evaluations": res.evaluations,
        "seconds": time.perf_counter() - t0,
    }
    print(json.dumps(out, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="viscohalf",
                                 description="Viscoelastic half-space Green tensors.")
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", help="evaluate Green tensors on the configured receivers")
    e.add_argument("--config", required=True)
    e.add_argument("--out", default=None, help="output directory (overrides the config path's directory)")
    e.add_argument("--workers", type=int, default=1, help="processes across frequencies")
    e.set_defaults(func=_cmd_eval)

    v = sub.add_parser("verify", help="run the residual battery")
    v.add_argument("--config", required=True)
    v.add_argument("--out", default=None)
    v.set_defaults(func=_cmd_verify)

    s = sub.add_parser("scan-delta", help="scan the boundary determinant for zeros")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None)
    s.set_defaults(func=_cmd_scan)

    w = sub.add_parser("weyl-test", help="check the plane-wave expansion of exp(ikr)/r")
    w.add_argument("--k-re", type=float, default=1.0)
    w.add_argument("--k-im", type=float, default=0.5)
    w.add_argument("--depth", type=float, default=1.0)
    w.add_argument("--dx1", type=float, default=0.5)
    w.add_argument("--dx2", type=float, default=0.0)
    w.add_argument("--rel-tol", type=float, default=1e-6)
    w.set_defaults(func=_cmd_weyl)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except GreenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
