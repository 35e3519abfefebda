"""Job documents: YAML parsing, validation with line numbers, serialization."""
from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass, fields
from importlib import resources

import jsonschema
import numpy as np
import yaml

from .correction import h_min
from .errors import MaterialError, ParseError, ValidationError
from .green import VerificationConfig
from .material import Material, frequency_context
from .quadrature import QuadratureConfig
from .spectral import ScanGrid


@dataclass(frozen=True)
class ReceiverGrid:
    """Points ``origin + i a0 + j a1 + k a2``, expanded with ``k`` fastest."""

    origin: tuple
    axes: tuple
    counts: tuple

    def expand(self) -> np.ndarray:
        o = np.asarray(self.origin, dtype=float)
        a = np.asarray(self.axes, dtype=float)
        idx = np.indices(self.counts).reshape(3, -1).T
        return o + idx @ a


@dataclass(frozen=True)
class OutputSpec:
    format: str = "csv"
    path: str = "green.csv"
    which: str = "displacement"
    normal: tuple = (0.0, 0.0, 1.0)


@dataclass(frozen=True)
class VerifySpec:
    traction_free: bool = False
    pde: bool = False
    reciprocity: bool = False
    hypothesis_scan: bool = False
    tolerances: VerificationConfig = VerificationConfig()

    @property
    def any(self) -> bool:
        return self.traction_free or self.pde or self.reciprocity or self.hypothesis_scan


@dataclass(frozen=True)
class ScanSpec:
    grid: ScanGrid = ScanGrid()
    candidate_tol: float = 1e-3


@dataclass(frozen=True)
class JobConfig:
    material: Material
    frequencies: tuple
    source: tuple
    receivers: ReceiverGrid | tuple = ()
    quadrature: QuadratureConfig = QuadratureConfig()
    outputs: OutputSpec = OutputSpec()
    verify: VerifySpec | None = None
    scan: ScanSpec = ScanSpec()
    damping: float = 0.0

    def receiver_points(self) -> np.ndarray:
        if isinstance(self.receivers, ReceiverGrid):
            return self.receivers.expand()
        return np.asarray(self.receivers, dtype=float).reshape(-1, 3)


# --- parsing -----------------------------------------------------------------

class _Loader(yaml.SafeLoader):
    """Safe loader that also reads exponent floats without a dot, e.g. 1e-6."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[0-9][0-9_]*[eE][-+]?[0-9]+
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _schema() -> dict:
    return json.loads(resources.files("viscohalf").joinpath("data/job_schema.json").read_text())


def _marks(node, path=(), out=None):
    """Map key paths to 1-based line numbers of a composed YAML tree."""
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            _marks(v, path + (k.value,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _marks(v, path + (i,), out)
    return out


class _Locator:
    def __init__(self, marks):
        self.marks = marks

    def line(self, path):
        path = tuple(path)
        while path not in self.marks and path:
            path = path[:-1]
        return self.marks.get(path, 1)

    def error(self, path, message):
        dotted = ".".join(str(p) for p in path) or "<document>"
        return ValidationError(f"line {self.line(path)}: {dotted}: {message}")


def _vec3(v):
    return tuple(float(c) for c in v)


def parse_config(text: str) -> JobConfig:
    """Parse and validate a YAML job document.

    Raises :class:`ParseError` for malformed YAML and
    :class:`ValidationError` (with a line number) for invalid content.
    """
    try:
        node = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark is not None else ""
        raise ParseError(f"{where}{getattr(exc, 'problem', None) or exc}") from exc
    if not isinstance(data, dict):
        raise ParseError("job document must be a mapping")
    loc = _Locator(_marks(node))

    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: (loc.line(e.absolute_path), e.message))
    if errors:
        e = errors[0]
        raise loc.error(list(e.absolute_path), e.message)

    m = data["material"]
    try:
        material = Material(*(float(m[k]) for k in ("lambda", "mu", "rho")),
                            *(float(m.get(k, d)) for k, d in (("p", 0.0), ("q", 0.0), ("alpha", 1.0))))
    except MaterialError as exc:
        name = str(exc).split()[0]
        key = {"lam": "lambda"}.get(name, name)
        raise loc.error(["material"] + ([key] if key in m else []), str(exc)) from exc

    freqs = tuple(float(w) for w in data["frequencies"])
    for i, w in enumerate(freqs):
        if not (w > 0 and math.isfinite(w)):
            raise loc.error(["frequencies", i], f"frequency must be > 0, got {w}")

    damping = float(data.get("damping", 0.0))
    if damping < 0:
        raise loc.error(["damping"], f"damping must be >= 0, got {damping}")

    source = _vec3(data["source"])
    if not source[2] < 0:
        raise loc.error(["source", 2], f"source x3 must be < 0, got {source[2]}")

    rec = data.get("receivers") or {}
    if "grid" in rec and "points" in rec:
        raise loc.error(["receivers"], "give either 'grid' or 'points', not both")
    if "grid" in rec:
        g = rec["grid"]
        receivers = ReceiverGrid(_vec3(g["origin"]), tuple(_vec3(a) for a in g["axes"]),
                                 tuple(int(c) for c in g["counts"]))
    else:
        receivers = tuple(_vec3(p) for p in rec.get("points", []))

    try:
        quad = QuadratureConfig(**(data.get("quadrature") or {}))
    except ValueError as exc:
        raise loc.error(["quadrature"], str(exc)) from exc

    out = data.get("outputs") or {}
    outputs = OutputSpec(format=out.get("format", "csv"), path=out.get("path", "green.csv"),
                         which=out.get("which", "displacement"),
                         normal=_vec3(out.get("normal", (0.0, 0.0, 1.0))))
    if np.linalg.norm(outputs.normal) == 0:
        raise loc.error(["outputs", "normal"], "normal must be nonzero")

    verify = None
    if "verify" in data:
        v = dict(data["verify"] or {})
        flags = {k: bool(v.pop(k)) for k in ("traction_free", "pde", "reciprocity", "hypothesis_scan")
                 if k in v}
        verify = VerifySpec(**flags, tolerances=VerificationConfig(**v))

    s = dict(data.get("scan") or {})
    cand = s.pop("candidate_tol", 1e-3)
    scan = ScanSpec(grid=ScanGrid(**s), candidate_tol=float(cand))

    job = JobConfig(material, freqs, source, receivers, quad, outputs, verify, scan, damping)
    _check_geometry(job, loc, "grid" in rec)
    return job


def _check_geometry(job: JobConfig, loc: _Locator, is_grid: bool):
    pts = job.receiver_points()
    if len(pts) == 0:
        return
    src = np.asarray(job.source)

    def where(i):
        return ["receivers", "grid"] if is_grid else ["receivers", "points", i]

    for i, x in enumerate(pts):
        if not x[2] < 0:
            raise loc.error(where(i), f"receiver {i} has x3 = {x[2]}, must be < 0")
        if np.linalg.norm(x - src) < 1e-12:
            raise loc.error(where(i), f"receiver {i} coincides with the source")
    for j, w in enumerate(job.frequencies):
        hm = h_min(frequency_context(job.material, w, job.damping))
        bad = np.nonzero(pts[:, 2] + src[2] >= -hm)[0]
        if bad.size:
            i = int(bad[0])
            raise loc.error(where(i), f"receiver {i}: x3 + xi3 must be < -{hm:.6g} at omega={w}")


# --- serialization -----------------------------------------------------------

def to_document(job: JobConfig) -> dict:
    """Plain-data form of a job, the inverse of :func:`parse_config`."""
    m = job.material
    doc = {
        "material": {"lambda": m.lam, "mu": m.mu, "rho": m.rho, "p": m.p, "q": m.q, "alpha": m.alpha},
        "frequencies": list(job.frequencies),
        "damping": job.damping,
        "source": list(job.source),
        "quadrature": asdict(job.quadrature),
        "outputs": {"format": job.outputs.format, "path": job.outputs.path,
                    "which": job.outputs.which, "normal": list(job.outputs.normal)},
        "scan": {**asdict(job.scan.grid), "candidate_tol": job.scan.candidate_tol},
    }
    if isinstance(job.receivers, ReceiverGrid):
        doc["receivers"] = {"grid": {"origin": list(job.receivers.origin),
                                     "axes": [list(a) for a in job.receivers.axes],
                                     "counts": list(job.receivers.counts)}}
    else:
        doc["receivers"] = {"points": [list(p) for p in job.receivers]}
    if job.verify is not None:
        v = job.verify
        doc["verify"] = {f.name: getattr(v, f.name) for f in fields(v) if f.name != "tolerances"}
        doc["verify"].update(asdict(v.tolerances))
    return doc


def serialize(job: JobConfig) -> str:
    return yaml.safe_dump(to_document(job), sort_keys=False)


def load_config(path) -> JobConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    return parse_config(text)
