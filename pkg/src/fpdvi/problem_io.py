"""Problem files: JSON, ``format_version`` "1", validated against a bundled schema."""

from __future__ import annotations

import copy
import json
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np
from jsonschema.exceptions import best_match

from .catalog import ExpressionMap, expression_vector_fn
from .errors import FPDVIError, ParseError, UnsupportedCombination, ValidationError
from .evolution import FPDVIProblem
from .fracops import TimeGrid
from .maps import AffineMap, ConstantMap, ConstantNonlocal, LinearPointsNonlocal
from .vi import (
    UNBOUNDED,
    Affine,
    Ball,
    Box,
    CallableMap,
    HalfspaceIntersection,
    Quadratic,
    SeparablePiecewiseLinear,
    WeightedL1,
    Zero,
    check_combination,
)

__all__ = [
    "SolverConfig",
    "LoadedProblem",
    "load_problem",
    "load_vi_instances",
    "parse_problem",
    "build_problem",
    "schema",
]

FORMAT_VERSION = "1"


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("fpdvi").joinpath("schema/problem-v1.schema.json").read_text()
    return json.loads(text)


@dataclass
class SolverConfig:
    N: int = 256
    grid_kind: str = "uniform"
    gamma: float = 1.0
    tol: float = 1e-8
    max_outer: int = 200
    damping: float = 1.0
    seed: int = 0
    vi_tol: float = 1e-10
    vi_max_iter: int = 20000
    hypotheses: dict = field(default_factory=dict)

    def grid(self, T: float) -> TimeGrid:
        if self.grid_kind == "graded":
            return TimeGrid.graded(T, self.N, self.gamma)
        return TimeGrid.uniform(T, self.N)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LoadedProblem:
    problem: FPDVIProblem
    config: SolverConfig
    document: dict
    name: str = ""


@contextmanager
def _field(fld: str):
    """Re-raise construction errors as ValidationError tagged with ``fld``."""
    try:
        yield
    except (ValidationError, ParseError, UnsupportedCombination):
        raise
    except (ValueError, FPDVIError) as exc:
        raise ValidationError(str(exc), fld) from None


def _arr(x, ndim: int, fld: str) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim != ndim:
        raise ValidationError(f"expected a {ndim}-d array, got shape {a.shape}", fld)
    return a


def _state_map(spec: dict, shape: tuple, n: int, fld: str):
    kind = spec["type"]
    with _field(fld):
        if kind == "constant":
            mp = ConstantMap(spec["value"])
        elif kind == "affine":
            mp = AffineMap(spec["const"], spec["linear"])
            if mp.state_dim != n:
                raise ValidationError(f"linear part must act on {n} state components", fld)
        else:
            expr = spec["expr"]
            mp = ExpressionMap([expr] if isinstance(expr, str) else expr, n)
    if tuple(mp.shape) != tuple(shape):
        raise ValidationError(f"map returns shape {tuple(mp.shape)}, expected {tuple(shape)}", fld)
    return mp


def _nonlocal(spec: dict, n: int, T: float):
    if spec["type"] == "constant":
        h = ConstantNonlocal(spec["value"])
    else:
        for i, pt in enumerate(spec["points"]):
            if pt["t"] > T:
                raise ValidationError(f"evaluation time {pt['t']} exceeds T = {T}", f"h/points/{i}/t")
        with _field("h"):
            h = LinearPointsNonlocal(spec["const"], [(p["t"], p["M"]) for p in spec["points"]])
    if h.dim != n:
        raise ValidationError(f"h returns {h.dim} components, expected {n}", "h")
    return h


def _bound(values, default):
    return [default if v is None else v for v in values]


def _set(spec: dict):
    kind = spec["type"]
    if kind == "box":
        return Box(_bound(spec["lower"], -UNBOUNDED), _bound(spec["upper"], UNBOUNDED))
    if kind == "ball":
        return Ball(spec["center"], spec["radius"])
    return HalfspaceIntersection(spec["normals"], spec["offsets"], spec["interior_point"])


def _monotone(spec: dict, m: int):
    if spec["type"] == "affine":
        M = _arr(spec["M"], 2, "vi/G/M")
        if M.shape != (m, m):
            raise ValidationError(f"G matrix must be {m}x{m}", "vi/G/M")
        return Affine(M, spec.get("q"))
    fn = expression_vector_fn(spec["expr"], m)
    return CallableMap(fn, m, lipschitz=spec.get("lipschitz"), vectorized=True)


def _function(spec: dict, m: int):
    kind = spec["type"]
    if kind == "zero":
        return Zero(m)
    if kind == "weighted_l1":
        return WeightedL1(spec["weights"])
    if kind == "quadratic":
        return Quadratic(spec["P"], spec.get("r"))
    return SeparablePiecewiseLinear(spec["breakpoints"], spec["slopes"], m)


def build_problem(doc: dict) -> FPDVIProblem:
    """Construct the problem from a schema-valid document, cross-checking dimensions."""
    A = _arr(doc["A"], 2, "A")
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValidationError(f"A must be square, got {A.shape}", "A")
    vi = doc["vi"]
    with _field("vi/K"):
        K = _set(vi["K"])
    m = K.dim
    T = float(doc["T"])
    B = _state_map(doc["B"], (n, m), n, "B")
    f = _state_map(doc["f"], (n,), n, "f")
    g = _state_map(doc["g"], (m,), n, "g")
    h = _nonlocal(doc["h"], n, T)
    with _field("vi/G"):
        G = _monotone(vi["G"], m)
    with _field("vi/phi"):
        phi = _function(vi["phi"], m)
    if phi.dim not in (None, m):
        raise ValidationError(f"phi acts on {phi.dim} components, expected {m}", "vi/phi")
    check_combination(K, phi)
    with _field("problem"):
        return FPDVIProblem(float(doc["alpha"]), T, A, B, f, g, h, K, G, phi)


def _validate_schema(doc) -> None:
    err = best_match(jsonschema.Draft202012Validator(schema()).iter_errors(doc))
    if err is not None:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ValidationError(err.message, path)


def parse_problem(doc: dict) -> LoadedProblem:
    _validate_schema(doc)
    doc = copy.deepcopy(doc)
    s = doc.get("solver", {})
    gr = doc["grid"]
    cfg = SolverConfig(
        N=int(gr["N"]),
        grid_kind=gr.get("kind", "uniform"),
        gamma=float(gr.get("gamma", 1.0)),
        tol=float(s.get("tol", 1e-8)),
        max_outer=int(s.get("max_outer", 200)),
        damping=float(s.get("damping", 1.0)),
        seed=int(s.get("seed", 0)),
        vi_tol=float(s.get("vi_tol", 1e-10)),
        vi_max_iter=int(s.get("vi_max_iter", 20000)),
        hypotheses=dict(doc.get("hypotheses", {})),
    )
    if cfg.grid_kind == "uniform" and "gamma" in gr and gr["gamma"] != 1:
        raise ValidationError("gamma is only meaningful for graded grids", "grid/gamma")
    return LoadedProblem(build_problem(doc), cfg, doc, doc.get("name", ""))


def _read_json(path: Path):
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", exc.lineno, exc.colno) from None


def load_problem(path) -> LoadedProblem:
    """Read, schema-check and build a problem file."""
    path = Path(path)
    loaded = parse_problem(_read_json(path))
    if not loaded.name:
        loaded.name = path.stem
    return loaded


def load_vi_instances(path=None) -> list:
    """Standalone VI instances as (name, VIProblem) pairs; defaults to the bundled set."""
    from .vi import VIProblem

    if path is None:
        text = resources.files("fpdvi").joinpath("problems/vi_instances.json").read_text()
        doc = json.loads(text)
    else:
        doc = _read_json(Path(path))
    sch = {**schema(), "$ref": "#/$defs/viInstances"}
    sch.pop("required", None)
    sch.pop("properties", None)
    sch.pop("additionalProperties", None)
    err = best_match(jsonschema.Draft202012Validator(sch).iter_errors(doc))
    if err is not None:
        raise ValidationError(err.message, "/".join(str(p) for p in err.absolute_path) or "<root>")
    out = []
    for i, inst in enumerate(doc["instances"]):
        with _field(f"instances/{i}"):
            K = _set(inst["K"])
            m = K.dim
            out.append((inst["name"], VIProblem(K, inst["w"], _monotone(inst["G"], m), _function(inst["phi"], m))))
    return out
