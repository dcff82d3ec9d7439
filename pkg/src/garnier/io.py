"""JSON serialization of systems, solutions and job configurations.

Complex numbers are stored as ``[re, im]`` pairs; every document carries a
``schema`` tag.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GarnierError

SYSTEM_SCHEMA = "garnier.system/1"
SOLUTION_SCHEMA = "garnier.solution/1"
JOB_SCHEMA = "garnier.job/1"


class ConfigError(GarnierError):
    """Unreadable file or document that does not match its schema."""

    exit_code = 1


def complex_to_json(a):
    """Nested lists with every complex entry replaced by ``[re, im]``."""
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def complex_from_json(obj):
    arr = np.asarray(obj, dtype=float)
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ConfigError("complex values must be [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def write_json(path, obj):
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _require(doc, schema):
    if not isinstance(doc, dict):
        raise ConfigError("expected a JSON object")
    if doc.get("schema") != schema:
        raise ConfigError(f"expected schema {schema!r}, got {doc.get('schema')!r}")


def system_to_json(sys):
    return {
        "schema": SYSTEM_SCHEMA,
        "t": complex_to_json(sys.t),
        "A": complex_to_json(sys.A),
        "theta": np.asarray(sys.theta).tolist(),
    }


def system_from_json(doc):
    from .fuchsian import FuchsianSystem
    _require(doc, SYSTEM_SCHEMA)
    try:
        return FuchsianSystem(complex_from_json(doc["t"]), complex_from_json(doc["A"]),
                              np.asarray(doc["theta"], dtype=float))
    except KeyError as exc:
        raise ConfigError(f"missing field {exc}") from exc


def solution_to_json(sol):
    return {
        "schema": SOLUTION_SCHEMA,
        "system": system_to_json(sol.system),
        "directions": np.asarray(sol.target.u).tolist(),
        "gauge": sol.gauge.as_dict(),
        "report": _plain(sol.report),
    }


def solution_from_json(doc):
    """Rebuild a ``RiemannHilbertSolution``; the target is recomputed from the directions."""
    from .lorentz import J
    from .monodromy import GaugeData, RiemannHilbertSolution, target_monodromy
    _require(doc, SOLUTION_SCHEMA)
    try:
        sys = system_from_json(doc["system"])
        target = target_monodromy(np.asarray(doc["directions"], dtype=float))
        g = doc["gauge"]
        S = complex_from_json(g["S"])
        gauge = GaugeData(C0=complex_from_json(g["C0"]), S=S,
                          D=np.array([Si @ J @ np.linalg.inv(Si) for Si in S]),
                          phase=float(g["phase"]), orientation=int(g["orientation"]),
                          edge_residual=np.asarray(g["edge_residual"], dtype=float),
                          conjugation_residual=g.get("conjugation_residual"),
                          lam=float(g.get("lam", 1.0)))
    except KeyError as exc:
        raise ConfigError(f"missing field {exc}") from exc
    return RiemannHilbertSolution(system=sys, target=target, gauge=gauge,
                                  report=doc.get("report", {}))


def load_system_or_solution(path):
    """``(system, solution or None)`` from a system or solution file."""
    doc = read_json(path)
    if isinstance(doc, dict) and doc.get("schema") == SOLUTION_SCHEMA:
        sol = solution_from_json(doc)
        return sol.system, sol
    return system_from_json(doc), None


def _plain(obj):
    """Convert numpy scalars and arrays inside ``obj`` to JSON types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return complex_to_json(obj) if np.iscomplexobj(obj) else obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


plain = _plain


@dataclass
class JobConfig:
    """Validated job description.

    ``directions`` is an ``(n + 3, 3)`` array, ``ratios`` the ``n`` target
    ratios (optional for commands that do not solve the Plateau problem).
    """

    directions: np.ndarray
    ratios: np.ndarray = None
    t_init: np.ndarray = None
    t_final: np.ndarray = None
    tol_ode: float = 1e-11
    tol_solve: float = 1e-6
    grid: tuple = (24, 24)
    rmax: float = 50.0
    seed: int = 0
    restarts: int = 32
    loops: list = None
    coplanar_pair: tuple = None
    out: str = "out"
    extra: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.directions.shape[0] - 3


def _floats(value, name, shape=None):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be numeric") from exc
    if shape is not None and arr.shape != shape:
        raise ConfigError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} must be finite")
    return arr


def config_from_json(doc):
    if not isinstance(doc, dict):
        raise ConfigError("a job configuration must be a JSON object")
    if doc.get("schema", JOB_SCHEMA) != JOB_SCHEMA:
        raise ConfigError(f"expected schema {JOB_SCHEMA!r}, got {doc.get('schema')!r}")
    known = {"schema", "directions", "ratios", "t_init", "t_final", "tolerances", "mesh", "seed",
             "restarts", "loops", "coplanar_pair", "out"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown fields: {sorted(unknown)}")
    if "directions" not in doc:
        raise ConfigError("missing field 'directions'")
    u = _floats(doc["directions"], "directions")
    if u.ndim != 2 or u.shape[1] != 3 or u.shape[0] < 3:
        raise ConfigError("directions must be a list of n + 3 three-vectors")
    n = u.shape[0] - 3
    cfg = JobConfig(directions=u)
    if doc.get("ratios") is not None:
        cfg.ratios = _floats(doc["ratios"], "ratios", (n,))
    for key in ("t_init", "t_final"):
        if doc.get(key) is not None:
            setattr(cfg, key, _floats(doc[key], key, (n,)))
    tol = doc.get("tolerances", {})
    if not isinstance(tol, dict):
        raise ConfigError("tolerances must be an object")
    for key, attr in (("ode", "tol_ode"), ("solve", "tol_solve")):
        if key in tol:
            v = float(_floats(tol[key], f"tolerances.{key}"))
            if not v > 0:
                raise ConfigError(f"tolerances.{key} must be positive")
            setattr(cfg, attr, v)
    mesh = doc.get("mesh", {})
    if not isinstance(mesh, dict):
        raise ConfigError("mesh must be an object")
    if "grid" in mesh:
        g = _floats(mesh["grid"], "mesh.grid", (2,))
        if np.any(g < 2) or np.any(g != np.round(g)):
            raise ConfigError("mesh.grid must be two integers >= 2")
        cfg.grid = (int(g[0]), int(g[1]))
    if "rmax" in mesh:
        cfg.rmax = float(_floats(mesh["rmax"], "mesh.rmax"))
        if not cfg.rmax > 0:
            raise ConfigError("mesh.rmax must be positive")
    for key in ("seed", "restarts"):
        if key in doc:
            v = doc[key]
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"{key} must be a non-negative integer")
            setattr(cfg, key, v)
    if cfg.restarts == 0:
        raise ConfigError("restarts must be positive")
    if doc.get("loops") is not None:
        loops = doc["loops"]
        if not isinstance(loops, list) or not all(isinstance(k, int) for k in loops):
            raise ConfigError("loops must be a list of 1-based singular point indices")
        cfg.loops = loops
    if doc.get("coplanar_pair") is not None:
        pair = doc["coplanar_pair"]
        if (not isinstance(pair, list) or len(pair) != 2
                or not all(isinstance(k, int) and 1 <= k <= n + 3 for k in pair)
                or pair[0] == pair[1]):
            raise ConfigError(f"coplanar_pair must be two distinct indices in 1..{n + 3}")
        cfg.coplanar_pair = tuple(pair)
    if "out" in doc:
        cfg.out = str(doc["out"])
    return cfg


def load_config(path):
    return config_from_json(read_json(path))


def finite_or_none(x):
    return None if x is None or not math.isfinite(x) else float(x)
