"""Spacelike polygonal curves with one vertex possibly at infinity.

A polygon with ``n + 3`` edges is described by its oriented edge directions
``u_1 .. u_{n+3}`` (unit spacelike vectors) and by the ``n`` length ratios
``r_i = |a_i a_{i+1}| / |a_{n+1} a_{n+2}|``.  Indices are 1-based in the
documentation and 0-based in arrays, so ``u[0]`` is ``u_1``.
"""

from dataclasses import dataclass, field

import numpy as np

from . import lorentz as lz
from .errors import DegeneratePolygonError, DomainError

GENERICITY_THRESHOLD = 1e-8
CLOSURE_TOL = 1e-8


@dataclass(frozen=True)
class DirectionTuple:
    """Oriented unit spacelike edge directions, array of shape ``(n + 3, 3)``."""

    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        if u.ndim != 2 or u.shape[1] != 3 or u.shape[0] < 3:
            raise DomainError("directions must be an array of shape (n+3, 3) with n >= 0")
        for k, vk in enumerate(u):
            if lz.classify(vk) != "spacelike" or not np.any(vk):
                raise DomainError(f"direction {k + 1} is not spacelike")
        u = u / np.sqrt(lz.lorentz_dot(u, u))[:, None]
        u.setflags(write=False)
        object.__setattr__(self, "u", u)

    @property
    def n(self):
        return self.u.shape[0] - 3

    def __len__(self):
        return self.u.shape[0]

    def __getitem__(self, k):
        return self.u[k]


@dataclass
class GenericityReport:
    pairs: list = field(default_factory=list)
    coplanarity: list = field(default_factory=list)
    coplanar_pair: tuple = ()
    threshold: float = GENERICITY_THRESHOLD
    generic: bool = False

    def failures(self):
        out = []
        for p in self.pairs:
            if p["margin"] <= self.threshold:
                out.append(f"directions {p['i']} and {p['j']} are collinear")
            elif p["normal"] != "timelike":
                out.append(f"directions {p['i']} and {p['j']} span a non-spacelike plane")
        a, b = self.coplanar_pair
        for c in self.coplanarity:
            if abs(c["det"]) <= self.threshold:
                out.append(f"directions {c['i']}, {a} and {b} are coplanar")
        return out

    def as_dict(self):
        return {
            "generic": self.generic,
            "threshold": self.threshold,
            "coplanar_pair": list(self.coplanar_pair),
            "pairs": self.pairs,
            "coplanarity": self.coplanarity,
            "failures": self.failures(),
        }


def _as_directions(D):
    return D if isinstance(D, DirectionTuple) else DirectionTuple(D)


def validate_direction_tuple(D, threshold=GENERICITY_THRESHOLD, coplanar_pair=None):
    """Check membership of a direction tuple in the generic set.

    Every pair must be non-collinear with a timelike common normal, and every
    direction outside ``coplanar_pair`` (1-based, default ``(n+1, n+2)``) must be
    non-coplanar with that pair.  Margins are Euclidean-normalized sines and
    determinants, so they lie in ``[0, 1]``.
    """
    D = _as_directions(D)
    u = D.u
    m = len(D)
    if coplanar_pair is None:
        coplanar_pair = (D.n + 1, D.n + 2)
    a, b = coplanar_pair
    if not (1 <= a <= m and 1 <= b <= m and a != b):
        raise DomainError("coplanar_pair must be two distinct indices in 1..n+3")
    norms = np.linalg.norm(u, axis=1)
    report = GenericityReport(coplanar_pair=(a, b), threshold=threshold)
    ok = True
    for i in range(m):
        for j in range(i + 1, m):
            c = lz.lorentz_cross(u[i], u[j])
            margin = float(np.linalg.norm(c) / (norms[i] * norms[j]))
            kind = lz.classify(c) if margin > threshold else "degenerate"
            report.pairs.append({"i": i + 1, "j": j + 1, "margin": margin, "normal": kind,
                                 "normal_norm2": float(lz.lorentz_dot(c, c))})
            ok &= margin > threshold and kind == "timelike"
    ua, ub = u[a - 1], u[b - 1]
    for i in range(m):
        if i + 1 in (a, b):
            continue
        det = float(np.linalg.det(np.array([u[i], ua, ub])) / (norms[i] * norms[a - 1] * norms[b - 1]))
        report.coplanarity.append({"i": i + 1, "det": det})
        ok &= abs(det) > threshold
    report.generic = bool(ok)
    return report


@dataclass(frozen=True)
class Angles:
    """Exterior angles ``theta_i`` (fractions of pi) and unit timelike normals ``v_i``."""

    theta: np.ndarray
    v: np.ndarray

    @property
    def theta_inf(self):
        return float(self.theta[-1])


def exterior_angles(D):
    """Exterior angle ``theta_i pi`` and normal ``v_i = -u_{i-1} x u_i`` at each vertex.

    Vertex ``i`` joins edges ``i - 1`` and ``i`` (cyclically, so vertex 1 joins
    edges ``n + 3`` and 1, and vertex ``n + 3`` is the one at infinity).
    """
    D = _as_directions(D)
    u = D.u
    m = len(D)
    theta = np.empty(m)
    v = np.empty((m, 3))
    for i in range(m):
        prev, cur = u[i - 1], u[i]
        w = -lz.lorentz_cross(prev, cur)
        q = lz.lorentz_dot(w, w)
        if np.linalg.norm(w) < GENERICITY_THRESHOLD:
            raise DegeneratePolygonError(f"edges {(i - 1) % m + 1} and {i + 1} are collinear")
        if q >= 0:
            raise DegeneratePolygonError(f"edges {(i - 1) % m + 1} and {i + 1} span a non-spacelike plane")
        v[i] = w / np.sqrt(-q)
        # the restricted metric on span(prev, cur) is positive definite here
        c = float(np.clip(lz.lorentz_dot(prev, cur), -1.0, 1.0))
        theta[i] = np.arccos(c) / np.pi
    return Angles(theta=theta, v=v)


@dataclass(frozen=True)
class PolygonSpec:
    directions: DirectionTuple
    ratios: np.ndarray

    def __post_init__(self):
        D = _as_directions(self.directions)
        r = np.atleast_1d(np.asarray(self.ratios, dtype=float))
        if r.shape != (D.n,):
            raise DomainError(f"expected {D.n} ratios, got {r.size}")
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise DomainError("ratios must be positive")
        object.__setattr__(self, "directions", D)
        object.__setattr__(self, "ratios", r)


@dataclass
class Polygon:
    """Finite vertices ``a_1 .. a_{n+2}`` plus the two boundary half-lines."""

    vertices: np.ndarray
    directions: DirectionTuple
    closed: bool
    closure_gap: float
    apex: np.ndarray = None

    @property
    def at_infinity(self):
        return not self.closed


def _half_line_gap(p, d, q, e):
    """Euclidean gap between the half-lines ``p + s d`` and ``q + r e`` (s, r >= 0)."""
    sol, *_ = np.linalg.lstsq(np.column_stack([d, -e]), q - p, rcond=None)
    candidates = [tuple(sol)]
    # minimizers with one parameter clamped at the ray origin
    candidates.append((0.0, float(np.dot(p - q, e) / np.dot(e, e))))
    candidates.append((float(np.dot(q - p, d) / np.dot(d, d)), 0.0))
    best = None
    for s, r in candidates:
        x = p + max(s, 0.0) * d
        y = q + max(r, 0.0) * e
        gap = float(np.linalg.norm(x - y))
        if best is None or gap < best[0]:
            best = (gap, 0.5 * (x + y))
    return best


def build_polygon(spec, anchor=(0.0, 0.0, 0.0), scale=1.0, closure_tol=CLOSURE_TOL):
    """Vertices of the polygon with the given directions and ratios.

    ``a_1 = anchor`` and ``a_{i+1} = a_i + scale * len_i * u_i`` with
    ``len_{n+1} = 1``.  The polygon is flagged closed when the half-lines from
    ``a_{n+2}`` along ``u_{n+2}`` and from ``a_1`` along ``-u_{n+3}`` meet.
    """
    if not scale > 0:
        raise DomainError("scale must be positive")
    D = spec.directions
    n = D.n
    lengths = np.append(spec.ratios, 1.0)
    a = np.empty((n + 2, 3))
    a[0] = np.asarray(anchor, dtype=float)
    for i in range(n + 1):
        a[i + 1] = a[i] + scale * lengths[i] * D.u[i]
    gap, apex = _half_line_gap(a[n + 1], D.u[n + 1], a[0], -D.u[n + 2])
    closed = gap < closure_tol * scale
    return Polygon(vertices=a, directions=D, closed=closed, closure_gap=gap,
                   apex=apex if closed else None)


def edge_lengths(vertices):
    a = np.asarray(vertices, dtype=float)
    e = np.diff(a, axis=0)
    q = lz.lorentz_dot(e, e)
    if np.any(np.linalg.norm(e, axis=1) == 0):
        raise DegeneratePolygonError("zero-length edge")
    if np.any(q <= 0):
        raise DegeneratePolygonError("edge is not spacelike")
    return np.sqrt(q)


def ratio_coordinates(vertices):
    """Lorentz lengths of edges ``1..n`` divided by the length of edge ``n + 1``."""
    L = edge_lengths(vertices)
    return L[:-1] / L[-1]
