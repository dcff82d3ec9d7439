"""Maximal surfaces from the first row ``(G, H)`` of a fundamental solution.

The surface is

    X(x) = X0 + Re int_{x0}^x (H^2 - G^2, i (G^2 + H^2), 2 i G H) dx

on the closed upper half-plane.  ``WeierstrassFrame`` evaluates ``Y_0``, its
first row and the quadratic integrals ``int (G^2, G H, H^2)``; the functions
below only use this small interface (``data``, ``integrals``, ``base``,
``X0``), so any object providing it can be fed to them.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import lorentz as lz
from .errors import DomainError, NearSingularityError
from .fuchsian import InfinitySeries, LocalSeries
from .monodromy import BASE_POINT, TOL_ODE, Line, infinity_frame, transport

SING_EPS = 1e-6
R_MAX = 50.0
LOCAL_FRACTION = 0.5
RHO_MIN = 1e-9


def phi_from_integrals(Q):
    """Map ``(G^2, G H, H^2)`` (or their integrals) to ``(H^2 - G^2, i(G^2 + H^2), 2 i G H)``."""
    Q = np.asarray(Q)
    return np.stack([Q[..., 2] - Q[..., 0], 1j * (Q[..., 0] + Q[..., 2]), 2j * Q[..., 1]], axis=-1)


class WeierstrassFrame:
    """Evaluator of ``Y_0(x) = Y_inf(x) C0`` on the closed upper half-plane.

    Points inside ``LOCAL_FRACTION`` of the convergence radius around a
    finite singular point use the Frobenius series there, points far out use
    the series at infinity and everything else is continued from the base
    point along a straight segment.  The anchors (local connection matrices
    and the integrals up to each vertex) are computed once on construction.

    Parameters
    ----------
    sys : FuchsianSystem
    C0 : array_like, shape (2, 2)
        Frame change from ``Y_inf``.
    S : array_like, shape (n + 3, 2, 2), optional
        Edge-reality frames.
    base : complex
        Base point ``x0`` of the surface integral.
    X0 : array_like, shape (3,)
        Value of the surface at ``x0``.
    """

    def __init__(self, sys, C0, S=None, base=BASE_POINT, X0=(0.0, 0.0, 0.0), rtol=TOL_ODE,
                 directions=None):
        self.sys = sys
        self.C0 = np.asarray(C0, dtype=complex)
        self.S = None if S is None else np.asarray(S, dtype=complex)
        self.base = complex(base)
        self.X0 = np.asarray(X0, dtype=float)
        self.rtol = rtol
        self.directions = directions
        self.base_frame = infinity_frame(sys, self.base, rtol=rtol) @ self.C0
        self._inf = InfinitySeries(sys)
        self.far = 2.0 * max(1.0, float(np.abs(sys.t).max()))
        self.local = [LocalSeries(sys, i) for i in range(sys.t.size)]
        anchors = np.array([sys.t[i] + LOCAL_FRACTION * 1j * loc.radius
                            for i, loc in enumerate(self.local)])
        tr = transport(sys, [Line(self.base, a) for a in anchors],
                       np.broadcast_to(self.base_frame, (anchors.size, 2, 2)), rtol=rtol,
                       integrals=True)
        self.anchors = anchors
        self.K = np.array([np.linalg.solve(loc.evaluate(a)[0], Y)
                           for loc, a, Y in zip(self.local, anchors, tr.Y)])
        # integrals from the base point to each vertex
        self.Qvertex = np.array([tr.Q[i] - loc.quadratic_integrals(a, self.K[i])
                                 for i, (loc, a) in enumerate(zip(self.local, anchors))])

    @classmethod
    def from_solution(cls, sol, **kw):
        return cls(sol.system, sol.gauge.C0 * sol.gauge.lam, S=sol.gauge.S,
                   directions=sol.target.u, **kw)

    def with_system(self, sys):
        """Same gauge on a deformed system (the monodromy, hence ``C0``, is unchanged)."""
        return WeierstrassFrame(sys, self.C0, S=self.S, base=self.base, X0=self.X0,
                                rtol=self.rtol, directions=self.directions)

    def transformed(self, A):
        """Frame whose data row is ``(G, H) A``."""
        return WeierstrassFrame(self.sys, self.C0 @ np.asarray(A, dtype=complex), S=self.S,
                                base=self.base, X0=self.X0, rtol=self.rtol,
                                directions=self.directions)

    def scaled(self, lam):
        return WeierstrassFrame(self.sys, self.C0 * lam, S=self.S, base=self.base, X0=self.X0,
                                rtol=self.rtol, directions=self.directions)

    @property
    def n(self):
        return self.sys.n

    # -- routing -------------------------------------------------------------

    def _route(self, x):
        """``('local', i)``, ``('far', None)`` or ``('ode', None)``."""
        d = np.abs(x - self.sys.t)
        i = int(np.argmin(d))
        if d[i] < RHO_MIN:
            raise NearSingularityError(f"point {x} is a singular point", segment=None)
        if d[i] < LOCAL_FRACTION * self.local[i].radius:
            return "local", i
        if abs(x) > self.far:
            return "far", None
        return "ode", None

    def _check(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=complex))
        if np.any(xs.imag < -1e-14):
            raise DomainError("points must lie in the closed upper half-plane")
        return np.where(xs.imag < 0, xs.real + 0j, xs)

    def frames(self, xs):
        """``(Y_0(x), Y_0'(x))`` for an array of points, shapes ``(N, 2, 2)``."""
        xs = self._check(xs)
        Y = np.empty((xs.size, 2, 2), dtype=complex)
        ode = []
        for k, x in enumerate(xs):
            kind, i = self._route(x)
            if kind == "local":
                Y[k] = self.local[i].evaluate(x)[0] @ self.K[i]
            elif kind == "far":
                Y[k] = self._inf.evaluate(x)[0] @ self.C0
            else:
                ode.append(k)
        if ode:
            tr = transport(self.sys, [Line(self.base, xs[k]) for k in ode],
                           np.broadcast_to(self.base_frame, (len(ode), 2, 2)), rtol=self.rtol)
            Y[ode] = tr.Y
        dY = np.matmul(self.sys.coefficient(xs), Y)
        return Y, dY

    def data(self, xs):
        """``(G, H, G', H')`` at the given points (arrays)."""
        Y, dY = self.frames(xs)
        return Y[:, 0, 0], Y[:, 0, 1], dY[:, 0, 0], dY[:, 0, 1]

    def integrals(self, xs):
        """``int_{x0}^x (G^2, G H, H^2) dx``, shape ``(N, 3)``."""
        xs = self._check(xs)
        Q = np.empty((xs.size, 3), dtype=complex)
        ode = []
        for k, x in enumerate(xs):
            kind, i = self._route(x)
            if kind == "local":
                Q[k] = self.Qvertex[i] + self.local[i].quadratic_integrals(x, self.K[i])
            else:
                ode.append(k)
        if ode:
            tr = transport(self.sys, [Line(self.base, xs[k]) for k in ode],
                           np.broadcast_to(self.base_frame, (len(ode), 2, 2)), rtol=self.rtol,
                           integrals=True)
            Q[ode] = tr.Q
        return Q

    def vertex_integrals(self):
        """``int_{x0}^{t_i} (G^2, G H, H^2)`` for the finite vertices."""
        return self.Qvertex.copy()


# ---------------------------------------------------------------------------
# surface quantities


def evaluate_frame(frame, x):
    """``(G, H, G', H')`` at one point or an array of points."""
    G, H, dG, dH = frame.data(x)
    if np.ndim(x) == 0:
        return complex(G[0]), complex(H[0]), complex(dG[0]), complex(dH[0])
    return G, H, dG, dH


def evaluate_maxface(frame, x, base=None, X0=None):
    """Surface point(s) ``X(x)``; ``base``/``X0`` default to those of the frame.

    With another base point ``x1`` the value ``X(x) - X(x1) + X0`` is returned,
    which by path independence is the surface normalized at ``x1``.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=complex))
    Q = frame.integrals(xs)
    X0 = frame.X0 if X0 is None else np.asarray(X0, dtype=float)
    if base is not None and complex(base) != frame.base:
        Q = Q - frame.integrals([base])[0]
    X = X0 + phi_from_integrals(Q).real
    return X[0] if np.ndim(x) == 0 else X


def vertex_images(frame):
    """Images ``a_1 .. a_{n+2}`` of the finite vertices, shape ``(n + 2, 3)``."""
    return frame.X0 + phi_from_integrals(frame.vertex_integrals()).real


def gauss_map(frame, x):
    """Stereographic Gauss map ``g = H/G`` and the unit normal ``N = pi(g)``.

    This is the holomorphic choice of ``g`` for which ``N`` is Lorentz
    orthogonal to ``Re Phi`` and ``Im Phi`` with the Weierstrass integrand
    above.  Near ``G = 0`` the chart ``1/g`` is used.  Raises ``DomainError``
    at singular points, where ``|g| = 1`` and ``N`` is lightlike.
    """
    G, H, _, _ = frame.data(x)
    flags = singular_flags(G, H)
    if np.any(flags):
        bad = np.atleast_1d(x)[np.flatnonzero(flags)[0]]
        raise DomainError(f"singular point of the surface at {bad}")
    g, N = gauss_map_safe(G, H)
    if np.ndim(x) == 0:
        return complex(g[0]), N[0]
    return g, N


def gauss_map_safe(G, H, eps=SING_EPS):
    """Gauss map from data arrays, ``nan`` at singular points."""
    G, H = np.atleast_1d(G), np.atleast_1d(H)
    N = np.full(G.shape + (3,), np.nan)
    g = np.full(G.shape, np.nan + 0j)
    for k in range(G.size):
        if not (np.isfinite(G[k]) and np.isfinite(H[k])) or singular_flags(G[k], H[k], eps):
            continue
        if abs(G[k]) >= abs(H[k]):
            g[k] = H[k] / G[k]
            N[k] = lz.stereo_project(g[k])
        else:
            w = G[k] / H[k]  # 1/g
            N[k] = _stereo_inverse_chart(w)
            g[k] = np.inf if w == 0 else 1.0 / w
    return g, N


def _stereo_inverse_chart(w):
    """``stereo_project(1/w)`` computed without dividing by ``w``."""
    r2 = abs(w) ** 2
    den = 1.0 - r2
    return np.array([-2 * w.imag / den, 2 * w.real / den, (1 + r2) / den])


def metric_and_hopf(frame, x):
    """Conformal factor ``(|G|^2 - |H|^2)^2`` and Hopf coefficient ``i (G H' - H G')``."""
    G, H, dG, dH = frame.data(x)
    factor = (np.abs(G) ** 2 - np.abs(H) ** 2) ** 2
    hopf = 1j * (G * dH - H * dG)
    if np.ndim(x) == 0:
        return float(factor[0]), complex(hopf[0])
    return factor, hopf


def singular_flags(G, H, eps=SING_EPS):
    return np.abs(np.abs(G) - np.abs(H)) < eps * (np.abs(G) + np.abs(H))


# ---------------------------------------------------------------------------
# local structure at the vertices and at infinity


@dataclass
class LocalExpansion:
    """Leading behavior of the adapted data near a vertex (or ``x * G * H`` at infinity)."""

    index: int
    theta: float
    slopes: np.ndarray
    expected: np.ndarray
    leading: np.ndarray
    negative_component: int
    branch_point: bool
    fit_residual: float
    slope_G: float = None
    end_constant: complex = None

    def as_dict(self):
        return {
            "index": self.index + 1,
            "theta": self.theta,
            "slopes": np.asarray(self.slopes).tolist(),
            "expected": np.asarray(self.expected).tolist(),
            "leading": [[c.real, c.imag] for c in np.asarray(self.leading, dtype=complex)],
            "negative_component": self.negative_component,
            "branch_point": self.branch_point,
            "fit_residual": self.fit_residual,
            "slope_G": self.slope_G,
            "end_constant": None if self.end_constant is None else
            [self.end_constant.real, self.end_constant.imag],
        }


def _loglog_fit(r, values):
    A = np.column_stack([np.log(r), np.ones_like(r)])
    coef, *_ = np.linalg.lstsq(A, np.log(values), rcond=None)
    resid = float(np.abs(A @ coef - np.log(values)).max())
    return coef[0], np.exp(coef[1]), resid


def edge_local_expansion(frame, i, radii=None, angle=np.pi / 2, tol=1e-3):
    """Fitted local exponents at the finite vertex ``t_{i+1}`` (0-based ``i``).

    The data are rotated into the frame ``T`` carrying the vertex normal
    ``v_i`` to ``+-e3`` (``align_timelike``), where one component behaves like
    ``alpha z^{-theta/2}`` and the other like ``beta z^{theta/2}``.  Slopes
    are fitted on geometric radii ``1e-3 .. 1e-6`` along the ray at ``angle``.
    A component whose slope is ``1 - theta/2`` instead of ``-theta/2``
    signals a boundary branch point (vertex angle ``(1 + theta) pi``).

    Passing ``i = n + 2`` fits ``x G H`` along a ray to infinity instead.
    """
    sys = frame.sys
    m = sys.t.size
    if i == m:
        return _infinity_expansion(frame, tol=tol)
    if not 0 <= i < m:
        raise DomainError(f"vertex index {i} out of range")
    theta = float(sys.theta[i])
    if radii is None:
        radii = np.geomspace(1e-3, 1e-6, 7)
    xs = sys.t[i] + radii * np.exp(1j * angle)
    G, H, _, _ = frame.data(xs)
    rows = np.stack([G, H], axis=1)
    v = _vertex_normal(frame, i)
    T = lz.align_timelike(v)
    adapted = rows @ T
    slopes, leading, resid = np.empty(2), np.empty(2, dtype=complex), 0.0
    for c in range(2):
        s, a, r = _loglog_fit(radii, np.abs(adapted[:, c]))
        slopes[c], leading[c] = s, a
        resid = max(resid, r)
    sG, _, _ = _loglog_fit(radii, np.abs(G))
    neg = int(np.argmin(slopes))
    pos = 1 - neg
    branch = abs(slopes[neg] - (1 - theta / 2)) < abs(slopes[neg] + theta / 2)
    expected = np.empty(2)
    expected[neg] = (1 - theta / 2) if branch else -theta / 2
    expected[pos] = theta / 2
    err = float(np.abs(slopes - expected).max())
    if err > tol:
        raise DomainError(f"vertex {i + 1} is not generic: fitted exponents {slopes} "
                          f"(expected {expected}, fit residual {err:.2e})")
    return LocalExpansion(index=i, theta=theta, slopes=slopes, expected=expected, leading=leading,
                          negative_component=neg, branch_point=bool(branch),
                          fit_residual=max(err, resid), slope_G=float(sG))


def _vertex_normal(frame, i):
    """Limit of the Gauss map at the finite vertex ``i``, which is ``-v_i``."""
    if frame.directions is not None:
        from .polygon import exterior_angles
        return -exterior_angles(frame.directions).v[i]
    _, N = gauss_map(frame, frame.sys.t[i] + 1e-7j)
    return np.asarray(N).reshape(3)


def _infinity_expansion(frame, tol=1e-3, radii=None, angle=np.pi / 2):
    """``x G(x) H(x)`` along a ray: tends to a nonzero constant for a helicoidal end."""
    sys = frame.sys
    if radii is None:
        r0 = 50.0 * frame.far
        radii = np.geomspace(r0, 1e3 * r0, 9)
    xs = radii * np.exp(1j * angle)
    G, H, _, _ = frame.data(xs)
    if frame.directions is not None:
        from .polygon import exterior_angles
        T = lz.align_timelike(exterior_angles(frame.directions).v[-1])
    else:
        T = np.linalg.inv(frame.C0)
    G, H = (np.stack([G, H], axis=1) @ T).T
    w = xs * G * H
    c = w[-1]
    # x G H = c + O(1/x): fit c + d / x + e / x^2
    A = np.column_stack([np.ones_like(xs), 1.0 / xs, 1.0 / xs ** 2])
    coef, *_ = np.linalg.lstsq(A, w, rcond=None)
    fit = float(np.abs(A @ coef - w).max() / abs(coef[0]))
    s1, _, _ = _loglog_fit(radii, np.abs(G))
    s2, _, _ = _loglog_fit(radii, np.abs(H))
    ell = sys.ell
    if fit > tol or abs(coef[0]) < 1e-12 * max(1.0, abs(c)):
        raise DomainError(f"end at infinity is not helicoidal (fit residual {fit:.2e})")
    return LocalExpansion(index=sys.t.size, theta=sys.theta_inf, slopes=np.array([s1, s2]),
                          expected=np.array([-ell, -(1 - ell)]), leading=np.array([coef[0], coef[1]]),
                          negative_component=0, branch_point=False, fit_residual=fit,
                          end_constant=complex(coef[0]))


# ---------------------------------------------------------------------------
# boundary


def edge_parameters(frame, k, count=41, R_max=R_MAX, margin=1e-4):
    """Real sample points on edge ``k`` (0-based), clustered at the endpoints.

    Edges ``n + 1`` and ``n + 2`` (0-based) are the unbounded ones; they are
    truncated at ``|x| = R_max``.
    """
    t = frame.sys.t.real
    m = t.size
    s = 0.5 - 0.5 * np.cos(np.linspace(0, np.pi, count))
    if k < m - 1:
        lo, hi = t[k], t[k + 1]
        span = hi - lo
        return lo + span * (margin + (1 - 2 * margin) * s)
    if k == m - 1:
        return t[-1] + np.geomspace(margin, R_max - t[-1], count)
    return t[0] - np.geomspace(margin, R_max + t[0], count)[::-1]


@dataclass
class BoundaryReport:
    directions: np.ndarray
    collinearity: np.ndarray
    orientation: np.ndarray
    angles: np.ndarray
    theta: np.ndarray
    lengths: np.ndarray

    @property
    def angle_error(self):
        return float(np.abs(self.angles - self.theta).max())

    def passes(self, line_tol=1e-6, angle_tol=1e-4):
        return bool(self.collinearity.max() < line_tol and self.angle_error < angle_tol
                    and np.all(self.orientation > 0))

    def as_dict(self):
        return {
            "directions": self.directions.tolist(),
            "collinearity": self.collinearity.tolist(),
            "orientation": self.orientation.tolist(),
            "angles": self.angles.tolist(),
            "theta": self.theta.tolist(),
            "angle_error": self.angle_error,
            "lengths": self.lengths.tolist(),
        }


def _line_fit(P):
    c = P.mean(axis=0)
    _, _, Vt = np.linalg.svd(P - c)
    d = Vt[0]
    off = (P - c) - np.outer((P - c) @ d, d)
    return c, d, np.linalg.norm(off, axis=1)


def boundary_check(frame, count=41, R_max=R_MAX):
    """Line fits of the image of every edge.

    Finite edges are compared with their vertex images: the deviation of the
    samples from the chord, relative to the Euclidean chord length.  The
    unbounded edges are fitted by a line through their finite vertex.  The
    direction of each fit is compared with the exterior angles at the
    vertices (``arccos`` of the Lorentz product of consecutive directions).
    """
    sys = frame.sys
    m = sys.t.size
    a = vertex_images(frame)
    dirs = np.empty((m + 1, 3))
    col = np.empty(m + 1)
    lengths = np.full(m + 1, np.inf)
    for k in range(m + 1):
        xs = edge_parameters(frame, k, count=count, R_max=R_max)
        P = evaluate_maxface(frame, xs)
        if k < m - 1:
            chord = a[k + 1] - a[k]
            L = np.linalg.norm(chord)
            d = chord / L
            off = (P - a[k]) - np.outer((P - a[k]) @ d, d)
            col[k] = float(np.linalg.norm(off, axis=1).max() / L)
            lengths[k] = float(np.sqrt(lz.lorentz_dot(chord, chord)))
        else:
            anchor = a[-1] if k == m - 1 else a[0]
            Q = P - anchor
            far = Q[-1] if k == m - 1 else -Q[0]
            d = far / np.linalg.norm(far)
            off = Q - np.outer(Q @ d, d)
            col[k] = float(np.linalg.norm(off, axis=1).max() / np.linalg.norm(far))
        dirs[k] = d / np.sqrt(abs(lz.lorentz_dot(d, d)))
    orientation = np.ones(m + 1)
    if frame.directions is not None:
        u = np.asarray(frame.directions)
        orientation = np.array([lz.lorentz_dot(dirs[k], u[k]) for k in range(m + 1)])
    angles = np.array([np.arccos(np.clip(lz.lorentz_dot(dirs[k - 1], dirs[k]), -1, 1)) / np.pi
                       for k in range(m + 1)])
    return BoundaryReport(directions=dirs, collinearity=col, orientation=orientation,
                          angles=angles, theta=np.asarray(sys.theta), lengths=lengths)


# ---------------------------------------------------------------------------
# finite-difference checks


def stencil_points(x, h):
    """Points ``x + h (p + i q)`` for ``p, q`` in ``-2..2``, shape ``(N, 5, 5)``."""
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    o = np.arange(-2, 3)
    return x[:, None, None] + h * (o[:, None] + 1j * o[None, :])


def tangent_vectors(X, h):
    """Fourth-order central differences ``X_u, X_v`` at the stencil centers."""
    w = np.array([1, -8, 0, 8, -1]) / (12 * h)
    Xu = np.einsum("p,npd->nd", w, X[:, :, 2])
    Xv = np.einsum("q,nqd->nd", w, X[:, 2, :])
    return Xu, Xv


@dataclass
class PDEReport:
    harmonicity: float
    conformality: float
    metric: float
    normal_norm: float
    normal_tangent: float
    singular: int
    points: int

    def passes(self, tol=1e-6, normal_tol=1e-10):
        return bool(self.harmonicity < tol and self.conformality < tol and self.metric < tol
                    and self.normal_norm < normal_tol)

    def as_dict(self):
        return dict(self.__dict__)


def mehrstellen_laplacian(X, h):
    """Nine-point Laplacian, sixth-order accurate on harmonic functions.

    ``X`` has shape ``(ny, nx, ...)``; the result covers the interior.
    """
    c = X[1:-1, 1:-1]
    edges = X[:-2, 1:-1] + X[2:, 1:-1] + X[1:-1, :-2] + X[1:-1, 2:]
    corners = X[:-2, :-2] + X[:-2, 2:] + X[2:, :-2] + X[2:, 2:]
    return (4 * edges + corners - 20 * c) / (6 * h * h)


def grid_pde_check(frame, center, size, count=100, eps=SING_EPS):
    """Harmonicity, conformality and metric residuals on a square grid.

    The grid has ``count x count`` interior nodes of spacing ``h = size /
    (count - 1)`` centered at ``center`` (plus one ring for the stencils).
    Residuals are relative: the Laplacian against ``max|X - X(center)| /
    size^2``, conformality and metric against ``<X_u, X_u> + <X_v, X_v>``.
    Nodes flagged singular are skipped.
    """
    h = size / (count - 1)
    o = (np.arange(-2, count + 2) - (count - 1) / 2) * h
    xs = complex(center) + o[None, :] + 1j * o[:, None]
    if xs.imag.min() <= 0:
        raise DomainError("grid must lie in the open upper half-plane")
    X = evaluate_maxface(frame, xs.ravel()).reshape(xs.shape + (3,))
    G, H, _, _ = frame.data(xs[2:-2, 2:-2].ravel())
    flags = singular_flags(G, H, eps).reshape(count, count)
    lap = mehrstellen_laplacian(X[1:-1, 1:-1], h)
    Xc = evaluate_maxface(frame, complex(center))
    scale = np.abs(X - Xc).max() / size ** 2
    ok = ~flags
    harm = float(np.linalg.norm(lap, axis=-1)[ok].max() / scale)
    # fourth-order differences on the interior nodes
    w = np.array([1, -8, 0, 8, -1]) / (12 * h)
    Xu = sum(w[k] * X[2:-2, k:k + count] for k in range(5))
    Xv = sum(w[k] * X[k:k + count, 2:-2] for k in range(5))
    uu, vv, uv = lz.lorentz_dot(Xu, Xu), lz.lorentz_dot(Xv, Xv), lz.lorentz_dot(Xu, Xv)
    norm = uu + vv
    conf = np.maximum(np.abs(uu - vv), 2 * np.abs(uv)) / norm
    factor = ((np.abs(G) ** 2 - np.abs(H) ** 2) ** 2).reshape(count, count)
    metric = np.abs(0.5 * norm - factor) / factor
    _, N = gauss_map_safe(G, H)
    N = N.reshape(count, count, 3)
    nn = np.abs(lz.lorentz_dot(N, N) + 1.0)
    nt = np.maximum(np.abs(lz.lorentz_dot(N, Xu)), np.abs(lz.lorentz_dot(N, Xv))) / np.sqrt(norm)
    return PDEReport(harmonicity=harm, conformality=float(conf[ok].max()),
                     metric=float(metric[ok].max()), normal_norm=float(nn[ok].max()),
                     normal_tangent=float(nt[ok].max()), singular=int(flags.sum()),
                     points=int(count * count))


# ---------------------------------------------------------------------------
# equivariance


def isometry_equivariance_check(frame, A, samples=None, rng=None):
    """Largest deviation between ``X_{(G,H) A}`` and the isometry of ``X``.

    Both surfaces are translated so that they agree at the first sample.
    ``A`` may lie in ``SU(1,1)`` or in ``SU^-(1,1)``, whose action reverses
    orientation.
    """
    if samples is None:
        rng = np.random.default_rng(0) if rng is None else rng
        samples = rng.uniform(-2, 2, 8) + 1j * rng.uniform(0.2, 2, 8)
    samples = np.asarray(samples, dtype=complex)
    X = evaluate_maxface(frame, samples)
    Y = evaluate_maxface(frame.transformed(A), samples)
    R = lz.isometry_matrix(A)
    lhs = Y - Y[0]
    rhs = (X - X[0]) @ R.T
    scale = max(1.0, float(np.abs(rhs).max()))
    return float(np.abs(lhs - rhs).max() / scale)


# ---------------------------------------------------------------------------
# mesh


@dataclass
class MaxfaceMesh:
    params: np.ndarray
    points: np.ndarray
    normals: np.ndarray
    factor: np.ndarray
    singular: np.ndarray
    faces: np.ndarray
    boundary: np.ndarray
    vertices: np.ndarray
    report: dict = field(default_factory=dict)

    def to_obj(self, path):
        with open(path, "w") as fh:
            fh.write("# maxface mesh\n# per-vertex comment: N1 N2 N3 conformal_factor singular\n")
            for p, nv, f, s in zip(self.points, self.normals, self.factor, self.singular):
                fh.write(f"v {p[0]:.12g} {p[1]:.12g} {p[2]:.12g}\n")
                fh.write(f"# vn {nv[0]:.12g} {nv[1]:.12g} {nv[2]:.12g} {f:.12g} {int(s)}\n")
            for tri in self.faces:
                fh.write("f {} {} {}\n".format(*(tri + 1)))

    def to_ply(self, path):
        with open(path, "w") as fh:
            fh.write("ply\nformat ascii 1.0\n")
            fh.write(f"element vertex {len(self.points)}\n")
            for name in ("x", "y", "z", "gx", "gy", "gz", "conformal", "singular"):
                fh.write(f"property float {name}\n")
            fh.write(f"element face {len(self.faces)}\nproperty list uchar int vertex_indices\n")
            fh.write("end_header\n")
            for p, nv, f, s in zip(self.points, self.normals, self.factor, self.singular):
                vals = list(p) + list(nv) + [f, float(s)]
                fh.write(" ".join(f"{v:.12g}" for v in vals) + "\n")
            for tri in self.faces:
                fh.write("3 {} {} {}\n".format(*tri))

    def boundary_json(self):
        return {"schema": "garnier.boundary/1",
                "vertices": self.vertices.tolist(),
                "polyline": self.boundary.tolist()}

    def write(self, stem):
        """Write ``stem.obj``, ``stem.ply`` and ``stem.boundary.json``."""
        self.to_obj(f"{stem}.obj")
        self.to_ply(f"{stem}.ply")
        with open(f"{stem}.boundary.json", "w") as fh:
            json.dump(self.boundary_json(), fh, indent=1, sort_keys=True)


def _clustered_axis(t, R_max, per_gap):
    """Real grid nodes on ``[-R_max, R_max]`` clustered at the points ``t``."""
    knots = np.concatenate([[-R_max], np.sort(t), [R_max]])
    pieces = []
    for lo, hi in zip(knots[:-1], knots[1:]):
        s = 0.5 - 0.5 * np.cos(np.linspace(0, np.pi, per_gap + 1))
        pieces.append(lo + (hi - lo) * s[:-1])
    pieces.append([R_max])
    return np.concatenate(pieces)


def sample_mesh(frame, grid=(24, 24), R_max=R_MAX, check=True, line_tol=1e-6, conf_tol=1e-6):
    """Sample the surface on a grid over ``{Im x >= 0, |x| <= R_max}``.

    Real parts are clustered (Chebyshev-like) at the singular points, imaginary
    parts spaced geometrically from ``1e-3`` to ``R_max``, plus the boundary
    row on the real axis.  Vertex images are the integrals up to ``t_i``.
    With ``check`` the boundary line fits and a conformality probe must pass
    before the mesh is returned (``DomainError`` otherwise).
    """
    per_gap, ny = grid
    sys = frame.sys
    t = sys.t.real
    xr = _clustered_axis(t, R_max, max(2, per_gap // (t.size + 1)))
    yr = np.concatenate([[0.0], np.geomspace(1e-3, R_max, ny)])
    P = xr[None, :] + 1j * yr[:, None]
    inside = np.abs(P) <= R_max * (1 + 1e-12)
    idx = -np.ones(P.shape, dtype=int)
    idx[inside] = np.arange(inside.sum())
    params = P[inside]
    on_vertex = np.array([np.min(np.abs(p - sys.t)) < 1e-12 for p in params])
    points = np.empty((params.size, 3))
    points[~on_vertex] = evaluate_maxface(frame, params[~on_vertex])
    a = vertex_images(frame)
    for k in np.flatnonzero(on_vertex):
        points[k] = a[int(np.argmin(np.abs(params[k] - sys.t)))]
    G = np.full(params.size, np.nan + 0j)
    H = G.copy()
    G[~on_vertex], H[~on_vertex], _, _ = frame.data(params[~on_vertex])
    _, normals = gauss_map_safe(G, H)
    for k in np.flatnonzero(on_vertex):
        normals[k] = _vertex_normal(frame, int(np.argmin(np.abs(params[k] - sys.t))))
    factor = (np.abs(G) ** 2 - np.abs(H) ** 2) ** 2
    factor[on_vertex] = np.inf
    singular = np.where(on_vertex, False, singular_flags(G, H))
    faces = []
    for r in range(P.shape[0] - 1):
        for c in range(P.shape[1] - 1):
            q = [idx[r, c], idx[r, c + 1], idx[r + 1, c + 1], idx[r + 1, c]]
            if min(q) >= 0:
                faces.append([q[0], q[1], q[2]])
                faces.append([q[0], q[2], q[3]])
    boundary = points[idx[0][idx[0] >= 0]]
    report = {}
    if check:
        rep = boundary_check(frame, R_max=R_max)
        probe = complex(np.mean(t), 1.0)
        pde = grid_pde_check(frame, probe, 0.2, count=12)
        report = {"boundary": rep.as_dict(), "pde": pde.as_dict()}
        if rep.collinearity.max() > line_tol:
            raise DomainError(f"boundary is not straight (deviation {rep.collinearity.max():.2e})")
        if pde.conformality > conf_tol:
            raise DomainError(f"conformality probe failed ({pde.conformality:.2e})")
    return MaxfaceMesh(params=params, points=points, normals=normals, factor=factor,
                       singular=singular, faces=np.array(faces, dtype=int), boundary=boundary,
                       vertices=a, report=report)
