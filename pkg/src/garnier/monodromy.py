"""Monodromy of Fuchsian systems and the Riemann-Hilbert solve.

Conventions
-----------
Solutions are columns, fundamental matrices act on the right: continuing a
fundamental matrix ``Y`` along a loop ``gamma`` gives ``Y N``.  The loops
``gamma_i`` start at the base point ``x0`` in the upper half-plane, descend
to the top of a small circle around ``t_i``, run once counterclockwise and
come back.  ``gamma_{n+3}`` is a large clockwise circle, so that
``N_{n+3} ... N_1 = I``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from . import lorentz as lz
from .errors import (DomainError, GaugeError, NearSingularityError, PathError,
                     RiemannHilbertError)
from .fuchsian import FuchsianSystem, InfinitySeries, LocalSeries, check_conditions
from .polygon import exterior_angles, validate_direction_tuple, _as_directions

TOL_ODE = 1e-11
BASE_POINT = 1j
LOOP_FRACTION = 0.4


# ---------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class Line:
    a: complex
    b: complex

    def point(self, s):
        return self.a + s * (self.b - self.a)

    def velocity(self, s):
        return (self.b - self.a) * np.ones_like(s, dtype=complex)

    def reversed(self):
        return Line(self.b, self.a)

    @property
    def end(self):
        return self.b


@dataclass(frozen=True)
class Arc:
    center: complex
    radius: float
    phi0: float
    phi1: float

    def point(self, s):
        return self.center + self.radius * np.exp(1j * (self.phi0 + s * (self.phi1 - self.phi0)))

    def velocity(self, s):
        phi = self.phi0 + s * (self.phi1 - self.phi0)
        return 1j * self.radius * (self.phi1 - self.phi0) * np.exp(1j * phi)

    def reversed(self):
        return Arc(self.center, self.radius, self.phi1, self.phi0)

    @property
    def end(self):
        return self.point(1.0)


def polyline(points):
    pts = [complex(p) for p in points]
    return [Line(a, b) for a, b in zip(pts[:-1], pts[1:]) if a != b]


class _SegmentBatch:
    """Vectorized points and velocities of a list of lines and arcs."""

    def __init__(self, segments):
        self.line = np.array([isinstance(seg, Line) for seg in segments])
        self.a = np.array([seg.a if isinstance(seg, Line) else seg.center for seg in segments],
                          dtype=complex)
        self.b = np.array([seg.b if isinstance(seg, Line) else 0.0 for seg in segments], dtype=complex)
        self.r = np.array([0.0 if isinstance(seg, Line) else seg.radius for seg in segments])
        self.p0 = np.array([0.0 if isinstance(seg, Line) else seg.phi0 for seg in segments])
        self.p1 = np.array([0.0 if isinstance(seg, Line) else seg.phi1 for seg in segments])

    def __call__(self, s):
        d = self.b - self.a
        phi = self.p0 + s * (self.p1 - self.p0)
        e = self.r * np.exp(1j * phi)
        x = np.where(self.line, self.a + s * d, self.a + e)
        v = np.where(self.line, d, 1j * (self.p1 - self.p0) * e)
        return x, v


@dataclass
class Transport:
    """Result of a batched continuation.

    ``Y`` has shape ``(B, 2, 2)`` and ``Q`` shape ``(B, 3)``: the integrals
    of ``(G^2, G H, H^2)`` along each segment, where ``(G, H)`` is the first
    row of the frame.  ``solution`` is the dense interpolant when requested.
    """

    Y: np.ndarray
    Q: np.ndarray = None
    solution: object = None
    batch: int = 0

    def at(self, s):
        """Frames and integrals at segment parameters ``s`` (dense output only)."""
        s = np.atleast_1d(s)
        y = self.solution(s).T
        B = self.batch
        Y = y[:, : 4 * B].reshape(-1, B, 2, 2)
        Q = y[:, 4 * B:].reshape(-1, B, 3) if y.shape[1] > 4 * B else None
        return Y, Q


def transport(sys, segments, frames, rtol=TOL_ODE, atol=None, integrals=False, dense=False):
    """Propagate a batch of fundamental matrices, each along its own segment.

    ``segments`` is a list of ``Line``/``Arc`` objects parameterized over
    ``[0, 1]``, ``frames`` an array of shape ``(B, 2, 2)``.  All members of
    the batch are integrated as one ODE system, which amortizes the
    interpreter overhead of the adaptive integrator.  With ``integrals`` the
    quadratic integrals of the first row are carried along.
    """
    frames = np.asarray(frames, dtype=complex)
    B = len(segments)
    if B == 0:
        return Transport(Y=frames.copy(), Q=np.zeros((0, 3), dtype=complex), batch=0)
    if atol is None:
        atol = rtol * 1e-3 * max(1.0, float(np.abs(frames).max()))

    tvals = np.asarray(sys.t)
    Amat = np.asarray(sys.A)
    geometry = _SegmentBatch(segments)

    def rhs(s, y):
        Y = y[: 4 * B].reshape(B, 2, 2)
        x, v = geometry(s)
        w = v[:, None] / (x[:, None] - tvals[None, :])
        Ax = np.einsum("bk,kij->bij", w, Amat)
        dY = np.matmul(Ax, Y).ravel()
        if not integrals:
            return dY
        G, H = Y[:, 0, 0], Y[:, 0, 1]
        dQ = (v[:, None] * np.stack([G * G, G * H, H * H], axis=1)).ravel()
        return np.concatenate([dY, dQ])

    y0 = frames.ravel()
    if integrals:
        y0 = np.concatenate([y0, np.zeros(3 * B, dtype=complex)])
    sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=rtol, atol=atol,
                    dense_output=dense)
    if not sol.success:
        worst = min(range(B), key=lambda k: min(
            sys.singular_distance(segments[k].point(s)) for s in np.linspace(0, 1, 33)))
        raise NearSingularityError(f"continuation failed: {sol.message}", segment=segments[worst])
    yend = sol.y[:, -1]
    Q = yend[4 * B:].reshape(B, 3) if integrals else None
    return Transport(Y=yend[: 4 * B].reshape(B, 2, 2), Q=Q, solution=sol.sol, batch=B)


def transport_batch(sys, segments, frames, rtol=TOL_ODE, atol=None):
    """End frames of ``transport`` without integrals."""
    return transport(sys, segments, frames, rtol=rtol, atol=atol).Y


def continue_frame(sys, path, frame0, rtol=TOL_ODE, min_distance=1e-6):
    """Continue the fundamental matrix ``frame0`` of ``sys`` along ``path``.

    ``path`` is a list of waypoints (complex numbers) joined by straight
    segments, or a list of ``Line``/``Arc`` segments.
    """
    if len(path) and not isinstance(path[0], (Line, Arc)):
        path = polyline(path)
    Y = np.asarray(frame0, dtype=complex).reshape(1, 2, 2)
    for seg in path:
        d = min(sys.singular_distance(seg.point(s)) for s in np.linspace(0, 1, 65))
        if d < min_distance:
            raise NearSingularityError("path passes through a singular point", segment=seg)
        Y = transport_batch(sys, [seg], Y, rtol=rtol)
    return Y[0]


# ---------------------------------------------------------------------------
# loops


@dataclass(frozen=True)
class LoopPath:
    """Loop based at ``base`` around ``center`` (``None`` for the point at infinity).

    Finite loops descend to ``center + i radius``, turn once counterclockwise
    and return; the loop at infinity climbs to ``i radius`` and turns once
    clockwise around the origin.
    """

    base: complex
    index: int
    center: complex
    radius: float

    def approach(self):
        if self.center is None:
            return Line(self.base, 1j * self.radius)
        return Line(self.base, self.center + 1j * self.radius)

    def circle(self):
        if self.center is None:
            return Arc(0.0, self.radius, np.pi / 2, np.pi / 2 - 2 * np.pi)
        return Arc(self.center, self.radius, np.pi / 2, np.pi / 2 + 2 * np.pi)

    def segments(self):
        P = self.approach()
        return [P, self.circle(), P.reversed()]

    def waypoints(self, k=16):
        out = [self.base]
        for seg in self.segments():
            out.extend(seg.point(s) for s in np.linspace(0, 1, k)[1:])
        return np.array(out)


def standard_loops(sys, base=BASE_POINT, fraction=LOOP_FRACTION, include_infinity=True):
    """Loops ``gamma_1 .. gamma_{n+3}`` with radii ``fraction`` times the local gap."""
    loops = []
    for i in range(sys.t.size):
        rho = fraction * sys.gap(i)
        loops.append(LoopPath(base, i, complex(sys.t[i]), rho))
    if include_infinity:
        R = 2.0 * max(1.0, float(np.abs(sys.t).max()), abs(base))
        loops.append(LoopPath(base, sys.t.size, None, R))
    return loops


def infinity_frame(sys, x0=BASE_POINT, rtol=TOL_ODE):
    """``Y_inf(x0)`` from the series at ``i R`` continued down the imaginary axis."""
    R = 4.0 * max(1.0, float(np.abs(sys.t).max()), abs(x0))
    start = 1j * R
    Y, _ = InfinitySeries(sys).evaluate(start)
    return continue_frame(sys, [start, x0], Y, rtol=rtol)


def loop_transports(sys, loops, rtol=TOL_ODE):
    """Monodromy operators ``P^-1 C P`` of each loop acting on values at the base point."""
    if not loops:
        return np.zeros((0, 2, 2), dtype=complex)
    I = np.broadcast_to(np.eye(2, dtype=complex), (len(loops), 2, 2))
    P = transport_batch(sys, [lp.approach() for lp in loops], I, rtol=rtol)
    C = transport_batch(sys, [lp.circle() for lp in loops], I, rtol=rtol)
    return np.linalg.solve(P, C @ P)


@dataclass
class MonodromyResult:
    N: np.ndarray
    direct_inf: np.ndarray = None
    product_residual: float = None
    frame: np.ndarray = None

    def as_dict(self):
        from .io import complex_to_json
        return {"N": complex_to_json(self.N), "product_residual": self.product_residual}


def monodromy_of(sys, loops=None, frame=None, base=BASE_POINT, rtol=TOL_ODE):
    """Monodromy matrices ``N_1 .. N_{n+3}`` of the fundamental matrix ``frame``.

    ``frame`` is the value at the base point; by default ``Y_inf(base)``.
    When ``loops`` contains the loop at infinity its direct continuation is
    returned as ``direct_inf`` and compared with ``(N_{n+2} ... N_1)^-1``.
    """
    if loops is None:
        loops = standard_loops(sys, base)
    if frame is None:
        frame = infinity_frame(sys, loops[0].base if loops else base, rtol=rtol)
    finite = [lp for lp in loops if lp.center is not None]
    inf = [lp for lp in loops if lp.center is None]
    T = loop_transports(sys, finite + inf, rtol=rtol)
    Yinv = np.linalg.inv(frame)
    Nall = Yinv @ T @ frame
    Nf = Nall[: len(finite)]
    result = MonodromyResult(N=Nf, frame=frame)
    if len(finite) == sys.t.size:
        prod = np.eye(2, dtype=complex)
        for Nk in Nf:
            prod = Nk @ prod
        N_inf = np.linalg.inv(prod)
        result.N = np.concatenate([Nf, N_inf[None]], axis=0)
        if inf:
            result.direct_inf = Nall[-1]
            result.product_residual = float(np.abs(Nall[-1] @ prod - np.eye(2)).max())
    return result


def series_monodromy(sys, base=BASE_POINT, frame=None, rtol=TOL_ODE):
    """Monodromy around the finite points through local Frobenius series.

    An independent route to ``monodromy_of``: the frame is transported only
    to a point ``x_c`` above each ``t_i``, where it is expressed in the local
    basis ``Phi_i``; the loop then acts as ``exp(2 pi i Lambda_i)``.
    """
    if frame is None:
        frame = np.eye(2, dtype=complex)
    m = sys.t.size
    locals_ = [LocalSeries(sys, i) for i in range(m)]
    xc = [sys.t[i] + 0.5j * locals_[i].radius for i in range(m)]
    I = np.broadcast_to(np.asarray(frame, dtype=complex), (m, 2, 2))
    Y = transport_batch(sys, [Line(base, x) for x in xc], I, rtol=rtol)
    N = np.empty((m, 2, 2), dtype=complex)
    for i, loc in enumerate(locals_):
        Phi, _ = loc.evaluate(xc[i])
        K = np.linalg.solve(Phi, Y[i])
        E = np.diag(np.exp(2j * np.pi * loc.exponents))
        N[i] = np.linalg.solve(K, E @ K)
    return N


# ---------------------------------------------------------------------------
# target


@dataclass
class MonodromyTarget:
    """Half-turn lifts ``D_i`` and monodromy matrices ``M_i = D_i D_{i-1}^-1``."""

    D: np.ndarray
    M: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    signs: np.ndarray
    u: np.ndarray = None

    @property
    def product_residual(self):
        prod = np.eye(2, dtype=complex)
        for Mk in self.M:
            prod = Mk @ prod
        return float(np.abs(prod - np.eye(2)).max())


def rotation_lift(v, theta):
    """``cos(pi theta) I + sin(pi theta) K(v)``, the lift of the rotation by ``2 pi theta`` about ``v``."""
    return lz.spin_lift(v, 2 * np.pi * theta)


def target_monodromy(D, tol=1e-10):
    """Target monodromy of the polygon directions ``D``.

    Each ``D_i`` is a lift of the half-turn about ``u_i``.  Starting from the
    canonical lifts the signs are fixed one vertex at a time so that
    ``tr M_i = 2 cos(pi theta_i)``, which is the orientation-induced choice
    ``D_i = S_i J S_i^-1`` with ``S_i`` carrying ``u_i`` to ``+e1`` (up to a
    global sign).  Then ``M_i`` is the rotation by ``-2 pi theta_i`` about
    ``v_i``.
    """
    D = _as_directions(D)
    ang = exterior_angles(D)
    m = len(D)
    lifts = np.array([lz.half_turn_lift(u) for u in D.u])
    expected = np.array([rotation_lift(ang.v[i], -ang.theta[i]) for i in range(m)])
    signs = np.ones(m, dtype=int)
    for i in range(1, m):
        Mi = -lifts[i] @ lifts[i - 1] * signs[i - 1]
        signs[i] = 1 if np.abs(Mi - expected[i]).max() <= np.abs(Mi + expected[i]).max() else -1
    Ds = lifts * signs[:, None, None]
    M = np.array([-Ds[i] @ Ds[i - 1] for i in range(m)])
    worst = float(np.abs(M - expected).max())
    if worst > 1e-8:
        raise DomainError("inconsistent direction tuple: the half-turn lifts cannot be "
                          f"matched around the polygon (residual {worst:.2e})")
    # D and -D give the same M; keep the oriented lift -iK(u_1) for u_1
    ref = -1j * lz.spin_generator(D.u[0])
    if np.abs(Ds[0] - ref).max() > np.abs(Ds[0] + ref).max():
        Ds = -Ds
        signs = -signs
    return MonodromyTarget(D=Ds, M=M, theta=ang.theta, v=ang.v, signs=signs, u=D.u)


# ---------------------------------------------------------------------------
# Riemann-Hilbert


def default_times(n):
    """Equally spaced free points ``-n, .., -1``."""
    return -np.arange(n, 0, -1, dtype=float)


def _check_times(t0, n):
    t0 = np.atleast_1d(np.asarray(t0, dtype=float)) if n else np.zeros(0)
    if t0.shape != (n,):
        raise DomainError(f"expected {n} free singular points, got {t0.size}")
    if n and (np.any(np.diff(t0) <= 0) or t0[-1] >= 0 or not np.all(np.isfinite(t0))):
        raise DomainError("free singular points must satisfy t_1 < ... < t_n < 0")
    return t0


def _closed_form_residues(theta):
    """Real residues at ``0, 1`` for three singular points (hypergeometric case)."""
    ell = 1.0 - theta[2] / 2.0
    a1 = 0.5 * (-ell - (theta[0] ** 2 - theta[1] ** 2) / (4.0 * ell))
    a2 = -ell - a1
    bc = theta[0] ** 2 / 4.0 - a1 ** 2
    if abs(bc) < 1e-14:
        from .errors import ReducibleSystemError
        raise ReducibleSystemError("the monodromy group is reducible (b c = 0)")
    b = np.sqrt(abs(bc))
    c = bc / b
    return np.array([[[a1, b], [c, -a1]], [[a2, -b], [-c, -a2]]], dtype=complex)


class _TraceProblem:
    """Least-squares residuals matching trace invariants of the monodromy.

    Each residue ``A_i`` (``i <= n + 1``) lives on the real hyperboloid
    ``a^2 + b c = theta_i^2 / 4`` parameterized by ``(phi, d)``; the last one
    is fixed by the normalization at infinity.  The unknowns are matched
    through ``tr(N_i N_j)`` and ``tr(N_i N_j N_k)``, the determinant of the
    last residue and a gauge condition fixing the diagonal scaling.
    """

    def __init__(self, t, theta, M, rtol):
        self.t = np.concatenate([t, [0.0, 1.0]])
        self.theta = theta
        self.m = self.t.size
        self.n = self.m - 2
        self.rtol = rtol
        m = self.m
        self.pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
        self.triples = [(i, j, k) for i in range(m) for j in range(i + 1, m) for k in range(j + 1, m)]
        self.target = self.invariants(M[:m])
        self.L = (1.0 - theta[-1] / 2.0) * np.diag([1.0, -1.0])
        self.nfev = 0

    def invariants(self, N):
        v = [np.trace(N[i] @ N[j]) for i, j in self.pairs]
        v += [np.trace(N[i] @ N[j] @ N[k]) for i, j, k in self.triples]
        return np.array(v)

    def residues(self, p):
        n, th = self.n, self.theta
        A = np.zeros((n + 2, 2, 2))
        for i in range(n + 1):
            phi, d = p[2 * i], p[2 * i + 1]
            r = np.sqrt(th[i] ** 2 / 4 + d * d)
            a, s = r * np.cos(phi), r * np.sin(phi)
            A[i] = [[a, s + d], [s - d, -a]]
        A[n + 1] = -self.L - A[: n + 1].sum(axis=0)
        return A.astype(complex)

    def system(self, p):
        return FuchsianSystem(self.t, self.residues(p), self.theta)

    def __call__(self, p, rtol=None):
        self.nfev += 1
        A = self.residues(p)
        s = FuchsianSystem(self.t, A, self.theta)
        try:
            N = series_monodromy(s, rtol=self.rtol if rtol is None else rtol)
        except (PathError, DomainError):
            return np.full(2 * len(self.target) + 2, 1e3)
        d = self.invariants(N) - self.target
        det = np.linalg.det(A[-1]).real + self.theta[self.n + 1] ** 2 / 4
        b, c = A[:, 0, 1].real, A[:, 1, 0].real
        gauge = 0.1 * np.log(np.sum(b * b) / max(np.sum(c * c), 1e-300))
        return np.concatenate([d.real, d.imag, [det, gauge]])


def conjugator(N, M):
    """Null vector of ``X -> N_k X - X M_k`` for all ``k``, as a 2x2 matrix.

    Returns ``(C, ratio)`` where ``ratio`` is the smallest singular value of
    the stacked linear map relative to the largest.
    """
    I = np.eye(2)
    rows = [np.kron(Nk, I) - np.kron(I, Mk.T) for Nk, Mk in zip(N, M)]
    _, sv, Vh = np.linalg.svd(np.vstack(rows))
    C = Vh[-1].conj().reshape(2, 2)
    return C, float(sv[-1] / sv[0])


@dataclass
class GaugeData:
    """Normalization of the fundamental solution ``Y_0 = Y_inf C0``.

    ``S[i]`` carries ``u_{i+1}`` to ``e1`` and makes ``(G, H) S[i]`` real on
    edge ``i + 1``; ``D[i] = S[i] J S[i]^-1``.  ``phase`` and
    ``orientation`` record the constant factor folded into ``C0``
    (``exp(-i phase)``, times ``i`` when the orientation was reversed).
    """

    C0: np.ndarray
    S: np.ndarray
    D: np.ndarray
    phase: float
    orientation: int
    edge_residual: np.ndarray
    conjugation_residual: float = None
    base: complex = BASE_POINT
    lam: float = 1.0

    def as_dict(self):
        from .io import complex_to_json
        return {
            "C0": complex_to_json(self.C0),
            "S": complex_to_json(self.S),
            "phase": self.phase,
            "orientation": self.orientation,
            "lam": self.lam,
            "edge_residual": self.edge_residual.tolist(),
            "conjugation_residual": self.conjugation_residual,
        }


def edge_points(sys):
    """One interior point per edge: edge ``k`` (0-based) runs from ``t_k`` to ``t_{k+1}``."""
    t = sys.t.real
    pts = [0.5 * (t[k] + t[k + 1]) for k in range(t.size - 1)]
    pts.append(t[-1] + 1.0)
    pts.append(t[0] - 1.0)
    return np.array(pts, dtype=complex)


def quadratic_weights(S):
    """Coefficients ``w`` with ``g^2 - h^2 = w . (G^2, G H, H^2)`` for ``(g, h) = (G, H) S``."""
    S = np.asarray(S, dtype=complex)
    return np.array([S[0, 0] ** 2 - S[0, 1] ** 2,
                     2 * (S[0, 0] * S[1, 0] - S[0, 1] * S[1, 1]),
                     S[1, 0] ** 2 - S[1, 1] ** 2])


def finite_edge_integrals(sys, frame, k, base=BASE_POINT, rtol=TOL_ODE, split=0.5):
    """``int (G^2, G H, H^2)`` over the finite edge ``(t_k, t_{k+1})``.

    ``frame`` is the fundamental matrix at ``base``.  The pieces next to the
    endpoints are integrated termwise from the local series, the middle
    piece with the ODE along the real axis.
    """
    t = sys.t
    left, right = LocalSeries(sys, k), LocalSeries(sys, k + 1)
    xa = complex(t[k].real + split * left.radius, 0.0)
    xb = complex(t[k + 1].real - split * right.radius, 0.0)
    if xb.real < xa.real:
        xa = xb = complex(0.5 * (t[k] + t[k + 1]).real, 0.0)
    Y = transport(sys, [Line(base, xa), Line(base, xb)], np.stack([frame, frame]), rtol=rtol).Y
    Ka = np.linalg.solve(left.evaluate(xa)[0], Y[0])
    Kb = np.linalg.solve(right.evaluate(xb)[0], Y[1])
    Q = left.quadratic_integrals(xa, Ka) - right.quadratic_integrals(xb, Kb)
    if xb != xa:
        Q = Q + transport(sys, [Line(xa, xb)], Y[:1], rtol=rtol, integrals=True).Q[0]
    return Q


def edge_reality_frames(sys, C0, target, base=BASE_POINT, rtol=TOL_ODE, tol=1e-8):
    """Fix the constant phase of ``C0`` and the edge frames ``S_i``.

    The phase is read off edge ``n + 1 = (0, 1)`` and must make ``(G, H) S_i``
    real on every edge.  If the image of edge ``n + 1`` then points along
    ``-u_{n+1}`` the solution is multiplied by ``i`` and every ``S_i`` by
    ``diag(i, -i)``, which flips all half-turn lifts.

    Raises
    ------
    GaugeError
        If some edge stays non-real beyond ``tol``.
    """
    n = sys.n
    m = n + 3
    S = np.array([lz.align_spacelike(target.u[i]) for i in range(m)])
    frame = infinity_frame(sys, base, rtol=rtol) @ C0
    pts = edge_points(sys)
    Y = transport(sys, [Line(base, x) for x in pts], np.broadcast_to(frame, (m, 2, 2)), rtol=rtol).Y
    w = Y[n][0] @ S[n]
    phase = 0.5 * float(np.angle(np.sum(w * w)))
    C0 = C0 * np.exp(-1j * phase)
    frame = frame * np.exp(-1j * phase)
    Y = Y * np.exp(-1j * phase)
    resid = np.empty(m)
    for k in range(m):
        g = Y[k][0] @ S[k]
        resid[k] = float(np.abs(g.imag).max() / max(np.abs(g).max(), 1e-300))
    Q = finite_edge_integrals(sys, frame, n, base=base, rtol=rtol)
    integral = complex(quadratic_weights(S[n]) @ Q)
    orientation = 1
    if integral.real > 0:
        orientation = -1
        C0 = 1j * C0
        S = S @ np.diag([1j, -1j])
    D = np.array([Sk @ lz.J @ np.linalg.inv(Sk) for Sk in S])
    if resid.max() > tol:
        raise GaugeError(f"edge frames are not real (worst residual {resid.max():.2e} "
                         f"on edge {int(np.argmax(resid)) + 1})")
    return GaugeData(C0=C0, S=S, D=D, phase=phase, orientation=orientation, edge_residual=resid,
                     base=base)


@dataclass
class RiemannHilbertSolution:
    system: FuchsianSystem
    target: MonodromyTarget
    gauge: GaugeData
    report: dict

    @property
    def C0(self):
        return self.gauge.C0


def solve_riemann_hilbert(D, t0=None, seed=0, restarts=32, tol=1e-9, rtol=TOL_ODE,
                          check_generic=True, max_nfev=120):
    """Real Fuchsian system with the target monodromy of the directions ``D``.

    Parameters
    ----------
    D : DirectionTuple or array_like, shape (n + 3, 3)
    t0 : array_like, shape (n,), optional
        Free singular points ``t_1 < ... < t_n < 0``; default ``-n .. -1``.
    seed : int
        Seed of the random restarts (``n >= 1``).
    restarts : int
        Maximum number of least-squares starts.
    tol : float
        Required residual of the trace invariants.

    Returns
    -------
    RiemannHilbertSolution
        The system, the target monodromy, the gauge normalization ``C0``,
        ``S_i`` and a report with residuals and solver statistics.

    Notes
    -----
    For ``n = 0`` the residues are in closed form.  Otherwise the real
    residues are found by nonlinear least squares on trace invariants of the
    monodromy computed through local series; the conjugator ``C0`` is then
    the null vector of ``N_k C - C M_k`` with ``N_k`` from direct loop
    continuation.
    """
    from scipy.optimize import least_squares

    D = _as_directions(D)
    n = D.n
    if check_generic:
        rep = validate_direction_tuple(D)
        if not rep.generic:
            raise DomainError("direction tuple is not generic: " + "; ".join(rep.failures()))
    t0 = _check_times(default_times(n) if t0 is None else t0, n)
    target = target_monodromy(D)
    theta = target.theta
    report = {"n": n, "t": t0.tolist(), "restarts": 0, "nfev": 0}

    if n == 0:
        sys = FuchsianSystem([0.0, 1.0], _closed_form_residues(theta), theta)
        report["trace_residual"] = 0.0
    else:
        problem = _TraceProblem(t0, theta, target.M, rtol=1e-9)
        rng = np.random.default_rng(seed)
        best = None
        for trial in range(restarts):
            p0 = np.empty(2 * (n + 1))
            p0[0::2] = rng.uniform(0, 2 * np.pi, n + 1)
            p0[1::2] = rng.normal(size=n + 1) * theta[: n + 1] / 2
            r = least_squares(problem, p0, method="trf", xtol=1e-14, ftol=1e-14, gtol=1e-14,
                              max_nfev=max_nfev)
            report["restarts"] = trial + 1
            if best is None or r.cost < best.cost:
                best = r
            if np.sqrt(2 * r.cost) < 1e-6:
                break
        problem.rtol = 1e-12
        polished = least_squares(problem, best.x, method="trf", xtol=1e-15, ftol=1e-15,
                                 gtol=1e-15, max_nfev=30)
        report["nfev"] = problem.nfev
        resid = float(np.abs(problem(polished.x)).max())
        report["trace_residual"] = resid
        if resid > tol:
            raise RiemannHilbertError(
                f"no real system with the target monodromy found (best residual {resid:.2e})",
                best_residual=resid, report=report)
        sys = problem.system(polished.x)

    cond = check_conditions(sys, D)
    report["conditions"] = cond.as_dict()
    if not cond.passes(1e-8):
        raise RiemannHilbertError("solution violates the residue conditions",
                                  best_residual=cond.residual_a, report=report)
    mono = monodromy_of(sys, rtol=rtol)
    C0, ratio = conjugator(mono.N, target.M)
    report["null_ratio"] = ratio
    report["product_residual"] = mono.product_residual
    if ratio > 1e-8:
        raise RiemannHilbertError(f"monodromy is not conjugate to the target (ratio {ratio:.2e})",
                                  best_residual=ratio, report=report)
    C0 = C0 / np.sqrt(np.linalg.det(C0))
    gauge = edge_reality_frames(sys, C0, target, rtol=rtol)
    C = gauge.C0
    scale = max(1.0, float(np.abs(C).max() * np.abs(np.linalg.inv(C)).max()))
    gauge.conjugation_residual = float(max(np.abs(Nk @ C - C @ Mk).max()
                                           for Nk, Mk in zip(mono.N, target.M)) / scale)
    report["edge_residual"] = float(gauge.edge_residual.max())
    report["conjugation_residual"] = gauge.conjugation_residual
    return RiemannHilbertSolution(system=sys, target=target, gauge=gauge, report=report)
