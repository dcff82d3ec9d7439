"""Edge functions, edge lengths, the length-ratio map and the Plateau solver.

On a finite edge ``(t_k, t_{k+1})`` the row ``(g, h) = (G, H) S_k`` is real
and the image of the edge moves along ``u_k`` with speed ``-f_k``, where
``f_k = g^2 - h^2``.  The Lorentz length of the image edge is the integral
of ``|f_k|``; it equals the distance of the vertex images only when ``f_k``
has no zero on the edge.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import tanhsinh
from scipy.optimize import brentq

from .errors import DomainError, GaugeError, NonSimpleZeroError, PlateauError, WallError
from .monodromy import Line, quadratic_weights, transport
from .schlesinger import WALL, DeformationPath, deform, wall_distance
from .weierstrass import LOCAL_FRACTION, WeierstrassFrame

ZERO_GRID = 64
ZERO_XTOL = 1e-12
SIMPLE_ZERO_TOL = 1e-10
IMAG_TOL = 1e-8
QUAD_RTOL = 1e-12


class EdgeEvaluator:
    """Fast evaluation of ``(g, h)`` on one finite edge.

    The parts within ``LOCAL_FRACTION`` of the convergence radius around the
    endpoints use the local series of the frame (in offset coordinates, so
    points extremely close to a vertex keep their accuracy); the middle part
    uses the dense output of one continuation along the real axis.
    """

    def __init__(self, frame, k):
        sys = frame.sys
        if not 0 <= k <= sys.n:
            raise DomainError(f"edge {k + 1} is not a finite edge")
        if frame.S is None:
            raise GaugeError("the frame carries no edge-reality frames")
        self.frame = frame
        self.k = k
        self.S = frame.S[k]
        self.weights = quadratic_weights(self.S)
        self.lo = float(sys.t[k].real)
        self.hi = float(sys.t[k + 1].real)
        self.length = self.hi - self.lo
        self.left, self.right = frame.local[k], frame.local[k + 1]
        self.rl = LOCAL_FRACTION * self.left.radius
        self.rr = LOCAL_FRACTION * self.right.radius
        self.xa = self.lo + self.rl
        self.xb = self.hi - self.rr
        self._dense = None
        if self.xb > self.xa:
            Y0 = frame.frames([complex(self.xa, 0.0)])[0]
            self._dense = transport(sys, [Line(complex(self.xa), complex(self.xb))], Y0,
                                    rtol=frame.rtol, dense=True)

    def _rows_middle(self, x):
        s = (np.asarray(x) - self.xa) / (self.xb - self.xa)
        Y, _ = self._dense.at(s)
        return Y[:, 0, 0, :]

    def _series(self, z, side):
        loc, K = ((self.left, self.frame.K[self.k]) if side == "left" else
                  (self.right, self.frame.K[self.k + 1]))
        sign = 1.0 if side == "left" else -1.0
        return np.array([(loc.evaluate_offset(sign * zj)[0] @ K)[0] for zj in z]).reshape(-1, 2)

    def rows_offset(self, z, side):
        """First rows ``(G, H)`` at ``t_k + z`` (``side='left'``) or ``t_{k+1} - z``."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.empty((z.size, 2), dtype=complex)
        r, other, r_other = (self.rl, "right", self.rr) if side == "left" else (self.rr, "left", self.rl)
        w = self.length - z  # offset from the other vertex
        if self._dense is None:
            near = z <= w
            far = ~near
        else:
            near = z < r
            far = (w < r_other) & ~near
        mid = ~(near | far)
        if np.any(near):
            out[near] = self._series(z[near], side)
        if np.any(far):
            out[far] = self._series(w[far], other)
        if np.any(mid):
            x = (self.lo + z[mid]) if side == "left" else (self.hi - z[mid])
            out[mid] = self._rows_middle(np.clip(x, self.xa, self.xb))
        return out

    def rows(self, x):
        """First rows ``(G, H)`` at real points of the edge."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.rows_offset(x - self.lo, "left")

    def gh(self, rows):
        return rows @ self.S

    def f_from_rows(self, rows):
        gh = self.gh(rows)
        return gh[:, 0] ** 2 - gh[:, 1] ** 2

    def f(self, x):
        return self.f_from_rows(self.rows(x)).real

    def f_offset(self, z, side):
        return self.f_from_rows(self.rows_offset(z, side)).real

    def imag_residual(self, x):
        gh = self.gh(self.rows(x))
        return float(np.abs(gh.imag).max() / np.abs(gh).max())

    def f_exact(self, x):
        """``(f, f')`` from a direct continuation (no interpolation)."""
        G, H, dG, dH = self.frame.data([complex(x, 0.0)])
        g, h = np.array([G[0], H[0]]) @ self.S
        dg, dh = np.array([dG[0], dH[0]]) @ self.S
        return float((g * g - h * h).real), float((2 * (g * dg - h * dh)).real)


def edge_function(frame, k, x, tol=IMAG_TOL):
    """``f_k(x) = g_k^2 - h_k^2`` at real points of the finite edge ``k`` (0-based).

    Raises ``GaugeError`` if ``(g, h)`` is not real within ``tol``.
    """
    ev = frame if hasattr(frame, "f_exact") else EdgeEvaluator(frame, k)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    gh = ev.gh(ev.rows(x))
    imag = float(np.abs(gh.imag).max() / max(np.abs(gh).max(), 1e-300))
    if imag > tol:
        raise GaugeError(f"edge data not real on edge {k + 1} (residual {imag:.2e})")
    f = (gh[:, 0] ** 2 - gh[:, 1] ** 2).real
    return f


@dataclass
class EdgeSignature:
    """Zeros and signs of ``f_k`` on a finite edge, with the segment integrals."""

    edge: int
    zeros: np.ndarray
    signs: np.ndarray
    derivatives: np.ndarray
    grid: int
    segment_integrals: np.ndarray = None
    length: float = None
    length_quadrature: float = None
    quadrature_error: float = None
    imag_residual: float = None
    extra: dict = field(default_factory=dict)

    @property
    def m(self):
        return int(self.zeros.size)

    @property
    def route_difference(self):
        if self.length is None or self.length_quadrature is None:
            return None
        return abs(self.length - self.length_quadrature) / self.length

    def as_dict(self):
        return {
            "edge": self.edge + 1,
            "zeros": self.zeros.tolist(),
            "signs": self.signs.tolist(),
            "derivatives": self.derivatives.tolist(),
            "grid": self.grid,
            "segment_integrals": None if self.segment_integrals is None else
            self.segment_integrals.tolist(),
            "length": self.length,
            "length_quadrature": self.length_quadrature,
            "route_difference": self.route_difference,
            "imag_residual": self.imag_residual,
        }


def _grid(lo, hi, count):
    s = 0.5 - 0.5 * np.cos(np.pi * (np.arange(count) + 0.5) / count)
    return lo + (hi - lo) * s


def _sup(a):
    """Max norm, zero for an empty vector (no free singular points)."""
    return float(np.max(np.abs(a), initial=0.0))


def _sign_pattern(values):
    sg = np.sign(values)
    keep = sg != 0
    return sg[keep]


def edge_zeros(frame, k, grid=ZERO_GRID, max_doublings=6, xtol=ZERO_XTOL,
               simple_tol=SIMPLE_ZERO_TOL):
    """Simple zeros of ``f_k`` on the finite edge ``k`` and the signs in between.

    Sign changes are bracketed on Chebyshev grids of ``grid``, ``2 grid``, ...
    points until the number of changes is the same for two consecutive
    doublings, then refined by Brent's method on the interpolated edge data
    and polished by Newton steps on directly continued data.

    Raises
    ------
    NonSimpleZeroError
        If ``|f_k'|`` at a zero is below ``simple_tol`` relative to
        ``max |f_k| / edge length``.
    """
    ev = frame if hasattr(frame, "f_exact") else EdgeEvaluator(frame, k)
    counts = []
    N = grid
    for _ in range(max_doublings + 1):
        x = _grid(ev.lo, ev.hi, N)
        fx = ev.f(x)
        counts.append(int(np.sum(np.diff(_sign_pattern(fx)) != 0)))
        if len(counts) >= 3 and counts[-1] == counts[-2] == counts[-3]:
            break
        N *= 2
    scale = _sup(fx) / ev.length
    nz = np.flatnonzero(fx == 0)
    brackets = [(x[j - 1], x[j + 1]) for j in nz if 0 < j < N - 1]
    sg = np.sign(fx)
    for j in range(N - 1):
        if sg[j] * sg[j + 1] < 0:
            brackets.append((x[j], x[j + 1]))
    brackets.sort()
    zeros, ders = [], []
    for a, b in brackets:
        z = brentq(lambda s: float(ev.f([s])[0]), a, b, xtol=xtol * max(1.0, ev.length),
                   rtol=4 * np.finfo(float).eps)
        for _ in range(3):
            fz, dfz = ev.f_exact(z)
            if dfz == 0:
                break
            step = fz / dfz
            if not a <= z - step <= b:
                break
            z -= step
            if abs(step) < xtol:
                break
        fz, dfz = ev.f_exact(z)
        if abs(dfz) < simple_tol * scale:
            raise NonSimpleZeroError(f"zero of f_{k + 1} at {z} is not simple (f' = {dfz:.2e})")
        zeros.append(z)
        ders.append(dfz)
    zeros = np.array(zeros)
    knots = np.concatenate([[ev.lo], zeros, [ev.hi]])
    mids = 0.5 * (knots[:-1] + knots[1:])
    signs = np.sign(ev.f(mids)).astype(int)
    # near the endpoints the sign is that of the dominant z^-theta term
    if signs.size > 1 and np.any(signs[:-1] * signs[1:] != -1):
        raise NonSimpleZeroError(f"signs on edge {k + 1} do not alternate: {signs.tolist()}")
    return EdgeSignature(edge=k, zeros=zeros, signs=signs, derivatives=np.array(ders), grid=N,
                         extra={"counts": counts})


def _quad_abs(ev, side, z0, z1, rtol):
    if z1 <= z0:
        return 0.0, 0.0
    res = tanhsinh(lambda z: np.abs(ev.f_offset(z.ravel(), side)).reshape(z.shape), z0, z1,
                   rtol=rtol, atol=0.0, maxlevel=12)
    return float(res.integral), float(res.error)


def edge_length(frame, k, signature=None, quadrature=True, rtol=QUAD_RTOL):
    """Lorentz length ``int |f_k|`` of the image of the finite edge ``k``.

    Two routes are computed: the telescoped sum ``sum_j eps_j int f_k`` of
    the primitive ``Re w . int (G^2, G H, H^2)`` between consecutive zeros
    (stored as ``length``) and double-exponential quadrature of ``|f_k|``
    over the same pieces, split at the edge midpoint and written in offset
    coordinates from the nearer vertex (``length_quadrature``).
    """
    ev = frame if hasattr(frame, "f_exact") else EdgeEvaluator(frame, k)
    frame = ev.frame
    sig = edge_zeros(ev, k) if signature is None else signature
    Qv = frame.vertex_integrals()
    Qz = frame.integrals(sig.zeros + 0j) if sig.m else np.zeros((0, 3), dtype=complex)
    Q = np.concatenate([Qv[k][None], Qz, Qv[k + 1][None]])
    F = (Q @ ev.weights).real
    seg = np.diff(F)
    sig.segment_integrals = seg
    sig.length = float(np.sum(sig.signs * seg))
    if np.any(sig.signs * seg < 0):
        raise NonSimpleZeroError(f"segment integrals on edge {k + 1} contradict the signs")
    if quadrature:
        mid = 0.5 * (ev.lo + ev.hi)
        knots = np.concatenate([[ev.lo], sig.zeros, [ev.hi]])
        total, err = 0.0, 0.0
        for a, b in zip(knots[:-1], knots[1:]):
            pieces = []
            if a < mid:
                pieces.append(("left", a - ev.lo, min(b, mid) - ev.lo))
            if b > mid:
                pieces.append(("right", ev.hi - b, ev.hi - max(a, mid)))
            for side, z0, z1 in pieces:
                val, e = _quad_abs(ev, side, z0, z1, rtol)
                total += val
                err += e
        sig.length_quadrature = total
        sig.quadrature_error = err
    sig.imag_residual = ev.imag_residual(_grid(ev.lo, ev.hi, 16))
    return sig.length_quadrature if quadrature else sig.length


def edge_signatures(frame, quadrature=False):
    """``EdgeSignature`` with lengths for the finite edges ``1 .. n + 1``."""
    out = []
    for k in range(frame.sys.n + 1):
        ev = EdgeEvaluator(frame, k)
        sig = edge_zeros(ev, k)
        edge_length(ev, k, signature=sig, quadrature=quadrature)
        out.append(sig)
    return out


def length_ratios(frame, quadrature=False, signatures=None):
    """``F_D = (l_1 / l_{n+1}, .., l_n / l_{n+1})``."""
    sigs = edge_signatures(frame, quadrature=quadrature) if signatures is None else signatures
    L = np.array([s.length_quadrature if quadrature else s.length for s in sigs])
    return L[:-1] / L[-1]


# ---------------------------------------------------------------------------
# the length-ratio map and the Plateau solver


def times_from_log_gaps(y):
    """``t_n = -e^{y_n}``, ``t_k = t_{k+1} - e^{y_k}``: a chart of the ordered configurations."""
    y = np.asarray(y, dtype=float)
    g = np.exp(y)
    return -np.cumsum(g[::-1])[::-1]


def log_gaps(t):
    t = np.asarray(t, dtype=float)
    gaps = np.diff(np.append(t, 0.0))
    if np.any(gaps <= 0):
        raise DomainError("free points must satisfy t_1 < ... < t_n < 0")
    return np.log(gaps)


class LengthRatioMap:
    """``t -> F_D(t)`` by isomonodromic deformation of a certified system.

    Each evaluation deforms the residues from the closest system evaluated so
    far (straight segment in ``t``), rebuilds the frame with the fixed gauge
    ``C0, S_i`` and integrates the edge functions.
    """

    def __init__(self, solution, wall=WALL):
        self.solution = solution
        self.C0 = solution.gauge.C0 * solution.gauge.lam
        self.S = solution.gauge.S
        self.directions = solution.target.u
        self.wall = wall
        self.cache = [solution.system]
        self.evaluations = 0

    @property
    def n(self):
        return self.solution.system.n

    def system_at(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if self.n and wall_distance(t) < self.wall:
            raise WallError(f"t = {t} is within {self.wall:g} of the wall",
                            closest=wall_distance(t), last_t=t)
        src = min(self.cache, key=lambda s: _sup(s.t_free.real - t))
        if self.n == 0 or np.abs(src.t_free.real - t).max() == 0:
            return src
        sys = deform(src, DeformationPath.segment(src.t_free.real, t, wall=self.wall))
        self.cache.append(sys)
        if len(self.cache) > 16:
            self.cache.pop(1)
        return sys

    def frame_at(self, t):
        return WeierstrassFrame(self.system_at(t), self.C0, S=self.S, directions=self.directions)

    def evaluate(self, t, quadrature=False):
        frame = self.frame_at(t)
        sigs = edge_signatures(frame, quadrature=quadrature)
        self.evaluations += 1
        return length_ratios(frame, quadrature=quadrature, signatures=sigs), sigs

    def __call__(self, t):
        return self.evaluate(t)[0]


@dataclass
class PlateauResult:
    t: np.ndarray
    ratios: np.ndarray
    target: np.ndarray
    residual: float
    iterations: int
    log: list
    frame: WeierstrassFrame = None
    signatures: list = None

    def as_dict(self):
        return {
            "schema": "garnier.plateau/1",
            "t": self.t.tolist(),
            "ratios": self.ratios.tolist(),
            "target": self.target.tolist(),
            "residual": self.residual,
            "iterations": self.iterations,
            "log": self.log,
        }

    def write_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.as_dict(), fh, indent=1, sort_keys=True)

    def write_csv(self, path):
        keys = ["iteration", "stage", "residual", "step", "damping"]
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys + ["t"], extrasaction="ignore")
            w.writeheader()
            for row in self.log:
                w.writerow({**row, "t": " ".join(f"{v:.15g}" for v in row["t"])})


def _newton(F, y0, target_log, tol, max_iter, fd_step, log, stage):
    """Damped Newton on ``log F(t(y)) = target_log`` with a central-difference Jacobian."""
    y = np.array(y0, dtype=float)

    def resid(yy):
        return np.log(F(times_from_log_gaps(yy))) - target_log

    r = resid(y)
    for it in range(max_iter):
        res = _sup(r)
        if res < tol:
            return y, r, True
        n = y.size
        J = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = fd_step
            J[:, j] = (resid(y + e) - resid(y - e)) / (2 * fd_step)
        step = np.linalg.solve(J, -r)
        damping = 1.0
        while True:
            y_new = y + damping * step
            try:
                r_new = resid(y_new)
                ok = _sup(r_new) < (1 - 1e-4 * damping) * res
            except WallError:
                ok = False
            if ok or damping < 1.0 / 64:
                break
            damping /= 2
        if not ok:
            log.append({"iteration": len(log), "stage": stage, "residual": res,
                        "step": _sup(step), "damping": damping,
                        "t": times_from_log_gaps(y).tolist()})
            return y, r, False
        y, r = y_new, r_new
        log.append({"iteration": len(log), "stage": stage, "residual": _sup(r),
                    "step": _sup(damping * step), "damping": damping,
                    "t": times_from_log_gaps(y).tolist()})
    return y, r, _sup(r) < tol


def solve_plateau(D, target, t_init=None, solution=None, tol=1e-6, max_iter=40, seed=0,
                  homotopy_steps=10, fd_step=1e-5, polish=1e-10):
    """Free singular points with prescribed length ratios.

    Parameters
    ----------
    D : DirectionTuple
    target : array_like, shape (n,)
        Positive ratios ``r_i``.
    t_init : array_like, shape (n,), optional
        Starting configuration; defaults to that of ``solution``.
    solution : RiemannHilbertSolution, optional
        Certified system to deform from; solved at ``t_init`` if absent.
    tol : float
        Required ``max |F_D(t) - r|``.

    The iteration runs in log-gap coordinates on ``log F_D - log r``:
    Newton with backtracking first, then a homotopy through
    ``homotopy_steps`` intermediate targets on the segment from
    ``log F_D(t_init)`` to ``log r``.  Newton continues until the log
    residual is below ``polish`` or stalls, so that ``t`` itself converges.
    """
    from .monodromy import solve_riemann_hilbert
    target = np.atleast_1d(np.asarray(target, dtype=float))
    if solution is None:
        solution = solve_riemann_hilbert(D, t0=t_init, seed=seed)
    n = solution.system.n
    if target.shape != (n,) or np.any(target <= 0):
        raise DomainError(f"target must be {n} positive ratios")
    F = LengthRatioMap(solution)
    t0 = solution.system.t_free.real if t_init is None else np.atleast_1d(np.asarray(t_init, float))
    y = log_gaps(t0)
    goal = np.log(target)
    log = []
    inner_tol = max(min(polish, tol), 1e-13)
    y_new, r, ok = _newton(F, y, goal, inner_tol, max_iter, fd_step, log, "newton")
    if not ok and _sup(np.exp(r + goal) - target) >= tol:
        start = np.log(F(times_from_log_gaps(y)))
        y_new = y
        for j in range(1, homotopy_steps + 1):
            sub = start + (goal - start) * j / homotopy_steps
            sub_tol = inner_tol if j == homotopy_steps else 1e-4
            y_new, r, ok_j = _newton(F, y_new, sub, sub_tol, max_iter, fd_step, log, f"homotopy {j}")
            if not ok_j and j < homotopy_steps and _sup(r) > 1e-2:
                break
    t_star = times_from_log_gaps(y_new)
    ratios, sigs = F.evaluate(t_star)
    residual = _sup(ratios - target)
    frame = F.frame_at(t_star)
    result = PlateauResult(t=t_star, ratios=ratios, target=target, residual=residual,
                           iterations=len(log), log=log, frame=frame, signatures=sigs)
    if residual >= tol:
        raise PlateauError(f"Plateau solve did not converge (residual {residual:.2e})",
                           best=result, report=log)
    return result
