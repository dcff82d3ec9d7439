"""Isomonodromic deformation of Fuchsian systems by the Schlesinger equations.

Moving the free singular points ``t_1 .. t_n`` (with ``0`` and ``1`` fixed)
while the residues follow

    dA_i = sum_{j != i} [A_j, A_i] d log(t_i - t_j)

keeps the monodromy of the canonical solution ``Y_inf`` constant.
"""

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import DOP853

from .errors import DomainError, PoleError, WallError
from .fuchsian import FuchsianSystem, check_conditions
from .monodromy import TOL_ODE, infinity_frame, monodromy_of

WALL = 1e-3
POLE_BOUND = 1e6
PROJECT_TOL = 1e-12
DEFORM_RTOL = 1e-12


def wall_distance(t_free):
    """Smallest of ``|t_i - t_j|``, ``|t_i|`` and ``|t_i - 1|`` over the free points."""
    t = np.concatenate([np.asarray(t_free, dtype=complex).reshape(-1), [0.0, 1.0]])
    n = t.size - 2
    if n == 0:
        return np.inf
    d = np.abs(t[:n, None] - t[None, :])
    d[np.arange(n), np.arange(n)] = np.inf
    return float(d.min())


def schlesinger_rhs(t, A, direction):
    """Derivatives of the residues along ``direction`` in ``t``-space.

    Parameters
    ----------
    t : array_like, shape (n + 2,)
        All finite singular points, the last two being 0 and 1.
    A : array_like, shape (n + 2, 2, 2)
    direction : array_like, shape (n,) or (n + 2,)
        Tangent vector; the components of 0 and 1 are taken as zero.
    """
    t = np.asarray(t, dtype=complex)
    A = np.asarray(A, dtype=complex)
    m = t.size
    direction = np.asarray(direction, dtype=complex).reshape(-1)
    dt = np.zeros(m, dtype=complex)
    if direction.size == m:
        dt[: m - 2] = direction[: m - 2]
    elif direction.size == m - 2:
        dt[: m - 2] = direction
    else:
        raise DomainError(f"direction must have {m - 2} or {m} components")
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    if np.any(np.abs(diff) == 0):
        raise DomainError("coincident singular points")
    w = (dt[:, None] - dt[None, :]) / diff
    np.fill_diagonal(w, 0.0)
    # C[i, j] = [A_j, A_i]
    C = np.einsum("jab,ibc->ijac", A, A) - np.einsum("iab,jbc->ijac", A, A)
    return np.einsum("ij,ijac->iac", w, C)


@dataclass
class DeformationPath:
    """Polyline through points of ``t``-space (free coordinates only)."""

    points: np.ndarray
    wall: float = WALL

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 2:
            raise DomainError("a deformation path needs at least two points")
        self.points = pts

    @classmethod
    def segment(cls, t0, t1, wall=WALL):
        return cls(np.array([np.atleast_1d(t0), np.atleast_1d(t1)]), wall=wall)

    @property
    def length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))

    def closest_approach(self, samples=65):
        s = np.linspace(0, 1, samples)
        best = np.inf
        for a, b in zip(self.points[:-1], self.points[1:]):
            for si in s:
                best = min(best, wall_distance(a + si * (b - a)))
        return best


@dataclass
class DeformationTrace:
    rows: list = field(default_factory=list)
    projections: int = 0

    @property
    def max_spectral_drift(self):
        return max((r["spectral_drift"] for r in self.rows), default=0.0)

    @property
    def max_sum_drift(self):
        return max((r["sum_drift"] for r in self.rows), default=0.0)

    @property
    def max_reality(self):
        return max((r["reality"] for r in self.rows), default=0.0)

    def write_csv(self, path):
        if not self.rows:
            keys = ["s", "spectral_drift", "sum_drift", "reality"]
        else:
            keys = list(self.rows[0].keys())
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            for r in self.rows:
                w.writerow(r)


def _spectral_drift(A, theta):
    tr = np.abs(A[:, 0, 0] + A[:, 1, 1])
    det = np.abs(A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0] + theta ** 2 / 4)
    return float(max(tr.max(), det.max()))


def project_residues(A, theta, S):
    """Minimum-norm Newton correction onto ``tr A_i = 0``, ``det A_i = -theta_i^2/4``, ``sum A_i = S``.

    Two Gauss-Newton sweeps with the complex Jacobian of the constraints.
    """
    A = np.array(A, dtype=complex)
    m = A.shape[0]
    for _ in range(2):
        a, b, c, d = A[:, 0, 0], A[:, 0, 1], A[:, 1, 0], A[:, 1, 1]
        res = np.concatenate([a + d, a * d - b * c + theta ** 2 / 4, (A.sum(axis=0) - S).ravel()])
        J = np.zeros((2 * m + 4, 4 * m), dtype=complex)
        for i in range(m):
            J[i, 4 * i: 4 * i + 4] = [1, 0, 0, 1]
            J[m + i, 4 * i: 4 * i + 4] = [d[i], -c[i], -b[i], a[i]]
            J[2 * m:, 4 * i: 4 * i + 4] = np.eye(4)
        delta, *_ = np.linalg.lstsq(J, -res, rcond=None)
        A = A + delta.reshape(m, 2, 2)
    return A


def deform(sys, path, rtol=DEFORM_RTOL, atol=1e-14, record=False, pole_bound=POLE_BOUND,
           project_tol=PROJECT_TOL):
    """Integrate the Schlesinger equations along ``path``.

    Parameters
    ----------
    sys : FuchsianSystem
        System at the first point of the path.
    path : DeformationPath or array_like
        Polyline of free coordinates, or a single target point.
    record : bool
        Also return the ``DeformationTrace`` of accepted steps.

    Raises
    ------
    WallError
        If the path comes closer than ``path.wall`` to the boundary of the
        configuration space; the system at the truncation point is attached.
    PoleError
        If a residue exceeds ``pole_bound`` in norm.
    """
    if not isinstance(path, DeformationPath):
        path = DeformationPath(np.array([sys.t_free, np.atleast_1d(path)]))
    pts = path.points
    if pts.shape[1] != sys.n:
        raise DomainError(f"path has {pts.shape[1]} coordinates, system has {sys.n} free points")
    if np.abs(pts[0] - sys.t_free).max() > 1e-12:
        raise DomainError("path does not start at the singular points of the system")
    theta = sys.theta[:-1]
    S = sys.A.sum(axis=0)
    trace = DeformationTrace()
    A = sys.A.copy()
    current = pts[0].copy()
    for a, b in zip(pts[:-1], pts[1:]):
        seg = b - a
        if np.abs(seg).max() == 0:
            continue
        stop, s_end = _wall_cut(a, seg, path.wall)
        A, current = _integrate_segment(a, seg, s_end, A, theta, S, rtol, atol, trace,
                                        pole_bound, project_tol, sys)
        if stop:
            partial = FuchsianSystem.from_free(current, A, sys.theta)
            raise WallError(f"path reaches the wall (margin {path.wall:g}) at t = {current}",
                            closest=wall_distance(current), last_t=current, system=partial)
    out = FuchsianSystem.from_free(pts[-1], A, sys.theta)
    return (out, trace) if record else out


def _wall_cut(a, seg, wall):
    """Largest ``s`` in ``[0, 1]`` with the margin above ``wall`` on ``a + [0, s] seg``."""
    s = np.linspace(0, 1, 257)
    margins = np.array([wall_distance(a + si * seg) for si in s])
    if margins[0] < wall:
        raise WallError("deformation starts inside the wall margin", closest=float(margins[0]),
                        last_t=a)
    bad = np.flatnonzero(margins < wall)
    if bad.size == 0:
        return False, 1.0
    lo, hi = s[bad[0] - 1], s[bad[0]]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if wall_distance(a + mid * seg) >= wall:
            lo = mid
        else:
            hi = mid
    return True, lo


def _integrate_segment(a, seg, s_end, A, theta, S, rtol, atol, trace, pole_bound, project_tol,
                       sys):
    m = A.shape[0]
    fixed = np.array([0.0, 1.0], dtype=complex)

    def fun(s, y):
        t = np.concatenate([a + s * seg, fixed])
        return schlesinger_rhs(t, y.reshape(m, 2, 2), seg).ravel()

    y = A.ravel().astype(complex)
    s = 0.0
    h = None
    while s < s_end:
        solver = DOP853(fun, s, y, s_end, rtol=rtol, atol=atol,
                        first_step=h if h is not None else None)
        projected = False
        while solver.status == "running":
            msg = solver.step()
            if solver.status == "failed":
                raise PoleError(f"Schlesinger integration failed: {msg}", closest=None,
                                last_t=a + solver.t * seg)
            s = solver.t
            Ak = solver.y.reshape(m, 2, 2)
            norm = float(np.abs(Ak).max())
            t_now = a + s * seg
            if norm > pole_bound:
                raise PoleError(f"residue norm {norm:.3g} exceeds {pole_bound:g} near t = {t_now}",
                                closest=wall_distance(t_now), last_t=t_now)
            drift = _spectral_drift(Ak, theta)
            sum_drift = float(np.abs(Ak.sum(axis=0) - S).max())
            row = {"s": s}
            for i, ti in enumerate(np.atleast_1d(t_now)):
                row[f"t{i + 1}"] = complex(ti).real
            for i in range(m):
                row[f"norm_A{i + 1}"] = float(np.linalg.norm(Ak[i]))
            row["spectral_drift"] = drift
            row["sum_drift"] = sum_drift
            row["reality"] = check_conditions(
                FuchsianSystem.from_free(t_now, Ak, sys.theta)).residual_c
            trace.rows.append(row)
            y = solver.y
            h = solver.step_size if solver.step_size else None
            if drift > project_tol or sum_drift > project_tol:
                y = project_residues(Ak, theta, S).ravel()
                trace.projections += 1
                projected = True
                break
        if not projected:
            s = s_end
    return y.reshape(m, 2, 2), a + s_end * seg


def isomonodromy_drift(sys0, sys1, loops=None, rtol=TOL_ODE):
    """Largest Frobenius distance between the monodromy matrices of ``Y_inf`` for two systems."""
    if sys0 is sys1:
        return 0.0
    N0 = monodromy_of(sys0, loops=loops, rtol=rtol).N
    N1 = monodromy_of(sys1, loops=loops, rtol=rtol).N
    return float(np.max(np.linalg.norm(N0 - N1, axis=(1, 2))))


def gauge_pinning_residual(sys, C0, M, rtol=TOL_ODE):
    """Distance between the monodromy of ``Y_inf C0`` and the target matrices ``M``."""
    N = monodromy_of(sys, frame=infinity_frame(sys, rtol=rtol) @ C0, rtol=rtol).N
    return float(np.abs(N - np.asarray(M)).max())
