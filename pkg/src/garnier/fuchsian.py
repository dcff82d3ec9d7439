"""Fuchsian systems ``Y' = sum_i A_i / (x - t_i) Y`` on the Riemann sphere.

The singular points are ``t_1 .. t_n`` (free), ``t_{n+1} = 0``, ``t_{n+2} = 1``
and ``t_{n+3} = inf``.  Residues are traceless with eigenvalues
``+-theta_i / 2`` and the system is normalized at infinity by
``A_inf = -sum A_i = (1 - theta_inf / 2) diag(1, -1)``.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, ReducibleSystemError, ResonanceError

RESONANCE_GUARD = 1e-6
ROOT_CLUSTER_TOL = 1e-7
SIGMA3 = np.diag([1.0, -1.0]).astype(complex)


@dataclass(frozen=True)
class FuchsianSystem:
    """Residue data of a Fuchsian system with ``n + 3`` singular points.

    Parameters
    ----------
    t : array_like, shape (n + 2,)
        Finite singular points, the last two being 0 and 1.
    A : array_like, shape (n + 2, 2, 2)
        Residue matrices.
    theta : array_like, shape (n + 3,)
        Local angles; ``theta[-1]`` belongs to the point at infinity.
    """

    t: np.ndarray
    A: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        t = np.array(self.t, dtype=complex).reshape(-1)
        A = np.array(self.A, dtype=complex)
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if A.shape != (t.size, 2, 2):
            raise DomainError(f"A must have shape ({t.size}, 2, 2), got {A.shape}")
        if theta.size != t.size + 1:
            raise DomainError("theta needs one entry per singular point including infinity")
        if t.size < 2 or t[-2] != 0 or t[-1] != 1:
            raise DomainError("the last two finite singular points must be 0 and 1")
        for arr in (t, A, theta):
            arr.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def from_free(cls, t_free, A, theta):
        t = np.concatenate([np.asarray(t_free, dtype=complex).reshape(-1), [0.0, 1.0]])
        return cls(t, A, theta)

    @property
    def n(self):
        return self.t.size - 2

    @property
    def t_free(self):
        return self.t[:-2]

    @property
    def theta_inf(self):
        return float(self.theta[-1])

    @property
    def ell(self):
        """Diagonal entry ``1 - theta_inf / 2`` of the normalized residue at infinity."""
        return 1.0 - self.theta_inf / 2.0

    @property
    def A_inf(self):
        return -self.A.sum(axis=0)

    @property
    def L_inf(self):
        return self.ell * SIGMA3

    def with_residues(self, A, t=None):
        return FuchsianSystem(self.t if t is None else t, A, self.theta)

    def coefficient(self, x):
        """``A(x)``; ``x`` may be an array, the result then has shape ``x.shape + (2, 2)``."""
        x = np.asarray(x, dtype=complex)
        w = 1.0 / (x[..., None] - self.t)
        return np.einsum("...k,kij->...ij", w, self.A)

    def coefficient_derivative(self, x):
        x = np.asarray(x, dtype=complex)
        w = -1.0 / (x[..., None] - self.t) ** 2
        return np.einsum("...k,kij->...ij", w, self.A)

    def singular_distance(self, x):
        """Distance from ``x`` to the nearest finite singular point."""
        return float(np.min(np.abs(complex(x) - self.t)))

    def gap(self, i):
        """Distance from ``t_i`` (0-based) to the nearest other finite singular point."""
        others = np.delete(self.t, i)
        return float(np.min(np.abs(others - self.t[i])))


def check_resonance(sys):
    ti = sys.theta_inf
    if abs(ti - round(ti)) < RESONANCE_GUARD:
        raise ResonanceError(f"theta_inf = {ti} is too close to an integer")
    for k, th in enumerate(sys.theta[:-1]):
        if abs(th - round(th)) < RESONANCE_GUARD:
            raise ResonanceError(f"theta_{k + 1} = {th} is too close to an integer")


# ---------------------------------------------------------------------------
# conditions


def best_fit_phase(A):
    """Common phase ``eta`` making ``A12 e^{-i eta}`` and ``A21 e^{i eta}`` as real as possible."""
    w = np.concatenate([A[:, 0, 1], np.conj(A[:, 1, 0])])
    s = np.sum(w * w)
    if abs(s) == 0:
        return 0.0
    return 0.5 * float(np.angle(s))


@dataclass
class ConditionReport:
    spectrum: np.ndarray
    trace: np.ndarray
    normalization: float
    eta: float
    reality: np.ndarray
    signs: list
    t_real: float
    t_ordered: bool
    angles: float = None
    extra: dict = field(default_factory=dict)

    @property
    def residual_a(self):
        return float(max(self.spectrum.max(), self.trace.max(), self.normalization))

    @property
    def residual_c(self):
        return float(max(self.reality.max(), self.t_real))

    def passes(self, tol=1e-8):
        ok = self.residual_a < tol and self.residual_c < tol and self.t_ordered
        if self.angles is not None:
            ok = ok and self.angles < tol
        return bool(ok)

    def as_dict(self):
        return {
            "spectrum": self.spectrum.tolist(),
            "trace": self.trace.tolist(),
            "normalization": self.normalization,
            "eta": self.eta,
            "reality": self.reality.tolist(),
            "offdiagonal_signs": self.signs,
            "t_real": self.t_real,
            "t_ordered": self.t_ordered,
            "angles": self.angles,
            "residual_a": self.residual_a,
            "residual_c": self.residual_c,
        }


def check_conditions(sys, D=None):
    """Residuals of the spectral, normalization and reality conditions.

    The reality structure is ``A_i = [[a_i, b_i e^{i eta}], [c_i e^{-i eta}, -a_i]]``
    with ``a_i, b_i, c_i`` real and ``t_1 < ... < t_n < 0`` real.  The signs
    of ``b_i, c_i`` are reported but not enforced, because ``sum b_i = 0`` is
    forced by the diagonal normalization at infinity.
    """
    A = sys.A
    half = sys.theta[:-1] / 2
    spectrum = np.empty(sys.n + 2)
    for k, Ak in enumerate(A):
        ev = np.sort_complex(np.linalg.eigvals(Ak))
        spectrum[k] = np.max(np.abs(ev - np.array([-half[k], half[k]])))
    trace = np.abs(A[:, 0, 0] + A[:, 1, 1])
    normalization = float(np.abs(sys.A_inf - sys.L_inf).max())
    eta = best_fit_phase(A)
    ph = np.exp(1j * eta)
    reality = np.stack([
        np.abs(A[:, 0, 0].imag),
        np.abs(A[:, 0, 0] + A[:, 1, 1]),
        np.abs((A[:, 0, 1] / ph).imag),
        np.abs((A[:, 1, 0] * ph).imag),
    ], axis=1).max(axis=1)
    signs = [[int(np.sign((A[k, 0, 1] / ph).real)), int(np.sign((A[k, 1, 0] * ph).real))]
             for k in range(sys.n + 2)]
    tf = sys.t_free
    t_real = float(np.abs(tf.imag).max()) if tf.size else 0.0
    tr = tf.real
    ordered = bool(np.all(np.diff(tr) > 0) and (tr.size == 0 or tr[-1] < 0))
    angles = None
    if D is not None:
        from .polygon import exterior_angles
        angles = float(np.abs(exterior_angles(D).theta - sys.theta).max())
    return ConditionReport(spectrum, trace, normalization, eta, reality, signs,
                           t_real, ordered, angles)


# ---------------------------------------------------------------------------
# scalar equation


def _cluster(roots, tol):
    """Group nearly equal roots; returns list of (mean, multiplicity)."""
    groups = []
    for r in sorted(roots, key=lambda z: (z.real, z.imag)):
        for g in groups:
            if abs(g[0] / len(g[1]) - r) <= tol * max(1.0, abs(r)):
                g[0] += r
                g[1].append(r)
                break
        else:
            groups.append([r, [r]])
    return [(g[0] / len(g[1]), len(g[1])) for g in groups]


def offdiagonal_zeros(sys, cutoff=1e8):
    """Finite zeros of ``A12(x) = sum_i b_i / (x - t_i)``.

    They are the finite generalized eigenvalues of the arrowhead pencil
    ``[[0, b^T], [1, diag(t)]] - x [[0, 0], [0, I]]`` whose determinant is, up
    to sign, the numerator ``sum_i b_i prod_{j != i} (x - t_j)``.  This keeps
    the computation in residue form; both matrices are balanced by LAPACK.
    """
    b = sys.A[:, 0, 1]
    m = sys.t.size
    P = np.zeros((m + 1, m + 1), dtype=complex)
    P[0, 1:] = b
    P[1:, 0] = 1.0
    P[1:, 1:] = np.diag(sys.t)
    Q = np.zeros_like(P)
    Q[1:, 1:] = np.eye(m)
    scale = max(1.0, float(np.abs(sys.t).max()))
    with np.errstate(all="ignore"):
        ev = scipy.linalg.eigvals(P, Q)
    ev = ev[np.isfinite(ev)]
    return np.sort_complex(ev[np.abs(ev) < cutoff * scale])


def offdiagonal_numerator(sys):
    """Polynomial coefficients (highest first) of ``sum_i b_i prod_{j != i} (x - t_j)``."""
    b = sys.A[:, 0, 1]
    coeffs = np.zeros(sys.t.size, dtype=complex)
    for i, bi in enumerate(b):
        coeffs += bi * np.poly(np.delete(sys.t, i))
    return coeffs


@dataclass
class FuchsianEquation:
    """Scalar equation ``y'' + p y' + q y = 0`` satisfied by the first row of solutions.

    Stored as partial-fraction data: ``p = sum 1/(x - t_i) - sum 1/(x - lambda_k)``
    and ``q`` in the shape with constants ``kappa``, ``K_i`` (free points) and
    ``mu_k`` (apparent points).
    """

    t: np.ndarray
    theta: np.ndarray
    lam: np.ndarray
    multiplicity: np.ndarray
    mu: np.ndarray
    K: np.ndarray
    kappa: float
    xi: complex
    system: FuchsianSystem = None

    @property
    def n(self):
        return self.t.size - 2

    def p(self, x):
        x = np.asarray(x, dtype=complex)
        out = np.sum(1.0 / (x[..., None] - self.t), axis=-1)
        if self.lam.size:
            out = out - np.sum(self.multiplicity / (x[..., None] - self.lam), axis=-1)
        return out

    def q(self, x):
        """``q`` from the partial-fraction parameters (simple apparent points only)."""
        x = np.asarray(x, dtype=complex)
        th = self.theta[:-1]
        xx1 = x * (x - 1)
        out = -0.25 * np.sum(th ** 2 / (x[..., None] - self.t) ** 2, axis=-1) + self.kappa / xx1
        tf = self.t[:-2]
        if tf.size:
            out = out - np.sum(tf * (tf - 1) * self.K / (x[..., None] - tf), axis=-1) / xx1
        if self.lam.size:
            lam = self.lam
            out = out + np.sum(lam * (lam - 1) * self.mu / (x[..., None] - lam), axis=-1) / xx1
        return out


def equation_coefficients(sys, x):
    """``(p, q)`` evaluated directly from the system entries at ``x``."""
    A = sys.coefficient(x)
    dA = sys.coefficient_derivative(x)
    a11, a12 = A[..., 0, 0], A[..., 0, 1]
    h = dA[..., 0, 1] / a12
    p = -h - (A[..., 0, 0] + A[..., 1, 1])
    q = -dA[..., 0, 0] + a11 * h + (A[..., 0, 0] * A[..., 1, 1] - A[..., 0, 1] * A[..., 1, 0])
    return p, q


def system_to_equation(sys, rel_tol=1e-13):
    """Scalar equation for the first components of solutions of ``sys``."""
    b = sys.A[:, 0, 1]
    scale = float(np.abs(sys.A).max())
    if np.all(np.abs(b) <= rel_tol * max(scale, 1e-300)):
        raise ReducibleSystemError("A12 vanishes identically")
    xi = complex(np.sum(sys.t * b))
    roots = offdiagonal_zeros(sys)
    clusters = _cluster(list(roots), ROOT_CLUSTER_TOL)
    lam = np.array([c[0] for c in clusters], dtype=complex)
    mult = np.array([c[1] for c in clusters], dtype=int)
    mu = np.array([complex(sys.coefficient(l)[0, 0]) for l in lam], dtype=complex)
    K = np.empty(sys.n, dtype=complex)
    for i in range(sys.n):
        Ai = sys.A[i]
        others = np.delete(np.arange(sys.t.size), i)
        B = np.einsum("k,kij->ij", 1.0 / (sys.t[i] - sys.t[others]), sys.A[others])
        res = Ai[0, 0] * B[0, 1] / Ai[0, 1] - B[0, 0] - np.trace(Ai @ B)
        K[i] = -res
    th = sys.theta
    kappa = th[-1] / 2 * (1 - th[-1] / 2) + 0.25 * np.sum(th[:-1] ** 2)
    return FuchsianEquation(t=sys.t.copy(), theta=th.copy(), lam=lam, multiplicity=mult,
                            mu=mu, K=K, kappa=float(kappa), xi=xi, system=sys)


@dataclass
class RiemannScheme:
    points: list
    exponents: list
    total: float
    r: int

    @property
    def fuchs_residual(self):
        return abs(self.total - (self.r - 2))


def exponent_table(sys, eq=None):
    """Riemann scheme of the scalar equation and the Fuchs relation check.

    Finite points carry ``-+theta_i / 2``, infinity ``theta_inf / 2`` and
    ``1 - theta_inf / 2`` (shifted up by the number of apparent points lost to
    infinity), an apparent point of multiplicity ``m`` carries ``{0, m + 1}``.
    """
    if eq is None:
        eq = system_to_equation(sys)
    points, exps = [], []
    for k in range(sys.t.size):
        points.append(complex(sys.t[k]))
        exps.append((-sys.theta[k] / 2, sys.theta[k] / 2))
    lost = sys.n - int(eq.multiplicity.sum())
    ti = sys.theta_inf
    points.append(np.inf)
    exps.append((ti / 2 + lost, 1 - ti / 2))
    for l, m in zip(eq.lam, eq.multiplicity):
        points.append(complex(l))
        exps.append((0, int(m) + 1))
    total = float(sum(a + b for a, b in exps))
    return RiemannScheme(points=points, exponents=exps, total=total, r=len(points))


def reality_check(sys, samples=None, rng=None):
    """``max |p(x) - conj p(conj x)| + |q(x) - conj q(conj x)|`` over sample points.

    Also includes ``|Im p| + |Im q|`` at real points between the singularities.
    """
    if samples is None:
        rng = np.random.default_rng(0) if rng is None else rng
        tr = np.sort(sys.t.real)
        lo, hi = tr[0] - 1.0, tr[-1] + 1.0
        z = rng.uniform(lo, hi, 12) + 1j * rng.uniform(0.05, 2.0, 12)
        mids = 0.5 * (tr[1:] + tr[:-1])
        real_pts = np.concatenate([mids, [lo, hi]])
        samples = np.concatenate([z, real_pts + 0j])
    samples = np.asarray(samples, dtype=complex)
    p, q = equation_coefficients(sys, samples)
    pc, qc = equation_coefficients(sys, np.conj(samples))
    scale = 1.0 + np.abs(p) + np.abs(q)
    res = (np.abs(p - np.conj(pc)) + np.abs(q - np.conj(qc))) / scale
    return float(res.max())


# ---------------------------------------------------------------------------
# local series


def moments(sys, kmax):
    """``B_k = sum_i A_i t_i^k`` for ``k = 0..kmax``."""
    powers = sys.t[None, :] ** np.arange(kmax + 1)[:, None]
    return np.einsum("ki,iab->kab", powers, sys.A)


def canonical_frame_at_infinity(sys, order):
    """Coefficients ``R_0 .. R_order`` of ``Y_inf(x) = R(1/x) x^{-L_inf}``.

    Raises
    ------
    ResonanceError
        If the exponent difference at infinity is within the guard of an integer.
    """
    check_resonance(sys)
    L = np.diag(sys.L_inf).real
    B = moments(sys, order)
    R = np.zeros((order + 1, 2, 2), dtype=complex)
    R[0] = np.eye(2)
    denom_base = L[:, None] - L[None, :]
    for m in range(1, order + 1):
        rhs = np.einsum("kab,kbc->ac", B[1:m + 1], R[m - 1::-1])
        R[m] = rhs / (denom_base - m)
    return R


class InfinitySeries:
    """Evaluator of ``Y_inf`` and its derivative outside the disk containing the ``t_i``."""

    def __init__(self, sys, tol=1e-17, max_order=4000):
        self.sys = sys
        self.radius = float(np.abs(sys.t).max())
        self.tol = tol
        self.max_order = max_order
        self._R = canonical_frame_at_infinity(sys, 64)

    def _ensure(self, order):
        if order >= self._R.shape[0]:
            self._R = canonical_frame_at_infinity(self.sys, min(2 * order, self.max_order))

    def order_for(self, x):
        ratio = self.radius / abs(x)
        if ratio >= 1:
            raise DomainError("point lies inside the disk of convergence of the series at infinity")
        if ratio == 0:
            return 1
        order = int(np.ceil(np.log(self.tol) / np.log(ratio))) + 2
        if order > self.max_order:
            raise DomainError("series at infinity converges too slowly here")
        return order

    def evaluate(self, x, order=None):
        """Return ``(Y_inf(x), Y_inf'(x))`` with the principal branch of ``x^{-L}``."""
        x = complex(x)
        if x.imag == 0:
            x = complex(x.real, 0.0)
        order = self.order_for(x) if order is None else order
        self._ensure(order)
        R = self._R[: order + 1]
        w = 1.0 / x
        wp = w ** np.arange(order + 1)
        Rw = np.einsum("k,kab->ab", wp, R)
        # dR/dw
        dRw = np.einsum("k,kab->ab", np.arange(1, order + 1) * wp[:-1], R[1:])
        ell = self.sys.ell
        xL = np.diag([x ** (-ell), x ** ell])
        Y = Rw @ xL
        L = np.diag([ell, -ell])
        dY = (-w * w * dRw - w * Rw @ L) @ xL
        return Y, dY


class LocalSeries:
    """Frobenius solution ``P F(z) z^Lambda`` at a finite singular point ``t_i``.

    ``Lambda`` holds the eigenvalues of ``A_i`` (``+-theta_i / 2`` for a valid
    system) in decreasing real part, ``A_i = P Lambda P^-1`` and
    ``F(0) = I``.  The principal branch of ``z^Lambda`` is used, so points
    with ``z`` in the upper half-plane are reached from above.
    """

    def __init__(self, sys, i, order=80):
        self.sys = sys
        self.i = i
        self.center = complex(sys.t[i])
        self.radius = sys.gap(i)
        w, V = np.linalg.eig(sys.A[i])
        idx = np.argsort(-w.real)
        self.exponents = w[idx]
        V = V[:, idx]
        self.P = V
        self.Pinv = np.linalg.inv(V)
        self._order = 0
        self.F = np.zeros((1, 2, 2), dtype=complex)
        self.F[0] = np.eye(2)
        self._extend(order)

    def _extend(self, order):
        if order <= self._order:
            return
        sys, i = self.sys, self.i
        others = np.delete(np.arange(sys.t.size), i)
        c = self.center - sys.t[others]
        k = np.arange(order)
        # E_k = sum_j A_j (-1)^k / c_j^{k+1}
        coef = (-1.0) ** k[:, None] / c[None, :] ** (k[:, None] + 1)
        E = np.einsum("kj,jab->kab", coef, sys.A[others])
        Et = np.einsum("ab,kbc,cd->kad", self.Pinv, E, self.P)
        F = np.zeros((order + 1, 2, 2), dtype=complex)
        F[: self._order + 1] = self.F
        lam = self.exponents
        denom_base = lam[None, :] - lam[:, None]
        for m in range(self._order + 1, order + 1):
            rhs = np.einsum("kab,kbc->ac", Et[:m], F[m - 1::-1])
            F[m] = rhs / (m + denom_base)
        self.F = F
        self._order = order
        self.Et = Et

    def order_for(self, z, tol=1e-17):
        ratio = abs(z) / self.radius
        if ratio >= 1:
            raise DomainError("point outside the disk of convergence of the local series")
        if ratio == 0:
            return 1
        return int(np.ceil(np.log(tol) / np.log(ratio))) + 2

    def evaluate(self, x, order=None):
        """Return ``(Phi(x), Phi'(x))`` for the local fundamental matrix."""
        return self.evaluate_offset(complex(x) - self.center, order)

    def evaluate_offset(self, z, order=None):
        """``evaluate`` at ``t_i + z``; avoids rounding ``t_i + z`` for tiny ``z``."""
        z = complex(z)
        if z.imag == 0:
            z = complex(z.real, 0.0)  # a real point is reached from above
        order = self.order_for(z) if order is None else order
        self._extend(order)
        F = self.F[: order + 1]
        zp = z ** np.arange(order + 1)
        Fz = np.einsum("k,kab->ab", zp, F)
        dFz = np.einsum("k,kab->ab", np.arange(1, order + 1) * zp[:-1], F[1:])
        lam = self.exponents
        zL = np.diag(z ** lam)
        Phi = self.P @ Fz @ zL
        dPhi = self.P @ (dFz + Fz @ np.diag(lam / z)) @ zL
        return Phi, dPhi

    def regular_part(self, x, order=None):
        """``P F(z)``, the holomorphic factor in front of ``z^Lambda``."""
        z = complex(x) - self.center
        order = self.order_for(z) if order is None else order
        self._extend(order)
        zp = z ** np.arange(order + 1)
        return self.P @ np.einsum("k,kab->ab", zp, self.F[: order + 1])

    def row_series(self, order):
        """Coefficients of the first row of ``P F(z)``, shape ``(order + 1, 2)``."""
        self._extend(order)
        return np.einsum("b,kbc->kc", self.P[0], self.F[: order + 1])

    def quadratic_integrals(self, x, K, order=None):
        """``int_{t_i}^x (G^2, G H, H^2)`` for ``(G, H)`` the first row of ``Phi K``.

        Every product of two first-row entries is ``z^alpha`` times a power
        series with ``alpha`` a sum of two exponents, so the integral is
        taken termwise.  It converges at ``z = 0`` when all exponents exceed
        ``-1/2``, which holds for ``0 < theta_i < 1``.
        """
        z = complex(x) - self.center
        if z == 0:
            return np.zeros(3, dtype=complex)
        if z.imag == 0:
            z = complex(z.real, 0.0)
        order = self.order_for(z) if order is None else order
        rho = self.row_series(order)
        m = np.arange(order + 1)
        logz = np.log(z)
        K = np.asarray(K, dtype=complex)
        out = np.zeros(3, dtype=complex)
        for k in range(2):
            for l in range(2):
                prod = np.convolve(rho[:, k], rho[:, l])[: order + 1]
                e = m + self.exponents[k] + self.exponents[l] + 1.0
                val = np.sum(prod * np.exp(e * logz) / e)
                out += val * np.array([K[k, 0] * K[l, 0], K[k, 0] * K[l, 1], K[k, 1] * K[l, 1]])
        return out
