"""Minkowski 3-space, its Hermitian-matrix model and the spin cover by SU(1,1).

Vectors are plain ``numpy`` arrays of shape ``(3,)`` with the metric
``dX1^2 + dX2^2 - dX3^2``.  Group elements are complex ``(2, 2)`` arrays:

* ``SU(1,1)``   -- ``[[a, b], [conj(b), conj(a)]]`` with ``|a|^2 - |b|^2 = 1``
* ``SU^-(1,1)`` -- ``SU(1,1) @ J`` i.e. ``[[a, b], [-conj(b), -conj(a)]]``

``SU(1,1)`` acts on the Hermitian model by ``M -> conj(A).T @ M @ A``; the
orientation reversing coset acts by the opposite map, which turns ``J`` into
the hyperbolic half-turn about ``e1``.
"""

import numpy as np

from .errors import DomainError

TOL = 1e-10

METRIC = np.diag([1.0, 1.0, -1.0])
J = np.array([[0, 1j], [1j, 0]])
SIGMA = np.diag([1.0 + 0j, -1.0])
I2 = np.eye(2, dtype=complex)

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


def vec(x1, x2=None, x3=None):
    """Build a Lorentz vector from three components or one sequence."""
    if x2 is None:
        return np.asarray(x1, dtype=float).reshape(3)
    return np.array([x1, x2, x3], dtype=float)


def lorentz_dot(u, v):
    u = np.asarray(u)
    v = np.asarray(v)
    return u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1] - u[..., 2] * v[..., 2]


def classify(v, tol=TOL):
    """Return ``'spacelike'``, ``'timelike'`` or ``'lightlike'``.

    The zero vector counts as spacelike.
    """
    v = np.asarray(v, dtype=float)
    q = lorentz_dot(v, v)
    scale = float(np.dot(v, v))
    if scale == 0.0:
        return "spacelike"
    if q > tol * scale:
        return "spacelike"
    if q < -tol * scale:
        return "timelike"
    return "lightlike"


def lorentz_cross(u, v):
    """Cross product with ``<u x v, w> = det(u, v, w)``."""
    c = np.cross(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    return c * np.array([1.0, 1.0, -1.0])


def lorentz_normalize(v):
    v = np.asarray(v, dtype=float)
    q = lorentz_dot(v, v)
    if abs(q) < TOL * max(float(np.dot(v, v)), 1e-300):
        raise DomainError("cannot normalize a lightlike vector")
    return v / np.sqrt(abs(q))


def to_hermitian(X):
    X = np.asarray(X, dtype=float)
    return np.array([[X[2], X[1] + 1j * X[0]],
                     [X[1] - 1j * X[0], X[2]]])


def from_hermitian(M):
    M = np.asarray(M)
    x3 = 0.5 * (M[0, 0] + M[1, 1]).real
    x2 = 0.5 * (M[0, 1] + M[1, 0]).real
    x1 = 0.5 * (M[0, 1] - M[1, 0]).imag
    return np.array([x1, x2, x3])


def spin_generator(d):
    """The matrix ``[[i d3, -d1 + i d2], [-d1 - i d2, -i d3]]``.

    It squares to ``<d, d> I`` and generates, through ``spin_lift``, the
    one-parameter group ``exp(phi * (d x .))`` for the action ``spin_action``.
    The sign of ``d1`` is what makes the generator compatible with the
    Hermitian model ``[[X3, X2 + i X1], [X2 - i X1, X3]]``.
    """
    d = np.asarray(d, dtype=float)
    return np.array([[1j * d[2], -d[0] + 1j * d[1]],
                     [-d[0] - 1j * d[1], -1j * d[2]]])


def stereo_project(x, tol=TOL):
    """Stereographic projection of the extended plane onto the hyperbolic sphere.

    ``x`` may be a complex number or ``None``/``inf`` for the point at infinity.
    Points with ``|x| = 1`` map to the light cone and raise ``DomainError``.
    """
    if x is None or (np.isscalar(x) and np.isinf(abs(x))):
        return E3.copy()
    x = complex(x)
    r2 = abs(x) ** 2
    den = r2 - 1.0
    if abs(den) < tol * max(1.0, r2):
        raise DomainError("|x| = 1 lies on the light cone")
    return np.array([2 * x.imag / den, 2 * x.real / den, (r2 + 1) / den])


def su11(a, b):
    return np.array([[a, b], [np.conj(b), np.conj(a)]], dtype=complex)


def su11_minus(a, b):
    return np.array([[a, b], [-np.conj(b), -np.conj(a)]], dtype=complex)


def coset_sign(A):
    """``+1`` for ``SU(1,1)``, ``-1`` for ``SU^-(1,1)`` (from the Hermitian form)."""
    A = np.asarray(A)
    return 1 if (A.conj().T @ SIGMA @ A)[0, 0].real > 0 else -1


def su11_residual(A):
    """Distance of ``A`` from ``SU(1,1)``: form preservation plus ``det = 1``."""
    A = np.asarray(A, dtype=complex)
    return max(float(np.abs(A.conj().T @ SIGMA @ A - SIGMA).max()),
               abs(np.linalg.det(A) - 1.0))


def su11_minus_residual(A):
    A = np.asarray(A, dtype=complex)
    return max(float(np.abs(A.conj().T @ SIGMA @ A + SIGMA).max()),
               abs(np.linalg.det(A) - 1.0))


def is_su11(A, tol=TOL):
    return su11_residual(A) < tol


def is_su11_minus(A, tol=TOL):
    return su11_minus_residual(A) < tol


def random_su11(rng, scale=1.0):
    """Random element of SU(1,1) (``rng`` is a ``numpy.random.Generator``)."""
    b = scale * (rng.normal() + 1j * rng.normal())
    phase = np.exp(1j * rng.uniform(0, 2 * np.pi))
    a = phase * np.sqrt(1 + abs(b) ** 2)
    return su11(a, b)


def spin_action(A, X):
    """Isometry of L^3 induced by ``A`` in SU(1,1) or SU^-(1,1)."""
    A = np.asarray(A, dtype=complex)
    M = A.conj().T @ to_hermitian(X) @ A
    return coset_sign(A) * from_hermitian(M)


def isometry_matrix(A):
    """3x3 real matrix of ``spin_action(A, .)``."""
    return np.column_stack([spin_action(A, e) for e in (E1, E2, E3)])


def spin_lift(axis, angle):
    """Preimage in SU(1,1) of the rotation/boost about a unit ``axis``.

    The isometry is ``exp(angle * (axis x .))`` with the Lorentz cross
    product, so ``axis = e3`` turns ``e1`` towards ``e2``.  For a timelike
    axis ``angle`` is the rotation angle (eigenvalues ``exp(+-i angle)``),
    for a spacelike axis it is the rapidity (eigenvalues ``exp(+-angle)``).
    The other preimage is the negative.
    """
    axis = np.asarray(axis, dtype=float)
    kind = classify(axis)
    q = lorentz_dot(axis, axis)
    if kind == "lightlike":
        raise DomainError("spin_lift needs a timelike or spacelike axis")
    if abs(abs(q) - 1.0) > 1e-8:
        raise DomainError("spin_lift axis must be unit")
    K = spin_generator(axis)
    if kind == "timelike":
        return np.cos(angle / 2) * I2 + np.sin(angle / 2) * K
    return np.cosh(angle / 2) * I2 + np.sinh(angle / 2) * K


def _canonical_sign(D):
    # first decisive entry among (Im d11, Re d12, Im d12, Re d11) made positive
    for value in (D[0, 0].imag, D[0, 1].real, D[0, 1].imag, D[0, 0].real):
        if abs(value) > 1e-12:
            return D if value > 0 else -D
    return D


def half_turn_lift(u, canonical=True):
    """Element of SU^-(1,1) squaring to ``-I`` whose action is the half-turn about ``u``.

    The oriented lift is ``-i K(u)``, which equals ``S J S^-1`` for any
    ``S`` in SU(1,1) carrying ``u`` to ``+e1``; it changes sign with the
    orientation of ``u``.  With ``canonical=True`` a deterministic
    representative of the pair is returned instead: the imaginary part of
    the (1,1) entry is made positive, ties broken by the real and then the
    imaginary part of the (1,2) entry.
    """
    u = np.asarray(u, dtype=float)
    if classify(u) != "spacelike" or abs(lorentz_dot(u, u) - 1.0) > 1e-8:
        raise DomainError("half_turn_lift needs a unit spacelike direction")
    D = -1j * spin_generator(u)
    return _canonical_sign(D) if canonical else D


def _rotate_to_plane(v):
    """SU(1,1) rotation about e3 that brings ``v`` into the half plane x2 = 0, x1 >= 0."""
    psi = np.arctan2(v[1], v[0])
    for angle in (-psi, psi):
        R = spin_lift(E3, angle)
        w = spin_action(R, v)
        if abs(w[1]) < 1e-9 * max(1.0, np.abs(v).max()) and w[0] >= -1e-12:
            return R, w
    raise AssertionError("rotation about e3 failed")  # pragma: no cover


def align_spacelike(u):
    """``S`` in SU(1,1) with ``spin_action(S, u) = e1`` for unit spacelike ``u``."""
    u = np.asarray(u, dtype=float)
    if classify(u) != "spacelike":
        raise DomainError("align_spacelike needs a spacelike vector")
    R1, w = _rotate_to_plane(u)
    beta = np.arcsinh(w[2])
    for angle in (beta, -beta):
        R2 = spin_lift(E2, angle)
        S = R1 @ R2
        if np.allclose(spin_action(S, u), E1, atol=1e-9):
            return S
    raise AssertionError("boost about e2 failed")  # pragma: no cover


def align_timelike(v):
    """``S`` in SU(1,1) with ``spin_action(S, v) = +-e3`` for unit timelike ``v``.

    The sign is that of the time component of ``v``.
    """
    v = np.asarray(v, dtype=float)
    if classify(v) != "timelike":
        raise DomainError("align_timelike needs a timelike vector")
    sgn = 1.0 if v[2] > 0 else -1.0
    R1, w = _rotate_to_plane(sgn * v)
    beta = np.arcsinh(w[0])
    for angle in (beta, -beta):
        R2 = spin_lift(E2, angle)
        S = R1 @ R2
        if np.allclose(spin_action(S, sgn * v), E3, atol=1e-9):
            return S
    raise AssertionError("boost about e2 failed")  # pragma: no cover
