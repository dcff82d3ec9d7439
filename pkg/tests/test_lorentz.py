import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from garnier import lorentz as lz
from garnier.errors import DomainError

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
vectors = st.tuples(finite, finite, finite).map(np.array)


@pytest.mark.parametrize("u, v, expected", [
    ((1, 0, 0), (1, 0, 0), 1.0),
    ((0, 0, 1), (0, 0, 1), -1.0),
    ((1, 0, 1), (1, 0, 1), 0.0),
])
def test_lorentz_dot_signature(u, v, expected):
    assert lz.lorentz_dot(np.array(u), np.array(v)) == expected


@pytest.mark.parametrize("v, kind", [
    ((1, 0, 0), "spacelike"),
    ((0, 0, 0), "spacelike"),
    ((0, 0, 2), "timelike"),
    ((3, 4, 5), "lightlike"),
])
def test_classify(v, kind):
    assert lz.classify(v) == kind


@given(vectors)
def test_classify_matches_sign_of_norm(v):
    q = lz.lorentz_dot(v, v)
    kind = lz.classify(v)
    scale = float(np.dot(v, v))
    if scale == 0 or q > 1e-10 * scale:
        assert kind == "spacelike"
    elif q < -1e-10 * scale:
        assert kind == "timelike"
    else:
        assert kind == "lightlike"


def test_to_hermitian_examples():
    assert np.allclose(lz.to_hermitian([0, 0, 1]), np.eye(2))
    assert np.allclose(lz.to_hermitian([1, 0, 0]), [[0, 1j], [-1j, 0]])
    X = np.array([3.0, 4.0, 5.0])
    assert np.linalg.det(lz.to_hermitian(X)) == pytest.approx(-lz.lorentz_dot(X, X), abs=1e-12)


@given(vectors)
def test_hermitian_round_trip_and_determinant(X):
    M = lz.to_hermitian(X)
    assert np.allclose(M, M.conj().T)
    assert np.allclose(lz.from_hermitian(M), X)
    assert np.linalg.det(M).real == pytest.approx(-lz.lorentz_dot(X, X), abs=1e-9)


def test_stereo_projection_points():
    assert np.array_equal(lz.stereo_project(np.inf), [0, 0, 1])
    assert np.array_equal(lz.stereo_project(None), [0, 0, 1])
    assert np.allclose(lz.stereo_project(0), [0, 0, -1])
    with pytest.raises(DomainError):
        lz.stereo_project(np.exp(0.3j))


@given(st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False))
def test_stereo_projection_lands_on_hyperbolic_sphere(x):
    if abs(abs(x) - 1) < 1e-3:
        return
    N = lz.stereo_project(x)
    assert lz.lorentz_dot(N, N) == pytest.approx(-1.0, rel=1e-9)
    assert (N[2] < 0) == (abs(x) < 1)


def test_spin_lift_special_values():
    assert np.allclose(lz.spin_lift(lz.E3, np.pi), [[1j, 0], [0, -1j]])
    assert np.allclose(lz.spin_lift(lz.E3, 0.0), np.eye(2))


@pytest.mark.parametrize("beta", [-1.3, 0.2, 0.7])
def test_spin_lift_boost_about_e1(beta):
    # exp(beta (e1 x .)) sends e2 -> cosh e2 - sinh e3 and e3 -> cosh e3 - sinh e2
    c, s = np.cosh(beta), np.sinh(beta)
    boost = np.array([[1, 0, 0], [0, c, -s], [0, -s, c]])
    A = lz.spin_lift(lz.E1, beta)
    assert lz.is_su11(A)
    assert np.allclose(lz.isometry_matrix(A), boost, atol=1e-12)


def test_spin_lift_rotation_direction():
    # a quarter turn about e3 takes e1 to e2
    R = lz.spin_lift(lz.E3, np.pi / 2)
    assert np.allclose(lz.spin_action(R, lz.E1), lz.E2, atol=1e-14)


def test_spin_action_examples():
    X = np.array([0.3, -1.2, 2.0])
    assert np.allclose(lz.spin_action(np.eye(2), X), X)
    assert np.allclose(lz.spin_action(np.diag([1j, -1j]), lz.E1), [-1, 0, 0])


def test_spin_generator_squares_to_norm(rng):
    for _ in range(20):
        d = rng.normal(size=3)
        K = lz.spin_generator(d)
        assert np.allclose(K @ K, lz.lorentz_dot(d, d) * np.eye(2))


def test_random_elements_preserve_form(rng):
    for _ in range(50):
        A = lz.random_su11(rng)
        X, Y = rng.normal(size=(2, 3))
        assert lz.is_su11(A)
        assert lz.lorentz_dot(lz.spin_action(A, X), lz.spin_action(A, Y)) == pytest.approx(
            lz.lorentz_dot(X, Y), abs=1e-10 * (1 + np.abs(A).max() ** 4))


def test_action_is_a_homomorphism(rng):
    for _ in range(20):
        A = lz.random_su11(rng)
        B = lz.random_su11(rng) @ (lz.J if rng.uniform() < 0.5 else np.eye(2))
        # the Hermitian model composes contravariantly
        assert np.allclose(lz.isometry_matrix(A @ B),
                           lz.isometry_matrix(B) @ lz.isometry_matrix(A), atol=1e-9)


def test_coset_membership(rng):
    A = lz.random_su11(rng)
    D = A @ lz.J
    assert lz.coset_sign(A) == 1 and lz.coset_sign(D) == -1
    assert lz.is_su11_minus(D) and not lz.is_su11(D)
    a, b = 1.2 + 0.3j, 0.5 - 0.4j
    n = np.sqrt(abs(a) ** 2 - abs(b) ** 2)
    assert lz.is_su11(lz.su11(a / n, b / n))
    assert lz.is_su11_minus(lz.su11_minus(b / n, a / n))


def test_conjugation_rule_per_coset(rng):
    for _ in range(20):
        A = lz.random_su11(rng)
        assert np.allclose(lz.J @ A, A.conj() @ lz.J)
        D = A @ lz.J
        assert np.allclose(lz.J @ D, -D.conj() @ lz.J)


def test_half_turn_lift_of_e1_is_j():
    D = lz.half_turn_lift(lz.E1)
    assert np.allclose(D, lz.J) or np.allclose(D, -lz.J)
    assert np.allclose(lz.half_turn_lift(lz.E1, canonical=False), lz.J)


def _orthogonal_frame(u, rng):
    w1 = rng.normal(size=3)
    w1 -= lz.lorentz_dot(w1, u) * u
    w2 = lz.lorentz_cross(u, w1)
    return w1, w2


def test_half_turn_lift_properties(rng):
    for _ in range(30):
        u = rng.normal(size=3)
        u[2] *= 0.3
        if lz.classify(u) != "spacelike":
            continue
        u = lz.lorentz_normalize(u)
        D = lz.half_turn_lift(u)
        assert lz.is_su11_minus(D)
        assert np.allclose(D @ D, -np.eye(2))
        assert np.allclose(lz.spin_action(D, u), u, atol=1e-10)
        for w in _orthogonal_frame(u, rng):
            assert np.allclose(lz.spin_action(D, w), -w, atol=1e-9 * (1 + np.abs(w).max()))


def test_half_turn_lift_rejects_timelike():
    with pytest.raises(DomainError):
        lz.half_turn_lift([0, 0, 1])


@settings(max_examples=50)
@given(st.floats(0, 2 * np.pi), st.floats(-0.95, 0.95))
def test_align_spacelike(psi, height):
    u = lz.lorentz_normalize([np.cos(psi), np.sin(psi), height])
    S = lz.align_spacelike(u)
    assert lz.is_su11(S, 1e-9)
    assert np.allclose(lz.spin_action(S, u), lz.E1, atol=1e-9)
    # the oriented lift is S J S^-1
    assert np.allclose(S @ lz.J @ np.linalg.inv(S), lz.half_turn_lift(u, canonical=False),
                       atol=1e-9)


@settings(max_examples=50)
@given(st.floats(0, 2 * np.pi), st.floats(0, 0.95), st.sampled_from([-1.0, 1.0]))
def test_align_timelike(psi, r, sign):
    v = lz.lorentz_normalize([r * np.cos(psi), r * np.sin(psi), sign])
    S = lz.align_timelike(v)
    assert np.allclose(lz.spin_action(S, v), sign * lz.E3, atol=1e-9)


def test_lightlike_inputs_rejected():
    with pytest.raises(DomainError):
        lz.lorentz_normalize([1, 0, 1])
    with pytest.raises(DomainError):
        lz.spin_lift([1, 0, 1], 0.3)
