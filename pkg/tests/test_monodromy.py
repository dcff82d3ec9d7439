import mpmath as mp
import numpy as np
import pytest
from scipy.linalg import expm

from garnier import lorentz as lz
from garnier.errors import DomainError
from garnier.fuchsian import FuchsianSystem, LocalSeries, check_conditions, reality_check
from garnier.monodromy import (Arc, Line, _closed_form_residues, conjugator, continue_frame,
                               edge_reality_frames, infinity_frame, monodromy_of, rotation_lift,
                               solve_riemann_hilbert, standard_loops, target_monodromy)
from garnier.polygon import exterior_angles

from conftest import FIXTURES, TRIPLE, directions


def _by_imag(z):
    return z[np.argsort(z.imag)]


def _rotation_spectrum(theta):
    return np.exp([-1j * np.pi * theta, 1j * np.pi * theta])


def test_rotation_lift_quarter_values():
    assert np.allclose(rotation_lift(lz.E3, 0.5), [[1j, 0], [0, -1j]])
    assert np.allclose(rotation_lift(lz.E3, 0.0), np.eye(2))


def test_right_angle_vertex_has_quarter_monodromy():
    # u_1 = e1, u_2 = e2: vertex 2 has theta = 1/2 and v = e3; the loop
    # monodromy is the rotation by -pi about v
    u = np.array([[1, 0, 0], [0, 1, 0], [-1, -1, 0.4]])
    tgt = target_monodromy(u)
    assert tgt.theta[1] == pytest.approx(0.5)
    assert np.allclose(tgt.v[1], lz.E3)
    assert np.allclose(tgt.M[1], [[-1j, 0], [0, 1j]])


@pytest.mark.parametrize("n", [0, 1, 2])
def test_target_monodromy_structure(n):
    tgt = target_monodromy(FIXTURES[n])
    m = n + 3
    for i in range(m):
        assert lz.su11_residual(tgt.M[i]) < 1e-12
        assert lz.su11_minus_residual(tgt.D[i]) < 1e-12
        assert np.allclose(tgt.D[i] @ tgt.D[i], -np.eye(2), atol=1e-12)
        assert np.allclose(tgt.M[i], -tgt.D[i] @ tgt.D[i - 1], atol=1e-14)
        assert np.allclose(tgt.M[i], tgt.D[i] @ np.linalg.inv(tgt.D[i - 1]), atol=1e-12)
        assert np.allclose(_by_imag(np.linalg.eigvals(tgt.M[i])), _rotation_spectrum(tgt.theta[i]),
                           atol=1e-10)
        # D_i is the half-turn about u_i
        assert np.allclose(lz.spin_action(tgt.D[i], tgt.u[i]), tgt.u[i], atol=1e-12)
    assert tgt.product_residual < 1e-12


def test_target_rejects_bad_tuple():
    with pytest.raises(DomainError):
        target_monodromy([[1, 0, 0], [1, 0, 0], [0, 1, 0]])


def test_continuation_around_single_residue():
    A0 = np.array([[0.1, 0.3], [0.2, -0.1]], dtype=complex)
    sys = FuchsianSystem([0.0, 1.0], [A0, np.zeros((2, 2))], [0.5, 0.5, 0.5])
    Y0 = np.array([[1.0, 0.2], [0.1, 1.0]], dtype=complex)
    r = 0.5
    Y1 = continue_frame(sys, [Arc(0.0, r, 0.0, 2 * np.pi)], Y0)
    # Y = x^A0 C, so a positive turn multiplies on the left by exp(2 pi i A0)
    assert np.allclose(Y1, expm(2j * np.pi * A0) @ Y0, atol=1e-10)


def test_contractible_loop_is_trivial(solutions):
    sys = solutions(1).system
    Y0 = infinity_frame(sys)
    loop = [1j, 2 + 1j, 2 + 3j, -3 + 3j, -3 + 1j, 1j]
    Y1 = continue_frame(sys, loop, Y0)
    assert np.allclose(Y1, Y0, atol=1e-10 * np.abs(Y0).max())


def test_determinant_is_preserved(solutions):
    sys = solutions(2).system
    Y0 = infinity_frame(sys)
    for end in (-2.5 + 0.01j, 0.5 + 0.001j, 5 + 4j):
        Y1 = continue_frame(sys, [1j, end], Y0)
        # tr A = 0, so det Y is constant
        assert np.linalg.det(Y1) == pytest.approx(np.linalg.det(Y0), rel=1e-10)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_monodromy_group_relations(solutions, n):
    sol = solutions(n)
    res = monodromy_of(sol.system)
    assert res.product_residual < 1e-8
    for i, Nk in enumerate(res.N):
        assert np.allclose(_by_imag(np.linalg.eigvals(Nk)),
                           _rotation_spectrum(sol.system.theta[i]), atol=1e-8)


def _hypergeometric_monodromy(theta, x0):
    """Loop-around-1 monodromy on the Frobenius basis at 0, from connection data.

    The first component satisfies the Riemann equation with exponents
    -+theta_0/2 at 0, -+theta_1/2 at 1 and theta_inf/2, 1 - theta_inf/2 at
    infinity; pulling out x^(-theta_0/2) (x-1)^(-theta_1/2) leaves Gauss'
    equation with the parameters below.
    """
    mp.mp.dps = 30
    t0, t1, ti = (mp.mpf(float(v)) for v in theta)
    a = ti / 2 - (t0 + t1) / 2
    b = 1 - ti / 2 - (t0 + t1) / 2
    c = 1 - t0

    def pref(x):
        return mp.power(x, -t0 / 2) * mp.power(x - 1, -t1 / 2)

    basis0 = [lambda x: pref(x) * mp.power(x, t0) * mp.hyp2f1(a - c + 1, b - c + 1, 2 - c, x),
              lambda x: pref(x) * mp.hyp2f1(a, b, c, x)]
    basis1 = [lambda x: pref(x) * mp.hyp2f1(a, b, a + b - c + 1, 1 - x),
              lambda x: pref(x) * mp.power(1 - x, c - a - b)
              * mp.hyp2f1(c - a, c - b, c - a - b + 1, 1 - x)]
    x = mp.mpc(x0.real, x0.imag)
    W0 = mp.matrix([[f(x) for f in basis0], [mp.diff(f, x) for f in basis0]])
    W1 = mp.matrix([[f(x) for f in basis1], [mp.diff(f, x) for f in basis1]])
    C = W1 ** -1 * W0
    E = mp.diag([mp.exp(-1j * mp.pi * t1), mp.exp(1j * mp.pi * t1)])
    N = C ** -1 * E * C
    values = np.array([complex(f(x)) for f in basis0])
    return np.array(N.tolist(), dtype=complex), values


def test_hypergeometric_connection_oracle():
    theta = exterior_angles(TRIPLE).theta
    sys = FuchsianSystem([0.0, 1.0], _closed_form_residues(theta), theta)
    x0 = 0.35 + 0.3j
    loc = LocalSeries(sys, 0)
    assert loc.exponents.real[0] > loc.exponents.real[1]
    Phi, _ = loc.evaluate(x0)
    loop = standard_loops(sys, base=x0)[1]
    N = monodromy_of(sys, loops=[loop], frame=Phi).N[0]
    N_ref, values = _hypergeometric_monodromy(theta, x0)
    scale = Phi[0] / values
    N_ref = np.diag(1 / scale) @ N_ref @ np.diag(scale)
    assert np.allclose(N, N_ref, atol=1e-9)
    # the same scale factors hold at a second point reached by continuation
    x1 = -0.6 + 0.9j
    Y1 = continue_frame(sys, [x0, x1], Phi)
    _, values1 = _hypergeometric_monodromy(theta, x1)
    assert np.allclose(Y1[0] / values1, scale, rtol=1e-9)


def test_n0_solver_reproduces_closed_form(solutions):
    sol = solutions(0)
    theta = exterior_angles(TRIPLE).theta
    assert np.allclose(sol.system.A, _closed_form_residues(theta))
    res = monodromy_of(sol.system, frame=infinity_frame(sol.system) @ sol.C0)
    assert np.abs(res.N - sol.target.M).max() < 1e-7


@pytest.mark.parametrize("n", [1, 2])
def test_solver_output_round_trip(solutions, n):
    sol = solutions(n)
    res = monodromy_of(sol.system, frame=infinity_frame(sol.system) @ sol.C0)
    assert np.abs(res.N - sol.target.M).max() < 1e-7
    assert reality_check(sol.system) < 1e-8
    assert sol.report["trace_residual"] < 1e-9
    assert check_conditions(sol.system, sol.target.u).passes(1e-8)


def test_conjugator_recovers_known_matrix(rng):
    M = np.array([lz.random_su11(rng) for _ in range(3)])
    C = np.array([[1.0, 0.5j], [0.2, 2.0]])
    N = np.array([C @ Mk @ np.linalg.inv(C) for Mk in M])
    Ce, ratio = conjugator(N, M)
    assert ratio < 1e-12
    assert np.allclose(N @ Ce, Ce @ M, atol=1e-12)


def test_edge_frame_for_e1_is_identity():
    S = lz.align_spacelike(lz.E1)
    assert np.allclose(S, np.eye(2))


@pytest.mark.parametrize("n", [0, 1, 2])
def test_edges_are_real_in_their_frames(frames, n):
    frame = frames(n)
    t = frame.sys.t.real
    m = n + 3
    assert frame.S.shape == (m, 2, 2)
    bounds = [(t[k], t[k + 1]) for k in range(n + 1)] + [(t[-1], t[-1] + 6), (t[0] - 6, t[0])]
    for k, (lo, hi) in enumerate(bounds):
        xs = lo + (hi - lo) * np.linspace(0.1, 0.9, 5)
        G, H, _, _ = frame.data(xs + 0j)
        gh = np.stack([G, H], axis=1) @ frame.S[k]
        assert np.abs(gh.imag).max() < 1e-7 * np.abs(gh).max()


def test_gauge_is_recomputable(solutions):
    sol = solutions(1)
    gauge = edge_reality_frames(sol.system, sol.C0, sol.target)
    assert gauge.edge_residual.max() < 1e-7
    # the normalization is a projection: applying it again returns the same C0 up to sign
    assert min(np.abs(gauge.C0 - sol.C0).max(), np.abs(gauge.C0 + sol.C0).max()) < 1e-9


def test_solver_rejects_bad_input():
    with pytest.raises(DomainError):
        solve_riemann_hilbert([[1, 0, 0], [-0.5, np.sqrt(3) / 2, 0], [-0.5, -np.sqrt(3) / 2, 0]])
    with pytest.raises(DomainError):
        solve_riemann_hilbert(FIXTURES[1], t0=[0.5])
    with pytest.raises(DomainError):
        solve_riemann_hilbert(FIXTURES[2], t0=[-1.0, -2.0])


def test_segment_helpers():
    line = Line(0j, 2 + 2j)
    assert line.point(0.5) == 1 + 1j
    arc = Arc(1.0, 0.5, 0.0, np.pi)
    assert arc.end == pytest.approx(0.5)
    assert arc.reversed().point(0.0) == pytest.approx(0.5)


def test_solver_is_deterministic():
    D = directions([0, 107, 203, 272], [-0.21, 0.1, 0.01, 0.1])
    a = solve_riemann_hilbert(D, seed=3)
    b = solve_riemann_hilbert(D, seed=3)
    assert np.array_equal(a.system.A, b.system.A)
