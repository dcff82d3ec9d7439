import json

import numpy as np
import pytest

from garnier import lorentz as lz
from garnier.errors import DomainError
from garnier.fuchsian import offdiagonal_zeros
from garnier.monodromy import Line, transport
from garnier.polygon import ratio_coordinates
from garnier.ratio import length_ratios
from garnier.weierstrass import (edge_local_expansion, evaluate_frame, evaluate_maxface,
                                 gauss_map, gauss_map_safe, grid_pde_check,
                                 isometry_equivariance_check, mehrstellen_laplacian,
                                 metric_and_hopf, sample_mesh, singular_flags, vertex_images)


class ConstantFrame:
    """Synthetic data ``G = 1, H = 0``, a spacelike plane."""

    base = 0j
    X0 = np.array([0.5, -1.0, 2.0])

    def data(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=complex))
        one, zero = np.ones_like(xs), np.zeros_like(xs)
        return one, zero, zero, zero

    def integrals(self, xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=complex))
        return np.stack([xs - self.base, 0 * xs, 0 * xs], axis=1)


def test_constant_data_give_a_plane():
    fr = ConstantFrame()
    x = np.array([0.3 + 0.2j, -1.0 + 2.0j])
    X = evaluate_maxface(fr, x)
    expected = fr.X0 + np.column_stack([-x.real, -x.imag, 0 * x.real])
    assert np.allclose(X, expected)
    factor, hopf = metric_and_hopf(fr, 0.1 + 1j)
    assert factor == 1.0 and hopf == 0


def test_two_routes_agree(frames):
    frame = frames(1)
    sys = frame.sys
    # a point served by the local series at t_1 against direct continuation
    x = sys.t[0] + 0.3 * frame.local[0].radius * np.exp(0.8j)
    Y_local, _ = frame.frames([x])
    Y_ode = transport(sys, [Line(frame.base, x)], frame.base_frame[None]).Y
    assert np.allclose(Y_local, Y_ode, rtol=1e-9, atol=1e-9 * np.abs(Y_ode).max())
    # a point far out, series at infinity against continuation
    x = 3.0 * frame.far * np.exp(1.1j)
    Y_far, _ = frame.frames([x])
    Y_ode = transport(sys, [Line(frame.base, x)], frame.base_frame[None]).Y
    assert np.allclose(Y_far, Y_ode, atol=1e-9 * np.abs(Y_ode).max())


def test_anchor_values_match_continuation(frames):
    frame = frames(2)
    Y, _ = frame.frames(frame.anchors)
    Y_ode = transport(frame.sys, [Line(frame.base, a) for a in frame.anchors],
                      np.broadcast_to(frame.base_frame, (len(frame.anchors), 2, 2))).Y
    assert np.allclose(Y, Y_ode, atol=1e-9 * np.abs(Y_ode).max())


def test_scalar_evaluation_returns_complex(frames):
    G, H, dG, dH = evaluate_frame(frames(0), 0.2 + 0.5j)
    assert all(isinstance(v, complex) for v in (G, H, dG, dH))


def test_hopf_coefficient_is_a12_times_det(frames):
    frame = frames(2)
    x = np.array([0.4 + 0.3j, -1.5 + 0.2j, 2.0 + 3.0j])
    _, hopf = metric_and_hopf(frame, x)
    Y, _ = frame.frames(x)
    a12 = frame.sys.coefficient(x)[:, 0, 1]
    assert np.allclose(hopf, 1j * a12 * np.linalg.det(Y), rtol=1e-9)
    # so the Hopf differential vanishes at the apparent singular points
    lam = offdiagonal_zeros(frame.sys)
    _, h_lam = metric_and_hopf(frame, lam.real + 0j)
    _, h_ref = metric_and_hopf(frame, lam.real + 0.3j)
    assert np.all(np.abs(h_lam) < 1e-9 * np.abs(h_ref))


def test_additivity(frames):
    frame = frames(1)
    x1, x2 = -0.7 + 0.9j, 2.3 + 0.4j
    X1 = evaluate_maxface(frame, x1)
    direct = evaluate_maxface(frame, x2)
    via = evaluate_maxface(frame, x2, base=x1, X0=X1)
    assert np.allclose(direct, via, atol=1e-10 * max(1, np.abs(direct).max()))


@pytest.mark.parametrize("n", [0, 1, 2])
def test_surface_pde_residuals(frames, n):
    rep = grid_pde_check(frames(n), -0.4 + 0.8j, 0.25, count=30)
    assert rep.passes(1e-6)
    assert rep.normal_tangent < 1e-7
    assert rep.singular == 0


def test_mehrstellen_is_exact_on_harmonic_polynomials():
    h = 0.1
    o = np.arange(-3, 4) * h
    z = o[None, :] + 1j * o[:, None]
    X = (z ** 4).real
    assert np.abs(mehrstellen_laplacian(X, h)).max() < 1e-9


def test_grid_rejects_real_axis(frames):
    with pytest.raises(DomainError):
        grid_pde_check(frames(0), 0.0 + 0.1j, 1.0, count=5)


def test_gauss_map_charts_agree(rng):
    for _ in range(20):
        G, H = rng.normal(size=2) + 1j * rng.normal(size=2)
        if abs(abs(G) - abs(H)) < 0.05:
            continue
        _, N = gauss_map_safe(np.array([G]), np.array([H]))
        assert np.allclose(N[0], lz.stereo_project(H / G), atol=1e-12 * np.abs(N).max())
        assert lz.lorentz_dot(N[0], N[0]) == pytest.approx(-1.0, abs=1e-10)


def test_gauss_map_raises_on_singular_set():
    class Singular(ConstantFrame):
        def data(self, xs):
            one = np.ones(np.size(xs), dtype=complex)
            return one, one, 0 * one, 0 * one

    with pytest.raises(DomainError):
        gauss_map(Singular(), 1j)


def test_normal_is_orthogonal_to_tangents(frames):
    frame = frames(2)
    x = np.array([0.5 + 0.6j, -1.3 + 0.25j])
    _, N = gauss_map(frame, x)
    h = 1e-4
    Xu = (evaluate_maxface(frame, x + h) - evaluate_maxface(frame, x - h)) / (2 * h)
    Xv = (evaluate_maxface(frame, x + 1j * h) - evaluate_maxface(frame, x - 1j * h)) / (2 * h)
    for k in range(2):
        scale = np.sqrt(lz.lorentz_dot(Xu[k], Xu[k]))
        assert abs(lz.lorentz_dot(N[k], Xu[k])) < 1e-7 * scale
        assert abs(lz.lorentz_dot(N[k], Xv[k])) < 1e-7 * scale


def test_conformal_factor_vanishes_on_singular_flags():
    G = np.array([1.0, 2.0, 1.0 + 1e-9])
    H = np.array([1.0j, 1.0, 1.0])
    flags = singular_flags(G, H)
    assert flags.tolist() == [True, False, True]


@pytest.mark.parametrize("n", [0, 1, 2])
def test_vertex_exponents(frames, n):
    frame = frames(n)
    for i in range(n + 2):
        loc = edge_local_expansion(frame, i)
        theta = frame.sys.theta[i]
        assert not loc.branch_point
        assert sorted(loc.slopes) == pytest.approx([-theta / 2, theta / 2], abs=1e-3)
        assert sum(loc.slopes) == pytest.approx(0.0, abs=1e-3)
        assert loc.slope_G == pytest.approx(-theta / 2, abs=1e-3)


@pytest.mark.parametrize("n", [0, 1, 2])
def test_helicoidal_end(frames, n):
    loc = edge_local_expansion(frames(n), n + 2)
    assert abs(loc.end_constant) > 1e-3
    assert loc.fit_residual < 1e-3


@pytest.mark.parametrize("n", [1, 2])
def test_mesh_boundary_and_ratios(frames, n, tmp_path):
    frame = frames(n)
    mesh = sample_mesh(frame, grid=(24, 12), R_max=20.0)
    rep = mesh.report["boundary"]
    assert max(rep["collinearity"]) < 1e-6
    assert rep["angle_error"] < 1e-4
    assert np.allclose(ratio_coordinates(mesh.vertices), length_ratios(frame), rtol=1e-4)
    assert np.allclose(mesh.vertices, vertex_images(frame))
    mesh.write(str(tmp_path / "m"))
    obj = (tmp_path / "m.obj").read_text().splitlines()
    assert sum(1 for line in obj if line.startswith("v ")) == len(mesh.points)
    assert sum(1 for line in obj if line.startswith("f ")) == len(mesh.faces)
    ply = (tmp_path / "m.ply").read_text().splitlines()
    assert ply[0] == "ply" and f"element vertex {len(mesh.points)}" in ply
    doc = json.loads((tmp_path / "m.boundary.json").read_text())
    assert doc["schema"] == "garnier.boundary/1"
    assert len(doc["vertices"]) == n + 2
    assert np.isfinite(mesh.points).all()


def test_equivariance(frames, rng):
    frame = frames(1)
    assert isometry_equivariance_check(frame, np.eye(2)) < 1e-14
    phi = 0.7
    R = np.diag([np.exp(0.5j * phi), np.exp(-0.5j * phi)])
    assert isometry_equivariance_check(frame, R) < 1e-9
    assert isometry_equivariance_check(frame, lz.J) < 1e-9
    assert isometry_equivariance_check(frame, lz.random_su11(rng, 0.5)) < 1e-9


def test_lower_half_plane_is_rejected(frames):
    with pytest.raises(DomainError):
        frames(0).data([0.3 - 0.5j])
