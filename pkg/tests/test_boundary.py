import numpy as np
import pytest

import mfprop as mf
from mfprop import boundary as bd
from mfprop import simulator as sim
from mfprop.errors import ConvergenceError, DegenerateGeometryError

TANH = mf.builtin("tanh")
LINEAR = mf.builtin("linear")
CHAOTIC = mf.EnsembleParams(4.0, 0.3, TANH)


def sphere_field(r, dim):
    def value_and_grad(x):
        return float(x @ x - r * r), 2.0 * x

    return bd.ScalarField(dim=dim, layer=-1, value_and_grad=value_and_grad, tol_scale=1.0)


def small_net(params=CHAOTIC, widths=(12, 12, 12, 12), seed=0):
    return sim.sample_network(widths, params, seed=seed)


def test_readout_requires_nonzero_beta():
    with pytest.raises(ValueError):
        bd.LinearReadout(beta=np.zeros(4))


def test_gradient_of_single_linear_layer():
    net = small_net(mf.EnsembleParams(1.1, 0.2, LINEAR), widths=(8, 8), seed=1)
    beta = np.arange(1.0, 9.0)
    readout = bd.LinearReadout(beta=beta, beta0=0.4)
    x = np.linspace(-1, 1, 8)
    value, grad = bd.readout_value_and_gradient(net, readout, 0, x)
    expected = beta @ (net.weights[0] @ x + net.biases[0]) - 0.4
    assert value == pytest.approx(expected, abs=1e-12)
    assert np.allclose(grad, net.weights[0].T @ beta, atol=1e-12)


def test_gradient_matches_finite_differences_in_random_directions():
    net = small_net(seed=2)
    readout = bd.LinearReadout(beta=np.random.default_rng(3).normal(size=12))
    field = bd.readout_field(net, readout, 0)
    rng = np.random.default_rng(4)
    x = rng.normal(size=12)
    value, grad = field.value_and_grad(x)
    step = 1e-5
    for _ in range(20):
        d = rng.normal(size=12)
        d /= np.linalg.norm(d)
        vp, _ = field.value_and_grad(x + step * d)
        vm, _ = field.value_and_grad(x - step * d)
        fd = (vp - vm) / (2 * step)
        assert fd == pytest.approx(float(grad @ d), rel=1e-5, abs=1e-8)


def test_gradient_dimension_checks():
    net = small_net(seed=5)
    readout = bd.LinearReadout(beta=np.ones(12))
    with pytest.raises(ValueError):
        bd.readout_value_and_gradient(net, readout, 0, np.ones(5))
    with pytest.raises(ValueError):
        bd.readout_value_and_gradient(net, readout, 9, np.ones(12))


def test_boundary_point_on_readout_hyperplane():
    # suffix at the last layer: G is affine, the solve lands on the plane
    net = small_net(seed=6)
    beta = np.random.default_rng(7).normal(size=12)
    readout = bd.LinearReadout(beta=beta, beta0=0.7)
    field = bd.readout_field(net, readout, net.depth)
    x_init = np.random.default_rng(8).normal(size=12)
    point = bd.find_boundary_point(field, x_init)
    assert point.residual < 1e-8 * np.linalg.norm(beta)
    projection = x_init - ((beta @ x_init - 0.7) / (beta @ beta)) * beta
    assert np.allclose(point.x_star, projection, atol=1e-8)


def test_sphere_level_set_hook():
    field = sphere_field(1.7, 9)
    point = bd.find_boundary_point(field, np.random.default_rng(9).normal(size=9))
    assert np.linalg.norm(point.x_star) == pytest.approx(1.7, abs=1e-6)


def test_convergence_study_width_100():
    net = sim.sample_network((100,) * 5, CHAOTIC, seed=10)
    readout = bd.LinearReadout(beta=np.random.default_rng(11).normal(size=100))
    field = bd.readout_field(net, readout, 0)
    rng = np.random.default_rng(12)
    converged = 0
    for _ in range(50):
        try:
            bd.find_boundary_point(field, rng.normal(size=100))
            converged += 1
        except (ConvergenceError, DegenerateGeometryError):
            pass
    assert converged >= 45


def test_saddle_flagged():
    field = sphere_field(1.0, 4)
    with pytest.raises(DegenerateGeometryError, match="saddle|gradient"):
        bd.find_boundary_point(field, np.zeros(4))


def test_sphere_principal_curvatures():
    for r in (0.5, 2.0):
        field = sphere_field(r, 20)
        point = bd.find_boundary_point(field, np.random.default_rng(13).normal(size=20))
        report = bd.principal_curvatures(field, point)
        assert report.kappas.shape == (19,)
        assert np.allclose(report.kappas, 1.0 / r, atol=1e-4)
        assert report.normal_alignment > 0.99
        assert report.hessian_asymmetry < 1e-4


def test_linear_network_has_flat_boundary():
    net = small_net(mf.EnsembleParams(1.2, 0.3, LINEAR), widths=(15, 15, 15), seed=14)
    readout = bd.LinearReadout(beta=np.random.default_rng(15).normal(size=15))
    field = bd.readout_field(net, readout, 0)
    point = bd.find_boundary_point(field, np.random.default_rng(16).normal(size=15))
    report = bd.principal_curvatures(field, point)
    assert np.all(np.abs(report.kappas) <= 1e-8)


def test_curvatures_invariant_under_readout_scaling():
    net = small_net(seed=17)
    rng = np.random.default_rng(18)
    beta = rng.normal(size=12)
    x_init = rng.normal(size=12)
    kappas = {}
    for c in (1.0, 13.7):
        readout = bd.LinearReadout(beta=c * beta, beta0=c * 0.2)
        field = bd.readout_field(net, readout, 0)
        point = bd.find_boundary_point(field, x_init)
        kappas[c] = bd.principal_curvatures(field, point).kappas
    assert np.allclose(kappas[1.0], kappas[13.7], atol=1e-8)


def test_hessian_symmetry_before_symmetrization():
    net = small_net(seed=19)
    readout = bd.LinearReadout(beta=np.random.default_rng(20).normal(size=12))
    field = bd.readout_field(net, readout, 1)
    point = bd.find_boundary_point(field, np.random.default_rng(21).normal(size=12))
    report = bd.principal_curvatures(field, point)
    assert report.hessian_asymmetry < 1e-4
    assert abs(report.removed_eigenvalue) <= 1e-6 * np.max(np.abs(report.kappas)) + 1e-12


def test_eigenvalues_match_known_spectrum_oracle():
    rng = np.random.default_rng(22)
    spectrum = np.sort(rng.normal(size=20))[::-1]
    q_mat, _ = np.linalg.qr(rng.normal(size=(20, 20)))
    matrix = q_mat @ np.diag(spectrum) @ q_mat.T
    eigs = np.sort(np.linalg.eigvalsh(matrix))[::-1]
    assert np.allclose(eigs, spectrum, atol=1e-10)


def test_curvature_point_must_be_on_boundary():
    field = sphere_field(1.0, 6)
    off = bd.BoundaryPoint(layer=-1, x_star=np.full(6, 1.0), residual=5.0, grad_norm=1.0)
    with pytest.raises(ValueError, match="not on the boundary"):
        bd.principal_curvatures(field, off)


def test_curvature_vs_depth_linear_net_all_zero():
    params = mf.EnsembleParams(1.1, 0.2, LINEAR)
    net = sim.sample_network((10, 10, 10), params, seed=23)
    readout = bd.LinearReadout(beta=np.random.default_rng(24).normal(size=10))
    summaries = bd.curvature_vs_depth(net, readout, n_points=3, seed=25)
    assert [s.layer for s in summaries] == [1, 0]
    for s in summaries:
        assert s.n_converged == 3
        assert np.all(np.abs(s.mean_top) <= 1e-8)
        assert np.all(np.abs(s.mean_bottom) <= 1e-8)


def test_curvature_vs_depth_zero_weights_reports_missing_layers():
    # sigma_w = 0 makes G constant in x: no boundary point exists and every
    # search fails with a vanishing gradient; layers are marked missing
    params = mf.EnsembleParams(0.0, 0.3, TANH)
    net = sim.sample_network((8, 8, 8), params, seed=26)
    readout = bd.LinearReadout(beta=np.ones(8))
    summaries = bd.curvature_vs_depth(net, readout, n_points=2, seed=27)
    for s in summaries:
        assert s.n_converged == 0
        assert np.all(np.isnan(s.mean_top))
