import numpy as np
import pandas as pd
import pytest

from sde_sim import (BrownianPath, brownian_path, build_coefficients, dirichlet_modes,
                     dump_trajectory, gradient, mc_expectation, mode_ensemble, norms,
                     normal_trace, operators, self_convergence, simulate_forward,
                     weak_form_residual, without_sources)
from sselab_utilities import BlowUpError, ConfigError, SselabError


def test_laplacian_eigenpair(mesh_1d, first_mode):
    lap, grads = operators(mesh_1d)
    assert abs(lap - lap.T).max() == 0
    h = mesh_1d.h[0]
    eigenvalue = -4/h**2*np.sin(np.pi*h/2)**2
    assert np.allclose(lap @ first_mode, eigenvalue*first_mode, atol = 1e-10)
    assert len(grads) == 1


def test_modes_orthonormal(mesh_2d):
    modes = np.array(dirichlet_modes(mesh_2d, 5))
    gram = modes.conj() @ modes.T*mesh_2d.cellvol
    assert np.allclose(gram, np.eye(5), atol = 1e-12)


def test_mode_ensemble_seeded(mesh_1d):
    a = mode_ensemble(mesh_1d, 4, 3, seed = 7)
    b = mode_ensemble(mesh_1d, 4, 3, seed = 7)
    c = mode_ensemble(mesh_1d, 4, 3, seed = 8)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    assert not np.array_equal(a[0], c[0])


def test_brownian_paths():
    a = brownian_path(11, 3, 0.01, 100)
    assert np.array_equal(a.increments, brownian_path(11, 3, 0.01, 100).increments)
    assert not np.array_equal(a.increments, brownian_path(11, 4, 0.01, 100).increments)

    coarse = a.coarsen(4)
    assert coarse.steps == 25 and coarse.dt == pytest.approx(0.04)
    assert np.allclose(coarse.increments, a.increments.reshape(25, 4).sum(axis = 1))
    with pytest.raises(SselabError):
        a.coarsen(3)


def test_free_flow_conservation():
    from geometry import Domain, build_mesh
    mesh = build_mesh(Domain((0.0,), (1.0,), (-0.5,)), 32)
    coeffs = build_coefficients(mesh, 1.0)
    y0 = dirichlet_modes(mesh, 2)[1] + 0.5j*dirichlet_modes(mesh, 1)[0]
    trajectory = simulate_forward(mesh, coeffs, y0, brownian_path(0, 0, 1/64, 64))

    l2, h1 = norms(mesh, trajectory.states)
    assert np.max(np.abs(l2 - l2[0]))/l2[0] <= 1e-10
    assert np.max(np.abs(h1 - h1[0]))/h1[0] <= 1e-10


def test_ito_growth(mesh_1d, first_mode):
    coeffs = build_coefficients(mesh_1d, 1.0, a3 = 'const:0.5')
    steps = 256

    def job(seed, k):
        trajectory = simulate_forward(mesh_1d, coeffs, first_mode,
                                      brownian_path(seed, k, 1/steps, steps))
        return [norms(mesh_1d, trajectory.final)[0]]

    mean, se = mc_expectation(job, 400, 99)
    expected = np.exp(0.25)
    assert abs(mean[0] - expected) <= 3*se[0] + 0.01*expected


def test_weak_form(mesh_1d, first_mode):
    coeffs = build_coefficients(mesh_1d, 1.0, b1 = 'bump:0.3', a2 = 'const:0.2,0.1',
                                a3 = 'const:0.5', f = 'mode:1,0.5', g = 'const:0.2')
    path = brownian_path(5, 0, 1/64, 64)
    trajectory = simulate_forward(mesh_1d, coeffs, first_mode, path)
    eta = dirichlet_modes(mesh_1d, 3)[2]
    assert weak_form_residual(mesh_1d, coeffs, trajectory, path, eta) <= 1e-10


def test_blow_up(mesh_1d, free_coeffs, first_mode):
    y0 = first_mode.copy()
    y0[3] = np.nan
    with pytest.raises(BlowUpError) as err:
        simulate_forward(mesh_1d, free_coeffs, y0, brownian_path(0, 0, 1/8, 8))
    assert err.value.step == 0


def test_path_must_cover_horizon(mesh_1d, free_coeffs, first_mode):
    with pytest.raises(SselabError):
        simulate_forward(mesh_1d, free_coeffs, first_mode, brownian_path(0, 0, 1/8, 4))


def test_normal_trace_of_mode():
    from geometry import Domain, build_mesh
    mesh = build_mesh(Domain((0.0,), (1.0,), (-0.5,)), 64)
    mode = dirichlet_modes(mesh, 1)[0]
    trace = normal_trace(mesh, mode, nodes = 'all')
    # sqrt(2) sin(pi x): outward derivative -sqrt(2) pi on both ends
    assert np.allclose(trace.values[0].real, -np.sqrt(2)*np.pi, rtol = 2e-3)
    observed = normal_trace(mesh, mode)
    assert observed.nodes.tolist() == [64]


def test_normal_trace_second_order():
    from geometry import Domain, build_mesh
    errors = []
    for n in (16, 32):
        mesh = build_mesh(Domain((0.0,), (1.0,), (-0.5,)), n)
        y = np.sin(np.pi*mesh.interior_points[:, 0])
        trace = normal_trace(mesh, y, nodes = 'all')
        errors.append(np.max(np.abs(trace.values[0] + np.pi)))
    assert 3.5 <= errors[0]/errors[1] <= 4.5


def test_norms_second_order():
    from geometry import Domain, build_mesh
    l2_errors, h1_errors, sine_errors = [], [], []
    for n in (16, 32):
        mesh = build_mesh(Domain((0.0,), (1.0,), (-0.5,)), n)
        x = mesh.interior_points[:, 0]
        l2, h1 = norms(mesh, x*(1 - x))
        l2_errors.append(abs(l2 - 1/30))
        h1_errors.append(abs(h1 - (1/30 + 1/3)))
        l2, h1 = norms(mesh, np.sin(np.pi*x))
        sine_errors.append(abs(h1 - l2 - np.pi**2/2))
    # the L2 sum is a trapezoid rule of a function with vanishing end slopes
    assert l2_errors[0]/l2_errors[1] >= 3.5
    assert 3.5 <= h1_errors[0]/h1_errors[1] <= 4.5
    assert 3.5 <= sine_errors[0]/sine_errors[1] <= 4.5


def test_mc_expectation_increment_variance():
    dt = 0.02

    def job(seed, k):
        path = brownian_path(seed, k, dt, 50)
        return [np.mean(path.increments**2)/dt]

    mean, se = mc_expectation(job, 400, 5)
    assert se[0] > 0
    assert abs(mean[0] - 1) <= max(4*se[0], 0.05)


def test_threads_do_not_change_results(mesh_1d, first_mode):
    coeffs = build_coefficients(mesh_1d, 1.0, a3 = 'const:0.5')

    def job(seed, k):
        trajectory = simulate_forward(mesh_1d, coeffs, first_mode,
                                      brownian_path(seed, k, 1/32, 32))
        return [norms(mesh_1d, trajectory.final)[1]]

    serial = mc_expectation(job, 12, 3, threads = 1)
    parallel = mc_expectation(job, 12, 3, threads = 3)
    assert np.array_equal(serial[0], parallel[0])
    assert np.array_equal(serial[1], parallel[1])


def test_profiles(mesh_1d):
    with pytest.raises(ConfigError):
        build_coefficients(mesh_1d, 1.0, a3 = 'wave:1')
    with pytest.raises(ConfigError):
        build_coefficients(mesh_1d, 1.0, g = 'const:1,1', g_real = True)
    coeffs = build_coefficients(mesh_1d, 1.0, g = 'const:1,1')
    assert not coeffs.g_real
    assert build_coefficients(mesh_1d, 1.0).is_free
    assert build_coefficients(mesh_1d, 1.0).r1 == pytest.approx(1.0)


def test_without_sources(mesh_1d):
    coeffs = build_coefficients(mesh_1d, 1.0, a3 = 'const:0.5', f = 'mode:1', g = 'mode:2')
    free = without_sources(coeffs)
    assert np.all(free.f(0.5) == 0) and np.all(free.g(0.5) == 0)
    assert np.array_equal(free.a3, coeffs.a3)


def test_gradient_shape(mesh_2d):
    values = np.ones((3, mesh_2d.size))
    assert gradient(mesh_2d, values).shape == (3, mesh_2d.size, 2)


def test_self_convergence(mesh_1d, first_mode):
    coeffs = build_coefficients(mesh_1d, 1.0, a3 = 'const:0.5')
    errors, orders = self_convergence(mesh_1d, coeffs, first_mode, 1, 32, levels = 3)
    assert len(errors) == 2 and len(orders) == 1
    assert np.all(np.isfinite(errors))


def test_dump_trajectory(tmp_path, mesh_1d, free_coeffs, first_mode):
    trajectory = simulate_forward(mesh_1d, free_coeffs, first_mode, brownian_path(0, 0, 1/4, 4))
    file = tmp_path/'trajectory.csv'
    dump_trajectory(mesh_1d, trajectory, file)
    frame = pd.read_csv(file)
    assert list(frame.columns) == ['t', 'node_index', 're', 'im']
    assert len(frame) == 5*mesh_1d.size
