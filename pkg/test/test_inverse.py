import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from geometry import Domain, build_mesh
from inverse import (NonlinearityPair, TraceMap, adjoint_test, gradient, gradient_check,
                     linear_difference_energy, load_record, objective, observation_map,
                     reconstruct, record_observation, save_record, solve_semilinear,
                     stability_scan)
from sde_sim import brownian_path, build_coefficients, dirichlet_modes, simulate_forward
from sselab_utilities import ConfigError, SselabError


@pytest.fixture(scope = 'module')
def mesh_32():
    return build_mesh(Domain((0.0,), (1.0,), (-0.5,)), 32)


@pytest.fixture(scope = 'module')
def z_true(mesh_32):
    modes = dirichlet_modes(mesh_32, 3)
    return modes[0] + (0.5 - 0.3j)*modes[1] + 0.25j*modes[2]


@pytest.mark.parametrize('profile', ['lin', 'sat', 'zero:1', 'linear', 'sat:1,2'])
def test_bad_nonlinearity(profile):
    with pytest.raises(ConfigError):
        NonlinearityPair(F1 = profile)


def test_nonlinearity_values():
    nl = NonlinearityPair(F1 = 'linear:2', F2 = 'sat:3')
    r = np.array([0.0, 1.0, 3.0])
    assert np.allclose(nl.f1(r), [0, 2, 6])
    assert nl.f1(r).dtype == complex
    assert np.allclose(nl.f2(r), [0, 1.5, 2.25])
    assert nl.lipschitz == 3
    assert NonlinearityPair().is_zero and not nl.is_zero


@settings(max_examples = 25, deadline = None)
@given(c1 = st.floats(-5, 5), c2 = st.floats(0.1, 5), seed = st.integers(0, 2**16))
def test_lipschitz_bound(c1, c2, seed):
    nl = NonlinearityPair(F1 = 'sat:%r' % c1, F2 = 'linear:%r' % c2)
    assert nl.spot_check(200, seed) <= 1 + 1e-9


def test_zero_nonlinearity_is_linear_solver(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0, a3 = 'const:0.5', f = 'mode:1')
    path = brownian_path(3, 0, 1/64, 64)
    a = solve_semilinear(mesh_32, coeffs, NonlinearityPair(), z_true, path)
    b = simulate_forward(mesh_32, coeffs, z_true, path)
    assert np.array_equal(a.states, b.states)


def test_zero_stays_zero(mesh_32):
    coeffs = build_coefficients(mesh_32, 1.0, a3 = 'const:0.5')
    nl = NonlinearityPair(F1 = 'sat:1', F2 = 'linear:0.5')
    trajectory = solve_semilinear(mesh_32, coeffs, nl, np.zeros(mesh_32.size),
                                  brownian_path(3, 0, 1/64, 64))
    assert not np.any(trajectory.states)


def test_observation_map_linear(mesh_32):
    coeffs = build_coefficients(mesh_32, 1.0, a3 = 'const:0.5')
    path = brownian_path(3, 1, 1/64, 64)
    u, v = dirichlet_modes(mesh_32, 2)
    trace = lambda z: observation_map(mesh_32, coeffs, NonlinearityPair(), z, path).values
    combined = trace(2*u - 1j*v)
    assert np.allclose(combined, 2*trace(u) - 1j*trace(v), rtol = 1e-12, atol = 1e-12)


def test_stability_identical_pair(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0)
    report = stability_scan(mesh_32, coeffs, NonlinearityPair(F1 = 'sat:1'),
                            [(z_true, z_true)], 2, 3, 32)
    assert report.ratios[0] == 0
    assert report.max_ratio == 0


def test_stability_reduces_to_linear_problem(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0, a3 = 'const:0.5', f = 'mode:1', g = 'const:0.2')
    z1 = dirichlet_modes(mesh_32, 4)[3]
    report = stability_scan(mesh_32, coeffs, NonlinearityPair(), [(z_true, z1)], 8, 3, 64)
    energy = linear_difference_energy(mesh_32, coeffs, z_true, z1, 8, 3, 64)
    assert report.trace_energies[0] == pytest.approx(energy, rel = 1e-10)


def test_stability_free_flow_backward(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0)
    z1 = dirichlet_modes(mesh_32, 4)[3]
    report = stability_scan(mesh_32, coeffs, NonlinearityPair(), [(z_true, z1)], 2, 3, 64)
    assert report.backward_ratio == pytest.approx(1.0, rel = 1e-10)
    assert 0 < report.max_ratio < np.inf


@pytest.fixture(scope = 'module')
def noisy_map(mesh_32):
    coeffs = build_coefficients(mesh_32, 1.0, a3 = 'const:0.5', a2 = 'const:0.2,0.1')
    return TraceMap(mesh_32, coeffs, brownian_path(9, 2, 1/64, 64))


def test_trace_map_matches_forward_solver(mesh_32, z_true, noisy_map):
    coeffs = build_coefficients(mesh_32, 1.0, a3 = 'const:0.5', a2 = 'const:0.2,0.1')
    expected = observation_map(mesh_32, coeffs, NonlinearityPair(), z_true, noisy_map.path)
    assert np.allclose(noisy_map.forward(z_true), expected.values, rtol = 1e-12, atol = 1e-12)


def test_adjoint(noisy_map):
    assert adjoint_test(noisy_map, seed = 1) <= 1e-10


def test_gradient(noisy_map, z_true):
    data = noisy_map.forward(z_true)
    assert gradient_check(noisy_map, data, 1e-3, seed = 2) <= 1e-5
    # zero at the exact data without penalty
    assert np.allclose(gradient(noisy_map, data, 0.0, z_true), 0, atol = 1e-10)
    J, misfit, penalty = objective(noisy_map, data, 0.0, z_true)
    assert J == misfit == pytest.approx(0, abs = 1e-20) and penalty == 0


def test_reconstruct_zero_data(mesh_32):
    coeffs = build_coefficients(mesh_32, 1.0)
    record = record_observation(mesh_32, coeffs, np.zeros(mesh_32.size), 3, 0, 32)
    result = reconstruct(mesh_32, coeffs, record, 1e-6)
    assert result.converged
    assert not np.any(result.z0)
    assert len(result.iterations) == 1


def test_reconstruct_noise_free(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0)
    record = record_observation(mesh_32, coeffs, z_true, 3, 0, 128)
    result = reconstruct(mesh_32, coeffs, record, 1e-8)

    error = np.linalg.norm(result.z0 - z_true)/np.linalg.norm(z_true)
    assert error <= 0.05
    J = result.iterations.J.to_numpy()
    assert np.all(np.diff(J) <= 1e-12*J[0])


def test_reconstruct_removes_sources(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0, f = 'mode:1', g = 'const:0.5')
    record = record_observation(mesh_32, coeffs, z_true, 3, 0, 128)
    result = reconstruct(mesh_32, coeffs, record, 1e-8)
    assert np.linalg.norm(result.z0 - z_true)/np.linalg.norm(z_true) <= 0.05


def test_tikhonov_monotone(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0, a3 = 'const:0.5')
    record = record_observation(mesh_32, coeffs, z_true, 3, 0, 64)
    results = [reconstruct(mesh_32, coeffs, record, alpha) for alpha in (1e-4, 1e-2, 1.0)]

    misfits = [r.misfit for r in results]
    sizes = [np.linalg.norm(r.z0) for r in results]
    assert misfits[0] < misfits[1] < misfits[2]
    assert sizes[0] > sizes[1] > sizes[2]


def test_reconstruct_rejects_bad_alpha(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0)
    record = record_observation(mesh_32, coeffs, z_true, 3, 0, 16)
    with pytest.raises(SselabError):
        reconstruct(mesh_32, coeffs, record, 0.0)


def test_record_roundtrip(mesh_32, z_true, tmp_path):
    coeffs = build_coefficients(mesh_32, 1.0, a3 = 'const:0.5')
    record = record_observation(mesh_32, coeffs, z_true, 5, 2, 32, fingerprint = 'abc')
    prefix = str(tmp_path/'observation')
    save_record(record, prefix)

    loaded = load_record(mesh_32, prefix)
    assert loaded.fingerprint == 'abc'
    assert (loaded.base_seed, loaded.path_index) == (5, 2)
    assert np.array_equal(loaded.trace.values, record.trace.values)
    assert np.array_equal(loaded.trace.times, record.trace.times)
    assert np.array_equal(loaded.trace.nodes, record.trace.nodes)
    assert np.array_equal(loaded.path.increments, record.path.increments)

    other = build_mesh(Domain((0.0,), (1.0,), (-0.5,)), 16)
    with pytest.raises(SselabError):
        load_record(other, prefix)


def test_stability_saturating_drift(mesh_32, z_true):
    coeffs = build_coefficients(mesh_32, 1.0)
    z1 = dirichlet_modes(mesh_32, 4)[3]
    linear = stability_scan(mesh_32, coeffs, NonlinearityPair(), [(z_true, z1)], 2, 3, 128)
    saturating = stability_scan(mesh_32, coeffs, NonlinearityPair(F1 = 'sat:1'),
                                [(z_true, z1)], 2, 3, 128)
    assert np.isfinite(saturating.max_ratio)
    assert linear.max_ratio/3 <= saturating.max_ratio <= 3*linear.max_ratio
