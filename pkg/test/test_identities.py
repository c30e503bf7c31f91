import numpy as np
import pytest
import sympy as sp

from geometry import Domain, build_mesh
from identities import (GeneralIdentityInputs, MultiplierField, carleman_identity_residual,
                        general_inputs, identity_c_matrix, integrated_M_check, lambdify,
                        manufactured_field, multiplier_identity_residual,
                        specialized_inputs, weighted_energy_balance)
from sde_sim import brownian_path, build_coefficients, dirichlet_modes, simulate_forward
from sselab_utilities import SselabError, WeightError
from weights import carleman_params, eval_weights


def sample(dim, count = 120, seed = 0):
    rng = np.random.default_rng(seed)
    return rng.uniform(0.25, 0.75, count), rng.uniform(0.0, 1.0, (count, dim))


def mild_params(dim):
    box = Domain((0.0,)*dim, (1.0,)*dim, (-0.2,)*dim)
    return carleman_params(build_mesh(box, 4), 1e-3, 0.2, 1.0, tau = 0.1)


@pytest.mark.parametrize('dim', [1, 2])
def test_multiplier_zero_field(dim):
    t, x = sample(dim)
    mu = MultiplierField((0.0,)*dim, (1.0,)*dim)
    result = multiplier_identity_residual(mu, manufactured_field(dim, zero = True), t, x)
    assert result.max_abs == 0
    assert result.relative == 0


@pytest.mark.parametrize('dim', [1, 2])
def test_multiplier_identity(dim):
    t, x = sample(dim)
    mu = MultiplierField((0.0,)*dim, (1.0,)*dim)
    result = multiplier_identity_residual(mu, manufactured_field(dim), t, x)
    assert result.scale > 0
    assert result.relative <= 1e-10


@pytest.mark.parametrize('dim', [1, 2])
def test_multiplier_finite_differences(dim):
    t, x = sample(dim)
    mu = MultiplierField((0.0,)*dim, (1.0,)*dim)
    z = manufactured_field(dim)
    coarse = multiplier_identity_residual(mu, z, t, x, mode = 'fd', h = 1e-2)
    fine = multiplier_identity_residual(mu, z, t, x, mode = 'fd', h = 5e-3)
    # truncation error, well above round-off
    assert fine.max_abs >= 1e-8
    assert 3.5 <= coarse.max_abs/fine.max_abs <= 4.5


def test_multiplier_unknown_mode():
    t, x = sample(1, count = 4)
    mu = MultiplierField((0.0,), (1.0,))
    with pytest.raises(SselabError):
        multiplier_identity_residual(mu, manufactured_field(1), t, x, mode = 'spectral')


def test_multiplier_boundary_values(mesh_2d):
    mu = MultiplierField((0.0, 0.0), (1.0, 1.0))
    # mu.nu = 1 on every face of the box
    assert mu.boundary_mismatch(mesh_2d) == pytest.approx(0.0, abs = 1e-14)


def test_residual_table():
    t, x = sample(1, count = 10)
    mu = MultiplierField((0.0,), (1.0,))
    table = multiplier_identity_residual(mu, manufactured_field(1), t, x).table()
    assert list(table.columns) == ['term_name', 'max_abs', 't', 'x1']
    assert table.term_name.iloc[-1] == 'residual'


@pytest.mark.parametrize('dim', [1, 2])
def test_weighted_identity_specialized(dim):
    t, x = sample(dim)
    inputs = specialized_inputs(mild_params(dim), (0.0,)*dim, (1.0,)*dim)
    result = carleman_identity_residual(inputs, t, x)
    assert result.scale > 0
    assert result.relative <= 1e-9


def test_weighted_identity_general():
    t, x = sample(2)
    inputs = general_inputs(mild_params(2), (0.0, 0.0), (1.0, 1.0))
    result = carleman_identity_residual(inputs, t, x)
    assert result.relative <= 1e-9


def test_weighted_identity_zero_field():
    t, x = sample(1, count = 20)
    inputs = specialized_inputs(mild_params(1), (0.0,), (1.0,),
                                z = manufactured_field(1, zero = True))
    result = carleman_identity_residual(inputs, t, x)
    assert result.max_abs == 0
    assert all(value == 0 for value in result.terms.values())


def test_c_matches_weights():
    params = mild_params(2)
    t, x = sample(2, count = 50)
    inputs = specialized_inputs(params, (0.0, 0.0), (1.0, 1.0))
    c_identity = identity_c_matrix(inputs, t, x)
    c_weights = eval_weights(params, t, x).c
    assert np.max(np.abs(c_identity - c_weights)) <= 1e-12*np.max(np.abs(c_weights))


def test_psi_term_vanishes():
    inputs = specialized_inputs(mild_params(2), (0.0, 0.0), (1.0, 1.0))
    t, x = sample(2, count = 50)
    psi = lambdify(inputs.t, inputs.xs, inputs.terms()['_psi_coefficient'])(t, x)
    scale = lambdify(inputs.t, inputs.xs, inputs.Psi)(t, x)
    assert np.max(np.abs(scale)) > 0
    assert np.max(np.abs(psi)) <= 1e-12*np.max(np.abs(scale))


def test_terms_built_once_per_instance():
    first = specialized_inputs(mild_params(1), (0.0,), (1.0,))
    second = specialized_inputs(mild_params(1), (0.0,), (1.0,))
    assert first.terms() is first.terms()
    assert first.terms() is not second.terms()


def test_underflowed_weight_is_not_a_pass():
    box = Domain((0.0, 0.0), (1.0, 1.0), (-0.2, -0.2))
    params = carleman_params(build_mesh(box, 4), 0.05, 0.5, 1.0, tau = 0.1)
    inputs = specialized_inputs(params, (0.0, 0.0), (1.0, 1.0))
    result = carleman_identity_residual(inputs, *sample(2, count = 40))
    assert result.scale == 0
    assert result.relative == np.inf


def test_nonsymmetric_b_rejected():
    z = manufactured_field(2)
    x1, x2 = z.xs
    b = [[sp.Integer(1), x1], [sp.Integer(0), sp.Integer(1)]]
    with pytest.raises(SselabError):
        GeneralIdentityInputs(z, sp.Integer(1), b, sp.Integer(0), sp.Integer(0), 1.0,
                              (0.0, 0.0), (1.0, 1.0))


@pytest.fixture
def decaying():
    mesh = build_mesh(Domain((0.0,), (1.0,), (-0.2,)), 16)
    return mesh, carleman_params(mesh, 1e-4, 0.1, 1.0)


def test_integrated_M_zero(decaying):
    mesh, params = decaying
    coeffs = build_coefficients(mesh, 1.0)
    trajectory = simulate_forward(mesh, coeffs, np.zeros(mesh.size), brownian_path(0, 0, 1/64, 64))
    assert integrated_M_check(mesh, params, [trajectory]) == 0.0
    assert integrated_M_check(mesh, params, []) == 0.0


def test_integrated_M_shrinks_with_margin(decaying):
    mesh, params = decaying
    coeffs = build_coefficients(mesh, 1.0)
    y0 = dirichlet_modes(mesh, 2)[0] + 0.3j*dirichlet_modes(mesh, 2)[1]
    trajectory = simulate_forward(mesh, coeffs, y0, brownian_path(0, 0, 1/128, 128))

    values = [integrated_M_check(mesh, params, [trajectory], margin = m) for m in (8, 4, 2)]
    assert values[0] > values[1] > values[2] >= 0

    with pytest.raises(SselabError):
        integrated_M_check(mesh, params, [trajectory], margin = 0)


def test_integrated_M_rejects_underflowed_window(mesh_1d, first_mode):
    params = carleman_params(mesh_1d, 10.0, 2.0, 1.0)
    coeffs = build_coefficients(mesh_1d, 1.0)
    trajectory = simulate_forward(mesh_1d, coeffs, first_mode, brownian_path(0, 0, 1/64, 64))
    with pytest.raises(WeightError):
        integrated_M_check(mesh_1d, params, [trajectory])


def test_integrated_M_nonsymmetric(decaying):
    mesh, params = decaying
    coeffs = build_coefficients(mesh, 1.0, b1 = 'bump:0.5', a3 = 'const:0.5')
    modes = dirichlet_modes(mesh, 3)
    trajectories = [simulate_forward(mesh, coeffs, y0, brownian_path(7, k, 1/128, 128))
                    for k, y0 in enumerate((modes[0] + 0.5j*modes[2], modes[1] - 0.2*modes[0]))]

    value = integrated_M_check(mesh, params, trajectories, margin = 4)
    assert np.isfinite(value)
    assert value > 0


def test_weighted_energy_balance(decaying):
    mesh, params = decaying
    coeffs = build_coefficients(mesh, 1.0, a3 = 'const:0.5')
    y0 = dirichlet_modes(mesh, 1)[0]
    balance = weighted_energy_balance(mesh, params, coeffs, y0, 200, 17, 128)

    assert balance.ito > 0
    assert abs(balance.residual) <= 3*balance.residual_se + 0.05*balance.ito
    assert balance.residual_without_ito >= 0.5*balance.ito
