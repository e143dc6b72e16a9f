import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pinfield import (DisorderModel, FieldConfig, ModelParams, anharmonic_potential,
                      gaussian_potential, green_matrix, hamiltonian, make_box,
                      precision_matrix, sample_disorder, volume_from_sites)

finite_floats = st.floats(-8.0, 8.0, allow_nan=False)


def test_single_site_energy(single_site, unit_potential):
    eta = FieldConfig(np.zeros(1))
    x = 1.37
    assert hamiltonian(single_site, unit_potential, eta, np.array([x])) == pytest.approx(x * x / 4)


def test_domino_energy(domino, unit_potential):
    eta = FieldConfig(np.zeros(2))
    x, y = 0.8, -1.1
    expected = (x - y) ** 2 / 16 + 3 * (x * x + y * y) / 16
    assert hamiltonian(domino, unit_potential, eta, np.array([x, y])) == pytest.approx(expected)


def test_zero_configuration_energy(box_3x3, unit_potential, rng):
    eta = FieldConfig(rng.normal(size=9))
    assert hamiltonian(box_3x3, unit_potential, eta, np.zeros(9)) == 0.0


def test_dimension_mismatch_raises(box_3x3, unit_potential):
    with pytest.raises(ValueError):
        hamiltonian(box_3x3, unit_potential, FieldConfig(np.zeros(9)), np.zeros(4))
    with pytest.raises(ValueError):
        hamiltonian(box_3x3, unit_potential, FieldConfig(np.zeros(4)), np.zeros(9))


@settings(max_examples=40, deadline=None)
@given(phi=arrays(np.float64, 9, elements=finite_floats),
       eta=arrays(np.float64, 9, elements=finite_floats),
       kappa=st.floats(0.1, 1.0))
def test_energy_sign_symmetry(phi, eta, kappa):
    vol = make_box(2, 1)
    pot = anharmonic_potential(kappa)
    e1 = hamiltonian(vol, pot, FieldConfig(eta), phi)
    e2 = hamiltonian(vol, pot, FieldConfig(-eta), -phi)
    assert e1 == pytest.approx(e2, rel=1e-12, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(phi=arrays(np.float64, 9, elements=finite_floats))
def test_quadratic_energy_matches_precision_matrix(phi):
    vol = make_box(2, 1)
    pot = gaussian_potential(1.0)
    energy = hamiltonian(vol, pot, FieldConfig(np.zeros(9)), phi)
    A = precision_matrix(vol, (), 1.0).dense
    assert energy == pytest.approx(0.5 * phi @ A @ phi, rel=1e-10, abs=1e-12)


def test_potential_metadata():
    g = gaussian_potential(2.0)
    assert g.c_minus == g.c_plus == 2.0
    a = anharmonic_potential(0.5)
    assert a.c_minus == 0.5 and a.c_plus == 1.0 and a.growth_exponent == 2.0
    t = np.linspace(-15, 15, 301)
    assert (a.vpp(t) >= a.c_minus - 1e-12).all()
    assert (a.vpp(t) <= a.c_plus + 1e-12).all()
    assert np.allclose(a.v(t), a.v(-t))
    assert a.v(0.0) == pytest.approx(0.0, abs=1e-15)


def test_anharmonic_reduces_to_quadratic_bounds():
    a = anharmonic_potential(0.5)
    t = np.linspace(-10, 10, 201)
    assert (a.v(t) >= 0.5 * 0.5 * t * t - 1e-12).all()   # floor curvature
    assert (a.v(t) <= 0.5 * t * t + 1e-12).all()         # ceiling curvature


def test_potential_validation_rejects_bad_params():
    with pytest.raises(ValueError):
        gaussian_potential(0.0)
    with pytest.raises(ValueError):
        anharmonic_potential(0.0)
    with pytest.raises(ValueError):
        anharmonic_potential(1.5)


def test_model_params_validation(box_3x3, unit_potential):
    with pytest.raises(ValueError):
        ModelParams(box_3x3, unit_potential, -0.5, FieldConfig(np.zeros(9)))
    with pytest.raises(ValueError):
        ModelParams(box_3x3, unit_potential, 1.0, FieldConfig(np.zeros(3)))


def test_disorder_zero_and_constant(box_3x3):
    zero = sample_disorder(DisorderModel("zero"), box_3x3, 42)
    assert (zero.values == 0).all()
    const = sample_disorder(DisorderModel("constant", h=0.3), make_box(2, 1), 42)
    assert (const.values == 0.3).all()


def test_disorder_deterministic_and_sites_stable(box_3x3):
    model = DisorderModel("gaussian", sigma=1.0)
    a = sample_disorder(model, box_3x3, 7).values
    b = sample_disorder(model, box_3x3, 7).values
    assert (a == b).all()
    assert not (a == sample_disorder(model, box_3x3, 8).values).all()


def test_gaussian_disorder_pooled_second_moment():
    # ~10^4 values pooled over replicas of the 17x17 box
    vol = make_box(2, 8)
    model = DisorderModel("gaussian", sigma=1.0)
    values = np.concatenate([sample_disorder(model, vol, 5000 + r).values for r in range(35)])
    second = float(np.mean(values ** 2))
    se = float(np.std(values ** 2, ddof=1) / np.sqrt(values.size))
    assert abs(second - 1.0) <= 3 * se


@pytest.mark.parametrize("model", [DisorderModel("gaussian", sigma=1.0),
                                   DisorderModel("rademacher", h=0.7),
                                   DisorderModel("zero")])
def test_symmetric_laws_center(model):
    vol = make_box(2, 8)
    values = np.concatenate([sample_disorder(model, vol, 90 + r).values for r in range(20)])
    se = float(np.std(values, ddof=1) / np.sqrt(values.size)) if values.std() > 0 else 1e-12
    assert abs(values.mean()) <= 4 * se
    assert model.is_symmetric


def test_second_moment_metadata():
    assert DisorderModel("gaussian", sigma=2.0).second_moment == 4.0
    assert DisorderModel("rademacher", h=0.5).second_moment == 0.25
    assert DisorderModel("zero").second_moment == 0.0
    assert DisorderModel("constant", h=3.0).second_moment == 9.0
    assert not DisorderModel("constant", h=3.0).is_symmetric


def test_rademacher_values(box_3x3):
    vals = sample_disorder(DisorderModel("rademacher", h=0.7), box_3x3, 5).values
    assert set(np.round(np.abs(vals), 12)) == {0.7}


def test_unknown_law_rejected():
    with pytest.raises(ValueError):
        DisorderModel("cauchy")
