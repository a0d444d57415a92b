import math

import numpy as np
import pytest
from equilibria import examples
from equilibria.solver import (
    FieldError,
    PolynomialWeight,
    SampledField,
    TrigExponentialWeight,
    field_from_json,
    uniform_field,
)
from equilibria.solver._field import eval_g, eval_q, eval_q_prime, generic_g

FD_STEP = 1e-6


def random_angles(n, seed=0):
    return np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi, n)


def central_difference(fn, theta):
    return (np.asarray(fn(theta + FD_STEP)) - np.asarray(fn(theta - FD_STEP))) / (
        2.0 * FD_STEP
    )


def sample_fields():
    return [
        PolynomialWeight([(2.0 + 0.5j, 1.0), (-0.3 + 0.1j, 0.5)]),
        TrigExponentialWeight({1: 0.3 + 0.2j, 2: -0.1j}),
        SampledField.from_grid(np.cos(2.0 * math.pi * np.arange(64) / 64) + 0.25),
    ]


def test_uniform_field_is_flat():
    field = uniform_field()
    theta = random_angles(16)
    assert np.allclose(eval_q(field, theta), 0.0)
    assert np.allclose(eval_q_prime(field, theta), 0.0)
    assert np.allclose(eval_g(field, theta), 1.0 / (2.0 * math.pi))


def test_single_zero_values():
    field = examples.single_zero(2.0)
    assert eval_q(field, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert eval_q(field, math.pi) == pytest.approx(-math.log(3.0), abs=1e-15)
    assert eval_q_prime(field, math.pi) == pytest.approx(0.0, abs=1e-15)


def test_scalar_input_gives_scalar_output():
    field = examples.single_zero(2.0)
    assert isinstance(field.q(0.5), float)
    assert field.q(np.array([0.5, 1.0])).shape == (2,)


def test_cosine_field_derivative():
    field = examples.cosine_field(1.0)
    assert eval_q_prime(field, math.pi / 2.0) == pytest.approx(-1.0, abs=1e-14)


def test_trig_g_at_zero_cancels_the_symmetric_modes():
    # c_1 = c_{-1} = 1/8 enters g with weights m = 1 and m = -1
    field = TrigExponentialWeight({1: 1.0 / 8.0})
    assert eval_g(field, 0.0).real == pytest.approx(1.0 / (2.0 * math.pi), abs=1e-15)
    assert eval_g(field, 0.0) == pytest.approx(
        1j / math.pi * eval_q_prime(field, 0.0) + 1.0 / (2.0 * math.pi), abs=1e-15
    )


@pytest.mark.parametrize(
    "field",
    [
        PolynomialWeight([(2.0, 1.0)]),
        PolynomialWeight([(2.0 + 0.5j, 1.0), (-0.3 + 0.1j, 0.5)]),
        TrigExponentialWeight({1: 0.3 + 0.2j, 2: -0.1j, 3: 0.05}),
    ],
)
def test_closed_form_g_matches_generic(field):
    theta = random_angles(64, seed=1)
    np.testing.assert_allclose(
        field.g(theta), generic_g(field, theta), rtol=1e-12, atol=1e-14
    )


@pytest.mark.parametrize("field", sample_fields())
def test_q_prime_matches_finite_difference(field):
    theta = random_angles(256, seed=2)
    exact = np.asarray(field.q_prime(theta))
    approx = central_difference(field.q, theta)
    assert np.all(np.abs(exact - approx) < 1e-5 * (1.0 + np.abs(exact)))


@pytest.mark.parametrize("field", sample_fields())
def test_q_second_matches_finite_difference(field):
    theta = random_angles(256, seed=3)
    exact = np.asarray(field.q_second(theta))
    approx = central_difference(field.q_prime, theta)
    assert np.all(np.abs(exact - approx) < 1e-5 * (1.0 + np.abs(exact)))


def test_trig_field_is_real():
    field = TrigExponentialWeight({1: 0.3 + 0.2j, 2: -0.1j})
    assert np.max(np.abs(field.imag_part(random_angles(128)))) < 1e-14


def test_sampled_grid_interpolates_the_samples():
    theta = 2.0 * math.pi * np.arange(32) / 32
    values = np.exp(np.cos(theta))
    field = SampledField.from_grid(values)
    np.testing.assert_allclose(field.q(theta), values, atol=1e-12)


def test_sampled_field_without_second_derivative():
    field = SampledField(lambda t: np.sin(t), lambda t: np.cos(t))
    assert not field.has_second_derivative
    with pytest.raises(FieldError):
        field.q_second(0.3)


def test_evaluation_at_zero_of_weight():
    field = PolynomialWeight([(1.0 + 0j, 1.0)])
    with pytest.raises(FieldError, match="zero of the weight"):
        field.q(0.0)
    assert math.isfinite(field.q(1.0))


def test_zero_on_circle_rejected_at_solve_time():
    field = PolynomialWeight([(1j, 1.0)])
    with pytest.raises(FieldError) as excinfo:
        field.validate_for_solve()
    assert excinfo.value.stage == "field"


@pytest.mark.parametrize(
    "terms",
    [
        [],
        [(0.0, 1.0)],
        [(2.0, -1.0)],
        [(2.0, 0.0)],
        [(complex("nan"), 1.0)],
    ],
)
def test_invalid_polynomial_terms(terms):
    with pytest.raises(FieldError):
        PolynomialWeight(terms)


def test_trig_coefficients_must_be_conjugate():
    with pytest.raises(FieldError, match="not conjugate"):
        TrigExponentialWeight({1: 1.0, -1: 2.0})
    with pytest.raises(FieldError):
        TrigExponentialWeight({0: 1j})


def test_trig_conjugate_symmetry_is_filled_in():
    field = TrigExponentialWeight({2: 0.5 - 0.25j})
    assert field.coefficient(-2) == pytest.approx(0.5 + 0.25j)
    assert field.coefficient(5) == 0


@pytest.mark.parametrize("field", sample_fields())
def test_rotation_shifts_the_field(field):
    theta0 = 0.7
    theta = random_angles(32, seed=4)
    rotated = field.rotated(theta0)
    np.testing.assert_allclose(rotated.q(theta), field.q(theta - theta0), atol=1e-12)


@pytest.mark.parametrize("field", sample_fields())
def test_json_description_rebuilds_the_field(field):
    rebuilt = field_from_json(field.to_json())
    theta = random_angles(16, seed=5)
    np.testing.assert_allclose(rebuilt.q(theta), field.q(theta), atol=1e-12)


@pytest.mark.parametrize(
    "document",
    [
        {"type": "bessel"},
        {"type": "polynomial"},
        {"type": "polynomial", "terms": [{"zero": [2.0]}]},
        {"type": "trig", "coeffs": [{"m": -1, "c": [1.0, 0.0]}]},
        ["polynomial"],
    ],
)
def test_malformed_field_json(document):
    with pytest.raises(FieldError):
        field_from_json(document)


def test_custom_sampled_field_cannot_be_serialized():
    field = SampledField(lambda t: np.sin(t), lambda t: np.cos(t))
    with pytest.raises(FieldError, match="serialized"):
        field.to_json()
