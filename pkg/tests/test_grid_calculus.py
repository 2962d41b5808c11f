import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from symptorus.fixtures import band_limited
from symptorus.grid_calculus import (
    OneForm,
    ScalarField,
    VectorField,
    check_resolution,
    curl,
    evaluate_spline,
    evaluate_trig,
    exterior_derivative,
    field_from_dict,
    field_to_dict,
    flat,
    gradient,
    grid,
    musical,
    osc,
    sharp,
    spline_coefficients,
    toroidal_distance,
    translate,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def test_flat_of_unit_x_is_dy():
    X = VectorField.from_components(np.ones((8, 8)), np.zeros((8, 8)))
    alpha = flat(X)
    assert np.all(alpha.data[0] == 0.0) and np.all(alpha.data[1] == 1.0)


def test_flat_of_unit_y_is_minus_dx():
    X = VectorField.from_components(np.zeros((8, 8)), np.ones((8, 8)))
    alpha = flat(X)
    assert np.all(alpha.data[0] == -1.0) and np.all(alpha.data[1] == 0.0)


@given(arrays(float, (2, 8, 8), elements=finite))
def test_sharp_inverts_flat(data):
    X = VectorField(data)
    assert np.array_equal(sharp(flat(X)).data, X.data)
    alpha = OneForm(data)
    assert np.array_equal(flat(sharp(alpha)).data, alpha.data)


def test_musical_dispatch():
    X = VectorField(np.ones((2, 8, 8)))
    assert isinstance(musical(X, "flat"), OneForm)
    with pytest.raises(TypeError):
        musical(X, "sharp")
    with pytest.raises(ValueError):
        musical(X, "up")


def test_d_of_constant_is_zero():
    du = exterior_derivative(ScalarField(np.full((16, 16), 3.5)))
    assert np.abs(du.data).max() < 1e-13


def test_d_of_sine():
    x, _ = grid(64)
    du = gradient(np.sin(2 * np.pi * x))
    assert np.abs(du[0] - 2 * np.pi * np.cos(2 * np.pi * x)).max() < 1e-10
    assert np.abs(du[1]).max() < 1e-10


def test_d_of_one_form_sign_against_finite_differences():
    n = 256
    x, _ = grid(n)
    q = np.cos(2 * np.pi * x)
    dalpha = exterior_derivative(OneForm(np.stack([np.zeros_like(q), q])))
    # central differences of the dy coefficient along x
    fd = (np.roll(q, -1, axis=0) - np.roll(q, 1, axis=0)) * n / 2
    assert np.abs(dalpha.data - fd).max() < 1e-3
    assert np.abs(dalpha.data + 2 * np.pi * np.sin(2 * np.pi * x)).max() < 1e-10


@given(st.integers(0, 2**32 - 1), st.sampled_from([8, 16, 32, 64]))
def test_d_squared_vanishes(seed, n):
    u = band_limited(n, np.random.default_rng(seed), modes=1)
    assert np.abs(curl(gradient(u))).max() <= 1e-12 * osc(u)


def test_osc_of_sine_is_exact():
    for n in (8, 16, 64):
        x, _ = grid(n)
        assert osc(np.sin(2 * np.pi * x)) == 2.0


def test_osc_of_constant():
    assert osc(np.full((8, 8), -2.0)) == 0.0


@given(arrays(float, (8, 8), elements=st.floats(-10, 10)), st.floats(-100, 100))
def test_osc_translation_invariant(u, c):
    assert osc(u + c) == pytest.approx(osc(u), abs=1e-10)


@pytest.mark.parametrize("n", [0, 4, 12, 48, 100])
def test_resolution_must_be_power_of_two(n):
    with pytest.raises(ValueError):
        check_resolution(n)


def test_spline_matches_trigonometric_interpolant(rng):
    n = 64
    u = band_limited(n, rng, modes=2)
    points = rng.uniform(-1.0, 2.0, (500, 2))
    coeffs = spline_coefficients(u[None])
    assert np.abs(evaluate_spline(coeffs, points)[0] - evaluate_trig(u, points)).max() < 1e-7


def test_trig_evaluation_of_sine():
    n = 16
    x, y = grid(n)
    u = np.sin(2 * np.pi * x) * np.cos(4 * np.pi * y)
    pts = np.array([[0.123, 0.77], [0.5, -0.31]])
    exact = np.sin(2 * np.pi * pts[:, 0]) * np.cos(4 * np.pi * pts[:, 1])
    assert np.allclose(evaluate_trig(u, pts), exact, atol=1e-13)


def test_translate_shifts_argument():
    x, y = grid(32)
    u = np.sin(2 * np.pi * x) + np.cos(2 * np.pi * y)
    got = translate(u, (0.1, -0.25))
    assert np.allclose(got, np.sin(2 * np.pi * (x + 0.1)) + np.cos(2 * np.pi * (y - 0.25)), atol=1e-13)


@pytest.mark.parametrize("a, b, expected", [(0.1, 0.3, 0.2), (0.0, 0.7, 0.3), (0.95, 0.05, 0.1)])
def test_toroidal_distance_wraps(a, b, expected):
    d = toroidal_distance(np.array([a, 0.0]), np.array([b, 0.0]))
    assert d == pytest.approx(expected, abs=1e-15)


@given(st.sampled_from(["scalar", "oneform", "vectorfield"]), st.integers(0, 1000))
def test_field_json_round_trip(kind, seed):
    rng = np.random.default_rng(seed)
    n = 8
    field = {
        "scalar": lambda: ScalarField(rng.normal(size=(n, n))),
        "oneform": lambda: OneForm(rng.normal(size=(2, n, n))),
        "vectorfield": lambda: VectorField(rng.normal(size=(2, n, n))),
    }[kind]()
    back = field_from_dict(field_to_dict(field))
    assert type(back) is type(field) and np.array_equal(back.data, field.data)


def test_field_json_wrong_size():
    obj = field_to_dict(ScalarField(np.zeros((8, 8))))
    obj["n"] = 16
    with pytest.raises(ValueError):
        field_from_dict(obj)
