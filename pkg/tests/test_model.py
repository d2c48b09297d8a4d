import numpy as np
import pytest

from horizonfv import (
    DEFAULT_KRUZHKOV_LEVELS,
    DomainError,
    check_structure,
    kruzhkov_pair,
    polynomial_model,
    quadratic_pair,
    validate_derivatives,
)


def test_burgers_values(burgers):
    assert burgers.f(0.0) == -0.5
    assert burgers.f(1.0) + burgers.h(1.0) == 0.0
    assert burgers.f(-1.0) + burgers.h(-1.0) == 0.0
    assert burgers.df(-0.5) == -0.5
    assert burgers.dh(0.3) == 0.0


def test_burgers_vectorized(burgers):
    s = np.linspace(-1, 1, 11)
    assert np.allclose(burgers.f(s), 0.5 * s * s - 0.5)
    assert np.allclose(burgers.df(s), s)


def test_derivative_crosscheck(structure_models):
    for m in structure_models:
        worst = validate_derivatives(m)
        assert worst <= 1e-6


def test_derivative_crosscheck_catches_wrong_df(burgers):
    bad = polynomial_model("bad", [-0.5, 0.0, 0.5], [0.0])
    bad = type(bad)(name="bad", f=bad.f, df=lambda s: 2.0 * np.multiply(s, 1.0),
                    h=bad.h, dh=bad.dh)
    with pytest.raises(DomainError):
        validate_derivatives(bad)


def test_structure_burgers_all_flags(burgers):
    rep = check_structure(burgers, 101)
    assert rep.all_ok
    assert rep.worst_violation <= 0.0
    assert rep.samples == 101


def test_structure_small_grid(burgers):
    rep = check_structure(burgers, 3)
    assert rep.all_ok
    assert rep.samples == 3


def test_structure_linear_flux_fails_roots():
    linear = polynomial_model("linear", [0.0, 1.0], [0.0])
    rep = check_structure(linear, 101)
    assert not rep.boundary_roots_ok  # f(1) + h(1) = 1
    assert not rep.flux_monotone_shape_ok


def test_structure_positive_interior_fails():
    # f + h = 0.1 (1 - s^2) > 0 inside, with clean roots at the ends
    lifted = polynomial_model("lifted", [-0.5, 0.0, 0.5], [0.6, 0.0, -0.6])
    rep = check_structure(lifted, 101)
    assert rep.boundary_roots_ok
    assert not rep.interior_negative_ok
    assert rep.worst_violation > 0.0


def test_worst_violation_sign_matches_interior_flags(structure_models):
    for m in structure_models:
        rep = check_structure(m, 257)
        assert (rep.worst_violation <= 0.0) == (rep.interior_negative_ok and rep.flux_monotone_shape_ok)


def test_structure_needs_three_samples(burgers):
    with pytest.raises(DomainError):
        check_structure(burgers, 2)


def test_kruzhkov_values(burgers):
    pair = kruzhkov_pair(burgers, 0.0)
    assert pair.U(0.5) == 0.5
    assert pair.F(0.5) == pytest.approx(0.125, abs=1e-15)  # f(0.5) - f(0)
    assert pair.U(0.0) == 0.0
    assert pair.dU(0.7) == 1.0
    assert pair.dU(-0.7) == -1.0


def test_kruzhkov_flux_vanishes_at_level(burgers):
    for k in DEFAULT_KRUZHKOV_LEVELS:
        pair = kruzhkov_pair(burgers, k)
        assert pair.F(k) == 0.0
        assert pair.U(0.0) == 0.0


def test_kruzhkov_even_flux_cancellation(burgers):
    # f is even, so F(-k) = sign(-2k)(f(-k) - f(k)) = 0
    pair = kruzhkov_pair(burgers, 0.25)
    assert pair.F(-0.25) == 0.0


def test_kruzhkov_odd_symmetry_for_centered_level(burgers):
    pair = kruzhkov_pair(burgers, 0.0)
    v = np.linspace(-1, 1, 41)
    assert np.allclose(pair.F(-v), -np.asarray(pair.F(v)), atol=1e-15)


def test_kruzhkov_level_domain(burgers):
    with pytest.raises(DomainError):
        kruzhkov_pair(burgers, 1.5)
    kruzhkov_pair(burgers, 1.0)
    kruzhkov_pair(burgers, -1.0)


def test_quadratic_pair_values(burgers):
    pair = quadratic_pair(burgers)
    assert pair.F(0.0) == 0.0
    assert pair.U(-1.0) == 0.5
    assert pair.F(0.6) == pytest.approx(0.072, abs=1e-10)
    v = np.linspace(-1, 1, 21)
    assert np.allclose(pair.F(v), v ** 3 / 3.0, atol=1e-10)


def test_quadratic_pair_simpson_fallback(burgers):
    # strip the polynomial tag to exercise the quadrature path
    bare = type(burgers)(name="bare", f=burgers.f, df=burgers.df, h=burgers.h, dh=burgers.dh)
    pair = quadratic_pair(bare)
    assert pair.F(0.6) == pytest.approx(0.072, abs=1e-10)
    assert pair.F(0.0) == 0.0


@pytest.mark.parametrize("k", [None, -0.75, -0.25, 0.0, 0.25, 0.75])
def test_entropy_flux_compatibility(structure_models, k):
    # F'(v) = f'(v) U'(v) by centered differences, away from the kink
    step = 1e-5
    for m in structure_models:
        pair = quadratic_pair(m) if k is None else kruzhkov_pair(m, k)
        v = np.linspace(-0.99, 0.99, 199)
        if k is not None:
            v = v[np.abs(v - k) > 1e-3]
        approx = (np.asarray(pair.F(v + step)) - np.asarray(pair.F(v - step))) / (2 * step)
        exact = np.asarray(m.df(v), dtype=float) * np.asarray(pair.dU(v), dtype=float)
        assert np.max(np.abs(approx - exact) / (1.0 + np.abs(m.df(v)))) <= 1e-6


def test_polynomial_degree_cap():
    with pytest.raises(DomainError):
        polynomial_model("toolong", list(range(10)), [0.0])


def test_polynomial_model_shifted_structure(shifted):
    rep = check_structure(shifted, 101)
    assert rep.all_ok
