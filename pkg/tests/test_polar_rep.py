import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ultrasphere.errors import InvalidArgumentError, NumericalInstabilityError, OutOfRangeError
from ultrasphere.polar_rep import (
    DERIVATIVE,
    PARITY,
    SMOOTHNESS,
    FactorProfile,
    ProfileSet,
    RadialCoeffProfile,
    check_V_membership,
    default_grid,
    pullback_profiles,
    radial_factorize,
    reconstruct,
    taylor_coefficients,
)
from ultrasphere.quadrature import analyze
from ultrasphere.rotmean import profile_value

from conftest import gaussian

GRID = default_grid()


def ball_points(rng, m, n, R=1.0):
    X = rng.standard_normal((m, n))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    return X * (R * rng.random(m) ** (1.0 / n))[:, None]


def corpus(basis):
    return {
        "x1x2_gaussian": lambda X: X[..., 0] * X[..., 1] * gaussian(X),
        "r2_gaussian": lambda X: np.sum(X * X, axis=-1) * gaussian(X),
        "P3_gaussian": lambda X: basis.solid(3, X)[:, 4] * gaussian(X),
    }


def test_default_grid():
    assert GRID.size == 129
    assert np.array_equal(GRID, -GRID[::-1]) and GRID[64] == 0.0
    assert np.all(np.diff(GRID) > 0)
    assert np.sum(np.abs(GRID) <= 0.25) == 43
    # clustered at 0: first step much smaller than a uniform step
    assert GRID[65] < 0.1 * (2 / 128)


@pytest.mark.parametrize("grid", [[0.0, 1.0, 2.0], [-1.0, 0.0, 1.0, 1.5], [-1.0, 1.0, 0.0]])
def test_grid_validation(grid):
    with pytest.raises(InvalidArgumentError):
        RadialCoeffProfile(3, 0, 0, np.array(grid), np.zeros(len(grid)))


# pullback ---------------------------------------------------------------


def test_pullback_r_squared(basis3, quad3):
    P = pullback_profiles(lambda X: np.sum(X * X, axis=-1), basis3, quad3)
    assert np.allclose(P.blocks[0][0], GRID ** 2 * math.sqrt(4 * math.pi), rtol=1e-13, atol=1e-15)
    assert P.degree_maxima()[1:].max() <= 1e-10


def test_pullback_linear(basis3, quad3):
    P = pullback_profiles(lambda X: X[:, 0], basis3, quad3)
    m = P.degree_maxima()
    assert m[1] > 0.1 and np.delete(m, 1).max() <= 1e-10
    for a in P.blocks[1]:
        slope = a[-1] / GRID[-1]
        assert np.allclose(a, slope * GRID, atol=1e-13)


def test_pullback_zero(basis3, quad3):
    P = pullback_profiles(lambda X: np.zeros(len(X)), basis3, quad3)
    assert all(np.all(b == 0) for b in P.blocks)


def test_pullback_matches_definition(basis3, quad3):
    phi = lambda X: np.exp(X[..., 2]) * (1 + X[..., 0])
    P = pullback_profiles(phi, basis3, quad3)
    for j, k, m in [(0, 0, 10), (1, 2, 100), (4, 3, 64), (8, 16, 128)]:
        assert P.blocks[j][k, m] == pytest.approx(profile_value(phi, basis3, quad3, j, k, GRID[m]), abs=1e-14)


def test_pullback_rejects_weak_quadrature(basis3):
    from ultrasphere.quadrature import build_quadrature

    with pytest.raises(InvalidArgumentError):
        pullback_profiles(gaussian, basis3, build_quadrature(3, 10))


@given(st.integers(0, 10 ** 6))
@settings(max_examples=15, deadline=None)
def test_parity_invariant(seed):
    from ultrasphere.quadrature import build_quadrature
    from ultrasphere.sphharm import build_basis

    B, Q = build_basis(3, 8), build_quadrature(3, 16)
    g = np.random.default_rng(seed)
    a, c = g.normal(size=3), g.normal(size=4)
    phi = lambda X: (c[0] + c[1] * X[..., 0] + c[2] * X[..., 1] * X[..., 2] + c[3] * X[..., 2] ** 3) * np.exp(X @ a)
    P = pullback_profiles(phi, B, Q)
    assert max(p.parity_residual() for p in P) <= 1e-9


def test_degree_coupling(basis3, quad3, rng):
    j0 = 3
    c = rng.standard_normal(basis3.dim(j0))
    H = lambda X: basis3.solid(j0, X) @ c
    P = pullback_profiles(H, basis3, quad3)
    m = P.degree_maxima()
    assert np.delete(m, j0).max() <= 1e-10
    restricted = analyze(H, basis3, quad3).blocks[j0]
    assert np.allclose(restricted, c, atol=1e-12)
    assert np.allclose(P.blocks[j0], np.outer(restricted, GRID ** j0), atol=1e-12)


def test_threads_do_not_change_bits(basis3, quad3, monkeypatch):
    phi = lambda X: np.exp(X[..., 0] - X[..., 2] ** 2)
    monkeypatch.setenv("ULTRASPHERE_THREADS", "1")
    a = pullback_profiles(phi, basis3, quad3)
    monkeypatch.setenv("ULTRASPHERE_THREADS", "4")
    b = pullback_profiles(phi, basis3, quad3)
    assert all(np.array_equal(x, y) for x, y in zip(a.blocks, b.blocks))


def test_profile_jsonl_round_trip(basis3, quad3):
    P = pullback_profiles(lambda X: X[..., 1] * gaussian(X), basis3, quad3)
    text = P.to_jsonl()
    lines = text.splitlines()
    assert lines[0] == '{"n": 3, "J": 8, "format_version": 1}'
    rec = __import__("json").loads(lines[2])
    assert set(rec) == {"j", "k", "grid", "values"}
    back = ProfileSet.from_jsonl(text)
    assert all(np.array_equal(x, y) for x, y in zip(back.blocks, P.blocks))


def test_profile_table_at(basis3, quad3):
    phi = lambda X: np.exp(X[..., 2])
    P = pullback_profiles(phi, basis3, quad3)
    t = P.table_at(128)
    direct = analyze(phi, basis3, quad3)
    assert np.allclose(t.flat(), direct.flat(), atol=1e-15)


# membership -------------------------------------------------------------


def test_membership_accepts_corpus(basis3, quad3):
    for name, phi in corpus(basis3).items():
        rep = check_V_membership(pullback_profiles(phi, basis3, quad3))
        assert rep.passed, name
        assert rep.worst["magnitude"] <= 1e-7


def test_membership_rejects_odd_radial():
    rep = check_V_membership([RadialCoeffProfile(3, 0, 0, GRID, GRID)])
    assert not rep.passed and rep.failed_conditions == [PARITY]


def test_membership_rejects_low_order():
    rep = check_V_membership([RadialCoeffProfile(3, 2, 1, GRID, GRID)])
    assert not rep.passed and DERIVATIVE in rep.failed_conditions
    bad = [f for f in rep.failures if f["condition"] == DERIVATIVE][0]
    assert bad["m"] == 1
    entry = rep.entries[0]
    assert entry["derivatives_at_0"][1] == pytest.approx(1.0, abs=1e-10)


def test_membership_rejects_abs_r(basis3, quad3):
    rep = check_V_membership(pullback_profiles(lambda X: np.linalg.norm(X, axis=-1), basis3, quad3))
    assert not rep.passed and rep.failed_conditions == [SMOOTHNESS]


def test_reported_violation_recomputes(basis3, quad3):
    # even-in-r profile placed at odd degree
    vals = np.cos(GRID)
    rep = check_V_membership([RadialCoeffProfile(3, 1, 0, GRID, vals)])
    f = [x for x in rep.failures if x["condition"] == PARITY][0]
    direct = np.max(np.abs(vals[::-1] + vals))
    assert f["magnitude"] == direct and direct > rep.tol


def test_membership_grid_too_coarse():
    g = default_grid(half=16)
    with pytest.raises(InvalidArgumentError):
        check_V_membership([RadialCoeffProfile(3, 0, 0, g, g ** 2)])


def test_membership_records_weight_sequence():
    rep = check_V_membership([RadialCoeffProfile(3, 0, 0, GRID, GRID ** 2)], relative_to="sqrt(p!*(p!)^1)")
    assert rep.to_dict()["relative_to"] == "sqrt(p!*(p!)^1)"


def test_taylor_coefficients_no_high_degrees(basis3, quad3):
    phi = lambda X: np.exp(X[..., 2] + 0.5 * X[..., 0])
    P = pullback_profiles(phi, basis3, quad3)
    for m in range(7):
        t = taylor_coefficients(P, m)
        norms = t.degree_norms()
        assert norms[m] > 1e-3
        assert norms[m + 1:].max(initial=0.0) <= 1e-6 * norms[:m + 1].max()


def test_taylor_coefficients_known_values(basis3, quad3):
    # Phi(r, w) = r^2 e^{-r^2}: second derivative at 0 is 2, times sqrt(4 pi)
    P = pullback_profiles(lambda X: np.sum(X * X, axis=-1) * gaussian(X), basis3, quad3)
    assert taylor_coefficients(P, 2)[0, 0] == pytest.approx(2 * math.sqrt(4 * math.pi), rel=1e-9)
    assert abs(taylor_coefficients(P, 0)[0, 0]) <= 1e-12


# factorization ----------------------------------------------------------


@pytest.mark.parametrize("j", [0, 1, 2, 5])
def test_factorize_pure_power(j):
    b = radial_factorize(RadialCoeffProfile(3, j, 0, GRID, GRID ** j))
    assert np.allclose(b.values, 1.0, atol=1e-10)
    assert b.u[0] == 0.0 and np.all(np.diff(b.u) > 0)


def test_factorize_gaussian_times_r2():
    b = radial_factorize(RadialCoeffProfile(3, 2, 0, GRID, GRID ** 2 * np.exp(-GRID ** 2)))
    assert np.allclose(b.values, np.exp(-b.u), atol=1e-10)


def test_factorize_polynomial():
    b = radial_factorize(RadialCoeffProfile(3, 3, 0, GRID, GRID ** 3 + GRID ** 5))
    assert np.allclose(b.values, 1 + b.u, atol=1e-10)
    assert b(0.3) == pytest.approx(1.3, abs=1e-10)


def test_factorize_rejects_non_member():
    with pytest.raises(InvalidArgumentError):
        radial_factorize(RadialCoeffProfile(3, 2, 0, GRID, GRID))


def test_factorize_instability_names_u():
    vals = GRID ** 8 + 1e-11 * np.sin(1000 * GRID ** 2)
    p = RadialCoeffProfile(3, 8, 0, GRID, vals)
    assert check_V_membership(p).passed
    with pytest.raises(NumericalInstabilityError) as err:
        radial_factorize(p)
    assert err.value.u > 0.25 ** 2


def test_factor_out_of_range():
    b = radial_factorize(RadialCoeffProfile(3, 0, 0, GRID, np.ones_like(GRID)))
    with pytest.raises(OutOfRangeError):
        b(1.5)
    with pytest.raises(OutOfRangeError):
        b(-0.1)


# reconstruction ---------------------------------------------------------


def test_round_trip_corpus(basis3, quad3, rng):
    X = ball_points(rng, 3000, 3)
    for name, phi in corpus(basis3).items():
        P = pullback_profiles(phi, basis3, quad3)
        factors = [radial_factorize(p) for p in P]
        err = np.max(np.abs(reconstruct(factors, basis3, X) - phi(X)))
        assert err <= 1e-8, name


def test_reconstruct_zero_and_constant(basis3):
    u = GRID[64:] ** 2
    zero = [FactorProfile(3, 1, k, u, np.zeros_like(u)) for k in range(3)]
    assert reconstruct(zero, basis3, [0.1, 0.2, 0.3]) == 0.0
    c = 2.5
    const = [FactorProfile(3, 0, 0, u, np.full_like(u, c))]
    X = np.array([[0.0, 0.0, 0.0], [0.5, -0.2, 0.1], [0.0, 0.0, 1.0]])
    assert np.allclose(reconstruct(const, basis3, X), c / math.sqrt(4 * math.pi), rtol=1e-14)


def test_reconstruct_out_of_range(basis3):
    u = GRID[64:] ** 2
    f = [FactorProfile(3, 0, 0, u, np.ones_like(u))]
    with pytest.raises(OutOfRangeError):
        reconstruct(f, basis3, [1.0, 1.0, 0.0])
