import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import roots_jacobi

from ultrasphere._poly import monomial_values, monomials, sphere_moments
from ultrasphere.errors import CertificationError, InvalidArgumentError, OutOfRangeError
from ultrasphere.quadrature import (
    CoeffTable,
    SphereQuadrature,
    _certify,
    analyze,
    build_quadrature,
    gauss_jacobi,
    synthesize,
)
from ultrasphere.sphharm import build_basis, random_rotation

from conftest import random_unit


@pytest.mark.parametrize("npts,a,b", [(1, 0, 0), (5, 0, 0), (8, 0.5, 0.5), (7, 1.0, 1.0), (6, 1.5, 0.25), (12, 0, 2)])
def test_gauss_jacobi_matches_scipy(npts, a, b):
    x, w = gauss_jacobi(npts, a, b)
    xr, wr = roots_jacobi(npts, a, b)
    assert np.allclose(x, xr, atol=1e-13)
    assert np.allclose(w, wr, rtol=1e-12, atol=1e-15)


def test_moment_formula_low_cases():
    # |S^2| = 4 pi, int x1^2 = 4 pi / 3, int x1^2 x2^2 = 4 pi / 15
    m = sphere_moments([[0, 0, 0], [2, 0, 0], [2, 2, 0], [1, 0, 0]])
    assert np.allclose(m, [4 * math.pi, 4 * math.pi / 3, 4 * math.pi / 15, 0.0], rtol=1e-14)


@pytest.mark.parametrize("n,D", [(2, 0), (2, 7), (3, 0), (3, 1), (3, 16), (4, 9), (5, 6)])
def test_quadrature_invariants(n, D):
    Q = build_quadrature(n, D)
    area = sphere_moments(np.zeros((1, n), dtype=int))[0]
    assert abs(Q.weights.sum() - area) <= 1e-12 * area
    assert np.all(Q.weights > 0)
    assert np.max(np.abs(np.linalg.norm(Q.nodes, axis=1) - 1)) <= 1e-14
    for d in range(D + 1):
        E = monomials(n, d)
        assert np.max(np.abs(monomial_values(E, Q.nodes).T @ Q.weights - sphere_moments(E))) <= 1e-10


def test_quadrature_examples():
    Q3 = build_quadrature(3, 4)
    x1sq = (Q3.nodes[:, 0] ** 2) @ Q3.weights
    assert x1sq == pytest.approx(4 * math.pi / 3, rel=1e-13)
    Q4 = build_quadrature(4, 3)
    assert abs(Q4.nodes[:, 0] @ Q4.weights) < 1e-14


def test_quadrature_antipodal():
    Q = build_quadrature(3, 9)
    # every node has its antipode with the same weight
    for x, w in zip(Q.nodes, Q.weights):
        i = np.argmin(np.linalg.norm(Q.nodes + x, axis=1))
        assert np.linalg.norm(Q.nodes[i] + x) < 1e-14 and Q.weights[i] == pytest.approx(w, rel=1e-13)


def test_certification_failure_names_monomial():
    Q = build_quadrature(3, 4)
    bogus = SphereQuadrature(3, Q.nodes.copy(), Q.weights.copy(), 12)
    with pytest.raises(CertificationError) as err:
        _certify(bogus)
    assert sum(err.value.monomial) <= 12 and len(err.value.monomial) == 3


@pytest.mark.parametrize("n,D", [(1, 4), (3, -1), (3, 2.5)])
def test_build_rejects(n, D):
    with pytest.raises(InvalidArgumentError):
        build_quadrature(n, D)


# analyze / synthesize ---------------------------------------------------


def test_analyze_requires_exactness(basis3):
    with pytest.raises(InvalidArgumentError):
        analyze(lambda W: W[:, 0], basis3, build_quadrature(3, 15))


def test_analyze_single_harmonic(basis3, quad3):
    for j, k in [(0, 0), (2, 1), (5, 7), (8, 16)]:
        col = basis3.index(j, k)
        table = analyze(lambda W: basis3.evaluate(W)[:, col], basis3, quad3)
        flat = table.flat()
        assert flat[col] == pytest.approx(1.0, abs=1e-10)
        flat[col] = 0
        assert np.max(np.abs(flat)) <= 1e-10


def test_analyze_constant(basis3, quad3):
    table = analyze(lambda W: np.ones(len(W)), basis3, quad3)
    assert table[0, 0] == pytest.approx(math.sqrt(4 * math.pi), rel=1e-13)
    assert np.max(np.abs(table.flat()[1:])) <= 1e-10


def test_analyze_x1x2_only_degree_two(basis3, quad3):
    table = analyze(lambda W: W[:, 0] * W[:, 1], basis3, quad3)
    norms = table.degree_norms()
    assert norms[2] > 0.1
    assert np.all(np.delete(norms, 2) <= 1e-10)
    # exact projection: x1 x2 is harmonic, so its norm is sqrt(int x1^2 x2^2) = sqrt(4 pi / 15)
    assert norms[2] == pytest.approx(math.sqrt(4 * math.pi / 15), rel=1e-12)


def test_synthesize_examples(basis3, rng):
    W = random_unit(rng, 30, 3)
    zero = CoeffTable.zeros(3, 8)
    assert np.all(synthesize(zero, basis3, W) == 0)
    single = CoeffTable.zeros(3, 8)
    single.blocks[4][3] = 5.0
    assert np.allclose(synthesize(single, basis3, W), 5 * basis3.solid(4, W)[:, 3], rtol=1e-14)
    assert isinstance(synthesize(single, basis3, W[0]), float)


def band_limited(basis, coefs):
    return lambda W: basis.evaluate(W) @ coefs


@given(st.integers(0, 10 ** 6))
@settings(max_examples=20, deadline=None)
def test_round_trip_and_parseval(seed):
    B = build_basis(3, 8)
    Q = build_quadrature(3, 16)
    c = np.random.default_rng(seed).standard_normal(B.size)
    phi = band_limited(B, c)
    table = analyze(phi, B, Q)
    assert np.max(np.abs(table.flat() - c)) <= 1e-10
    W = random_unit(np.random.default_rng(seed + 1), 200, 3)
    assert np.max(np.abs(synthesize(table, B, W) - phi(W))) <= 1e-10
    energy = Q.weights @ phi(Q.nodes) ** 2
    assert abs(np.sum(table.flat() ** 2) - energy) <= 1e-9 * energy


@given(st.integers(0, 10 ** 6), st.floats(-5, 5), st.floats(-5, 5))
@settings(max_examples=20, deadline=None)
def test_analyze_linear(seed, a, b):
    B = build_basis(3, 6)
    Q = build_quadrature(3, 12)
    g = np.random.default_rng(seed)
    f1, f2 = band_limited(B, g.standard_normal(B.size)), band_limited(B, g.standard_normal(B.size))
    lhs = analyze(lambda W: a * f1(W) + b * f2(W), B, Q).flat()
    rhs = a * analyze(f1, B, Q).flat() + b * analyze(f2, B, Q).flat()
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, abs(a) + abs(b)) * 10


def test_rotation_equivariance_of_degree_norms(basis3, quad3):
    phi = lambda W: np.exp(W[:, 2]) + W[:, 0] * W[:, 1] ** 2
    base = analyze(phi, basis3, quad3).degree_norms()
    for seed in range(5):
        T = random_rotation(3, seed)
        rotated = analyze(lambda W: phi(T.apply(W)), basis3, quad3).degree_norms()
        # only the band-limited part is exactly equivariant; exp(w3) leaks ~1e-6 past J=8
        assert np.max(np.abs(rotated[:6] - base[:6])) <= 1e-9


def test_rotation_equivariance_band_limited(basis3, quad3, rng):
    c = rng.standard_normal(basis3.size)
    phi = band_limited(basis3, c)
    base = analyze(phi, basis3, quad3).degree_norms()
    T = random_rotation(3, 11)
    rotated = analyze(lambda W: phi(T.apply(W)), basis3, quad3).degree_norms()
    assert np.max(np.abs(rotated - base)) <= 1e-9


# tables -----------------------------------------------------------------


def test_table_jsonl_and_csv(basis3, quad3):
    table = analyze(lambda W: np.exp(W[:, 0]), basis3, quad3)
    text = table.to_jsonl()
    assert text.splitlines()[0] == '{"n": 3, "J": 8, "format_version": 1}'
    back = CoeffTable.from_jsonl(text)
    assert np.array_equal(back.flat(), table.flat())
    rows = table.to_csv().splitlines()
    assert rows[0] == "j,k,c" and len(rows) == 1 + basis3.size
    assert float(rows[5].split(",")[2]) == table.flat()[4]


def test_table_errors():
    t = CoeffTable.zeros(3, 2)
    with pytest.raises(OutOfRangeError):
        t[3, 0]
    with pytest.raises(InvalidArgumentError):
        CoeffTable.from_flat(3, 2, np.zeros(8))
    with pytest.raises(InvalidArgumentError):
        CoeffTable.from_jsonl('{"n": 3, "J": 1, "format_version": 99}\n')
    with pytest.raises(OutOfRangeError):
        CoeffTable.from_jsonl('{"n": 3, "J": 1, "format_version": 1}\n{"j": 1, "k": 3, "c": 1.0}\n')


def test_synthesize_incompatible(basis3):
    with pytest.raises(InvalidArgumentError):
        synthesize(CoeffTable.zeros(4, 2), basis3, [1.0, 0, 0])
