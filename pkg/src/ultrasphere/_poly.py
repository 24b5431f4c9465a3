"""Homogeneous polynomials stored as (exponents, coefficients) arrays.

A polynomial of degree ``j`` in ``n`` variables is a coefficient vector over
``monomials(n, j)``; several polynomials of the same degree share the
exponent array and stack their coefficients as rows.
"""

from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import gammaln


@lru_cache(maxsize=None)
def _monomials(n, j):
    # combinations_with_replacement over variable indices yields each
    # multiset once; turn it into exponent tuples and sort descending lex.
    exps = []
    for combo in combinations_with_replacement(range(n), j):
        e = [0] * n
        for i in combo:
            e[i] += 1
        exps.append(tuple(e))
    exps.sort(reverse=True)
    return tuple(exps)


def monomials(n, j):
    """Exponent array of shape (N, n), lexicographically descending.

    ``x1**j`` comes first, ``xn**j`` last.
    """
    exps = _monomials(n, j)
    if not exps:
        return np.zeros((0, n), dtype=np.int64)
    return np.array(exps, dtype=np.int64)


@lru_cache(maxsize=None)
def monomial_index(n, j):
    return {e: i for i, e in enumerate(_monomials(n, j))}


def sphere_area(n):
    """Surface area of the unit sphere in R^n."""
    return float(np.exp(np.log(2.0) + 0.5 * n * np.log(np.pi) - gammaln(0.5 * n)))


def sphere_moments(exps):
    """Exact integrals of x**alpha over the unit sphere, one per row of ``exps``.

    Zero when any exponent is odd, otherwise
    ``2 * prod Gamma((a_i + 1) / 2) / Gamma(sum (a_i + 1) / 2)``.
    """
    exps = np.atleast_2d(np.asarray(exps, dtype=np.int64))
    out = np.zeros(exps.shape[0])
    even = np.all(exps % 2 == 0, axis=1)
    if np.any(even):
        half = (exps[even] + 1) / 2.0
        logm = np.log(2.0) + gammaln(half).sum(axis=1) - gammaln(half.sum(axis=1))
        out[even] = np.exp(logm)
    return out


def monomial_values(exps, X):
    """Matrix of x**alpha values, shape (m, N) for points X of shape (m, n)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    exps = np.asarray(exps, dtype=np.int64)
    if exps.shape[0] == 0:
        return np.zeros((X.shape[0], 0))
    maxdeg = int(exps.max()) if exps.size else 0
    # powers[d, m, i] = X[m, i] ** d, built by repeated multiplication so
    # that 0**0 == 1 and results are bit-identical across platforms.
    powers = np.empty((maxdeg + 1,) + X.shape)
    powers[0] = 1.0
    for d in range(1, maxdeg + 1):
        powers[d] = powers[d - 1] * X
    out = np.ones((X.shape[0], exps.shape[0]))
    for i in range(X.shape[1]):
        out *= powers[exps[:, i], :, i].T
    return out


def laplacian_matrix(n, j):
    """Matrix of the Laplacian from degree-j to degree-(j-2) coefficients."""
    src = _monomials(n, j)
    if j < 2:
        return np.zeros((0, len(src)))
    dst = monomial_index(n, j - 2)
    L = np.zeros((len(dst), len(src)))
    for col, e in enumerate(src):
        for i in range(n):
            if e[i] >= 2:
                f = list(e)
                f[i] -= 2
                L[dst[tuple(f)], col] += e[i] * (e[i] - 1)
    return L


def differentiate(exps, coefs, alpha):
    """Apply d^alpha to polynomials (rows of ``coefs``) over ``exps``.

    Returns the new (exponents, coefficients); terms that vanish are dropped.
    """
    exps = np.asarray(exps, dtype=np.int64)
    coefs = np.atleast_2d(np.asarray(coefs, dtype=float))
    alpha = np.asarray(alpha, dtype=np.int64)
    keep = np.all(exps >= alpha, axis=1)
    new_exps = exps[keep] - alpha
    factor = np.ones(int(keep.sum()))
    for i, a in enumerate(alpha):
        for d in range(a):
            factor *= exps[keep, i] - d
    return new_exps, coefs[:, keep] * factor
