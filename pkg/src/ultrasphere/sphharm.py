"""Real orthonormal spherical harmonics on S^{n-1} as solid harmonic polynomials.

Every basis element is stored as a homogeneous harmonic polynomial
``P_{k,j}`` (coefficients over the degree-``j`` monomials); its restriction
to the unit sphere is ``Y_{k,j}``.  Indices ``k`` are 0-based throughout.
"""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from itertools import product

import numpy as np

from ._poly import (
    differentiate,
    laplacian_matrix,
    monomial_values,
    monomials,
    sphere_area,
    sphere_moments,
)
from .errors import ConsistencyError, InvalidArgumentError, OutOfRangeError

__all__ = [
    "HarmonicBasis",
    "Rotation",
    "build_basis",
    "derivative_growth",
    "eval_solid",
    "fit_growth_constants",
    "growth_sweep",
    "harmonic_dimension",
    "laplacian_kernel_dimension",
    "random_rotation",
    "zonal",
]

SVD_RANK_THRESHOLD = 1e-10


def _check_nj(n, j):
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"dimension n must be an integer >= 2, got {n!r}")
    if int(j) != j or j < 0:
        raise InvalidArgumentError(f"degree j must be an integer >= 0, got {j!r}")


def harmonic_dimension(n, j):
    """Dimension of the space of degree-``j`` spherical harmonics on S^{n-1}.

    Parameters
    ----------
    n : int
        Ambient dimension, ``n >= 2``.
    j : int
        Degree, ``j >= 0``.

    Returns
    -------
    int
        ``C(j+n-1, n-1) - C(j+n-3, n-1)``.
    """
    _check_nj(n, j)
    total = math.comb(j + n - 1, n - 1)
    lower = math.comb(j + n - 3, n - 1) if j >= 2 else 0
    return total - lower


def laplacian_kernel_dimension(n, j):
    """Null-space dimension of the Laplacian on degree-``j`` polynomials (SVD)."""
    _check_nj(n, j)
    size = monomials(n, j).shape[0]
    L = laplacian_matrix(n, j)
    if L.shape[0] == 0:
        return size
    sv = np.linalg.svd(L, compute_uv=False)
    rank = int(np.sum(sv > SVD_RANK_THRESHOLD * sv[0]))
    return size - rank


def _lap_reduced(poly):
    # Laplacian in the variables x2..xn of a dict {exponent tuple: Fraction}.
    out = {}
    for e, c in poly.items():
        for i, a in enumerate(e):
            if a >= 2:
                f = e[:i] + (a - 2,) + e[i + 1:]
                out[f] = out.get(f, 0) + c * a * (a - 1)
    return {e: c for e, c in out.items() if c != 0}


def _harmonic_kernel(n, j):
    """Rational basis of harmonic polynomials of degree j, one per free monomial.

    A harmonic polynomial ``sum_k x1**k g_k(x')`` is fixed by ``g_0`` and
    ``g_1`` through ``(k+2)(k+1) g_{k+2} = -Lap' g_k``; seeding each with a
    single monomial gives ``harmonic_dimension(n, j)`` independent vectors.
    Returned as dicts {exponent tuple: Fraction} in lexicographic seed order.
    """
    seeds = []
    for k0 in (1, 0):
        if j - k0 < 0:
            continue
        for rest in monomials(n - 1, j - k0):
            seeds.append((k0, tuple(int(a) for a in rest)))
    seeds.sort(reverse=True)

    vectors = []
    for k0, rest in seeds:
        vec = {}
        g = {rest: Fraction(1)}
        k = k0
        while g:
            for e, c in g.items():
                vec[(k,) + e] = c
            if j - k < 2:
                break
            g = {e: -c / ((k + 2) * (k + 1)) for e, c in _lap_reduced(g).items()}
            k += 2
        vectors.append(vec)
    return vectors


@lru_cache(maxsize=None)
def _rational_moment(exp):
    # Sphere moment of x**exp divided by 2 pi^{n/2} / Gamma(|exp|/2 + n/2);
    # Gamma(b + 1/2) / sqrt(pi) = (2b)! / (4^b b!).
    out = Fraction(1)
    for a in exp:
        if a % 2:
            return Fraction(0)
        b = a // 2
        out *= Fraction(math.factorial(2 * b), 4 ** b * math.factorial(b))
    return out


def _rational_inner(u, v):
    total = Fraction(0)
    for a, ca in u.items():
        for b, cb in v.items():
            m = _rational_moment(tuple(x + y for x, y in zip(a, b)))
            if m:
                total += ca * cb * m
    return total


def _orthonormal_block(n, j, vectors, exps):
    """Gram-Schmidt in exact rational arithmetic, then one float normalization.

    Each kernel vector lives in a single parity class of exponents, and
    classes are orthogonal, so the sweep runs per class in seed order.
    """
    index = {tuple(int(a) for a in e): i for i, e in enumerate(exps)}
    # moment(alpha) = common * rational(alpha) for every alpha of degree 2j
    common = math.exp(math.log(2.0) + 0.5 * n * math.log(math.pi) - math.lgamma(j + 0.5 * n))
    classes = {}
    for i, v in enumerate(vectors):
        parity = tuple(a % 2 for a in next(iter(v)))
        classes.setdefault(parity, []).append(i)
    out = np.zeros((len(vectors), exps.shape[0]))
    for members in classes.values():
        done = []
        for i in members:
            w = dict(vectors[i])
            for q, qq in done:
                coef = _rational_inner(w, q) / qq
                if coef:
                    for e, c in q.items():
                        w[e] = w.get(e, 0) - coef * c
            w = {e: c for e, c in w.items() if c != 0}
            ww = _rational_inner(w, w)
            if ww <= 0:
                raise ConsistencyError(f"degree {j}: kernel vector {i} collapsed during orthogonalization")
            done.append((w, ww))
            scale = 1.0 / math.sqrt(common * float(ww))
            for e, c in w.items():
                out[i, index[e]] = float(c) * scale
    return out


def _moment_gram(exps):
    sums = exps[:, None, :] + exps[None, :, :]
    N = exps.shape[0]
    return sphere_moments(sums.reshape(N * N, -1)).reshape(N, N)


@dataclass(frozen=True)
class HarmonicBasis:
    """Orthonormal real spherical harmonics up to degree ``jmax`` on S^{n-1}.

    Attributes
    ----------
    n : int
        Ambient dimension.
    jmax : int
        Largest degree held.
    exponents : tuple of ndarray
        ``exponents[j]`` is the (N_j, n) monomial exponent array of degree ``j``.
    coefficients : tuple of ndarray
        ``coefficients[j]`` has shape (d_j, N_j); row ``k`` is ``P_{k,j}``.
    area : float
        ``|S^{n-1}|``.
    """

    n: int
    jmax: int
    exponents: tuple
    coefficients: tuple
    area: float
    offsets: tuple = field(init=False, repr=False)

    def __post_init__(self):
        for arr in self.exponents + self.coefficients:
            arr.flags.writeable = False
        offs = [0]
        for c in self.coefficients:
            offs.append(offs[-1] + c.shape[0])
        object.__setattr__(self, "offsets", tuple(offs))

    @property
    def size(self):
        """Total number of basis functions over all degrees."""
        return self.offsets[-1]

    def dim(self, j):
        self._check_degree(j)
        return self.coefficients[j].shape[0]

    def index(self, j, k):
        """Flat position of ``(j, k)`` in the stacked degree order."""
        if not 0 <= k < self.dim(j):
            raise OutOfRangeError(f"k={k} outside 0..{self.dim(j) - 1} for degree {j}")
        return self.offsets[j] + k

    def _check_degree(self, j):
        if not 0 <= j <= self.jmax:
            raise OutOfRangeError(f"degree {j} outside 0..{self.jmax}")

    def solid(self, j, X):
        """Values of every ``P_{k,j}`` at points X, shape (m, d_j)."""
        self._check_degree(j)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.n:
            raise InvalidArgumentError(f"points must have {self.n} coordinates")
        return monomial_values(self.exponents[j], X) @ self.coefficients[j].T

    def evaluate(self, X, jmax=None):
        """All solid harmonics up to ``jmax`` at X, stacked as (m, size)."""
        jmax = self.jmax if jmax is None else jmax
        return np.hstack([self.solid(j, X) for j in range(jmax + 1)])

    def laplacian_residual(self, j):
        """Largest coefficient norm of ``Lap P_{k,j}`` over k."""
        L = laplacian_matrix(self.n, j)
        if L.shape[0] == 0:
            return 0.0
        return float(np.max(np.linalg.norm(self.coefficients[j] @ L.T, axis=1)))

    def gram(self, j):
        """Exact sphere Gram matrix of the degree-j block (from monomial moments)."""
        C = self.coefficients[j]
        return C @ _moment_gram(self.exponents[j]) @ C.T

    def to_json(self):
        """JSON text with per-(j, k) exponent and coefficient lists."""
        entries = []
        for j in range(self.jmax + 1):
            exps = self.exponents[j].tolist()
            for k, row in enumerate(self.coefficients[j]):
                nz = np.nonzero(row)[0]
                entries.append({
                    "j": j,
                    "k": k,
                    "exponents": [exps[i] for i in nz],
                    "coefficients": [float(row[i]) for i in nz],
                })
        return json.dumps({"n": self.n, "Jmax": self.jmax, "harmonics": entries})

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        n, jmax = int(data["n"]), int(data["Jmax"])
        exps = tuple(monomials(n, j) for j in range(jmax + 1))
        lookup = [{tuple(e): i for i, e in enumerate(ex.tolist())} for ex in exps]
        coefs = [np.zeros((harmonic_dimension(n, j), exps[j].shape[0])) for j in range(jmax + 1)]
        for item in data["harmonics"]:
            j, k = item["j"], item["k"]
            for e, c in zip(item["exponents"], item["coefficients"]):
                coefs[j][k, lookup[j][tuple(e)]] = c
        return cls(n, jmax, exps, tuple(coefs), sphere_area(n))


@lru_cache(maxsize=32)
def build_basis(n, jmax):
    """Construct an orthonormal harmonic basis of degrees ``0..jmax``.

    For each degree the harmonic polynomials are generated from a
    lexicographically ordered set of free monomials, then orthogonalized by
    Gram-Schmidt in the exact sphere inner product (rational arithmetic) and
    normalized once in floating point.  The result is deterministic and
    cached; its arrays are read-only.

    Raises
    ------
    InvalidArgumentError
        If ``n < 2`` or ``jmax < 0``.
    ConsistencyError
        If the generated kernel disagrees with the SVD rank of the Laplacian
        or with ``harmonic_dimension``.
    """
    _check_nj(n, jmax)
    exps, coefs = [], []
    for j in range(jmax + 1):
        E = monomials(n, j)
        V = _harmonic_kernel(n, j)
        d = harmonic_dimension(n, j)
        assert d > 0
        kernel = laplacian_kernel_dimension(n, j)
        if len(V) != d or kernel != d:
            raise ConsistencyError(
                f"degree {j}: generated {len(V)} harmonics, SVD kernel {kernel}, expected {d}"
            )
        exps.append(E)
        coefs.append(_orthonormal_block(n, j, V, E))
    return HarmonicBasis(n, jmax, tuple(exps), tuple(coefs), sphere_area(n))


def eval_solid(basis, j, k, x):
    """Evaluate ``P_{k,j}`` at one point (returns float) or many (returns array)."""
    x = np.asarray(x, dtype=float)
    col = basis.index(j, k) - basis.offsets[j]
    vals = basis.solid(j, x)[:, col]
    return float(vals[0]) if x.ndim == 1 else vals


def zonal(basis, j, x, omega, *, atol=1e-12):
    """Zonal harmonic ``Z_j(x, omega) = sum_k P_{k,j}(x) Y_{k,j}(omega)``.

    ``x`` and ``omega`` are single points or row-paired arrays.  ``omega``
    must lie on the unit sphere to within ``atol``.
    """
    x = np.asarray(x, dtype=float)
    omega = np.asarray(omega, dtype=float)
    scalar = x.ndim == 1 and omega.ndim == 1
    X, W = np.atleast_2d(x), np.atleast_2d(omega)
    if np.any(np.abs(np.linalg.norm(W, axis=1) - 1.0) > atol):
        raise InvalidArgumentError("omega must be a unit vector")
    vals = np.sum(basis.solid(j, X) * basis.solid(j, W), axis=1)
    return float(vals[0]) if scalar else vals


@dataclass(frozen=True)
class Rotation:
    """An element of SO(n) stored as an n x n matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        T = np.asarray(self.matrix, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise InvalidArgumentError("rotation matrix must be square")
        if np.max(np.abs(T.T @ T - np.eye(T.shape[0]))) > 1e-12:
            raise InvalidArgumentError("rotation matrix is not orthogonal")
        if abs(np.linalg.det(T) - 1.0) > 1e-12:
            raise InvalidArgumentError("rotation matrix must have determinant +1")
        object.__setattr__(self, "matrix", T)

    @property
    def n(self):
        return self.matrix.shape[0]

    def apply(self, X):
        """Rotate points: rows of X map to ``T @ x``."""
        return np.asarray(X, dtype=float) @ self.matrix.T

    @property
    def inverse(self):
        return Rotation(self.matrix.T.copy())


def random_rotation(n, seed=None):
    """Draw a Haar-distributed rotation of R^n.

    A Gaussian matrix is QR-factorized, the signs of R's diagonal are moved
    into Q so the factorization is unique, and one column is flipped when
    the determinant is negative.

    Parameters
    ----------
    n : int
        Dimension, ``n >= 2``.
    seed : int, SeedSequence or Generator, optional
        Source of randomness.
    """
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"dimension n must be an integer >= 2, got {n!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.where(np.diag(R) < 0, -1.0, 1.0)
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Rotation(Q)


def derivative_growth(basis, j, coef, radius=0.5, max_order=6, points=None):
    """Normalized derivative sizes of a harmonic polynomial on a ball.

    For ``Q = sum_k coef[k] P_{k,j}`` and each order ``a <= max_order``
    returns ``max_{|alpha|=a} max_{x in grid} |d^alpha Q(x)| / (alpha! ||Q||_{L2(S)})``.
    The grid is ``points`` (inside the ball) or a default set of shells.
    """
    coef = np.asarray(coef, dtype=float)
    if points is None:
        rng = np.random.default_rng(12345)
        dirs = rng.standard_normal((400, basis.n))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        shells = [radius * s for s in (0.25, 0.5, 0.75, 1.0)]
        points = np.vstack([np.zeros((1, basis.n))] + [s * dirs for s in shells])
    P = coef @ basis.coefficients[j]
    norm = float(np.linalg.norm(coef))  # orthonormal basis: L2 norm = coefficient norm
    out = np.zeros(max_order + 1)
    for a in range(max_order + 1):
        for alpha in product(range(a + 1), repeat=basis.n):
            if sum(alpha) != a:
                continue
            e, c = differentiate(basis.exponents[j], P, alpha)
            if e.shape[0] == 0:
                continue
            vals = monomial_values(e, points) @ c[0]
            afact = math.prod(math.factorial(x) for x in alpha)
            out[a] = max(out[a], float(np.max(np.abs(vals))) / (afact * norm))
    return out


def fit_growth_constants(growth):
    """Fit ``G_a <= C * L**a`` to per-order maxima ``growth[a]``.

    ``log L`` is the least-squares slope of ``log G_a`` over the orders with
    ``G_a > 0``; ``C`` is then the smallest constant making the bound hold.
    """
    growth = np.asarray(growth, dtype=float)
    orders = np.nonzero(growth > 0)[0]
    if orders.size == 0:
        return 0.0, 1.0
    if orders.size == 1:
        return float(growth[orders[0]]), 1.0
    slope, _ = np.polyfit(orders, np.log(growth[orders]), 1)
    L = float(np.exp(slope))
    C = float(np.max(growth[orders] / L ** orders))
    return C, L


def growth_sweep(n, jmax, samples=3, seed=0, radius=0.5, max_order=6):
    """Fitted ``(C, L)`` for random harmonics of every degree ``1..jmax``.

    ``samples`` random unit-norm ``Q`` per degree; the per-order maxima over
    all of them are fitted with :func:`fit_growth_constants`.
    """
    basis = build_basis(n, jmax)
    rng = np.random.default_rng(seed)
    worst = np.zeros(max_order + 1)
    for j in range(1, jmax + 1):
        for _ in range(samples):
            coef = rng.standard_normal(basis.dim(j))
            coef /= np.linalg.norm(coef)
            worst = np.maximum(worst, derivative_growth(basis, j, coef, radius, max_order))
    C, L = fit_growth_constants(worst)
    return C, L, worst
