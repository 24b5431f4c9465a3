"""Product quadrature on S^{n-1}, coefficient tables, analysis and synthesis."""

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from ._poly import monomial_values, monomials, sphere_moments
from .errors import CertificationError, InvalidArgumentError, OutOfRangeError
from .sphharm import harmonic_dimension

__all__ = [
    "CoeffTable",
    "SphereQuadrature",
    "analyze",
    "build_quadrature",
    "gauss_jacobi",
    "synthesize",
]

FORMAT_VERSION = 1
EXACTNESS_ATOL = 1e-10


def gauss_jacobi(npts, alpha, beta):
    """Gauss-Jacobi nodes and weights for ``(1-t)**alpha (1+t)**beta`` on [-1, 1].

    Golub-Welsch: eigen-decomposition of the symmetric tridiagonal Jacobi
    matrix of the three-term recurrence.  Exact for polynomials of degree
    ``2*npts - 1``.
    """
    if npts < 1:
        raise InvalidArgumentError("need at least one node")
    k = np.arange(npts, dtype=float)
    ab = alpha + beta
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (beta ** 2 - alpha ** 2) / ((2 * k + ab) * (2 * k + ab + 2))
    diag[0] = (beta - alpha) / (ab + 2)
    kk = np.arange(1, npts, dtype=float)
    off = np.sqrt(
        4 * kk * (kk + alpha) * (kk + beta) * (kk + ab)
        / ((2 * kk + ab) ** 2 * (2 * kk + ab + 1) * (2 * kk + ab - 1))
    )
    nodes, vecs = eigh_tridiagonal(diag, off)
    mu0 = math.exp((ab + 1) * math.log(2.0) + gammaln(alpha + 1) + gammaln(beta + 1) - gammaln(ab + 2))
    weights = mu0 * vecs[0] ** 2
    if alpha == beta:
        # symmetrize: the rule is exactly even for symmetric weights
        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])
    return nodes, weights


@dataclass(frozen=True)
class SphereQuadrature:
    """Nodes and positive weights on S^{n-1}, exact for polynomial degree ``degree``."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    degree: int

    def __post_init__(self):
        for arr in (self.nodes, self.weights):
            arr.flags.writeable = False

    @property
    def size(self):
        return self.weights.size

    def integrate(self, values):
        """Weighted sum of function values at the nodes (last axis)."""
        return np.asarray(values) @ self.weights


def _sphere_nodes(n, npolar, nazimuth):
    # x = (cos t1, sin t1 cos t2, ..., sin t1..sin t_{n-2} cos phi, ... sin phi);
    # the m-th polar angle carries weight sin^{n-1-m}, i.e. Gauss-Jacobi with
    # alpha = beta = (n-2-m)/2 in cos t_m.
    phi = 2 * np.pi * np.arange(nazimuth) / nazimuth
    pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    wts = np.full(nazimuth, 2 * np.pi / nazimuth)
    for m in range(n - 2, 0, -1):
        a = 0.5 * (n - 2 - m)
        t, w = gauss_jacobi(npolar, a, a)
        s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
        pts = np.concatenate(
            [np.hstack([np.full((pts.shape[0], 1), ti), si * pts]) for ti, si in zip(t, s)]
        )
        wts = np.concatenate([wi * wts for wi in w])
    return pts, wts


def build_quadrature(n, degree):
    """Product rule on S^{n-1} exact for every polynomial of total degree <= ``degree``.

    Gauss-Jacobi in each polar angle, uniform azimuth.  The azimuth count is
    the smallest even number >= ``degree + 1`` so the node set is antipodally
    symmetric.  Exactness is certified against the monomial-moment formula
    before the rule is returned.

    Raises
    ------
    CertificationError
        If some monomial of degree <= ``degree`` is not reproduced to 1e-10.
    """
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"dimension n must be an integer >= 2, got {n!r}")
    if int(degree) != degree or degree < 0:
        raise InvalidArgumentError(f"degree must be an integer >= 0, got {degree!r}")
    n, degree = int(n), int(degree)
    npolar = degree // 2 + 1
    nazimuth = degree + 1 + (degree + 1) % 2
    nodes, weights = _sphere_nodes(n, npolar, nazimuth)
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    quad = SphereQuadrature(n, nodes, weights, degree)
    _certify(quad)
    return quad


def _certify(quad):
    for d in range(quad.degree + 1):
        exps = monomials(quad.n, d)
        approx = monomial_values(exps, quad.nodes).T @ quad.weights
        err = np.abs(approx - sphere_moments(exps))
        bad = int(np.argmax(err))
        if err[bad] > EXACTNESS_ATOL:
            mono = tuple(int(a) for a in exps[bad])
            raise CertificationError(
                f"quadrature misses monomial {mono} by {err[bad]:.3e}", monomial=mono
            )


@dataclass
class CoeffTable:
    """Coefficients ``c_{k,j}`` for ``0 <= j <= J``, ``0 <= k < d_j``.

    ``blocks[j]`` is a 1-D array of length ``d_j``.
    """

    n: int
    J: int
    blocks: list

    def __post_init__(self):
        if len(self.blocks) != self.J + 1:
            raise InvalidArgumentError("need one coefficient block per degree")
        self.blocks = [np.asarray(b, dtype=float) for b in self.blocks]
        for j, b in enumerate(self.blocks):
            if b.shape != (harmonic_dimension(self.n, j),):
                raise InvalidArgumentError(f"block {j} must have length {harmonic_dimension(self.n, j)}")

    @classmethod
    def zeros(cls, n, J):
        return cls(n, J, [np.zeros(harmonic_dimension(n, j)) for j in range(J + 1)])

    @classmethod
    def from_flat(cls, n, J, flat):
        flat = np.asarray(flat, dtype=float)
        blocks, start = [], 0
        for j in range(J + 1):
            d = harmonic_dimension(n, j)
            blocks.append(flat[start:start + d].copy())
            start += d
        if start != flat.size:
            raise InvalidArgumentError("flat coefficient vector has the wrong length")
        return cls(n, J, blocks)

    def flat(self):
        return np.concatenate(self.blocks)

    def __getitem__(self, jk):
        j, k = jk
        if not 0 <= j <= self.J or not 0 <= k < self.blocks[j].size:
            raise OutOfRangeError(f"no entry (j={j}, k={k})")
        return float(self.blocks[j][k])

    def entries(self):
        for j, b in enumerate(self.blocks):
            for k, c in enumerate(b):
                yield j, k, float(c)

    def degree_norms(self):
        """Euclidean norm of each degree block."""
        return np.array([np.linalg.norm(b) for b in self.blocks])

    def to_jsonl(self):
        lines = [json.dumps({"n": self.n, "J": self.J, "format_version": FORMAT_VERSION})]
        lines += [json.dumps({"j": j, "k": k, "c": c}) for j, k, c in self.entries()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        if head.get("format_version") != FORMAT_VERSION:
            raise InvalidArgumentError(f"unsupported table format {head.get('format_version')!r}")
        table = cls.zeros(int(head["n"]), int(head["J"]))
        for ln in lines[1:]:
            rec = json.loads(ln)
            j, k = int(rec["j"]), int(rec["k"])
            if not 0 <= j <= table.J or not 0 <= k < table.blocks[j].size:
                raise OutOfRangeError(f"entry (j={j}, k={k}) outside the table")
            table.blocks[j][k] = float(rec["c"])
        return table

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["j", "k", "c"])
        for j, k, c in self.entries():
            writer.writerow([j, k, repr(c)])
        return buf.getvalue()


def _check_pair(basis, quad):
    if basis.n != quad.n:
        raise InvalidArgumentError(f"basis is on S^{basis.n - 1}, quadrature on S^{quad.n - 1}")
    if quad.degree < 2 * basis.jmax:
        raise InvalidArgumentError(
            f"quadrature degree {quad.degree} < 2*Jmax = {2 * basis.jmax}: products would alias"
        )


def analyze(phi, basis, quad):
    """Project a function on the sphere onto the basis.

    ``c_{k,j} = sum_i w_i phi(omega_i) Y_{k,j}(omega_i)``.

    Parameters
    ----------
    phi : callable
        Vectorized: maps an (m, n) array of unit vectors to m values.
    basis : HarmonicBasis
    quad : SphereQuadrature
        Must be exact to degree ``2 * basis.jmax``.
    """
    _check_pair(basis, quad)
    values = np.asarray(phi(quad.nodes), dtype=float).reshape(quad.size)
    Y = basis.evaluate(quad.nodes)
    return CoeffTable.from_flat(basis.n, basis.jmax, (quad.weights * values) @ Y)


def synthesize(table, basis, omega):
    """Evaluate ``sum c_{k,j} Y_{k,j}(omega)`` at one or many unit vectors."""
    if table.n != basis.n or table.J > basis.jmax:
        raise InvalidArgumentError("coefficient table does not fit the basis")
    omega = np.asarray(omega, dtype=float)
    vals = basis.evaluate(np.atleast_2d(omega), table.J) @ table.flat()
    return float(vals[0]) if omega.ndim == 1 else vals
