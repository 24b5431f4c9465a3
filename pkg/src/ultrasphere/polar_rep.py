"""Polar pullback of functions on R^n: radial coefficient profiles.

``Phi(r, omega) = phi(r * omega)`` is expanded in spherical harmonics for
each ``r`` on a symmetric grid, giving profiles ``a_{k,j}(r)``.  A profile
family comes from a smooth ``phi`` only if every ``a_{k,j}`` has parity
``(-1)**j`` and vanishes to order ``j`` at 0; such profiles factor as
``a_{k,j}(r) = r**j * b_{k,j}(r**2)`` and ``phi`` is recovered as
``sum b_{k,j}(|x|**2) P_{k,j}(x)``.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import ordered_map
from .errors import InvalidArgumentError, NumericalInstabilityError, OutOfRangeError
from .quadrature import FORMAT_VERSION, CoeffTable, _check_pair
from .sphharm import harmonic_dimension

__all__ = [
    "FactorProfile",
    "ProfileSet",
    "RadialCoeffProfile",
    "VMembershipReport",
    "check_V_membership",
    "default_grid",
    "pullback_profiles",
    "radial_factorize",
    "reconstruct",
    "taylor_coefficients",
]

DEFAULT_TOL = 1e-7
DEFAULT_MMAX = 12
WINDOW_FRACTION = 0.25
INTERP_POINTS = 8
RADII_PER_CHUNK = 16

PARITY = "parity"
DERIVATIVE = "derivative_order"
SMOOTHNESS = "smoothness"


def default_grid(R=1.0, half=64):
    """Symmetric Chebyshev-Lobatto grid on [-R, R] with ``2*half + 1`` points.

    The nonnegative half is ``R * (1 - cos(pi*i/half)) / 2``, so points
    cluster at 0 (and at R) rather than only at the ends of [-R, R].
    """
    pos = R * 0.5 * (1.0 - np.cos(np.pi * np.arange(half + 1) / half))
    pos[0] = 0.0
    return np.concatenate([-pos[:0:-1], pos])


def _check_grid(grid):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3:
        raise InvalidArgumentError("radial grid must be a 1-D array with at least 3 points")
    if np.any(np.diff(grid) <= 0):
        raise InvalidArgumentError("radial grid must be strictly increasing")
    if not np.array_equal(grid, -grid[::-1]):
        raise InvalidArgumentError("radial grid must be symmetric about 0 (and so contain 0)")
    return grid


@dataclass(frozen=True)
class RadialCoeffProfile:
    """Samples ``a_{k,j}(r)`` on a symmetric grid."""

    n: int
    j: int
    k: int
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = _check_grid(self.grid)
        values = np.array(self.values, dtype=float)
        if values.shape != grid.shape:
            raise InvalidArgumentError("profile values must match the grid")
        if not 0 <= self.k < harmonic_dimension(self.n, self.j):
            raise OutOfRangeError(f"no harmonic (j={self.j}, k={self.k}) for n={self.n}")
        grid = grid.copy()
        grid.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def parity_residual(self):
        """max |a(-r) - (-1)**j a(r)| over the grid."""
        sign = -1.0 if self.j % 2 else 1.0
        return float(np.max(np.abs(self.values[::-1] - sign * self.values)))

    def to_record(self):
        return {"j": self.j, "k": self.k, "grid": self.grid.tolist(), "values": self.values.tolist()}


@dataclass
class ProfileSet:
    """All profiles ``a_{k,j}``, ``j <= J``, on a shared grid.

    ``blocks[j]`` has shape ``(d_j, len(grid))``.
    """

    n: int
    J: int
    grid: np.ndarray
    blocks: list

    def __post_init__(self):
        self.grid = _check_grid(self.grid)
        if len(self.blocks) != self.J + 1:
            raise InvalidArgumentError("need one profile block per degree")
        self.blocks = [np.asarray(b, dtype=float) for b in self.blocks]
        for j, b in enumerate(self.blocks):
            if b.shape != (harmonic_dimension(self.n, j), self.grid.size):
                raise InvalidArgumentError(f"profile block {j} has shape {b.shape}")

    def __getitem__(self, jk):
        j, k = jk
        if not 0 <= j <= self.J or not 0 <= k < self.blocks[j].shape[0]:
            raise OutOfRangeError(f"no profile (j={j}, k={k})")
        return RadialCoeffProfile(self.n, j, k, self.grid, self.blocks[j][k])

    def __iter__(self):
        for j, b in enumerate(self.blocks):
            for k in range(b.shape[0]):
                yield RadialCoeffProfile(self.n, j, k, self.grid, b[k])

    def table_at(self, index):
        """Coefficient table at grid point ``index`` (radius ``grid[index]``)."""
        return CoeffTable(self.n, self.J, [b[:, index].copy() for b in self.blocks])

    def degree_maxima(self):
        """max over k and r of |a_{k,j}(r)| for each j."""
        return np.array([np.max(np.abs(b)) if b.size else 0.0 for b in self.blocks])

    def to_jsonl(self):
        lines = [json.dumps({"n": self.n, "J": self.J, "format_version": FORMAT_VERSION})]
        lines += [json.dumps(p.to_record()) for p in self]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = json.loads(lines[0])
        if head.get("format_version") != FORMAT_VERSION:
            raise InvalidArgumentError(f"unsupported profile format {head.get('format_version')!r}")
        n, J = int(head["n"]), int(head["J"])
        recs = [json.loads(ln) for ln in lines[1:]]
        if not recs:
            raise InvalidArgumentError("profile file has no records")
        grid = np.array(recs[0]["grid"], dtype=float)
        blocks = [np.zeros((harmonic_dimension(n, j), grid.size)) for j in range(J + 1)]
        for rec in recs:
            j, k = int(rec["j"]), int(rec["k"])
            if not 0 <= j <= J or not 0 <= k < blocks[j].shape[0]:
                raise OutOfRangeError(f"profile (j={j}, k={k}) outside the set")
            if not np.array_equal(np.array(rec["grid"], dtype=float), grid):
                raise InvalidArgumentError("all profiles in a file must share one grid")
            blocks[j][k] = rec["values"]
        return cls(n, J, grid, blocks)


def pullback_profiles(phi, basis, quad, grid=None):
    """Radial coefficient profiles of ``phi`` on a symmetric grid.

    ``a_{k,j}(r_m) = sum_i w_i phi(r_m omega_i) Y_{k,j}(omega_i)``.

    Parameters
    ----------
    phi : callable
        Vectorized on an (m, n) array of points in R^n.
    basis : HarmonicBasis
    quad : SphereQuadrature
        Exact to degree ``2 * basis.jmax``.
    grid : array_like, optional
        Symmetric, strictly increasing, containing 0.  Defaults to
        :func:`default_grid`.
    """
    _check_pair(basis, quad)
    grid = default_grid() if grid is None else _check_grid(grid)
    WY = quad.weights[:, None] * basis.evaluate(quad.nodes)

    def chunk(radii):
        pts = radii[:, None, None] * quad.nodes[None]
        vals = np.asarray(phi(pts.reshape(-1, basis.n)), dtype=float)
        return vals.reshape(radii.size, quad.size) @ WY

    # fixed chunking: BLAS rounding depends on block shape, not on threads
    parts = ordered_map(chunk, [grid[i:i + RADII_PER_CHUNK] for i in range(0, grid.size, RADII_PER_CHUNK)])
    A = np.concatenate(parts).T
    blocks, start = [], 0
    for j in range(basis.jmax + 1):
        d = harmonic_dimension(basis.n, j)
        blocks.append(A[start:start + d].copy())
        start += d
    return ProfileSet(basis.n, basis.jmax, grid, blocks)


@dataclass
class VMembershipReport:
    """Outcome of :func:`check_V_membership`.

    ``entries`` has one dict per profile with its parity residual, the
    largest window-scaled Taylor coefficient of order ``m < j`` and the
    estimates ``a^{(m)}(0)`` for ``m < j``.  ``worst`` names the largest
    violation (or the largest residual when everything passes).
    """

    passed: bool
    tol: float
    fit_degree: int
    window: float
    entries: list = field(default_factory=list)
    worst: dict = None
    failures: list = field(default_factory=list)
    relative_to: str = None

    @property
    def verdict(self):
        return "pass" if self.passed else "fail"

    @property
    def failed_conditions(self):
        return sorted({f["condition"] for f in self.failures})

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "fit_degree": self.fit_degree,
            "window": self.window,
            "failed_conditions": self.failed_conditions,
            "worst": self.worst,
            "failures": self.failures,
            "relative_to": self.relative_to,
        }


def _as_profiles(profiles):
    if isinstance(profiles, RadialCoeffProfile):
        return [profiles]
    plist = list(profiles)
    if not plist:
        raise InvalidArgumentError("no profiles given")
    grid = plist[0].grid
    for p in plist[1:]:
        if not np.array_equal(p.grid, grid):
            raise InvalidArgumentError("profiles must share one grid")
    return plist


def _window_fit(grid, values, degree):
    """Least-squares fit of degree ``degree`` on |r| <= R/4.

    Returns (gamma, w, resid): coefficients of ``(r/w)**m`` (one column
    per profile), the window half-width ``w`` and the max fit residual of
    each column.
    """
    w = WINDOW_FRACTION * float(grid[-1])
    sel = np.abs(grid) <= w * (1 + 1e-12)
    if sel.sum() < 2 * degree + 3:
        raise InvalidArgumentError(
            f"grid too coarse: {int(sel.sum())} points in |r| <= {w:g}, "
            f"a degree-{degree} fit needs {2 * degree + 3}"
        )
    z = grid[sel] / w
    V = z[:, None] ** np.arange(degree + 1)
    gamma = np.linalg.lstsq(V, values[sel], rcond=None)[0]
    resid = np.max(np.abs(values[sel] - V @ gamma), axis=0)
    return gamma, w, resid


def _fit_degree(plist, Mmax):
    Jtop = max(p.j for p in plist)
    return max(DEFAULT_MMAX if Mmax is None else int(Mmax), Jtop + 2)


def check_V_membership(profiles, Mmax=None, tol=DEFAULT_TOL, relative_to=None):
    """Test the conditions characterizing pullbacks of smooth functions.

    (a) parity: ``a_{k,j}(-r) = (-1)**j a_{k,j}(r)``;
    (b) vanishing order: ``a^{(m)}_{k,j}(0) = 0`` for ``m < j``;
    (c) smoothness: the fit reproduces the profile on the window to ``tol``.

    (c) guards (b): derivatives read off a fit mean nothing when the fit
    is poor, as for ``|r|``, which is even but not smooth at 0.

    Derivatives at 0 come from one least-squares fit on ``|r| <= R/4`` of
    degree ``max(Mmax, J + 2)`` (``Mmax`` defaults to 12).  Condition (b)
    is measured on window-scaled coefficients ``|c_m| w**m`` so the
    threshold is independent of ``m``.

    Parameters
    ----------
    profiles : ProfileSet or iterable of RadialCoeffProfile
    Mmax : int, optional
    tol : float
    relative_to : str, optional
        Label of the weight sequence the caller measures against; recorded
        only.

    Raises
    ------
    InvalidArgumentError
        If the fit window holds fewer than ``2*degree + 3`` grid points.
    """
    if not tol > 0:
        raise InvalidArgumentError("tol must be positive")
    plist = _as_profiles(profiles)
    grid = plist[0].grid
    degree = _fit_degree(plist, Mmax)
    gamma, w, resid = _window_fit(grid, np.stack([p.values for p in plist], axis=1), degree)
    fact = np.array([math.factorial(m) for m in range(degree + 1)], dtype=float)

    entries, failures = [], []
    worst = None
    for col, p in enumerate(plist):
        par = p.parity_residual()
        low = np.abs(gamma[:p.j, col])
        deriv = float(low.max()) if p.j else 0.0
        m_bad = int(np.argmax(low)) if p.j else None
        scale = w ** -np.arange(p.j)
        entries.append({
            "j": p.j, "k": p.k,
            "parity_residual": par,
            "derivative_residual": deriv,
            "fit_residual": float(resid[col]),
            "derivatives_at_0": (fact[:p.j] * gamma[:p.j, col] * scale).tolist(),
        })
        checks = ((PARITY, par, {}), (DERIVATIVE, deriv, {"m": m_bad}), (SMOOTHNESS, float(resid[col]), {}))
        for cond, mag, extra in checks:
            rec = {"j": p.j, "k": p.k, "condition": cond, "magnitude": mag, **extra}
            if mag > tol:
                failures.append(rec)
            if worst is None or mag > worst["magnitude"]:
                worst = rec
    return VMembershipReport(not failures, tol, degree, w, entries, worst, failures, relative_to)


def taylor_coefficients(profiles, m, Mmax=None):
    """Table of ``a^{(m)}_{k,j}(0)`` for every profile of a ProfileSet.

    For a smooth ``phi`` this is the expansion of ``d^m/dr^m Phi(0, omega)``
    and has no component of degree ``j > m``.
    """
    degree = _fit_degree(list(profiles), Mmax)
    if not 0 <= m <= degree:
        raise OutOfRangeError(f"derivative order {m} outside 0..{degree}")
    A = np.concatenate(profiles.blocks)
    gamma, w, _ = _window_fit(profiles.grid, A.T, degree)
    flat = math.factorial(m) * gamma[m] / w ** m
    return CoeffTable.from_flat(profiles.n, profiles.J, flat)


def _local_interp(xs, ys, q, npts=INTERP_POINTS):
    """Lagrange interpolation on the ``npts`` grid points nearest each query."""
    npts = min(npts, xs.size)
    idx = np.searchsorted(xs, q)
    start = np.clip(idx - npts // 2, 0, xs.size - npts)
    X = xs[start[:, None] + np.arange(npts)]
    Y = ys[start[:, None] + np.arange(npts)]
    out = np.zeros(q.size)
    for i in range(npts):
        L = np.ones(q.size)
        for k in range(npts):
            if k != i:
                L *= (q - X[:, k]) / (X[:, i] - X[:, k])
        out += L * Y[:, i]
    return out


@dataclass(frozen=True)
class FactorProfile:
    """Samples of ``b_{k,j}(u)`` on ``u = r**2 >= 0``, ascending from 0."""

    n: int
    j: int
    k: int
    u: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float)
        values = np.array(self.values, dtype=float)
        if u.ndim != 1 or u.shape != values.shape or u.size < 2:
            raise InvalidArgumentError("factor grid and values must be matching 1-D arrays")
        if u[0] != 0 or np.any(np.diff(u) <= 0):
            raise InvalidArgumentError("factor grid must start at 0 and increase strictly")
        u.flags.writeable = False
        values.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "values", values)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        flat = np.atleast_1d(u).ravel()
        bad = (flat < 0) | (flat > self.u[-1] * (1 + 1e-12))
        if np.any(bad):
            raise OutOfRangeError(f"u = {flat[bad][0]!r} outside the factor grid [0, {self.u[-1]}]")
        out = _local_interp(self.u, self.values, np.clip(flat, 0.0, self.u[-1]))
        return out.reshape(u.shape) if u.ndim else float(out[0])

    def to_record(self):
        return {"j": self.j, "k": self.k, "u": self.u.tolist(), "values": self.values.tolist()}


def radial_factorize(profile, Mmax=None, tol=DEFAULT_TOL):
    """Even factor ``b`` with ``a(r) = r**j b(r**2)``, sampled on ``u = r**2``.

    Away from 0, ``b(u) = a(sqrt(u)) / u**(j/2)``.  Where that division would
    amplify rounding in ``a`` beyond ``tol``, ``b`` is continued from the
    polynomial fit at 0 instead; ``b(0)`` is always the fitted coefficient of
    ``r**j``.

    Raises
    ------
    InvalidArgumentError
        If the profile fails :func:`check_V_membership`.
    NumericalInstabilityError
        If some ``u`` needs the continuation but lies outside the fit window,
        or the continuation and the quotient disagree by more than ``tol``
        where both are available.
    """
    report = check_V_membership(profile, Mmax, tol)
    if not report.passed:
        f = report.failures[0]
        raise InvalidArgumentError(
            f"profile (j={profile.j}, k={profile.k}) fails the {f['condition']} condition "
            f"(residual {f['magnitude']:.3e} > {tol:g})"
        )
    j = profile.j
    grid = profile.grid
    mid = grid.size // 2
    r = grid[mid:]
    a = profile.values[mid:]
    u = r * r

    # continuation: least-squares fit of r^j * poly(r^2) on the window, so
    # b(u) = poly(u); membership already bounds the remaining terms
    w = WINDOW_FRACTION * float(grid[-1])
    sel = np.abs(grid) <= w * (1 + 1e-12)
    z = grid[sel] / w
    powers = np.arange(j, report.fit_degree + 1, 2)
    V = z[:, None] ** powers
    coef = np.linalg.lstsq(V, profile.values[sel], rcond=None)[0]
    even = coef / w ** powers
    fit = np.polynomial.polynomial.polyval(u, even)
    b = fit.copy()
    # absolute noise level of a: the fit residual on the window, floored at
    # rounding of the largest sample
    resid = float(np.max(np.abs(profile.values[sel] - V @ coef)))
    noise = max(resid, 64 * np.finfo(float).eps * float(np.max(np.abs(profile.values))))
    with np.errstate(divide="ignore"):
        quot_noise = noise / r ** j
    direct = quot_noise <= tol / 8
    b[direct] = a[direct] / r[direct] ** j
    need_fit = ~direct
    beyond = need_fit & (r > w * (1 + 1e-12))
    if np.any(beyond):
        bad = float(u[np.argmax(beyond)])
        raise NumericalInstabilityError(
            f"dividing by r^{j} at u = {bad:.6g} amplifies rounding beyond tol {tol:g}", u=bad
        )
    both = direct & (r <= w)
    if np.any(both):
        gap = np.abs(b[both] - fit[both])
        i = int(np.argmax(gap))
        if gap[i] > tol:
            bad = float(u[both][i])
            raise NumericalInstabilityError(
                f"fit continuation and quotient disagree by {gap[i]:.3e} at u = {bad:.6g}", u=bad
            )
    b[0] = even[0]
    return FactorProfile(profile.n, j, profile.k, u, b)


def reconstruct(factors, basis, x):
    """``sum b_{k,j}(|x|**2) P_{k,j}(x)`` at one point or an (m, n) array.

    Raises
    ------
    OutOfRangeError
        If some ``|x|**2`` lies outside a factor grid.
    """
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    if X.shape[1] != basis.n:
        raise InvalidArgumentError(f"points must have {basis.n} coordinates")
    u = np.einsum("ij,ij->i", X, X)
    out = np.zeros(X.shape[0])
    by_degree = {}
    for f in factors:
        if f.n != basis.n or f.j > basis.jmax:
            raise InvalidArgumentError(f"factor (j={f.j}, k={f.k}) does not fit the basis")
        by_degree.setdefault(f.j, []).append(f)
    for j in sorted(by_degree):
        P = basis.solid(j, X)
        for f in sorted(by_degree[j], key=lambda f: f.k):
            out += f(u) * P[:, f.k]
    return float(out[0]) if x.ndim == 1 else out
