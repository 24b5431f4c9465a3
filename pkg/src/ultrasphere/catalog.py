"""Named test functions on R^n with a parseable text form.

Text forms (``name`` or ``name:params``)::

    gaussian                        exp(-|x|^2)
    radial_power:p                  |x|^p
    coordinate_monomial:x1x2^3      x1 * x2^3, optionally suffixed _gaussian
    harmonic_times_gaussian:j,k     P_{k,j}(x) exp(-|x|^2)
    plane_wave_exp:a,i              exp(a * x_i)
    abs_r                           |x|, not smooth at 0
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .sphharm import build_basis, harmonic_dimension

__all__ = ["CATALOG", "FunctionSpec", "UnknownFunctionError", "parse_function"]

CATALOG = (
    "gaussian",
    "radial_power",
    "coordinate_monomial",
    "harmonic_times_gaussian",
    "plane_wave_exp",
    "abs_r",
)

_MONO = re.compile(r"x(\d+)(?:\^(\d+))?")


class UnknownFunctionError(InvalidArgumentError):
    """The text names no catalog function or has malformed parameters."""


def _number(text):
    try:
        v = float(text)
    except ValueError:
        raise UnknownFunctionError(f"not a number: {text!r}") from None
    if not np.isfinite(v):
        raise UnknownFunctionError(f"not a finite number: {text!r}")
    return v


def _integer(text):
    try:
        return int(text)
    except ValueError:
        raise UnknownFunctionError(f"not an integer: {text!r}") from None


def _parse_monomial(text, n):
    body, gauss = (text[:-9], True) if text.endswith("_gaussian") else (text, False)
    pos, alpha = 0, [0] * n
    for m in _MONO.finditer(body):
        if m.start() != pos:
            break
        i, e = int(m.group(1)), int(m.group(2) or 1)
        if not 1 <= i <= n:
            raise UnknownFunctionError(f"coordinate x{i} outside 1..{n}")
        alpha[i - 1] += e
        pos = m.end()
    if pos != len(body) or not body:
        raise UnknownFunctionError(f"malformed monomial {text!r}")
    return tuple(alpha), gauss


@dataclass(frozen=True)
class FunctionSpec:
    """A catalog function with its parameters, bound to a dimension ``n``."""

    name: str
    params: tuple
    n: int

    @property
    def text(self):
        if self.name in ("gaussian", "abs_r"):
            return self.name
        if self.name == "radial_power":
            return f"radial_power:{self.params[0]!r}"
        if self.name == "coordinate_monomial":
            alpha, gauss = self.params
            body = "".join(
                f"x{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(alpha) if e
            ) or "x1^0"
            return f"coordinate_monomial:{body}" + ("_gaussian" if gauss else "")
        if self.name == "harmonic_times_gaussian":
            return f"harmonic_times_gaussian:{self.params[0]},{self.params[1]}"
        return f"plane_wave_exp:{self.params[0]!r},{self.params[1]}"

    def __str__(self):
        return self.text

    def __call__(self, X):
        """Evaluate on an (m, n) array (or a single point)."""
        X = np.asarray(X, dtype=float)
        r2 = np.sum(X * X, axis=-1)
        if self.name == "gaussian":
            return np.exp(-r2)
        if self.name == "abs_r":
            return np.sqrt(r2)
        if self.name == "radial_power":
            return np.sqrt(r2) ** self.params[0]
        if self.name == "coordinate_monomial":
            alpha, gauss = self.params
            out = np.ones(X.shape[:-1])
            for i, e in enumerate(alpha):
                for _ in range(e):
                    out = out * X[..., i]
            return out * np.exp(-r2) if gauss else out
        if self.name == "harmonic_times_gaussian":
            j, k = self.params
            basis = build_basis(self.n, j)
            P = basis.solid(j, X.reshape(-1, self.n))[:, k].reshape(X.shape[:-1])
            return P * np.exp(-r2)
        a, i = self.params
        return np.exp(a * X[..., i - 1])


def parse_function(text, n):
    """Parse a catalog text form for dimension ``n``.

    Raises
    ------
    UnknownFunctionError
        For names outside :data:`CATALOG` or malformed parameters.
    """
    if int(n) != n or n < 2:
        raise InvalidArgumentError(f"dimension n must be an integer >= 2, got {n!r}")
    n = int(n)
    name, _, arg = text.strip().partition(":")
    if name not in CATALOG:
        raise UnknownFunctionError(f"unknown function {name!r}; choose from {', '.join(CATALOG)}")
    if name in ("gaussian", "abs_r"):
        if arg:
            raise UnknownFunctionError(f"{name} takes no parameters")
        return FunctionSpec(name, (), n)
    if not arg:
        raise UnknownFunctionError(f"{name} needs parameters")
    if name == "radial_power":
        return FunctionSpec(name, (_number(arg),), n)
    if name == "coordinate_monomial":
        return FunctionSpec(name, _parse_monomial(arg, n), n)
    parts = arg.split(",")
    if len(parts) != 2:
        raise UnknownFunctionError(f"{name} takes two comma-separated parameters")
    if name == "harmonic_times_gaussian":
        j, k = _integer(parts[0]), _integer(parts[1])
        if j < 0 or not 0 <= k < harmonic_dimension(n, j):
            raise UnknownFunctionError(f"no harmonic (j={j}, k={k}) for n={n}")
        return FunctionSpec(name, (j, k), n)
    a, i = _number(parts[0]), _integer(parts[1])
    if not 1 <= i <= n:
        raise UnknownFunctionError(f"axis {i} outside 1..{n}")
    return FunctionSpec(name, (a, i), n)
