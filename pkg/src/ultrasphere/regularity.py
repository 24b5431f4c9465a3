"""Coefficient-decay norms and regularity classification against a weight sequence.

A spherical function is ultradifferentiable when its coefficients satisfy
``sup_j e^{M(j/h)} s_j < inf`` (some h for Roumieu, every h for Beurling);
an ultradistribution when ``sup_j e^{-M(j/h)} s_j < inf``.  With finitely
many coefficients both are decided by engineering thresholds, reported as
such.
"""

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidArgumentError
from .weight_seq import AssociatedFunction

__all__ = [
    "DecayProfile",
    "NormValue",
    "RegularityVerdict",
    "classify",
    "decay_profile",
    "dual_norm",
    "sh_norm",
]

DEFAULT_CAP = 1e3
DEFAULT_H_GRID = (0.5, 1.0, 2.0, 4.0)

FUNCTION_LIKE = "function_like"
DISTRIBUTION_LIKE = "distribution_like"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class DecayProfile:
    """Per-degree coefficient sizes ``s_j = max_k |c_{k,j}|``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size == 0 or np.any(v < 0) or not np.all(np.isfinite(v)):
            raise InvalidArgumentError("a decay profile is a nonempty vector of finite nonnegative reals")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def J(self):
        return self.values.size - 1

    def scaled(self, factor):
        return DecayProfile(self.values * factor)


def decay_profile(table):
    """``s_j = max_k |c_{k,j}|`` for each degree of a :class:`CoeffTable`."""
    return DecayProfile(np.array([np.max(np.abs(b)) for b in table.blocks]))


class NormValue(NamedTuple):
    value: float
    log_value: float
    index: int
    saturated: bool


def _assoc(weights):
    return weights if isinstance(weights, AssociatedFunction) else AssociatedFunction(weights)


def _weighted_sup(profile, M, h, sign):
    """sup_j exp(sign * M(j/h)) * s_j in log space, with argmax and saturation."""
    s = profile.values
    best, arg, saturated = -math.inf, 0, False
    for j, sj in enumerate(s):
        if j == 0:
            mj, sat = 0.0, False
        else:
            ev = M.evaluate(j / h)
            mj, sat = ev.value, ev.saturated
        saturated = saturated or sat
        if sj == 0:
            continue
        term = sign * mj + math.log(sj)
        if term > best:
            best, arg = term, j
    return NormValue(math.exp(best) if best < 709.0 else math.inf, best, arg, saturated)


def sh_norm(profile, weights, h):
    """``sup_{j<=J} e^{M(j/h)} s_j`` with the argmax and saturation flag.

    ``M(0) = 0`` by convention.  ``weights`` may be a WeightSequence or an
    AssociatedFunction (to share its cache).

    Raises
    ------
    InvalidArgumentError
        If ``h <= 0``.
    """
    if not h > 0:
        raise InvalidArgumentError(f"h must be positive, got {h!r}")
    return _weighted_sup(profile, _assoc(weights), h, 1.0)


def dual_norm(profile, weights, h):
    """``sup_{j<=J} e^{-M(j/h)} s_j`` (the ultradistribution-side bound)."""
    if not h > 0:
        raise InvalidArgumentError(f"h must be positive, got {h!r}")
    return _weighted_sup(profile, _assoc(weights), h, -1.0)


@dataclass
class RegularityVerdict:
    """Outcome of :func:`classify`.

    ``certificate_h`` and ``bound`` satisfy ``sup_j e^{+-M(j/h)} s_j = bound``
    (sign + for function_like, - for distribution_like).  ``per_h`` lists
    both tests for every grid value.
    """

    kind: str
    certificate_h: float = None
    bound: float = None
    J: int = 0
    cap: float = DEFAULT_CAP
    successful_h: list = field(default_factory=list)
    per_h: list = field(default_factory=list)
    evidence: str = ""
    note: str = ("thresholds (cap on the normalized sup, sup attained before J) are "
                 "engineering choices, not part of the characterization")

    def to_dict(self):
        return {
            "kind": self.kind,
            "certificate_h": self.certificate_h,
            "bound": self.bound,
            "J": self.J,
            "cap": self.cap,
            "successful_h": list(self.successful_h),
            "evidence": self.evidence,
            "per_h": list(self.per_h),
            "note": self.note,
        }

    def to_json(self):
        return json.dumps(self.to_dict())


def classify(profile, weights, h_grid=DEFAULT_H_GRID, cap=DEFAULT_CAP):
    """Classify a decay profile as function-like, distribution-like or inconclusive.

    The profile is first normalized by ``s_0 + max_j s_j``.  An ``h`` passes
    the function test when ``sup_j e^{M(j/h)} s_j <= cap`` with the sup
    attained at some ``j < J`` and no saturated ``M(j/h)`` involved;
    likewise the distribution test with
    ``e^{-M(j/h)}``.  The verdict is function_like if any ``h`` passes the
    function test, else distribution_like if any passes the distribution
    test, else inconclusive.  Passing every grid value is reported as
    Beurling-type evidence, passing at least one as Roumieu-type evidence.
    """
    h_grid = [float(h) for h in h_grid]
    if not h_grid:
        raise InvalidArgumentError("h grid must be nonempty")
    if any(not h > 0 for h in h_grid):
        raise InvalidArgumentError("h values must be positive")
    M = _assoc(weights)
    J = profile.J
    scale = profile.values[0] + profile.values.max()
    if scale == 0:
        return RegularityVerdict(FUNCTION_LIKE, min(h_grid), 0.0, J, cap, sorted(h_grid), [],
                                 "Beurling")
    unit = DecayProfile(profile.values / scale)

    rows, fn_ok, dist_ok = [], [], []
    for h in h_grid:
        f = sh_norm(unit, M, h)
        d = dual_norm(unit, M, h)
        # a saturated M(t) is only a lower bound, which can fake a small sup
        f_pass = f.log_value <= math.log(cap) and f.index < J and not f.saturated
        d_pass = d.log_value <= math.log(cap) and d.index < J
        rows.append({
            "h": h,
            "function_sup": f.value, "function_argmax": f.index, "function_pass": f_pass,
            "distribution_sup": d.value, "distribution_argmax": d.index, "distribution_pass": d_pass,
            "saturated": f.saturated or d.saturated,
        })
        if f_pass:
            fn_ok.append(h)
        if d_pass:
            dist_ok.append(h)

    if fn_ok:
        # e^{M(j/h)} shrinks as h grows, so the smallest passing h is the sharpest
        h = min(fn_ok)
        kind, ok, bound = FUNCTION_LIKE, fn_ok, sh_norm(profile, M, h).value
    elif dist_ok:
        h = max(dist_ok)
        kind, ok, bound = DISTRIBUTION_LIKE, dist_ok, dual_norm(profile, M, h).value
    else:
        return RegularityVerdict(INCONCLUSIVE, None, None, J, cap, [], rows, "none")
    evidence = "Beurling" if len(ok) == len(h_grid) else "Roumieu"
    return RegularityVerdict(kind, h, bound, J, cap, sorted(ok), rows, evidence)
