"""Weight sequences M_p, their standard conditions and associated functions.

All arithmetic is done on ``log M_p``: Gevrey sequences ``(p!)**s``
overflow double precision near ``p = 170 / s``.
"""

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gammaln

from .errors import ConsistencyError, InvalidArgumentError

__all__ = [
    "AssociatedFunction",
    "AssociatedValue",
    "ConditionReport",
    "ConditionResult",
    "WeightSequence",
    "associated_function",
    "build_gevrey",
    "check_conditions",
    "derived_root_sequence",
    "gevrey_associated_function",
]

DEFAULT_TRUNCATION = 200
AGREEMENT_RTOL = 1e-12

HOLDS = "holds_up_to_P"
FAILS = "fails_at_p"
EVIDENCE = "evidence_only"


@dataclass(frozen=True)
class WeightSequence:
    """A positive sequence ``M_0 = 1, M_1, ..., M_P`` held as ``log M_p``.

    Attributes
    ----------
    log_values : ndarray
        ``log M_p`` for ``p = 0..P``; ``log_values[0]`` must be exactly 0.
    label : str
        Human-readable name.
    gevrey_order : float, optional
        ``s`` when ``M_p = (p!)**s``.
    """

    log_values: np.ndarray
    label: str = ""
    gevrey_order: Optional[float] = None

    def __post_init__(self):
        lv = np.array(self.log_values, dtype=float)
        if lv.ndim != 1 or lv.size < 2:
            raise InvalidArgumentError("a weight sequence needs at least M_0 and M_1")
        if lv[0] != 0.0:
            raise InvalidArgumentError("M_0 must equal 1")
        if not np.all(np.isfinite(lv)):
            raise InvalidArgumentError("all M_p must be positive and finite in log-space")
        lv.flags.writeable = False
        object.__setattr__(self, "log_values", lv)

    @classmethod
    def from_values(cls, values, label="", gevrey_order=None):
        values = np.asarray(values, dtype=float)
        if np.any(values <= 0):
            raise InvalidArgumentError("all M_p must be positive")
        return cls(np.log(values), label, gevrey_order)

    @property
    def P(self):
        """Truncation index (largest p held)."""
        return self.log_values.size - 1

    @property
    def values(self):
        """``M_p`` itself; may overflow to inf for large p."""
        with np.errstate(over="ignore"):
            return np.exp(self.log_values)

    @property
    def log_quotients(self):
        """``log m_p = log M_p - log M_{p-1}`` for ``p = 1..P`` (index 0 is p = 1)."""
        return np.diff(self.log_values)

    def to_json(self):
        data = {"label": self.label}
        if self.gevrey_order is not None:
            data["gevrey_order"] = self.gevrey_order
        data["log_values"] = [float(v) for v in self.log_values]
        return json.dumps(data)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        return cls(np.array(data["log_values"], dtype=float), data.get("label", ""),
                   data.get("gevrey_order"))


def build_gevrey(s, P=DEFAULT_TRUNCATION):
    """Gevrey sequence ``M_p = (p!)**s`` for ``p <= P``.

    Raises
    ------
    InvalidArgumentError
        If ``s <= 0`` or ``P < 2``.
    """
    if not s > 0:
        raise InvalidArgumentError(f"Gevrey order must be positive, got {s!r}")
    if int(P) != P or P < 2:
        raise InvalidArgumentError(f"truncation P must be an integer >= 2, got {P!r}")
    p = np.arange(int(P) + 1)
    return WeightSequence(s * gammaln(p + 1.0), label=f"(p!)^{s:g}", gevrey_order=float(s))


def derived_root_sequence(weights):
    """The sequence ``N_p = sqrt(p! M_p)`` attached to ``M_p``."""
    p = np.arange(weights.P + 1)
    log_n = 0.5 * (gammaln(p + 1.0) + weights.log_values)
    log_n[0] = 0.0
    s = weights.gevrey_order
    return WeightSequence(
        log_n,
        label=f"sqrt(p!*{weights.label})" if weights.label else "sqrt(p!*M_p)",
        gevrey_order=None if s is None else 0.5 * (1.0 + s),
    )


# -- conditions -------------------------------------------------------------


@dataclass
class ConditionResult:
    """Outcome of one weight-sequence condition at finite truncation."""

    name: str
    verdict: str
    witness: Optional[int] = None
    constants: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self):
        out = {"name": self.name, "verdict": self.verdict}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.constants:
            out["constants"] = dict(self.constants)
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class ConditionReport:
    """Finite-truncation evidence for (M.0), (M.1), (M.2)', (M.2), (M.3)', (QA)."""

    label: str
    P: int
    results: dict
    partial_sum: float
    partial_sums: dict
    decay_exponent: float

    def __getitem__(self, name):
        return self.results[name]

    def to_dict(self):
        return {
            "label": self.label,
            "P": self.P,
            "conditions": [r.to_dict() for r in self.results.values()],
            "partial_sum": self.partial_sum,
            "partial_sums": {str(k): v for k, v in self.partial_sums.items()},
            "decay_exponent": self.decay_exponent,
        }


def m1_violation(weights, p):
    """Amount by which ``M_p**2 <= M_{p-1} M_{p+1}`` fails (<= 0 when it holds)."""
    lv = weights.log_values
    return 2.0 * lv[p] - lv[p - 1] - lv[p + 1]


def _m1_tolerance(weights, p):
    lv = weights.log_values
    return 1e-12 * max(1.0, abs(lv[p - 1]), abs(lv[p]), abs(lv[p + 1]))


def _fit_power_of_two(excess, a_range=range(-64, 65)):
    """Smallest ``H = 2**a`` for which ``max_p excess[p] - p*a*log 2`` is not a tail artifact.

    ``excess[p]`` is the log of the ratio that must be bounded by ``A H**p``.
    The sup must be attained before the final quarter of the index range,
    otherwise a larger truncation would raise it.  Returns ``(H, A)`` with
    ``A`` also a power of two, or ``None``.
    """
    excess = np.asarray(excess, dtype=float)
    p = np.arange(excess.size)
    cut = max(1, (3 * excess.size) // 4)
    for a in a_range:
        v = excess - p * a * math.log(2.0)
        head, tail = v[:cut].max(), v[cut:].max()
        margin = 1e-12 * max(1.0, abs(head))
        if tail < head - margin:
            a_exp = math.ceil(head / math.log(2.0) - 1e-9)
            return 2.0 ** a, 2.0 ** a_exp
    return None


def check_conditions(weights):
    """Check the standard weight-sequence conditions up to the truncation ``P``.

    (M.1) is decided pointwise.  (M.0), (M.2)' and (M.2) are fitted with
    constants that are minimal powers of two.  (M.3)' and (QA) concern an
    infinite series and are only ever reported as evidence: the partial sum
    ``sum_{p<=P} M_{p-1}/M_p`` and the decay exponent of its terms.

    Never raises on a valid sequence.
    """
    lv = weights.log_values
    P = weights.P
    results = {}

    witness = None
    for p in range(1, P):
        if m1_violation(weights, p) > _m1_tolerance(weights, p):
            witness = p
            break
    results["M.1"] = ConditionResult(
        "M.1", HOLDS if witness is None else FAILS, witness,
        note="" if witness is None else "M_p^2 > M_{p-1} M_{p+1} at the witness index",
    )

    lfact = gammaln(np.arange(P + 1) + 1.0)
    fit = _fit_power_of_two(lfact - lv)
    results["M.0"] = ConditionResult(
        "M.0", EVIDENCE, constants={} if fit is None else {"ell": fit[0], "C": fit[1]},
        note="p! <= C ell^p M_p fitted on p <= P (Roumieu evidence); "
             "the relations quantify over all p and cannot be decided from a truncation",
    )

    fit = _fit_power_of_two(np.diff(lv))
    results["M.2'"] = _fitted("M.2'", fit, "M_{p+1} <= A H^p M_p")

    # min over 0 <= q <= p of log M_q + log M_{p-q}
    q_sums = lv[:, None] + lv[None, :]
    idx = np.arange(P + 1)
    mins = np.array([np.min(q_sums[np.arange(p + 1), p - np.arange(p + 1)]) for p in idx])
    fit = _fit_power_of_two(lv - mins)
    results["M.2"] = _fitted("M.2", fit, "M_p <= A H^p min_q M_q M_{p-q}")

    terms = np.exp(-np.diff(lv))
    partial = math.fsum(terms)
    checkpoints = sorted({max(1, P // 4), max(1, P // 2), P})
    partial_sums = {c: math.fsum(terms[:c]) for c in checkpoints}
    half = np.arange(P // 2, P + 1)
    half = half[half >= 1]
    if half.size >= 2:
        slope = np.polyfit(np.log(half), np.log(terms[half - 1]), 1)[0]
        decay = float(-slope)
    else:
        decay = float("nan")
    looks_divergent = decay <= 1.05
    series_note = (
        f"partial sum {partial:.6g} at P={P}; terms decay like p^-{decay:.3g}; "
        "convergence of an infinite series cannot be decided from finitely many terms"
    )
    results["M.3'"] = ConditionResult(
        "M.3'", EVIDENCE, constants={"trend": "divergent-looking" if looks_divergent else "convergent-looking"},
        note=series_note,
    )
    results["QA"] = ConditionResult(
        "QA", EVIDENCE, constants={"trend": "divergent-looking" if looks_divergent else "convergent-looking"},
        note=series_note,
    )
    return ConditionReport(weights.label, P, results, partial, partial_sums, decay)


def _fitted(name, fit, statement):
    if fit is None:
        return ConditionResult(name, EVIDENCE, note=f"no H = 2^a with |a| <= 64 bounds {statement} away from the truncation")
    return ConditionResult(name, HOLDS, constants={"H": fit[0], "A": fit[1]},
                           note=f"{statement} with minimal power-of-two constants")


# -- associated function ----------------------------------------------------


class AssociatedValue(NamedTuple):
    value: float
    index: int
    saturated: bool


class AssociatedFunction:
    """``M(t) = sup_p log(t**p / M_p)`` over the held truncation.

    Evaluations are cached by ``t``.  When (M.1) holds the brute-force sup
    is cross-checked against the quotient formula
    ``sum_{p: m_p <= t} log(t / m_p)``; disagreement beyond 1e-12 relative
    raises :class:`ConsistencyError`.
    """

    def __init__(self, weights):
        self.weights = weights
        self._cache = {}
        lv = weights.log_values
        # vectorized m1_violation <= _m1_tolerance over 1 <= p < P
        viol = 2.0 * lv[1:-1] - lv[:-2] - lv[2:]
        scale = np.maximum.reduce([np.ones_like(viol), np.abs(lv[:-2]), np.abs(lv[1:-1]), np.abs(lv[2:])])
        self.log_convex = bool(np.all(viol <= 1e-12 * scale))
        self._log_quotients = np.diff(lv)

    def brute_force(self, t):
        """``(value, argmax p)`` of the sup over ``0 <= p <= P``."""
        if not t > 0:
            raise InvalidArgumentError(f"t must be positive, got {t!r}")
        lv = self.weights.log_values
        vals = np.arange(lv.size) * math.log(t) - lv
        k = int(np.argmax(vals))
        return float(vals[k]), k

    def quotient_formula(self, t):
        """``sum_{p >= 1, m_p <= t} log(t / m_p)``; valid when (M.1) holds."""
        if not t > 0:
            raise InvalidArgumentError(f"t must be positive, got {t!r}")
        logt = math.log(t)
        lq = self._log_quotients
        return math.fsum(logt - lq[lq <= logt])

    def evaluate(self, t):
        t = float(t)
        hit = self._cache.get(t)
        if hit is not None:
            return hit
        value, k = self.brute_force(t)
        if self.log_convex:
            other = self.quotient_formula(t)
            if abs(value - other) > AGREEMENT_RTOL * max(abs(value), abs(other)):
                raise ConsistencyError(
                    f"sup {value!r} and quotient formula {other!r} disagree at t={t!r}"
                )
        out = AssociatedValue(value, k, k == self.weights.P)
        self._cache[t] = out
        return out

    def __call__(self, t):
        if np.ndim(t) == 0:
            return self.evaluate(t).value
        return np.array([self.evaluate(x).value for x in np.ravel(t)]).reshape(np.shape(t))

    def saturated(self, t):
        """True where the sup sits at ``p = P``: the value is only a lower bound."""
        if np.ndim(t) == 0:
            return self.evaluate(t).saturated
        return np.array([self.evaluate(x).saturated for x in np.ravel(t)]).reshape(np.shape(t))


def associated_function(weights, t):
    """Evaluate ``M(t)`` with its argmax and saturation flag.

    Returns
    -------
    AssociatedValue
        ``value`` is the sup over ``p <= P``; ``saturated`` is True when the
        sup is attained at ``p = P``, in which case the value is a lower
        bound and the truncation must be enlarged.
    """
    return AssociatedFunction(weights).evaluate(t)


def gevrey_associated_function(s, t):
    """Untruncated ``M(t)`` for ``M_p = (p!)**s``.

    With ``m_p = p**s`` the quotient formula runs over ``p <= t**(1/s)``,
    which telescopes to ``p* log t - s log p*!``.
    """
    if not s > 0 or not t > 0:
        raise InvalidArgumentError("s and t must be positive")
    pstar = math.floor(t ** (1.0 / s))
    return pstar * math.log(t) - s * math.lgamma(pstar + 1.0)
