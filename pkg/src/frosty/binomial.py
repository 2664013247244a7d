"""Exact binomial pmf and tail probabilities, plus the parameter-safety report.

Rational success probabilities with k <= 200 are summed exactly with
``fractions.Fraction``; anything else goes through mpmath at 60 digits.
"""
from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from math import comb
from typing import Union

import mpmath

Prob = Union[Fraction, mpmath.mpf]

EXACT_MAX_K = 200
DIGITS = 60

AT_LEAST = "at_least"
AT_MOST = "at_most"
EXACTLY = "exactly"
_DIRECTIONS = (AT_LEAST, AT_MOST, EXACTLY)


def _rational(x) -> Fraction | None:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, (str, Decimal)):
        return Fraction(str(x))
    if isinstance(x, float):
        # floats are taken at their shortest decimal repr, so 0.2 means 1/5
        return Fraction(repr(x))
    return None


@dataclass(frozen=True)
class TailQuery:
    k: int
    x: object
    m: int
    direction: str = AT_LEAST

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise ValueError(f"direction must be one of {_DIRECTIONS}")
        if not isinstance(self.k, int) or self.k < 0:
            raise ValueError("k must be a non-negative integer")
        if not isinstance(self.m, int) or not 0 <= self.m <= self.k:
            raise ValueError(f"m must satisfy 0 <= m <= k, got m={self.m}, k={self.k}")
        x = _rational(self.x)
        xv = x if x is not None else mpmath.mpf(self.x)
        if xv < 0 or xv > 1:
            raise ValueError(f"x must lie in [0, 1], got {self.x}")


def pmf(k: int, x, m: int) -> Prob:
    """Bin(k, x, m): probability of exactly m successes."""
    return bin_prob(TailQuery(k, x, m, EXACTLY))


def bin_prob(q: TailQuery) -> Prob:
    if q.direction == EXACTLY:
        terms = range(q.m, q.m + 1)
    elif q.direction == AT_LEAST:
        terms = range(q.m, q.k + 1)
    else:
        terms = range(0, q.m + 1)
    x = _rational(q.x)
    if x is not None and q.k <= EXACT_MAX_K:
        y = 1 - x
        return sum((comb(q.k, i) * x**i * y ** (q.k - i) for i in terms), Fraction(0))
    with mpmath.workdps(DIGITS):
        xm = mpmath.mpf(q.x) if x is None else mpmath.mpf(x.numerator) / x.denominator
        ym = 1 - xm
        return mpmath.fsum(mpmath.binomial(q.k, i) * xm**i * ym ** (q.k - i)
                           for i in terms)


def at_least(k: int, x, m: int) -> Prob:
    return bin_prob(TailQuery(k, x, m, AT_LEAST))


def at_most(k: int, x, m: int) -> Prob:
    return bin_prob(TailQuery(k, x, m, AT_MOST))


def to_mpf(p: Prob) -> mpmath.mpf:
    with mpmath.workdps(DIGITS):
        if isinstance(p, Fraction):
            return mpmath.mpf(p.numerator) / p.denominator
        return mpmath.mpf(p)


def fmt(p: Prob, digits: int = 8) -> str:
    return mpmath.nstr(to_mpf(p), digits)


# Operational envelope for union bounds: 10^4 processes, 1000 years, 5 rounds/s.
ENVELOPE = {
    "processes": 10**4,
    "years": 1000,
    "rounds_per_second": 5,
    "seconds_per_year": 60 * 60 * 24 * 366,
}


def union_opportunities(envelope=ENVELOPE) -> int:
    return (envelope["processes"] * envelope["rounds_per_second"]
            * envelope["seconds_per_year"] * envelope["years"])


def param_safety_report(k: int = 80, alpha3: int = 48, f_frac="0.2",
                        gamma: int = 300, honest_frac="3/5",
                        envelope=ENVELOPE) -> dict:
    """Reproduce the safety and liveness arithmetic for given parameters.

    Each check carries the computed value, the threshold and a verdict.
    """
    f_frac = _rational(f_frac) if _rational(f_frac) is not None else f_frac
    honest = Fraction(honest_frac) if isinstance(honest_frac, str) else honest_frac
    checks = []

    def check(name, value, op, bound, note=""):
        v = to_mpf(value)
        b = to_mpf(bound)
        ok = bool(v < b) if op == "<" else bool(v >= b)
        checks.append({"name": name, "value": mpmath.nstr(v, 10), "op": op,
                       "bound": mpmath.nstr(b, 10), "ok": ok, "note": note})
        return value

    one = check("byzantine_alpha3_one_round", at_least(k, f_frac, alpha3), "<",
                Fraction(1, 10**14), "Bin(k, f/n, >= alpha3)")
    two = check("byzantine_alpha3_two_rounds", one * one if isinstance(one, Fraction)
                else one**2, "<", Fraction(1, 10**28), "square of the one-round bound")
    opportunities = union_opportunities(envelope)
    check("union_bound_rounded", Fraction(1, 10**28) * opportunities, "<",
          Fraction(2, 10**13), "1e-28 x processes x rounds over the envelope")
    check("union_bound_exact", two * opportunities, "<", Fraction(2, 10**13),
          "exact two-round value x opportunities")
    succ = check("claim3_one_round_success", at_least(k, honest, alpha3), ">=",
                 Fraction(548, 1000), "lower-bound check, per-trial probability 3/5")
    pair = check("claim3_pair_success", succ * succ, ">=", Fraction(3, 10),
                 "two consecutive rounds")
    windows = gamma // 2
    stated_fail = Fraction(71, 100) ** windows
    derived_fail = (1 - Fraction(3, 10)) ** windows
    check("claim3_failure_as_written", stated_fail, "<", Fraction(1, 10**22),
          f"0.71^{windows}")
    check("claim3_failure_from_0.3", derived_fail, "<", Fraction(1, 10**22),
          f"(1-0.3)^{windows}")
    check("claim3_failure_exact_pair", (1 - pair) ** windows, "<",
          Fraction(1, 10**22), f"(1-pair)^{windows} with the exact pair value")
    check("claim3_union_over_processes", stated_fail * envelope["processes"], "<",
          Fraction(1, 10**18), "0.71^windows x processes")
    return {
        "params": {"k": k, "alpha3": alpha3, "f_frac": str(f_frac),
                   "gamma": gamma, "honest_frac": str(honest)},
        "checks": checks,
        "discrepancy": {
            "pair_success_floor": "0.3",
            "failure_base_as_written": "0.71",
            "failure_base_implied": "0.7",
            "note": "the 0.71 base is looser than 1-0.3; both are reported",
        },
        "ok": all(c["ok"] for c in checks),
    }


def format_report(report: dict) -> str:
    lines = ["parameter safety report: " + ", ".join(
        f"{k}={v}" for k, v in report["params"].items())]
    for c in report["checks"]:
        mark = "PASS" if c["ok"] else "FAIL"
        lines.append(f"  [{mark}] {c['name']}: {c['value']} {c['op']} {c['bound']}"
                     + (f"  ({c['note']})" if c["note"] else ""))
    d = report["discrepancy"]
    lines.append(f"  note: {d['note']}")
    return "\n".join(lines)
