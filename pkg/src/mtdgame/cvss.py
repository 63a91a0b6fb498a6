"""CVSS v2 base vectors and the exploitability / impact / base scores.

Only the six base metrics are handled (no temporal or environmental
metrics, no v3.x).  Scores follow the standard v2 base equations: the
impact score is kept as a nonnegative magnitude, exploitability is the
unrounded 20*AV*AC*Au product, and the base score is rounded to one
decimal the way NVD publishes it.

Note on semantics: a higher exploitability subscore means the attack is
*easier* to execute (network-reachable, low complexity, no auth).  Where
this package compares exploitability against an attacker's expertise,
expertise acts as a cap on the exploitability subscore of attacks that
attacker can field, on the same 0-10 scale.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

ACCESS_VECTOR = {"L": 0.395, "A": 0.646, "N": 1.0}
ACCESS_COMPLEXITY = {"H": 0.35, "M": 0.61, "L": 0.71}
AUTHENTICATION = {"M": 0.45, "S": 0.56, "N": 0.704}
IMPACT = {"N": 0.0, "P": 0.275, "C": 0.660}

# Canonical metric order required in vector strings.
_METRICS = (
    ("AV", ACCESS_VECTOR),
    ("AC", ACCESS_COMPLEXITY),
    ("Au", AUTHENTICATION),
    ("C", IMPACT),
    ("I", IMPACT),
    ("A", IMPACT),
)

_TOKEN_RE = re.compile(r"^([A-Za-z]+):([A-Za-z]+)$")


class CvssParseError(ValueError):
    """Raised when a CVSS v2 base vector string cannot be parsed."""


@dataclass(frozen=True)
class CvssVector:
    """One parsed CVSS v2 base vector (letter values, e.g. av='N')."""

    av: str
    ac: str
    au: str
    c: str
    i: str
    a: str

    def multipliers(self) -> tuple[float, float, float, float, float, float]:
        return (
            ACCESS_VECTOR[self.av],
            ACCESS_COMPLEXITY[self.ac],
            AUTHENTICATION[self.au],
            IMPACT[self.c],
            IMPACT[self.i],
            IMPACT[self.a],
        )


@dataclass(frozen=True)
class ScoreTriple:
    """Exploitability, impact and base score derived from one vector."""

    exploitability: float
    impact: float
    base: float


def parse_vector(text: str) -> CvssVector:
    """Parse a slash-separated v2 base vector like 'AV:N/AC:L/Au:N/C:P/I:P/A:P'.

    The six metrics must appear in canonical order (AV, AC, Au, C, I, A).
    A surrounding pair of parentheses is stripped.  Raises CvssParseError
    naming the offending token on malformed keys, unknown values or
    missing metrics.
    """
    stripped = text.strip()
    if stripped.startswith("(") and stripped.endswith(")"):
        stripped = stripped[1:-1]
    parts = stripped.split("/")
    if len(parts) != len(_METRICS):
        raise CvssParseError(
            f"expected 6 metrics AV/AC/Au/C/I/A, got {len(parts)} in {text!r}"
        )
    letters = []
    for part, (key, table) in zip(parts, _METRICS):
        m = _TOKEN_RE.match(part.strip())
        if m is None:
            raise CvssParseError(f"malformed metric token {part!r}")
        got_key, value = m.group(1), m.group(2)
        if got_key != key:
            raise CvssParseError(
                f"expected metric {key!r} but found {got_key!r} in token {part!r}"
            )
        if value not in table:
            raise CvssParseError(f"unknown value {value!r} for {key} in token {part!r}")
        letters.append(value)
    return CvssVector(*letters)


def format_vector(v: CvssVector) -> str:
    """Inverse of parse_vector for valid vectors."""
    return f"AV:{v.av}/AC:{v.ac}/Au:{v.au}/C:{v.c}/I:{v.i}/A:{v.a}"


def exploitability_score(v: CvssVector) -> float:
    """20 * AV * AC * Au, unrounded.  Always in [0, 10]."""
    av, ac, au, _, _, _ = v.multipliers()
    return 20.0 * av * ac * au


def impact_score(v: CvssVector) -> float:
    """10.41 * (1 - (1-C)(1-I)(1-A)), as a nonnegative magnitude."""
    _, _, _, c, i, a = v.multipliers()
    return 10.41 * (1.0 - (1.0 - c) * (1.0 - i) * (1.0 - a))


def base_score(v: CvssVector) -> float:
    """Standard v2 base equation, rounded half-up to one decimal.

    ((0.6*impact + 0.4*exploitability - 1.5) * f(impact)) where f is 0
    for zero impact and 1.176 otherwise.
    """
    imp = impact_score(v)
    exp = exploitability_score(v)
    f_impact = 1.176 if imp > 0.0 else 0.0
    raw = (0.6 * imp + 0.4 * exp - 1.5) * f_impact
    return _round_half_up(raw)


def score_vector(v: CvssVector) -> ScoreTriple:
    return ScoreTriple(
        exploitability=exploitability_score(v),
        impact=impact_score(v),
        base=base_score(v),
    )


def _round_half_up(value: float) -> float:
    # NVD rounds .x5 upward; plain round() would round half to even.
    # The epsilon guards against float representations just below .x5.
    return math.floor(value * 10.0 + 0.5 + 1e-9) / 10.0
