"""Character-level similarity kernels and the per-pair string feature set.

All kernels lower-case their inputs before comparing, so
``jaro("Alex", "alex") == 1.0``. Outputs live in [0, 1]; the per-pair
feature assembly maps empty-vs-anything comparisons to the sentinel
``MISSING`` (-1.0) so a downstream learner can treat missingness as signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from .ingest import AuthorIdentity

MISSING = -1.0

DEFAULT_PREFIX_SCALE = 0.1
DEFAULT_PREFIX_CAP = 4


def _jaro_lowered(s1: str, s2: str) -> float:
    if s1 == s2:
        return 1.0 if s1 else 0.0
    len1 = len(s1)
    len2 = len(s2)
    if not len1 or not len2:
        return 0.0
    window = max(len1, len2) // 2 - 1
    if window < 0:
        window = 0
    flags2 = [False] * len2
    matched1 = []
    push = matched1.append
    for i in range(len1):
        ch = s1[i]
        lo = i - window
        if lo < 0:
            lo = 0
        hi = i + window + 1
        if hi > len2:
            hi = len2
        for j in range(lo, hi):
            if not flags2[j] and s2[j] == ch:
                flags2[j] = True
                push(ch)
                break
    m = len(matched1)
    if m == 0:
        return 0.0
    matched2 = [s2[j] for j in range(len2) if flags2[j]]
    half_transpositions = sum(a != b for a, b in zip(matched1, matched2))
    t = half_transpositions / 2.0
    return (m / len1 + m / len2 + (m - t) / m) / 3.0


def jaro(s1: str, s2: str) -> float:
    """Jaro similarity: (1/3)(m/|s1| + m/|s2| + (m-t)/m), 0 when m = 0.

    Matches are counted within the standard window
    floor(max(|s1|, |s2|) / 2) - 1; t is half the number of transpositions.
    Two empty strings share no matching characters, hence score 0.
    """
    return _jaro_lowered(s1.lower(), s2.lower())


def jaro_winkler(
    s1: str,
    s2: str,
    p: float = DEFAULT_PREFIX_SCALE,
    l_max: int = DEFAULT_PREFIX_CAP,
) -> float:
    """Jaro similarity boosted by common-prefix credit: sim + l*p*(1 - sim).

    l is the length of the common prefix capped at ``l_max``. The scaling
    factor must satisfy 0 <= p <= 0.25 so the result stays in [0, 1].
    Keep p * l_max < 1 if unequal strings must score below 1.0: at the
    extreme (p=0.25, l_max=4) the boost saturates and any pair sharing a
    4-character prefix scores exactly 1.
    """
    if not 0.0 <= p <= 0.25:
        raise ValueError(f"prefix scaling factor must be in [0, 0.25], got {p}")
    a = s1.lower()
    b = s2.lower()
    sim = _jaro_lowered(a, b)
    if sim == 0.0:
        return 0.0
    l = 0
    for ca, cb in zip(a, b):
        if ca != cb or l >= l_max:
            break
        l += 1
    return sim + l * p * (1.0 - sim)


def levenshtein_distance(s1: str, s2: str) -> int:
    """Edit distance on lower-cased inputs.

    Two-row dynamic program after stripping the common prefix and suffix
    (neither changes the distance)."""
    return _lev_distance_lowered(s1.lower(), s2.lower())


def _lev_distance_lowered(s1: str, s2: str) -> int:
    if s1 == s2:
        return 0
    n1 = len(s1)
    n2 = len(s2)
    lim = n1 if n1 < n2 else n2
    i = 0
    while i < lim and s1[i] == s2[i]:
        i += 1
    j = 0
    lim -= i
    while j < lim and s1[n1 - 1 - j] == s2[n2 - 1 - j]:
        j += 1
    s1 = s1[i : n1 - j]
    s2 = s2[i : n2 - j]
    if len(s1) < len(s2):
        s1, s2 = s2, s1
    if not s2:
        return len(s1)
    prev = list(range(len(s2) + 1))
    for i, c1 in enumerate(s1, 1):
        cur = [i]
        append = cur.append
        for j, c2 in enumerate(s2, 1):
            d = prev[j - 1]
            if c1 != c2:
                d += 1
            up = prev[j] + 1
            if up < d:
                d = up
            left = cur[j - 1] + 1
            if left < d:
                d = left
            append(d)
        prev = cur
    return prev[-1]


def levenshtein_similarity(s1: str, s2: str) -> float:
    """1 - editDistance/max(|s1|, |s2|); defined as 1.0 for two empty strings.

    Lengths are taken after lower-casing, consistent with the distance
    (some characters change length under Unicode case folding)."""
    a = s1.lower()
    b = s2.lower()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - _lev_distance_lowered(a, b) / longest


@dataclass(frozen=True)
class StringFeatureSet:
    """Six Jaro-Winkler features for an identity pair; MISSING marks empties."""

    jw_name: float
    jw_email: float
    jw_first: float
    jw_last: float
    jw_user: float
    jw_inverse_first: float

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.jw_name,
            self.jw_email,
            self.jw_first,
            self.jw_last,
            self.jw_user,
            self.jw_inverse_first,
        )


def _jw_or_missing(a: str, b: str, p: float, l_max: int) -> float:
    if not a or not b:
        return MISSING
    return jaro_winkler(a, b, p, l_max)


def pair_string_features(
    a1: "AuthorIdentity",
    a2: "AuthorIdentity",
    p: float = DEFAULT_PREFIX_SCALE,
    l_max: int = DEFAULT_PREFIX_CAP,
) -> StringFeatureSet:
    """Jaro-Winkler over the five same-attribute pairs plus the cross feature.

    jw_inverse_first compares first name against the other record's last name
    in both directions and keeps the max, catching reversed name order.
    """
    inverse_candidates = []
    if a1.first_name and a2.last_name:
        inverse_candidates.append(jaro_winkler(a1.first_name, a2.last_name, p, l_max))
    if a1.last_name and a2.first_name:
        inverse_candidates.append(jaro_winkler(a1.last_name, a2.first_name, p, l_max))
    return StringFeatureSet(
        jw_name=_jw_or_missing(a1.name, a2.name, p, l_max),
        jw_email=_jw_or_missing(a1.email, a2.email, p, l_max),
        jw_first=_jw_or_missing(a1.first_name, a2.first_name, p, l_max),
        jw_last=_jw_or_missing(a1.last_name, a2.last_name, p, l_max),
        jw_user=_jw_or_missing(a1.user_name, a2.user_name, p, l_max),
        jw_inverse_first=max(inverse_candidates) if inverse_candidates else MISSING,
    )
