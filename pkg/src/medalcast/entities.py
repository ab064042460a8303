"""Country entity standardization, fuzzy matching, and dataset quality checks.

Historical regimes (dissolved states, renamed committees) are mapped onto
modern 3-letter NOC codes with year-aware logic: a regime maps to its
successor only for years after its transition year.  Non-standard raw names
go through a cleansing pass (ASCII filter, team-suffix stripping, club
detection) and then an exact / mapped / fuzzy resolution cascade.  Strings
that survive nothing are returned as ``UNK`` sentinels for manual review,
never dropped.

All functions here are pure; a loaded :class:`RegimeTable` is immutable and
safe to share across threads.
"""

from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import DomainError, SchemaError

UNK = "UNK"
UNK_TEAM = "UNK-TEAM"

#: Raw names containing one of these words denote clubs, not committees.
DEFAULT_CLUB_KEYWORDS = ("Club", "Verein", "Society")

#: Weights for the combined similarity: edit distance, Jaro-Winkler,
#: best-substring partial match.
DEFAULT_SIMILARITY_WEIGHTS = (0.5, 0.3, 0.2)

DEFAULT_FUZZY_THRESHOLD = 0.85

_YEAR_MIN, _YEAR_MAX = 1800, 2100
_CODE_RE = re.compile(r"^[A-Z]{3}$")
_NON_ASCII_RE = re.compile(r"[^\x00-\x7F]+")
_TEAM_SUFFIX_RE = re.compile(r"-\d+$")


@dataclass(frozen=True)
class RegimeMapping:
    """One historical entity and the modern code it transitions into.

    ``transition_year`` of ``None`` means the mapping applies in every year.
    """

    historical_name: str
    successor_code: str
    transition_year: int | None = None

    def __post_init__(self):
        if not self.historical_name.strip():
            raise DomainError("historical_name must be non-empty")
        if not _CODE_RE.match(self.successor_code):
            raise DomainError(
                f"successor_code must be 3 uppercase ASCII letters, got "
                f"{self.successor_code!r}"
            )
        if self.transition_year is not None and not (
            1896 <= self.transition_year <= 2100
        ):
            raise DomainError(
                f"transition_year {self.transition_year} outside [1896, 2100]"
            )

    def applies(self, year: int) -> bool:
        return self.transition_year is None or year > self.transition_year


class RegimeTable:
    """Immutable lookup of historical names to successor codes."""

    def __init__(self, mappings: Iterable[RegimeMapping]):
        table: dict[str, RegimeMapping] = {}
        for m in mappings:
            table[m.historical_name] = m
        self._table = table
        self._folded = {name.casefold(): m for name, m in table.items()}

    def __len__(self) -> int:
        return len(self._table)

    def __contains__(self, name: str) -> bool:
        return name in self._table or name.casefold() in self._folded

    @property
    def mappings(self) -> tuple[RegimeMapping, ...]:
        return tuple(self._table.values())

    def lookup(self, name: str) -> RegimeMapping | None:
        m = self._table.get(name)
        if m is None:
            m = self._folded.get(name.casefold())
        return m

    def map_entity(self, name: str, year: int) -> str:
        """Resolve ``name`` to the code valid in ``year``.

        Successor codes apply strictly after the transition year; at or
        before it the historical entity keeps its own code.  Names absent
        from the table pass through unchanged.
        """
        if not name.strip():
            raise DomainError("name must be non-empty")
        if not _YEAR_MIN <= year <= _YEAR_MAX:
            raise DomainError(f"year {year} outside [{_YEAR_MIN}, {_YEAR_MAX}]")
        m = self.lookup(name)
        if m is None:
            return name
        if m.applies(year):
            return m.successor_code
        # Before the transition the historical entity keeps its own identity.
        return name

    @classmethod
    def from_csv(cls, path) -> "RegimeTable":
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["historical_name", "successor_code", "transition_year"]:
                raise SchemaError(
                    "regime table must have header "
                    "'historical_name,successor_code,transition_year'",
                    path=path,
                )
            mappings = []
            for i, row in enumerate(reader, start=2):
                if not row or all(not c.strip() for c in row):
                    continue
                if len(row) != 3:
                    raise SchemaError("expected 3 fields", path=path, row=i)
                name, code, year_s = (c.strip() for c in row)
                year = None
                if year_s:
                    try:
                        year = int(year_s)
                    except ValueError:
                        raise SchemaError(
                            f"bad transition year {year_s!r}",
                            path=path,
                            row=i,
                            column="transition_year",
                        ) from None
                mappings.append(RegimeMapping(name, code, year))
        return cls(mappings)

    _default: "RegimeTable | None" = None

    @classmethod
    def default(cls) -> "RegimeTable":
        """The regime table shipped with the package."""
        if cls._default is None:
            ref = resources.files("medalcast").joinpath("data/regimes.csv")
            with resources.as_file(ref) as path:
                cls._default = cls.from_csv(path)
        return cls._default


def map_entity(name: str, year: int, table: RegimeTable | None = None) -> str:
    """Year-aware regime mapping against ``table`` (default: shipped table)."""
    return (table or RegimeTable.default()).map_entity(name, year)


def clean_name(raw: str, club_keywords: Sequence[str] = DEFAULT_CLUB_KEYWORDS) -> str:
    """Multi-stage cleanup of a raw committee/country string.

    Removes non-ASCII characters, strips a trailing ``-<digits>`` team
    marker, and collapses whitespace.  Names containing a club keyword are
    mapped to the ``UNK-TEAM`` sentinel.  Total: never raises.
    """
    text = _NON_ASCII_RE.sub("", raw)
    text = _TEAM_SUFFIX_RE.sub("", text.strip()).strip()
    text = re.sub(r"\s+", " ", text)
    for kw in club_keywords:
        if re.search(rf"\b{re.escape(kw)}\b", text):
            return UNK_TEAM
    return text


def levenshtein_similarity(a: str, b: str) -> float:
    """1 - edit_distance / max(len); bounded to [0, 1] and symmetric."""
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    # Two-row dynamic program.
    prev = list(range(lb + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * lb
        for j, cb in enumerate(b, start=1):
            cost = 0 if ca == cb else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return 1.0 - prev[lb] / max(la, lb)


def jaro_winkler_similarity(
    a: str, b: str, prefix_scale: float = 0.1, max_prefix: int = 4
) -> float:
    """Textbook Jaro similarity with the Winkler common-prefix bonus."""
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return 0.0
    window = max(max(la, lb) // 2 - 1, 0)
    a_flags = [False] * la
    b_flags = [False] * lb
    matches = 0
    for i, ca in enumerate(a):
        lo = max(0, i - window)
        hi = min(lb, i + window + 1)
        for j in range(lo, hi):
            if not b_flags[j] and b[j] == ca:
                a_flags[i] = b_flags[j] = True
                matches += 1
                break
    if matches == 0:
        return 0.0
    a_matched = [ca for ca, f in zip(a, a_flags) if f]
    b_matched = [cb for cb, f in zip(b, b_flags) if f]
    # Transpositions are half the matched-but-misordered characters.
    transpositions = sum(ca != cb for ca, cb in zip(a_matched, b_matched)) / 2.0
    m = float(matches)
    jaro = (m / la + m / lb + (m - transpositions) / m) / 3.0
    prefix = 0
    for ca, cb in zip(a, b):
        if ca != cb or prefix >= max_prefix:
            break
        prefix += 1
    return jaro + prefix * prefix_scale * (1.0 - jaro)


def partial_similarity(a: str, b: str) -> float:
    """Best positional overlap of the shorter string slid along the longer.

    Computed on the (shorter, longer) ordering regardless of argument order,
    which makes the score symmetric by construction.
    """
    if len(a) == 0 or len(b) == 0:
        return 0.0
    s, l = (a, b) if len(a) <= len(b) else (b, a)
    ls = len(s)
    best = 0
    for off in range(len(l) - ls + 1):
        hits = sum(s[k] == l[off + k] for k in range(ls))
        if hits > best:
            best = hits
            if best == ls:
                break
    return best / ls


def hybrid_similarity(
    a: str,
    b: str,
    weights: tuple[float, float, float] = DEFAULT_SIMILARITY_WEIGHTS,
) -> float:
    """Weighted blend of edit-distance, Jaro-Winkler, and partial matching."""
    if not a or not b:
        raise DomainError("hybrid_similarity requires non-empty strings")
    w_lev, w_jaro, w_partial = weights
    return (
        w_lev * levenshtein_similarity(a, b)
        + w_jaro * jaro_winkler_similarity(a, b)
        + w_partial * partial_similarity(a, b)
    )


@dataclass(frozen=True)
class Resolution:
    """Outcome of resolving one raw string against the canon."""

    input: str
    output: str
    score: float
    method: str  # exact | mapped | fuzzy | unresolved

    def __post_init__(self):
        if self.method not in ("exact", "mapped", "fuzzy", "unresolved"):
            raise DomainError(f"unknown resolution method {self.method!r}")
        if not 0.0 <= self.score <= 1.0:
            raise DomainError("resolution score outside [0, 1]")
        if self.method == "unresolved" and self.output not in (UNK, UNK_TEAM):
            raise DomainError("unresolved output must be a sentinel")


def _normalize_canon(canon) -> dict[str, str]:
    if isinstance(canon, Mapping):
        return dict(canon)
    return {name: name for name in canon}


def resolve(
    raw: str,
    year: int,
    canon,
    threshold: float = DEFAULT_FUZZY_THRESHOLD,
    *,
    table: RegimeTable | None = None,
    club_keywords: Sequence[str] = DEFAULT_CLUB_KEYWORDS,
) -> Resolution:
    """Full resolution cascade: clean, map/exact lookup, fuzzy match.

    ``canon`` is either a mapping of canonical name -> NOC code or an
    iterable of codes (treated as self-named).  Fuzzy matches are accepted
    only at or above ``threshold``; ties break on the lexicographically
    smallest candidate code so results are deterministic.
    """
    if not 0.0 < threshold <= 1.0:
        raise DomainError("threshold must lie in (0, 1]")
    canon_map = _normalize_canon(canon)
    if not canon_map:
        raise DomainError("canon must be non-empty")
    table = table or RegimeTable.default()

    cleaned = clean_name(raw, club_keywords)
    if cleaned == UNK_TEAM:
        return Resolution(raw, UNK_TEAM, 0.0, "unresolved")
    if not cleaned:
        return Resolution(raw, UNK, 0.0, "unresolved")

    if cleaned in table:
        return Resolution(raw, table.map_entity(cleaned, year), 1.0, "mapped")

    if cleaned in canon_map:
        return Resolution(raw, canon_map[cleaned], 1.0, "exact")
    folded = {name.casefold(): code for name, code in canon_map.items()}
    if cleaned.casefold() in folded:
        return Resolution(raw, folded[cleaned.casefold()], 1.0, "exact")

    best_score = -1.0
    best_code = UNK
    for name in sorted(canon_map, key=lambda n: (canon_map[n], n)):
        # Cheap upper bound: with a length gap d the edit component cannot
        # beat 1 - d/max_len even if the other components are perfect.
        d = abs(len(name) - len(cleaned))
        m = max(len(name), len(cleaned))
        if m == 0 or 0.5 * (1.0 - d / m) + 0.5 < threshold:
            continue
        score = hybrid_similarity(cleaned, name)
        if score > best_score + 1e-12:
            best_score = score
            best_code = canon_map[name]
    if best_score >= threshold:
        return Resolution(raw, best_code, best_score, "fuzzy")
    return Resolution(raw, UNK, max(best_score, 0.0), "unresolved")


@dataclass(frozen=True)
class QualityFlag:
    """One flagged record; flagged data is reported, never dropped."""

    noc: str
    year: int
    field: str
    reason: str


@dataclass(frozen=True)
class QualityReport:
    """Dataset quality summary for a panel."""

    missing_rate_before: float
    missing_rate_after: float
    code_mismatch_count: int
    negative_value_count: int
    unresolved_fraction: float
    year_violation_count: int
    flags: tuple[QualityFlag, ...] = field(default=())

    def __post_init__(self):
        for name in ("missing_rate_before", "missing_rate_after", "unresolved_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} outside [0, 1]: {v}")


def validate_dataset(
    panel,
    imputed=None,
    *,
    extra_noc_sources: Mapping[str, Iterable[str]] | None = None,
    year_range: tuple[int, int] = (1896, 2024),
) -> QualityReport:
    """Score panel quality: missingness, negatives, code and year problems.

    ``panel`` is a sequence of :class:`medalcast.weights.PanelRecord`.  A
    record counts as missing when GDP or population is absent.  If the
    post-imputation panel is supplied as ``imputed`` the after-rate is
    computed from it, otherwise it equals the before-rate.
    ``extra_noc_sources`` maps a source label to the NOC codes seen in some
    other file; codes absent from the panel count as cross-file mismatches.
    """
    records = list(panel)
    n = len(records)
    flags: list[QualityFlag] = []

    def missing_rate(rows) -> float:
        if not rows:
            return 0.0
        miss = sum(1 for r in rows if r.gdp is None or r.population is None)
        return miss / len(rows)

    negative = 0
    year_bad = 0
    unresolved = 0
    lo, hi = year_range
    for r in records:
        for fname in ("gdp", "population"):
            v = getattr(r, fname)
            if v is not None and v < 0:
                negative += 1
                flags.append(QualityFlag(r.noc, r.year, fname, "negative value"))
            if v is None:
                flags.append(QualityFlag(r.noc, r.year, fname, "missing value"))
        if not lo <= r.year <= hi:
            year_bad += 1
            flags.append(
                QualityFlag(r.noc, r.year, "year", f"outside [{lo}, {hi}]")
            )
        if r.noc in (UNK, UNK_TEAM):
            unresolved += 1

    mismatches = 0
    if extra_noc_sources:
        panel_nocs = {r.noc for r in records}
        for source, codes in sorted(extra_noc_sources.items()):
            for code in sorted(set(codes)):
                if code not in panel_nocs:
                    mismatches += 1
                    flags.append(
                        QualityFlag(code, 0, "noc", f"absent from panel ({source})")
                    )

    return QualityReport(
        missing_rate_before=missing_rate(records),
        missing_rate_after=missing_rate(list(imputed) if imputed is not None else records),
        code_mismatch_count=mismatches,
        negative_value_count=negative,
        unresolved_fraction=(unresolved / n) if n else 0.0,
        year_violation_count=year_bad,
        flags=tuple(flags),
    )
