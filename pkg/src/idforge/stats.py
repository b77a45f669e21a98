"""Per-attribute term frequency tables, the fictitious-string stoplist,
and the frequency-adjustment feature.

Frequencies are counted over distinct author identities (not commits),
on lower-cased values, so "Root" and "root" pool into one key. Shared
rare values are strong identity evidence; shared frequent or fictitious
values are none at all, which is what the feature encodes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

from .ingest import AuthorIdentity

ATTRIBUTES = ("name", "first_name", "last_name", "user_name", "email")

INVALID_SCORE = -10.0

# Seeded from the corpus-wide most-frequent strings that are clearly not
# person names; real names that happen to be frequent (Lee, Chen, Alex...)
# are deliberately absent. Curation beyond this seed is a human step.
SEED_STOPLIST: dict[str, tuple[str, ...]] = {
    "name": (
        "unknown",
        "root",
        "nobody",
        "ubuntu",
        "(no author)",
        "nodemcu-custom-build",
        "system administrator",
        "administrator",
        "user",
        "your name",
        "john doe",
    ),
    "first_name": ("unknown", "root", "nobody", "admin", "administrator", "user"),
    "last_name": ("unknown", "root", "nobody", "ubuntu", "administrator", "user"),
    "user_name": (
        "root",
        "nobody",
        "github",
        "ubuntu",
        "info",
        "me",
        "admin",
        "mail",
        "none",
        "noreply",
        "devnull",
    ),
    "email": (
        "none@none",
        "devnull@localhost",
        "student@epicodus.com",
        "unknown",
        "you@example.com",
        "anybody@emacswiki.org",
        "=",
        "noreply",
        "me@email.com",
        "a@b.com",
    ),
}


@dataclass
class FrequencyTables:
    """value -> occurrence count, one table per attribute, lower-cased keys."""

    tables: dict[str, dict[str, int]] = field(
        default_factory=lambda: {attr: {} for attr in ATTRIBUTES}
    )

    def count(self, attribute: str, value: str) -> int:
        return self.tables[attribute].get(value.lower(), 0)

    def write_csv(self, attribute: str, fh: TextIO) -> None:
        writer = csv.writer(fh)
        writer.writerow(("value", "count"))
        table = self.tables[attribute]
        for value, n in sorted(table.items(), key=lambda kv: (-kv[1], kv[0])):
            writer.writerow((value, n))


def build_frequency_tables(identities: Sequence[AuthorIdentity]) -> FrequencyTables:
    """Count attribute occurrences across identities; empty values are skipped."""
    if not identities:
        raise ValueError("cannot build frequency tables from an empty identity set")
    tables = FrequencyTables()
    for ident in identities:
        for attr in ATTRIBUTES:
            value = getattr(ident, attr)
            if not value:
                continue
            key = value.lower()
            table = tables.tables[attr]
            table[key] = table.get(key, 0) + 1
    return tables


def top_frequent_strings(
    tables: FrequencyTables, n: int
) -> dict[str, list[tuple[str, int]]]:
    """The n highest-count values per attribute, count-descending, ties
    broken lexicographically. Intended as raw material for stoplist curation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = {}
    for attr in ATTRIBUTES:
        ranked = sorted(tables.tables[attr].items(), key=lambda kv: (-kv[1], kv[0]))
        out[attr] = ranked[:n]
    return out


class Stoplist:
    """Exact-match membership of lower-cased fictitious strings.

    Entries are either global (match any attribute) or scoped to one
    attribute. File format: one string per line, '#' comments, optional
    ``[attribute]`` section headers scoping the lines that follow;
    a ``[*]`` header returns to global scope.
    """

    def __init__(
        self,
        global_entries: Iterable[str] = (),
        by_attribute: dict[str, Iterable[str]] | None = None,
    ) -> None:
        self.global_entries = {e.lower() for e in global_entries}
        self.by_attribute: dict[str, set[str]] = {attr: set() for attr in ATTRIBUTES}
        for attr, entries in (by_attribute or {}).items():
            if attr not in self.by_attribute:
                raise ValueError(f"unknown attribute {attr!r}")
            self.by_attribute[attr].update(e.lower() for e in entries)

    def __contains__(self, value: str) -> bool:
        return value.lower() in self.global_entries

    def matches(self, attribute: str, value: str) -> bool:
        v = value.lower()
        return v in self.global_entries or v in self.by_attribute[attribute]

    def add(self, value: str, attribute: str | None = None) -> None:
        if attribute is None:
            self.global_entries.add(value.lower())
        else:
            self.by_attribute[attribute].add(value.lower())

    @classmethod
    def seed(cls) -> "Stoplist":
        return cls(by_attribute={k: v for k, v in SEED_STOPLIST.items()})

    @classmethod
    def from_file(cls, fh: TextIO) -> "Stoplist":
        stop = cls()
        scope: str | None = None
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                scope = None if section == "*" else section
                if scope is not None and scope not in ATTRIBUTES:
                    raise ValueError(f"unknown stoplist section {section!r}")
                continue
            stop.add(line, scope)
        return stop

    def to_file(self, fh: TextIO) -> None:
        fh.write("# idforge stoplist: one lower-cased string per line\n")
        for entry in sorted(self.global_entries):
            fh.write(entry + "\n")
        for attr in ATTRIBUTES:
            entries = self.by_attribute[attr]
            if not entries:
                continue
            fh.write(f"[{attr}]\n")
            for entry in sorted(entries):
                fh.write(entry + "\n")


def frequency_similarity(
    a1: AuthorIdentity,
    a2: AuthorIdentity,
    attribute: str,
    tables: FrequencyTables,
    stop: Stoplist,
) -> float:
    """log10(1 / (f1 * f2)) over attribute frequencies, or -10 when either
    value is empty or stoplisted.

    -10 sits well below any score two genuinely frequent strings can
    produce at desk scale, letting a learner separate "frequent but real"
    from "not an identifier at all".
    """
    if attribute not in ATTRIBUTES:
        raise ValueError(f"unknown attribute {attribute!r}")
    v1 = getattr(a1, attribute)
    v2 = getattr(a2, attribute)
    if not v1 or not v2:
        return INVALID_SCORE
    if stop.matches(attribute, v1) or stop.matches(attribute, v2):
        return INVALID_SCORE
    f1 = tables.count(attribute, v1)
    f2 = tables.count(attribute, v2)
    if f1 < 1 or f2 < 1:
        raise ValueError(
            f"attribute {attribute}={v1!r}/{v2!r} not present in frequency tables"
        )
    return -(math.log10(f1) + math.log10(f2))
