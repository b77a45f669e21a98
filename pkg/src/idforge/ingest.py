"""Commit stream parsing and author string decomposition.

Two wire formats are accepted:

* **ndjson** — one JSON object per line with fields ``sha`` (string),
  ``author`` (string), ``ts`` (integer seconds since epoch, UTC),
  ``tz`` (raw zone string, kept verbatim), ``files`` (array of strings)
  and ``msg`` (free text). UTF-8.
* **git-log** — NUL-separated fields in the order sha, author, ts, tz,
  msg, then one token per touched file, with an *empty* token terminating
  each record. Consumption is positional, so an empty tz or an empty file
  list is unambiguous (git forbids NUL inside any of these fields, and
  file tokens are never empty). Producible with a custom
  ``git log --pretty`` format plus a name-only walk.

Malformed records are reported as :class:`RecordError` items interleaved
with good records — the stream never stops on a bad record, because
anonymous and broken author strings are data here, not errors.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator, Sequence

_NAME_DELIMS = frozenset(" +-_,.")


@dataclass(frozen=True)
class CommitRecord:
    """One VCS commit; ``author_string`` is preserved byte-exact."""

    sha: str
    author_string: str
    timestamp: int
    tz_offset: str
    files: frozenset[str]
    message: str

    def to_ndjson(self) -> str:
        return json.dumps(
            {
                "sha": self.sha,
                "author": self.author_string,
                "ts": self.timestamp,
                "tz": self.tz_offset,
                "files": sorted(self.files),
                "msg": self.message,
            },
            ensure_ascii=False,
        )


@dataclass(frozen=True)
class AuthorIdentity:
    """Parsed author fields plus the dense integer key ``id``."""

    author: str
    name: str
    email: str
    first_name: str
    last_name: str
    user_name: str
    id: int = -1


@dataclass(frozen=True)
class RecordError:
    """Per-record parse failure: where it happened and why."""

    location: str
    reason: str
    raw: str = ""


class StreamFormatError(ValueError):
    """The input cannot be decoded as the declared format at all."""


def parse_author_string(author: str, id: int = -1) -> AuthorIdentity:
    """Decompose a raw ``"name <email>"`` string into attribute fields.

    Total and deterministic: every input maps to an AuthorIdentity, with
    missing pieces as empty fields. name = text before the first '<';
    email = contents of the first '<...>' (remainder after '<' when no '>'
    follows); first/last name = prefix/suffix of name around the first/last
    delimiter among space + - _ , . and a camel-case boundary (lowercase
    letter followed by uppercase, Unicode-aware; digits never delimit);
    user_name = email prefix before '@', empty when there is no '@'.
    A name with no delimiter is replicated into first and last.
    """
    lt = author.find("<")
    if lt < 0:
        name = author.strip()
        email = ""
    else:
        name = author[:lt].strip()
        gt = author.find(">", lt + 1)
        email = author[lt + 1 : gt] if gt >= 0 else author[lt + 1 :]
        email = email.strip()
    first_name, last_name = _split_name(name)
    at = email.find("@")
    user_name = email[:at] if at >= 0 else ""
    return AuthorIdentity(
        author=author,
        name=name,
        email=email,
        first_name=first_name,
        last_name=last_name,
        user_name=user_name,
        id=id,
    )


def _split_name(name: str) -> tuple[str, str]:
    # Delimiter positions as (start, end) spans; camel boundaries have width 0.
    spans = []
    for i, ch in enumerate(name):
        if ch in _NAME_DELIMS:
            spans.append((i, i + 1))
        elif i + 1 < len(name) and ch.islower() and name[i + 1].isupper():
            spans.append((i + 1, i + 1))
    if not spans:
        return name, name
    return name[: spans[0][0]], name[spans[-1][1] :]


class IdentityTable:
    """Bijection author string <-> dense id, assigned in first-seen order."""

    def __init__(self) -> None:
        self._by_author: dict[str, AuthorIdentity] = {}
        self._by_id: list[AuthorIdentity] = []

    def __len__(self) -> int:
        return len(self._by_id)

    def __contains__(self, author: str) -> bool:
        return author in self._by_author

    def get_or_assign(self, author: str) -> AuthorIdentity:
        ident = self._by_author.get(author)
        if ident is None:
            ident = parse_author_string(author, id=len(self._by_id))
            self._by_author[author] = ident
            self._by_id.append(ident)
        return ident

    def by_id(self, id: int) -> AuthorIdentity:
        return self._by_id[id]

    def by_author(self, author: str) -> AuthorIdentity:
        return self._by_author[author]

    def identities(self) -> list[AuthorIdentity]:
        return list(self._by_id)

    @classmethod
    def from_commits(cls, commits: Iterable[CommitRecord]) -> "IdentityTable":
        table = cls()
        for commit in commits:
            table.get_or_assign(commit.author_string)
        return table

    CSV_FIELDS = ("id", "author", "name", "email", "first_name", "last_name", "user_name")

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh)
        writer.writerow(self.CSV_FIELDS)
        for ident in self._by_id:
            writer.writerow(
                (
                    ident.id,
                    ident.author,
                    ident.name,
                    ident.email,
                    ident.first_name,
                    ident.last_name,
                    ident.user_name,
                )
            )

    @classmethod
    def read_csv(cls, fh) -> "IdentityTable":
        table = cls()
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None or tuple(header) != cls.CSV_FIELDS:
            raise StreamFormatError(f"unexpected identity CSV header: {header}")
        for row in reader:
            ident = AuthorIdentity(
                id=int(row[0]),
                author=row[1],
                name=row[2],
                email=row[3],
                first_name=row[4],
                last_name=row[5],
                user_name=row[6],
            )
            if ident.id != len(table._by_id):
                raise StreamFormatError(f"identity ids must be dense, got {ident.id}")
            table._by_author[ident.author] = ident
            table._by_id.append(ident)
        return table


def parse_commit_stream(
    stream: BinaryIO, format: str = "ndjson"
) -> Iterator[CommitRecord | RecordError]:
    """Yield one CommitRecord per input commit, in input order.

    Malformed records are yielded as RecordError (with line number for
    ndjson, byte offset for git-log) and parsing continues.
    """
    if format == "ndjson":
        yield from _parse_ndjson(stream)
    elif format == "git-log":
        yield from _parse_gitlog(stream)
    else:
        raise StreamFormatError(f"unknown commit stream format: {format!r}")


def _record_from_fields(
    sha: object, author: object, ts: object, tz: object, files: object, msg: object
) -> CommitRecord:
    if not isinstance(sha, str) or not sha:
        raise ValueError("missing or invalid 'sha'")
    if not isinstance(author, str):
        raise ValueError("missing or invalid 'author'")
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise ValueError("missing or invalid 'ts' (integer seconds expected)")
    if not isinstance(tz, str):
        raise ValueError("invalid 'tz'")
    if not isinstance(files, (list, tuple)) or any(not isinstance(f, str) for f in files):
        raise ValueError("invalid 'files' (array of strings expected)")
    if not isinstance(msg, str):
        raise ValueError("invalid 'msg'")
    return CommitRecord(
        sha=sha,
        author_string=author,
        timestamp=ts,
        tz_offset=tz,
        files=frozenset(files),
        message=msg,
    )


def _parse_ndjson(stream: BinaryIO) -> Iterator[CommitRecord | RecordError]:
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line:
            continue
        try:
            text = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            yield RecordError(f"line {lineno}", f"undecodable UTF-8: {exc}", repr(raw[:80]))
            continue
        if text.startswith("#"):
            continue
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            yield RecordError(f"line {lineno}", f"invalid JSON: {exc}", text[:80])
            continue
        if not isinstance(obj, dict):
            yield RecordError(f"line {lineno}", "record is not a JSON object", text[:80])
            continue
        if "_header" in obj:
            continue
        try:
            yield _record_from_fields(
                obj.get("sha"),
                obj.get("author"),
                obj.get("ts"),
                obj.get("tz", ""),
                obj.get("files", []),
                obj.get("msg", ""),
            )
        except ValueError as exc:
            yield RecordError(f"line {lineno}", str(exc), text[:80])


def _parse_gitlog(stream: BinaryIO) -> Iterator[CommitRecord | RecordError]:
    try:
        data = stream.read()
    except Exception as exc:  # pragma: no cover - unreadable stream
        raise StreamFormatError(f"unreadable input: {exc}")
    if not data:
        return
    offset = 0
    tokens = data.split(b"\x00")
    # Trailing newline after the final record terminator is tolerated.
    if tokens and tokens[-1] in (b"", b"\n"):
        tokens.pop()
    i = 0
    while i < len(tokens):
        start_offset = offset
        header = tokens[i : i + 5]
        if len(header) < 5:
            yield RecordError(
                f"byte {start_offset}", "truncated record (expected 5 header fields)"
            )
            return
        files = []
        j = i + 5
        while j < len(tokens) and tokens[j] != b"":
            files.append(tokens[j])
            j += 1
        if j >= len(tokens):
            yield RecordError(f"byte {start_offset}", "unterminated record (missing empty token)")
            return
        consumed = tokens[i : j + 1]
        offset += sum(len(t) + 1 for t in consumed)
        i = j + 1
        try:
            sha, author, ts_raw, tz, msg = (t.decode("utf-8") for t in header)
            ts = int(ts_raw)
        except (UnicodeDecodeError, ValueError) as exc:
            yield RecordError(f"byte {start_offset}", f"bad header field: {exc}")
            continue
        try:
            yield _record_from_fields(
                sha, author, ts, tz, [f.decode("utf-8") for f in files], msg
            )
        except (UnicodeDecodeError, ValueError) as exc:
            yield RecordError(f"byte {start_offset}", str(exc))


def write_gitlog(commits: Iterable[CommitRecord], fh: BinaryIO) -> None:
    """Inverse of the git-log parser; files are written sorted.

    NUL is the field separator and git forbids it in every field, but a
    record built from another source could smuggle one in, so refuse it."""
    for c in commits:
        fields = [c.sha, c.author_string, str(c.timestamp), c.tz_offset, c.message]
        fields.extend(sorted(c.files))
        if any("\x00" in f for f in fields):
            raise ValueError(f"commit {c.sha}: NUL inside a field cannot be framed")
        fields.append("")
        fh.write(b"\x00".join(f.encode("utf-8") for f in fields) + b"\x00")


def split_records(
    items: Iterable[CommitRecord | RecordError],
) -> tuple[list[CommitRecord], list[RecordError]]:
    """Partition a parse stream into good records and errors."""
    records: list[CommitRecord] = []
    errors: list[RecordError] = []
    for item in items:
        if isinstance(item, CommitRecord):
            records.append(item)
        else:
            errors.append(item)
    return records, errors


def parse_ndjson_text(text: str) -> tuple[list[CommitRecord], list[RecordError]]:
    """Convenience wrapper for in-memory NDJSON content."""
    return split_records(parse_commit_stream(io.BytesIO(text.encode("utf-8")), "ndjson"))
