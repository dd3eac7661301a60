"""Reading, cleaning and site-filtering session logs.

A session log is a CSV with one row per device session::

    node,start,end,location,site
    aa:bb,100,200,ap1,stlucia

Times are integer epoch seconds.  ``end`` may be empty for sessions that were
still open when collection stopped; those survive parsing and are removed by
:func:`clean_sessions`.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

log = logging.getLogger(__name__)

COLUMNS = ("node", "start", "end", "location", "site")


class TraceFormatError(ValueError):
    """The log cannot be read at all (bad header, wrong encoding)."""


class Session(NamedTuple):
    node: str
    start: int
    end: int | None
    location: str
    site: str = ""


def canonical_key(s: Session) -> tuple:
    return (s.start, -1 if s.end is None else s.end, s.node, s.location, s.site)


@dataclass
class SessionTable:
    records: list[Session]
    provenance: str = "original"
    rng_seed: int | None = None

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Session]:
        return iter(self.records)

    def canonical(self) -> "SessionTable":
        return SessionTable(sorted(self.records, key=canonical_key), self.provenance, self.rng_seed)

    @property
    def nodes(self) -> set[str]:
        return {s.node for s in self.records}

    @property
    def locations(self) -> set[str]:
        return {s.location for s in self.records}


@dataclass(frozen=True)
class SessionFormat:
    """Maps the canonical fields onto the column names of a particular log."""

    node: str = "node"
    start: str = "start"
    end: str = "end"
    location: str = "location"
    site: str = "site"
    delimiter: str = ","

    def columns(self) -> tuple[str, ...]:
        return (self.node, self.start, self.end, self.location, self.site)


# Raw UQ-style logs name the columns after the hardware.
UQ_FORMAT = SessionFormat(node="mac", location="ap")


class Reject(NamedTuple):
    line: int
    reason: str


@dataclass
class CleanReport:
    dropped_no_end: int = 0
    dropped_zero_duration: int = 0
    dropped_no_location: int = 0
    retained: int = 0

    @property
    def total(self) -> int:
        return self.dropped_no_end + self.dropped_zero_duration + self.dropped_no_location + self.retained


def _parse_time(text: str, name: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        # tolerate "100.0" but nothing fractional
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"{name} {text!r} is not whole seconds") from None
        return int(value)


def _data_lines(stream: Iterable[str], counter: list[int]) -> Iterator[str]:
    for lineno, line in enumerate(stream, start=1):
        counter[0] = lineno
        if line.startswith("#"):
            continue
        yield line


def parse_sessions(
    stream: IO[bytes] | IO[str], fmt: SessionFormat = SessionFormat()
) -> tuple[SessionTable, list[Reject]]:
    """Parse a session log; bad rows are collected, not fatal.

    Lines starting with ``#`` are comments.  Returns the table in file order
    together with ``(line, reason)`` rejects.
    """
    if isinstance(stream, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(stream, "mode", ""):
        stream = io.TextIOWrapper(stream, encoding="utf-8", newline="")  # type: ignore[arg-type]
    lineno = [0]
    reader = csv.reader(_data_lines(stream, lineno), delimiter=fmt.delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise TraceFormatError("empty session log: no header") from None
    except UnicodeDecodeError as exc:
        raise TraceFormatError(f"session log is not UTF-8: {exc}") from None
    header = [h.strip() for h in header]
    missing = [c for c in fmt.columns() if c not in header]
    if missing:
        raise TraceFormatError(f"header {header} lacks column(s) {missing}")
    idx = [header.index(c) for c in fmt.columns()]

    records: list[Session] = []
    rejects: list[Reject] = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            rejects.append(Reject(lineno[0], f"expected {len(header)} fields, got {len(row)}"))
            continue
        node, start, end, location, site = (row[i].strip() for i in idx)
        if not node:
            rejects.append(Reject(lineno[0], "empty node"))
            continue
        try:
            t0 = _parse_time(start, "start")
            t1 = _parse_time(end, "end") if end else None
        except ValueError as exc:
            rejects.append(Reject(lineno[0], str(exc)))
            continue
        records.append(Session(node, t0, t1, location, site))
    return SessionTable(records), rejects


def read_sessions(path: str | Path, fmt: SessionFormat = SessionFormat()) -> tuple[SessionTable, list[Reject]]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_sessions(fh, fmt)


def write_sessions(table: SessionTable, stream: IO[str], comments: dict[str, object] | None = None) -> None:
    for key, value in (comments or {}).items():
        stream.write(f"# {key}={value}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(COLUMNS)
    for s in table.records:
        writer.writerow((s.node, s.start, "" if s.end is None else s.end, s.location, s.site))


def save_sessions(table: SessionTable, path: str | Path, comments: dict[str, object] | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_sessions(table, fh, comments)


def write_rejects(rejects: list[Reject], stream: IO[str]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(("line", "reason"))
    writer.writerows(rejects)


def clean_sessions(table: SessionTable) -> tuple[SessionTable, CleanReport]:
    """Drop sessions with no end, non-positive duration, or no location.

    Rules are applied in that order, so a record is tallied under the first
    rule it breaks.
    """
    report = CleanReport()
    kept = []
    for s in table.records:
        if s.end is None:
            report.dropped_no_end += 1
        elif s.end <= s.start:
            report.dropped_zero_duration += 1
        elif not s.location:
            report.dropped_no_location += 1
        else:
            kept.append(s)
    report.retained = len(kept)
    kept.sort(key=canonical_key)
    return SessionTable(kept, table.provenance, table.rng_seed), report


def filter_site(table: SessionTable, site: str) -> SessionTable:
    kept = [s for s in table.records if s.site == site]
    if not kept and table.records:
        log.warning("site %r not present in session table", site)
    return SessionTable(kept, table.provenance, table.rng_seed)
