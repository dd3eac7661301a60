"""Contact inference from colocation.

Two sessions at the same location whose intervals overlap for a positive
length of time produce one contact event, stamped with the later of the two
start times.  Overlaps between two sessions of the same node are counted as
imaginary and dropped.
"""

from __future__ import annotations

import csv
import heapq
from bisect import bisect_right
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, NamedTuple

from .traceio import SessionTable, TraceFormatError

CONTACT_COLUMNS = ("node_a", "node_b", "t_start", "location")

# Location of events whose location is no longer meaningful (contact shuffles).
NO_LOCATION = ""


class ContactEvent(NamedTuple):
    node_a: str
    node_b: str
    t_start: int
    location: str = NO_LOCATION

    @property
    def pair(self) -> tuple[str, str]:
        return (self.node_a, self.node_b)


def event_key(e: ContactEvent) -> tuple:
    return (e.t_start, e.node_a, e.node_b, e.location)


def make_event(u: str, v: str, t: int, location: str = NO_LOCATION) -> ContactEvent:
    if u == v:
        raise ValueError(f"self-contact for node {u!r}")
    return ContactEvent(u, v, t, location) if u < v else ContactEvent(v, u, t, location)


@dataclass
class ContactSequence:
    events: list[ContactEvent]
    imaginary_discarded: int = 0
    model: str = "original"
    _times: list[int] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.events.sort(key=event_key)

    def __len__(self) -> int:
        return len(self.events)

    @property
    def times(self) -> list[int]:
        if self._times is None:
            self._times = [e.t_start for e in self.events]
        return self._times

    @property
    def nodes(self) -> set[str]:
        out: set[str] = set()
        for e in self.events:
            out.add(e.node_a)
            out.add(e.node_b)
        return out


def infer_contacts(table: SessionTable) -> ContactSequence:
    """Sweep each location's sessions in start order, keeping the open ones.

    A session opening at ``s`` contacts every open session whose end is after
    ``s``; sessions ending at or before ``s`` are retired first, so touching
    endpoints never count.
    """
    by_location: dict[str, list[tuple[int, int, str]]] = defaultdict(list)
    for s in table.records:
        by_location[s.location].append((s.start, s.end, s.node))

    events: list[ContactEvent] = []
    imaginary = 0
    for location in sorted(by_location):
        sessions = sorted(by_location[location])
        ends: list[tuple[int, int]] = []  # (end, id) heap
        active: dict[int, str] = {}
        for i, (start, end, node) in enumerate(sessions):
            while ends and ends[0][0] <= start:
                _, j = heapq.heappop(ends)
                del active[j]
            for other in active.values():
                if other == node:
                    imaginary += 1
                elif other < node:
                    events.append(ContactEvent(other, node, start, location))
                else:
                    events.append(ContactEvent(node, other, start, location))
            active[i] = node
            heapq.heappush(ends, (end, i))
    return ContactSequence(events, imaginary, table.provenance)


def count_total_and_unique(seq: ContactSequence, t: int) -> tuple[int, int]:
    """Events with ``t_start <= t`` and the number of distinct pairs among them."""
    n = bisect_right(seq.times, t)
    return n, len({e.pair for e in seq.events[:n]})


def cumulative_counts(seq: ContactSequence, times: Iterable[int]) -> tuple[list[int], list[int]]:
    """Total and unique counts at each of ``times`` (must be nondecreasing)."""
    total, unique = [], []
    seen: set[tuple[str, str]] = set()
    i = 0
    events = seq.events
    for t in times:
        while i < len(events) and events[i].t_start <= t:
            seen.add(events[i].pair)
            i += 1
        total.append(i)
        unique.append(len(seen))
    return total, unique


def repeat_contact_histogram(seq: ContactSequence) -> dict[str, int]:
    """Tally node pairs by how many contact events they share: 1, 2 or more."""
    per_pair = Counter(e.pair for e in seq.events)
    hist = {"1": 0, "2": 0, ">2": 0}
    for n in per_pair.values():
        hist["1" if n == 1 else "2" if n == 2 else ">2"] += 1
    return hist


def write_contacts(seq: ContactSequence, stream: IO[str], comments: dict[str, object] | None = None) -> None:
    header = {"model": seq.model, "imaginary_discarded": seq.imaginary_discarded}
    header.update(comments or {})
    for key, value in header.items():
        stream.write(f"# {key}={value}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CONTACT_COLUMNS)
    writer.writerows(seq.events)


def save_contacts(seq: ContactSequence, path: str | Path, comments: dict[str, object] | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_contacts(seq, fh, comments)


def parse_contacts(stream: IO[str]) -> ContactSequence:
    meta: dict[str, str] = {}
    rows = []
    for line in stream:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        else:
            rows.append(line)
    reader = csv.reader(rows)
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CONTACT_COLUMNS:
        raise TraceFormatError(f"contact file header must be {','.join(CONTACT_COLUMNS)}")
    events = []
    for n, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 4:
            raise TraceFormatError(f"contact row {n}: expected 4 fields")
        events.append(make_event(row[0], row[1], int(row[2]), row[3]))
    return ContactSequence(
        events,
        int(meta.get("imaginary_discarded", 0)),
        meta.get("model", "original"),
    )


def read_contacts(path: str | Path) -> ContactSequence:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_contacts(fh)
