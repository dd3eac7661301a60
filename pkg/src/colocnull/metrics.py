"""Statistics over sessions, contacts and prevalence ensembles.

Everything here returns plain containers that serialize straight to CSV
(:func:`write_rows`); plotting is left to the caller.
"""

from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Literal, Sequence

import numpy as np

from .inference import ContactSequence
from .spread import DAY, IndexedSequence, PrevalenceEnsemble
from .traceio import SessionTable

Mode = Literal["total", "unique"]


@dataclass
class TimeSeries:
    t: np.ndarray
    value: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t)
        self.value = np.asarray(self.value)
        if len(self.t) != len(self.value):
            raise ValueError("time and value arrays differ in length")
        if len(self.t) > 1 and not np.all(np.diff(self.t) > 0):
            raise ValueError("time points must be strictly increasing")

    def rows(self) -> list[tuple]:
        return list(zip(self.t.tolist(), self.value.tolist()))


@dataclass
class Ecdf:
    """Right-continuous empirical CDF.

    An empty sample evaluates to 1 everywhere and has ``empty`` set.
    ``excluded`` counts observations dropped before building the sample.
    """

    values: np.ndarray
    label: str = ""
    excluded: int = 0

    def __post_init__(self) -> None:
        self.values = np.sort(np.asarray(self.values, dtype=float))

    @property
    def empty(self) -> bool:
        return len(self.values) == 0

    def __call__(self, x):
        if self.empty:
            return np.ones_like(np.asarray(x, dtype=float)) if np.ndim(x) else 1.0
        out = np.searchsorted(self.values, x, side="right") / len(self.values)
        return out if np.ndim(x) else float(out)

    def rows(self) -> list[tuple[float, float]]:
        if self.empty:
            return []
        xs = np.unique(self.values)
        return list(zip(xs.tolist(), self(xs).tolist()))


@dataclass
class DeltaSeries:
    t: np.ndarray
    delta: np.ndarray
    band: np.ndarray
    label: str = ""

    def rows(self) -> list[tuple]:
        return list(zip(self.t.tolist(), self.delta.tolist(), self.band.tolist()))


def _grid(t0: int, t1: int, step: int) -> np.ndarray:
    """Every ``step`` seconds from t0, extended to reach t1."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = -(-(t1 - t0) // step) if t1 > t0 else 0
    return t0 + step * np.arange(n + 1, dtype=np.int64)


def active_sessions_over_time(table: SessionTable, step: int, t0: int | None = None, t1: int | None = None) -> TimeSeries:
    """Sessions with start <= t < end, sampled every ``step`` seconds."""
    starts = np.sort(np.array([s.start for s in table.records], dtype=np.int64))
    ends = np.sort(np.array([s.end for s in table.records], dtype=np.int64))
    if t0 is None:
        t0 = int(starts[0]) if len(starts) else 0
    if t1 is None:
        t1 = int(ends[-1]) if len(ends) else t0
    grid = _grid(t0, t1, step)
    value = np.searchsorted(starts, grid, side="right") - np.searchsorted(ends, grid, side="right")
    return TimeSeries(grid, value, "active_sessions")


def cumulative_contacts_over_time(seq: ContactSequence, step: int, t0: int | None = None, t1: int | None = None) -> tuple[TimeSeries, TimeSeries]:
    """Running total and unique contact counts over the trace (absolute time)."""
    times = seq.times
    if t0 is None:
        t0 = times[0] if times else 0
    if t1 is None:
        t1 = times[-1] if times else t0
    grid = _grid(t0, t1, step)
    total = np.searchsorted(np.asarray(times, dtype=np.int64), grid, side="right")
    first_seen: dict[tuple[str, str], int] = {}
    for e in seq.events:
        first_seen.setdefault(e.pair, e.t_start)
    unique = np.searchsorted(np.sort(np.fromiter(first_seen.values(), dtype=np.int64)), grid, side="right")
    return TimeSeries(grid, total, "total_contacts"), TimeSeries(grid, unique, "unique_contacts")


def ecdf_locations_per_node(table: SessionTable) -> Ecdf:
    seen: dict[str, set[str]] = defaultdict(set)
    for s in table.records:
        seen[s.node].add(s.location)
    return Ecdf(np.array([len(v) for v in seen.values()]), "locations_per_node")


def contacts_per_node(seq: ContactSequence, mode: Mode) -> dict[str, int]:
    if mode == "total":
        counts: dict[str, int] = defaultdict(int)
        for e in seq.events:
            counts[e.node_a] += 1
            counts[e.node_b] += 1
        return dict(counts)
    partners: dict[str, set[str]] = defaultdict(set)
    for e in seq.events:
        partners[e.node_a].add(e.node_b)
        partners[e.node_b].add(e.node_a)
    return {n: len(p) for n, p in partners.items()}


def ecdf_contacts_per_node(seq: ContactSequence, mode: Mode) -> Ecdf:
    if mode not in ("total", "unique"):
        raise ValueError(f"mode must be total or unique, not {mode!r}")
    return Ecdf(np.array(list(contacts_per_node(seq, mode).values())), f"contacts_per_node_{mode}")


def ecdf_intersession_time(table: SessionTable) -> Ecdf:
    """Gaps between a node's consecutive sessions (by start); negative gaps excluded."""
    per_node: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for s in table.records:
        per_node[s.node].append((s.start, s.end))
    gaps = []
    excluded = 0
    for spans in per_node.values():
        spans.sort()
        for (_, prev_end), (next_start, _) in zip(spans, spans[1:]):
            gap = next_start - prev_end
            if gap < 0:
                excluded += 1
            else:
                gaps.append(gap)
    return Ecdf(np.array(gaps), "intersession_time", excluded)


def trial_contact_counts(seq: ContactSequence | IndexedSequence, ensemble: PrevalenceEnsemble, mode: Mode) -> TimeSeries:
    """Contacts accumulated since each trial's seed event, averaged over trials.

    Counted from the seed event's timestamp, on the ensemble's grid.
    """
    idx = seq if isinstance(seq, IndexedSequence) else IndexedSequence(seq)
    grid = ensemble.grid
    acc = np.zeros(len(grid))
    for curve in ensemble.curves:
        t0 = curve.seed_time
        lo, hi = idx.window(t0, t0 + grid[-1])
        rel = idx.times[lo:hi] - t0
        if mode == "total":
            acc += np.searchsorted(rel, grid, side="right")
        else:
            codes = idx.a[lo:hi] * len(idx.names) + idx.b[lo:hi]
            _, first = np.unique(codes, return_index=True)
            acc += np.searchsorted(np.sort(rel[first]), grid, side="right")
    return TimeSeries(grid, acc / max(ensemble.trials, 1), f"{mode}_contacts_in_trial")


def prevalence_vs_contacts(ensemble: PrevalenceEnsemble, contacts: TimeSeries) -> np.ndarray:
    """Rows of (mean cumulative contacts, mean prevalence, sem) over the common grid."""
    if len(contacts.t) != len(ensemble.grid) or not np.allclose(contacts.t, ensemble.grid):
        raise ValueError("contact series and prevalence ensemble use different time grids")
    return np.column_stack([contacts.value, ensemble.mean, ensemble.sem])


def one_day_values(ensemble: PrevalenceEnsemble, at: float = DAY) -> np.ndarray:
    return np.array([c.at(at) for c in ensemble.curves])


def one_day_prevalence_histogram(
    ensemble: PrevalenceEnsemble, bin_width: float = 0.02, at: float = DAY
) -> tuple[np.ndarray, np.ndarray]:
    """Histogram of per-trial prevalence at ``at`` seconds; returns (edges, counts)."""
    if not 0 < bin_width <= 1:
        raise ValueError("bin width must be in (0, 1]")
    nbins = int(math.ceil(round(1.0 / bin_width, 9)))
    edges = np.linspace(0.0, nbins * bin_width, nbins + 1)
    counts, _ = np.histogram(one_day_values(ensemble, at), bins=edges)
    return edges, counts


def pairwise_prevalence_delta(a: PrevalenceEnsemble, b: PrevalenceEnsemble, label: str = "") -> DeltaSeries:
    if len(a.grid) != len(b.grid) or not np.array_equal(a.grid, b.grid):
        raise ValueError("ensembles were sampled on different grids")
    return DeltaSeries(a.grid, a.mean - b.mean, np.sqrt(a.sem**2 + b.sem**2), label)


def write_rows(stream: IO[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def save_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_rows(fh, header, rows)
