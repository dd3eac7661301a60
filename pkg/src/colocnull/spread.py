"""Susceptible-Infected spreading over contact sequences.

One trial picks a seed contact event uniformly from the first
``seed_window_days`` of the sequence and one of its endpoints, keeps only the
events from that moment to ``runway_days`` later, and takes the largest
connected component of what remains as the population.  If the chosen node is
outside that component the draw is repeated.  Both endpoints of the seed event
are infected at t = 0; events are then replayed in order, each infecting its
susceptible endpoint when the other one is infected.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .inference import ContactEvent, ContactSequence
from .models import make_rng

log = logging.getLogger(__name__)

DAY = 86_400
DEFAULT_GRID_POINTS = 1441  # 10-minute spacing over a 10-day runway
MAX_RESAMPLES = 10_000


class SeedSamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrialConfig:
    seed_window_days: float = 4
    runway_days: float = 10
    trials: int = 250
    master_seed: int = 0
    grid_points: int = DEFAULT_GRID_POINTS
    # start of the seed window; None means the first contact event
    trace_start: int | None = None

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.seed_window_days <= 0 or self.runway_days <= 0:
            raise ValueError("seed window and runway must be positive")
        if self.grid_points < 2:
            raise ValueError("grid needs at least two points")

    @property
    def window_seconds(self) -> float:
        return self.seed_window_days * DAY

    @property
    def runway_seconds(self) -> float:
        return self.runway_days * DAY

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.runway_seconds, self.grid_points)


@dataclass
class PrevalenceCurve:
    """Step function: ``values[k]`` holds from ``times[k]`` until the next step."""

    times: list[int]
    values: list[float]
    denominator: int
    seed_node: str
    seed_event: ContactEvent
    infected: list[str] = field(default_factory=list, repr=False)  # in infection order

    @property
    def seed_time(self) -> int:
        return self.seed_event.t_start

    def at(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        return self.values[max(k, 0)]

    def sample(self, grid: np.ndarray) -> np.ndarray:
        k = np.searchsorted(np.asarray(self.times), grid, side="right") - 1
        return np.asarray(self.values)[np.maximum(k, 0)]


@dataclass
class PrevalenceEnsemble:
    grid: np.ndarray
    mean: np.ndarray
    sem: np.ndarray
    curves: list[PrevalenceCurve] = field(repr=False)
    samples: np.ndarray = field(repr=False)  # trials x grid

    @property
    def trials(self) -> int:
        return len(self.curves)


class IndexedSequence:
    """Integer-coded view of a contact sequence for fast replay."""

    def __init__(self, seq: ContactSequence) -> None:
        self.events = seq.events
        self.names = sorted(seq.nodes)
        index = {n: i for i, n in enumerate(self.names)}
        self.times = np.fromiter((e.t_start for e in seq.events), dtype=np.int64, count=len(seq.events))
        self.a = np.fromiter((index[e.node_a] for e in seq.events), dtype=np.int64, count=len(seq.events))
        self.b = np.fromiter((index[e.node_b] for e in seq.events), dtype=np.int64, count=len(seq.events))
        self.t_list = self.times.tolist()
        self.a_list = self.a.tolist()
        self.b_list = self.b.tolist()

    def __len__(self) -> int:
        return len(self.t_list)

    def window(self, lo_time: float, hi_time: float) -> tuple[int, int]:
        """Index range of events with lo_time <= t <= hi_time."""
        lo = int(np.searchsorted(self.times, lo_time, side="left"))
        hi = int(np.searchsorted(self.times, hi_time, side="right"))
        return lo, hi

    def lcc(self, lo: int, hi: int) -> set[int]:
        """Largest component of the events in [lo, hi); ties to the smallest node id."""
        if hi <= lo:
            return set()
        ends = np.concatenate([self.a[lo:hi], self.b[lo:hi]])
        present, inverse = np.unique(ends, return_inverse=True)
        m = hi - lo
        n = len(present)
        adj = coo_matrix((np.ones(m, dtype=np.int8), (inverse[:m], inverse[m:])), shape=(n, n))
        _, labels = connected_components(adj, directed=False)
        sizes = np.bincount(labels)
        # present is sorted, so a label's first occurrence is its smallest node
        _, first = np.unique(labels, return_index=True)
        best = min(range(len(sizes)), key=lambda c: (-sizes[c], first[c]))
        return set(present[labels == best].tolist())


def _seed_candidates(idx: IndexedSequence, cfg: TrialConfig) -> tuple[int, int]:
    if not len(idx):
        return 0, 0
    anchor = idx.t_list[0] if cfg.trace_start is None else cfg.trace_start
    lo = int(np.searchsorted(idx.times, anchor, side="left"))
    hi = int(np.searchsorted(idx.times, anchor + cfg.window_seconds, side="left"))
    return lo, hi


def sample_seed_event(
    seq: ContactSequence | IndexedSequence, cfg: TrialConfig, rng: np.random.Generator
) -> tuple[ContactEvent, str]:
    """Uniform event among those in the seed window, then a uniform endpoint.

    The window is ``[start, start + seed_window)`` where ``start`` is
    ``cfg.trace_start`` or, by default, the earliest contact event.
    """
    idx = seq if isinstance(seq, IndexedSequence) else IndexedSequence(seq)
    i, node = _draw(idx, cfg, rng)
    return idx.events[i], idx.names[node]


def _draw(idx: IndexedSequence, cfg: TrialConfig, rng: np.random.Generator) -> tuple[int, int]:
    lo, hi = _seed_candidates(idx, cfg)
    if hi <= lo:
        raise SeedSamplingError("no contact events inside the seed window")
    i = lo + int(rng.integers(hi - lo))
    node = idx.a_list[i] if rng.integers(2) == 0 else idx.b_list[i]
    return i, node


def _run(idx: IndexedSequence, cfg: TrialConfig, rng: np.random.Generator) -> PrevalenceCurve:
    for _ in range(MAX_RESAMPLES):
        i, node = _draw(idx, cfg, rng)
        t0 = idx.t_list[i]
        lo, hi = idx.window(t0, t0 + cfg.runway_seconds)
        lcc = idx.lcc(lo, hi)
        if node in lcc:
            break
    else:
        raise SeedSamplingError(f"no seed inside the largest component after {MAX_RESAMPLES} draws")

    n = len(lcc)
    infected = bytearray(len(idx.names))
    sa, sb = idx.a_list[i], idx.b_list[i]
    infected[sa] = infected[sb] = 1
    order = [sa, sb]
    count = 2
    times, values = [0], [count / n]
    t_list, a_list, b_list = idx.t_list, idx.a_list, idx.b_list
    for k in range(lo, hi):
        if count == n:
            break
        a, b = a_list[k], b_list[k]
        ia, ib = infected[a], infected[b]
        if ia == ib:
            continue
        new = b if ia else a
        infected[new] = 1
        order.append(new)
        count += 1
        t = t_list[k] - t0
        if times[-1] == t:
            values[-1] = count / n
        else:
            times.append(t)
            values.append(count / n)
    seed_event = idx.events[i]
    names = idx.names
    return PrevalenceCurve(times, values, n, names[node], seed_event, [names[x] for x in order])


def run_trial(seq: ContactSequence | IndexedSequence, cfg: TrialConfig, rng: np.random.Generator) -> PrevalenceCurve:
    idx = seq if isinstance(seq, IndexedSequence) else IndexedSequence(seq)
    return _run(idx, cfg, rng)


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    return make_rng(master_seed, "si-trial", trial)


_shared: IndexedSequence | None = None


def _init_worker(idx: IndexedSequence) -> None:
    global _shared
    _shared = idx


def _worker(args: tuple[TrialConfig, int]) -> PrevalenceCurve:
    cfg, trial = args
    assert _shared is not None
    return _run(_shared, cfg, trial_rng(cfg.master_seed, trial))


def _checked(idx: IndexedSequence, cfg: TrialConfig, trial: int) -> PrevalenceCurve:
    try:
        return _run(idx, cfg, trial_rng(cfg.master_seed, trial))
    except SeedSamplingError as exc:
        raise SeedSamplingError(f"trial {trial}: {exc}") from exc


def summarize(curves: list[PrevalenceCurve], grid: np.ndarray) -> PrevalenceEnsemble:
    samples = np.vstack([c.sample(grid) for c in curves])
    mean = samples.mean(axis=0)
    if len(curves) > 1:
        sem = samples.std(axis=0, ddof=1) / math.sqrt(len(curves))
    else:
        sem = np.zeros_like(mean)
    return PrevalenceEnsemble(grid, mean, sem, curves, samples)


def run_ensemble(seq: ContactSequence | IndexedSequence, cfg: TrialConfig, workers: int = 1) -> PrevalenceEnsemble:
    """Run ``cfg.trials`` independent trials and average them on the grid.

    Trial ``k`` draws from its own stream derived from (master_seed, k), so the
    result does not depend on ``workers``.
    """
    idx = seq if isinstance(seq, IndexedSequence) else IndexedSequence(seq)
    if len(idx):
        span = idx.t_list[-1] - idx.t_list[0]
        if span < cfg.window_seconds + cfg.runway_seconds:
            log.warning(
                "contact sequence spans %.2f days, less than seed window + runway (%.2f days)",
                span / DAY,
                cfg.seed_window_days + cfg.runway_days,
            )
    if workers <= 1:
        curves = [_checked(idx, cfg, k) for k in range(cfg.trials)]
    else:
        lo, hi = _seed_candidates(idx, cfg)
        if hi <= lo:
            raise SeedSamplingError("trial 0: no contact events inside the seed window")
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(idx,)) as pool:
            curves = list(pool.map(_worker, [(cfg, k) for k in range(cfg.trials)], chunksize=8))
    return summarize(curves, cfg.grid())
