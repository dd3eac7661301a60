"""Synthetic session traces with tunable node/time and node/location structure.

Each node gets a personal daily activity window (centre hour, width) and a
small set of home locations.  ``activity_window_hours`` controls how tightly
a node's sessions cluster in time of day; ``location_affinity`` is the chance
a session goes to one of the node's home locations rather than a location
drawn by global popularity.  Locations also have a preferred hour, which
weights the popularity draw and gives a time/location correlation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import make_rng
from .traceio import Session, SessionTable, canonical_key

HOUR = 3600
DAY = 86_400


@dataclass(frozen=True)
class SynthConfig:
    nodes: int = 500
    locations: int = 50
    days: int = 14
    activity_window_hours: float = 3.0
    location_affinity: float = 0.7
    home_locations: int = 2
    sessions_per_day: float = 3.0
    mean_session_minutes: float = 45.0
    weekday_activity: float = 0.9
    weekend_activity: float = 0.3
    tl_strength: float = 0.5
    epoch: int = 1_354_000_000
    site: str = "synth"
    seed: int = 0

    def validate(self) -> None:
        if self.nodes < 0 or self.locations < 0 or self.days < 0:
            raise ValueError("counts must be non-negative")
        if self.nodes > 0 and self.locations == 0:
            raise ValueError("nodes need at least one location")
        if not 0 < self.activity_window_hours <= 24:
            raise ValueError("activity window must be in (0, 24] hours")
        for name in ("location_affinity", "weekday_activity", "weekend_activity", "tl_strength"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.home_locations < 1 and self.location_affinity > 0:
            raise ValueError("location affinity needs at least one home location")
        if self.sessions_per_day <= 0 or self.mean_session_minutes <= 0:
            raise ValueError("session rate and length must be positive")


def synthesize(cfg: SynthConfig) -> SessionTable:
    cfg.validate()
    if cfg.nodes == 0 or cfg.days == 0:
        return SessionTable([], "synth", cfg.seed)
    rng = make_rng(cfg.seed, "synth")
    width = cfg.activity_window_hours * HOUR

    popularity = rng.pareto(1.5, cfg.locations) + 1.0
    popularity /= popularity.sum()
    loc_peak = rng.uniform(8, 20, cfg.locations) * HOUR
    n_home = min(cfg.home_locations, cfg.locations)
    homes = [rng.choice(cfg.locations, size=n_home, replace=False, p=popularity) for _ in range(cfg.nodes)]
    # activity centres cluster around the middle of the day
    centres = np.clip(rng.normal(13.5, 3.0, cfg.nodes), 6, 22) * HOUR
    names = [f"n{i:05d}" for i in range(cfg.nodes)]
    loc_names = [f"ap{j:03d}" for j in range(cfg.locations)]

    records: list[Session] = []
    for day in range(cfg.days):
        p_active = cfg.weekend_activity if day % 7 in (5, 6) else cfg.weekday_activity
        day_start = cfg.epoch + day * DAY
        for i in range(cfg.nodes):
            if rng.random() >= p_active:
                continue
            k = 1 + rng.poisson(max(cfg.sessions_per_day - 1, 0))
            offsets = np.sort(rng.uniform(centres[i] - width / 2, centres[i] + width / 2, k))
            starts = (day_start + offsets).astype(np.int64).tolist()
            durations = rng.exponential(cfg.mean_session_minutes * 60, k)
            for n, start in enumerate(starts):
                dur = max(60, int(durations[n]))
                # a device holds one session at a time
                if n + 1 < k:
                    dur = min(dur, starts[n + 1] - start - 1)
                    if dur < 60:
                        continue
                if rng.random() < cfg.location_affinity:
                    loc = int(homes[i][rng.integers(n_home)])
                else:
                    hour_gap = (offsets[n] - loc_peak) / DAY * 2 * math.pi
                    w = popularity * (1 + cfg.tl_strength * np.cos(hour_gap))
                    loc = int(rng.choice(cfg.locations, p=w / w.sum()))
                records.append(Session(names[i], start, start + dur, loc_names[loc], cfg.site))
    records.sort(key=canonical_key)
    return SessionTable(records, "synth", cfg.seed)
