"""Contact-shuffled null models (DCWB, DCB, DCW, D).

These act on the aggregated link view of a contact sequence: every node pair
that ever met, with the sorted timestamps of its contact events.  Locations do
not survive; flattened output carries ``NO_LOCATION``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .graph import AggregatedGraph, configuration_rewire
from .inference import NO_LOCATION, ContactEvent, ContactSequence
from .models import NullModelId, make_rng

Pair = tuple[str, str]


@dataclass
class LinkSequenceMap:
    links: dict[Pair, list[int]] = field(default_factory=dict)

    @property
    def nodes(self) -> set[str]:
        return {n for pair in self.links for n in pair}

    @property
    def graph(self) -> AggregatedGraph:
        return AggregatedGraph(self.nodes, set(self.links))

    @property
    def n_events(self) -> int:
        return sum(len(ts) for ts in self.links.values())

    def to_sequence(self, model: str = "original", imaginary_discarded: int = 0) -> ContactSequence:
        events = [ContactEvent(a, b, t, NO_LOCATION) for (a, b), ts in self.links.items() for t in ts]
        return ContactSequence(events, imaginary_discarded, model)


def build_link_sequences(seq: ContactSequence) -> LinkSequenceMap:
    links: dict[Pair, list[int]] = defaultdict(list)
    for e in seq.events:
        links[e.pair].append(e.t_start)
    return LinkSequenceMap({k: sorted(v) for k, v in sorted(links.items())})


def _permute_among(keys: list[Pair], seqs: list[list[int]], rng: np.random.Generator) -> dict[Pair, list[int]]:
    order = rng.permutation(len(keys))
    return {k: list(seqs[j]) for k, j in zip(keys, order)}


def shuffle_dcwb(lsm: LinkSequenceMap, rng: np.random.Generator) -> LinkSequenceMap:
    """Swap whole sequences only between links with the same event count."""
    buckets: dict[int, list[Pair]] = defaultdict(list)
    for key in sorted(lsm.links):
        buckets[len(lsm.links[key])].append(key)
    out: dict[Pair, list[int]] = {}
    for length in sorted(buckets):
        keys = buckets[length]
        out.update(_permute_among(keys, [lsm.links[k] for k in keys], rng))
    return LinkSequenceMap(dict(sorted(out.items())))


def shuffle_dcb(lsm: LinkSequenceMap, rng: np.random.Generator) -> LinkSequenceMap:
    """Swap whole sequences between arbitrary links."""
    keys = sorted(lsm.links)
    return LinkSequenceMap(_permute_among(keys, [lsm.links[k] for k in keys], rng))


def shuffle_dcw(lsm: LinkSequenceMap, rng: np.random.Generator) -> LinkSequenceMap:
    """Reassign every timestamp to a random event slot; link weights stay."""
    keys = sorted(lsm.links)
    stamps = np.array([t for k in keys for t in lsm.links[k]], dtype=np.int64)
    stamps = stamps[rng.permutation(len(stamps))].tolist()
    out, pos = {}, 0
    for k in keys:
        n = len(lsm.links[k])
        out[k] = sorted(stamps[pos : pos + n])
        pos += n
    return LinkSequenceMap(out)


def shuffle_d(
    lsm: LinkSequenceMap, rng: np.random.Generator, swaps_per_edge: int = 10
) -> LinkSequenceMap:
    """Configuration-model rewiring, random placement of sequences, then DCW."""
    rewired = configuration_rewire(lsm.graph, rng, swaps_per_edge=swaps_per_edge)
    new_keys = sorted(rewired.edges)
    old_keys = sorted(lsm.links)
    placed = _permute_among(new_keys, [lsm.links[k] for k in old_keys], rng)
    return shuffle_dcw(LinkSequenceMap(placed), rng)


_SHUFFLES = {
    NullModelId.DCWB: shuffle_dcwb,
    NullModelId.DCB: shuffle_dcb,
    NullModelId.DCW: shuffle_dcw,
    NullModelId.D: shuffle_d,
}


def apply_contact_model(seq: ContactSequence, model: NullModelId | str, seed: int) -> ContactSequence:
    model = NullModelId.parse(model) if isinstance(model, str) else model
    if model is NullModelId.Original:
        return ContactSequence(list(seq.events), seq.imaginary_discarded, model.value)
    if not model.is_contact:
        raise ValueError(f"{model.name} shuffles sessions, not contacts")
    out = _SHUFFLES[model](build_link_sequences(seq), make_rng(seed))
    return out.to_sequence(model.value, seq.imaginary_discarded)
