"""Inducement shuffling: permute the fields of session records.

Each session carries three movable things: its node, its location, and its
(start, end) time pair.  Shuffling one of them across the whole table, or
within groups that share another, breaks chosen correlations while keeping
the frequency of every node, location and time pair intact.
"""

from __future__ import annotations

from itertools import groupby
from typing import Literal

import numpy as np

from .models import NullModelId, make_rng
from .traceio import Session, SessionTable, canonical_key

Field = Literal["time_pair", "location", "node"]

_GROUPED = {("node", "time_pair"), ("location", "node")}


def _with(s: Session, field: Field, value) -> Session:
    if field == "node":
        return s._replace(node=value)
    if field == "location":
        return s._replace(location=value)
    return s._replace(start=value[0], end=value[1])


def _get(s: Session, field: Field):
    if field == "node":
        return s.node
    if field == "location":
        return s.location
    return (s.start, s.end)


def _permuted(records: list[Session], field: Field, rng: np.random.Generator) -> list[Session]:
    order = rng.permutation(len(records))
    values = [_get(s, field) for s in records]
    return [_with(s, field, values[j]) for s, j in zip(records, order)]


def global_shuffle_field(table: SessionTable, field: Field, rng: np.random.Generator) -> SessionTable:
    """Uniformly permute one field across every record of the table."""
    if field not in ("time_pair", "location", "node"):
        raise ValueError(f"cannot shuffle field {field!r}")
    if not table.records:
        return table
    records = sorted(table.records, key=canonical_key)
    out = _permuted(records, field, rng)
    out.sort(key=canonical_key)
    return SessionTable(out, table.provenance, table.rng_seed)


def grouped_shuffle_field(
    table: SessionTable, group_by: Literal["node", "location"], field: Field, rng: np.random.Generator
) -> SessionTable:
    """Permute ``field`` only among records sharing the same ``group_by`` value.

    Groups are visited in sorted key order so the result depends only on the
    table contents and the generator state.
    """
    if (group_by, field) not in _GROUPED:
        raise ValueError(f"unsupported grouped shuffle: group by {group_by}, shuffle {field}")
    if not table.records:
        return table
    keyf = (lambda s: s.node) if group_by == "node" else (lambda s: s.location)
    records = sorted(table.records, key=lambda s: (keyf(s), canonical_key(s)))
    out: list[Session] = []
    for _, group in groupby(records, key=keyf):
        members = list(group)
        out.extend(_permuted(members, field, rng) if len(members) > 1 else members)
    out.sort(key=canonical_key)
    return SessionTable(out, table.provenance, table.rng_seed)


def apply_null_model(table: SessionTable, model: NullModelId | str, seed: int) -> SessionTable:
    model = NullModelId.parse(model) if isinstance(model, str) else model
    if model.is_contact:
        raise ValueError(f"{model.name} shuffles contacts, not sessions")
    rng = make_rng(seed)
    if model is NullModelId.Original:
        out = SessionTable(sorted(table.records, key=canonical_key))
    elif model is NullModelId.LN_TN:
        out = grouped_shuffle_field(table, "node", "time_pair", rng)
    elif model is NullModelId.TL_LN:
        out = grouped_shuffle_field(table, "location", "node", rng)
    elif model is NullModelId.LN:
        out = global_shuffle_field(table, "time_pair", rng)
    elif model is NullModelId.TN:
        out = global_shuffle_field(table, "location", rng)
    elif model is NullModelId.TL:
        out = global_shuffle_field(table, "node", rng)
    else:
        # both permutations come off one stream, location first
        out = global_shuffle_field(global_shuffle_field(table, "location", rng), "node", rng)
    return SessionTable(list(out.records), model.value, seed)
