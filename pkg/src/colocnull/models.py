"""Null model identifiers and seeded random stream derivation."""

from __future__ import annotations

import hashlib
from enum import Enum

import numpy as np

LN = "LN"
TN = "TN"
TL = "TL"


class NullModelId(str, Enum):
    """Every model a trace can be run under.

    Values double as the CLI spelling.
    """

    Original = "original"
    LN_TN = "ln-tn"
    TL_LN = "tl-ln"
    LN = "ln"
    TN = "tn"
    TL = "tl"
    Empty = "empty"
    DCWB = "dcwb"
    DCB = "dcb"
    DCW = "dcw"
    D = "d"

    @classmethod
    def parse(cls, text: str) -> "NullModelId":
        key = text.strip().lower().replace("_", "-")
        for model in cls:
            if model.value == key or model.name.lower().replace("_", "-") == key:
                return model
        raise ValueError(f"unknown null model {text!r}")

    @property
    def is_inducement(self) -> bool:
        return self in INDUCEMENT_MODELS

    @property
    def is_contact(self) -> bool:
        return self in CONTACT_MODELS

    @property
    def retained(self) -> frozenset[str]:
        """Correlations kept as record-pair multisets (inducement models only)."""
        try:
            return RETAINED[self]
        except KeyError:
            raise ValueError(f"{self.name} does not act on sessions") from None

    def __str__(self) -> str:
        return self.value


RETAINED: dict[NullModelId, frozenset[str]] = {
    NullModelId.Original: frozenset({LN, TN, TL}),
    NullModelId.LN_TN: frozenset({LN, TN}),
    NullModelId.TL_LN: frozenset({TL, LN}),
    NullModelId.LN: frozenset({LN}),
    NullModelId.TN: frozenset({TN}),
    NullModelId.TL: frozenset({TL}),
    NullModelId.Empty: frozenset(),
}

INDUCEMENT_MODELS = (
    NullModelId.LN_TN,
    NullModelId.TL_LN,
    NullModelId.LN,
    NullModelId.TN,
    NullModelId.TL,
    NullModelId.Empty,
)
CONTACT_MODELS = (NullModelId.DCWB, NullModelId.DCB, NullModelId.DCW, NullModelId.D)


def _label_key(label: object) -> int:
    if isinstance(label, int) and label >= 0:
        return label
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int, *labels: object) -> np.random.Generator:
    """PCG64 generator for ``seed``, optionally on a labeled sub-stream.

    The same (seed, labels) always yields the same stream, on any platform.
    """
    if seed < 0:
        raise ValueError("seed must be a non-negative integer")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(_label_key(x) for x in labels))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *labels: object) -> int:
    """64-bit child seed for a labeled sub-stream."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(_label_key(x) for x in labels))
    return int(ss.generate_state(1, np.uint64)[0])
