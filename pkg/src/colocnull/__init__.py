"""Null models for colocation contact networks and SI spreading on them."""

from .contact_shuffle import (
    LinkSequenceMap,
    apply_contact_model,
    build_link_sequences,
    shuffle_d,
    shuffle_dcb,
    shuffle_dcw,
    shuffle_dcwb,
)
from .graph import AggregatedGraph, aggregate, configuration_rewire, largest_connected_component
from .inducement import apply_null_model, global_shuffle_field, grouped_shuffle_field
from .inference import (
    ContactEvent,
    ContactSequence,
    count_total_and_unique,
    infer_contacts,
    repeat_contact_histogram,
)
from .models import NullModelId, derive_seed, make_rng
from .spread import PrevalenceCurve, PrevalenceEnsemble, TrialConfig, run_ensemble, run_trial, sample_seed_event
from .traceio import CleanReport, Session, SessionTable, clean_sessions, filter_site, parse_sessions

__version__ = "0.1.0"
