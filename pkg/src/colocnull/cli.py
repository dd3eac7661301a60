"""Command line entry point: ``colocnull <command> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics
from .contact_shuffle import apply_contact_model
from .inducement import apply_null_model
from .inference import infer_contacts, read_contacts, repeat_contact_histogram, save_contacts
from .models import CONTACT_MODELS, INDUCEMENT_MODELS, NullModelId
from .pipeline import RunManifest, run_pipeline, write_prevalence
from .spread import PrevalenceEnsemble, SeedSamplingError, TrialConfig, run_ensemble
from .synth import SynthConfig, synthesize
from .traceio import (
    UQ_FORMAT,
    SessionFormat,
    TraceFormatError,
    clean_sessions,
    filter_site,
    read_sessions,
    save_sessions,
    write_rejects,
)

log = logging.getLogger("colocnull")

SESSION_METRICS = ("active-sessions", "locations-per-node", "intersession-time")
CONTACT_METRICS = ("contacts-per-node-total", "contacts-per-node-unique", "contact-counts", "repeat-contacts")
PREVALENCE_METRICS = ("prevalence-delta",)


class UsageError(Exception):
    pass


def _format(spec: str | None) -> SessionFormat:
    if not spec or spec == "default":
        return SessionFormat()
    if spec == "uq":
        return UQ_FORMAT
    mapping = {}
    for item in spec.split(","):
        key, sep, col = item.partition("=")
        if not sep or key.strip() not in ("node", "start", "end", "location", "site"):
            raise UsageError(f"bad column mapping {item!r}; use field=column,...")
        mapping[key.strip()] = col.strip()
    return SessionFormat(**mapping)


def _load_sessions(path: str, fmt: SessionFormat = SessionFormat()):
    table, rejects = read_sessions(path, fmt)
    for r in rejects[:10]:
        log.warning("%s:%d: %s", path, r.line, r.reason)
    if len(rejects) > 10:
        log.warning("... %d more rejected rows", len(rejects) - 10)
    return table, rejects


def cmd_clean(args) -> None:
    table, rejects = _load_sessions(args.input, _format(args.format))
    cleaned, report = clean_sessions(table)
    if args.site:
        cleaned = filter_site(cleaned, args.site)
    save_sessions(cleaned, args.out)
    if args.rejects:
        with open(args.rejects, "w", encoding="utf-8", newline="") as fh:
            write_rejects(rejects, fh)
    log.info(
        "retained %d; dropped no-end %d, zero-duration %d, no-location %d; %d after site filter",
        report.retained, report.dropped_no_end, report.dropped_zero_duration,
        report.dropped_no_location, len(cleaned),
    )


def cmd_shuffle(args) -> None:
    model = NullModelId.parse(args.model)
    table, _ = _load_sessions(args.input)
    table, _ = clean_sessions(table)
    out = apply_null_model(table, model, args.seed)
    save_sessions(out, args.out, {"model": model.value, "seed": args.seed})


def cmd_cshuffle(args) -> None:
    model = NullModelId.parse(args.model)
    seq = apply_contact_model(read_contacts(args.input), model, args.seed)
    save_contacts(seq, args.out, {"seed": args.seed})


def cmd_infer(args) -> None:
    table, _ = _load_sessions(args.input)
    table, _ = clean_sessions(table)
    seq = infer_contacts(table)
    if args.model:
        seq.model = NullModelId.parse(args.model).value
    save_contacts(seq, args.out)
    log.info("%d contact events, %d imaginary discarded", len(seq), seq.imaginary_discarded)


def cmd_simulate(args) -> None:
    seq = read_contacts(args.input)
    cfg = TrialConfig(args.seed_window_days, args.runway_days, args.trials, args.seed, args.grid_points)
    ens = run_ensemble(seq, cfg, workers=args.workers)
    write_prevalence(Path(args.out), ens)


def _read_prevalence(path: str) -> PrevalenceEnsemble:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return PrevalenceEnsemble(data[:, 0], data[:, 1], data[:, 2], [], np.empty((0, len(data))))


def cmd_stats(args) -> None:
    name = args.metric
    if name in SESSION_METRICS:
        table, _ = _load_sessions(args.input)
        table, _ = clean_sessions(table)
        if name == "active-sessions":
            header, rows = ("t", "active_sessions"), metrics.active_sessions_over_time(table, args.step).rows()
        elif name == "locations-per-node":
            header, rows = ("value", "fraction"), metrics.ecdf_locations_per_node(table).rows()
        else:
            ecdf = metrics.ecdf_intersession_time(table)
            log.info("excluded %d negative intersession gaps", ecdf.excluded)
            header, rows = ("value", "fraction"), ecdf.rows()
    elif name in CONTACT_METRICS:
        seq = read_contacts(args.input)
        if name == "contact-counts":
            total, unique = metrics.cumulative_contacts_over_time(seq, args.step)
            header = ("t", "total", "unique")
            rows = zip(total.t.tolist(), total.value.tolist(), unique.value.tolist())
        elif name == "repeat-contacts":
            header, rows = ("repeats", "count"), repeat_contact_histogram(seq).items()
        else:
            header = ("value", "fraction")
            rows = metrics.ecdf_contacts_per_node(seq, name.rsplit("-", 1)[1]).rows()
    elif name in PREVALENCE_METRICS:
        if not args.other:
            raise UsageError("prevalence-delta needs --other")
        delta = metrics.pairwise_prevalence_delta(_read_prevalence(args.input), _read_prevalence(args.other))
        header, rows = ("t_seconds", "delta", "band"), delta.rows()
    else:
        raise UsageError(f"unknown metric {name!r}")
    metrics.save_rows(args.out, header, rows)


def cmd_pipeline(args) -> None:
    manifest = RunManifest.load(args.manifest)
    if args.seed is not None:
        manifest.seed = args.seed
    if args.out is not None:
        manifest.outdir = Path(args.out)
    if args.models:
        manifest.models = [NullModelId.parse(m) for m in args.models.split(",")]
    run_pipeline(manifest, workers=args.workers)


def cmd_synth(args) -> None:
    cfg = SynthConfig(
        nodes=args.nodes,
        locations=args.locations,
        days=args.days,
        activity_window_hours=args.window_hours,
        location_affinity=args.affinity,
        home_locations=args.home_locations,
        sessions_per_day=args.sessions_per_day,
        tl_strength=args.tl_strength,
        seed=args.seed,
    )
    try:
        table = synthesize(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    save_sessions(table, args.out, {"synth_seed": args.seed})
    log.info("wrote %d sessions to %s", len(table), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colocnull", description="Null models and SI spreading on colocation contact networks."
    )
    parser.add_argument("--quiet", action="store_true", help="only report errors")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="only report errors")

    def sub(name: str, func, help: str, seed: bool = False, out_required: bool = True):
        p = subs.add_parser(name, parents=[common], help=help)
        p.set_defaults(func=func)
        if seed:
            p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
        p.add_argument("--out", required=out_required)
        return p

    subs = parser.add_subparsers(dest="command", required=True)

    p = sub("clean", cmd_clean, "parse and clean a raw session log")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--site")
    p.add_argument("--format", help="'uq', or a mapping like node=mac,location=ap")
    p.add_argument("--rejects", help="write rejected rows (line,reason) here")

    inducement = [m.value for m in (NullModelId.Original, *INDUCEMENT_MODELS)]
    p = sub("shuffle", cmd_shuffle, "inducement-shuffle a session table", seed=True)
    p.add_argument("--model", required=True, choices=inducement)
    p.add_argument("--in", dest="input", required=True)

    p = sub("cshuffle", cmd_cshuffle, "contact-shuffle a contact sequence", seed=True)
    p.add_argument("--model", required=True, choices=[m.value for m in CONTACT_MODELS])
    p.add_argument("--in", dest="input", required=True)

    p = sub("infer", cmd_infer, "infer contact events from sessions")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", help="label recorded in the output header")

    p = sub("simulate", cmd_simulate, "run SI spreading trials", seed=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", help="label only; the input is used as given")
    p.add_argument("--trials", type=int, default=250)
    p.add_argument("--seed-window-days", type=float, default=4)
    p.add_argument("--runway-days", type=float, default=10)
    p.add_argument("--grid-points", type=int, default=1441)
    p.add_argument("--workers", type=int, default=1)

    p = sub("stats", cmd_stats, "compute one metric as CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--metric", required=True, choices=SESSION_METRICS + CONTACT_METRICS + PREVALENCE_METRICS)
    p.add_argument("--other", help="second prevalence CSV for prevalence-delta")
    p.add_argument("--step", type=int, default=600, help="grid step in seconds for time series")

    p = subs.add_parser("pipeline", parents=[common], help="run a manifest end to end")
    p.set_defaults(func=cmd_pipeline)
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int, help="override the manifest seed")
    p.add_argument("--out", help="override the manifest outdir")
    p.add_argument("--models", help="override the manifest model list")
    p.add_argument("--workers", type=int, default=1)

    p = sub("synth", cmd_synth, "generate a synthetic session log", seed=True)
    p.add_argument("--nodes", type=int, default=500)
    p.add_argument("--locations", type=int, default=50)
    p.add_argument("--days", type=int, default=14)
    p.add_argument("--window-hours", type=float, default=3.0, help="per-node daily activity window")
    p.add_argument("--affinity", type=float, default=0.7, help="probability a session is at a home location")
    p.add_argument("--home-locations", type=int, default=2)
    p.add_argument("--sessions-per-day", type=float, default=3.0)
    p.add_argument("--tl-strength", type=float, default=0.5)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.ERROR if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except (TraceFormatError, SeedSamplingError, OSError, RuntimeError) as exc:
        log.error("%s", exc)
        return 1
    except (UsageError, ValueError) as exc:
        # bad model ids, manifest values, config ranges
        log.error("%s", exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
