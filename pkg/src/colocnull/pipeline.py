"""End-to-end runs driven by a flat ``key = value`` manifest.

Example manifest::

    input = sessions.csv
    models = original, tl-ln, tl, dcwb
    seed = 42
    trials = 250
    seed_window_days = 4
    runway_days = 10
    outdir = results

Each model writes its tables to ``<outdir>/<model>/``; pairwise prevalence
differences go to ``<outdir>/pairwise/`` and a one-row-per-model summary to
``<outdir>/summary.csv``.  The manifest is written back to
``<outdir>/manifest.txt`` with the tool version and the input's SHA-256.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from importlib.metadata import PackageNotFoundError, version
from itertools import combinations
from pathlib import Path

import numpy as np

from . import metrics
from .contact_shuffle import apply_contact_model
from .inducement import apply_null_model
from .inference import ContactSequence, infer_contacts, repeat_contact_histogram, save_contacts
from .models import NullModelId, derive_seed
from .spread import DAY, IndexedSequence, PrevalenceEnsemble, TrialConfig, run_ensemble
from .traceio import (
    SessionFormat,
    SessionTable,
    clean_sessions,
    filter_site,
    read_sessions,
    save_sessions,
    write_rejects,
)

log = logging.getLogger(__name__)

try:
    TOOL_VERSION = version("artifact")
except PackageNotFoundError:  # running from a source checkout
    TOOL_VERSION = "0.1.0"

COUNT_STEP = 600


class ManifestError(ValueError):
    pass


@dataclass
class RunManifest:
    input: Path
    models: list[NullModelId]
    seed: int = 0
    outdir: Path = Path("results")
    trials: int = 250
    seed_window_days: float = 4
    runway_days: float = 10
    grid_points: int = 1441
    site: str | None = None
    tool_version: str = TOOL_VERSION
    input_sha256: str = ""
    extra: dict[str, str] = field(default_factory=dict)

    @property
    def trial_config(self) -> TrialConfig:
        return TrialConfig(self.seed_window_days, self.runway_days, self.trials, self.seed, self.grid_points)

    @classmethod
    def parse(cls, text: str, base: Path | None = None) -> "RunManifest":
        values: dict[str, str] = {}
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ManifestError(f"manifest line {n}: expected key = value")
            values[key.strip()] = value.strip()
        try:
            models = [NullModelId.parse(m) for m in values.pop("models", "original").split(",") if m.strip()]
        except ValueError as exc:
            raise ManifestError(str(exc)) from None
        if "input" not in values:
            raise ManifestError("manifest has no input")
        base = base or Path(".")

        def path(key: str, default: str) -> Path:
            p = Path(values.pop(key, default))
            return p if p.is_absolute() else base / p

        try:
            m = cls(
                input=path("input", ""),
                models=models,
                seed=int(values.pop("seed", 0)),
                outdir=path("outdir", "results"),
                trials=int(values.pop("trials", 250)),
                seed_window_days=float(values.pop("seed_window_days", 4)),
                runway_days=float(values.pop("runway_days", 10)),
                grid_points=int(values.pop("grid_points", 1441)),
                site=values.pop("site", None) or None,
            )
        except ValueError as exc:
            raise ManifestError(f"bad manifest value: {exc}") from None
        values.pop("tool_version", None)
        m.input_sha256 = values.pop("input_sha256", "")
        m.extra = values
        return m

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        path = Path(path)
        return cls.parse(path.read_text(encoding="utf-8"), path.parent)

    def dumps(self) -> str:
        lines = [
            f"input = {self.input}",
            f"models = {', '.join(m.value for m in self.models)}",
            f"seed = {self.seed}",
            f"outdir = {self.outdir}",
            f"trials = {self.trials}",
            f"seed_window_days = {self.seed_window_days}",
            f"runway_days = {self.runway_days}",
            f"grid_points = {self.grid_points}",
        ]
        if self.site:
            lines.append(f"site = {self.site}")
        lines += [f"tool_version = {self.tool_version}", f"input_sha256 = {self.input_sha256}"]
        return "\n".join(lines) + "\n"


def file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_prevalence(path: Path, ens: PrevalenceEnsemble) -> None:
    metrics.save_rows(path, ("t_seconds", "mean_prevalence", "sem"), zip(ens.grid, ens.mean, ens.sem))


def write_session_stats(outdir: Path, table: SessionTable) -> None:
    metrics.save_rows(outdir / "active_sessions.csv", ("t", "active_sessions"),
                      metrics.active_sessions_over_time(table, COUNT_STEP).rows())
    metrics.save_rows(outdir / "locations_per_node.csv", ("value", "fraction"),
                      metrics.ecdf_locations_per_node(table).rows())
    gaps = metrics.ecdf_intersession_time(table)
    with open(outdir / "intersession_time.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# excluded_negative_gaps={gaps.excluded}\n")
        metrics.write_rows(fh, ("value", "fraction"), gaps.rows())


def write_contact_stats(outdir: Path, seq: ContactSequence) -> None:
    total, unique = metrics.cumulative_contacts_over_time(seq, COUNT_STEP)
    metrics.save_rows(outdir / "contact_counts.csv", ("t", "total", "unique"),
                      zip(total.t.tolist(), total.value.tolist(), unique.value.tolist()))
    metrics.save_rows(outdir / "repeat_contacts.csv", ("repeats", "count"),
                      repeat_contact_histogram(seq).items())
    for mode in ("total", "unique"):
        metrics.save_rows(outdir / f"contacts_per_node_{mode}.csv", ("value", "fraction"),
                          metrics.ecdf_contacts_per_node(seq, mode).rows())


def write_spreading_stats(outdir: Path, idx: IndexedSequence, ens: PrevalenceEnsemble) -> None:
    write_prevalence(outdir / "prevalence.csv", ens)
    metrics.save_rows(
        outdir / "trials.csv",
        ("trial", "seed_node", "seed_time", "denominator", "prevalence_1day"),
        ((k, c.seed_node, c.seed_time, c.denominator, c.at(DAY)) for k, c in enumerate(ens.curves)),
    )
    edges, counts = metrics.one_day_prevalence_histogram(ens)
    metrics.save_rows(outdir / "one_day_histogram.csv", ("bin_lo", "bin_hi", "count"),
                      zip(edges[:-1], edges[1:], counts.tolist()))
    counts_in_trial = {}
    for mode in ("total", "unique"):
        ts = metrics.trial_contact_counts(idx, ens, mode)
        counts_in_trial[mode] = ts.value
        metrics.save_rows(outdir / f"prevalence_vs_contacts_{mode}.csv", ("contacts", "mean_prevalence", "sem"),
                          metrics.prevalence_vs_contacts(ens, ts).tolist())
    metrics.save_rows(outdir / "trial_contacts.csv", ("t_seconds", "total", "unique"),
                      zip(ens.grid, counts_in_trial["total"], counts_in_trial["unique"]))


def run_pipeline(manifest: RunManifest, workers: int = 1) -> dict[NullModelId, PrevalenceEnsemble]:
    """Run every model in the manifest; raises on the first failing stage.

    A failing model leaves a ``FAILED`` marker in its output directory.
    """
    if not manifest.models:
        raise ManifestError("no models requested")
    out = manifest.outdir
    out.mkdir(parents=True, exist_ok=True)
    manifest.input_sha256 = file_sha256(manifest.input)
    manifest.tool_version = TOOL_VERSION
    (out / "manifest.txt").write_text(manifest.dumps(), encoding="utf-8")

    raw, rejects = read_sessions(manifest.input, SessionFormat())
    with open(out / "rejects.csv", "w", encoding="utf-8", newline="") as fh:
        write_rejects(rejects, fh)
    sessions, report = clean_sessions(raw)
    if manifest.site:
        sessions = filter_site(sessions, manifest.site)
    metrics.save_rows(out / "clean_report.csv", ("rule", "count"), [
        ("dropped_no_end", report.dropped_no_end),
        ("dropped_zero_duration", report.dropped_zero_duration),
        ("dropped_no_location", report.dropped_no_location),
        ("retained", report.retained),
        ("site_filtered", len(sessions)),
    ])

    original: ContactSequence | None = None
    ensembles: dict[NullModelId, PrevalenceEnsemble] = {}
    summary = []
    for model in manifest.models:
        mdir = out / model.value
        mdir.mkdir(exist_ok=True)
        (mdir / "FAILED").unlink(missing_ok=True)
        try:
            if model.is_contact:
                if original is None:
                    original = infer_contacts(sessions)
                seq = apply_contact_model(original, model, derive_seed(manifest.seed, "contact-shuffle", model.value))
            else:
                shuffled = apply_null_model(sessions, model, derive_seed(manifest.seed, "inducement", model.value))
                save_sessions(shuffled, mdir / "sessions.csv", {"model": model.value, "seed": shuffled.rng_seed})
                write_session_stats(mdir, shuffled)
                seq = infer_contacts(shuffled)
                if model is NullModelId.Original:
                    original = seq
            save_contacts(seq, mdir / "contacts.csv")
            write_contact_stats(mdir, seq)
            cfg = replace(manifest.trial_config, master_seed=derive_seed(manifest.seed, "spread", model.value))
            idx = IndexedSequence(seq)
            ens = run_ensemble(idx, cfg, workers=workers)
            write_spreading_stats(mdir, idx, ens)
        except Exception as exc:
            (mdir / "FAILED").write_text(f"{type(exc).__name__}: {exc}\n", encoding="utf-8")
            raise
        ensembles[model] = ens
        day = int(np.searchsorted(ens.grid, DAY)) if ens.grid[-1] >= DAY else len(ens.grid) - 1
        retained = model.retained if model.is_inducement or model is NullModelId.Original else frozenset()
        summary.append((
            model.value,
            *("1" if c in retained else "0" for c in ("LN", "TN", "TL")),
            len(seq), seq.imaginary_discarded, ens.mean[day], ens.sem[day],
        ))
        log.info("%s: %d contacts, P(1 day) = %.3f", model.value, len(seq), ens.mean[day])

    metrics.save_rows(out / "summary.csv",
                      ("model", "LN", "TN", "TL", "contacts", "imaginary_discarded", "prevalence_1day", "sem_1day"),
                      summary)
    pairdir = out / "pairwise"
    pairdir.mkdir(exist_ok=True)
    for a, b in combinations(manifest.models, 2):
        d = metrics.pairwise_prevalence_delta(ensembles[a], ensembles[b])
        metrics.save_rows(pairdir / f"{a.value}__{b.value}.csv", ("t_seconds", "delta", "band"), d.rows())
    return ensembles
