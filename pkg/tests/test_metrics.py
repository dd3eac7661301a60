import io
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from colocnull import metrics
from colocnull.inducement import apply_null_model
from colocnull.inference import ContactSequence, infer_contacts, make_event
from colocnull.spread import DAY, TrialConfig, run_ensemble
from colocnull.traceio import Session, SessionTable

from oracles import random_table

ONLY_FIRST = TrialConfig(seed_window_days=10 / DAY, runway_days=1, trials=1)


def seq_of(*triples):
    return ContactSequence([make_event(a, b, t) for a, b, t in triples])


def random_sequence(rng, nodes=30, events=1500, horizon=5 * DAY):
    names = [f"n{i:02d}" for i in range(nodes)]
    out = []
    for t in rng.integers(0, horizon, events).tolist():
        a, b = rng.choice(nodes, 2, replace=False)
        out.append(make_event(names[a], names[b], t))
    return ContactSequence(out)


@pytest.fixture(scope="module")
def ensembles():
    rng = np.random.default_rng(12)
    cfg = TrialConfig(seed_window_days=1, runway_days=3, trials=30, master_seed=1, grid_points=433)
    a = random_sequence(rng)
    b = random_sequence(rng, events=900)
    return a, run_ensemble(a, cfg), b, run_ensemble(b, cfg)


def test_active_sessions_half_open():
    ts = metrics.active_sessions_over_time(SessionTable([Session("A", 0, 10, "L")]), 5, 0, 10)
    assert ts.rows() == [(0, 1), (5, 1), (10, 0)]
    empty = metrics.active_sessions_over_time(SessionTable([]), 5, 0, 20)
    assert np.all(empty.value == 0)


def test_active_sessions_brute_force_and_integral():
    table = random_table(np.random.default_rng(0), 400, horizon=20_000, max_len=3000)
    step = 37
    ts = metrics.active_sessions_over_time(table, step)
    for t, v in ts.rows()[::7]:
        assert v == sum(1 for s in table if s.start <= t < s.end)
    seconds = sum(s.end - s.start for s in table)
    assert abs(ts.value.sum() * step - seconds) <= len(table) * step


def test_locations_per_node():
    table = SessionTable([Session("A", 0, 1, "L1"), Session("A", 2, 3, "L1"), Session("A", 4, 5, "L2")])
    assert metrics.ecdf_locations_per_node(table).values.tolist() == [2]
    single = metrics.ecdf_locations_per_node(SessionTable([Session("A", 0, 1, "L1")]))
    assert single(0.99) == 0 and single(1) == 1


def test_tl_ln_keeps_locations_per_node():
    table = random_table(np.random.default_rng(1), 3000, nodes=200, locations=40)
    before = metrics.ecdf_locations_per_node(table)
    after = metrics.ecdf_locations_per_node(apply_null_model(table, "tl-ln", 3))
    assert np.array_equal(before.values, after.values)


def test_contacts_per_node():
    seq = seq_of(("A", "B", 1), ("A", "B", 2), ("A", "C", 3))
    assert metrics.contacts_per_node(seq, "total")["A"] == 3
    assert metrics.contacts_per_node(seq, "unique")["A"] == 2
    empty = metrics.ecdf_contacts_per_node(ContactSequence([]), "total")
    assert empty.empty and empty(0) == 1.0 and empty.rows() == []


def test_unique_contacts_per_node_at_most_total():
    seq = random_sequence(np.random.default_rng(2))
    total = metrics.contacts_per_node(seq, "total")
    unique = metrics.contacts_per_node(seq, "unique")
    assert total.keys() == unique.keys()
    assert all(unique[n] <= total[n] for n in total)


def test_intersession():
    table = SessionTable([Session("A", 0, 10, "L"), Session("A", 15, 20, "L"), Session("B", 0, 5, "L")])
    ecdf = metrics.ecdf_intersession_time(table)
    assert ecdf.values.tolist() == [5] and ecdf.excluded == 0


def test_intersession_negative_gaps_excluded():
    table = random_table(np.random.default_rng(3), 500, nodes=20)
    ecdf = metrics.ecdf_intersession_time(table)
    per = defaultdict(list)
    for s in table:
        per[s.node].append(s)
    gaps = []
    for spans in per.values():
        spans.sort(key=lambda s: (s.start, s.end))
        gaps += [b.start - a.end for a, b in zip(spans, spans[1:])]
    assert ecdf.excluded == sum(1 for g in gaps if g < 0)
    assert sorted(g for g in gaps if g >= 0) == ecdf.values.tolist()


@given(st.lists(st.integers(-50, 50), max_size=60))
def test_ecdf_shape(sample):
    ecdf = metrics.Ecdf(np.array(sample))
    rows = ecdf.rows()
    fr = [f for _, f in rows]
    assert fr == sorted(fr)
    if sample:
        assert fr[-1] == 1.0
        assert ecdf(min(sample) - 1) == 0.0
        for x in sample:
            assert ecdf(x) == pytest.approx(sum(1 for y in sample if y <= x) / len(sample))


def test_cumulative_contacts_over_time():
    seq = random_sequence(np.random.default_rng(4))
    total, unique = metrics.cumulative_contacts_over_time(seq, 3600)
    assert np.all(np.diff(total.value) >= 0) and np.all(np.diff(unique.value) >= 0)
    assert np.all(unique.value <= total.value)
    assert total.value[-1] == len(seq)


def test_prevalence_vs_contacts_fixture(four_sessions):
    seq = infer_contacts(four_sessions)
    ens = run_ensemble(seq, ONLY_FIRST)
    for mode in ("total", "unique"):
        curve = metrics.prevalence_vs_contacts(ens, metrics.trial_contact_counts(seq, ens, mode))
        # t=0: only the seed contact, 2 of 3 infected; from t=20 s both contacts, all infected
        assert curve[0].tolist() == pytest.approx([1, 2 / 3, 0])
        assert curve[1].tolist() == pytest.approx([2, 1, 0])
        assert np.all(curve[1:, :2] == curve[1, :2])


def test_prevalence_vs_contacts_monotone(ensembles):
    a, ens_a, _, _ = ensembles
    for mode in ("total", "unique"):
        contacts = metrics.trial_contact_counts(a, ens_a, mode)
        curve = metrics.prevalence_vs_contacts(ens_a, contacts)
        assert np.all(np.diff(curve[:, 0]) >= 0) and np.all(np.diff(curve[:, 1]) >= 0)
    total = metrics.trial_contact_counts(a, ens_a, "total").value
    unique = metrics.trial_contact_counts(a, ens_a, "unique").value
    assert np.all(unique <= total + 1e-12)


def test_prevalence_vs_contacts_flat_segment():
    seq = seq_of(("A", "B", 0), ("A", "B", 100), ("A", "B", 200))
    ens = run_ensemble(seq, TrialConfig(seed_window_days=1 / DAY, runway_days=1, trials=1, grid_points=1441))
    curve = metrics.prevalence_vs_contacts(ens, metrics.trial_contact_counts(seq, ens, "total"))
    assert set(curve[:, 1]) == {1.0}
    assert curve[0, 0] == 1 and curve[-1, 0] == 3


def test_prevalence_vs_contacts_grid_mismatch(ensembles):
    _, ens_a, _, _ = ensembles
    with pytest.raises(ValueError):
        metrics.prevalence_vs_contacts(ens_a, metrics.TimeSeries([0, 1], [0, 0]))


def test_one_day_histogram(ensembles, four_sessions):
    _, ens_a, _, _ = ensembles
    ens_a1 = run_ensemble(infer_contacts(four_sessions), ONLY_FIRST)
    _, counts = metrics.one_day_prevalence_histogram(ens_a1)
    assert counts.sum() == 1 and np.count_nonzero(counts) == 1

    edges, counts = metrics.one_day_prevalence_histogram(ens_a, 0.02)
    assert len(counts) == 50 and edges[-1] == pytest.approx(1.0)
    assert counts.sum() == ens_a.trials
    j = int(np.searchsorted(ens_a.grid, DAY))
    assert ens_a.grid[j] == DAY
    assert metrics.one_day_values(ens_a).mean() == pytest.approx(ens_a.mean[j], abs=1e-12)


def test_pairwise_delta(ensembles):
    _, ens_a, _, ens_b = ensembles
    self_delta = metrics.pairwise_prevalence_delta(ens_a, ens_a)
    assert np.all(self_delta.delta == 0)
    assert np.allclose(self_delta.band, np.sqrt(2) * ens_a.sem)
    ab = metrics.pairwise_prevalence_delta(ens_a, ens_b)
    ba = metrics.pairwise_prevalence_delta(ens_b, ens_a)
    assert np.array_equal(ab.delta, -ba.delta) and np.array_equal(ab.band, ba.band)
    # recompute band directly from the trial curves
    for j in (0, 100, 432):
        va = [c.at(ens_a.grid[j]) for c in ens_a.curves]
        vb = [c.at(ens_b.grid[j]) for c in ens_b.curves]
        band = np.hypot(np.std(va, ddof=1) / np.sqrt(len(va)), np.std(vb, ddof=1) / np.sqrt(len(vb)))
        assert ab.band[j] == pytest.approx(band, abs=1e-12)
        assert ab.delta[j] == pytest.approx(np.mean(va) - np.mean(vb), abs=1e-12)


def test_pairwise_delta_grid_mismatch(ensembles, four_sessions):
    _, ens_a, _, _ = ensembles
    other = run_ensemble(infer_contacts(four_sessions), ONLY_FIRST)
    with pytest.raises(ValueError):
        metrics.pairwise_prevalence_delta(ens_a, other)


def test_timeseries_requires_increasing_time():
    with pytest.raises(ValueError):
        metrics.TimeSeries([0, 0], [1, 2])


def test_write_rows_is_exact():
    buf = io.StringIO()
    metrics.write_rows(buf, ("a", "b"), [(0.1, 3), (np.float64(1 / 3), np.int64(2))])
    assert buf.getvalue() == "a,b\n0.1,3\n0.3333333333333333,2\n"
