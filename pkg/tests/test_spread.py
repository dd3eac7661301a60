import numpy as np
import pytest
from scipy import stats

from colocnull.graph import aggregate, largest_connected_component
from colocnull.inference import ContactEvent, ContactSequence, infer_contacts, make_event
from colocnull.models import make_rng
from colocnull.spread import (
    DAY,
    IndexedSequence,
    SeedSamplingError,
    TrialConfig,
    run_ensemble,
    run_trial,
    sample_seed_event,
    summarize,
)

from oracles import si_reference

# seed window [5, 15) s holds only the A-B event of the four-session fixture
ONLY_FIRST = TrialConfig(seed_window_days=10 / DAY, runway_days=1, trials=1)


def seq_of(*triples):
    return ContactSequence([make_event(a, b, t) for a, b, t in triples])


def random_sequence(rng, nodes=40, events=600, horizon=3 * DAY):
    names = [f"n{i:02d}" for i in range(nodes)]
    out = []
    for t in rng.integers(0, horizon, events).tolist():
        a, b = rng.choice(nodes, 2, replace=False)
        out.append(make_event(names[a], names[b], t))
    return ContactSequence(out)


def test_hand_traced_fixture(four_sessions):
    seq = infer_contacts(four_sessions)
    curve = run_trial(seq, ONLY_FIRST, make_rng(0))
    assert curve.seed_event == ContactEvent("A", "B", 5, "L1")
    assert curve.denominator == 3
    assert curve.at(0) == pytest.approx(2 / 3)
    assert curve.at(19) == pytest.approx(2 / 3)
    assert curve.at(20) == 1.0
    assert curve.times == [0, 20]
    assert curve.infected == ["A", "B", "C"]


def test_saturated_seed_is_flat():
    seq = seq_of(("A", "B", 0), ("A", "B", 100))
    curve = run_trial(seq, TrialConfig(runway_days=1, trials=1), make_rng(0))
    assert curve.values == [1.0] and curve.times == [0]


def test_single_in_window_event():
    seq = seq_of(("A", "B", 0), ("C", "D", 10 * DAY))
    for s in range(20):
        event, node = sample_seed_event(seq, TrialConfig(), make_rng(s))
        assert event.pair == ("A", "B") and node in ("A", "B")


def test_no_event_in_window_fails():
    seq = seq_of(("A", "B", 5 * DAY), ("C", "D", 6 * DAY))
    with pytest.raises(SeedSamplingError):
        sample_seed_event(seq, TrialConfig(trace_start=0), make_rng(0))
    with pytest.raises(SeedSamplingError):
        sample_seed_event(ContactSequence([]), TrialConfig(), make_rng(0))
    with pytest.raises(SeedSamplingError, match="trial 0"):
        run_ensemble(seq, TrialConfig(trace_start=0, trials=3))


def test_seed_sampling_is_uniform():
    events = [("A", "B", 0), ("B", "C", 100), ("C", "D", 200), ("D", "E", 300), ("E", "F", 400), ("F", "G", 9 * DAY)]
    seq = seq_of(*events)
    idx = IndexedSequence(seq)
    rng = make_rng(123)
    draws = 10_000
    counts = {e.t_start: 0 for e in seq.events}
    ends = {"a": 0, "b": 0}
    for _ in range(draws):
        event, node = sample_seed_event(idx, TrialConfig(), rng)
        counts[event.t_start] += 1
        ends["a" if node == event.node_a else "b"] += 1
    assert counts[9 * DAY] == 0
    observed = np.array([counts[t] for t in (0, 100, 200, 300, 400)])
    p = 1 / 5
    sigma = np.sqrt(draws * p * (1 - p))
    assert np.all(np.abs(observed - draws * p) < 3 * sigma)
    assert stats.chisquare(observed).pvalue > 1e-3
    assert abs(ends["a"] - draws / 2) < 3 * np.sqrt(draws / 4)


def test_resample_until_in_lcc():
    # Seeds may be A-B@0 or D-E@10.  After D-E@10 the window holds D-E and B-C,
    # a tie that goes to {B, C}, so D-E draws must be rejected and redrawn.
    seq = seq_of(("A", "B", 0), ("D", "E", 10), ("B", "C", 20))
    cfg = TrialConfig(seed_window_days=15 / DAY, runway_days=1, trials=1)
    for s in range(30):
        curve = run_trial(seq, cfg, make_rng(s))
        assert curve.seed_event.pair == ("A", "B") and curve.denominator == 3


def test_random_trials_match_reference_and_invariants():
    rng = np.random.default_rng(4)
    cfg = TrialConfig(seed_window_days=1, runway_days=2, trials=1)
    for k in range(60):
        seq = random_sequence(rng)
        idx = IndexedSequence(seq)
        curve = run_trial(idx, cfg, make_rng(k))
        t0 = curve.seed_time
        window = aggregate(seq, t0, t0 + cfg.runway_seconds)
        lcc = largest_connected_component(window)
        assert curve.denominator == len(lcc)
        assert set(curve.infected) <= lcc
        ref = si_reference(seq.events, curve.seed_event, cfg.runway_seconds)
        assert set(curve.infected) == set(ref)
        assert np.all(np.diff(curve.values) > 0) and curve.values[-1] <= 1
        assert curve.times[0] == 0 and np.all(np.diff(curve.times) > 0)
        # prevalence at each step equals the reference infected count by then
        for t, v in zip(curve.times, curve.values):
            assert v == pytest.approx(sum(1 for x in ref.values() if x <= t) / len(lcc))


def test_same_timestamp_chains():
    # B infects C and C infects D in the same second
    seq = seq_of(("A", "B", 0), ("B", "C", 50), ("C", "D", 50))
    curve = run_trial(seq, TrialConfig(seed_window_days=1 / DAY, runway_days=1, trials=1), make_rng(0))
    assert curve.at(50) == 1.0


def test_single_trial_ensemble(four_sessions):
    seq = infer_contacts(four_sessions)
    ens = run_ensemble(seq, ONLY_FIRST)
    assert np.array_equal(ens.mean, ens.curves[0].sample(ens.grid))
    assert np.all(ens.sem == 0)
    assert len(ens.grid) == len(ens.mean) == len(ens.sem) == 1441


def test_grid_sampling_and_sem():
    rng = np.random.default_rng(8)
    seq = random_sequence(rng, events=2000, horizon=6 * DAY)
    cfg = TrialConfig(seed_window_days=2, runway_days=3, trials=25, master_seed=5, grid_points=73)
    ens = run_ensemble(seq, cfg)
    for j in (0, 10, 40, 72):
        vals = [c.at(ens.grid[j]) for c in ens.curves]
        assert ens.mean[j] == pytest.approx(np.mean(vals), abs=1e-12)
        assert ens.sem[j] == pytest.approx(np.std(vals, ddof=1) / 5, abs=1e-12)
    assert np.all(np.diff(ens.mean) >= 0) and np.all(ens.sem >= 0)


def test_ensemble_determinism_serial_vs_parallel():
    rng = np.random.default_rng(9)
    seq = random_sequence(rng, events=1500, horizon=5 * DAY)
    cfg = TrialConfig(seed_window_days=1, runway_days=2, trials=24, master_seed=77, grid_points=100)
    serial = run_ensemble(seq, cfg)
    again = run_ensemble(seq, cfg)
    parallel = run_ensemble(seq, cfg, workers=2)
    for other in (again, parallel):
        assert np.array_equal(serial.samples, other.samples)
        assert np.array_equal(serial.mean, other.mean) and np.array_equal(serial.sem, other.sem)


def test_config_validation():
    with pytest.raises(ValueError):
        TrialConfig(trials=0)
    with pytest.raises(ValueError):
        TrialConfig(runway_days=0)
    assert TrialConfig().grid()[1] == 600.0
