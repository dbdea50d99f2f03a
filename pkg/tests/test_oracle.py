import math

import numpy as np
import pytest

from transitnet import oracle
from transitnet.errors import InstanceTooLarge, InvalidConfig
from transitnet.frequency import count_trips
from transitnet.preprocess import assemble_chains


def test_bounds_are_enforced():
    with pytest.raises(InstanceTooLarge):
        oracle.brute_betweenness(range(13), [])
    with pytest.raises(InstanceTooLarge):
        oracle.brute_scc(range(51), [])
    with pytest.raises(InstanceTooLarge):
        oracle.brute_modularity_max(range(9), [])
    with pytest.raises(InstanceTooLarge):
        oracle.exact_mwu([1] * 6, [2] * 5)


def test_partition_count_is_bell_number():
    assert [sum(1 for _ in oracle._partitions(list(range(n)))) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]


def test_reference_hand_values():
    assert oracle.brute_betweenness("abc", [("a", "b"), ("b", "c")]) == {"a": 0.0, "b": 0.5, "c": 0.0}
    # two geodesics of equal length split the credit
    bb = oracle.brute_betweenness("sxyt", [("s", "x", 1), ("s", "y", 1), ("x", "t", 1), ("y", "t", 1)])
    assert bb["x"] == bb["y"] == 0.5 / 6
    d = oracle.brute_all_pairs("abc", [("a", "b", 0.5), ("b", "c", 0.25)])
    assert d[("a", "c")] == 0.75 and d[("c", "a")] == math.inf
    assert oracle.brute_avg_shortest_path("ab", [("a", "b", 0.3), ("b", "a", 0.7)]) == 0.5
    assert oracle.brute_efficiency("ab", [("a", "b", 0.5)]) == 1.0
    assert oracle.exact_mwu([1, 2, 3], [4, 5, 6]) == (0.0, 0.1)
    q, labels = oracle.brute_modularity_max(range(3), [(0, 1), (1, 2), (2, 0)])
    assert q == 0.0 and len(set(labels.values())) == 1
    with pytest.raises(ValueError):
        oracle.brute_betweenness("ab", [("a", "b", 0)])


def test_generator_is_deterministic(small_synth):
    again = oracle.generate(small_synth.config)
    assert again.records == small_synth.records and again.catalog.entries == small_synth.catalog.entries
    assert again.manifest == small_synth.manifest


def test_generator_plants_the_cohorts(small_synth):
    cfg = small_synth.config
    assert len(small_synth.hf_ids) == round(cfg.hf_fraction * cfg.n_passengers)
    chains, incomplete = assemble_chains(small_synth.records)
    assert not incomplete
    counts = count_trips(c for c in chains if c.start.day <= 7)
    hf = [counts[p] for p in small_synth.hf_ids]
    lf = [c for p, c in counts.items() if p not in small_synth.hf_ids]
    assert min(hf) >= cfg.hf_trips[0] and max(lf) <= cfg.lf_trips[1]


def test_generator_noise_knobs():
    base = oracle.SynthConfig(n_stations=20, n_passengers=30, days=7, seed=1)
    noisy = oracle.generate(oracle.SynthConfig(**{**base.__dict__, "duplicate_rate": 0.2, "out_of_window_rate": 0.1}))
    assert len(noisy.records) > len(oracle.generate(base).records)
    assert any(r.timestamp.month == 1 for r in noisy.records)


@pytest.mark.parametrize("bad", [{"n_passengers": 0}, {"hf_fraction": 1.0}, {"n_stations": 1}])
def test_invalid_synth_config(bad):
    with pytest.raises(InvalidConfig):
        oracle.generate(oracle.SynthConfig(**bad))


def test_slot_weights_shape():
    w = oracle.SynthConfig().slot_weights()
    assert w.shape == (12,) and np.all(w > 0) and w[4] > w[1]


def test_write_synthetic(tmp_path, small_synth):
    paths = oracle.write_synthetic(small_synth, tmp_path)
    assert paths["records"].read_text().count("\n") == len(small_synth.records) + 1
