"""Scale grid partitioning, group lookup, and task sampling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anysr.errors import ConfigError
from anysr.scales import (
    ScalePair,
    TaskSampler,
    build_groups,
    default_grid,
    group_of,
    sample_task,
    width_of,
)

DEFAULT_WIDTHS = [0.5, 0.7, 0.9, 1.0]


def default_groups():
    return build_groups(default_grid(), 4, DEFAULT_WIDTHS)


def test_default_grid_reproduces_published_partition():
    g = default_groups()
    assert g.groups[0] == tuple(round(1.1 + 0.1 * i, 6) for i in range(7))   # 1.1..1.7
    assert g.groups[1] == tuple(round(1.8 + 0.1 * i, 6) for i in range(8))   # 1.8..2.5
    assert g.groups[2] == tuple(round(2.6 + 0.1 * i, 6) for i in range(7))   # 2.6..3.2
    assert g.groups[3] == tuple(round(3.3 + 0.1 * i, 6) for i in range(8))   # 3.3..4.0
    assert g.upper_bounds == (1.7, 2.5, 3.2, 4.0)
    assert g.s_max == 4.0


def test_single_group():
    g = build_groups([2.0, 3.0], 1, [1.0])
    assert g.groups == ((2.0, 3.0),)
    assert width_of(g, 1) == 1.0


def test_even_split_example():
    g = build_groups([1.5, 2.0, 3.0, 4.0], 2, [0.5, 1.0])
    assert g.groups == ((1.5, 2.0), (3.0, 4.0))
    assert g.upper_bounds == (2.0, 4.0)


def test_build_groups_validation():
    with pytest.raises(ConfigError):
        build_groups([2.0], 2, [0.5, 1.0])
    with pytest.raises(ConfigError):
        build_groups([2.0, 3.0], 2, [1.0, 0.5])
    with pytest.raises(ConfigError):
        build_groups([2.0, 3.0], 2, [0.5, 0.9])
    with pytest.raises(ConfigError):
        build_groups([3.0, 2.0], 2, [0.5, 1.0])
    with pytest.raises(ConfigError):
        build_groups([0.9, 2.0], 2, [0.5, 1.0])


def test_group_of_published_placements():
    g = default_groups()
    assert group_of(g, ScalePair(2.0, 2.0)) == 2
    assert group_of(g, ScalePair(4.0, 4.0)) == 4
    assert group_of(g, ScalePair(1.75, 1.75)) == 2


def test_group_of_max_rule_and_bounds():
    g = default_groups()
    assert group_of(g, ScalePair(1.2, 3.0)) == 3
    assert group_of(g, ScalePair(3.0, 1.2)) == 3
    with pytest.raises(ConfigError):
        group_of(g, ScalePair(4.2, 1.5))


def test_group_of_covers_own_grid_exactly():
    g = default_groups()
    for t, grid in enumerate(g.groups, start=1):
        for v in grid:
            assert group_of(g, ScalePair(v, v)) == t


def test_group_of_monotone():
    g = default_groups()
    values = np.linspace(1.1, 4.0, 113)
    ts = [group_of(g, ScalePair(v, v)) for v in values]
    assert all(a <= b for a, b in zip(ts, ts[1:]))


def test_width_of():
    g = default_groups()
    assert width_of(g, 1) == 0.5
    assert width_of(g, 4) == 1.0
    with pytest.raises(ConfigError):
        width_of(g, 5)
    with pytest.raises(ConfigError):
        width_of(g, 0)


def test_scale_pair_validation():
    with pytest.raises(ConfigError):
        ScalePair(1.0, 2.0)
    with pytest.raises(ConfigError):
        ScalePair(2.0, 0.5)


def test_sample_task_forced_reset():
    g = default_groups()
    rng = np.random.default_rng(0)
    for _ in range(200):
        t, s = sample_task(g, 1.0, rng)
        assert t == 4
        assert s.s_h == s.s_w and s.s_h in g.groups[3]


def test_sample_task_statistics():
    g = default_groups()
    draws = 100_000
    rng = np.random.default_rng(42)
    top = sum(sample_task(g, 0.6, rng)[0] == 4 for _ in range(draws))
    assert abs(top / draws - 0.70) < 0.02
    rng = np.random.default_rng(43)
    counts = np.zeros(5)
    for _ in range(draws):
        counts[sample_task(g, 0.0, rng)[0]] += 1
    assert np.all(np.abs(counts[1:] / draws - 0.25) < 0.02)


def test_sample_task_scale_belongs_to_group():
    g = default_groups()
    rng = np.random.default_rng(7)
    for _ in range(500):
        t, s = sample_task(g, 0.3, rng)
        assert group_of(g, s) == t


def test_sample_task_reproducible():
    g = default_groups()
    seq1 = [sample_task(g, 0.6, np.random.default_rng(9)) for _ in range(1)]
    a = [sample_task(g, 0.6, np.random.default_rng(99)) for _ in range(50)]
    b = [sample_task(g, 0.6, np.random.default_rng(99)) for _ in range(50)]
    assert a == b and seq1


def test_sample_task_rejects_bad_p():
    g = default_groups()
    with pytest.raises(ConfigError):
        sample_task(g, 1.5, np.random.default_rng(0))


def test_task_sampler_full_stream_equivalence():
    # With p=1 the standard sampler and the forced-full sampler must emit the
    # same (t, scale) sequence: the scale stream is independent of the t and
    # coin streams.
    g = default_groups()
    a = TaskSampler(g, 1.0, np.random.SeedSequence(123))
    b = TaskSampler(g, 1.0, np.random.SeedSequence(123))
    seq_a = [a.sample() for _ in range(100)]
    seq_b = [b.sample_full() for _ in range(100)]
    assert seq_a == seq_b


def test_task_sampler_pretrain_uses_whole_grid():
    g = default_groups()
    sampler = TaskSampler(g, 0.6, np.random.SeedSequence(5))
    seen = set()
    for _ in range(2000):
        t, s = sampler.sample_pretrain()
        assert t == 4
        seen.add(s.s_h)
    assert seen == set(g.all_scales)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_partition_properties(data):
    grid_tenths = data.draw(st.sets(st.integers(11, 80), min_size=1, max_size=40))
    scales = [round(v / 10.0, 6) for v in sorted(grid_tenths)]
    t_count = data.draw(st.integers(1, len(scales)))
    if t_count == 1:
        widths = [1.0]
    else:
        percents = data.draw(
            st.sets(st.integers(1, 99), min_size=t_count - 1, max_size=t_count - 1)
        )
        widths = [v / 100.0 for v in sorted(percents)] + [1.0]
    g = build_groups(scales, t_count, widths)
    # coverage and disjointness of the partition
    assert list(g.all_scales) == scales
    assert sum(len(grp) for grp in g.groups) == len(scales)
    assert all(len(grp) >= 1 for grp in g.groups)
    # group boundaries ascend; every member maps back to its own group
    assert list(g.upper_bounds) == sorted(g.upper_bounds)
    for t, grp in enumerate(g.groups, start=1):
        for v in grp:
            assert group_of(g, ScalePair(v, v)) == t
