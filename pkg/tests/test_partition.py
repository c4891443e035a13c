import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpfedsim.objectives import PartitionError, ShardAssignment, partition_by_label_shards
from dpfedsim.streams import StreamKey


def check_assignment(a, labels, n, shards, expect_all=True):
    """Exhaustive partition and distinct-class checks."""
    seen = np.concatenate([np.asarray(v, dtype=int) for v in a.client_to_sample_indices.values()])
    assert len(seen) == len(set(seen.tolist()))
    if expect_all:
        assert sorted(seen.tolist()) == list(range(len(labels)))
    assert sorted(a.client_to_sample_indices) == list(range(n))
    sizes = {len(v) for v in a.client_to_sample_indices.values()}
    assert len(sizes) == 1
    for c, count in a.classes_per_client(labels).items():
        assert count <= shards


def test_two_classes_two_clients():
    labels = np.array([0] * 5 + [1] * 5)
    a = partition_by_label_shards(labels, 2, 5, StreamKey(0))
    check_assignment(a, labels, 2, 5)
    assert all(len(v) == 5 for v in a.client_to_sample_indices.values())


def test_single_client_holds_everything():
    labels = np.array([2, 0, 1, 1, 0])
    a = partition_by_label_shards(labels, 1, 5, StreamKey(0))
    assert a.client_to_sample_indices == {0: [0, 1, 2, 3, 4]}


def test_single_class_shards_give_at_most_five_classes():
    # 10 classes x 100 samples, n = 20 clients, 5 shards each: shard size 10 never straddles classes.
    labels = np.repeat(np.arange(10), 100)
    StreamKey(1).generator().shuffle(labels)
    a = partition_by_label_shards(labels, 20, 5, StreamKey(2))
    check_assignment(a, labels, 20, 5)
    for idx in a.client_to_sample_indices.values():
        # each client's samples come in 5 single-class blocks of 10
        _, counts = np.unique(labels[idx], return_counts=True)
        assert all(c % 10 == 0 for c in counts)


def test_indivisible_rejected_unless_truncating():
    labels = np.arange(11) % 3
    with pytest.raises(PartitionError, match="divisible"):
        partition_by_label_shards(labels, 2, 5, StreamKey(0))
    a = partition_by_label_shards(labels, 2, 5, StreamKey(0), truncate=True)
    check_assignment(a, labels, 2, 5, expect_all=False)
    assert sum(len(v) for v in a.client_to_sample_indices.values()) == 10


def test_too_few_samples():
    with pytest.raises(PartitionError):
        partition_by_label_shards(np.arange(3), 2, 2, StreamKey(0), truncate=True)
    with pytest.raises(PartitionError):
        partition_by_label_shards(np.arange(4), 0, 2, StreamKey(0))


def test_deterministic_and_json_round_trip(tmp_path):
    labels = np.repeat(np.arange(4), 10)
    a = partition_by_label_shards(labels, 4, 2, StreamKey(9))
    b = partition_by_label_shards(labels, 4, 2, StreamKey(9))
    assert a == b
    path = tmp_path / "assign.json"
    a.to_json(path)
    assert ShardAssignment.from_json(path) == a


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 6), st.integers(1, 5), st.integers(0, 10**6))
def test_invariants_exhaustive(n, shards, per_shard, seed):
    # Class sizes are multiples of the shard size, so every shard is single-class.
    total_shards = n * shards
    gen = StreamKey(seed).generator()
    shard_class = np.sort(gen.integers(0, 10, size=total_shards))
    labels = np.repeat(shard_class, per_shard)
    gen.shuffle(labels)
    a = partition_by_label_shards(labels, n, shards, StreamKey(seed).child("deal"))
    check_assignment(a, labels, n, shards)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(1, 6), st.integers(1, 5), st.integers(1, 8), st.integers(0, 10**6))
def test_partition_holds_for_any_labels(n, shards, per_shard, classes, seed):
    labels = StreamKey(seed).generator().integers(0, classes, size=n * shards * per_shard)
    a = partition_by_label_shards(labels, n, shards, StreamKey(seed).child("deal"))
    seen = sorted(i for v in a.client_to_sample_indices.values() for i in v)
    assert seen == list(range(labels.size))


def test_straddling_shards_are_logged(caplog):
    partition_by_label_shards(np.array([0, 0, 1, 1, 2, 2]), 1, 3, StreamKey(0))
    assert "span two or more classes" not in caplog.text
    partition_by_label_shards(np.array([0, 0, 0, 1, 1, 1]), 1, 3, StreamKey(0))
    assert "span two or more classes" in caplog.text
