"""Label-sorted shard partitioning for heterogeneous (non-IID) clients."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from dpfedsim.streams import StreamKey

log = logging.getLogger(__name__)


class PartitionError(ValueError):
    pass


@dataclass
class ShardAssignment:
    shards_per_client: int
    client_to_sample_indices: dict[int, list[int]]

    def classes_per_client(self, labels) -> dict[int, int]:
        labels = np.asarray(labels)
        return {c: len(set(labels[idx].tolist())) for c, idx in self.client_to_sample_indices.items()}

    def to_json(self, path: str | Path) -> None:
        payload = {
            "shards_per_client": self.shards_per_client,
            "clients": {str(c): idx for c, idx in self.client_to_sample_indices.items()},
        }
        Path(path).write_text(json.dumps(payload, indent=1) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "ShardAssignment":
        payload = json.loads(Path(path).read_text())
        mapping = {int(c): list(map(int, idx)) for c, idx in payload["clients"].items()}
        return cls(int(payload["shards_per_client"]), mapping)


def partition_by_label_shards(labels, n_clients: int, shards_per_client: int, key: StreamKey,
                              truncate: bool = False) -> ShardAssignment:
    """Sort samples by label, cut into n * shards_per_client equal contiguous
    shards, and deal each client ``shards_per_client`` shards uniformly at
    random without replacement.

    With ``truncate`` the samples are first shuffled and cut to the largest
    divisible prefix; otherwise an indivisible sample count is an error.
    """
    labels = np.asarray(labels)
    total_shards = n_clients * shards_per_client
    if n_clients < 1 or shards_per_client < 1:
        raise PartitionError("n_clients and shards_per_client must be positive")
    indices = np.arange(labels.size)
    if labels.size % total_shards:
        if not truncate:
            raise PartitionError(
                f"{labels.size} samples are not divisible into {total_shards} equal shards "
                f"({n_clients} clients x {shards_per_client} shards)"
            )
        keep = (labels.size // total_shards) * total_shards
        if keep == 0:
            raise PartitionError(f"fewer samples ({labels.size}) than shards ({total_shards})")
        perm = key.child("truncate").generator().permutation(labels.size)
        indices = np.sort(perm[:keep])
        log.info("truncated %d samples to %d for %d equal shards", labels.size, keep, total_shards)
    # Stable sort keeps equal labels in index order.
    order = indices[np.argsort(labels[indices], kind="stable")]
    shards = order.reshape(total_shards, -1)
    sorted_labels = labels[shards]
    mixed = int(np.sum(sorted_labels[:, 0] != sorted_labels[:, -1]))
    if mixed:
        # Only single-class shards guarantee <= shards_per_client classes per client.
        log.warning("%d of %d shards span two or more classes; class counts are not "
                    "multiples of the shard size %d", mixed, total_shards, shards.shape[1])
    deal = key.child("deal").generator().permutation(total_shards)
    mapping = {}
    for client in range(n_clients):
        picked = deal[client * shards_per_client:(client + 1) * shards_per_client]
        mapping[client] = sorted(int(i) for i in shards[picked].ravel())
    return ShardAssignment(shards_per_client, mapping)
