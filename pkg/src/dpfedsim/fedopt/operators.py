"""Sensitivity-bounding operators: clip (ball projection) and normalize."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

CLIP = "clip"
NORMALIZE = "normalize"
NONE = "none"


def clip(z: np.ndarray, c: float) -> np.ndarray:
    """z * min(1, c / ||z||): projection of z onto the radius-c ball."""
    if c <= 0:
        raise ValueError(f"clip threshold must be > 0, got {c}")
    norm = float(np.linalg.norm(z))
    if norm <= c:
        return np.array(z, dtype=float, copy=True)
    return z * (c / norm)


def normalize(z: np.ndarray, c: float) -> np.ndarray:
    """c z / ||z||; the zero vector maps to itself (logged)."""
    if c <= 0:
        raise ValueError(f"normalization scale must be > 0, got {c}")
    norm = float(np.linalg.norm(z))
    if norm == 0.0:
        log.info("normalize: zero update left at zero")
        return np.zeros_like(z, dtype=float)
    return z * (c / norm)


@dataclass(frozen=True)
class SensitivityPolicy:
    kind: str = NONE
    scale: float | None = None

    def __post_init__(self):
        if self.kind not in (CLIP, NORMALIZE, NONE):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.kind == NONE:
            if self.scale is not None:
                raise ValueError("policy 'none' takes no scale")
        elif self.scale is None or not self.scale > 0:
            raise ValueError(f"policy {self.kind!r} needs a scale > 0, got {self.scale}")

    @classmethod
    def clip(cls, c: float) -> "SensitivityPolicy":
        return cls(CLIP, float(c))

    @classmethod
    def normalize(cls, c: float) -> "SensitivityPolicy":
        return cls(NORMALIZE, float(c))

    def apply(self, u: np.ndarray) -> np.ndarray:
        if self.kind == CLIP:
            return clip(u, self.scale)
        if self.kind == NORMALIZE:
            return normalize(u, self.scale)
        return np.array(u, dtype=float, copy=True)

    def apply_rows(self, updates: np.ndarray, norms: np.ndarray | None = None) -> np.ndarray:
        """Row-wise ``apply``; identical arithmetic to the single-vector operators."""
        if self.kind == NONE:
            return updates.copy()
        if norms is None:
            norms = np.linalg.norm(updates, axis=1)
        zero = norms == 0.0
        if self.kind == CLIP:
            factor = np.where(norms <= self.scale, 1.0, self.scale / np.where(zero, 1.0, norms))
        else:
            if zero.any():
                log.info("normalize: %d zero update(s) left at zero", int(zero.sum()))
            factor = np.where(zero, 0.0, self.scale / np.where(zero, 1.0, norms))
        out = updates * factor[:, None]
        if self.kind == CLIP:
            # Unclipped rows are returned bit-for-bit.
            keep = norms <= self.scale
            out[keep] = updates[keep]
        return out
