"""Compact membership sets over leaf ids, stored as bit vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LeafSet:
    """An immutable subset of ``{0, ..., size - 1}`` backed by an int bitmask."""

    size: int
    bits: int = 0

    def __post_init__(self):
        if self.size < 0:
            raise ValueError("size must be nonnegative")
        if self.bits < 0 or self.bits >> self.size:
            raise ValueError("member id out of range")

    @classmethod
    def from_ids(cls, ids, size: int) -> "LeafSet":
        bits = 0
        for i in ids:
            i = int(i)
            if not 0 <= i < size:
                raise ValueError(f"member id {i} out of range for size {size}")
            bits |= 1 << i
        return cls(size=size, bits=bits)

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "LeafSet":
        mask = np.asarray(mask, dtype=bool)
        packed = np.packbits(mask, bitorder="little").tobytes()
        return cls(size=mask.size, bits=int.from_bytes(packed, "little"))

    def to_mask(self) -> np.ndarray:
        if self.size == 0:
            return np.zeros(0, dtype=bool)
        raw = self.bits.to_bytes((self.size + 7) // 8, "little")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        return bits[: self.size].astype(bool)

    def ids(self) -> np.ndarray:
        """Member ids in ascending order."""
        return np.flatnonzero(self.to_mask())

    @property
    def count(self) -> int:
        return self.bits.bit_count()

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.size and bool(self.bits >> i & 1)

    def __and__(self, other: "LeafSet") -> "LeafSet":
        self._check(other)
        return LeafSet(size=self.size, bits=self.bits & other.bits)

    def __or__(self, other: "LeafSet") -> "LeafSet":
        self._check(other)
        return LeafSet(size=self.size, bits=self.bits | other.bits)

    def _check(self, other: "LeafSet") -> None:
        if self.size != other.size:
            raise ValueError("LeafSet sizes differ")

    def __iter__(self):
        return iter(self.ids().tolist())

    def __bool__(self) -> bool:
        return self.bits != 0
