"""Finite frames, bitmask subsets and Cartesian product frames.

A :class:`Frame` is an ordered set of outcome labels; label order fixes the
bit position of each outcome. A :class:`ProductFrame` enumerates tuples
lexicographically with the rightmost factor varying fastest, and its subsets
are dense bitsets over that enumeration. Both kinds of frame share the
:class:`Subset` value type, whose bits are stored in a Python ``int``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np

FRAME_CAP = 24
PRODUCT_CAP = 2**20


class FrameError(ValueError):
    """Invalid frame, label or subset."""


class FrameMismatchError(FrameError):
    """Operands live on different frames."""


class SizeCapError(FrameError):
    """A frame or product frame exceeds its configured size cap."""


@dataclass(frozen=True)
class Frame:
    labels: tuple[str, ...]

    def __init__(self, labels: Iterable[str], cap: int | None = None):
        labels = tuple(str(label) for label in labels)
        if not labels:
            raise FrameError("a frame needs at least one outcome")
        if len(set(labels)) != len(labels):
            raise FrameError(f"duplicate labels in {labels!r}")
        cap = FRAME_CAP if cap is None else cap
        if len(labels) > cap:
            raise SizeCapError(f"frame of {len(labels)} outcomes exceeds cap {cap}")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"Frame({list(self.labels)!r})"

    @property
    def size(self) -> int:
        return len(self.labels)

    @cached_property
    def _positions(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.labels)}

    def index(self, label: str) -> int:
        try:
            return self._positions[label]
        except KeyError:
            raise FrameError(f"unknown label {label!r} for {self!r}") from None

    def outcome(self, i: int) -> str:
        return self.labels[i]

    @property
    def full_bits(self) -> int:
        return (1 << self.size) - 1

    def subset(self, labels: Iterable[str]) -> Subset:
        bits = 0
        for label in labels:
            bits |= 1 << self.index(label)
        return Subset(self, bits)

    def singleton(self, label: str) -> Subset:
        return Subset(self, 1 << self.index(label))

    def full(self) -> Subset:
        return Subset(self, self.full_bits)

    def empty(self) -> Subset:
        return Subset(self, 0)

    def to_json(self) -> dict:
        return {"labels": list(self.labels)}


@dataclass(frozen=True)
class ProductFrame:
    """Cartesian product of factor frames, rightmost factor fastest."""

    factors: tuple[Frame, ...]

    def __init__(self, factors: Iterable[Frame]):
        factors = tuple(factors)
        if not factors:
            raise FrameError("a product frame needs at least one factor")
        object.__setattr__(self, "factors", factors)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return " x ".join(repr(f) for f in self.factors)

    @cached_property
    def size(self) -> int:
        return math.prod(len(f) for f in self.factors)

    @property
    def arity(self) -> int:
        return len(self.factors)

    @cached_property
    def strides(self) -> tuple[int, ...]:
        strides = []
        acc = 1
        for f in reversed(self.factors):
            strides.append(acc)
            acc *= len(f)
        return tuple(reversed(strides))

    def check_cap(self, cap: int | None = None) -> None:
        cap = PRODUCT_CAP if cap is None else cap
        if self.size > cap:
            raise SizeCapError(f"product frame of size {self.size} exceeds cap {cap}")

    @property
    def full_bits(self) -> int:
        return (1 << self.size) - 1

    def _position(self, position: int) -> int:
        if not 0 <= position < self.arity:
            raise FrameError(f"position {position} out of range for {self.arity} factors")
        return position

    def tuple_index(self, outcome: Sequence[str]) -> int:
        if len(outcome) != self.arity:
            raise FrameError(f"tuple of length {len(outcome)} for a {self.arity}-factor product")
        return sum(f.index(x) * s for f, x, s in zip(self.factors, outcome, self.strides))

    def index_tuple(self, index: int) -> tuple[str, ...]:
        if not 0 <= index < self.size:
            raise FrameError(f"tuple index {index} out of range")
        return tuple(f.outcome((index // s) % len(f)) for f, s in zip(self.factors, self.strides))

    index = tuple_index
    outcome = index_tuple

    def tuples(self) -> Iterable[tuple[str, ...]]:
        return itertools.product(*(f.labels for f in self.factors))

    def subset(self, outcomes: Iterable[Sequence[str]]) -> Subset:
        bits = 0
        for outcome in outcomes:
            bits |= 1 << self.tuple_index(outcome)
        return Subset(self, bits)

    def singleton(self, outcome: Sequence[str]) -> Subset:
        return Subset(self, 1 << self.tuple_index(outcome))

    def full(self) -> Subset:
        return Subset(self, self.full_bits)

    def empty(self) -> Subset:
        return Subset(self, 0)

    def components(self, position: int) -> np.ndarray:
        """Index of the ``position`` component for every tuple, in tuple order."""
        position = self._position(position)
        idx = np.arange(self.size, dtype=np.int64)
        return (idx // self.strides[position]) % len(self.factors[position])

    def box(self, parts: Sequence[Subset]) -> Subset:
        return BoxSubset(tuple(parts)).to_subset(self)

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors]}


AnyFrame = Union[Frame, ProductFrame]


def _mask_to_int(mask: np.ndarray) -> int:
    return int.from_bytes(np.packbits(mask.astype(np.uint8), bitorder="little").tobytes(), "little")


def _int_to_mask(bits: int, size: int) -> np.ndarray:
    raw = np.frombuffer(bits.to_bytes((size + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:size].astype(bool)


@dataclass(frozen=True)
class Subset:
    """A subset of a frame (plain or product) stored as an integer bitmask."""

    frame: AnyFrame
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.frame.size:
            raise FrameError(f"bits {self.bits:#x} out of range for {self.frame!r}")

    def _check(self, other: Subset) -> None:
        if self.frame != other.frame:
            raise FrameMismatchError(f"{self.frame!r} vs {other.frame!r}")

    def __and__(self, other: Subset) -> Subset:
        self._check(other)
        return Subset(self.frame, self.bits & other.bits)

    def __or__(self, other: Subset) -> Subset:
        self._check(other)
        return Subset(self.frame, self.bits | other.bits)

    def __invert__(self) -> Subset:
        return Subset(self.frame, self.frame.full_bits & ~self.bits)

    complement = __invert__

    def __le__(self, other: Subset) -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    issubset = __le__

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def __contains__(self, outcome) -> bool:
        return bool(self.bits >> self.frame.index(outcome) & 1)

    def is_empty(self) -> bool:
        return self.bits == 0

    def is_full(self) -> bool:
        return self.bits == self.frame.full_bits

    def indices(self) -> list[int]:
        bits, out, i = self.bits, [], 0
        while bits:
            if bits & 1:
                out.append(i)
            bits >>= 1
            i += 1
        return out

    def outcomes(self) -> list:
        return [self.frame.outcome(i) for i in self.indices()]

    def to_json(self) -> list:
        """Sorted label array; product tuples become label lists."""
        if isinstance(self.frame, ProductFrame):
            return sorted(list(t) for t in self.outcomes())
        return sorted(self.outcomes())

    def __repr__(self) -> str:
        if isinstance(self.frame, ProductFrame):
            inner = ", ".join("(" + ",".join(t) + ")" for t in self.outcomes())
        else:
            inner = ", ".join(self.outcomes())
        return "{" + inner + "}"


def subset_from_json(frame: AnyFrame, items: Sequence) -> Subset:
    if isinstance(frame, ProductFrame):
        return frame.subset(tuple(item) for item in items)
    return frame.subset(items)


@dataclass(frozen=True)
class BoxSubset:
    """A Cartesian product ``A_1 x ... x A_n`` of nonempty factor subsets."""

    components: tuple[Subset, ...]

    def __post_init__(self):
        for part in self.components:
            if part.is_empty():
                raise FrameError("box components must be nonempty")

    def product_frame(self) -> ProductFrame:
        return ProductFrame(part.frame for part in self.components)

    def to_subset(self, product: ProductFrame | None = None) -> Subset:
        product = self.product_frame() if product is None else product
        if len(self.components) != product.arity:
            raise FrameError("box arity does not match the product frame")
        bits = product.full_bits
        for position, part in enumerate(self.components):
            bits &= cylindrical_extension(part, product, position).bits
        return Subset(product, bits)


def tuple_index(product: ProductFrame, outcome: Sequence[str]) -> int:
    return product.tuple_index(outcome)


def index_tuple(product: ProductFrame, index: int) -> tuple[str, ...]:
    return product.index_tuple(index)


def cylindrical_extension(subset: Subset, product: ProductFrame, position: int,
                          cap: int | None = None) -> Subset:
    """All tuples of ``product`` whose ``position`` component lies in ``subset``."""
    position = product._position(position)
    if subset.frame != product.factors[position]:
        raise FrameMismatchError(f"subset of {subset.frame!r} does not match factor {position}")
    product.check_cap(cap)
    member = np.array([bool(subset.bits >> i & 1) for i in range(len(subset.frame))])
    return Subset(product, _mask_to_int(member[product.components(position)]))


def project(subset: Subset, position: int) -> Subset:
    product = subset.frame
    if not isinstance(product, ProductFrame):
        raise FrameError("projection needs a subset of a product frame")
    comps = product.components(position)[_int_to_mask(subset.bits, product.size)]
    bits = 0
    for c in np.unique(comps):
        bits |= 1 << int(c)
    return Subset(product.factors[position], bits)
