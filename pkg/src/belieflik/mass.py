"""Mass functions (basic probability assignments), belief and plausibility.

Masses are kept in a ``{bits: mass}`` mapping keyed by subset bitmasks of
the owning frame. Belief and plausibility iterate over focal elements only,
so they remain cheap on product frames with millions of outcomes.
"""

from __future__ import annotations

import math
import sys
from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping

from belieflik.frames import (
    AnyFrame,
    Frame,
    FrameError,
    FrameMismatchError,
    ProductFrame,
    Subset,
    cylindrical_extension,
    project,
    subset_from_json,
)

SUM_TOL = 1e-9


class MassError(ValueError):
    """Assignment violating the mass-function axioms."""


def _as_subset(frame: AnyFrame, key) -> Subset:
    if isinstance(key, Subset):
        if key.frame != frame:
            raise FrameMismatchError(f"{key!r} is not a subset of {frame!r}")
        return key
    if isinstance(frame, ProductFrame):
        return frame.subset(key)
    if isinstance(key, str):
        if key in frame.labels:
            return frame.singleton(key)
        # "TF" shorthand for single-character labels
        return frame.subset(key)
    return frame.subset(key)


@dataclass(frozen=True, eq=False)
class MassFunction:
    """A normalized mass function: no mass on the empty set, total 1."""

    frame: AnyFrame
    masses: Mapping[int, float]

    def __init__(self, frame: AnyFrame, masses: Mapping[int, float], *, tol: float = SUM_TOL):
        cleaned = {}
        for bits, m in masses.items():
            m = float(m)
            if not math.isfinite(m) or m < 0:
                raise MassError(f"invalid mass {m!r}")
            if m == 0:
                continue
            if bits == 0 and not self._allows_empty():
                raise MassError("the empty set cannot carry mass")
            Subset(frame, bits)  # range check
            cleaned[bits] = m
        total = math.fsum(cleaned.values())
        if abs(total - 1.0) > tol:
            raise MassError(f"masses sum to {total!r}, not 1")
        if abs(total - 1.0) > 4 * sys.float_info.epsilon:
            cleaned = {bits: m / total for bits, m in cleaned.items()}
        cleaned = dict(sorted(cleaned.items()))
        object.__setattr__(self, "frame", frame)
        object.__setattr__(self, "masses", MappingProxyType(cleaned))

    @staticmethod
    def _allows_empty() -> bool:
        return False

    def __eq__(self, other) -> bool:
        return (type(self) is type(other) and self.frame == other.frame
                and dict(self.masses) == dict(other.masses))

    def __hash__(self) -> int:
        return hash((self.frame, tuple(self.masses.items())))

    def __len__(self) -> int:
        return len(self.masses)

    def __getitem__(self, key) -> float:
        return self.masses.get(_as_subset(self.frame, key).bits, 0.0)

    def items(self) -> Iterator[tuple[Subset, float]]:
        for bits, m in self.masses.items():
            yield Subset(self.frame, bits), m

    def focal_elements(self) -> list[Subset]:
        return [Subset(self.frame, bits) for bits in self.masses]

    def belief(self, event) -> float:
        return belief(self, event)

    def plausibility(self, event) -> float:
        return plausibility(self, event)

    def __repr__(self) -> str:
        body = ", ".join(f"{s!r}: {m:.6g}" for s, m in self.items())
        return f"{type(self).__name__}({body})"

    def to_json(self) -> dict:
        return {
            "frame": self.frame.to_json(),
            "focal": [{"set": s.to_json(), "mass": m} for s, m in self.items()],
        }


class UnnormalizedMass(MassFunction):
    """Mass function that may keep conflict mass on the empty set."""

    @staticmethod
    def _allows_empty() -> bool:
        return True

    @property
    def conflict(self) -> float:
        return self.masses.get(0, 0.0)

    def normalized(self) -> MassFunction:
        from belieflik.combination import TotalConflictError

        rest = {bits: m for bits, m in self.masses.items() if bits}
        total = math.fsum(rest.values())
        if total <= 1e-12:
            raise TotalConflictError("total conflict: no mass outside the empty set")
        return MassFunction(frame=self.frame, masses={b: m / total for b, m in rest.items()})


def make_mass(frame: AnyFrame, assignments: Mapping) -> MassFunction:
    """Build a :class:`MassFunction` from ``{subset: mass}``.

    Keys may be :class:`Subset` values, iterables of labels (tuples of labels
    for product frames), or for single-character labels a string such as
    ``"TF"``.
    """
    acc: dict[int, list[float]] = defaultdict(list)
    for key, m in assignments.items():
        if m < 0:
            raise MassError(f"negative mass {m!r} for {key!r}")
        acc[_as_subset(frame, key).bits].append(float(m))
    return MassFunction(frame, {bits: math.fsum(ms) for bits, ms in acc.items()})


def _event_bits(mass: MassFunction, event) -> int:
    return _as_subset(mass.frame, event).bits


def belief(mass: MassFunction, event) -> float:
    """Total mass of the nonempty focal elements contained in ``event``."""
    e = _event_bits(mass, event)
    return math.fsum(m for bits, m in mass.masses.items() if bits and bits & ~e == 0)


def plausibility(mass: MassFunction, event) -> float:
    """Total mass of the focal elements meeting ``event``."""
    e = _event_bits(mass, event)
    return math.fsum(m for bits, m in mass.masses.items() if bits & e)


def categorical(frame: AnyFrame, event) -> MassFunction:
    s = _as_subset(frame, event)
    if s.is_empty():
        raise MassError("a categorical mass function needs a nonempty event")
    return MassFunction(frame, {s.bits: 1.0})


def vacuous(frame: AnyFrame) -> MassFunction:
    return MassFunction(frame, {frame.full_bits: 1.0})


def is_bayesian(mass: MassFunction) -> bool:
    return all(bits.bit_count() == 1 for bits in mass.masses)


def is_vacuous(mass: MassFunction) -> bool:
    return list(mass.masses) == [mass.frame.full_bits]


def vacuous_extension(mass: MassFunction, product: ProductFrame, position: int,
                      cap: int | None = None) -> MassFunction:
    """Lift ``mass`` onto ``product`` by crossing each focal set with the other factors."""
    if position < 0 or position >= product.arity:
        raise FrameError(f"position {position} out of range for {product.arity} factors")
    if mass.frame != product.factors[position]:
        raise FrameMismatchError(f"mass on {mass.frame!r} does not match factor {position}")
    out = {}
    for s, m in mass.items():
        out[cylindrical_extension(s, product, position, cap).bits] = m
    return type(mass)(product, out)


def marginalize(mass: MassFunction, position: int) -> MassFunction:
    """Push each focal mass onto its projection at ``position``."""
    if not isinstance(mass.frame, ProductFrame):
        raise FrameError("marginalization needs a mass function on a product frame")
    acc: dict[int, list[float]] = defaultdict(list)
    for s, m in mass.items():
        acc[project(s, position).bits].append(m)
    return type(mass)(mass.frame.factors[position], {b: math.fsum(ms) for b, ms in acc.items()})


def frame_from_json(doc: Mapping) -> AnyFrame:
    if "factors" in doc:
        return ProductFrame(Frame(f["labels"]) for f in doc["factors"])
    if "labels" not in doc:
        raise FrameError("frame descriptor needs 'labels' or 'factors'")
    return Frame(doc["labels"])


def mass_from_json(doc: Mapping) -> MassFunction:
    """Parse ``{"frame": {...}, "focal": [{"set": [...], "mass": m}, ...]}``."""
    try:
        frame = frame_from_json(doc["frame"])
        entries: Iterable = doc["focal"]
        acc: dict[int, list[float]] = defaultdict(list)
        for entry in entries:
            m = float(entry["mass"])
            if m < 0:
                raise MassError(f"negative mass {m!r}")
            acc[subset_from_json(frame, entry["set"]).bits].append(m)
    except (KeyError, TypeError) as exc:
        raise MassError(f"malformed mass function document: {exc}") from None
    if acc.get(0) and math.fsum(acc[0]) > 0:
        raise MassError("the empty set cannot carry mass")
    return MassFunction(frame, {b: math.fsum(ms) for b, ms in acc.items()})
