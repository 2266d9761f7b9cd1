"""Combination rules for mass functions on a shared frame.

Accumulation collects every product term per target set and sums with
:func:`math.fsum`, so the result does not depend on enumeration order and
``combine(a, b) == combine(b, a)`` holds exactly.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from functools import reduce
from operator import and_, or_
from typing import Callable, Sequence

from belieflik.frames import FrameError, FrameMismatchError, ProductFrame
from belieflik.mass import (
    MassFunction,
    UnnormalizedMass,
    categorical,
    plausibility,
    vacuous_extension,
)

DUST = 1e-15
CONFLICT_TOL = 1e-12


class TotalConflictError(ValueError):
    """Dempster normalization is undefined because all mass conflicts."""


class Rule(str, enum.Enum):
    DEMPSTER = "dempster"
    CONJUNCTIVE = "conjunctive"
    DISJUNCTIVE = "disjunctive"


def _accumulate(a: MassFunction, b: MassFunction, op: Callable[[int, int], int]) -> dict[int, float]:
    if a.frame != b.frame:
        raise FrameMismatchError(f"cannot combine {a.frame!r} with {b.frame!r}")
    terms: dict[int, list[float]] = defaultdict(list)
    for x, mx in a.masses.items():
        for y, my in b.masses.items():
            terms[op(x, y)].append(mx * my)
    out = {}
    for bits, ts in terms.items():
        m = math.fsum(ts)
        if m >= DUST:
            out[bits] = m
    return out


def combine_conjunctive(a: MassFunction, b: MassFunction) -> UnnormalizedMass:
    """Intersection rule; conflict stays on the empty set."""
    return UnnormalizedMass(a.frame, _accumulate(a, b, and_))


def combine_dempster(a: MassFunction, b: MassFunction) -> MassFunction:
    joint = combine_conjunctive(a, b)
    if joint.conflict >= 1.0 - CONFLICT_TOL:
        raise TotalConflictError("total conflict: the operands share no focal intersection")
    return joint.normalized()


def combine_disjunctive(a: MassFunction, b: MassFunction) -> MassFunction:
    """Union rule; beliefs of the operands multiply."""
    return MassFunction(a.frame, _accumulate(a, b, or_))


def condition(mass: MassFunction, event) -> MassFunction:
    """Dempster conditioning on ``event``."""
    cat = categorical(mass.frame, event)
    if plausibility(mass, event) <= CONFLICT_TOL:
        raise TotalConflictError("cannot condition on an event of zero plausibility")
    return combine_dempster(mass, cat)


def combine(a: MassFunction, b: MassFunction, rule: Rule | str) -> MassFunction:
    rule = Rule(rule)
    if rule is Rule.DEMPSTER:
        return combine_dempster(a, b)
    if rule is Rule.CONJUNCTIVE:
        return combine_conjunctive(a, b)
    return combine_disjunctive(a, b)


def combine_many(masses: Sequence[MassFunction], rule: Rule | str = Rule.CONJUNCTIVE,
                 cap: int | None = None) -> MassFunction:
    """Vacuously extend one mass per factor onto the product frame and fold the rule.

    This is the brute-force joint belief function of repeated trials; the
    fast likelihood paths are checked against it.
    """
    if not masses:
        raise FrameError("combine_many needs at least one mass function")
    product = ProductFrame(m.frame for m in masses)
    product.check_cap(cap)
    rule = Rule(rule)
    extended = [vacuous_extension(m, product, i, cap) for i, m in enumerate(masses)]
    if rule is Rule.CONJUNCTIVE:
        extended[0] = UnnormalizedMass(product, extended[0].masses)
    return reduce(lambda x, y: combine(x, y, rule), extended)
