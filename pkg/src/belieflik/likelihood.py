"""Belief likelihoods of repeated trials.

Every closed-form path here has a brute-force counterpart: build the joint
belief function on the product frame with :func:`combine_many` and read off
belief or plausibility of the sample event. :func:`verify_factorization`
compares the two on random models.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np

from belieflik.combination import Rule, combine_many
from belieflik.frames import BoxSubset, Frame, FrameError, ProductFrame, Subset, project
from belieflik.mass import MassFunction, belief, plausibility

PARAM_TOL = 1e-12


class FastPathUnavailable(ValueError):
    """The closed form does not apply to this model; use the brute-force path."""


@dataclass(frozen=True)
class LikelihoodPair:
    lower: float
    upper: float
    conjecture_based: bool = False

    def __post_init__(self):
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"lower likelihood {self.lower} exceeds upper {self.upper}")


@dataclass(frozen=True)
class LikelihoodBound:
    """A single likelihood value tagged with whether it rests on an unproven factorization."""

    value: float
    conjecture_based: bool = False

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class TrialModel:
    masses: tuple[MassFunction, ...]
    rule: Rule = Rule.CONJUNCTIVE

    def __init__(self, masses: Sequence[MassFunction], rule: Rule | str = Rule.CONJUNCTIVE):
        masses = tuple(masses)
        if not masses:
            raise ValueError("a trial model needs at least one trial")
        for m in masses:
            if isinstance(m.frame, ProductFrame):
                raise FrameError("per-trial masses must live on plain frames")
        object.__setattr__(self, "masses", masses)
        object.__setattr__(self, "rule", Rule(rule))

    @property
    def n(self) -> int:
        return len(self.masses)

    @cached_property
    def product(self) -> ProductFrame:
        return ProductFrame(m.frame for m in self.masses)

    @cached_property
    def joint(self) -> MassFunction:
        """Brute-force joint mass function on the product frame (cached)."""
        return combine_many(self.masses, self.rule)

    def is_binary(self) -> bool:
        return all(len(m.frame) == 2 for m in self.masses)

    def check_sample(self, sample: Sequence[str]) -> tuple[str, ...]:
        sample = tuple(sample)
        if len(sample) != self.n:
            raise FrameError(f"sample of length {len(sample)} for {self.n} trials")
        for m, x in zip(self.masses, sample):
            m.frame.index(x)
        return sample


def _require_conjunctive(model: TrialModel) -> None:
    if model.rule is Rule.DISJUNCTIVE:
        raise FastPathUnavailable("conjunctive factorization does not hold under the disjunctive rule")


def _require_binary(model: TrialModel, what: str) -> None:
    if not model.is_binary():
        raise FastPathUnavailable(f"{what} is only established for binary frames")


def belief_likelihood_bruteforce(model: TrialModel, event: Subset) -> float:
    if event.frame != model.product:
        raise FrameError("event does not live on the model's product frame")
    return belief(model.joint, event)


def plausibility_bruteforce(model: TrialModel, event: Subset) -> float:
    if event.frame != model.product:
        raise FrameError("event does not live on the model's product frame")
    return plausibility(model.joint, event)


def sharp_bruteforce(model: TrialModel, sample: Sequence[str]) -> LikelihoodPair:
    """Lower and upper likelihood of a sharp sample straight from the joint."""
    event = model.product.singleton(model.check_sample(sample))
    return LikelihoodPair(belief_likelihood_bruteforce(model, event),
                          plausibility_bruteforce(model, event))


def lower_likelihood_sharp(model: TrialModel, sample: Sequence[str]) -> float:
    """Product of the per-trial singleton masses; any finite frames."""
    _require_conjunctive(model)
    sample = model.check_sample(sample)
    return math.prod(m[(x,)] for m, x in zip(model.masses, sample))


def upper_likelihood_sharp(model: TrialModel, sample: Sequence[str]) -> LikelihoodBound:
    """Product of per-trial singleton plausibilities (binary frames only).

    Result is tagged ``conjecture_based``; audit it with :func:`verify_factorization`.
    """
    _require_conjunctive(model)
    _require_binary(model, "plausibility factorization")
    sample = model.check_sample(sample)
    value = math.prod(plausibility(m, (x,)) for m, x in zip(model.masses, sample))
    return LikelihoodBound(value, conjecture_based=True)


def sharp_likelihoods(model: TrialModel, sample: Sequence[str]) -> LikelihoodPair:
    lower = lower_likelihood_sharp(model, sample)
    upper = upper_likelihood_sharp(model, sample)
    return LikelihoodPair(lower, upper.value, conjecture_based=True)


def belief_likelihood_box(model: TrialModel, box: BoxSubset | Sequence[Subset]) -> float:
    _require_conjunctive(model)
    _require_binary(model, "box factorization")
    parts = box.components if isinstance(box, BoxSubset) else tuple(box)
    if len(parts) != model.n:
        raise FrameError(f"box of arity {len(parts)} for {model.n} trials")
    return math.prod(belief(m, a) for m, a in zip(model.masses, parts))


def disjunctive_complement_likelihood(model: TrialModel, sample: Sequence[str]) -> LikelihoodPair:
    """Belief and plausibility of the complement of a sharp sample under the union rule."""
    if model.rule is not Rule.DISJUNCTIVE:
        raise FastPathUnavailable("complement factorization needs the disjunctive rule")
    _require_binary(model, "complement factorization")
    sample = model.check_sample(sample)
    lower = math.prod(belief(m, ~m.frame.singleton(x)) for m, x in zip(model.masses, sample))
    if model.n == 1:
        # a lone trial keeps its own singleton focal elements
        (m,), (x,) = model.masses, sample
        return LikelihoodPair(lower, plausibility(m, ~m.frame.singleton(x)))
    return LikelihoodPair(lower, 1.0)


def complement_event(model: TrialModel, sample: Sequence[str]) -> Subset:
    return ~model.product.singleton(model.check_sample(sample))


# -- focal structure -----------------------------------------------------------

@dataclass(frozen=True)
class FocalReport:
    rule: Rule
    count: int
    predicted_count: int | None
    all_boxes: bool
    all_complements: bool | None
    max_mass_deviation: float | None

    def to_json(self) -> dict:
        return {
            "rule": self.rule.value,
            "count": self.count,
            "predicted_count": self.predicted_count,
            "all_boxes": self.all_boxes,
            "all_complements": self.all_complements,
            "max_mass_deviation": self.max_mass_deviation,
        }


def _projections(s: Subset) -> list[Subset]:
    return [project(s, i) for i in range(s.frame.arity)]


def enumerate_focal_structure(model: TrialModel) -> FocalReport:
    """Inspect the joint focal elements against their predicted product forms."""
    joint = model.joint
    product = model.product
    count = sum(1 for bits in joint.masses if bits)
    boxes = True
    deviation = 0.0
    complements = None
    predicted_count = None

    if model.rule is not Rule.DISJUNCTIVE:
        predicted_count = math.prod(len(m) for m in model.masses)
        for s, mass in joint.items():
            if s.is_empty():
                continue
            parts = _projections(s)
            if len(s) != math.prod(len(p) for p in parts):
                boxes = False
                continue
            predicted = math.prod(m.masses.get(p.bits, 0.0) for m, p in zip(model.masses, parts))
            deviation = max(deviation, abs(mass - predicted))
    else:
        boxes = all(s.is_full() or len(s) == math.prod(len(p) for p in _projections(s))
                    for s in joint.focal_elements())
        if model.is_binary():
            complements = True
            full_support = all(len(m) == 3 for m in model.masses)
            predicted_count = 2**model.n + 1 if full_support else None
            predicted_rest = 1.0
            for s, mass in joint.items():
                if s.is_full():
                    continue
                if len(s) != product.size - 1:
                    complements = False
                    continue
                (missing,) = (~s).outcomes()
                predicted = math.prod(
                    m[~m.frame.singleton(x)] for m, x in zip(model.masses, missing))
                predicted_rest -= predicted
                deviation = max(deviation, abs(mass - predicted))
            full_mass = joint.masses.get(product.full_bits, 0.0)
            deviation = max(deviation, abs(full_mass - predicted_rest))
        else:
            deviation = None
    return FocalReport(model.rule, count, predicted_count, boxes, complements, deviation)


# -- random models and factorization audit --------------------------------------

BINARY = Frame(["T", "F"])


def random_full_support_mass(frame: Frame, rng: np.random.Generator, floor: float = 0.05) -> MassFunction:
    """Random mass on every nonempty subset of ``frame``, each at least ``floor``."""
    subsets = range(1, frame.full_bits + 1)
    k = len(subsets)
    floor = min(floor, 0.5 / k)
    w = rng.dirichlet(np.ones(k))
    return MassFunction(frame, {b: floor + (1 - floor * k) * float(wi) for b, wi in zip(subsets, w)})


def random_model(n: int, rng: np.random.Generator, rule: Rule | str = Rule.CONJUNCTIVE,
                 frame: Frame = BINARY) -> TrialModel:
    return TrialModel([random_full_support_mass(frame, rng) for _ in range(n)], rule)


def bernoulli_mass(p: float, q: float, frame: Frame = BINARY) -> MassFunction:
    params = BeliefParams(p, q)
    t, f = frame.labels
    return MassFunction(frame, {frame.singleton(t).bits: params.p,
                                frame.singleton(f).bits: params.q,
                                frame.full_bits: params.r})


CLAIMS = ("lower_sharp", "upper_sharp", "box", "disjunctive_complement")


@dataclass
class VerificationReport:
    n: int
    trials: int
    seed: int
    max_discrepancy: dict[str, float] = field(default_factory=dict)
    discrepancy_table: list[dict] = field(default_factory=list)
    counterexamples: list[dict] = field(default_factory=list)
    equidistributed_all_true: float = 0.0
    tolerance: float = 1e-12

    PROVEN = ("lower_sharp", "box", "disjunctive_complement")

    @property
    def proven_ok(self) -> bool:
        return (all(self.max_discrepancy[c] < self.tolerance for c in self.PROVEN)
                and self.equidistributed_all_true < self.tolerance)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "trials": self.trials,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "claims": {
                c: {"max_discrepancy": self.max_discrepancy[c],
                    "status": "conjecture" if c == "upper_sharp" else "proven",
                    "holds": self.max_discrepancy[c] < self.tolerance}
                for c in CLAIMS
            },
            "equidistributed_all_true": self.equidistributed_all_true,
            "proven_ok": self.proven_ok,
            "conjecture_table": self.discrepancy_table,
            "counterexamples": self.counterexamples,
        }


def _mass_summary(m: MassFunction) -> dict:
    return {"focal": [{"set": s.to_json(), "mass": v} for s, v in m.items()]}


def verify_factorization(n: int, trials: int = 100, seed: int = 0, tol: float = 1e-12,
                         cap: int | None = None) -> VerificationReport:
    """Compare every fast path with the product-frame oracle on random binary models."""
    product = ProductFrame([BINARY] * n)
    product.check_cap(cap)
    rng = np.random.default_rng(seed)
    report = VerificationReport(n, trials, seed, {c: 0.0 for c in CLAIMS}, tolerance=tol)
    samples = list(product.tuples())
    parts = [BINARY.singleton("T"), BINARY.singleton("F"), BINARY.full()]
    boxes = [(box, product.box(box)) for box in itertools.product(parts, repeat=n)]
    for t in range(trials):
        conj = random_model(n, rng)
        disj = TrialModel(conj.masses, Rule.DISJUNCTIVE)
        worst_upper = 0.0
        for x in samples:
            oracle = sharp_bruteforce(conj, x)
            d_low = abs(lower_likelihood_sharp(conj, x) - oracle.lower)
            d_up = abs(upper_likelihood_sharp(conj, x).value - oracle.upper)
            comp = complement_event(disj, x)
            d_dis = abs(disjunctive_complement_likelihood(disj, x).lower
                        - belief_likelihood_bruteforce(disj, comp))
            d_dis = max(d_dis, abs(plausibility_bruteforce(disj, comp) - 1.0))
            report.max_discrepancy["lower_sharp"] = max(report.max_discrepancy["lower_sharp"], d_low)
            report.max_discrepancy["disjunctive_complement"] = max(
                report.max_discrepancy["disjunctive_complement"], d_dis)
            worst_upper = max(worst_upper, d_up)
            if d_up >= tol:
                report.counterexamples.append({
                    "trial": t, "sample": list(x), "discrepancy": d_up,
                    "masses": [_mass_summary(m) for m in conj.masses]})
        report.max_discrepancy["upper_sharp"] = max(report.max_discrepancy["upper_sharp"], worst_upper)
        report.discrepancy_table.append({"trial": t, "max_upper_discrepancy": worst_upper})
        for box, event in boxes:
            d_box = abs(belief_likelihood_box(conj, box) - belief_likelihood_bruteforce(conj, event))
            report.max_discrepancy["box"] = max(report.max_discrepancy["box"], d_box)
    # equidistributed masses on the all-success sample
    for _ in range(max(1, min(trials, 10))):
        m = random_full_support_mass(BINARY, rng)
        model = TrialModel([m] * n)
        allt = ("T",) * n
        q = m[("F",)]
        d = max(abs(upper_likelihood_sharp(model, allt).value - sharp_bruteforce(model, allt).upper),
                abs(sharp_bruteforce(model, allt).upper - (1 - q) ** n))
        report.equidistributed_all_true = max(report.equidistributed_all_true, d)
    return report


# -- Bernoulli trials ------------------------------------------------------------

@dataclass(frozen=True)
class BeliefParams:
    """Masses ``p`` of success, ``q`` of failure and ``r`` of ignorance on a binary trial."""

    p: float
    q: float

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or self.p + self.q > 1 + PARAM_TOL:
            raise ValueError(f"invalid belief parameters p={self.p}, q={self.q}")

    @property
    def r(self) -> float:
        return max(0.0, 1.0 - self.p - self.q)


@dataclass(frozen=True)
class BernoulliCount:
    k: int
    n: int

    def __post_init__(self):
        if self.n < 0 or not 0 <= self.k <= self.n:
            raise ValueError(f"invalid count k={self.k}, n={self.n}")


def bernoulli_likelihoods(params: BeliefParams, count: BernoulliCount) -> LikelihoodPair:
    p, q, k, n = params.p, params.q, count.k, count.n
    lower = p**k * q ** (n - k)
    upper = (1 - q) ** k * (1 - p) ** (n - k)
    return LikelihoodPair(lower, upper, conjecture_based=True)


def _argmax(values: np.ndarray) -> int:
    # first maximum in (p, q) lexicographic order
    return int(np.argmax(values))


@dataclass(frozen=True)
class Surface:
    count: BernoulliCount
    step: float
    p: np.ndarray
    q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @property
    def argmax_lower(self) -> tuple[float, float]:
        i = _argmax(self.lower)
        return float(self.p[i]), float(self.q[i])

    @property
    def argmax_upper(self) -> tuple[float, float]:
        i = _argmax(self.upper)
        return float(self.p[i]), float(self.q[i])

    def bayesian_section(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Grid points on ``p + q = 1`` with their lower and upper values."""
        on = np.isclose(self.p + self.q, 1.0, rtol=0, atol=1e-12)
        return self.p[on], self.lower[on], self.upper[on]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "q", "lower", "upper"])
        for row in zip(self.p, self.q, self.lower, self.upper):
            w.writerow([f"{v:.17g}" for v in row])
        return buf.getvalue()


def bernoulli_surface(count: BernoulliCount, step: float = 0.01) -> Surface:
    """Evaluate both likelihoods on the simplex grid ``p, q >= 0, p + q <= 1``."""
    if not 0 < step <= 0.5:
        raise ValueError(f"step must lie in (0, 0.5], got {step}")
    steps = int(math.floor(1.0 / step + 1e-9))
    i, j = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
    keep = (i + j) <= steps
    # row-major flatten keeps (p, q) in lexicographic order
    p = (i[keep] * step).astype(float)
    q = (j[keep] * step).astype(float)
    if abs(steps * step - 1.0) < 1e-9:
        p = i[keep] / steps
        q = j[keep] / steps
    k, n = count.k, count.n
    lower = p**k * q ** (n - k)
    upper = (1 - q) ** k * (1 - p) ** (n - k)
    return Surface(count, step, p, q, lower, upper)


def ratio_segment(count: BernoulliCount, t: Fraction | int) -> tuple[Fraction, Fraction]:
    """Point ``t`` of the segment from the vacuous mass to the empirical probability."""
    t = Fraction(t)
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    return t * Fraction(count.k, count.n), t * Fraction(count.n - count.k, count.n)
