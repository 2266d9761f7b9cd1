import math
import random

import pytest

from belieflik.combination import (
    Rule,
    TotalConflictError,
    combine,
    combine_conjunctive,
    combine_dempster,
    combine_disjunctive,
    combine_many,
    condition,
)
from belieflik.frames import BoxSubset, Frame, FrameMismatchError, ProductFrame, SizeCapError, Subset, project
from belieflik.likelihood import bernoulli_mass
from belieflik.mass import belief, categorical, make_mass, vacuous, vacuous_extension

from conftest import random_mass, to_frozen
from oracles import conj, dempster, disj, product_joint

TF = Frame(["T", "F"])
PAIR_A = make_mass(TF, {"T": 0.9, "F": 0.1})
PAIR_B = make_mass(TF, {"T": 0.1, "F": 0.9})


class TestConjunctive:
    def test_conflicting_pair(self):
        m = combine_conjunctive(PAIR_A, PAIR_B)
        assert m.conflict == pytest.approx(0.82, abs=1e-15)
        assert m["T"] == pytest.approx(0.09, abs=1e-15)
        assert m["F"] == pytest.approx(0.09, abs=1e-15)

    def test_vacuous_is_neutral(self, m532):
        m = combine_conjunctive(vacuous(TF), m532)
        assert m.conflict == 0.0
        assert dict(m.masses) == dict(m532.masses)

    def test_extensions_give_product_boxes(self, m532):
        P = ProductFrame([TF, TF])
        joint = combine_conjunctive(vacuous_extension(m532, P, 0), vacuous_extension(m532, P, 1))
        assert len(joint) == 9
        for a1 in m532.focal_elements():
            for a2 in m532.focal_elements():
                box = BoxSubset((a1, a2)).to_subset(P)
                assert joint[box] == pytest.approx(m532[a1] * m532[a2], abs=1e-16)

    def test_frame_mismatch(self):
        with pytest.raises(FrameMismatchError):
            combine_conjunctive(PAIR_A, vacuous(Frame(["a", "b"])))


class TestDempster:
    def test_conflicting_pair(self):
        m = combine_dempster(PAIR_A, PAIR_B)
        assert m["T"] == pytest.approx(0.5, abs=1e-15)
        assert m["F"] == pytest.approx(0.5, abs=1e-15)

    def test_vacuous_is_neutral(self, m532):
        assert combine_dempster(vacuous(TF), m532) == m532

    def test_total_conflict(self):
        with pytest.raises(TotalConflictError):
            combine_dempster(categorical(TF, "T"), categorical(TF, "F"))


class TestDisjunctive:
    def test_extensions_hand_enumerated(self, m532):
        P = ProductFrame([TF, TF])
        joint = combine_disjunctive(vacuous_extension(m532, P, 0), vacuous_extension(m532, P, 1))
        expect = {("F", "F"): 0.25, ("T", "T"): 0.09, ("T", "F"): 0.15, ("F", "T"): 0.15}
        for t, v in expect.items():
            assert joint[~P.singleton(t)] == pytest.approx(v, abs=1e-15)
        assert joint[P.full()] == pytest.approx(0.36, abs=1e-15)
        assert len(joint) == 5

    def test_full_categorical_absorbs(self, m532):
        assert combine_disjunctive(categorical(TF, "TF"), m532) == vacuous(TF)


class TestCondition:
    def test_simple_support(self):
        m = make_mass(TF, {"T": 0.5, "TF": 0.5})
        assert condition(m, "T") == categorical(TF, "T")

    def test_full_is_identity(self, m532):
        assert condition(m532, "TF") == m532

    def test_renormalizes(self, m532):
        assert condition(m532, "F") == categorical(TF, "F")

    def test_zero_plausibility(self):
        with pytest.raises(TotalConflictError):
            condition(categorical(TF, "T"), "F")


@pytest.mark.parametrize("size", [1, 2, 3, 4])
@pytest.mark.parametrize("rule", list(Rule))
def test_commutative_and_matches_oracle(size, rule, rng):
    F = Frame([f"w{i}" for i in range(size)])
    oracle = {Rule.CONJUNCTIVE: conj, Rule.DEMPSTER: dempster, Rule.DISJUNCTIVE: disj}[rule]
    for _ in range(25):
        a, b = random_mass(F, rng), random_mass(F, rng)
        try:
            ab = combine(a, b, rule)
        except TotalConflictError:
            assert sum(v for s, v in conj(to_frozen(a), to_frozen(b)).items() if s) < 1e-12
            continue
        assert ab == combine(b, a, rule)
        assert math.fsum(ab.masses.values()) == pytest.approx(1.0, abs=1e-12)
        ref = oracle(to_frozen(a), to_frozen(b))
        got = {frozenset(s.outcomes()): v for s, v in ab.items()}
        ref = {s: v for s, v in ref.items() if v >= 1e-15}
        assert got.keys() == ref.keys()
        for s in ref:
            assert got[s] == pytest.approx(ref[s], abs=1e-12)


@pytest.mark.parametrize("size", [2, 3, 4])
def test_disjunctive_beliefs_multiply(size, rng):
    F = Frame([f"w{i}" for i in range(size)])
    for _ in range(25):
        a, b = random_mass(F, rng), random_mass(F, rng)
        ab = combine_disjunctive(a, b)
        for bits in range(F.full_bits + 1):
            e = Subset(F, bits)
            assert belief(ab, e) == pytest.approx(belief(a, e) * belief(b, e), abs=1e-12)


class TestCombineMany:
    def test_conjunctive_three(self, m532):
        joint = combine_many([m532] * 3, "conjunctive")
        assert len(joint) == 27
        assert joint[joint.frame.singleton(("T", "T", "T"))] == pytest.approx(0.125, abs=1e-16)
        assert joint.conflict == 0.0

    def test_disjunctive_three(self, m532):
        assert len(combine_many([m532] * 3, "disjunctive")) == 9

    def test_vacuous_input(self, m532):
        joint = combine_many([vacuous(TF), m532], "conjunctive")
        assert dict(joint.masses) == dict(vacuous_extension(m532, joint.frame, 1).masses)

    def test_dempster_equals_conjunctive(self, rng):
        ms = [random_mass(TF, rng) for _ in range(3)]
        a = combine_many(ms, "dempster")
        b = combine_many(ms, "conjunctive")
        assert dict(a.masses) == pytest.approx(dict(b.masses), abs=1e-15)

    def test_size_cap(self):
        with pytest.raises(SizeCapError):
            combine_many([vacuous(TF)] * 21)
        with pytest.raises(SizeCapError):
            combine_many([vacuous(TF)] * 3, cap=4)

    @pytest.mark.parametrize("rule", ["conjunctive", "disjunctive"])
    def test_shuffle_invariance(self, rule, rng):
        F3 = Frame(["a", "b", "c"])
        frames = [TF, F3, TF]
        ms = [random_mass(f, rng) for f in frames]
        base = combine_many(ms, rule)
        perm = [2, 0, 1]
        shuffled = combine_many([ms[i] for i in perm], rule)
        # map shuffled tuples back to the original order
        back = {}
        for s, v in shuffled.items():
            tuples = [tuple(t[perm.index(j)] for j in range(3)) for t in s.outcomes()]
            back[base.frame.subset(tuples).bits] = v
        assert back.keys() == dict(base.masses).keys()
        for bits, v in base.masses.items():
            assert back[bits] == pytest.approx(v, abs=1e-12)

    @pytest.mark.parametrize("rule", ["conjunctive", "dempster", "disjunctive"])
    def test_fold_order_matches_oracle(self, rule, rng):
        F3 = Frame(["a", "b", "c"])
        frames = [TF, F3, TF]
        ms = [random_mass(f, rng) for f in frames]
        ref, _ = product_joint([to_frozen(m) for m in ms], [f.labels for f in frames], rule)
        got = combine_many(ms, rule)
        got_f = {frozenset(s.outcomes()): v for s, v in got.items()}
        ref = {s: v for s, v in ref.items() if v >= 1e-15}
        assert got_f.keys() == ref.keys()
        for s in ref:
            assert got_f[s] == pytest.approx(ref[s], abs=1e-12)

    def test_random_fold_order(self, rng):
        # pairwise folds in any order give the same joint
        ms = [random_mass(TF, rng) for _ in range(4)]
        P = ProductFrame([TF] * 4)
        ext = [vacuous_extension(m, P, i) for i, m in enumerate(ms)]
        ref = combine_many(ms, "disjunctive")
        order = list(range(4))
        random.Random(3).shuffle(order)
        acc = ext[order[0]]
        for i in order[1:]:
            acc = combine_disjunctive(acc, ext[i])
        for bits, v in ref.masses.items():
            assert acc.masses[bits] == pytest.approx(v, abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("card", [2, 3])
def test_conjunctive_focal_elements_are_boxes(n, card, rng):
    F = Frame([f"v{i}" for i in range(card)])
    ms = [random_mass(F, rng, max_focal=3) for _ in range(n)]
    joint = combine_many(ms, "conjunctive")
    assert len(joint) == math.prod(len(m) for m in ms)
    for s, v in joint.items():
        parts = [project(s, i) for i in range(n)]
        assert len(s) == math.prod(len(p) for p in parts)
        assert v == pytest.approx(math.prod(m[p] for m, p in zip(ms, parts)), abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_disjunctive_focal_elements_are_complements(n):
    ps = [(0.5, 0.3), (0.2, 0.6), (0.4, 0.4), (0.1, 0.1), (0.7, 0.2), (0.3, 0.35)][:n]
    ms = [bernoulli_mass(p, q) for p, q in ps]
    joint = combine_many(ms, "disjunctive")
    P = joint.frame
    assert len(joint) == 2**n + 1
    rest = 1.0
    for t in P.tuples():
        expected = math.prod(m[~TF.singleton(x)] for m, x in zip(ms, t))
        rest -= expected
        assert joint[~P.singleton(t)] == pytest.approx(expected, abs=1e-15)
    assert joint[P.full()] == pytest.approx(rest, abs=1e-12)
