"""Bundled instances and income samplers."""

from fractions import Fraction

import pytest

from cefai.core import (
    all_bundles,
    is_subset,
    parse_bundle,
    satisfies_relations,
)
from cefai.instances import (
    counterexample_4x3,
    counterexample_4x4,
    counterexample_5x2,
    random_generic_incomes,
    stratified_incomes,
)
from cefai.market import EmptyRegionSamplerError, IncomeVector
from cefai.solver import is_generic, range_labels, range_predicates


class TestCounterexample4x4:
    def test_reference_chain_strict(self):
        a, b, c, d = counterexample_4x4().reference
        chain = [2 * b, 2 * c, b + d, a, c + d, 2 * d, b, c, d]
        assert all(hi > lo for hi, lo in zip(chain, chain[1:]))
        assert (a, b, c, d) == (Fraction(27, 2), 9, 8, 5)

    def test_completions_satisfy_relations(self):
        inst = counterexample_4x4()
        profile = inst.completed_profile()
        for pref, rel in zip(profile, inst.relations):
            assert satisfies_relations(pref, rel)
        for seed in range(5):
            for pref, rel in zip(inst.random_profile(seed), inst.relations):
                assert satisfies_relations(pref, rel)

    def test_additive_instantiation_fits_the_first_agent(self):
        from cefai.core import additive_preference

        inst = counterexample_4x4()
        additive = additive_preference(4, [11, 7, 5, 3])
        assert satisfies_relations(additive, inst.relations[0])

    def test_region_contains_reference(self):
        inst = counterexample_4x4()
        assert inst.region.contains(inst.reference)


class TestCounterexample5x2:
    def test_reference_in_band(self):
        a, b = counterexample_5x2().reference
        assert a > b > Fraction(3, 4) * a

    def test_full_set_on_top(self):
        inst = counterexample_5x2()
        for pref in inst.completed_profile():
            assert pref.rank_of(0b11111) == 31

    def test_second_agent_chain(self):
        inst = counterexample_5x2()
        names = inst.item_names
        bob = inst.completed_profile()[1]
        vw = parse_bundle("vw", names)
        v = parse_bundle("v", names)
        w = parse_bundle("w", names)
        assert bob.prefers(vw, v) and bob.prefers(v, w)
        for text in ("xy", "xz", "yz"):
            assert bob.prefers(w, parse_bundle(text, names))

    def test_group_classes_cover_all_bundles_mentioned(self):
        inst = counterexample_5x2()
        # every quartet outranks every triplet of the vwx group for Alice
        alice = inst.completed_profile()[0]
        names = inst.item_names
        quartets = [b for b in all_bundles(5) if bin(b).count("1") == 4]
        for q in quartets:
            for text in ("vwx", "vwy", "vwz"):
                assert alice.prefers(q, parse_bundle(text, names))


class TestCounterexample4x3:
    def test_reference_point(self):
        inst = counterexample_4x3()
        assert tuple(inst.reference) == (16, 9, 6)
        assert inst.region.contains(inst.reference)
        a, b, c = inst.reference
        assert 2 * b > a > b + c and a < 3 * c and b < 2 * c

    def test_profile_is_fully_pinned(self):
        # the chains assert a total order: every completion is identical
        inst = counterexample_4x3()
        assert inst.completed_profile() == inst.random_profile(seed=99)


class TestSamplers:
    def test_stratified_hits_exactly_one_range(self):
        for m, n in [(4, 3), (4, 2)]:
            for label in range_labels(m, n):
                for point in stratified_incomes(m, n, label, seed=1, count=4):
                    assert is_generic(point, m)
                    matches = [
                        lab
                        for lab, pred in range_predicates(m, n)
                        if pred(point.t)
                    ]
                    assert matches == [label]

    def test_deterministic(self):
        first = stratified_incomes(4, 3, "m4n3:range4", seed=5, count=6)
        second = stratified_incomes(4, 3, "m4n3:range4", seed=5, count=6)
        assert first == second

    def test_unknown_label(self):
        with pytest.raises(ValueError):
            stratified_incomes(4, 3, "range99", seed=0, count=1)

    def test_generic_sampler(self):
        for point in random_generic_incomes(4, 3, seed=2, count=5):
            assert is_generic(point, 4)
            assert list(point) == sorted(point, reverse=True)
