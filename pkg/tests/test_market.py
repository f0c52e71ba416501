"""Exact equilibrium verification and positional domination."""

from fractions import Fraction
from itertools import permutations

import pytest

from cefai.core import all_bundles
from cefai.market import (
    Allocation,
    BundleRelation,
    CEPair,
    DimensionMismatchError,
    IncomeRegion,
    IncomeVector,
    PriceVector,
    ViolationKind,
    classify_bundle,
    is_dominated_by,
    verify_ce,
)

from conftest import chain_preference


def one_item_market():
    pref = chain_preference(1)
    return [pref, pref]


class TestVerifyCE:
    def test_unequal_incomes_single_item(self):
        profile = one_item_market()
        pair = CEPair(
            prices=PriceVector.of([2]),
            allocation=Allocation(m=1, bundles=(0b1, 0b0)),
        )
        report = verify_ce(profile, IncomeVector.of([2, 1]), pair)
        assert report.valid

    def test_equal_incomes_single_item(self):
        profile = one_item_market()
        pair = CEPair(
            prices=PriceVector.of([1]),
            allocation=Allocation(m=1, bundles=(0b1, 0b0)),
        )
        report = verify_ce(profile, IncomeVector.of([1, 1]), pair)
        assert not report.valid
        (violation,) = report.violations
        assert violation.agent == 1
        assert violation.kind is ViolationKind.AFFORDABLE_BETTER_BUNDLE
        assert violation.bundle == 0b1

    def test_strict_literal_mode_ignores_empty_handed_agents(self):
        # the literal own-bundle-price threshold trivializes the check for
        # an empty-handed agent; the income threshold does not
        profile = one_item_market()
        pair = CEPair(
            prices=PriceVector.of([1]),
            allocation=Allocation(m=1, bundles=(0b1, 0b0)),
        )
        incomes = IncomeVector.of([1, 1])
        assert not verify_ce(profile, incomes, pair).valid
        assert verify_ce(profile, incomes, pair, strict_literal=True).valid

    def test_budget_mismatch_reported(self):
        profile = one_item_market()
        pair = CEPair(
            prices=PriceVector.of([3]),
            allocation=Allocation(m=1, bundles=(0b1, 0b0)),
        )
        report = verify_ce(profile, IncomeVector.of([2, 1]), pair)
        kinds = {v.kind for v in report.violations}
        assert ViolationKind.BUDGET_MISMATCH in kinds

    def test_all_violations_reported_and_recheckable(self):
        # both agents prefer the full pair; give each a single item priced
        # wrongly so several violations coexist
        pref = chain_preference(2, 0b01, 0b10)
        profile = [pref, pref]
        pair = CEPair(
            prices=PriceVector.of([1, 1]),
            allocation=Allocation(m=2, bundles=(0b01, 0b10)),
        )
        incomes = IncomeVector.of([5, 5])
        report = verify_ce(profile, incomes, pair)
        assert not report.valid
        for v in report.violations:
            if v.kind is ViolationKind.BUDGET_MISMATCH:
                assert pair.prices.bundle_price(v.bundle) != incomes[v.agent]
            else:
                assert profile[v.agent].prefers(v.bundle, pair.allocation[v.agent])
                assert v.price <= v.threshold

    def test_dimension_mismatch(self):
        profile = one_item_market()
        pair = CEPair(
            prices=PriceVector.of([1]),
            allocation=Allocation(m=1, bundles=(0b1,)),
        )
        with pytest.raises(DimensionMismatchError):
            verify_ce(profile, IncomeVector.of([1, 1]), pair)


class TestAllocation:
    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            Allocation(m=2, bundles=(0b01, 0b01))

    def test_items_must_be_covered(self):
        with pytest.raises(ValueError):
            Allocation(m=2, bundles=(0b01, 0b00))

    def test_prices_positive(self):
        with pytest.raises(ValueError):
            PriceVector.of([1, 0])

    def test_incomes_positive(self):
        with pytest.raises(ValueError):
            IncomeVector.of([1, Fraction(0)])


POSITIONS_4 = {0: 1, 1: 2, 2: 3, 3: 4}  # item j picked at position j+1


def by_positions(*positions):
    return sum(1 << (p - 1) for p in positions)


class TestDomination:
    def test_pair_14_dominated_by_12(self):
        assert is_dominated_by(by_positions(1, 4), by_positions(1, 2), POSITIONS_4)

    def test_pair_14_dominates_34(self):
        assert is_dominated_by(by_positions(3, 4), by_positions(1, 4), POSITIONS_4)

    def test_pair_14_unrelated_to_234(self):
        x, y = by_positions(1, 4), by_positions(2, 3, 4)
        assert not is_dominated_by(x, y, POSITIONS_4)
        assert not is_dominated_by(y, x, POSITIONS_4)

    def test_classification_examples(self):
        own = by_positions(1, 4)
        assert classify_bundle(POSITIONS_4, own, by_positions(1, 3, 4)) \
            is BundleRelation.DOMINATING
        assert classify_bundle(POSITIONS_4, own, by_positions(1)) \
            is BundleRelation.DOMINATED
        assert classify_bundle(POSITIONS_4, own, by_positions(2, 3, 4)) \
            is BundleRelation.UNRELATED

    def test_antisymmetry_exhaustive_length_5(self):
        positions = {j: j + 1 for j in range(5)}
        for x in all_bundles(5):
            for y in all_bundles(5):
                if x == y:
                    continue
                assert not (
                    is_dominated_by(x, y, positions)
                    and is_dominated_by(y, x, positions)
                )

    def test_empty_bundle_dominated_by_everything(self):
        for y in range(1, 16):
            assert is_dominated_by(0, y, POSITIONS_4)
            assert not is_dominated_by(y, 0, POSITIONS_4)

    def test_position_order_irrelevant_to_antisymmetry(self):
        for perm in permutations(range(1, 5)):
            positions = {j: perm[j] for j in range(4)}
            for x in all_bundles(4):
                for y in all_bundles(4):
                    if x != y:
                        assert not (
                            is_dominated_by(x, y, positions)
                            and is_dominated_by(y, x, positions)
                        )


class TestIncomeRegion:
    def region(self):
        return IncomeRegion.of(
            2, [(1, -1)], reference=IncomeVector.of([2, 1])
        )  # a > b

    def test_contains(self):
        region = self.region()
        assert region.contains(IncomeVector.of([3, 1]))
        assert not region.contains(IncomeVector.of([1, 3]))

    def test_sample_deterministic_and_inside(self):
        region = self.region()
        first = region.sample(seed=4, count=10)
        second = region.sample(seed=4, count=10)
        assert first == second
        assert all(region.contains(p) for p in first)

    def test_reference_checked(self):
        with pytest.raises(ValueError):
            IncomeRegion.of(2, [(1, -1)], reference=IncomeVector.of([1, 2]))
