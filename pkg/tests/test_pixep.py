"""Priced picking sequences: requirements, ε resolution, equilibrium plays."""

import random
from fractions import Fraction

import pytest

from cefai.core import PartialRelations, complete_partial
from cefai.market import DimensionMismatchError, IncomeVector
from cefai.pixep import (
    AffinePrice,
    ChoiceNode,
    EmptyEpsilonIntervalError,
    Leaf,
    NoValidSpeError,
    Pixep,
    R1ViolationError,
    check_requirements,
    execute_to_ce,
    resolve_epsilon,
    spe_outcomes,
)

from conftest import chain_preference, random_game, random_profile
from spe_oracle import all_profile_spe_plays, count_profiles, tree_spe_plays

X, Y, Z = 0b001, 0b010, 0b100


def aba_pixep(a, b, c):
    return Pixep.of(
        [
            (0, AffinePrice.of(a - c, -1)),
            (1, AffinePrice.of(b)),
            (0, AffinePrice.of(c, +1)),
        ]
    )


class TestRequirements:
    def test_three_item_split_interval(self):
        # prices a-c-ε, b, c+ε with incomes 10, 6, 3 and the third agent absent
        pix = aba_pixep(10, 6, 3)
        interval = check_requirements(pix, IncomeVector.of([10, 6, 3]))
        assert interval.lo == 0
        assert interval.hi == 1  # binding: 10 - 3 - eps > 6
        assert resolve_epsilon(pix, IncomeVector.of([10, 6, 3])) == Fraction(1, 2)

    def test_single_agent_run_interval(self):
        # prices a-2b-2ε, b+ε, b+ε with incomes 10, 3: run constraint caps ε at 1/3
        pix = Pixep.of(
            [
                (0, AffinePrice.of(4, -2)),
                (0, AffinePrice.of(3, +1)),
                (0, AffinePrice.of(3, +1)),
            ]
        )
        incomes = IncomeVector.of([10, 3])
        interval = check_requirements(pix, incomes)
        assert (interval.lo, interval.hi) == (0, Fraction(1, 3))
        assert resolve_epsilon(pix, incomes) == Fraction(1, 6)

    def test_empty_interval_when_income_too_small(self):
        # same shape with a = 8 < 3b: the run constraint forces ε ≤ -1/3
        pix = Pixep.of(
            [
                (0, AffinePrice.of(2, -2)),
                (0, AffinePrice.of(3, +1)),
                (0, AffinePrice.of(3, +1)),
            ]
        )
        with pytest.raises(EmptyEpsilonIntervalError):
            check_requirements(pix, IncomeVector.of([8, 3]))

    def test_r1_violation_names_agent(self):
        pix = Pixep.of([(0, AffinePrice.of(5)), (1, AffinePrice.of(4))])
        with pytest.raises(R1ViolationError) as err:
            check_requirements(pix, IncomeVector.of([5, 3]))
        assert err.value.agent == 1

    def test_r1_requires_epsilon_terms_to_cancel(self):
        pix = Pixep.of([(0, AffinePrice.of(3, +1)), (0, AffinePrice.of(2, +1))])
        with pytest.raises(R1ViolationError):
            check_requirements(pix, IncomeVector.of([5]))

    def test_r3_absent_agent_constraint(self):
        # last price b must strictly exceed the absent agent's income
        pix = Pixep.of([(0, AffinePrice.of(7)), (1, AffinePrice.of(4))])
        assert check_requirements(pix, IncomeVector.of([7, 4, 3])).hi is None
        with pytest.raises(EmptyEpsilonIntervalError):
            check_requirements(pix, IncomeVector.of([7, 4, 5]))

    def test_unknown_agent_rejected(self):
        pix = Pixep.of([(3, AffinePrice.of(5))])
        with pytest.raises(DimensionMismatchError):
            check_requirements(pix, IncomeVector.of([5, 3]))

    def test_resolved_prices_positive(self, rng):
        for _ in range(50):
            a = Fraction(rng.randint(8, 40), rng.randint(1, 4))
            b = a * Fraction(rng.randint(1, 7), 8)
            c = b * Fraction(rng.randint(1, 7), 8)
            pix = aba_pixep(a, b, c)
            incomes = IncomeVector.of([a, b, c])
            try:
                eps = resolve_epsilon(pix, incomes)
            except EmptyEpsilonIntervalError:
                continue
            assert all(price.at(eps) > 0 for _, price in pix.positions)


class TestSpeOutcomes:
    def worked_example(self):
        # Bob ranks singletons x > y > z; Alice prefers the pair yz to xz
        alice = chain_preference(3, Y | Z, X | Z)
        bob = chain_preference(3, X, Y, Z)
        return [alice, bob]

    def test_worked_example_allocation(self):
        game = Leaf(Pixep.of([(0, AffinePrice.of(0))] * 2 + [(1, AffinePrice.of(0))]))
        # sequence ABA: positions 0, 2 for Alice, 1 for Bob
        game = Leaf(
            Pixep.of(
                [(0, AffinePrice.of(0)), (1, AffinePrice.of(0)), (0, AffinePrice.of(0))]
            )
        )
        outcomes = spe_outcomes(game, self.worked_example())
        allocations = {tuple(e.allocation.bundles) for e in outcomes}
        assert allocations == {(Y | Z, X)}
        first_picks = {e.picks[0][2] for e in outcomes}
        assert first_picks == {1, 2}  # picking y or z first both support yz

    def test_two_picks_one_agent(self):
        game = Leaf(Pixep.of([(0, AffinePrice.of(0)), (0, AffinePrice.of(0))]))
        pref = chain_preference(2, 0b01)
        outcomes = spe_outcomes(game, [pref])
        assert len(outcomes) == 2  # both pick orders, same bundle
        assert {tuple(e.allocation.bundles) for e in outcomes} == {(0b11,)}

    def test_determinism(self, rng):
        for _ in range(20):
            m, n = rng.choice([(2, 2), (3, 2), (3, 3), (4, 3)])
            game = random_game(rng, m, n)
            profile = random_profile(rng, m, n)
            first = [(e.path, e.picks) for e in spe_outcomes(game, profile)]
            second = [(e.path, e.picks) for e in spe_outcomes(game, profile)]
            assert first == second

    def test_agrees_with_history_tree_oracle(self, rng):
        for _ in range(120):
            m = rng.choice([2, 3, 4])
            n = rng.randint(1, 3)
            game = random_game(rng, m, n)
            profile = random_profile(rng, m, n)
            engine = {(e.path, tuple(i for _, _, i in e.picks))
                      for e in spe_outcomes(game, profile)}
            oracle = tree_spe_plays(game, profile)
            assert engine == oracle

    def test_agrees_with_all_profile_oracle(self, rng):
        checked = 0
        while checked < 60:
            m = rng.choice([2, 3])
            n = rng.randint(1, 3)
            game = random_game(rng, m, n)
            if not isinstance(game, Leaf):
                continue
            profile = random_profile(rng, m, n)
            if count_profiles(game.pixep, m) > 50_000:
                continue
            engine = {tuple(i for _, _, i in e.picks)
                      for e in spe_outcomes(game, profile)}
            oracle = all_profile_spe_plays(game.pixep, profile)
            assert engine == oracle
            checked += 1

    def test_contiguous_tail_agent_gets_best_block(self, rng):
        # an agent whose turns form the final contiguous block receives the
        # best k-subset of what remains when the block starts
        for _ in range(60):
            m = rng.choice([3, 4])
            n = 2
            k = rng.randint(1, m - 1)
            agents = [0] * (m - k) + [1] * k
            game = Leaf(Pixep.of((a, AffinePrice.of(0)) for a in agents))
            profile = random_profile(rng, m, n)
            for e in spe_outcomes(game, profile):
                remaining = 0
                for pos, _, item in e.picks[m - k:]:
                    remaining |= 1 << item
                best = max(
                    (b for b in range(1 << m) if b & ~remaining == 0
                     and bin(b).count("1") == k),
                    key=profile[1].rank_of,
                )
                assert e.allocation[1] == best


class TestExecuteToCE:
    def test_worked_example_prices(self):
        alice = chain_preference(3, Y | Z, X | Z)
        bob = chain_preference(3, X, Y, Z)
        carl = chain_preference(3)
        incomes = IncomeVector.of([10, 6, 3])
        game = Leaf(aba_pixep(10, 6, 3))
        results = execute_to_ce(game, [alice, bob, carl], incomes)
        assert results
        execution, pair = results[0]
        assert execution.epsilon == Fraction(1, 2)
        assert pair.allocation.bundles == (Y | Z, X, 0)
        assert tuple(pair.prices) == (6, Fraction(13, 2), Fraction(7, 2))

    def test_requirements_checked_before_solving(self):
        bad = Leaf(Pixep.of([(0, AffinePrice.of(5)), (1, AffinePrice.of(4))]))
        pref = chain_preference(2)
        with pytest.raises(R1ViolationError):
            execute_to_ce(bad, [pref, pref], IncomeVector.of([5, 3]))

    def test_equal_incomes_break_the_last_price_requirement(self):
        # one item, two agents, equal incomes: the absent agent could always
        # afford the item, so no ε works
        pix = Pixep.of([(0, AffinePrice.of(5))])
        pref = chain_preference(1)
        with pytest.raises(EmptyEpsilonIntervalError):
            execute_to_ce(Leaf(pix), [pref, pref], IncomeVector.of([5, 5]))

    def test_no_valid_play_raises(self):
        # a profile whose market admits no equilibrium at all: every play of
        # any requirement-satisfying game must fail verification
        from cefai.instances import counterexample_4x3
        from cefai.solver import _build_game

        inst = counterexample_4x3()
        profile = list(inst.completed_profile())
        game = _build_game("m4n3:range3", inst.reference.t, 4)
        with pytest.raises(NoValidSpeError):
            execute_to_ce(game, profile, inst.reference)
