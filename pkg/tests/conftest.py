"""Shared helpers for the test suite."""

from __future__ import annotations

import random
import sys
from fractions import Fraction
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

from cefai.core import PartialRelations, complete_partial, random_preference
from cefai.pixep import AffinePrice, ChoiceNode, Leaf, Pixep


def chain_preference(m: int, *chain):
    """Preference from a best-to-worst chain of bundle masks."""
    return complete_partial(PartialRelations.from_chain(m, chain))


def zero_priced_pixep(agents: list[int]) -> Pixep:
    return Pixep.of((agent, AffinePrice.of(0)) for agent in agents)


def random_leaf_game(rng: random.Random, m: int, n: int) -> Leaf:
    return Leaf(zero_priced_pixep([rng.randrange(n) for _ in range(m)]), "leaf")


def random_game(rng: random.Random, m: int, n: int):
    """A leaf or a small choice tree over leaves, with distinct labels."""
    shape = rng.randrange(4)
    if shape == 0:
        return random_leaf_game(rng, m, n)
    if shape in (1, 2):
        return ChoiceNode(
            agent=rng.randrange(n),
            options=(
                ("first", random_leaf_game(rng, m, n)),
                ("default", random_leaf_game(rng, m, n)),
            ),
        )
    return ChoiceNode(
        agent=rng.randrange(n),
        options=(
            ("first", random_leaf_game(rng, m, n)),
            (
                "rest",
                ChoiceNode(
                    agent=rng.randrange(n),
                    options=(
                        ("second", random_leaf_game(rng, m, n)),
                        ("default", random_leaf_game(rng, m, n)),
                    ),
                ),
            ),
        ),
    )


def random_profile(rng: random.Random, m: int, n: int):
    return tuple(random_preference(m, seed=rng.randrange(10**9)) for _ in range(n))


@pytest.fixture
def rng():
    return random.Random(20240917)
