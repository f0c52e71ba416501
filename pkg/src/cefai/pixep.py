"""Priced picking sequences and their subgame-perfect equilibria.

A *pixep* is a picking sequence in which every position carries a price
that is affine in a symbolic slack ε: whoever picks at a position pays
that position's price for the item taken.  Three requirements make a
pixep usable as an equilibrium device:

  R1  per agent, the position prices sum exactly to the agent's income
      (identically in ε);
  R2  prices decrease along the sequence, strictly whenever the picking
      turn switches between agents;
  R3  the last price strictly exceeds the income of every agent who
      never picks.

``check_requirements`` verifies R1 exactly and reduces R2/R3 to an
interval of feasible ε values; ``resolve_epsilon`` picks the midpoint.

Games are either a single pixep (a :class:`Leaf`) or a sequential
choice among sub-games (a :class:`ChoiceNode`): the choosing agent may
take an earlier option only when strictly better off than under the
default (the last option).  ``spe_outcomes`` enumerates *all* plays
that arise in some subgame-perfect equilibrium; agents compare final
bundles only, so prices never enter the strategic analysis.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

from .core import Bundle, PreferenceOrder, format_bundle, items_of
from .market import (
    Allocation,
    CEPair,
    DimensionMismatchError,
    IncomeVector,
    PriceVector,
    verify_ce,
)


class R1ViolationError(ValueError):
    """An agent's position prices do not sum to the agent's income."""

    def __init__(self, agent: int, detail: str = ""):
        self.agent = agent
        super().__init__(f"price sum of agent {agent} misses their income{detail}")


class EmptyEpsilonIntervalError(ValueError):
    """No ε > 0 satisfies the price requirements."""


class NoValidSpeError(RuntimeError):
    """No subgame-perfect play of the game produced a valid equilibrium."""


@dataclass(frozen=True)
class AffinePrice:
    """A price of the form ``c0 + c1·ε``."""

    c0: Fraction
    c1: Fraction = Fraction(0)

    @staticmethod
    def of(c0: Fraction | int | str, c1: Fraction | int | str = 0) -> "AffinePrice":
        return AffinePrice(Fraction(c0), Fraction(c1))

    def at(self, eps: Fraction) -> Fraction:
        return self.c0 + self.c1 * eps

    def __add__(self, other: "AffinePrice") -> "AffinePrice":
        return AffinePrice(self.c0 + other.c0, self.c1 + other.c1)

    def __sub__(self, other: "AffinePrice") -> "AffinePrice":
        return AffinePrice(self.c0 - other.c0, self.c1 - other.c1)

    def __str__(self) -> str:
        if self.c1 == 0:
            return str(self.c0)
        sign = "+" if self.c1 > 0 else "-"
        mag = abs(self.c1)
        eps = "ε" if mag == 1 else f"{mag}ε"
        return f"{self.c0} {sign} {eps}"


@dataclass(frozen=True)
class Pixep:
    """A picking sequence with a price attached to each position."""

    positions: tuple[tuple[int, AffinePrice], ...]

    @staticmethod
    def of(entries: Iterable[tuple[int, AffinePrice]]) -> "Pixep":
        return Pixep(tuple(entries))

    @property
    def m(self) -> int:
        return len(self.positions)

    def agent_at(self, pos: int) -> int:
        return self.positions[pos][0]

    def price_at(self, pos: int) -> AffinePrice:
        return self.positions[pos][1]

    def agents(self) -> frozenset[int]:
        return frozenset(agent for agent, _ in self.positions)


@dataclass(frozen=True)
class Leaf:
    pixep: Pixep
    label: str = ""


@dataclass(frozen=True)
class ChoiceNode:
    """The agent may take any option but the last; the last is the default."""

    agent: int
    options: tuple[tuple[str, "GameNode"], ...]

    def __post_init__(self):
        if len(self.options) < 2:
            raise ValueError("a choice node needs at least one option and a default")


GameNode = Union[Leaf, ChoiceNode]


def leaves(game: GameNode) -> Iterator[Leaf]:
    if isinstance(game, Leaf):
        yield game
    else:
        for _, child in game.options:
            yield from leaves(child)


@dataclass(frozen=True)
class EpsilonInterval:
    """Open interval (lo, hi) of feasible ε values; hi None means unbounded."""

    lo: Fraction
    hi: Fraction | None

    def midpoint(self) -> Fraction:
        if self.hi is None:
            return self.lo + 1
        return (self.lo + self.hi) / 2


def check_requirements(pix: Pixep, incomes: IncomeVector) -> EpsilonInterval:
    """Verify R1 exactly and intersect all R2/R3 constraints on ε.

    Also requires the last (cheapest) price to stay positive, so every
    resolved price vector is valid.  Raises ``R1ViolationError`` or
    ``EmptyEpsilonIntervalError`` (naming the binding constraints) when
    the pixep cannot implement the incomes.
    """
    n = len(incomes)
    for agent, _ in pix.positions:
        if not 0 <= agent < n:
            raise DimensionMismatchError(f"pixep references agent {agent}, have {n}")

    sums: dict[int, AffinePrice] = {}
    for agent, price in pix.positions:
        sums[agent] = sums.get(agent, AffinePrice.of(0)) + price
    for agent, total in sums.items():
        if total.c0 != incomes[agent] or total.c1 != 0:
            raise R1ViolationError(
                agent, f": prices sum to {total}, income is {incomes[agent]}"
            )

    # Each constraint is alpha + beta*eps > 0 (strict) or >= 0.
    constraints: list[tuple[Fraction, Fraction, bool, str]] = []
    for k in range(pix.m - 1):
        agent_k, price_k = pix.positions[k]
        agent_next, price_next = pix.positions[k + 1]
        diff = price_k - price_next
        strict = agent_k != agent_next
        kind = "switch" if strict else "run"
        constraints.append(
            (diff.c0, diff.c1, strict,
             f"R2 {kind} at positions {k + 1}->{k + 2}: {price_k} vs {price_next}")
        )
    last_agent, last_price = pix.positions[-1]
    present = pix.agents()
    for j in range(n):
        if j not in present:
            constraints.append(
                (last_price.c0 - incomes[j], last_price.c1, True,
                 f"R3: last price {last_price} vs income {incomes[j]} of absent agent {j}")
            )
    constraints.append(
        (last_price.c0, last_price.c1, True, f"positivity of last price {last_price}")
    )

    lo, lo_desc = Fraction(0), "ε > 0"
    hi: Fraction | None = None
    hi_desc = ""
    for alpha, beta, strict, desc in constraints:
        if beta == 0:
            if alpha < 0 or (strict and alpha == 0):
                raise EmptyEpsilonIntervalError(f"unsatisfiable: {desc}")
        elif beta > 0:
            bound = -alpha / beta
            if bound > lo:
                lo, lo_desc = bound, desc
        else:
            bound = alpha / (-beta)
            if hi is None or bound < hi:
                hi, hi_desc = bound, desc
    if hi is not None and lo >= hi:
        raise EmptyEpsilonIntervalError(
            f"empty ε interval: ({lo_desc}) against ({hi_desc})"
        )
    return EpsilonInterval(lo=lo, hi=hi)


def _sign_flip_bound(pix: Pixep, incomes: IncomeVector) -> Fraction | None:
    """Smallest ε > 0 at which any bundle-price-vs-income comparison
    changes sign.

    Every bundle priced by an execution costs the sum of some subset of
    position prices, so these are all the affine expressions the
    equilibrium verification can ever compare against an income.  Below
    the bound, each comparison keeps the sign it has in the small-ε
    limit.
    """
    prices = [price for _, price in pix.positions]
    subset_sums = [AffinePrice.of(0)]
    for price in prices:
        subset_sums += [total + price for total in subset_sums]
    bound: Fraction | None = None
    for total in subset_sums:
        for t in incomes:
            alpha = total.c0 - t
            beta = total.c1
            if alpha == 0 or beta == 0 or (alpha > 0) == (beta > 0):
                continue
            flip = -alpha / beta
            if bound is None or flip < bound:
                bound = flip
    return bound


def resolve_epsilon(pix: Pixep, incomes: IncomeVector) -> Fraction:
    """Concrete ε: the midpoint of the feasible interval, capped so that
    no bundle-price-vs-income comparison crosses its small-ε sign.

    The cap is what makes "holds for every sufficiently small ε > 0"
    checkable at a single concrete value; without it a midpoint deep in
    the interval can make an otherwise-unaffordable bundle affordable.
    """
    interval = check_requirements(pix, incomes)
    eps = interval.midpoint()
    flip = _sign_flip_bound(pix, incomes)
    if flip is not None:
        eps = min(eps, flip / 2)
    if eps <= interval.lo:  # only reachable with a positive lower bound
        eps = interval.midpoint()
    return eps


@dataclass(frozen=True)
class Execution:
    """One subgame-perfect play: choices taken, picks, and the outcome.

    ``picks`` lists (position, agent, item) with 1-based positions.
    Prices and ε are attached once the leaf pixep is resolved against an
    income vector; plain strategic enumeration leaves them unset.
    """

    path: tuple[str, ...]
    leaf: Leaf
    picks: tuple[tuple[int, int, int], ...]
    allocation: Allocation
    prices: PriceVector | None = None
    epsilon: Fraction | None = None

    def item_positions(self) -> dict[int, int]:
        return {item: pos for pos, _, item in self.picks}

    def agent_positions(self) -> dict[int, tuple[int, ...]]:
        result: dict[int, list[int]] = {}
        for pos, agent, _ in self.picks:
            result.setdefault(agent, []).append(pos)
        return {agent: tuple(sorted(ps)) for agent, ps in result.items()}

    def contiguous_agents(self) -> set[int]:
        """Agents whose pick positions form one contiguous block."""
        return {
            agent
            for agent, ps in self.agent_positions().items()
            if ps[-1] - ps[0] + 1 == len(ps)
        }


def _leaf_plays(
    pix: Pixep,
    profile: Sequence[PreferenceOrder],
    m: int,
    memo: dict,
    picked: tuple[int, ...],
) -> tuple[tuple[int, ...], ...]:
    """All SPE continuations from the state where ``picked[i]`` is the
    bundle agent i holds so far.  A play is the tuple of items picked at
    the remaining positions, in order."""
    cached = memo.get(picked)
    if cached is not None:
        return cached
    taken = 0
    for b in picked:
        taken |= b
    pos = taken.bit_count()
    if pos == m:
        memo[picked] = ((),)
        return ((),)
    mover = pix.agent_at(pos)
    mover_later = [
        k for k in range(pos + 1, m) if pix.agent_at(k) == mover
    ]
    rank = profile[mover].rank

    remaining = [j for j in range(m) if not taken & (1 << j)]
    options: list[tuple[int, tuple[tuple[int, ...], ...], list[int]]] = []
    worst: list[int] = []
    for x in remaining:
        next_picked = list(picked)
        next_picked[mover] |= 1 << x
        subplays = _leaf_plays(pix, profile, m, memo, tuple(next_picked))
        base = next_picked[mover]
        finals = []
        for play in subplays:
            bundle = base
            for k in mover_later:
                bundle |= 1 << play[k - pos - 1]
            finals.append(rank[bundle])
        options.append((x, subplays, finals))
        worst.append(min(finals))

    plays: list[tuple[int, ...]] = []
    for idx, (x, subplays, finals) in enumerate(options):
        # A pick is part of some SPE iff, against every alternative item,
        # there is an SPE continuation there that the mover does not envy.
        threshold = max(
            (worst[k] for k in range(len(options)) if k != idx), default=None
        )
        for play, value in zip(subplays, finals):
            if threshold is None or value >= threshold:
                plays.append((x,) + play)
    result = tuple(plays)
    memo[picked] = result
    return result


def _allocation_of(leaf: Leaf, play: tuple[int, ...], n: int, m: int) -> Allocation:
    masks = [0] * n
    for pos, item in enumerate(play):
        masks[leaf.pixep.agent_at(pos)] |= 1 << item
    return Allocation(m=m, bundles=tuple(masks))


def _node_outcomes(
    game: GameNode, profile: Sequence[PreferenceOrder], n: int, m: int
) -> list[tuple[tuple[str, ...], Leaf, tuple[int, ...], Allocation]]:
    if isinstance(game, Leaf):
        if game.pixep.m != m:
            raise DimensionMismatchError(
                f"leaf pixep has {game.pixep.m} positions, expected {m}"
            )
        for agent, _ in game.pixep.positions:
            if agent >= n:
                raise DimensionMismatchError(
                    f"pixep references agent {agent}, profile has {n}"
                )
        memo: dict = {}
        plays = _leaf_plays(game.pixep, profile, m, memo, (0,) * n)
        return [
            ((), game, play, _allocation_of(game, play, n, m)) for play in plays
        ]

    chooser = game.agent
    rank = profile[chooser].rank
    outs = [
        _node_outcomes(child, profile, n, m) for _, child in game.options
    ]
    mins = [min(rank[alloc[chooser]] for _, _, _, alloc in out) for out in outs]
    default = len(game.options) - 1
    results = []
    for k, (label, _) in enumerate(game.options[:-1]):
        for path, leaf, play, alloc in outs[k]:
            value = rank[alloc[chooser]]
            # Deviating to an earlier option needs a strict gain over the
            # default; between earlier options, weak deterrence suffices.
            if value <= mins[default]:
                continue
            if any(value < mins[k2] for k2 in range(default) if k2 != k):
                continue
            results.append(((label,) + path, leaf, play, alloc))
    default_label = game.options[default][0]
    for path, leaf, play, alloc in outs[default]:
        value = rank[alloc[chooser]]
        if all(mins[k] <= value for k in range(default)):
            results.append(((default_label,) + path, leaf, play, alloc))
    return results


def spe_outcomes(
    game: GameNode, profile: Sequence[PreferenceOrder]
) -> list[Execution]:
    """Every play of the game that occurs in some subgame-perfect
    equilibrium, in a fixed deterministic order.

    At a picking position the mover may take any item that some
    equilibrium continuation makes optimal (several items can tie by
    yielding the same final bundle); at a choice node the chooser
    deviates from the default only for a strict improvement.  Prices are
    not attached here: agents care only about final bundles.
    """
    if not profile:
        raise DimensionMismatchError("profile must not be empty")
    m = profile[0].m
    if any(pref.m != m for pref in profile):
        raise DimensionMismatchError("profiles disagree on the item universe")
    n = len(profile)
    executions = []
    for path, leaf, play, alloc in _node_outcomes(game, profile, n, m):
        picks = tuple(
            (pos + 1, leaf.pixep.agent_at(pos), item)
            for pos, item in enumerate(play)
        )
        executions.append(
            Execution(path=path, leaf=leaf, picks=picks, allocation=alloc)
        )
    return executions


def execute_to_ce(
    game: GameNode,
    profile: Sequence[PreferenceOrder],
    incomes: IncomeVector,
) -> list[tuple[Execution, CEPair]]:
    """Solve the game and keep the plays whose outcome is an equilibrium.

    Every leaf must pass :func:`check_requirements` against the incomes
    (checked up front); each equilibrium play is then priced with its
    leaf's resolved ε and filtered through exact verification.  Raises
    ``NoValidSpeError`` when no play passes: for the income-range
    constructions in :mod:`cefai.solver` that would disprove the theory,
    so it is a loud internal-consistency alarm rather than a user error.
    """
    resolved: dict[int, Fraction] = {}
    for leaf in leaves(game):
        if id(leaf) not in resolved:
            resolved[id(leaf)] = resolve_epsilon(leaf.pixep, incomes)

    valid: list[tuple[Execution, CEPair]] = []
    for execution in spe_outcomes(game, profile):
        eps = resolved[id(execution.leaf)]
        by_item = [Fraction(0)] * execution.allocation.m
        for pos, _, item in execution.picks:
            by_item[item] = execution.leaf.pixep.price_at(pos - 1).at(eps)
        prices = PriceVector.of(by_item)
        priced = replace(execution, prices=prices, epsilon=eps)
        cand = CEPair(prices=prices, allocation=execution.allocation)
        if verify_ce(profile, incomes, cand).valid:
            valid.append((priced, cand))
    if not valid:
        raise NoValidSpeError(
            "no subgame-perfect play of the game yields a valid equilibrium"
        )
    return valid
