"""Allocations, prices, exact equilibrium verification, and domination.

A pair (price vector, allocation) is a competitive equilibrium when

1. every agent holding a non-empty bundle pays exactly their income, and
2. no agent can afford any bundle they strictly prefer to their own.

Both conditions are checked with exact rational arithmetic; the
affordability threshold for an agent is their income (for non-empty
bundles this coincides with the bundle price via condition 1, and for
empty-handed agents it is the reading under which "cannot afford any
non-empty bundle" makes sense).  A literal mode that thresholds on the
agent's own bundle price instead is available for comparison.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .core import (
    Bundle,
    PreferenceOrder,
    all_bundles,
    bundle_size,
    format_bundle,
    item_names,
    items_of,
)


class DimensionMismatchError(ValueError):
    """Profile, incomes, and candidate do not share the same m and n."""


class EmptyRegionSamplerError(RuntimeError):
    """No point of the income region found within the retry budget."""


@dataclass(frozen=True)
class IncomeVector:
    """Positive incomes, one exact rational per agent."""

    t: tuple[Fraction, ...]

    @staticmethod
    def of(values: Iterable[Fraction | int | str]) -> "IncomeVector":
        t = tuple(Fraction(v) for v in values)
        if not t:
            raise ValueError("income vector must not be empty")
        for i, v in enumerate(t):
            if v <= 0:
                raise ValueError(f"income of agent {i} must be positive, got {v}")
        return IncomeVector(t)

    def __getitem__(self, i: int) -> Fraction:
        return self.t[i]

    def __len__(self) -> int:
        return len(self.t)

    def __iter__(self):
        return iter(self.t)

    def scaled(self, factor: Fraction) -> "IncomeVector":
        return IncomeVector.of(v * factor for v in self.t)

    def descending_order(self) -> tuple[int, ...]:
        """Agent indices sorted by income, highest first (stable)."""
        return tuple(sorted(range(len(self.t)), key=lambda i: (-self.t[i], i)))


@dataclass(frozen=True)
class Allocation:
    """A partition of all m items into one bundle per agent."""

    m: int
    bundles: tuple[Bundle, ...]

    def __post_init__(self):
        union = 0
        for b in self.bundles:
            if union & b:
                raise ValueError("allocation bundles overlap")
            union |= b
        if union != (1 << self.m) - 1:
            raise ValueError("allocation does not cover all items")

    @property
    def n(self) -> int:
        return len(self.bundles)

    def __getitem__(self, agent: int) -> Bundle:
        return self.bundles[agent]

    def owner_of(self, item: int) -> int:
        bit = 1 << item
        for agent, b in enumerate(self.bundles):
            if b & bit:
                return agent
        raise ValueError(f"item {item} not allocated")


@dataclass(frozen=True)
class PriceVector:
    """One strictly positive exact price per item."""

    p: tuple[Fraction, ...]

    @staticmethod
    def of(values: Iterable[Fraction | int | str]) -> "PriceVector":
        p = tuple(Fraction(v) for v in values)
        for j, v in enumerate(p):
            if v <= 0:
                raise ValueError(f"price of item {j} must be positive, got {v}")
        return PriceVector(p)

    def __getitem__(self, item: int) -> Fraction:
        return self.p[item]

    def __len__(self) -> int:
        return len(self.p)

    def __iter__(self):
        return iter(self.p)

    def bundle_price(self, bundle: Bundle) -> Fraction:
        return sum((self.p[j] for j in items_of(bundle)), Fraction(0))


@dataclass(frozen=True)
class CEPair:
    """A candidate equilibrium: prices plus an allocation."""

    prices: PriceVector
    allocation: Allocation


class ViolationKind(enum.Enum):
    BUDGET_MISMATCH = "budget-mismatch"
    AFFORDABLE_BETTER_BUNDLE = "affordable-better-bundle"


@dataclass(frozen=True)
class CEViolation:
    agent: int
    kind: ViolationKind
    bundle: Bundle
    price: Fraction
    threshold: Fraction

    def describe(self, names: Sequence[str] | None = None) -> str:
        what = format_bundle(self.bundle, names)
        if self.kind is ViolationKind.BUDGET_MISMATCH:
            return (
                f"agent {self.agent} pays {self.price} for {what} "
                f"but has income {self.threshold}"
            )
        return (
            f"agent {self.agent} prefers {what} at price {self.price}, "
            f"affordable at threshold {self.threshold}"
        )


@dataclass(frozen=True)
class CEReport:
    valid: bool
    violations: tuple[CEViolation, ...]


def verify_ce(
    profile: Sequence[PreferenceOrder],
    incomes: IncomeVector,
    cand: CEPair,
    strict_literal: bool = False,
) -> CEReport:
    """Check both equilibrium conditions exactly; report all violations.

    With ``strict_literal`` the affordability threshold of an agent is
    the price of their own bundle instead of their income; the two modes
    agree whenever every agent's bundle is non-empty and condition 1
    holds.
    """
    n = len(profile)
    if len(incomes) != n or cand.allocation.n != n:
        raise DimensionMismatchError(
            f"profile has {n} agents, incomes {len(incomes)}, "
            f"allocation {cand.allocation.n}"
        )
    m = profile[0].m
    if any(pref.m != m for pref in profile) or cand.allocation.m != m or len(cand.prices) != m:
        raise DimensionMismatchError("item universes differ across inputs")

    violations: list[CEViolation] = []
    for i, pref in enumerate(profile):
        own = cand.allocation[i]
        own_price = cand.prices.bundle_price(own)
        if own != 0 and own_price != incomes[i]:
            violations.append(
                CEViolation(i, ViolationKind.BUDGET_MISMATCH, own, own_price, incomes[i])
            )
        threshold = own_price if strict_literal else incomes[i]
        own_rank = pref.rank_of(own)
        for y in all_bundles(m):
            if pref.rank[y] <= own_rank:
                continue
            y_price = cand.prices.bundle_price(y)
            if y_price <= threshold:
                violations.append(
                    CEViolation(
                        i, ViolationKind.AFFORDABLE_BETTER_BUNDLE, y, y_price, threshold
                    )
                )
    return CEReport(valid=not violations, violations=tuple(violations))


class BundleRelation(enum.Enum):
    DOMINATING = "dominating"
    DOMINATED = "dominated"
    UNRELATED = "unrelated"


def is_dominated_by(
    x: Bundle, y: Bundle, positions: Mapping[int, int]
) -> bool:
    """True iff some injection maps each item of ``x`` to a weakly
    earlier-picked item of ``y``.

    ``positions`` maps each item to its (distinct) pick position.  Since
    the constraint graph is an interval order, greedy matching of sorted
    position lists decides the injection exactly.

    >>> pos = {0: 1, 1: 2, 2: 3, 3: 4}
    >>> is_dominated_by(0b1001, 0b0011, pos)   # {1,4} dominated by {1,2}
    True
    >>> is_dominated_by(0b1001, 0b1110, pos)   # {1,4} vs {2,3,4}: unrelated
    False
    """
    if x == y:
        raise ValueError("domination is defined for distinct bundles only")
    xs = sorted(positions[j] for j in items_of(x))
    ys = sorted(positions[j] for j in items_of(y))
    if len(ys) < len(xs):
        return False
    return all(ys[k] <= xs[k] for k in range(len(xs)))


def classify_bundle(
    positions: Mapping[int, int], own: Bundle, other: Bundle
) -> BundleRelation:
    """Relation of ``other`` to the agent's ``own`` bundle."""
    if is_dominated_by(own, other, positions):
        return BundleRelation.DOMINATING
    if is_dominated_by(other, own, positions):
        return BundleRelation.DOMINATED
    return BundleRelation.UNRELATED


def affordable_dominating_bundles(
    allocation: Allocation,
    prices: PriceVector,
    incomes: IncomeVector,
    positions: Mapping[int, int],
) -> list[tuple[int, Bundle]]:
    """Violations of "no agent can afford a bundle dominating his own".

    Returns (agent, bundle) pairs where the bundle dominates the agent's
    allocated bundle yet costs no more than the agent's income.  Empty
    for every execution of a well-formed priced picking sequence.
    """
    offenders = []
    for agent in range(allocation.n):
        own = allocation[agent]
        for other in all_bundles(allocation.m):
            if other == own:
                continue
            if not is_dominated_by(own, other, positions):
                continue
            if prices.bundle_price(other) <= incomes[agent]:
                offenders.append((agent, other))
    return offenders


def preferred_dominated_bundles(
    profile: Sequence[PreferenceOrder],
    allocation: Allocation,
    positions: Mapping[int, int],
    contiguous_agents: Iterable[int],
) -> list[tuple[int, Bundle]]:
    """Violations of "a contiguous-turn agent wants no dominated bundle".

    Only agents whose pick positions form one contiguous block carry the
    guarantee; callers supply that set.
    """
    offenders = []
    for agent in contiguous_agents:
        own = allocation[agent]
        pref = profile[agent]
        for other in all_bundles(allocation.m):
            if other == own:
                continue
            if not is_dominated_by(other, own, positions):
                continue
            if pref.prefers(other, own):
                offenders.append((agent, other))
    return offenders


@dataclass(frozen=True)
class IncomeRegion:
    """An open region of income space cut out by strict linear constraints.

    Each constraint row is a coefficient vector ``c`` over the agents,
    asserting ``sum(c_i * t_i) > 0``.  Positivity of every income is
    implicit.
    """

    n: int
    constraints: tuple[tuple[Fraction, ...], ...]
    reference: IncomeVector | None = None

    @staticmethod
    def of(
        n: int,
        rows: Iterable[Sequence[Fraction | int | str]],
        reference: IncomeVector | None = None,
    ) -> "IncomeRegion":
        constraints = []
        for row in rows:
            coeffs = tuple(Fraction(v) for v in row)
            if len(coeffs) != n:
                raise ValueError(f"constraint row has {len(coeffs)} coefficients, expected {n}")
            constraints.append(coeffs)
        region = IncomeRegion(n=n, constraints=tuple(constraints), reference=reference)
        if reference is not None and not region.contains(reference):
            raise ValueError("reference income point violates the region constraints")
        return region

    def contains(self, incomes: IncomeVector) -> bool:
        if len(incomes) != self.n:
            raise DimensionMismatchError(
                f"income vector has {len(incomes)} agents, region expects {self.n}"
            )
        return all(
            sum(c * t for c, t in zip(row, incomes)) > 0 for row in self.constraints
        )

    def sample(
        self,
        seed: int,
        count: int,
        *,
        denominator: int = 1000,
        box_high: int = 20,
        max_attempts: int | None = None,
    ) -> list[IncomeVector]:
        """Rejection-sample ``count`` rational points of the region.

        Coordinates are drawn from a rational grid (multiples of
        ``1/denominator``) inside a box; when the region carries a
        reference point the box hugs it (between half and double each
        coordinate), otherwise it is (0, box_high].  Deterministic per
        seed.
        """
        rng = random.Random(f"region:{seed}")
        if max_attempts is None:
            max_attempts = max(200_000, 5000 * count)
        if self.reference is not None:
            lows = [max(1, int(t * denominator // 2)) for t in self.reference]
            highs = [int(t * denominator * 2) for t in self.reference]
        else:
            lows = [1] * self.n
            highs = [box_high * denominator] * self.n
        points = []
        for _ in range(max_attempts):
            cand = IncomeVector.of(
                Fraction(rng.randint(lo, hi), denominator)
                for lo, hi in zip(lows, highs)
            )
            if self.contains(cand):
                points.append(cand)
                if len(points) == count:
                    return points
        raise EmptyRegionSamplerError(
            f"found only {len(points)}/{count} region points in {max_attempts} attempts"
        )
