"""Items, bundles, and strict monotone preference orders over bundles.

A bundle over a universe of ``m`` items (``m <= 16``) is an ``int`` bitmask:
bit ``j`` set means item ``j`` is in the bundle.  Bitmasks are canonical,
hashable, and cheap to enumerate exhaustively, which the equilibrium
verifiers rely on.  All money amounts elsewhere in the package are
``fractions.Fraction``, so every comparison is exact.

A preference order ranks all ``2^m`` bundles strictly (no indifference)
and monotonically (a bundle beats each of its proper subsets).
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

Bundle = int

MAX_ITEMS = 16

#: Items are conventionally named with the tail of this alphabet: for three
#: items the names are x, y, z; for five they are v, w, x, y, z.
_NAME_ALPHABET = "vwxyz"

EMPTY_BUNDLE_SYMBOL = "∅"


class PreferenceError(ValueError):
    """Base class for invalid preference constructions."""


class DuplicateBundleError(PreferenceError):
    pass


class MissingBundleError(PreferenceError):
    pass


class MonotonicityViolationError(PreferenceError):
    """A bundle was ranked below one of its proper subsets."""

    def __init__(self, subset: Bundle, superset: Bundle, m: int):
        self.subset = subset
        self.superset = superset
        names = item_names(m)
        super().__init__(
            f"{format_bundle(subset, names)} is a proper subset of "
            f"{format_bundle(superset, names)} but is ranked above it"
        )


class TiedSubsetSumsError(PreferenceError):
    def __init__(self, first: Bundle, second: Bundle, m: int):
        self.first = first
        self.second = second
        names = item_names(m)
        super().__init__(
            f"bundles {format_bundle(first, names)} and "
            f"{format_bundle(second, names)} have equal total value"
        )


class CyclicRelationsError(PreferenceError):
    """The asserted relations contradict each other or monotonicity."""

    def __init__(self, cycle: Sequence[Bundle], m: int):
        self.cycle = tuple(cycle)
        names = item_names(m)
        chain = " > ".join(format_bundle(b, names) for b in cycle)
        super().__init__(f"relations are cyclic: {chain} > ...")


def bundle_of(items: Iterable[int]) -> Bundle:
    """Bitmask of the given item indices."""
    mask = 0
    for j in items:
        mask |= 1 << j
    return mask


def items_of(bundle: Bundle) -> tuple[int, ...]:
    """Item indices of a bundle, ascending."""
    items = []
    j = 0
    b = bundle
    while b:
        if b & 1:
            items.append(j)
        b >>= 1
        j += 1
    return tuple(items)


def bundle_size(bundle: Bundle) -> int:
    return bundle.bit_count()


def is_subset(s: Bundle, t: Bundle) -> bool:
    return s & ~t == 0


def all_bundles(m: int) -> range:
    """All 2^m bundles over an m-item universe (as masks)."""
    return range(1 << m)


def subsets_of_size(m: int, k: int) -> list[Bundle]:
    return [bundle_of(c) for c in combinations(range(m), k)]


def item_names(m: int) -> tuple[str, ...]:
    """Default item names: x,y,z / w,x,y,z / v,w,x,y,z for small m."""
    if m <= len(_NAME_ALPHABET):
        return tuple(_NAME_ALPHABET[len(_NAME_ALPHABET) - m:])
    return tuple(f"i{j}" for j in range(m))


def format_bundle(bundle: Bundle, names: Sequence[str] | None = None) -> str:
    """Render a bundle as a compact item string, e.g. ``xy``.

    >>> format_bundle(0b011, "xyz")
    'xy'
    >>> format_bundle(0, "xyz")
    '∅'
    """
    if bundle == 0:
        return EMPTY_BUNDLE_SYMBOL
    if names is None:
        names = item_names(max(items_of(bundle)) + 1)
    sep = "" if all(len(n) == 1 for n in names) else "+"
    return sep.join(names[j] for j in items_of(bundle))


def parse_bundle(text: str, names: Sequence[str]) -> Bundle:
    """Inverse of :func:`format_bundle` for the given item names.

    Single-character names concatenate (``"xy"``); longer names join
    with ``+``.  The empty string and the empty-set symbol both parse
    to the empty bundle.
    """
    text = text.strip()
    if text in ("", EMPTY_BUNDLE_SYMBOL):
        return 0
    index = {name: j for j, name in enumerate(names)}
    parts = text.split("+") if "+" in text else list(text)
    mask = 0
    for part in parts:
        if part not in index:
            raise ValueError(f"unknown item {part!r} (items: {', '.join(names)})")
        bit = 1 << index[part]
        if mask & bit:
            raise ValueError(f"item {part!r} listed twice in bundle {text!r}")
        mask |= bit
    return mask


@dataclass(frozen=True)
class PreferenceOrder:
    """A strict monotone total order over all bundles of ``m`` items.

    ``rank[b]`` is the position of bundle ``b`` in the order, from 0
    (the empty bundle, always worst) to ``2^m - 1`` (the full set,
    always best).  Construct through :func:`make_preference` or one of
    the other factories, which validate the invariants.
    """

    m: int
    rank: tuple[int, ...]

    def rank_of(self, bundle: Bundle) -> int:
        return self.rank[bundle]

    def prefers(self, s: Bundle, t: Bundle) -> bool:
        """True iff bundle ``s`` is strictly better than ``t``."""
        return self.rank[s] > self.rank[t]

    def weakly_prefers(self, s: Bundle, t: Bundle) -> bool:
        return self.rank[s] >= self.rank[t]

    def best(self, bundles: Iterable[Bundle]) -> Bundle:
        return max(bundles, key=self.rank.__getitem__)

    def worst(self, bundles: Iterable[Bundle]) -> Bundle:
        return min(bundles, key=self.rank.__getitem__)

    def ranking(self) -> list[Bundle]:
        """All bundles from worst to best."""
        order = [0] * len(self.rank)
        for bundle, r in enumerate(self.rank):
            order[r] = bundle
        return order

    def top(self) -> Bundle:
        return (1 << self.m) - 1


def _check_universe(m: int) -> None:
    if not 0 <= m <= MAX_ITEMS:
        raise ValueError(f"item count must be between 0 and {MAX_ITEMS}, got {m}")


def _validate_monotone(m: int, rank: Sequence[int]) -> None:
    # Checking every single-item extension suffices: any S ⊊ T is reachable
    # by a chain of such extensions, so rank increases along the chain.
    for s in all_bundles(m):
        for j in range(m):
            bit = 1 << j
            if s & bit:
                continue
            if rank[s | bit] <= rank[s]:
                raise MonotonicityViolationError(s, s | bit, m)


def make_preference(m: int, ranking: Sequence[Bundle]) -> PreferenceOrder:
    """Build a preference order from a worst-to-best bundle list.

    ``ranking`` must list every bundle over the m-item universe exactly
    once; position in the list is the rank.

    >>> pref = make_preference(2, [0b00, 0b01, 0b10, 0b11])
    >>> pref.prefers(0b10, 0b01)
    True
    >>> make_preference(2, [0b00, 0b11, 0b01, 0b10])
    Traceback (most recent call last):
        ...
    cefai.core.MonotonicityViolationError: x is a proper subset of xy but is ranked above it
    """
    _check_universe(m)
    size = 1 << m
    rank = [-1] * size
    for position, bundle in enumerate(ranking):
        if not 0 <= bundle < size:
            raise ValueError(f"bundle {bundle:#x} outside the {m}-item universe")
        if rank[bundle] != -1:
            raise DuplicateBundleError(
                f"bundle {format_bundle(bundle, item_names(m))} listed twice"
            )
        rank[bundle] = position
    if len(ranking) < size or -1 in rank:
        missing = next(b for b in all_bundles(m) if rank[b] == -1)
        raise MissingBundleError(
            f"ranking omits bundle {format_bundle(missing, item_names(m))}"
        )
    _validate_monotone(m, rank)
    return PreferenceOrder(m=m, rank=tuple(rank))


@dataclass(frozen=True)
class PartialRelations:
    """Asserted strict comparisons ``better > worse`` between bundles.

    Completion to a full order adds all monotonicity constraints; the
    asserted pairs must be consistent with them (acyclic overall).
    """

    m: int
    pairs: tuple[tuple[Bundle, Bundle], ...]

    @staticmethod
    def from_chain(
        m: int, chain: Sequence[Bundle | Iterable[Bundle]]
    ) -> "PartialRelations":
        """Build relations from a best-to-worst chain of bundles or groups.

        Each chain element is a single bundle or a collection of bundles
        (a group).  Every member of a group is asserted better than every
        member of the next element; bundles inside one group stay
        mutually unordered.
        """
        return PartialRelations(m=m, pairs=tuple(chain_pairs(chain)))


def chain_pairs(
    chain: Sequence[Bundle | Iterable[Bundle]],
) -> list[tuple[Bundle, Bundle]]:
    groups: list[tuple[Bundle, ...]] = []
    for element in chain:
        if isinstance(element, int):
            groups.append((element,))
        else:
            groups.append(tuple(element))
    pairs = []
    for upper, lower in zip(groups, groups[1:]):
        for b in upper:
            for w in lower:
                pairs.append((b, w))
    return pairs


def _predecessor_graph(rel: PartialRelations):
    """Edges u -> v meaning u must be emitted (ranked) before v."""
    m = rel.m
    size = 1 << m
    succ: list[list[int]] = [[] for _ in range(size)]
    indegree = [0] * size
    for s in range(size):
        for j in range(m):
            bit = 1 << j
            if not s & bit:
                succ[s].append(s | bit)
                indegree[s | bit] += 1
    seen = set()
    for better, worse in rel.pairs:
        if not (0 <= better < size and 0 <= worse < size):
            raise ValueError("relation refers to a bundle outside the universe")
        if (better, worse) in seen:
            continue
        seen.add((better, worse))
        succ[worse].append(better)
        indegree[better] += 1
    return succ, indegree


def _find_cycle(succ: list[list[int]], stuck: set[int]) -> list[int]:
    color = {}
    parent = {}
    for start in sorted(stuck):
        if color.get(start):
            continue
        stack = [(start, iter(succ[start]))]
        color[start] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt not in stuck:
                    continue
                if color.get(nxt) == 1:
                    cycle = [nxt, node]
                    cur = node
                    while cur != nxt:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return cycle[:-1]
                if not color.get(nxt):
                    color[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, iter(succ[nxt])))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                stack.pop()
    return sorted(stuck)  # should not happen; stuck nodes always hold a cycle


def complete_partial(rel: PartialRelations) -> PreferenceOrder:
    """Extend partial relations to a full strict monotone order.

    Deterministic: bundles are emitted worst-first; whenever several
    bundles have all their constraints satisfied, the one with the
    fewest items wins, ties broken by smallest bitmask.

    >>> rel = PartialRelations(m=2, pairs=(((0b10), (0b01)),))  # y > x
    >>> complete_partial(rel).ranking() == [0b00, 0b01, 0b10, 0b11]
    True
    """
    _check_universe(rel.m)
    size = 1 << rel.m
    succ, indegree = _predecessor_graph(rel)
    heap = [(b.bit_count(), b) for b in range(size) if indegree[b] == 0]
    heapq.heapify(heap)
    ranking = []
    while heap:
        _, bundle = heapq.heappop(heap)
        ranking.append(bundle)
        for nxt in succ[bundle]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                heapq.heappush(heap, (nxt.bit_count(), nxt))
    if len(ranking) < size:
        stuck = {b for b in range(size) if indegree[b] > 0}
        raise CyclicRelationsError(_find_cycle(succ, stuck), rel.m)
    return make_preference(rel.m, ranking)


def satisfies_relations(pref: PreferenceOrder, rel: PartialRelations) -> bool:
    """Check that every asserted pair holds in the (completed) order."""
    return all(pref.prefers(b, w) for b, w in rel.pairs)


def additive_preference(
    m: int, values: Sequence[Fraction | int | str]
) -> PreferenceOrder:
    """Order bundles by the sum of per-item values.

    All 2^m subset sums must be pairwise distinct, otherwise the order
    would not be strict.

    >>> additive_preference(3, [4, 2, 1]).ranking() == list(range(8))
    True
    """
    _check_universe(m)
    if len(values) != m:
        raise ValueError(f"expected {m} item values, got {len(values)}")
    vals = [Fraction(v) for v in values]
    total: dict[Fraction, Bundle] = {}
    sums = []
    for bundle in all_bundles(m):
        s = sum((vals[j] for j in items_of(bundle)), Fraction(0))
        if s in total:
            raise TiedSubsetSumsError(total[s], bundle, m)
        total[s] = bundle
        sums.append(s)
    ranking = sorted(all_bundles(m), key=sums.__getitem__)
    return make_preference(m, ranking)


def random_preference(m: int, seed: int) -> PreferenceOrder:
    """Random strict monotone order, deterministic for a given seed.

    A random topological order of the subset lattice: repeatedly pick
    uniformly among the bundles whose proper subsets were all emitted.
    """
    _check_universe(m)
    rng = random.Random(f"preference:{seed}")
    size = 1 << m
    missing = [b.bit_count() for b in range(size)]
    available = [0]
    ranking = []
    while available:
        idx = rng.randrange(len(available))
        available[idx], available[-1] = available[-1], available[idx]
        bundle = available.pop()
        ranking.append(bundle)
        for j in range(m):
            bit = 1 << j
            if not bundle & bit:
                t = bundle | bit
                missing[t] -= 1
                if missing[t] == 0:
                    available.append(t)
    return make_preference(m, ranking)


def random_completion(rel: PartialRelations, seed: int) -> PreferenceOrder:
    """Random monotone completion honoring all asserted pairs.

    Like :func:`complete_partial` but the next bundle is drawn uniformly
    from the currently unconstrained ones; deterministic per seed.
    """
    _check_universe(rel.m)
    rng = random.Random(f"completion:{seed}")
    size = 1 << rel.m
    succ, indegree = _predecessor_graph(rel)
    available = [b for b in range(size) if indegree[b] == 0]
    ranking = []
    while available:
        idx = rng.randrange(len(available))
        available[idx], available[-1] = available[-1], available[idx]
        bundle = available.pop()
        ranking.append(bundle)
        for nxt in succ[bundle]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                available.append(nxt)
    if len(ranking) < size:
        stuck = {b for b in range(size) if indegree[b] > 0}
        raise CyclicRelationsError(_find_cycle(succ, stuck), rel.m)
    return make_preference(rel.m, ranking)
