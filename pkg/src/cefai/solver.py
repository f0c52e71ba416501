"""Constructive equilibrium solver dispatching on the income profile.

For every supported market size the solver sorts agents by income
(``a > b > c > ...``), picks the income range the sorted vector falls
in, builds the matching priced picking sequence (or a short sequential
game over several of them), enumerates its subgame-perfect plays, and
returns the first play whose outcome verifies as an equilibrium.

Supported sizes: any number of agents with up to three items, and up to
three agents with four items.  Four agents with four items, or five or
more items, admit no such construction: see :mod:`cefai.instances` for
the witnesses.

Incomes must be *generic*: off a finite list of hyperplanes (all
adjacent-income equalities plus a few case-specific ones like
``a = b + c``).  On a hyperplane the range split is ill-defined and the
solver refuses rather than guessing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .core import PreferenceOrder
from .market import Allocation, CEPair, DimensionMismatchError, IncomeVector
from .pixep import (
    AffinePrice,
    ChoiceNode,
    Execution,
    GameNode,
    Leaf,
    NoValidSpeError,
    Pixep,
    execute_to_ce,
)

_AGENT_LETTERS = "ABCDEFGH"


class UnsupportedCaseError(ValueError):
    def __init__(self, m: int, n: int):
        self.m = m
        self.n = n
        super().__init__(
            f"no equilibrium construction covers {m} items with {n} agents: "
            "for 4 items and 4+ agents, and for 5+ items, there are markets "
            "with no equilibrium on a positive-measure set of incomes"
        )


class NotGenericError(ValueError):
    def __init__(self, hyperplane: "Hyperplane"):
        self.hyperplane = hyperplane
        super().__init__(f"incomes lie on the excluded hyperplane {hyperplane.label}")


@dataclass(frozen=True)
class Hyperplane:
    """An excluded income equality, over incomes sorted descending.

    ``coeffs[k]`` multiplies the k-th highest income; the hyperplane is
    the set where the combination vanishes.
    """

    coeffs: tuple[int, ...]
    label: str

    def contains(self, sorted_incomes: Sequence[Fraction]) -> bool:
        return (
            sum(c * t for c, t in zip(self.coeffs, sorted_incomes)) == 0
        )


def _letter(k: int) -> str:
    return _AGENT_LETTERS[k].lower() if k < len(_AGENT_LETTERS) else f"t{k}"


def excluded_hyperplanes(m: int, n: int) -> list[Hyperplane]:
    """The full list of income equalities excluded for the (m, n) case.

    Contains every adjacent equality of the descending income sort
    (these make the sort strict) plus the case-specific split
    boundaries.  Unsupported sizes raise ``UnsupportedCaseError``.
    """
    if not _supported(m, n):
        raise UnsupportedCaseError(m, n)

    def plane(coeffs: dict[int, int], label: str) -> Hyperplane:
        width = max(coeffs) + 1
        row = tuple(coeffs.get(k, 0) for k in range(width))
        return Hyperplane(coeffs=row, label=label)

    planes = [
        plane({k: 1, k + 1: -1}, f"{_letter(k)} = {_letter(k + 1)}")
        for k in range(n - 1)
    ]
    if m == 3 and n >= 3:
        planes.append(plane({0: 1, 1: -1, 2: -1}, "a = b + c"))
    if m == 4 and n == 2:
        planes.append(plane({0: 1, 1: -2}, "a = 2b"))
    if m == 4 and n == 3:
        planes.extend(
            [
                plane({0: 1, 1: -2, 2: -1}, "a = 2b + c"),
                plane({0: 1, 1: -2}, "a = 2b"),
                plane({0: 1, 1: -1, 2: -1}, "a = b + c"),
                plane({0: 1, 1: -2, 2: 1}, "a + c = 2b"),
                plane({0: 1, 2: -2}, "a = 2c"),
                plane({1: 1, 2: -2}, "b = 2c"),
            ]
        )
    return planes


def _supported(m: int, n: int) -> bool:
    if m < 1 or n < 1:
        return False
    return m <= 3 or (m == 4 and n <= 3)


def violated_hyperplane(incomes: IncomeVector, m: int) -> Hyperplane | None:
    order = incomes.descending_order()
    sorted_incomes = [incomes[i] for i in order]
    for hp in excluded_hyperplanes(m, len(incomes)):
        if hp.contains(sorted_incomes):
            return hp
    return None


def is_generic(incomes: IncomeVector, m: int, n: int | None = None) -> bool:
    """True iff the incomes avoid every excluded hyperplane exactly."""
    if n is not None and n != len(incomes):
        raise DimensionMismatchError(f"income vector has {len(incomes)} agents, not {n}")
    return violated_hyperplane(incomes, m) is None


# Income-range predicates over the sorted incomes, in dispatch order.
# Exactly one predicate per case holds for generic incomes.

def _ranges_m3(c_effective: Callable[[Sequence[Fraction]], Fraction]):
    return [
        ("m3:a>b+c", lambda t: t[0] > t[1] + c_effective(t)),
        ("m3:a<b+c", lambda t: t[0] < t[1] + c_effective(t)),
    ]


_RANGES_M4N2 = [
    ("m4n2:a>2b", lambda t: t[0] > 2 * t[1]),
    ("m4n2:a<2b", lambda t: t[0] < 2 * t[1]),
]

_RANGES_M4N3 = [
    ("m4n3:range1", lambda t: t[0] > 2 * t[1] + t[2]),
    ("m4n3:range2", lambda t: 2 * t[1] + t[2] > t[0] > 2 * t[1]),
    ("m4n3:range3",
     lambda t: 2 * t[1] > t[0] > t[1] + t[2] and t[0] + t[2] > 2 * t[1]),
    ("m4n3:range4",
     lambda t: 2 * t[1] > t[0] > t[1] + t[2] and 2 * t[1] > t[0] + t[2]),
    ("m4n3:range5",
     lambda t: t[1] + t[2] > t[0] > 2 * t[2] and 2 * t[2] > t[1]),
    ("m4n3:range6",
     lambda t: t[1] + t[2] > t[0] > 2 * t[2] and t[1] > 2 * t[2]),
    ("m4n3:range7", lambda t: 2 * t[2] > t[0]),
]


def range_predicates(m: int, n: int) -> list[tuple[str, Callable]]:
    """(label, predicate) table for the sorted-income dispatch."""
    if not _supported(m, n):
        raise UnsupportedCaseError(m, n)
    if n == 1:
        return [(f"m{m}n1", lambda t: True)]
    if m == 1:
        return [("m1", lambda t: True)]
    if m == 2:
        return [("m2", lambda t: True)]
    if m == 3:
        if n == 2:
            # with only two incomes the third is 0, so a > b+c always holds
            return [("m3:a>b+c", lambda t: True)]
        return _ranges_m3(lambda t: t[2])
    if n == 2:
        return _RANGES_M4N2
    return _RANGES_M4N3


def range_labels(m: int, n: int) -> list[str]:
    return [label for label, _ in range_predicates(m, n)]


def active_range(m: int, n: int, sorted_incomes: Sequence[Fraction]) -> str:
    matches = [
        label for label, pred in range_predicates(m, n) if pred(sorted_incomes)
    ]
    if len(matches) != 1:
        raise NotGenericError(violated_hyperplane(IncomeVector.of(sorted_incomes), m)
                              or Hyperplane((), "unknown boundary"))
    return matches[0]


def _pix(seq: str, *prices: AffinePrice) -> Pixep:
    agents = [_AGENT_LETTERS.index(ch) for ch in seq]
    return Pixep.of(zip(agents, prices))


def _price(c0, c1=0) -> AffinePrice:
    return AffinePrice.of(c0, c1)


def _candidate_games(
    label: str, t: Sequence[Fraction], m: int
) -> list[tuple[str, GameNode]]:
    """Games to try for one income range, in order of preference.

    The first entry is the range's primary construction.  The rest are
    alternative pixeps that satisfy the price requirements on the same
    income range; they matter because the primary construction is not
    complete: for some preference profiles its equilibrium plays fail
    the affordability conditions (an agent with split turns can afford
    a bundle that dominates his own and prefer it), while one of the
    alternatives still implements an equilibrium whenever one exists.
    """
    a = t[0]
    b = t[1] if len(t) > 1 else None
    c = t[2] if len(t) > 2 else None
    candidates = [(label, _build_game(label, t, m))]

    def add(sublabel: str, game: GameNode) -> None:
        candidates.append((f"{label}+{sublabel}", game))

    if label.startswith("m4n3:"):
        abcb = Leaf(
            _pix("ABCB", _price(a), _price(b, -1), _price(c), _price(0, +1)), "ABCB"
        )
        abca = Leaf(
            _pix("ABCA", _price(a, -1), _price(b), _price(c), _price(0, +1)), "ABCA"
        )
        p_split = max(c, (a - b) / 2)
        baaa = (
            Leaf(
                _pix("BAAA", _price(b), _price(a - 2 * p_split, -2),
                     _price(p_split, +1), _price(p_split, +1)),
                "BAAA",
            )
            if a > 3 * p_split
            else None
        )
        abac = Leaf(
            _pix("ABAC", _price(b, +1), _price(b), _price(a - b, -1), _price(c)),
            "ABAC",
        )
        aabc = Leaf(
            _pix("AABC", _price(a - b, -1), _price(b, +1), _price(b), _price(c)),
            "AABC",
        )
        baac = Leaf(
            _pix("BAAC", _price(b), _price(a - c, -1), _price(c, +1), _price(c)),
            "BAAC",
        )
        baac_half = (
            Leaf(
                _pix("BAAC", _price(b), _price(a / 2), _price(a / 2), _price(c)),
                "BAAC=",
            )
            if 2 * b > a > 2 * c
            else None
        )
        abab = Leaf(
            _pix("ABAB",
                 _price(a - c, -2), _price(b - c, -1), _price(c, +2), _price(c, +1)),
            "ABAB",
        )
        aabb = Leaf(
            _pix("AABB", _price(a / 2), _price(a / 2), _price(b / 2), _price(b / 2)),
            "AABB",
        )
        abbc = Leaf(
            _pix("ABBC", _price(a), _price(b / 2), _price(b / 2), _price(c)), "ABBC"
        )
        baca = Leaf(
            _pix("BACA", _price(b), _price(c, +1), _price(c), _price(a - c, -1)),
            "BACA",
        )
        if label == "m4n3:range1":
            add("AABC", aabc)
            add("ABAC", abac)
            add("ABCB", abcb)
        elif label == "m4n3:range2":
            add("ABAC", abac)
            add("ABCB", abcb)
        elif label == "m4n3:range3":
            add("ABCB", abcb)
            add("ABCA", abca)
            if baac_half is not None:
                add("BAAC=", baac_half)
            if baaa is not None:
                add("BAAA", baaa)
            if b > 2 * c:
                add("AABB", aabb)
                add("ABBC", abbc)
        elif label == "m4n3:range4":
            add("ABAB", abab)
            add("AABB", aabb)
            add("ABBC", abbc)
            add("ABAC", abac)
            add("ABCB", abcb)
        elif label == "m4n3:range5":
            add("ABCB", abcb)
            add("BAAC", baac)
            if baac_half is not None:
                add("BAAC=", baac_half)
            add("ABCA", abca)
            if baaa is not None:
                add("BAAA", baaa)
        elif label == "m4n3:range6":
            add("BAAC", baac)
            if baac_half is not None:
                add("BAAC=", baac_half)
            add("ABBC", abbc)
            add("AABB", aabb)
            add("ABAB", abab)
            add("ABCB", abcb)
            add("ABCA", abca)
            if baaa is not None:
                add("BAAA", baaa)
        elif label == "m4n3:range7":
            add("ABCB", abcb)
            add("BACA", baca)
            add("ABCA", abca)
    elif label == "m4n2:a<2b":
        half = (a - b) / 2
        add("ABAB", Leaf(
            _pix("ABAB", _price(a, -2), _price(b, -1), _price(0, +2), _price(0, +1)),
            "ABAB",
        ))
        add("BAAA", Leaf(
            _pix("BAAA", _price(b), _price(b, -2), _price(half, +1), _price(half, +1)),
            "BAAA",
        ))
        add("AABB", Leaf(
            _pix("AABB", _price(a / 2), _price(a / 2), _price(b / 2), _price(b / 2)),
            "AABB",
        ))
    return candidates


def _build_game(label: str, t: Sequence[Fraction], m: int) -> GameNode:
    """The pixep or choice game for one income range, over sorted agents."""
    a = t[0]
    b = t[1] if len(t) > 1 else None
    c = t[2] if len(t) > 2 else None

    if label.endswith("n1"):
        share = Fraction(a, m)
        return Leaf(Pixep.of((0, _price(share)) for _ in range(m)), "A" * m)
    if label == "m1":
        return Leaf(_pix("A", _price(a)), "A")
    if label == "m2":
        return Leaf(_pix("AB", _price(a), _price(b)), "AB")

    if label == "m3:a>b+c":
        c3 = c if c is not None else Fraction(0)
        return Leaf(
            _pix("ABA", _price(a - c3, -1), _price(b), _price(c3, +1)), "ABA"
        )
    if label == "m3:a<b+c":
        return Leaf(_pix("ABC", _price(a), _price(b), _price(c)), "ABC")

    if label == "m4n2:a>2b":
        return Leaf(
            _pix("AABA", _price(a - b, -2), _price(b, +1), _price(b), _price(0, +1)),
            "AABA",
        )
    if label == "m4n2:a<2b":
        abab = Leaf(
            _pix("ABAB", _price(a, -2), _price(b, -1), _price(0, +2), _price(0, +1)),
            "ABAB",
        )
        half = (a - b) / 2
        baaa = Leaf(
            _pix("BAAA", _price(b), _price(b, -2), _price(half, +1), _price(half, +1)),
            "BAAA",
        )
        aabb = Leaf(
            _pix("AABB", _price(a / 2), _price(a / 2), _price(b / 2), _price(b / 2)),
            "AABB",
        )
        return ChoiceNode(
            agent=0,
            options=(
                ("ABAB", abab),
                ("else", ChoiceNode(agent=1, options=(("BAAA", baaa), ("AABB", aabb)))),
            ),
        )

    if label == "m4n3:range1":
        return Leaf(
            _pix("AABA",
                 _price(a - b - c, -2), _price(b, +1), _price(b), _price(c, +1)),
            "AABA",
        )
    if label == "m4n3:range2":
        return Leaf(
            _pix("AABC", _price(a - b, -1), _price(b, +1), _price(b), _price(c)),
            "AABC",
        )
    if label == "m4n3:range3":
        return Leaf(
            _pix("ABAC", _price(b, +1), _price(b), _price(a - b, -1), _price(c)),
            "ABAC",
        )
    if label == "m4n3:range4":
        if not (b > 2 * c and a > 3 * c):
            raise AssertionError(
                "range 4 must imply b > 2c and a > 3c; dispatch is inconsistent"
            )
        abab = Leaf(
            _pix("ABAB",
                 _price(a - c, -2), _price(b - c, -1), _price(c, +2), _price(c, +1)),
            "ABAB",
        )
        p = max(c, (a - b) / 2)
        baaa = Leaf(
            _pix("BAAA",
                 _price(b), _price(a - 2 * p, -2), _price(p, +1), _price(p, +1)),
            "BAAA",
        )
        aabb = Leaf(
            _pix("AABB", _price(a / 2), _price(a / 2), _price(b / 2), _price(b / 2)),
            "AABB",
        )
        return ChoiceNode(
            agent=0,
            options=(
                ("ABAB", abab),
                ("else", ChoiceNode(agent=1, options=(("BAAA", baaa), ("AABB", aabb)))),
            ),
        )
    if label == "m4n3:range5":
        abcb = Leaf(
            _pix("ABCB", _price(a), _price(b, -1), _price(c), _price(0, +1)), "ABCB"
        )
        baac = Leaf(
            _pix("BAAC", _price(b), _price(a - c, -1), _price(c, +1), _price(c)),
            "BAAC",
        )
        return ChoiceNode(agent=0, options=(("ABCB", abcb), ("BAAC", baac)))
    if label == "m4n3:range6":
        abab = Leaf(
            _pix("ABAB",
                 _price(a - c, -2), _price(b - c, -1), _price(c, +2), _price(c, +1)),
            "ABAB",
        )
        abbc = Leaf(
            _pix("ABBC", _price(a), _price(b / 2), _price(b / 2), _price(c)), "ABBC"
        )
        baac = Leaf(
            _pix("BAAC", _price(b), _price(a - c, -1), _price(c, +1), _price(c)),
            "BAAC",
        )
        return ChoiceNode(
            agent=1,
            options=(
                ("ABAB", abab),
                ("else", ChoiceNode(agent=0, options=(("ABBC", abbc), ("BAAC", baac)))),
            ),
        )
    if label == "m4n3:range7":
        abcb = Leaf(
            _pix("ABCB", _price(a), _price(b, -1), _price(c), _price(0, +1)), "ABCB"
        )
        baca = Leaf(
            _pix("BACA", _price(b), _price(c, +1), _price(c), _price(a - c, -1)),
            "BACA",
        )
        return ChoiceNode(agent=0, options=(("ABCB", abcb), ("BACA", baca)))
    raise AssertionError(f"no game construction for range {label}")


@dataclass(frozen=True)
class SolveTranscript:
    """Audit trail of one solve: replaying it reproduces the same pair."""

    m: int
    n: int
    order: tuple[int, ...]  # agent indices, income-descending
    range_label: str
    game_label: str  # range label, suffixed when a fallback game was used
    game: GameNode
    execution: Execution  # over sorted agent indices
    epsilon: Fraction
    ce: CEPair  # over original agent indices

    def replay(
        self, profile: Sequence[PreferenceOrder], incomes: IncomeVector
    ) -> CEPair:
        pair, _ = solve(profile, incomes)
        return pair


def solve(
    profile: Sequence[PreferenceOrder], incomes: IncomeVector
) -> tuple[CEPair, SolveTranscript]:
    """Compute a verified equilibrium for a supported, generic instance.

    The returned allocation is indexed by the original agent order.  The
    transcript records the sorted order, the active income range, the
    game, and the chosen play.
    """
    n = len(profile)
    if len(incomes) != n:
        raise DimensionMismatchError(
            f"profile has {n} agents but incomes has {len(incomes)}"
        )
    m = profile[0].m
    if not _supported(m, n):
        raise UnsupportedCaseError(m, n)
    offending = violated_hyperplane(incomes, m)
    if offending is not None:
        raise NotGenericError(offending)

    order = incomes.descending_order()
    sorted_incomes = IncomeVector.of(incomes[i] for i in order)
    sorted_profile = [profile[i] for i in order]
    label = active_range(m, n, sorted_incomes.t)

    execution = sorted_pair = game = game_label = None
    for sublabel, candidate in _candidate_games(label, sorted_incomes.t, m):
        try:
            execution, sorted_pair = execute_to_ce(
                candidate, sorted_profile, sorted_incomes
            )[0]
        except NoValidSpeError:
            continue
        game, game_label = candidate, sublabel
        break
    if execution is None:
        raise NoValidSpeError(
            f"no candidate game for income range {label} has an equilibrium "
            "play for this profile; an exhaustive existence check of the "
            "instance is advised, since such profiles can lack any equilibrium"
        )

    bundles = [0] * n
    for pos, agent in enumerate(order):
        bundles[agent] = sorted_pair.allocation[pos]
    pair = CEPair(
        prices=sorted_pair.prices, allocation=Allocation(m=m, bundles=tuple(bundles))
    )
    transcript = SolveTranscript(
        m=m,
        n=n,
        order=order,
        range_label=label,
        game_label=game_label,
        game=game,
        execution=execution,
        epsilon=execution.epsilon,
        ce=pair,
    )
    return pair, transcript
