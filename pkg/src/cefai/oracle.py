"""Ground-truth existence oracle: exhaustive allocations, exact feasibility.

For every one of the ``n^m`` allocations the oracle asks whether some
strictly positive price vector satisfies both equilibrium conditions.
Strict inequalities are turned into weak ones with a shared slack
variable ``s`` (capped at 1): the open system has a solution iff the
closed system admits ``s > 0``.  Feasibility is decided by exact
rational Fourier-Motzkin elimination after Gaussian elimination of the
budget equalities, so boundary cases can never be fabricated or lost to
rounding.

Two cheap necessary conditions prune allocations before the elimination
runs; both are provable consequences of the full system, so pruning
never changes the answer (and can be switched off for cross-checking).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import gcd
from typing import Sequence

from .core import Bundle, PreferenceOrder, all_bundles, bundle_size, is_subset, items_of
from .market import (
    Allocation,
    CEPair,
    DimensionMismatchError,
    IncomeRegion,
    IncomeVector,
    PriceVector,
    verify_ce,
)

MAX_ORACLE_ITEMS = 6


class InstanceTooLargeError(ValueError):
    def __init__(self, m: int):
        super().__init__(
            f"exhaustive existence check supports at most {MAX_ORACLE_ITEMS} items, got {m}"
        )


# A row of length m+2 over (p_0..p_{m-1}, s, 1) encodes
#     sum(row[v] * var_v) + row[m+1] >= 0     (or == 0 for equalities).
Row = tuple[int, ...]


def _scale_to_int(frac_row: Sequence[Fraction]) -> Row:
    denom = 1
    for v in frac_row:
        denom = denom * v.denominator // gcd(denom, v.denominator)
    ints = [int(v * denom) for v in frac_row]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(ints)


def _normalize(row: Sequence[int]) -> Row:
    g = 0
    for v in row:
        g = gcd(g, abs(v))
    if g > 1:
        row = [v // g for v in row]
    return tuple(row)


class _Infeasible(Exception):
    pass


def _substitute(row: list[Fraction], var: int, expr: list[Fraction]) -> None:
    coeff = row[var]
    if coeff == 0:
        return
    row[var] = Fraction(0)
    for u, e in enumerate(expr):
        if e:
            row[u] += coeff * e


def _gauss(equalities: list[list[Fraction]], width: int):
    """Eliminate equality rows; returns substitutions in elimination order.

    Each substitution is (var, expr) with var = expr·(vars, 1); rows that
    reduce to 0 = nonzero raise ``_Infeasible``.
    """
    subs: list[tuple[int, list[Fraction]]] = []
    for row in equalities:
        row = list(row)
        for var, expr in subs:
            _substitute(row, var, expr)
        pivot = next((v for v in range(width - 2) if row[v] != 0), None)
        if pivot is None:
            if row[-1] != 0:
                raise _Infeasible
            continue
        coeff = row[pivot]
        expr = [Fraction(0)] * width
        for u in range(width):
            if u != pivot and row[u] != 0:
                expr[u] = -row[u] / coeff
        subs.append((pivot, expr))
    return subs


def _fourier_motzkin(rows: set[Row], variables: list[int], width: int):
    """Eliminate ``variables`` from weak inequality rows.

    Returns (final rows, stack of (var, rows before its elimination)) for
    back-substitution.  Raises ``_Infeasible`` on a contradiction.
    """
    stack: list[tuple[int, list[Row]]] = []
    active = set(rows)
    remaining = list(variables)
    while remaining:
        best = min(
            remaining,
            key=lambda v: sum(1 for r in active if r[v] > 0)
            * sum(1 for r in active if r[v] < 0),
        )
        remaining.remove(best)
        pos = [r for r in active if r[best] > 0]
        neg = [r for r in active if r[best] < 0]
        keep = {r for r in active if r[best] == 0}
        stack.append((best, pos + neg))
        for p in pos:
            for q in neg:
                combined = [
                    p[i] * (-q[best]) + q[i] * p[best] for i in range(width)
                ]
                if not any(combined[:-1]):
                    if combined[-1] < 0:
                        raise _Infeasible
                    continue
                keep.add(_normalize(combined))
        active = keep
    return active, stack


def _bounds(rows, var: int, values: dict[int, Fraction]):
    lo = hi = None
    for row in rows:
        coeff = row[var]
        if coeff == 0:
            continue
        rest = row[-1] + sum(
            Fraction(row[u]) * values[u]
            for u in range(len(row) - 1)
            if u != var and row[u] != 0
        )
        bound = -Fraction(rest, coeff)
        if coeff > 0:
            lo = bound if lo is None else max(lo, bound)
        else:
            hi = bound if hi is None else min(hi, bound)
    return lo, hi


def _pick_within(lo: Fraction | None, hi: Fraction | None) -> Fraction:
    if lo is not None and hi is not None:
        return (lo + hi) / 2
    if lo is not None:
        return lo + 1
    if hi is not None:
        return hi - 1
    return Fraction(0)


def _ce_system(
    profile: Sequence[PreferenceOrder],
    incomes: IncomeVector,
    masks: Sequence[Bundle],
):
    """Budget equalities and slack-encoded strict inequalities for one
    allocation.  Variables: item prices, then the slack s."""
    m = profile[0].m
    s_var = m
    width = m + 2
    empty_income = [incomes[i] for i in range(len(masks)) if masks[i] == 0]
    floor = max(empty_income) if empty_income else Fraction(0)

    inequalities: list[list[Fraction]] = []
    for j in range(m):
        row = [Fraction(0)] * width
        row[j] = Fraction(1)
        row[s_var] = Fraction(-1)
        row[-1] = -floor
        inequalities.append(row)
    cap = [Fraction(0)] * width
    cap[s_var] = Fraction(-1)
    cap[-1] = Fraction(1)
    inequalities.append(cap)

    equalities: list[list[Fraction]] = []
    for i, own in enumerate(masks):
        if own == 0:
            continue  # singleton floors above already dominate every bundle
        row = [Fraction(0)] * width
        for j in items_of(own):
            row[j] = Fraction(1)
        row[-1] = -incomes[i]
        equalities.append(row)
        own_rank = profile[i].rank_of(own)
        for y in all_bundles(m):
            if profile[i].rank[y] <= own_rank:
                continue
            if is_subset(own, y):
                continue  # costs the bundle price plus extra items: implied
            row = [Fraction(0)] * width
            for j in items_of(y):
                row[j] = Fraction(1)
            row[s_var] = Fraction(-1)
            row[-1] = -incomes[i]
            inequalities.append(row)
    return equalities, inequalities, width


def feasible_ce_prices(
    profile: Sequence[PreferenceOrder],
    incomes: IncomeVector,
    allocation: Allocation,
) -> PriceVector | None:
    """A strictly positive price vector making the allocation an
    equilibrium, or None when the system is infeasible."""
    masks = allocation.bundles
    m = profile[0].m
    s_var = m
    equalities, inequalities, width = _ce_system(profile, incomes, masks)
    try:
        subs = _gauss(equalities, width)
        rows = set()
        for frac_row in inequalities:
            frac_row = list(frac_row)
            for var, expr in subs:
                _substitute(frac_row, var, expr)
            row = _scale_to_int(frac_row)
            if not any(row[:-1]):
                if row[-1] < 0:
                    raise _Infeasible
                continue
            rows.add(row)
        eliminated = {var for var, _ in subs}
        free = [v for v in range(m) if v not in eliminated]
        rows, stack = _fourier_motzkin(rows, free, width)
    except _Infeasible:
        return None

    s_lo = s_hi = None
    for row in rows:
        if row[s_var] == 0:
            if row[-1] < 0:
                return None
            continue
        bound = -Fraction(row[-1], row[s_var])
        if row[s_var] > 0:
            s_lo = bound if s_lo is None else max(s_lo, bound)
        else:
            s_hi = bound if s_hi is None else min(s_hi, bound)
    if s_hi is None:
        s_hi = Fraction(1)  # the cap row always bounds s; defensive only
    if s_lo is not None and s_lo > s_hi:
        return None
    if s_hi <= 0:
        return None

    values = {v: Fraction(0) for v in range(width - 1)}
    values[s_var] = s_hi
    for var, held in reversed(stack):
        lo, hi = _bounds(held, var, values)
        values[var] = _pick_within(lo, hi)
    for var, expr in reversed(subs):
        values[var] = expr[-1] + sum(
            expr[u] * values[u] for u in range(width - 1) if expr[u]
        )
    return PriceVector.of(values[j] for j in range(m))


def _passes_prefilters(
    profile: Sequence[PreferenceOrder],
    incomes: IncomeVector,
    masks: Sequence[Bundle],
) -> bool:
    """Cheap necessary conditions for equilibrium feasibility.

    (1) every item must cost more than any empty-handed agent's income,
    so a k-item bundle's owner needs an income above k times that; and
    (2) an agent never affords another's bundle priced at a smaller or
    equal income, so preferring it is immediately fatal.
    """
    empty_income = [incomes[i] for i in range(len(masks)) if masks[i] == 0]
    if empty_income:
        floor = max(empty_income)
        for j, own in enumerate(masks):
            if own and incomes[j] <= bundle_size(own) * floor:
                return False
    for i, pref in enumerate(profile):
        own_rank = pref.rank_of(masks[i])
        for j, other in enumerate(masks):
            if j == i or other == 0:
                continue
            if incomes[j] <= incomes[i] and pref.rank[other] > own_rank:
                return False
    return True


def ce_exists(
    profile: Sequence[PreferenceOrder],
    incomes: IncomeVector,
    use_prefilters: bool = True,
) -> CEPair | None:
    """First equilibrium witness in allocation-enumeration order, or None.

    Allocations are enumerated as a mixed-radix counter over agent
    indices, item 0 most significant.  The witness is re-verified before
    being returned.
    """
    n = len(profile)
    if len(incomes) != n:
        raise DimensionMismatchError(
            f"profile has {n} agents but incomes has {len(incomes)}"
        )
    m = profile[0].m
    if m > MAX_ORACLE_ITEMS:
        raise InstanceTooLargeError(m)
    for assignment in product(range(n), repeat=m):
        masks = [0] * n
        for item, agent in enumerate(assignment):
            masks[agent] |= 1 << item
        if use_prefilters and not _passes_prefilters(profile, incomes, masks):
            continue
        prices = feasible_ce_prices(
            profile, incomes, Allocation(m=m, bundles=tuple(masks))
        )
        if prices is None:
            continue
        pair = CEPair(prices=prices, allocation=Allocation(m=m, bundles=tuple(masks)))
        report = verify_ce(profile, incomes, pair)
        if not report.valid:
            raise AssertionError(
                "feasibility witness failed verification; elimination is buggy: "
                + "; ".join(v.describe() for v in report.violations)
            )
        return pair
    return None


@dataclass(frozen=True)
class RegionReport:
    checked: int
    failures: tuple[tuple[IncomeVector, CEPair], ...]

    @property
    def clean(self) -> bool:
        return not self.failures


def no_ce_on_region(
    profile: Sequence[PreferenceOrder],
    region: IncomeRegion,
    seed: int,
    trials: int,
) -> RegionReport:
    """Sample incomes in the region and report any equilibrium found.

    An empty failure list certifies (by exhaustive per-point checking)
    that no sampled income vector admits an equilibrium.
    """
    failures = []
    for point in region.sample(seed, trials):
        witness = ce_exists(profile, point)
        if witness is not None:
            failures.append((point, witness))
    return RegionReport(checked=trials, failures=tuple(failures))
