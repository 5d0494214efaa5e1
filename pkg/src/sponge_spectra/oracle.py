"""Exact finite-scale enumeration of symbolic approximate cubes.

A word is extended symbol by symbol. While ``n`` coordinates are still
running, symbols are drawn from the level-``n`` index set of those
coordinates; a coordinate stops once its exact running product of ratios
drops to ``<= delta``. Coordinates stopping together are ordered by the
smaller index first. The cube is complete when every coordinate has stopped.

Aggregates (cube counts, potential sums, measure extremes) are computed by
the same depth-first walk with memoisation on the walk state (stopped
coordinates and the exact running products), which visits every cube exactly
once without materialising it. :func:`enumerate_cubes` yields the cubes one
by one.
"""

from __future__ import annotations

import math
import sys
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import entr, logsumexp

from .ifs import Ordering, SpongeIFS, as_fraction, project_index_set
from .orderings import coefficient_values, level_data
from .potentials import PotentialFamily, WeightedMeasure, project_measure_full

DEFAULT_BUDGET = 10**8


class BudgetExceeded(RuntimeError):
    """The number of cubes at this scale exceeds the configured budget."""

    def __init__(self, count: int, budget: int):
        super().__init__(f"{count} cubes exceed the budget of {budget}")
        self.count = count
        self.budget = budget


@dataclass(frozen=True)
class ApproximateCube:
    """Symbolic approximate cube.

    ``stoppings[k]`` is the stopping index of coordinate ``k``;
    ``blocks[n - 1]`` holds the level-``n`` symbols (survivor indices) and
    ``log_sides[k]`` the log of the running product of coordinate ``k`` at
    its stopping.
    """

    ordering: Ordering
    stoppings: tuple[int, ...]
    blocks: tuple[tuple[int, ...], ...]
    log_sides: tuple[float, ...]

    @property
    def length(self) -> int:
        return max(self.stoppings)


@dataclass(frozen=True)
class TypeVector:
    """Symbol counts per level of a cube (aligned with the level index sets)."""

    ordering: Ordering
    counts: tuple[tuple[int, ...], ...]

    @property
    def lengths(self) -> tuple[int, ...]:
        return tuple(sum(c) for c in self.counts)

    def frequencies(self) -> list[np.ndarray]:
        """Normalised counts; an empty block gives the zero vector."""
        out = []
        for c in self.counts:
            c = np.array(c, dtype=float)
            s = c.sum()
            out.append(c / s if s > 0 else c)
        return out


class _Walker:
    def __init__(self, ifs: SpongeIFS, delta):
        delta = as_fraction(delta)
        if not 0 < delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {delta}")
        self.ifs = ifs
        self.delta = delta
        self.d = ifs.dim
        self.ratios = ifs.exact_ratios
        self._alphabets: dict[frozenset, tuple[int, ...]] = {}

    def alphabet(self, stopped: tuple[int, ...]) -> tuple[int, ...]:
        active = frozenset(range(self.d)) - frozenset(stopped)
        if active not in self._alphabets:
            sigma = tuple(sorted(active)) + tuple(reversed(stopped))
            self._alphabets[active] = project_index_set(self.ifs, sigma, len(active)).indices
        return self._alphabets[active]

    def step(self, stopped: tuple[int, ...], prods: tuple[Fraction, ...], s: int):
        new = list(prods)
        fired = []
        for k in range(self.d):
            if k not in stopped:
                new[k] = prods[k] * self.ratios[s][k]
                if new[k] <= self.delta:
                    fired.append(k)
        if fired:
            stopped = stopped + tuple(sorted(fired, reverse=True))
        return stopped, tuple(new)

    def key(self, stopped, prods):
        return stopped, tuple(prods[k] for k in range(self.d) if k not in stopped)

    def start(self):
        return (), tuple(Fraction(1) for _ in range(self.d))


def _ordering(stopped: tuple[int, ...]) -> Ordering:
    return tuple(reversed(stopped))


def _with_recursion(func):
    def wrapper(*args, **kwargs):
        old = sys.getrecursionlimit()
        sys.setrecursionlimit(max(old, 20000))
        try:
            return func(*args, **kwargs)
        finally:
            sys.setrecursionlimit(old)
    return wrapper


@_with_recursion
def count_cubes(ifs: SpongeIFS, delta) -> dict[Ordering, int]:
    """Exact number of cubes of each ordering at scale ``delta``."""
    w = _Walker(ifs, delta)
    memo: dict = {}

    def rec(stopped, prods):
        if len(stopped) == w.d:
            return {_ordering(stopped): 1}
        key = w.key(stopped, prods)
        if key in memo:
            return memo[key]
        acc: Counter = Counter()
        for s in w.alphabet(stopped):
            acc.update(rec(*w.step(stopped, prods, s)))
        memo[key] = dict(acc)
        return memo[key]

    return dict(sorted(rec(*w.start()).items()))


def check_budget(ifs: SpongeIFS, delta, budget: int | None = DEFAULT_BUDGET) -> int:
    """Total cube count, raising :class:`BudgetExceeded` when above ``budget``."""
    total = sum(count_cubes(ifs, delta).values())
    if budget is not None and total > budget:
        raise BudgetExceeded(total, int(budget))
    return total


Weight = Callable[[Ordering, int, int], float]
_REDUCERS = {
    "logsumexp": lambda v: float(logsumexp(v)),
    "max": lambda v: float(np.max(v)),
    "min": lambda v: float(np.min(v)),
}


@_with_recursion
def fold_cubes(ifs: SpongeIFS, delta, weight: Weight, reducer: str = "logsumexp"
               ) -> dict[Ordering, float]:
    """Reduce ``sum of weight(sigma, n, symbol)`` over the cubes of each ordering.

    ``reducer`` is ``"logsumexp"``, ``"max"`` or ``"min"``. The additive
    weight of a cube is the sum over its blocks and symbols.
    """
    red = _REDUCERS[reducer]
    w = _Walker(ifs, delta)
    memo: dict = {}

    def rec(stopped, prods):
        if len(stopped) == w.d:
            return {_ordering(stopped): 0.0}
        key = w.key(stopped, prods)
        if key in memo:
            return memo[key]
        n = w.d - len(stopped)
        parts: dict[Ordering, list[float]] = {}
        for s in w.alphabet(stopped):
            for sigma, v in rec(*w.step(stopped, prods, s)).items():
                parts.setdefault(sigma, []).append(weight(sigma, n, s) + v)
        out = {sigma: red(np.array(v)) for sigma, v in parts.items()}
        memo[key] = out
        return out

    return dict(sorted(rec(*w.start()).items()))


def enumerate_cubes(ifs: SpongeIFS, delta, budget: int | None = DEFAULT_BUDGET,
                    ordering: Sequence[int] | None = None) -> Iterator[ApproximateCube]:
    """Yield every approximate cube at scale ``delta``, grouped by ordering.

    Raises :class:`BudgetExceeded` before yielding anything when the cube
    count is above ``budget``. With ``ordering`` only that ordering's cubes
    are produced.
    """
    counts = count_cubes(ifs, delta)
    total = sum(counts.values())
    if budget is not None and total > budget:
        raise BudgetExceeded(total, int(budget))
    targets = list(counts) if ordering is None else [tuple(ordering)]
    for target in targets:
        if target in counts:
            yield from _enumerate_one(ifs, delta, target)


def _enumerate_one(ifs: SpongeIFS, delta, target: Ordering) -> Iterator[ApproximateCube]:
    # iterative depth-first walk over interned states; transitions are memoised
    # since the number of distinct (stopped, products) states is tiny compared
    # to the cube count
    w = _Walker(ifs, delta)
    d = w.d
    suffix = tuple(reversed(target))
    states: list[tuple] = []
    ids: dict = {}
    transitions: dict[int, list] = {}

    def intern(stopped, prods) -> int:
        key = w.key(stopped, prods)
        if key not in ids:
            ids[key] = len(states)
            states.append((stopped, prods))
        return ids[key]

    def children(state: int) -> list:
        if state not in transitions:
            stopped, prods = states[state]
            n = d - len(stopped)
            out = []
            for s in w.alphabet(stopped):
                new_stopped, new_prods = w.step(stopped, prods, s)
                if new_stopped != suffix[:len(new_stopped)]:
                    continue
                fired = new_stopped[len(stopped):]
                if len(new_stopped) == d:
                    out.append((n, s, None, fired, tuple(math.log(p) for p in new_prods)))
                else:
                    out.append((n, s, intern(new_stopped, new_prods), fired, None))
            transitions[state] = out
        return transitions[state]

    stops = [0] * d
    word: list[tuple[int, int]] = []  # (level, symbol)
    stack = [iter(children(intern(*w.start())))]
    while stack:
        nxt = next(stack[-1], None)
        if nxt is None:
            stack.pop()
            if word:
                word.pop()
            continue
        n, s, child, fired, log_sides = nxt
        word.append((n, s))
        for k in fired:
            stops[k] = len(word)
        if child is None:
            blocks = [[] for _ in range(d)]
            for level, sym in word:
                blocks[level - 1].append(sym)
            yield ApproximateCube(target, tuple(stops), tuple(tuple(b) for b in blocks), log_sides)
            word.pop()
        else:
            stack.append(iter(children(child)))


@dataclass(frozen=True)
class OracleEstimate:
    delta: float
    estimate: float
    log_sums: dict[Ordering, float]
    counts: dict[Ordering, int]

    @property
    def log_sum(self) -> float:
        return float(logsumexp(list(self.log_sums.values())))


def finite_scale_pressure(ifs: SpongeIFS, phi: PotentialFamily, delta,
                          budget: int | None = DEFAULT_BUDGET) -> OracleEstimate:
    """``log sum_B exp(Phi(B)) / (-log delta)`` over all cubes at scale ``delta``."""
    counts = count_cubes(ifs, delta)
    total = sum(counts.values())
    if budget is not None and total > budget:
        raise BudgetExceeded(total, int(budget))
    sums = fold_cubes(ifs, delta, lambda sigma, n, s: float(phi.level(sigma, n)[s]))
    log_delta = math.log(float(as_fraction(delta)))
    return OracleEstimate(float(as_fraction(delta)), float(logsumexp(list(sums.values()))) / -log_delta,
                          sums, counts)


def finite_scale_measure_extremes(ifs: SpongeIFS, mu: WeightedMeasure, delta,
                                  budget: int | None = DEFAULT_BUDGET) -> dict:
    """Largest and smallest log cube measure, also divided by ``log delta``.

    Returns a dict with keys ``max_log``, ``min_log``, ``heavy_exponent``
    (the smallest exponent, from the heaviest cube), ``light_exponent`` and
    the per-ordering ``(max_log, min_log)`` pairs.
    """
    check_budget(ifs, delta, budget)
    cache: dict = {}

    def weight(sigma, n, s):
        key = (sigma, n)
        if key not in cache:
            cache[key] = np.log(project_measure_full(ifs, mu, sigma, n))
        return float(cache[key][s])

    hi = fold_cubes(ifs, delta, weight, "max")
    lo = fold_cubes(ifs, delta, weight, "min")
    log_delta = math.log(float(as_fraction(delta)))
    max_log, min_log = max(hi.values()), min(lo.values())
    return {
        "max_log": max_log,
        "min_log": min_log,
        "heavy_exponent": max_log / log_delta,
        "light_exponent": min_log / log_delta,
        "per_ordering": {s: (hi[s], lo[s]) for s in hi},
    }


def cube_type(ifs: SpongeIFS, cube: ApproximateCube) -> TypeVector:
    data = level_data(ifs, cube.ordering)
    counts = []
    for sys_n, block in zip(data.systems, cube.blocks):
        pos = sys_n.position
        c = [0] * len(sys_n.indices)
        for s in block:
            c[pos[s]] += 1
        counts.append(tuple(c))
    return TypeVector(cube.ordering, tuple(counts))


def type_census(ifs: SpongeIFS, delta, sigma: Sequence[int],
                budget: int | None = DEFAULT_BUDGET) -> dict[TypeVector, int]:
    """Number of cubes of ordering ``sigma`` with each type."""
    census: Counter = Counter()
    for cube in enumerate_cubes(ifs, delta, budget, ordering=sigma):
        census[cube_type(ifs, cube)] += 1
    return dict(census)


# --- type counting checks ---------------------------------------------------

def type_class_log_bounds(ifs: SpongeIFS, tv: TypeVector) -> tuple[float, float]:
    """Log of the method-of-types lower and upper bounds for a type class size."""
    upper = 0.0
    penalty = 0.0
    for c in tv.counts:
        length = sum(c)
        if length:
            p = np.array(c, dtype=float) / length
            upper += length * float(np.sum(entr(p)))
        penalty += len(c) * math.log(length + 1)
    return upper - penalty, upper


def type_count_bound(ifs: SpongeIFS, census: dict[TypeVector, int]) -> float:
    """Log of the crude bound on the number of distinct types."""
    if not census:
        return 0.0
    tv0 = next(iter(census))
    data = level_data(ifs, tv0.ordering)
    max_len = np.max([tv.lengths for tv in census], axis=0)
    return float(sum((size + 1) * math.log(m + 1) for size, m in zip(data.sizes, max_len)))


def stopping_sandwich(ifs: SpongeIFS, tv: TypeVector, delta) -> list[tuple[float, int, float]]:
    """Per level ``(lower, block length, upper)`` from the coefficients of the type."""
    data = level_data(ifs, tv.ordering)
    c = coefficient_values(data, tv.frequencies())
    log_delta = math.log(float(as_fraction(delta)))
    factor = 1.0 + math.log(ifs.lambda_min) / log_delta
    return [(-c[n] * log_delta, tv.lengths[n], -factor * c[n] * log_delta) for n in range(ifs.dim)]


def stopping_inequalities(ifs: SpongeIFS, tv: TypeVector, delta) -> list[tuple[float, float, float]]:
    """Per level ``(-log delta, accumulated exponent, -log delta - log lambda_min)``.

    The middle entry is ``sum_{m >= n} len_m chi_n(p_m)``, the log of the
    running product of coordinate ``sigma_n`` at its stopping, negated. By
    definition of the stopping it lies in the half-open interval.
    """
    data = level_data(ifs, tv.ordering)
    counts = [np.array(c, dtype=float) for c in tv.counts]
    log_delta = math.log(float(as_fraction(delta)))
    out = []
    for n in range(ifs.dim):
        acc = sum(float(counts[m] @ data.neglog[m][:, n]) for m in range(n, ifs.dim))
        out.append((-log_delta, acc, -log_delta - math.log(ifs.lambda_min)))
    return out
