"""Stoppings, scale orderings, Lyapunov exponents and block-length coefficients.

A :class:`ProbStack` holds one probability vector per level for a fixed
ordering. ``levels[n - 1]`` is the vector of level ``n`` and is aligned with
the surviving indices ``project_index_set(ifs, sigma, n).indices``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .ifs import Ordering, ProjectedSystem, SpongeIFS, as_fraction, projected_levels
from .simplex_opt import SimplexProblem, default_seeds, random_starts

Q_TOL = 1e-12
FEASIBLE_MARGIN = 1e-9


@dataclass(frozen=True)
class PeriodicWord:
    """Eventually periodic infinite word ``preperiod + period period ...``."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]

    def __init__(self, period: Sequence[int], preperiod: Sequence[int] = ()):
        if len(period) == 0:
            raise ValueError("period must be non-empty")
        object.__setattr__(self, "period", tuple(int(i) for i in period))
        object.__setattr__(self, "preperiod", tuple(int(i) for i in preperiod))

    def symbols(self) -> Iterator[int]:
        return itertools.chain(self.preperiod, itertools.cycle(self.period))

    def prefix(self, length: int) -> tuple[int, ...]:
        return tuple(itertools.islice(self.symbols(), length))

    def check(self, ifs: SpongeIFS) -> None:
        for i in self.preperiod + self.period:
            if not 0 <= i < ifs.size:
                raise IndexError(f"symbol {i} not in 0..{ifs.size - 1}")


def _as_delta(delta) -> Fraction:
    delta = as_fraction(delta)
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return delta


def stoppings(ifs: SpongeIFS, word: PeriodicWord, delta) -> tuple[int, ...]:
    """Stopping index of every coordinate, computed with exact rationals.

    Coordinate ``k`` stops at the first ``L`` where the running product of
    ``lambda^(k)`` over the first ``L`` symbols is ``<= delta``.
    """
    word.check(ifs)
    delta = _as_delta(delta)
    ratios = ifs.exact_ratios
    d = ifs.dim
    prod = [Fraction(1)] * d
    out: list[int | None] = [None] * d
    remaining = d
    for pos, i in enumerate(word.symbols(), start=1):
        for k in range(d):
            if out[k] is None:
                prod[k] *= ratios[i][k]
                if prod[k] <= delta:
                    out[k] = pos
                    remaining -= 1
        if remaining == 0:
            return tuple(out)  # type: ignore[arg-type]
    raise AssertionError("unreachable")


def stopping(ifs: SpongeIFS, word: PeriodicWord, delta, k: int) -> int:
    """Stopping index of coordinate ``k`` (0-based)."""
    if not 0 <= k < ifs.dim:
        raise IndexError(f"coordinate {k} out of range")
    return stoppings(ifs, word, delta)[k]


def ordering_from_stoppings(stops: Sequence[int]) -> Ordering:
    """Sort coordinates by decreasing stopping; ties keep the smaller coordinate first."""
    return tuple(sorted(range(len(stops)), key=lambda k: (-stops[k], k)))


def scale_ordering(ifs: SpongeIFS, word: PeriodicWord, delta) -> Ordering:
    return ordering_from_stoppings(stoppings(ifs, word, delta))


@dataclass(frozen=True)
class LevelData:
    """Per-ordering lookup tables used by the numerical routines."""

    ordering: Ordering
    systems: tuple[ProjectedSystem, ...]
    neglog: tuple[np.ndarray, ...]  # level n: (|I_n|, d) array of -log lambda_i^(sigma_k)

    @property
    def sizes(self) -> list[int]:
        return [len(s.indices) for s in self.systems]


def level_data(ifs: SpongeIFS, sigma: Sequence[int]) -> LevelData:
    sigma = tuple(sigma)
    key = ("level_data", sigma)
    if key not in ifs._cache:
        systems = projected_levels(ifs, sigma)
        neg = -ifs.log_ratios[:, list(sigma)]
        neglog = tuple(neg[list(s.indices)] for s in systems)
        ifs._cache[key] = LevelData(sigma, systems, neglog)
    return ifs._cache[key]


def lyapunov(ifs: SpongeIFS, p: Sequence[float], sigma: Sequence[int], n: int,
             m: int | None = None) -> float:
    """Lyapunov exponent ``-sum_i p(i) log lambda_i^(sigma_n)``.

    ``p`` is a vector on the level-``m`` index set (``m`` defaults to ``n``),
    and ``n <= m``.
    """
    m = n if m is None else m
    if not 1 <= n <= m <= ifs.dim:
        raise ValueError(f"need 1 <= n <= m <= d, got n={n}, m={m}")
    data = level_data(ifs, sigma)
    p = np.asarray(p, dtype=float)
    return float(p @ data.neglog[m - 1][:, n - 1])


@dataclass(frozen=True)
class ProbStack:
    """One probability vector per level for a fixed ordering."""

    ordering: Ordering
    levels: tuple[np.ndarray, ...]

    @classmethod
    def from_levels(cls, ifs: SpongeIFS, sigma: Sequence[int], levels: Sequence[Sequence[float]],
                    normalize: bool = True) -> "ProbStack":
        data = level_data(ifs, sigma)
        if len(levels) != ifs.dim:
            raise ValueError(f"expected {ifs.dim} levels, got {len(levels)}")
        out = []
        for n, (v, size) in enumerate(zip(levels, data.sizes), start=1):
            v = np.array(v, dtype=float)
            if v.shape != (size,):
                raise ValueError(f"level {n} needs {size} entries, got {v.shape}")
            if np.any(v < 0) or not np.all(np.isfinite(v)):
                raise ValueError(f"level {n} has negative or non-finite entries")
            s = v.sum()
            if normalize:
                if s <= 0:
                    raise ValueError(f"level {n} has zero mass")
                v = v / s
            elif abs(s - 1) > 1e-12:
                raise ValueError(f"level {n} sums to {s}")
            v.setflags(write=False)
            out.append(v)
        return cls(tuple(data.ordering), tuple(out))

    @classmethod
    def uniform(cls, ifs: SpongeIFS, sigma: Sequence[int]) -> "ProbStack":
        return cls.from_levels(ifs, sigma, [np.ones(k) for k in level_data(ifs, sigma).sizes])

    @classmethod
    def random(cls, ifs: SpongeIFS, sigma: Sequence[int], rng: np.random.Generator,
               concentration: float = 1.0) -> "ProbStack":
        sizes = level_data(ifs, sigma).sizes
        return cls.from_levels(ifs, sigma, [rng.dirichlet(np.full(k, concentration)) for k in sizes])

    @classmethod
    def degenerate(cls, ifs: SpongeIFS, sigma: Sequence[int], choice: Sequence[int]) -> "ProbStack":
        """Point masses; ``choice[n - 1]`` is a map index in the level-``n`` set."""
        data = level_data(ifs, sigma)
        levels = []
        for sys, i in zip(data.systems, choice):
            v = np.zeros(len(sys.indices))
            v[sys.position[i]] = 1.0
            levels.append(v)
        return cls.from_levels(ifs, sigma, levels)

    def flat(self) -> np.ndarray:
        return np.concatenate(self.levels)


@dataclass(frozen=True)
class Coefficients:
    values: np.ndarray

    def in_Q(self, tol: float = Q_TOL) -> bool:
        return bool(np.all(self.values >= -tol))

    @property
    def min(self) -> float:
        return float(self.values.min())


def lyapunov_table(data: LevelData, levels: Sequence[np.ndarray]) -> np.ndarray:
    """``chi[m - 1, n - 1]`` is the level-``n`` exponent of the level-``m`` vector."""
    d = len(data.ordering)
    chi = np.zeros((d, d))
    for m in range(d):
        chi[m] = np.asarray(levels[m], dtype=float) @ data.neglog[m]
    return chi


def coefficient_values(data: LevelData, levels: Sequence[np.ndarray]) -> np.ndarray:
    """Block-length coefficients from the top level down.

    ``C_d = 1 / chi_d(p_d)`` and
    ``C_n = (1 - sum_{m > n} C_m chi_n(p_m)) / chi_n(p_n)``. A level whose
    vector is identically zero (an empty block) gets coefficient 0.
    """
    d = len(data.ordering)
    chi = lyapunov_table(data, levels)
    c = np.zeros(d)
    for n in range(d - 1, -1, -1):
        if chi[n, n] == 0.0:
            c[n] = 0.0
            continue
        c[n] = (1.0 - float(c[n + 1:] @ chi[n + 1:, n])) / chi[n, n]
    return c


def coefficients(ifs: SpongeIFS, P: ProbStack) -> Coefficients:
    return Coefficients(coefficient_values(level_data(ifs, P.ordering), P.levels))


def in_Q(ifs: SpongeIFS, P: ProbStack, tol: float = Q_TOL) -> bool:
    """Membership in the set where every coefficient is non-negative."""
    return coefficients(ifs, P).in_Q(tol)


# --- admissible orderings -------------------------------------------------

@dataclass(frozen=True)
class OrderingStatus:
    status: str  # "certified-in" | "certified-out" | "heuristic-out"
    reason: str
    best_min_coefficient: float | None = None
    witness: ProbStack | None = None


@dataclass(frozen=True)
class Admissibility:
    statuses: dict[Ordering, OrderingStatus]

    @property
    def admissible(self) -> tuple[Ordering, ...]:
        return tuple(s for s, st in sorted(self.statuses.items()) if st.status == "certified-in")


def forced_precedence(ifs: SpongeIFS) -> set[tuple[int, int]]:
    """Pairs ``(u, v)`` such that ``u`` precedes ``v`` in every ordering met at small scales.

    If ``lambda^(v) <= lambda^(u)`` for every map, coordinate ``v`` never stops
    after ``u``. It stops strictly earlier at small scales when the inequality
    is strict for every map, and ties are broken toward the smaller coordinate,
    so ``u`` comes first whenever the inequality is strict throughout or
    ``u < v``.
    """
    ratios = ifs.exact_ratios
    out = set()
    for u in range(ifs.dim):
        for v in range(ifs.dim):
            if u == v:
                continue
            weak = all(r[v] <= r[u] for r in ratios)
            strict = all(r[v] < r[u] for r in ratios)
            if weak and (strict or u < v):
                out.add((u, v))
    return out


def asymptotic_ordering(ifs: SpongeIFS, period: Sequence[int]) -> Ordering | None:
    """Ordering realised by ``period`` repeated forever at all small scales.

    Returns ``None`` when two coordinates have equal products over the period
    without having identical ratios symbol by symbol, since the ordering may
    then oscillate with the scale.
    """
    ratios = ifs.exact_ratios
    d = ifs.dim
    prods = [Fraction(1)] * d
    for i in period:
        for k in range(d):
            prods[k] *= ratios[i][k]
    for u in range(d):
        for v in range(u + 1, d):
            if prods[u] == prods[v] and any(ratios[i][u] != ratios[i][v] for i in period):
                return None
    return tuple(sorted(range(d), key=lambda k: (-prods[k], k)))


def _sample_periods(ifs: SpongeIFS, seed: int = 0, n_random: int = 256) -> Iterator[tuple[int, ...]]:
    n = ifs.size
    for i in range(n):
        yield (i,)
    for i in range(n):
        for j in range(n):
            if i != j:
                for a in range(1, 4):
                    for b in range(1, 4):
                        yield (i,) * a + (j,) * b
    rng = np.random.default_rng(seed)
    for _ in range(n_random):
        length = int(rng.integers(2, 9))
        yield tuple(int(v) for v in rng.integers(0, n, size=length))


def max_min_coefficient(ifs: SpongeIFS, sigma: Sequence[int], seeds: Sequence[int] | None = None
                        ) -> tuple[float, ProbStack]:
    """Maximise ``min_{n < d} C_n`` over all probability stacks for ``sigma``."""
    data = level_data(ifs, sigma)
    d = ifs.dim
    seeds = default_seeds() if seeds is None else seeds
    if d == 1:
        P = ProbStack.uniform(ifs, sigma)
        return float(coefficients(ifs, P).values[0]), P

    def objective(levels, extra):
        return float(extra[0])

    def constraint(levels, extra):
        return coefficient_values(data, levels)[:-1] - extra[0]

    prob = SimplexProblem(data.sizes, objective, constraint, n_extra=1, tol=1e-12)
    starts = []
    for x0 in random_starts(data.sizes, seeds, n_extra=1):
        levels, _ = prob.unpack(x0)
        x0[-1] = coefficient_values(data, levels)[:-1].min()
        starts.append(x0)
    res = prob.solve(starts, polish=False)
    assert res is not None
    P = ProbStack.from_levels(ifs, sigma, list(res.levels))
    return coefficients(ifs, P).values[:-1].min(), P


def admissible_orderings(ifs: SpongeIFS, seeds: Sequence[int] | None = None) -> Admissibility:
    """Classify every ordering of the coordinates.

    An ordering is *certified-in* when a periodic word realises it at all
    small scales or when a stack with every coefficient strictly positive
    exists; *certified-out* when it contradicts a forced precedence between
    two coordinates (which decides every case in dimension at most 2);
    *heuristic-out* when the multi-start search found no strictly feasible
    stack.
    """
    seeds = tuple(default_seeds() if seeds is None else seeds)
    key = ("admissible", seeds)
    if key in ifs._cache:
        return ifs._cache[key]
    d = ifs.dim
    forced = forced_precedence(ifs)
    statuses: dict[Ordering, OrderingStatus] = {}
    undecided = []
    for sigma in itertools.permutations(range(d)):
        pos = {k: p for p, k in enumerate(sigma)}
        broken = next(((u, v) for u, v in forced if pos[u] > pos[v]), None)
        if broken is not None:
            u, v = broken
            statuses[sigma] = OrderingStatus(
                "certified-out",
                f"coordinate {v + 1} never stops after coordinate {u + 1} at small scales")
        else:
            undecided.append(sigma)

    realised: dict[Ordering, tuple[int, ...]] = {}
    if undecided:
        for period in _sample_periods(ifs, n_random=256 if d >= 3 else 0):
            sigma = asymptotic_ordering(ifs, period)
            if sigma is not None and sigma not in realised:
                realised[sigma] = period
            if all(s in realised for s in undecided):
                break
    for sigma in undecided:
        if sigma in realised:
            word = " ".join(str(i + 1) for i in realised[sigma])
            statuses[sigma] = OrderingStatus("certified-in", f"realised by the periodic word ({word})")
            continue
        best, P = max_min_coefficient(ifs, sigma, seeds)
        if best > FEASIBLE_MARGIN:
            statuses[sigma] = OrderingStatus(
                "certified-in", "found a stack with all coefficients strictly positive", best, P)
        elif d <= 2:
            statuses[sigma] = OrderingStatus(
                "certified-out", "no map realises it in dimension <= 2", best, P)
        else:
            statuses[sigma] = OrderingStatus(
                "heuristic-out", "multi-start search found no strictly feasible stack", best, P)
    result = Admissibility(dict(sorted(statuses.items())))
    ifs._cache[key] = result
    return result


def feasible_anchor(ifs: SpongeIFS, sigma: Sequence[int], seeds: Sequence[int] | None = None
                    ) -> ProbStack | None:
    """A stack in the constraint set for ``sigma``, or ``None`` if none was found."""
    sigma = tuple(sigma)
    key = ("anchor", sigma)
    if key not in ifs._cache:
        for candidate in (ProbStack.uniform(ifs, sigma),):
            if in_Q(ifs, candidate):
                ifs._cache[key] = candidate
                break
        else:
            best, P = max_min_coefficient(ifs, sigma, seeds)
            ifs._cache[key] = P if best >= -Q_TOL else None
    return ifs._cache[key]
