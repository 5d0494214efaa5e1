"""Potential families, projected measures, cube values and the Legendre transform.

Potential values are stored per ordering and level as length-``N`` arrays
indexed by map; entries outside the level's surviving index set are NaN.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .ifs import Ordering, SpongeIFS, project_index_set
from .orderings import admissible_orderings


@dataclass(frozen=True)
class WeightedMeasure:
    """Strictly positive probability vector on the maps."""

    weights: np.ndarray

    def __init__(self, weights: Sequence[float]):
        w = np.array(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights sum to {w.sum()}, not 1")
        w = w / w.sum()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> "WeightedMeasure":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.weights.size


def _check_measure(ifs: SpongeIFS, mu: WeightedMeasure) -> None:
    if len(mu) != ifs.size:
        raise ValueError(f"measure has {len(mu)} weights for {ifs.size} maps")


def project_measure(ifs: SpongeIFS, mu: WeightedMeasure, sigma: Sequence[int], n: int) -> np.ndarray:
    """Weights of the level-``n`` survivors, each collecting its overlap class.

    The result is aligned with ``project_index_set(ifs, sigma, n).indices``.
    """
    _check_measure(ifs, mu)
    sys = project_index_set(ifs, sigma, n)
    pos = sys.position
    out = np.zeros(len(sys.indices))
    for j, rep in enumerate(sys.proj):
        out[pos[rep]] += mu.weights[j]
    return out


def project_measure_full(ifs: SpongeIFS, mu: WeightedMeasure, sigma: Sequence[int], n: int) -> np.ndarray:
    """Same as :func:`project_measure` but as a length-``N`` array (NaN off the index set)."""
    sys = project_index_set(ifs, sigma, n)
    out = np.full(ifs.size, np.nan)
    out[list(sys.indices)] = project_measure(ifs, mu, sigma, n)
    return out


@dataclass(frozen=True)
class PotentialFamily:
    """Real values on every level's index set, for each ordering in the table.

    ``factory``, when given, builds the levels of an ordering missing from the
    table on first use.
    """

    table: dict[Ordering, tuple[np.ndarray, ...]]
    factory: Callable[[Ordering], tuple[np.ndarray, ...]] | None = field(default=None, compare=False)

    def levels(self, sigma: Sequence[int]) -> tuple[np.ndarray, ...]:
        sigma = tuple(sigma)
        if sigma not in self.table:
            if self.factory is None:
                raise KeyError(f"ordering {sigma} is not in the potential's table")
            self.table[sigma] = self.factory(sigma)
        return self.table[sigma]

    def level(self, sigma: Sequence[int], n: int) -> np.ndarray:
        return self.levels(sigma)[n - 1]

    def on_index_set(self, ifs: SpongeIFS, sigma: Sequence[int], n: int) -> np.ndarray:
        """Level-``n`` values restricted to the surviving indices, in order."""
        return self.level(sigma, n)[list(project_index_set(ifs, sigma, n).indices)]

    @property
    def orderings(self) -> tuple[Ordering, ...]:
        return tuple(self.table)


def _default_orderings(ifs: SpongeIFS, orderings: Iterable[Sequence[int]] | None) -> list[Ordering]:
    if orderings is None:
        return list(admissible_orderings(ifs).admissible)
    return [tuple(s) for s in orderings]


def potential_from_function(ifs: SpongeIFS, func: Callable[[Ordering, int, int], float],
                            orderings: Iterable[Sequence[int]] | None = None) -> PotentialFamily:
    """Family with value ``func(sigma, n, i)`` on each surviving index ``i``."""
    def build(sigma: Ordering) -> tuple[np.ndarray, ...]:
        out = []
        for n in range(1, ifs.dim + 1):
            arr = np.full(ifs.size, np.nan)
            for i in project_index_set(ifs, sigma, n).indices:
                arr[i] = float(func(sigma, n, i))
            if not np.all(np.isfinite(arr[list(project_index_set(ifs, sigma, n).indices)])):
                raise ValueError(f"non-finite potential value for ordering {sigma}, level {n}")
            arr.setflags(write=False)
            out.append(arr)
        return tuple(out)

    table = {s: build(s) for s in _default_orderings(ifs, orderings)}
    return PotentialFamily(table, build)


def zero_potential(ifs: SpongeIFS, orderings: Iterable[Sequence[int]] | None = None) -> PotentialFamily:
    return potential_from_function(ifs, lambda s, n, i: 0.0, orderings)


def lq_potential(ifs: SpongeIFS, mu: WeightedMeasure, q: float,
                 orderings: Iterable[Sequence[int]] | None = None) -> PotentialFamily:
    """Family ``q * log mu_n(i)`` built from the projected measures."""
    _check_measure(ifs, mu)
    q = float(q)

    def build(sigma: Ordering) -> tuple[np.ndarray, ...]:
        out = []
        for n in range(1, ifs.dim + 1):
            arr = q * np.log(project_measure_full(ifs, mu, sigma, n))
            arr.setflags(write=False)
            out.append(arr)
        return tuple(out)

    table = {s: build(s) for s in _default_orderings(ifs, orderings)}
    return PotentialFamily(table, build)


def all_orderings(d: int) -> list[Ordering]:
    return list(itertools.permutations(range(d)))


def phi_value(cube, phi: PotentialFamily) -> float:
    """Sum of the level potentials over the symbols of each block of the cube."""
    levels = phi.levels(cube.ordering)
    total = 0.0
    for n, block in enumerate(cube.blocks, start=1):
        arr = levels[n - 1]
        for i in block:
            total += arr[i]
    return float(total)


def _log_weights(ifs: SpongeIFS, mu: WeightedMeasure, sigma: Ordering, n: int) -> list[float]:
    key = ("log_weights", mu.weights.tobytes(), tuple(sigma), n)
    if key not in ifs._cache:
        with np.errstate(invalid="ignore"):
            ifs._cache[key] = np.log(project_measure_full(ifs, mu, sigma, n)).tolist()
    return ifs._cache[key]


def cube_measure(ifs: SpongeIFS, cube, mu: WeightedMeasure) -> tuple[float, float]:
    """``(log measure, measure)`` of a symbolic approximate cube."""
    log_m = 0.0
    for n, block in enumerate(cube.blocks, start=1):
        if block:
            logs = _log_weights(ifs, mu, cube.ordering, n)
            log_m += sum(logs[s] for s in block)
    return log_m, math.exp(log_m)


def legendre_transform(q: Sequence[float], T: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Discrete concave conjugate ``f(alpha) = min_q (q alpha + T(q))``.

    The slopes ``alpha`` are the negated chord slopes of the sampled
    spectrum, rounded to 12 digits and de-duplicated; no interpolation is done.

    Returns
    -------
    alpha, f : ndarray
        Sorted by increasing ``alpha``.
    """
    q = np.asarray(q, dtype=float)
    T = np.asarray(T, dtype=float)
    if q.size < 2 or q.shape != T.shape:
        raise ValueError("need at least two (q, T) samples of equal length")
    order = np.argsort(q)
    q, T = q[order], T[order]
    dq = np.diff(q)
    keep = dq > 0
    slopes = -np.diff(T)[keep] / dq[keep]
    if slopes.size == 0:
        raise ValueError("need at least two distinct q values")
    alpha = np.unique(np.round(slopes, 12))
    f = np.min(q[None, :] * alpha[:, None] + T[None, :], axis=1)
    return alpha, f
