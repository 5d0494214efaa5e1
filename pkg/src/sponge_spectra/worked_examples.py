"""Reference checks on two explicit families.

The planar two-map carpet with ratios ``1/2`` and ``1/4`` has a piecewise
closed-form L^q spectrum for the measure ``(u, 1 - u)``. The three-dimensional
stacked sponge has closed-form exponents for both admissible orderings, and a
parameter grid search tests when the dominant types fall outside the
feasible sets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .families import (baranski_carpet, fraser_jurga_admissible, fraser_jurga_closed_forms,
                       fraser_jurga_dominant_coefficients)
from .potentials import WeightedMeasure
from .pressure import lq_spectrum

LOG2 = math.log(2.0)
GOLDEN_U = (math.sqrt(5.0) - 1.0) / 2.0  # 2^-s for the carpet's box dimension s
CARPET_U_VALUES = (0.5, 0.6, 0.7, GOLDEN_U + 0.05)
CARPET_Q_GRID = tuple(np.linspace(-3.0, 3.0, 61))
GRID_NS = (100, 500, 1000)
GRID_STEP = 0.05


def carpet_branch_exponent(u: float, q: float) -> float:
    """Root ``T`` of ``u^q 2^-T + (1 - u)^q 4^-T = 1``.

    With ``x = 2^-T`` this is a quadratic in ``x``; its positive root is
    ``2 / (u^q + sqrt(u^(2q) + 4 (1 - u)^q))``.
    """
    uq, vq = u ** q, (1.0 - u) ** q
    x = 2.0 / (uq + math.sqrt(uq * uq + 4.0 * vq))
    return -math.log(x) / LOG2


def carpet_transition(u: float) -> float:
    """Start of the affine regime, ``log 2 / log((1 - u) / u^2)``; ``inf`` when there is none."""
    base = (1.0 - u) / u ** 2
    return LOG2 / math.log(base) if base > 1.0 else math.inf


def carpet_reference(u: float, q: float) -> tuple[float, str]:
    """Closed-form spectrum of the carpet for ``u`` in ``[1/2, 1)``.

    Returns the value and the branch name: ``"weak"`` (the exponent with
    ``1 - u``) for ``q <= 0``, ``"strong"`` (the exponent with ``u``) up to the
    transition, and ``"affine"`` beyond it.
    """
    if not 0.5 <= u < 1.0:
        raise ValueError("u must lie in [1/2, 1)")
    if q <= 0:
        return carpet_branch_exponent(1.0 - u, q), "weak"
    if q <= carpet_transition(u):
        return carpet_branch_exponent(u, q), "strong"
    return 2.0 / 3.0 + q * math.log(u * (1.0 - u)) / (3.0 * LOG2), "affine"


@dataclass(frozen=True)
class CarpetCheck:
    u: float
    q: np.ndarray
    computed: np.ndarray
    reference: np.ndarray
    branches: tuple[str, ...]
    max_error_closed: float
    max_error_affine: float
    passed: bool
    seconds: float


def carpet_comparison(u: float, q_grid: Sequence[float] = CARPET_Q_GRID, *,
                      seeds: Sequence[int] | None = None, threads: int = 1,
                      tol_closed: float = 1e-6, tol_affine: float = 1e-4) -> CarpetCheck:
    """Compare the computed spectrum of the carpet against the closed form."""
    start = time.perf_counter()
    ifs = baranski_carpet()
    qs = np.asarray(q_grid, dtype=float)
    res = lq_spectrum(ifs, WeightedMeasure([u, 1.0 - u]), qs, seeds=seeds, threads=threads)
    refs = [carpet_reference(u, q) for q in qs]
    ref = np.array([r[0] for r in refs])
    branches = tuple(r[1] for r in refs)
    err = np.abs(res.T - ref)
    affine = np.array([b == "affine" for b in branches])
    e_closed = float(err[~affine].max()) if np.any(~affine) else 0.0
    e_affine = float(err[affine].max()) if np.any(affine) else 0.0
    return CarpetCheck(u, qs, res.T, ref, branches, e_closed, e_affine,
                       e_closed <= tol_closed and e_affine <= tol_affine,
                       time.perf_counter() - start)


def _grid(lo: float, hi: float, step: float) -> list[float]:
    n = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 10) for k in range(n + 1)]


@dataclass(frozen=True)
class GridPoint:
    a: float
    b: float
    c: float
    N: int
    first_top: float
    second_top: float
    first_min_coefficient: float
    second_min_coefficient: float


@dataclass(frozen=True)
class GridSearch:
    """Outcome of the stacked-sponge parameter search.

    ``violations[k]`` lists the points breaking condition ``k``:

    1. both dominant types lie outside their feasible sets;
    2. the first type is infeasible but its exponent beats the second's;
    3. the second type is infeasible but its exponent beats the first's.

    ``first_outside`` and ``second_outside`` count the points where each
    dominant type is infeasible, i.e. where conditions 2 and 3 have content.
    """

    points: int
    skipped: int
    violations: dict[int, list[GridPoint]]
    first_outside: int
    second_outside: int
    seconds: float
    examples: dict[str, GridPoint] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (not any(self.violations.values())
                and self.first_outside > 0 and self.second_outside > 0)


def fraser_jurga_grid(Ns: Sequence[int] = GRID_NS, step: float = GRID_STEP,
                      tol: float = 1e-12) -> GridSearch:
    """Scan ``c`` in ``[0.02, 0.49]``, ``b`` in ``[c + 0.01, 0.5]``, ``a`` in ``[b + 0.01, 1 - c - 0.01]``.

    Points that break the family's parameter constraints (notably
    ``a < 1 - b``) are skipped and counted.
    """
    start = time.perf_counter()
    violations: dict[int, list[GridPoint]] = {1: [], 2: [], 3: []}
    points = skipped = first_out = second_out = 0
    examples: dict[str, GridPoint] = {}
    for N in Ns:
        for c in _grid(0.02, 0.49, step):
            for b in _grid(c + 0.01, 0.5, step):
                for a in _grid(b + 0.01, 1.0 - c - 0.01, step):
                    if not fraser_jurga_admissible(a, b, c, N):
                        skipped += 1
                        continue
                    points += 1
                    c_first, c_second = fraser_jurga_dominant_coefficients(a, b, c, N)
                    t_first, t_second = fraser_jurga_closed_forms(a, b, c, N)
                    pt = GridPoint(a, b, c, N, t_first, t_second,
                                   float(c_first.min()), float(c_second.min()))
                    out_first = pt.first_min_coefficient < -tol
                    out_second = pt.second_min_coefficient < -tol
                    if out_first:
                        first_out += 1
                        examples.setdefault("first_outside", pt)
                    if out_second:
                        second_out += 1
                        examples.setdefault("second_outside", pt)
                    if out_first and out_second:
                        violations[1].append(pt)
                    if out_first and t_second < t_first:
                        violations[2].append(pt)
                    if out_second and t_first < t_second:
                        violations[3].append(pt)
    return GridSearch(points, skipped, violations, first_out, second_out,
                      time.perf_counter() - start, examples)


def narrow_gap_probe(N: int = 100, gaps: Sequence[float] = (0.005, 0.001, 0.0005),
                     step: float = 0.005) -> GridPoint | None:
    """First point with ``c = b - gap`` where the second dominant type is infeasible.

    The second type only leaves its feasible set in a thin region with ``c``
    just below ``b``; a grid that keeps ``b - c >= 0.01`` can miss it entirely.
    """
    for gap in gaps:
        for b in _grid(0.3, 0.5 - step, step):
            c = round(b - gap, 10)
            for a in _grid(b + step, 1.0 - b - step, step):
                if not fraser_jurga_admissible(a, b, c, N):
                    continue
                c_first, c_second = fraser_jurga_dominant_coefficients(a, b, c, N)
                if c_second.min() < 0:
                    t_first, t_second = fraser_jurga_closed_forms(a, b, c, N)
                    return GridPoint(a, b, c, N, t_first, t_second,
                                     float(c_first.min()), float(c_second.min()))
    return None
