"""Multi-start constrained optimisation over products of probability simplices.

Used for the suprema/infima over the constraint sets of the pressure and
dimension formulas, and for feasibility searches. Each problem has one
probability vector per level plus optional unconstrained scalars. The
inequality constraints are smooth functions that must stay non-negative.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

Levels = list[np.ndarray]
Objective = Callable[[Levels, np.ndarray], float]
Constraint = Callable[[Levels, np.ndarray], np.ndarray]

SEED_ENV = "SPONGE_SPECTRA_SEED"
DEFAULT_STARTS = 32


def default_seeds() -> tuple[int, ...]:
    """Seed list for multi-start searches.

    The environment variable ``SPONGE_SPECTRA_SEED`` may hold a single integer
    ``s`` (giving ``s, ..., s+31``), a range ``a..b`` or a comma separated list.
    """
    raw = os.environ.get(SEED_ENV, "").strip()
    if not raw:
        return tuple(range(DEFAULT_STARTS))
    if ".." in raw:
        lo, hi = (int(v) for v in raw.split("..", 1))
        return tuple(range(lo, hi + 1))
    if "," in raw:
        return tuple(int(v) for v in raw.split(",") if v.strip())
    s = int(raw)
    return tuple(range(s, s + DEFAULT_STARTS))


@dataclass(frozen=True)
class OptResult:
    levels: tuple[np.ndarray, ...]
    extra: np.ndarray
    value: float
    feasible: bool


class SimplexProblem:
    """Maximise ``objective`` subject to ``constraint >= 0`` on simplices.

    Parameters
    ----------
    sizes : sequence of int
        Length of each probability vector.
    objective : callable
        ``objective(levels, extra) -> float``.
    constraint : callable, optional
        ``constraint(levels, extra) -> array``; feasibility means every
        entry is ``>= -tol``.
    n_extra : int
        Number of unconstrained scalar variables appended to the vectors.
    tol : float
        Feasibility tolerance.
    """

    def __init__(self, sizes: Sequence[int], objective: Objective,
                 constraint: Constraint | None = None, n_extra: int = 0, tol: float = 1e-12):
        self.sizes = [int(s) for s in sizes]
        self.offsets = np.cumsum([0] + self.sizes)
        self.objective = objective
        self.constraint = constraint
        self.n_extra = n_extra
        self.tol = tol

    def unpack(self, x: np.ndarray) -> tuple[Levels, np.ndarray]:
        levels = [x[self.offsets[k]:self.offsets[k + 1]] for k in range(len(self.sizes))]
        return levels, x[self.offsets[-1]:]

    def pack(self, levels: Sequence[np.ndarray], extra: np.ndarray | None = None) -> np.ndarray:
        if extra is None:
            extra = np.zeros(self.n_extra)
        return np.concatenate([np.asarray(v, dtype=float) for v in levels] + [np.asarray(extra, float)])

    def normalize(self, x: np.ndarray) -> np.ndarray:
        levels, extra = self.unpack(np.asarray(x, dtype=float))
        out = []
        for v in levels:
            v = np.clip(v, 0.0, None)
            s = v.sum()
            out.append(v / s if s > 0 else np.full(v.size, 1.0 / v.size))
        return self.pack(out, extra)

    def value(self, x: np.ndarray) -> float:
        levels, extra = self.unpack(x)
        return float(self.objective(levels, extra))

    def slack(self, x: np.ndarray) -> float:
        if self.constraint is None:
            return np.inf
        levels, extra = self.unpack(x)
        c = np.asarray(self.constraint(levels, extra), dtype=float)
        return float(c.min()) if c.size else np.inf

    def feasible(self, x: np.ndarray) -> bool:
        return self.slack(x) >= -self.tol

    def blend_to_feasible(self, x: np.ndarray, anchor: np.ndarray, steps: int = 60) -> np.ndarray:
        """Move ``x`` toward the feasible ``anchor`` just far enough to be feasible."""
        if self.feasible(x):
            return x
        lo, hi = 0.0, 1.0
        for _ in range(steps):
            mid = 0.5 * (lo + hi)
            if self.feasible((1 - mid) * x + mid * anchor):
                hi = mid
            else:
                lo = mid
        return (1 - hi) * x + hi * anchor

    def _scipy_constraints(self, active: Sequence[int] = ()) -> list[dict]:
        cons: list[dict] = []
        for k in range(len(self.sizes)):
            a, b = self.offsets[k], self.offsets[k + 1]
            cons.append({"type": "eq", "fun": lambda x, a=a, b=b: np.sum(x[a:b]) - 1.0})
        if self.constraint is not None:
            def ineq(x):
                levels, extra = self.unpack(x)
                return np.asarray(self.constraint(levels, extra), dtype=float)
            cons.append({"type": "ineq", "fun": ineq})
            for idx in active:
                cons.append({"type": "eq",
                             "fun": lambda x, idx=idx: float(ineq(x)[idx])})
        return cons

    def _local(self, x0: np.ndarray, active: Sequence[int] = ()) -> np.ndarray:
        bounds = [(0.0, 1.0)] * int(self.offsets[-1]) + [(None, None)] * self.n_extra

        def fun(x):
            v = self.value(x)
            return -v if np.isfinite(v) else 1e300

        with np.errstate(all="ignore"):
            res = minimize(fun, x0, method="SLSQP", bounds=bounds,
                           constraints=self._scipy_constraints(active),
                           options={"maxiter": 400, "ftol": 1e-14})
        return res.x

    def solve(self, starts: Sequence[np.ndarray], anchor: np.ndarray | None = None,
              polish: bool = True) -> OptResult | None:
        """Run a local solve from each start and keep the best feasible point.

        Starts are blended toward ``anchor`` (a known feasible point) when they
        violate the constraints, and so are local results that drift out of the
        feasible set. With ``polish`` the best point is re-solved with its
        nearly active constraints imposed as equalities.
        """
        best_x, best_v = None, -np.inf
        candidates = []
        for x0 in starts:
            x0 = self.normalize(np.asarray(x0, dtype=float))
            if anchor is not None:
                x0 = self.blend_to_feasible(x0, anchor)
            candidates.append(x0)
            x = self.normalize(self._local(x0))
            if not self.feasible(x) and self.feasible(x0):
                x = self.blend_to_feasible(x, x0)
            candidates.append(x)
        for x in candidates:
            if not self.feasible(x):
                continue
            v = self.value(x)
            if np.isfinite(v) and v > best_v:
                best_x, best_v = x, v
        if best_x is None:
            return None
        if polish and self.constraint is not None:
            levels, extra = self.unpack(best_x)
            c = np.asarray(self.constraint(levels, extra), dtype=float)
            active = [int(k) for k in np.flatnonzero(c < 1e-6)]
            if active:
                x = self.normalize(self._local(best_x, active))
                if not self.feasible(x):
                    x = self.blend_to_feasible(x, best_x)
                v = self.value(x)
                if self.feasible(x) and np.isfinite(v) and v > best_v:
                    best_x, best_v = x, v
        levels, extra = self.unpack(best_x)
        return OptResult(tuple(np.array(v) for v in levels), np.array(extra), best_v, True)


def random_starts(sizes: Sequence[int], seeds: Sequence[int], n_extra: int = 0) -> list[np.ndarray]:
    """Flat Dirichlet start points, one per seed."""
    out = []
    for s in seeds:
        rng = np.random.default_rng(s)
        parts = [rng.dirichlet(np.ones(k)) for k in sizes]
        out.append(np.concatenate(parts + [np.zeros(n_extra)]))
    return out
