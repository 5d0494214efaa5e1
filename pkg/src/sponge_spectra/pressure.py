"""Closed-form exponents, the variational pressure, L^q spectra and measure dimensions."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import entr, logsumexp

from .ifs import Ordering, SpongeIFS, check_sppc
from .orderings import (Coefficients, ProbStack, Q_TOL, admissible_orderings, coefficient_values,
                        coefficients, feasible_anchor, level_data)
from .potentials import (PotentialFamily, WeightedMeasure, lq_potential, project_measure,
                         zero_potential)
from .simplex_opt import SimplexProblem, default_seeds, random_starts

ROOT_TOL = 1e-13


def solve_log_equation(b: np.ndarray, c: np.ndarray, tol: float = ROOT_TOL) -> float:
    """Root ``x`` of ``log sum_i exp(b_i + x c_i) = 0`` for strictly negative ``c``.

    The left side is strictly decreasing and convex in ``x``. A bracket is
    grown geometrically from 0 until the sign changes, then safeguarded Newton
    steps (bisection whenever Newton leaves the bracket) run until
    ``|sum_i exp(b_i + x c_i) - 1| <= tol``.
    """
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    if not (np.all(np.isfinite(b)) and np.all(np.isfinite(c))):
        raise ValueError("non-finite coefficients in the level equation")
    if np.any(c >= 0):
        raise ValueError("exponents must be strictly negative")

    def g(x):
        return float(logsumexp(b + x * c))

    g0 = g(0.0)
    if g0 == 0.0:
        return 0.0
    step = 1.0
    if g0 > 0:
        lo, hi = 0.0, step
        while g(hi) > 0:
            lo, step = hi, 2 * step
            hi = step
    else:
        lo, hi = -step, 0.0
        while g(lo) < 0:
            hi, step = lo, 2 * step
            lo = -step
    x = 0.5 * (lo + hi)
    for _ in range(300):
        z = b + x * c
        gx = float(logsumexp(z))
        if abs(math.expm1(gx)) <= tol:
            return x
        if gx > 0:
            lo = x
        else:
            hi = x
        w = np.exp(z - logsumexp(z))
        slope = float(w @ c)
        x_new = x - gx / slope if slope < 0 else 0.5 * (lo + hi)
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if x_new == x or hi - lo <= 4 * np.finfo(float).eps * max(1.0, abs(x)):
            return x_new
        x = x_new
    return x


@dataclass(frozen=True)
class ClosedFormResult:
    ordering: Ordering
    exponents: tuple[float, ...]
    dominant: ProbStack
    in_Q: bool
    coefficients: Coefficients
    residuals: tuple[float, ...]

    @property
    def top(self) -> float:
        """The top-level exponent, an upper bound for the supremum over this ordering."""
        return self.exponents[-1]


def solve_closed_form(ifs: SpongeIFS, sigma: Sequence[int], phi: PotentialFamily) -> ClosedFormResult:
    """Solve the level equations one after another and build the dominant stack.

    Level ``n`` asks for ``T_n`` with
    ``sum_{i in I_n} exp(phi_n(i)) prod_{l <= n} lambda_i^(sigma_l) ** (T_l - T_{l-1}) = 1``
    given ``T_0 = 0`` and the earlier roots. The summands at the root form the
    level-``n`` vector of the dominant stack.
    """
    sigma = tuple(sigma)
    data = level_data(ifs, sigma)
    exps: list[float] = []
    dom: list[np.ndarray] = []
    res: list[float] = []
    prev = 0.0
    for n in range(1, ifs.dim + 1):
        logl = -data.neglog[n - 1]
        vals = phi.on_index_set(ifs, sigma, n)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"non-finite potential on level {n} of ordering {sigma}")
        b = vals.copy()
        for ell in range(1, n):
            b += (exps[ell - 1] - (exps[ell - 2] if ell >= 2 else 0.0)) * logl[:, ell - 1]
        c = logl[:, n - 1]
        x = solve_log_equation(b, c)
        z = b + x * c
        p = np.exp(z)
        res.append(abs(float(p.sum()) - 1.0))
        dom.append(p)
        prev = prev + x
        exps.append(prev)
    P = ProbStack.from_levels(ifs, sigma, dom)
    C = coefficients(ifs, P)
    return ClosedFormResult(sigma, tuple(exps), P, C.in_Q(), C, tuple(res))


def _entropy(p: np.ndarray) -> float:
    return float(np.sum(entr(np.clip(p, 0.0, None))))


def t_value(ifs: SpongeIFS, P: ProbStack, phi: PotentialFamily) -> float:
    """``sum_n C_n (H(p_n) + sum_i p_n(i) phi_n(i))``."""
    pots = [phi.on_index_set(ifs, P.ordering, n) for n in range(1, ifs.dim + 1)]
    return _t_from_levels(level_data(ifs, P.ordering), P.levels, pots)


def _t_from_levels(data, levels, pots) -> float:
    c = coefficient_values(data, levels)
    total = 0.0
    for n, p in enumerate(levels):
        total += c[n] * (_entropy(p) + float(np.asarray(p) @ pots[n]))
    return total


@dataclass(frozen=True)
class SupResult:
    value: float
    argmax: ProbStack
    certified: bool
    upper_bound: float
    method: str  # "closed-form" or "optimizer"


def _check_admissible(ifs: SpongeIFS, sigma: Ordering, seeds) -> None:
    if sigma not in admissible_orderings(ifs, seeds).admissible:
        raise ValueError(f"ordering {sigma} is not admissible for this IFS")


def _optimize_over_Q(ifs: SpongeIFS, sigma: Ordering, objective, seeds: Sequence[int],
                     extra_starts: Sequence[ProbStack] = ()) -> tuple[float, ProbStack]:
    data = level_data(ifs, sigma)
    d = ifs.dim

    def constraint(levels, extra):
        return coefficient_values(data, levels)[:-1]

    prob = SimplexProblem(data.sizes, lambda lv, ex: objective(lv),
                          constraint if d > 1 else None, tol=Q_TOL)
    anchor_P = feasible_anchor(ifs, sigma, seeds)
    if anchor_P is None:
        raise ValueError(f"no feasible stack found for ordering {sigma}")
    anchor = anchor_P.flat()
    starts = [P.flat() for P in extra_starts] + [anchor] + random_starts(data.sizes, seeds)
    res = prob.solve(starts, anchor=anchor)
    assert res is not None
    P = ProbStack.from_levels(ifs, sigma, list(res.levels))
    return objective(P.levels), P


def sup_over_Q(ifs: SpongeIFS, sigma: Sequence[int], phi: PotentialFamily, *,
               seeds: Sequence[int] | None = None, force_optimizer: bool = False,
               closed: ClosedFormResult | None = None) -> SupResult:
    """Supremum of the variational functional over the constraint set of ``sigma``.

    When the dominant stack is feasible the value is the closed-form exponent
    and the result is certified. Otherwise a multi-start constrained search
    returns a feasible lower bound. ``force_optimizer`` runs the search even
    in the certified case, without seeding it with the dominant stack.
    """
    sigma = tuple(sigma)
    seeds = tuple(default_seeds() if seeds is None else seeds)
    _check_admissible(ifs, sigma, seeds)
    closed = solve_closed_form(ifs, sigma, phi) if closed is None else closed
    if closed.in_Q and not force_optimizer:
        return SupResult(closed.top, closed.dominant, True, closed.top, "closed-form")
    data = level_data(ifs, sigma)
    pots = [phi.on_index_set(ifs, sigma, n) for n in range(1, ifs.dim + 1)]
    extra = () if force_optimizer else (closed.dominant,)
    value, P = _optimize_over_Q(ifs, sigma, lambda lv: _t_from_levels(data, lv, pots), seeds, extra)
    return SupResult(value, P, False, closed.top, "optimizer")


@dataclass(frozen=True)
class OrderingResult:
    ordering: Ordering
    closed: ClosedFormResult
    value: float | None  # None when skipped because its upper bound is dominated
    argmax: ProbStack | None
    method: str  # "closed-form", "optimizer" or "dominated"

    @property
    def upper_bound(self) -> float:
        return self.closed.top


@dataclass(frozen=True)
class PressureResult:
    value: float
    argmax_ordering: Ordering
    certified: bool
    upper_bound: float
    per_ordering: dict[Ordering, OrderingResult] = field(default_factory=dict)

    @property
    def gap(self) -> float:
        return self.upper_bound - self.value


def variational_pressure(ifs: SpongeIFS, phi: PotentialFamily, *,
                         orderings: Sequence[Sequence[int]] | None = None,
                         seeds: Sequence[int] | None = None,
                         exhaustive: bool = False) -> PressureResult:
    """Maximum over admissible orderings of the supremum over each constraint set.

    Orderings are visited by decreasing closed-form exponent. Since that
    exponent bounds the ordering's supremum, an ordering whose bound does not
    beat the best value found so far is skipped unless ``exhaustive``.
    The result is certified when the ordering with the largest exponent has a
    feasible dominant stack.
    """
    seeds = tuple(default_seeds() if seeds is None else seeds)
    A = list(admissible_orderings(ifs, seeds).admissible) if orderings is None else \
        [tuple(s) for s in orderings]
    if not A:
        raise ValueError("no admissible orderings")
    closed = {s: solve_closed_form(ifs, s, phi) for s in A}
    ranked = sorted(A, key=lambda s: (-closed[s].top, s))
    best_val, best_sigma = -np.inf, ranked[0]
    per: dict[Ordering, OrderingResult] = {}
    for s in ranked:
        cf = closed[s]
        if not exhaustive and cf.top <= best_val:
            per[s] = OrderingResult(s, cf, None, None, "dominated")
            continue
        if cf.in_Q:
            per[s] = OrderingResult(s, cf, cf.top, cf.dominant, "closed-form")
            val = cf.top
        else:
            r = sup_over_Q(ifs, s, phi, seeds=seeds, closed=cf)
            per[s] = OrderingResult(s, cf, r.value, r.argmax, "optimizer")
            val = r.value
        if val > best_val:
            best_val, best_sigma = val, s
    upper = closed[ranked[0]].top
    certified = closed[ranked[0]].in_Q
    if certified:
        best_val, best_sigma = upper, ranked[0]
    return PressureResult(float(best_val), best_sigma, certified, float(upper), per)


@dataclass(frozen=True)
class SpectrumResult:
    q: np.ndarray
    T: np.ndarray
    argmax_ordering: tuple[Ordering, ...]
    certified: np.ndarray
    gap: np.ndarray
    sppc: bool
    results: tuple[PressureResult, ...]


def lq_spectrum(ifs: SpongeIFS, mu: WeightedMeasure, q_grid: Sequence[float], *,
                seeds: Sequence[int] | None = None, threads: int = 1) -> SpectrumResult:
    """Pressure of ``q log mu`` at every ``q`` of the grid.

    ``sppc`` records whether the separation condition holds for the
    admissible orderings; without it the values are only the symbolic
    pressure.
    """
    if np.any(np.asarray(mu.weights) <= 0):
        raise ValueError("measure weights must be strictly positive")
    seeds = tuple(default_seeds() if seeds is None else seeds)
    A = admissible_orderings(ifs, seeds).admissible
    qs = np.asarray(q_grid, dtype=float)

    def one(q):
        return variational_pressure(ifs, lq_potential(ifs, mu, q, A), orderings=A, seeds=seeds)

    if threads > 1 and qs.size > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = tuple(pool.map(one, qs))
    else:
        results = tuple(one(q) for q in qs)
    return SpectrumResult(
        qs,
        np.array([r.value for r in results]),
        tuple(r.argmax_ordering for r in results),
        np.array([r.certified for r in results]),
        np.array([r.gap for r in results]),
        check_sppc(ifs, A).satisfied,
        results,
    )


def lq_value(ifs: SpongeIFS, mu: WeightedMeasure, q: float, seeds: Sequence[int] | None = None
             ) -> PressureResult:
    A = admissible_orderings(ifs, seeds).admissible
    return variational_pressure(ifs, lq_potential(ifs, mu, q, A), orderings=A, seeds=seeds)


def box_dimension_result(ifs: SpongeIFS, seeds: Sequence[int] | None = None) -> PressureResult:
    A = admissible_orderings(ifs, seeds).admissible
    return variational_pressure(ifs, zero_potential(ifs, A), orderings=A, seeds=seeds)


def box_dimension(ifs: SpongeIFS, seeds: Sequence[int] | None = None) -> float:
    """Box dimension of the attractor: the pressure of the zero potential."""
    return box_dimension_result(ifs, seeds).value


def entropy_dimension(ifs: SpongeIFS, mu: WeightedMeasure, seeds: Sequence[int] | None = None
                      ) -> tuple[float, bool]:
    """Central-difference estimate of ``-dT/dq`` at ``q = 1`` and whether it is certified.

    Uses step ``1e-5`` when both neighbouring values are certified closed
    forms, ``1e-3`` otherwise.
    """
    for h in (1e-5, 1e-3):
        lo, hi = lq_value(ifs, mu, 1 - h, seeds), lq_value(ifs, mu, 1 + h, seeds)
        cert = lo.certified and hi.certified
        if cert or h == 1e-3:
            return -(hi.value - lo.value) / (2 * h), cert
    raise AssertionError("unreachable")


# --- measure dimensions ---------------------------------------------------

def S_value(ifs: SpongeIFS, P: ProbStack, mu: WeightedMeasure) -> float:
    """``-sum_n C_n sum_i p_n(i) log mu_n(i)``."""
    logs = [np.log(project_measure(ifs, mu, P.ordering, n)) for n in range(1, ifs.dim + 1)]
    return _S_from_levels(level_data(ifs, P.ordering), P.levels, logs)


def _S_from_levels(data, levels, logs) -> float:
    c = coefficient_values(data, levels)
    return -float(sum(c[n] * float(np.asarray(p) @ logs[n]) for n, p in enumerate(levels)))


@dataclass(frozen=True)
class DimensionBounds:
    ordering: Ordering
    upper: tuple[float, ...]  # upper sequence, levels 1..d
    lower: tuple[float, ...]
    argmax: tuple[tuple[int, ...], ...]  # maximising map indices per level (all ties)
    argmin: tuple[tuple[int, ...], ...]

    def extremal_stack(self, ifs: SpongeIFS, which: str) -> ProbStack:
        """Point-mass stack on the first maximiser (``"upper"``) or minimiser (``"lower"``)."""
        pick = self.argmax if which == "upper" else self.argmin
        return ProbStack.degenerate(ifs, self.ordering, [ties[0] for ties in pick])


def closed_dimension_bounds(ifs: SpongeIFS, mu: WeightedMeasure, sigma: Sequence[int]
                            ) -> DimensionBounds:
    """Upper and lower recursions whose top terms bound the dimension functional.

    Both start at 0. Step ``n`` adds the max (resp. min) over level-``n``
    survivors ``i`` of
    ``(log mu_n(i) + sum_{m < n} (S_{m-1} - S_m) log lambda_i^(sigma_m)) / log lambda_i^(sigma_n)``.
    """
    sigma = tuple(sigma)
    data = level_data(ifs, sigma)
    out = {}
    for which, pick in (("upper", np.max), ("lower", np.min)):
        S = [0.0]
        ties = []
        for n in range(1, ifs.dim + 1):
            logl = -data.neglog[n - 1]
            vals = np.log(project_measure(ifs, mu, sigma, n))
            for m in range(1, n):
                vals = vals + (S[m - 1] - S[m]) * logl[:, m - 1]
            vals = vals / logl[:, n - 1]
            best = float(pick(vals))
            idx = data.systems[n - 1].indices
            ties.append(tuple(idx[k] for k in np.flatnonzero(np.abs(vals - best) <= 1e-12 * max(1, abs(best)))))
            S.append(S[-1] + best)
        out[which] = (tuple(S[1:]), tuple(ties))
    return DimensionBounds(sigma, out["upper"][0], out["lower"][0], out["upper"][1], out["lower"][1])


@dataclass(frozen=True)
class OrderingExtremes:
    ordering: Ordering
    bounds: DimensionBounds
    inf_value: float
    inf_stack: ProbStack
    inf_certified: bool
    sup_value: float
    sup_stack: ProbStack
    sup_certified: bool


@dataclass(frozen=True)
class DimensionResult:
    frostman: float
    frostman_raw: float
    box_of_measure: float
    closed_lower_frostman: float
    closed_upper_box: float
    certified: bool
    per_ordering: dict[Ordering, OrderingExtremes]


def measure_dimensions(ifs: SpongeIFS, mu: WeightedMeasure,
                       seeds: Sequence[int] | None = None) -> DimensionResult:
    """Frostman dimension and box dimension of the self-affine measure.

    For each admissible ordering, the infimum and supremum of the dimension
    functional over the constraint set. When the extremal point-mass stack of
    the closed recursion lies in the constraint set the value is exact;
    otherwise the constrained search gives it. The Frostman value is clamped
    at 0; the raw minimum is kept in ``frostman_raw``.
    """
    seeds = tuple(default_seeds() if seeds is None else seeds)
    A = admissible_orderings(ifs, seeds).admissible
    per = {}
    for sigma in A:
        data = level_data(ifs, sigma)
        bounds = closed_dimension_bounds(ifs, mu, sigma)
        logs = [np.log(project_measure(ifs, mu, sigma, n)) for n in range(1, ifs.dim + 1)]

        def S(lv, data=data, logs=logs):
            return _S_from_levels(data, lv, logs)

        found = {}
        for which, sign in (("lower", -1.0), ("upper", 1.0)):
            K = bounds.extremal_stack(ifs, which)
            exact = bounds.lower[-1] if which == "lower" else bounds.upper[-1]
            if coefficients(ifs, K).in_Q():
                found[which] = (exact, K, True)
            else:
                val, P = _optimize_over_Q(ifs, sigma, lambda lv, sign=sign: sign * S(lv), seeds, (K,))
                found[which] = (sign * val, P, False)
        per[sigma] = OrderingExtremes(sigma, bounds, *found["lower"], *found["upper"])
    raw = min(r.inf_value for r in per.values())
    box = max(r.sup_value for r in per.values())
    lower_closed = max(0.0, min(r.bounds.lower[-1] for r in per.values()))
    upper_closed = max(r.bounds.upper[-1] for r in per.values())
    certified = all(r.inf_certified and r.sup_certified for r in per.values())
    return DimensionResult(max(0.0, raw), raw, box, lower_closed, upper_closed, certified, per)
