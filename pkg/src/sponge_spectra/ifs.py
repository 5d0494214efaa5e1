"""Diagonal self-affine iterated function systems on the unit cube.

Map indices and coordinates are 0-based throughout the package. An ordering
``sigma`` is a tuple of coordinates; ``sigma[0]`` is the coordinate that
contracts the weakest (it stops last) and ``sigma[-1]`` the strongest.
Levels ``n`` run from 1 to ``d``: level ``n`` keeps the coordinates
``sigma[:n]``.

Geometry is stored exactly as :class:`fractions.Fraction` so that exact
overlaps and interval disjointness never depend on floating point rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

Ordering = tuple[int, ...]


def as_fraction(value) -> Fraction:
    """Convert a user supplied number to an exact rational.

    Accepts :class:`~fractions.Fraction`, ``int``, decimal or ``"p/q"``
    strings, ``[num, den]`` pairs and floats. Floats are read through their
    shortest decimal representation, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite number: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse number {value!r}") from exc
    if isinstance(value, (list, tuple)) and len(value) == 2:
        num, den = value
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (num, den)):
            raise ValueError(f"rational pair must hold two integers: {value!r}")
        if den == 0:
            raise ValueError(f"zero denominator in {value!r}")
        return Fraction(num, den)
    raise ValueError(f"cannot parse number {value!r}")


@dataclass(frozen=True)
class DiagonalMap:
    """Affine map ``x -> diag(a) x + t`` with exact coefficients."""

    diag: tuple[Fraction, ...]
    trans: tuple[Fraction, ...]

    @classmethod
    def from_values(cls, diag: Iterable, trans: Iterable) -> "DiagonalMap":
        return cls(tuple(as_fraction(a) for a in diag), tuple(as_fraction(t) for t in trans))

    @property
    def dim(self) -> int:
        return len(self.diag)

    @property
    def ratios(self) -> tuple[Fraction, ...]:
        """Contraction ratios ``|a|`` per coordinate."""
        return tuple(abs(a) for a in self.diag)

    def interval(self, k: int) -> tuple[Fraction, Fraction]:
        """Image of ``[0, 1]`` in coordinate ``k`` as an ordered pair."""
        lo, hi = self.trans[k], self.trans[k] + self.diag[k]
        return (lo, hi) if lo <= hi else (hi, lo)

    def __call__(self, x: Sequence[float]) -> np.ndarray:
        a = np.array([float(v) for v in self.diag])
        t = np.array([float(v) for v in self.trans])
        return a * np.asarray(x, dtype=float) + t


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    index: int | None = None
    coordinate: int | None = None


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]
    lambda_min: float | None
    face_distance: Fraction | None

    @property
    def ok(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class SpongeIFS:
    """Ordered list of diagonal contractions on ``[0, 1]^d``.

    Construction does not validate; call :func:`validate` for a report or
    :meth:`require_valid` to raise on the first problem.
    """

    dim: int
    maps: tuple[DiagonalMap, ...]
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    @classmethod
    def from_lists(cls, diags: Sequence[Sequence], transs: Sequence[Sequence]) -> "SpongeIFS":
        maps = tuple(DiagonalMap.from_values(a, t) for a, t in zip(diags, transs, strict=True))
        dim = maps[0].dim if maps else 0
        return cls(dim, maps)

    @property
    def size(self) -> int:
        return len(self.maps)

    @property
    def exact_ratios(self) -> tuple[tuple[Fraction, ...], ...]:
        if "exact_ratios" not in self._cache:
            self._cache["exact_ratios"] = tuple(m.ratios for m in self.maps)
        return self._cache["exact_ratios"]

    @property
    def log_ratios(self) -> np.ndarray:
        """Array of ``log lambda_i^(k)`` with shape ``(N, d)``."""
        if "log_ratios" not in self._cache:
            arr = np.array([[math.log(r) for r in row] for row in self.exact_ratios], dtype=float)
            arr.setflags(write=False)
            self._cache["log_ratios"] = arr
        return self._cache["log_ratios"]

    @property
    def lambda_min(self) -> float:
        return float(min(min(row) for row in self.exact_ratios))

    @property
    def lambda_max(self) -> float:
        return float(max(max(row) for row in self.exact_ratios))

    def require_valid(self) -> "SpongeIFS":
        report = validate(self)
        if not report.ok:
            raise ValueError("invalid IFS: " + "; ".join(v.message for v in report.violations))
        return self


def validate(ifs: SpongeIFS) -> ValidationReport:
    """Check every structural requirement and report all violations.

    Besides the per-map checks, the face condition asks that every face of the
    unit cube has some map whose image stays a positive distance away from it;
    the reported ``face_distance`` is the largest such distance that works for
    all faces simultaneously.
    """
    out: list[Violation] = []
    d = ifs.dim
    if d < 1:
        out.append(Violation("dimension", "dimension must be a positive integer"))
    if len(ifs.maps) < 2:
        out.append(Violation("too few maps", f"need at least 2 maps, got {len(ifs.maps)}"))
    shape_ok = True
    for i, f in enumerate(ifs.maps):
        if len(f.diag) != d or len(f.trans) != d:
            out.append(Violation("shape", f"map {i + 1} does not have {d} coefficients", index=i))
            shape_ok = False
            continue
        for k in range(d):
            a, t = f.diag[k], f.trans[k]
            if not 0 < abs(a) < 1:
                out.append(Violation("not contracting",
                                     f"map {i + 1}, coordinate {k + 1}: |a| = {a} is not in (0, 1)",
                                     index=i, coordinate=k))
            if not (0 <= t <= 1 and 0 <= t + a <= 1):
                out.append(Violation("image exits unit cube",
                                     f"map {i + 1}, coordinate {k + 1}: image [{min(t, t + a)}, "
                                     f"{max(t, t + a)}] leaves [0, 1]",
                                     index=i, coordinate=k))
    seen: dict[DiagonalMap, int] = {}
    for i, f in enumerate(ifs.maps):
        if f in seen:
            out.append(Violation("duplicate maps", f"maps {seen[f] + 1} and {i + 1} are identical",
                                 index=i))
        else:
            seen[f] = i

    face_distance = None
    if shape_ok and d >= 1 and ifs.maps:
        face_distance = None
        for k in range(d):
            for u in (0, 1):
                best = max((f.interval(k)[0] if u == 0 else 1 - f.interval(k)[1]) for f in ifs.maps)
                if best <= 0:
                    out.append(Violation("face condition",
                                         f"every map touches the face x_{k + 1} = {u}", coordinate=k))
                face_distance = best if face_distance is None else min(face_distance, best)
    lam = None
    if shape_ok and ifs.maps and all(0 < abs(a) for f in ifs.maps for a in f.diag):
        lam = ifs.lambda_min
    return ValidationReport(tuple(out), lam, face_distance)


def _check_pair(ifs: SpongeIFS, i: int, j: int) -> None:
    n = ifs.size
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"map index out of range: {i}, {j} (N = {n})")


def _check_ordering(ifs: SpongeIFS, sigma: Sequence[int]) -> Ordering:
    sigma = tuple(int(k) for k in sigma)
    if sorted(sigma) != list(range(ifs.dim)):
        raise ValueError(f"{sigma} is not a permutation of the {ifs.dim} coordinates")
    return sigma


def _check_level(ifs: SpongeIFS, n: int) -> None:
    if not 1 <= n <= ifs.dim:
        raise IndexError(f"level {n} out of range 1..{ifs.dim}")


def _agree_on(f: DiagonalMap, g: DiagonalMap, coords: Iterable[int]) -> bool:
    return all(f.diag[k] == g.diag[k] and f.trans[k] == g.trans[k] for k in coords)


def exact_overlap(ifs: SpongeIFS, i: int, j: int, sigma: Sequence[int], n: int) -> bool:
    """True when maps ``i`` and ``j`` coincide on the coordinates ``sigma[:n]``."""
    _check_pair(ifs, i, j)
    sigma = _check_ordering(ifs, sigma)
    _check_level(ifs, n)
    return _agree_on(ifs.maps[i], ifs.maps[j], sigma[:n])


@dataclass(frozen=True)
class ProjectedSystem:
    """Surviving indices at one level and the map sending every index to its survivor."""

    ordering: Ordering
    level: int
    indices: tuple[int, ...]
    proj: tuple[int, ...]

    @property
    def position(self) -> dict[int, int]:
        """Position of each surviving index inside :attr:`indices`."""
        return {i: p for p, i in enumerate(self.indices)}


def _removal_levels(ifs: SpongeIFS, sigma: Ordering) -> list[int]:
    # For each j, the deepest level (< d) on which some i < j overlaps it exactly;
    # j is then absent from every level up to that one.
    d, n_maps = ifs.dim, ifs.size
    removed = [0] * n_maps
    for j in range(n_maps):
        for i in range(j):
            for lvl in range(d - 1, 0, -1):
                if _agree_on(ifs.maps[i], ifs.maps[j], sigma[:lvl]):
                    removed[j] = max(removed[j], lvl)
                    break
    return removed


def project_index_set(ifs: SpongeIFS, sigma: Sequence[int], n: int) -> ProjectedSystem:
    """Projected index set at level ``n`` for ordering ``sigma``.

    Scans pairs ``i < j``; whenever the two maps coincide on the first ``n'``
    coordinates of ``sigma`` (largest such ``n' < d``), index ``j`` is dropped
    from levels ``1..n'``. The smallest index of every overlap class survives.
    """
    sigma = _check_ordering(ifs, sigma)
    _check_level(ifs, n)
    key = ("proj", frozenset(sigma[:n]), n)
    cached = ifs._cache.get(key)
    if cached is None:
        removed = _removal_levels(ifs, sigma)
        indices = tuple(j for j in range(ifs.size) if removed[j] < n)
        coords = sigma[:n]
        proj = []
        for j in range(ifs.size):
            rep = next(i for i in indices if i <= j and _agree_on(ifs.maps[i], ifs.maps[j], coords))
            proj.append(rep)
        cached = (indices, tuple(proj))
        ifs._cache[key] = cached
    return ProjectedSystem(sigma, n, cached[0], cached[1])


def projected_levels(ifs: SpongeIFS, sigma: Sequence[int]) -> tuple[ProjectedSystem, ...]:
    """All projected systems for ``sigma``, level 1 first."""
    return tuple(project_index_set(ifs, sigma, n) for n in range(1, ifs.dim + 1))


@dataclass(frozen=True)
class SPPCReport:
    satisfied: bool
    very_strong: bool
    witnesses: tuple[tuple[Ordering, int, int, int], ...]
    strong_witnesses: tuple[tuple[Ordering, int, int, int], ...]


def _boxes_separated(f: DiagonalMap, g: DiagonalMap, coords: Sequence[int], closed: bool) -> bool:
    for k in coords:
        lo_f, hi_f = f.interval(k)
        lo_g, hi_g = g.interval(k)
        if closed:
            if hi_f < lo_g or hi_g < lo_f:
                return True
        elif hi_f <= lo_g or hi_g <= lo_f:
            return True
    return False


def check_sppc(ifs: SpongeIFS, orderings: Iterable[Sequence[int]]) -> SPPCReport:
    """Separation of principal projections for the given orderings.

    For every ordering, level and pair of maps, the two maps must either
    coincide on the retained coordinates or have projected image boxes with
    disjoint interiors. The very strong variant asks for disjoint closed
    boxes instead. Witnesses are ``(sigma, n, i, j)`` with 0-based ``i < j``.
    """
    weak: list[tuple[Ordering, int, int, int]] = []
    strong: list[tuple[Ordering, int, int, int]] = []
    for sigma in orderings:
        sigma = _check_ordering(ifs, sigma)
        for n in range(1, ifs.dim + 1):
            coords = sigma[:n]
            for j in range(ifs.size):
                for i in range(j):
                    f, g = ifs.maps[i], ifs.maps[j]
                    if _agree_on(f, g, coords):
                        continue
                    if not _boxes_separated(f, g, coords, closed=False):
                        weak.append((sigma, n, i, j))
                    if not _boxes_separated(f, g, coords, closed=True):
                        strong.append((sigma, n, i, j))
    return SPPCReport(not weak, not strong, tuple(weak), tuple(strong))
