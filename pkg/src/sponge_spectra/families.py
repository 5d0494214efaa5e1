"""Parametrised families of sponges used by the worked examples and the tests."""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from .ifs import DiagonalMap, SpongeIFS, as_fraction


def baranski_carpet(c="1/2", d="1/4") -> SpongeIFS:
    """Two-map planar carpet: ``diag(c, d)`` at the origin and ``diag(d, c)`` at ``(1 - d, 1 - c)``.

    With the defaults the second map is ``diag(1/4, 1/2)`` translated by
    ``(3/4, 1/2)``.
    """
    c, d = as_fraction(c), as_fraction(d)
    if not (0 < d < c and c + d <= 1):
        raise ValueError("need 0 < d < c and c + d <= 1")
    return SpongeIFS(2, (DiagonalMap((c, d), (Fraction(0), Fraction(0))),
                         DiagonalMap((d, c), (1 - d, 1 - c))))


def fraser_jurga_sponge(a, b, c, N: int) -> SpongeIFS:
    """``N`` stacked maps ``diag(a, b, 1/N)`` plus one map ``diag(c, 1 - b, 1/N)``.

    Requires ``0 < 1/N < c < b < a < 1 - b`` and ``a + c < 1``.
    """
    a, b, c = as_fraction(a), as_fraction(b), as_fraction(c)
    dd = 1 - b
    inv = Fraction(1, N)
    if not (0 < inv < c < b < a < dd < 1 and a + c < 1):
        raise ValueError("parameters violate 0 < 1/N < c < b < a < 1-b and a + c < 1")
    maps = [DiagonalMap((a, b, inv), (Fraction(0), Fraction(0), Fraction(i, N))) for i in range(N)]
    maps.append(DiagonalMap((c, dd, inv), (1 - c, b, Fraction(0))))
    return SpongeIFS(3, tuple(maps))


def fraser_jurga_admissible(a: float, b: float, c: float, N: int) -> bool:
    return 0 < 1 / N < c < b < a < 1 - b < 1 and a + c < 1


def _similarity_root(a: float, c: float) -> float:
    """``t`` in ``[0, 1]`` with ``a^t + c^t = 1``, by bisection."""
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if a ** mid + c ** mid > 1:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def fraser_jurga_closed_forms(a: float, b: float, c: float, N: int) -> tuple[float, float]:
    """Top exponents of the two orderings at the zero potential.

    The first is ``t + log(N a^t + c^t) / log N`` with ``a^t + c^t = 1``; the
    second is ``1 + log(N b + d) / log N`` with ``d = 1 - b``. Returns
    ``(first, second)``; ``t`` is found by bisection on ``[0, 1]``.
    """
    t = _similarity_root(a, c)
    first = t + math.log(N * a ** t + c ** t) / math.log(N)
    second = 1 + math.log(N * b + (1 - b)) / math.log(N)
    return first, second


def fraser_jurga_dominant_coefficients(a: float, b: float, c: float, N: int
                                       ) -> tuple[np.ndarray, np.ndarray]:
    """Block coefficients of the two dominant types at the zero potential.

    Uses the explicit dominant vectors: for the ordering ``(x, y, z)`` the two
    lower levels put mass ``a^t`` on the stacked column and level three puts
    ``N a^t / (N a^t + c^t)`` on it; for ``(y, x, z)`` the same with ``b`` and
    ``N b / (N b + d)``. Only these two masses enter the Lyapunov exponents,
    so the cost does not grow with ``N``.

    Returns
    -------
    c_first, c_second : ndarray
        ``(C_1, C_2, C_3)`` for ``(x, y, z)`` and for ``(y, x, z)``.
    """
    d = 1 - b
    t = _similarity_root(a, c)
    # -log ratio of (stacked map, extra map) per coordinate
    neglog = {0: (-math.log(a), -math.log(c)), 1: (-math.log(b), -math.log(d)),
              2: (math.log(N), math.log(N))}

    def coeffs(sigma, w_low, w_top):
        masses = (w_low, w_low, w_top)
        chi = np.array([[masses[m] * neglog[s][0] + (1 - masses[m]) * neglog[s][1]
                         for s in sigma] for m in range(3)])
        out = np.zeros(3)
        for n in (2, 1, 0):
            out[n] = (1.0 - float(out[n + 1:] @ chi[n + 1:, n])) / chi[n, n]
        return out

    at, ct = a ** t, c ** t
    return (coeffs((0, 1, 2), at, N * at / (N * at + ct)),
            coeffs((1, 0, 2), b, N * b / (N * b + d)))


def self_similar_uniform(n_maps: int = 2, dim: int = 2) -> SpongeIFS:
    """``n_maps`` similarities of ratio ``1/n_maps`` along the main diagonal."""
    r = Fraction(1, n_maps)
    return SpongeIFS(dim, tuple(DiagonalMap((r,) * dim, (r * k,) * dim) for k in range(n_maps)))


def grid_carpet(m: int, n: int, cells) -> SpongeIFS:
    """Bedford-McMullen carpet with ``1/m`` horizontal and ``1/n`` vertical ratios.

    ``cells`` lists the chosen ``(column, row)`` pairs.
    """
    a, b = Fraction(1, m), Fraction(1, n)
    return SpongeIFS(2, tuple(DiagonalMap((a, b), (a * col, b * row)) for col, row in cells))


def cube_filling(dim: int) -> SpongeIFS:
    """All ``2^dim`` half-size corner maps; the attractor is the whole cube."""
    h = Fraction(1, 2)
    return SpongeIFS(dim, tuple(DiagonalMap((h,) * dim, tuple(h * e for e in corner))
                                for corner in itertools.product((0, 1), repeat=dim)))
