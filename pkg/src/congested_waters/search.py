"""Global maximization of piecewise-quadratic objectives over boxes.

Objectives passed here return ``(value, regime)`` where ``regime`` is any
hashable tag that is constant wherever the objective is a single quadratic.
Breakpoints are located by bisecting between samples with different tags;
inside one regime three samples determine the quadratic exactly, so its
vertex can be evaluated directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Hashable

import numpy as np

Objective = Callable[[np.ndarray], tuple[float, Hashable]]


class BudgetExhausted(Exception):
    pass


class _Memo:
    """Counting, budgeted cache in front of the objective."""

    def __init__(self, f: Objective, budget: int):
        self.f = f
        self.budget = budget
        self.cache: dict[tuple, tuple[float, Hashable]] = {}
        self.calls = 0

    def __call__(self, x) -> tuple[float, Hashable]:
        key = tuple(float(v) for v in np.atleast_1d(x))
        hit = self.cache.get(key)
        if hit is None:
            if self.calls >= self.budget:
                raise BudgetExhausted
            self.calls += 1
            hit = self.f(np.array(key))
            self.cache[key] = hit
        return hit

    def best(self) -> tuple[np.ndarray, float]:
        # ties go to the lexicographically smallest point
        key = min(self.cache, key=lambda k: (-self.cache[k][0], k))
        return np.array(key), self.cache[key][0]


@dataclass
class SearchResult:
    x: np.ndarray
    value: float
    evaluations: int
    depth: int
    exhausted: bool = False


def _parabola_vertex(xs, ys):
    """Vertex of the parabola through three points, or None if not strictly concave."""
    (x0, x1, x2), (y0, y1, y2) = xs, ys
    d01 = (y1 - y0) / (x1 - x0)
    d12 = (y2 - y1) / (x2 - x1)
    curv = (d12 - d01) / (x2 - x0)
    if not curv < 0:
        return None
    return 0.5 * (x0 + x1) - d01 / (2 * curv)


def _line(memo: _Memo, base: np.ndarray, axis: int, lo: float, hi: float, n: int, xtol: float):
    """Exact maximization along one coordinate through ``base``."""

    def ev(t):
        x = base.copy()
        x[axis] = t
        return memo(x)

    if hi <= lo:
        return lo, ev(lo)[0]
    seen: dict[float, tuple[float, Hashable]] = {}
    for t in np.linspace(lo, hi, n):
        seen[float(t)] = ev(t)
    grid = sorted(seen)
    stack = [(a, b) for a, b in zip(grid[:-1], grid[1:]) if seen[a][1] != seen[b][1]]
    while stack:
        a, b = stack.pop()
        while b - a > xtol:
            mid = 0.5 * (a + b)
            seen[mid] = ev(mid)
            if seen[mid][1] == seen[a][1]:
                a = mid
            else:
                if seen[mid][1] != seen[b][1]:
                    stack.append((mid, b))
                b = mid
    pts = sorted(seen)
    for _ in range(2):
        added = False
        for x0, x1, x2 in zip(pts, pts[1:], pts[2:]):
            if not seen[x0][1] == seen[x1][1] == seen[x2][1]:
                continue
            v = _parabola_vertex((x0, x1, x2), (seen[x0][0], seen[x1][0], seen[x2][0]))
            if v is not None and x0 < v < x2 and v not in seen:
                seen[v] = ev(v)
                added = True
        if not added:
            break
        pts = sorted(seen)
    t = min(seen, key=lambda s: (-seen[s][0], s))
    return t, seen[t][0]


def maximize_line(f: Callable[[float], tuple[float, Hashable]], lo: float, hi: float, *,
                  points: int = 129, xtol: float = 1e-7, budget: int = 100_000) -> SearchResult:
    """Global maximum of a piecewise-quadratic function of one variable on [lo, hi]."""
    memo = _Memo(lambda x: f(float(x[0])), budget)
    try:
        _line(memo, np.array([lo], float), 0, lo, hi, points, xtol * max(hi - lo, 1.0))
        exhausted = False
    except BudgetExhausted:
        exhausted = True
    x, value = memo.best()
    return SearchResult(x, value, memo.calls, 0, exhausted)


@dataclass
class BoxOptions:
    grid: int = 64
    refinements: int = 2
    shrink: int = 8
    candidates: int = 3
    polish_sweeps: int = 3
    line_points: int = 17
    budget: int = 200_000


def maximize_box(f: Objective, lo, hi, options: BoxOptions | None = None) -> SearchResult:
    """Coarse grid, local grid refinement around the best cells, then coordinate-wise line polish."""
    opt = options or BoxOptions()
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    memo = _Memo(f, opt.budget)
    step0 = (hi - lo) / (opt.grid - 1)
    depth = 0
    try:
        axes = [np.linspace(a, b, opt.grid) for a, b in zip(lo, hi)]
        for x in itertools.product(*axes):
            memo(np.array(x))
        ranked = sorted(memo.cache, key=lambda k: (-memo.cache[k][0], k))
        starts: list[np.ndarray] = []
        for k in ranked:
            x = np.array(k)
            if all(np.any(np.abs(x - s) > step0 * 1.5) for s in starts):
                starts.append(x)
            if len(starts) == opt.candidates:
                break
        # in 3+ dimensions use more rounds of a smaller local grid, same final resolution
        shrink = opt.shrink if len(lo) <= 2 else min(opt.shrink, 3)
        rounds = int(np.ceil(opt.refinements * np.log(opt.shrink) / np.log(shrink) - 1e-9))
        for x in starts:
            step = step0.copy()
            for depth in range(1, rounds + 1):
                sub = step / shrink
                local = [np.unique(np.clip(np.arange(-shrink, shrink + 1) * s + c, a, b))
                         for s, c, a, b in zip(sub, x, lo, hi)]
                pts = [np.array(y) for y in itertools.product(*local)]
                x = min(pts, key=lambda y: (-memo(y)[0], tuple(y)))
                step = sub
            value = memo(x)[0]
            for _ in range(opt.polish_sweeps):
                before = value
                for d in range(len(lo)):
                    w = step0[d]
                    t, value = _line(memo, x, d, max(lo[d], x[d] - w), min(hi[d], x[d] + w),
                                     opt.line_points, 1e-7 * max(w, 1.0))
                    x = x.copy()
                    x[d] = t
                if value <= before + 1e-15 * max(1.0, abs(value)):
                    break
        exhausted = False
    except BudgetExhausted:
        exhausted = True
    x, value = memo.best()
    return SearchResult(x, value, memo.calls, depth, exhausted)
