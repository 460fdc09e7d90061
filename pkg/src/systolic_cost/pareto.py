"""Pareto fronts and hypervolume for (runtime, score) design points.

The reference point is the ideal design: zero runtime and a perfect score of
100.  Each front point covers the rectangle ``[0, runtime] x [score, 100]``
and the hypervolume is the area of the union, so smaller is better.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

REFERENCE = (0.0, 100.0)


@dataclass(frozen=True, order=True)
class ParetoPoint:
    runtime: float
    score: float

    def __post_init__(self):
        if not (math.isfinite(self.runtime) and self.runtime >= 0):
            raise ValueError(f"runtime must be finite and >= 0, got {self.runtime!r}")
        if not (0 <= self.score <= 100):
            raise ValueError(f"score must lie in [0, 100], got {self.score!r}")

    def dominates(self, other: "ParetoPoint") -> bool:
        return (self.runtime <= other.runtime and self.score >= other.score) and self != other


def pareto_front(points: Iterable[ParetoPoint]) -> list[ParetoPoint]:
    """Non-dominated subset sorted by runtime; duplicates collapse to one point."""
    front: list[ParetoPoint] = []
    best = -math.inf
    # ascending runtime, and for equal runtime the highest score first
    for p in sorted(set(points), key=lambda p: (p.runtime, -p.score)):
        if p.score > best:
            front.append(p)
            best = p.score
    return front


def hypervolume(points: Iterable[ParetoPoint]) -> float:
    """Exact union area by a sweep over the front in runtime order."""
    area = 0.0
    prev = REFERENCE[0]
    # on the front, scores rise with runtime, so the slab (prev, runtime] is
    # covered down to the score of the current point
    for p in pareto_front(points):
        area += (p.runtime - prev) * (REFERENCE[1] - p.score)
        prev = p.runtime
    return area


def read_points(source: str | Path | io.TextIOBase) -> list[ParetoPoint]:
    """Two-column CSV ``runtime_ms, accuracy_pct``; a non-numeric first row is a header."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    points = []
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), 1):
        cells = [c.strip() for c in row]
        if not cells or all(not c for c in cells) or cells[0].startswith("#"):
            continue
        if len(cells) != 2:
            raise ValueError(f"line {lineno}: expected 2 columns, got {len(cells)}")
        try:
            runtime, score = float(cells[0]), float(cells[1])
        except ValueError:
            if not points and lineno == 1:
                continue
            raise ValueError(f"line {lineno}: non-numeric value") from None
        points.append(ParetoPoint(runtime, score))
    if not points:
        raise ValueError("no points")
    return points
