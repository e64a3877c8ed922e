"""Exact linear algebra over the rationals.

Small dense/sparse Gaussian elimination on ``Fraction`` entries. Sizes in
this package are tiny (at most a few hundred columns), so clarity wins over
speed here.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence


def to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def rank(rows: Iterable[Sequence]) -> int:
    """Rank of a matrix given as a list of rows (exact)."""
    return len(_echelon([list(map(to_fraction, r)) for r in rows]))


def _echelon(rows: list[list[Fraction]]) -> list[list[Fraction]]:
    pivots: list[tuple[int, list[Fraction]]] = []
    for row in rows:
        row = row[:]
        for col, prow in pivots:
            if row[col]:
                f = row[col]
                row = [a - f * b for a, b in zip(row, prow)]
        lead = next((i for i, a in enumerate(row) if a), None)
        if lead is None:
            continue
        inv = 1 / row[lead]
        row = [a * inv for a in row]
        # keep reduced form so later rows only need a single pass
        pivots = [
            (c, [a - p[lead] * b for a, b in zip(p, row)] if p[lead] else p)
            for c, p in pivots
        ]
        pivots.append((lead, row))
    return [p for _, p in pivots]


def solve(matrix: Sequence[Sequence], rhs: Sequence) -> list[Fraction]:
    """Solve the square system ``matrix @ x = rhs`` exactly.

    Raises ``ZeroDivisionError`` if the matrix is singular.
    """
    n = len(matrix)
    aug = [list(map(to_fraction, row)) + [to_fraction(b)] for row, b in zip(matrix, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return [row[n] for row in aug]


def inverse(matrix: Sequence[Sequence]) -> list[list[Fraction]]:
    n = len(matrix)
    cols = [solve(matrix, [int(i == j) for i in range(n)]) for j in range(n)]
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in zip(*b)] for row in a]


class SparseBasis:
    """Incremental echelon basis of sparse vectors (dicts key -> Fraction).

    Each added vector is tagged; ``express`` writes a vector in terms of the
    tagged vectors, or raises ``ValueError`` if it is not in their span.
    """

    def __init__(self) -> None:
        # pivot key -> (reduced vector, combination of tags)
        self._rows: list[tuple[Hashable, dict, dict]] = []
        self.tags: list[Hashable] = []

    def __len__(self) -> int:
        return len(self._rows)

    def _reduce(self, vec: Mapping, combo: dict) -> tuple[dict, dict]:
        vec = {k: to_fraction(v) for k, v in vec.items() if v}
        combo = dict(combo)
        for key, row, rcombo in self._rows:
            f = vec.get(key)
            if not f:
                continue
            for k, v in row.items():
                nv = vec.get(k, 0) - f * v
                if nv:
                    vec[k] = nv
                else:
                    vec.pop(k, None)
            for k, v in rcombo.items():
                nv = combo.get(k, 0) - f * v
                if nv:
                    combo[k] = nv
                else:
                    combo.pop(k, None)
        return vec, combo

    def add(self, vec: Mapping, tag: Hashable) -> bool:
        """Add ``vec``; returns False (and stores nothing) if dependent."""
        red, combo = self._reduce(vec, {tag: Fraction(1)})
        if not red:
            return False
        key = min(red)
        inv = 1 / red[key]
        red = {k: v * inv for k, v in red.items()}
        combo = {k: v * inv for k, v in combo.items()}
        self._rows.append((key, red, combo))
        self.tags.append(tag)
        return True

    @property
    def pivots(self) -> list[Hashable]:
        return [key for key, _, _ in self._rows]

    def contains(self, vec: Mapping) -> bool:
        red, _ = self._reduce(vec, {})
        return not red

    def express(self, vec: Mapping) -> dict:
        red, combo = self._reduce(vec, {})
        if red:
            raise ValueError("vector is not in the span")
        return {k: -v for k, v in combo.items()}
