"""Free nilpotent Lie algebras on a Hall basis.

Hall trees are ints (generators) or pairs ``(a, b)`` of basis indices. A pair
is admitted when ``a < b`` and, if ``b`` is itself a pair ``(c, d)``, when
``c <= a``. Within each weight, pairs are ordered lexicographically on
``(a, b)``. Structure constants come from expanding each bracket in the free
associative algebra and solving in the span of the expanded basis.
"""

from __future__ import annotations

from fractions import Fraction

from .algebra import NoExactWitness, StratifiedAlgebra, StructuralError, bracket_witnesses
from .linalg import SparseBasis

DEFAULT_DIM_CAP = 200

Assoc = dict  # word tuple -> Fraction


def mobius(n: int) -> int:
    result, p, m = 1, 2, n
    while p * p <= m:
        if m % p == 0:
            m //= p
            if m % p == 0:
                return 0
            result = -result
        p += 1
    return -result if m > 1 else result


def witt_dimension(g: int, n: int) -> int:
    """Dimension of the degree-``n`` part of the free Lie algebra on ``g`` letters."""
    total = sum(mobius(d) * g ** (n // d) for d in range(1, n + 1) if n % d == 0)
    return total // n


def _assoc_bracket(x: Assoc, y: Assoc) -> Assoc:
    out: Assoc = {}
    for u, a in x.items():
        for v, b in y.items():
            for word, s in ((u + v, a * b), (v + u, -a * b)):
                nv = out.get(word, 0) + s
                if nv:
                    out[word] = nv
                else:
                    out.pop(word, None)
    return out


class HallBasis:
    """Hall trees up to a given weight with their associative expansions."""

    def __init__(self, generators: int, step: int, cap: int | None = DEFAULT_DIM_CAP):
        if generators < 1 or step < 1:
            raise StructuralError("free_nilpotent needs generators >= 1 and step >= 1")
        expected = sum(witt_dimension(generators, n) for n in range(1, step + 1))
        if cap is not None and expected > cap:
            raise StructuralError(f"free({generators},{step}) has dimension {expected}, above the cap {cap}")
        self.generators = generators
        self.step = step
        self.trees: list = []
        self.weight: list[int] = []
        self.expansion: list[Assoc] = []
        for a in range(generators):
            self._push(a, 1, {(a,): Fraction(1)})
        by_weight = {1: list(range(generators))}
        for n in range(2, step + 1):
            new = []
            candidates = []
            for a in range(len(self.trees)):
                for b in range(a + 1, len(self.trees)):
                    if self.weight[a] + self.weight[b] != n:
                        continue
                    tb = self.trees[b]
                    if isinstance(tb, tuple) and tb[0] > a:
                        continue
                    candidates.append((a, b))
            for a, b in sorted(candidates):
                exp = _assoc_bracket(self.expansion[a], self.expansion[b])
                new.append(self._push((a, b), n, exp))
            by_weight[n] = new
        self.by_weight = by_weight
        dims = tuple(len(by_weight[n]) for n in range(1, step + 1))
        for n, d in enumerate(dims, start=1):
            if d != witt_dimension(generators, n):
                raise AssertionError(f"Hall enumeration gave {d} elements in degree {n}")
        self.layer_dims = dims

    def _push(self, tree, weight: int, expansion: Assoc) -> int:
        self.trees.append(tree)
        self.weight.append(weight)
        self.expansion.append(expansion)
        return len(self.trees) - 1

    def render(self, i: int) -> str:
        t = self.trees[i]
        if isinstance(t, int):
            return f"Y{t + 1}"
        return f"[{self.render(t[0])}, {self.render(t[1])}]"

    def flatten(self, i: int):
        """Nested tuple of generator indices describing the Hall tree."""
        t = self.trees[i]
        if isinstance(t, int):
            return t
        return (self.flatten(t[0]), self.flatten(t[1]))


def free_nilpotent(generators: int, step: int, *, cap: int | None = DEFAULT_DIM_CAP) -> StratifiedAlgebra:
    """Free nilpotent Lie algebra of the given step on a Hall basis."""
    hall = HallBasis(generators, step, cap)
    q = len(hall.trees)
    spans = {}
    for n, idx in hall.by_weight.items():
        sb = SparseBasis()
        for i in idx:
            if not sb.add(hall.expansion[i], i):
                raise AssertionError("Hall elements are dependent")
        spans[n] = sb
    br = {}
    for i in range(q):
        for j in range(i + 1, q):
            n = hall.weight[i] + hall.weight[j]
            if n > step:
                continue
            exp = _assoc_bracket(hall.expansion[i], hall.expansion[j])
            if not exp:
                continue
            vec = spans[n].express(exp)
            vec = {k: c for k, c in vec.items() if c}
            if vec:
                br[(i, j)] = vec
    A = StratifiedAlgebra(hall.layer_dims, br, name=f"free({generators},{step})")
    try:
        wit = bracket_witnesses(A)
    except NoExactWitness:
        wit = None
    if wit is not None:
        A = StratifiedAlgebra(hall.layer_dims, br, wit, name=A.name)
    object.__setattr__(A, "hall_words", tuple(hall.flatten(i) for i in range(q)))
    return A
