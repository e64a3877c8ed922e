"""Stratified nilpotent Lie algebras with exact structure constants.

Indices are 0-based throughout the Python API. JSON files and the command
line use 1-based indices, converted at the boundary in :func:`algebra_from_dict`
and :func:`algebra_to_dict`.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm
from pathlib import Path
from typing import Mapping, Sequence

from .linalg import SparseBasis, rank, to_fraction

Vector = dict  # sparse: basis index -> Fraction


class StructuralError(ValueError):
    """Malformed algebra data (bad dimensions, indices, or coefficients)."""


class NoExactWitness(LookupError):
    """A basis vector is not exactly an iterated bracket of first-layer vectors."""

    def __init__(self, index: int):
        super().__init__(f"no right-nested first-layer word equals Y_{index + 1} exactly")
        self.index = index


@dataclass(frozen=True)
class Violation:
    axiom: str
    indices: tuple
    detail: str = ""

    def to_dict(self) -> dict:
        return {"axiom": self.axiom, "indices": [i + 1 for i in self.indices], "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def axioms(self) -> set[str]:
        return {v.axiom for v in self.violations}

    def to_dict(self) -> dict:
        return {"valid": self.ok, "violations": [v.to_dict() for v in self.violations]}


def _clean_vector(vec: Mapping) -> dict[int, Fraction]:
    out = {}
    for k, c in vec.items():
        c = to_fraction(c)
        if c:
            out[int(k)] = c
    return out


@dataclass(frozen=True, eq=False)
class StratifiedAlgebra:
    """Basis ``Y_0 .. Y_{q-1}`` split into layers of sizes ``layer_dims``.

    ``brackets`` maps an index pair ``(i, j)`` to the sparse vector
    ``[Y_i, Y_j]``. Pairs are usually stored once with ``i < j``; the reverse
    order is filled in by antisymmetry when read through :meth:`structure`.
    """

    layer_dims: tuple[int, ...]
    brackets: Mapping[tuple[int, int], Mapping[int, Fraction]] = field(default_factory=dict)
    witnesses: Mapping[int, tuple[int, ...]] | None = None
    name: str = ""

    def __post_init__(self):
        dims = tuple(self.layer_dims)
        if not dims or any((not isinstance(d, int)) or d <= 0 for d in dims):
            raise StructuralError(f"layer dimensions must be positive integers, got {self.layer_dims!r}")
        object.__setattr__(self, "layer_dims", dims)
        q = sum(dims)
        table = {}
        for key, vec in dict(self.brackets).items():
            try:
                i, j = (int(a) for a in key)
            except (TypeError, ValueError) as exc:
                raise StructuralError(f"bad bracket key {key!r}") from exc
            if not (0 <= i < q and 0 <= j < q):
                raise StructuralError(f"bracket index out of range: ({i + 1}, {j + 1}) with q={q}")
            try:
                clean = _clean_vector(vec)
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise StructuralError(f"bad coefficient in bracket ({i + 1}, {j + 1}): {exc}") from exc
            for k in clean:
                if not 0 <= k < q:
                    raise StructuralError(f"output index {k + 1} out of range in bracket ({i + 1}, {j + 1})")
            if clean:
                table[(i, j)] = clean
        object.__setattr__(self, "brackets", table)
        if self.witnesses is not None:
            wit = {}
            for l, word in dict(self.witnesses).items():
                word = tuple(int(a) for a in word)
                if not 0 <= int(l) < q or any(not 0 <= a < q for a in word) or not word:
                    raise StructuralError(f"bad witness for index {int(l) + 1}: {word!r}")
                wit[int(l)] = word
            object.__setattr__(self, "witnesses", wit)
        object.__setattr__(self, "_nested_cache", {})

    # dimensions ------------------------------------------------------------

    @property
    def step(self) -> int:
        return len(self.layer_dims)

    @property
    def dim(self) -> int:
        return sum(self.layer_dims)

    @cached_property
    def cumulative_dims(self) -> tuple[int, ...]:
        return tuple(itertools.accumulate(self.layer_dims, initial=0))

    @cached_property
    def weights(self) -> tuple[int, ...]:
        return tuple(j + 1 for j, d in enumerate(self.layer_dims) for _ in range(d))

    def layer(self, j: int) -> range:
        """Indices of layer ``j`` (1-based layer number)."""
        n = self.cumulative_dims
        return range(n[j - 1], n[j])

    @property
    def first_layer(self) -> range:
        return self.layer(1)

    @property
    def homogeneous_dimension(self) -> int:
        return sum(self.weights)

    @cached_property
    def gauge_exponent(self) -> int:
        return 2 * lcm(*range(1, self.step + 1))

    # structure constants ---------------------------------------------------

    @cached_property
    def _table(self) -> dict[tuple[int, int], dict[int, Fraction]]:
        table: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (i, j), vec in self.brackets.items():
            table[(i, j)] = vec
            if (j, i) not in self.brackets and i != j:
                table[(j, i)] = {k: -c for k, c in vec.items()}
        return table

    def structure(self, i: int, j: int) -> dict[int, Fraction]:
        """Sparse ``[Y_i, Y_j]`` with antisymmetric completion."""
        return self._table.get((i, j), {})

    def structure_constant(self, i: int, j: int, k: int) -> Fraction:
        return self.structure(i, j).get(k, Fraction(0))

    def basis_vector(self, l: int) -> list[Fraction]:
        return [Fraction(int(k == l)) for k in range(self.dim)]

    def nested_bracket(self, word: Sequence[int]) -> dict[int, Fraction]:
        """Sparse right-nested bracket ``[Y_w0, [Y_w1, ... , Y_wn]]``."""
        word = tuple(word)
        cache = self._nested_cache
        if word in cache:
            return cache[word]
        if len(word) == 1:
            out = {word[0]: Fraction(1)}
        else:
            inner = self.nested_bracket(word[1:])
            out: dict[int, Fraction] = {}
            a = word[0]
            for b, cb in inner.items():
                for k, c in self.structure(a, b).items():
                    nv = out.get(k, 0) + cb * c
                    if nv:
                        out[k] = nv
                    else:
                        out.pop(k, None)
        cache[word] = out
        return out

    def __repr__(self) -> str:
        label = self.name or "StratifiedAlgebra"
        return f"<{label} dims={self.layer_dims}>"

    def __eq__(self, other) -> bool:
        if not isinstance(other, StratifiedAlgebra):
            return NotImplemented
        return self.layer_dims == other.layer_dims and self._table == other._table

    def __hash__(self) -> int:
        return hash((self.layer_dims, frozenset((k, frozenset(v.items())) for k, v in self.brackets.items())))


# ---------------------------------------------------------------------------
# operations


def _check_element(A: StratifiedAlgebra, u: Sequence) -> None:
    if len(u) != A.dim:
        raise ValueError(f"element has {len(u)} coordinates, algebra dimension is {A.dim}")


def bracket(A: StratifiedAlgebra, u: Sequence, v: Sequence) -> list:
    """Bilinear bracket of two coordinate vectors (exact when inputs are exact)."""
    _check_element(A, u)
    _check_element(A, v)
    exact = all(isinstance(a, (int, Fraction)) for a in itertools.chain(u, v))
    out = [Fraction(0) if exact else 0.0 for _ in range(A.dim)]
    for i, ui in enumerate(u):
        if not ui:
            continue
        for j, vj in enumerate(v):
            if not vj or i == j:
                continue
            for k, c in A.structure(i, j).items():
                out[k] += ui * vj * c
    return out


def ad_power(A: StratifiedAlgebra, v: Sequence, w: Sequence, n: int) -> list:
    """``ad(v)**n w``."""
    out = list(w)
    for _ in range(n):
        out = bracket(A, v, out)
    return out


def kappa(A: StratifiedAlgebra, word: Sequence[int], target: int) -> Fraction:
    """Coefficient of ``Y_target`` in the right-nested bracket of ``word``."""
    q = A.dim
    if not word or any(not 0 <= l < q for l in word) or not 0 <= target < q:
        raise IndexError("kappa index out of range")
    w = A.weights
    if w[target] != sum(w[l] for l in word):
        return Fraction(0)
    return A.nested_bracket(word).get(target, Fraction(0))


def homogeneous_dimension(A: StratifiedAlgebra) -> int:
    return A.homogeneous_dimension


def bracket_witnesses(A: StratifiedAlgebra) -> dict[int, tuple[int, ...]]:
    """First-layer words whose right-nested bracket is exactly each basis vector.

    Words are searched in lexicographic order, shortest (= weight) only.
    """
    found: dict[int, tuple[int, ...]] = {l: (l,) for l in A.first_layer}
    gens = list(A.first_layer)
    for j in range(2, A.step + 1):
        missing = set(A.layer(j))
        for word in itertools.product(gens, repeat=j):
            if not missing:
                break
            vec = A.nested_bracket(word)
            if len(vec) == 1:
                (k, c), = vec.items()
                if c == 1 and k in missing:
                    found[k] = word
                    missing.discard(k)
        if missing:
            raise NoExactWitness(min(missing))
    return found


def validate(A: StratifiedAlgebra) -> ValidationReport:
    """Check every structural axiom; violations carry 0-based indices."""
    q, w = A.dim, A.weights
    out: list[Violation] = []
    raw = A.brackets
    for (i, j), vec in sorted(raw.items()):
        if i == j:
            out.append(Violation("antisymmetry", (i, i), "nonzero self-bracket"))
            continue
        if (j, i) in raw:
            other = raw[(j, i)]
            keys = set(vec) | set(other)
            for k in sorted(keys):
                if vec.get(k, 0) != -other.get(k, 0) and i < j:
                    out.append(Violation("antisymmetry", (i, j, k)))
        for k in sorted(vec):
            if w[k] != w[i] + w[j] and (i < j or (j, i) not in raw):
                a, b = min(i, j), max(i, j)
                out.append(Violation("grading", (a, b, k), f"weight {w[k]} != {w[i]} + {w[j]}"))
    # Jacobi
    for i, j, k in itertools.combinations(range(q), 3):
        total: dict[int, Fraction] = {}
        for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
            for d, coef in A.structure(b, c).items():
                for e, coef2 in A.structure(a, d).items():
                    total[e] = total.get(e, 0) + coef * coef2
        bad = sorted(e for e, v in total.items() if v)
        if bad:
            out.append(Violation("jacobi", (i, j, k), f"nonzero component(s) {[e + 1 for e in bad]}"))
    # generation
    for j in range(1, A.step):
        target = list(A.layer(j + 1))
        rows = []
        for a in A.first_layer:
            for b in A.layer(j):
                vec = A.structure(a, b)
                if vec:
                    rows.append([vec.get(k, 0) for k in target])
        r = rank(rows) if rows else 0
        if r != len(target):
            out.append(Violation("generation", (j,), f"[V_1, V_{j}] has rank {r}, layer {j + 1} has dim {len(target)}"))
    # witnesses
    if A.witnesses:
        for l, word in sorted(A.witnesses.items()):
            if A.nested_bracket(word) != {l: 1}:
                out.append(Violation("witness", (l,), f"word {[a + 1 for a in word]} does not give Y_{l + 1}"))
    return ValidationReport(tuple(out))


def find_relabeling(A: StratifiedAlgebra, B: StratifiedAlgebra) -> tuple[int, ...] | None:
    """A weight-preserving permutation ``p`` with ``c^A_ij^k = c^B_{p(i)p(j)}^{p(k)}``."""
    if A.layer_dims != B.layer_dims:
        return None
    layers = [list(A.layer(j)) for j in range(1, A.step + 1)]
    for parts in itertools.product(*(itertools.permutations(layer) for layer in layers)):
        perm = tuple(itertools.chain(*parts))
        ok = True
        for i in range(A.dim):
            for j in range(i + 1, A.dim):
                mapped = {perm[k]: c for k, c in A.structure(i, j).items()}
                if mapped != B.structure(perm[i], perm[j]):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            return perm
    return None


# ---------------------------------------------------------------------------
# presets


def heisenberg(n: int = 1) -> StratifiedAlgebra:
    """``[Y_i, Y_{n+i}] = Y_{2n}`` (0-based) for i < n."""
    if n < 1:
        raise StructuralError("heisenberg(n) needs n >= 1")
    br = {(i, n + i): {2 * n: Fraction(1)} for i in range(n)}
    return StratifiedAlgebra((2 * n, 1), br, name=f"heisenberg({n})")


def engel() -> StratifiedAlgebra:
    """``[Y_1, Y_2] = Y_3`` and ``[Y_1, Y_3] = Y_4`` (1-based)."""
    br = {(0, 1): {2: Fraction(1)}, (0, 2): {3: Fraction(1)}}
    return StratifiedAlgebra((2, 1, 1), br, name="engel")


def abelian(n: int) -> StratifiedAlgebra:
    return StratifiedAlgebra((n,), {}, name=f"abelian({n})")


_PRESET = re.compile(r"^\s*(heisenberg|engel|abelian|free)\s*(?:\(\s*([\d\s,]*)\)|(\d*))\s*$")


def preset(spec: str) -> StratifiedAlgebra:
    """Resolve names like ``heisenberg``, ``heisenberg(2)``, ``engel``, ``abelian(3)``, ``free(2,3)``."""
    m = _PRESET.match(spec.lower())
    if not m:
        raise KeyError(f"unknown preset {spec!r}")
    kind = m.group(1)
    raw = m.group(2) if m.group(2) is not None else (m.group(3) or "")
    args = [int(a) for a in raw.replace(" ", "").split(",") if a]
    if kind == "heisenberg":
        return heisenberg(*(args or [1]))
    if kind == "engel":
        if args:
            raise KeyError("engel takes no parameters")
        return engel()
    if kind == "abelian":
        if len(args) != 1:
            raise KeyError("abelian needs a dimension, e.g. abelian(3)")
        return abelian(args[0])
    if len(args) != 2:
        raise KeyError("free needs generators and step, e.g. free(2,3)")
    from .free import free_nilpotent

    return free_nilpotent(*args)


# ---------------------------------------------------------------------------
# JSON


SCHEMA_DIR = Path(__file__).with_name("schemas")


def load_schema(name: str) -> dict:
    return json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())


def algebra_from_dict(data: Mapping, *, check: bool = True) -> StratifiedAlgebra:
    """Build from the 1-based JSON layout; raises StructuralError on bad input."""
    import jsonschema

    try:
        jsonschema.validate(data, load_schema("algebra"))
    except jsonschema.ValidationError as exc:
        raise StructuralError(f"algebra definition rejected: {exc.message}") from exc
    br: dict[tuple[int, int], dict[int, Fraction]] = {}
    for entry in data.get("brackets", []):
        i, j = entry["i"] - 1, entry["j"] - 1
        try:
            vec = {int(k) - 1: Fraction(str(v)) for k, v in entry["out"].items()}
        except (ValueError, ZeroDivisionError) as exc:
            raise StructuralError(f"bad coefficient in bracket ({i + 1}, {j + 1})") from exc
        if (i, j) in br:
            raise StructuralError(f"duplicate bracket ({i + 1}, {j + 1})")
        br[(i, j)] = vec
    wit = None
    if "witnesses" in data:
        wit = {int(k) - 1: tuple(a - 1 for a in v) for k, v in data["witnesses"].items()}
    A = StratifiedAlgebra(tuple(data["layer_dims"]), br, wit, name=data.get("name", ""))
    if check:
        report = validate(A)
        if not report.ok:
            raise StructuralError(
                "algebra violates axioms: "
                + "; ".join(f"{v.axiom} at {[i + 1 for i in v.indices]}" for v in report.violations)
            )
    return A


def algebra_to_dict(A: StratifiedAlgebra) -> dict:
    out: dict = {"layer_dims": list(A.layer_dims)}
    if A.name:
        out["name"] = A.name
    out["brackets"] = [
        {"i": i + 1, "j": j + 1, "out": {str(k + 1): str(c) for k, c in sorted(vec.items())}}
        for (i, j), vec in sorted(A.brackets.items())
    ]
    if A.witnesses:
        out["witnesses"] = {str(l + 1): [a + 1 for a in w] for l, w in sorted(A.witnesses.items())}
    return out


def load_algebra(source: str | Path) -> StratifiedAlgebra:
    """A preset name or a path to a JSON definition."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        try:
            data = json.loads(path.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise StructuralError(f"cannot read algebra file {source}: {exc}") from exc
        return algebra_from_dict(data)
    try:
        return preset(str(source))
    except KeyError as exc:
        raise StructuralError(str(exc.args[0])) from exc


def dump_algebra(A: StratifiedAlgebra, path: str | Path) -> None:
    Path(path).write_text(json.dumps(algebra_to_dict(A), indent=2) + "\n")
