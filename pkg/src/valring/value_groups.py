"""Finitely generated lex-ordered value groups and the invariants of an
inclusion ``Gamma_nu <= Gamma_omega``.

Elements are tuples ``(c_1, ..., c_u)`` of :class:`QuadExt`; ``c_u`` is the
most significant coordinate and ``c_1`` lives in the smallest convex
subgroup.  A :class:`ValueGroupSpec` fixes free generators ordered by level
(level 1 first) and a :class:`SubgroupEmbedding` is an integer matrix whose
row ``i`` expresses the ``i``-th generator of the subgroup in that basis.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, sqrt
from typing import Optional, Sequence

import numpy as np

from . import intlinalg as la
from .errors import (
    InfiniteInitialIndexError,
    MalformedSpecError,
    PreconditionError,
)
from .exact_reals import QuadExt, parse_quadext, rational_rank

DEFAULT_BOX = 20
EUCLID_CAP = 400


class Ordering(enum.IntEnum):
    LT = -1
    EQ = 0
    GT = 1


@dataclass(frozen=True)
class GroupElement:
    coords: tuple[QuadExt, ...]

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(_as_qx(c) for c in self.coords))

    @classmethod
    def zero(cls, u: int) -> "GroupElement":
        return cls((QuadExt(),) * u)

    @classmethod
    def parse(cls, text: str, col_offset: int = 0) -> "GroupElement":
        s = text.strip()
        if not (s.startswith("(") and s.endswith(")")):
            from .errors import LiteralSyntaxError

            raise LiteralSyntaxError("group element must be written '(c_1, ..., c_u)'", col=col_offset + 1)
        inner = text[text.index("(") + 1 : text.rindex(")")]
        start = col_offset + text.index("(") + 1
        parts, coords = inner.split(","), []
        for part in parts:
            lead = len(part) - len(part.lstrip())
            coords.append(parse_quadext(part.strip(), col_offset=start + lead))
            start += len(part) + 1
        return cls(tuple(coords))

    @property
    def rank(self) -> int:
        return len(self.coords)

    def _check(self, other: "GroupElement"):
        if not isinstance(other, GroupElement):
            raise TypeError(f"expected GroupElement, got {type(other).__name__}")
        if other.rank != self.rank:
            raise PreconditionError(f"rank mismatch: {self.rank} vs {other.rank}")

    def __add__(self, other):
        self._check(other)
        return GroupElement(tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other):
        self._check(other)
        return GroupElement(tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self):
        return GroupElement(tuple(-a for a in self.coords))

    def __mul__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        return GroupElement(tuple(a * k for a in self.coords))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coords)

    def convex_level(self) -> int:
        for i in range(self.rank, 0, -1):
            if not self.coords[i - 1].is_zero():
                return i
        return 0

    def sign(self) -> int:
        lvl = self.convex_level()
        return 0 if lvl == 0 else self.coords[lvl - 1].sign()

    def __lt__(self, other):
        return vg_compare(self, other) is Ordering.LT

    def __le__(self, other):
        return vg_compare(self, other) is not Ordering.GT

    def __gt__(self, other):
        return vg_compare(self, other) is Ordering.GT

    def __ge__(self, other):
        return vg_compare(self, other) is not Ordering.LT

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


def _as_qx(c) -> QuadExt:
    return c if isinstance(c, QuadExt) else QuadExt(c)


def vg_compare(g: GroupElement, h: GroupElement) -> Ordering:
    g._check(h)
    return Ordering((g - h).sign())


def vg_convex_level(g: GroupElement) -> int:
    return g.convex_level()


# -- coordinates ------------------------------------------------------------


def radicand_universe(elements: Sequence[GroupElement]) -> tuple[int, ...]:
    ds = {1}
    for g in elements:
        for c in g.coords:
            ds.update(c.radicands)
    return tuple(sorted(ds))


def rational_coords(g: GroupElement, universe: Sequence[int]) -> list[Fraction]:
    """Flattened coefficient vector, level-major (level 1 first)."""
    return [c.coeff(d) for c in g.coords for d in universe]


def _from_coords(vec: Sequence[Fraction], u: int, universe: Sequence[int]) -> GroupElement:
    k = len(universe)
    return GroupElement(
        tuple(QuadExt(dict(zip(universe, vec[i * k : (i + 1) * k]))) for i in range(u))
    )


@dataclass(frozen=True)
class ValueGroupSpec:
    u: int
    level_ranks: tuple[int, ...]
    generators: tuple[GroupElement, ...]

    def __post_init__(self):
        object.__setattr__(self, "level_ranks", tuple(self.level_ranks))
        object.__setattr__(self, "generators", tuple(self.generators))
        if len(self.level_ranks) != self.u:
            raise MalformedSpecError(f"expected {self.u} level ranks, got {len(self.level_ranks)}")
        if any(s < 0 for s in self.level_ranks):
            raise MalformedSpecError("level ranks must be nonnegative")
        if len(self.generators) != sum(self.level_ranks):
            raise MalformedSpecError(
                f"expected {sum(self.level_ranks)} generators, got {len(self.generators)}"
            )
        for g, lvl in zip(self.generators, self.generator_levels):
            if g.rank != self.u:
                raise MalformedSpecError(f"generator {g} has rank {g.rank}, expected {self.u}")
            if g.convex_level() != lvl:
                raise MalformedSpecError(f"generator {g} should have convex level {lvl}")
        for lvl in range(1, self.u + 1):
            coords = [g.coords[lvl - 1] for g, l in zip(self.generators, self.generator_levels) if l == lvl]
            if rational_rank(coords) != len(coords):
                raise MalformedSpecError(f"level-{lvl} generator coordinates are rationally dependent")

    @property
    def n(self) -> int:
        return len(self.generators)

    @property
    def generator_levels(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, s in enumerate(self.level_ranks) for _ in range(s))

    @property
    def universe(self) -> tuple[int, ...]:
        return radicand_universe(self.generators)

    def realize(self, coeffs: Sequence[int]) -> GroupElement:
        acc = GroupElement.zero(self.u)
        for k, g in zip(coeffs, self.generators):
            if k:
                acc = acc + g * int(k)
        return acc

    def coordinate_matrix(self, universe=None) -> list[list[Fraction]]:
        universe = universe or self.universe
        return [rational_coords(g, universe) for g in self.generators]


@dataclass(frozen=True)
class SubgroupEmbedding:
    """Row ``i`` of ``matrix`` gives generator ``i`` of the subgroup in the ambient basis."""

    matrix: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        m = tuple(tuple(int(x) for x in row) for row in self.matrix)
        object.__setattr__(self, "matrix", m)
        if any(len(r) != len(m) for r in m):
            raise PreconditionError("embedding matrix must be square")
        if not m or la.det(m) == 0:
            raise PreconditionError("embedding matrix is singular")

    @property
    def n(self) -> int:
        return len(self.matrix)

    @property
    def det(self) -> int:
        return la.int_det(self.matrix)


def identity_embedding(n: int) -> SubgroupEmbedding:
    return SubgroupEmbedding(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))


def validate_embedding(spec: ValueGroupSpec, emb: SubgroupEmbedding) -> None:
    """Check that the realized subgroup generators keep the level structure."""
    if emb.n != spec.n:
        raise MalformedSpecError(f"embedding is {emb.n}x{emb.n} but the group has {spec.n} generators")
    levels = spec.generator_levels
    for i, row in enumerate(emb.matrix):
        g = spec.realize(row)
        if g.convex_level() != levels[i]:
            raise MalformedSpecError(
                f"subgroup generator {i + 1} has convex level {g.convex_level()}, expected {levels[i]}"
            )


def subgroup_generators(spec: ValueGroupSpec, emb: SubgroupEmbedding) -> list[GroupElement]:
    return [spec.realize(row) for row in emb.matrix]


# -- lattices ---------------------------------------------------------------


@dataclass(frozen=True)
class FirstLevelLattice:
    """Bases (in ambient generator coordinates) of the level-1 parts."""

    omega: tuple[tuple[int, ...], ...]
    nu: Optional[tuple[tuple[int, ...], ...]] = None

    @property
    def rank(self) -> int:
        return len(self.omega)


def _higher_level_matrix(spec: ValueGroupSpec) -> list[list[int]]:
    universe = spec.universe
    k = len(universe)
    rows = [vec[k:] for vec in spec.coordinate_matrix(universe)]
    den = la.common_denominator(x for r in rows for x in r)
    return [[int(x * den) for x in r] for r in rows]


def vg_first_level_lattice(spec: ValueGroupSpec, emb: SubgroupEmbedding | None = None) -> FirstLevelLattice:
    high = _higher_level_matrix(spec)
    omega = la.left_kernel(high) if spec.n else []
    nu = None
    if emb is not None:
        c = [list(r) for r in emb.matrix]
        ch = la.matmul(c, high) if high and high[0] else [[] for _ in c]
        xs = la.left_kernel(ch)
        nu = tuple(tuple(r) for r in la.lattice_basis([la.vecmat(x, c) for x in xs])) if xs else ()
    return FirstLevelLattice(tuple(tuple(r) for r in omega), nu)


def vg_ramification_index(emb: SubgroupEmbedding) -> tuple[int, list[int]]:
    e = abs(emb.det)
    if e == 0:
        raise PreconditionError("singular embedding matrix")
    factors = la.smith_invariants(la.transpose(emb.matrix))
    return e, factors


def _positive_generator(spec: ValueGroupSpec, vec: Sequence[int]) -> tuple[list[int], GroupElement]:
    g = spec.realize(vec)
    if g.sign() < 0:
        vec = [-x for x in vec]
        g = -g
    return list(vec), g


def vg_initial_index(spec: ValueGroupSpec, emb: SubgroupEmbedding) -> int:
    """Initial index from the level-1 structure.

    A finitely generated subgroup of R of rank >= 2 is dense, so only 0 lies
    below every positive subgroup element; in rank 1 the answer is the index
    of the level-1 parts.
    """
    validate_embedding(spec, emb)
    lat = vg_first_level_lattice(spec, emb)
    if lat.rank == 0:
        raise MalformedSpecError("the ambient group has no level-1 elements")
    if not lat.nu:
        raise InfiniteInitialIndexError("the subgroup meets level 1 trivially; initial index is infinite")
    if lat.rank >= 2:
        return 1
    (b,) = lat.omega
    (h,) = lat.nu
    pivot = next(i for i, x in enumerate(b) if x)
    k = Fraction(h[pivot], b[pivot])
    assert k.denominator == 1 and all(hx == k * bx for hx, bx in zip(h, b))
    return abs(int(k))


# -- finite-box oracles -----------------------------------------------------


class _Box:
    """Vectorized exact evaluation of all ambient elements with coordinates in a box."""

    def __init__(self, spec: ValueGroupSpec, emb: SubgroupEmbedding, radius: int, chunk: int = 400_000):
        self.spec, self.emb, self.radius = spec, emb, radius
        self.universe = spec.universe
        self.u = spec.u
        k = len(self.universe)
        rows = spec.coordinate_matrix(self.universe)
        self.den = la.common_denominator(x for r in rows for x in r)
        self.A = np.array([[int(x * self.den) for x in r] for r in rows], dtype=np.int64).reshape(spec.n, self.u, k)
        self.sqrt = np.array([sqrt(d) for d in self.universe])
        self.adj = np.array(la.adjugate(emb.matrix), dtype=np.int64)
        self.modulus = abs(emb.det)
        self.chunk = chunk

    def chunks(self):
        n, r = self.spec.n, self.radius
        side = 2 * r + 1
        total = side**n
        for start in range(0, total, self.chunk):
            idx = np.arange(start, min(total, start + self.chunk), dtype=np.int64)
            cols = []
            for _ in range(n):
                idx, rem = np.divmod(idx, side)
                cols.append(rem - r)
            yield np.stack(cols, axis=1)

    def values(self, X):
        return np.einsum("pn,nlk->plk", X, self.A)

    def level_signs(self, Y):
        """(p, u) array of exact signs of every coordinate."""
        f = Y @ self.sqrt
        err = np.abs(Y) @ self.sqrt * 1e-12
        nonzero = np.any(Y != 0, axis=2)
        sg = np.where(nonzero, np.sign(f), 0).astype(np.int64)
        unsure = nonzero & (np.abs(f) <= err)
        for p, lvl in zip(*np.nonzero(unsure)):
            sg[p, lvl] = QuadExt(dict(zip(self.universe, (int(v) for v in Y[p, lvl])))).sign()
        return sg

    def lex(self, Y):
        sg = self.level_signs(Y)
        out = np.zeros(len(Y), dtype=np.int64)
        level = np.zeros(len(Y), dtype=np.int64)
        for lvl in range(self.u - 1, -1, -1):
            fresh = (out == 0) & (sg[:, lvl] != 0)
            out = np.where(fresh, sg[:, lvl], out)
            level = np.where(fresh, lvl + 1, level)
        return out, level

    def in_subgroup(self, X):
        return np.all((X @ self.adj) % self.modulus == 0, axis=1)

    def labels(self, X):
        return (X @ self.adj) % self.modulus

    def element(self, x) -> GroupElement:
        return self.spec.realize([int(v) for v in x])


def _euclid_descent(a: GroupElement, b: GroupElement, target: GroupElement | None, cap: int) -> GroupElement:
    """Smallest positive element reached by subtractive division on ``a, b``.

    Both inputs are positive and of convex level 1.  Stops early once the
    running minimum drops below ``target``.
    """
    best = min(a, b)
    for _ in range(cap):
        if a > b:
            a, b = b, a
        q = b.coords[0].floor_div(a.coords[0])
        r = b - a * q
        if r.is_zero():
            return best
        best = min(best, r)
        if target is not None and best < target:
            return best
        a, b = r, a
    return best


def _min_element(elems: list[GroupElement]) -> GroupElement:
    best = elems[0]
    for g in elems[1:]:
        if g < best:
            best = g
    return best


@dataclass
class _BoxScan:
    min_positive_sub: Optional[GroupElement]
    min_positive_ambient: Optional[GroupElement]
    level1_sub: list = field(default_factory=list)


def _smallest_rows(box: _Box, X, Y, mask, lvl_arr, level, k):
    """Up to ``k`` smallest elements (exactly ordered) among masked rows of a given level."""
    sel = np.nonzero(mask & (lvl_arr == level))[0]
    if not len(sel):
        return []
    f = Y[sel, level - 1] @ box.sqrt
    order = np.argsort(f)[: max(4 * k, 16)]
    elems = sorted({box.element(X[sel[i]]) for i in order}, key=_Key)
    return elems[:k]


class _Key:
    __slots__ = ("g",)

    def __init__(self, g):
        self.g = g

    def __lt__(self, other):
        return self.g < other.g


def _scan(box: _Box, keep: int = 16) -> _BoxScan:
    """Find the minimal positive subgroup element and small level-1 subgroup elements."""
    best_sub_level = None
    sub_cands: list[GroupElement] = []
    amb_cands: list[GroupElement] = []
    level1: list[GroupElement] = []
    for X in box.chunks():
        Y = box.values(X)
        sgn, lvl = box.lex(Y)
        pos = sgn > 0
        sub = pos & box.in_subgroup(X)
        if np.any(sub):
            top = int(lvl[sub].min())
            if best_sub_level is None or top < best_sub_level:
                best_sub_level, sub_cands = top, []
            if top == best_sub_level:
                sub_cands += _smallest_rows(box, X, Y, sub, lvl, top, 4)
            level1 += _smallest_rows(box, X, Y, sub, lvl, 1, keep)
        if np.any(pos):
            top = int(lvl[pos].min())
            amb_cands += _smallest_rows(box, X, Y, pos, lvl, top, 2)
    level1 = sorted(set(level1), key=_Key)[:keep]
    return _BoxScan(
        _min_element(sub_cands) if sub_cands else None,
        _min_element(amb_cands) if amb_cands else None,
        level1,
    )


def _refined_min_positive(scan: _BoxScan) -> Optional[GroupElement]:
    """Minimal positive subgroup element, pushed down by subtractive division
    among level-1 subgroup elements until it drops below every positive box
    element or the descent stalls (discrete case)."""
    best = scan.min_positive_sub
    if best is None or not scan.level1_sub:
        return best
    target = scan.min_positive_ambient
    for b in scan.level1_sub:
        if best.convex_level() != 1:
            best = b
            continue
        best = _euclid_descent(best, b, target, EUCLID_CAP)
        if target is not None and best < target:
            break
    return best


def _count_below(box: _Box, X, Y, bound: GroupElement):
    """Mask of rows with 0 <= g < bound."""
    sgn, lvl = box.lex(Y)
    nonneg = sgn >= 0
    L = bound.convex_level()
    below = nonneg & (lvl < L)
    same = np.nonzero(nonneg & (lvl == L))[0]
    if len(same):
        t = float(bound.coords[L - 1]) * box.den
        f = Y[same, L - 1] @ box.sqrt
        err = np.abs(Y[same, L - 1]) @ box.sqrt * 1e-12 + abs(t) * 1e-12
        clear = np.abs(f - t) > err
        below[same[clear & (f < t)]] = True
        for p in same[~clear]:
            if box.element(X[p]) < bound:
                below[p] = True
    return below


def vg_initial_index_bruteforce(spec: ValueGroupSpec, emb: SubgroupEmbedding, box_radius: int = DEFAULT_BOX) -> int:
    """Count ``g >= 0`` with coordinates in ``[-box, box]^n`` lying below every
    positive subgroup element (test oracle, direct from the definition).

    Subgroup membership uses the adjugate of the embedding matrix.  Positive
    subgroup elements are those in the box, supplemented by subtractive
    division among the level-1 ones so that a dense first level is detected
    with a concrete witness below every positive box element.
    """
    validate_embedding(spec, emb)
    box = _Box(spec, emb, box_radius)
    scan = _scan(box)
    bound = _refined_min_positive(scan)
    if bound is None:
        raise InfiniteInitialIndexError("no positive subgroup element in the box")
    count = 0
    for X in box.chunks():
        Y = box.values(X)
        count += int(np.count_nonzero(_count_below(box, X, Y, bound)))
    return count


@dataclass(frozen=True)
class FGModuleResult:
    is_fg: bool
    representatives: tuple[GroupElement, ...]
    witness: Optional[GroupElement] = None


def vg_fg_module_test(spec: ValueGroupSpec, emb: SubgroupEmbedding, box_radius: int = DEFAULT_BOX) -> FGModuleResult:
    """Semi-decide whether the nonnegative ambient elements form a finitely
    generated module over the nonnegative subgroup elements.

    Representatives are the minimal nonnegative box elements of each coset.
    The answer is negative with a witness ``rep - h`` (nonnegative, same coset,
    below its representative) whenever some positive subgroup element ``h``
    lies strictly below a nonzero representative.
    """
    validate_embedding(spec, emb)
    box = _Box(spec, emb, box_radius)
    reps: dict[tuple, GroupElement] = {}
    for X in box.chunks():
        Y = box.values(X)
        sgn, lvl = box.lex(Y)
        nonneg = sgn >= 0
        labels = box.labels(X)
        for lab in {tuple(r) for r in labels[nonneg]}:
            rows = nonneg & np.all(labels == np.array(lab), axis=1)
            top = int(lvl[rows].min())
            cand = _smallest_rows(box, X, Y, rows, lvl, top, 1)
            if top == 0:
                cand = [GroupElement.zero(spec.u)]
            cur = reps.get(lab)
            if cur is None or cand[0] < cur:
                reps[lab] = cand[0]
    ordered = tuple(sorted(reps.values(), key=_Key))
    bound = _refined_min_positive(_scan(box))
    if bound is None:
        raise InfiniteInitialIndexError("no positive subgroup element in the box")
    for r in ordered:
        if not r.is_zero() and bound < r:
            return FGModuleResult(False, ordered, r - bound)
    return FGModuleResult(True, ordered, None)


# -- groups from parameter values ------------------------------------------


def _top_first_columns(u: int, k: int) -> list[int]:
    return [lvl * k + j for lvl in range(u - 1, -1, -1) for j in range(k)]


def _level_structured_basis(values: Sequence[GroupElement], u: int, universe, den: int) -> list[GroupElement]:
    k = len(universe)
    order = _top_first_columns(u, k)
    ints = []
    for g in values:
        vec = rational_coords(g, universe)
        ints.append([int(vec[c] * den) for c in order])
    basis = la.lattice_basis(ints)
    out = []
    for row in reversed(basis):
        vec = [Fraction(0)] * (u * k)
        for pos, c in enumerate(order):
            vec[c] = Fraction(row[pos], den)
        out.append(_from_coords(vec, u, universe))
    out.sort(key=lambda g: g.convex_level())
    return out


def _denominator(values, universe) -> int:
    return la.common_denominator(x for g in values for x in rational_coords(g, universe))


def group_from_values(values: Sequence[GroupElement], u: int) -> ValueGroupSpec:
    """A level-structured free basis of the group generated by ``values``."""
    universe = radicand_universe(values)
    basis = _level_structured_basis(values, u, universe, _denominator(values, universe))
    ranks = tuple(sum(1 for g in basis if g.convex_level() == lvl) for lvl in range(1, u + 1))
    return ValueGroupSpec(u, ranks, tuple(basis))


def embedding_from_values(spec: ValueGroupSpec, values: Sequence[GroupElement]) -> SubgroupEmbedding:
    """Embedding matrix of the group generated by ``values`` inside ``spec``."""
    universe = radicand_universe(list(spec.generators) + list(values))
    den = _denominator(list(spec.generators) + list(values), universe)
    sub = _level_structured_basis(values, spec.u, universe, den)
    if len(sub) != spec.n:
        raise PreconditionError("the subgroup does not have finite index")
    g = [rational_coords(x, universe) for x in spec.generators]
    gram_inv = la.inverse(la.matmul(g, la.transpose(g)))
    rows = []
    for h in sub:
        hv = rational_coords(h, universe)
        x = la.vecmat(la.vecmat(hv, la.transpose(g)), gram_inv)
        if any(c.denominator != 1 for c in x) or la.vecmat(x, g) != hv:
            raise PreconditionError(f"{h} is not in the ambient group")
        rows.append(tuple(int(c) for c in x))
    return SubgroupEmbedding(tuple(rows))


def group_index(spec: ValueGroupSpec, values: Sequence[GroupElement]) -> int:
    return abs(embedding_from_values(spec, values).det)
