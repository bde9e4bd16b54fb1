"""Monomial skeleton of a regular local ring dominated by a valuation.

A :class:`RingState` lists good parameters ``x_{i,j}`` (level ``i``, index
``j``) with their values, opaque unit symbols, the set ``S`` of levels at
which the parameters are claimed S-good, and the log of transforms that
produced it.  States are immutable; every operation returns a new state
whose log ends with the record of that operation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from . import intlinalg as la
from .errors import PreconditionError
from .exact_reals import rational_rank
from .monomial import IDENT, Monomial
from .records import NewParameter, TransformRecord
from .value_groups import GroupElement

_IDENT = re.compile(IDENT + r"\Z")


@dataclass(frozen=True)
class Parameter:
    name: str
    level: int
    index: int
    value: GroupElement
    basis: bool


@dataclass(frozen=True)
class RingState:
    u: int
    level_ranks: tuple[int, ...]
    params: tuple[Parameter, ...]
    units: tuple[str, ...] = ()
    s_good: frozenset = frozenset()
    very_good: bool = False
    log: tuple[TransformRecord, ...] = ()
    symbol: str = "x"
    generation: int = 0

    @property
    def t(self) -> tuple[int, ...]:
        return tuple(sum(1 for p in self.params if p.level == i) for i in range(1, self.u + 1))

    @property
    def n(self) -> int:
        return len(self.params)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def param(self, name: str) -> Parameter:
        for p in self.params:
            if p.name == name:
                return p
        raise PreconditionError(f"unknown parameter {name!r}")

    def slot(self, level: int, index: int) -> Parameter:
        for p in self.params:
            if p.level == level and p.index == index:
                return p
        raise PreconditionError(f"no parameter at level {level}, index {index}")

    def level_params(self, level: int) -> list[Parameter]:
        return [p for p in self.params if p.level == level]

    def basis_params(self, level: int) -> list[Parameter]:
        return [p for p in self.params if p.level == level and p.basis]

    def value(self, name: str) -> GroupElement:
        return self.param(name).value

    def fresh_name(self, level: int, index: int) -> str:
        taken = set(self.names)
        name = f"{self.symbol}{level}_{index}.{self.generation + 1}"
        while name in taken:
            name += "'"
        return name

    def fresh_unit(self) -> str:
        name = f"U{self.symbol}.{self.generation + 1}"
        while name in self.units:
            name += "'"
        return name


def make_state(
    u: int,
    level_ranks: Sequence[int],
    params: Iterable[tuple[str, int, GroupElement]],
    units: Iterable[str] = (),
    s_good: Iterable[int] = (),
    very_good: bool = False,
    symbol: str = "x",
) -> RingState:
    """Build a state; indices are assigned per level in the given order and
    the first ``s_i`` parameters of level ``i`` form the basis."""
    counters = [0] * (u + 1)
    out = []
    level_ranks = tuple(level_ranks)
    for name, level, value in params:
        if not 1 <= level <= u:
            raise PreconditionError(f"parameter {name} has level {level} outside 1..{u}")
        counters[level] += 1
        out.append(Parameter(name, level, counters[level], value, counters[level] <= level_ranks[level - 1]))
    out.sort(key=lambda p: (p.level, p.index))
    return RingState(u, level_ranks, tuple(out), tuple(units), frozenset(s_good), very_good, (), symbol, 0)


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self):
        return self.ok


def rs_validate(state: RingState) -> ValidationReport:
    problems = []
    if len(state.level_ranks) != state.u:
        problems.append(f"expected {state.u} level ranks, got {len(state.level_ranks)}")
        return ValidationReport(tuple(problems))
    names = [p.name for p in state.params]
    if len(set(names)) != len(names):
        problems.append("duplicate parameter names")
    if set(names) & set(state.units):
        problems.append("a name is used both as a parameter and as a unit")
    for p in state.params:
        if not _IDENT.match(p.name):
            problems.append(f"{p.name!r} is not a valid identifier")
        if p.value.rank != state.u:
            problems.append(f"{p.name} has a value of rank {p.value.rank}")
            continue
        if p.value.convex_level() != p.level:
            problems.append(f"{p.name} has convex level {p.value.convex_level()} but sits at level {p.level}")
        if p.value.sign() <= 0:
            problems.append(f"{p.name} has a nonpositive value {p.value}")
        if p.basis != (p.index <= state.level_ranks[p.level - 1]):
            problems.append(f"{p.name} has an inconsistent basis flag")
    for i in range(1, state.u + 1):
        lp = state.level_params(i)
        s = state.level_ranks[i - 1]
        if sorted(p.index for p in lp) != list(range(1, len(lp) + 1)):
            problems.append(f"level {i} indices are not 1..{len(lp)}")
        if len(lp) < s:
            problems.append(f"level {i} has {len(lp)} parameters but rational rank {s}")
            continue
        if any(p.value.rank != state.u for p in lp):
            continue
        basis = [p.value.coords[i - 1] for p in lp if p.basis]
        if rational_rank(basis) != s:
            problems.append(f"level-{i} basis values are not rationally independent")
        elif rational_rank([p.value.coords[i - 1] for p in lp]) != s:
            problems.append(f"a level-{i} value lies outside the rational span of the basis values")
    if any(not 1 <= j <= state.u for j in state.s_good):
        problems.append("S-good levels outside 1..u")
    if state.very_good and set(state.s_good) != set(range(1, state.u + 1)):
        problems.append("very good parameters must be S-good for every level")
    return ValidationReport(tuple(problems))


def rs_monomial_value(state: RingState, mono: Monomial) -> GroupElement:
    acc = GroupElement.zero(state.u)
    for name, e in mono.exponents:
        acc = acc + state.value(name) * e
    return acc


def _check_units(state: RingState, mono: Monomial, extra: Iterable[str] = ()):
    known = set(state.units) | set(extra)
    for name, _ in mono.units:
        if name not in known:
            raise PreconditionError(f"unknown unit symbol {name!r}")


def _commit(state: RingState, rec: TransformRecord, params: Sequence[Parameter], **changes) -> RingState:
    params = sorted(params, key=lambda p: (p.level, p.index))
    return replace(state, params=tuple(params), log=state.log + (rec,), generation=state.generation + 1, **changes)


def block_transform(
    state: RingState,
    kind: str,
    block: Sequence[str],
    matrix: Sequence[Sequence[int]],
    extra: Sequence[Monomial] | None = None,
    **args,
) -> tuple[RingState, TransformRecord]:
    """Replace the parameters ``block`` by new ones at the same slots, where

        old_j = prod_k new_k^{matrix[j][k]} * extra[j]

    with ``matrix`` unimodular and ``extra[j]`` a monomial in parameters
    outside the block and units.  New values follow by inverting the matrix.
    """
    block = list(block)
    p = len(block)
    extra = list(extra) if extra is not None else [Monomial()] * p
    olds = [state.param(n) for n in block]
    inv = la.int_inverse(matrix)
    for mono in extra:
        if mono.support() & set(block):
            raise PreconditionError("extra factors must avoid the rewritten block")
        for name in mono.support():
            state.param(name)
        _check_units(state, mono)
    shifted = [o.value - rs_monomial_value(state, x) for o, x in zip(olds, extra)]
    new_vals = []
    for k in range(p):
        acc = GroupElement.zero(state.u)
        for j in range(p):
            if inv[k][j]:
                acc = acc + shifted[j] * inv[k][j]
        new_vals.append(acc)
    new_names = []
    keep = {}
    probe = state
    for k, old in enumerate(olds):
        unchanged = all(matrix[k][c] == (c == k) for c in range(p)) and extra[k].is_one()
        if unchanged:
            new_names.append(old.name)
            continue
        name = probe.fresh_name(old.level, old.index)
        while name in new_names:
            name += "'"
        new_names.append(name)
    for k, old in enumerate(olds):
        v = new_vals[k]
        if v.convex_level() != old.level:
            raise PreconditionError(f"new parameter for {old.name} would change convex level ({v})")
        if v.sign() <= 0:
            raise PreconditionError(f"new parameter for {old.name} would have nonpositive value {v}")
        keep[old.name] = Parameter(new_names[k], old.level, old.index, v, old.basis)
    subst = []
    for j, old in enumerate(olds):
        mono = extra[j]
        for k in range(p):
            if matrix[j][k]:
                mono = mono * Monomial.var(new_names[k], matrix[j][k])
        if not (mono.exponents == ((old.name, 1),) and not mono.units):
            subst.append((old.name, mono))
    fresh = tuple(
        NewParameter(keep[o.name].name, o.level, o.index, keep[o.name].value)
        for o in olds
        if keep[o.name].name != o.name
    )
    rec = TransformRecord(
        kind=kind,
        block=tuple(block),
        matrix=tuple(tuple(int(x) for x in r) for r in matrix),
        substitution=tuple(sorted(subst)),
        new_params=fresh,
        **args,
    )
    params = [keep.get(q.name, q) for q in state.params]
    return _commit(state, rec, params), rec


def rs_absorb_units(state: RingState, name: str, word: Monomial) -> tuple[RingState, TransformRecord]:
    """New parameter ``name * word``; allowed on any parameter since the value is unchanged."""
    if not word.is_unit():
        raise PreconditionError("only unit words can be absorbed")
    if word.is_one():
        rec = TransformRecord(kind="unit")
        return _commit(state, rec, state.params), rec
    return block_transform(state, "unit", [name], [[1]], [word.inverse()], unit_word=word)


def rs_birational(
    state: RingState, block: Sequence[str], matrix, extra: Sequence[Monomial] | None = None
) -> tuple[RingState, TransformRecord]:
    return block_transform(state, "birational", block, matrix, extra)


@dataclass(frozen=True)
class Replacement:
    """Replace parameter ``name``.

    With ``unit_word`` the new parameter is ``name * unit_word`` (same value);
    with ``value`` it is an unrelated parameter of the same convex level.
    """

    name: str
    value: Optional[GroupElement] = None
    unit_word: Optional[Monomial] = None


def rs_change_of_parameters(
    state: RingState,
    replacements: Sequence[Replacement],
    s_good: Iterable[int] | None = None,
    very_good: bool | None = None,
) -> RingState:
    if not replacements and s_good is None and very_good is None:
        return state
    params = list(state.params)
    subst, removed, fresh = [], [], []
    probe = state
    seen = set()
    for rep in replacements:
        old = state.param(rep.name)
        if old.basis:
            raise PreconditionError(f"{old.name} is a basis parameter and cannot be replaced")
        if old.name in seen:
            raise PreconditionError(f"{old.name} replaced twice")
        seen.add(old.name)
        value = old.value if rep.value is None else rep.value
        if value.convex_level() != old.level:
            raise PreconditionError(f"replacement for {old.name} must keep convex level {old.level}")
        if value.sign() <= 0:
            raise PreconditionError(f"replacement for {old.name} must have positive value")
        word = rep.unit_word or Monomial()
        if not word.is_unit():
            raise PreconditionError("unit_word must consist of unit symbols only")
        _check_units(state, word)
        if rep.value is not None and word.units and value != old.value:
            raise PreconditionError("a unit rescaling cannot change the value")
        name = probe.fresh_name(old.level, old.index)
        while any(name == f.name for f in fresh):
            name += "'"
        new = Parameter(name, old.level, old.index, value, old.basis)
        params[params.index(old)] = new
        fresh.append(NewParameter(name, old.level, old.index, value))
        if value == old.value:
            subst.append((old.name, Monomial.var(name) * word.inverse()))
        else:
            removed.append(old.name)
    rec = TransformRecord(kind="change", substitution=tuple(sorted(subst)), new_params=tuple(fresh), removed=tuple(sorted(removed)))
    changes = {}
    if s_good is not None:
        changes["s_good"] = frozenset(s_good)
    if very_good is not None:
        changes["very_good"] = very_good
    out = _commit(state, rec, params, **changes)
    report = rs_validate(out)
    if not report.ok:
        raise PreconditionError("change of parameters produced an invalid state: " + "; ".join(report.problems))
    return out


def value_lattice(state: RingState) -> list[GroupElement]:
    return [p.value for p in state.params]


def state_summary(state: RingState) -> list[str]:
    """Canonical text lines describing a state (used in transcripts)."""
    lines = [f"t=({','.join(map(str, state.t))})"]
    for p in state.params:
        flag = "*" if p.basis else ""
        lines.append(f"param {p.name}@{p.level}.{p.index}{flag}={p.value}")
    if state.units:
        lines.append("units=" + ",".join(state.units))
    lines.append("s_good={" + ",".join(str(j) for j in sorted(state.s_good)) + "}")
    lines.append(f"very_good={'yes' if state.very_good else 'no'}")
    return lines
