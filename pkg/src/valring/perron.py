"""Perron transforms of types (1,m), (2,m), (3,m) on ring states and the
monomial divisibility procedure built from them.

Exponent matrices are stored with rows indexed by the old parameters and
columns by the new ones: ``old_j = prod_c new_c^{A[j][c]}``.
"""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction
from math import gcd
from typing import Callable, Optional, Sequence

from . import intlinalg as la
from .errors import PreconditionError, StepCapExceeded
from .exact_reals import QuadExt
from .monomial import Monomial
from .records import NewParameter, TransformRecord, reexpress
from .ring_state import (
    Parameter,
    RingState,
    _commit,
    block_transform,
    rs_absorb_units,
    rs_change_of_parameters,
    rs_monomial_value,
    rs_validate,
    Replacement,
)
from .value_groups import GroupElement

DEFAULT_STEP_CAP = 10_000

# oracle(state, m, r, new_basis_values) -> (lambda, value of the fresh parameter)
ResidueOracle = Callable[[RingState, int, int, Sequence[GroupElement]], tuple[int, GroupElement]]


def default_oracle(state: RingState, m: int, r: int, basis_values: Sequence[GroupElement]):
    """Fresh parameter at level ``m`` whose value is the least new basis value."""
    best = basis_values[0]
    for v in basis_values[1:]:
        if v < best:
            best = v
    return m, best


def fixed_oracle(lam: int, value: GroupElement) -> ResidueOracle:
    def oracle(state, m, r, basis_values):
        return lam, value

    return oracle


def _check_level(state: RingState, m: int):
    if not isinstance(m, int) or not 1 <= m <= state.u:
        raise PreconditionError(f"level {m} outside 1..{state.u}")


def pe_type1_step(state: RingState, m: int) -> tuple[RingState, TransformRecord]:
    """Divide every level-``m`` basis parameter but the least one by the least one."""
    _check_level(state, m)
    basis = state.basis_params(m)
    s = len(basis)
    if s <= 1:
        rec = TransformRecord(kind="type1", m=m, matrix=((1,),) if s else ())
        return _commit(state, rec, state.params), rec
    k = 0
    for j in range(1, s):
        if basis[j].value < basis[k].value:
            k = j
    matrix = [[int(c == j or (c == k and j != k)) for c in range(s)] for j in range(s)]
    return block_transform(state, "type1", [p.name for p in basis], matrix, m=m)


def _level_relation(coords: Sequence[QuadExt]) -> list[int]:
    """Primitive integer vector c with sum c_i coords_i = 0, last entry negative.

    The last coordinate must lie in the rational span of the others, which
    are independent.
    """
    universe = sorted({d for c in coords for d in c.radicands} | {1})
    rows = [[c.coeff(d) for d in universe] for c in coords[:-1]]
    target = [coords[-1].coeff(d) for d in universe]
    gram = la.matmul(rows, la.transpose(rows))
    q = la.vecmat(la.vecmat(target, la.transpose(rows)), la.inverse(gram))
    if la.vecmat(q, rows) != target:
        raise PreconditionError("the rewritten parameter's value is not in the rational span of the basis")
    den = la.common_denominator(q)
    c = [int(x * den) for x in q] + [-den]
    g = 0
    for x in c:
        g = gcd(g, x)
    return [x // g for x in c]


def _type2_search(vals: list[GroupElement], m: int, step_cap: int):
    """Subtractive steps on level-``m`` values until two level-``m`` coordinates tie.

    Keeps an integer relation ``c`` among the working level-``m`` coordinates
    and always subtracts within an opposite-sign pair of ``c``, choosing the
    pair that shrinks ``c`` the most (ties toward the larger subtrahend).
    """
    p = len(vals)
    w = [v.coords[m - 1] for v in vals]
    c = _level_relation(w)
    a_mat = [[int(i == j) for j in range(p)] for i in range(p)]
    steps = 0
    while True:
        tie = next(((a, b) for a in range(p) for b in range(a + 1, p) if w[a] == w[b]), None)
        if tie is not None:
            return a_mat, vals, tie, steps
        if steps >= step_cap:
            raise StepCapExceeded(f"type (2,{m}) search exceeded {step_cap} steps")
        best = None
        for i in range(p):
            for j in range(i + 1, p):
                if c[i] * c[j] >= 0:
                    continue
                a, b = (i, j) if w[i] < w[j] else (j, i)
                key = (abs(c[a] + c[b]) - abs(c[a]), _Neg(w[a]))
                if best is None or key < best[0]:
                    best = (key, a, b)
        if best is None:
            raise PreconditionError("no integer relation among the level values")
        _, a, b = best
        w[b] = w[b] - w[a]
        vals[b] = vals[b] - vals[a]
        c[a] += c[b]
        for row in a_mat:
            row[a] += row[b]
        steps += 1


class _Neg:
    """Reverses QuadExt order inside sort keys."""

    __slots__ = ("x",)

    def __init__(self, x):
        self.x = x

    def __lt__(self, other):
        return other.x < self.x

    def __eq__(self, other):
        return self.x == other.x


def pe_type2(
    state: RingState,
    m: int,
    r: int,
    oracle: Optional[ResidueOracle] = None,
    unit_word: Optional[Monomial] = None,
    matrix: Optional[Sequence[Sequence[int]]] = None,
    step_cap: int = DEFAULT_STEP_CAP,
) -> tuple[RingState, TransformRecord]:
    """Absorb the rationally dependent parameter ``x_{m,r}``.

    Produces new basis parameters ``N_1..N_s`` and a quotient ``N_r`` with
    zero level-``m`` coordinate.  If ``N_r`` has value zero it becomes a unit
    and the fresh parameter ``y`` comes from ``oracle``; otherwise ``y = N_r``.
    ``matrix`` and ``unit_word`` force a precomputed outcome (used when
    mirroring a step on an extension ring and on replay).
    """
    _check_level(state, m)
    basis = state.basis_params(m)
    s = len(basis)
    t_m = len(state.level_params(m))
    if not s < r <= t_m:
        raise PreconditionError(f"type (2,{m}) needs {s} < r <= {t_m}, got r={r}")
    target = state.slot(m, r)
    olds = basis + [target]
    if matrix is None:
        a_mat, vals, (i, j), _ = _type2_search([p.value for p in olds], m, step_cap)
        big, small = (j, i) if vals[j] >= vals[i] else (i, j)
        if vals[i] == vals[j]:
            big, small = max(i, j), min(i, j)
        vals[big] = vals[big] - vals[small]
        for row in a_mat:
            row[small] += row[big]
        order = [s if c == big else c for c in range(s)] + [big]
        matrix = [[row[c] for c in order] for row in a_mat]
    matrix = [list(map(int, row)) for row in matrix]
    if len(matrix) != s + 1 or abs(la.int_det(matrix)) != 1:
        raise PreconditionError("type (2,m) matrix must be unimodular of size s_m + 1")
    inv = la.int_inverse(matrix)
    new_vals = []
    for c in range(s + 1):
        acc = GroupElement.zero(state.u)
        for j in range(s + 1):
            if inv[c][j]:
                acc = acc + olds[j].value * inv[c][j]
        new_vals.append(acc)
    nr = new_vals[s]
    if not nr.coords[m - 1].is_zero() or any(not x.is_zero() for x in nr.coords[m:]):
        raise PreconditionError("the quotient N_r must vanish at level m and above")
    if nr.sign() < 0:
        raise PreconditionError("the quotient N_r must have nonnegative value")
    for c in range(s):
        if new_vals[c].convex_level() != m or new_vals[c].sign() <= 0:
            raise PreconditionError(f"new basis value {new_vals[c]} is not a positive level-{m} value")

    new_units: tuple[str, ...] = ()
    gen_state = state
    if nr.is_zero():
        if unit_word is None:
            unit_word = Monomial.unit(state.fresh_unit())
        new_units = tuple(n for n, _ in unit_word.units if n not in state.units)
        lam, y_val = (oracle or default_oracle)(state, m, r, new_vals[:s])
        if y_val.convex_level() != lam:
            raise PreconditionError(f"oracle value {y_val} does not have convex level {lam}")
        if y_val.sign() <= 0:
            raise PreconditionError("oracle value must be positive")
        nr_factor = unit_word
    else:
        if unit_word is not None and not unit_word.is_one():
            raise PreconditionError("a unit word was supplied but N_r is not a unit")
        lam, y_val = nr.convex_level(), nr
        unit_word = Monomial()
    if (m + 1) in state.s_good and lam > m:
        raise PreconditionError(f"lambda={lam} violates lambda <= m since level {m + 1} is S-good")
    if not 1 <= lam <= state.u:
        raise PreconditionError(f"lambda={lam} outside 1..{state.u}")

    params = [p for p in state.params if p.name not in {o.name for o in olds}]
    new_names = []
    for c, old in enumerate(olds[:s]):
        keep = all(matrix[c][k] == (k == c) for k in range(s + 1))
        new_names.append(old.name if keep else gen_state.fresh_name(m, c + 1))
        params.append(Parameter(new_names[c], m, c + 1, new_vals[c], True))
    if lam == m:
        y_slot = (m, r)
    else:
        params = [replace(p, index=p.index - 1) if p.level == m and p.index > r else p for p in params]
        y_slot = (lam, len(state.level_params(lam)) + 1)
    y_name = gen_state.fresh_name(*y_slot)
    while y_name in new_names:
        y_name += "'"
    params.append(Parameter(y_name, y_slot[0], y_slot[1], y_val, False))
    nr_factor = unit_word if nr.is_zero() else Monomial.var(y_name)

    subst = []
    for j, old in enumerate(olds):
        mono = Monomial()
        for c in range(s):
            if matrix[j][c]:
                mono = mono * Monomial.var(new_names[c], matrix[j][c])
        if matrix[j][s]:
            mono = mono * nr_factor ** matrix[j][s]
        if mono != Monomial.var(old.name):
            subst.append((old.name, mono))
    fresh = [NewParameter(new_names[c], m, c + 1, new_vals[c]) for c in range(s) if new_names[c] != olds[c].name]
    fresh.append(NewParameter(y_name, y_slot[0], y_slot[1], y_val))
    rec = TransformRecord(
        kind="type2",
        m=m,
        r=r,
        lam=lam,
        y_value=y_val,
        unit_word=unit_word,
        block=tuple(o.name for o in olds),
        matrix=tuple(tuple(row) for row in matrix),
        substitution=tuple(sorted(subst)),
        new_params=tuple(fresh),
        new_units=new_units,
    )
    s_prime = frozenset(j for j in state.s_good if j > m)
    out = _commit(
        state,
        rec,
        params,
        units=state.units + new_units,
        s_good=s_prime,
        very_good=state.very_good and s_prime == frozenset(range(1, state.u + 1)),
    )
    report = rs_validate(out)
    if not report.ok:
        raise PreconditionError("type (2,m) produced an invalid state: " + "; ".join(report.problems))
    return out, rec


def pe_type3(
    state: RingState,
    m: int,
    k: int,
    l: int,
    d: Sequence[int],
    unit_word: Optional[Monomial] = None,
) -> tuple[RingState, TransformRecord]:
    """Replace ``x_{k,l}`` by ``N`` with ``x_{k,l} = N * prod_j x_{m,j}^{d_j} * unit_word``."""
    _check_level(state, m)
    _check_level(state, k)
    if k <= m:
        raise PreconditionError(f"type (3,{m}) needs k > m, got k={k}")
    t_k = len(state.level_params(k))
    if not 1 <= l <= t_k:
        raise PreconditionError(f"index l={l} outside 1..{t_k}")
    basis = state.basis_params(m)
    d = tuple(int(x) for x in d)
    if len(d) != len(basis):
        raise PreconditionError(f"d must have length s_{m} = {len(basis)}")
    if any(x < 0 for x in d):
        raise PreconditionError("d must be nonnegative")
    unit_word = unit_word or Monomial()
    if not unit_word.is_unit():
        raise PreconditionError("unit_word must consist of unit symbols only")
    target = state.slot(k, l)
    if not any(d) and unit_word.is_one():
        rec = TransformRecord(kind="type3", m=m, k=k, l=l, d=d, block=(target.name,), matrix=((1,),))
        return _commit(state, rec, state.params), rec
    extra = unit_word
    for p, dj in zip(basis, d):
        if dj:
            extra = extra * Monomial.var(p.name, dj)
    return block_transform(state, "type3", [target.name], [[1]], [extra], m=m, k=k, l=l, d=d, unit_word=unit_word)


def pe_reexpress(records: Sequence[TransformRecord], mono: Monomial, require_nonneg: bool = False) -> Monomial:
    out = reexpress(records, mono)
    if require_nonneg and not out.is_nonneg():
        raise PreconditionError(f"{out} is not a monomial (negative exponent)")
    return out


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def pe_monomial_divide(
    state: RingState, m1: Monomial, m2: Monomial, step_cap: int = DEFAULT_STEP_CAP
) -> tuple[RingState, Monomial, tuple[TransformRecord, ...]]:
    """Transform ``state`` until ``m1`` divides ``m2``; returns the final
    state, the quotient ``m2 / m1`` there and the records applied."""
    for name in m1.support() | m2.support():
        if not state.param(name).basis:
            raise PreconditionError(f"{name} is not a basis parameter")
    v1, v2 = rs_monomial_value(state, m1), rs_monomial_value(state, m2)
    if v1 > v2:
        raise PreconditionError(f"value {v1} of the divisor exceeds value {v2} of the dividend")
    if v1 == v2:
        if m1.params_only() != m2.params_only():
            raise PreconditionError("equal values on rationally independent parameters force equal monomials")
        return state, m2 / m1, ()
    start = len(state.log)
    steps = 0

    def bump():
        nonlocal steps
        if steps >= step_cap:
            raise StepCapExceeded(f"monomial division exceeded {step_cap} transforms")
        steps += 1

    while True:
        log = state.log[start:]
        quot = reexpress(log, m2) / reexpress(log, m1)
        if quot.is_nonneg():
            return state, quot, log
        top = max(state.param(n).level for n in quot.support())
        top_exps = [(p, quot.exponent(p.name)) for p in state.basis_params(top)]
        if any(e < 0 for _, e in top_exps):
            bump()
            state, _ = pe_type1_step(state, top)
            continue
        pivot, pe = next((p, e) for p, e in top_exps if e > 0)
        for i in range(1, top):
            deficits = [max(0, -quot.exponent(p.name)) for p in state.basis_params(i)]
            if any(deficits):
                bump()
                state, _ = pe_type3(state, i, top, pivot.index, [_ceil_div(df, pe) for df in deficits])
                break


def pe_replay(state: RingState, rec: TransformRecord) -> tuple[RingState, TransformRecord]:
    """Re-execute ``rec`` on ``state`` and check that the same record results."""
    if rec.kind == "type1":
        out = pe_type1_step(state, rec.m)
    elif rec.kind == "type2":
        y_level = rec.lam
        out = pe_type2(
            state,
            rec.m,
            rec.r,
            oracle=fixed_oracle(y_level, rec.y_value),
            unit_word=rec.unit_word if not rec.unit_word.is_one() else None,
            matrix=rec.matrix,
        )
    elif rec.kind == "type3":
        out = pe_type3(state, rec.m, rec.k, rec.l, rec.d, rec.unit_word)
    elif rec.kind == "unit":
        if not rec.block:
            out = rs_absorb_units(state, "", Monomial())
        else:
            out = rs_absorb_units(state, rec.block[0], rec.unit_word)
    elif rec.kind == "birational":
        subst = rec.subst
        new_names = [p.name for p in rec.new_params]
        by_slot = {(p.level, p.index): p.name for p in rec.new_params}
        cols = []
        for old in rec.block:
            q = state.param(old)
            cols.append(by_slot.get((q.level, q.index), old))
        extras = []
        for j, old in enumerate(rec.block):
            mono = subst.get(old, Monomial.var(old))
            for c, name in enumerate(cols):
                if rec.matrix[j][c]:
                    mono = mono / Monomial.var(name, rec.matrix[j][c])
            extras.append(mono)
        out = block_transform(state, "birational", rec.block, rec.matrix, extras)
    elif rec.kind == "change":
        reps = []
        subst = rec.subst
        for p in rec.new_params:
            old = state.slot(p.level, p.index).name
            if old in subst:
                word = (subst[old] / Monomial.var(p.name)).inverse()
                reps.append(Replacement(old, unit_word=word))
            else:
                reps.append(Replacement(old, value=p.value))
        new_state = rs_change_of_parameters(state, reps)
        out = (new_state, new_state.log[-1])
    else:
        raise PreconditionError(f"cannot replay {rec.kind}")
    new_state, new_rec = out
    if new_rec.with_side("") != rec.with_side(""):
        raise PreconditionError(f"replay of {rec.kind} diverged")
    return new_state, new_rec
