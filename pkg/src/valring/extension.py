"""Locally monomial extensions ``R -> S`` and the essential finite generation
decision and division certificates built on them.

Row ``i`` of ``C`` describes the ``i``-th parameter of ``R`` (in slot order)
as ``x_i = alpha_i * prod_j y_j^{C[i][j]}`` with ``alpha_i`` a unit word.
Both rings have the same level sizes, so slot ``k`` has the same level on
both sides.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

from . import intlinalg as la
from .errors import (
    NotEssentiallyFinitelyGenerated,
    NotInValuationRing,
    PreconditionError,
    ValringError,
)
from .monomial import Monomial
from .perron import (
    DEFAULT_STEP_CAP,
    fixed_oracle,
    pe_monomial_divide,
    pe_replay,
    pe_type1_step,
    pe_type2,
    pe_type3,
)
from .records import TransformRecord, reexpress
from .ring_state import RingState, rs_absorb_units, rs_birational, rs_monomial_value, rs_validate
from .value_groups import (
    GroupElement,
    SubgroupEmbedding,
    ValueGroupSpec,
    embedding_from_values,
    group_from_values,
    vg_first_level_lattice,
    vg_initial_index,
    vg_ramification_index,
)


@dataclass(frozen=True)
class MonomialExtension:
    R: RingState
    S: RingState
    C: tuple[tuple[int, ...], ...]
    units: tuple[Monomial, ...]
    residue_degree: int = 1
    # asserted, not verified: S is a localization of R[z_1, ..., z_m]
    certificate: bool = False

    def __post_init__(self):
        object.__setattr__(self, "C", tuple(tuple(int(x) for x in r) for r in self.C))
        units = tuple(self.units) + (Monomial(),) * (len(self.C) - len(self.units))
        object.__setattr__(self, "units", units)

    @property
    def n(self) -> int:
        return len(self.C)

    @property
    def e(self) -> int:
        return abs(la.int_det(self.C))

    @property
    def gamma(self) -> Monomial:
        return self.units[0] if self.units else Monomial()

    @property
    def normal_form(self) -> bool:
        if not self.C:
            return False
        e = self.e
        for i, row in enumerate(self.C):
            for j, x in enumerate(row):
                want = (e if i == 0 else 1) if i == j else 0
                if x != want:
                    return False
        if any(not w.is_one() for w in self.units[1:]):
            return False
        return e > 1 or self.gamma.is_one()


def row_value(ext: MonomialExtension, i: int) -> GroupElement:
    acc = GroupElement.zero(ext.S.u)
    for j, c in enumerate(ext.C[i]):
        if c:
            acc = acc + ext.S.params[j].value * c
    return acc


@dataclass(frozen=True)
class ExtensionReport:
    problems: tuple[str, ...]
    e: Optional[int] = None
    e_group: Optional[int] = None
    residue_degree: int = 1
    defect: int = 1

    @property
    def ok(self) -> bool:
        return not self.problems


def induced_groups(ext: MonomialExtension) -> tuple[ValueGroupSpec, SubgroupEmbedding]:
    """The groups generated by the parameter values of ``S`` and of ``R``."""
    spec = group_from_values([p.value for p in ext.S.params], ext.S.u)
    emb = embedding_from_values(spec, [p.value for p in ext.R.params])
    return spec, emb


def ex_validate(ext: MonomialExtension) -> ExtensionReport:
    problems = []
    R, S = ext.R, ext.S
    for side, st in (("R", R), ("S", S)):
        rep = rs_validate(st)
        problems += [f"{side}: {p}" for p in rep.problems]
    if R.u != S.u or R.level_ranks != S.level_ranks:
        problems.append("R and S must have the same rank and level ranks")
    if R.t != S.t:
        problems.append(f"level sizes differ: R has {R.t}, S has {S.t}")
    n = ext.n
    if n != R.n or n != S.n or any(len(r) != n for r in ext.C):
        problems.append(f"C must be {R.n}x{S.n}")
        return ExtensionReport(tuple(problems), residue_degree=ext.residue_degree)
    if any(x < 0 for r in ext.C for x in r):
        problems.append("C must have nonnegative entries")
    e = ext.e
    if e == 0:
        problems.append("C is singular")
        return ExtensionReport(tuple(problems), residue_degree=ext.residue_degree)
    known = set(S.units) | set(R.units)
    for i, w in enumerate(ext.units):
        if not w.is_unit():
            problems.append(f"row {i + 1}: unit word {w} contains parameters")
        for name, _ in w.units:
            if name not in known:
                problems.append(f"row {i + 1}: unknown unit {name}")
    if ext.residue_degree < 1:
        problems.append("residue degree must be positive")
    if R.u == S.u:
        for i, p in enumerate(R.params):
            rv = row_value(ext, i)
            if rv != p.value:
                problems.append(f"row {i + 1}: value of {p.name} is {p.value} but the row gives {rv}")
    e_group = None
    if not problems:
        try:
            _, emb = induced_groups(ext)
            e_group = abs(emb.det)
            if e_group != e:
                problems.append(f"|det C| = {e} but the value groups have index {e_group}")
        except ValringError as exc:
            problems.append(f"value groups: {exc}")
    return ExtensionReport(tuple(problems), e, e_group, ext.residue_degree)


@dataclass(frozen=True)
class EfgDecision:
    e: int
    epsilon: int
    factors: tuple[int, ...]
    defect: int = 1
    first_level_rank: int = 0
    first_level_index: Optional[int] = None
    structure_ok: Optional[bool] = None

    @property
    def efg(self) -> bool:
        return self.e == self.epsilon

    def line(self) -> str:
        return (
            f"e={self.e} ε={self.epsilon} efg={'yes' if self.efg else 'no'} "
            f"factors=({','.join(map(str, self.factors))})"
        )


def ex_efg_decide(obj: Union[MonomialExtension, tuple[ValueGroupSpec, SubgroupEmbedding]]) -> EfgDecision:
    if isinstance(obj, MonomialExtension):
        report = ex_validate(obj)
        if not report.ok:
            raise PreconditionError("invalid extension: " + "; ".join(report.problems))
        spec, emb = induced_groups(obj)
    else:
        spec, emb = obj
    e, factors = vg_ramification_index(emb)
    eps = vg_initial_index(spec, emb)
    lat = vg_first_level_lattice(spec, emb)
    index = None
    if lat.rank == 1 and lat.nu:
        (b,), (h,) = lat.omega, lat.nu
        pivot = next(i for i, x in enumerate(b) if x)
        index = abs(h[pivot] // b[pivot])
    structure = None
    if 1 < eps == e:
        structure = (
            all(f == 1 for f in factors[:-1]) and factors[-1] == e and lat.rank == 1 and index == e
        )
    return EfgDecision(e, eps, tuple(factors), 1, lat.rank, index, structure)


# -- normalization ----------------------------------------------------------


def _require_efg(ext: MonomialExtension) -> EfgDecision:
    dec = ex_efg_decide(ext)
    if not dec.efg:
        raise NotEssentiallyFinitelyGenerated(
            f"not essentially finitely generated: e={dec.e} but ε={dec.epsilon}; "
            "no certificate exists when the ramification and initial indices differ"
        )
    return dec


def _normalize_steps(ext: MonomialExtension):
    """Returns the normalized extension and the ordered ``(side, record)`` steps."""
    _require_efg(ext)
    if ext.normal_form:
        return ext, []
    R, S, C, units = ext.R, ext.S, [list(r) for r in ext.C], list(ext.units)
    n, e = ext.n, ext.e
    steps = []

    def on_r(res):
        nonlocal R
        R, rec = res
        steps.append(("R", rec))

    def on_s(res):
        nonlocal S
        S, rec = res
        steps.append(("S", rec))

    if e == 1:
        B = la.int_inverse(C)
        for i in range(n):
            word = Monomial()
            for k in range(n):
                if B[i][k]:
                    word = word * units[k] ** B[i][k]
            if not word.is_one():
                on_s(rs_absorb_units(S, S.params[i].name, word))
        if C != [[int(i == j) for j in range(n)] for i in range(n)]:
            on_r(rs_birational(R, list(R.names), C))
        out = replace(ext, R=R, S=S, C=tuple(tuple(int(i == j) for j in range(n)) for i in range(n)), units=())
        return _check_normal(out), steps

    t1 = R.t[0]
    if R.level_ranks[0] != 1:
        raise PreconditionError("e > 1 requires rational rank 1 at level 1")
    if C[0] != [e] + [0] * (n - 1):
        raise PreconditionError("not in block shape: the first row must be (e, 0, ..., 0)")
    for j in range(1, t1):
        if C[j] != [int(k == j) for k in range(n)] or not units[j].is_one():
            raise PreconditionError(f"not in block shape: row {j + 1} must be a bare identity row")
    cbar = [row[t1:] for row in C[t1:]]
    if cbar and abs(la.int_det(cbar)) != 1:
        raise PreconditionError("the block below the first level must be unimodular")
    gamma = units[0]
    hi = list(range(t1, n))
    if not hi:
        out = replace(ext, R=R, S=S, C=tuple(tuple(r) for r in C), units=(gamma,))
        return _check_normal(out), steps

    # clear the dependence of higher rows on level-1 non-basis parameters
    rows_i = [j for j in hi if any(C[j][i] for i in range(1, t1))]
    if rows_i:
        extra = []
        for j in rows_i:
            mono = Monomial()
            for i in range(1, t1):
                if C[j][i]:
                    mono = mono * Monomial.var(R.params[i].name, C[j][i])
            extra.append(mono)
        on_r(rs_birational(R, [R.params[j].name for j in rows_i], [[int(a == b) for b in range(len(rows_i))] for a in range(len(rows_i))], extra))
        for j in rows_i:
            for i in range(1, t1):
                C[j][i] = 0

    binv = la.int_inverse(cbar)
    col = [C[j][0] for j in hi]
    r = [-x for x in la.vecmat(col, la.transpose(binv))]
    v = 1
    while any(ri + v * e <= 0 for ri in r):
        v += 1
    g = [sum(row) for row in cbar]

    for pos, k in enumerate(hi):
        y = S.params[k]
        on_s(pe_type3(S, 1, y.level, y.index, [r[pos] + v * e]))
    for pos, j in enumerate(hi):
        x = R.params[j]
        on_r(pe_type3(R, 1, x.level, x.index, [v * g[pos]]))
    gam1 = [units[j] * gamma ** (-v * g[pos]) for pos, j in enumerate(hi)]
    for a, i in enumerate(hi):
        word = Monomial()
        for b in range(len(hi)):
            if binv[a][b]:
                word = word * gam1[b] ** binv[a][b]
        if not word.is_one():
            on_s(rs_absorb_units(S, S.params[i].name, word))
    if cbar != [[int(a == b) for b in range(len(hi))] for a in range(len(hi))]:
        on_r(rs_birational(R, [R.params[j].name for j in hi], cbar))
    newc = tuple(tuple((e if i == 0 else 1) if i == j else 0 for j in range(n)) for i in range(n))
    out = replace(ext, R=R, S=S, C=newc, units=(gamma,))
    return _check_normal(out), steps


def _check_normal(ext: MonomialExtension) -> MonomialExtension:
    report = ex_validate(ext)
    if not report.ok or not ext.normal_form:
        raise PreconditionError("normalization did not reach the normal form: " + "; ".join(report.problems))
    if ext.e > 1:
        check_first_level_generators(ext)
    return ext


def check_first_level_generators(ext: MonomialExtension) -> None:
    """The first parameters on both sides generate the level-1 value groups."""
    spec, emb = induced_groups(ext)
    lat = vg_first_level_lattice(spec, emb)
    if lat.rank != 1 or len(lat.nu or ()) != 1:
        raise PreconditionError("level-1 value groups are not cyclic")
    g_omega = spec.realize(lat.omega[0])
    g_nu = spec.realize(lat.nu[0])
    y11, x11 = ext.S.params[0].value, ext.R.params[0].value
    if y11 not in (g_omega, -g_omega) or x11 not in (g_nu, -g_nu):
        raise PreconditionError("first parameters do not generate the level-1 value groups")


def ex_normalize(ext: MonomialExtension):
    """Bring ``ext`` to ``x_11 = gamma * y_11^e`` and ``x_k = y_k`` otherwise.

    Returns ``(ext', R_log, S_log)``.
    """
    out, steps = _normalize_steps(ext)
    return out, tuple(r for s, r in steps if s == "R"), tuple(r for s, r in steps if s == "S")


# -- lifting ----------------------------------------------------------------


def ex_lift_gmts(ext: MonomialExtension, r_record: TransformRecord) -> tuple[MonomialExtension, TransformRecord]:
    """Apply ``r_record`` to ``R`` and the matching transform to ``S``."""
    if not ext.normal_form:
        raise PreconditionError("lifting needs an extension in normal form")
    e, gamma = ext.e, ext.gamma
    kind, m = r_record.kind, r_record.m
    if kind == "type1" and m == 1 and e > 1:
        raise PreconditionError("a type (1,1) transform cannot be lifted when e > 1")
    if kind not in ("type1", "type2", "type3"):
        raise PreconditionError(f"cannot lift a {kind} record")
    R2, rrec = pe_replay(ext.R, r_record)
    if kind == "type1":
        S2, srec = pe_type1_step(ext.S, m)
    elif kind == "type2":
        oracle = fixed_oracle(rrec.lam, rrec.y_value)
        if m == 1 and e > 1:
            mat = rrec.matrix
            if len(mat) != 2 or mat[0] != (1, 0) or mat[1][1] != 1:
                raise PreconditionError("unexpected type (2,1) shape at level 1")
            a = mat[1][0]
            S2, srec = pe_type2(
                ext.S, 1, rrec.r, oracle=oracle, unit_word=gamma ** a * rrec.unit_word, matrix=[[1, 0], [e * a, 1]]
            )
        else:
            word = rrec.unit_word if not rrec.unit_word.is_one() else None
            S2, srec = pe_type2(ext.S, m, rrec.r, oracle=oracle, unit_word=word, matrix=rrec.matrix)
    else:
        if m == 1 and e > 1:
            (d1,) = rrec.d
            S2, srec = pe_type3(ext.S, 1, rrec.k, rrec.l, [e * d1], unit_word=gamma ** d1 * rrec.unit_word)
        else:
            S2, srec = pe_type3(ext.S, m, rrec.k, rrec.l, rrec.d, unit_word=rrec.unit_word)
    out = replace(ext, R=R2, S=S2, certificate=True)
    if out.e != e:
        raise PreconditionError("lifting changed the ramification index")
    for i, p in enumerate(out.R.params):
        if row_value(out, i) != p.value:
            raise PreconditionError(f"lifting broke value consistency at row {i + 1}")
    return out, srec


# -- certification ----------------------------------------------------------


@dataclass(frozen=True)
class Certificate:
    steps: tuple[tuple[str, TransformRecord], ...]
    final: MonomialExtension
    g_final: Monomial
    h_final: Monomial
    witness: Monomial
    decision: EfgDecision


def _s_log_since(ext0: MonomialExtension, ext: MonomialExtension):
    return ext.S.log[len(ext0.S.log):]


def _w_monomial(ext: MonomialExtension, mono: Monomial) -> Monomial:
    """R-side monomial of value ``e * omega(mono)`` (parameter part only)."""
    out = Monomial()
    e = ext.e
    for name, a in mono.exponents:
        p = ext.S.param(name)
        x = ext.R.slot(p.level, p.index)
        out = out * Monomial.var(x.name, a if (p.level, p.index) == (1, 1) else a * e)
    return out


def ex_certify_division(
    ext: MonomialExtension, g: Monomial, h: Monomial, step_cap: int = DEFAULT_STEP_CAP
) -> Certificate:
    """Certify that ``h`` divides ``g`` after a sequence of lifted transforms."""
    dec = _require_efg(ext)
    for mono in (g, h):
        for name in mono.support():
            if not ext.S.param(name).basis:
                raise PreconditionError(f"{name} is not a basis parameter of S")
        for name, _ in mono.units:
            if name not in set(ext.S.units) | set(ext.R.units):
                raise PreconditionError(f"unknown unit {name}")
    ext0 = ext
    ext, steps = _normalize_steps(ext)
    steps = list(steps)
    g1 = reexpress(_s_log_since(ext0, ext), g)
    h1 = reexpress(_s_log_since(ext0, ext), h)
    vg, vh = rs_monomial_value(ext.S, g1), rs_monomial_value(ext.S, h1)
    if vg < vh:
        raise NotInValuationRing(f"g/h has value {vg - vh} < 0, so it is not in the valuation ring")
    if vg == vh:
        if g1.params_only() != h1.params_only():
            raise PreconditionError("equal values on rationally independent parameters force equal monomials")
        return Certificate(tuple(steps), ext, g1, h1, g1 / h1, dec)
    w1, w2 = _w_monomial(ext, g1), _w_monomial(ext, h1)
    if rs_monomial_value(ext.R, w2) > rs_monomial_value(ext.R, w1):
        raise PreconditionError("W_2 exceeds W_1")
    _, _, rlog = pe_monomial_divide(ext.R, w2, w1, step_cap)
    for rec in rlog:
        ext, srec = ex_lift_gmts(ext, rec)
        steps += [("R", rec), ("S", srec)]
    g2 = reexpress(_s_log_since(ext0, ext), g)
    h2 = reexpress(_s_log_since(ext0, ext), h)
    witness = g2 / h2
    if not witness.is_nonneg():
        raise PreconditionError(f"witness {witness} has a negative exponent")
    return Certificate(tuple(steps), ext, g2, h2, witness, dec)


def replay_steps(ext: MonomialExtension, steps) -> MonomialExtension:
    """Re-execute recorded ``(side, record)`` steps on the two rings."""
    R, S = ext.R, ext.S
    for side, rec in steps:
        if side == "R":
            R, _ = pe_replay(R, rec)
        elif side == "S":
            S, _ = pe_replay(S, rec)
        else:
            raise PreconditionError(f"unknown side {side!r}")
    out = replace(ext, R=R, S=S)
    if steps and not ext.normal_form:
        e, n = ext.e, ext.n
        newc = tuple(tuple((e if i == 0 else 1) if i == j else 0 for j in range(n)) for i in range(n))
        out = replace(out, C=newc, units=(ext.gamma,) if e > 1 else ())
    return out
