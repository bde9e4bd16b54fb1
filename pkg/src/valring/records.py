"""Transform records: one step of a monomial rewrite, with enough data to
re-express monomials across it and to replay it."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .monomial import Monomial
from .value_groups import GroupElement

KINDS = ("type1", "type2", "type3", "unit", "change", "birational")


@dataclass(frozen=True)
class NewParameter:
    name: str
    level: int
    index: int
    value: GroupElement


@dataclass(frozen=True)
class TransformRecord:
    """A single transform applied to one ring state.

    ``substitution`` maps each rewritten old parameter to a monomial in the
    parameters (and units) of the resulting state; parameters not listed keep
    their names.  ``removed`` lists old parameters without a monomial
    expression (non-monomial changes of parameters).  ``matrix`` relates the
    old block parameters (rows) to the new ones (columns).
    """

    kind: str
    side: str = ""
    m: Optional[int] = None
    r: Optional[int] = None
    k: Optional[int] = None
    l: Optional[int] = None
    d: tuple[int, ...] = ()
    lam: Optional[int] = None
    y_value: Optional[GroupElement] = None
    unit_word: Monomial = field(default_factory=Monomial)
    block: tuple[str, ...] = ()
    matrix: tuple[tuple[int, ...], ...] = ()
    substitution: tuple[tuple[str, Monomial], ...] = ()
    new_params: tuple[NewParameter, ...] = ()
    removed: tuple[str, ...] = ()
    new_units: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown transform kind {self.kind!r}")

    @property
    def subst(self) -> dict[str, Monomial]:
        return dict(self.substitution)

    def with_side(self, side: str) -> "TransformRecord":
        from dataclasses import replace

        return replace(self, side=side)

    def lines(self) -> list[str]:
        """Deterministic ``key=value`` serialization."""
        out = [f"kind={self.kind}"]
        if self.side:
            out.append(f"side={self.side}")
        for key in ("m", "r", "k", "l", "lam"):
            v = getattr(self, key)
            if v is not None:
                out.append(f"{key}={v}")
        if self.d:
            out.append("d=(" + ",".join(str(x) for x in self.d) + ")")
        if self.y_value is not None:
            out.append(f"y_value={self.y_value}")
        if not self.unit_word.is_one():
            out.append(f"unit_word={self.unit_word}")
        if self.block:
            out.append("block=" + ",".join(self.block))
        if self.matrix:
            out.append("matrix=" + "[" + ",".join("[" + ",".join(map(str, r)) + "]" for r in self.matrix) + "]")
        for old, mono in self.substitution:
            out.append(f"subst {old}={mono}")
        for p in self.new_params:
            out.append(f"new {p.name}@{p.level}.{p.index}={p.value}")
        for name in self.removed:
            out.append(f"removed={name}")
        for name in self.new_units:
            out.append(f"new_unit={name}")
        return out


def reexpress(records, mono: Monomial) -> Monomial:
    """Rewrite ``mono`` across ``records`` in order (exponents may go negative)."""
    from .errors import PreconditionError

    for rec in records:
        subst = rec.subst
        removed = set(rec.removed)
        acc = Monomial((), mono.units)
        for name, e in mono.exponents:
            if name in subst:
                acc = acc * subst[name] ** e
            elif name in removed:
                raise PreconditionError(f"parameter {name} was replaced by a non-monomial change of parameters")
            else:
                acc = acc * Monomial.var(name, e)
        mono = acc
    return mono
