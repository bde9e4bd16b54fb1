"""Formal Laurent monomials in named parameters times words in unit symbols."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import LiteralSyntaxError, ScenarioError

IDENT = r"[A-Za-z_][A-Za-z0-9_.']*"
_FACTOR = re.compile(rf"\s*(?P<name>{IDENT})(?:\s*\^\s*(?P<exp>-?\d+))?\s*")


def _normalize(items: Iterable[tuple[str, int]]) -> tuple[tuple[str, int], ...]:
    acc: dict[str, int] = {}
    for k, v in items:
        acc[k] = acc.get(k, 0) + int(v)
    return tuple(sorted((k, v) for k, v in acc.items() if v))


@dataclass(frozen=True)
class Monomial:
    """``prod x^a * prod u^b``; ``exponents`` covers parameters, ``units`` unit symbols."""

    exponents: tuple[tuple[str, int], ...] = ()
    units: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "exponents", _normalize(_items(self.exponents)))
        object.__setattr__(self, "units", _normalize(_items(self.units)))

    @classmethod
    def of(cls, params: Mapping[str, int] | None = None, units: Mapping[str, int] | None = None) -> "Monomial":
        return cls(tuple((params or {}).items()), tuple((units or {}).items()))

    @classmethod
    def var(cls, name: str, power: int = 1) -> "Monomial":
        return cls(((name, power),))

    @classmethod
    def unit(cls, name: str, power: int = 1) -> "Monomial":
        return cls((), ((name, power),))

    @property
    def exps(self) -> dict[str, int]:
        return dict(self.exponents)

    @property
    def unit_word(self) -> dict[str, int]:
        return dict(self.units)

    def exponent(self, name: str) -> int:
        return dict(self.exponents).get(name, 0)

    def params_only(self) -> "Monomial":
        return Monomial(self.exponents, ())

    def units_only(self) -> "Monomial":
        return Monomial((), self.units)

    def __mul__(self, other: "Monomial") -> "Monomial":
        if not isinstance(other, Monomial):
            return NotImplemented
        return Monomial(self.exponents + other.exponents, self.units + other.units)

    def __pow__(self, k: int) -> "Monomial":
        return Monomial(tuple((n, e * k) for n, e in self.exponents), tuple((n, e * k) for n, e in self.units))

    def inverse(self) -> "Monomial":
        return self ** -1

    def __truediv__(self, other: "Monomial") -> "Monomial":
        return self * other.inverse()

    def is_one(self) -> bool:
        return not self.exponents and not self.units

    def is_unit(self) -> bool:
        return not self.exponents

    def is_nonneg(self) -> bool:
        """True when every parameter exponent is nonnegative (units may be inverted)."""
        return all(e >= 0 for _, e in self.exponents)

    def support(self) -> set[str]:
        return {n for n, _ in self.exponents}

    def __str__(self):
        parts = [_fmt(n, e) for n, e in self.exponents] + [_fmt(n, e) for n, e in self.units]
        return "*".join(parts) if parts else "1"


def _items(x):
    if isinstance(x, Mapping):
        return tuple(x.items())
    return tuple(x)


def _fmt(name: str, e: int) -> str:
    return name if e == 1 else f"{name}^{e}"


def parse_monomial(text: str, params: Iterable[str], units: Iterable[str], line=None, col_offset: int = 0) -> Monomial:
    """Parse ``1`` or ``a^k*b*...``; names are classified against the declared
    parameter and unit names, and undeclared names raise a positioned error."""
    params, units = set(params), set(units)
    body = text.rstrip()
    if body.strip() == "1":
        return Monomial()
    pos = 0
    ex, un = [], []
    while True:
        m = _FACTOR.match(body, pos)
        if not m or not m.group("name"):
            raise LiteralSyntaxError("expected a factor NAME or NAME^k", line=line, col=col_offset + pos + 1)
        name = m.group("name")
        k = int(m.group("exp")) if m.group("exp") is not None else 1
        col = col_offset + m.start("name") + 1
        if name in params:
            ex.append((name, k))
        elif name in units:
            un.append((name, k))
        else:
            raise ScenarioError(f"undeclared name {name!r}", line=line, col=col)
        pos = m.end()
        if pos >= len(body):
            break
        if body[pos] != "*":
            raise LiteralSyntaxError(f"expected '*', found {body[pos]!r}", line=line, col=col_offset + pos + 1)
        pos += 1
    return Monomial(tuple(ex), tuple(un))
