"""Exact arithmetic in multiquadratic real fields Q(sqrt(d_1), ..., sqrt(d_k)).

A :class:`QuadExt` is a finite Q-linear combination of square roots of
distinct squarefree positive integers.  Because those square roots are
linearly independent over Q, equality is decided by comparing term maps and
the sign of a nonzero value is decided by shrinking rational enclosures of
each root until the enclosure of the sum misses zero.
"""

from __future__ import annotations

import contextvars
import re
from fractions import Fraction
from math import gcd, isqrt
from typing import Iterable, Mapping, Union

from .errors import LiteralSyntaxError, NonSquarefreeRadicand, PrecisionLimitError
from .intlinalg import rank

START_BITS = 64
DEFAULT_ROUNDS = 16

_rounds = contextvars.ContextVar("precision_rounds", default=DEFAULT_ROUNDS)

Number = Union[int, Fraction]


def set_precision_rounds(rounds: int) -> contextvars.Token:
    """Set the refinement cap for sign decisions in the current context."""
    if rounds < 1:
        raise ValueError("precision rounds must be positive")
    return _rounds.set(rounds)


def precision_rounds() -> int:
    return _rounds.get()


def is_squarefree(n: int) -> bool:
    if n < 1:
        return False
    p = 2
    while p * p <= n:
        if n % (p * p) == 0:
            return False
        if n % p == 0:
            n //= p
        p += 1
    return True


class QuadExt:
    """Immutable element of a multiquadratic field, kept in canonical form."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Union[Mapping[int, Number], Number, None] = None):
        if terms is None:
            terms = {}
        elif isinstance(terms, (int, Fraction)):
            terms = {1: terms}
        clean = {}
        for d, q in terms.items():
            d = int(d)
            if not is_squarefree(d):
                raise NonSquarefreeRadicand(f"radicand {d} is not a squarefree positive integer")
            q = Fraction(q)
            if q:
                clean[d] = q
        self._terms = tuple(sorted(clean.items()))
        self._hash = None

    @classmethod
    def _raw(cls, items: Iterable[tuple[int, Fraction]]) -> "QuadExt":
        obj = object.__new__(cls)
        obj._terms = tuple(sorted((d, q) for d, q in items if q))
        obj._hash = None
        return obj

    @classmethod
    def sqrt(cls, d: int) -> "QuadExt":
        return cls({d: 1})

    @property
    def terms(self) -> dict[int, Fraction]:
        return dict(self._terms)

    @property
    def radicands(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self._terms)

    def coeff(self, d: int) -> Fraction:
        for dd, q in self._terms:
            if dd == d:
                return q
        return Fraction(0)

    def is_zero(self) -> bool:
        return not self._terms

    def is_rational(self) -> bool:
        return all(d == 1 for d, _ in self._terms)

    def __bool__(self):
        return bool(self._terms)

    # -- arithmetic ---------------------------------------------------------

    @staticmethod
    def _coerce(other) -> "QuadExt":
        if isinstance(other, QuadExt):
            return other
        if isinstance(other, (int, Fraction)):
            return QuadExt._raw([(1, Fraction(other))])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc = dict(self._terms)
        for d, q in other._terms:
            acc[d] = acc.get(d, 0) + q
        return QuadExt._raw(acc.items())

    __radd__ = __add__

    def __neg__(self):
        return QuadExt._raw((d, -q) for d, q in self._terms)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        acc: dict[int, Fraction] = {}
        for d1, q1 in self._terms:
            for d2, q2 in other._terms:
                g = gcd(d1, d2)
                # d1*d2 = g^2 * (d1/g)*(d2/g); the cofactor is squarefree
                d = (d1 // g) * (d2 // g)
                acc[d] = acc.get(d, 0) + q1 * q2 * g
        return QuadExt._raw(acc.items())

    __rmul__ = __mul__

    # -- equality and order -------------------------------------------------

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self._terms)
        return self._hash

    def enclosure(self, bits: int) -> tuple[Fraction, Fraction]:
        """Rational interval [lo, hi] containing the value, width O(2^-bits)."""
        lo = hi = Fraction(0)
        scale = 1 << bits
        for d, q in self._terms:
            if d == 1:
                lo += q
                hi += q
                continue
            s = isqrt(d << (2 * bits))
            a, b = Fraction(s, scale), Fraction(s + 1, scale)
            if q > 0:
                lo += q * a
                hi += q * b
            else:
                lo += q * b
                hi += q * a
        return lo, hi

    def sign(self, rounds: int | None = None) -> int:
        if not self._terms:
            return 0
        if self.is_rational():
            return 1 if self._terms[0][1] > 0 else -1
        if len(self._terms) == 1:
            return 1 if self._terms[0][1] > 0 else -1
        if rounds is None:
            rounds = _rounds.get()
        bits = START_BITS
        for _ in range(rounds):
            lo, hi = self.enclosure(bits)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            bits *= 2
        raise PrecisionLimitError(
            f"could not separate {self} from zero within {rounds} refinement rounds"
        )

    def _cmp(self, other) -> int:
        other = self._coerce(other)
        if other is NotImplemented:
            raise TypeError(f"cannot compare QuadExt with {type(other).__name__}")
        return (self - other).sign()

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __float__(self):
        if not self._terms:
            return 0.0
        bits = START_BITS
        for _ in range(8):
            lo, hi = self.enclosure(bits)
            mid = (lo + hi) / 2
            if mid and abs(hi - lo) <= abs(mid) * Fraction(1, 1 << 60):
                return float(mid)
            bits *= 2
        return float((lo + hi) / 2)

    def floor_div(self, other: "QuadExt") -> int:
        """Largest integer q with q*other <= self, for other > 0."""
        if other.sign() <= 0:
            raise ValueError("divisor must be positive")
        q = int(Fraction(float(self) / float(other)).__floor__()) if other else 0
        while self - other * q < 0:
            q -= 1
        while self - other * (q + 1) >= 0:
            q += 1
        return q

    # -- text ---------------------------------------------------------------

    def __str__(self):
        if not self._terms:
            return "0"
        out = []
        for d, q in self._terms:
            mag = abs(q)
            if d == 1:
                body = _fmt_rational(mag)
            elif mag == 1:
                body = f"sqrt({d})"
            else:
                body = f"{_fmt_rational(mag)}*sqrt({d})"
            if not out:
                out.append(("-" if q < 0 else "") + body)
            else:
                out.append(("- " if q < 0 else "+ ") + body)
        return " ".join(out)

    def __repr__(self):
        return f"QuadExt({str(self)!r})"

    @classmethod
    def parse(cls, text: str) -> "QuadExt":
        return parse_quadext(text)


def _fmt_rational(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


_KIND_NAMES = {"num": "an integer", "sqrt": "'sqrt'", "op": "an operator"}
_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<sqrt>sqrt)|(?P<op>[-+*/()]))")


def parse_quadext(text: str, col_offset: int = 0) -> QuadExt:
    """Parse ``term (+|-) term ...`` where a term is ``r``, ``r*sqrt(n)`` or ``sqrt(n)``.

    Column numbers in errors are 1-based and shifted by ``col_offset``.
    """
    tokens = []
    pos = 0
    text_len = len(text.rstrip())
    while pos < text_len:
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise LiteralSyntaxError(f"unexpected character {text[pos]!r}", col=col_offset + pos + 1)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), col_offset + m.start(kind) + 1))
        pos = m.end()
    tokens.append(("end", "", col_offset + text_len + 1))
    i = 0

    def peek():
        return tokens[i]

    def take(kind, value=None):
        nonlocal i
        tok = tokens[i]
        if tok[0] != kind or (value is not None and tok[1] != value):
            want = repr(value) if value else _KIND_NAMES[kind]
            raise LiteralSyntaxError(f"expected {want}, found {tok[1] or 'end of input'!r}", col=tok[2])
        i += 1
        return tok

    def radical():
        take("sqrt")
        take("op", "(")
        _, digits, col = take("num")
        take("op", ")")
        n = int(digits)
        if n < 1 or not is_squarefree(n):
            raise NonSquarefreeRadicand(f"radicand {n} is not a squarefree positive integer", col=col)
        return n

    def rational():
        _, digits, _ = take("num")
        q = Fraction(int(digits))
        if peek()[:2] == ("op", "/"):
            take("op", "/")
            _, den, col = take("num")
            if int(den) == 0:
                raise LiteralSyntaxError("zero denominator", col=col)
            q /= int(den)
        return q

    def term():
        if peek()[0] == "sqrt":
            return Fraction(1), radical()
        q = rational()
        if peek()[:2] == ("op", "*"):
            take("op", "*")
            return q, radical()
        return q, 1

    acc: dict[int, Fraction] = {}
    sgn = 1
    if peek()[:2] in (("op", "-"), ("op", "+")):
        sgn = -1 if take("op")[1] == "-" else 1
    while True:
        q, d = term()
        acc[d] = acc.get(d, 0) + sgn * q
        tok = peek()
        if tok[0] == "end":
            break
        if tok[:2] not in (("op", "+"), ("op", "-")):
            raise LiteralSyntaxError(f"expected '+' or '-', found {tok[1]!r}", col=tok[2])
        sgn = -1 if take("op")[1] == "-" else 1
    return QuadExt._raw(acc.items())


def qx_arith(a: QuadExt, b: QuadExt, op: str) -> QuadExt:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


def qx_sign(a: QuadExt, rounds: int | None = None) -> int:
    return a.sign(rounds)


def rational_rank(values: Iterable[QuadExt]) -> int:
    """Dimension over Q of the span of ``values`` (exact, in the sqrt basis)."""
    rows = [v.terms for v in values]
    keys = sorted({d for r in rows for d in r})
    mat = [[r.get(d, Fraction(0)) for d in keys] for r in rows]
    return rank(mat)
