"""Scenario files: parsing with positioned errors and canonical emission.

Format::

    # comment
    [group]
    rank = 1
    level_ranks = (1)
    gen = (1/3)
    embedding = [[3]]

    [ring R]
    rank = 1
    level_ranks = (1)
    symbol = x
    param x1 @ 1 = (1)
    units = alpha, beta
    s_good = {1}
    very_good = no

    [extension]
    matrix = [[2]]
    unit 1 = gamma
    residue_degree = 1

    [query]
    divide ring=R m1=x1 m2=x1^2
    certify g=y1^3*alpha h=y1^2*beta

Parameters are indexed per level in order of appearance; the first ``s_i``
of level ``i`` form the basis.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional

from .errors import ScenarioError, ValringError
from .extension import MonomialExtension, ex_validate
from .monomial import IDENT, Monomial, parse_monomial
from .ring_state import RingState, make_state, rs_validate
from .value_groups import GroupElement, SubgroupEmbedding, ValueGroupSpec, validate_embedding

_SECTION = re.compile(r"^\[\s*(group|extension|query|ring\s+(" + IDENT + r"))\s*\]$")
_KEYVAL = re.compile(r"^(?P<key>[A-Za-z_]+)\s*=\s*(?P<val>.*)$")
_PARAM = re.compile(r"^param\s+(?P<name>" + IDENT + r")\s*@\s*(?P<level>\d+)\s*=\s*(?P<val>.*)$")
_UNIT_ROW = re.compile(r"^unit\s+(?P<row>\d+)\s*=\s*(?P<val>.*)$")
_INT_TUPLE = re.compile(r"^\(\s*(-?\d+(\s*,\s*-?\d+)*)?\s*\)$")
_INT_SET = re.compile(r"^\{\s*(\d+(\s*,\s*\d+)*)?\s*\}$")
_MATRIX = re.compile(r"^\[\s*\[[-\d,\s\[\]]*\]\s*\]$")


@dataclass(frozen=True)
class Query:
    kind: str
    args: tuple[tuple[str, object], ...]
    line: int

    @property
    def arg(self) -> dict:
        return dict(self.args)


@dataclass
class Scenario:
    text: str = ""
    group: Optional[tuple[ValueGroupSpec, SubgroupEmbedding]] = None
    rings: dict = field(default_factory=dict)
    extension: Optional[MonomialExtension] = None
    queries: list = field(default_factory=list)


class _Line:
    def __init__(self, no: int, raw: str):
        self.no = no
        self.raw = raw
        body = raw.split("#", 1)[0]
        self.text = body.strip()
        self.indent = len(body) - len(body.lstrip())

    def col(self, sub_start: int) -> int:
        return self.indent + sub_start + 1

    def err(self, msg, sub_start=0):
        return ScenarioError(msg, line=self.no, col=self.col(sub_start))


def _val_start(ln: _Line, m: re.Match) -> int:
    return m.start("val")


def _parse_int(ln, m) -> int:
    v = m.group("val").strip()
    if not re.fullmatch(r"-?\d+", v):
        raise ln.err(f"expected an integer, found {v!r}", _val_start(ln, m))
    return int(v)


def _parse_int_tuple(ln, m) -> tuple[int, ...]:
    v = m.group("val").strip()
    if not _INT_TUPLE.match(v):
        raise ln.err(f"expected an integer tuple like (1, 2), found {v!r}", _val_start(ln, m))
    inner = v[1:-1].strip()
    return tuple(int(x) for x in inner.split(",")) if inner else ()


def _parse_set(ln, m) -> frozenset:
    v = m.group("val").strip()
    if not _INT_SET.match(v):
        raise ln.err(f"expected a set like {{1, 2}}, found {v!r}", _val_start(ln, m))
    inner = v[1:-1].strip()
    return frozenset(int(x) for x in inner.split(",")) if inner else frozenset()


def _parse_bool(ln, m) -> bool:
    v = m.group("val").strip().lower()
    if v in ("yes", "true"):
        return True
    if v in ("no", "false"):
        return False
    raise ln.err(f"expected yes or no, found {v!r}", _val_start(ln, m))


def _parse_matrix(ln, m) -> tuple[tuple[int, ...], ...]:
    v = m.group("val").strip()
    try:
        if not _MATRIX.match(v):
            raise ValueError
        rows = json.loads(v)
        if not rows or not all(isinstance(r, list) and all(isinstance(x, int) for x in r) for r in rows):
            raise ValueError
    except ValueError:
        raise ln.err(f"expected an integer matrix like [[1, 0], [0, 1]], found {v!r}", _val_start(ln, m))
    if any(len(r) != len(rows) for r in rows):
        raise ln.err("matrix must be square", _val_start(ln, m))
    return tuple(tuple(r) for r in rows)


def _parse_names(ln, m) -> tuple[str, ...]:
    v = m.group("val").strip()
    if not v:
        return ()
    names = tuple(x.strip() for x in v.split(","))
    for nm in names:
        if not re.fullmatch(IDENT, nm):
            raise ln.err(f"invalid name {nm!r}", _val_start(ln, m))
    return names


def _parse_element(ln, m) -> GroupElement:
    start = _val_start(ln, m)
    raw = m.group("val")
    try:
        return GroupElement.parse(raw, col_offset=ln.indent + start)
    except ScenarioError as exc:
        raise type(exc)(exc.message, line=ln.no, col=exc.col)


def _semantic(ln: _Line, exc: Exception) -> ScenarioError:
    return ScenarioError(str(exc), line=ln.no, col=1)


def io_parse(text: str) -> Scenario:
    lines = [_Line(i + 1, raw) for i, raw in enumerate(text.splitlines())]
    sections: list[tuple[_Line, str, Optional[str], list[_Line]]] = []
    for ln in lines:
        if not ln.text:
            continue
        if ln.text.startswith("["):
            m = _SECTION.match(ln.text)
            if not m:
                raise ln.err(f"unknown section header {ln.text!r}")
            kind = "ring" if m.group(1).startswith("ring") else m.group(1)
            sections.append((ln, kind, m.group(2), []))
            continue
        if not sections:
            raise ln.err("content before the first section header")
        sections[-1][3].append(ln)

    sc = Scenario(text=text)
    seen = set()
    for head, kind, name, body in sections:
        key = (kind, name)
        if key in seen:
            raise head.err(f"duplicate section {head.text}")
        seen.add(key)
        if kind == "group":
            sc.group = _parse_group(head, body)
        elif kind == "ring":
            sc.rings[name] = _parse_ring(head, name, body)
        elif kind == "extension":
            if "R" not in sc.rings or "S" not in sc.rings:
                raise head.err("[extension] needs [ring R] and [ring S] declared before it")
            sc.extension = _parse_extension(head, body, sc.rings["R"], sc.rings["S"])
        else:
            sc.queries = _parse_queries(body, sc)
    return sc


def _parse_group(head: _Line, body) -> tuple[ValueGroupSpec, SubgroupEmbedding]:
    u = ranks = emb = None
    gens = []
    for ln in body:
        m = _KEYVAL.match(ln.text)
        if not m:
            raise ln.err(f"expected key = value, found {ln.text!r}")
        k = m.group("key")
        if k == "rank":
            u = _parse_int(ln, m)
        elif k == "level_ranks":
            ranks = _parse_int_tuple(ln, m)
        elif k == "gen":
            gens.append(_parse_element(ln, m))
        elif k == "embedding":
            emb = (ln, _parse_matrix(ln, m))
        else:
            raise ln.err(f"unknown key {k!r} in [group]")
    if u is None or ranks is None or emb is None:
        raise head.err("[group] needs rank, level_ranks, gen lines and embedding")
    try:
        spec = ValueGroupSpec(u, ranks, tuple(gens))
    except ValringError as exc:
        raise _semantic(head, exc)
    try:
        embedding = SubgroupEmbedding(emb[1])
        validate_embedding(spec, embedding)
    except ValringError as exc:
        raise _semantic(emb[0], exc)
    return spec, embedding


def _parse_ring(head: _Line, name: str, body) -> RingState:
    u = ranks = None
    params, units = [], ()
    s_good, very_good, symbol = frozenset(), False, name.lower()
    for ln in body:
        pm = _PARAM.match(ln.text)
        if pm:
            level = int(pm.group("level"))
            params.append((pm.group("name"), level, _parse_element(ln, pm), ln))
            continue
        m = _KEYVAL.match(ln.text)
        if not m:
            raise ln.err(f"expected key = value or a param line, found {ln.text!r}")
        k = m.group("key")
        if k == "rank":
            u = _parse_int(ln, m)
        elif k == "level_ranks":
            ranks = _parse_int_tuple(ln, m)
        elif k == "units":
            units = _parse_names(ln, m)
        elif k == "s_good":
            s_good = _parse_set(ln, m)
        elif k == "very_good":
            very_good = _parse_bool(ln, m)
        elif k == "symbol":
            symbol = m.group("val").strip()
            if not re.fullmatch(r"[A-Za-z]+", symbol):
                raise ln.err("symbol must be alphabetic", _val_start(ln, m))
        else:
            raise ln.err(f"unknown key {k!r} in [ring {name}]")
    if u is None or ranks is None:
        raise head.err(f"[ring {name}] needs rank and level_ranks")
    if len(ranks) != u:
        raise head.err(f"level_ranks has {len(ranks)} entries but rank is {u}")
    for pname, level, value, ln in params:
        if not 1 <= level <= u:
            raise ln.err(f"level {level} outside 1..{u}")
    try:
        state = make_state(u, ranks, [(p, lv, v) for p, lv, v, _ in params], units, s_good, very_good, symbol)
    except ValringError as exc:
        raise _semantic(head, exc)
    report = rs_validate(state)
    if not report.ok:
        raise head.err(f"invalid ring {name}: " + "; ".join(report.problems))
    return state


def _parse_extension(head: _Line, body, R: RingState, S: RingState) -> MonomialExtension:
    matrix, units, f = None, {}, 1
    known_units = set(R.units) | set(S.units)
    for ln in body:
        um = _UNIT_ROW.match(ln.text)
        if um:
            row = int(um.group("row"))
            word = parse_monomial(um.group("val"), (), known_units, line=ln.no, col_offset=ln.indent + um.start("val"))
            if row in units:
                raise ln.err(f"duplicate unit for row {row}")
            units[row] = (ln, word)
            continue
        m = _KEYVAL.match(ln.text)
        if not m:
            raise ln.err(f"expected key = value or a unit line, found {ln.text!r}")
        k = m.group("key")
        if k == "matrix":
            matrix = _parse_matrix(ln, m)
        elif k == "residue_degree":
            f = _parse_int(ln, m)
        else:
            raise ln.err(f"unknown key {k!r} in [extension]")
    if matrix is None:
        raise head.err("[extension] needs a matrix")
    n = len(matrix)
    for row, (ln, _) in units.items():
        if not 1 <= row <= n:
            raise ln.err(f"row {row} outside 1..{n}")
    words = tuple(units[i][1] if i in units else Monomial() for i in range(1, n + 1))
    ext = MonomialExtension(R, S, matrix, words, f)
    report = ex_validate(ext)
    if not report.ok:
        raise head.err("invalid extension: " + "; ".join(report.problems))
    return ext


_ARG = re.compile(r"(?P<key>[a-z0-9_]+)=(?P<val>\S+)")


def _parse_queries(body, sc: Scenario) -> list[Query]:
    out = []
    for ln in body:
        parts = ln.text.split(None, 1)
        kind = parts[0]
        rest = parts[1] if len(parts) > 1 else ""
        offset = len(ln.text) - len(rest)
        args = {}
        for m in _ARG.finditer(rest):
            args[m.group("key")] = (m.group("val"), offset + m.start("val"))
        leftover = _ARG.sub("", rest).strip()
        if leftover:
            raise ln.err(f"cannot parse query arguments near {leftover!r}", offset + rest.find(leftover.split()[0]))
        if kind == "divide":
            need = {"ring", "m1", "m2"}
            if set(args) != need:
                raise ln.err("divide needs exactly ring=, m1= and m2=")
            rname, col = args["ring"]
            if rname not in sc.rings:
                raise ln.err(f"undeclared ring {rname!r}", col)
            st = sc.rings[rname]
            parsed = {"ring": rname}
            for key in ("m1", "m2"):
                text, col = args[key]
                parsed[key] = parse_monomial(text, st.names, st.units, line=ln.no, col_offset=ln.indent + col)
            out.append(Query("divide", tuple(sorted(parsed.items())), ln.no))
        elif kind == "certify":
            if set(args) != {"g", "h"}:
                raise ln.err("certify needs exactly g= and h=")
            if sc.extension is None:
                raise ln.err("certify needs an [extension] section")
            S = sc.extension.S
            unit_names = set(S.units) | set(sc.extension.R.units)
            parsed = {}
            for key in ("g", "h"):
                text, col = args[key]
                parsed[key] = parse_monomial(text, S.names, unit_names, line=ln.no, col_offset=ln.indent + col)
            out.append(Query("certify", tuple(sorted(parsed.items())), ln.no))
        else:
            raise ln.err(f"unknown query {kind!r}")
    return out


# -- emission ---------------------------------------------------------------


def _tuple(xs) -> str:
    return "(" + ", ".join(str(x) for x in xs) + ")"


def _matrix(rows) -> str:
    return "[" + ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in rows) + "]"


def _ring_lines(name: str, st: RingState) -> list[str]:
    out = [f"[ring {name}]", f"rank = {st.u}", f"level_ranks = {_tuple(st.level_ranks)}", f"symbol = {st.symbol}"]
    for p in st.params:
        out.append(f"param {p.name} @ {p.level} = {p.value}")
    if st.units:
        out.append("units = " + ", ".join(st.units))
    out.append("s_good = {" + ", ".join(str(j) for j in sorted(st.s_good)) + "}")
    out.append(f"very_good = {'yes' if st.very_good else 'no'}")
    return out


def io_emit(sc: Scenario) -> str:
    """Canonical text of a scenario; parsing it back gives an equal scenario."""
    out: list[str] = []
    if sc.group is not None:
        spec, emb = sc.group
        out += ["[group]", f"rank = {spec.u}", f"level_ranks = {_tuple(spec.level_ranks)}"]
        out += [f"gen = {g}" for g in spec.generators]
        out += [f"embedding = {_matrix(emb.matrix)}", ""]
    order = [n for n in ("R", "S") if n in sc.rings] + sorted(n for n in sc.rings if n not in ("R", "S"))
    for name in order:
        out += _ring_lines(name, sc.rings[name]) + [""]
    if sc.extension is not None:
        ext = sc.extension
        out += ["[extension]", f"matrix = {_matrix(ext.C)}"]
        out += [f"unit {i + 1} = {w}" for i, w in enumerate(ext.units) if not w.is_one()]
        out += [f"residue_degree = {ext.residue_degree}", ""]
    if sc.queries:
        out.append("[query]")
        for q in sc.queries:
            a = q.arg
            if q.kind == "divide":
                out.append(f"divide ring={a['ring']} m1={a['m1']} m2={a['m2']}")
            else:
                out.append(f"certify g={a['g']} h={a['h']}")
        out.append("")
    while out and out[-1] == "":
        out.pop()
    return "\n".join(out) + "\n"


def scenario_key(sc: Scenario):
    """Structural identity of a scenario (ignores source text and line numbers)."""
    return (
        sc.group,
        tuple(sorted(sc.rings.items())),
        sc.extension,
        tuple((q.kind, q.args) for q in sc.queries),
    )
