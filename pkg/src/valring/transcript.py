"""Certification transcripts: deterministic text emission and replay."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass

from . import __version__
from .errors import PreconditionError
from .extension import Certificate, MonomialExtension, ex_efg_decide, replay_steps
from .monomial import IDENT, Monomial
from .records import NewParameter, TransformRecord, reexpress
from .ring_state import state_summary
from .value_groups import GroupElement

MAGIC = "valring transcript"


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Transcript:
    header: tuple[tuple[str, str], ...]
    sections: tuple[tuple[str, ...], ...]

    def emit(self) -> str:
        out = [MAGIC] + [f"{k}={v}" for k, v in self.header]
        for i, sec in enumerate(self.sections, 1):
            out.append(f"[certificate {i}]")
            out += list(sec)
        return "\n".join(out) + "\n"


def make_header(scenario_text: str, max_steps: int, precision_rounds: int) -> tuple[tuple[str, str], ...]:
    return (
        ("version", __version__),
        ("scenario_sha256", digest(scenario_text)),
        ("max_steps", str(max_steps)),
        ("precision_rounds", str(precision_rounds)),
    )


def certificate_lines(g: Monomial, h: Monomial, cert: Certificate) -> tuple[str, ...]:
    out = [f"g={g}", f"h={h}", f"decision={cert.decision.line()}", f"steps={len(cert.steps)}"]
    for i, (side, rec) in enumerate(cert.steps, 1):
        out.append(f"[step {i}]")
        out += rec.with_side(side).lines()
    out += _final_lines(cert.final, cert.g_final, cert.h_final, cert.witness)
    return tuple(out)


def _final_lines(ext: MonomialExtension, g_final, h_final, witness) -> list[str]:
    out = ["[final R]"] + state_summary(ext.R) + ["[final S]"] + state_summary(ext.S)
    x11, y11 = ext.R.params[0].name, ext.S.params[0].name
    gamma = f"{ext.gamma}*" if not ext.gamma.is_one() else ""
    out.append(f"normal_form={x11} = {gamma}{y11}^{ext.e}" if ext.e > 1 else "normal_form=identity")
    out += [f"g_final={g_final}", f"h_final={h_final}", f"witness={witness}", "result=certified"]
    return out


# -- parsing records back -----------------------------------------------------

_NEW = re.compile(rf"^new (?P<name>{IDENT})@(?P<level>\d+)\.(?P<index>\d+)=(?P<val>.*)$")
_FACT = re.compile(rf"^(?P<name>{IDENT})(?:\^(?P<exp>-?\d+))?$")


def _mono(text: str, units: set[str]) -> Monomial:
    if text == "1":
        return Monomial()
    ex, un = [], []
    for part in text.split("*"):
        m = _FACT.match(part)
        if not m:
            raise PreconditionError(f"bad monomial factor {part!r}")
        k = int(m.group("exp")) if m.group("exp") else 1
        (un if m.group("name") in units else ex).append((m.group("name"), k))
    return Monomial(tuple(ex), tuple(un))


def parse_record(lines: list[str], known_units: set[str]) -> TransformRecord:
    fields: dict = {}
    subst, new, removed, new_units = [], [], [], []
    for ln in lines:
        if ln.startswith("new_unit="):
            new_units.append(ln.split("=", 1)[1])
    units = known_units | set(new_units)
    for ln in lines:
        if ln.startswith("subst "):
            old, mono = ln[6:].split("=", 1)
            subst.append((old, _mono(mono, units)))
            continue
        m = _NEW.match(ln)
        if m:
            new.append(NewParameter(m.group("name"), int(m.group("level")), int(m.group("index")), GroupElement.parse(m.group("val"))))
            continue
        key, _, val = ln.partition("=")
        if key in ("m", "r", "k", "l", "lam"):
            fields[key] = int(val)
        elif key in ("kind", "side"):
            fields[key] = val
        elif key == "d":
            fields["d"] = tuple(int(x) for x in val.strip("()").split(","))
        elif key == "y_value":
            fields["y_value"] = GroupElement.parse(val)
        elif key == "unit_word":
            fields["unit_word"] = _mono(val, units)
        elif key == "block":
            fields["block"] = tuple(val.split(","))
        elif key == "matrix":
            fields["matrix"] = tuple(tuple(r) for r in json.loads(val))
        elif key == "removed":
            removed.append(val)
        elif key == "new_unit":
            pass
        else:
            raise PreconditionError(f"unknown record field {key!r}")
    return TransformRecord(
        substitution=tuple(subst), new_params=tuple(new), removed=tuple(removed), new_units=tuple(new_units), **fields
    )


def parse_transcript(text: str):
    """Returns ``(header, [(g_text, h_text, [(side, record_lines)]) ...])``."""
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise PreconditionError("not a transcript")
    header, i = [], 1
    while i < len(lines) and not lines[i].startswith("["):
        k, _, v = lines[i].partition("=")
        header.append((k, v))
        i += 1
    certs = []
    while i < len(lines):
        if not lines[i].startswith("[certificate"):
            raise PreconditionError(f"unexpected line {lines[i]!r}")
        i += 1
        info = {}
        while i < len(lines) and not lines[i].startswith("["):
            k, _, v = lines[i].partition("=")
            info[k] = v
            i += 1
        steps = []
        while i < len(lines) and lines[i].startswith("[step"):
            i += 1
            body = []
            while i < len(lines) and not lines[i].startswith("["):
                body.append(lines[i])
                i += 1
            side = next((ln.split("=", 1)[1] for ln in body if ln.startswith("side=")), "")
            steps.append((side, body))
        while i < len(lines) and not lines[i].startswith("[certificate"):
            i += 1
        certs.append((info.get("g", ""), info.get("h", ""), steps))
    return tuple(header), certs


def replay_certificate(ext: MonomialExtension, g: Monomial, h: Monomial, step_lines) -> tuple[str, ...]:
    """Re-execute recorded steps and rebuild the certificate section."""
    units = set(ext.R.units) | set(ext.S.units)
    steps = []
    for side, body in step_lines:
        rec = parse_record(body, units)
        units |= set(rec.new_units)
        steps.append((side, rec.with_side("")))
    final = replay_steps(ext, steps)
    s_log = final.S.log[len(ext.S.log):]
    g_final, h_final = reexpress(s_log, g), reexpress(s_log, h)
    witness = g_final / h_final
    if not witness.is_nonneg():
        raise PreconditionError(f"replayed witness {witness} has a negative exponent")
    cert = Certificate(tuple(steps), final, g_final, h_final, witness, ex_efg_decide(ext))
    return certificate_lines(g, h, cert)
