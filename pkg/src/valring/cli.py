"""Command line entry point: ``valring {analyze,normalize,divide,certify,replay}``.

Exit codes: 0 success, 2 precondition violation, 3 step or precision cap
exceeded, 4 scenario parse error, 1 replay divergence or other failure.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import __version__
from .errors import PreconditionError, ScenarioError, ValringError
from .exact_reals import set_precision_rounds
from .extension import ex_certify_division, ex_efg_decide, ex_normalize, induced_groups
from .monomial import parse_monomial
from .perron import pe_monomial_divide
from .ring_state import state_summary
from .scenario import Scenario, io_parse
from .transcript import (
    Transcript,
    certificate_lines,
    digest,
    make_header,
    parse_transcript,
    replay_certificate,
)
from .value_groups import vg_fg_module_test, vg_initial_index_bruteforce


class Report:
    """Ordered ``key=value`` records rendered as text or machine lines."""

    def __init__(self):
        self.items: list[tuple[str, str]] = []
        self.summary: Optional[str] = None

    def add(self, key: str, value) -> None:
        self.items.append((key, str(value)))

    def render(self, fmt: str) -> str:
        if fmt == "machine":
            lines = [f"{k}={v}" for k, v in self.items]
        else:
            lines = ([self.summary] if self.summary else []) + [
                k if v == "" else f"{k}: {v}" for k, v in self.items
            ]
        return "\n".join(lines) + "\n"


def _group_data(sc: Scenario):
    if sc.group is not None:
        return sc.group
    if sc.extension is not None:
        return induced_groups(sc.extension)
    raise PreconditionError("analyze needs a [group] or an [extension] section")


def cmd_analyze(sc: Scenario, args) -> Report:
    spec, emb = _group_data(sc)
    dec = ex_efg_decide((spec, emb))
    rep = Report()
    rep.summary = dec.line()
    rep.add("e", dec.e)
    rep.add("epsilon", dec.epsilon)
    rep.add("efg", "yes" if dec.efg else "no")
    rep.add("factors", "(" + ",".join(map(str, dec.factors)) + ")")
    rep.add("defect", dec.defect)
    if sc.extension is not None:
        rep.add("residue_degree", sc.extension.residue_degree)
    rep.add("first_level_rank", dec.first_level_rank)
    if dec.first_level_index is not None:
        rep.add("first_level_index", dec.first_level_index)
    check = "n/a" if dec.structure_ok is None else ("pass" if dec.structure_ok else "fail")
    rep.add("cyclic_quotient_check", check)
    bf = vg_initial_index_bruteforce(spec, emb, args.box)
    rep.add("epsilon_bruteforce", bf)
    rep.add("box", args.box)
    fg = vg_fg_module_test(spec, emb, args.box)
    rep.add("fg_module", "yes" if fg.is_fg else "no")
    rep.add("representatives", ";".join(str(r) for r in fg.representatives))
    if fg.witness is not None:
        rep.add("uncovered_witness", fg.witness)
    rep.add("fg_module_agrees", "yes" if fg.is_fg == dec.efg else "no")
    rep.add("version", __version__)
    rep.add("scenario_sha256", digest(sc.text))
    return rep


def _trace(args, side, rec):
    if args.trace:
        print(f"trace {side}: " + " ".join(rec.lines()), file=sys.stderr)


def cmd_normalize(sc: Scenario, args) -> Report:
    if sc.extension is None:
        raise PreconditionError("normalize needs an [extension] section")
    ext, rlog, slog = ex_normalize(sc.extension)
    rep = Report()
    rep.summary = f"normal_form=yes e={ext.e} steps={len(rlog) + len(slog)}"
    rep.add("e", ext.e)
    rep.add("gamma", ext.gamma)
    for side, log in (("R", rlog), ("S", slog)):
        for rec in log:
            _trace(args, side, rec)
            rep.add(f"[step {side}]", "")
            for ln in rec.with_side(side).lines():
                _add_line(rep, ln)
    for side, st in (("R", ext.R), ("S", ext.S)):
        rep.add(f"[final {side}]", "")
        for ln in state_summary(st):
            _add_line(rep, ln)
    rep.add("version", __version__)
    rep.add("scenario_sha256", digest(sc.text))
    return rep


def _add_line(rep: Report, ln: str) -> None:
    key, sep, value = ln.partition("=")
    if sep:
        rep.add(key, value)
    else:
        rep.add(ln, "")


def cmd_divide(sc: Scenario, args) -> Report:
    queries = [q for q in sc.queries if q.kind == "divide"]
    if not queries:
        raise PreconditionError("no divide queries in the scenario")
    rep = Report()
    rep.summary = f"divide queries={len(queries)}"
    for i, q in enumerate(queries, 1):
        a = q.arg
        state = sc.rings[a["ring"]]
        final, witness, log = pe_monomial_divide(state, a["m1"], a["m2"], args.max_steps)
        rep.add(f"[divide {i}]", "")
        rep.add("ring", a["ring"])
        rep.add("m1", a["m1"])
        rep.add("m2", a["m2"])
        rep.add("steps", len(log))
        for rec in log:
            _trace(args, a["ring"], rec)
            rep.add("step", " ".join(rec.lines()))
        rep.add("witness", witness)
        for ln in state_summary(final):
            _add_line(rep, ln)
    rep.add("version", __version__)
    rep.add("scenario_sha256", digest(sc.text))
    return rep


def build_transcript(sc: Scenario, max_steps: int, precision_rounds: int) -> Transcript:
    queries = [q for q in sc.queries if q.kind == "certify"]
    if not queries:
        raise PreconditionError("no certify queries in the scenario")
    sections = []
    for q in queries:
        a = q.arg
        cert = ex_certify_division(sc.extension, a["g"], a["h"], max_steps)
        sections.append(certificate_lines(a["g"], a["h"], cert))
    return Transcript(make_header(sc.text, max_steps, precision_rounds), tuple(sections))


def cmd_certify(sc: Scenario, args) -> str:
    tr = build_transcript(sc, args.max_steps, args.precision_rounds)
    if args.trace:
        for sec in tr.sections:
            for ln in sec:
                if ln.startswith("[step"):
                    print("trace " + ln, file=sys.stderr)
    return tr.emit()


def cmd_replay(sc: Scenario, args) -> tuple[str, int]:
    if not args.transcript:
        raise PreconditionError("replay needs --transcript")
    with open(args.transcript, encoding="utf-8") as fh:
        recorded = fh.read()
    header, certs = parse_transcript(recorded)
    head = dict(header)
    if head.get("scenario_sha256") != digest(sc.text):
        return "replay=diverged reason=scenario digest mismatch\n", 1
    if sc.extension is None:
        raise PreconditionError("replay needs an [extension] section")
    ext = sc.extension
    unit_names = set(ext.S.units) | set(ext.R.units)
    sections = []
    for g_text, h_text, steps in certs:
        g = parse_monomial(g_text, ext.S.names, unit_names)
        h = parse_monomial(h_text, ext.S.names, unit_names)
        try:
            sections.append(replay_certificate(ext, g, h, steps))
        except PreconditionError as exc:
            return f"replay=diverged certificates={len(certs)} reason={exc}\n", 1
    rebuilt = Transcript(tuple(header), tuple(sections)).emit()
    if rebuilt != recorded:
        return f"replay=diverged certificates={len(certs)}\n", 1
    return f"replay=identical certificates={len(certs)}\n", 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="valring", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"valring {__version__}")
    p.add_argument("command", choices=["analyze", "normalize", "divide", "certify", "replay"])
    p.add_argument("--scenario", required=True, help="scenario file")
    p.add_argument("--max-steps", type=int, default=10_000, help="transform step cap (default 10000)")
    p.add_argument("--box", type=int, default=20, help="brute-force box radius (default 20)")
    p.add_argument("--precision-rounds", type=int, default=16, help="sign refinement rounds (default 16)")
    p.add_argument("--trace", action="store_true", help="print each transform to stderr")
    p.add_argument("--format", choices=["text", "machine"], default="text")
    p.add_argument("--transcript", help="transcript file to check (replay only)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        with open(args.scenario, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 4
    token = set_precision_rounds(args.precision_rounds)
    try:
        sc = io_parse(text)
        if args.command == "analyze":
            out = cmd_analyze(sc, args).render(args.format)
        elif args.command == "normalize":
            out = cmd_normalize(sc, args).render(args.format)
        elif args.command == "divide":
            out = cmd_divide(sc, args).render(args.format)
        elif args.command == "certify":
            out = cmd_certify(sc, args)
        else:
            out, code = cmd_replay(sc, args)
            sys.stdout.write(out)
            return code
    except ScenarioError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValringError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    finally:
        from .exact_reals import _rounds

        _rounds.reset(token)
    sys.stdout.write(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
