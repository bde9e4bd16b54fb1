import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from instances import block_extension
from valring.errors import NonSquarefreeRadicand, ScenarioError
from valring.monomial import Monomial
from valring.scenario import Query, Scenario, io_emit, io_parse, scenario_key

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"

MINIMAL = """\
[group]
rank = 1
level_ranks = (1)
gen = (1/3)
embedding = [[3]]
"""


def error_position(text):
    with pytest.raises(ScenarioError) as info:
        io_parse(text)
    return info.value.line, info.value.col


def test_minimal_group():
    sc = io_parse(MINIMAL)
    spec, emb = sc.group
    assert spec.n == 1 and emb.matrix == ((3,),)


def test_non_squarefree_literal():
    text = MINIMAL.replace("(1/3)", "(sqrt(8))")
    with pytest.raises(NonSquarefreeRadicand) as info:
        io_parse(text)
    assert (info.value.line, info.value.col) == (4, 13)


def test_undeclared_parameter_in_query():
    text = (SCENARIOS / "unramified.scn").read_text()
    text = text.replace("divide ring=R m1=x2 m2=x1^2", "divide ring=R m1=x2 m2=x9^2")
    line = next(i + 1 for i, ln in enumerate(text.splitlines()) if "x9" in ln)
    col = text.splitlines()[line - 1].index("x9") + 1
    assert error_position(text) == (line, col)


@pytest.mark.parametrize(
    "text, where",
    [
        ("[bogus]\n", (1, 1)),
        ("rank = 1\n", (1, 1)),
        (MINIMAL + "colour = red\n", (6, 1)),
        (MINIMAL.replace("level_ranks = (1)", "level_ranks = 1"), (3, 15)),
        (MINIMAL.replace("[[3]]", "[[3, 1]]"), (5, 13)),
        (MINIMAL + "[group]\n", (6, 1)),
        ("[extension]\nmatrix = [[1]]\n", (1, 1)),
    ],
)
def test_positioned_errors(text, where):
    assert error_position(text) == where


def test_semantic_error_points_at_section():
    text = """\
[ring R]
rank = 1
level_ranks = (2)
param x1 @ 1 = (1)
param x2 @ 1 = (2)
"""
    line, _ = error_position(text)
    assert line == 1


def test_comments_and_blank_lines_ignored():
    text = "# leading comment\n\n" + MINIMAL.replace("rank = 1", "rank = 1   # one level")
    assert scenario_key(io_parse(text)) == scenario_key(io_parse(MINIMAL))


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.scn")), ids=lambda p: p.name)
def test_shipped_scenarios_round_trip(path):
    sc = io_parse(path.read_text())
    canon = io_emit(sc)
    again = io_parse(canon)
    assert io_emit(again) == canon
    assert scenario_key(again) == scenario_key(sc)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9), st.sampled_from([1, 2, 3]))
def test_generated_extension_round_trip(seed, e):
    ext = block_extension(random.Random(seed), e)
    y = ext.S.params[0].name
    sc = Scenario(rings={"R": ext.R, "S": ext.S}, extension=ext)
    sc.queries = [Query("certify", (("g", Monomial.var(y, 2)), ("h", Monomial.var(y))), 0)]
    text = io_emit(sc)
    parsed = io_parse(text)
    assert scenario_key(parsed) == scenario_key(sc)
    assert io_emit(parsed) == text
