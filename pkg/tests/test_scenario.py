"""Scenario file parsing and scripted-run behavior."""

from pathlib import Path

import pytest

from homelink.scenario import ScenarioError, parse, play, play_file

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"
DEMO = str(SCENARIOS / "demo_lockout.scn")
GOLDEN = SCENARIOS / "demo_lockout.golden"


def run_text(text, name="inline"):
    lines = []
    ok = play(parse(text), lines.append, name=name)
    return ok, lines


def test_empty_scenario_passes_trivially():
    ok, lines = run_text("")
    assert ok
    assert lines[-1] == "result: PASS (0 steps, 0 expects)"


def test_comments_and_blank_lines_are_skipped():
    steps = parse("# a comment\n\n   \n# another\n")
    assert steps == []


def test_bad_json_reports_line_number():
    with pytest.raises(ScenarioError) as exc:
        parse('{"at": 0, "action": "inject", "args": {}}\n{nope}\n')
    assert exc.value.line == 2


@pytest.mark.parametrize("line,fragment", [
    ('{"at": -5, "action": "inject", "args": {}}', "nonnegative"),
    ('{"at": true, "action": "inject", "args": {}}', "nonnegative"),
    ('{"at": 0, "action": "frobnicate", "args": {}}', "unknown action"),
    ('{"at": 0, "action": "inject"}', "'args'"),
    ('{"at": 0, "action": "inject", "args": {}, "extra": 1}', "unknown keys"),
    ('[1, 2]', "JSON object"),
])
def test_malformed_steps_are_rejected(line, fragment):
    with pytest.raises(ScenarioError) as exc:
        parse(line)
    assert exc.value.line == 1
    assert fragment in exc.value.message


def test_time_going_backwards_is_rejected():
    text = ('{"at": 500, "action": "inject", "args": {"kind": "ambient", "celsius": 20}}\n'
            '{"at": 400, "action": "inject", "args": {"kind": "ambient", "celsius": 21}}\n')
    with pytest.raises(ScenarioError) as exc:
        parse(text)
    assert exc.value.line == 2


def test_expect_mismatch_fails_with_log_excerpt():
    text = '{"at": 0, "action": "expect", "args": {"kind": "toast"}}\n'
    ok, lines = run_text(text)
    assert not ok
    assert any("FAIL (0 matched" in line for line in lines)
    assert any(line.startswith("log excerpt") for line in lines)
    assert lines[-1] == "result: FAIL at line 1"


def test_expect_count_must_match_exactly():
    text = ('{"at": 0, "action": "command", "args": {"op": "attach", "device": "automation"}}\n'
            '{"at": 0, "action": "command", "args": {"op": "light", "light": 1, "on": true}}\n'
            '{"at": 0, "action": "expect", "args": {"kind": "toast", "count": 2}}\n')
    ok, lines = run_text(text)
    assert not ok
    assert any("(1 matched, wanted exactly 2)" in line for line in lines)


def test_passwords_and_codes_are_masked_in_transcripts():
    text = ('{"at": 0, "action": "command", "args": {"op": "attach", "device": "car"}}\n'
            '{"at": 0, "action": "command", "args": {"op": "auth", "device": "car", '
            '"password": "car-lock-pass"}}\n')
    ok, lines = run_text(text)
    assert ok
    assert not any("car-lock-pass" in line for line in lines)
    assert any('"password":"***"' in line for line in lines)


def test_simulated_time_advances_between_steps():
    # the car pulse needs 300 simulated ms to finish; a later step's clock
    # carries it over the line
    text = ('{"at": 0, "action": "command", "args": {"op": "attach", "device": "car"}}\n'
            '{"at": 0, "action": "command", "args": {"op": "auth", "device": "car", '
            '"password": "car-lock-pass"}}\n'
            '{"at": 400, "action": "command", "args": {"op": "status", "device": "car"}}\n'
            '{"at": 400, "action": "expect", "args": {"device": "car", "kind": "actuator", '
            '"payload": {"state": "locked"}}}\n')
    ok, lines = run_text(text)
    assert ok, "\n".join(lines)


def test_demo_lockout_passes():
    lines = []
    assert play_file(DEMO, lines.append)
    assert lines[-1].startswith("result: PASS")


def test_demo_lockout_transcript_is_deterministic():
    first, second = [], []
    assert play_file(DEMO, first.append)
    assert play_file(DEMO, second.append)
    assert first == second


def test_demo_lockout_matches_golden_transcript():
    lines = []
    play_file(DEMO, lines.append)
    golden = GOLDEN.read_text(encoding="utf-8")
    assert "\n".join(lines) + "\n" == golden
