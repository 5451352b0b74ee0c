"""Command-line behavior: exit codes, printed lines, scenario playback."""

import json
from pathlib import Path

import pytest

from homelink.cli import main
from homelink.gateway import Gateway, GatewayConfig

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture
def gw(tmp_path, monkeypatch):
    config = GatewayConfig.from_dict({
        "data_dir": str(tmp_path / "data"),
        "realtime": False,
        "raw_port": 0,
        "json_port": 0,
    })
    gateway = Gateway(config)
    gateway.start(network=True)
    monkeypatch.setenv("HOMELINK_ADDR", f"127.0.0.1:{gateway.json_addr[1]}")
    yield gateway
    gateway.stop()


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


# -- usage ---------------------------------------------------------------------


def test_unknown_group_exits_64(capsys):
    assert main(["frobnicate"]) == 64


def test_missing_subcommand_exits_64(capsys):
    assert main(["ctl"]) == 64


def test_bad_choice_exits_64(capsys):
    assert main(["ctl", "light", "3", "on"]) == 64


def test_unknown_flag_exits_64(capsys):
    assert main(["ctl", "temp", "--frobnicate"]) == 64


# -- device commands ------------------------------------------------------------


def test_attach_probe(gw, capsys):
    code, out, _ = run(capsys, "ctl", "attach", "automation")
    assert code == 0
    assert out.strip() == "attached automation"


def test_ambient_then_temp_prints_quantized_reading(gw, capsys):
    code, _, _ = run(capsys, "inject", "ambient", "25.03")
    assert code == 0
    code, out, _ = run(capsys, "ctl", "temp")
    assert code == 0
    assert out.strip().splitlines()[-1] == "25.0000 C"


def test_light_prints_toast(gw, capsys):
    code, out, _ = run(capsys, "ctl", "light", "1", "on")
    assert code == 0
    assert "Light1 On" in out


def test_fan_toasts(gw, capsys):
    code, out, _ = run(capsys, "ctl", "fan", "on")
    assert code == 0
    assert "FAN On" in out
    code, out, _ = run(capsys, "ctl", "fan", "up")
    assert code == 0
    assert "Speed Increasing" in out


def test_fan_step_up_at_top_still_acks_with_toast(gw, capsys):
    run(capsys, "ctl", "fan", "on")
    for _ in range(5):
        run(capsys, "ctl", "fan", "up")
    code, out, _ = run(capsys, "ctl", "fan", "up")
    assert code == 0
    assert "Speed Increasing" in out


def test_fan_step_while_off_is_nack(gw, capsys):
    code, out, _ = run(capsys, "ctl", "fan", "up")
    assert code == 2
    assert "NACK fan-off" in out


def test_car_lock_with_password(gw, capsys):
    code, out, _ = run(capsys, "ctl", "car", "lock", "--password", "car-lock-pass")
    assert code == 0
    assert out.strip().splitlines()[-1] == "OK"


def test_door_lockout_cycle(gw, capsys):
    code, _, _ = run(capsys, "inject", "keypad", "4321#")
    assert code == 0

    for attempt in range(2):
        code, out, _ = run(capsys, "ctl", "auth", "door", "--password", "nope")
        assert code == 2
        assert "NACK bad-auth" in out

    code, out, _ = run(capsys, "ctl", "auth", "door", "--password", "nope")
    assert code == 3
    assert "COLLAPSED" in out

    code, out, _ = run(capsys, "ctl", "attach", "door")
    assert code == 4
    assert "unreachable" in out

    code, out, _ = run(capsys, "ctl", "reset", "door", "--code", "000000")
    assert code == 3  # still locked down, wrong code

    code, out, _ = run(capsys, "ctl", "reset", "door", "--code", "777000")
    assert code == 0
    assert "OK" in out


def test_unreachable_gateway_exits_4(monkeypatch, capsys):
    monkeypatch.setenv("HOMELINK_ADDR", "127.0.0.1:1")
    code, _, err = run(capsys, "ctl", "temp")
    assert code == 4
    assert "cannot reach gateway" in err


def test_bad_addr_exits_4(monkeypatch, capsys):
    monkeypatch.setenv("HOMELINK_ADDR", "nonsense")
    code, _, err = run(capsys, "ctl", "temp")
    assert code == 4
    assert "bad gateway address" in err


# -- gateway run -----------------------------------------------------------------


def test_gateway_run_serves_and_exits(tmp_path, capsys):
    config_path = tmp_path / "gw.json"
    config_path.write_text(json.dumps({
        "data_dir": str(tmp_path / "data"),
        "raw_port": 0,
        "json_port": 0,
    }))
    code, out, _ = run(capsys, "gateway", "run", "--config", str(config_path), "--for-ms", "100")
    assert code == 0
    assert "raw frames: 127.0.0.1:" in out
    assert "json plane: 127.0.0.1:" in out
    assert out.strip().endswith("stopped")


def test_gateway_run_rejects_bad_config(tmp_path, capsys):
    config_path = tmp_path / "gw.json"
    config_path.write_text(json.dumps({"sms": {"owner": "+1", "police": "+1"}}))
    code, _, err = run(capsys, "gateway", "run", "--config", str(config_path))
    assert code == 1
    assert "config error" in err


# -- scenario playback -------------------------------------------------------------


def test_scenario_play_demo_matches_golden(capsys):
    code, out, _ = run(capsys, "scenario", "play", str(SCENARIOS / "demo_lockout.scn"))
    assert code == 0
    assert out == (SCENARIOS / "demo_lockout.golden").read_text(encoding="utf-8")


def test_scenario_play_parse_error_exits_65(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text('{"at": 0, "action": "inject", "args": {}}\n{broken\n')
    code, _, err = run(capsys, "scenario", "play", str(bad))
    assert code == 65
    assert "line 2" in err


def test_scenario_play_missing_file_exits_65(tmp_path, capsys):
    code, _, err = run(capsys, "scenario", "play", str(tmp_path / "absent.scn"))
    assert code == 65


def test_scenario_play_expect_mismatch_exits_nonzero(tmp_path, capsys):
    scn = tmp_path / "never.scn"
    scn.write_text('{"at": 0, "action": "expect", "args": {"kind": "toast"}}\n')
    code, out, _ = run(capsys, "scenario", "play", str(scn))
    assert code == 1
    assert "result: FAIL at line 1" in out
