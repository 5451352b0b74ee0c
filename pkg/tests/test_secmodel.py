"""Credential, lockout, and SMS path tests."""

import json

import pytest

from homelink.clock import SimClock
from homelink.secmodel import (
    FAILURE_LIMIT,
    LOGIN_FAILED_MESSAGE,
    CollapseAlerter,
    CredentialStore,
    GsmModem,
    MonitorState,
    Outbox,
    Outcome,
    ProtocolViolationError,
    SecurityMonitor,
)


# -- credentials ---------------------------------------------------------------


def test_credentials_verify_only_the_stored_password():
    store = CredentialStore()
    store.set_password("door", "hunter2")
    assert store.verify("door", "hunter2")
    assert not store.verify("door", "hunter3")
    assert not store.verify("door", "")
    assert not store.verify("window", "hunter2")


def test_resetting_a_password_invalidates_the_old_one():
    store = CredentialStore()
    store.set_password("door", "old")
    store.set_password("door", "new")
    assert not store.verify("door", "old")
    assert store.verify("door", "new")


def test_first_match_picks_the_earliest_matching_purpose():
    store = CredentialStore()
    store.set_password("lock", "alpha")
    store.set_password("unlock", "beta")
    assert store.verify_first_match(["lock", "unlock"], "alpha") == "lock"
    assert store.verify_first_match(["lock", "unlock"], "beta") == "unlock"
    assert store.verify_first_match(["lock", "unlock"], "gamma") is None


def test_login_failure_text_is_fixed():
    assert LOGIN_FAILED_MESSAGE == "Invalid User Name or Password"


# -- lockout monitor -----------------------------------------------------------


def reference_lockout(bits: str, limit: int = FAILURE_LIMIT):
    """Independent oracle: scan the attempt string for a run of failures.

    bits uses '1' for a correct password and '0' for a wrong one. Returns
    (collapse_index or None, live_failure_count) where the count only
    matters when no collapse happened.
    """
    run = "0" * limit
    idx = bits.find(run)
    if idx >= 0:
        return idx + limit - 1, None
    tail = len(bits) - 1 - bits.rfind("1") if "1" in bits else len(bits)
    return None, tail


def test_three_strike_matches_reference_over_all_length8_sequences():
    for pattern in range(256):
        bits = format(pattern, "08b")
        want_idx, want_failures = reference_lockout(bits)

        monitor = SecurityMonitor()
        got_idx = None
        for i, bit in enumerate(bits):
            if monitor.collapsed:
                break
            result = monitor.record(bit == "1")
            if result.just_collapsed:
                got_idx = i

        assert got_idx == want_idx, bits
        if want_idx is None:
            assert monitor.failures == want_failures, bits
            assert monitor.state is MonitorState.ACTIVE
        else:
            assert monitor.collapsed


def test_success_resets_the_consecutive_count():
    monitor = SecurityMonitor()
    monitor.record(False)
    monitor.record(False)
    result = monitor.record(True)
    assert result.outcome is Outcome.OK
    assert monitor.failures == 0
    monitor.record(False)
    monitor.record(False)
    result = monitor.record(False)
    assert result.outcome is Outcome.COLLAPSED and result.just_collapsed


def test_collapse_is_absorbing_and_rejects_further_attempts():
    monitor = SecurityMonitor()
    for _ in range(FAILURE_LIMIT):
        monitor.record(False)
    assert monitor.collapsed
    with pytest.raises(ProtocolViolationError):
        monitor.record(True)
    with pytest.raises(ProtocolViolationError):
        monitor.record(False)


def test_authorized_reset_restores_service():
    monitor = SecurityMonitor()
    for _ in range(FAILURE_LIMIT):
        monitor.record(False)
    monitor.authorized_reset()
    assert not monitor.collapsed
    assert monitor.failures == 0
    assert monitor.record(True).outcome is Outcome.OK


# -- SMS path ------------------------------------------------------------------


def test_collapse_callback_sends_exactly_two_texts_atomically():
    clock = SimClock()
    outbox = Outbox(clock)
    alerter = CollapseAlerter(GsmModem(outbox), "+15550100", "+15550911")
    monitor = SecurityMonitor(on_collapse=lambda: alerter.alert("entry door"))

    monitor.record(False)
    monitor.record(False)
    assert len(outbox) == 0
    result = monitor.record(False)
    assert result.just_collapsed
    assert len(outbox) == 2
    assert [m["recipient"] for m in outbox.messages] == ["+15550100", "+15550911"]
    assert outbox.messages[0]["body"] == outbox.messages[1]["body"]
    assert outbox.messages[0]["device"] == "entry door"
    assert "3 wrong passwords" in outbox.messages[0]["body"]


def test_modem_transcript_follows_text_mode_command_flow():
    outbox = Outbox()
    modem = GsmModem(outbox)
    assert modem.send_sms("+15550100", "hello")
    assert modem.transcript == [
        "> AT+CMGF=1",
        "< OK",
        '> AT+CMGS="+15550100"',
        "< >",
        "> hello\x1a",
        "< +CMGS: 1",
        "< OK",
    ]


def test_alerter_retries_once_per_recipient():
    outbox = Outbox()
    modem = GsmModem(outbox)
    alerter = CollapseAlerter(modem, "+15550100", "+15550911")
    modem.inject_failures(1)
    assert alerter.alert("entry door") == 2
    assert len(outbox) == 2
    assert alerter.failed_deliveries == []
    assert "< ERROR" in modem.transcript


def test_alerter_records_failed_delivery_after_second_error():
    outbox = Outbox()
    modem = GsmModem(outbox)
    alerter = CollapseAlerter(modem, "+15550100", "+15550911")
    modem.inject_failures(2)
    assert alerter.alert("entry door") == 1
    assert len(outbox) == 1
    assert outbox.messages[0]["recipient"] == "+15550911"
    assert [d["to"] for d in alerter.failed_deliveries] == ["+15550100"]


def test_owner_and_police_numbers_must_differ():
    with pytest.raises(ValueError):
        CollapseAlerter(GsmModem(Outbox()), "+15550100", "+15550100")


def test_outbox_can_mirror_to_jsonl(tmp_path):
    path = tmp_path / "outbox.jsonl"
    clock = SimClock()
    clock.advance(42)
    outbox = Outbox(clock, path=str(path))
    outbox.deliver("+15550100", "one")
    outbox.deliver("+15550911", "two")
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert first == {"seq": 0, "sent_at": 42, "recipient": "+15550100",
                     "body": "one", "device": None}
