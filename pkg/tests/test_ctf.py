import random

import pytest
from hypothesis import given, strategies as st

from gridduel.ctf import (
    INITIAL_MC,
    LINE_BOUNTY_MC,
    MILLI,
    TRANSFORMER_BOUNTY_MC,
    CoinLedger,
)
from gridduel.errors import GridDuelError
from gridduel.protection import DisconnectionEvent


def ev(element_id, kind, step=0, cause="overload"):
    return DisconnectionEvent(element_id, kind, cause, step)


def test_initial_balances():
    led = CoinLedger(horizon=10)
    assert led.defender_mc == INITIAL_MC
    assert led.attacker_mc == 0
    assert led.defender_coins() == 10_000.0
    assert not led.attacker_won


def test_full_episode_offline_1000_kw_is_exactly_100_coins():
    for horizon in (7, 50, 96, 200, 333):
        led = CoinLedger(horizon=horizon)
        for _ in range(horizon):
            led.settle_step([], [("gen-x", 1000.0)])
        assert led.attacker_mc == 100 * MILLI, horizon
        assert led.defender_mc == INITIAL_MC - 100 * MILLI


def test_transformer_and_line_bounties_pay_exactly_once():
    led = CoinLedger(horizon=10)
    led.settle_step([ev("xf-1", "transformer", step=5)], [])
    assert led.attacker_mc == TRANSFORMER_BOUNTY_MC
    # replaying the same branch id must not pay again
    led.settle_step([ev("xf-1", "transformer", step=6)], [])
    assert led.attacker_mc == TRANSFORMER_BOUNTY_MC
    led.settle_step([ev("line-7", "line", step=6)], [])
    assert led.attacker_mc == TRANSFORMER_BOUNTY_MC + LINE_BOUNTY_MC
    assert led.attacker_coins() == 30.0


def test_injection_events_carry_no_bounty():
    led = CoinLedger(horizon=10)
    led.settle_step([ev("load-1", "load"), ev("sgen-2", "sgen")], [])
    assert led.attacker_mc == 0


def test_partial_episode_accrual_matches_formula():
    led = CoinLedger(horizon=96)
    for _ in range(24):
        led.settle_step([], [("load-a", 1500.0)])
    # 0.1 * 1500 * 24/96 coins = 37.5 coins
    assert led.attacker_mc == 37_500


def test_conservation_under_random_traffic():
    rng = random.Random(3)
    led = CoinLedger(horizon=40)
    elements = [(f"e-{i}", rng.randint(100, 9000)) for i in range(30)]
    offline: list[tuple[str, float]] = []
    for step in range(40):
        if rng.random() < 0.4 and len(offline) < len(elements):
            offline.append(elements[len(offline)])
        events = []
        if rng.random() < 0.3:
            events.append(ev(f"xf-{step}", "transformer", step))
        if rng.random() < 0.3:
            events.append(ev(f"line-{step}", "line", step))
        led.settle_step(events, offline)
        assert led.defender_mc + led.attacker_mc == INITIAL_MC
        assert led.defender_mc >= 0


def test_transfers_clip_at_zero_and_flag_the_win():
    led = CoinLedger(horizon=2)
    # 600 MW offline: owes 30,000 coins per step, triple the pot
    led.settle_step([], [("mega", 600_000.0)])
    assert led.defender_mc == 0
    assert led.attacker_mc == INITIAL_MC
    assert led.attacker_won
    led.settle_step([ev("xf", "transformer")], [("mega", 600_000.0)])
    assert led.attacker_mc == INITIAL_MC  # nothing left to take


def test_snapshot_is_exact_integers():
    led = CoinLedger(horizon=3)
    led.settle_step([], [("a", 777.0)])
    snap = led.snapshot()
    assert snap == {"defender_mc": led.defender_mc, "attacker_mc": led.attacker_mc}
    assert isinstance(snap["defender_mc"], int)


def test_horizon_must_be_positive():
    with pytest.raises(GridDuelError):
        CoinLedger(horizon=0)


@given(
    st.integers(1, 300),
    st.lists(st.tuples(st.integers(1, 20000), st.integers(1, 300)), min_size=1, max_size=8),
)
def test_accrual_totals_are_exact_for_integer_nameplates(horizon, fleet):
    """After t steps offline, transfers equal round(0.1 * P_N * t / T * 1000) mc."""
    led = CoinLedger(horizon=horizon)
    pairs = [(f"g{i}", float(kw)) for i, (kw, _) in enumerate(fleet)]
    spans = [min(t, horizon) for _, t in fleet]
    for step in range(max(spans)):
        active = [p for p, span in zip(pairs, spans) if step < span]
        led.settle_step([], active)
    expected = 0
    for (name, kw), span in zip(pairs, spans):
        # round(watts * t / (10 * T)) milli-coins, in exact integer form
        expected += (2 * int(kw) * MILLI * span + 10 * horizon) // (20 * horizon)
    assert led.attacker_mc == min(expected, INITIAL_MC)
