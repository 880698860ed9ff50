"""Capture-the-flag scoring: the coin ledger.

The defender starts every episode with 10,000 coins; the attacker with none.
Coins only ever move from defender to attacker (clipped at zero), so
``defender + attacker == 10,000`` holds exactly at every step.

Transfers have two sources:

* one-shot bounties when protection takes a branch out: 20 coins per
  transformer, 10 per line, paid on the disconnection event only;
* per-step accrual for every offline load or generator: an element of
  nameplate ``P_N`` kW that has been offline for ``t`` of ``T`` steps has
  earned the attacker ``0.1 * P_N * t / T`` coins in total.

All arithmetic runs on integer milli-coins with nameplates held as integer
watts, so accrual over a full episode is exact: 1000 kW offline for all of
``T`` steps transfers exactly 100.000 coins regardless of ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import GridDuelError
from .protection import DisconnectionEvent

INITIAL_COINS = 10_000
MILLI = 1000
INITIAL_MC = INITIAL_COINS * MILLI
TRANSFORMER_BOUNTY_MC = 20 * MILLI
LINE_BOUNTY_MC = 10 * MILLI


def _round_div(num: int, den: int) -> int:
    """Round-to-nearest integer division for non-negative operands."""
    return (2 * num + den) // (2 * den)


@dataclass
class CoinLedger:
    """Tracks both balances plus per-element accrual state for one episode."""

    horizon: int
    defender_mc: int = INITIAL_MC
    attacker_mc: int = 0
    _offline_steps: dict[str, int] = field(default_factory=dict)
    _transferred_mc: dict[str, int] = field(default_factory=dict)
    _paid_branches: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.horizon < 1:
            raise GridDuelError("ledger horizon must be at least 1 step")

    # -- queries ------------------------------------------------------------

    @property
    def attacker_won(self) -> bool:
        return self.defender_mc == 0

    def defender_coins(self) -> float:
        return self.defender_mc / MILLI

    def attacker_coins(self) -> float:
        return self.attacker_mc / MILLI

    def snapshot(self) -> dict:
        return {"defender_mc": self.defender_mc, "attacker_mc": self.attacker_mc}

    # -- settlement ---------------------------------------------------------

    def settle_step(
        self,
        events: Sequence[DisconnectionEvent],
        offline_injections: Iterable[tuple[str, float]],
    ) -> int:
        """Apply one simulation step's transfers; returns milli-coins moved.

        ``events`` are this step's protection events (branch events carry the
        one-shot bounties).  ``offline_injections`` lists every load/sgen that
        is offline after this step, as ``(element_id, nameplate_kw)`` pairs;
        each is charged one further step of accrual.
        """
        moved = 0
        for event in events:
            if event.element_kind == "transformer":
                moved += self._pay_branch(event.element_id, TRANSFORMER_BOUNTY_MC)
            elif event.element_kind == "line":
                moved += self._pay_branch(event.element_id, LINE_BOUNTY_MC)
        for element_id, nameplate_kw in sorted(offline_injections):
            watts = round(nameplate_kw * MILLI)
            steps = self._offline_steps.get(element_id, 0) + 1
            self._offline_steps[element_id] = steps
            owed = _round_div(watts * steps, 10 * self.horizon)
            already = self._transferred_mc.get(element_id, 0)
            actual = self._transfer(owed - already)
            self._transferred_mc[element_id] = already + actual
            moved += actual
        return moved

    def _pay_branch(self, branch_id: str, bounty_mc: int) -> int:
        if branch_id in self._paid_branches:
            return 0
        self._paid_branches.add(branch_id)
        return self._transfer(bounty_mc)

    def _transfer(self, amount_mc: int) -> int:
        actual = min(max(amount_mc, 0), self.defender_mc)
        self.defender_mc -= actual
        self.attacker_mc += actual
        return actual
