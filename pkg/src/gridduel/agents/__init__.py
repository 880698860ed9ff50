"""Strategy registry: look up playable strategies and their mutators by kind."""

from __future__ import annotations

from ..errors import GridDuelError
from .base import (
    ExperienceBatch,
    ExperienceTuple,
    IdentityMutator,
    Strategy,
    StrategyMutator,
)
from .baselines import ConstantMutator, ConstantStrategy, RandomMutator, RandomStrategy
from .tabular_q import TabularQMutator, TabularQStrategy

REGISTRY: dict[str, tuple[type[Strategy], type[StrategyMutator]]] = {
    "random": (RandomStrategy, RandomMutator),
    "constant": (ConstantStrategy, ConstantMutator),
    "tabular-q": (TabularQStrategy, TabularQMutator),
}


def strategy_kinds() -> list[str]:
    return sorted(REGISTRY)


def create_strategy(kind: str, seed: int, hyperparameters: dict | None = None) -> Strategy:
    if kind not in REGISTRY:
        raise GridDuelError(f"unknown strategy kind {kind!r}; have {strategy_kinds()}")
    return REGISTRY[kind][0](seed, hyperparameters)


def create_mutator(kind: str, hyperparameters: dict | None = None) -> StrategyMutator:
    if kind not in REGISTRY:
        raise GridDuelError(f"unknown strategy kind {kind!r}; have {strategy_kinds()}")
    return REGISTRY[kind][1](hyperparameters)


__all__ = [
    "ExperienceBatch",
    "ExperienceTuple",
    "IdentityMutator",
    "Strategy",
    "StrategyMutator",
    "RandomStrategy",
    "ConstantStrategy",
    "RandomMutator",
    "ConstantMutator",
    "TabularQStrategy",
    "TabularQMutator",
    "REGISTRY",
    "strategy_kinds",
    "create_strategy",
    "create_mutator",
]
