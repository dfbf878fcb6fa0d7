"""Stochastic games of annotated nets: the base game with fair conflicts and
its restarting variant.

A player's action is either ``None`` (idle) or the identifier of one enabled
transition it owns.  Action profiles are handled as union steps, i.e. the
frozenset of all chosen transitions; ownership makes the decomposition unique.
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, NamedTuple

from .errors import InitialIsFinal
from .net import (
    NATURE,
    AnnotatedNet,
    conflict_sets,
    enabled,
    fire_step,
    step_enabled,
    step_utility,
)
from .statespace import StateSpace, explore, is_final

IDLE = None


class Outcome(NamedTuple):
    fired: frozenset[str]  # the maximal enabled sub-step that actually fires
    probability: Fraction
    target: frozenset[str]


def maximal_enabled_substeps(
    a: AnnotatedNet, m: frozenset[str], s, classes=None
) -> list[frozenset[str]]:
    """Sub-steps of ``s`` enabled at ``m`` holding one transition per conflict
    class that meets ``s``."""
    s = frozenset(s)
    if classes is None:
        classes = conflict_sets(a.net)
    en = enabled(a.net, m)
    choices = []
    for cls in classes:
        hit = cls & s
        if hit:
            choices.append(sorted(hit & en))
    result = []
    for combo in itertools.product(*choices):
        sub = frozenset(combo)
        if len(sub) == len(choices) and step_enabled(a.net, m, sub):
            result.append(sub)
    return sorted(result, key=sorted)


def _fair_outcomes(a: AnnotatedNet, m, s, classes) -> list[Outcome]:
    s = frozenset(s)
    weight = Fraction(1)
    for cls in classes:
        k = len(cls & s)
        if k:
            weight /= k
    return [
        Outcome(sub, weight, fire_step(a.net, m, sub))
        for sub in maximal_enabled_substeps(a, m, s, classes)
    ]


def transition_probability(a: AnnotatedNet, m, s, m2, classes=None) -> Fraction:
    """Probability of moving from ``m`` to ``m2`` when profile ``s`` is chosen."""
    if classes is None:
        classes = conflict_sets(a.net)
    m2 = frozenset(m2)
    return sum(
        (o.probability for o in _fair_outcomes(a, frozenset(m), s, classes) if o.target == m2),
        Fraction(0),
    )


@dataclass(frozen=True, eq=False)
class StochasticGame:
    net: AnnotatedNet
    players: tuple[str, ...]
    states: tuple[frozenset[str], ...]
    initial: frozenset[str]
    classes: tuple[frozenset[str], ...]
    restart: bool = False
    # final markings of the base game, redirected to ``initial`` when restarting
    finals: frozenset[frozenset[str]] = frozenset()
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def state_index(self) -> dict[frozenset[str], int]:
        idx = self._cache.get("index")
        if idx is None:
            idx = self._cache["index"] = {m: i for i, m in enumerate(self.states)}
        return idx

    def available(self, m: frozenset[str], player: str) -> tuple[str | None, ...]:
        """Idle plus every enabled transition owned by ``player``."""
        key = ("avail", m, player)
        hit = self._cache.get(key)
        if hit is None:
            own = sorted(t for t in enabled(self.net.net, m) if self.net.owner(t) == player)
            hit = self._cache[key] = (IDLE, *own)
        return hit

    def profiles(self, m: frozenset[str]) -> Iterator[frozenset[str]]:
        """Union steps of every profile assembled from available actions."""
        per_player = [self.available(m, p) for p in self.players]
        for combo in itertools.product(*per_player):
            yield frozenset(t for t in combo if t is not IDLE)

    def outcomes(self, m: frozenset[str], s) -> tuple[Outcome, ...]:
        s = frozenset(s)
        key = ("out", m, s)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        result = []
        for o in _fair_outcomes(self.net, m, s, self.classes):
            if self.restart and o.target in self.finals:
                o = o._replace(target=self.initial)
            result.append(o)
        result = tuple(result)
        with self._lock:
            self._cache[key] = result
        return result

    def prob(self, m: frozenset[str], s) -> dict[frozenset[str], Fraction]:
        row: dict[frozenset[str], Fraction] = {}
        for o in self.outcomes(m, s):
            row[o.target] = row.get(o.target, Fraction(0)) + o.probability
        return row

    def transition_probability(self, m, s, m2) -> Fraction:
        return self.prob(frozenset(m), s).get(frozenset(m2), Fraction(0))

    def admissible(self, m, s) -> bool:
        return sum(o.probability for o in self.outcomes(m, s)) == 1

    def payoff(self, m, s) -> dict[str, Fraction]:
        """Utility of the chosen union step for every player (nature gets 0)."""
        return {p: step_utility(self.net, p, s) for p in self.players}

    def reward(self, m, s) -> dict[str, Fraction]:
        """Expected utility of the sub-step that fires after fair conflict resolution.

        Coincides with :meth:`payoff` whenever ``s`` is conflict free; this is
        the stage payoff used by every long-run analysis.
        """
        s = frozenset(s)
        key = ("rew", m, s)
        hit = self._cache.get(key)
        if hit is None:
            hit = {p: Fraction(0) for p in self.players}
            for o in self.outcomes(m, s):
                for p in self.players:
                    hit[p] += o.probability * step_utility(self.net, p, o.fired)
            self._cache[key] = hit
        return hit

    def owned_enabled(self, m, player) -> tuple[str, ...]:
        return self.available(m, player)[1:]


def build_base_game(a: AnnotatedNet, ss: StateSpace | None = None) -> StochasticGame:
    classes = conflict_sets(a.net)
    if ss is None:
        ss = explore(a)
    return StochasticGame(
        net=a,
        players=a.players,
        states=ss.states,
        initial=ss.initial,
        classes=classes,
        finals=ss.final_states,
    )


def build_restart_game(g: StochasticGame, initial: frozenset[str] | None = None) -> StochasticGame:
    initial = g.initial if initial is None else frozenset(initial)
    finals = frozenset(m for m in g.states if is_final(g.net, m))
    if initial in finals:
        raise InitialIsFinal("initial marking is final; nothing to restart")
    return StochasticGame(
        net=g.net,
        players=g.players,
        states=tuple(m for m in g.states if m not in finals),
        initial=initial,
        classes=g.classes,
        restart=True,
        finals=finals,
    )


def restart_game(a: AnnotatedNet, ss: StateSpace | None = None) -> StochasticGame:
    return build_restart_game(build_base_game(a, ss))


__all__ = [
    "IDLE",
    "NATURE",
    "Outcome",
    "StochasticGame",
    "build_base_game",
    "build_restart_game",
    "maximal_enabled_substeps",
    "restart_game",
    "transition_probability",
]
