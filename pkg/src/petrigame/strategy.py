"""Correlation devices, strategy profiles and the payoffs they induce.

Signal vectors are tuples of ``(player, signal)`` pairs sorted by player;
players that do not appear receive the neutral signal :data:`TOP`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence, Union

import numpy as np

from .chain import gains
from .errors import InvalidDistribution, MalformedHistory, NonStationaryStrategy
from .game import IDLE, StochasticGame
from .net import NATURE

TOP = "⊤"

SignalVector = tuple  # tuple[tuple[str, str], ...]
Action = Union[str, None]


def signal_vector(signals: Mapping[str, str] | None = None, **kw: str) -> SignalVector:
    merged = dict(signals or {}, **kw)
    return tuple(sorted((p, s) for p, s in merged.items() if s != TOP))


def own_signal(vec: SignalVector, player: str) -> str:
    for p, s in vec:
        if p == player:
            return s
    return TOP


def _check_distribution(dist: Mapping, what: str) -> dict:
    out = {}
    for k, v in dist.items():
        v = Fraction(v)
        if v < 0:
            raise InvalidDistribution(f"{what}: negative probability for {k!r}")
        if v:
            out[k] = v
    if sum(out.values()) != 1:
        raise InvalidDistribution(f"{what}: probabilities sum to {sum(out.values())}, not 1")
    return out


@dataclass(frozen=True, eq=False)
class CorrelationDevice:
    """Finite-state signal process; it never looks at the game state."""

    states: tuple[str, ...]
    start: str
    emission: Mapping[str, Mapping[SignalVector, Fraction]]
    successor: Mapping[tuple[str, SignalVector], str] = field(default_factory=dict)

    def __post_init__(self):
        if self.start not in self.states:
            raise InvalidDistribution(f"start state {self.start!r} is not a device state")
        clean = {}
        for d in self.states:
            clean[d] = _check_distribution(self.emission.get(d, {}), f"emission of {d!r}")
        object.__setattr__(self, "emission", clean)
        for (d, _), d2 in self.successor.items():
            if d not in self.states or d2 not in self.states:
                raise InvalidDistribution("successor map mentions unknown device states")

    def next_state(self, d: str, vec: SignalVector) -> str:
        return self.successor.get((d, vec), d)

    def reachable_states(self) -> list[str]:
        seen, todo = [self.start], [self.start]
        while todo:
            d = todo.pop()
            for vec in self.emission[d]:
                d2 = self.next_state(d, vec)
                if d2 not in seen:
                    seen.append(d2)
                    todo.append(d2)
        return seen

    def reveals_all(self, player: str) -> bool:
        """True when ``player``'s own signal determines the whole signal vector.

        Then the player can track the device state and everything the other
        players condition on, which is what exact best responses need.
        """
        for d in self.reachable_states():
            own = [own_signal(vec, player) for vec in self.emission[d]]
            if len(set(own)) != len(own):
                return False
        return True

    @property
    def is_trivial(self) -> bool:
        return all(list(e) == [()] for e in self.emission.values())


def trivial_device() -> CorrelationDevice:
    """One state, every player always receives ⊤."""
    return CorrelationDevice(("0",), "0", {"0": {(): Fraction(1)}})


def iid_device(dist: Mapping[SignalVector, object]) -> CorrelationDevice:
    """Draw a fresh signal vector from ``dist`` at every stage."""
    return CorrelationDevice(("0",), "0", {"0": dict(dist)})


@dataclass(frozen=True)
class PlayerStrategy:
    """Stationary strategy: a table keyed by (state, own signal) plus a default rule.

    A table key with signal ``None`` matches every signal.  Default rules:
    ``act`` picks uniformly among the player's enabled transitions (idling
    only when none is enabled), ``first`` fires the lexicographically first
    one, ``idle`` always idles and ``any`` is uniform over all available
    actions including idle.
    """

    default: str = "act"
    table: Mapping[tuple[frozenset, str | None], Mapping[Action, Fraction]] = field(
        default_factory=dict
    )

    def rule(self, game: StochasticGame, player: str, state, signal: str) -> dict[Action, Fraction]:
        entry = self.table.get((state, signal))
        if entry is None:
            entry = self.table.get((state, None))
        if entry is not None:
            return dict(entry)
        own = game.owned_enabled(state, player)
        if self.default == "idle" or not own:
            return {IDLE: Fraction(1)}
        if self.default == "first":
            return {own[0]: Fraction(1)}
        if self.default == "act":
            return {t: Fraction(1, len(own)) for t in own}
        if self.default == "any":
            avail = game.available(state, player)
            return {a: Fraction(1, len(avail)) for a in avail}
        raise ValueError(f"unknown default rule {self.default!r}")


class Observation(NamedTuple):
    """What one player has seen so far: past states, own signals, full profiles."""

    states: tuple
    signals: tuple[str, ...]
    profiles: tuple[frozenset, ...]

    @property
    def state(self):
        return self.states[-1]

    @property
    def signal(self):
        return self.signals[-1]


@dataclass(frozen=True)
class ObservationStrategy:
    """General strategy mapping full observations to action distributions.

    Only the simulator can evaluate these.
    """

    fn: Callable[[Observation], Mapping[Action, object]]


@dataclass(frozen=True)
class StrategyProfile:
    strategies: Mapping[str, PlayerStrategy | ObservationStrategy] = field(default_factory=dict)

    def strategy(self, player: str):
        s = self.strategies.get(player)
        if s is None:
            return PlayerStrategy("any" if player == NATURE else "idle")
        return s

    @property
    def stationary(self) -> bool:
        return all(isinstance(s, PlayerStrategy) for s in self.strategies.values())

    def require_stationary(self) -> None:
        if not self.stationary:
            raise NonStationaryStrategy("exact analysis needs (state, signal)-stationary strategies")

    def distribution(self, game: StochasticGame, player: str, state, signal: str) -> dict[Action, Fraction]:
        s = self.strategy(player)
        if not isinstance(s, PlayerStrategy):
            raise NonStationaryStrategy(player)
        dist = _check_distribution(s.rule(game, player, state, signal), f"strategy of {player!r}")
        avail = game.available(state, player)
        bad = [a for a in dist if a not in avail]
        if bad:
            raise InvalidDistribution(f"{player!r} puts mass on unavailable actions {bad} at {sorted(state)}")
        return dist

    def replace(self, player: str, strategy) -> StrategyProfile:
        return StrategyProfile({**self.strategies, player: strategy})


def uniform_profile(game: StochasticGame) -> StrategyProfile:
    """Every role picks uniformly among its enabled transitions."""
    return StrategyProfile({p: PlayerStrategy("act") for p in game.net.roles})


def all_act_profile(game: StochasticGame) -> StrategyProfile:
    """Every role deterministically fires its first enabled transition."""
    return StrategyProfile({p: PlayerStrategy("first") for p in game.net.roles})


def idle_profile(game: StochasticGame, players: Iterable[str] | None = None, base=None) -> StrategyProfile:
    """``base`` (default: uniform) with ``players`` (default: all roles) idling."""
    prof = base or uniform_profile(game)
    for p in game.net.roles if players is None else players:
        prof = prof.replace(p, PlayerStrategy("idle"))
    return prof


def joint_profiles(game: StochasticGame, sigma: StrategyProfile, state, vec: SignalVector):
    """Yield ``(union step, probability, per-player actions)`` for one stage."""
    per_player = [
        list(sigma.distribution(game, p, state, own_signal(vec, p)).items()) for p in game.players
    ]
    for combo in itertools.product(*per_player):
        prob = Fraction(1)
        for _, q in combo:
            prob *= q
        actions = tuple(a for a, _ in combo)
        yield frozenset(a for a in actions if a is not IDLE), prob, actions


class Move(NamedTuple):
    probability: Fraction
    signal: SignalVector
    chosen: frozenset
    fired: frozenset
    target: int


@dataclass
class ProductChain:
    """Markov chain over (game state, device state) induced by a stationary profile."""

    game: StochasticGame
    device: CorrelationDevice
    nodes: list[tuple[frozenset, str]]
    index: dict[tuple[frozenset, str], int]
    moves: list[list[Move]]
    P: list[dict[int, Fraction]]
    rewards: list[list[Fraction]]  # expected stage reward per node, in game.players order

    def node(self, state, dstate: str | None = None) -> int:
        return self.index[(frozenset(state), self.device.start if dstate is None else dstate)]


def product_chain(
    game: StochasticGame,
    device: CorrelationDevice,
    sigma: StrategyProfile,
    roots: Iterable | None = None,
) -> ProductChain:
    sigma.require_stationary()
    if roots is None:
        roots = game.states
    nodes: list[tuple[frozenset, str]] = []
    index: dict = {}

    def add(node):
        if node not in index:
            index[node] = len(nodes)
            nodes.append(node)
        return index[node]

    for s in roots:
        add((frozenset(s), device.start))
    moves: list[list[Move]] = []
    P: list[dict[int, Fraction]] = []
    rewards: list[list[Fraction]] = []
    i = 0
    while i < len(nodes):
        state, d = nodes[i]
        row: dict[int, Fraction] = {}
        node_moves = []
        rew = [Fraction(0)] * len(game.players)
        for vec, e in device.emission[d].items():
            d2 = device.next_state(d, vec)
            for step, pa, _ in joint_profiles(game, sigma, state, vec):
                w = e * pa
                r = game.reward(state, step)
                for k, p in enumerate(game.players):
                    rew[k] += w * r[p]
                for o in game.outcomes(state, step):
                    j = add((o.target, d2))
                    q = w * o.probability
                    node_moves.append(Move(q, vec, step, o.fired, j))
                    row[j] = row.get(j, Fraction(0)) + q
        moves.append(node_moves)
        P.append(row)
        rewards.append(rew)
        i += 1
    return ProductChain(game, device, nodes, index, moves, P, rewards)


def _as_vector(game: StochasticGame, values: Sequence[Fraction]) -> dict[str, Fraction]:
    return dict(zip(game.players, values))


def history_probability(
    g: StochasticGame,
    d: CorrelationDevice,
    start,
    sigma: StrategyProfile,
    h: Sequence,
) -> Fraction:
    """Probability of ``h = (s1, m1, a1, ..., s_n, m_n)`` from ``start``.

    States are markings, signals are signal vectors, profiles are union steps.
    """
    if len(h) < 2 or (len(h) - 2) % 3:
        raise MalformedHistory(f"history of length {len(h)} is not of the form s,m,(a,s,m)*")
    states = set(g.states)
    for k in range(0, len(h), 3):
        if frozenset(h[k]) not in states:
            raise MalformedHistory(f"unknown state {sorted(h[k])}")
    if frozenset(h[0]) != frozenset(start):
        return Fraction(0)
    dstate = d.start
    prob = d.emission[dstate].get(tuple(h[1]), Fraction(0))
    for k in range(2, len(h), 3):
        state, vec, step = frozenset(h[k - 2]), tuple(h[k - 1]), frozenset(h[k])
        nxt, nvec = frozenset(h[k + 1]), tuple(h[k + 2])
        g.net.net.check_step(step)
        for p in g.players:
            mine = [t for t in step if g.net.owner(t) == p]
            if len(mine) > 1:
                raise MalformedHistory(f"player {p!r} fires {sorted(mine)} in one stage")
            action = mine[0] if mine else IDLE
            prob *= sigma.distribution(g, p, state, own_signal(vec, p)).get(action, Fraction(0))
        prob *= g.transition_probability(state, step, nxt)
        dstate = d.next_state(dstate, vec)
        prob *= d.emission[dstate].get(nvec, Fraction(0))
        if prob == 0:
            return prob
    return prob


def mean_expected_payoff(
    g: StochasticGame,
    d: CorrelationDevice,
    start,
    sigma: StrategyProfile,
    n: int,
) -> dict[str, Fraction]:
    """Average expected stage payoff over the first ``n`` stages, exactly."""
    if n < 1:
        raise ValueError("n must be at least 1")
    chain = product_chain(g, d, sigma, roots=[start])
    mu = {chain.node(start): Fraction(1)}
    total = [Fraction(0)] * len(g.players)
    for _ in range(n):
        nxt: dict[int, Fraction] = {}
        for x, px in mu.items():
            r = chain.rewards[x]
            for k in range(len(total)):
                total[k] += px * r[k]
            for y, q in chain.P[x].items():
                nxt[y] = nxt.get(y, Fraction(0)) + px * q
        mu = nxt
    return _as_vector(g, [v / n for v in total])


def longrun_average_payoff(
    g: StochasticGame,
    d: CorrelationDevice,
    sigma: StrategyProfile,
    start=None,
) -> dict[str, Fraction]:
    """Limit of :func:`mean_expected_payoff` as ``n`` grows, from ``start``."""
    start = g.initial if start is None else frozenset(start)
    chain = product_chain(g, d, sigma, roots=[start])
    return _as_vector(g, gains(chain.P, chain.rewards)[chain.node(start)])


@dataclass
class SimulationResult:
    mean: dict[str, float]
    stderr: dict[str, float]
    stages: int
    trials: int
    seed: int


def _simulate_stationary(chain: ProductChain, root: int, n: int, trials: int, rng) -> np.ndarray:
    g = chain.game
    k = max(len(m) for m in chain.moves)
    nodes = len(chain.nodes)
    cum = np.full((nodes, k), 2.0)
    target = np.zeros((nodes, k), dtype=np.int64)
    util = np.zeros((nodes, k, len(g.players)))
    for x, moves in enumerate(chain.moves):
        acc = Fraction(0)
        for j, mv in enumerate(moves):
            acc += mv.probability
            cum[x, j] = float(acc)
            target[x, j] = mv.target
            for c, p in enumerate(g.players):
                util[x, j, c] = float(sum(g.net.utility_of(p, t) for t in mv.fired)) if p != NATURE else 0.0
        cum[x, len(moves) - 1] = 1.0
    current = np.full(trials, root, dtype=np.int64)
    totals = np.zeros((trials, len(g.players)))
    for _ in range(n):
        u = rng.random(trials)
        pick = (u[:, None] >= cum[current]).sum(axis=1)
        totals += util[current, pick]
        current = target[current, pick]
    return totals / n


def _sample(rng, dist: Mapping) -> object:
    items = sorted(dist.items(), key=lambda kv: repr(kv[0]))
    u = rng.random()
    acc = 0.0
    for k, p in items:
        acc += float(p)
        if u < acc:
            return k
    return items[-1][0]


def _simulate_general(g, d, start, sigma, n, trials, rng) -> np.ndarray:
    totals = np.zeros((trials, len(g.players)))
    for trial in range(trials):
        state, dstate = frozenset(start), d.start
        seen_states: list = []
        seen_signals: list[list[str]] = [[] for _ in g.players]
        profiles: list[frozenset] = []
        for _ in range(n):
            vec = _sample(rng, d.emission[dstate])
            seen_states.append(state)
            step_actions = []
            for c, p in enumerate(g.players):
                seen_signals[c].append(own_signal(vec, p))
                strat = sigma.strategy(p)
                if isinstance(strat, ObservationStrategy):
                    obs = Observation(tuple(seen_states), tuple(seen_signals[c]), tuple(profiles))
                    dist = _check_distribution(strat.fn(obs), f"strategy of {p!r}")
                else:
                    dist = sigma.distribution(g, p, state, own_signal(vec, p))
                step_actions.append(_sample(rng, dist))
            step = frozenset(a for a in step_actions if a is not IDLE)
            outs = g.outcomes(state, step)
            o = _sample(rng, {i: out.probability for i, out in enumerate(outs)})
            fired = outs[o].fired
            for c, p in enumerate(g.players):
                if p != NATURE:
                    totals[trial, c] += float(sum(g.net.utility_of(p, t) for t in fired))
            profiles.append(step)
            state = outs[o].target
            dstate = d.next_state(dstate, vec)
    return totals / n


def simulate(
    g: StochasticGame,
    d: CorrelationDevice,
    start,
    sigma: StrategyProfile,
    n: int,
    trials: int,
    seed: int = 0,
) -> SimulationResult:
    """Monte Carlo estimate of the ``n``-stage mean payoff with standard errors."""
    if trials < 1 or n < 1:
        raise ValueError("stages and trials must be positive")
    rng = np.random.default_rng(seed)
    start = frozenset(start)
    if sigma.stationary:
        chain = product_chain(g, d, sigma, roots=[start])
        per_trial = _simulate_stationary(chain, chain.node(start), n, trials, rng)
    else:
        per_trial = _simulate_general(g, d, start, sigma, n, trials, rng)
    mean = per_trial.mean(axis=0)
    se = per_trial.std(axis=0, ddof=1) / np.sqrt(trials) if trials > 1 else np.zeros(len(g.players))
    return SimulationResult(
        mean={p: float(v) for p, v in zip(g.players, mean)},
        stderr={p: float(v) for p, v in zip(g.players, se)},
        stages=n,
        trials=trials,
        seed=seed,
    )
