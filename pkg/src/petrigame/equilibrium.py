"""Correlated ε-equilibrium checks and incentive alignment verdicts.

Deviation gains are exact: the deviating player faces an average-reward MDP
whose states are (game state, device state, signal vector) and whose kernels
fold in the other players' mixed actions.  The MDP is solved by multichain
policy iteration over ``Fraction``.
"""
from __future__ import annotations

import itertools
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import networkx as nx

from .chain import gain_and_bias, gains
from .errors import HypothesisViolated, SafetyViolation, SolverNonconvergence, UnsupportedDevice
from .game import IDLE, StochasticGame, build_base_game, build_restart_game
from .net import NATURE, AnnotatedNet, fire_step, is_extended_free_choice, workflow_shape
from .statespace import DEFAULT_BOUND, SoundnessReport, check_soundness, explore
from .strategy import (
    CorrelationDevice,
    PlayerStrategy,
    StrategyProfile,
    all_act_profile,
    own_signal,
    product_chain,
    simulate,
    trivial_device,
    uniform_profile,
)

DEFAULT_EPSILON = Fraction(1, 10**6)
DEFAULT_EFFORT = int(os.environ.get("PETRIGAME_EFFORT", 10))
MAX_POLICY_ITERATIONS = 10_000

PROPER_COMPLETION = "proper-completion"
FULL_LIVENESS = "full-liveness"
MODES = (PROPER_COMPLETION, FULL_LIVENESS)


@dataclass
class DeviationMDP:
    """Average-reward decision problem of one deviating player."""

    player: str
    nodes: list[tuple]  # (state, device state, signal vector)
    actions: list[tuple]  # available actions per node
    kernel: list[list[dict[int, Fraction]]]  # kernel[x][k] = successor distribution of action k
    reward: list[list[Fraction]]
    entry: dict[frozenset, dict[int, Fraction]]  # game state -> first-signal distribution


def deviation_mdp(
    g: StochasticGame, d: CorrelationDevice, sigma: StrategyProfile, player: str
) -> DeviationMDP:
    sigma.require_stationary()
    nodes: list[tuple] = []
    index: dict[tuple, int] = {}

    def add(node):
        if node not in index:
            index[node] = len(nodes)
            nodes.append(node)
        return index[node]

    entry = {}
    for s in g.states:
        entry[s] = {add((s, d.start, vec)): e for vec, e in d.emission[d.start].items()}
    others = [p for p in g.players if p != player]
    actions, kernel, reward = [], [], []
    i = 0
    while i < len(nodes):
        s, ds, vec = nodes[i]
        d2 = d.next_state(ds, vec)
        dists = [list(sigma.distribution(g, p, s, own_signal(vec, p)).items()) for p in others]
        acts = g.available(s, player)
        rows, rews = [], []
        for a in acts:
            row: dict[int, Fraction] = {}
            rew = Fraction(0)
            for combo in itertools.product(*dists):
                q = Fraction(1)
                for _, w in combo:
                    q *= w
                step = frozenset([t for t, _ in combo if t is not IDLE] + ([a] if a is not IDLE else []))
                rew += q * g.reward(s, step)[player]
                for o in g.outcomes(s, step):
                    for vec2, e in d.emission[d2].items():
                        j = add((o.target, d2, vec2))
                        row[j] = row.get(j, Fraction(0)) + q * o.probability * e
            rows.append(row)
            rews.append(rew)
        actions.append(acts)
        kernel.append(rows)
        reward.append(rews)
        i += 1
    return DeviationMDP(player, nodes, actions, kernel, reward, entry)


def _dot(row: Mapping[int, Fraction], v) -> Fraction:
    return sum((p * v[y] for y, p in row.items()), Fraction(0))


def solve_mdp(mdp: DeviationMDP, max_iterations: int = MAX_POLICY_ITERATIONS):
    """Multichain policy iteration; returns ``(gain per node, policy)``."""
    n = len(mdp.nodes)
    policy = [max(range(len(mdp.actions[x])), key=lambda k: (mdp.reward[x][k], -k)) for x in range(n)]
    seen = set()
    for _ in range(max_iterations):
        key = tuple(policy)
        if key in seen:
            raise SolverNonconvergence("policy iteration revisited a policy")
        seen.add(key)
        P = [mdp.kernel[x][policy[x]] for x in range(n)]
        r = [mdp.reward[x][policy[x]] for x in range(n)]
        g, h = gain_and_bias(P, r)
        changed = False
        new = list(policy)
        for x in range(n):
            vals = [_dot(row, g) for row in mdp.kernel[x]]
            best = max(vals)
            if vals[policy[x]] < best:
                new[x] = vals.index(best)
                changed = True
        if not changed:
            for x in range(n):
                vals = [_dot(row, g) for row in mdp.kernel[x]]
                best = max(vals)
                cand = [k for k in range(len(vals)) if vals[k] == best]
                score = {k: mdp.reward[x][k] + _dot(mdp.kernel[x][k], h) for k in cand}
                top = max(score.values())
                if score[policy[x]] < top:
                    new[x] = min(k for k in cand if score[k] == top)
                    changed = True
        if not changed:
            return g, policy
        policy = new
    raise SolverNonconvergence(f"no convergence within {max_iterations} policy iterations")


@dataclass
class DeviationGain:
    player: str
    best_response_value: Fraction
    profile_value: Fraction
    state: frozenset | None = None  # start state where the gain is largest
    strategy: PlayerStrategy | None = None  # a best response, when expressible
    heuristic: bool = False
    stderr: float | None = None

    @property
    def gain(self) -> Fraction:
        return self.best_response_value - self.profile_value


def profile_values(g: StochasticGame, d: CorrelationDevice, sigma: StrategyProfile) -> dict:
    """Long-run payoff vector of ``sigma`` from every game state."""
    chain = product_chain(g, d, sigma)
    vals = gains(chain.P, chain.rewards)
    return {s: dict(zip(g.players, vals[chain.node(s)])) for s in g.states}


def _policy_as_strategy(mdp: DeviationMDP, policy) -> PlayerStrategy | None:
    table: dict = {}
    for x, (s, _, vec) in enumerate(mdp.nodes):
        key = (s, own_signal(vec, mdp.player))
        act = mdp.actions[x][policy[x]]
        if table.setdefault(key, {act: Fraction(1)}) != {act: Fraction(1)}:
            return None
    return PlayerStrategy("idle", table)


def best_response_gain(
    g: StochasticGame,
    d: CorrelationDevice,
    sigma: StrategyProfile,
    player: str,
    values: dict | None = None,
) -> DeviationGain:
    """Exact long-run gain of the best unilateral deviation of ``player``.

    The gain is maximised over start states, as the equilibrium condition
    quantifies over all of them.
    """
    sigma.require_stationary()
    if player == NATURE:
        # nature's payoff is identically zero
        return DeviationGain(player, Fraction(0), Fraction(0), g.initial, sigma.strategy(player))
    if not d.reveals_all(player):
        raise UnsupportedDevice(
            f"signals to {player!r} do not reveal the signal vector; use estimate_deviation_gain"
        )
    if values is None:
        values = profile_values(g, d, sigma)
    mdp = deviation_mdp(g, d, sigma, player)
    opt, policy = solve_mdp(mdp)
    best = None
    for s in g.states:
        br = sum((e * opt[x] for x, e in mdp.entry[s].items()), Fraction(0))
        cand = DeviationGain(player, br, values[s][player], s)
        if best is None or cand.gain > best.gain:
            best = cand
    best.strategy = _policy_as_strategy(mdp, policy)
    return best


def best_response_by_enumeration(
    g: StochasticGame, d: CorrelationDevice, sigma: StrategyProfile, player: str
) -> dict[frozenset, Fraction]:
    """Best long-run value per start state over all pure (state, signal) policies.

    Exponential; meant as a cross-check on small games.
    """
    keys = []
    for s in g.states:
        signals = sorted({own_signal(v, player) for ds in d.reachable_states() for v in d.emission[ds]})
        for sig in signals:
            if len(g.available(s, player)) > 1:
                keys.append((s, sig))
    best = {s: None for s in g.states}
    for choice in itertools.product(*(g.available(s, player) for s, _ in keys)):
        table = {k: {a: Fraction(1)} for k, a in zip(keys, choice)}
        vals = profile_values(g, d, sigma.replace(player, PlayerStrategy("idle", table)))
        for s in g.states:
            v = vals[s][player]
            if best[s] is None or v > best[s]:
                best[s] = v
    return best


@dataclass
class EquilibriumCheck:
    ok: bool
    epsilon: Fraction
    gains: dict[str, DeviationGain]


def verify_epsilon_equilibrium(
    g: StochasticGame,
    d: CorrelationDevice,
    sigma: StrategyProfile,
    epsilon=DEFAULT_EPSILON,
) -> EquilibriumCheck:
    """Every player's exact long-run deviation gain is at most ``epsilon``.

    Cesàro averages of a finite chain converge, so a gain bound on the limit
    yields the required stage threshold for every larger ε.
    """
    epsilon = Fraction(epsilon)
    values = profile_values(g, d, sigma)
    out = {p: best_response_gain(g, d, sigma, p, values) for p in g.players}
    return EquilibriumCheck(all(x.gain <= epsilon for x in out.values()), epsilon, out)


def eventually_positive(
    g: StochasticGame, d: CorrelationDevice, sigma: StrategyProfile
) -> tuple[bool, dict[str, Fraction]]:
    """All roles (nature excluded) have a strictly positive limit payoff from the initial state."""
    vals = profile_values(g, d, sigma)[g.initial]
    return all(vals[p] > 0 for p in g.net.roles), vals


@dataclass
class SupportGraph:
    graph: nx.DiGraph  # product nodes, edges with positive probability
    labels: dict[int, frozenset[str]]  # transitions chosen with positive probability at a node
    nodes: list[tuple]

    def late(self, x: int) -> set[int]:
        """Nodes reachable from ``x`` that can also be reached arbitrarily late."""
        reach = nx.descendants(self.graph, x) | {x}
        sub = self.graph.subgraph(reach)
        cyclic = set()
        for comp in nx.strongly_connected_components(sub):
            if len(comp) > 1 or any(sub.has_edge(v, v) for v in comp):
                cyclic |= comp
        out = set(cyclic)
        for v in cyclic:
            out |= nx.descendants(sub, v)
        return out


def support_graph(g: StochasticGame, d: CorrelationDevice, sigma: StrategyProfile):
    chain = product_chain(g, d, sigma)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(len(chain.nodes)))
    labels: dict[int, frozenset[str]] = {}
    for x, moves in enumerate(chain.moves):
        chosen: set[str] = set()
        for mv in moves:
            if mv.probability > 0:
                graph.add_edge(x, mv.target)
                chosen |= mv.chosen
        labels[x] = frozenset(chosen)
    return chain, SupportGraph(graph, labels, chain.nodes)


@dataclass
class AlignmentVerdict:
    mode: str
    status: str  # "aligned" | "not-aligned" | "inconclusive"
    witness: tuple[CorrelationDevice, StrategyProfile] | None = None
    failures: list[dict] = field(default_factory=list)
    gains: dict[str, DeviationGain] = field(default_factory=dict)
    payoff: dict[str, Fraction] = field(default_factory=dict)
    note: str = ""
    heuristic: bool = False

    @property
    def aligned(self) -> bool:
        return self.status == "aligned"


def _is_restart(g: StochasticGame, state, mv) -> bool:
    """The move fires into a final marking that the restart game redirects."""
    return g.restart and mv.probability > 0 and fire_step(g.net.net, state, mv.fired) in g.finals


def check_alignment_witness(
    g: StochasticGame,
    d: CorrelationDevice,
    sigma: StrategyProfile,
    mode: str,
    epsilon=DEFAULT_EPSILON,
) -> AlignmentVerdict:
    """Check that ``(d, sigma)`` witnesses incentive alignment in ``mode``.

    Infinite-horizon history conditions are decided on the support graph: a
    positive-probability history of arbitrary length ends with a given move
    iff the move's source is reachable from a cycle.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    failures: list[dict] = []
    eq = verify_epsilon_equilibrium(g, d, sigma, epsilon)
    for p, dev in eq.gains.items():
        if dev.gain > eq.epsilon:
            failures.append({"kind": "equilibrium", "player": p, "gain": dev.gain, "state": dev.state})
    positive, payoff = eventually_positive(g, d, sigma)
    if not positive:
        failures.append(
            {"kind": "positivity", "players": [p for p in g.net.roles if payoff[p] <= 0]}
        )
    chain, sg = support_graph(g, d, sigma)
    if mode == PROPER_COMPLETION:
        late = sg.late(chain.node(g.initial))
        restarts = [x for x in late if any(_is_restart(g, chain.nodes[x][0], mv) for mv in chain.moves[x])]
        if not restarts:
            failures.append({"kind": "restart", "state": g.initial})
    else:
        missing: dict[str, list[frozenset]] = {}
        for s in g.states:
            late = sg.late(chain.node(s))
            covered = set()
            for x in late:
                covered |= sg.labels[x]
            for t in g.net.net.transitions:
                if t not in covered:
                    missing.setdefault(t, []).append(s)
        for t in sorted(missing):
            failures.append({"kind": "unsupported-transition", "transition": t, "from": missing[t]})
    status = "aligned" if not failures else "not-aligned"
    return AlignmentVerdict(mode, status, (d, sigma), failures, eq.gains, payoff)


def search_alignment(
    g: StochasticGame,
    mode: str,
    epsilon=DEFAULT_EPSILON,
    effort: int = DEFAULT_EFFORT,
) -> AlignmentVerdict:
    """Bounded search for a witness with the trivial device.

    Seeds: the uniform profile, then the deterministic all-act profile; from
    each seed up to ``effort`` rounds replace the player with the largest gain
    by one of its best responses.  A failed search is inconclusive, never a
    negative verdict.
    """
    d = trivial_device()
    tried = 0
    last = None
    for seed in (uniform_profile(g), all_act_profile(g)):
        sigma = seed
        for _ in range(max(effort, 1)):
            tried += 1
            verdict = check_alignment_witness(g, d, sigma, mode, epsilon)
            if verdict.aligned:
                verdict.note = f"witness found after {tried} candidate(s)"
                return verdict
            last = verdict
            worst = max(verdict.gains.values(), key=lambda x: x.gain)
            if worst.gain <= Fraction(epsilon) or worst.strategy is None:
                break
            sigma = sigma.replace(worst.player, worst.strategy)
    return AlignmentVerdict(
        mode,
        "inconclusive",
        failures=last.failures if last else [],
        gains=last.gains if last else {},
        payoff=last.payoff if last else {},
        note=f"effort exhausted after {tried} candidate(s); the search is incomplete",
    )


@dataclass
class BridgeResult:
    sound: bool
    aligned_full_liveness: bool
    soundness: SoundnessReport
    verdict: AlignmentVerdict

    @property
    def agree(self) -> bool:
        return self.sound == self.aligned_full_liveness


def theorem_hypotheses(a: AnnotatedNet, bound: int = DEFAULT_BOUND) -> list[str]:
    """Which preconditions of the soundness characterisation fail (empty if none)."""
    failures = []
    if len(a.roles) != 1:
        failures.append(f"expected exactly one role, found {len(a.roles)}")
    else:
        (role,) = a.roles
        unassigned = [t for t in a.net.transitions if a.assigned_role.get(t) != role]
        if unassigned:
            failures.append(f"transitions not assigned to {role!r}: {unassigned}")
        off = [t for t in a.net.transitions if a.utility_of(role, t) != 1]
        if off:
            failures.append(f"utility is not constantly 1 on {off}")
    if workflow_shape(a.net, a.initial, a.initial_place, a.final_place) is None:
        failures.append("not an elementary workflow net with initial marking [i]")
    if not is_extended_free_choice(a.net):
        failures.append("not extended free choice")
    try:
        explore(a, bound)
    except SafetyViolation:
        failures.append("not safe")
    return failures


def soundness_alignment_bridge(a: AnnotatedNet, bound: int = DEFAULT_BOUND) -> BridgeResult:
    """Decide soundness twice: classically, and as full-liveness alignment of
    the uniform witness in the restart game."""
    failures = theorem_hypotheses(a, bound)
    if failures:
        raise HypothesisViolated(failures)
    report = check_soundness(a, bound=bound)
    g = build_restart_game(build_base_game(a, explore(a, bound)))
    verdict = check_alignment_witness(g, trivial_device(), uniform_profile(g), FULL_LIVENESS)
    return BridgeResult(report.sound, verdict.aligned, report, verdict)


def decide_alignment(
    a: AnnotatedNet,
    mode: str,
    epsilon=DEFAULT_EPSILON,
    effort: int = DEFAULT_EFFORT,
    bound: int = DEFAULT_BOUND,
) -> AlignmentVerdict:
    """Search for a witness; settle inconclusive full-liveness searches by the
    soundness characterisation when its hypotheses hold."""
    g = build_restart_game(build_base_game(a, explore(a, bound)))
    verdict = search_alignment(g, mode, epsilon, effort)
    if verdict.status == "inconclusive" and mode == FULL_LIVENESS and not theorem_hypotheses(a, bound):
        bridge = soundness_alignment_bridge(a, bound)
        if not bridge.sound:
            verdict.status = "not-aligned"
            verdict.note = "net is unsound; by the soundness characterisation no witness exists"
    return verdict


@dataclass
class EstimatedGain:
    player: str
    gain: float  # max(0, best simulated improvement): a lower bound on the true gain
    stderr: float
    profile_value: float
    deviations: dict[str, tuple[float, float]]  # name -> (simulated improvement, stderr)
    heuristic: bool = True


def deviation_library(
    g: StochasticGame, d: CorrelationDevice, player: str, limit: int = 64
) -> dict[str, PlayerStrategy]:
    """Pure signal-ignoring stationary policies of ``player``, then signal-aware ones, up to ``limit``."""
    decision = [s for s in g.states if len(g.available(s, player)) > 1]
    lib: dict[str, PlayerStrategy] = {}
    for choice in itertools.product(*(g.available(s, player) for s in decision)):
        if len(lib) >= limit:
            return lib
        table = {(s, None): {a: Fraction(1)} for s, a in zip(decision, choice)}
        name = ",".join(f"{'/'.join(sorted(s))}:{a or 'idle'}" for s, a in zip(decision, choice))
        lib[name or "idle"] = PlayerStrategy("idle", table)
    signals = sorted({own_signal(v, player) for ds in d.reachable_states() for v in d.emission[ds]})
    if len(signals) > 1:
        keys = [(s, m) for s in decision for m in signals]
        for choice in itertools.product(*(g.available(s, player) for s, _ in keys)):
            if len(lib) >= limit:
                break
            table = {k: {a: Fraction(1)} for k, a in zip(keys, choice)}
            name = ",".join(f"{'/'.join(sorted(s))}|{m}:{a or 'idle'}" for (s, m), a in zip(keys, choice))
            lib.setdefault(name, PlayerStrategy("idle", table))
    return lib


def estimate_deviation_gain(
    g: StochasticGame,
    d: CorrelationDevice,
    sigma: StrategyProfile,
    player: str,
    library: Mapping[str, PlayerStrategy] | None = None,
    stages: int = 1000,
    trials: int = 2000,
    seed: int = 0,
    start=None,
) -> EstimatedGain:
    """Simulated gain of the best deviation in a finite library (heuristic)."""
    start = g.initial if start is None else frozenset(start)
    if library is None:
        library = deviation_library(g, d, player)
    base = simulate(g, d, start, sigma, stages, trials, seed)
    results: dict[str, tuple[float, float]] = {}
    for name, strat in library.items():
        dev = simulate(g, d, start, sigma.replace(player, strat), stages, trials, seed)
        diff = dev.mean[player] - base.mean[player]
        se = (dev.stderr[player] ** 2 + base.stderr[player] ** 2) ** 0.5
        results[name] = (diff, se)
    if results:
        name = max(results, key=lambda k: results[k][0])
        best, se = results[name]
    else:
        best, se = 0.0, 0.0
    return EstimatedGain(player, max(0.0, best), se, base.mean[player], results)

