"""Acceptance criteria, one check each.

Every check prints a single ``criterion N: PASS|FAIL`` line; under pytest the
lines are also collected into the terminal summary.  Run this file directly
to get just the ten lines.
"""
from __future__ import annotations

import itertools
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from oracles import idling, longrun_payoff, uniform_choice  # noqa: E402
from petrigame import fixtures  # noqa: E402
from petrigame.corpus import generate_corpus  # noqa: E402
from petrigame.equilibrium import (  # noqa: E402
    DEFAULT_EPSILON,
    FULL_LIVENESS,
    PROPER_COMPLETION,
    best_response_by_enumeration,
    best_response_gain,
    check_alignment_witness,
    profile_values,
    soundness_alignment_bridge,
    verify_epsilon_equilibrium,
)
from petrigame.game import build_base_game, build_restart_game, restart_game  # noqa: E402
from petrigame.net import marking  # noqa: E402
from petrigame.statespace import check_soundness  # noqa: E402
from petrigame.strategy import (  # noqa: E402
    all_act_profile,
    history_probability,
    idle_profile,
    longrun_average_payoff,
    signal_vector,
    simulate,
    trivial_device,
    uniform_profile,
)

P0, P1, P2, P3 = (marking(p) for p in ("p0", "p1", "p2", "p3"))
D = trivial_device()
ALL_ACT = (Fraction(1, 5), Fraction(2, 5), Fraction(3, 5))
C_IDLES = (Fraction(1, 3), Fraction(1, 3), Fraction(2, 3))


def n1_games():
    a = fixtures.n1()
    base = build_base_game(a)
    return a, base, build_restart_game(base)


def criterion_1():
    _, base, restart = n1_games()
    got_base = base.prob(P2, {"t'", "t1"})
    got_restart = restart.prob(P2, {"t'", "t1"})
    half = Fraction(1, 2)
    ok = got_base == {P1: half, P3: half} and got_restart == {P1: half, P0: half}
    return ok, f"base {fmt(got_base)}, restart {fmt(got_restart)}"


def criterion_2():
    _, base, restart = n1_games()
    games = [base, restart]
    for item in generate_corpus():
        g = build_base_game(item.net)
        if len(g.states) <= 64:
            games += [g, build_restart_game(g)]
    rows = bad = 0
    for g in games:
        for m in g.states:
            for s in g.profiles(m):
                rows += 1
                bad += sum(g.prob(m, s).values()) != 1
    return bad == 0, f"{rows} rows in {len(games)} games, {bad} not summing to 1"


def criterion_3():
    _, _, g = n1_games()
    tops = signal_vector()
    totals = {}
    for name, sigma in (("all-act", all_act_profile(g)), ("c-idles", fixtures.c_idles(g))):
        for n in range(1, 5):
            total = Fraction(0)
            for path in itertools.product(g.states, repeat=n - 1):
                states = (P0,) + path
                for steps in itertools.product(*(list(g.profiles(s)) for s in states[:-1])):
                    h = [P0, tops]
                    for step, nxt in zip(steps, states[1:]):
                        h += [step, nxt, tops]
                    total += history_probability(g, D, P0, sigma, h)
            totals[(name, n)] = total
    ok = all(v == 1 for v in totals.values())
    return ok, "sums " + ", ".join(f"{k[0]} n={k[1]}: {v}" for k, v in totals.items())


def criterion_4():
    a, _, g = n1_games()
    act = longrun_average_payoff(g, D, all_act_profile(g))
    idle_c = longrun_average_payoff(g, D, fixtures.c_idles(g))
    act_v = tuple(act[r] for r in a.roles)
    idle_v = tuple(idle_c[r] for r in a.roles)
    oracle_act = tuple(longrun_payoff(a, uniform_choice(a))[r] for r in a.roles)
    oracle_idle = tuple(longrun_payoff(a, idling(uniform_choice(a), "c"))[r] for r in a.roles)
    ok = act_v == ALL_ACT == oracle_act and idle_v == C_IDLES == oracle_idle
    return ok, f"all-act {fmt(act_v)} (oracle {fmt(oracle_act)}), c-idles {fmt(idle_v)} (oracle {fmt(oracle_idle)})"


def criterion_5():
    _, _, g = n1_games()
    gain_c = best_response_gain(g, D, all_act_profile(g), "c").gain
    idle_gains = {p: best_response_gain(g, D, fixtures.c_idles(g), p).gain for p in g.players}
    rejects = not verify_epsilon_equilibrium(g, D, all_act_profile(g), DEFAULT_EPSILON).ok
    accepts = verify_epsilon_equilibrium(g, D, fixtures.c_idles(g), DEFAULT_EPSILON).ok
    ok = gain_c == Fraction(1, 15) and set(idle_gains.values()) == {0} and rejects and accepts
    return ok, f"c gain vs all-act {gain_c}, c-idles gains {fmt(idle_gains)}, rejects all-act {rejects}, accepts c-idles {accepts}"


def criterion_6():
    _, _, g = n1_games()
    sigma = fixtures.c_idles(g)
    proper = check_alignment_witness(g, D, sigma, PROPER_COMPLETION)
    full = check_alignment_witness(g, D, sigma, FULL_LIVENESS)
    unsupported = [f["transition"] for f in full.failures if f["kind"] == "unsupported-transition"]
    ok = proper.aligned and not full.aligned and unsupported == ["t'"]
    return ok, f"proper completion {proper.status}, full liveness {full.status} (unsupported {unsupported})"


def criterion_7():
    start = time.perf_counter()
    corpus = generate_corpus()
    results = [(item, soundness_alignment_bridge(item.net)) for item in corpus]
    elapsed = time.perf_counter() - start
    unsound = sum(not r.sound for _, r in results)
    agree = sum(r.agree for _, r in results)
    ok = len(corpus) >= 20 and unsound >= 5 and agree == len(corpus) and elapsed < 60
    return ok, f"{agree}/{len(corpus)} agree, {unsound} unsound, {elapsed:.1f}s"


def criterion_8():
    corpus = generate_corpus()
    checked = counter = 0
    for item in corpus:
        rep = check_soundness(item.net)
        if rep.option_to_complete:
            checked += 1
            counter += not rep.proper_completion
    return counter == 0, f"{checked} nets with option to complete, {counter} counterexamples"


def within(sim, exact, players):
    return all(abs(sim.mean[p] - float(exact[k])) <= 3 * sim.stderr[p] for k, p in enumerate(players))


def criterion_9():
    a, _, g = n1_games()
    roles = list(a.roles)
    lines, ok = [], True
    for name, sigma, exact in (
        ("all-act", all_act_profile(g), ALL_ACT),
        ("c-idles", fixtures.c_idles(g), C_IDLES),
    ):
        sim = simulate(g, D, P0, sigma, 1000, 10_000, seed=0)
        good = within(sim, exact, roles)
        ok &= good
        lines.append(
            f"{name} {'ok' if good else 'off'}: mean {[round(sim.mean[p], 5) for p in roles]} "
            f"se {[float(f'{sim.stderr[p]:.1g}') for p in roles]}"
        )
    ab = restart_game(fixtures.alice_bob())
    expected = fixtures.alice_bob_expected()
    sim = simulate(ab, fixtures.alice_bob_device(), ab.initial, fixtures.alice_bob_obedient(ab), 1000, 10_000, seed=0)
    good = within(sim, [expected["bob"], expected["alice"]], ["bob", "alice"])
    ok &= good
    lines.append(f"alice/bob {'ok' if good else 'off'}: bob {sim.mean['bob']:.5f}, alice {sim.mean['alice']:.5f}")
    return ok, "; ".join(lines)


def criterion_10():
    games = []
    for make in fixtures.FIXTURES.values():
        a = make()
        games += [build_base_game(a), restart_game(a)]
    games += [build_base_game(item.net) for item in generate_corpus()]
    games = [g for g in games if len(g.states) <= 5]
    compared = mismatches = 0
    for g in games:
        device = D
        profiles = [uniform_profile(g), all_act_profile(g), idle_profile(g)]
        if "c" in g.net.roles:
            profiles.append(fixtures.c_idles(g))
        if "alice" in g.net.roles and g.restart:
            device = fixtures.alice_bob_device()
            profiles.append(fixtures.alice_bob_obedient(g))
        for sigma in profiles:
            values = profile_values(g, device, sigma)
            for p in g.net.roles:
                dev = best_response_gain(g, device, sigma, p, values)
                brute = best_response_by_enumeration(g, device, sigma, p)
                compared += 1
                mismatches += dev.gain != max(brute[s] - values[s][p] for s in g.states)
    return mismatches == 0 and compared > 0, f"{compared} best responses in {len(games)} games, {mismatches} mismatches"


CRITERIA = {
    1: ("fair-conflict coin flip", criterion_1),
    2: ("row-stochasticity", criterion_2),
    3: ("history-measure normalization", criterion_3),
    4: ("long-run payoffs", criterion_4),
    5: ("equilibrium gap", criterion_5),
    6: ("alignment verdicts", criterion_6),
    7: ("soundness/alignment agreement on corpus", criterion_7),
    8: ("option to complete implies proper completion", criterion_8),
    9: ("Monte Carlo consistency", criterion_9),
    10: ("best-response oracle", criterion_10),
}


def fmt(obj) -> str:
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{sorted(k) if isinstance(k, frozenset) else k}: {v}" for k, v in obj.items()) + "}"
    return "(" + ", ".join(str(x) for x in obj) + ")"


def run(number: int) -> tuple[bool, str]:
    title, check = CRITERIA[number]
    ok, detail = check()
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} [{title}] {detail}"
    print(line)
    return ok, line


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_acceptance(number, acceptance_lines):
    ok, line = run(number)
    acceptance_lines.append(line)
    assert ok, line


if __name__ == "__main__":
    results = [run(k)[0] for k in sorted(CRITERIA)]
    sys.exit(0 if all(results) else 1)
