import math
import threading
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from oracles import arcs_of, coin_flip_distribution
from petrigame import fixtures
from petrigame.corpus import generate_corpus
from petrigame.errors import InitialIsFinal
from petrigame.game import (
    IDLE,
    build_base_game,
    build_restart_game,
    maximal_enabled_substeps,
    restart_game,
    transition_probability,
)
from petrigame.net import NATURE, PetriNet, annotate, enabled, marking

half = Fraction(1, 2)


def all_games():
    nets = [f() for f in fixtures.FIXTURES.values()] + [c.net for c in generate_corpus()]
    games = []
    for a in nets:
        base = build_base_game(a)
        games.append(base)
        if base.finals and base.initial not in base.finals:
            games.append(build_restart_game(base))
    return games


GAMES = all_games()


def test_maximal_enabled_substeps(n1):
    assert maximal_enabled_substeps(n1, marking("p2"), {"t'", "t1"}) == [{"t'"}, {"t1"}]
    assert maximal_enabled_substeps(n1, marking("p2"), set()) == [frozenset()]
    assert maximal_enabled_substeps(n1, marking("p1"), {"t", "t'"}) == []


def test_transition_probability_coin_flip(n1):
    assert transition_probability(n1, marking("p2"), {"t'", "t1"}, marking("p1")) == half
    assert transition_probability(n1, marking("p2"), {"t'", "t1"}, marking("p3")) == half
    assert transition_probability(n1, marking("p0"), set(), marking("p0")) == 1


def test_inadmissible_ad_hoc_step(n1_base):
    # t' is not enabled at p1, so its conflict class cannot be resolved
    assert n1_base.prob(marking("p1"), {"t", "t'"}) == {}
    assert not n1_base.admissible(marking("p1"), {"t", "t'"})


def test_base_game_structure(n1_base):
    g = n1_base
    assert len(g.states) == 4
    assert g.players == ("a", "b", "c", NATURE)
    p2 = marking("p2")
    assert g.available(p2, "a") == (IDLE, "t1")
    assert g.available(p2, "c") == (IDLE, "t'")
    assert g.available(p2, "b") == (IDLE,)
    p3 = marking("p3")
    assert all(g.available(p3, p) == (IDLE,) for p in g.players)
    assert g.prob(p3, set()) == {p3: 1}
    assert g.payoff(p2, {"t1", "t'"}) == {"a": 2, "b": 0, "c": 3, NATURE: 0}


def test_expected_reward_of_conflicting_step(n1_base):
    # either t' (c: +1) or t1 (a: +2, c: +2) fires, each with probability 1/2
    assert n1_base.reward(marking("p2"), {"t1", "t'"}) == {"a": 1, "b": 0, "c": Fraction(3, 2), NATURE: 0}


def test_restart_game(n1_restart):
    g = n1_restart
    assert set(g.states) == {marking("p0"), marking("p1"), marking("p2")}
    assert g.prob(marking("p2"), {"t1"}) == {marking("p0"): 1}
    assert g.prob(marking("p2"), {"t1", "t'"}) == {marking("p0"): half, marking("p1"): half}


def test_restart_without_final_states_changes_nothing():
    a = annotate(PetriNet.build({"u": ({"a"}, {"b"}), "v": ({"b"}, {"a"})}), {"a"}, {"u": "r", "v": "r"})
    base = build_base_game(a)
    restarted = build_restart_game(base)
    assert restarted.states == base.states
    for m in base.states:
        for s in base.profiles(m):
            assert restarted.prob(m, s) == base.prob(m, s)


def test_restart_from_final_initial_rejected():
    a = annotate(PetriNet.build({"u": ({"a"}, {"b"})}), {"b"})
    with pytest.raises(InitialIsFinal):
        restart_game(a)


def test_probabilities_match_coin_flip_oracle():
    for g in GAMES:
        arcs = arcs_of(g.net)
        for m in g.states:
            for s in g.profiles(m):
                expected = coin_flip_distribution(arcs, m, s)
                if g.restart:
                    moved = {}
                    for m2, q in expected.items():
                        m2 = g.initial if m2 in g.finals else m2
                        moved[m2] = moved.get(m2, Fraction(0)) + q
                    expected = moved
                assert g.prob(m, s) == expected


@pytest.mark.parametrize("g", GAMES, ids=lambda g: f"{len(g.states)}states-{'restart' if g.restart else 'base'}")
def test_rows_are_stochastic(g):
    for m in g.states:
        for s in g.profiles(m):
            assert sum(g.prob(m, s).values()) == 1


@given(st.sampled_from(GAMES), st.data())
def test_substep_count_matches_product_of_class_sizes(g, data):
    m = data.draw(st.sampled_from(g.states))
    s = data.draw(st.sampled_from(sorted(g.profiles(m), key=sorted)))
    subs = maximal_enabled_substeps(g.net, m, s, g.classes)
    en = enabled(g.net.net, m)
    hit = [c & s for c in g.classes if c & s]
    if all(h <= en for h in hit):
        assert len(subs) == math.prod(len(h) for h in hit)


@given(st.sampled_from(GAMES), st.data())
def test_payoff_does_not_depend_on_state(g, data):
    m1 = data.draw(st.sampled_from(g.states))
    m2 = data.draw(st.sampled_from(g.states))
    s = data.draw(st.sampled_from(sorted(g.profiles(m1), key=sorted)))
    if g.admissible(m2, s):
        assert g.payoff(m1, s) == g.payoff(m2, s)


@given(st.sampled_from([g for g in GAMES if not g.restart]), st.data())
def test_restart_conserves_mass(base, data):
    if not base.finals or base.initial in base.finals:
        return
    restarted = build_restart_game(base)
    m = data.draw(st.sampled_from(restarted.states))
    s = data.draw(st.sampled_from(sorted(restarted.profiles(m), key=sorted)))
    assert sum(restarted.prob(m, s).values()) == sum(base.prob(m, s).values())


def test_concurrent_queries_agree(n1):
    g = build_base_game(n1)
    results = []

    def work():
        results.append([g.prob(m, s) for m in g.states for s in g.profiles(m)])

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(r == results[0] for r in results)
