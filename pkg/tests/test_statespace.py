import pytest
from hypothesis import given, strategies as st

from oracles import arcs_of, reachable
from petrigame import fixtures
from petrigame.errors import NotAWorkflowNet, SafetyViolation, StateSpaceExceeded
from petrigame.net import PetriNet, annotate, marking
from petrigame.statespace import check_soundness, explore, is_safe


def two_producers():
    net = PetriNet.build({"split": ({"i"}, {"a", "b"}), "u": ({"a"}, {"c"}), "v": ({"b"}, {"c"})})
    return annotate(net, {"i"})


def test_explore_running_example(n1):
    ss = explore(n1)
    assert set(ss.states) == {marking("p0"), marking("p1"), marking("p2"), marking("p3")}
    assert ss.states[0] == marking("p0")
    assert ss.final_states == {marking("p3")}
    assert ss.edges[(marking("p2"), "t'")] == marking("p1")


def test_explore_single_transition():
    a = annotate(PetriNet.build({"t": ({"i"}, {"o"})}), {"i"})
    assert set(explore(a).states) == {marking("i"), marking("o")}


def test_unsafe_net_detected():
    with pytest.raises(SafetyViolation):
        explore(two_producers())
    assert not is_safe(two_producers())
    assert is_safe(fixtures.n1())


def test_net_without_transitions_is_safe():
    a = annotate(PetriNet.build({}, places={"i"}), {"i"})
    assert is_safe(a)
    assert explore(a).states == (marking("i"),)


def test_bound_exceeded(n1):
    with pytest.raises(StateSpaceExceeded):
        explore(n1, bound=3)
    assert len(explore(n1, bound=4).states) == 4


def test_soundness_of_fixtures():
    w1 = check_soundness(fixtures.w1())
    assert w1.sound and w1.states == 4
    w2 = check_soundness(fixtures.w2())
    assert not w2.no_dead_transitions and not w2.sound
    assert w2.dead_transitions == ["t_b"]
    single = annotate(PetriNet.build({"t": ({"i"}, {"o"})}), {"i"})
    assert check_soundness(single).sound


def test_soundness_counterexamples():
    deadlock = PetriNet.build(
        {"x1": ({"i"}, {"a"}), "x2": ({"i"}, {"b"}), "join": ({"a", "b"}, {"o"})}
    )
    rep = check_soundness(annotate(deadlock, {"i"}))
    assert not rep.option_to_complete
    assert set(rep.stuck_markings) == {marking("i"), marking("a"), marking("b")}
    assert rep.dead_transitions == ["join"]


def test_improper_completion_detected():
    net = PetriNet.build(
        {"split": ({"i"}, {"a", "r"}), "fin": ({"a"}, {"o"}), "stuck": ({"r", "z"}, {"o"})}
    )
    rep = check_soundness(annotate(net, {"i"}))
    assert not rep.proper_completion
    assert marking("o", "r") in rep.improper_markings
    assert not rep.option_to_complete


def test_not_a_workflow_net(n1):
    two_sinks = annotate(PetriNet.build({"t": ({"i"}, {"o1", "o2"})}), {"i"})
    with pytest.raises(NotAWorkflowNet):
        check_soundness(two_sinks)


def test_exploration_matches_bfs_oracle_on_corpus(corpus):
    for item in corpus:
        assert set(explore(item.net).states) == reachable(arcs_of(item.net), item.net.initial)


def test_option_to_complete_implies_proper_completion(corpus):
    # the implication holds for every safe workflow net; the corpus has no counterexample
    for item in corpus:
        rep = check_soundness(item.net)
        if rep.option_to_complete:
            assert rep.proper_completion, item.name


@given(st.integers(min_value=0, max_value=10_000))
def test_option_to_complete_implies_proper_completion_random(seed):
    import random

    from petrigame.corpus import DEFECTS, random_workflow_net

    rng = random.Random(seed)
    a = random_workflow_net(rng, depth=2, defect=rng.choice((None,) + DEFECTS))
    try:
        rep = check_soundness(a, bound=400)
    except (StateSpaceExceeded, SafetyViolation):
        return
    if rep.option_to_complete:
        assert rep.proper_completion
