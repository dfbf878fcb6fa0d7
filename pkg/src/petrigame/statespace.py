"""Reachability graphs of safe nets and the classical soundness checks."""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field

from .errors import NotAWorkflowNet, SafetyViolation, StateSpaceExceeded
from .net import AnnotatedNet, WorkflowShape, enabled, fire_step, workflow_shape

DEFAULT_BOUND = int(os.environ.get("PETRIGAME_BOUND", 1_000_000))


def sort_key(m: frozenset[str]) -> tuple:
    return (len(m), sorted(m))


@dataclass(frozen=True, eq=False)
class StateSpace:
    states: tuple[frozenset[str], ...]  # breadth-first discovery order
    edges: dict[tuple[frozenset[str], str], frozenset[str]]  # (marking, transition) -> marking
    initial: frozenset[str]
    final_states: frozenset[frozenset[str]] = field(default_factory=frozenset)

    def successors(self, m: frozenset[str]) -> list[tuple[str, frozenset[str]]]:
        return [(t, m2) for (m1, t), m2 in self.edges.items() if m1 == m]

    @property
    def fired_transitions(self) -> frozenset[str]:
        return frozenset(t for (_, t) in self.edges)


def is_final(a: AnnotatedNet, m: frozenset[str]) -> bool:
    """No place of ``m`` feeds any transition."""
    return all(not (m & a.net.pre[t]) for t in a.net.transitions)


def explore(a: AnnotatedNet, bound: int = DEFAULT_BOUND) -> StateSpace:
    """Breadth-first closure of the initial marking under single firings.

    Raises SafetyViolation as soon as some reachable firing would double a
    token, and StateSpaceExceeded once more than ``bound`` markings are seen.
    """
    if bound < 1:
        raise ValueError("bound must be at least 1")
    net = a.net
    seen = {a.initial}
    order = [a.initial]
    edges: dict[tuple[frozenset[str], str], frozenset[str]] = {}
    queue = deque([a.initial])
    while queue:
        m = queue.popleft()
        for t in sorted(enabled(net, m)):
            m2 = fire_step(net, m, {t})
            edges[(m, t)] = m2
            if m2 not in seen:
                if len(seen) >= bound:
                    raise StateSpaceExceeded(f"more than {bound} reachable markings")
                seen.add(m2)
                order.append(m2)
                queue.append(m2)
    finals = frozenset(m for m in order if is_final(a, m))
    return StateSpace(tuple(order), edges, a.initial, finals)


def is_safe(a: AnnotatedNet, bound: int = DEFAULT_BOUND) -> bool:
    try:
        explore(a, bound)
    except SafetyViolation:
        return False
    return True


@dataclass
class SoundnessReport:
    option_to_complete: bool
    proper_completion: bool
    no_dead_transitions: bool
    states: int
    # counterexamples: markings that cannot complete, improper markings, dead transitions
    stuck_markings: list[frozenset[str]] = field(default_factory=list)
    improper_markings: list[frozenset[str]] = field(default_factory=list)
    dead_transitions: list[str] = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return self.option_to_complete and self.proper_completion and self.no_dead_transitions


def check_soundness(
    a: AnnotatedNet,
    shape: WorkflowShape | None = None,
    bound: int = DEFAULT_BOUND,
) -> SoundnessReport:
    if shape is None:
        shape = workflow_shape(a.net, a.initial, a.initial_place, a.final_place)
    elif workflow_shape(a.net, a.initial, shape.initial_place, shape.final_place) != shape:
        shape = None
    if shape is None:
        raise NotAWorkflowNet("net is not an elementary workflow net with initial marking [i]")
    ss = explore(a, bound)
    target = frozenset({shape.final_place})

    # one backward sweep from [o] over the reversed edge relation
    back: dict[frozenset[str], list[frozenset[str]]] = {}
    for (m1, _), m2 in ss.edges.items():
        back.setdefault(m2, []).append(m1)
    can_complete = set()
    if target in set(ss.states):
        can_complete.add(target)
        todo = [target]
        while todo:
            m = todo.pop()
            for m1 in back.get(m, ()):
                if m1 not in can_complete:
                    can_complete.add(m1)
                    todo.append(m1)
    stuck = sorted((m for m in ss.states if m not in can_complete), key=sort_key)
    improper = sorted(
        (m for m in ss.states if shape.final_place in m and m != target), key=sort_key
    )
    dead = sorted(set(a.net.transitions) - ss.fired_transitions)
    return SoundnessReport(
        option_to_complete=not stuck,
        proper_completion=not improper,
        no_dead_transitions=not dead,
        states=len(ss.states),
        stuck_markings=stuck,
        improper_markings=improper,
        dead_transitions=dead,
    )
