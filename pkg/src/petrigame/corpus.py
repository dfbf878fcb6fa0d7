"""Random block-structured workflow nets, some deliberately broken.

Sound nets come from a small block grammar (task, sequence, exclusive
choice, parallel split/join, loop), which yields safe, extended free-choice
workflow nets.  Unsound ones splice in one of three defects: a dead
transition, an exclusive split closed by a parallel join, or a token that
leaks past the final place.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .errors import SafetyViolation, StateSpaceExceeded
from .net import AnnotatedNet, PetriNet, annotate
from .statespace import explore

DEFECTS = ("dead-transition", "bad-join", "leak")
ROLE = "r"


@dataclass
class CorpusNet:
    name: str
    net: AnnotatedNet
    defect: str | None  # None for nets built from sound blocks only
    states: int


class _Builder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.arcs: dict[str, tuple[set[str], set[str]]] = {}
        self.places = 0

    def place(self) -> str:
        self.places += 1
        return f"p{self.places}"

    def transition(self, pre, post) -> str:
        t = f"t{len(self.arcs) + 1}"
        self.arcs[t] = (set(pre), set(post))
        return t

    def block(self, entry: str, exit: str, depth: int) -> None:
        kinds = ["task"] if depth <= 0 else ["task", "seq", "seq", "xor", "and", "loop"]
        kind = self.rng.choice(kinds)
        if kind == "task":
            self.transition({entry}, {exit})
        elif kind == "seq":
            mid = self.place()
            self.block(entry, mid, depth - 1)
            self.block(mid, exit, depth - 1)
        elif kind == "xor":
            self.block(entry, exit, depth - 1)
            self.block(entry, exit, depth - 1)
        elif kind == "and":
            a_in, b_in, a_out, b_out = (self.place() for _ in range(4))
            self.transition({entry}, {a_in, b_in})
            self.block(a_in, a_out, depth - 1)
            self.block(b_in, b_out, depth - 1)
            self.transition({a_out, b_out}, {exit})
        else:
            # the body starts with a task so that the back edge never meets a split
            head, body_end = self.place(), self.place()
            self.transition({entry}, {head})
            self.block(head, body_end, depth - 1)
            self.transition({body_end}, {exit})
            self.transition({body_end}, {head})

    def defect(self, kind: str, entry: str, exit: str) -> None:
        if kind == "dead-transition":
            self.transition({entry}, {exit})
            self.transition({self.place()}, {exit})
        elif kind == "bad-join":
            x1, x2 = self.place(), self.place()
            self.transition({entry}, {x1})
            self.transition({entry}, {x2})
            self.transition({x1, x2}, {exit})
        elif kind == "leak":
            p1, r, z, q = (self.place() for _ in range(4))
            self.transition({entry}, {p1, r})
            self.transition({p1}, {exit})
            self.transition({r, z}, {q})
            self.transition({q}, {exit})
        else:
            raise ValueError(kind)


def random_workflow_net(rng: random.Random, depth: int = 3, defect: str | None = None) -> AnnotatedNet:
    """One net with initial place ``i`` and final place ``o``; all transitions
    belong to a single role with utility 1."""
    b = _Builder(rng)
    first, last = b.place(), b.place()
    b.transition({"i"}, {first})
    if defect is None:
        b.block(first, last, depth)
    else:
        mid_a, mid_b = b.place(), b.place()
        b.block(first, mid_a, depth - 1)
        b.defect(defect, mid_a, mid_b)
        b.block(mid_b, last, depth - 1)
    b.transition({last}, {"o"})
    net = PetriNet.build(b.arcs)
    return annotate(
        net,
        {"i"},
        owners={t: ROLE for t in net.transitions},
        utilities={ROLE: {t: 1 for t in net.transitions}},
        initial_place="i",
        final_place="o",
    )


def generate_corpus(
    count: int = 24, unsound_every: int = 3, seed: int = 0, max_states: int = 64, depth: int = 3
) -> list[CorpusNet]:
    """``count`` nets with at most ``max_states`` reachable markings.

    Every ``unsound_every``-th net carries a defect, cycling through
    :data:`DEFECTS`.
    """
    rng = random.Random(seed)
    out: list[CorpusNet] = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 100 * count:
            raise RuntimeError("could not generate enough small nets")
        k = len(out)
        defect = DEFECTS[(k // unsound_every) % len(DEFECTS)] if k % unsound_every == unsound_every - 1 else None
        a = random_workflow_net(rng, depth, defect)
        try:
            ss = explore(a, max_states)
        except (StateSpaceExceeded, SafetyViolation):
            continue
        out.append(CorpusNet(f"wf{k:02d}", a, defect, len(ss.states)))
    return out
