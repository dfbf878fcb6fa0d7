"""Elementary net systems with utility and role annotations.

Markings and steps are plain frozensets of identifiers: a safe marking is the
set of marked places, a step is the set of transitions fired together.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    InputError,
    NotFreeChoice,
    SafetyViolation,
    StepNotEnabled,
    UnknownRole,
    UnknownTransition,
)

Marking = frozenset
Step = frozenset

#: Reserved player owning every transition without an assigned role.
NATURE = "⊥"


def marking(*places: str) -> frozenset[str]:
    return frozenset(places)


def fmt_set(items: Iterable[str]) -> str:
    return "{" + ",".join(sorted(items)) + "}"


@dataclass(frozen=True, eq=False)
class PetriNet:
    places: tuple[str, ...]
    transitions: tuple[str, ...]
    pre: Mapping[str, frozenset[str]]
    post: Mapping[str, frozenset[str]]

    def __post_init__(self):
        known = set(self.places)
        if len(known) != len(self.places):
            raise InputError("duplicate place identifiers")
        if len(set(self.transitions)) != len(self.transitions):
            raise InputError("duplicate transition identifiers")
        if known & set(self.transitions):
            raise InputError("places and transitions must have distinct identifiers")
        for t in self.transitions:
            for name, arcs in (("pre", self.pre), ("post", self.post)):
                ps = arcs.get(t)
                if not ps:
                    raise InputError(f"{name}-set of transition {t!r} is empty")
                if not ps <= known:
                    raise InputError(
                        f"{name}-set of {t!r} mentions undeclared places {fmt_set(ps - known)}"
                    )
        if set(self.pre) - set(self.transitions) or set(self.post) - set(self.transitions):
            raise UnknownTransition("arcs mention undeclared transitions")

    @classmethod
    def build(
        cls,
        arcs: Mapping[str, tuple[Iterable[str], Iterable[str]]],
        places: Iterable[str] | None = None,
    ) -> PetriNet:
        """Build a net from ``{transition: (pre, post)}``.

        Places default to those mentioned by some arc.
        """
        pre = {t: frozenset(p) for t, (p, _) in arcs.items()}
        post = {t: frozenset(q) for t, (_, q) in arcs.items()}
        if places is None:
            mentioned: set[str] = set()
            for t in arcs:
                mentioned |= pre[t] | post[t]
            places = mentioned
        return cls(tuple(sorted(set(places))), tuple(sorted(arcs)), pre, post)

    def __eq__(self, other):
        if not isinstance(other, PetriNet):
            return NotImplemented
        return (
            self.places == other.places
            and self.transitions == other.transitions
            and dict(self.pre) == dict(other.pre)
            and dict(self.post) == dict(other.post)
        )

    def __hash__(self):
        return hash((self.places, self.transitions))

    def check_marking(self, m: frozenset[str]) -> None:
        extra = m - set(self.places)
        if extra:
            raise InputError(f"marking mentions undeclared places {fmt_set(extra)}")

    def check_step(self, s: Iterable[str]) -> None:
        for t in s:
            if t not in self.pre:
                raise UnknownTransition(t)


def enabled(net: PetriNet, m: frozenset[str]) -> frozenset[str]:
    """Transitions whose pre-set is contained in the marking."""
    return frozenset(t for t in net.transitions if net.pre[t] <= m)


def step_enabled(net: PetriNet, m: frozenset[str], s: Iterable[str]) -> bool:
    # multiset condition on a safe marking: pre-sets pairwise disjoint and inside m
    consumed: set[str] = set()
    for t in s:
        pre = net.pre[t]
        if not pre <= m or pre & consumed:
            return False
        consumed |= pre
    return True


def fire_step(net: PetriNet, m: frozenset[str], s: Iterable[str]) -> frozenset[str]:
    s = frozenset(s)
    net.check_step(s)
    if not step_enabled(net, m, s):
        raise StepNotEnabled(f"step {fmt_set(s)} is not enabled at {fmt_set(m)}")
    consumed: set[str] = set()
    for t in s:
        consumed |= net.pre[t]
    result = set(m - consumed)
    for t in sorted(s):
        for p in net.post[t]:
            if p in result:
                raise SafetyViolation(
                    f"firing {fmt_set(s)} at {fmt_set(m)} puts two tokens on {p!r}",
                    marking=m,
                    step=s,
                )
            result.add(p)
    return frozenset(result)


def is_extended_free_choice(net: PetriNet) -> bool:
    for i, t in enumerate(net.transitions):
        for u in net.transitions[i + 1:]:
            if net.pre[t] & net.pre[u] and net.pre[t] != net.pre[u]:
                return False
    return True


def conflict_sets(net: PetriNet) -> tuple[frozenset[str], ...]:
    """Equivalence classes of the pre-set intersection relation.

    Classes are ordered by their lexicographically smallest member.
    """
    if not is_extended_free_choice(net):
        raise NotFreeChoice("conflict relation is only an equivalence for extended free-choice nets")
    classes: dict[frozenset[str], set[str]] = {}
    for t in net.transitions:
        classes.setdefault(net.pre[t], set()).add(t)
    return tuple(sorted((frozenset(c) for c in classes.values()), key=min))


@dataclass(frozen=True)
class WorkflowShape:
    initial_place: str
    final_place: str


def workflow_shape(
    net: PetriNet,
    initial: frozenset[str] | None = None,
    initial_place: str | None = None,
    final_place: str | None = None,
) -> WorkflowShape | None:
    """Return the (initial, final) places if the net is an elementary workflow net.

    The initial place must lie in no post-set and the final place in no pre-set;
    every place must touch some transition.  The final place also has to be the
    only place outside all pre-sets, so that ``[o]`` is the only possible final
    marking.  Several places outside all post-sets are tolerated; without an
    explicit choice the initial place is the single place of ``initial``.
    """
    if not net.transitions:
        return None
    touched: set[str] = set()
    in_pre: set[str] = set()
    in_post: set[str] = set()
    for t in net.transitions:
        in_pre |= net.pre[t]
        in_post |= net.post[t]
    touched = in_pre | in_post
    if touched != set(net.places):
        return None
    sources = [p for p in net.places if p not in in_post]
    sinks = [p for p in net.places if p not in in_pre]
    if len(sinks) != 1 or (final_place is not None and final_place != sinks[0]):
        return None
    if initial_place is None:
        if initial is not None and len(initial) == 1:
            (initial_place,) = initial
        elif len(sources) == 1:
            initial_place = sources[0]
        else:
            return None
    if initial_place not in sources:
        return None
    if initial is not None and initial != frozenset({initial_place}):
        return None
    return WorkflowShape(initial_place, sinks[0])


@dataclass(frozen=True, eq=False)
class AnnotatedNet:
    """A marked net with a utility table and a partial role assignment."""

    net: PetriNet
    initial: frozenset[str]
    roles: tuple[str, ...]
    utility: Mapping[str, Mapping[str, Fraction]] = field(default_factory=dict)
    assigned_role: Mapping[str, str] = field(default_factory=dict)
    # optional hints for workflow analysis, e.g. from the annotation document
    initial_place: str | None = None
    final_place: str | None = None

    def __post_init__(self):
        self.net.check_marking(self.initial)
        if NATURE in self.roles:
            raise InputError(f"{NATURE!r} is reserved for nature")
        if len(set(self.roles)) != len(self.roles):
            raise InputError("duplicate role identifiers")
        for r, row in self.utility.items():
            if r not in self.roles:
                raise UnknownRole(r)
            self.net.check_step(row)
        for t, r in self.assigned_role.items():
            if t not in self.net.pre:
                raise UnknownTransition(t)
            if r not in self.roles:
                raise UnknownRole(r)

    def owner(self, t: str) -> str:
        return self.assigned_role.get(t, NATURE)

    def utility_of(self, role: str, t: str) -> Fraction:
        return self.utility.get(role, {}).get(t, Fraction(0))

    @property
    def players(self) -> tuple[str, ...]:
        """Roles followed by nature."""
        return self.roles + (NATURE,)


def annotate(
    net: PetriNet,
    initial: Iterable[str],
    owners: Mapping[str, str] | None = None,
    utilities: Mapping[str, Mapping[str, object]] | None = None,
    roles: Iterable[str] | None = None,
    **hints,
) -> AnnotatedNet:
    """Convenience constructor; utilities accept anything ``Fraction`` accepts."""
    owners = dict(owners or {})
    table = {
        r: {t: Fraction(v) for t, v in row.items() if Fraction(v) != 0}
        for r, row in (utilities or {}).items()
    }
    if roles is None:
        roles = set(owners.values()) | set(table)
    return AnnotatedNet(net, frozenset(initial), tuple(sorted(roles)), table, owners, **hints)


def step_utility(a: AnnotatedNet, role: str, s: Iterable[str]) -> Fraction:
    if role not in a.roles and role != NATURE:
        raise UnknownRole(role)
    s = list(s)
    a.net.check_step(s)
    if role == NATURE:
        return Fraction(0)
    return sum((a.utility_of(role, t) for t in s), Fraction(0))


@dataclass(frozen=True)
class StructuralReport:
    extended_free_choice: bool
    workflow: WorkflowShape | None
    final_markings_reachability_deferred: str = (
        "final-marking reachability needs the state space; see check_soundness"
    )


def structural_checks(
    a: AnnotatedNet, initial_place: str | None = None, final_place: str | None = None
) -> StructuralReport:
    shape = workflow_shape(
        a.net,
        a.initial,
        initial_place or a.initial_place,
        final_place or a.final_place,
    )
    return StructuralReport(is_extended_free_choice(a.net), shape)
