"""Hand-encoded example nets, with matching PNML/JSON files under ``data/``."""
from __future__ import annotations

from fractions import Fraction
from importlib import resources

from .game import StochasticGame
from .net import AnnotatedNet, PetriNet, annotate
from .strategy import (
    CorrelationDevice,
    PlayerStrategy,
    StrategyProfile,
    iid_device,
    signal_vector,
)

# the running example: p0 -t0-> p1 -t-> p2, t' loops back to p1, t1 finishes in p3
N1_ARCS = {
    "t0": ({"p0"}, {"p1"}),
    "t": ({"p1"}, {"p2"}),
    "t'": ({"p2"}, {"p1"}),
    "t1": ({"p2"}, {"p3"}),
}


def n1() -> AnnotatedNet:
    """Three roles; a pays 1 to start and both a and c gain 2 on completion."""
    return annotate(
        PetriNet.build(N1_ARCS),
        {"p0"},
        owners={"t0": "a", "t": "b", "t'": "c", "t1": "a"},
        utilities={"a": {"t0": -1, "t1": 2}, "b": {"t": 1}, "c": {"t'": 1, "t1": 2}},
        roles=("a", "b", "c"),
    )


def w1() -> AnnotatedNet:
    """The running example as a single-role workflow net with unit utilities."""
    net = PetriNet.build(N1_ARCS)
    return annotate(
        net,
        {"p0"},
        owners={t: "r" for t in net.transitions},
        utilities={"r": {t: 1 for t in net.transitions}},
        initial_place="p0",
        final_place="p3",
    )


def w2() -> AnnotatedNet:
    """Unsound workflow net: ``t_b`` waits on a place that is never marked."""
    net = PetriNet.build({"t_a": ({"i"}, {"o"}), "t_b": ({"q"}, {"o"})})
    return annotate(
        net,
        {"i"},
        owners={t: "r" for t in net.transitions},
        utilities={"r": {t: 1 for t in net.transitions}},
        initial_place="i",
        final_place="o",
    )


ALICE_BOB_UTILITIES = {
    "bob": {"bob_work": 2, "bob_surf": 3},
    "alice": {"alice_work": 4, "alice_fish": 2},
}
WORK_B, WORK_A = "WORK_B", "WORK_A"


def alice_bob() -> AnnotatedNet:
    """One working day: each founder either works or takes the day off.

    The utilities are fixture choices: Bob values work 2 and surfing 3,
    Alice values work 4 and fishing 2.
    """
    net = PetriNet.build(
        {
            "bob_work": ({"pB"}, {"qB"}),
            "bob_surf": ({"pB"}, {"qB"}),
            "alice_work": ({"pA"}, {"qA"}),
            "alice_fish": ({"pA"}, {"qA"}),
        }
    )
    return annotate(
        net,
        {"pA", "pB"},
        owners={"bob_work": "bob", "bob_surf": "bob", "alice_work": "alice", "alice_fish": "alice"},
        utilities=ALICE_BOB_UTILITIES,
        roles=("alice", "bob"),
    )


def alice_bob_device() -> CorrelationDevice:
    """A ten-sided die: sides 1-6 send Bob to work, 7-10 send Alice, told to both."""
    return iid_device(
        {
            signal_vector(alice=WORK_B, bob=WORK_B): Fraction(6, 10),
            signal_vector(alice=WORK_A, bob=WORK_A): Fraction(4, 10),
        }
    )


def alice_bob_obedient(g: StochasticGame) -> StrategyProfile:
    start = g.initial
    return StrategyProfile(
        {
            "bob": PlayerStrategy(
                "act",
                {(start, WORK_B): {"bob_work": 1}, (start, WORK_A): {"bob_surf": 1}},
            ),
            "alice": PlayerStrategy(
                "act",
                {(start, WORK_B): {"alice_fish": 1}, (start, WORK_A): {"alice_work": 1}},
            ),
        }
    )


def alice_bob_expected() -> dict[str, Fraction]:
    """Closed-form stage payoff of the obedient profile."""
    p_b, p_a = Fraction(6, 10), Fraction(4, 10)
    u = ALICE_BOB_UTILITIES
    return {
        "bob": p_b * u["bob"]["bob_work"] + p_a * u["bob"]["bob_surf"],
        "alice": p_b * u["alice"]["alice_fish"] + p_a * u["alice"]["alice_work"],
    }


def order_to_cash() -> AnnotatedNet:
    """Simplified order-to-cash process.

    The customer orders; the supplier rejects or accepts.  Acceptance forks
    into shipping (shipper) and invoicing (supplier); the customer pays once
    both are done.  Utilities are fixture choices: goods are worth 5 to the
    customer, the price is 3, and the supplier pays the shipper 1.
    """
    net = PetriNet.build(
        {
            "place_order": ({"i"}, {"ordered"}),
            "reject": ({"ordered"}, {"o"}),
            "accept": ({"ordered"}, {"to_ship", "to_bill"}),
            "ship": ({"to_ship"}, {"shipped"}),
            "invoice": ({"to_bill"}, {"billed"}),
            "pay": ({"shipped", "billed"}, {"o"}),
        }
    )
    return annotate(
        net,
        {"i"},
        owners={
            "place_order": "customer",
            "reject": "supplier",
            "accept": "supplier",
            "ship": "shipper",
            "invoice": "supplier",
            "pay": "customer",
        },
        utilities={
            "customer": {"ship": 5, "pay": -3},
            "supplier": {"pay": 3, "ship": -1},
            "shipper": {"ship": 1},
        },
        roles=("customer", "supplier", "shipper"),
        initial_place="i",
        final_place="o",
    )


def c_idles(g: StochasticGame) -> StrategyProfile:
    """a and b act, c never fires its loop transition."""
    return StrategyProfile(
        {"a": PlayerStrategy("act"), "b": PlayerStrategy("act"), "c": PlayerStrategy("idle")}
    )


FIXTURES = {
    "n1": n1,
    "w1": w1,
    "w2": w2,
    "alice_bob": alice_bob,
    "order_to_cash": order_to_cash,
}


def data_file(name: str) -> bytes:
    """Raw bytes of a shipped fixture file, e.g. ``n1.pnml``."""
    return resources.files(__package__).joinpath("data", name).read_bytes()


def load_fixture(name: str) -> AnnotatedNet:
    """Parse a shipped fixture from its PNML and annotation files."""
    from .documents import parse_annotations
    from .pnml import parse_pnml

    net, initial = parse_pnml(data_file(f"{name}.pnml"))
    return parse_annotations(data_file(f"{name}.ann.json"), net, initial)
