"""JSON documents: net annotations, strategy profiles and correlation devices."""
from __future__ import annotations

import json
from fractions import Fraction

import jsonschema

from .errors import SchemaError, UnknownRole, UnknownTransition
from .game import IDLE, StochasticGame
from .net import NATURE, AnnotatedNet, PetriNet
from .strategy import (
    TOP,
    CorrelationDevice,
    PlayerStrategy,
    StrategyProfile,
    all_act_profile,
    idle_profile,
    signal_vector,
    trivial_device,
    uniform_profile,
)

RATIONAL = {"type": "string", "pattern": r"^\s*-?\d+(\.\d+)?(\s*/\s*\d+)?\s*$"}
NUMBER = {"oneOf": [RATIONAL, {"type": "integer"}]}

ANNOTATION_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["roles"],
    "additionalProperties": False,
    "properties": {
        "roles": {"type": "array", "items": {"type": "string", "minLength": 1}, "uniqueItems": True},
        "transitions": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "role": {"type": ["string", "null"]},
                    "utilities": {"type": "object", "additionalProperties": NUMBER},
                    # reserved for known transition probabilities; accepted and ignored
                    "weight": NUMBER,
                },
            },
        },
        "workflow": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"initial": {"type": "string"}, "final": {"type": "string"}},
        },
        "metadata": {"type": "object"},
    },
}

DISTRIBUTION = {"type": "object", "additionalProperties": NUMBER, "minProperties": 1}
DEFAULT_RULES = ["act", "first", "idle", "any"]

PROFILE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "base": {"enum": ["uniform", "all-act", "idle"]},
        "players": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "default": {"enum": DEFAULT_RULES},
                    "rules": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["state", "play"],
                            "additionalProperties": False,
                            "properties": {
                                "state": {"type": "array", "items": {"type": "string"}},
                                "signal": {"type": "string"},
                                "play": DISTRIBUTION,
                            },
                        },
                    },
                },
            },
        },
        "metadata": {"type": "object"},
    },
}

SIGNALS = {"type": "object", "additionalProperties": {"type": "string"}}

DEVICE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": ["trivial", "finite"]},
        "states": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "start": {"type": "string"},
        "emission": {
            "type": "object",
            "additionalProperties": {
                "type": "array",
                "items": {
                    "type": "object",
                    "required": ["signals", "probability"],
                    "additionalProperties": False,
                    "properties": {"signals": SIGNALS, "probability": NUMBER},
                },
            },
        },
        "successor": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["from", "signals", "to"],
                "additionalProperties": False,
                "properties": {"from": {"type": "string"}, "signals": SIGNALS, "to": {"type": "string"}},
            },
        },
        "metadata": {"type": "object"},
    },
}


def _load(data: bytes | str | dict, schema: dict, what: str) -> dict:
    if isinstance(data, dict):
        doc = data
    else:
        try:
            doc = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{what}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{what}: {where}: {exc.message}") from None
    return doc


def rational(value) -> Fraction:
    """Parse ``"p/q"``, decimal strings and integers exactly."""
    return Fraction(str(value).replace(" ", ""))


def parse_annotations(data: bytes | str | dict, net: PetriNet, initial=None) -> AnnotatedNet:
    """Attach roles and utilities to ``net``; unassigned transitions belong to nature.

    Without ``initial`` the marking is the workflow's initial place, given in
    the document or else the net's unique source place.
    """
    doc = _load(data, ANNOTATION_SCHEMA, "annotations")
    roles = tuple(doc["roles"])
    if NATURE in roles:
        raise SchemaError(f"annotations: {NATURE!r} is reserved for nature")
    owners: dict[str, str] = {}
    utility: dict[str, dict[str, Fraction]] = {}
    for t, entry in doc.get("transitions", {}).items():
        if t not in net.pre:
            raise UnknownTransition(t)
        role = entry.get("role")
        if role is not None:
            if role not in roles:
                raise UnknownRole(role)
            owners[t] = role
        for r, v in entry.get("utilities", {}).items():
            if r not in roles:
                raise UnknownRole(r)
            u = rational(v)
            if u:
                utility.setdefault(r, {})[t] = u
    wf = doc.get("workflow", {})
    for p in wf.values():
        if p not in net.places:
            raise SchemaError(f"annotations: workflow place {p!r} is not in the net")
    if initial is None:
        start = wf.get("initial")
        if start is None:
            sources = [p for p in net.places if not any(p in post for post in net.post.values())]
            if len(sources) != 1:
                raise SchemaError("annotations: no initial marking and no unique source place")
            start = sources[0]
        initial = {start}
    return AnnotatedNet(
        net,
        frozenset(initial),
        roles,
        utility,
        owners,
        initial_place=wf.get("initial"),
        final_place=wf.get("final"),
    )


def _action(name: str):
    return IDLE if name == "idle" else name


def parse_profile(data: bytes | str | dict, game: StochasticGame) -> StrategyProfile:
    """Build a stationary profile; unlisted roles follow ``base`` (default uniform)."""
    doc = _load(data, PROFILE_SCHEMA, "profile")
    base = doc.get("base", "uniform")
    if base == "uniform":
        prof = uniform_profile(game)
    elif base == "all-act":
        prof = all_act_profile(game)
    else:
        prof = idle_profile(game)
    places = set(game.net.net.places)
    for player, spec in doc.get("players", {}).items():
        if player not in game.players:
            raise UnknownRole(player)
        table = {}
        for rule in spec.get("rules", []):
            state = frozenset(rule["state"])
            if not state <= places:
                raise SchemaError(f"profile: unknown places in state {sorted(state)}")
            dist = {_action(a): rational(p) for a, p in rule["play"].items()}
            for a in dist:
                if a is not IDLE and a not in game.net.net.pre:
                    raise UnknownTransition(a)
            table[(state, rule.get("signal"))] = dist
        prof = prof.replace(player, PlayerStrategy(spec.get("default", "idle" if table else "act"), table))
    return prof


def parse_device(data: bytes | str | dict) -> CorrelationDevice:
    doc = _load(data, DEVICE_SCHEMA, "device")
    if doc.get("kind", "finite") == "trivial":
        return trivial_device()
    if "states" not in doc or "emission" not in doc:
        raise SchemaError("device: a finite device needs 'states' and 'emission'")
    states = tuple(doc["states"])
    emission = {}
    for d, rows in doc["emission"].items():
        if d not in states:
            raise SchemaError(f"device: emission for unknown state {d!r}")
        dist: dict = {}
        for row in rows:
            vec = signal_vector(row["signals"])
            dist[vec] = dist.get(vec, Fraction(0)) + rational(row["probability"])
        emission[d] = dist
    successor = {(s["from"], signal_vector(s["signals"])): s["to"] for s in doc.get("successor", [])}
    return CorrelationDevice(states, doc.get("start", states[0]), emission, successor)


def device_document(d: CorrelationDevice) -> dict:
    """Inverse of :func:`parse_device`."""
    return {
        "kind": "finite",
        "states": list(d.states),
        "start": d.start,
        "emission": {
            s: [{"signals": dict(vec), "probability": str(p)} for vec, p in d.emission[s].items()]
            for s in d.states
        },
        "successor": [
            {"from": s, "signals": dict(vec), "to": t} for (s, vec), t in d.successor.items()
        ],
    }


def annotation_document(a: AnnotatedNet, metadata: dict | None = None) -> dict:
    """Inverse of :func:`parse_annotations`."""
    transitions = {}
    for t in a.net.transitions:
        entry: dict = {}
        if t in a.assigned_role:
            entry["role"] = a.assigned_role[t]
        utils = {r: str(a.utility_of(r, t)) for r in a.roles if a.utility_of(r, t)}
        if utils:
            entry["utilities"] = utils
        transitions[t] = entry
    doc = {"roles": list(a.roles), "transitions": transitions}
    wf = {k: v for k, v in (("initial", a.initial_place), ("final", a.final_place)) if v}
    if wf:
        doc["workflow"] = wf
    if metadata:
        doc["metadata"] = metadata
    return doc


def profile_document(sigma: StrategyProfile, base: str | None = None) -> dict:
    """Serialize a stationary profile; roles absent from it idle."""
    players = {}
    for p, s in sigma.strategies.items():
        if not isinstance(s, PlayerStrategy):
            continue
        rules = []
        for (state, signal), dist in sorted(s.table.items(), key=lambda kv: (sorted(kv[0][0]), kv[0][1] or "")):
            rule = {"state": sorted(state), "play": {a or "idle": str(q) for a, q in dist.items()}}
            if signal is not None:
                rule["signal"] = signal
            rules.append(rule)
        players[p] = {"default": s.default, "rules": rules}
    doc: dict = {"players": players}
    doc["base"] = base or "idle"
    return doc


__all__ = [
    "ANNOTATION_SCHEMA",
    "DEVICE_SCHEMA",
    "PROFILE_SCHEMA",
    "TOP",
    "annotation_document",
    "device_document",
    "parse_annotations",
    "parse_device",
    "parse_profile",
    "profile_document",
    "rational",
]
