"""Analysis reports and their deterministic JSON/text serialization."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction

from . import __version__
from .equilibrium import AlignmentVerdict, BridgeResult, DeviationGain, EstimatedGain
from .game import StochasticGame
from .net import StructuralReport
from .statespace import SoundnessReport, sort_key
from .strategy import SimulationResult


def digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def number(x: Fraction) -> dict:
    """Exact and six-decimal renderings of a rational."""
    x = Fraction(x)
    return {"exact": str(x), "approx": round(float(x), 6)}


def render(obj):
    """Turn analysis values into JSON-ready data."""
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    if isinstance(obj, Fraction):
        return number(obj)
    if isinstance(obj, float):
        return round(obj, 6)
    if isinstance(obj, (frozenset, set)):
        return sorted(obj)
    if isinstance(obj, dict):
        return {str(k): render(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [render(v) for v in obj]
    raise TypeError(f"cannot render {type(obj).__name__}")


@dataclass
class AnalysisReport:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)  # name -> digest
    sections: dict = field(default_factory=dict)
    seed: int | None = None
    version: str = __version__

    def to_dict(self) -> dict:
        out = {
            "command": self.command,
            "inputs": dict(self.inputs),
            "tool": {"name": "petrigame", "version": self.version},
            **render(self.sections),
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out


def _flatten(prefix: str, obj, lines: list[str]) -> None:
    if isinstance(obj, dict) and set(obj) == {"exact", "approx"}:
        lines.append(f"{prefix}: {obj['exact']} (~{obj['approx']})")
    elif isinstance(obj, dict):
        if not obj:
            lines.append(f"{prefix}: {{}}")
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else k, obj[k], lines)
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, lines)
    elif isinstance(obj, list):
        lines.append(f"{prefix}: [{', '.join(map(str, obj))}]")
    else:
        val = json.dumps(obj, ensure_ascii=False) if not isinstance(obj, str) else obj
        lines.append(f"{prefix}: {val}")


def emit_report(report: AnalysisReport | dict, format: str = "json") -> bytes:
    data = report.to_dict() if isinstance(report, AnalysisReport) else render(report)
    if format == "json":
        return (json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False) + "\n").encode()
    if format == "text":
        lines: list[str] = []
        _flatten("", data, lines)
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown report format {format!r}")


def marking_list(m) -> list[str]:
    return sorted(m)


def structural_block(r: StructuralReport) -> dict:
    return {
        "extended_free_choice": r.extended_free_choice,
        "workflow_net": r.workflow is not None,
        "initial_place": r.workflow.initial_place if r.workflow else None,
        "final_place": r.workflow.final_place if r.workflow else None,
    }


def soundness_block(r: SoundnessReport) -> dict:
    return {
        "sound": r.sound,
        "option_to_complete": r.option_to_complete,
        "proper_completion": r.proper_completion,
        "no_dead_transitions": r.no_dead_transitions,
        "reachable_markings": r.states,
        "dead_transitions": sorted(r.dead_transitions),
        "stuck_markings": [marking_list(m) for m in sorted(r.stuck_markings, key=sort_key)],
        "improper_markings": [marking_list(m) for m in sorted(r.improper_markings, key=sort_key)],
    }


def game_export(g: StochasticGame) -> dict:
    """Complete game table with probabilities and payoffs as fraction strings."""
    ids = {m: f"m{i}" for i, m in enumerate(g.states)}
    rows = []
    for m in g.states:
        for s in sorted(g.profiles(m), key=lambda s: (len(s), sorted(s))):
            prob = g.prob(m, s)
            rows.append(
                {
                    "state": ids[m],
                    "step": sorted(s),
                    "admissible": g.admissible(m, s),
                    "probabilities": {ids[m2]: str(p) for m2, p in sorted(prob.items(), key=lambda kv: ids[kv[0]])},
                    "payoff": {p: str(v) for p, v in g.payoff(m, s).items()},
                    "expected_payoff": {p: str(v) for p, v in g.reward(m, s).items()},
                }
            )
    return {
        "kind": "restart" if g.restart else "base",
        "players": list(g.players),
        "owners": {t: g.net.owner(t) for t in g.net.net.transitions},
        "initial": ids[g.initial],
        "states": {ids[m]: marking_list(m) for m in g.states},
        "conflict_sets": [sorted(c) for c in g.classes],
        "redirected_final_markings": [marking_list(m) for m in sorted(g.finals, key=sort_key)] if g.restart else [],
        "rows": rows,
    }


def gain_block(x: DeviationGain | EstimatedGain) -> dict:
    if isinstance(x, EstimatedGain):
        return {
            "gain": x.gain,
            "stderr": x.stderr,
            "profile_value": x.profile_value,
            "heuristic": True,
            "deviations_tried": len(x.deviations),
        }
    out = {
        "gain": x.gain,
        "best_response_value": x.best_response_value,
        "profile_value": x.profile_value,
        "heuristic": x.heuristic,
    }
    if x.state is not None:
        out["state"] = marking_list(x.state)
    return out


def _failure_block(f: dict) -> dict:
    out = {}
    for k, v in f.items():
        if k == "from":
            v = [marking_list(m) for m in sorted(v, key=sort_key)]
        elif k == "state" and v is not None:
            v = marking_list(v)
        out[k] = v
    return out


def verdict_block(v: AlignmentVerdict, witness_doc: dict | None = None) -> dict:
    out = {
        "mode": v.mode,
        "status": v.status,
        "heuristic": v.heuristic,
        "payoff": dict(v.payoff),
        "gains": {p: gain_block(x) for p, x in v.gains.items()},
        "failures": [_failure_block(f) for f in v.failures],
    }
    if v.note:
        out["note"] = v.note
    if witness_doc is not None:
        out["witness"] = witness_doc
    return out


def bridge_block(b: BridgeResult) -> dict:
    return {
        "sound": b.sound,
        "aligned_full_liveness": b.aligned_full_liveness,
        "agree": b.agree,
        "soundness": soundness_block(b.soundness),
        "alignment": verdict_block(b.verdict),
    }


def simulation_block(r: SimulationResult, exact: dict | None = None) -> dict:
    out = {
        "stages": r.stages,
        "trials": r.trials,
        "heuristic": True,
        "mean": {p: float(v) for p, v in r.mean.items()},
        "stderr": {p: float(v) for p, v in r.stderr.items()},
    }
    if exact is not None:
        out["exact_longrun"] = dict(exact)
    return out
