"""Command-line interface.

Exit codes: 0 positive verdict, 1 negative, 2 inconclusive, 3 input error,
64 usage error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .documents import parse_annotations, parse_device, parse_profile, profile_document, rational
from .equilibrium import (
    DEFAULT_EFFORT,
    DEFAULT_EPSILON,
    FULL_LIVENESS,
    MODES,
    PROPER_COMPLETION,
    AlignmentVerdict,
    check_alignment_witness,
    decide_alignment,
    estimate_deviation_gain,
    eventually_positive,
    soundness_alignment_bridge,
)
from .errors import (
    HypothesisViolated,
    InitialIsFinal,
    InputError,
    NotAWorkflowNet,
    NotFreeChoice,
    PetriGameError,
    SafetyViolation,
    StateSpaceExceeded,
    UnsupportedDevice,
)
from .game import build_base_game, build_restart_game
from .net import AnnotatedNet, PetriNet, annotate, structural_checks
from .pnml import parse_pnml
from .report import (
    AnalysisReport,
    bridge_block,
    digest,
    emit_report,
    game_export,
    gain_block,
    simulation_block,
    soundness_block,
    structural_block,
    verdict_block,
)
from .statespace import DEFAULT_BOUND, check_soundness, explore
from .strategy import StrategyProfile, longrun_average_payoff, simulate, trivial_device, uniform_profile

EXIT_POSITIVE, EXIT_NEGATIVE, EXIT_INCONCLUSIVE, EXIT_INPUT, EXIT_USAGE = 0, 1, 2, 3, 64
STATUS_EXIT = {"aligned": EXIT_POSITIVE, "not-aligned": EXIT_NEGATIVE, "inconclusive": EXIT_INCONCLUSIVE}
# analysis failures caused by the supplied model rather than by the tool
MODEL_ERRORS = (
    InputError,
    NotAWorkflowNet,
    NotFreeChoice,
    SafetyViolation,
    StateSpaceExceeded,
    InitialIsFinal,
    HypothesisViolated,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class CliResult:
    code: int
    report: AnalysisReport | None
    output: bytes
    message: str = ""
    destination: Path | None = None


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _fraction(text: str) -> Fraction:
    try:
        value = rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="petrigame", description=__doc__.splitlines()[0])
    common = _Parser(add_help=False)
    common.add_argument("net", type=Path, help="PNML file")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--output", type=Path, help="write the report here instead of stdout")
    common.add_argument("--bound", type=_positive, default=DEFAULT_BOUND, help="state-space bound")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check-soundness", parents=[common], help="workflow-net soundness")
    p.add_argument("annotations", type=Path, nargs="?")

    p = sub.add_parser("build-game", parents=[common], help="export the stochastic game")
    p.add_argument("annotations", type=Path)
    p.add_argument("--restart", action="store_true", help="export the restart game")

    p = sub.add_parser("analyze", parents=[common], help="equilibrium and alignment verdicts")
    p.add_argument("annotations", type=Path)
    p.add_argument("--mode", choices=MODES, default=PROPER_COMPLETION)
    p.add_argument("--epsilon", type=_fraction, default=DEFAULT_EPSILON)
    p.add_argument("--profile", type=Path, help="candidate witness profile (JSON)")
    p.add_argument("--device", type=Path, help="correlation device (JSON); default trivial")
    p.add_argument("--effort", type=_positive, default=DEFAULT_EFFORT, help="search rounds per seed")
    p.add_argument("--stages", type=_positive, default=1000, help="stages for simulated gains")
    p.add_argument("--trials", type=_positive, default=2000, help="trials for simulated gains")
    p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo mean payoffs")
    p.add_argument("annotations", type=Path)
    p.add_argument("--profile", type=Path)
    p.add_argument("--device", type=Path)
    p.add_argument("--base", action="store_true", help="simulate the base game instead of the restart game")
    p.add_argument("--stages", type=_positive, default=1000)
    p.add_argument("--trials", type=_positive, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("bridge", parents=[common], help="soundness versus full-liveness alignment")
    p.add_argument(
        "annotations", type=Path, nargs="?",
        help="default: one role owning every transition with utility 1",
    )
    return parser


class _Inputs:
    def __init__(self):
        self.digests: dict[str, str] = {}

    def read(self, label: str, path: Path) -> bytes:
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise InputError(f"cannot read {path}: {exc.strerror}") from None
        self.digests[label] = digest(data)
        return data


def _load_net(inputs: _Inputs, args) -> AnnotatedNet:
    net, initial = parse_pnml(inputs.read("net", args.net))
    if getattr(args, "annotations", None) is not None:
        return parse_annotations(inputs.read("annotations", args.annotations), net, initial)
    return _default_annotation(net, initial, args.command == "bridge")


def _default_annotation(net: PetriNet, initial, single_role: bool) -> AnnotatedNet:
    if single_role:
        return annotate(
            net,
            initial,
            owners={t: "r" for t in net.transitions},
            utilities={"r": {t: 1 for t in net.transitions}},
            roles=("r",),
        )
    return annotate(net, initial, roles=())


def _game(a: AnnotatedNet, args, restart: bool = True):
    g = build_base_game(a, explore(a, args.bound))
    return build_restart_game(g) if restart else g


def _profile(inputs: _Inputs, args, g) -> StrategyProfile:
    if args.profile is None:
        return uniform_profile(g)
    return parse_profile(inputs.read("profile", args.profile), g)


def _device(inputs: _Inputs, args):
    if args.device is None:
        return trivial_device()
    return parse_device(inputs.read("device", args.device))


def cmd_check_soundness(args, inputs) -> tuple[int, dict]:
    a = _load_net(inputs, args)
    structure = structural_checks(a)
    report = check_soundness(a, bound=args.bound)
    code = EXIT_POSITIVE if report.sound else EXIT_NEGATIVE
    return code, {"structure": structural_block(structure), "soundness": soundness_block(report)}


def cmd_build_game(args, inputs) -> tuple[int, dict]:
    a = _load_net(inputs, args)
    g = _game(a, args, restart=args.restart)
    return EXIT_POSITIVE, {"game": game_export(g)}


def _heuristic_verdict(g, d, sigma, args) -> AlignmentVerdict:
    """Witness check when some player's signals hide part of the signal vector."""
    gains = {}
    for p in g.net.roles:
        gains[p] = estimate_deviation_gain(
            g, d, sigma, p, stages=args.stages, trials=args.trials, seed=args.seed
        )
    positive, payoff = eventually_positive(g, d, sigma)
    failures = []
    if not positive:
        failures.append({"kind": "positivity", "players": [p for p in g.net.roles if payoff[p] <= 0]})
    for p, est in gains.items():
        if est.gain > float(args.epsilon) + 3 * est.stderr:
            failures.append({"kind": "equilibrium", "player": p, "gain": est.gain, "heuristic": True})
    status = "not-aligned" if failures else "inconclusive"
    note = "exact best responses need signals that reveal the signal vector; deviation gains are simulated"
    return AlignmentVerdict(args.mode, status, (d, sigma), failures, gains, payoff, note, heuristic=True)


def cmd_analyze(args, inputs) -> tuple[int, dict]:
    a = _load_net(inputs, args)
    g = _game(a, args)
    witness = None
    if args.profile is None and args.device is None:
        verdict = decide_alignment(a, args.mode, args.epsilon, args.effort, args.bound)
        if verdict.witness is not None:
            witness = profile_document(verdict.witness[1])
    else:
        d = _device(inputs, args)
        sigma = _profile(inputs, args, g)
        try:
            verdict = check_alignment_witness(g, d, sigma, args.mode, args.epsilon)
            if not verdict.aligned:
                verdict.note = "the supplied witness fails; other witnesses may exist"
        except UnsupportedDevice:
            verdict = _heuristic_verdict(g, d, sigma, args)
        witness = profile_document(sigma)
    sections = {
        "game": {"states": len(g.states), "players": list(g.players), "kind": "restart"},
        "alignment": verdict_block(verdict, witness),
    }
    if args.mode == FULL_LIVENESS and args.profile is None:
        sections["note"] = "full liveness ranges over every non-final reachable marking"
    return STATUS_EXIT[verdict.status], sections


def cmd_simulate(args, inputs) -> tuple[int, dict]:
    a = _load_net(inputs, args)
    g = _game(a, args, restart=not args.base)
    d = _device(inputs, args)
    sigma = _profile(inputs, args, g)
    result = simulate(g, d, g.initial, sigma, args.stages, args.trials, args.seed)
    exact = longrun_average_payoff(g, d, sigma, g.initial)
    return EXIT_POSITIVE, {
        "game": {"states": len(g.states), "players": list(g.players), "kind": "restart" if g.restart else "base"},
        "simulation": simulation_block(result, exact),
    }


def cmd_bridge(args, inputs) -> tuple[int, dict]:
    a = _load_net(inputs, args)
    b = soundness_alignment_bridge(a, args.bound)
    return (EXIT_POSITIVE if b.agree else EXIT_NEGATIVE), {"bridge": bridge_block(b)}


COMMANDS = {
    "check-soundness": cmd_check_soundness,
    "build-game": cmd_build_game,
    "analyze": cmd_analyze,
    "simulate": cmd_simulate,
    "bridge": cmd_bridge,
}


def run_cli(argv: list[str] | None = None) -> CliResult:
    """Run one command and return its exit code and serialized report."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        return CliResult(EXIT_USAGE, None, b"", str(exc))
    except SystemExit as exc:  # --help
        return CliResult(int(exc.code or 0), None, b"")
    inputs = _Inputs()
    try:
        code, sections = COMMANDS[args.command](args, inputs)
    except MODEL_ERRORS as exc:
        return CliResult(EXIT_INPUT, None, b"", f"{type(exc).__name__}: {exc}")
    except PetriGameError as exc:
        return CliResult(EXIT_INCONCLUSIVE, None, b"", f"{type(exc).__name__}: {exc}")
    seed = getattr(args, "seed", None)
    report = AnalysisReport(args.command, inputs.digests, sections, seed)
    return CliResult(code, report, emit_report(report, args.format), destination=args.output)


def main(argv: list[str] | None = None) -> int:
    result = run_cli(argv)
    if result.message:
        print(result.message, file=sys.stderr)
    if result.output and result.destination is not None:
        result.destination.write_bytes(result.output)
    elif result.output:
        sys.stdout.buffer.write(result.output)
        sys.stdout.flush()
    return result.code


if __name__ == "__main__":
    sys.exit(main())
