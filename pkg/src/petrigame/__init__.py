"""Stochastic games of Petri nets with transition payoffs and roles."""

__version__ = "0.1.0"

from .errors import *  # noqa: E402,F401,F403
from .net import (  # noqa: E402
    NATURE,
    AnnotatedNet,
    PetriNet,
    annotate,
    conflict_sets,
    enabled,
    fire_step,
    is_extended_free_choice,
    marking,
    step_enabled,
    step_utility,
    structural_checks,
    workflow_shape,
)
from .statespace import StateSpace, check_soundness, explore, is_safe  # noqa: E402
from .game import (  # noqa: E402
    IDLE,
    StochasticGame,
    build_base_game,
    build_restart_game,
    maximal_enabled_substeps,
    restart_game,
    transition_probability,
)
from .strategy import (  # noqa: E402
    TOP,
    CorrelationDevice,
    PlayerStrategy,
    ObservationStrategy,
    StrategyProfile,
    all_act_profile,
    history_probability,
    idle_profile,
    iid_device,
    longrun_average_payoff,
    mean_expected_payoff,
    signal_vector,
    simulate,
    trivial_device,
    uniform_profile,
)
from .equilibrium import (  # noqa: E402
    FULL_LIVENESS,
    PROPER_COMPLETION,
    best_response_by_enumeration,
    best_response_gain,
    check_alignment_witness,
    decide_alignment,
    estimate_deviation_gain,
    eventually_positive,
    search_alignment,
    soundness_alignment_bridge,
    verify_epsilon_equilibrium,
)
from .pnml import emit_pnml, parse_pnml  # noqa: E402
from .documents import parse_annotations, parse_device, parse_profile  # noqa: E402
from .report import AnalysisReport, emit_report, game_export  # noqa: E402
