"""Hierarchical agent layer.

Three scripted control policies fly the aircraft (pursue, stalk, flee);
a small trainable commander picks which one each aircraft runs, at 1 Hz.
Episode rollout, win-rate evaluation and the commander's policy-gradient
trainer live here too.
"""

from .commander import (
    CommanderDecision,
    CommanderFeatures,
    CommanderParams,
    commander_features,
    commander_select,
    feature_vector,
    initial_params,
    log_policy_grad,
    softmax,
)
from .episodes import (
    CommanderController,
    EpisodeResult,
    MixedController,
    ScriptedController,
    TeamController,
    WinRateReport,
    evaluate_winrate,
    run_episode,
    wilson_interval,
)
from .opponents import MIXED_DEFAULT, MixedStrategy, mixed_opponent_assign
from .policies import ALTITUDE_FLOOR, control_policy
from .training import (
    CurriculumStage,
    TrainResult,
    default_curriculum,
    train_commander,
)
from ..combat.rewards import PolicyKind

__all__ = [
    "ALTITUDE_FLOOR", "CommanderController", "CommanderDecision",
    "CommanderFeatures", "CommanderParams", "CurriculumStage",
    "EpisodeResult", "MIXED_DEFAULT", "MixedController", "MixedStrategy",
    "PolicyKind", "ScriptedController", "TeamController", "TrainResult",
    "WinRateReport", "commander_features", "commander_select",
    "control_policy", "default_curriculum", "evaluate_winrate",
    "feature_vector", "initial_params", "log_policy_grad",
    "mixed_opponent_assign", "run_episode", "softmax", "train_commander",
    "wilson_interval",
]
