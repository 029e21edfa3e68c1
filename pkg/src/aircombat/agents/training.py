"""Commander training: episodic policy gradient over a staged curriculum.

Plain REINFORCE on the commander's decision log: every decision in an
episode is reinforced by the mission outcome (+1 win, 0 draw, -1 loss)
minus a running-mean baseline over recent episodes.  The per-policy
shaping streams are deliberately not the training signal here — engage
pays an open-ended positioning income, so maximising summed shaping
teaches the commander to orbit the fight instead of finishing it.  The
outcome is the objective the assignment layer exists to move.  Stages
promote on a rolling win-rate threshold; the trainer walks them in
order until the budget runs out.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..combat.rewards import PolicyKind
from ..combat.scenario import ScenarioConfig, drill_scenario
from ..errors import ConfigurationError, ContractViolationError
from .commander import CommanderParams, feature_vector
from .episodes import (
    CommanderController,
    MixedController,
    ScriptedController,
    TeamController,
    run_episode,
)
from .opponents import MIXED_DEFAULT, POLICY_ORDER, MixedStrategy

LEARNING_RATE = 0.01
BASELINE_WINDOW = 100      # episodes feeding the running-mean baseline

OpponentSpec = Union[PolicyKind, MixedStrategy, str]   # "self" for self-play


@dataclass(frozen=True)
class CurriculumStage:
    """One rung of the difficulty ladder."""

    stage_id: str
    config: ScenarioConfig
    opponent: OpponentSpec
    threshold: float          # promotion win rate over the window
    window: int               # rolling window, episodes

    def __post_init__(self):
        if not 0.5 < self.threshold < 1.0:
            raise ConfigurationError(
                f"promotion threshold must sit in (0.5, 1), got {self.threshold}")
        if self.window < 1:
            raise ConfigurationError("window must be at least one episode")
        if not (isinstance(self.opponent, (PolicyKind, MixedStrategy))
                or self.opponent == "self"):
            raise ConfigurationError(f"unknown opponent spec {self.opponent!r}")


def default_curriculum(time_limit: float = 120.0) -> list[CurriculumStage]:
    """Three rungs: evader, mixed singles, mixed pairs.

    All rungs run the decisive close-merge drill so the promotion
    thresholds are actually reachable — difficulty climbs through the
    opponent ladder, not through scenario geometry.  A long-range spawn
    with dice-roll guns draws almost every episode, which starves the
    reinforcement signal and can never clear a 0.7 win-rate bar.
    """
    one_v_one = drill_scenario(blue_count=1, red_count=1, time_limit=time_limit)
    two_v_two = drill_scenario(blue_count=2, red_count=2, time_limit=time_limit)
    return [
        CurriculumStage("stage0", one_v_one, PolicyKind.DEFEND, 0.7, 100),
        CurriculumStage("stage1", one_v_one, MIXED_DEFAULT, 0.6, 100),
        CurriculumStage("stage2", two_v_two, MIXED_DEFAULT, 0.55, 200),
    ]


def _make_opponent(spec: OpponentSpec, params: CommanderParams) -> TeamController:
    if isinstance(spec, PolicyKind):
        return ScriptedController(spec)
    if isinstance(spec, MixedStrategy):
        return MixedController(spec)
    return CommanderController(params, explore=True)      # self-play


@dataclass(frozen=True)
class TrainResult:
    params: CommanderParams
    partial: bool                      # budget gone before the last rung
    stages_completed: tuple[str, ...]
    episodes_used: int
    episode_returns: tuple[float, ...]     # mission outcome per episode
    wins: tuple[bool, ...]


def train_commander(
    initial: CommanderParams,
    curriculum: list[CurriculumStage],
    budget: int,
    alpha: float = LEARNING_RATE,
    base_seed: int = 0,
) -> TrainResult:
    """Train through the curriculum within an episode budget.

    Returns the current parameters on full completion; if the budget
    runs out earlier, returns the snapshot with the best rolling win
    rate seen so far (or the latest parameters when no window filled).
    """
    if budget < 1:
        raise ContractViolationError("training budget must be at least 1 episode")
    if not curriculum:
        raise ConfigurationError("curriculum must contain at least one stage")

    params = initial
    baseline_history: deque[float] = deque(maxlen=BASELINE_WINDOW)
    episode_returns: list[float] = []
    win_log: list[bool] = []
    stages_completed: list[str] = []
    best_params: CommanderParams | None = None
    best_rate = -1.0
    episodes_used = 0

    for stage in curriculum:
        window: deque[bool] = deque(maxlen=stage.window)
        promoted = False
        while episodes_used < budget:
            baseline = (sum(baseline_history) / len(baseline_history)
                        if baseline_history else 0.0)
            controller = CommanderController(params, explore=True, record=True)
            opponent = _make_opponent(stage.opponent, params)
            result = run_episode(
                stage.config, controller, opponent, seed=base_seed + episodes_used)
            episodes_used += 1

            # One batched gradient step per episode: every decision moves
            # by the same outcome advantage.
            outcome = {"blue": 1.0, "red": -1.0}.get(result.winner, 0.0)
            advantage = outcome - baseline
            delta = np.zeros_like(params.weights)
            for record in controller.decisions:
                x = feature_vector(record.decision.features)
                probs = np.array(record.decision.probabilities)
                onehot = np.zeros(len(POLICY_ORDER))
                onehot[POLICY_ORDER.index(record.decision.chosen)] = 1.0
                delta += alpha * advantage * np.outer(onehot - probs, x)
            params = params.with_weights(params.weights + delta)

            baseline_history.append(outcome)
            episode_returns.append(outcome)
            won = result.winner == "blue"
            win_log.append(won)
            window.append(won)

            if len(window) == stage.window:
                rate = sum(window) / stage.window
                if rate > best_rate:
                    best_rate = rate
                    best_params = params
                if rate >= stage.threshold:
                    promoted = True
                    break
        if promoted:
            stages_completed.append(stage.stage_id)
        else:
            break      # budget exhausted inside this stage

    partial = len(stages_completed) < len(curriculum)
    final = params
    if partial and best_params is not None:
        final = best_params
    return TrainResult(
        params=final,
        partial=partial,
        stages_completed=tuple(stages_completed),
        episodes_used=episodes_used,
        episode_returns=tuple(episode_returns),
        wins=tuple(win_log),
    )
