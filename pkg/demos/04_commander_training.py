"""
Teaching the commander which fight to pick
==========================================

The commander is a linear softmax over tactical features that assigns
one of three behaviors to each aircraft once per second.  This trains
it on the first curriculum rung — a duel against an evader — with
plain outcome-reinforced policy gradient, and shows the win rate it
banks along the way.
"""

from aircombat.agents import (
    CommanderController,
    PolicyKind,
    ScriptedController,
    evaluate_winrate,
)
from aircombat.agents.commander import initial_params
from aircombat.agents.training import default_curriculum, train_commander

stage0 = default_curriculum(time_limit=40.0)[0]
print(f"rung: {stage0.stage_id}, opponent {stage0.opponent.value}, "
      f"promotes at {stage0.threshold:.0%} over {stage0.window} episodes")

before = evaluate_winrate(
    stage0.config, CommanderController(initial_params()),
    ScriptedController(PolicyKind.DEFEND), episodes=30)
print(f"untrained commander:  {before.wins}/{before.episodes} wins")

result = train_commander(
    initial_params(), [stage0], budget=300, base_seed=1000)
print(f"training used {result.episodes_used} episodes; "
      f"rungs completed: {', '.join(result.stages_completed) or 'none'}")

# The exploring win rate climbs as the softmax sharpens.
chunk = 25
for start in range(0, len(result.wins), chunk):
    block = result.wins[start:start + chunk]
    bar = "#" * round(20 * sum(block) / len(block))
    print(f"  episodes {start:3d}-{start + len(block) - 1:3d}: "
          f"{sum(block) / len(block):5.0%} {bar}")

after = evaluate_winrate(
    stage0.config, CommanderController(result.params),
    ScriptedController(PolicyKind.DEFEND), episodes=30)
print(f"trained commander:    {after.wins}/{after.episodes} wins")
