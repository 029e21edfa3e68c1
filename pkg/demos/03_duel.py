"""
A gun duel between scripted behaviors
=====================================

Rolls one close-merge drill episode — pursuit versus evasion — and
narrates the event log, then ranks the two behaviors over ten seeds.
"""

from aircombat.agents import (
    PolicyKind,
    ScriptedController,
    evaluate_winrate,
    run_episode,
)
from aircombat.combat import drill_scenario

config = drill_scenario()                 # 3 km nose-to-nose, lethal guns
result = run_episode(
    config,
    blue=ScriptedController(PolicyKind.ATTACK),
    red=ScriptedController(PolicyKind.DEFEND),
    seed=0,
)

print(f"winner: {result.winner} after {result.steps} steps "
      f"({result.steps * 0.05:.1f} s)")
print("event log:")
for event in result.events:
    actors = " ".join(
        str(e) for e in (event.shooter, event.target) if e is not None)
    print(f"  t={event.time:6.2f}s  {event.kind.value:<7} {actors}")

print("\ndiscounted returns:")
for eid, value in sorted(result.returns.items(), key=str):
    print(f"  {eid}: {value:+.3f}")

# One seed is an anecdote; ten are a ranking.
report = evaluate_winrate(
    config,
    ScriptedController(PolicyKind.ATTACK),
    ScriptedController(PolicyKind.DEFEND),
    episodes=10,
)
print(f"\npursuit vs evasion over {report.episodes} seeds: "
      f"{report.wins} wins, {report.draws} draws, "
      f"95% CI [{report.ci_low:.2f}, {report.ci_high:.2f}]")
