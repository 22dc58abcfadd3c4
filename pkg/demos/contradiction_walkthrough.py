"""Reproducing the two multi-agent contradictions end to end.

Both scenarios follow the same recipe: read certainty deductions off the
knowledge tables, chain them across agents, assemble each agent's plot
(observed values plus deduced equalities), and check every pair of plots for
biconditional agreement on shared slots.  A clash localizes to the one link
derived with the subjective update rule.
"""

from wignersim import (
    NO_COLLAPSE,
    OBJECTIVE_COLLAPSE,
    CollapseModel,
    build_deutsch_scenario,
    build_fr_scenario,
)


def narrate(outcome):
    print(f"chain:   {outcome.chain.render()}")
    for name, plot in outcome.plots.items():
        print(f"s^{name:<3} = {plot.render()}")
    if outcome.consistent:
        print("verdict: consistent, all compatibility constraints hold")
    else:
        print("verdict: CONTRADICTION")
        print(outcome.report.to_text())
    print()


print("=" * 72)
print("Nested labs, F1 applies the update rule to his own measurement")
print("=" * 72)
narrate(build_fr_scenario(CollapseModel.subjective("F1")))

print("=" * 72)
print("Nested labs, F1 keeps everything unitary")
print("=" * 72)
narrate(build_fr_scenario(NO_COLLAPSE))

print("=" * 72)
print("Nested labs, update rule at every measurement")
print("=" * 72)
print("(the assistant's collapse scrambles F1's record, so F1 gains no")
print("certainty about Wigner and the chain stops early)")
narrate(build_fr_scenario(OBJECTIVE_COLLAPSE))

print("=" * 72)
print("Single lab with reported bits (x: definite outcome seen, y: can the")
print("minus result occur)")
print("=" * 72)
narrate(build_deutsch_scenario())

print("=" * 72)
print("Same, but the friend also reasons unitarily about his measurement")
print("=" * 72)
narrate(build_deutsch_scenario(friend_assumes_collapse=False))

print("=" * 72)
print("Same, but Wigner measures in the record-copying product basis")
print("=" * 72)
narrate(build_deutsch_scenario(wigner_basis="product"))
