"""Epidemic tracking with a choice of sensors.

The constant-population SIR model is the classic example of a system where
the dependency structure seems to dictate what must be measured: only the
recovered count R has no incoming influence, so the graphical test says
"measure R".  This script walks through why that is, and then shows how the
conserved total population N = S + I + R turns *any* single compartment
into a valid sensor.
"""

from pathlib import Path

from odeobs import (
    ConservedSet,
    alternative_observables,
    build_graph,
    export_dot,
    graphical_observable,
    minimal_sensor_sets,
    load_model,
    observability_verdict,
    reduce_by_conserved,
    scc_condensation,
    unobservability_witness,
    verify_all_conserved,
)

MODELS = Path(__file__).resolve().parent.parent / "models"

sir = load_model(MODELS / "sir.model")
print("model:", sir.name)
for s, f in zip(sir.states, sir.rhs):
    print(f"  d{s.name}/dt = {f}")

# -- 1. the inference graph says: measure R ---------------------------------
graph = build_graph(sir)
condensation = scc_condensation(graph)
menu = minimal_sensor_sets(condensation)
print("\nedges:", graph.edge_names())
print("source components:", [[s.name for s in c] for c in condensation.root_components()])
print("minimal sensor menu:", [s.names() for s in menu.sets])

verdict_i = graphical_observable(condensation, [sir.state_named("I")])
print("observing only I:", "sufficient" if verdict_i.sufficient else "insufficient")

# -- 2. the rank test agrees ------------------------------------------------
for label in ("R", "I"):
    obs = next(o for o in sir.observations if o.label == label)
    assessment = observability_verdict(sir, obs, seed=0)
    print(
        f"rank test observing {label}: generic rank "
        f"{assessment.rank.generic_rank}/{assessment.n} "
        f"({'observable' if assessment.observable else 'not observable'})"
    )

# -- 3. and the failure of {I} is physical, not an artifact ------------------
params = {"beta": 0.0004, "lambda": 0.04}
witness = unobservability_witness(
    sir,
    next(o for o in sir.observations if o.label == "I"),
    (997.0, 3.0, 0.0),
    params,
    dt=0.01,
    T=10.0,
    delta=5.0,
)
print(
    "\nwitness: shifting", witness.direction,
    "by 5 people changes the observed I-trajectory by",
    witness.output_distance,
)

# -- 4. the conserved population changes the answer -------------------------
verified, verdicts = verify_all_conserved(sir)
print("\nconserved N = S + I + R:", verdicts[0].status)

search = alternative_observables(
    verified, ConservedSet(verified.conserved), [sir.state_named("R")], seed=0
)
for result in search.positives():
    names = "+".join(s.name for s in result.candidate)
    print(
        f"substituting through N makes {{{names}}} a sensor: "
        f"rank {result.assessment.rank.generic_rank}/{result.assessment.n}, "
        f"graphically {'sufficient' if result.graphical.sufficient else 'insufficient'}"
    )

# -- 5. what the transformed system looks like -------------------------------
red = reduce_by_conserved(verified, verified.conserved[0], sir.state_named("I"))
print("\nafter eliminating I through N:")
for s, f in zip(red.states, red.rhs):
    print(f"  d{s.name}/dt = {f}")
print("\nDOT of the transformed graph:\n")
print(export_dot(build_graph(red), scc_condensation(build_graph(red))))
