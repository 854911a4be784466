"""Why candidate sensors are re-verified by rank, never assumed.

A six-compartment feed-forward cascade (material flows x1 -> x2 -> ... ->
x6 and accumulates) conserves its total.  Eliminating any compartment
through the total turns it into a source node of the transformed graph, so
the structural test happily declares every compartment a valid sensor.
That is wrong: observing an upstream compartment says nothing about how the
remaining material is distributed downstream.  The embedding rank exposes
this, and the alternative-sensor search therefore reports one genuine new
sensor (x5) and four instructive failures.
"""

from odeobs import (
    ConservedSet,
    alternative_observables,
    build_graph,
    graphical_observable,
    minimal_sensor_sets,
    parse_model,
    scc_condensation,
    verify_all_conserved,
)

CHAIN6 = """
model: chain6
params: k1, k2, k3, k4, k5
states: x1, x2, x3, x4, x5, x6
dx1/dt = -k1*x1
dx2/dt = k1*x1 - k2*x2
dx3/dt = k2*x2 - k3*x3
dx4/dt = k3*x3 - k4*x4
dx5/dt = k4*x4 - k5*x5
dx6/dt = k5*x5
conserved T: x1 + x2 + x3 + x4 + x5 + x6
observe end: x6
"""

sys = parse_model(CHAIN6)
print("model:", sys.name)
for s, f in zip(sys.states, sys.rhs):
    print(f"  d{s.name}/dt = {f}")

menu = minimal_sensor_sets(scc_condensation(build_graph(sys)))
print("\nsensor menu of the original cascade:", [s.names() for s in menu.sets])

verified, verdicts = verify_all_conserved(sys)
print("conserved T:", verdicts[0].status)

search = alternative_observables(
    verified, ConservedSet(verified.conserved), [sys.state_named("x6")], seed=0
)
print("\ncandidate sensors via the conserved total (known good: x6):")
for result in search.results:
    if not result.candidate:
        print("  ", result.reason)
        continue
    name = result.candidate[0].name
    graph_says = "sufficient" if result.graphical.sufficient else "insufficient"
    rank = result.assessment.rank.generic_rank
    verdict = "ACCEPTED" if result.positive else "rejected"
    print(
        f"  observe {name}: graph says {graph_says}, "
        f"rank says {rank}/{result.assessment.n} -> {verdict}"
    )

print(
    "\nObserving x_j reveals the compartments up to j plus the lumped total\n"
    "of everything downstream (rank j+1): the transformed graph cannot see\n"
    "that, which is exactly why positives require the rank certificate."
)
