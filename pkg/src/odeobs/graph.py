"""Inference graph of an ODE system, SCC condensation, sensor menus.

The graph has an edge x_i -> x_j whenever x_j genuinely enters the equation
for x_i.  Dependence is semantic, not textual: a variable that cancels
identically creates no edge.  A variable must be observed in every source
component (an SCC of the condensation with no incoming edge), and choosing
one variable per source component is both minimal and, structurally,
sufficient; the rank test is the authoritative local check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, List, Set, Tuple

from .expr import Expr, Symbol, TranscendentalNodeError, diff, free_symbols
from .model import OdeSystem
from .poly import is_zero, normalize_rational

DEFAULT_SENSOR_SET_CAP = 10_000


@dataclass(frozen=True)
class InferenceGraph:
    nodes: Tuple[Symbol, ...]
    edges: Tuple[Tuple[Symbol, Symbol], ...]  # sorted by node order, deterministic

    def successors(self, node: Symbol) -> Tuple[Symbol, ...]:
        return tuple(dst for src, dst in self.edges if src == node)

    def edge_names(self) -> Tuple[Tuple[str, str], ...]:
        return tuple((a.name, b.name) for a, b in self.edges)


@dataclass(frozen=True)
class Condensation:
    components: Tuple[Tuple[Symbol, ...], ...]  # each in state order
    dag_edges: Tuple[Tuple[int, int], ...]  # indices into components
    roots: Tuple[int, ...]  # component indices with no incoming edge

    def root_components(self) -> Tuple[Tuple[Symbol, ...], ...]:
        return tuple(self.components[i] for i in self.roots)

    def component_of(self, node: Symbol) -> int:
        for i, comp in enumerate(self.components):
            if node in comp:
                return i
        raise KeyError(node.name)


@dataclass(frozen=True)
class SensorSet:
    variables: frozenset
    minimal: bool

    def names(self) -> Tuple[str, ...]:
        return tuple(sorted(s.name for s in self.variables))


@dataclass(frozen=True)
class SensorMenu:
    sets: Tuple[SensorSet, ...]
    truncated: bool


@dataclass(frozen=True)
class GraphicalVerdict:
    sufficient: bool
    missing_roots: Tuple[Tuple[Symbol, ...], ...]


def _depends_on(rhs: Expr, var: Symbol, seed: int) -> bool:
    """Semantic dependence of an expression on a state variable."""
    if var not in free_symbols(rhs):
        return False
    try:
        form = normalize_rational(rhs)
    except TranscendentalNodeError:
        return not is_zero(diff(rhs, var), seed=seed).is_zero_like
    for poly in (form.num, form.den):
        if var in poly.vars and poly.degree_in(poly.vars.index(var)) > 0:
            return True
    return False


def build_graph(sys: OdeSystem, seed: int = 0) -> InferenceGraph:
    """Edge x_i -> x_j iff x_j enters dx_i/dt after simplification."""
    index = {s: i for i, s in enumerate(sys.states)}
    edges = []
    for src, rhs in zip(sys.states, sys.rhs):
        for dst in sys.states:
            if _depends_on(rhs, dst, seed):
                edges.append((src, dst))
    edges.sort(key=lambda e: (index[e[0]], index[e[1]]))
    return InferenceGraph(nodes=sys.states, edges=tuple(edges))


def scc_condensation(g: InferenceGraph) -> Condensation:
    """Tarjan's strongly connected components plus the condensation DAG."""
    index_of: Dict[Symbol, int] = {}
    lowlink: Dict[Symbol, int] = {}
    on_stack: Set[Symbol] = set()
    stack: List[Symbol] = []
    counter = itertools.count()
    sccs: List[Set[Symbol]] = []
    succ: Dict[Symbol, List[Symbol]] = {n: [] for n in g.nodes}
    for a, b in g.edges:
        succ[a].append(b)

    def strongconnect(v: Symbol) -> None:
        index_of[v] = lowlink[v] = next(counter)
        stack.append(v)
        on_stack.add(v)
        for w in succ[v]:
            if w not in index_of:
                strongconnect(w)
                lowlink[v] = min(lowlink[v], lowlink[w])
            elif w in on_stack:
                lowlink[v] = min(lowlink[v], index_of[w])
        if lowlink[v] == index_of[v]:
            comp = set()
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.add(w)
                if w == v:
                    break
            sccs.append(comp)

    for v in g.nodes:
        if v not in index_of:
            strongconnect(v)

    node_order = {s: i for i, s in enumerate(g.nodes)}
    ordered = sorted(
        (tuple(sorted(comp, key=lambda s: node_order[s])) for comp in sccs),
        key=lambda comp: node_order[comp[0]],
    )
    comp_of = {node: i for i, comp in enumerate(ordered) for node in comp}
    dag_edges = sorted(
        {
            (comp_of[a], comp_of[b])
            for a, b in g.edges
            if comp_of[a] != comp_of[b]
        }
    )
    has_incoming = {dst for _, dst in dag_edges}
    roots = tuple(i for i in range(len(ordered)) if i not in has_incoming)
    return Condensation(tuple(ordered), tuple(dag_edges), roots)


def minimal_sensor_sets(
    c: Condensation, limit: int = DEFAULT_SENSOR_SET_CAP
) -> SensorMenu:
    """All ways to pick one variable from each source component."""
    roots = c.root_components()
    if not roots:
        return SensorMenu((), False)
    sets: List[SensorSet] = []
    truncated = False
    for choice in itertools.product(*roots):
        if len(sets) >= limit:
            truncated = True
            break
        sets.append(SensorSet(frozenset(choice), minimal=True))
    return SensorMenu(tuple(sets), truncated)


def graphical_observable(c: Condensation, observed: Iterable[Symbol]) -> GraphicalVerdict:
    """Structurally sufficient iff every source component is observed."""
    observed = set(observed)
    missing = tuple(
        comp for comp in c.root_components() if not observed & set(comp)
    )
    return GraphicalVerdict(sufficient=not missing, missing_roots=missing)


def export_dot(g: InferenceGraph, c: Condensation) -> str:
    """Deterministic DOT rendering; SCCs as clusters, source SCCs marked."""
    if not g.nodes:
        return "digraph {\n}\n"
    root_nodes = {n for i in c.roots for n in c.components[i]}
    lines = ["digraph inference {"]
    for i, comp in enumerate(c.components):
        tag = " (source)" if i in c.roots else ""
        lines.append(f"  subgraph cluster_{i} {{")
        lines.append(f'    label="scc_{i}{tag}";')
        for node in comp:
            if node in root_nodes:
                lines.append(f"    {node.name} [root=true, penwidth=2];")
            else:
                lines.append(f"    {node.name};")
        lines.append("  }")
    for a, b in g.edges:
        lines.append(f"  {a.name} -> {b.name};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def forward_closure(g: InferenceGraph, start: Iterable[Symbol]) -> Set[Symbol]:
    """States whose values influence the trajectories of ``start``.

    Follows the graph's own edge direction: x -> y means y enters dx/dt, so
    everything reachable from an observed state feeds its evolution.
    """
    seen = set(start)
    frontier = list(seen)
    succ: Dict[Symbol, List[Symbol]] = {n: [] for n in g.nodes}
    for a, b in g.edges:
        succ[a].append(b)
    while frontier:
        node = frontier.pop()
        for nxt in succ.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen
