"""Alternative sensor discovery through conserved quantities.

Given a set of conserved quantities G and a sensor set s known to make the
system observable, split the states into x = (r, s).  When dG/ds is
(generically) invertible and dG/dr has full (generic) rank, the level
equations implicitly express s in terms of r, so suitable outputs built from
r-side variables inherit observability.  The constructive case is affine G:
the level equations solve exactly, each r-side variable appearing in G can
be eliminated in its turn, and the eliminated variable becomes a source node
of the transformed graph.  Every candidate produced this way is re-verified
by both the graphical test and the embedding rank test; the implication is
never trusted on its own.

Failures (rank conditions not met, non-affine quantities, size mismatches)
are returned as data: a conserved set that does not help is a finding, not
an error.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import linalg
from .expr import Const, Expr, Sym, Symbol, add, diff, mul, neg, substitute
from .embedding import (
    DEFAULT_TRIALS,
    ObservabilityAssessment,
    RankVerdict,
    generic_rank_of,
    observability_verdict,
)
from .graph import GraphicalVerdict, build_graph, graphical_observable, scc_condensation
from .model import (
    ConservedSet,
    ModelError,
    ObservationSet,
    OdeSystem,
    UNCHECKED,
    reduce_by_conserved,
)

PARTITION_CAP = 1000


class NotSquareError(Exception):
    """dG/ds can only be invertible when quantities match sufficient vars."""

    def __init__(self, n_quantities: int, n_sufficient: int):
        super().__init__(
            f"{n_quantities} conserved quantities against "
            f"{n_sufficient} sufficient variables"
        )
        self.n_quantities = n_quantities
        self.n_sufficient = n_sufficient


class NotAffineSetError(ModelError):
    """A quantity is not affine (with constant coefficients) in the block."""


@dataclass(frozen=True)
class Partition:
    r_vars: Tuple[Symbol, ...]
    s_vars: Tuple[Symbol, ...]

    def __post_init__(self):
        if set(self.r_vars) & set(self.s_vars):
            raise ValueError("partition blocks overlap")
        if not self.s_vars:
            raise ValueError("sufficient block must be nonempty")


@dataclass(frozen=True)
class PartitionJacobians:
    partition: Partition
    dg_dr: Tuple[Tuple[Expr, ...], ...]  # quantities x r_vars
    dg_ds: Tuple[Tuple[Expr, ...], ...]  # quantities x s_vars


@dataclass(frozen=True)
class ExchangeConditions:
    """Verdicts for the two Jacobian-block conditions of the sensor exchange."""

    ds_rank: RankVerdict
    dr_rank: RankVerdict
    ds_invertible: bool
    dr_full_rank: bool
    dr_required: int

    @property
    def holds(self) -> bool:
        return self.ds_invertible and self.dr_full_rank


@dataclass(frozen=True)
class AlternativeSensorResult:
    """One outcome of the alternative-sensor search.

    Positive results carry the candidate sensor variables, the transformed
    system in which they became sources, and both re-verification verdicts.
    Negative results keep the partition and whatever was established before
    the search stopped, with ``reason`` explaining why.
    """

    reason: str
    positive: bool
    partition: Optional[Partition] = None
    conditions: Optional[ExchangeConditions] = None
    solution: Optional[Dict[Symbol, Expr]] = None  # s-vars in terms of r-vars
    candidate: Optional[Tuple[Symbol, ...]] = None
    transformed: Optional[OdeSystem] = None
    graphical: Optional[GraphicalVerdict] = None
    assessment: Optional[ObservabilityAssessment] = None


@dataclass(frozen=True)
class AlternativeSearch:
    results: Tuple[AlternativeSensorResult, ...]
    truncated: bool

    def positives(self) -> Tuple[AlternativeSensorResult, ...]:
        return tuple(r for r in self.results if r.positive)

    def positive_sets(self) -> Tuple[Tuple[str, ...], ...]:
        return tuple(
            tuple(sorted(s.name for s in r.candidate)) for r in self.positives()
        )


def partition_jacobians(g: ConservedSet, p: Partition) -> PartitionJacobians:
    """Block split of the conserved-set Jacobian along the partition."""
    dg_dr = tuple(
        tuple(diff(q.expr, v) for v in p.r_vars) for q in g.quantities
    )
    dg_ds = tuple(
        tuple(diff(q.expr, v) for v in p.s_vars) for q in g.quantities
    )
    return PartitionJacobians(p, dg_dr, dg_ds)


def exchange_conditions(
    pj: PartitionJacobians, seed: int = 0, trials: int = DEFAULT_TRIALS
) -> ExchangeConditions:
    """Generic invertibility of dG/ds and full generic rank of dG/dr."""
    n_q = len(pj.dg_ds)
    n_s = len(pj.partition.s_vars)
    if n_q != n_s:
        raise NotSquareError(n_q, n_s)
    ds_rank = generic_rank_of(pj.dg_ds, seed=seed, trials=trials, n_cols=n_s)
    n_r = len(pj.partition.r_vars)
    dr_rank = generic_rank_of(pj.dg_dr, seed=seed, trials=trials, n_cols=n_r)
    required = min(n_q, n_r)
    return ExchangeConditions(
        ds_rank=ds_rank,
        dr_rank=dr_rank,
        ds_invertible=ds_rank.generic_rank == n_s,
        dr_full_rank=dr_rank.generic_rank == required,
        dr_required=required,
    )


def conserved_set_independent(
    sys: OdeSystem, g: ConservedSet, seed: int = 0, trials: int = DEFAULT_TRIALS
) -> bool:
    """Generic linear independence of the quantity gradients."""
    rows = tuple(
        tuple(diff(q.expr, s) for s in sys.states) for q in g.quantities
    )
    verdict = generic_rank_of(rows, seed=seed, trials=trials, n_cols=sys.n)
    return verdict.generic_rank == len(g.quantities)


def solve_affine(
    g: ConservedSet, levels: Sequence[Symbol], p: Partition
) -> Dict[Symbol, Expr]:
    """Solve the level equations G(r, s) = levels for the s block exactly.

    Requires every quantity to be affine in the s variables with constant
    coefficients, which covers the conservation laws that arise from
    stoichiometry and population balance; the result maps each s variable to
    an expression in the r variables and the level symbols.
    """
    if len(g.quantities) != len(p.s_vars) or len(levels) != len(p.s_vars):
        raise NotSquareError(len(g.quantities), len(p.s_vars))
    matrix: List[List[Fraction]] = []
    for q in g.quantities:
        row = []
        for v in p.s_vars:
            coeff = diff(q.expr, v)
            if not isinstance(coeff, Const):
                raise NotAffineSetError(
                    f"{q.level_name} is not affine in {v.name}"
                )
            row.append(coeff.value)
        matrix.append(row)
    zeros = {v: Const(Fraction(0)) for v in p.s_vars}
    residuals = [
        add(Sym(level), neg(substitute(q.expr, zeros)))
        for q, level in zip(g.quantities, levels)
    ]
    inverse = linalg.invert(matrix)  # SingularMatrixError when not invertible
    solution: Dict[Symbol, Expr] = {}
    for j, v in enumerate(p.s_vars):
        solution[v] = add(
            *[mul(Const(inverse[j][i]), residuals[i]) for i in range(len(residuals))]
        )
    return solution


def eliminate_states(
    sys: OdeSystem, g: ConservedSet, eliminate: Sequence[Symbol]
) -> OdeSystem:
    """Transform the system so the eliminated states become source nodes.

    Single-variable elimination goes through
    :func:`odeobs.model.reduce_by_conserved`.  For several variables the
    level equations are solved jointly, because sequential substitution would
    reintroduce previously eliminated variables.
    """
    if len(g.quantities) != len(eliminate):
        raise NotSquareError(len(g.quantities), len(eliminate))
    if len(eliminate) == 1:
        return reduce_by_conserved(sys, g.quantities[0], eliminate[0])
    for q in g.quantities:
        if q.verified == UNCHECKED:
            raise ModelError("conserved quantities must be verified before reduction")
    others = tuple(s for s in sys.states if s not in eliminate)
    part = Partition(r_vars=others, s_vars=tuple(eliminate))
    solution = solve_affine(g, [q.level_symbol() for q in g.quantities], part)
    new_rhs: List[Expr] = list(sys.rhs)
    for i, s in enumerate(sys.states):
        if s not in eliminate:
            new_rhs[i] = substitute(sys.rhs[i], solution)
    for v in eliminate:
        terms = [
            mul(diff(solution[v], s), new_rhs[sys.state_index(s)]) for s in others
        ]
        new_rhs[sys.state_index(v)] = add(*terms)
    levels = tuple(q.level_symbol() for q in g.quantities)
    for level in levels:
        if level in sys.params or level in sys.states:
            raise ModelError(f"level symbol {level.name!r} collides with the model")
    suffix = "_".join(v.name for v in eliminate)
    return OdeSystem(
        name=f"{sys.name}.joint_for_{suffix}",
        states=sys.states,
        params=sys.params + levels,
        rhs=tuple(new_rhs),
        conserved=tuple(q.with_verified(UNCHECKED) for q in sys.conserved),
        observations=sys.observations,
    )


def _candidate_solvable(g: ConservedSet, sys: OdeSystem, candidate: Tuple[Symbol, ...]) -> bool:
    """The level equations must be affine and invertible in the candidate block."""
    others = tuple(s for s in sys.states if s not in candidate)
    try:
        solve_affine(
            g, [q.level_symbol() for q in g.quantities], Partition(others, candidate)
        )
    except (NotAffineSetError, linalg.SingularMatrixError, NotSquareError):
        return False
    return True


def alternative_observables(
    sys: OdeSystem,
    g: ConservedSet,
    known_sufficient: Iterable[Symbol],
    seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    partition_cap: int = PARTITION_CAP,
) -> AlternativeSearch:
    """Search for sensor sets made sufficient by the conserved quantities.

    ``known_sufficient`` must already be a sufficient sensor set (graphical
    or rank verified).  Partitions take the sufficient variables that occur
    in the conserved set as the s block (all size-l subsets when more are
    supplied than there are quantities).  Wherever the Jacobian conditions
    hold and the quantities are affine, each r-side variable occurring in
    the conserved set is eliminated in turn and re-verified as a sensor by
    both the graphical and the rank test.
    """
    for q in g.quantities:
        if q.verified == UNCHECKED:
            raise ModelError(
                f"conserved quantity {q.level_name} must be verified first"
            )
    n_q = len(g.quantities)
    results: List[AlternativeSensorResult] = []
    if n_q == 0:
        return AlternativeSearch(
            (AlternativeSensorResult("no conserved quantities supplied", False),),
            False,
        )
    order = {s: i for i, s in enumerate(sys.states)}
    known = sorted(set(known_sufficient), key=lambda s: order[s])
    g_vars = set(g.state_vars(sys))
    pool = [v for v in known if v in g_vars]
    if len(pool) < n_q:
        return AlternativeSearch(
            (
                AlternativeSensorResult(
                    f"only {len(pool)} of the known sufficient variables occur in "
                    f"the conserved set; {n_q} needed for an admissible partition",
                    False,
                ),
            ),
            False,
        )
    if not conserved_set_independent(sys, g, seed=seed, trials=trials):
        return AlternativeSearch(
            (
                AlternativeSensorResult(
                    "conserved-quantity gradients are generically dependent",
                    False,
                ),
            ),
            False,
        )

    truncated = False
    n_partitions = 0
    for s_vars in itertools.combinations(pool, n_q):
        if n_partitions >= partition_cap:
            truncated = True
            break
        n_partitions += 1
        r_vars = tuple(s for s in sys.states if s not in s_vars)
        part = Partition(r_vars=r_vars, s_vars=tuple(s_vars))
        pj = partition_jacobians(g, part)
        conditions = exchange_conditions(pj, seed=seed, trials=trials)
        if not conditions.holds:
            failed = []
            if not conditions.ds_invertible:
                failed.append("dG/ds not generically invertible")
            if not conditions.dr_full_rank:
                failed.append(
                    f"dG/dr generic rank {conditions.dr_rank.generic_rank} "
                    f"< {conditions.dr_required}"
                )
            results.append(
                AlternativeSensorResult(
                    "; ".join(failed), False, partition=part, conditions=conditions
                )
            )
            continue
        try:
            solution = solve_affine(
                g, [q.level_symbol() for q in g.quantities], part
            )
        except (NotAffineSetError, linalg.SingularMatrixError):
            results.append(
                AlternativeSensorResult(
                    "conditions hold, but the conserved set is not affine in the "
                    "sufficient variables; no constructive substitution",
                    False,
                    partition=part,
                    conditions=conditions,
                )
            )
            continue
        r_pool = [v for v in part.r_vars if v in g_vars]
        candidates = [
            w
            for w in itertools.combinations(r_pool, n_q)
            if _candidate_solvable(g, sys, w)
        ]
        if not candidates:
            results.append(
                AlternativeSensorResult(
                    "conditions hold but no solvable replacement variables exist",
                    False,
                    partition=part,
                    conditions=conditions,
                    solution=solution,
                )
            )
            continue
        for w in candidates:
            transformed = eliminate_states(sys, g, w)
            graph = build_graph(transformed, seed=seed)
            condensation = scc_condensation(graph)
            graphical = graphical_observable(condensation, w)
            assessment = observability_verdict(
                transformed,
                ObservationSet(tuple(Sym(v) for v in w), "+".join(v.name for v in w)),
                seed=seed,
                trials=trials,
            )
            positive = assessment.observable
            reason = (
                "replacement sensors verified by rank"
                if positive
                else "rank re-verification failed on the transformed system"
            )
            results.append(
                AlternativeSensorResult(
                    reason,
                    positive,
                    partition=part,
                    conditions=conditions,
                    solution=solution,
                    candidate=w,
                    transformed=transformed,
                    graphical=graphical,
                    assessment=assessment,
                )
            )
    return AlternativeSearch(tuple(results), truncated)
