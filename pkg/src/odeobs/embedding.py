"""Differential embeddings and rank-based local observability.

An output stacked with its successive time derivatives gives an embedding of
the state space; the system is locally observable at a point exactly when the
Jacobian of that stack has rank n there.  Generic rank is estimated by exact
rational evaluation at random integer points followed by fraction-free
elimination: a full-rank sample is a certificate, because rank can only drop
on a measure-zero set.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Mapping, Optional, Sequence, Tuple, Union

from . import linalg
from .expr import (
    DivisionByZeroError,
    Expr,
    Symbol,
    contains_transcendental,
    diff,
    eval_exact,
    eval_float,
)
from .expr import free_symbols as _free_symbols
from .model import ObservationSet, OdeSystem, lie_derivative

AUTO_ORDER = "auto"
DEFAULT_TRIALS = 8
POINT_BOUND = 1000

EXACT_CONFIDENCE = "exact"
PROBABILISTIC_CONFIDENCE = "probabilistic"


class AllPointsDegenerateError(Exception):
    """Every sampled point hit a pole of the matrix entries."""


@dataclass(frozen=True)
class EmbeddingMap:
    """Outputs and their iterated Lie derivatives, grouped per output."""

    components: Tuple[Expr, ...]
    order: int
    n_outputs: int

    def component(self, output_index: int, derivative: int) -> Expr:
        return self.components[output_index * (self.order + 1) + derivative]


@dataclass(frozen=True)
class EmbeddingJacobian:
    entries: Tuple[Tuple[Expr, ...], ...]  # rows x states
    states: Tuple[Symbol, ...]

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def rows(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class RankVerdict:
    generic_rank: int
    trials: int
    sample_points: Tuple[dict, ...]
    point_ranks: Tuple[int, ...]
    confidence: str  # exact | probabilistic
    rows: int
    cols: int


def build_embedding(
    sys: OdeSystem, obs: ObservationSet, k: Union[int, str] = AUTO_ORDER
) -> EmbeddingMap:
    """Stack each output with its first k Lie derivatives (k='auto' -> n-1)."""
    if k == AUTO_ORDER:
        k = sys.n - 1
    if not isinstance(k, int) or k < 0:
        raise ValueError(f"embedding order must be a non-negative integer, got {k!r}")
    components: List[Expr] = []
    for output in obs.outputs:
        current = output
        components.append(current)
        for _ in range(k):
            current = lie_derivative(sys, current)
            components.append(current)
    return EmbeddingMap(tuple(components), order=k, n_outputs=len(obs.outputs))


def jacobian(embedding: EmbeddingMap, sys: OdeSystem) -> EmbeddingJacobian:
    rows = tuple(
        tuple(diff(component, s) for s in sys.states)
        for component in embedding.components
    )
    return EmbeddingJacobian(rows, sys.states)


def _point_key(point: Mapping[Symbol, Fraction]) -> tuple:
    return tuple(sorted(((s.name, v) for s, v in point.items())))


def generic_rank_of(
    rows: Sequence[Sequence[Expr]],
    seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    n_cols: Optional[int] = None,
) -> RankVerdict:
    """Generic rank of a symbolic matrix by exact sampling.

    Points draw integer coordinates uniformly from [-1000, 1000] for every
    symbol appearing in the matrix; draws that hit a pole are retried.  The
    verdict is exact when all entries are rational and the sampled maximum
    reaches min(rows, cols): a nonzero minor at a rational point certifies it.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_rows = len(rows)
    if n_cols is None:
        n_cols = len(rows[0]) if n_rows else 0
    if n_rows == 0 or n_cols == 0:
        return RankVerdict(0, trials, (), (), EXACT_CONFIDENCE, n_rows, n_cols)
    symbols = set()
    for row in rows:
        for entry in row:
            symbols |= _free_symbols(entry)
    symbols = tuple(sorted(symbols, key=lambda s: s.sort_key))
    rational = not any(
        contains_transcendental(entry) for row in rows for entry in row
    )
    rng = random.Random(seed)
    points: List[dict] = []
    ranks: List[int] = []
    attempts = 0
    max_attempts = 200 * trials
    while len(ranks) < trials and attempts < max_attempts:
        attempts += 1
        point = {s: Fraction(rng.randint(-POINT_BOUND, POINT_BOUND)) for s in symbols}
        try:
            if rational:
                matrix = [[eval_exact(entry, point) for entry in row] for row in rows]
                r = linalg.rank(matrix)
            else:
                r = _float_rank(rows, point)
        except (DivisionByZeroError, ZeroDivisionError):
            continue
        points.append(point)
        ranks.append(r)
    if not ranks:
        raise AllPointsDegenerateError(
            f"no valid sample in {max_attempts} draws; all points degenerate"
        )
    order = sorted(range(len(points)), key=lambda i: _point_key(points[i]))
    points = [points[i] for i in order]
    ranks = [ranks[i] for i in order]
    generic = max(ranks)
    confidence = (
        EXACT_CONFIDENCE
        if rational and generic == min(n_rows, n_cols)
        else PROBABILISTIC_CONFIDENCE
    )
    return RankVerdict(
        generic_rank=generic,
        trials=len(ranks),
        sample_points=tuple(points),
        point_ranks=tuple(ranks),
        confidence=confidence,
        rows=n_rows,
        cols=n_cols,
    )


def _float_rank(rows: Sequence[Sequence[Expr]], point: Mapping[Symbol, Fraction]) -> int:
    import numpy as np

    fpoint = {s: float(v) for s, v in point.items()}
    matrix = np.array(
        [[eval_float(entry, fpoint) for entry in row] for row in rows], dtype=float
    )
    return int(np.linalg.matrix_rank(matrix))


def generic_rank(
    j: EmbeddingJacobian, seed: int = 0, trials: int = DEFAULT_TRIALS
) -> RankVerdict:
    return generic_rank_of(j.entries, seed=seed, trials=trials, n_cols=j.n)


def rank_at_point(j: EmbeddingJacobian, point: Mapping[Symbol, Fraction]) -> int:
    """Exact rank of the Jacobian at one fully bound rational point."""
    matrix = [[eval_exact(entry, point) for entry in row] for row in j.entries]
    return linalg.rank(matrix)


@dataclass(frozen=True)
class ObservabilityAssessment:
    label: str
    k: int
    n: int
    rank: RankVerdict
    observable: bool
    probe_ranks: Tuple[Tuple[dict, Optional[int]], ...]
    rank_growing: Optional[bool]  # rank still increasing past the default order


def observability_verdict(
    sys: OdeSystem,
    obs: ObservationSet,
    k: Union[int, str] = AUTO_ORDER,
    seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    probe_points: Sequence[Mapping[Symbol, Fraction]] = (),
) -> ObservabilityAssessment:
    """Bundle embedding construction, Jacobian, and the generic rank test.

    ``probe_points`` are user-supplied full assignments at which the local
    rank is also reported (degenerate loci are found by inspection, not
    solved for).  When the generic rank falls short of n, the embedding is
    re-run one order higher to flag whether the rank was still growing.
    """
    embedding = build_embedding(sys, obs, k)
    jac = jacobian(embedding, sys)
    verdict = generic_rank(jac, seed=seed, trials=trials)
    probes = []
    for point in probe_points:
        try:
            probes.append((dict(point), rank_at_point(jac, point)))
        except (DivisionByZeroError, ZeroDivisionError):
            probes.append((dict(point), None))
    rank_growing: Optional[bool] = None
    if verdict.generic_rank < sys.n:
        higher = build_embedding(sys, obs, embedding.order + 1)
        higher_verdict = generic_rank(jacobian(higher, sys), seed=seed, trials=trials)
        rank_growing = higher_verdict.generic_rank > verdict.generic_rank
    return ObservabilityAssessment(
        label=obs.label,
        k=embedding.order,
        n=sys.n,
        rank=verdict,
        observable=verdict.generic_rank == sys.n,
        probe_ranks=tuple(probes),
        rank_growing=rank_growing,
    )
