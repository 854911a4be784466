"""Numeric cross-checks: RK4 trajectories, drift, distinguishability.

The integrator is a deliberately plain fixed-step classical Runge-Kutta: the
systems here are smooth and small, and a fixed grid keeps drift measurements
and output comparisons deterministic.  Expressions are compiled to Python
callables once per run, so stepping stays cheap.

A search for an unobservability witness perturbs the base point only along
state directions whose values cannot influence the observed outputs (states
not reachable from the observed nodes in the inference graph); two initial
conditions whose observed outputs coincide on the whole grid refute
observability empirically.  Finding no witness never proves observability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .expr import Add, Const, Div, Exp, Expr, Ln, Mul, Neg, PowInt, Sym, Symbol
from .graph import build_graph, forward_closure
from .model import ConservedQuantity, ObservationSet, OdeSystem

ZERO_DISTANCE = 1e-12  # outputs closer than this over the grid count as identical


class EvaluationError(Exception):
    def __init__(self, t: float, reason: str):
        super().__init__(f"evaluation failed at t={t}: {reason}")
        self.t = t
        self.reason = reason


@dataclass(frozen=True)
class Trajectory:
    states: Tuple[Symbol, ...]
    times: np.ndarray  # uniform grid starting at 0
    values: np.ndarray  # len(times) x n
    params: Dict[str, float]
    diverged: bool = False

    @property
    def n(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class WitnessPair:
    x0_a: Tuple[float, ...]
    x0_b: Tuple[float, ...]
    output_distance: float
    horizon: float
    direction: Optional[str] = None  # perturbed state name, when applicable


def _emit(e: Expr, index: Mapping[Symbol, int], params: Mapping[Symbol, float]) -> str:
    if isinstance(e, Const):
        return repr(float(e.value))
    if isinstance(e, Sym):
        s = e.symbol
        if s in index:
            return f"x[{index[s]}]"
        if s in params:
            return repr(float(params[s]))
        raise KeyError(f"unbound symbol {s.name!r}")
    if isinstance(e, Add):
        return "(" + " + ".join(_emit(t, index, params) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(_emit(f, index, params) for f in e.factors) + ")"
    if isinstance(e, Neg):
        return "(-" + _emit(e.arg, index, params) + ")"
    if isinstance(e, Div):
        return f"({_emit(e.num, index, params)} / {_emit(e.den, index, params)})"
    if isinstance(e, PowInt):
        return f"({_emit(e.base, index, params)} ** {e.exponent})"
    if isinstance(e, Ln):
        return f"math.log({_emit(e.arg, index, params)})"
    if isinstance(e, Exp):
        return f"math.exp({_emit(e.arg, index, params)})"
    raise TypeError(f"unhandled node {e!r}")


def _normalize_params(sys: OdeSystem, params: Mapping) -> Dict[Symbol, float]:
    by_name = {p.name: p for p in sys.params}
    out: Dict[Symbol, float] = {}
    for key, value in params.items():
        name = key.name if isinstance(key, Symbol) else str(key)
        if name not in by_name:
            raise KeyError(f"unknown parameter {name!r}")
        out[by_name[name]] = float(value)
    missing = [p.name for p in sys.params if p not in out]
    if missing:
        raise KeyError(f"missing parameter values for {missing}")
    return out


def compile_functions(
    sys: OdeSystem, exprs: Sequence[Expr], params: Mapping
) -> Callable[[Sequence[float]], Tuple[float, ...]]:
    """Compile expressions over the state vector with parameters inlined."""
    bound = _normalize_params(sys, params)
    index = {s: i for i, s in enumerate(sys.states)}
    bodies = ", ".join(_emit(e, index, bound) for e in exprs)
    src = f"def _compiled(x):\n    return ({bodies}{',' if len(exprs) == 1 else ''})\n"
    namespace = {"math": math}
    exec(src, namespace)
    return namespace["_compiled"]


def _normalize_x0(sys: OdeSystem, x0) -> np.ndarray:
    if isinstance(x0, Mapping):
        by_name = {
            (k.name if isinstance(k, Symbol) else str(k)): float(v)
            for k, v in x0.items()
        }
        try:
            return np.array([by_name[s.name] for s in sys.states], dtype=float)
        except KeyError as exc:
            raise KeyError(f"missing initial value for state {exc.args[0]!r}") from None
    arr = np.asarray(list(x0), dtype=float)
    if arr.shape != (sys.n,):
        raise ValueError(f"expected {sys.n} initial values, got {arr.shape}")
    return arr


def integrate_rk4(
    sys: OdeSystem,
    x0,
    params: Mapping,
    dt: float,
    T: float,
) -> Trajectory:
    """Classical fixed-step RK4 from t=0 to T; divergence truncates."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if T < dt:
        raise ValueError("T must be at least dt")
    f = compile_functions(sys, sys.rhs, params)
    steps = int(math.floor(T / dt + 1e-9))
    x = [float(v) for v in _normalize_x0(sys, x0)]
    values = np.empty((steps + 1, sys.n), dtype=float)
    values[0] = x
    diverged = False
    half = dt / 2.0
    sixth = dt / 6.0
    filled = steps + 1
    for i in range(steps):
        t = i * dt
        try:
            k1 = f(x)
            k2 = f([xv + half * kv for xv, kv in zip(x, k1)])
            k3 = f([xv + half * kv for xv, kv in zip(x, k2)])
            k4 = f([xv + dt * kv for xv, kv in zip(x, k3)])
        except ZeroDivisionError:
            raise EvaluationError(t, "division by zero") from None
        except ValueError as exc:
            raise EvaluationError(t, str(exc)) from None
        except OverflowError:
            diverged = True
            filled = i + 1
            break
        x = [
            xv + sixth * (a + 2.0 * b + 2.0 * c + d)
            for xv, a, b, c, d in zip(x, k1, k2, k3, k4)
        ]
        if not all(math.isfinite(v) for v in x):
            diverged = True
            filled = i + 1
            break
        values[i + 1] = x
    times = np.arange(filled) * dt
    return Trajectory(
        states=sys.states,
        times=times,
        values=values[:filled],
        params={
            (k.name if isinstance(k, Symbol) else str(k)): float(v)
            for k, v in params.items()
        },
        diverged=diverged,
    )


def _scalar_on_trajectory(traj: Trajectory, expr: Expr) -> np.ndarray:
    index = {s: i for i, s in enumerate(traj.states)}
    params = {Symbol(name, "parameter"): value for name, value in traj.params.items()}
    src = "def _compiled(x):\n    return " + _emit(expr, index, params) + "\n"
    namespace = {"math": math}
    exec(src, namespace)
    f = namespace["_compiled"]
    return np.array([f(row) for row in traj.values], dtype=float)


def conserved_drift(traj: Trajectory, quantity: Union[ConservedQuantity, Expr]) -> float:
    """max over the grid of |H(x(t)) - H(x(0))|."""
    expr = quantity.expr if isinstance(quantity, ConservedQuantity) else quantity
    series = _scalar_on_trajectory(traj, expr)
    return float(np.max(np.abs(series - series[0])))


def distinguishability(
    sys: OdeSystem,
    obs: ObservationSet,
    x0_a,
    x0_b,
    params: Mapping,
    dt: float,
    T: float,
) -> WitnessPair:
    """Sup-norm distance of the observed outputs from two initial states."""
    traj_a = integrate_rk4(sys, x0_a, params, dt, T)
    traj_b = integrate_rk4(sys, x0_b, params, dt, T)
    shared = min(len(traj_a.times), len(traj_b.times))
    distance = 0.0
    for output in obs.outputs:
        series_a = _scalar_on_trajectory(traj_a, output)[:shared]
        series_b = _scalar_on_trajectory(traj_b, output)[:shared]
        distance = max(distance, float(np.max(np.abs(series_a - series_b))))
    return WitnessPair(
        x0_a=tuple(_normalize_x0(sys, x0_a)),
        x0_b=tuple(_normalize_x0(sys, x0_b)),
        output_distance=distance,
        horizon=T,
    )


def unobservability_witness(
    sys: OdeSystem,
    obs: ObservationSet,
    base_point,
    params: Mapping,
    dt: float,
    T: float,
    delta: float,
    threshold: float = ZERO_DISTANCE,
    seed: int = 0,
) -> Optional[WitnessPair]:
    """Directional search for two states with identical observed outputs.

    Only directions that cannot feed the observed outputs (states outside the
    observed nodes' reachable set in the inference graph) are tried; the
    first perturbation whose output distance stays below ``threshold`` is
    returned.  ``None`` means every tried perturbation was detected, or there
    was nothing to try; it is evidence, not a proof of observability.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    graph = build_graph(sys, seed=seed)
    influencing = forward_closure(graph, obs.observed_states())
    hidden = [s for s in sys.states if s not in influencing]
    base = _normalize_x0(sys, base_point)
    for s in hidden:
        i = sys.state_index(s)
        for sign in (+1.0, -1.0):
            shifted = base.copy()
            shifted[i] += sign * delta
            pair = distinguishability(sys, obs, base, shifted, params, dt, T)
            if pair.output_distance < threshold:
                return WitnessPair(
                    x0_a=pair.x0_a,
                    x0_b=pair.x0_b,
                    output_distance=pair.output_distance,
                    horizon=T,
                    direction=s.name,
                )
    return None


def trajectory_to_csv(traj: Trajectory) -> str:
    """CSV with a time column then one column per state, 17 significant digits."""
    header = "t," + ",".join(s.name for s in traj.states)
    lines = [header]
    for t, row in zip(traj.times, traj.values):
        lines.append(",".join("%.17g" % v for v in [t, *row]))
    return "\n".join(lines) + "\n"
