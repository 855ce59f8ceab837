"""Accelerated primal-dual solver with an adaptive quadratic line search.

One iteration builds trial points from the running averages, solves a
composite prox subproblem, and accepts the step once the smooth part is
bracketed by its quadratic model up to a per-iteration tolerance.  The
approximate curvature constant doubles on rejection and is never
decreased across iterations, so nonsmooth and Hoelder-smooth objectives
are handled by the same loop without knowing their smoothness level.

Two tolerance policies are provided: the default shrinks the tolerance
proportionally to the step-size parameter beta (no accuracy target is
needed up front), while :func:`solve_fixed_tolerance` spends a fixed
eps budget spread over iterations.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .geometry import CompositeProxQuery
from .problems import operator_norm

__all__ = [
    "SolverConfig",
    "SolverState",
    "InnerResult",
    "IterationRecord",
    "SolverError",
    "LineSearchError",
    "initial_state",
    "inner_step",
    "line_search",
    "outer_update",
    "solve",
    "solve_fixed_tolerance",
    "lyapunov",
    "trace_to_csv",
    "TRACE_COLUMNS",
]


class SolverError(RuntimeError):
    """Raised when an oracle or update produces non-finite values."""


class LineSearchError(SolverError):
    """Raised when the curvature doubling exceeds its cap.

    ``trials`` holds (M, h_at_candidate, model_value, tolerance) for
    every rejected trial, newest last.
    """

    def __init__(self, message, trials):
        super().__init__(message)
        self.trials = trials


@dataclass
class SolverConfig:
    """Tunable parameters; ``None`` means derive from the instance.

    gamma0 defaults to min(1, ||A||^2) for constrained problems and 1
    otherwise.  mu and A_norm are taken from the instance when unset.
    beta0 is fixed at 1 by the method's averaging scheme.
    """

    gamma0: float | None = None
    M0: float = 1.0
    mu: float | None = None
    beta0: float = 1.0
    A_norm: float | None = None
    delta_scale: float = 1.0
    max_iterations: int = 1000
    feasibility_target: float | None = None
    gap_target: float | None = None
    line_search_cap: int = 60

    def __post_init__(self):
        if self.M0 <= 0:
            raise ValueError("M0 must be positive")
        if self.beta0 != 1.0:
            raise ValueError("beta0 is fixed at 1")
        if self.delta_scale <= 0:
            raise ValueError("delta_scale must be positive")
        if self.gamma0 is not None and self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if self.mu is not None and self.mu < 0:
            raise ValueError("mu must be nonnegative")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.line_search_cap < 1:
            raise ValueError("line_search_cap must be at least 1")

    def resolved(self, instance):
        """Fill instance-dependent defaults, returning a new config."""
        a_norm = self.A_norm
        if a_norm is None:
            if instance.constrained:
                a_norm = instance.metadata.get("a_norm")
                if a_norm is None:
                    a_norm = operator_norm(instance.A)
            else:
                a_norm = 0.0
        gamma0 = self.gamma0
        if gamma0 is None:
            gamma0 = min(1.0, a_norm ** 2) if a_norm > 0 else 1.0
        mu = instance.mu if self.mu is None else self.mu
        return replace(self, gamma0=gamma0, mu=mu, A_norm=float(a_norm))


@dataclass
class SolverState:
    """Iterate bundle after k iterations.

    alpha and delta are the step size and tolerance accepted at the
    previous iteration (zero at k = 0); line_search_total accumulates
    the rejected-trial count Sum_j i_j.
    """

    x: np.ndarray
    v: np.ndarray
    lam: np.ndarray
    beta: float
    gamma: float
    M: float
    alpha: float
    delta: float
    k: int
    line_search_total: int


@dataclass
class InnerResult:
    """Candidate step built by one line-search trial."""

    y: np.ndarray
    x: np.ndarray
    v: np.ndarray
    lam: np.ndarray
    alpha: float
    beta_new: float
    delta: float
    model: float
    h_at_y: float
    grad_at_y: np.ndarray
    h_at_x: float


@dataclass
class IterationRecord:
    """One trace row; lyapunov and f_residual stay None when unknown."""

    k: int
    objective: float
    f_residual: float | None
    feasibility: float
    i_k: int
    M_k: float
    alpha_k: float
    beta_k: float
    gamma_k: float
    delta_k: float
    lyapunov: float | None
    wall_time_s: float


TRACE_COLUMNS = ("k", "f_residual", "feasibility", "i_k", "M_k", "alpha_k",
                 "beta_k", "delta_k", "lyapunov", "wall_time_s", "objective")


def initial_state(instance, config):
    """Barycenter start with a zero dual vector."""
    x0 = instance.geometry.barycenter()
    return SolverState(
        x=x0.copy(),
        v=x0.copy(),
        lam=np.zeros(instance.dual_dimension),
        beta=config.beta0,
        gamma=config.gamma0,
        M=config.M0,
        alpha=0.0,
        delta=0.0,
        k=0,
        line_search_total=0,
    )


def _require_finite(value, what, k, M):
    ok = np.all(np.isfinite(value)) if isinstance(value, np.ndarray) else math.isfinite(value)
    if not ok:
        raise SolverError(f"non-finite {what} at iteration {k} (M = {M:g})")


def inner_step(k, state, M_trial, instance, config, fixed_eps=None, residual_v=None):
    """Build the candidate step for one curvature trial.

    ``residual_v`` may carry the precomputed constraint residual
    A v_k - b; it only depends on the outer state, so line-search
    trials share it.  ``fixed_eps`` switches the tolerance from
    delta_scale * beta_{k+1} / (k+1) to eps / (k+1).
    """
    beta, gamma = state.beta, state.gamma
    alpha = math.sqrt(beta * gamma) / math.sqrt(beta * M_trial + config.A_norm ** 2)
    beta_new = beta / (1.0 + alpha)
    if fixed_eps is None:
        delta = config.delta_scale * beta_new / (k + 1)
    else:
        delta = fixed_eps / (k + 1)

    y = (state.x + alpha * state.v) / (1.0 + alpha)
    if instance.constrained:
        if residual_v is None:
            residual_v = instance.A @ state.v - instance.b
        lam_tilde = state.lam + (alpha / beta) * residual_v
    else:
        lam_tilde = state.lam

    h_y, grad_y = instance.h(y)
    _require_finite(h_y, "h(y)", k, M_trial)
    _require_finite(grad_y, "grad h(y)", k, M_trial)

    c = grad_y if not instance.constrained else grad_y + instance.A.T @ lam_tilde
    query = CompositeProxQuery(
        linear_term=c,
        anchor_y=y,
        mu=config.mu,
        anchor_v=state.v,
        rho=gamma / alpha,
        nonsmooth="squared_l1_half" if instance.g_spec == "squared_l1_half" else "zero",
    )
    v_new = instance.geometry.composite_prox(query)
    _require_finite(v_new, "prox output", k, M_trial)

    x_new = (state.x + alpha * v_new) / (1.0 + alpha)
    d = x_new - y
    model = h_y + float(grad_y @ d) + 0.5 * M_trial * float(d @ d)
    h_x, _ = instance.h(x_new)
    _require_finite(h_x, "h(x)", k, M_trial)

    return InnerResult(
        y=y, x=x_new, v=v_new, lam=lam_tilde,
        alpha=alpha, beta_new=beta_new, delta=delta, model=model,
        h_at_y=h_y, grad_at_y=grad_y, h_at_x=h_x,
    )


def line_search(k, state, instance, config, fixed_eps=None):
    """Double the curvature trial until the quadratic model holds.

    Returns ``(accepted, i_k, M_accepted)`` where i_k counts rejected
    doublings.  The warm start is the previously accepted constant, so
    the accepted sequence never decreases.
    """
    residual_v = instance.A @ state.v - instance.b if instance.constrained else None
    trials = []
    for i in range(config.line_search_cap + 1):
        M_trial = (2.0 ** i) * state.M
        result = inner_step(k, state, M_trial, instance, config,
                            fixed_eps=fixed_eps, residual_v=residual_v)
        if result.h_at_x - result.model <= result.delta / 2.0:
            return result, i, M_trial
        trials.append((M_trial, result.h_at_x, result.model, result.delta))
    raise LineSearchError(
        f"line search exceeded {config.line_search_cap} doublings at iteration {k} "
        f"(last M = {trials[-1][0]:g})", trials)


def outer_update(state, accepted, M_accepted, instance, config):
    """Advance the state with an accepted step."""
    alpha = accepted.alpha
    lam = state.lam
    if instance.constrained:
        lam = state.lam + (alpha / state.beta) * (instance.A @ accepted.v - instance.b)
    return SolverState(
        x=accepted.x,
        v=accepted.v,
        lam=lam,
        beta=accepted.beta_new,
        gamma=(state.gamma + config.mu * alpha) / (1.0 + alpha),
        M=M_accepted,
        alpha=alpha,
        delta=accepted.delta,
        k=state.k + 1,
        line_search_total=state.line_search_total,
    )


def lyapunov(state, instance, config=None):
    """Energy of the current state relative to a known saddle point.

    L(x_k, lam*) - L(x*, lam_k) + gamma_k D(x*, v_k)
    + (beta_k / 2) ||lam_k - lam*||^2.
    """
    if instance.known_saddle is None:
        raise ValueError("lyapunov requires an instance with a known saddle point")
    x_star, lam_star = instance.known_saddle
    gap = instance.lagrangian(state.x, lam_star) - instance.lagrangian(x_star, state.lam)
    value = gap + state.gamma * instance.geometry.divergence(x_star, state.v)
    if np.size(lam_star):
        dl = state.lam - lam_star
        value += 0.5 * state.beta * float(dl @ dl)
    return float(value)


def _record(state, instance, i_k, wall):
    obj = instance.objective(state.x)
    f_res = None if instance.known_optimum is None else obj - instance.known_optimum
    lyap = None
    if instance.known_saddle is not None:
        lyap = lyapunov(state, instance)
    return IterationRecord(
        k=state.k,
        objective=obj,
        f_residual=f_res,
        feasibility=instance.feasibility(state.x),
        i_k=i_k,
        M_k=state.M,
        alpha_k=state.alpha,
        beta_k=state.beta,
        gamma_k=state.gamma,
        delta_k=state.delta,
        lyapunov=lyap,
        wall_time_s=wall,
    )


def _targets_met(record, config):
    if config.feasibility_target is None and config.gap_target is None:
        return False
    if config.feasibility_target is not None and record.feasibility > config.feasibility_target:
        return False
    if config.gap_target is not None:
        if record.f_residual is None or abs(record.f_residual) > config.gap_target:
            return False
    return True


def solve(instance, config=None, observer=None, fixed_eps=None):
    """Run the adaptive method for up to ``config.max_iterations`` steps.

    Returns ``(final_state, trace)`` where the trace holds one record
    per iterate including the starting point.  ``observer``, when
    given, is called as ``observer(k, state, accepted, i_k, new_state)``
    after every accepted step and sees full-precision intermediates.
    """
    config = (config or SolverConfig()).resolved(instance)
    state = initial_state(instance, config)
    t0 = time.perf_counter()
    trace = [_record(state, instance, 0, 0.0)]
    for k in range(config.max_iterations):
        accepted, i_k, M_acc = line_search(k, state, instance, config, fixed_eps=fixed_eps)
        new_state = outer_update(state, accepted, M_acc, instance, config)
        new_state.line_search_total = state.line_search_total + i_k
        if observer is not None:
            observer(k, state, accepted, i_k, new_state)
        state = new_state
        rec = _record(state, instance, i_k, time.perf_counter() - t0)
        trace.append(rec)
        if _targets_met(rec, config):
            break
    return state, trace


def solve_fixed_tolerance(instance, config=None, eps=1e-3, observer=None):
    """Baseline policy spreading a fixed eps over iterations."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    return solve(instance, config, observer=observer, fixed_eps=eps)


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def trace_to_csv(trace, path):
    """Write trace rows with a stable column set (see TRACE_COLUMNS)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_COLUMNS)
        for r in trace:
            writer.writerow([
                r.k, _fmt(r.f_residual), _fmt(r.feasibility), r.i_k, _fmt(r.M_k),
                _fmt(r.alpha_k), _fmt(r.beta_k), _fmt(r.delta_k), _fmt(r.lyapunov),
                _fmt(r.wall_time_s), _fmt(r.objective),
            ])
