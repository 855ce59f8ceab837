"""Continuous-time mirror primal-dual flow and its Lyapunov certificate.

The solver's iteration discretizes a coupled ODE system in the primal
point x, the mirror variable w = grad phi(v), and the multiplier lam:

    x'   = grad_conj(w) - x
    w'   = [mu (grad phi(x) - w) - grad f(x) - A^T lam] / gamma(t)
    lam' = (A grad_conj(w) - b) / beta(t)

with gamma(t) = mu + (gamma0 - mu) e^{-t} and beta(t) = beta0 e^{-t}
evaluated analytically.  Integrating in w rather than v avoids
differentiating grad phi(v) along the trajectory.

Only smooth instances are accepted (differentiable h, no nonsmooth
term); the point of the module is to check the exponential decay of
the Lyapunov function, not to solve anything new.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "FlowState",
    "FlowDomainError",
    "gamma_of",
    "beta_of",
    "flow_rhs",
    "flow_lyapunov",
    "integrate",
    "trajectory_to_csv",
]


@dataclass
class FlowState:
    x: np.ndarray
    w: np.ndarray
    lam: np.ndarray
    t: float


class FlowDomainError(RuntimeError):
    """Trajectory left the domain interior; carries the last valid state."""

    def __init__(self, message, last_state):
        super().__init__(message)
        self.last_state = last_state


def gamma_of(t, mu, gamma0):
    return mu + (gamma0 - mu) * math.exp(-t)


def beta_of(t, beta0):
    return beta0 * math.exp(-t)


def _check_smooth(instance):
    if not instance.differentiable or instance.g_spec != "zero":
        raise ValueError(
            "flow integration requires a differentiable objective with no "
            "nonsmooth term")


def _interior(geometry, x):
    if not geometry.contains(x):
        return False
    if geometry.kind == "entropy" and float(np.min(x)) <= 0.0:
        return False
    return True


def _rhs(t, x, w, lam, instance, gamma0, beta0, last_state):
    geom = instance.geometry
    if not _interior(geom, x):
        raise FlowDomainError(
            f"iterate left the domain interior at t = {t:.6g}", last_state)
    v = geom.grad_conj(w)
    _, grad = instance.h(x)
    mu = instance.mu
    force = -grad
    if mu > 0:
        force = force + mu * (geom.grad(x) - w)
    if instance.constrained:
        force = force - instance.A.T @ lam
        dlam = (instance.A @ v - instance.b) / beta_of(t, beta0)
    else:
        dlam = np.zeros(0)
    dx = v - x
    dw = force / gamma_of(t, mu, gamma0)
    return dx, dw, dlam


def flow_rhs(state, instance, gamma0, beta0=1.0):
    """Time derivative of (x, w, lam) at the given state."""
    _check_smooth(instance)
    return _rhs(state.t, state.x, state.w, state.lam, instance,
                gamma0, beta0, state)


def flow_lyapunov(state, instance, gamma0, beta0=1.0):
    """E = L(x, lam*) - L(x*, lam) + gamma(t) D(x*, v) + beta(t)/2 |lam - lam*|^2."""
    if instance.known_saddle is None:
        raise ValueError("flow Lyapunov evaluation needs instance.known_saddle")
    x_star, lam_star = instance.known_saddle
    geom = instance.geometry
    v = geom.grad_conj(state.w)
    value = instance.lagrangian(state.x, lam_star) - instance.lagrangian(x_star, state.lam)
    value += gamma_of(state.t, instance.mu, gamma0) * geom.divergence(x_star, v)
    if state.lam.size:
        value += 0.5 * beta_of(state.t, beta0) * float(
            np.dot(state.lam - lam_star, state.lam - lam_star))
    return value


def integrate(instance, t_end, dt, gamma0=None, beta0=1.0,
              x0=None, v0=None, lambda0=None):
    """Fixed-step classical Runge-Kutta trajectory of the flow.

    Returns a list of (FlowState, Lyapunov value) pairs, one per grid
    point including t = 0.  Domain exit raises FlowDomainError carrying
    the last valid state.
    """
    _check_smooth(instance)
    if instance.known_saddle is None:
        raise ValueError("flow integration needs instance.known_saddle")
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    geom = instance.geometry
    if gamma0 is None:
        a_norm = instance.metadata.get("a_norm", 0.0)
        gamma0 = min(1.0, a_norm ** 2) if a_norm > 0 else 1.0

    x = geom.barycenter() if x0 is None else np.asarray(x0, dtype=float).copy()
    v = x.copy() if v0 is None else np.asarray(v0, dtype=float).copy()
    w = geom.grad(v)
    lam = (np.zeros(instance.dual_dimension) if lambda0 is None
           else np.asarray(lambda0, dtype=float).copy())

    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise ValueError("t_end must cover at least one step")

    state = FlowState(x=x, w=w, lam=lam, t=0.0)
    trajectory = [(state, flow_lyapunov(state, instance, gamma0, beta0))]
    for step in range(n_steps):
        t = step * dt
        k1 = _rhs(t, x, w, lam, instance, gamma0, beta0, state)
        k2 = _rhs(t + 0.5 * dt, x + 0.5 * dt * k1[0], w + 0.5 * dt * k1[1],
                  lam + 0.5 * dt * k1[2], instance, gamma0, beta0, state)
        k3 = _rhs(t + 0.5 * dt, x + 0.5 * dt * k2[0], w + 0.5 * dt * k2[1],
                  lam + 0.5 * dt * k2[2], instance, gamma0, beta0, state)
        k4 = _rhs(t + dt, x + dt * k3[0], w + dt * k3[1], lam + dt * k3[2],
                  instance, gamma0, beta0, state)
        x = x + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        w = w + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        lam = lam + (dt / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        t_new = (step + 1) * dt
        if not _interior(geom, x):
            raise FlowDomainError(
                f"iterate left the domain interior at t = {t_new:.6g}", state)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))
                and np.all(np.isfinite(lam))):
            raise FlowDomainError(
                f"non-finite state at t = {t_new:.6g}", state)
        state = FlowState(x=x.copy(), w=w.copy(), lam=lam.copy(), t=t_new)
        trajectory.append((state, flow_lyapunov(state, instance, gamma0, beta0)))
    return trajectory


def trajectory_to_csv(trajectory, instance, path):
    """Write (t, lyapunov, et_lyapunov, feasibility) rows for plotting."""
    lines = ["t,lyapunov,et_lyapunov,feasibility"]
    for state, lyap in trajectory:
        scaled = math.exp(state.t) * lyap
        feas = instance.feasibility(state.x)
        lines.append(f"{state.t!r},{lyap!r},{scaled!r},{feas!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
