"""Independent oracles used by the test suite.

Everything in here recomputes quantities from their defining
optimization problems or recursions, without calling the closed forms
under test: simplex projection by water-level bisection, the composite
prox by projected gradient or multiplier search, the squared-l1 prox by
threshold bisection, and a line-by-line transcription of one inner
solver step.
"""

import math

import numpy as np

from uapd.geometry import CompositeProxQuery


def block_slices(blocks):
    out = []
    start = 0
    for size in blocks:
        out.append(slice(start, start + size))
        start += size
    return out


def project_simplex_bisect(z, iters=200):
    """Euclidean projection of z onto the unit simplex via bisection.

    Solves sum_i max(z_i - tau, 0) = 1 for the water level tau; fully
    independent of the sort-and-threshold closed form.
    """
    z = np.asarray(z, dtype=float)
    lo = float(np.min(z)) - 1.0
    hi = float(np.max(z))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(np.maximum(z - mid, 0.0)) > 1.0:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    return np.maximum(z - tau, 0.0)


def prox_objective(geom, query, v):
    """The composite prox objective evaluated at a feasible point."""
    val = float(np.dot(query.linear_term, v))
    val += query.mu * geom.divergence(v, query.anchor_y)
    val += query.rho * geom.divergence(v, query.anchor_v)
    if query.nonsmooth == "squared_l1_half":
        val += 0.5 * float(np.sum(np.abs(v))) ** 2
    return val


def euclidean_prox_pg(query, domain, blocks, iters=4000):
    """Projected gradient on the Euclidean composite prox objective.

    The smooth part has gradient c + mu (v - y) + rho (v - v0) with
    Lipschitz constant mu + rho; a constant 1/L step converges.  The
    projection uses the bisection routine above.
    """
    c, y, v0 = query.linear_term, query.anchor_y, query.anchor_v
    s = query.mu + query.rho
    v = v0.copy()
    for _ in range(iters):
        grad = c + query.mu * (v - y) + query.rho * (v - v0)
        z = v - grad / s
        if domain == "reals":
            new = z
        elif domain == "nonneg":
            new = np.maximum(z, 0.0)
        else:
            new = np.empty_like(z)
            for sl in block_slices(blocks):
                new[sl] = project_simplex_bisect(z[sl])
        if np.max(np.abs(new - v)) < 1e-15:
            v = new
            break
        v = new
    return v


def entropy_prox_bisect(query, blocks, iters=300):
    """Entropy composite prox by bisection on the block multiplier.

    Stationarity gives v_i proportional to exp(t_i) with
    t = (mu ln y + rho ln v0 - c) / (mu + rho); instead of normalizing
    directly, solve sum_i exp(t_i - nu) = 1 for nu per block.
    """
    c, y, v0 = query.linear_term, query.anchor_y, query.anchor_v
    s = query.mu + query.rho
    t = (query.mu * np.log(y) + query.rho * np.log(v0) - c) / s
    out = np.empty_like(t)
    for sl in block_slices(blocks):
        tb = t[sl]
        lo = float(np.max(tb)) - 1.0
        hi = float(np.max(tb)) + math.log(tb.size) + 1.0
        for _ in range(iters):
            nu = 0.5 * (lo + hi)
            if np.sum(np.exp(tb - nu)) > 1.0:
                lo = nu
            else:
                hi = nu
        out[sl] = np.exp(tb - 0.5 * (lo + hi))
    return out


def squared_l1_prox_bisect(query, iters=300):
    """Squared-l1 composite prox by bisection on the threshold.

    With z = (mu y + rho v0 - c) / s and w = 1/s, the minimizer is the
    soft-thresholding of z at tau solving tau = w ||soft(z, tau)||_1.
    """
    c, y, v0 = query.linear_term, query.anchor_y, query.anchor_v
    s = query.mu + query.rho
    z = (query.mu * y + query.rho * v0 - c) / s
    w = 1.0 / s

    def soft_l1(tau):
        return float(np.sum(np.maximum(np.abs(z) - tau, 0.0)))

    lo, hi = 0.0, w * soft_l1(0.0) + 1.0
    for _ in range(iters):
        tau = 0.5 * (lo + hi)
        if w * soft_l1(tau) > tau:
            lo = tau
        else:
            hi = tau
    tau = 0.5 * (lo + hi)
    return np.sign(z) * np.maximum(np.abs(z) - tau, 0.0)


def random_point(geom, rng):
    """A random strictly feasible point of the geometry's domain."""
    if geom.kind == "entropy" or getattr(geom, "domain", None) == "simplex":
        x = np.empty(geom.dimension)
        for sl in block_slices(geom.blocks):
            u = rng.uniform(0.1, 1.0, sl.stop - sl.start)
            x[sl] = u / np.sum(u)
        return x
    if getattr(geom, "domain", None) == "nonneg":
        return rng.uniform(0.05, 2.0, geom.dimension)
    return rng.standard_normal(geom.dimension)


def random_query(geom, rng, nonsmooth="zero"):
    return CompositeProxQuery(
        linear_term=rng.standard_normal(geom.dimension),
        anchor_y=random_point(geom, rng),
        mu=float(rng.uniform(0.0, 2.0)),
        anchor_v=random_point(geom, rng),
        rho=float(rng.uniform(0.2, 3.0)),
        nonsmooth=nonsmooth,
    )


def manual_inner_step(k, state, M_trial, instance, config, fixed_eps=None):
    """Textbook transcription of one inner trial, for equality checks.

    Returns a dict with every intermediate quantity; uses only the
    instance oracles and the geometry prox, recomputing the scalar
    recursions from their definitions.
    """
    beta, gamma = state.beta, state.gamma
    A_norm2 = config.A_norm ** 2
    alpha = math.sqrt(beta * gamma) / math.sqrt(beta * M_trial + A_norm2)
    beta_new = beta / (1.0 + alpha)
    if fixed_eps is None:
        delta = config.delta_scale * beta_new / (k + 1)
    else:
        delta = fixed_eps / (k + 1)
    y = (state.x + alpha * state.v) / (1.0 + alpha)
    h_y, grad_y = instance.h(y)
    linear = grad_y.copy()
    if instance.constrained:
        lam_tilde = state.lam + (alpha / beta) * (instance.A @ state.v - instance.b)
        linear = linear + instance.A.T @ lam_tilde
    else:
        lam_tilde = state.lam
    query = CompositeProxQuery(
        linear_term=linear,
        anchor_y=y,
        mu=config.mu,
        anchor_v=state.v,
        rho=gamma / alpha,
        nonsmooth=instance.g_spec,
    )
    v_new = instance.geometry.composite_prox(query)
    x_new = (state.x + alpha * v_new) / (1.0 + alpha)
    diff = x_new - y
    model = h_y + float(grad_y @ diff) + 0.5 * M_trial * float(diff @ diff)
    h_x = instance.h(x_new)[0]
    return {
        "alpha": alpha, "beta_new": beta_new, "delta": delta, "y": y,
        "lam_tilde": lam_tilde, "v": v_new, "x": x_new, "model": model,
        "h_at_y": h_y, "h_at_x": h_x, "accept": h_x - model <= delta / 2.0,
    }


class StepRecorder:
    """Observer capturing (k, state, accepted, i_k, new_state) tuples."""

    def __init__(self):
        self.steps = []

    def __call__(self, k, state, accepted, i_k, new_state):
        self.steps.append((k, state, accepted, i_k, new_state))


def finite_difference_gradient(func, x, h=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (func(x + e) - func(x - e)) / (2.0 * h)
    return g


def euler_flow(instance, gamma0, beta0, x0, w0, lam0, t_end, dt):
    """Forward-Euler integration of the flow, assembled from scratch."""
    geom = instance.geometry
    x, w, lam = x0.copy(), w0.copy(), lam0.copy()
    n = int(round(t_end / dt))
    for step in range(n):
        t = step * dt
        gamma_t = instance.mu + (gamma0 - instance.mu) * math.exp(-t)
        beta_t = beta0 * math.exp(-t)
        v = geom.grad_conj(w)
        grad = instance.h(x)[1]
        force = -grad
        if instance.mu > 0:
            force = force + instance.mu * (geom.grad(x) - w)
        if instance.constrained:
            force = force - instance.A.T @ lam
            dlam = (instance.A @ v - instance.b) / beta_t
        else:
            dlam = np.zeros(0)
        x = x + dt * (v - x)
        w = w + dt * (force / gamma_t)
        lam = lam + dt * dlam
    return x, w, lam


def integrate_scalar_decay(theta, eta, R, sigma, varphi, t_end, dt):
    """Fine explicit integration of y' = -sigma(t) y^theta / sqrt(varphi(t) y^(2 eta) + R^2)."""
    y = 1.0
    n = int(round(t_end / dt))
    for step in range(n):
        t = step * dt
        y = y + dt * (-sigma(t) * y ** theta / math.sqrt(varphi(t) * y ** (2 * eta) + R * R))
        if y <= 0:
            raise RuntimeError("oracle integration underflowed; shrink dt")
    return y
