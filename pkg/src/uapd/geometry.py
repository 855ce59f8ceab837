"""Bregman geometries and the composite prox subproblem.

A geometry bundles a 1-strongly convex prox-function ``phi`` with the
domain it is defined on: the half squared Euclidean norm on the full
space, the nonnegative orthant or a product of probability simplices,
and negative entropy on a product of probability simplices.  The solver
only touches geometries through the interface here: divergence values,
mirror maps, a reference starting point and the composite prox

    argmin_v  g(v) + <c, v> + mu * D(v, y) + rho * D(v, v_anchor)

which every geometry solves in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "BregmanGeometry",
    "EuclideanGeometry",
    "EntropyGeometry",
    "CompositeProxQuery",
    "three_term_residual",
]

# Entries are floored at this value before taking logarithms so that
# iterates that underflowed to exact zero do not produce -inf.
LOG_FLOOR = 1e-300

# Block sums of simplex points may drift by this much before they are
# considered outside the domain; prox outputs are renormalized exactly.
SIMPLEX_SUM_TOL = 1e-9


def _check_vector(x, n, name):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != n:
        raise ValueError(f"{name} must be a vector of length {n}, got shape {x.shape}")
    return x


def _check_blocks(blocks, dimension):
    blocks = tuple(int(b) for b in blocks)
    if any(b <= 0 for b in blocks):
        raise ValueError(f"block sizes must be positive, got {blocks}")
    if sum(blocks) != dimension:
        raise ValueError(f"block sizes {blocks} do not sum to dimension {dimension}")
    return blocks


def _block_slices(blocks):
    start = 0
    for b in blocks:
        yield slice(start, start + b)
        start += b


def _xlogx(x):
    # 0 * log 0 = 0 convention.
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def _floored_log(x):
    return np.log(np.maximum(x, LOG_FLOOR))


def _project_simplex(z):
    """Euclidean projection of a vector onto the probability simplex."""
    n = z.shape[0]
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, n + 1)
    valid = u - css / idx > 0
    r = idx[valid][-1]
    theta = css[r - 1] / r
    return np.maximum(z - theta, 0.0)


def _prox_squared_l1(z, w):
    """argmin_v 0.5 * ||v - z||^2 + (w / 2) * ||v||_1^2.

    The minimizer is a soft threshold of ``z`` at the level ``tau``
    solving tau / w = sum_i max(|z_i| - tau, 0); the threshold is found
    by scanning |z| in descending order.  Coordinates with |z_i| equal
    to tau land exactly on zero.
    """
    u = np.abs(z)
    if not np.any(u > 0):
        return np.zeros_like(z)
    if w <= 0:
        return z.copy()
    us = np.sort(u)[::-1]
    cum = np.cumsum(us)
    j = np.arange(1, u.shape[0] + 1)
    taus = w * cum / (1.0 + j * w)
    valid = us > taus
    jstar = j[valid][-1]
    tau = taus[jstar - 1]
    return np.sign(z) * np.maximum(u - tau, 0.0)


@dataclass
class CompositeProxQuery:
    """One composite prox subproblem.

    ``linear_term`` is the vector c, ``anchor_y`` carries weight ``mu``
    (may be zero) and ``anchor_v`` carries weight ``rho`` (must be
    positive).  ``nonsmooth`` selects g: "zero" or "squared_l1_half"
    for g(v) = 0.5 * ||v||_1^2.
    """

    linear_term: np.ndarray
    anchor_y: np.ndarray
    mu: float
    anchor_v: np.ndarray
    rho: float
    nonsmooth: str = "zero"


class BregmanGeometry:
    """Interface shared by all geometries.

    Attributes
    ----------
    kind : str
        "euclidean" or "entropy".
    dimension : int
        Length of the vectors the geometry operates on.
    """

    kind = "base"

    def __init__(self, dimension):
        dimension = int(dimension)
        if dimension <= 0:
            raise ValueError(f"dimension must be positive, got {dimension}")
        self.dimension = dimension

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def grad_conj(self, w):
        raise NotImplementedError

    def divergence(self, x, y):
        raise NotImplementedError

    def barycenter(self):
        raise NotImplementedError

    def contains(self, x):
        raise NotImplementedError

    def composite_prox(self, query):
        raise NotImplementedError

    def _validate_query(self, query):
        c = _check_vector(query.linear_term, self.dimension, "linear_term")
        y = _check_vector(query.anchor_y, self.dimension, "anchor_y")
        v = _check_vector(query.anchor_v, self.dimension, "anchor_v")
        if query.mu < 0:
            raise ValueError(f"mu must be nonnegative, got {query.mu}")
        if query.rho <= 0:
            raise ValueError(f"rho must be positive, got {query.rho}")
        if query.nonsmooth not in ("zero", "squared_l1_half"):
            raise ValueError(f"unknown nonsmooth term {query.nonsmooth!r}")
        return c, y, v

    def to_dict(self):
        raise NotImplementedError


class EuclideanGeometry(BregmanGeometry):
    """phi(x) = 0.5 * ||x||^2 on R^n, R^n_+ or a product of simplices.

    ``domain`` is one of "reals", "nonneg" or "simplex"; the simplex
    domain takes block sizes so product feasible sets are a single
    geometry.  The composite prox reduces to a projection of an affine
    expression; the squared-l1 nonsmooth term is supported on the full
    space only.
    """

    kind = "euclidean"

    def __init__(self, dimension, domain="reals", blocks=None):
        super().__init__(dimension)
        if domain not in ("reals", "nonneg", "simplex"):
            raise ValueError(f"unknown domain {domain!r}")
        self.domain = domain
        if domain == "simplex":
            self.blocks = _check_blocks(blocks if blocks is not None else (dimension,), dimension)
        else:
            if blocks is not None:
                raise ValueError("blocks are only meaningful for the simplex domain")
            self.blocks = None

    def value(self, x):
        x = _check_vector(x, self.dimension, "x")
        return 0.5 * float(x @ x)

    def grad(self, x):
        return _check_vector(x, self.dimension, "x").copy()

    def grad_conj(self, w):
        w = _check_vector(w, self.dimension, "w")
        if self.domain == "reals":
            return w.copy()
        if self.domain == "nonneg":
            return np.maximum(w, 0.0)
        out = np.empty_like(w)
        for sl in _block_slices(self.blocks):
            out[sl] = _project_simplex(w[sl])
        return out

    def divergence(self, x, y):
        x = _check_vector(x, self.dimension, "x")
        y = _check_vector(y, self.dimension, "y")
        d = x - y
        return 0.5 * float(d @ d)

    def barycenter(self):
        if self.domain == "simplex":
            out = np.empty(self.dimension)
            for sl in _block_slices(self.blocks):
                out[sl] = 1.0 / (sl.stop - sl.start)
            return out
        return np.zeros(self.dimension)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,) or not np.all(np.isfinite(x)):
            return False
        if self.domain == "nonneg":
            return bool(np.all(x >= 0.0))
        if self.domain == "simplex":
            if np.any(x < 0.0):
                return False
            for sl in _block_slices(self.blocks):
                if abs(float(x[sl].sum()) - 1.0) > SIMPLEX_SUM_TOL:
                    return False
        return True

    def composite_prox(self, query):
        c, y, v = self._validate_query(query)
        s = query.mu + query.rho
        z = (query.mu * y + query.rho * v - c) / s
        if query.nonsmooth == "squared_l1_half":
            if self.domain != "reals":
                raise ValueError("squared_l1_half prox requires the full-space domain")
            # Rescale so the subproblem is 0.5||v - z||^2 + (w/2)||v||_1^2.
            return _prox_squared_l1(z, 1.0 / s)
        if self.domain == "reals":
            return z
        if self.domain == "nonneg":
            return np.maximum(z, 0.0)
        out = np.empty_like(z)
        for sl in _block_slices(self.blocks):
            out[sl] = _project_simplex(z[sl])
        return out

    def to_dict(self):
        d = {"kind": self.kind, "dimension": self.dimension, "domain": self.domain}
        if self.blocks is not None:
            d["blocks"] = list(self.blocks)
        return d


class EntropyGeometry(BregmanGeometry):
    """Negative entropy phi(x) = sum_i x_i log x_i on a product of simplices.

    The divergence is the (generalized) Kullback-Leibler divergence.
    Entries below ``LOG_FLOOR`` are floored before logarithms so that
    components that underflowed to zero stay usable; negative entries
    raise.  The prox with g = 0 is a per-block softmax of the weighted
    geometric mean of the anchors tilted by the linear term, computed in
    log space with a max shift.
    """

    kind = "entropy"

    def __init__(self, dimension, blocks=None):
        super().__init__(dimension)
        self.blocks = _check_blocks(blocks if blocks is not None else (dimension,), dimension)

    def _check_nonneg(self, x, name):
        if np.any(x < 0):
            raise ValueError(f"{name} has negative entries; outside the entropy domain")

    def value(self, x):
        x = _check_vector(x, self.dimension, "x")
        self._check_nonneg(x, "x")
        return float(_xlogx(x).sum())

    def grad(self, x):
        x = _check_vector(x, self.dimension, "x")
        self._check_nonneg(x, "x")
        return 1.0 + _floored_log(x)

    def grad_conj(self, w):
        w = _check_vector(w, self.dimension, "w")
        out = np.empty_like(w)
        for sl in _block_slices(self.blocks):
            e = np.exp(w[sl] - w[sl].max())
            out[sl] = e / e.sum()
        return out

    def divergence(self, x, y):
        x = _check_vector(x, self.dimension, "x")
        y = _check_vector(y, self.dimension, "y")
        self._check_nonneg(x, "x")
        self._check_nonneg(y, "y")
        kl = _xlogx(x) - x * _floored_log(y)
        return float(kl.sum() - x.sum() + y.sum())

    def barycenter(self):
        out = np.empty(self.dimension)
        for sl in _block_slices(self.blocks):
            out[sl] = 1.0 / (sl.stop - sl.start)
        return out

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,) or not np.all(np.isfinite(x)):
            return False
        if np.any(x < 0.0):
            return False
        for sl in _block_slices(self.blocks):
            if abs(float(x[sl].sum()) - 1.0) > SIMPLEX_SUM_TOL:
                return False
        return True

    def composite_prox(self, query):
        c, y, v = self._validate_query(query)
        if query.nonsmooth != "zero":
            raise ValueError("entropy geometry only supports the zero nonsmooth term")
        self._check_nonneg(y, "anchor_y")
        self._check_nonneg(v, "anchor_v")
        s = query.mu + query.rho
        a = (query.mu * _floored_log(y) + query.rho * _floored_log(v) - c) / s
        out = np.empty_like(a)
        for sl in _block_slices(self.blocks):
            e = np.exp(a[sl] - a[sl].max())
            out[sl] = e / e.sum()
        return out

    def to_dict(self):
        return {"kind": self.kind, "dimension": self.dimension, "blocks": list(self.blocks)}


def geometry_from_dict(d):
    kind = d["kind"]
    if kind == "euclidean":
        return EuclideanGeometry(d["dimension"], domain=d.get("domain", "reals"),
                                 blocks=d.get("blocks"))
    if kind == "entropy":
        return EntropyGeometry(d["dimension"], blocks=d.get("blocks"))
    raise ValueError(f"unknown geometry kind {kind!r}")


def three_term_residual(geom, x, y, z):
    """Residual of the three-point identity, zero in exact arithmetic.

    Returns <grad phi(x) - grad phi(y), y - z>
            - [D(z, x) - D(z, y) - D(y, x)].
    """
    lhs = float((geom.grad(x) - geom.grad(y)) @ (np.asarray(y, dtype=float) - np.asarray(z, dtype=float)))
    rhs = geom.divergence(z, x) - geom.divergence(z, y) - geom.divergence(y, x)
    return lhs - rhs
