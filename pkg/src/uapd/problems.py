"""Problem instances and benchmark generators.

An instance is the tuple the solver consumes: a first-order oracle for
the smooth part h, a tag for the simple nonsmooth part g, a geometry
describing the feasible set, and optionally an affine constraint
A x = b.  Generators for the benchmark families live here together
with JSON round-tripping (matrices stored dense, row-major) so runs
replay bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import (
    BregmanGeometry,
    EntropyGeometry,
    EuclideanGeometry,
    geometry_from_dict,
)

__all__ = [
    "ProblemInstance",
    "InstanceRecipe",
    "operator_norm",
    "make_matrix_game",
    "make_regularized_matrix_game",
    "make_steiner",
    "make_basis_pursuit",
    "make_synthetic_qp",
    "instance_to_dict",
    "instance_from_dict",
]

# Distance below which a summand of the sum-of-norms objective is
# treated as exactly at its anchor and contributes a zero gradient.
STEINER_ZERO_DIST = 1e-12


def operator_norm(A, tol=1e-10, max_iter=100000):
    """Largest singular value of ``A`` by power iteration on A^T A.

    Starts from the normalized all-ones vector and stops when the
    estimate changes by less than ``tol`` relatively.  The zero matrix
    returns 0.  Deterministic: no randomness involved.
    """
    A = np.asarray(A, dtype=float)
    if A.size == 0 or not np.any(A):
        return 0.0
    n = A.shape[1]
    u = np.ones(n) / np.sqrt(n)
    est = 0.0
    for _ in range(max_iter):
        z = A.T @ (A @ u)
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            # Start vector in the null space; restart deterministically.
            u = np.zeros(n)
            u[0] = 1.0
            continue
        u = z / nz
        new_est = float(np.linalg.norm(A @ u))
        if abs(new_est - est) <= tol * max(new_est, 1e-30):
            return new_est
        est = new_est
    return est


@dataclass
class ProblemInstance:
    """Composite problem min h(x) + g(x) s.t. A x = b, x in the domain.

    ``h_oracle`` maps a point to ``(value, gradient)``; for nonsmooth h
    the gradient is a deterministic subgradient selection.  ``g_spec``
    is "zero" or "squared_l1_half".  ``known_saddle`` is ``(x*, lam*)``
    when available (lam* empty for unconstrained problems) and enables
    Lyapunov diagnostics; ``known_optimum`` is f(x*) when known.
    """

    h_oracle: object
    g_spec: str
    geometry: BregmanGeometry
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    mu: float = 0.0
    known_saddle: tuple | None = None
    known_optimum: float | None = None
    differentiable: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.g_spec not in ("zero", "squared_l1_half"):
            raise ValueError(f"unknown g_spec {self.g_spec!r}")
        if (self.A is None) != (self.b is None):
            raise ValueError("A and b must both be given or both be absent")
        if self.A is not None:
            self.A = np.asarray(self.A, dtype=float)
            self.b = np.asarray(self.b, dtype=float)
            m, n = self.A.shape
            if n != self.geometry.dimension or self.b.shape != (m,):
                raise ValueError("constraint dimensions do not match the geometry")

    @property
    def constrained(self):
        return self.A is not None

    @property
    def dual_dimension(self):
        return 0 if self.A is None else self.A.shape[0]

    def h(self, x):
        value, grad = self.h_oracle(x)
        return float(value), np.asarray(grad, dtype=float)

    def g_value(self, x):
        if self.g_spec == "zero":
            return 0.0
        return 0.5 * float(np.abs(x).sum()) ** 2

    def objective(self, x):
        return self.h(x)[0] + self.g_value(x)

    def feasibility(self, x):
        if self.A is None:
            return 0.0
        return float(np.linalg.norm(self.A @ x - self.b))

    def lagrangian(self, x, lam):
        value = self.objective(x)
        if self.A is not None and lam is not None and np.size(lam):
            value += float(np.asarray(lam) @ (self.A @ x - self.b))
        return value


@dataclass
class InstanceRecipe:
    """Seeded description of a benchmark instance, JSON-serializable."""

    kind: str
    m: int
    n: int
    seed: int
    eps: float | None = None
    sparsity: int | None = None
    mu: float = 0.0
    geometry: str = "entropy"
    a_norm: float | None = None
    eig_spread: float = 9.0

    def generate(self):
        if self.kind == "matrix_game":
            return make_matrix_game(self.m, self.n, self.seed, geometry=self.geometry)
        if self.kind == "regularized_matrix_game":
            if self.eps is None:
                raise ValueError("regularized_matrix_game requires eps")
            return make_regularized_matrix_game(self.m, self.n, self.seed, self.eps)
        if self.kind == "steiner":
            return make_steiner(self.m, self.n, self.seed)
        if self.kind == "basis_pursuit":
            if self.sparsity is None:
                raise ValueError("basis_pursuit requires sparsity")
            return make_basis_pursuit(self.m, self.n, self.seed, self.sparsity)
        if self.kind == "synthetic_qp":
            return make_synthetic_qp(self.n, self.m, self.mu, self.seed,
                                     a_norm=self.a_norm, eig_spread=self.eig_spread)
        raise ValueError(f"unknown instance kind {self.kind!r}")

    def to_dict(self):
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d):
        if "kind" not in d:
            raise ValueError("recipe is missing the field 'kind'")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown recipe fields {sorted(unknown)}")
        return cls(**d)


# ---------------------------------------------------------------------------
# Matrix game: min over a product of simplices of
#   max_j <p_j, x>  +  max_i <q_i, y>,  q_i the negated rows of P.
# The optimal value is 0.


def _matrix_game_oracle(P):
    NP = -P

    def oracle(u):
        n, m = P.shape
        x, y = u[:n], u[n:]
        sx = P.T @ x
        sy = NP @ y
        j = int(np.argmax(sx))  # argmax takes the smallest maximizing index
        i = int(np.argmax(sy))
        value = float(sx[j] + sy[i])
        grad = np.concatenate([P[:, j], NP[i, :]])
        return value, grad

    return oracle


def _assemble_matrix_game(P, seed, geometry_kind):
    P = np.asarray(P, dtype=float)
    n, m = P.shape
    blocks = (n, m)
    if geometry_kind == "entropy":
        geom = EntropyGeometry(n + m, blocks=blocks)
    elif geometry_kind == "euclidean":
        geom = EuclideanGeometry(n + m, domain="simplex", blocks=blocks)
    else:
        raise ValueError(f"unknown matrix game geometry {geometry_kind!r}")
    col = np.linalg.norm(P, axis=0)
    row = np.linalg.norm(P, axis=1)
    diameter = 2.0 * float(np.sqrt(col.max() ** 2 + row.max() ** 2))
    return ProblemInstance(
        h_oracle=_matrix_game_oracle(P),
        g_spec="zero",
        geometry=geom,
        mu=0.0,
        known_optimum=0.0,
        differentiable=False,
        metadata={
            "kind": "matrix_game",
            "m": m,
            "n": n,
            "seed": seed,
            "geometry": geometry_kind,
            "subgradient_diameter": diameter,
            "P": P,
        },
    )


def make_matrix_game(m, n, seed, geometry="entropy"):
    """Random two-player zero-sum game on the product simplex."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n, m))
    return _assemble_matrix_game(P, seed, geometry)


# ---------------------------------------------------------------------------
# Smoothed matrix game: softmax smoothing of max_j <p_j, x> on the simplex.


def _regularized_game_oracle(P, sigma):
    def oracle(x):
        u = (P.T @ x) / sigma
        umax = float(u.max())
        w = np.exp(u - umax)
        s = float(w.sum())
        value = sigma * (umax + np.log(s))
        grad = P @ (w / s)
        return value, grad

    return oracle


def _assemble_regularized_game(P, eps, seed):
    P = np.asarray(P, dtype=float)
    n, m = P.shape
    if m < 2:
        raise ValueError("the smoothed game needs at least two columns")
    sigma = eps / (2.0 * np.log(m))
    lips = float(np.max(np.abs(P)) ** 2 / (4.0 * sigma))
    return ProblemInstance(
        h_oracle=_regularized_game_oracle(P, sigma),
        g_spec="zero",
        geometry=EntropyGeometry(n),
        mu=0.0,
        differentiable=True,
        metadata={
            "kind": "regularized_matrix_game",
            "m": m,
            "n": n,
            "seed": seed,
            "eps": eps,
            "sigma": float(sigma),
            "lipschitz_ref": lips,
            "P": P,
        },
    )


def make_regularized_matrix_game(m, n, seed, eps):
    """Entropy-smoothed column player problem of the matrix game."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((n, m))
    return _assemble_regularized_game(P, eps, seed)


# ---------------------------------------------------------------------------
# Steiner / continuous facility location: sum of distances to anchors
# over the nonnegative orthant.


def _steiner_oracle(anchors):
    def oracle(x):
        diffs = x[None, :] - anchors
        norms = np.linalg.norm(diffs, axis=1)
        value = float(norms.sum())
        mask = norms > STEINER_ZERO_DIST
        grad = (diffs[mask] / norms[mask, None]).sum(axis=0)
        return value, grad

    return oracle


def _assemble_steiner(anchors, seed):
    anchors = np.asarray(anchors, dtype=float)
    m, n = anchors.shape
    return ProblemInstance(
        h_oracle=_steiner_oracle(anchors),
        g_spec="zero",
        geometry=EuclideanGeometry(n, domain="nonneg"),
        mu=0.0,
        differentiable=False,
        metadata={"kind": "steiner", "m": m, "n": n, "seed": seed, "anchors": anchors},
    )


def make_steiner(m, n, seed):
    """Sum of Euclidean distances to random anchors on R^n_+."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    rng = np.random.default_rng(seed)
    anchors = rng.standard_normal((m, n))
    return _assemble_steiner(anchors, seed)


# ---------------------------------------------------------------------------
# Basis pursuit with the squared l1 objective: min 0.5||x||_1^2, Ax = b.


def _zero_oracle(n):
    def oracle(x):
        return 0.0, np.zeros(n)

    return oracle


def _assemble_basis_pursuit(A, b, x_true, seed):
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    return ProblemInstance(
        h_oracle=_zero_oracle(n),
        g_spec="squared_l1_half",
        geometry=EuclideanGeometry(n, domain="reals"),
        A=A,
        b=b,
        mu=0.0,
        differentiable=False,
        metadata={
            "kind": "basis_pursuit",
            "m": m,
            "n": n,
            "seed": seed,
            "a_norm": operator_norm(A),
            "x_true": None if x_true is None else np.asarray(x_true, dtype=float),
        },
    )


def make_basis_pursuit(m, n, seed, sparsity):
    """Random underdetermined system with a sparse planted solution."""
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    if not 1 <= sparsity <= m:
        raise ValueError("need 1 <= sparsity <= m")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    support = rng.choice(n, size=sparsity, replace=False)
    x_true = np.zeros(n)
    x_true[support] = rng.standard_normal(sparsity)
    b = A @ x_true
    inst = _assemble_basis_pursuit(A, b, x_true, seed)
    inst.metadata["sparsity"] = sparsity
    return inst


# ---------------------------------------------------------------------------
# Synthetic equality-constrained QP with a known saddle point.


def _qp_oracle(H, c):
    def oracle(x):
        Hx = H @ x
        return float(0.5 * (x @ Hx) + c @ x), Hx + c

    return oracle


def _assemble_synthetic_qp(H, c, A, b, saddle, mu, seed):
    H = np.asarray(H, dtype=float)
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = H.shape[0]
    xs, ls = saddle
    xs = np.asarray(xs, dtype=float)
    ls = np.asarray(ls, dtype=float)
    eigs = np.linalg.eigvalsh(H)
    inst = ProblemInstance(
        h_oracle=_qp_oracle(H, c),
        g_spec="zero",
        geometry=EuclideanGeometry(n, domain="reals"),
        A=A,
        b=b,
        mu=float(mu),
        known_saddle=(xs, ls),
        known_optimum=float(0.5 * (xs @ (H @ xs)) + c @ xs),
        differentiable=True,
        metadata={
            "kind": "synthetic_qp",
            "m": A.shape[0],
            "n": n,
            "seed": seed,
            "mu": float(mu),
            "eig_min": float(eigs[0]),
            "lipschitz": float(eigs[-1]),
            "a_norm": operator_norm(A),
            "H": H,
            "c": c,
        },
    )
    return inst


def make_synthetic_qp(n, m, mu, seed, a_norm=None, eig_spread=9.0):
    """Strongly or weakly convex QP with equality constraints.

    H is symmetric with smallest eigenvalue exactly ``mu``; A has full
    row rank (rescaled to ``a_norm`` when given).  The saddle point is
    read off the KKT system, which is re-sampled on the rare singular
    draw.
    """
    if not 1 <= m < n:
        raise ValueError("need 1 <= m < n")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    rng = np.random.default_rng(seed)
    for _ in range(20):
        G = rng.standard_normal((n, n))
        Q, _ = np.linalg.qr(G)
        eigs = mu + eig_spread * rng.uniform(size=n)
        eigs[0] = mu
        H = (Q * eigs) @ Q.T
        H = 0.5 * (H + H.T)
        A = rng.standard_normal((m, n))
        if a_norm is not None:
            A = A * (a_norm / operator_norm(A))
        c = rng.standard_normal(n)
        b = A @ rng.standard_normal(n)
        kkt = np.block([[H, A.T], [A, np.zeros((m, m))]])
        rhs = np.concatenate([-c, b])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            continue
        xs, ls = sol[:n], sol[n:]
        scale = 1.0 + float(np.linalg.norm(rhs))
        if float(np.linalg.norm(kkt @ sol - rhs)) > 1e-10 * scale:
            continue
        return _assemble_synthetic_qp(H, c, A, b, (xs, ls), mu, seed)
    raise RuntimeError("could not draw a nonsingular KKT system in 20 attempts")


# ---------------------------------------------------------------------------
# JSON round trip.  Matrices are stored as nested lists (row-major);
# loading rebuilds the oracles from the stored data, not from the seed.


def _arr(x):
    return None if x is None else np.asarray(x, dtype=float).tolist()


def instance_to_dict(instance):
    meta = instance.metadata
    kind = meta.get("kind")
    if kind is None:
        raise ValueError("instance has no 'kind' metadata; cannot serialize")
    d = {
        "kind": kind,
        "m": meta.get("m"),
        "n": meta.get("n"),
        "seed": meta.get("seed"),
        "mu": instance.mu,
        "geometry": instance.geometry.to_dict(),
    }
    if kind == "matrix_game":
        d["P"] = _arr(meta["P"])
    elif kind == "regularized_matrix_game":
        d["P"] = _arr(meta["P"])
        d["eps"] = meta["eps"]
    elif kind == "steiner":
        d["anchors"] = _arr(meta["anchors"])
    elif kind == "basis_pursuit":
        d["A"] = _arr(instance.A)
        d["b"] = _arr(instance.b)
        d["x_true"] = _arr(meta.get("x_true"))
        d["sparsity"] = meta.get("sparsity")
    elif kind == "synthetic_qp":
        d["H"] = _arr(meta["H"])
        d["c"] = _arr(meta["c"])
        d["A"] = _arr(instance.A)
        d["b"] = _arr(instance.b)
        d["x_star"] = _arr(instance.known_saddle[0])
        d["lam_star"] = _arr(instance.known_saddle[1])
    else:
        raise ValueError(f"unknown instance kind {kind!r}")
    return d


def instance_from_dict(d):
    kind = d.get("kind")
    if kind is None:
        raise ValueError("instance document is missing the field 'kind'")
    seed = d.get("seed")
    if kind == "matrix_game":
        geometry_kind = d.get("geometry", {}).get("kind", "entropy")
        return _assemble_matrix_game(np.array(d["P"]), seed, geometry_kind)
    if kind == "regularized_matrix_game":
        return _assemble_regularized_game(np.array(d["P"]), d["eps"], seed)
    if kind == "steiner":
        return _assemble_steiner(np.array(d["anchors"]), seed)
    if kind == "basis_pursuit":
        x_true = d.get("x_true")
        inst = _assemble_basis_pursuit(np.array(d["A"]), np.array(d["b"]),
                                       None if x_true is None else np.array(x_true), seed)
        inst.metadata["sparsity"] = d.get("sparsity")
        return inst
    if kind == "synthetic_qp":
        return _assemble_synthetic_qp(
            np.array(d["H"]), np.array(d["c"]), np.array(d["A"]), np.array(d["b"]),
            (np.array(d["x_star"]), np.array(d["lam_star"])), d.get("mu", 0.0), seed)
    raise ValueError(f"unknown instance kind {kind!r}")
