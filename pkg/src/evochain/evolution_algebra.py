"""Finite-dimensional evolution algebras over the reals.

An evolution algebra is determined by a square structural matrix A: basis
vectors multiply by e_i * e_i = sum_j A[i, j] e_j and e_i * e_j = 0 for
i != j.  Elements are plain coordinate vectors (any array-like of length n).
The product is commutative and, in coordinates,

    (x * y)_j = sum_i A[i, j] * x_i * y_i .

Besides the product itself this module computes the three descending power
sequences (derived, right, principal), decides nilpotency through the
associated digraph, and finds characters, absolute nilpotents, and the
idempotents of upper-triangular algebras.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NotTriangularError

__all__ = [
    "Algebra",
    "multiply",
    "square",
    "PowerSequences",
    "power_sequences",
    "NilpotencyCertificate",
    "is_nilpotent",
    "Character",
    "find_characters",
    "AbsoluteNilpotents",
    "absolute_nilpotents",
    "idempotents_triangular",
    "default_tolerance",
]


def default_tolerance(matrix: np.ndarray) -> float:
    """Entry-comparison tolerance scaled by the matrix magnitude."""
    return 1e-12 * (1.0 + float(np.max(np.abs(matrix), initial=0.0)))


class Algebra:
    """An evolution algebra snapshot, wrapping its structural matrix."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"structural matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("structural matrix has non-finite entries")
        m.setflags(write=False)
        self.matrix = m

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def multiply(self, x, y) -> np.ndarray:
        x = self._coords(x)
        y = self._coords(y)
        return (x * y) @ self.matrix

    def square(self, x) -> np.ndarray:
        x = self._coords(x)
        return (x * x) @ self.matrix

    def is_upper_triangular(self, tol: float | None = None) -> bool:
        tol = default_tolerance(self.matrix) if tol is None else tol
        below = np.tril(self.matrix, k=-1)
        return bool(np.all(np.abs(below) <= tol))

    def _coords(self, x) -> np.ndarray:
        v = np.asarray(x, dtype=float)
        if v.shape != (self.n,):
            raise DimensionError(f"element must have {self.n} coordinates, got shape {v.shape}")
        return v

    def __repr__(self) -> str:
        return f"Algebra(n={self.n})"


def multiply(alg: Algebra, x, y) -> np.ndarray:
    return alg.multiply(x, y)


def square(alg: Algebra, x) -> np.ndarray:
    return alg.square(x)


# --- power sequences --------------------------------------------------------

def _orth_rows(rows: np.ndarray, n: int, floor: float = 0.0) -> np.ndarray:
    """Orthonormal basis (as rows) of the row span, empty matrix for span {0}.

    ``floor`` is an absolute cutoff below which singular values count as
    zero.  Without it a matrix whose rows are all round-off dust would be
    assigned rank 1: the relative cutoff scales with s[0], which is then
    itself just noise, and normalizing would blow the dust up to a unit
    vector.
    """
    if rows.size == 0:
        return np.zeros((0, n))
    u, s, vt = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0:
        return np.zeros((0, n))
    cutoff = max(s[0] * max(rows.shape) * np.finfo(float).eps, floor)
    rank = int(np.sum(s > cutoff))
    return vt[:rank]

def _subspace_product(alg: Algebra, U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Span of all products u * v with u in span(U), v in span(V)."""
    if U.shape[0] == 0 or V.shape[0] == 0:
        return np.zeros((0, alg.n))
    prods = (U[:, None, :] * V[None, :, :]).reshape(-1, alg.n) @ alg.matrix
    scale = max(1.0, float(np.max(np.abs(alg.matrix))))
    floor = 64 * alg.n * np.finfo(float).eps * scale
    return _orth_rows(prods, alg.n, floor=floor)

def _subspace_sum(n: int, parts: list[np.ndarray]) -> np.ndarray:
    stacked = np.vstack([p for p in parts if p.shape[0]] or [np.zeros((0, n))])
    return _orth_rows(stacked, n)


@dataclass
class PowerSequences:
    """Dimensions of the three descending power sequences, k = 1..k_max.

    derived:   S1 = algebra, S(k+1) = Sk * Sk
    right:     R1 = algebra, R(k+1) = Rk * algebra
    principal: P1 = algebra, Pk = sum over i of Pi * P(k-i)

    ``*_zero_index`` is the least k whose dimension hits 0, or None if the
    sequence never vanishes within k_max.
    """

    derived_dims: list[int]
    right_dims: list[int]
    principal_dims: list[int]
    derived_zero_index: int | None
    right_zero_index: int | None
    principal_zero_index: int | None


def _first_zero(dims: list[int]) -> int | None:
    for k, d in enumerate(dims, start=1):
        if d == 0:
            return k
    return None


def power_sequences(alg: Algebra, k_max: int) -> PowerSequences:
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    n = alg.n
    full = np.eye(n)

    derived = [full]
    for _ in range(k_max - 1):
        derived.append(_subspace_product(alg, derived[-1], derived[-1]))

    right = [full]
    for _ in range(k_max - 1):
        right.append(_subspace_product(alg, right[-1], full))

    principal = [full]
    for k in range(2, k_max + 1):
        parts = [
            _subspace_product(alg, principal[i - 1], principal[k - i - 1])
            for i in range(1, k)
        ]
        principal.append(_subspace_sum(n, parts))

    d_dims = [b.shape[0] for b in derived]
    r_dims = [b.shape[0] for b in right]
    p_dims = [b.shape[0] for b in principal]
    return PowerSequences(
        derived_dims=d_dims,
        right_dims=r_dims,
        principal_dims=p_dims,
        derived_zero_index=_first_zero(d_dims),
        right_zero_index=_first_zero(r_dims),
        principal_zero_index=_first_zero(p_dims),
    )


# --- nilpotency through the associated digraph ------------------------------

@dataclass
class NilpotencyCertificate:
    """Verdict plus a checkable witness.

    If nilpotent, ``order`` is a basis permutation that makes the structural
    matrix strictly upper triangular.  Otherwise ``cycle`` lists indices
    i1 -> i2 -> ... -> i1 with every consecutive edge weight above tolerance.
    """

    nilpotent: bool
    order: list[int] | None = None
    cycle: list[int] | None = None
    tol: float = 0.0


def is_nilpotent(alg: Algebra, tol: float | None = None) -> NilpotencyCertificate:
    """Decide nilpotency by checking the associated digraph for cycles.

    Edge i -> j is present when |A[i, j]| exceeds the tolerance; nilpotency
    is equivalent to this digraph being acyclic, and a topological order is
    exactly a strictly-upper-triangularizing basis permutation.
    """
    m = alg.matrix
    n = alg.n
    tol = default_tolerance(m) if tol is None else tol
    adj = np.abs(m) > tol

    indegree = adj.sum(axis=0).astype(int)
    order: list[int] = []
    ready = sorted(i for i in range(n) if indegree[i] == 0 and not adj[i, i])
    seen = set(ready)
    while ready:
        node = ready.pop(0)
        order.append(node)
        for j in range(n):
            if adj[node, j]:
                indegree[j] -= 1
                if indegree[j] == 0 and j not in seen and not adj[j, j]:
                    seen.add(j)
                    ready.append(j)
        ready.sort()
    if len(order) == n:
        return NilpotencyCertificate(nilpotent=True, order=order, tol=tol)

    # every remaining node has an incoming edge inside the remainder, but a
    # forward walk needs outgoing ones, so first peel nodes that cannot lie
    # on a cycle: those with no successor among the remainder.  Cycle nodes
    # always survive, so the remainder stays non-empty.
    remaining = set(range(n)) - set(order)
    changed = True
    while changed:
        changed = False
        for i in sorted(remaining):
            if not any(adj[i, j] for j in remaining):
                remaining.discard(i)
                changed = True
    start = min(remaining)
    path = [start]
    index_of = {start: 0}
    node = start
    while True:
        node = min(j for j in range(n) if adj[node, j] and j in remaining)
        if node in index_of:
            cycle = path[index_of[node]:]
            return NilpotencyCertificate(nilpotent=False, cycle=cycle, tol=tol)
        index_of[node] = len(path)
        path.append(node)


# --- characters -------------------------------------------------------------

@dataclass(frozen=True)
class Character:
    """A nonzero multiplicative linear functional concentrated on one axis."""

    index: int
    weights: tuple[float, ...]

    def evaluate(self, x) -> float:
        return float(np.dot(self.weights, np.asarray(x, dtype=float)))


def find_characters(alg: Algebra, tol: float | None = None) -> list[Character]:
    """Characters sigma with sigma(e_i) = A[i, i], one per qualifying index.

    Index i qualifies when its diagonal entry is nonzero and every other
    entry in column i vanishes; then sigma(x) = A[i, i] * x_i is
    multiplicative.  The algebra is baric exactly when the list is nonempty.
    """
    m = alg.matrix
    n = alg.n
    tol = default_tolerance(m) if tol is None else tol
    out = []
    for i in range(n):
        if abs(m[i, i]) <= tol:
            continue
        column_ok = all(abs(m[j, i]) <= tol for j in range(n) if j != i)
        if column_ok:
            weights = [0.0] * n
            weights[i] = float(m[i, i])
            out.append(Character(index=i, weights=tuple(weights)))
    return out


# --- absolute nilpotents -----------------------------------------------------

@dataclass
class AbsoluteNilpotents:
    """Solutions of x * x = 0.

    kind is one of:
      "only_zero"   -- the zero element is the only solution
      "all"         -- zero structural matrix; every element squares to zero
      "rays"        -- nontrivial solutions exist; ``rays`` are the extreme
                       rays of the cone of squared coordinates y_i = x_i^2
      "unsupported" -- singular matrix with n > ray-enumeration limit
    """

    kind: str
    rays: list[np.ndarray] = field(default_factory=list)
    samples: list[np.ndarray] = field(default_factory=list)
    singular: bool = False


_RAY_ENUMERATION_LIMIT = 6


def _nullspace(mat: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    u, s, vt = np.linalg.svd(mat)
    if s.size == 0:
        return vt
    cutoff = s[0] * max(mat.shape) * max(np.finfo(float).eps, rtol * 0)
    cutoff = max(cutoff, rtol * (1.0 + s[0]))
    rank = int(np.sum(s > cutoff))
    return vt[rank:]


def absolute_nilpotents(alg: Algebra, tol: float | None = None) -> AbsoluteNilpotents:
    """Solve x * x = 0 by substituting y_i = x_i^2 >= 0.

    The squared coordinates must lie in the left null space of the structural
    matrix intersected with the nonnegative orthant.  A nonsingular matrix
    forces y = 0.  For singular matrices up to dimension 6 the extreme rays
    of that cone are enumerated by support; each ray yields concrete samples
    x = +-sqrt(y).
    """
    m = alg.matrix
    n = alg.n
    tol = default_tolerance(m) if tol is None else tol

    if np.all(np.abs(m) <= tol):
        rng = np.random.default_rng(0)
        samples = [rng.uniform(-1.0, 1.0, size=n) for _ in range(3)]
        return AbsoluteNilpotents(kind="all", samples=samples, singular=True)

    if np.linalg.matrix_rank(m) == n:
        return AbsoluteNilpotents(kind="only_zero", singular=False)

    if n > _RAY_ENUMERATION_LIMIT:
        return AbsoluteNilpotents(kind="unsupported", singular=True)

    rays: list[np.ndarray] = []
    for mask in range(1, 1 << n):
        support = [i for i in range(n) if mask & (1 << i)]
        if any(_support_contains(r, support, n) for r in rays):
            continue
        sub = m[support, :]
        null = _nullspace(sub.T)
        if null.shape[0] != 1:
            continue
        v = null[0]
        if np.all(v >= -1e-12) or np.all(v <= 1e-12):
            v = np.abs(v)
            if np.min(v) <= 1e-12 * (1.0 + np.max(v)):
                continue  # not strictly positive on its support
            y = np.zeros(n)
            y[support] = v / np.max(v)
            rays.append(y)

    if not rays:
        return AbsoluteNilpotents(kind="only_zero", singular=True)

    samples = []
    for y in rays:
        x = np.sqrt(y)
        samples.append(x)
        flipped = x.copy()
        j = int(np.argmax(y > 0))
        flipped[j] = -flipped[j]
        samples.append(flipped)
    return AbsoluteNilpotents(kind="rays", rays=rays, samples=samples, singular=True)


def _support_contains(ray: np.ndarray, support: list[int], n: int) -> bool:
    ray_support = {i for i in range(n) if ray[i] > 0}
    return ray_support.issubset(support)


# --- idempotents of upper-triangular algebras --------------------------------

def idempotents_triangular(alg: Algebra, tol: float = 1e-8) -> list[np.ndarray]:
    """All real solutions of x * x = x for an upper-triangular algebra.

    Coordinates are solved in order: once x_1 .. x_{j-1} are fixed, x_j obeys
    the scalar quadratic A[j,j] x_j^2 - x_j + c_j = 0 with
    c_j = sum_{i<j} A[i,j] x_i^2 (linear when the diagonal entry vanishes).
    Branches with negative discriminant die; double roots are collapsed when
    the discriminant sits within 1e-10 * (1 + |4 A[j,j] c_j|) of zero.
    """
    m = alg.matrix
    n = alg.n
    if not alg.is_upper_triangular():
        raise NotTriangularError("idempotent cascade needs an upper-triangular structural matrix")
    zero_diag_tol = default_tolerance(m)

    partials: list[list[float]] = [[]]
    for j in range(n):
        extended: list[list[float]] = []
        for xs in partials:
            c = sum(m[i, j] * xs[i] ** 2 for i in range(j))
            a = m[j, j]
            if abs(a) <= zero_diag_tol:
                extended.append(xs + [c])
                continue
            disc = 1.0 - 4.0 * a * c
            disc_tol = 1e-10 * (1.0 + abs(4.0 * a * c))
            if abs(disc) <= disc_tol:
                extended.append(xs + [1.0 / (2.0 * a)])
            elif disc > 0.0:
                root = np.sqrt(disc)
                big = (1.0 + root) / (2.0 * a)
                small = 2.0 * c / (1.0 + root)
                extended.append(xs + [big])
                extended.append(xs + [small])
            # disc < 0: no real continuation
        partials = extended

    points = [np.array(xs) for xs in partials]
    return _dedupe_points(points, tol)


def _dedupe_points(points: list[np.ndarray], tol: float) -> list[np.ndarray]:
    unique: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= tol for q in unique):
            unique.append(p)
    return unique
