"""Independent reference computations for the test suite.

Everything here is written straight from the mathematical definitions and
avoids the library's own algorithms, so a test that compares the two is
comparing genuinely different routes to the same answer.
"""

from __future__ import annotations

import numpy as np


def product_oracle(matrix, x, y) -> np.ndarray:
    """Coordinates of the algebra product x*y, accumulated row by row.

    Basis rule: the square of basis vector i has coordinates given by row i
    of the matrix, distinct basis vectors multiply to zero.  Bilinearity
    then gives (x*y) = sum_i x_i y_i row_i.
    """
    a = np.asarray(matrix, dtype=float)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(a.shape[1])
    for i in range(a.shape[0]):
        out += x[i] * y[i] * a[i]
    return out


def has_cycle_dfs(adj) -> bool:
    """Three-color depth-first cycle check on a boolean adjacency matrix."""
    n = len(adj)
    color = [0] * n  # 0 unvisited, 1 on stack, 2 done

    def visit(u: int) -> bool:
        color[u] = 1
        for v in range(n):
            if adj[u][v]:
                if color[v] == 1:
                    return True
                if color[v] == 0 and visit(v):
                    return True
        color[u] = 2
        return False

    return any(color[u] == 0 and visit(u) for u in range(n))


def _coordinate_bounds(matrix: np.ndarray) -> list[float]:
    """Box bounds for idempotent coordinates of an upper-triangular matrix.

    Coordinate j of any solution of x*x = x satisfies
    a_jj x_j^2 - x_j + (contributions from earlier coordinates) = 0,
    and the root magnitude of a q^2 - q + c = 0 is at most
    (1 + sqrt(1 + 4|a||c|)) / (2|a|).
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    bounds: list[float] = []
    for j in range(n):
        carried = sum(abs(a[i, j]) * bounds[i] ** 2 for i in range(j))
        ajj = abs(a[j, j])
        bounds.append((1.0 + np.sqrt(1.0 + 4.0 * ajj * carried)) / (2.0 * ajj))
    return bounds


def newton_idempotents(matrix, grid: int = 7, tol: float = 1e-10, dedupe: float = 1e-6):
    """All solutions of x*x = x by box seeding plus Newton polishing.

    The residual map is F(x) = (x*x) @ A - x with Jacobian
    J[j,k] = 2 a_kj x_k - delta_jk; seeds cover a per-coordinate box that
    provably contains every solution (see _coordinate_bounds), so for the
    cascade-structured triangular systems nothing is missed.
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    bounds = _coordinate_bounds(a)
    axes = [np.linspace(-b, b, grid) for b in bounds]
    x = np.array(np.meshgrid(*axes, indexing="ij")).reshape(n, -1).T.copy()
    eye = np.eye(n)

    for _ in range(80):
        f = (x * x) @ a - x
        jac = 2.0 * a.T[None, :, :] * x[:, None, :] - eye[None, :, :]
        try:
            step = np.linalg.solve(jac, f[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            x = x + 1e-7  # nudge off a singular Jacobian and retry
            continue
        step[~np.all(np.isfinite(step), axis=1)] = 0.0
        x = x - step
        np.clip(x, -1e6, 1e6, out=x)

    f = (x * x) @ a - x
    good = np.all(np.isfinite(x), axis=1) & (np.max(np.abs(f), axis=1) <= tol)
    roots: list[np.ndarray] = []
    for cand in x[good]:
        if not any(np.max(np.abs(cand - r)) <= dedupe for r in roots):
            roots.append(cand)
    return sorted(roots, key=lambda r: tuple(np.round(r, 8)))


def match_point_sets(first, second, tol: float) -> bool:
    """Symmetric set comparison of two point lists under max-norm ``tol``."""
    a = [np.asarray(p, dtype=float) for p in first]
    b = [np.asarray(p, dtype=float) for p in second]
    if len(a) != len(b):
        return False
    for p in a:
        if not any(np.max(np.abs(p - q)) <= tol for q in b):
            return False
    for q in b:
        if not any(np.max(np.abs(q - p)) <= tol for p in a):
            return False
    return True
