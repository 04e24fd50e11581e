"""Time-indexed families of evolution algebras.

A :class:`ChainFamily` assigns a structural matrix M[s, t] to every ordered
time pair 0 <= s <= t inside a domain window.  The family is a chain of
evolution algebras when the Chapman-Kolmogorov composition law

    M[s, tau] @ M[tau, t] = M[s, t]     for all s < tau < t

holds.  Nothing here assumes the law; :func:`verify_ck` measures it on a
sampled set of triples and reports the worst relative residual, broken down
by threshold regime when the family has piecewise entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ChainDomainError, DimensionError
from .evolution_algebra import Algebra
from .scalar_fn import ScalarFn

__all__ = [
    "Entry",
    "zero_entry",
    "constant_entry",
    "piecewise_entry",
    "ChainFamily",
    "TriplePlan",
    "CkReport",
    "RegimeStat",
    "verify_ck",
    "ck_residuals",
    "is_time_homogeneous",
    "TimeHomogeneityWitness",
    "direct_sum",
    "relabeled_chain",
    "DEFAULT_SEED",
    "DEFAULT_WINDOW",
    "EXCLUSION_EPS",
]

DEFAULT_SEED = 1729
DEFAULT_WINDOW = (0.1, 10.0)

# Sampled time points must keep denominator functions at least this far from
# zero; generators declare which functions those are.
EXCLUSION_EPS = 1e-6


class Entry:
    """A single matrix entry: a callable of (s, t) plus a display formula.

    The callable must accept scalars or equal-length numpy arrays and
    broadcast constants; results are always combined through numpy so the
    scalar and batch evaluation paths produce bit-identical values.
    """

    __slots__ = ("_fn", "formula", "is_zero")

    def __init__(self, fn, formula: str, is_zero: bool = False):
        self._fn = fn
        self.formula = formula
        self.is_zero = is_zero

    def __call__(self, s, t):
        return self._fn(s, t)

    def __repr__(self):
        return f"Entry({self.formula!r})"


def zero_entry() -> Entry:
    def fn(s, t):
        shape = np.broadcast_shapes(np.shape(s), np.shape(t))
        return np.zeros(shape) if shape else 0.0

    return Entry(fn, "0", is_zero=True)


def constant_entry(value: float) -> Entry:
    value = float(value)

    def fn(s, t):
        shape = np.broadcast_shapes(np.shape(s), np.shape(t))
        return np.full(shape, value) if shape else value

    return Entry(fn, repr(value), is_zero=(value == 0.0))


def piecewise_entry(thresholds, branch_fns, branch_formulas) -> Entry:
    """Entry selected by where t falls relative to sorted thresholds.

    With thresholds (c1, ..., ck) there are k+1 branches: branch 0 applies
    while t < c1, branch i while c_{i-1} <= t < c_i, and the last branch
    once t >= ck.  Boundaries are right-open on the left piece, matching the
    step solutions of the composition identity.
    """
    thresholds = tuple(float(c) for c in thresholds)
    if list(thresholds) != sorted(set(thresholds)):
        raise ValueError(f"thresholds must be strictly increasing, got {thresholds}")
    if len(branch_fns) != len(thresholds) + 1:
        raise ValueError("need exactly one more branch than thresholds")

    def fn(s, t):
        s_arr = np.asarray(s, dtype=float)
        t_arr = np.asarray(t, dtype=float)
        shape = np.broadcast_shapes(s_arr.shape, t_arr.shape)
        conds = []
        lower = None
        for c in thresholds:
            cond = t_arr < c if lower is None else (t_arr >= lower) & (t_arr < c)
            conds.append(np.broadcast_to(cond, shape))
            lower = c
        conds.append(np.broadcast_to(t_arr >= thresholds[-1], shape))
        with np.errstate(all="ignore"):
            vals = [
                np.broadcast_to(np.asarray(b(s_arr, t_arr), dtype=float), shape)
                for b in branch_fns
            ]
        out = np.select(conds, vals)
        if not shape:
            return float(out)
        return out

    pieces = []
    lower = None
    for c, formula in zip(thresholds, branch_formulas):
        cond = f"t < {c!r}" if lower is None else f"{lower!r} <= t < {c!r}"
        pieces.append(f"{formula} if {cond}")
        lower = c
    pieces.append(f"{branch_formulas[-1]} if t >= {thresholds[-1]!r}")
    return Entry(fn, "{ " + "; ".join(pieces) + " }")


class ChainFamily:
    """A matrix-valued function of ordered time pairs.

    Parameters
    ----------
    entries:
        n x n nested list of :class:`Entry`.
    name, params, notes:
        metadata echoed into reports.
    window:
        declared domain (s_min, t_max); evaluation outside raises.
    thresholds:
        switching times of piecewise entries, used by samplers and for
        regime-labelled residual reporting.
    nonzero_fns:
        (label, ScalarFn) pairs that appear as denominators; sampled time
        points where such a function comes within EXCLUSION_EPS of zero are
        rejected as domain violations.
    """

    def __init__(
        self,
        entries,
        *,
        name: str = "chain",
        params: dict | None = None,
        window: tuple[float, float] = (0.0, math.inf),
        thresholds=(),
        nonzero_fns=(),
        notes=(),
    ):
        n = len(entries)
        for row in entries:
            if len(row) != n:
                raise DimensionError("entry grid must be square")
        self.entries = [list(row) for row in entries]
        self.name = name
        self.params = dict(params or {})
        if not (0.0 <= window[0] < window[1]):
            raise ValueError(f"invalid domain window {window!r}")
        self.window = (float(window[0]), float(window[1]))
        self.thresholds = tuple(sorted(set(float(c) for c in thresholds)))
        self.nonzero_fns = tuple(nonzero_fns)
        self.notes = tuple(notes)

    @property
    def n(self) -> int:
        return len(self.entries)

    # -- domain ---------------------------------------------------------

    def domain_mask(self, x) -> np.ndarray:
        """True where a single time point is usable."""
        x = np.asarray(x, dtype=float)
        ok = (x >= 0.0) & (x >= self.window[0]) & (x <= self.window[1])
        for _, fn in self.nonzero_fns:
            with np.errstate(all="ignore"):
                vals = np.asarray(fn(x), dtype=float)
            ok &= np.isfinite(vals) & (np.abs(vals) > EXCLUSION_EPS)
        return ok

    def domain_ok(self, s: float, t: float) -> bool:
        if not (0.0 <= s <= t):
            return False
        pts = np.array([s, t])
        return bool(np.all(self.domain_mask(pts)))

    def _check_pair(self, s: float, t: float):
        if not (0.0 <= s <= t):
            raise ChainDomainError(f"need 0 <= s <= t, got s={s!r}, t={t!r}")
        if s < self.window[0] or t > self.window[1]:
            raise ChainDomainError(
                f"(s, t)=({s!r}, {t!r}) outside domain window {self.window!r}"
            )
        for label, fn in self.nonzero_fns:
            for x in (s, t):
                with np.errstate(all="ignore"):
                    v = float(np.asarray(fn(x), dtype=float))
                if not np.isfinite(v) or abs(v) <= EXCLUSION_EPS:
                    raise ChainDomainError(
                        f"{label}({x!r}) = {v!r} too close to zero; point excluded"
                    )

    # -- evaluation -------------------------------------------------------

    def matrices(self, s_values, t_values) -> np.ndarray:
        """Stack of structural matrices, shape (N, n, n).  No domain checks."""
        s_arr = np.asarray(s_values, dtype=float)
        t_arr = np.asarray(t_values, dtype=float)
        s_arr, t_arr = np.broadcast_arrays(s_arr, t_arr)
        count = s_arr.shape[0]
        n = self.n
        out = np.empty((count, n, n))
        with np.errstate(all="ignore"):
            for i in range(n):
                for j in range(n):
                    vals = np.asarray(self.entries[i][j](s_arr, t_arr), dtype=float)
                    out[:, i, j] = np.broadcast_to(vals, (count,))
        return out

    def matrix(self, s: float, t: float) -> np.ndarray:
        """Structural matrix at a single pair, checked against the domain."""
        self._check_pair(float(s), float(t))
        m = self.matrices(np.array([float(s)]), np.array([float(t)]))[0]
        if not np.all(np.isfinite(m)):
            bad = np.argwhere(~np.isfinite(m))[0]
            raise ChainDomainError(
                f"entry ({bad[0] + 1},{bad[1] + 1}) is not finite at (s, t)=({s!r}, {t!r})"
            )
        return m

    def evaluate(self, s: float, t: float) -> Algebra:
        return Algebra(self.matrix(s, t))

    # -- misc -------------------------------------------------------------

    def formulas(self) -> list[list[str]]:
        return [[e.formula for e in row] for row in self.entries]

    def region_index(self, x) -> np.ndarray:
        """0-based index of the threshold interval containing x."""
        return np.searchsorted(np.asarray(self.thresholds), np.asarray(x), side="right")

    def region_labels(self) -> list[str]:
        if not self.thresholds:
            return ["[0, inf)"]
        edges = ["0"] + [repr(c) for c in self.thresholds]
        labels = [f"[{a}, {b})" for a, b in zip(edges[:-1], edges[1:])]
        labels.append(f"[{edges[-1]}, inf)")
        return labels

    def __repr__(self):
        return f"ChainFamily(name={self.name!r}, n={self.n})"


# --- triple sampling ---------------------------------------------------------

@dataclass(frozen=True)
class TriplePlan:
    """How verify_ck picks its (s, tau, t) triples.

    ``count`` seeded uniform triples are drawn inside the window (points
    violating domain exclusions are resampled).  When ``straddle`` is set and
    the chain declares thresholds, a deterministic batch is added that places
    s, tau, t in every combination of threshold regimes and hugs each
    threshold from both sides, including triples with tau or t exactly on a
    threshold.  ``extra`` triples are appended verbatim (domain permitting).
    """

    count: int = 1000
    window: tuple[float, float] | None = None
    seed: int = DEFAULT_SEED
    straddle: bool = True
    extra: tuple = ()

    def resolve_window(self, chain: ChainFamily) -> tuple[float, float]:
        if self.window is not None:
            lo, hi = self.window
        else:
            lo = chain.window[0] if chain.window[0] > 0 else DEFAULT_WINDOW[0]
            hi = chain.window[1] if math.isfinite(chain.window[1]) else DEFAULT_WINDOW[1]
        if not (0 <= lo < hi):
            raise ChainDomainError(f"invalid sampling window ({lo!r}, {hi!r})")
        return float(lo), float(hi)

    def build(self, chain: ChainFamily):
        """Return (triples, rejected) where rejected lists dropped candidates."""
        lo, hi = self.resolve_window(chain)
        rng = np.random.default_rng(self.seed)
        collected = np.zeros((0, 3))
        rounds = 0
        while collected.shape[0] < self.count:
            rounds += 1
            if rounds > 200:
                raise ChainDomainError(
                    "could not sample enough domain-valid triples; "
                    "window may be fully excluded"
                )
            draw = np.sort(rng.uniform(lo, hi, size=(max(self.count, 16), 3)), axis=1)
            strict = (draw[:, 0] < draw[:, 1]) & (draw[:, 1] < draw[:, 2])
            ok = strict
            for col in range(3):
                ok &= chain.domain_mask(draw[:, col])
            collected = np.vstack([collected, draw[ok]])
        triples = [collected[: self.count]]

        rejected: list[tuple[float, float, float, str]] = []

        def admit(batch: list[tuple[float, float, float]]):
            kept = []
            for s, tau, t in batch:
                if not (lo <= s < tau <= t <= hi) or not (s < tau):
                    continue
                if all(chain.domain_mask(np.array([x]))[0] for x in (s, tau, t)):
                    kept.append((s, tau, t))
                else:
                    rejected.append((s, tau, t, "excluded by domain"))
            if kept:
                triples.append(np.array(kept))

        if self.straddle:
            admit(_straddle_triples(chain, lo, hi))
        if self.extra:
            admit([tuple(map(float, row)) for row in self.extra])

        return np.vstack(triples), rejected


def _straddle_triples(chain: ChainFamily, lo: float, hi: float):
    cuts = [c for c in chain.thresholds if lo < c < hi]
    if not cuts:
        return []
    edges = [lo] + cuts + [hi]
    regions = list(zip(edges[:-1], edges[1:]))
    reps = []
    for a, b in regions:
        width = b - a
        reps.append((a + 0.25 * width, a + 0.5 * width, a + 0.75 * width))

    out = []
    k = len(regions)
    for i in range(k):
        for j in range(i, k):
            for m in range(j, k):
                s, tau, t = reps[i][0], reps[j][1], reps[m][2]
                if s < tau <= t:
                    out.append((s, tau, t))

    min_gap = min(b - a for a, b in regions)
    for c in cuts:
        for delta in (0.25 * min_gap, 0.02 * min_gap):
            out.append((c - 2 * delta, c - delta, c + delta))
            out.append((c - delta, c + 0.5 * delta, c + delta * 1.5))
            out.append((c - 2 * delta, c - delta, c))      # t exactly on the threshold
            out.append((c - delta, c, c + delta))          # tau exactly on the threshold
    return out


# --- residuals ---------------------------------------------------------------

def ck_residuals(chain: ChainFamily, triples: np.ndarray):
    """Composition residuals for an (N, 3) array of triples.

    Returns (residuals, defects, scales, finite_mask): ``defects`` holds the
    raw max-norm of M[s,tau] @ M[tau,t] - M[s,t]; ``residuals`` divides by
    1 + the largest entry magnitude among the three matrices of the triple.
    Triples with any non-finite entry are masked out.
    """
    triples = np.asarray(triples, dtype=float)
    s, tau, t = triples[:, 0], triples[:, 1], triples[:, 2]
    m_st = chain.matrices(s, tau)
    m_tt = chain.matrices(tau, t)
    m_full = chain.matrices(s, t)
    prod = np.einsum("nij,njk->nik", m_st, m_tt)
    defect_mat = prod - m_full
    defects = np.max(np.abs(defect_mat), axis=(1, 2))
    entry_max = np.maximum(
        np.max(np.abs(m_st), axis=(1, 2)),
        np.maximum(np.max(np.abs(m_tt), axis=(1, 2)), np.max(np.abs(m_full), axis=(1, 2))),
    )
    scales = 1.0 + entry_max
    finite = (
        np.all(np.isfinite(m_st), axis=(1, 2))
        & np.all(np.isfinite(m_tt), axis=(1, 2))
        & np.all(np.isfinite(m_full), axis=(1, 2))
    )
    residuals = np.where(finite, defects / scales, np.nan)
    return residuals, defects, scales, finite


@dataclass
class RegimeStat:
    label: str
    count: int
    max_residual: float
    worst_triple: tuple[float, float, float]


@dataclass
class CkReport:
    """Outcome of a composition-law check.

    ``max_residual`` is relative: the raw defect max-norm divided by one plus
    the largest entry magnitude among the triple's three matrices.  When the
    chain declares thresholds, ``regime_stats`` breaks the same residuals
    down by which threshold interval each of s, tau, t landed in.
    """

    chain_name: str
    tol: float
    n_triples: int
    max_residual: float
    worst_triple: tuple[float, float, float] | None
    passed: bool
    triples: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    defects: np.ndarray = field(repr=False)
    scales: np.ndarray = field(repr=False)
    domain_failures: list = field(default_factory=list)
    regime_stats: list[RegimeStat] = field(default_factory=list)
    region_labels: list[str] = field(default_factory=list)

    def worst(self, k: int = 10):
        """The k worst triples as (s, tau, t, residual) tuples."""
        order = np.argsort(self.residuals)[::-1]
        rows = []
        for idx in order[:k]:
            if not np.isfinite(self.residuals[idx]):
                continue
            s, tau, t = self.triples[idx]
            rows.append((float(s), float(tau), float(t), float(self.residuals[idx])))
        return rows

    def to_dict(self) -> dict:
        return {
            "chain": self.chain_name,
            "tol": self.tol,
            "n_triples": self.n_triples,
            "max_residual": self.max_residual,
            "worst_triple": list(self.worst_triple) if self.worst_triple else None,
            "passed": self.passed,
            "n_domain_failures": len(self.domain_failures),
            "domain_failures": [list(f) for f in self.domain_failures[:20]],
            "region_labels": list(self.region_labels),
            "regimes": [
                {
                    "label": r.label,
                    "count": r.count,
                    "max_residual": r.max_residual,
                    "worst_triple": list(r.worst_triple),
                }
                for r in self.regime_stats
            ],
            "worst": [list(w) for w in self.worst(10)],
        }


def verify_ck(chain: ChainFamily, plan: TriplePlan | None = None, tol: float = 1e-9) -> CkReport:
    """Check the composition law on sampled triples.

    Domain-violating triples are reported, never fatal; the report fails
    only when a finite residual exceeds ``tol``.
    """
    plan = plan or TriplePlan()
    triples, rejected = plan.build(chain)
    residuals, defects, scales, finite = ck_residuals(chain, triples)

    failures = list(rejected)
    for idx in np.nonzero(~finite)[0]:
        s, tau, t = triples[idx]
        failures.append((float(s), float(tau), float(t), "non-finite entry"))

    finite_res = residuals[finite]
    if finite_res.size == 0:
        raise ChainDomainError("no domain-valid triples could be evaluated")
    max_residual = float(np.max(finite_res))
    worst_idx = int(np.nanargmax(np.where(finite, residuals, -1.0)))
    worst = tuple(float(v) for v in triples[worst_idx])

    regime_stats: list[RegimeStat] = []
    labels = chain.region_labels()
    if chain.thresholds:
        regions = chain.region_index(triples)  # (N, 3) ints
        keys = [tuple(row) for row in regions]
        buckets: dict[tuple, list[int]] = {}
        for i, key in enumerate(keys):
            if finite[i]:
                buckets.setdefault(key, []).append(i)
        for key in sorted(buckets):
            idxs = buckets[key]
            sub = residuals[idxs]
            best = int(idxs[int(np.argmax(sub))])
            label = f"s in {labels[key[0]]}, tau in {labels[key[1]]}, t in {labels[key[2]]}"
            regime_stats.append(
                RegimeStat(
                    label=label,
                    count=len(idxs),
                    max_residual=float(np.max(sub)),
                    worst_triple=tuple(float(v) for v in triples[best]),
                )
            )

    return CkReport(
        chain_name=chain.name,
        tol=tol,
        n_triples=int(np.sum(finite)),
        max_residual=max_residual,
        worst_triple=worst,
        passed=bool(max_residual <= tol),
        triples=triples,
        residuals=residuals,
        defects=defects,
        scales=scales,
        domain_failures=failures,
        regime_stats=regime_stats,
        region_labels=labels,
    )


# --- time homogeneity --------------------------------------------------------

@dataclass
class TimeHomogeneityWitness:
    pair_a: tuple[float, float]
    pair_b: tuple[float, float]
    max_difference: float


def is_time_homogeneous(
    chain: ChainFamily,
    samples: int = 64,
    tol: float = 1e-9,
    seed: int = DEFAULT_SEED,
    window: tuple[float, float] | None = None,
):
    """Test whether M[s, t] depends on t - s only.

    Draws pairs of intervals with a shared length and compares the matrices;
    returns (True, None) or (False, witness) with the first offending pair.
    """
    lo, hi = TriplePlan(window=window).resolve_window(chain)
    rng = np.random.default_rng(seed)
    found = 0
    attempts = 0
    while found < samples:
        attempts += 1
        if attempts > 200 * samples:
            raise ChainDomainError("could not sample enough domain-valid interval pairs")
        gap = rng.uniform(0.0, (hi - lo) * 0.9)
        s1, s2 = rng.uniform(lo, hi - gap, size=2)
        pts = np.array([s1, s1 + gap, s2, s2 + gap])
        if not np.all(chain.domain_mask(pts)):
            continue
        found += 1
        m = chain.matrices(pts[[0, 2]], pts[[1, 3]])
        if not np.all(np.isfinite(m)):
            continue
        diff = float(np.max(np.abs(m[0] - m[1])))
        scale = 1.0 + float(np.max(np.abs(m)))
        if diff / scale > tol:
            witness = TimeHomogeneityWitness(
                pair_a=(float(pts[0]), float(pts[1])),
                pair_b=(float(pts[2]), float(pts[3])),
                max_difference=diff,
            )
            return False, witness
    return True, None


# --- composition and relabeling ----------------------------------------------

def direct_sum(chains: list[ChainFamily]) -> ChainFamily:
    """Block-diagonal combination; satisfies the composition law iff every
    block does (block products never mix).
    """
    if not chains:
        raise ValueError("direct_sum needs at least one chain")
    total = sum(c.n for c in chains)
    grid = [[zero_entry() for _ in range(total)] for _ in range(total)]
    offset = 0
    for c in chains:
        for i in range(c.n):
            for j in range(c.n):
                grid[offset + i][offset + j] = c.entries[i][j]
        offset += c.n
    lo = max(c.window[0] for c in chains)
    hi = min(c.window[1] for c in chains)
    if not (lo < hi):
        raise ChainDomainError("direct sum has an empty domain window intersection")
    thresholds = sorted({c for ch in chains for c in ch.thresholds})
    nonzero = tuple((label, fn) for ch in chains for label, fn in ch.nonzero_fns)
    notes = tuple(note for ch in chains for note in ch.notes)
    name = "direct-sum(" + ", ".join(c.name for c in chains) + ")"
    return ChainFamily(
        grid,
        name=name,
        params={"blocks": [c.name for c in chains], "block_dims": [c.n for c in chains]},
        window=(lo, hi),
        thresholds=thresholds,
        nonzero_fns=nonzero,
        notes=notes,
    )


def relabeled_chain(chain: ChainFamily, permutation) -> ChainFamily:
    """Rename basis vectors by a permutation (entry (i, j) reads the source's
    (perm[i], perm[j])).  Conjugation by a permutation matrix preserves the
    composition law, so relabelings of a valid chain are again valid chains;
    triangular families with other diagonal-type orderings arise this way.
    """
    perm = list(permutation)
    n = chain.n
    if sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}: {permutation!r}")
    grid = [[chain.entries[perm[i]][perm[j]] for j in range(n)] for i in range(n)]
    return ChainFamily(
        grid,
        name=f"{chain.name}-relabeled",
        params={**chain.params, "relabeling": perm},
        window=chain.window,
        thresholds=chain.thresholds,
        nonzero_fns=chain.nonzero_fns,
        notes=chain.notes,
    )
