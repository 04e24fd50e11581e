"""Constructors for the chain families the library knows how to build.

Each generator assembles a :class:`~evochain.chain.ChainFamily` from scalar
functions of one variable and a handful of constants.  Diagonal entries come
from the two solution types of the scalar composition identity
a(s,tau)*a(tau,t) = a(s,t): ratios fn(t)/fn(s) of a nonvanishing function,
or step functions that drop from 1 to 0 at a threshold.  Off-diagonal
entries combine difference kernels fn(t) - fn(s) with those diagonals.

Naming convention for the triangular 3x3 families: ``diag1..diag3`` are the
ratio numerators for the three diagonal entries, ``cutoff1..cutoff3`` the
step thresholds, ``drift12/drift23/drift13`` the difference kernels feeding
entries (1,2), (2,3), (1,3) before any threshold, ``mid*``/``tail*``/
``late13`` the functions taking over in later threshold regimes, and
``split``/``tail_split``/``mid_split`` the scalar weights in the (1,3)
entry.  The case tag (111, 112, 122, 222) says which diagonal entries are
ratios (1) versus steps (2), in order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chain import ChainFamily, Entry, TriplePlan, constant_entry, piecewise_entry, zero_entry
from .errors import DimensionError, SymmetryError
from .evolution_algebra import default_tolerance
from .scalar_fn import ScalarFn, StepSpec, parse

__all__ = [
    "PermutationSpec",
    "permutation_chain",
    "Triangular111Params",
    "Triangular112Params",
    "Triangular122Params",
    "Triangular222Params",
    "triangular3_case111",
    "triangular3_case112",
    "triangular3_case122",
    "triangular3_case222",
    "SymmetricParams",
    "RowSumDiagnostics",
    "symmetric_chain",
    "row_sum_diagnostics",
    "constant_chain",
]

_ZERO = parse("0")


# --- entry builders ----------------------------------------------------------

def _ratio(fn: ScalarFn) -> Entry:
    t_str, s_str = fn.to_string("t"), fn.to_string("s")

    def ev(s, t):
        return fn(t) / fn(s)

    return Entry(ev, f"({t_str})/({s_str})")


def _step(threshold: float) -> Entry:
    spec = StepSpec(threshold)

    def ev(s, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.where(t_arr < spec.threshold, 1.0, 0.0)
        return float(out) if np.ndim(t) == 0 and np.ndim(s) == 0 else np.broadcast_to(
            out, np.broadcast_shapes(np.shape(s), np.shape(t))
        )

    return Entry(ev, f"{{ 1 if t < {threshold!r}; 0 if t >= {threshold!r} }}")


def _diff_text(fn: ScalarFn) -> str:
    return f"({fn.to_string('t')}) - ({fn.to_string('s')})"


def _scaled_diff(num: ScalarFn, den: ScalarFn, kern: ScalarFn) -> Entry:
    """(num(t)/den(s)) * (kern(t) - kern(s))."""

    def ev(s, t):
        return num(t) / den(s) * (kern(t) - kern(s))

    formula = f"({num.to_string('t')})/({den.to_string('s')})*({_diff_text(kern)})"
    return Entry(ev, formula)


def _split_combo(kern_a: ScalarFn, kern_b: ScalarFn, extra: ScalarFn, split: float):
    """Value split*b(s)a(s) - b(t)a(s) + (1-split)*b(t)a(t) + extra(t) - extra(s).

    This is the one-parameter solution family of the inhomogeneous first
    composition equation that the corner entry of a triangular chain must
    satisfy; kern_a feeds entry (1,2), kern_b entry (2,3).
    """

    def ev(s, t):
        a_s, a_t = kern_a(s), kern_a(t)
        b_s, b_t = kern_b(s), kern_b(t)
        return (
            split * b_s * a_s
            - b_t * a_s
            + (1.0 - split) * b_t * a_t
            + extra(t)
            - extra(s)
        )

    a_s, a_t = kern_a.to_string("s"), kern_a.to_string("t")
    b_s, b_t = kern_b.to_string("s"), kern_b.to_string("t")
    x_s, x_t = extra.to_string("s"), extra.to_string("t")
    formula = (
        f"{split!r}*({b_s})*({a_s}) - ({b_t})*({a_s})"
        f" + {1.0 - split!r}*({b_t})*({a_t}) + ({x_t}) - ({x_s})"
    )
    return ev, formula


def _over(den: ScalarFn, ev, formula: str):
    def wrapped(s, t):
        return ev(s, t) / den(s)

    return wrapped, f"({formula})/({den.to_string('s')})"


# --- permutation chains --------------------------------------------------------

@dataclass
class PermutationSpec:
    """A permutation in one-line notation plus a diagonal choice per fixed point.

    ``images[i]`` is the 1-based image of basis index i+1.  Every fixed point
    must be assigned either a ScalarFn (ratio diagonal, nonzero on the
    domain) or a StepSpec (threshold diagonal).
    """

    images: tuple
    fixed_choices: dict = field(default_factory=dict)

    def __post_init__(self):
        self.images = tuple(int(v) for v in self.images)
        n = len(self.images)
        if sorted(self.images) != list(range(1, n + 1)):
            raise ValueError(f"not a permutation of 1..{n}: {self.images!r}")

    @property
    def n(self) -> int:
        return len(self.images)

    def fixed_points(self) -> list[int]:
        return [i for i in range(1, self.n + 1) if self.images[i - 1] == i]


def permutation_chain(spec: PermutationSpec) -> ChainFamily:
    """Chain whose only possibly-nonzero entries sit at fixed-point diagonals.

    The composition law forces every entry off the permutation's fixed-point
    diagonal to vanish identically, so a fixed-point-free permutation yields
    the zero chain.
    """
    n = spec.n
    fixed = spec.fixed_points()
    missing = [i for i in fixed if i not in spec.fixed_choices]
    if missing:
        raise ValueError(f"no diagonal choice for fixed point(s) {missing}")
    extra = [i for i in spec.fixed_choices if i not in fixed]
    if extra:
        raise ValueError(f"diagonal choice given for non-fixed index(es) {extra}")

    grid = [[zero_entry() for _ in range(n)] for _ in range(n)]
    thresholds = []
    nonzero = []
    for i in fixed:
        choice = spec.fixed_choices[i]
        if isinstance(choice, StepSpec):
            grid[i - 1][i - 1] = _step(choice.threshold)
            thresholds.append(choice.threshold)
        elif isinstance(choice, ScalarFn):
            grid[i - 1][i - 1] = _ratio(choice)
            nonzero.append((f"diagonal ratio at index {i}", choice))
        else:
            raise TypeError(
                f"fixed point {i}: expected ScalarFn or StepSpec, got {type(choice).__name__}"
            )

    notes = []
    if not fixed:
        notes.append("zero chain (no fixed points)")
    return ChainFamily(
        grid,
        name=f"permutation-{''.join(str(v) for v in spec.images)}",
        params={"images": list(spec.images)},
        thresholds=thresholds,
        nonzero_fns=nonzero,
        notes=notes,
    )


# --- triangular 3x3 families ---------------------------------------------------

@dataclass
class Triangular111Params:
    """All three diagonal entries are ratios."""

    diag1: ScalarFn
    diag2: ScalarFn
    diag3: ScalarFn
    drift12: ScalarFn = _ZERO
    drift23: ScalarFn = _ZERO
    drift13: ScalarFn = _ZERO
    split: float = 0.0


def triangular3_case111(p: Triangular111Params) -> ChainFamily:
    corner_ev, corner_formula = _split_combo(p.drift12, p.drift23, p.drift13, p.split)
    ev, formula = _over(p.diag1, corner_ev, corner_formula)

    def corner(s, t):
        return p.diag3(t) * ev(s, t)

    grid = [
        [
            _ratio(p.diag1),
            _scaled_diff(p.diag2, p.diag1, p.drift12),
            Entry(corner, f"({p.diag3.to_string('t')})*{formula}"),
        ],
        [zero_entry(), _ratio(p.diag2), _scaled_diff(p.diag3, p.diag2, p.drift23)],
        [zero_entry(), zero_entry(), _ratio(p.diag3)],
    ]
    return ChainFamily(
        grid,
        name="triangular3-111",
        params={"split": p.split},
        nonzero_fns=[
            ("diag1", p.diag1),
            ("diag2", p.diag2),
            ("diag3", p.diag3),
        ],
    )


@dataclass
class Triangular112Params:
    """Ratio, ratio, step diagonals; regimes switch at cutoff3."""

    diag1: ScalarFn
    diag2: ScalarFn
    cutoff3: float
    drift12: ScalarFn = _ZERO
    drift23: ScalarFn = _ZERO
    tail23: ScalarFn = _ZERO
    drift13: ScalarFn = _ZERO
    tail13: ScalarFn = _ZERO
    split: float = 0.0
    tail_split: float = 0.0

    def __post_init__(self):
        if not self.cutoff3 > 0:
            raise ValueError(f"cutoff3 must be positive, got {self.cutoff3!r}")


def triangular3_case112(p: Triangular112Params) -> ChainFamily:
    pre23, pre23_f = _over(p.diag2, lambda s, t: p.drift23(t) - p.drift23(s), _diff_text(p.drift23))
    post23, post23_f = _over(p.diag2, lambda s, t: p.tail23(t) + 0.0 * np.asarray(s, dtype=float), p.tail23.to_string("t"))

    pre13_core, pre13_cf = _split_combo(p.drift12, p.drift23, p.drift13, p.split)
    pre13, pre13_f = _over(p.diag1, pre13_core, pre13_cf)

    def post13_core(s, t):
        return p.tail23(t) * (p.tail13(t) + p.tail_split * p.drift12(t) - p.drift12(s))

    post13_cf = (
        f"({p.tail23.to_string('t')})*(({p.tail13.to_string('t')})"
        f" + {p.tail_split!r}*({p.drift12.to_string('t')}) - ({p.drift12.to_string('s')}))"
    )
    post13, post13_f = _over(p.diag1, post13_core, post13_cf)

    grid = [
        [
            _ratio(p.diag1),
            _scaled_diff(p.diag2, p.diag1, p.drift12),
            piecewise_entry([p.cutoff3], [pre13, post13], [pre13_f, post13_f]),
        ],
        [
            zero_entry(),
            _ratio(p.diag2),
            piecewise_entry([p.cutoff3], [pre23, post23], [pre23_f, post23_f]),
        ],
        [zero_entry(), zero_entry(), _step(p.cutoff3)],
    ]
    return ChainFamily(
        grid,
        name="triangular3-112",
        params={"split": p.split, "tail_split": p.tail_split, "cutoff3": p.cutoff3},
        thresholds=[p.cutoff3],
        nonzero_fns=[("diag1", p.diag1), ("diag2", p.diag2)],
    )


@dataclass
class Triangular122Params:
    """Ratio, step, step diagonals; thresholds cutoff2 < cutoff3.

    Exactness of the composition law additionally couples the middle-regime
    functions to the early ones (mid23 + drift23 constant before cutoff2,
    and a matching constraint on mid13); the generator builds whatever it is
    given and leaves the check to verify_ck.
    """

    diag1: ScalarFn
    cutoff2: float
    cutoff3: float
    drift12: ScalarFn = _ZERO
    tail12: ScalarFn = _ZERO
    drift23: ScalarFn = _ZERO
    mid23: ScalarFn = _ZERO
    drift13: ScalarFn = _ZERO
    mid13: ScalarFn = _ZERO
    tail13: ScalarFn = _ZERO
    split: float = 0.0

    def __post_init__(self):
        if not 0 < self.cutoff2 < self.cutoff3:
            raise ValueError(
                f"need 0 < cutoff2 < cutoff3, got {self.cutoff2!r}, {self.cutoff3!r}"
            )


def triangular3_case122(p: Triangular122Params) -> ChainFamily:
    pre12, pre12_f = _over(p.diag1, lambda s, t: p.drift12(t) - p.drift12(s), _diff_text(p.drift12))
    post12, post12_f = _over(p.diag1, lambda s, t: p.tail12(t) + 0.0 * np.asarray(s, dtype=float), p.tail12.to_string("t"))

    def mid23(s, t):
        return p.mid23(s) + 0.0 * np.asarray(t, dtype=float)

    pre13_core, pre13_cf = _split_combo(p.drift12, p.drift23, p.drift13, p.split)
    pre13, pre13_f = _over(p.diag1, pre13_core, pre13_cf)

    def mid13_core(s, t):
        return (
            p.split * p.tail12(s) * p.mid23(s)
            - (1.0 + p.split) * p.tail12(t) * p.mid23(t)
            + p.mid13(t)
            - p.mid13(s)
        )

    mid13_cf = (
        f"{p.split!r}*({p.tail12.to_string('s')})*({p.mid23.to_string('s')})"
        f" - {1.0 + p.split!r}*({p.tail12.to_string('t')})*({p.mid23.to_string('t')})"
        f" + ({p.mid13.to_string('t')}) - ({p.mid13.to_string('s')})"
    )
    mid13, mid13_f = _over(p.diag1, mid13_core, mid13_cf)
    post13, post13_f = _over(p.diag1, lambda s, t: p.tail13(t) + 0.0 * np.asarray(s, dtype=float), p.tail13.to_string("t"))

    grid = [
        [
            _ratio(p.diag1),
            piecewise_entry([p.cutoff2], [pre12, post12], [pre12_f, post12_f]),
            piecewise_entry(
                [p.cutoff2, p.cutoff3],
                [pre13, mid13, post13],
                [pre13_f, mid13_f, post13_f],
            ),
        ],
        [
            zero_entry(),
            _step(p.cutoff2),
            piecewise_entry(
                [p.cutoff2, p.cutoff3],
                [
                    lambda s, t: p.drift23(t) - p.drift23(s),
                    mid23,
                    lambda s, t: np.zeros(np.broadcast_shapes(np.shape(s), np.shape(t))),
                ],
                [_diff_text(p.drift23), p.mid23.to_string("s"), "0"],
            ),
        ],
        [zero_entry(), zero_entry(), _step(p.cutoff3)],
    ]
    return ChainFamily(
        grid,
        name="triangular3-122",
        params={"split": p.split, "cutoff2": p.cutoff2, "cutoff3": p.cutoff3},
        thresholds=[p.cutoff2, p.cutoff3],
        nonzero_fns=[("diag1", p.diag1)],
    )


@dataclass
class Triangular222Params:
    """All three diagonals are steps, thresholds cutoff1 < cutoff2 < cutoff3.

    As in the 122 case, the composition law couples the middle-regime
    functions (mid12 + drift12 constant before cutoff1, mid23 + drift23
    constant before cutoff2, and matching mid13/late13); verify_ck is the
    arbiter.
    """

    cutoff1: float
    cutoff2: float
    cutoff3: float
    drift12: ScalarFn = _ZERO
    mid12: ScalarFn = _ZERO
    drift23: ScalarFn = _ZERO
    mid23: ScalarFn = _ZERO
    drift13: ScalarFn = _ZERO
    mid13: ScalarFn = _ZERO
    late13: ScalarFn = _ZERO
    split: float = 0.0
    mid_split: float = 0.0

    def __post_init__(self):
        if not 0 < self.cutoff1 < self.cutoff2 < self.cutoff3:
            raise ValueError(
                "need 0 < cutoff1 < cutoff2 < cutoff3, got "
                f"{self.cutoff1!r}, {self.cutoff2!r}, {self.cutoff3!r}"
            )


def triangular3_case222(p: Triangular222Params) -> ChainFamily:
    def s_only(fn):
        def ev(s, t):
            return fn(s) + 0.0 * np.asarray(t, dtype=float)

        return ev

    def zero(s, t):
        return np.zeros(np.broadcast_shapes(np.shape(s), np.shape(t)))

    pre13, pre13_f = _split_combo(p.drift12, p.drift23, p.drift13, p.split)

    def mid13(s, t):
        return (p.drift23(t) + p.mid_split * p.drift23(s) + p.mid13(s)) * p.mid12(s)

    mid13_f = (
        f"(({p.drift23.to_string('t')}) + {p.mid_split!r}*({p.drift23.to_string('s')})"
        f" + ({p.mid13.to_string('s')}))*({p.mid12.to_string('s')})"
    )

    grid = [
        [
            _step(p.cutoff1),
            piecewise_entry(
                [p.cutoff1, p.cutoff2],
                [lambda s, t: p.drift12(t) - p.drift12(s), s_only(p.mid12), zero],
                [_diff_text(p.drift12), p.mid12.to_string("s"), "0"],
            ),
            piecewise_entry(
                [p.cutoff1, p.cutoff2, p.cutoff3],
                [pre13, mid13, s_only(p.late13), zero],
                [pre13_f, mid13_f, p.late13.to_string("s"), "0"],
            ),
        ],
        [
            zero_entry(),
            _step(p.cutoff2),
            piecewise_entry(
                [p.cutoff2, p.cutoff3],
                [lambda s, t: p.drift23(t) - p.drift23(s), s_only(p.mid23), zero],
                [_diff_text(p.drift23), p.mid23.to_string("s"), "0"],
            ),
        ],
        [zero_entry(), zero_entry(), _step(p.cutoff3)],
    ]
    return ChainFamily(
        grid,
        name="triangular3-222",
        params={
            "split": p.split,
            "mid_split": p.mid_split,
            "cutoff1": p.cutoff1,
            "cutoff2": p.cutoff2,
            "cutoff3": p.cutoff3,
        },
        thresholds=[p.cutoff1, p.cutoff2, p.cutoff3],
        nonzero_fns=[],
    )


# --- symmetric families ----------------------------------------------------------

@dataclass
class SymmetricParams:
    """Row scale functions and offset grid for a candidate symmetric chain.

    Entry (i,k) is (scales[i](t) - offsets[i][k](t)) / scales[i](s).  The
    construction makes each row sum multiplicative; it does not by itself
    force the composition law, which must be measured afterwards.
    """

    scales: list
    offsets: list

    def __post_init__(self):
        n = len(self.scales)
        if len(self.offsets) != n or any(len(row) != n for row in self.offsets):
            raise DimensionError("offsets must be an n x n grid matching scales")


@dataclass
class RowSumDiagnostics:
    """Residuals of the row-sum identities a symmetric chain should satisfy.

    ``row_product`` measures f_i(s,t) - f_i(s,tau)f_i(tau,t) for each row sum
    f_i; ``complement_product`` the analogous identity for g_ik = f_i - a_ik;
    the ``aggregate_*`` fields are the row-summed versions that follow from
    the composition law alone.  All are max-abs over the sampled triples.
    """

    n_triples: int
    row_product: float
    complement_product: float
    aggregate_row: float
    aggregate_complement: float
    per_row: tuple

    def to_dict(self) -> dict:
        return {
            "n_triples": self.n_triples,
            "row_product_residual": self.row_product,
            "complement_product_residual": self.complement_product,
            "aggregate_row_residual": self.aggregate_row,
            "aggregate_complement_residual": self.aggregate_complement,
            "per_row_product_residual": list(self.per_row),
        }


def row_sum_diagnostics(chain: ChainFamily, triples: np.ndarray) -> RowSumDiagnostics:
    triples = np.asarray(triples, dtype=float)
    s, tau, t = triples[:, 0], triples[:, 1], triples[:, 2]
    m_st = chain.matrices(s, t)
    m_s_tau = chain.matrices(s, tau)
    m_tau_t = chain.matrices(tau, t)

    f_st = m_st.sum(axis=2)
    f_s_tau = m_s_tau.sum(axis=2)
    f_tau_t = m_tau_t.sum(axis=2)
    g_st = f_st[:, :, None] - m_st
    g_tau_t = f_tau_t[:, :, None] - m_tau_t

    row_res = f_st - f_s_tau * f_tau_t
    comp_res = g_st - f_s_tau[:, :, None] * g_tau_t
    return RowSumDiagnostics(
        n_triples=triples.shape[0],
        row_product=float(np.max(np.abs(row_res))),
        complement_product=float(np.max(np.abs(comp_res))),
        aggregate_row=float(np.max(np.abs(row_res.sum(axis=1)))),
        aggregate_complement=float(np.max(np.abs(comp_res.sum(axis=1)))),
        per_row=tuple(float(v) for v in np.max(np.abs(row_res), axis=0)),
    )


def symmetric_chain(
    p: SymmetricParams,
    tol: float = 1e-9,
    samples: int = 64,
    seed: int = 1729,
):
    """Build the candidate symmetric family and validate it.

    Returns (chain, diagnostics).  Symmetry of the generated entries is
    checked numerically on sampled (s,t) pairs and a violation raises
    SymmetryError with a witness; the composition law is NOT assumed and
    must be measured with verify_ck.
    """
    n = len(p.scales)
    grid = []
    for i in range(n):
        row = []
        for k in range(n):
            scale, offset = p.scales[i], p.offsets[i][k]

            def ev(s, t, scale=scale, offset=offset):
                return (scale(t) - offset(t)) / scale(s)

            row.append(
                Entry(
                    ev,
                    f"(({scale.to_string('t')}) - ({offset.to_string('t')}))"
                    f"/({scale.to_string('s')})",
                )
            )
        grid.append(row)
    chain = ChainFamily(
        grid,
        name=f"symmetric-{n}",
        nonzero_fns=[(f"row scale {i + 1}", fn) for i, fn in enumerate(p.scales)],
    )

    lo, hi = TriplePlan(seed=seed).resolve_window(chain)
    rng = np.random.default_rng(seed)
    pts = []
    attempts = 0
    while len(pts) < samples:
        attempts += 1
        if attempts > 200 * samples:
            raise SymmetryError("could not sample enough domain-valid pairs")
        a, b = np.sort(rng.uniform(lo, hi, size=2))
        if a < b and np.all(chain.domain_mask(np.array([a, b]))):
            pts.append((a, b))
    pts = np.array(pts)
    mats = chain.matrices(pts[:, 0], pts[:, 1])
    gaps = np.abs(mats - np.transpose(mats, (0, 2, 1)))
    worst = np.unravel_index(np.argmax(gaps), gaps.shape)
    if gaps[worst] > tol:
        idx, i, k = worst
        raise SymmetryError(
            f"entry ({i + 1},{k + 1}) vs ({k + 1},{i + 1}) differs by "
            f"{gaps[worst]:.3e} at (s, t)=({pts[idx, 0]!r}, {pts[idx, 1]!r})",
            witness=(i + 1, k + 1, float(pts[idx, 0]), float(pts[idx, 1])),
        )

    plan = TriplePlan(count=max(samples, 64), seed=seed)
    triples, _ = plan.build(chain)
    return chain, row_sum_diagnostics(chain, triples)


# --- constant chains -------------------------------------------------------------

def constant_chain(matrix, name: str = "constant") -> ChainFamily:
    """Time-independent family M(s,t) = M; a chain iff M is idempotent."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"constant chain needs a square matrix, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("constant chain matrix must be finite")
    idem_gap = float(np.max(np.abs(m @ m - m)))
    notes = []
    if idem_gap <= default_tolerance(m):
        notes.append("matrix is idempotent; composition law holds exactly")
    grid = [[constant_entry(v) for v in row] for row in m]
    return ChainFamily(grid, name=name, params={"matrix": m.tolist()}, notes=notes)
