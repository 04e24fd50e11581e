"""Snapshot classification and time-domain sweeps.

For a nonsingular upper-triangular 3x3 algebra the idempotent equation
x = A^T(x*x) cascades into scalar quadratics; the five discriminants of
those quadratics decide how many idempotents exist and where.  This module
computes the discriminants, emits the closed-form idempotents for each sign
pattern, and cross-checks the result against the generic cascade solver on
every call.  A grid sweep applies the same analysis over a window of time
pairs and localizes sign changes, which is where the chain gains or loses
idempotents.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainFamily
from .errors import ClassificationMismatchError, DimensionError, DomainError
from .evolution_algebra import (
    AbsoluteNilpotents,
    Algebra,
    Character,
    NilpotencyCertificate,
    absolute_nilpotents,
    default_tolerance,
    find_characters,
    idempotents_triangular,
    is_nilpotent,
)

__all__ = [
    "det_condition",
    "Discriminants",
    "discriminants",
    "ClassifiedIdempotent",
    "IdempotentClassification",
    "classify_idempotents",
    "expected_idempotent_count",
    "AnalysisReport",
    "analyze_snapshot",
    "SweepCell",
    "SweepReport",
    "sweep",
]

SIGN_TOL_FACTOR = 1e-10


def _require_3x3_triangular(alg: Algebra):
    if alg.n != 3:
        raise DimensionError(f"this analysis needs a 3x3 algebra, got n={alg.n}")
    if not alg.is_upper_triangular():
        from .errors import NotTriangularError

        raise NotTriangularError("matrix is not upper triangular")


def det_condition(alg: Algebra, tol: float | None = None) -> bool:
    """True when all three diagonal entries are meaningfully nonzero."""
    _require_3x3_triangular(alg)
    if tol is None:
        tol = default_tolerance(alg.matrix)
    a11, a22, a33 = np.diag(alg.matrix)
    return bool(abs(a11 * a22 * a33) > tol)


def _sign(value: float, zero_tol: float) -> int:
    if abs(value) <= zero_tol:
        return 0
    return 1 if value > 0 else -1


@dataclass(frozen=True)
class Discriminants:
    """Discriminants of the coordinate quadratics in the idempotent cascade.

    Numbering follows the branch structure: disc2 belongs to the second
    coordinate on the branch where the first coordinate is 1/a11; disc1 to
    the third coordinate over (0, 1/a22); disc3 over the double root of
    disc2; disc4/disc5 over its upper/lower roots x2_plus/x2_minus.  disc4,
    disc5 and the x2 roots are None when disc2 is negative.  ``signs`` holds
    -1/0/+1 per discriminant with a scaled zero tolerance (None where the
    discriminant itself is undefined).
    """

    disc1: float
    disc2: float
    disc3: float
    disc4: float | None
    disc5: float | None
    x2_plus: float | None
    x2_minus: float | None
    signs: tuple

    def values(self) -> tuple:
        return (self.disc1, self.disc2, self.disc3, self.disc4, self.disc5)


def discriminants(alg: Algebra, tol: float | None = None) -> Discriminants:
    """The five cascade discriminants for a nonsingular triangular 3x3 matrix."""
    if not det_condition(alg, tol):
        raise DomainError(
            "diagonal product is zero; discriminant classification does not apply"
        )
    m = alg.matrix
    a11, a22, a33 = m[0, 0], m[1, 1], m[2, 2]
    a12, a13, a23 = m[0, 1], m[0, 2], m[1, 2]

    q1 = 4.0 * a23 * a33 / a22**2
    d1 = 1.0 - q1
    q2 = 4.0 * a12 * a22 / a11**2
    d2 = 1.0 - q2
    q3 = 4.0 * a33 * (a13 / a11**2 + a23 / (4.0 * a22**2))
    d3 = 1.0 - q3

    s1 = _sign(d1, SIGN_TOL_FACTOR * (1.0 + abs(q1)))
    s2 = _sign(d2, SIGN_TOL_FACTOR * (1.0 + abs(q2)))
    s3 = _sign(d3, SIGN_TOL_FACTOR * (1.0 + abs(q3)))

    if s2 >= 0:
        root = math.sqrt(max(d2, 0.0))
        x2_plus = (1.0 + root) / (2.0 * a22)
        x2_minus = (1.0 - root) / (2.0 * a22)
        q4 = 4.0 * a33 * (a13 / a11**2 + a23 * x2_plus**2)
        q5 = 4.0 * a33 * (a13 / a11**2 + a23 * x2_minus**2)
        d4, d5 = 1.0 - q4, 1.0 - q5
        s4 = _sign(d4, SIGN_TOL_FACTOR * (1.0 + abs(q4)))
        s5 = _sign(d5, SIGN_TOL_FACTOR * (1.0 + abs(q5)))
    else:
        x2_plus = x2_minus = d4 = d5 = s4 = s5 = None

    def _f(value):
        return None if value is None else float(value)

    return Discriminants(
        disc1=float(d1),
        disc2=float(d2),
        disc3=float(d3),
        disc4=_f(d4),
        disc5=_f(d5),
        x2_plus=_f(x2_plus),
        x2_minus=_f(x2_minus),
        signs=(s1, s2, s3, s4, s5),
    )


@dataclass(frozen=True)
class ClassifiedIdempotent:
    point: tuple
    condition: str  # which discriminant sign region produced it
    root: str  # "zero", "unit", "double", "plus", or "minus" (third coordinate)


@dataclass(frozen=True)
class IdempotentClassification:
    points: tuple
    discriminants: Discriminants

    @property
    def count(self) -> int:
        return len(self.points)

    def coordinates(self) -> np.ndarray:
        return np.array([p.point for p in self.points])


def expected_idempotent_count(signs) -> int:
    """Idempotent count implied by discriminant signs alone."""
    count = 2
    contrib = {0: 1, 1: 2, -1: 0}
    count += contrib[signs[0]]
    if signs[1] == 0:
        count += contrib[signs[2]]
    elif signs[1] > 0:
        count += contrib[signs[3]] + contrib[signs[4]]
    return count


def _third_roots(disc: float, sign: int, a33: float):
    if sign < 0:
        return []
    if sign == 0:
        return [(1.0 / (2.0 * a33), "double")]
    root = math.sqrt(disc)
    return [
        ((1.0 + root) / (2.0 * a33), "plus"),
        ((1.0 - root) / (2.0 * a33), "minus"),
    ]


def classify_idempotents(alg: Algebra, tol: float = 1e-8) -> IdempotentClassification:
    """Closed-form idempotents by discriminant signs, checked against the cascade.

    Every call recomputes the idempotent set with the generic cascade solver
    and demands set equality within ``tol``; a mismatch raises
    ClassificationMismatchError rather than returning either answer.
    """
    d = discriminants(alg)
    a11, a22, a33 = (float(v) for v in np.diag(alg.matrix))

    points: list[ClassifiedIdempotent] = []
    points.append(ClassifiedIdempotent((0.0, 0.0, 0.0), "always", "zero"))
    points.append(ClassifiedIdempotent((0.0, 0.0, 1.0 / a33), "always", "unit"))

    s1, s2, s3, s4, s5 = d.signs
    for x3, root in _third_roots(d.disc1, s1, a33):
        cond = "disc1=0" if s1 == 0 else "disc1>0"
        points.append(ClassifiedIdempotent((0.0, 1.0 / a22, x3), cond, root))

    if s2 == 0:
        for x3, root in _third_roots(d.disc3, s3, a33):
            cond = "disc2=0, disc3=0" if s3 == 0 else "disc2=0, disc3>0"
            points.append(
                ClassifiedIdempotent((1.0 / a11, 1.0 / (2.0 * a22), x3), cond, root)
            )
    elif s2 > 0:
        for x3, root in _third_roots(d.disc4, s4, a33):
            cond = "disc2>0, disc4=0" if s4 == 0 else "disc2>0, disc4>0"
            points.append(ClassifiedIdempotent((1.0 / a11, d.x2_plus, x3), cond, root))
        for x3, root in _third_roots(d.disc5, s5, a33):
            cond = "disc2>0, disc5=0" if s5 == 0 else "disc2>0, disc5>0"
            points.append(ClassifiedIdempotent((1.0 / a11, d.x2_minus, x3), cond, root))

    cascade = np.array(idempotents_triangular(alg, tol=tol))
    mine = np.array([p.point for p in points])
    _match_sets(mine, cascade, tol)
    return IdempotentClassification(points=tuple(points), discriminants=d)


def _match_sets(classified: np.ndarray, cascade: np.ndarray, tol: float):
    missing_in_cascade = []
    for row in classified:
        if cascade.size == 0 or np.min(np.max(np.abs(cascade - row), axis=1)) > tol:
            missing_in_cascade.append(tuple(float(v) for v in row))
    missing_in_classified = []
    for row in cascade:
        if classified.size == 0 or np.min(np.max(np.abs(classified - row), axis=1)) > tol:
            missing_in_classified.append(tuple(float(v) for v in row))
    if missing_in_cascade or missing_in_classified:
        raise ClassificationMismatchError(
            "discriminant classification disagrees with the cascade solver: "
            f"only in classification {missing_in_cascade}; "
            f"only in cascade {missing_in_classified}"
        )


# --- snapshot reports ----------------------------------------------------------

@dataclass
class AnalysisReport:
    matrix: np.ndarray
    nilpotency: NilpotencyCertificate
    characters: tuple
    baric: bool
    absolute: AbsoluteNilpotents
    triangular: bool
    idempotent_points: list[np.ndarray] | None
    det_ok: bool | None
    discriminants: Discriminants | None
    classification: IdempotentClassification | None
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "matrix": self.matrix.tolist(),
            "nilpotent": self.nilpotency.nilpotent,
            "nilpotency_witness": {
                "order": [i + 1 for i in self.nilpotency.order] if self.nilpotency.order else None,
                "cycle": [i + 1 for i in self.nilpotency.cycle] if self.nilpotency.cycle else None,
            },
            "baric": self.baric,
            "characters": [
                {"basis_index": c.index + 1, "weight": c.weights[c.index]} for c in self.characters
            ],
            "absolute_nilpotents": {
                "kind": self.absolute.kind,
                "rays": [list(r) for r in self.absolute.rays],
                "samples": [list(s) for s in self.absolute.samples],
            },
            "triangular": self.triangular,
            "det_ok": self.det_ok,
            "note": self.note,
        }
        if self.idempotent_points is not None:
            out["idempotents"] = [list(p) for p in self.idempotent_points]
        if self.discriminants is not None:
            d = self.discriminants
            out["discriminants"] = {
                "disc1": d.disc1,
                "disc2": d.disc2,
                "disc3": d.disc3,
                "disc4": d.disc4,
                "disc5": d.disc5,
                "x2_plus": d.x2_plus,
                "x2_minus": d.x2_minus,
                "signs": list(d.signs),
            }
        if self.classification is not None:
            out["idempotent_classification"] = [
                {"point": list(p.point), "condition": p.condition, "root": p.root}
                for p in self.classification.points
            ]
            out["idempotent_count"] = self.classification.count
        return out


def analyze_snapshot(alg: Algebra, tol: float = 1e-8) -> AnalysisReport:
    """Everything this library can say about one time-slice algebra."""
    cert = is_nilpotent(alg)
    characters = find_characters(alg)
    absolute = absolute_nilpotents(alg)
    triangular = alg.is_upper_triangular()

    idem_points = None
    det_ok = None
    discs = None
    classification = None
    note = ""
    if triangular:
        idem_points = idempotents_triangular(alg, tol=tol)
        if alg.n == 3:
            det_ok = det_condition(alg)
            if det_ok:
                classification = classify_idempotents(alg, tol=tol)
                discs = classification.discriminants
            else:
                note = "diagonal product is zero; outside the discriminant classification"
    return AnalysisReport(
        matrix=alg.matrix,
        nilpotency=cert,
        characters=characters,
        baric=bool(characters),
        absolute=absolute,
        triangular=triangular,
        idempotent_points=idem_points,
        det_ok=det_ok,
        discriminants=discs,
        classification=classification,
        note=note,
    )


# --- sweeps ----------------------------------------------------------------------

@dataclass
class SweepCell:
    i: int
    j: int
    s: float
    t: float
    status: str  # ok | outside-region | domain | no-det
    det_ok: bool | None = None
    baric: bool | None = None
    nilpotent: bool | None = None
    absolute_kind: str | None = None
    idempotent_count: int | None = None
    discs: tuple | None = None
    signs: tuple | None = None


_DISC_KEYS = ("disc1", "disc2", "disc3", "disc4", "disc5")
_CSV_COLUMNS = (
    ["s", "t", "status", "det", "baric", "nilpotent", "absolute", "idempotent_count"]
    + list(_DISC_KEYS)
    + [f"sign{k}" for k in range(1, 6)]
)


@dataclass
class SweepReport:
    """Grid analysis of a chain over a window of time pairs.

    ``crossings`` maps a quantity name (disc1..disc5, idempotent_count,
    baric) to the list of grid edges, i.e. pairs of (i, j) cell indices,
    where that quantity changes between adjacent cells.  ``transitions``
    says whether each tracked property holds on some cells and fails on
    others, i.e. whether the chain undergoes a property transition inside
    the grid.
    """

    chain_name: str
    s_values: np.ndarray
    t_values: np.ndarray
    cells: list = field(repr=False)
    crossings: dict = field(default_factory=dict)
    transitions: dict = field(default_factory=dict)
    status_counts: dict = field(default_factory=dict)

    def cell(self, i: int, j: int) -> SweepCell:
        return self.cells[i * len(self.t_values) + j]

    def to_dict(self) -> dict:
        return {
            "chain": self.chain_name,
            "grid": [len(self.s_values), len(self.t_values)],
            "s_range": [float(self.s_values[0]), float(self.s_values[-1])],
            "t_range": [float(self.t_values[0]), float(self.t_values[-1])],
            "status_counts": dict(self.status_counts),
            "transitions": dict(self.transitions),
            "crossing_counts": {k: len(v) for k, v in self.crossings.items()},
            "crossings": {
                k: [[list(a), list(b)] for a, b in v] for k, v in self.crossings.items()
            },
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(_CSV_COLUMNS)
            for cell in self.cells:
                row = [repr(cell.s), repr(cell.t), cell.status]
                row.append(_cell_str(cell.det_ok))
                row.append(_cell_str(cell.baric))
                row.append(_cell_str(cell.nilpotent))
                row.append(_cell_str(cell.absolute_kind))
                row.append(_cell_str(cell.idempotent_count))
                discs = cell.discs or (None,) * 5
                row.extend(_cell_str(v) for v in discs)
                signs = cell.signs or (None,) * 5
                row.extend(_cell_str(v) for v in signs)
                writer.writerow(row)


def _cell_str(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def sweep(
    chain: ChainFamily,
    s_range: tuple,
    t_range: tuple,
    grid: tuple = (50, 50),
    tol: float = 1e-8,
) -> SweepReport:
    """Analyze every grid cell and localize property changes.

    Cells with s > t or outside the chain's domain are skipped with a status
    marker; 3x3 triangular cells whose diagonal product vanishes are marked
    no-det and excluded from the discriminant bookkeeping, mirroring the
    standing nonsingularity assumption of the classification.
    """
    ns, nt = int(grid[0]), int(grid[1])
    if ns < 2 or nt < 2:
        raise ValueError("grid must be at least 2x2")
    s_values = np.linspace(float(s_range[0]), float(s_range[1]), ns)
    t_values = np.linspace(float(t_range[0]), float(t_range[1]), nt)

    cells: list[SweepCell] = []
    eval_pairs = []
    eval_slots = []
    for i, s in enumerate(s_values):
        for j, t in enumerate(t_values):
            cell = SweepCell(i=i, j=j, s=float(s), t=float(t), status="ok")
            if not (0.0 <= s <= t):
                cell.status = "outside-region"
            elif not chain.domain_ok(float(s), float(t)):
                cell.status = "domain"
            else:
                eval_slots.append(len(cells))
                eval_pairs.append((float(s), float(t)))
            cells.append(cell)

    if eval_pairs:
        pairs = np.array(eval_pairs)
        mats = chain.matrices(pairs[:, 0], pairs[:, 1])
        for slot, mat in zip(eval_slots, mats):
            cell = cells[slot]
            if not np.all(np.isfinite(mat)):
                cell.status = "domain"
                continue
            report = analyze_snapshot(Algebra(mat), tol=tol)
            cell.baric = report.baric
            cell.nilpotent = report.nilpotency.nilpotent
            cell.absolute_kind = report.absolute.kind
            cell.det_ok = report.det_ok
            if report.det_ok is False:
                cell.status = "no-det"
                continue
            if report.classification is not None:
                cell.idempotent_count = report.classification.count
                d = report.discriminants
                cell.discs = (d.disc1, d.disc2, d.disc3, d.disc4, d.disc5)
                cell.signs = d.signs
            elif report.idempotent_points is not None:
                cell.idempotent_count = len(report.idempotent_points)

    crossings = {key: [] for key in _DISC_KEYS}
    crossings["idempotent_count"] = []
    crossings["baric"] = []

    def index(i, j):
        return i * nt + j

    for i in range(ns):
        for j in range(nt):
            here = cells[index(i, j)]
            for di, dj in ((1, 0), (0, 1)):
                i2, j2 = i + di, j + dj
                if i2 >= ns or j2 >= nt:
                    continue
                there = cells[index(i2, j2)]
                if here.status != "ok" or there.status != "ok":
                    continue
                edge = ((i, j), (i2, j2))
                if here.signs is not None and there.signs is not None:
                    for k in range(5):
                        sa, sb = here.signs[k], there.signs[k]
                        if sa is not None and sb is not None and sa != sb:
                            crossings[_DISC_KEYS[k]].append(edge)
                if (
                    here.idempotent_count is not None
                    and there.idempotent_count is not None
                    and here.idempotent_count != there.idempotent_count
                ):
                    crossings["idempotent_count"].append(edge)
                if here.baric is not None and there.baric is not None and here.baric != there.baric:
                    crossings["baric"].append(edge)

    ok_cells = [c for c in cells if c.status == "ok"]
    transitions = {
        "baric": _has_transition([c.baric for c in ok_cells]),
        "unique_absolute_nilpotent": _has_transition(
            [c.absolute_kind == "only_zero" for c in ok_cells if c.absolute_kind is not None]
        ),
        "idempotent_count": len({c.idempotent_count for c in ok_cells if c.idempotent_count is not None}) > 1,
    }

    status_counts: dict[str, int] = {}
    for cell in cells:
        status_counts[cell.status] = status_counts.get(cell.status, 0) + 1

    return SweepReport(
        chain_name=chain.name,
        s_values=s_values,
        t_values=t_values,
        cells=cells,
        crossings=crossings,
        transitions=transitions,
        status_counts=status_counts,
    )


def _has_transition(flags) -> bool:
    flags = [f for f in flags if f is not None]
    return bool(flags) and any(flags) and not all(flags)
