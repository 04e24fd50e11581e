"""Snapshot classification and grid sweeps."""

from __future__ import annotations

import numpy as np
import pytest

from evochain.analysis import (
    analyze_snapshot,
    classify_idempotents,
    det_condition,
    discriminants,
    expected_idempotent_count,
    sweep,
)
from evochain.config import load_chain
from evochain.errors import DomainError
from evochain.evolution_algebra import Algebra
from oracles import match_point_sets, newton_idempotents


def _triangular(a11, a22, a33, a12=0.0, a13=0.0, a23=0.0) -> Algebra:
    return Algebra(np.array([[a11, a12, a13], [0.0, a22, a23], [0.0, 0.0, a33]]))


# --- discriminants ---------------------------------------------------------------


def test_identity_has_all_positive_discriminants():
    alg = Algebra(np.eye(3))
    d = discriminants(alg)
    assert d.values() == (1.0, 1.0, 1.0, 1.0, 1.0)
    assert d.signs == (1, 1, 1, 1, 1)
    assert (d.x2_plus, d.x2_minus) == (1.0, 0.0)
    cls = classify_idempotents(alg)
    assert cls.count == 8
    assert expected_idempotent_count(d.signs) == 8


def test_first_discriminant_double_root():
    # a23 a33 / a22^2 = 1/4 puts the branch over x2 = 1/a22 exactly at zero
    alg = _triangular(1.0, 1.0, 1.0, a23=0.25)
    cls = classify_idempotents(alg)
    d = cls.discriminants
    assert d.signs == (0, 1, 1, 0, 1)
    assert cls.count == 6
    assert expected_idempotent_count(d.signs) == 6
    double = [p for p in cls.points if p.condition == "disc1=0"]
    assert len(double) == 1
    assert double[0].root == "double"
    assert double[0].point == pytest.approx((0.0, 1.0, 0.5))
    assert match_point_sets(cls.coordinates(), newton_idempotents(alg.matrix), 1e-8)


def test_second_discriminant_double_root_cascades_to_third():
    # a12 = a11^2 / (4 a22) collapses the x2 quadratic; a13 then sits the
    # third-coordinate discriminant on zero as well
    alg = _triangular(1.0, 1.0, 1.0, a12=0.25, a13=0.25)
    cls = classify_idempotents(alg)
    d = cls.discriminants
    assert d.signs[:3] == (1, 0, 0)
    assert cls.count == 5
    points = {tuple(np.round(p.point, 9)) for p in cls.points}
    assert (1.0, 0.5, 0.5) in points
    assert {(0.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (0.0, 1.0, 1.0)} <= points
    assert match_point_sets(cls.coordinates(), newton_idempotents(alg.matrix), 1e-8)


def test_negative_discriminants_leave_only_the_pair():
    chain = load_chain("triangular111-exp")[0]
    report = analyze_snapshot(chain.evaluate(1.0, 2.0))
    d = report.discriminants
    assert d.signs[0] == -1 and d.signs[1] == -1
    assert d.disc4 is None and d.disc5 is None
    assert report.classification.count == 2
    assert report.baric  # the first column stays clean in this family
    assert len(report.characters) == 1 and report.characters[0].index == 0
    assert report.absolute.kind == "only_zero"


def test_discriminants_need_nonzero_diagonal():
    alg = _triangular(1.0, 0.0, 1.0)
    assert not det_condition(alg)
    with pytest.raises(DomainError):
        discriminants(alg)
    report = analyze_snapshot(alg)
    assert report.det_ok is False
    assert report.classification is None
    assert "outside the discriminant classification" in report.note
    assert report.idempotent_points is not None  # cascade still enumerates


def test_random_matrices_agree_with_newton_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        m = np.triu(rng.uniform(-2.0, 2.0, (3, 3)))
        np.fill_diagonal(m, rng.uniform(0.2, 2.0, 3) * rng.choice([-1.0, 1.0], 3))
        alg = Algebra(m)
        cls = classify_idempotents(alg)  # raises on any cascade mismatch
        assert expected_idempotent_count(cls.discriminants.signs) == cls.count
        assert match_point_sets(
            cls.coordinates(), newton_idempotents(m), 1e-8
        ), f"oracle mismatch for\n{m}"


def test_expected_count_covers_all_branches():
    assert expected_idempotent_count((1, 1, 1, 1, 1)) == 8
    assert expected_idempotent_count((0, 0, 0, None, None)) == 4
    assert expected_idempotent_count((-1, -1, 1, None, None)) == 2
    assert expected_idempotent_count((1, 0, 1, None, None)) == 6
    assert expected_idempotent_count((-1, 1, 1, 0, -1)) == 3


def test_analysis_of_non_triangular_matrix():
    m = np.array([[1.0, 0.0, 1.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]])
    report = analyze_snapshot(Algebra(m))
    assert not report.triangular
    assert report.idempotent_points is None
    assert report.det_ok is None
    d = report.to_dict()
    assert "idempotents" not in d
    # column 2 is clean, so one character lives on the middle axis
    assert d["baric"] is True
    assert d["characters"] == [{"basis_index": 2, "weight": 2.0}]


# --- sweeps ------------------------------------------------------------------------


@pytest.fixture(scope="module")
def d1_fixture():
    return load_chain("sweep-d1-crossing")[0]


def test_sweep_matches_direct_sign_oracle(d1_fixture):
    ns, nt = 20, 20
    s_values = np.linspace(0.1, 1.1, ns)
    t_values = np.linspace(0.2, 1.2, nt)
    report = sweep(d1_fixture, (0.1, 1.1), (0.2, 1.2), grid=(ns, nt))

    # this family pins the first discriminant to 1 - 2(t - s) exactly
    def oracle_sign(s, t):
        q = 2.0 * (t - s)
        d = 1.0 - q
        if abs(d) <= 1e-10 * (1.0 + abs(q)):
            return 0
        return 1 if d > 0 else -1

    expected_edges = set()
    for i in range(ns):
        for j in range(nt):
            cell = report.cell(i, j)
            s, t = s_values[i], t_values[j]
            if s > t:
                assert cell.status == "outside-region"
                continue
            assert cell.status == "ok"
            assert cell.signs[0] == oracle_sign(s, t)
            assert cell.discs[0] == pytest.approx(1.0 - 2.0 * (t - s), abs=1e-12)
            for i2, j2 in ((i + 1, j), (i, j + 1)):
                if i2 >= ns or j2 >= nt or s_values[i2] > t_values[j2]:
                    continue
                if oracle_sign(s_values[i2], t_values[j2]) != oracle_sign(s, t):
                    expected_edges.add(((i, j), (i2, j2)))

    assert {tuple(e) for e in report.crossings["disc1"]} == expected_edges
    assert expected_edges  # the crossing line does pass through this grid
    assert report.crossings["baric"] == []
    assert report.transitions["baric"] is False
    assert report.transitions["idempotent_count"] is True


def test_sweep_counts_and_cell_lookup(d1_fixture):
    report = sweep(d1_fixture, (0.1, 1.1), (0.2, 1.2), grid=(8, 8))
    assert report.status_counts["ok"] + report.status_counts.get("outside-region", 0) == 64
    c = report.cell(2, 5)
    assert (c.i, c.j) == (2, 5)
    d = report.to_dict()
    assert d["grid"] == [8, 8]
    assert set(d["crossing_counts"]) == {
        "disc1", "disc2", "disc3", "disc4", "disc5", "idempotent_count", "baric",
    }


def test_sweep_csv_is_deterministic(tmp_path, d1_fixture):
    report = sweep(d1_fixture, (0.1, 1.1), (0.2, 1.2), grid=(6, 6))
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    report.write_csv(p1)
    report.write_csv(p2)
    assert p1.read_bytes() == p2.read_bytes()

    lines = p1.read_text().splitlines()
    assert lines[0].split(",")[:8] == [
        "s", "t", "status", "det", "baric", "nilpotent", "absolute", "idempotent_count",
    ]
    assert len(lines) == 1 + 36
    first = lines[1].split(",")
    assert first[0] == repr(0.1)
    # outside-region rows carry no analysis values
    outside = next(l.split(",") for l in lines[1:] if "outside-region" in l)
    assert outside[3] == "" and outside[7] == ""
    ok_row = next(l.split(",") for l in lines[1:] if ",ok," in l)
    assert ok_row[4] in ("true", "false")
    assert "np.float64" not in p1.read_text()


def test_sweep_marks_singular_cells_no_det():
    chain = load_chain("constant-idempotent")[0]
    # 2x2 constant chain: triangular classification does not apply, but the
    # sweep itself must still run and count idempotents via the cascade
    report = sweep(chain, (0.1, 1.0), (0.1, 1.0), grid=(4, 4))
    assert report.status_counts.get("no-det", 0) == 0

    from evochain.generators import constant_chain

    singular = constant_chain([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    report = sweep(singular, (0.1, 1.0), (0.1, 1.0), grid=(4, 4))
    ok_or_nodet = [c for c in report.cells if c.status in ("ok", "no-det")]
    assert ok_or_nodet and all(c.status == "no-det" for c in ok_or_nodet)
    assert all(len(v) == 0 for v in report.crossings.values())
    assert report.transitions["idempotent_count"] is False


def test_sweep_domain_cells(d1_fixture):
    # the fixture window starts at 0.05, so earlier s-columns are excluded
    report = sweep(d1_fixture, (0.0, 1.0), (0.1, 1.2), grid=(5, 5))
    assert report.status_counts.get("domain", 0) > 0


def test_sweep_rejects_degenerate_grid(d1_fixture):
    with pytest.raises(ValueError):
        sweep(d1_fixture, (0.1, 1.0), (0.1, 1.0), grid=(1, 5))
